//! Moving-mesh discontinuous Galerkin discrete-ordinates solver for
//! time-dependent slab transport, with the analytic kernels it is verified
//! against.
#![no_std]

extern crate alloc;

pub mod analysis;
pub mod analytic;
pub mod basis;
pub mod dgcore;
pub mod error;
pub mod integrate;
pub mod mesh;
pub mod quadrature;

pub use error::{Error, IntegrationFailure, Result};

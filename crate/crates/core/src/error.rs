use core::fmt;

/// Errors raised by the solver core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A scalar or count argument violated its precondition.
    InvalidArgument(&'static str),
    /// Mesh edges are not strictly increasing, or a layout cannot be built.
    InvalidMesh { index: usize, left: f64, right: f64 },
    /// A point was requested outside the domain it is defined on.
    OutOfDomain { value: f64, lower: f64, upper: f64 },
    /// Evaluation at a mathematical singularity (e.g. Ei(0), t = 0 for a plane pulse).
    Singularity(&'static str),
    /// Adaptive quadrature failed to reach its tolerance.
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
    },
    /// The requested combination of options is not supported.
    Configuration(&'static str),
    /// Time integration failed; carries the last accepted time.
    Integration {
        reason: IntegrationFailure,
        t: f64,
        steps: usize,
    },
    /// A degenerate value made a derived quantity undefined.
    Degenerate(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrationFailure {
    MaxSteps,
    StepUnderflow,
    NonFinite,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InvalidMesh { index, left, right } => write!(
                f,
                "invalid mesh: edge {index} at {left} is not left of edge {} at {right}",
                index + 1
            ),
            Error::OutOfDomain { value, lower, upper } => {
                write!(f, "value {value} outside domain [{lower}, {upper}]")
            }
            Error::Singularity(msg) => write!(f, "singular evaluation: {msg}"),
            Error::Quadrature {
                lower,
                upper,
                estimate,
                error,
            } => write!(
                f,
                "quadrature on [{lower}, {upper}] did not converge (estimate {estimate:e}, error {error:e})"
            ),
            Error::Configuration(msg) => write!(f, "unsupported configuration: {msg}"),
            Error::Integration { reason, t, steps } => {
                let why = match reason {
                    IntegrationFailure::MaxSteps => "maximum step count exceeded",
                    IntegrationFailure::StepUnderflow => "step size underflow",
                    IntegrationFailure::NonFinite => "non-finite state",
                };
                write!(f, "time integration failed ({why}) at t = {t} after {steps} steps")
            }
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

//! Time-dependent cell edges.
//!
//! Three laws are supported: a static mesh, the radial law in which every
//! edge moves with constant speed proportional to its initial position (the
//! outermost edges travel at the particle speed), and the hybrid square law
//! where the cells covering a finite source stay fixed while zero-width
//! clusters at the source edges expand outwards.

use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::error::{Error, Result};

/// Particle speed in mean free paths per mean free time.
pub const PARTICLE_SPEED: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshLaw {
    Static,
    Radial,
    HybridSquare,
}

/// Edge positions and velocities at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshState {
    pub edges: Vec<f64>,
    pub velocities: Vec<f64>,
    pub t: f64,
}

impl MeshState {
    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.edges[k], self.edges[k + 1])
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    /// Checks strict monotonicity of the edges.
    pub fn validate(&self) -> Result<()> {
        check_increasing(&self.edges)
    }

    /// Index of the cell holding `x`; a point on a shared edge belongs to the
    /// cell on its left. Points within a relative 1e-12 of the outer edges are
    /// attributed to the boundary cells.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.extent();
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutOfDomain {
                value: x,
                lower: lo,
                upper: hi,
            });
        }
        let k = self.edges[1..self.edges.len() - 1].partition_point(|&e| e < x);
        Ok(k)
    }
}

fn check_increasing(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidArgument("a mesh needs at least two edges"));
    }
    for (i, pair) in edges.windows(2).enumerate() {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidMesh {
                index: i,
                left: pair[0],
                right: pair[1],
            });
        }
    }
    Ok(())
}

fn check_symmetric(edges: &[f64]) -> Result<()> {
    let scale = edges.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let n = edges.len();
    for k in 0..n {
        if (edges[k] + edges[n - 1 - k]).abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument("mesh edges must be symmetric about the origin"));
        }
    }
    Ok(())
}

/// A mesh law bound to its initial edge layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    law: MeshLaw,
    initial: Vec<f64>,
    // per-edge speed for the moving laws
    speeds: Vec<f64>,
}

impl Mesh {
    /// Static mesh over the given strictly increasing edges.
    pub fn fixed(edges: Vec<f64>) -> Result<Self> {
        check_increasing(&edges)?;
        let speeds = alloc::vec![0.0; edges.len()];
        Ok(Self {
            law: MeshLaw::Static,
            initial: edges,
            speeds,
        })
    }

    /// Radial law: `x_k(t) = x_k(0) + v t x_k(0) / x_K(0)` with v = 1.
    pub fn radial(edges: Vec<f64>) -> Result<Self> {
        check_increasing(&edges)?;
        check_symmetric(&edges)?;
        let outer = edges[edges.len() - 1];
        let n = edges.len();
        let mut speeds = alloc::vec![0.0; n];
        // mirror the upper half so the law is exactly symmetric
        for k in (n / 2)..n {
            let s = PARTICLE_SPEED * edges[k] / outer;
            speeds[k] = s;
            speeds[n - 1 - k] = -s;
        }
        if n % 2 == 1 {
            speeds[n / 2] = 0.0;
        }
        let mut initial = edges;
        for k in (n / 2)..n {
            initial[n - 1 - k] = -initial[k];
        }
        Ok(Self {
            law: MeshLaw::Radial,
            initial,
            speeds,
        })
    }

    /// Hybrid square law for `cells` cells around a source of half-width `x0`.
    ///
    /// The middle `cells / 2` cells tile [-x0, x0] and never move. Each outer
    /// quarter starts as a zero-width cluster at -x0 (resp. x0); its edges
    /// spread linearly so that the outermost edge moves at the particle speed.
    pub fn hybrid_square(cells: usize, x0: f64) -> Result<Self> {
        if cells < 4 || cells % 4 != 0 {
            return Err(Error::InvalidArgument(
                "hybrid square mesh needs a cell count that is a multiple of 4",
            ));
        }
        if !(x0 > 0.0) {
            return Err(Error::InvalidArgument("hybrid square mesh needs x0 > 0"));
        }
        let quarter = cells / 4;
        let inner = cells / 2;
        let n = cells + 1;
        let mut initial = alloc::vec![0.0; n];
        let mut speeds = alloc::vec![0.0; n];
        for k in 0..n {
            if k < quarter {
                initial[k] = -x0;
                speeds[k] = -PARTICLE_SPEED * (quarter - k) as f64 / quarter as f64;
            } else if k <= quarter + inner {
                initial[k] = -x0 + 2.0 * x0 * (k - quarter) as f64 / inner as f64;
            } else {
                initial[k] = x0;
                speeds[k] = PARTICLE_SPEED * (k - quarter - inner) as f64 / quarter as f64;
            }
        }
        for k in (n / 2)..n {
            initial[n - 1 - k] = -initial[k];
            speeds[n - 1 - k] = -speeds[k];
        }
        Ok(Self {
            law: MeshLaw::HybridSquare,
            initial,
            speeds,
        })
    }

    pub fn law(&self) -> MeshLaw {
        self.law
    }

    pub fn cells(&self) -> usize {
        self.initial.len() - 1
    }

    pub fn initial_edges(&self) -> &[f64] {
        &self.initial
    }

    /// Positions and velocities at time `t`.
    pub fn at(&self, t: f64) -> MeshState {
        let mut state = MeshState {
            edges: alloc::vec![0.0; self.initial.len()],
            velocities: alloc::vec![0.0; self.initial.len()],
            t,
        };
        self.update(t, &mut state);
        state
    }

    /// Overwrites `state` with the mesh at time `t` without allocating.
    pub fn update(&self, t: f64, state: &mut MeshState) {
        let n = self.initial.len();
        for k in (n / 2)..n {
            let x = self.initial[k] + self.speeds[k] * t;
            state.edges[k] = x;
            state.edges[n - 1 - k] = -x;
            state.velocities[k] = self.speeds[k];
            state.velocities[n - 1 - k] = -self.speeds[k];
        }
        if n % 2 == 1 {
            state.edges[n / 2] = 0.0;
            state.velocities[n / 2] = 0.0;
        }
        if self.law == MeshLaw::Static {
            state.edges.copy_from_slice(&self.initial);
        }
        state.t = t;
    }
}

/// Evaluates a mesh law on `initial_edges` at time `t`.
///
/// For the hybrid square law the initial edges must follow the layout built
/// by [`Mesh::hybrid_square`]; the half-width is read from the middle block.
pub fn edges_at(law: MeshLaw, initial_edges: &[f64], t: f64) -> Result<MeshState> {
    let mesh = match law {
        MeshLaw::Static => Mesh::fixed(initial_edges.to_vec())?,
        MeshLaw::Radial => Mesh::radial(initial_edges.to_vec())?,
        MeshLaw::HybridSquare => {
            let cells = initial_edges.len().saturating_sub(1);
            if cells < 4 || cells % 4 != 0 {
                return Err(Error::InvalidArgument(
                    "hybrid square mesh needs a cell count that is a multiple of 4",
                ));
            }
            let x0 = initial_edges[cells - cells / 4];
            let mesh = Mesh::hybrid_square(cells, x0)?;
            for (a, b) in mesh.initial_edges().iter().zip(initial_edges) {
                if (a - b).abs() > 1e-12 * x0.max(1.0) {
                    return Err(Error::InvalidArgument("edges do not follow the hybrid square layout"));
                }
            }
            mesh
        }
    };
    Ok(mesh.at(t))
}

/// `cells` evenly spaced cells on [-half_width, half_width].
pub fn uniform_edges(cells: usize, half_width: f64) -> Result<Vec<f64>> {
    if cells == 0 {
        return Err(Error::InvalidArgument("mesh needs at least one cell"));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument("mesh half-width must be positive"));
    }
    let n = cells + 1;
    let mut edges = alloc::vec![0.0; n];
    for k in (n / 2)..n {
        let x = -half_width + 2.0 * half_width * k as f64 / cells as f64;
        edges[k] = x;
        edges[n - 1 - k] = -x;
    }
    if n % 2 == 1 {
        edges[n / 2] = 0.0;
    }
    Ok(edges)
}

/// Static layout for finite square sources over [-outer, outer] with edges at
/// +-x0: half of the cells tile the source, a quarter on each side. Cell counts
/// below 4 fall back to an even split of the span.
pub fn square_static_edges(cells: usize, x0: f64, outer: f64) -> Result<Vec<f64>> {
    if !(outer > x0 && x0 > 0.0) {
        return Err(Error::InvalidArgument("square static mesh needs 0 < x0 < outer"));
    }
    if cells < 4 {
        return uniform_edges(cells, outer);
    }
    let side = cells / 4;
    let inner = cells - 2 * side;
    let n = cells + 1;
    let mut edges = alloc::vec![0.0; n];
    for k in 0..n {
        edges[k] = if k <= side {
            -outer + (outer - x0) * k as f64 / side as f64
        } else if k <= side + inner {
            -x0 + 2.0 * x0 * (k - side) as f64 / inner as f64
        } else {
            x0 + (outer - x0) * (k - side - inner) as f64 / side as f64
        };
    }
    for k in (n / 2)..n {
        edges[n - 1 - k] = -edges[k];
    }
    if n % 2 == 1 {
        edges[n / 2] = 0.0;
    }
    Ok(edges)
}

/// Smallest half-width beyond which exp(-x^2 / sigma^2) stays below `floor`.
pub fn initial_width_for_gaussian(sigma: f64, floor: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("sigma must be positive"));
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::InvalidArgument("floor must lie in (0, 1)"));
    }
    Ok(sigma * sqrt(-log(floor)))
}

//! Finite-difference discretization and solution of the nonlocal resolvent
//! problem: `qu − Pu = f` in the interior, `u − B u = ψ` on the boundary
//! arcs, `u = 0` on the corner set, with a posteriori verification of the
//! maximum-principle consequences (contraction bound `‖u‖ ≤ ‖f‖/q` and
//! positivity) and corner-decay measurement.

mod assemble;
mod grid;
mod linsolve;

pub use assemble::{
    assemble, assemble_rhs, corner_decay_fit, solve_resolvent, solve_resolvent_with, verify_bounds,
    AssemblyFlags, BoundaryData, LinearSystem, MMatrixViolation, ResolventReport,
};
pub use grid::{build_grid, Arm, Grid, GridField, MapStencil, Node, NodeCounts, NodeKind};
pub use linsolve::{Backend, SparseSystem};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FdError {
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grid step {h:.4e} is at or above the drift-vs-diffusion threshold {h_star:.4e}")]
    StepTooCoarse { h: f64, h_star: f64 },
    #[error("no interior lattice points at this step")]
    EmptyGrid,
    #[error(
        "map {map}: image of boundary node ({x:.5}, {y:.5}) has no fully interior \
             interpolation cell within the allowed shift"
    )]
    MapImageTooShallow { map: usize, x: f64, y: f64 },
    #[error(
        "mixed-derivative coefficient is nonzero at irregular node ({x:.5}, {y:.5}); \
             refine the grid or align it with the boundary"
    )]
    MixedDerivativeUnsupported { x: f64, y: f64 },
    #[error("arm cast from interior node ({x:.5}, {y:.5}) found no boundary crossing")]
    ArmCastFailed { x: f64, y: f64 },
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("linear solve stalled at residual {residual:.3e} (tolerance {tol:.3e})")]
    IterationDivergence { residual: f64, tol: f64 },
    #[error("corner decay fit needs {needed} usable rings, found {usable}")]
    InsufficientRadii { usable: usize, needed: usize },
}

//! Centralized numerical tolerances.
//!
//! Every magic constant that decides a pass/fail somewhere in the pipeline
//! lives here with a justification, so that verification thresholds are pinned
//! in one place rather than scattered through call sites.

/// Relative residual demanded of a linear solve: the returned solution must
/// satisfy `‖A·u − rhs‖_∞ ≤ RESIDUAL_REL · (‖rhs‖_∞ + 1)`.
pub const RESIDUAL_REL: f64 = 1e-10;

/// Absolute residual demanded of the angular profile solve at `λ = 0`
/// (small dense system, direct factorization: near machine precision).
pub const ANGULAR_RESIDUAL: f64 = 1e-12;

/// `|det|` threshold, relative to the local determinant scale of the enclosing
/// search cell, below which an eigenvalue refinement is accepted.
pub const EIGEN_RESIDUAL_REL: f64 = 1e-10;

/// Maximum phase increment between consecutive contour samples in the
/// argument-principle walk.  π/4 leaves a 4× safety margin against the π
/// aliasing limit of wrapped phase differences.
pub const PHASE_STEP_MAX: f64 = std::f64::consts::FRAC_PI_4;

/// Contour samples whose log-magnitude drops this far below the contour
/// maximum (ln 1e-15 ≈ −34.5) indicate a zero on or next to the contour;
/// the walk aborts and reports instead of returning a wrong winding number.
pub const CONTOUR_LOG_FLOOR: f64 = -34.5;

/// Resolution of the bisection certifying the eigenvalue-free strip width.
pub const STRIP_RESOLUTION: f64 = 1e-3;

/// Default half-width of the real window `[-R, R]` scanned for pencil zeros.
pub const RE_WINDOW: f64 = 20.0;

/// Zeros closer than this to each other are merged into one eigenvalue whose
/// multiplicity is the winding count of the merged cell.
pub const CLUSTER_RADIUS: f64 = 1e-6;

/// Relative residual tolerance of the similarity (rotation–homothety) fit
/// that checks the corner-germ condition on boundary maps.
pub const SIMILARITY_FIT: f64 = 1e-9;

/// Slack allowed on exact algebraic weight inequalities (`Σ b ≤ 1`, `b ≥ 0`)
/// evaluated in floating point.
pub const WEIGHT_SLACK: f64 = 1e-12;

/// Discrete solutions of problems with nonnegative data may dip below zero
/// only by round-off; anything below this floor is a positivity violation.
pub const POSITIVITY_FLOOR: f64 = -1e-8;

/// Tolerance on the resolvent identity
/// `R(q)f − R(p)f = (p − q)·R(q)R(p)f` checked between two grid solves.
pub const RESOLVENT_IDENTITY: f64 = 1e-6;

/// Grid-dependent slack factor for maximum-principle inequalities: discrete
/// bounds are enforced up to `1 + CONTRACTION_SLACK_PER_H · h`.
pub const CONTRACTION_SLACK_PER_H: f64 = 10.0;

/// Grid-dependent slack for maximum-principle inequalities.
pub fn contraction_slack(h: f64) -> f64 {
    1.0 + CONTRACTION_SLACK_PER_H * h
}

/// Fraction of the real window within which a located zero triggers a
/// `WindowTooSmall` report (the window may have cut off further zeros).
pub const WINDOW_EDGE_FRACTION: f64 = 0.98;

/// Map images closer to the boundary than one mesh width are re-attached to
/// the nearest fully interior interpolation cell; a substitution further than
/// this many mesh widths is a hard error.
pub const MAX_IMAGE_SHIFT_H: f64 = 3.0;

/// Cross-validation bias allowance multiplier: grid and time-stepping error
/// of the two estimators is budgeted as `C · (h² + Δt)`.  Calibrated on the
/// polygonal-disk oracle (see `montecarlo` tests).
pub const CROSSVAL_BIAS_C: f64 = 30.0;

/// Fraction of paths allowed to hit the time cap before the Monte Carlo
/// estimate is considered untrustworthy.
pub const TIME_CAP_FRACTION: f64 = 1e-6;

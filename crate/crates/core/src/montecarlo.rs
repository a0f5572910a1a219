//! Feynman–Kac Monte Carlo estimation of the nonlocal resolvent.
//!
//! The diffusion generated by the interior operator is simulated by
//! Euler–Maruyama steps; the nonlocal boundary behavior is the atomic jump
//! mechanism: a path hitting an arc at `y` jumps to the map image `Ω(y)`
//! with probability equal to the map weight, is killed with the defect
//! probability `1 − Σb(y)`, and is absorbed (value 0) inside a small ball
//! around each corner.  The running discount `exp(∫(p₀ − q))` turns the
//! path integral of the source `f` into an unbiased estimate of the
//! resolvent value, which serves as the independent oracle for the
//! finite-difference solver in [`cross_validate`].
//!
//! Boundary handling: crossings are detected by a sign change of the
//! signed distance along a step and resolved by bisection on the step
//! segment; the result is cross-checked against the exact first
//! segment-intersection, and a mismatch (multiple crossings within one
//! step, possible near re-entrant corners) rejects the step and retries
//! with a halved substep.  Far from the boundary, steps consume a
//! conservative distance budget maintained by a precomputed lattice of
//! lower bounds, so no boundary query at all is made in the bulk.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fdsolver::{
    assemble, build_grid, solve_resolvent, BoundaryData, FdError, Grid, GridField,
};
use crate::fields::ScalarField;
use crate::geometry::{Boundary, Domain, Point};
use crate::tol;

#[derive(Debug, Error)]
pub enum McError {
    #[error("start point ({x:.6}, {y:.6}) is not interior")]
    StartOutside { x: f64, y: f64 },
    #[error(
        "step from ({x:.6}, {y:.6}) crossed the boundary ambiguously and \
         {retries} halved retries did not resolve it"
    )]
    StepRejection { x: f64, y: f64, retries: u32 },
    #[error("invalid path configuration: {0}")]
    BadConfig(String),
    #[error("jump image ({x:.6}, {y:.6}) is not interior")]
    JumpOutside { x: f64, y: f64 },
    #[error(transparent)]
    Solver(#[from] FdError),
}

/// Simulation parameters; output is deterministic for a fixed seed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathConfig {
    /// Euler–Maruyama time step.
    pub dt: f64,
    /// Resolvent discount rate `q > 0`.
    pub q: f64,
    /// Hard time cap; with `q ≥ 1` the discounted mass beyond 20 is below
    /// `e^{−20}`, so capped paths are negligible and are counted.
    pub t_max: f64,
    /// Boundary-hit bisection tolerance, as a fraction of the diameter.
    pub boundary_tol: f64,
    /// Corner absorption ball radius, as a fraction of the diameter.
    pub corner_radius: f64,
    /// Maximum halved retries for ambiguous boundary crossings.
    pub max_retries: u32,
    pub seed: u64,
}

impl PathConfig {
    pub fn new(dt: f64, q: f64, seed: u64) -> Self {
        Self {
            dt,
            q,
            t_max: 20.0,
            boundary_tol: 1e-8,
            corner_radius: 1e-3,
            max_retries: 8,
            seed,
        }
    }

    fn validate(&self) -> Result<(), McError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(McError::BadConfig(format!("dt = {}", self.dt)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(McError::BadConfig(format!("q = {}", self.q)));
        }
        if !(self.t_max > 0.0) {
            return Err(McError::BadConfig(format!("t_max = {}", self.t_max)));
        }
        Ok(())
    }
}

/// Why a path ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    KilledAtBoundary,
    AbsorbedAtCorner,
    TimeCap,
}

/// One simulated path.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathOutcome {
    /// Accumulated `∫ e^{∫(p₀−q)} f(X_t) dt` along the path.
    pub integral: f64,
    pub termination: Termination,
    pub jumps: u32,
    /// Path lifetime (capped at `t_max`).
    pub time: f64,
}

/// Conservative lower bounds on the distance to the boundary over a uniform
/// lattice, built once per simulation by a multi-source Chebyshev BFS from
/// the cells the boundary passes through.
struct BudgetLattice {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    lb: Vec<f64>,
}

impl BudgetLattice {
    fn build(boundary: &Boundary) -> Self {
        let (lo0, hi0) = boundary.bbox;
        let extent = (hi0.x - lo0.x).max(hi0.y - lo0.y);
        let cell = extent / 192.0;
        let lo = Point::new(lo0.x - cell, lo0.y - cell);
        let nx = ((hi0.x - lo.x) / cell).ceil() as usize + 2;
        let ny = ((hi0.y - lo.y) / cell).ceil() as usize + 2;
        let mut ring = vec![u32::MAX; nx * ny];
        let mut frontier: Vec<(usize, usize)> = Vec::new();
        let mark = |ring: &mut Vec<u32>, frontier: &mut Vec<(usize, usize)>, p: Point| {
            let i = (((p.x - lo.x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let j = (((p.y - lo.y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            if ring[j * nx + i] != 0 {
                ring[j * nx + i] = 0;
                frontier.push((i, j));
            }
        };
        for s in boundary.segments() {
            let len = s.a.dist(s.b);
            let steps = (len / (0.5 * cell)).ceil() as usize + 1;
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                mark(&mut ring, &mut frontier, s.a + (s.b - s.a) * t);
            }
        }
        let mut depth = 0u32;
        while !frontier.is_empty() {
            depth += 1;
            let mut next = Vec::new();
            for &(i, j) in &frontier {
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (i2, j2) = (i as i64 + di, j as i64 + dj);
                        if i2 < 0 || j2 < 0 || i2 >= nx as i64 || j2 >= ny as i64 {
                            continue;
                        }
                        let idx = j2 as usize * nx + i2 as usize;
                        if ring[idx] > depth {
                            ring[idx] = depth;
                            next.push((i2 as usize, j2 as usize));
                        }
                    }
                }
            }
            frontier = next;
        }
        // A point in a cell at Chebyshev ring r is at least (r−1) cells from
        // any boundary-touching cell's contents.
        let lb = ring
            .iter()
            .map(|&r| {
                if r == u32::MAX || r == 0 {
                    0.0
                } else {
                    (r - 1) as f64 * cell
                }
            })
            .collect();
        Self {
            lo,
            cell,
            nx,
            ny,
            lb,
        }
    }

    fn lower_bound(&self, p: Point) -> f64 {
        let i = ((p.x - self.lo.x) / self.cell).floor() as isize;
        let j = ((p.y - self.lo.y) / self.cell).floor() as isize;
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            return 0.0;
        }
        self.lb[j as usize * self.nx + i as usize]
    }
}

/// Symmetric positive square root of `M = 2·(second-order coefficients)`:
/// with `s = √det M` and `t = √(tr M + 2s)`, `σ = (M + sI)/t` satisfies
/// `σσᵀ = M` by the Cayley–Hamilton identity.
fn diffusion_factor(m11: f64, m12: f64, m22: f64) -> (f64, f64, f64) {
    let s = (m11 * m22 - m12 * m12).sqrt();
    let t = (m11 + m22 + 2.0 * s).sqrt();
    ((m11 + s) / t, m12 / t, (m22 + s) / t)
}

/// What to do at a boundary hit, resolved by a single uniform draw against
/// the cumulative map weights; the defect interval kills the path.
enum HitAction {
    Jump(usize),
    Kill,
}

fn choose_boundary_action(domain: &Domain, y: Point, arc: usize, draw: f64) -> HitAction {
    let mut cum = 0.0;
    for mi in domain.maps_on_arc(arc) {
        cum += domain.weight(mi, y);
        if draw < cum {
            return HitAction::Jump(mi);
        }
    }
    HitAction::Kill
}

/// Result of resolving a step that crossed the boundary.
enum Crossing {
    /// Hit point, fraction of the step taken, owning arc.
    Clean { point: Point, frac: f64, arc: usize },
    /// Bisection and exact first-intersection disagree: the step crossed
    /// more than once and must be retried shorter.
    Ambiguous,
}

/// Bisection on the signed distance over the step segment `[x, x']`
/// (`x` interior, `x'` not), cross-checked against the exact first
/// polyline intersection.
fn resolve_crossing(boundary: &Boundary, x: Point, x_new: Point, tol: f64) -> Crossing {
    let (mut t_in, mut t_out) = (0.0f64, 1.0f64);
    let step_len = x.dist(x_new).max(1e-300);
    let iters = (step_len / tol).log2().ceil().max(1.0) as usize + 2;
    for _ in 0..iters {
        let mid = 0.5 * (t_in + t_out);
        let p = x + (x_new - x) * mid;
        if boundary.signed_distance(p) < 0.0 {
            t_in = mid;
        } else {
            t_out = mid;
        }
    }
    let frac = 0.5 * (t_in + t_out);
    let point = x + (x_new - x) * frac;
    match boundary.segment_hit(x, x_new) {
        Some(hit) if hit.point.dist(point) <= 10.0 * tol.max(1e-12 * step_len) => Crossing::Clean {
            point,
            frac,
            arc: boundary.arc_of_segment(hit.seg),
        },
        Some(_) => Crossing::Ambiguous,
        // No exact intersection despite the sign change: grazing contact
        // within tolerance; classify by the nearest feature.
        None => {
            let near = boundary.nearest(point);
            Crossing::Clean {
                point,
                frac,
                arc: boundary.arc_of_segment(near.seg),
            }
        }
    }
}

struct Sampler<'a> {
    domain: &'a Domain,
    lattice: &'a BudgetLattice,
    f: &'a ScalarField,
    cfg: PathConfig,
    /// Absolute corner-ball radius.
    corner_r: f64,
    /// Absolute bisection tolerance.
    btol: f64,
}

impl Sampler<'_> {
    fn near_corner(&self, p: Point) -> bool {
        self.domain
            .frames
            .iter()
            .any(|fr| fr.point.dist(p) <= self.corner_r)
    }

    fn run(&self, x0: Point, rng: &mut ChaCha12Rng) -> Result<PathOutcome, McError> {
        let boundary = &self.domain.boundary;
        let coeffs = &self.domain.spec.coefficients;
        if boundary.signed_distance(x0) >= 0.0 {
            return Err(McError::StartOutside { x: x0.x, y: x0.y });
        }
        let mut x = x0;
        let mut t = 0.0f64;
        let mut weight = 1.0f64;
        let mut integral = 0.0f64;
        let mut jumps = 0u32;
        let mut budget = 0.0f64;
        if self.near_corner(x) {
            return Ok(PathOutcome {
                integral,
                termination: Termination::AbsorbedAtCorner,
                jumps,
                time: t,
            });
        }
        loop {
            if t >= self.cfg.t_max {
                return Ok(PathOutcome {
                    integral,
                    termination: Termination::TimeCap,
                    jumps,
                    time: self.cfg.t_max,
                });
            }
            let dt_full = self.cfg.dt.min(self.cfg.t_max - t);
            // One EM displacement, retried shorter on ambiguous crossings.
            let mut dt = dt_full;
            let mut retries = 0u32;
            'substep: loop {
                let p1 = coeffs.p1.eval(x);
                let p2 = coeffs.p2.eval(x);
                let (s11, s12, s22) = diffusion_factor(
                    2.0 * coeffs.p11.eval(x),
                    2.0 * coeffs.p12.eval(x),
                    2.0 * coeffs.p22.eval(x),
                );
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let sdt = dt.sqrt();
                let dx = Point::new(
                    p1 * dt + (s11 * z1 + s12 * z2) * sdt,
                    p2 * dt + (s12 * z1 + s22 * z2) * sdt,
                );
                let step_len = dx.norm();
                let x_new = x + dx;

                if budget > step_len {
                    // Bulk regime: provably no crossing, no boundary query.
                    budget -= step_len;
                } else {
                    // Refresh the budget: lattice bound first, exact query
                    // only when genuinely near the boundary.
                    let mut d = self.lattice.lower_bound(x);
                    if d <= step_len {
                        d = boundary.nearest(x).dist;
                        // Inside a corner ball implies d ≤ ball radius, so
                        // this refresh is the one place absorption can hide.
                        if d <= self.corner_r && self.near_corner(x) {
                            return Ok(PathOutcome {
                                integral,
                                termination: Termination::AbsorbedAtCorner,
                                jumps,
                                time: t,
                            });
                        }
                    }
                    if d > step_len {
                        budget = d - step_len;
                    } else {
                        // Near-boundary regime.
                        if boundary.signed_distance(x_new) >= 0.0 {
                            match resolve_crossing(boundary, x, x_new, self.btol) {
                                Crossing::Ambiguous => {
                                    retries += 1;
                                    if retries > self.cfg.max_retries {
                                        return Err(McError::StepRejection {
                                            x: x.x,
                                            y: x.y,
                                            retries,
                                        });
                                    }
                                    dt *= 0.5;
                                    continue 'substep;
                                }
                                Crossing::Clean { point, frac, arc } => {
                                    let dt_eff = frac * dt;
                                    integral += weight * self.f.eval(x) * dt_eff;
                                    weight *= ((coeffs.p0.eval(x) - self.cfg.q) * dt_eff).exp();
                                    t += dt_eff;
                                    if self.near_corner(point) {
                                        return Ok(PathOutcome {
                                            integral,
                                            termination: Termination::AbsorbedAtCorner,
                                            jumps,
                                            time: t,
                                        });
                                    }
                                    let draw: f64 = rng.random_range(0.0..1.0);
                                    match choose_boundary_action(self.domain, point, arc, draw) {
                                        HitAction::Kill => {
                                            return Ok(PathOutcome {
                                                integral,
                                                termination: Termination::KilledAtBoundary,
                                                jumps,
                                                time: t,
                                            });
                                        }
                                        HitAction::Jump(mi) => {
                                            let img =
                                                self.domain.spec.maps[mi].transform.apply(point);
                                            if boundary.signed_distance(img) >= 0.0 {
                                                if self.near_corner(img) {
                                                    return Ok(PathOutcome {
                                                        integral,
                                                        termination: Termination::AbsorbedAtCorner,
                                                        jumps: jumps + 1,
                                                        time: t,
                                                    });
                                                }
                                                return Err(McError::JumpOutside {
                                                    x: img.x,
                                                    y: img.y,
                                                });
                                            }
                                            jumps += 1;
                                            x = img;
                                            budget = 0.0;
                                            continue;
                                        }
                                    }
                                }
                            }
                        }
                        budget = 0.0;
                    }
                }
                // Interior move: accumulate with the left-endpoint rule.
                integral += weight * self.f.eval(x) * dt;
                weight *= ((coeffs.p0.eval(x) - self.cfg.q) * dt).exp();
                debug_assert!(weight > 0.0 && weight <= 1.0 + 1e-12);
                t += dt;
                x = x_new;
                break;
            }
        }
    }
}

/// Simulates one path of the boundary-jump diffusion started at `x0`,
/// accumulating the discounted integral of `f`.  Randomness comes from a
/// counter-based stream derived from `cfg.seed`, so the outcome is
/// deterministic.
pub fn sample_path(
    x0: Point,
    domain: &Domain,
    f: &ScalarField,
    cfg: &PathConfig,
) -> Result<PathOutcome, McError> {
    cfg.validate()?;
    let lattice = BudgetLattice::build(&domain.boundary);
    let sampler = Sampler {
        domain,
        lattice: &lattice,
        f,
        cfg: *cfg,
        corner_r: cfg.corner_radius * domain.boundary.diameter,
        btol: cfg.boundary_tol * domain.boundary.diameter,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    sampler.run(x0, &mut rng)
}

/// Monte Carlo resolvent estimate with termination accounting.
#[derive(Clone, Debug, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub killed: usize,
    pub absorbed: usize,
    pub capped: usize,
    pub cap_fraction: f64,
    pub mean_jumps: f64,
    pub q: f64,
}

/// Estimates the resolvent value `R(q)f(x0)` as the sample mean of
/// [`PathOutcome::integral`] over `n_paths` independent paths.
///
/// Each path draws from its own counter-based RNG stream
/// `(cfg.seed, path index)`, and the reduction runs over the ordered
/// outcome vector, so the estimate is bitwise reproducible regardless of
/// how many worker threads execute the paths.
pub fn estimate_resolvent(
    x0: Point,
    domain: &Domain,
    f: &ScalarField,
    q: f64,
    n_paths: usize,
    cfg: &PathConfig,
) -> Result<McEstimate, McError> {
    let cfg = PathConfig { q, ..*cfg };
    cfg.validate()?;
    if n_paths == 0 {
        return Err(McError::BadConfig("n_paths = 0".into()));
    }
    let lattice = BudgetLattice::build(&domain.boundary);
    let sampler = Sampler {
        domain,
        lattice: &lattice,
        f,
        cfg,
        corner_r: cfg.corner_radius * domain.boundary.diameter,
        btol: cfg.boundary_tol * domain.boundary.diameter,
    };
    let outcomes: Vec<PathOutcome> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            sampler.run(x0, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let n = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.integral).sum::<f64>() / n;
    let var = outcomes
        .iter()
        .map(|o| (o.integral - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let stderr = (var / n).sqrt();
    let count = |t: Termination| outcomes.iter().filter(|o| o.termination == t).count();
    let capped = count(Termination::TimeCap);
    Ok(McEstimate {
        mean,
        stderr,
        n_paths,
        killed: count(Termination::KilledAtBoundary),
        absorbed: count(Termination::AbsorbedAtCorner),
        capped,
        cap_fraction: capped as f64 / n,
        mean_jumps: outcomes.iter().map(|o| o.jumps as f64).sum::<f64>() / n,
        q,
    })
}

/// One point of the FD-vs-MC comparison table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CrossRow {
    pub x: f64,
    pub y: f64,
    pub u_fd: f64,
    pub u_mc: f64,
    pub stderr: f64,
    pub diff: f64,
    pub tol: f64,
    pub pass: bool,
}

/// FD-vs-MC comparison across interior points.
#[derive(Clone, Debug, Serialize)]
pub struct CrossValidation {
    pub h: f64,
    pub dt: f64,
    pub q: f64,
    pub n_paths: usize,
    pub rows: Vec<CrossRow>,
    pub all_pass: bool,
}

/// Bilinear interpolation of a grid field at an interior point whose cell
/// is fully interior (guaranteed by the cross-validation preconditions).
fn bilinear(grid: &Grid, u: &GridField, p: Point) -> Option<f64> {
    let fx = (p.x - grid.origin.x) / grid.h;
    let fy = (p.y - grid.origin.y) / grid.h;
    let (i, j) = (fx.floor() as i64, fy.floor() as i64);
    let (ax, ay) = (fx - i as f64, fy - j as f64);
    let mut val = 0.0;
    for (di, dj, w) in [
        (0, 0, (1.0 - ax) * (1.0 - ay)),
        (1, 0, ax * (1.0 - ay)),
        (0, 1, (1.0 - ax) * ay),
        (1, 1, ax * ay),
    ] {
        val += w * u.values[grid.node_at_lattice(i + di, j + dj)?];
    }
    Some(val)
}

/// Solves the resolvent problem once by finite differences at step `h` and
/// compares against the Monte Carlo estimate at each requested point.
/// A point passes when `|u_FD − u_MC| ≤ 3·stderr + C·(h² + Δt)` with the
/// bias constant calibrated on the disk oracle.
///
/// Preconditions: points interior and at least `5h` away from every corner.
pub fn cross_validate(
    domain: &Domain,
    f: &ScalarField,
    q: f64,
    points: &[Point],
    n_paths: usize,
    h: f64,
    cfg: &PathConfig,
) -> Result<CrossValidation, McError> {
    let grid = build_grid(domain, h)?;
    let system = assemble(&grid, &domain.spec.coefficients, q, domain)?;
    let fh = GridField::from_fn(&grid, |p| f.eval(p));
    let u = solve_resolvent(&system, &grid, &fh, &BoundaryData::zero())?;

    let mut rows = Vec::with_capacity(points.len());
    for (k, &p) in points.iter().enumerate() {
        let u_fd = bilinear(&grid, &u, p).ok_or_else(|| {
            McError::BadConfig(format!(
                "point ({}, {}) has no fully interior interpolation cell",
                p.x, p.y
            ))
        })?;
        let point_cfg = PathConfig {
            seed: cfg
                .seed
                .wrapping_add((k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            ..*cfg
        };
        let est = estimate_resolvent(p, domain, f, q, n_paths, &point_cfg)?;
        let diff = (u_fd - est.mean).abs();
        let tol = 3.0 * est.stderr + tol::CROSSVAL_BIAS_C * (h * h + cfg.dt);
        rows.push(CrossRow {
            x: p.x,
            y: p.y,
            u_fd,
            u_mc: est.mean,
            stderr: est.stderr,
            diff,
            tol,
            pass: diff <= tol,
        });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(CrossValidation {
        h,
        dt: cfg.dt,
        q,
        n_paths,
        rows,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_spec;
    use crate::presets;

    fn domain_of(spec: crate::geometry::DomainSpec) -> Domain {
        let (domain, report) = validate_spec(spec).unwrap();
        assert!(report.all_passed(), "failed: {:?}", report.failed());
        domain
    }

    #[test]
    fn zero_source_gives_zero_integral() {
        let domain = domain_of(presets::square_nonlocal());
        let cfg = PathConfig::new(1e-3, 1.0, 5);
        for seed in 0..5 {
            let out = sample_path(
                Point::new(0.5, 0.5),
                &domain,
                &ScalarField::zero(),
                &PathConfig { seed, ..cfg },
            )
            .unwrap();
            assert_eq!(out.integral, 0.0);
        }
    }

    #[test]
    fn dirichlet_paths_terminate_at_first_hit() {
        let domain = domain_of(presets::square_dirichlet());
        let lattice = BudgetLattice::build(&domain.boundary);
        let cfg = PathConfig::new(1e-3, 1.0, 7);
        let sampler = Sampler {
            domain: &domain,
            lattice: &lattice,
            f: &ScalarField::one(),
            cfg,
            corner_r: cfg.corner_radius * domain.boundary.diameter,
            btol: cfg.boundary_tol * domain.boundary.diameter,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        for i in 0..200u64 {
            rng.set_stream(i + 1);
            let out = sampler.run(Point::new(0.4, 0.6), &mut rng).unwrap();
            assert_eq!(out.jumps, 0, "pure Dirichlet path jumped");
            assert_ne!(out.termination, Termination::TimeCap);
        }
    }

    #[test]
    fn hit_action_follows_cumulative_weights() {
        let domain = domain_of(presets::square_nonlocal());
        // On-plateau point of arc 0 near the anchor corner: weight exactly
        // the amplitude 1/2.
        let y = Point::new(0.2 * domain.eps, 0.0);
        assert!(matches!(
            choose_boundary_action(&domain, y, 0, 0.49),
            HitAction::Jump(0)
        ));
        assert!(matches!(
            choose_boundary_action(&domain, y, 0, 0.51),
            HitAction::Kill
        ));
        // Full weight: never killed, whatever the draw.
        let mut spec = presets::square_nonlocal();
        spec.maps[0].amplitude = 1.0;
        let domain = domain_of(spec);
        for draw in [0.0, 0.5, 0.999_999] {
            assert!(matches!(
                choose_boundary_action(&domain, y, 0, draw),
                HitAction::Jump(0)
            ));
        }
        // Far from the anchor the weight vanishes: always killed.
        let far = Point::new(0.9, 0.0);
        assert!(matches!(
            choose_boundary_action(&domain, far, 0, 0.01),
            HitAction::Kill
        ));
    }

    #[test]
    fn budget_lattice_bounds_are_conservative() {
        let domain = domain_of(presets::lshape_dirichlet());
        let lattice = BudgetLattice::build(&domain.boundary);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mut checked = 0;
        while checked < 200 {
            let p = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let lb = lattice.lower_bound(p);
            if lb == 0.0 {
                continue;
            }
            let exact = domain.boundary.nearest(p).dist;
            assert!(
                lb <= exact + 1e-12,
                "lattice bound {lb} exceeds true distance {exact} at {p:?}"
            );
            checked += 1;
        }
    }

    #[test]
    fn ambiguous_multi_crossing_is_flagged() {
        // Slotted square: the horizontal segment below crosses the slot
        // walls and then the outer wall, so naive sign bisection lands on
        // the third crossing while the exact first hit is the slot wall.
        let boundary = Boundary::from_arcs(&[vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.6, 1.0),
            Point::new(0.6, 0.2),
            Point::new(0.55, 0.2),
            Point::new(0.55, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 0.0),
        ]])
        .unwrap();
        let x = Point::new(0.3, 0.5);
        let x_out = Point::new(1.2, 0.5);
        assert!(boundary.signed_distance(x) < 0.0);
        assert!(boundary.signed_distance(x_out) > 0.0);
        assert!(matches!(
            resolve_crossing(&boundary, x, x_out, 1e-8),
            Crossing::Ambiguous
        ));
        // A single-crossing step resolves cleanly onto the slot wall.
        let x_in_slot = Point::new(0.58, 0.5);
        match resolve_crossing(&boundary, x, x_in_slot, 1e-8) {
            Crossing::Clean { point, .. } => {
                assert!((point.x - 0.55).abs() < 1e-6, "hit at {point:?}");
            }
            Crossing::Ambiguous => panic!("single crossing misflagged"),
        }
    }

    #[test]
    fn estimates_are_seed_deterministic_across_worker_counts() {
        let domain = domain_of(presets::square_nonlocal());
        let f = ScalarField::one();
        let cfg = PathConfig::new(1e-3, 1.0, 99);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    estimate_resolvent(Point::new(0.5, 0.5), &domain, &f, 1.0, 400, &cfg).unwrap()
                })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert_eq!(a.killed, b.killed);
    }

    #[test]
    fn discount_grows_estimate_down() {
        // Common random numbers: identical trajectories, pointwise smaller
        // discount weight at larger q.
        let domain = domain_of(presets::square_nonlocal());
        let f = ScalarField::one();
        let cfg = PathConfig::new(1e-3, 1.0, 17);
        let e1 = estimate_resolvent(Point::new(0.5, 0.5), &domain, &f, 1.0, 500, &cfg).unwrap();
        let e2 = estimate_resolvent(Point::new(0.5, 0.5), &domain, &f, 2.0, 500, &cfg).unwrap();
        assert!(e2.mean <= e1.mean, "{} > {}", e2.mean, e1.mean);
        assert!(e1.mean > 0.0);
    }

    #[test]
    fn kill_fraction_dominates_worst_defect() {
        // Worst-case survival is the map amplitude 1/2, so at least half
        // the paths minus binomial noise must be killed at the boundary.
        let domain = domain_of(presets::square_nonlocal());
        let f = ScalarField::one();
        let cfg = PathConfig::new(1e-3, 1.0, 23);
        let n = 2000;
        let est = estimate_resolvent(Point::new(0.5, 0.5), &domain, &f, 1.0, n, &cfg).unwrap();
        let frac = est.killed as f64 / n as f64;
        let noise = 3.0 * (0.25f64 / n as f64).sqrt();
        assert!(frac >= 0.5 - noise, "killed fraction {frac}");
        assert_eq!(est.capped, 0, "time-capped paths at q = 1");
        assert!(est.cap_fraction <= tol::TIME_CAP_FRACTION);
    }

    #[test]
    fn contraction_and_positivity_of_estimates() {
        let domain = domain_of(presets::square_nonlocal());
        let f = ScalarField::one();
        for q in [1.0, 10.0] {
            let cfg = PathConfig::new(1e-3, q, 31);
            let est = estimate_resolvent(Point::new(0.4, 0.55), &domain, &f, q, 800, &cfg).unwrap();
            assert!(
                est.mean <= 1.0 / q + 3.0 * est.stderr,
                "q = {q}: mean {} above resolvent bound",
                est.mean
            );
            assert!(est.mean >= 0.0);
        }
    }

    #[test]
    fn disk_center_matches_bessel_oracle() {
        // R(1)1 at the center of the unit disk for the Laplacian is
        // 1 − 1/I₀(1) ≈ 0.210154; a 256-gon and the EM bias allowance
        // cover the geometry and time-discretization errors.
        let domain = domain_of(presets::disk_polygon(256));
        let f = ScalarField::one();
        let cfg = PathConfig::new(1e-4, 1.0, 41);
        let est = estimate_resolvent(Point::new(0.0, 0.0), &domain, &f, 1.0, 30_000, &cfg).unwrap();
        let oracle = 1.0 - 1.0 / 1.2660658777520084;
        let tol = 3.0 * est.stderr + 0.01;
        assert!(
            (est.mean - oracle).abs() <= tol,
            "mean {} vs oracle {oracle}, tol {tol}",
            est.mean
        );
        assert_eq!(est.absorbed, 0, "cornerless domain absorbed paths");
    }

    #[test]
    fn cross_validation_agrees_on_nonlocal_square() {
        let domain = domain_of(presets::square_nonlocal());
        let f = ScalarField::one();
        let cfg = PathConfig::new(2e-4, 1.0, 53);
        let points = [
            Point::new(0.5, 0.5),
            Point::new(0.25, 0.5),
            Point::new(0.75, 0.5),
            Point::new(0.5, 0.25),
            Point::new(0.5, 0.75),
        ];
        let table = cross_validate(&domain, &f, 1.0, &points, 15_000, 1.0 / 32.0, &cfg).unwrap();
        for row in &table.rows {
            assert!(
                row.pass,
                "({}, {}): |{} − {}| = {} > {}",
                row.x, row.y, row.u_fd, row.u_mc, row.diff, row.tol
            );
        }
        assert!(table.all_pass);
    }
}

//! Barrier construction for the nonlocal resolvent problem.
//!
//! The barrier `v` solves `q₁v − Pv = 0` in the interior with the nonlocal
//! boundary condition `v − B_i v = 1` on every arc.  It is built in two
//! pieces, `v = w¹ + v¹`:
//!
//! * `w¹` is an explicit *corner cap*: near each corner `g_j`, the product
//!   `ξ(r)·φ_j(ω)` of a radial cutoff with the linear angular profile
//!   `φ_j(ω) = a_j + b_j·ω` that solves the zero-frequency boundary system
//!   of the corner's orbit with unit data ([`solve_angular`]).  The cap
//!   carries the (generally non-vanishing) corner values of `v`.
//! * `v¹` is the correction solved on the grid: it satisfies
//!   `q₁v¹ − Pv¹ = Pw¹ − q₁w¹` with boundary data `ψ¹ = 1 − w¹ + B w¹` and
//!   vanishes on the corner set, so that `v` satisfies the original problem.
//!
//! The output certifies strict positivity of the grid barrier and reports
//! its extrema; `sup v` is the constant that converts boundary data into
//! sup-norm bounds for ψ-driven solves ([`constant_c1`]).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::fdsolver::{
    assemble, solve_resolvent, BoundaryData, FdError, Grid, GridField, NodeKind,
};
use crate::geometry::{bump, compute_orbits, localize, CornerFrame, Domain, Point};
use crate::pencil::PencilSystem;
use crate::tol;

#[derive(Debug, Error)]
pub enum BarrierError {
    /// The zero-frequency boundary system could not be solved to tolerance;
    /// the input violates admissibility.
    #[error("angular system is singular at frequency zero (residual {residual:.3e})")]
    SingularAtZero { residual: f64 },
    /// An angular profile fails strict positivity; reported with a witness.
    #[error("angular profile of corner {corner} is not positive: φ({omega:.6}) = {value:.6e}")]
    PositivityFailure {
        corner: usize,
        omega: f64,
        value: f64,
    },
    /// The grid barrier dips to a nonpositive value; the discretization is
    /// too coarse for this spec — rerun at a finer step.
    #[error(
        "barrier infimum is not positive: v = {value:.6e} at node {node} ({x:.6}, {y:.6}); \
         refine the grid"
    )]
    NonpositiveInfimum {
        node: usize,
        value: f64,
        x: f64,
        y: f64,
    },
    #[error("barrier parameter q₁ must be positive and finite, got {0}")]
    InvalidQ(f64),
    #[error("orbit localization failed: {0}")]
    Localize(String),
    #[error(transparent)]
    Solver(#[from] FdError),
}

/// Per-corner linear angular profiles `φ_j(ω) = a_j + b_j·ω` on
/// `[−ω_j, ω_j]`, solving the zero-frequency boundary system with unit
/// data on every row.
#[derive(Clone, Debug, Serialize)]
pub struct AngularProfile {
    /// Half-opening of each corner.
    pub half_openings: Vec<f64>,
    /// `(a_j, b_j)` per corner.
    pub coeffs: Vec<(f64, f64)>,
    /// `‖M(0)·x − 1‖_∞` of the solve (worst orbit, for aggregates).
    pub residual: f64,
}

impl AngularProfile {
    pub fn eval(&self, corner: usize, omega: f64) -> f64 {
        let (a, b) = self.coeffs[corner];
        a + b * omega
    }

    /// `(φ_j(−ω_j), φ_j(+ω_j))` per corner.
    pub fn endpoint_values(&self) -> Vec<(f64, f64)> {
        self.half_openings
            .iter()
            .zip(&self.coeffs)
            .map(|(&w, &(a, b))| (a - b * w, a + b * w))
            .collect()
    }

    /// The profiles are linear, so endpoint positivity implies positivity
    /// on the whole interval.
    fn check_positivity(&self) -> Result<(), BarrierError> {
        for (j, &w) in self.half_openings.iter().enumerate() {
            for omega in [-w, w] {
                let value = self.eval(j, omega);
                if !(value > 0.0) {
                    return Err(BarrierError::PositivityFailure {
                        corner: j,
                        omega,
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Solves the zero-frequency boundary system `M(0)·x = 1` of a localized
/// corner system exactly (dense LU) and returns the resulting linear
/// angular profiles.
///
/// At frequency zero the even/odd profile basis degenerates to `(1, ω)` and
/// the similarity factor to `1`, so the matrix is real and the solved
/// profiles are the straight lines `a_j + b_j·ω`.  Positivity is verified at
/// both endpoints of every corner interval, which suffices for linear
/// profiles.
pub fn solve_angular(sys: &PencilSystem) -> Result<AngularProfile, BarrierError> {
    let dim = sys.dim();
    let m0 = sys.characteristic_matrix(Complex64::new(0.0, 0.0));
    let m = DMatrix::from_fn(dim, dim, |r, c| m0[r * dim + c].re);
    let rhs = DVector::from_element(dim, 1.0);
    let x = m
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(BarrierError::SingularAtZero {
            residual: f64::INFINITY,
        })?;
    let residual = (&m * &x - &rhs).amax();
    if !(residual < tol::ANGULAR_RESIDUAL) {
        return Err(BarrierError::SingularAtZero { residual });
    }
    let coeffs: Vec<(f64, f64)> = (0..dim / 2).map(|k| (x[2 * k], x[2 * k + 1])).collect();
    let profile = AngularProfile {
        half_openings: sys.half_openings.clone(),
        coeffs,
        residual,
    };
    profile.check_positivity()?;
    Ok(profile)
}

/// Solves every orbit's zero-frequency system and gathers the profiles
/// indexed by *global* corner id (the order of the spec's corner list).
pub fn corner_profiles(domain: &Domain) -> Result<AngularProfile, BarrierError> {
    let nc = domain.spec.corners.len();
    let mut coeffs = vec![(f64::NAN, f64::NAN); nc];
    let mut residual = 0.0f64;
    for orbit in compute_orbits(domain) {
        let sys = localize(domain, &orbit).map_err(|e| BarrierError::Localize(e.to_string()))?;
        let prof = solve_angular(&sys)?;
        residual = residual.max(prof.residual);
        for (local, &global) in orbit.corners.iter().enumerate() {
            coeffs[global] = prof.coeffs[local];
        }
    }
    Ok(AngularProfile {
        half_openings: domain.frames.iter().map(|f| f.half_opening).collect(),
        coeffs,
        residual,
    })
}

/// Analytic evaluator of the corner cap
/// `w¹(p) = Σ_j ξ(|p − g_j|)·φ_j(ω_j(p))`.
///
/// The radial cutoff is `ξ(r) = bump(r/ε)`: identically 1 on `r ≤ ε/2`,
/// identically 0 on `r ≥ ε`, twice continuously differentiable in between
/// (the forcing applies second derivatives to it).  Corner separation is at
/// least `4ε` by the ε defaults, so the caps have disjoint supports.
struct Cap<'a> {
    frames: &'a [CornerFrame],
    coeffs: &'a [(f64, f64)],
    eps: f64,
}

impl Cap<'_> {
    fn value(&self, p: Point) -> f64 {
        let mut sum = 0.0;
        for (frame, &(a, b)) in self.frames.iter().zip(self.coeffs) {
            let (r, om) = frame.local_polar(p);
            if r >= self.eps {
                continue;
            }
            sum += bump::value(r / self.eps) * (a + b * om);
        }
        sum
    }

    /// Value, gradient and Hessian `(w, w_x, w_y, w_xx, w_xy, w_yy)` of the
    /// cap at `p`, in closed form.
    ///
    /// In corner-local polar coordinates `w = ξ(r)·(a + b·ω)` with linear
    /// angular part, so the polar chain rule terminates: with local
    /// Cartesian coordinates `(s, t)` aligned to the bisector,
    /// `r_s = s/r`, `ω_s = −t/r²` etc. give the local Hessian, which is then
    /// rotated back to global axes.  `p` must not be a corner point (the
    /// derivatives have no limit there); grid interior nodes always keep a
    /// positive distance from corners.
    fn jet(&self, p: Point) -> (f64, f64, f64, f64, f64, f64) {
        let (mut w, mut wx, mut wy) = (0.0, 0.0, 0.0);
        let (mut wxx, mut wxy, mut wyy) = (0.0, 0.0, 0.0);
        for (frame, &(a, b)) in self.frames.iter().zip(self.coeffs) {
            let d = p - frame.point;
            let r = d.norm();
            if r >= self.eps || r == 0.0 {
                continue;
            }
            let (cb, sb) = (frame.bisector.cos(), frame.bisector.sin());
            let s = d.x * cb + d.y * sb;
            let t = -d.x * sb + d.y * cb;
            let om = t.atan2(s);
            let tau = r / self.eps;
            let xi = bump::value(tau);
            let xi1 = bump::d1(tau) / self.eps;
            let xi2 = bump::d2(tau) / (self.eps * self.eps);
            let phi = a + b * om;
            let (r2, r3) = (r * r, r * r * r);
            let r4 = r2 * r2;

            let ws = xi1 * phi * s / r - xi * b * t / r2;
            let wt = xi1 * phi * t / r + xi * b * s / r2;
            let wss = xi2 * phi * s * s / r2 - 2.0 * xi1 * b * s * t / r3
                + xi1 * phi * t * t / r3
                + 2.0 * xi * b * s * t / r4;
            let wtt = xi2 * phi * t * t / r2 + 2.0 * xi1 * b * s * t / r3 + xi1 * phi * s * s / r3
                - 2.0 * xi * b * s * t / r4;
            let wst = xi2 * phi * s * t / r2 + xi1 * b * (s * s - t * t) / r3
                - xi1 * phi * s * t / r3
                + xi * b * (t * t - s * s) / r4;

            w += xi * phi;
            wx += ws * cb - wt * sb;
            wy += ws * sb + wt * cb;
            wxx += cb * cb * wss - 2.0 * cb * sb * wst + sb * sb * wtt;
            wxy += cb * sb * (wss - wtt) + (cb * cb - sb * sb) * wst;
            wyy += sb * sb * wss + 2.0 * cb * sb * wst + cb * cb * wtt;
        }
        (w, wx, wy, wxx, wxy, wyy)
    }
}

/// The grid barrier `v = w¹ + v¹` with its certificate data.
#[derive(Clone, Debug, Serialize)]
pub struct BarrierField {
    pub q1: f64,
    /// Cutoff radius: the cap is supported on `r < eps`, with plateau
    /// `r ≤ eps/2`.
    pub eps: f64,
    /// Angular profiles indexed by global corner id.
    pub profile: AngularProfile,
    /// The explicit corner cap sampled on the grid (corner nodes carry the
    /// bisector value `a_j`, the natural representative of the angular
    /// range).
    pub w1: GridField,
    /// The solved correction; exactly zero on corner nodes.
    pub v1: GridField,
    /// `v = w¹ + v¹`.
    pub v: GridField,
    /// Boundary data `ψ¹ = 1 − w¹ + B w¹` the correction was solved with
    /// (zero on non-boundary entries); `B w¹` uses the exact cap value at
    /// the exact image point.
    pub psi1: Vec<f64>,
    /// `inf v` over non-corner nodes, with its witness node.
    pub m: f64,
    pub argmin: usize,
    /// `sup v` over non-corner nodes, with its witness node.
    pub c1: f64,
    pub argmax: usize,
}

/// Builds the grid barrier for `q₁ > 0`: caps every corner with its angular
/// profile, forms the forcing `Pw¹ − q₁w¹` analytically from the cap's
/// closed-form derivatives, solves the correction `v¹` through the grid
/// solver, and certifies `inf v > 0` over non-corner nodes.
pub fn build_barrier(domain: &Domain, q1: f64, grid: &Grid) -> Result<BarrierField, BarrierError> {
    if !(q1 > 0.0) || !q1.is_finite() {
        return Err(BarrierError::InvalidQ(q1));
    }
    let profile = corner_profiles(domain)?;
    let cap = Cap {
        frames: &domain.frames,
        coeffs: &profile.coeffs,
        eps: domain.eps,
    };
    let coeffs = &domain.spec.coefficients;

    let n = grid.nodes.len();
    let mut w1 = GridField::zeros(grid);
    let mut forcing = GridField::zeros(grid);
    let mut psi1 = vec![0.0; n];
    for (i, node) in grid.nodes.iter().enumerate() {
        w1.values[i] = cap.value(node.pos);
        match node.kind {
            NodeKind::Interior => {
                let (w, wx, wy, wxx, wxy, wyy) = cap.jet(node.pos);
                let pw = coeffs.apply(node.pos, w, wx, wy, wxx, wxy, wyy);
                // v¹ solves q₁v¹ − Pv¹ = Pw¹ − q₁w¹, so that v = w¹ + v¹
                // is annihilated by q₁ − P.
                forcing.values[i] = pw - q1 * w;
            }
            NodeKind::Boundary { .. } => {
                let mut bw = 0.0;
                for st in &node.maps {
                    bw += st.weight * cap.value(st.image);
                }
                psi1[i] = 1.0 - w1.values[i] + bw;
            }
            NodeKind::Corner { .. } => {}
        }
    }

    let system = assemble(grid, coeffs, q1, domain)?;
    let v1 = solve_resolvent(&system, grid, &forcing, &BoundaryData::Nodal(psi1.clone()))?;

    let values: Vec<f64> = w1
        .values
        .iter()
        .zip(&v1.values)
        .map(|(w, c)| w + c)
        .collect();

    let (mut m, mut argmin) = (f64::INFINITY, 0);
    let (mut c1, mut argmax) = (f64::NEG_INFINITY, 0);
    for (i, node) in grid.nodes.iter().enumerate() {
        if matches!(node.kind, NodeKind::Corner { .. }) {
            continue;
        }
        if values[i] < m {
            m = values[i];
            argmin = i;
        }
        if values[i] > c1 {
            c1 = values[i];
            argmax = i;
        }
    }
    if !(m > 0.0) {
        let p = grid.nodes[argmin].pos;
        return Err(BarrierError::NonpositiveInfimum {
            node: argmin,
            value: m,
            x: p.x,
            y: p.y,
        });
    }

    Ok(BarrierField {
        q1,
        eps: domain.eps,
        profile,
        w1,
        v1,
        v: GridField {
            values,
            q: Some(q1),
        },
        psi1,
        m,
        argmin,
        c1,
        argmax,
    })
}

/// The sup-norm constant of the barrier: ψ-driven solves at the barrier's
/// `q₁` (or larger) obey `‖u‖_∞ ≤ constant_c1(field)·‖ψ‖_∞` up to grid
/// slack.
pub fn constant_c1(field: &BarrierField) -> f64 {
    field.c1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdsolver::{build_grid, corner_decay_fit, GridField};
    use crate::geometry::validate_spec;
    use crate::pencil::{certify_strips, sample_admissible, PencilTerm, Side};
    use crate::presets;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn domain_of(spec: crate::geometry::DomainSpec) -> Domain {
        let (domain, report) = validate_spec(spec).unwrap();
        assert!(report.all_passed(), "failed: {:?}", report.failed());
        domain
    }

    #[test]
    fn dirichlet_profile_is_identically_one() {
        let sys = PencilSystem::dirichlet(vec![0.3, FRAC_PI_2, 2.5]);
        let prof = solve_angular(&sys).unwrap();
        for (j, &(a, b)) in prof.coeffs.iter().enumerate() {
            assert!((a - 1.0).abs() < 1e-14, "a_{j} = {a}");
            assert!(b.abs() < 1e-14, "b_{j} = {b}");
        }
        assert!(prof.residual < tol::ANGULAR_RESIDUAL);
    }

    #[test]
    fn worked_profile_matches_hand_solve() {
        // One corner of half-opening π/2; the +ω row carries a weight-1/2
        // term sampling the bisector (image angle 0), the −ω row is plain.
        // Hand solve of the 2×2 system:
        //   a/2 + (π/2)b = 1,  a − (π/2)b = 1  ⟹  a = 4/3, b = 2/(3π).
        let sys = PencilSystem::new(
            vec![FRAC_PI_2],
            vec![PencilTerm {
                corner: 0,
                side: Side::Plus,
                target: 0,
                weight: 0.5,
                rotation: -FRAC_PI_2,
                contraction: 1.0,
            }],
        )
        .unwrap();
        let prof = solve_angular(&sys).unwrap();
        let (a, b) = prof.coeffs[0];
        assert!((a - 4.0 / 3.0).abs() < 1e-12, "a = {a}");
        assert!((b - 2.0 / (3.0 * PI)).abs() < 1e-12, "b = {b}");
        // The two boundary conditions, reconstructed by hand.
        assert!((prof.eval(0, -FRAC_PI_2) - 1.0).abs() < 1e-12);
        assert!((prof.eval(0, FRAC_PI_2) - 0.5 * prof.eval(0, 0.0) - 1.0).abs() < 1e-12);
        // Endpoint minimum is the plain side's unit value.
        let (lo, hi) = prof.endpoint_values()[0];
        assert!((lo - 1.0).abs() < 1e-12);
        assert!(hi > 1.0);
    }

    #[test]
    fn profile_rows_reproduce_unit_data_for_sampled_system() {
        // Independent reconstruction of the boundary rows from the terms:
        // φ_j(±ω_j) − Σ weight·φ_target(η) must equal 1 on every row.
        let mut rng = StdRng::seed_from_u64(7);
        let sys = sample_admissible(&mut rng);
        let prof = solve_angular(&sys).unwrap();
        for (j, &w) in sys.half_openings.iter().enumerate() {
            for side in [Side::Plus, Side::Minus] {
                let own = prof.eval(j, side.sign() * w);
                let mut nonlocal = 0.0;
                for t in sys.terms.iter().filter(|t| t.corner == j && t.side == side) {
                    nonlocal += t.weight * prof.eval(t.target, t.image_angle(&sys.half_openings));
                }
                assert!(
                    (own - nonlocal - 1.0).abs() < 1e-10,
                    "row ({j}, {side:?}): {} ≠ 1",
                    own - nonlocal
                );
            }
        }
    }

    #[test]
    fn random_admissible_profiles_are_positive() {
        for seed in 0..50u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let sys = sample_admissible(&mut rng);
            let prof =
                solve_angular(&sys).unwrap_or_else(|e| panic!("seed {seed}: solve failed: {e}"));
            assert!(prof.residual < tol::ANGULAR_RESIDUAL, "seed {seed}");
            for (j, (lo, hi)) in prof.endpoint_values().into_iter().enumerate() {
                assert!(lo > 0.0 && hi > 0.0, "seed {seed} corner {j}: ({lo}, {hi})");
            }
        }
    }

    #[test]
    fn cap_jet_matches_centered_differences() {
        let domain = domain_of(presets::square_nonlocal());
        let profile = corner_profiles(&domain).unwrap();
        // The nonlocal square's profile has a genuinely nonzero slope.
        assert!(profile.coeffs[0].1.abs() > 0.1);
        let cap = Cap {
            frames: &domain.frames,
            coeffs: &profile.coeffs,
            eps: domain.eps,
        };
        let delta = 3e-5;
        // Plateau and transition-ring points at several angles.
        let pts = [
            Point { x: 0.05, y: 0.07 },
            Point { x: 0.11, y: 0.02 },
            Point { x: 0.16, y: 0.11 },
            Point { x: 0.03, y: 0.20 },
            Point { x: 0.20, y: 0.12 },
        ];
        for p in pts {
            let (w, wx, wy, wxx, wxy, wyy) = cap.jet(p);
            let at = |dx: f64, dy: f64| {
                cap.value(Point {
                    x: p.x + dx,
                    y: p.y + dy,
                })
            };
            assert!((w - at(0.0, 0.0)).abs() < 1e-14);
            let fx = (at(delta, 0.0) - at(-delta, 0.0)) / (2.0 * delta);
            let fy = (at(0.0, delta) - at(0.0, -delta)) / (2.0 * delta);
            let fxx = (at(delta, 0.0) - 2.0 * w + at(-delta, 0.0)) / (delta * delta);
            let fyy = (at(0.0, delta) - 2.0 * w + at(0.0, -delta)) / (delta * delta);
            let fxy = (at(delta, delta) - at(delta, -delta) - at(-delta, delta)
                + at(-delta, -delta))
                / (4.0 * delta * delta);
            for (analytic, numeric, name) in [
                (wx, fx, "wx"),
                (wy, fy, "wy"),
                (wxx, fxx, "wxx"),
                (wxy, fxy, "wxy"),
                (wyy, fyy, "wyy"),
            ] {
                assert!(
                    (analytic - numeric).abs() < 2e-3 * (1.0 + analytic.abs()),
                    "{name} at ({}, {}): analytic {analytic} vs centered {numeric}",
                    p.x,
                    p.y
                );
            }
        }
    }

    #[test]
    fn square_dirichlet_barrier_is_bounded_by_one() {
        let domain = domain_of(presets::square_dirichlet());
        let mut excess = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let grid = build_grid(&domain, h).unwrap();
            let field = build_barrier(&domain, 1.0, &grid).unwrap();
            assert!(field.m > 0.0, "h = {h}: m = {}", field.m);
            assert!(field.c1 >= field.m);
            excess.push((field.c1 - 1.0).max(0.0));
            println!("h = {h}: m = {}, c1 = {}", field.m, field.c1);
        }
        // With zero weights the continuum barrier obeys 0 < v ≤ 1; the
        // discrete sup may exceed 1 only by the cap's discretization defect,
        // which shrinks at (at least) second order.  Measured excesses on
        // this ladder: 1.1e-1, 6.1e-3, then below 2e-3.
        assert!(excess[2] < 2e-3, "c1 − 1 = {} at h = 1/64", excess[2]);
        assert!(
            excess[2] < 0.5 * excess[1] + 1e-12 && excess[1] < 0.5 * excess[0] + 1e-12,
            "no second-order decay: {excess:?}"
        );
    }

    #[test]
    fn infimum_decreases_with_q1() {
        let domain = domain_of(presets::square_dirichlet());
        let grid = build_grid(&domain, 1.0 / 24.0).unwrap();
        let ms: Vec<f64> = [1.0, 10.0, 100.0]
            .into_iter()
            .map(|q1| build_barrier(&domain, q1, &grid).unwrap().m)
            .collect();
        assert!(ms[0] > 0.0 && ms[1] > 0.0 && ms[2] > 0.0, "{ms:?}");
        assert!(ms[0] > ms[1] && ms[1] > ms[2], "not decreasing: {ms:?}");
    }

    #[test]
    fn boundary_data_of_correction_vanishes_near_corner() {
        let domain = domain_of(presets::square_nonlocal());
        let grid = build_grid(&domain, 1.0 / 24.0).unwrap();
        let field = build_barrier(&domain, 1.0, &grid).unwrap();
        // On the cap plateau the boundary condition is satisfied by w¹
        // exactly, so ψ¹ vanishes there: the correction's data lives away
        // from the corner.
        let mut checked = 0;
        for (i, node) in grid.nodes.iter().enumerate() {
            if matches!(node.kind, NodeKind::Boundary { .. }) && node.pos.norm() < 0.45 * domain.eps
            {
                assert!(
                    field.psi1[i].abs() < 1e-12,
                    "ψ¹ = {} at ({}, {})",
                    field.psi1[i],
                    node.pos.x,
                    node.pos.y
                );
                checked += 1;
            }
        }
        assert!(checked >= 2, "only {checked} plateau boundary nodes");
        assert!(field.m > 0.0);
    }

    #[test]
    fn reentrant_correction_vanishes_at_pencil_rate() {
        let domain = domain_of(presets::lshape_dirichlet());
        let orbits = compute_orbits(&domain);
        assert_eq!(orbits.len(), 1);
        let sys = localize(&domain, &orbits[0]).unwrap();
        let strips = certify_strips(&sys).unwrap();
        let lead = strips
            .leading_decay
            .expect("re-entrant corner has a decay rate");
        assert!((lead - 2.0 / 3.0).abs() < 5e-3, "leading_decay = {lead}");

        let grid = build_grid(&domain, 1.0 / 48.0).unwrap();
        let field = build_barrier(&domain, 1.0, &grid).unwrap();
        let radii = [0.05, 0.0675, 0.085, 0.1025, 0.12];
        let fit = corner_decay_fit(&grid, &field.v1, Point { x: 0.0, y: 0.0 }, &radii).unwrap();
        println!("leading_decay = {lead}, fitted rate = {fit}");
        assert!(fit >= lead - 0.1, "fit {fit} < {} − 0.1", lead);
        assert!(fit <= lead + 0.4, "fit {fit} implausibly steep");
    }

    #[test]
    fn increasing_weight_never_decreases_sup() {
        let mut c1s = Vec::new();
        for amplitude in [0.0, 0.3, 0.6, 0.9] {
            let mut spec = presets::square_nonlocal();
            spec.maps[0].amplitude = amplitude;
            let domain = domain_of(spec);
            let grid = build_grid(&domain, 1.0 / 24.0).unwrap();
            let field = build_barrier(&domain, 1.0, &grid).unwrap();
            assert!(field.m > 0.0, "amplitude {amplitude}: m = {}", field.m);
            c1s.push(field.c1);
        }
        for pair in c1s.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "sup decreased: {c1s:?}");
        }
    }

    #[test]
    fn sup_constant_bounds_data_driven_solves() {
        let domain = domain_of(presets::square_nonlocal());
        let grid = build_grid(&domain, 1.0 / 24.0).unwrap();
        let field = build_barrier(&domain, 1.0, &grid).unwrap();
        let c1 = constant_c1(&field);
        assert!(c1 >= field.m && field.m > 0.0);

        let system = assemble(&grid, &domain.spec.coefficients, 1.0, &domain).unwrap();
        let zero = GridField::zeros(&grid);
        let slack = 1.0 + tol::CONTRACTION_SLACK_PER_H * grid.h;
        for seed in [1u64, 2, 3] {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut psi = vec![0.0f64; grid.nodes.len()];
            let mut psi_sup = 0.0f64;
            for (i, node) in grid.nodes.iter().enumerate() {
                if matches!(node.kind, NodeKind::Boundary { .. }) {
                    psi[i] = rng.random_range(-1.0..1.0);
                    psi_sup = psi_sup.max(psi[i].abs());
                }
            }
            let u = solve_resolvent(&system, &grid, &zero, &BoundaryData::Nodal(psi)).unwrap();
            assert!(
                u.sup_norm() <= c1 * psi_sup * slack + 1e-12,
                "seed {seed}: ‖u‖ = {} > c₁·‖ψ‖·slack = {}",
                u.sup_norm(),
                c1 * psi_sup * slack
            );
        }
    }

    #[test]
    fn cornerless_domain_gets_pure_solve_barrier() {
        let domain = domain_of(presets::disk_polygon(128));
        let grid = build_grid(&domain, 1.0 / 12.0).unwrap();
        let field = build_barrier(&domain, 1.0, &grid).unwrap();
        // No corners: the cap is empty and the barrier is the plain solve
        // with unit boundary data, bounded by 1 through the max principle.
        assert!(field.w1.sup_norm() == 0.0);
        assert!(field.m > 0.5, "m = {}", field.m);
        assert!(field.c1 <= 1.0 + 1e-9, "c1 = {}", field.c1);
    }

    #[test]
    fn invalid_q1_is_rejected() {
        let domain = domain_of(presets::square_dirichlet());
        let grid = build_grid(&domain, 1.0 / 8.0).unwrap();
        assert!(matches!(
            build_barrier(&domain, 0.0, &grid),
            Err(BarrierError::InvalidQ(_))
        ));
        assert!(matches!(
            build_barrier(&domain, f64::NAN, &grid),
            Err(BarrierError::InvalidQ(_))
        ));
    }
}

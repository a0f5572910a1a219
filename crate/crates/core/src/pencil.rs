//! Operator pencils of corner-localized model problems and their spectra.
//!
//! At each corner orbit the problem reduces to a system of ordinary
//! differential operators on angular intervals, parameterized by a complex
//! number λ: separated solutions have the form `r^{iλ}·φ(ω)` in local polar
//! coordinates, where each angular profile solves `φ'' = λ²φ` on
//! `(−ω₀, ω₀)` and the boundary rows couple profile traces at `±ω_j` to
//! transformed traces `χ^{iλ}·φ_k(σω_j + ω_rot)` at other corners of the
//! orbit.  Eigenvalues of the pencil — parameters λ where a nonzero profile
//! vector exists — govern the corner asymptotics of solutions and the
//! solvability theory, so this module locates them rigorously:
//!
//! * [`count_zeros`] counts pencil eigenvalues in a complex rectangle by the
//!   argument principle with an adaptive phase walk;
//! * [`find_eigenvalues`] isolates them by recursive bisection of
//!   rectangles, polished by a secant iteration;
//! * [`certify_strips`] certifies an eigenvalue-free strip below the real
//!   axis and reports the leading decay exponent.
//!
//! The characteristic determinant is entire in λ, so the argument principle
//! applies on any rectangle whose boundary avoids eigenvalues.

use crate::geometry::wrap_angle;
use crate::tol;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;
use thiserror::Error;

/// Which of the two boundary rays of a corner a trace lives on: `Plus` is
/// the ray at local angle `+ω₀`, `Minus` the ray at `−ω₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// One nonlocal term in corner-local form: on side `side` of corner
/// `corner`, the boundary row subtracts
/// `weight · χ^{iλ} · φ_target(side·ω_corner + rotation)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PencilTerm {
    pub corner: usize,
    pub side: Side,
    pub target: usize,
    /// Weight `b ≥ 0` of the term at the corner.
    pub weight: f64,
    /// Rotation angle of the localized similarity (target frame minus
    /// source frame).
    pub rotation: f64,
    /// Homothety ratio `χ > 0` of the localized similarity.
    pub contraction: f64,
}

impl PencilTerm {
    /// Local angle at which the term samples the target profile.
    pub fn image_angle(&self, half_openings: &[f64]) -> f64 {
        self.side.sign() * half_openings[self.corner] + self.rotation
    }
}

/// The corner-localized model system of one orbit: half-openings of its
/// corners plus the localized nonlocal terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PencilSystem {
    /// Half-opening `ω₀ ∈ (0, π)` of each corner in the orbit.
    pub half_openings: Vec<f64>,
    pub terms: Vec<PencilTerm>,
}

/// Axis-aligned rectangle in the complex λ-plane.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        Self {
            re_lo: re_lo.min(re_hi),
            re_hi: re_lo.max(re_hi),
            im_lo: im_lo.min(im_hi),
            im_hi: im_lo.max(im_hi),
        }
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_lo + self.re_hi),
            0.5 * (self.im_lo + self.im_hi),
        )
    }

    pub fn width(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn height(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    pub fn diag(&self) -> f64 {
        self.width().hypot(self.height())
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }
}

/// An isolated pencil eigenvalue with its certified data.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Eigenvalue {
    pub lambda: Complex64,
    /// Zero count of the characteristic determinant in the isolating cell.
    pub multiplicity: usize,
    /// `|det|` at `lambda` relative to the local determinant scale.
    pub residual: f64,
}

/// All pencil eigenvalues found in a window, with the argument-principle
/// total for cross-checking.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub window: Rect,
    pub eigenvalues: Vec<Eigenvalue>,
    /// Total zero count of the window by the argument principle; equals the
    /// sum of multiplicities.
    pub total_count: usize,
}

/// Certified eigenvalue-free strip below the real axis plus the leading
/// corner-decay exponent.
#[derive(Clone, Debug, Serialize)]
pub struct StripReport {
    /// Largest certified width: no eigenvalues with `Im λ ∈ [−δ₁, 0]`
    /// (bisection resolution [`tol::STRIP_RESOLUTION`], Re-window limited).
    pub delta1: f64,
    /// Chosen working width `δ ≤ δ₁` used by downstream estimates.
    pub delta: f64,
    /// Eigenvalues found in the reporting band below the strip.
    pub eigenvalues: Vec<Eigenvalue>,
    /// `min |Im λ_k|` over eigenvalues with `|Im λ_k| ∈ (δ, 1 + δ]`, i.e.
    /// the slowest decay rate `r^{|Im λ|}` of corner solutions.
    pub leading_decay: Option<f64>,
    /// Re-window half-width used; strips are only certified for `|Re λ| ≤ R`.
    pub re_window: f64,
    /// True when the growth search hit its cap without finding eigenvalues.
    pub capped: bool,
}

#[derive(Debug, Error)]
pub enum PencilError {
    #[error("inadmissible system: {0}")]
    Admissibility(String),
    #[error("a determinant zero lies on (or within ~1e-9 of) the contour; perturb the rectangle")]
    BoundaryZero,
    #[error("argument-principle walk failed to converge: {0}")]
    NonConvergedSubdivision(String),
    #[error(
        "eigenvalue at {lambda} lies within {margin:.2}% of the Re-window edge; enlarge the window"
    )]
    WindowTooSmall { lambda: Complex64, margin: f64 },
    #[error("{count} eigenvalue(s) on the real-λ line; the localized system is degenerate")]
    ZerosOnLine { count: usize },
}

/// `sinh(λa)/λ`, extended analytically through `λ = 0` (value `a`).
fn sinhc(lambda: Complex64, a: f64) -> Complex64 {
    let z = lambda * a;
    if z.norm() < 1e-4 {
        // a·(1 + z²/6 + z⁴/120); truncation error below 1e-28 relative
        let z2 = z * z;
        a * (Complex64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0)
    } else {
        z.sinh() / lambda
    }
}

/// Pivoted in-place LU; returns diagonal pivots and the swap count.
fn lu_pivots(m: &mut [Complex64], n: usize) -> (Vec<Complex64>, usize) {
    let mut swaps = 0;
    for k in 0..n {
        let mut p = k;
        let mut best = m[k * n + k].norm();
        for r in (k + 1)..n {
            let v = m[r * n + k].norm();
            if v > best {
                best = v;
                p = r;
            }
        }
        if p != k {
            for c in 0..n {
                m.swap(k * n + c, p * n + c);
            }
            swaps += 1;
        }
        let piv = m[k * n + k];
        if piv.norm() == 0.0 {
            // singular: remaining pivots are zero
            return (
                (0..n)
                    .map(|i| m[i * n + i])
                    .map(|d| {
                        if d.norm() == 0.0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            d
                        }
                    })
                    .collect(),
                swaps,
            );
        }
        for r in (k + 1)..n {
            let f = m[r * n + k] / piv;
            m[r * n + k] = f;
            for c in (k + 1)..n {
                let s = m[k * n + c];
                m[r * n + c] -= f * s;
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), swaps)
}

impl PencilSystem {
    /// Builds an admissible system, enforcing the weight and angle
    /// conditions that guarantee a clean spectral theory:
    ///
    /// * every half-opening lies strictly in `(0, π)`;
    /// * all weights are nonnegative, every per-side weight sum is ≤ 1, and
    ///   every per-corner two-sided total is strictly below 2;
    /// * every term's image angle lies strictly inside the target wedge.
    pub fn new(half_openings: Vec<f64>, terms: Vec<PencilTerm>) -> Result<Self, PencilError> {
        let n = half_openings.len();
        if n == 0 {
            return Err(PencilError::Admissibility("no corners".into()));
        }
        for (j, &w) in half_openings.iter().enumerate() {
            if !(w.is_finite() && w > 1e-12 && w < PI - 1e-12) {
                return Err(PencilError::Admissibility(format!(
                    "half-opening {j} = {w} outside (0, π)"
                )));
            }
        }
        let mut side_sums = vec![[0.0f64; 2]; n];
        let mut corner_sums = vec![0.0f64; n];
        for (ti, t) in terms.iter().enumerate() {
            if t.corner >= n || t.target >= n {
                return Err(PencilError::Admissibility(format!(
                    "term {ti} references corner outside the system"
                )));
            }
            if !(t.weight.is_finite() && t.weight >= 0.0) {
                return Err(PencilError::Admissibility(format!(
                    "term {ti} has negative or non-finite weight {}",
                    t.weight
                )));
            }
            if !(t.contraction.is_finite() && t.contraction > 1e-12) {
                return Err(PencilError::Admissibility(format!(
                    "term {ti} has non-positive contraction {}",
                    t.contraction
                )));
            }
            if !t.rotation.is_finite() {
                return Err(PencilError::Admissibility(format!(
                    "term {ti} has non-finite rotation"
                )));
            }
            let idx = match t.side {
                Side::Plus => 0,
                Side::Minus => 1,
            };
            side_sums[t.corner][idx] += t.weight;
            corner_sums[t.corner] += t.weight;
            if t.weight > tol::WEIGHT_SLACK {
                let eta = t.image_angle(&half_openings);
                let cap = half_openings[t.target];
                if eta.abs() >= cap - 1e-12 * (1.0 + cap) {
                    return Err(PencilError::Admissibility(format!(
                        "term {ti} image angle {eta:.6} not strictly inside (−{cap:.6}, {cap:.6})"
                    )));
                }
            }
        }
        for j in 0..n {
            for (s, lab) in side_sums[j].iter().zip(["+", "-"]) {
                if *s > 1.0 + tol::WEIGHT_SLACK {
                    return Err(PencilError::Admissibility(format!(
                        "corner {j} side {lab}: weight sum {s} exceeds 1"
                    )));
                }
            }
            if corner_sums[j] >= 2.0 - tol::WEIGHT_SLACK {
                return Err(PencilError::Admissibility(format!(
                    "corner {j}: two-sided weight total {} not strictly below 2",
                    corner_sums[j]
                )));
            }
        }
        Ok(Self {
            half_openings,
            terms,
        })
    }

    /// Builds a system without admissibility checks, for probing degenerate
    /// configurations in tests and diagnostics.
    pub fn new_unchecked(half_openings: Vec<f64>, terms: Vec<PencilTerm>) -> Self {
        Self {
            half_openings,
            terms,
        }
    }

    /// Purely local (Dirichlet) system: no nonlocal terms.
    pub fn dirichlet(half_openings: Vec<f64>) -> Self {
        Self {
            half_openings,
            terms: Vec::new(),
        }
    }

    /// Matrix dimension `2N` (two basis profiles per corner).
    pub fn dim(&self) -> usize {
        2 * self.half_openings.len()
    }

    /// The characteristic matrix `M(λ)` in row-major order.
    ///
    /// Column `2k` carries the even profile `cosh(λω)`, column `2k+1` the
    /// odd profile `sinh(λω)/λ` of corner `k`; both are entire in λ, making
    /// the determinant entire.  Rows `2j`/`2j+1` are the `+ω_j`/`−ω_j`
    /// boundary conditions of corner `j`.
    pub fn characteristic_matrix(&self, lambda: Complex64) -> Vec<Complex64> {
        let n = self.half_openings.len();
        let dim = 2 * n;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, &w) in self.half_openings.iter().enumerate() {
            let c = (lambda * w).cosh();
            let s = sinhc(lambda, w);
            m[(2 * j) * dim + 2 * j] += c;
            m[(2 * j) * dim + 2 * j + 1] += s;
            m[(2 * j + 1) * dim + 2 * j] += c;
            m[(2 * j + 1) * dim + 2 * j + 1] -= s;
        }
        for t in &self.terms {
            let row = 2 * t.corner
                + match t.side {
                    Side::Plus => 0,
                    Side::Minus => 1,
                };
            let eta = t.image_angle(&self.half_openings);
            // χ^{iλ} = exp(iλ·ln χ)
            let chi_pow = (Complex64::new(0.0, 1.0) * lambda * t.contraction.ln()).exp();
            let coef = -t.weight * chi_pow;
            m[row * dim + 2 * t.target] += coef * (lambda * eta).cosh();
            m[row * dim + 2 * t.target + 1] += coef * sinhc(lambda, eta);
        }
        m
    }

    /// Characteristic determinant (direct product form; can overflow for
    /// very large `|Re λ|·ω` — use [`Self::logdet`] inside algorithms).
    pub fn det(&self, lambda: Complex64) -> Complex64 {
        let dim = self.dim();
        let mut m = self.characteristic_matrix(lambda);
        let (pivots, swaps) = lu_pivots(&mut m, dim);
        let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        pivots
            .into_iter()
            .fold(Complex64::new(sign, 0.0), |a, p| a * p)
    }

    /// `log det M(λ)` as `ln|det| + i·arg(det)` (argument not wrapped to a
    /// principal branch between calls).  Returns `re = −∞` when singular.
    pub fn logdet(&self, lambda: Complex64) -> Complex64 {
        let dim = self.dim();
        let mut m = self.characteristic_matrix(lambda);
        let (pivots, swaps) = lu_pivots(&mut m, dim);
        let mut mag = 0.0;
        let mut arg = if swaps % 2 == 0 { 0.0 } else { PI };
        for p in pivots {
            let r = p.norm();
            if r == 0.0 {
                return Complex64::new(f64::NEG_INFINITY, 0.0);
            }
            mag += r.ln();
            arg += p.arg();
        }
        Complex64::new(mag, arg)
    }
}

/// Adaptive argument-principle walker with an evaluation budget.
struct Walker<'a> {
    sys: &'a PencilSystem,
    evals: usize,
    budget: usize,
}

impl<'a> Walker<'a> {
    fn new(sys: &'a PencilSystem, budget: usize) -> Self {
        Self {
            sys,
            evals: 0,
            budget,
        }
    }

    fn logdet(&mut self, z: Complex64) -> Result<Complex64, PencilError> {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(PencilError::NonConvergedSubdivision(format!(
                "evaluation budget {} exhausted",
                self.budget
            )));
        }
        let ld = self.sys.logdet(z);
        if ld.re == f64::NEG_INFINITY {
            return Err(PencilError::BoundaryZero);
        }
        Ok(ld)
    }

    /// Walks one straight edge, accumulating the wrapped phase increment.
    fn walk_edge(
        &mut self,
        a: Complex64,
        lda: Complex64,
        b: Complex64,
        ldb: Complex64,
        acc: &mut f64,
    ) -> Result<(), PencilError> {
        // Initial uniform split so a large interior swing cannot hide
        // between well-behaved endpoints.
        const INITIAL: usize = 16;
        let mut pts = Vec::with_capacity(INITIAL + 1);
        pts.push((a, lda));
        for k in 1..INITIAL {
            let t = k as f64 / INITIAL as f64;
            let z = a + (b - a) * t;
            let ld = self.logdet(z)?;
            pts.push((z, ld));
        }
        pts.push((b, ldb));
        let mut stack: Vec<((Complex64, Complex64), (Complex64, Complex64))> =
            pts.windows(2).rev().map(|w| (w[0], w[1])).collect();
        while let Some(((za, la), (zb, lb))) = stack.pop() {
            let dphi = wrap_angle(lb.im - la.im);
            let len = (zb - za).norm();
            if dphi.abs() <= tol::PHASE_STEP_MAX {
                // Guard against a zero grazing the midpoint of an accepted
                // segment: a deep magnitude dip flags it.
                if len > 1e-9 * (1.0 + za.norm()) {
                    let zm = 0.5 * (za + zb);
                    let lm = self.logdet(zm)?;
                    if lm.re < la.re.max(lb.re) + tol::CONTOUR_LOG_FLOOR {
                        return Err(PencilError::BoundaryZero);
                    }
                    let d1 = wrap_angle(lm.im - la.im);
                    let d2 = wrap_angle(lb.im - lm.im);
                    if d1.abs() > tol::PHASE_STEP_MAX || d2.abs() > tol::PHASE_STEP_MAX {
                        stack.push(((zm, lm), (zb, lb)));
                        stack.push(((za, la), (zm, lm)));
                        continue;
                    }
                    *acc += d1 + d2;
                } else {
                    *acc += dphi;
                }
                continue;
            }
            if len < 1e-12 * (1.0 + za.norm()) {
                // Phase cannot be resolved at machine scale: a zero sits on
                // (or hair-close to) the contour.
                return Err(PencilError::BoundaryZero);
            }
            let zm = 0.5 * (za + zb);
            let lm = self.logdet(zm)?;
            stack.push(((zm, lm), (zb, lb)));
            stack.push(((za, la), (zm, lm)));
        }
        Ok(())
    }

    fn winding(&mut self, rect: Rect) -> Result<usize, PencilError> {
        let corners = rect.corners();
        let lds = [
            self.logdet(corners[0])?,
            self.logdet(corners[1])?,
            self.logdet(corners[2])?,
            self.logdet(corners[3])?,
        ];
        let mut acc = 0.0;
        for i in 0..4 {
            let j = (i + 1) % 4;
            self.walk_edge(corners[i], lds[i], corners[j], lds[j], &mut acc)?;
        }
        let w = acc / (2.0 * PI);
        let rounded = w.round();
        if (w - rounded).abs() > 0.25 {
            return Err(PencilError::NonConvergedSubdivision(format!(
                "winding {w:.4} is not near an integer"
            )));
        }
        if rounded < -0.5 {
            return Err(PencilError::NonConvergedSubdivision(format!(
                "negative winding {rounded} for an entire function"
            )));
        }
        Ok(rounded as usize)
    }
}

/// Budget for one contour walk; generous because each evaluation is a tiny
/// dense LU.
const WALK_BUDGET: usize = 400_000;

/// Counts pencil eigenvalues (zeros of the characteristic determinant, with
/// multiplicity) strictly inside `rect` by the argument principle.
///
/// When a zero lies on (or hair-close to) the contour the count is
/// ill-posed and [`PencilError::BoundaryZero`] is returned; the caller must
/// perturb the rectangle.  No silent perturbation happens here — the count
/// always refers to exactly the requested rectangle, which is what makes
/// subdivision counts additive.
pub fn count_zeros(sys: &PencilSystem, rect: Rect) -> Result<usize, PencilError> {
    Walker::new(sys, WALK_BUDGET).winding(rect)
}

/// Cell diagonal below which subdivision stops and secant polishing starts.
const REFINE_DIAG: f64 = 1e-5;
/// Relative offsets tried for the split line when a zero blocks the
/// midpoint.
const SPLIT_NUDGES: [f64; 8] = [
    0.0, 1.7e-3, -2.3e-3, 3.1e-3, -4.7e-3, 8.9e-3, -1.3e-2, 2.1e-2,
];

fn split_rect(rect: Rect, frac: f64) -> (Rect, Rect) {
    if rect.width() >= rect.height() {
        let x = rect.re_lo + rect.width() * (0.5 + frac);
        (
            Rect::new(rect.re_lo, x, rect.im_lo, rect.im_hi),
            Rect::new(x, rect.re_hi, rect.im_lo, rect.im_hi),
        )
    } else {
        let y = rect.im_lo + rect.height() * (0.5 + frac);
        (
            Rect::new(rect.re_lo, rect.re_hi, rect.im_lo, y),
            Rect::new(rect.re_lo, rect.re_hi, y, rect.im_hi),
        )
    }
}

/// Secant polish of one zero inside a tight cell; returns the refined
/// location and the relative determinant residual there.
fn polish(sys: &PencilSystem, cell: Rect, _count: usize) -> (Complex64, f64) {
    // Local determinant scale from the cell corners.
    let lref = cell
        .corners()
        .iter()
        .map(|&z| sys.logdet(z).re)
        .fold(f64::NEG_INFINITY, f64::max);
    let c = cell.center();
    if lref == f64::NEG_INFINITY {
        return (c, 0.0);
    }
    let f = |z: Complex64| -> Complex64 {
        let ld = sys.logdet(z);
        if ld.re == f64::NEG_INFINITY {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(ld.re - lref, 0.0).exp() * Complex64::new(0.0, ld.im).exp()
        }
    };
    let mut z0 = c;
    let mut z1 = c + Complex64::new(0.37, 0.21) * cell.diag();
    let mut f0 = f(z0);
    let mut f1 = f(z1);
    let mut best = if f0.norm() <= f1.norm() {
        (z0, f0.norm())
    } else {
        (z1, f1.norm())
    };
    for _ in 0..80 {
        let denom = f1 - f0;
        if denom.norm() == 0.0 || !denom.is_finite() {
            break;
        }
        let z2 = z1 - f1 * (z1 - z0) / denom;
        if !z2.is_finite() || (z2 - c).norm() > 10.0 * (cell.diag() + 1e-12) {
            break;
        }
        let f2 = f(z2);
        if f2.norm() < best.1 {
            best = (z2, f2.norm());
        }
        if (z2 - z1).norm() < 1e-14 * (1.0 + z2.norm()) {
            break;
        }
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f2;
    }
    best
}

/// Locates all pencil eigenvalues inside `window` by recursive rectangle
/// subdivision (argument-principle counts at every level) with a final
/// secant refinement, clustering multiple zeros within
/// [`tol::CLUSTER_RADIUS`] into one eigenvalue with their total
/// multiplicity.
///
/// `tol_rel` bounds the acceptable relative determinant residual at each
/// refined eigenvalue (default [`tol::EIGEN_RESIDUAL_REL`] when `None`).
pub fn find_eigenvalues(
    sys: &PencilSystem,
    window: Rect,
    tol_rel: Option<f64>,
) -> Result<Spectrum, PencilError> {
    let tol_rel = tol_rel.unwrap_or(tol::EIGEN_RESIDUAL_REL);
    let total = count_zeros(sys, window)?;
    let mut found: Vec<(Complex64, usize, f64)> = Vec::new();
    let mut queue: VecDeque<(Rect, usize)> = VecDeque::new();
    if total > 0 {
        queue.push_back((window, total));
    }
    let mut pops = 0usize;
    while let Some((rect, count)) = queue.pop_front() {
        pops += 1;
        if pops > 40_000 {
            return Err(PencilError::NonConvergedSubdivision(
                "subdivision queue exceeded its budget".into(),
            ));
        }
        if rect.diag() <= REFINE_DIAG {
            let (z, res) = polish(sys, rect, count);
            if res > tol_rel {
                return Err(PencilError::NonConvergedSubdivision(format!(
                    "residual {res:.3e} at {z} exceeds {tol_rel:.1e}"
                )));
            }
            found.push((z, count, res));
            continue;
        }
        let mut split_ok = false;
        for frac in SPLIT_NUDGES {
            let (ra, rb) = split_rect(rect, frac);
            match count_zeros(sys, ra) {
                Ok(ca) if ca <= count => {
                    // The two children partition the parent, so the second
                    // count follows exactly from the argument principle.
                    let cb = count - ca;
                    if ca > 0 {
                        queue.push_back((ra, ca));
                    }
                    if cb > 0 {
                        queue.push_back((rb, cb));
                    }
                    split_ok = true;
                    break;
                }
                Ok(_) => continue, // inconsistent count: nudge the split
                Err(PencilError::BoundaryZero) => continue,
                Err(e) => return Err(e),
            }
        }
        if !split_ok {
            return Err(PencilError::NonConvergedSubdivision(format!(
                "could not split cell around {} cleanly",
                rect.center()
            )));
        }
    }

    // Cluster refined zeros within the resolution radius.
    found.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    let mut eigenvalues: Vec<Eigenvalue> = Vec::new();
    for (z, cnt, res) in found {
        if let Some(last) = eigenvalues.last_mut() {
            if (last.lambda - z).norm() <= tol::CLUSTER_RADIUS {
                last.multiplicity += cnt;
                last.residual = last.residual.max(res);
                continue;
            }
        }
        eigenvalues.push(Eigenvalue {
            lambda: z,
            multiplicity: cnt,
            residual: res,
        });
    }

    // Eigenvalues hugging the Re edges suggest more zeros beyond the window.
    let margin = (1.0 - tol::WINDOW_EDGE_FRACTION) * 0.5 * window.width();
    for ev in &eigenvalues {
        if ev.lambda.re > window.re_hi - margin || ev.lambda.re < window.re_lo + margin {
            return Err(PencilError::WindowTooSmall {
                lambda: ev.lambda,
                margin: 100.0 * (1.0 - tol::WINDOW_EDGE_FRACTION),
            });
        }
    }

    Ok(Spectrum {
        window,
        eigenvalues,
        total_count: total,
    })
}

/// Counts zeros in a band, retrying with tiny nudges of the band edges when
/// a zero sits on them.
fn count_band(
    sys: &PencilSystem,
    re_window: f64,
    im_lo: f64,
    im_hi: f64,
) -> Result<usize, PencilError> {
    let jitters = [0.0, 1.3e-4, -1.7e-4, 2.9e-4, -3.7e-4];
    let mut last = PencilError::BoundaryZero;
    for j in jitters {
        match count_zeros(
            sys,
            Rect::new(-re_window, re_window, im_lo - j, im_hi + j.abs()),
        ) {
            Ok(c) => return Ok(c),
            Err(PencilError::BoundaryZero) => last = PencilError::BoundaryZero,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Certifies an eigenvalue-free strip below the real axis (within the
/// default Re-window) and reports the leading decay exponent.
pub fn certify_strips(sys: &PencilSystem) -> Result<StripReport, PencilError> {
    certify_strips_with(sys, tol::RE_WINDOW)
}

/// Growth cap for the strip search; systems with very narrow corners can
/// have their first eigenvalue arbitrarily deep.
const STRIP_CAP: f64 = 32.0;

/// [`certify_strips`] with an explicit Re-window half-width.
pub fn certify_strips_with(sys: &PencilSystem, re_window: f64) -> Result<StripReport, PencilError> {
    let w = tol::STRIP_RESOLUTION;
    // The model problem must have no spectrum on the real-λ line.
    let line = count_band(sys, re_window, -w, w)?;
    if line > 0 {
        return Err(PencilError::ZerosOnLine { count: line });
    }

    // Exponential growth until the band below the line captures a zero.
    let mut lo = w;
    let mut hi = None;
    let mut d = 0.25;
    while d <= STRIP_CAP {
        match count_band(sys, re_window, -d, 0.0)? {
            0 => lo = d,
            _ => {
                hi = Some(d);
                break;
            }
        }
        d *= 2.0;
    }
    let capped = hi.is_none();
    let delta1 = match hi {
        None => STRIP_CAP,
        Some(mut h) => {
            // Bisection: count([−lo, 0]) = 0, count([−hi, 0]) > 0.
            while h - lo > tol::STRIP_RESOLUTION {
                let mid = 0.5 * (h + lo);
                match count_band(sys, re_window, -mid, 0.0)? {
                    0 => lo = mid,
                    _ => h = mid,
                }
            }
            lo
        }
    };

    let delta = (0.9 * delta1).min(1.0);
    let (eigenvalues, leading_decay) = if capped {
        (Vec::new(), None)
    } else {
        // Pad the reporting band a little past depth 1 + δ so a zero
        // sitting exactly at the closed end is still captured.
        let pad = 0.05;
        let spectrum = find_eigenvalues(
            sys,
            Rect::new(-re_window, re_window, -(1.0 + delta + pad), -delta),
            None,
        )?;
        let lead = spectrum
            .eigenvalues
            .iter()
            .map(|e| e.lambda.im.abs())
            .filter(|&m| m > delta && m <= 1.0 + delta + 1e-9)
            .fold(f64::INFINITY, f64::min);
        let lead = if lead.is_finite() { Some(lead) } else { None };
        (spectrum.eigenvalues, lead)
    };

    Ok(StripReport {
        delta1,
        delta,
        eigenvalues,
        leading_decay,
        re_window,
        capped,
    })
}

/// Draws a random admissible system: 1–3 corners with openings bounded away
/// from 0 and π, random per-side weight packets summing below 1 (and below
/// 2 per corner), and image angles strictly inside the target wedges.
pub fn sample_admissible<R: Rng + ?Sized>(rng: &mut R) -> PencilSystem {
    let n = rng.random_range(1..=3usize);
    let half_openings: Vec<f64> = (0..n).map(|_| rng.random_range(0.15..PI - 0.15)).collect();
    let mut terms = Vec::new();
    for corner in 0..n {
        let budget_total = rng.random_range(0.0..1.9f64);
        for side in [Side::Plus, Side::Minus] {
            let count = rng.random_range(0..=2usize);
            if count == 0 {
                continue;
            }
            let side_budget = (0.95f64).min(budget_total) * rng.random_range(0.1..1.0f64);
            // stick-breaking split of the side budget
            let mut raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0f64)).collect();
            let s: f64 = raw.iter().sum();
            for r in &mut raw {
                *r *= side_budget / s;
            }
            for weight in raw {
                let target = rng.random_range(0..n);
                let cap = half_openings[target];
                let eta = rng.random_range(-0.95 * cap..0.95 * cap);
                let rotation = eta - side.sign() * half_openings[corner];
                let contraction = (rng.random_range(0.3f64.ln()..3.0f64.ln())).exp();
                terms.push(PencilTerm {
                    corner,
                    side,
                    target,
                    weight,
                    rotation,
                    contraction,
                });
            }
        }
    }
    // Enforce the strict two-sided corner bound after stick-breaking.
    let mut corner_sums = vec![0.0f64; n];
    for t in &terms {
        corner_sums[t.corner] += t.weight;
    }
    for t in &mut terms {
        if corner_sums[t.corner] >= 1.9 {
            t.weight *= 1.8 / corner_sums[t.corner];
        }
    }
    PencilSystem::new(half_openings, terms).expect("sampler generates admissible systems")
}

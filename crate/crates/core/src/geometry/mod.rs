//! Domain descriptions, admissibility validation, corner orbits, and
//! localization of the nonlocal boundary structure.
//!
//! A [`DomainSpec`] describes a bounded plane domain by polyline boundary
//! arcs, a finite corner set, nonlocal boundary maps (plane similarities
//! anchored at corners), and operator coefficients.  [`validate_spec`] checks
//! the admissibility conditions — uniform ellipticity, the sign of the
//! zeroth-order coefficient, weight bounds, map ranges, and the
//! rotation–homothety structure of the maps at corners — and reports each
//! with a witness.  [`compute_orbits`] partitions the corner set under the
//! action of the maps, and [`localize`] extracts per-orbit model data (the
//! [`PencilSystem`](crate::pencil::PencilSystem)) that drives the spectral
//! analysis.

mod coeffs;
mod curve;
mod point;
pub mod specfile;

pub use coeffs::{Coefficient, OperatorCoefficients};
pub use curve::{Boundary, CurveError, Hit, Nearest, Segment};
pub use point::{wrap_angle, AffineMap, Point, SimilarityFit};

use crate::pencil::{PencilSystem, PencilTerm, Side};
use crate::tol;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// C² plateau bump used for weight profiles and cutoff functions:
/// identically 1 on `t ≤ 1/2`, identically 0 on `t ≥ 1`, quintic in between.
pub mod bump {
    /// Bump value at `t ≥ 0`.
    pub fn value(t: f64) -> f64 {
        if t <= 0.5 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            let s = 2.0 * t - 1.0;
            1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
        }
    }

    /// First derivative d/dt.
    pub fn d1(t: f64) -> f64 {
        if t <= 0.5 || t >= 1.0 {
            0.0
        } else {
            let s = 2.0 * t - 1.0;
            -2.0 * 30.0 * s * s * (s - 1.0) * (s - 1.0)
        }
    }

    /// Second derivative d²/dt².
    pub fn d2(t: f64) -> f64 {
        if t <= 0.5 || t >= 1.0 {
            0.0
        } else {
            let s = 2.0 * t - 1.0;
            -4.0 * 60.0 * s * (2.0 * s - 1.0) * (s - 1.0)
        }
    }
}

/// A nonlocal boundary term `b(y)·u(Ω(y))` attached to one boundary arc and
/// anchored at one corner.
///
/// The weight profile is `amplitude · bump(|y − anchor|/ε)`, so it is
/// supported in the ε-neighborhood of the anchor corner and equals
/// `amplitude` at the corner itself.  The point map `Ω` is an affine plane
/// similarity taking the anchor into the corner set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryMap {
    /// Index of the boundary arc carrying the term.
    pub arc: usize,
    /// Index of the anchor corner (an endpoint of `arc`).
    pub anchor: usize,
    /// Weight amplitude `b ≥ 0`.
    pub amplitude: f64,
    /// The point map `Ω`.
    pub transform: AffineMap,
}

/// Plain-data description of a problem: geometry, maps, and coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    /// Open polyline arcs chaining into a single closed boundary loop.
    pub arcs: Vec<Vec<Point>>,
    /// The corner set `K` (each point must be an endpoint of some arc).
    pub corners: Vec<Point>,
    pub maps: Vec<BoundaryMap>,
    pub coefficients: OperatorCoefficients,
    /// Optional override of the corner-neighborhood radii `(ε₁, ε)`.
    #[serde(default)]
    pub eps_override: Option<(f64, f64)>,
    /// Sampling density per arc for pointwise condition checks.
    #[serde(default = "default_samples")]
    pub samples_per_arc: usize,
}

fn default_samples() -> usize {
    256
}

/// Which end of an arc a corner sits at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcEnd {
    Start,
    End,
}

/// One of the two boundary rays meeting at a corner.
#[derive(Clone, Copy, Debug)]
pub struct IncidentRay {
    pub arc: usize,
    pub end: ArcEnd,
    /// Global polar angle of the ray direction (pointing away from the corner).
    pub ray_angle: f64,
    /// Which side of the corner frame the ray lands on.
    pub side: Side,
    /// Length of the straight end segment realizing the ray.
    pub straight_len: f64,
}

/// Geometric frame of a corner: the interior wedge `{|ω| < ω₀}` in local
/// coordinates obtained by translating the corner to the origin and rotating
/// the interior bisector onto the positive x-axis.
#[derive(Clone, Debug)]
pub struct CornerFrame {
    pub point: Point,
    /// Half-opening `ω₀ ∈ (0, π)`; the full interior angle is `2ω₀`.
    pub half_opening: f64,
    /// Global polar angle of the interior bisector.
    pub bisector: f64,
    pub incident: [IncidentRay; 2],
}

impl CornerFrame {
    /// Local polar coordinates `(r, ω)` of a point, with `ω` measured from
    /// the interior bisector.
    pub fn local_polar(&self, p: Point) -> (f64, f64) {
        let d = p - self.point;
        (d.norm(), wrap_angle(d.angle() - self.bisector))
    }
}

/// A validated domain: the spec plus derived geometric data.
pub struct Domain {
    pub spec: DomainSpec,
    pub boundary: Boundary,
    pub frames: Vec<CornerFrame>,
    /// Radius within which the domain is a plane wedge at each corner.
    pub eps1: f64,
    /// Weight-support radius, `ε ≤ ε₁/2`.
    pub eps: f64,
    /// Nearest-corner index and mismatch distance for each map image of its
    /// anchor.
    pub map_targets: Vec<(usize, f64)>,
}

/// Structural errors: the spec cannot be turned into a geometry at all.
#[derive(Debug, Error)]
pub enum SpecError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("corner {0} does not coincide with any arc endpoint")]
    CornerNotOnArcEndpoint(usize),
    #[error("corner {0} must have exactly two incident arc ends, found {1}")]
    BadIncidence(usize, usize),
    #[error("corners {0} and {1} coincide")]
    DuplicateCorner(usize, usize),
    #[error("corner {0} is flat (opening π): drop it from the corner list")]
    FlatCorner(usize),
    #[error("corner {0} has degenerate opening")]
    DegenerateCorner(usize),
    #[error("map {0} references arc {1} which does not exist")]
    MapArcIndex(usize, usize),
    #[error("map {0} references corner {1} which does not exist")]
    MapAnchorIndex(usize, usize),
    #[error("map {0}: anchor corner is not an endpoint of arc {1}")]
    MapAnchorNotOnArc(usize, usize),
    #[error("map {0}: arc {1} meets the anchor corner on both sides; split the arc")]
    AmbiguousMapSide(usize, usize),
    #[error("maps are present but the corner set is empty")]
    MapsWithoutCorners,
    #[error("corner-neighborhood radii must satisfy 0 < ε ≤ ε₁/2, got ε₁={0}, ε={1}")]
    BadEpsilon(f64, f64),
    #[error("operator coefficient is not finite at ({0:.6}, {1:.6})")]
    NonFiniteCoefficient(f64, f64),
}

/// One admissibility condition, checked pointwise with a witness.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    /// Stable identifier, e.g. `"ellipticity"`.
    pub id: String,
    pub passed: bool,
    /// Human-readable outcome summary.
    pub detail: String,
    /// Worst sampled point and the margin value there, when applicable.
    pub witness: Option<(Point, f64)>,
}

/// Outcome of validating a [`DomainSpec`].
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
    /// Certified ellipticity lower bound (min principal eigenvalue sampled).
    pub c0: f64,
    /// Max drift magnitude sampled, used for the mesh-size gate.
    pub sup_drift: f64,
    pub eps1: f64,
    pub eps: f64,
    pub orbit_count: usize,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// An orbit of the corner set under the boundary maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbit {
    /// Sorted corner indices.
    pub corners: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error("corner {0} is not in the requested orbit")]
    CornerOutsideOrbit(usize),
    #[error("map {map}: image of the anchor is {dist:.3e} away from the nearest corner")]
    TargetNotACorner { map: usize, dist: f64 },
    #[error("localized system is inadmissible: {0}")]
    Inadmissible(String),
}

impl Domain {
    /// Builds the derived geometry; fails only on structural defects.
    pub fn new(spec: DomainSpec) -> Result<Self, SpecError> {
        let boundary = Boundary::from_arcs(&spec.arcs)?;
        let tol_pt = 1e-9 * boundary.diameter;

        // Coefficients must at least be finite on the bounding box corners.
        for p in [
            boundary.bbox.0,
            boundary.bbox.1,
            Point::new(boundary.bbox.0.x, boundary.bbox.1.y),
            Point::new(boundary.bbox.1.x, boundary.bbox.0.y),
        ] {
            let c = &spec.coefficients;
            let all = [
                c.p11.eval(p),
                c.p12.eval(p),
                c.p22.eval(p),
                c.p1.eval(p),
                c.p2.eval(p),
                c.p0.eval(p),
            ];
            if all.iter().any(|v| !v.is_finite()) {
                return Err(SpecError::NonFiniteCoefficient(p.x, p.y));
            }
        }

        for (i, gi) in spec.corners.iter().enumerate() {
            for (j, gj) in spec.corners.iter().enumerate().skip(i + 1) {
                if gi.dist(*gj) <= tol_pt {
                    return Err(SpecError::DuplicateCorner(i, j));
                }
            }
        }

        // Locate the two incident arc ends of each corner.
        let mut incidences: Vec<Vec<(usize, ArcEnd)>> = vec![Vec::new(); spec.corners.len()];
        for (ai, arc) in spec.arcs.iter().enumerate() {
            for (ci, g) in spec.corners.iter().enumerate() {
                if arc.first().unwrap().dist(*g) <= tol_pt {
                    incidences[ci].push((ai, ArcEnd::Start));
                }
                if arc.last().unwrap().dist(*g) <= tol_pt {
                    incidences[ci].push((ai, ArcEnd::End));
                }
            }
        }

        let mut frames = Vec::with_capacity(spec.corners.len());
        for (ci, g) in spec.corners.iter().enumerate() {
            let inc = &incidences[ci];
            if inc.is_empty() {
                return Err(SpecError::CornerNotOnArcEndpoint(ci));
            }
            if inc.len() != 2 {
                return Err(SpecError::BadIncidence(ci, inc.len()));
            }
            let rays: Vec<(Point, f64)> = inc
                .iter()
                .map(|&(ai, end)| {
                    let arc = &spec.arcs[ai];
                    let (p0, p1) = match end {
                        ArcEnd::Start => (arc[0], arc[1]),
                        ArcEnd::End => (arc[arc.len() - 1], arc[arc.len() - 2]),
                    };
                    ((p1 - p0).normalized(), p1.dist(p0))
                })
                .collect();
            let (dir_a, len_a) = rays[0];
            let (dir_b, len_b) = rays[1];

            let mid = dir_a + dir_b;
            if mid.norm() < 1e-9 {
                return Err(SpecError::FlatCorner(ci));
            }
            // Two bisector candidates: the short-side bisector and its
            // opposite.  Probe along each to find the interior one.
            let cand = mid.angle();
            let mut bisector = None;
            let mut probe_r = 0.4 * len_a.min(len_b);
            'outer: for _ in 0..24 {
                for beta in [cand, cand + std::f64::consts::PI] {
                    let omega = wrap_angle(dir_a.angle() - beta).abs();
                    // probe the bisector and two intermediate directions
                    let ok = [0.0f64, 0.7, -0.7].iter().all(|&frac| {
                        let theta = beta + frac * omega;
                        boundary.signed_distance(*g + Point::from_polar(probe_r, theta)) < 0.0
                    });
                    if ok {
                        bisector = Some(beta);
                        break 'outer;
                    }
                }
                probe_r *= 0.5;
            }
            let bisector = wrap_angle(bisector.ok_or(SpecError::DegenerateCorner(ci))?);
            let da = wrap_angle(dir_a.angle() - bisector);
            let db = wrap_angle(dir_b.angle() - bisector);
            let half_opening = 0.5 * (da.abs() + db.abs());
            if (da.abs() - db.abs()).abs() > 1e-9 || da.signum() == db.signum() {
                return Err(SpecError::DegenerateCorner(ci));
            }
            if !(half_opening > 1e-9 && half_opening < std::f64::consts::PI - 1e-9) {
                return Err(SpecError::DegenerateCorner(ci));
            }
            if (half_opening - std::f64::consts::FRAC_PI_2).abs() < 1e-9 {
                return Err(SpecError::FlatCorner(ci));
            }
            let mk = |(arc, end): (usize, ArcEnd), dir: Point, len: f64| IncidentRay {
                arc,
                end,
                ray_angle: dir.angle(),
                side: if wrap_angle(dir.angle() - bisector) > 0.0 {
                    Side::Plus
                } else {
                    Side::Minus
                },
                straight_len: len,
            };
            frames.push(CornerFrame {
                point: *g,
                half_opening,
                bisector,
                incident: [mk(inc[0], dir_a, len_a), mk(inc[1], dir_b, len_b)],
            });
        }

        // Structural map checks.
        if !spec.maps.is_empty() && spec.corners.is_empty() {
            return Err(SpecError::MapsWithoutCorners);
        }
        for (mi, m) in spec.maps.iter().enumerate() {
            if m.arc >= spec.arcs.len() {
                return Err(SpecError::MapArcIndex(mi, m.arc));
            }
            if m.anchor >= spec.corners.len() {
                return Err(SpecError::MapAnchorIndex(mi, m.anchor));
            }
            let hits: Vec<_> = frames[m.anchor]
                .incident
                .iter()
                .filter(|r| r.arc == m.arc)
                .collect();
            match hits.len() {
                0 => return Err(SpecError::MapAnchorNotOnArc(mi, m.arc)),
                1 => {}
                _ => return Err(SpecError::AmbiguousMapSide(mi, m.arc)),
            }
        }

        // Corner-neighborhood radii.
        let (eps1, eps) = if let Some((e1, e)) = spec.eps_override {
            if !(e > 0.0 && e <= 0.5 * e1) {
                return Err(SpecError::BadEpsilon(e1, e));
            }
            (e1, e)
        } else if spec.corners.is_empty() {
            (0.0, 0.0)
        } else {
            let mut limit = f64::INFINITY;
            for (ci, f) in frames.iter().enumerate() {
                for r in &f.incident {
                    limit = limit.min(r.straight_len);
                }
                for (cj, g) in spec.corners.iter().enumerate() {
                    if ci != cj {
                        limit = limit.min(f.point.dist(*g));
                    }
                }
                // distance to non-incident boundary segments
                for (si, s) in boundary.segments().iter().enumerate() {
                    let _ = si;
                    if s.a.dist(f.point) <= tol_pt || s.b.dist(f.point) <= tol_pt {
                        continue;
                    }
                    let t = {
                        let d = s.b - s.a;
                        ((f.point - s.a).dot(d) / d.norm_sq()).clamp(0.0, 1.0)
                    };
                    limit = limit.min(f.point.dist(s.a + (s.b - s.a) * t));
                }
            }
            let e1 = 0.5 * limit;
            (e1, 0.5 * e1)
        };

        // Nearest corner to each map image of its anchor.
        let map_targets = spec
            .maps
            .iter()
            .map(|m| {
                let img = m.transform.apply(spec.corners[m.anchor]);
                spec.corners
                    .iter()
                    .enumerate()
                    .map(|(k, g)| (k, g.dist(img)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap_or((0, f64::INFINITY))
            })
            .collect();

        Ok(Self {
            spec,
            boundary,
            frames,
            eps1,
            eps,
            map_targets,
        })
    }

    /// Weight profile of map `mi` at a boundary point `y`.
    pub fn weight(&self, mi: usize, y: Point) -> f64 {
        let m = &self.spec.maps[mi];
        if self.eps == 0.0 {
            return 0.0;
        }
        let r = y.dist(self.spec.corners[m.anchor]);
        m.amplitude * bump::value(r / self.eps)
    }

    /// Total nonlocal weight `Σ_s b_is(y)` of arc `arc` at `y`.
    pub fn total_weight_on_arc(&self, arc: usize, y: Point) -> f64 {
        self.spec
            .maps
            .iter()
            .enumerate()
            .filter(|(_, m)| m.arc == arc)
            .map(|(mi, _)| self.weight(mi, y))
            .sum()
    }

    /// Indices of maps living on `arc`.
    pub fn maps_on_arc(&self, arc: usize) -> impl Iterator<Item = usize> + '_ {
        self.spec
            .maps
            .iter()
            .enumerate()
            .filter(move |(_, m)| m.arc == arc)
            .map(|(mi, _)| mi)
    }

    /// Evenly spaced sample points along an arc polyline.
    pub fn sample_arc(&self, arc: usize, n: usize) -> Vec<Point> {
        let pts = &self.spec.arcs[arc];
        let mut cum = vec![0.0];
        for w in pts.windows(2) {
            cum.push(cum.last().unwrap() + w[0].dist(w[1]));
        }
        let total = *cum.last().unwrap();
        (0..=n)
            .map(|k| {
                let s = total * k as f64 / n as f64;
                let mut seg = 0;
                while seg + 2 < cum.len() && cum[seg + 1] < s {
                    seg += 1;
                }
                let ds = cum[seg + 1] - cum[seg];
                let t = if ds > 0.0 { (s - cum[seg]) / ds } else { 0.0 };
                pts[seg] + (pts[seg + 1] - pts[seg]) * t
            })
            .collect()
    }

    /// Sample points covering the closed domain: a coarse interior lattice
    /// plus boundary and corner samples.
    pub fn closure_samples(&self) -> Vec<Point> {
        let (lo, hi) = self.boundary.bbox;
        let n = 48;
        let mut pts = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let p = Point::new(
                    lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / n as f64,
                );
                if self.boundary.signed_distance(p) <= 1e-9 * self.boundary.diameter {
                    pts.push(p);
                }
            }
        }
        for arc in 0..self.spec.arcs.len() {
            pts.extend(self.sample_arc(arc, self.spec.samples_per_arc));
        }
        pts.extend(self.spec.corners.iter().cloned());
        pts
    }

    /// Sampled ellipticity floor and drift ceiling over the closure,
    /// `(c0, sup_drift)`.  These gate the admissible mesh size.
    pub fn coefficient_ranges(&self) -> (f64, f64) {
        let samples = self.closure_samples();
        let c0 = samples
            .iter()
            .map(|&p| self.spec.coefficients.min_eigenvalue(p))
            .fold(f64::INFINITY, f64::min);
        let sup_drift = samples
            .iter()
            .map(|&p| self.spec.coefficients.drift_norm(p))
            .fold(0.0f64, f64::max);
        (c0, sup_drift)
    }
}

/// Validates a spec: builds the geometry and checks every admissibility
/// condition, returning the domain together with a per-condition report.
pub fn validate_spec(spec: DomainSpec) -> Result<(Domain, ValidationReport), SpecError> {
    let domain = Domain::new(spec)?;
    let report = validate_domain(&domain);
    Ok((domain, report))
}

fn validate_domain(domain: &Domain) -> ValidationReport {
    let spec = &domain.spec;
    let mut checks = Vec::new();
    let samples = domain.closure_samples();

    // Uniform ellipticity: min principal eigenvalue > 0 over the closure.
    let (c0, c0_at) = samples
        .iter()
        .map(|&p| (spec.coefficients.min_eigenvalue(p), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    checks.push(ConditionCheck {
        id: "ellipticity".into(),
        passed: c0 > 0.0,
        detail: format!("min principal eigenvalue {c0:.6e}"),
        witness: Some((c0_at, c0)),
    });

    // Zeroth-order coefficient is nonpositive.
    let (p0_max, p0_at) = samples
        .iter()
        .map(|&p| (spec.coefficients.p0.eval(p), p))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    checks.push(ConditionCheck {
        id: "zeroth-order-sign".into(),
        passed: p0_max <= tol::WEIGHT_SLACK,
        detail: format!("max p0 = {p0_max:.6e}"),
        witness: Some((p0_at, p0_max)),
    });

    // Drift magnitude (recorded for the mesh gate; always passes).
    let sup_drift = samples
        .iter()
        .map(|&p| spec.coefficients.drift_norm(p))
        .fold(0.0, f64::max);

    // Principal part is isotropic at corners (Laplacian after scaling).
    {
        let mut worst: Option<(Point, f64)> = None;
        for f in &domain.frames {
            let g = f.point;
            let scale =
                spec.coefficients.p11.eval(g).abs() + spec.coefficients.p22.eval(g).abs() + 1e-300;
            let defect = (spec.coefficients.p12.eval(g).abs()
                + (spec.coefficients.p11.eval(g) - spec.coefficients.p22.eval(g)).abs())
                / scale;
            if worst.map_or(true, |w| defect > w.1) {
                worst = Some((g, defect));
            }
        }
        let passed = worst.map_or(true, |w| w.1 <= 1e-9);
        checks.push(ConditionCheck {
            id: "corner-isotropy".into(),
            passed,
            detail: "principal part must be a multiple of the Laplacian at corners".into(),
            witness: worst,
        });
    }

    // Weight amplitudes are nonnegative.
    {
        let worst = spec
            .maps
            .iter()
            .map(|m| m.amplitude)
            .fold(f64::INFINITY, f64::min);
        checks.push(ConditionCheck {
            id: "weight-nonnegativity".into(),
            passed: spec.maps.is_empty() || worst >= 0.0,
            detail: format!(
                "min amplitude {}",
                if spec.maps.is_empty() { 0.0 } else { worst }
            ),
            witness: None,
        });
    }

    // Σ_s b_is ≤ 1 on each arc.
    {
        let mut worst: Option<(Point, f64)> = None;
        for arc in 0..spec.arcs.len() {
            for &y in &domain.sample_arc(arc, spec.samples_per_arc) {
                let w = domain.total_weight_on_arc(arc, y);
                if worst.map_or(true, |b| w > b.1) {
                    worst = Some((y, w));
                }
            }
        }
        let passed = worst.map_or(true, |w| w.1 <= 1.0 + tol::WEIGHT_SLACK);
        checks.push(ConditionCheck {
            id: "weight-sum".into(),
            passed,
            detail: format!(
                "max Σ b over sampled boundary = {:.12}",
                worst.map_or(0.0, |w| w.1)
            ),
            witness: worst,
        });
    }

    // Two-sided weight total at each corner stays below 2.
    {
        let mut worst: Option<(Point, f64)> = None;
        for (ci, g) in spec.corners.iter().enumerate() {
            let total: f64 = spec
                .maps
                .iter()
                .filter(|m| m.anchor == ci)
                .map(|m| m.amplitude)
                .sum();
            if worst.map_or(true, |b| total > b.1) {
                worst = Some((*g, total));
            }
        }
        let passed = worst.map_or(true, |w| w.1 < 2.0 - tol::WEIGHT_SLACK);
        checks.push(ConditionCheck {
            id: "corner-weight-defect".into(),
            passed,
            detail: format!(
                "max corner weight total = {:.12}",
                worst.map_or(0.0, |w| w.1)
            ),
            witness: worst,
        });
    }

    // Maps send their weighted boundary piece strictly inside the domain.
    {
        let mut worst: Option<(Point, f64)> = None; // witness = (preimage, signed distance of image)
        let mut passed = true;
        for (mi, m) in spec.maps.iter().enumerate() {
            let g = spec.corners[m.anchor];
            for &y in &domain.sample_arc(m.arc, spec.samples_per_arc) {
                let r = y.dist(g);
                if r <= 1e-9 * domain.boundary.diameter || r >= domain.eps {
                    continue;
                }
                let sd = domain.boundary.signed_distance(m.transform.apply(y));
                if sd >= 0.0 {
                    passed = false;
                }
                if worst.map_or(true, |b| sd > b.1) {
                    worst = Some((y, sd));
                }
            }
            let _ = mi;
        }
        checks.push(ConditionCheck {
            id: "map-into-domain".into(),
            passed,
            detail: "images of weighted boundary points lie strictly inside".into(),
            witness: worst,
        });
    }

    // Images of ε-neighborhoods stay within ε₁ of the target corner.
    {
        let mut worst: Option<(Point, f64)> = None;
        let mut passed = true;
        for (mi, m) in spec.maps.iter().enumerate() {
            let (tk, _) = domain.map_targets[mi];
            let gt = spec
                .corners
                .get(tk)
                .copied()
                .unwrap_or(spec.corners[m.anchor]);
            let g = spec.corners[m.anchor];
            for &y in &domain.sample_arc(m.arc, spec.samples_per_arc) {
                if y.dist(g) > domain.eps {
                    continue;
                }
                let d = m.transform.apply(y).dist(gt);
                if d > domain.eps1 * (1.0 + 1e-9) {
                    passed = false;
                }
                if worst.map_or(true, |b| d > b.1) {
                    worst = Some((y, d));
                }
            }
        }
        checks.push(ConditionCheck {
            id: "map-range-ball".into(),
            passed,
            detail: "ε-neighborhood images stay within ε₁ of the target corner".into(),
            witness: worst,
        });
    }

    // Maps act as rotation–homothety germs (similarity residual).
    {
        let mut worst = 0.0f64;
        for m in &spec.maps {
            worst = worst.max(m.transform.similarity_fit().residual);
        }
        checks.push(ConditionCheck {
            id: "corner-conformality".into(),
            passed: worst <= tol::SIMILARITY_FIT,
            detail: format!("max similarity-fit residual {worst:.3e}"),
            witness: None,
        });
    }

    // Maps permute the corner set.
    {
        let mut worst: Option<(Point, f64)> = None;
        for (mi, m) in spec.maps.iter().enumerate() {
            let (_, d) = domain.map_targets[mi];
            let img = m.transform.apply(spec.corners[m.anchor]);
            if worst.map_or(true, |b| d > b.1) {
                worst = Some((img, d));
            }
        }
        let passed = worst.map_or(true, |w| w.1 <= 1e-9 * domain.boundary.diameter);
        checks.push(ConditionCheck {
            id: "maps-permute-corners".into(),
            passed,
            detail: "anchor images coincide with corners".into(),
            witness: worst,
        });
    }

    // The domain is a straight wedge within ε₁ of each corner.
    {
        let mut passed = true;
        let mut worst: Option<(Point, f64)> = None;
        for f in &domain.frames {
            for r in &f.incident {
                let defect = domain.eps1 - r.straight_len;
                if defect > 1e-9 * domain.boundary.diameter {
                    passed = false;
                    worst = Some((f.point, defect));
                }
            }
        }
        checks.push(ConditionCheck {
            id: "corner-neighborhood-straight".into(),
            passed,
            detail: "incident end segments extend past ε₁".into(),
            witness: worst,
        });
    }

    // Localized systems satisfy the angle and weight conditions.
    let orbits = compute_orbits(domain);
    {
        let mut passed = true;
        let mut detail = String::from("all orbit systems admissible");
        for orbit in &orbits {
            if let Err(e) = localize(domain, orbit) {
                passed = false;
                detail = e.to_string();
                break;
            }
        }
        checks.push(ConditionCheck {
            id: "angle-range".into(),
            passed,
            detail,
            witness: None,
        });
    }

    ValidationReport {
        checks,
        c0,
        sup_drift,
        eps1: domain.eps1,
        eps: domain.eps,
        orbit_count: orbits.len(),
    }
}

/// Partitions the corner set into orbits under the boundary maps.
///
/// Two corners are in the same orbit when some map (or inverse) connects
/// them; the partition is computed by union–find over anchor → target edges.
pub fn compute_orbits(domain: &Domain) -> Vec<Orbit> {
    let n = domain.spec.corners.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (mi, m) in domain.spec.maps.iter().enumerate() {
        let (target, _) = domain.map_targets[mi];
        let (a, b) = (find(&mut parent, m.anchor), find(&mut parent, target));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .into_values()
        .map(|mut corners| {
            corners.sort_unstable();
            Orbit { corners }
        })
        .collect()
}

/// Extracts the localized model data of one orbit: half-openings of its
/// corners and one term per boundary map, expressed in corner coordinates.
///
/// A map anchored at corner `g_j` with similarity ratio `χ` and global
/// rotation `θ` becomes, in the local frames, the rotation–homothety
/// `z ↦ χ·e^{i·ω_rot}·z` with `ω_rot = θ + β_j − β_k`, where `β_j`, `β_k` are
/// the bisector angles of the anchor and target frames.
pub fn localize(domain: &Domain, orbit: &Orbit) -> Result<PencilSystem, LocalizeError> {
    let pos_of = |corner: usize| -> Result<usize, LocalizeError> {
        orbit
            .corners
            .iter()
            .position(|&c| c == corner)
            .ok_or(LocalizeError::CornerOutsideOrbit(corner))
    };
    let half_openings: Vec<f64> = orbit
        .corners
        .iter()
        .map(|&c| domain.frames[c].half_opening)
        .collect();

    let mut terms = Vec::new();
    for (mi, m) in domain.spec.maps.iter().enumerate() {
        if !orbit.corners.contains(&m.anchor) {
            continue;
        }
        let j = pos_of(m.anchor)?;
        let (target_corner, dist) = domain.map_targets[mi];
        if dist > 1e-9 * domain.boundary.diameter {
            return Err(LocalizeError::TargetNotACorner { map: mi, dist });
        }
        let k = pos_of(target_corner)?;
        let fit = m.transform.similarity_fit();
        let side = domain.frames[m.anchor]
            .incident
            .iter()
            .find(|r| r.arc == m.arc)
            .expect("map incidence checked at construction")
            .side;
        let rotation = wrap_angle(
            fit.angle + domain.frames[m.anchor].bisector - domain.frames[target_corner].bisector,
        );
        terms.push(PencilTerm {
            corner: j,
            side,
            target: k,
            weight: m.amplitude,
            rotation,
            contraction: fit.scale,
        });
    }

    PencilSystem::new(half_openings, terms).map_err(|e| LocalizeError::Inadmissible(e.to_string()))
}

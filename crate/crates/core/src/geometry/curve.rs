//! Closed polyline boundaries: chaining, orientation, signed distance,
//! and segment/boundary intersection queries.
//!
//! Boundary arcs are open polylines; [`Boundary::from_arcs`] chains them into
//! a single counterclockwise loop (interior on the left of every segment).
//! All point queries go through a uniform bucket index so that the signed
//! distance — the hot operation of both the grid builder and the Monte Carlo
//! stepper — costs O(1) per call for bounded-complexity boundaries.

use super::point::Point;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("arc {0} has fewer than two points")]
    ShortArc(usize),
    #[error("arc {arc} contains a degenerate (zero-length) segment at vertex {vertex}")]
    DegenerateSegment { arc: usize, vertex: usize },
    #[error("boundary arcs do not chain into a single closed loop")]
    NotASingleLoop,
    #[error("boundary polygon is self-intersecting near ({x:.6}, {y:.6})")]
    SelfIntersecting { x: f64, y: f64 },
    #[error("boundary encloses no area")]
    ZeroArea,
}

/// One oriented boundary segment with the index of the arc it came from.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub arc: usize,
}

impl Segment {
    fn dir(&self) -> Point {
        (self.b - self.a).normalized()
    }

    /// Closest point parameter `t ∈ [0, 1]` along the segment.
    fn nearest_t(&self, p: Point) -> f64 {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0)
    }

    fn at(&self, t: f64) -> Point {
        self.a + (self.b - self.a) * t
    }
}

/// Result of a nearest-boundary query.
#[derive(Clone, Copy, Debug)]
pub struct Nearest {
    pub dist: f64,
    pub point: Point,
    pub seg: usize,
    pub t: f64,
}

/// First crossing of a query segment with the boundary.
#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub point: Point,
    pub seg: usize,
    /// Parameter along the query segment, in `[0, 1]`.
    pub t: f64,
}

/// Uniform bucket grid over segment indices.
struct BucketIndex {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl BucketIndex {
    fn build(segs: &[Segment], lo: Point, hi: Point) -> Self {
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-300);
        let cell = extent / 128.0;
        let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, s) in segs.iter().enumerate() {
            let (x0, x1) = (s.a.x.min(s.b.x), s.a.x.max(s.b.x));
            let (y0, y1) = (s.a.y.min(s.b.y), s.a.y.max(s.b.y));
            let i0 = (((x0 - lo.x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let i1 = (((x1 - lo.x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let j0 = (((y0 - lo.y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            let j1 = (((y1 - lo.y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k as u32);
                }
            }
        }
        Self {
            lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(&self, p: Point) -> (isize, isize) {
        (
            (((p.x - self.lo.x) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1),
            (((p.y - self.lo.y) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1),
        )
    }
}

/// A single closed, counterclockwise polyline boundary.
pub struct Boundary {
    segs: Vec<Segment>,
    /// For the two segments meeting at each segment start vertex: outward
    /// angle-weighted pseudonormal, used for signing distances at vertices.
    vertex_normals: Vec<Point>,
    pub bbox: (Point, Point),
    pub diameter: f64,
    pub arc_count: usize,
    index: BucketIndex,
}

impl Boundary {
    /// Chains open polyline arcs into one closed loop and orients it
    /// counterclockwise.  Arc indices are preserved on every segment.
    pub fn from_arcs(arcs: &[Vec<Point>]) -> Result<Self, CurveError> {
        if arcs.is_empty() {
            return Err(CurveError::NotASingleLoop);
        }
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for arc in arcs {
            for p in arc {
                lo.x = lo.x.min(p.x);
                lo.y = lo.y.min(p.y);
                hi.x = hi.x.max(p.x);
                hi.y = hi.y.max(p.y);
            }
        }
        let diameter = (hi - lo).norm();
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(CurveError::ZeroArea);
        }
        let tol = 1e-9 * diameter;

        for (i, arc) in arcs.iter().enumerate() {
            if arc.len() < 2 {
                return Err(CurveError::ShortArc(i));
            }
            for (v, w) in arc.windows(2).enumerate().map(|(v, pair)| (v, pair)) {
                if w[0].dist(w[1]) <= tol {
                    return Err(CurveError::DegenerateSegment { arc: i, vertex: v });
                }
            }
        }

        // Chain arcs end-to-end.  `chain` holds (point, arc-of-following-segment).
        let mut used = vec![false; arcs.len()];
        let mut chain: Vec<(Point, usize)> = Vec::new();
        used[0] = true;
        for w in arcs[0].windows(2) {
            chain.push((w[0], 0));
        }
        let mut end = *arcs[0].last().unwrap();
        let start = arcs[0][0];
        loop {
            if end.dist(start) <= tol {
                break;
            }
            let mut found = false;
            for (i, arc) in arcs.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let (fwd, rev) = (
                    arc.first().unwrap().dist(end) <= tol,
                    arc.last().unwrap().dist(end) <= tol,
                );
                if fwd || rev {
                    used[i] = true;
                    let pts: Vec<Point> = if fwd {
                        arc.clone()
                    } else {
                        arc.iter().rev().cloned().collect()
                    };
                    for w in pts.windows(2) {
                        chain.push((w[0], i));
                    }
                    end = *pts.last().unwrap();
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(CurveError::NotASingleLoop);
            }
        }
        if used.iter().any(|&u| !u) {
            return Err(CurveError::NotASingleLoop);
        }

        // Reject self-intersections on the raw chain first (the check is
        // orientation-independent, and degenerate bow-ties would otherwise
        // be misreported as zero-area loops).
        let n = chain.len();
        {
            let raw: Vec<Segment> = (0..n)
                .map(|k| Segment {
                    a: chain[k].0,
                    b: chain[(k + 1) % n].0,
                    arc: chain[k].1,
                })
                .collect();
            for i in 0..n {
                for j in (i + 2)..n {
                    if i == 0 && j == n - 1 {
                        continue; // adjacent around the loop
                    }
                    if let Some((p, _, _)) = seg_intersect(&raw[i], raw[j].a, raw[j].b, 0.0) {
                        return Err(CurveError::SelfIntersecting { x: p.x, y: p.y });
                    }
                }
            }
        }

        // Signed area decides orientation; reverse to counterclockwise if needed.
        let mut area2 = 0.0;
        for k in 0..n {
            let p = chain[k].0;
            let q = chain[(k + 1) % n].0;
            area2 += p.cross(q);
        }
        if area2.abs() <= tol * diameter {
            return Err(CurveError::ZeroArea);
        }
        let segs: Vec<Segment> = if area2 > 0.0 {
            (0..n)
                .map(|k| Segment {
                    a: chain[k].0,
                    b: chain[(k + 1) % n].0,
                    arc: chain[k].1,
                })
                .collect()
        } else {
            (0..n)
                .map(|k| {
                    let k2 = n - 1 - k;
                    Segment {
                        a: chain[(k2 + 1) % n].0,
                        b: chain[k2].0,
                        arc: chain[k2].1,
                    }
                })
                .collect()
        };

        // Angle-weighted outward pseudonormals at segment-start vertices.
        // For a counterclockwise loop the outward normal of a segment is the
        // clockwise perpendicular of its direction.
        let mut vertex_normals = Vec::with_capacity(n);
        for k in 0..n {
            let prev = &segs[(k + n - 1) % n];
            let cur = &segs[k];
            let n_prev = -prev.dir().perp();
            let n_cur = -cur.dir().perp();
            let sum = n_prev + n_cur;
            vertex_normals.push(if sum.norm() > 1e-12 {
                sum.normalized()
            } else {
                // 180° reflex — fall back to one side's normal
                n_cur
            });
        }

        let index = BucketIndex::build(&segs, lo, hi);
        let arc_count = arcs.len();
        Ok(Self {
            segs,
            vertex_normals,
            bbox: (lo, hi),
            diameter,
            arc_count,
            index,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segs
    }

    /// Nearest boundary feature to `p`, via expanding ring search on the
    /// bucket index.
    pub fn nearest(&self, p: Point) -> Nearest {
        let idx = &self.index;
        let (ci, cj) = idx.cell_of(p);
        let mut best = Nearest {
            dist: f64::INFINITY,
            point: p,
            seg: 0,
            t: 0.0,
        };
        let max_ring = idx.nx.max(idx.ny) as isize;
        for ring in 0..=max_ring {
            // Any candidate in ring `r` lies outside the inner box of
            // half-width (r−1) cells around p's cell, so once the distance to
            // that box exceeds the best found, the search is complete.
            if ring >= 2 {
                let inner = (ring - 1) as f64 * idx.cell;
                let dx = (p.x - idx.lo.x) - ci as f64 * idx.cell;
                let dy = (p.y - idx.lo.y) - cj as f64 * idx.cell;
                let margin = dx
                    .min(idx.cell - dx)
                    .min(dy)
                    .min(idx.cell - dy)
                    .clamp(0.0, idx.cell);
                if inner - idx.cell + margin > best.dist {
                    break;
                }
            }
            let mut visit = |i: isize, j: isize| {
                if i < 0 || j < 0 || i >= idx.nx as isize || j >= idx.ny as isize {
                    return;
                }
                for &k in &idx.buckets[j as usize * idx.nx + i as usize] {
                    let s = &self.segs[k as usize];
                    let t = s.nearest_t(p);
                    let q = s.at(t);
                    let d = p.dist(q);
                    if d < best.dist {
                        best = Nearest {
                            dist: d,
                            point: q,
                            seg: k as usize,
                            t,
                        };
                    }
                }
            };
            if ring == 0 {
                visit(ci, cj);
            } else {
                for i in (ci - ring)..=(ci + ring) {
                    visit(i, cj - ring);
                    visit(i, cj + ring);
                }
                for j in (cj - ring + 1)..(cj + ring) {
                    visit(ci - ring, j);
                    visit(ci + ring, j);
                }
            }
        }
        best
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    ///
    /// The sign comes from the supporting segment, or from the angle-weighted
    /// pseudonormal when the nearest feature is a vertex, which is the
    /// standard robust choice for simple polygons.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let near = self.nearest(p);
        let s = &self.segs[near.seg];
        let vertex_tol = 1e-12 * self.diameter;
        let outward = if near.point.dist(s.a) <= vertex_tol {
            self.vertex_normals[near.seg]
        } else if near.point.dist(s.b) <= vertex_tol {
            self.vertex_normals[(near.seg + 1) % self.segs.len()]
        } else {
            -s.dir().perp()
        };
        if (p - near.point).dot(outward) >= 0.0 {
            near.dist
        } else {
            -near.dist
        }
    }

    /// Interior test with a safety margin: true iff `signed_distance < -margin`.
    pub fn is_interior(&self, p: Point, margin: f64) -> bool {
        self.signed_distance(p) < -margin
    }

    /// First boundary crossing walking from `a` to `b`, if any.
    pub fn segment_hit(&self, a: Point, b: Point) -> Option<Hit> {
        let idx = &self.index;
        let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
        let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
        let i0 = (((x0 - idx.lo.x) / idx.cell).floor() as isize - 1).max(0);
        let i1 = (((x1 - idx.lo.x) / idx.cell).floor() as isize + 1).min(idx.nx as isize - 1);
        let j0 = (((y0 - idx.lo.y) / idx.cell).floor() as isize - 1).max(0);
        let j1 = (((y1 - idx.lo.y) / idx.cell).floor() as isize + 1).min(idx.ny as isize - 1);
        let mut best: Option<Hit> = None;
        let mut seen: Vec<u32> = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &k in &idx.buckets[j as usize * idx.nx + i as usize] {
                    if seen.contains(&k) {
                        continue;
                    }
                    seen.push(k);
                    if let Some((p, t, _)) = seg_intersect(&self.segs[k as usize], a, b, 1e-12) {
                        if best.map_or(true, |h| t < h.t) {
                            best = Some(Hit {
                                point: p,
                                seg: k as usize,
                                t,
                            });
                        }
                    }
                }
            }
        }
        best
    }

    /// Arc index owning segment `seg`.
    pub fn arc_of_segment(&self, seg: usize) -> usize {
        self.segs[seg].arc
    }

    /// Even–odd ray-cast interior test; slower than `signed_distance` but
    /// independent of it, used for cross-checks.
    pub fn winding_contains(&self, p: Point) -> bool {
        let mut inside = false;
        for s in &self.segs {
            let (ay, by) = (s.a.y, s.b.y);
            if (ay > p.y) != (by > p.y) {
                let x = s.a.x + (p.y - ay) / (by - ay) * (s.b.x - s.a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Intersection of boundary segment `s` with the query segment `a→b`.
/// Returns (point, t along a→b, u along s) with both parameters in
/// `[-slack, 1+slack]`.
fn seg_intersect(s: &Segment, a: Point, b: Point, slack: f64) -> Option<(Point, f64, f64)> {
    let r = b - a;
    let d = s.b - s.a;
    let denom = r.cross(d);
    if denom.abs() < 1e-300 {
        return None; // parallel or degenerate
    }
    let w = s.a - a;
    let t = w.cross(d) / denom;
    let u = w.cross(r) / denom;
    if t >= -slack && t <= 1.0 + slack && u >= -slack && u <= 1.0 + slack {
        Some((a + r * t.clamp(0.0, 1.0), t, u))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Boundary {
        Boundary::from_arcs(&[vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 0.0),
        ]])
        .unwrap()
    }

    #[test]
    fn square_signed_distance() {
        let b = unit_square();
        assert!((b.signed_distance(Point::new(0.5, 0.5)) + 0.5).abs() < 1e-12);
        assert!((b.signed_distance(Point::new(0.5, 0.1)) + 0.1).abs() < 1e-12);
        assert!((b.signed_distance(Point::new(1.5, 0.5)) - 0.5).abs() < 1e-12);
        // outside near a corner: diagonal distance
        let d = b.signed_distance(Point::new(-0.3, -0.4));
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chaining_reversed_arcs() {
        // Two arcs, the second given in reverse orientation.
        let b = Boundary::from_arcs(&[
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
            ],
            vec![
                Point::new(0.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(1.0, 1.0),
            ],
        ])
        .unwrap();
        assert_eq!(b.arc_count, 2);
        assert!(b.signed_distance(Point::new(0.5, 0.5)) < 0.0);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let b = Boundary::from_arcs(&[vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 0.0),
        ]])
        .unwrap();
        assert!(b.signed_distance(Point::new(0.5, 0.5)) < 0.0);
        assert!(b.signed_distance(Point::new(0.5, -0.5)) > 0.0);
    }

    #[test]
    fn segment_hit_finds_first_crossing() {
        let b = unit_square();
        let hit = b
            .segment_hit(Point::new(0.5, 0.5), Point::new(1.5, 0.5))
            .unwrap();
        assert!((hit.point.x - 1.0).abs() < 1e-12);
        assert!((hit.point.y - 0.5).abs() < 1e-12);
        assert!(b
            .segment_hit(Point::new(0.2, 0.2), Point::new(0.3, 0.3))
            .is_none());
    }

    #[test]
    fn self_intersection_rejected() {
        let r = Boundary::from_arcs(&[vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 0.0),
        ]]);
        assert!(matches!(r, Err(CurveError::SelfIntersecting { .. })));
    }

    #[test]
    fn signed_distance_matches_ray_cast() {
        // L-shaped (re-entrant) domain
        let b = Boundary::from_arcs(&[vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(-1.0, 1.0),
            Point::new(-1.0, -1.0),
            Point::new(0.0, -1.0),
            Point::new(0.0, 0.0),
        ]]);
        let b = b.unwrap();
        let mut k = 0u32;
        for i in -14..14 {
            for j in -14..14 {
                let p = Point::new(i as f64 * 0.083 + 0.004, j as f64 * 0.083 + 0.007);
                if b.nearest(p).dist < 1e-3 {
                    continue;
                }
                assert_eq!(
                    b.signed_distance(p) < 0.0,
                    b.winding_contains(p),
                    "mismatch at {p:?}"
                );
                k += 1;
            }
        }
        assert!(k > 500);
    }
}

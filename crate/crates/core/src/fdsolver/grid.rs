//! Lattice construction and node classification.
//!
//! The grid is a uniform lattice clipped to the domain.  Interior lattice
//! points become unknowns with four axis arms; where an arm crosses the
//! boundary it is shortened to the crossing point, which becomes a boundary
//! node carrying the nonlocal boundary row (Shortley–Weller treatment).
//! Lattice points that fall exactly on the boundary become boundary nodes
//! too, so on polygon-aligned grids the full diagonal stencil stays
//! available.  Declared corner points always become nodes with the pinned
//! row `u = 0`.

use std::collections::HashMap;

use serde::Serialize;

use crate::geometry::{Domain, Point};
use crate::tol;

use super::FdError;

/// Classification of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Interior,
    /// On the open boundary arc with this index.
    Boundary {
        arc: usize,
    },
    /// One of the declared corner points (pinned to zero).
    Corner {
        corner: usize,
    },
}

/// One axis arm of an interior node: the neighbor node reached by walking
/// east/west/north/south until a node or the boundary is met.
#[derive(Clone, Copy, Debug)]
pub struct Arm {
    pub node: usize,
    pub len: f64,
}

/// Interpolation data for one nonlocal term `b(y)·u(Ω(y))` at a boundary
/// node: bilinear weights over a fully interior lattice cell.
#[derive(Clone, Debug)]
pub struct MapStencil {
    /// Index into the spec's map list.
    pub map: usize,
    /// The weight `b(y)` at this node.
    pub weight: f64,
    /// Cell corner node ids, order SW, SE, NW, NE.
    pub nodes: [usize; 4],
    /// Bilinear weights (nonnegative, summing to 1).
    pub coeffs: [f64; 4],
    /// The exact image point `Ω(y)`.
    pub image: Point,
    /// Distance from the image to the interpolation point after the
    /// shallow-image fallback (0 when the image's own cell was usable).
    pub shift: f64,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub pos: Point,
    pub kind: NodeKind,
    /// Lattice coordinates for on-lattice nodes.
    pub lattice: Option<(i64, i64)>,
    /// E, W, N, S arms (interior nodes only).
    pub arms: Option<[Arm; 4]>,
    /// Nonlocal terms (boundary nodes only).
    pub maps: Vec<MapStencil>,
    /// True when all four arms have full length and all four diagonal
    /// lattice neighbors are nodes; required by the mixed-derivative stencil.
    pub regular: bool,
    /// NE, NW, SE, SW node ids, when `regular`.
    pub diag: Option<[usize; 4]>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct NodeCounts {
    pub interior: usize,
    pub boundary: usize,
    pub corner: usize,
}

impl NodeCounts {
    pub fn total(&self) -> usize {
        self.interior + self.boundary + self.corner
    }
}

/// A fallback engagement for a shallow map image: `(node, map, shift)`.
pub type ShallowShift = (usize, usize, f64);

pub struct Grid {
    pub h: f64,
    /// Lattice origin (bounding-box corner); node (i, j) sits at
    /// `origin + (i·h, j·h)`.
    pub origin: Point,
    pub nodes: Vec<Node>,
    pub counts: NodeCounts,
    /// Mesh threshold from the drift-vs-diffusion gate `h·|p| < 2c₀`.
    pub h_star: f64,
    /// Sampled ellipticity floor used for the gate.
    pub c0: f64,
    /// Logged shallow-image fallbacks.
    pub shallow_shifts: Vec<ShallowShift>,
    lattice_ids: HashMap<(i64, i64), usize>,
}

impl Grid {
    pub fn node_at_lattice(&self, i: i64, j: i64) -> Option<usize> {
        self.lattice_ids.get(&(i, j)).copied()
    }

    /// Node nearest to `p` (any kind).
    pub fn nearest_node(&self, p: Point) -> usize {
        self.nodes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.pos.dist(p).total_cmp(&b.1.pos.dist(p)))
            .map(|(i, _)| i)
            .expect("grid has nodes")
    }

    pub fn interior_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Interior)
            .map(|(i, _)| i)
    }
}

/// One value per grid node.
#[derive(Clone, Debug, Serialize)]
pub struct GridField {
    pub values: Vec<f64>,
    /// The resolvent parameter this field was solved at, when applicable.
    pub q: Option<f64>,
}

impl GridField {
    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        Self {
            values: grid.nodes.iter().map(|n| f(n.pos)).collect(),
            q: None,
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            values: vec![c; grid.nodes.len()],
            q: None,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Discrete L² norm, cell-weighted by `h²`.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        (grid.h * grid.h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Pins corner-node values to exactly zero (membership in the space of
    /// functions vanishing on the corner set).
    pub fn snap_corners(&mut self, grid: &Grid) {
        for (i, n) in grid.nodes.iter().enumerate() {
            if matches!(n.kind, NodeKind::Corner { .. }) {
                self.values[i] = 0.0;
            }
        }
    }
}

const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Builds the clipped lattice with node classification, Shortley–Weller
/// arms, and bilinear interpolation stencils for every nonlocal term.
pub fn build_grid(domain: &Domain, h: f64) -> Result<Grid, FdError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(FdError::BadStep(h));
    }
    let (c0, sup_drift) = domain.coefficient_ranges();
    let h_star = if sup_drift > 0.0 {
        2.0 * c0 / sup_drift
    } else {
        f64::INFINITY
    };
    if h >= h_star {
        return Err(FdError::StepTooCoarse { h, h_star });
    }

    let boundary = &domain.boundary;
    let (lo, hi) = boundary.bbox;
    let nx = ((hi.x - lo.x) / h + 0.5).ceil() as i64;
    let ny = ((hi.y - lo.y) / h + 0.5).ceil() as i64;
    let pos_of = |i: i64, j: i64| Point::new(lo.x + i as f64 * h, lo.y + j as f64 * h);
    let tol_on = 1e-6 * h;
    let corner_tol = 1e-6 * h;

    // Lattice classification: 0 outside, 1 interior, 2 on-boundary.
    let idx = |i: i64, j: i64| (j * (nx + 1) + i) as usize;
    let mut class = vec![0u8; ((nx + 1) * (ny + 1)) as usize];
    for j in 0..=ny {
        for i in 0..=nx {
            let sd = boundary.signed_distance(pos_of(i, j));
            class[idx(i, j)] = if sd < -tol_on {
                1
            } else if sd <= tol_on {
                2
            } else {
                0
            };
        }
    }

    let nearest_corner = |p: Point| -> Option<usize> {
        domain
            .spec
            .corners
            .iter()
            .enumerate()
            .filter(|(_, g)| g.dist(p) <= corner_tol)
            .map(|(ci, _)| ci)
            .next()
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut lattice_ids: HashMap<(i64, i64), usize> = HashMap::new();
    let push_node = |nodes: &mut Vec<Node>, n: Node| -> usize {
        nodes.push(n);
        nodes.len() - 1
    };

    // Pass 1: interior lattice nodes, in row-major order.
    for j in 0..=ny {
        for i in 0..=nx {
            if class[idx(i, j)] == 1 {
                let id = push_node(
                    &mut nodes,
                    Node {
                        pos: pos_of(i, j),
                        kind: NodeKind::Interior,
                        lattice: Some((i, j)),
                        arms: None,
                        maps: Vec::new(),
                        regular: false,
                        diag: None,
                    },
                );
                lattice_ids.insert((i, j), id);
            }
        }
    }
    if nodes.is_empty() {
        return Err(FdError::EmptyGrid);
    }

    // Pass 2: on-lattice boundary points with at least one interior
    // 8-neighbor become nodes (they serve as arm ends and diagonal stencil
    // points on polygon-aligned grids).
    for j in 0..=ny {
        for i in 0..=nx {
            if class[idx(i, j)] != 2 {
                continue;
            }
            let has_interior_neighbor = (-1..=1).any(|dj: i64| {
                (-1..=1).any(|di: i64| {
                    let (a, b) = (i + di, j + dj);
                    (di != 0 || dj != 0)
                        && (0..=nx).contains(&a)
                        && (0..=ny).contains(&b)
                        && class[idx(a, b)] == 1
                })
            });
            if !has_interior_neighbor {
                continue;
            }
            let pos = pos_of(i, j);
            let kind = match nearest_corner(pos) {
                Some(ci) => NodeKind::Corner { corner: ci },
                None => {
                    let near = boundary.nearest(pos);
                    NodeKind::Boundary {
                        arc: boundary.arc_of_segment(near.seg),
                    }
                }
            };
            let id = push_node(
                &mut nodes,
                Node {
                    pos,
                    kind,
                    lattice: Some((i, j)),
                    arms: None,
                    maps: Vec::new(),
                    regular: false,
                    diag: None,
                },
            );
            lattice_ids.insert((i, j), id);
        }
    }

    // Pass 3: arms.  Off-lattice boundary crossings are created on demand
    // and deduplicated by quantized position.
    let quant = 1e-6 * h;
    let key_of = |p: Point| ((p.x / quant).round() as i64, (p.y / quant).round() as i64);
    let mut crossing_ids: HashMap<(i64, i64), usize> = HashMap::new();
    let interior_count = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Interior)
        .count();
    for id in 0..interior_count {
        let (i, j) = nodes[id].lattice.expect("interior nodes are on-lattice");
        let pos = nodes[id].pos;
        let mut arms = [Arm { node: 0, len: 0.0 }; 4];
        for (d, (di, dj)) in DIRS.iter().enumerate() {
            let (a, b) = (i + di, j + dj);
            let neighbor_id = if (0..=nx).contains(&a) && (0..=ny).contains(&b) {
                lattice_ids.get(&(a, b)).copied()
            } else {
                None
            };
            if let Some(nid) = neighbor_id {
                arms[d] = Arm { node: nid, len: h };
                continue;
            }
            // The arm leaves the domain: find the first boundary crossing.
            let target = Point::new(pos.x + *di as f64 * h, pos.y + *dj as f64 * h);
            let hit = boundary
                .segment_hit(pos, target)
                .ok_or(FdError::ArmCastFailed { x: pos.x, y: pos.y })?;
            let cross = hit.point;
            let key = key_of(cross);
            let nid = match crossing_ids.get(&key) {
                Some(&nid) => nid,
                None => {
                    let kind = match nearest_corner(cross) {
                        Some(ci) => NodeKind::Corner { corner: ci },
                        None => NodeKind::Boundary {
                            arc: boundary.arc_of_segment(hit.seg),
                        },
                    };
                    let nid = push_node(
                        &mut nodes,
                        Node {
                            pos: cross,
                            kind,
                            lattice: None,
                            arms: None,
                            maps: Vec::new(),
                            regular: false,
                            diag: None,
                        },
                    );
                    crossing_ids.insert(key, nid);
                    nid
                }
            };
            let len = (hit.t * h).max(tol_on);
            arms[d] = Arm { node: nid, len };
        }
        // Regularity: full arms plus the four diagonal lattice neighbors.
        let full = arms.iter().all(|a| (a.len - h).abs() <= 1e-9 * h);
        let diag_ids: Vec<Option<usize>> = [(1, 1), (-1, 1), (1, -1), (-1, -1)]
            .iter()
            .map(|(di, dj)| lattice_ids.get(&(i + di, j + dj)).copied())
            .collect();
        let regular = full && diag_ids.iter().all(|d| d.is_some());
        let node = &mut nodes[id];
        node.arms = Some(arms);
        node.regular = regular;
        if regular {
            node.diag = Some([
                diag_ids[0].unwrap(),
                diag_ids[1].unwrap(),
                diag_ids[2].unwrap(),
                diag_ids[3].unwrap(),
            ]);
        }
    }

    // Pass 4: declared corners that no lattice point or crossing realized.
    for (ci, g) in domain.spec.corners.iter().enumerate() {
        let already = nodes
            .iter()
            .any(|n| matches!(n.kind, NodeKind::Corner { corner } if corner == ci));
        if !already {
            push_node(
                &mut nodes,
                Node {
                    pos: *g,
                    kind: NodeKind::Corner { corner: ci },
                    lattice: None,
                    arms: None,
                    maps: Vec::new(),
                    regular: false,
                    diag: None,
                },
            );
        }
    }

    // Pass 5: nonlocal interpolation stencils for boundary nodes.
    let mut shallow_shifts = Vec::new();
    let interior_flag: Vec<bool> = nodes.iter().map(|n| n.kind == NodeKind::Interior).collect();
    let cell_fully_interior = |ci: i64, cj: i64| -> Option<[usize; 4]> {
        let ids = [
            lattice_ids.get(&(ci, cj)),
            lattice_ids.get(&(ci + 1, cj)),
            lattice_ids.get(&(ci, cj + 1)),
            lattice_ids.get(&(ci + 1, cj + 1)),
        ];
        let mut out = [0usize; 4];
        for (k, id) in ids.iter().enumerate() {
            match id {
                Some(&v) if interior_flag[v] => out[k] = v,
                _ => return None,
            }
        }
        Some(out)
    };
    for id in 0..nodes.len() {
        let arc = match nodes[id].kind {
            NodeKind::Boundary { arc } => arc,
            _ => continue,
        };
        let pos = nodes[id].pos;
        let mut stencils = Vec::new();
        for mi in domain.maps_on_arc(arc) {
            let weight = domain.weight(mi, pos);
            if weight <= 0.0 {
                continue;
            }
            let image = domain.spec.maps[mi].transform.apply(pos);
            // Candidate cells near the image, preferring the smallest
            // clamped displacement; ties broken by cell index for
            // determinism.
            let ci0 = ((image.x - lo.x) / h).floor() as i64;
            let cj0 = ((image.y - lo.y) / h).floor() as i64;
            let mut best: Option<(f64, i64, i64, [usize; 4], Point)> = None;
            let reach = tol::MAX_IMAGE_SHIFT_H.ceil() as i64 + 1;
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (ci, cj) = (ci0 + di, cj0 + dj);
                    let Some(cell) = cell_fully_interior(ci, cj) else {
                        continue;
                    };
                    let x0 = lo.x + ci as f64 * h;
                    let y0 = lo.y + cj as f64 * h;
                    let clamped = Point::new(image.x.clamp(x0, x0 + h), image.y.clamp(y0, y0 + h));
                    let dist = clamped.dist(image);
                    let better = match &best {
                        None => true,
                        Some((bd, bi, bj, _, _)) => {
                            dist < bd - 1e-15 || (dist <= bd + 1e-15 && (ci, cj) < (*bi, *bj))
                        }
                    };
                    if better {
                        best = Some((dist, ci, cj, cell, clamped));
                    }
                }
            }
            let Some((shift, ci, cj, cell, at)) = best else {
                return Err(FdError::MapImageTooShallow {
                    map: mi,
                    x: pos.x,
                    y: pos.y,
                });
            };
            if shift > tol::MAX_IMAGE_SHIFT_H * h {
                return Err(FdError::MapImageTooShallow {
                    map: mi,
                    x: pos.x,
                    y: pos.y,
                });
            }
            let x0 = lo.x + ci as f64 * h;
            let y0 = lo.y + cj as f64 * h;
            let tx = ((at.x - x0) / h).clamp(0.0, 1.0);
            let ty = ((at.y - y0) / h).clamp(0.0, 1.0);
            let coeffs = [
                (1.0 - tx) * (1.0 - ty),
                tx * (1.0 - ty),
                (1.0 - tx) * ty,
                tx * ty,
            ];
            if shift > tol_on {
                shallow_shifts.push((id, mi, shift));
            }
            stencils.push(MapStencil {
                map: mi,
                weight,
                nodes: cell,
                coeffs,
                image,
                shift,
            });
        }
        nodes[id].maps = stencils;
    }

    let mut counts = NodeCounts::default();
    for n in &nodes {
        match n.kind {
            NodeKind::Interior => counts.interior += 1,
            NodeKind::Boundary { .. } => counts.boundary += 1,
            NodeKind::Corner { .. } => counts.corner += 1,
        }
    }

    Ok(Grid {
        h,
        origin: lo,
        nodes,
        counts,
        h_star,
        c0,
        shallow_shifts,
        lattice_ids,
    })
}

//! Ready-made domain specifications used throughout the tests, examples,
//! and command-line tools.
//!
//! All presets use the unit-scale geometries that the verification suite
//! pins its reference values to; they are ordinary [`DomainSpec`] values and
//! can be modified freely before validation.

use crate::geometry::{
    AffineMap, BoundaryMap, Coefficient, DomainSpec, OperatorCoefficients, Point,
};
use std::f64::consts::{FRAC_PI_4, PI};

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// Unit square `[0,1]²` with a homogeneous (purely local) boundary
/// condition and one declared corner at the origin.
pub fn square_dirichlet() -> DomainSpec {
    DomainSpec {
        name: "square-dirichlet".into(),
        arcs: vec![
            vec![p(0.0, 0.0), p(1.0, 0.0)],
            vec![p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(0.0, 0.0)],
        ],
        corners: vec![p(0.0, 0.0)],
        maps: vec![],
        coefficients: OperatorCoefficients::laplacian(),
        eps_override: None,
        samples_per_arc: 256,
    }
}

/// Unit square with one nonlocal term: on the bottom edge near the origin,
/// `u(y)` is coupled with weight `1/2` to `u` at the point obtained by
/// rotating `y` by `π/4` about the origin and shrinking by `1/2`, which
/// lies on the diagonal strictly inside the square.
pub fn square_nonlocal() -> DomainSpec {
    let mut spec = square_dirichlet();
    spec.name = "square-nonlocal".into();
    spec.maps = vec![BoundaryMap {
        arc: 0,
        anchor: 0,
        amplitude: 0.5,
        transform: AffineMap::similarity(0.5, FRAC_PI_4, p(0.0, 0.0), p(0.0, 0.0)),
    }];
    spec
}

/// L-shaped domain `[−1,1]² \ [0,1]×[−1,0]` with a re-entrant corner of
/// opening `3π/2` at the origin and a homogeneous boundary condition.
pub fn lshape_dirichlet() -> DomainSpec {
    DomainSpec {
        name: "lshape-dirichlet".into(),
        arcs: vec![
            vec![p(0.0, 0.0), p(1.0, 0.0)],
            vec![
                p(1.0, 0.0),
                p(1.0, 1.0),
                p(-1.0, 1.0),
                p(-1.0, -1.0),
                p(0.0, -1.0),
                p(0.0, 0.0),
            ],
        ],
        corners: vec![p(0.0, 0.0)],
        maps: vec![],
        coefficients: OperatorCoefficients::laplacian(),
        eps_override: None,
        samples_per_arc: 256,
    }
}

/// L-shaped domain with one nonlocal term at the re-entrant corner: points
/// of the bottom-right leg near the origin couple with weight `1/2` to
/// points on the interior bisector (rotation `3π/4`, contraction `1/2`).
pub fn lshape_nonlocal() -> DomainSpec {
    let mut spec = lshape_dirichlet();
    spec.name = "lshape-nonlocal".into();
    spec.maps = vec![BoundaryMap {
        arc: 0,
        anchor: 0,
        amplitude: 0.5,
        transform: AffineMap::similarity(0.5, 0.75 * PI, p(0.0, 0.0), p(0.0, 0.0)),
    }];
    spec
}

/// Regular `n`-gon inscribed in the unit circle, with no declared corners:
/// a polygonal stand-in for the unit disk (each vertex opening tends to π).
pub fn disk_polygon(n: usize) -> DomainSpec {
    assert!(n >= 8, "use at least 8 sides for a disk stand-in");
    let mut pts: Vec<Point> = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            p(t.cos(), t.sin())
        })
        .collect();
    pts.push(pts[0]);
    DomainSpec {
        name: format!("disk-{n}gon"),
        arcs: vec![pts],
        corners: vec![],
        maps: vec![],
        coefficients: OperatorCoefficients::laplacian(),
        eps_override: None,
        samples_per_arc: 512,
    }
}

/// Unit square with a variable-coefficient operator: anisotropic away from
/// the corner but isotropic at it, with drift and a nonpositive
/// zeroth-order term.  Exercises the general-coefficient paths.
pub fn square_variable() -> DomainSpec {
    let mut spec = square_dirichlet();
    spec.name = "square-variable".into();
    spec.coefficients = OperatorCoefficients {
        p11: Coefficient::Quadratic {
            c: 1.0,
            x: 0.0,
            y: 0.5,
            xx: 0.0,
            xy: 0.0,
            yy: 0.0,
        },
        p12: Coefficient::Constant(0.0),
        p22: Coefficient::Quadratic {
            c: 1.0,
            x: 0.0,
            y: 0.5,
            xx: 0.0,
            xy: 0.0,
            yy: 0.0,
        },
        p1: Coefficient::Constant(0.3),
        p2: Coefficient::Constant(-0.2),
        p0: Coefficient::Quadratic {
            c: 0.0,
            x: -0.5,
            y: 0.0,
            xx: 0.0,
            xy: 0.0,
            yy: 0.0,
        },
    };
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_spec;

    #[test]
    fn all_presets_validate() {
        for spec in [
            square_dirichlet(),
            square_nonlocal(),
            lshape_dirichlet(),
            lshape_nonlocal(),
            disk_polygon(64),
            square_variable(),
        ] {
            let name = spec.name.clone();
            let (_, report) = validate_spec(spec).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(report.all_passed(), "{name}: failed {:?}", report.failed());
        }
    }
}

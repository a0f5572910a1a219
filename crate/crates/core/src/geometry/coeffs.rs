//! Coefficient fields of the elliptic operator.
//!
//! The operator is `P u = p11·u_xx + 2·p12·u_xy + p22·u_yy + p1·u_x + p2·u_y
//! + p0·u`, with each coefficient either a constant or a polynomial of total
//! degree ≤ 2.  That family is closed under exact evaluation and exact first
//! derivatives, which the barrier construction uses.

use super::point::Point;
use serde::{Deserialize, Serialize};

/// A scalar coefficient: constant, or polynomial of total degree ≤ 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Constant(f64),
    Quadratic {
        #[serde(default)]
        c: f64,
        #[serde(default)]
        x: f64,
        #[serde(default)]
        y: f64,
        #[serde(default)]
        xx: f64,
        #[serde(default)]
        xy: f64,
        #[serde(default)]
        yy: f64,
    },
}

impl Coefficient {
    pub fn eval(&self, p: Point) -> f64 {
        match *self {
            Coefficient::Constant(v) => v,
            Coefficient::Quadratic {
                c,
                x,
                y,
                xx,
                xy,
                yy,
            } => c + x * p.x + y * p.y + xx * p.x * p.x + xy * p.x * p.y + yy * p.y * p.y,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match *self {
            Coefficient::Constant(v) => v == 0.0,
            Coefficient::Quadratic {
                c,
                x,
                y,
                xx,
                xy,
                yy,
            } => c == 0.0 && x == 0.0 && y == 0.0 && xx == 0.0 && xy == 0.0 && yy == 0.0,
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(v)
    }
}

/// Coefficients of the second-order operator `P`.
///
/// The principal part is stored as the symmetric matrix
/// `[[p11, p12], [p12, p22]]`; symmetry holds by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorCoefficients {
    pub p11: Coefficient,
    pub p12: Coefficient,
    pub p22: Coefficient,
    #[serde(default = "zero_coefficient")]
    pub p1: Coefficient,
    #[serde(default = "zero_coefficient")]
    pub p2: Coefficient,
    #[serde(default = "zero_coefficient")]
    pub p0: Coefficient,
}

fn zero_coefficient() -> Coefficient {
    Coefficient::Constant(0.0)
}

impl OperatorCoefficients {
    /// The Laplacian: `p11 = p22 = 1`, everything else zero.
    pub fn laplacian() -> Self {
        Self {
            p11: 1.0.into(),
            p12: 0.0.into(),
            p22: 1.0.into(),
            p1: 0.0.into(),
            p2: 0.0.into(),
            p0: 0.0.into(),
        }
    }

    /// Smaller eigenvalue of the principal-part matrix at `p`.
    pub fn min_eigenvalue(&self, p: Point) -> f64 {
        let a = self.p11.eval(p);
        let b = self.p12.eval(p);
        let c = self.p22.eval(p);
        0.5 * ((a + c) - ((a - c).powi(2) + 4.0 * b * b).sqrt())
    }

    /// Magnitude of the drift vector at `p`.
    pub fn drift_norm(&self, p: Point) -> f64 {
        (self.p1.eval(p).powi(2) + self.p2.eval(p).powi(2)).sqrt()
    }

    /// `P u` at a point, given values of `u` and its derivatives there.
    pub fn apply(&self, p: Point, u: f64, ux: f64, uy: f64, uxx: f64, uxy: f64, uyy: f64) -> f64 {
        self.p11.eval(p) * uxx
            + 2.0 * self.p12.eval(p) * uxy
            + self.p22.eval(p) * uyy
            + self.p1.eval(p) * ux
            + self.p2.eval(p) * uy
            + self.p0.eval(p) * u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_eval() {
        let c = Coefficient::Quadratic {
            c: 1.0,
            x: 2.0,
            y: 0.0,
            xx: 0.0,
            xy: 3.0,
            yy: -1.0,
        };
        let v = c.eval(Point::new(2.0, 0.5));
        assert!((v - (1.0 + 4.0 + 3.0 - 0.25)).abs() < 1e-14);
    }

    #[test]
    fn laplacian_is_uniformly_elliptic() {
        let c = OperatorCoefficients::laplacian();
        assert!((c.min_eigenvalue(Point::new(3.0, -7.0)) - 1.0).abs() < 1e-14);
        assert_eq!(c.drift_norm(Point::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn coefficient_json_forms() {
        let c: Coefficient = serde_json::from_str("2.5").unwrap();
        assert_eq!(c, Coefficient::Constant(2.5));
        let q: Coefficient = serde_json::from_str(r#"{"c": 1.0, "xy": -0.5}"#).unwrap();
        assert!((q.eval(Point::new(2.0, 2.0)) - (1.0 - 2.0)).abs() < 1e-14);
    }
}

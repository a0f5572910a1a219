//! Plane points/vectors and affine maps of the plane.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product `self × other`.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Polar angle in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    /// Counterclockwise perpendicular (rotation by +π/2).
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Affine map of the plane, `y ↦ A·y + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Row-major linear part.
    pub a: [[f64; 2]; 2],
    pub t: Point,
}

/// Rotation–homothety parameters fitted to the linear part of an affine map,
/// together with the relative residual of the fit.
#[derive(Clone, Copy, Debug)]
pub struct SimilarityFit {
    /// Homothety ratio χ > 0.
    pub scale: f64,
    /// Rotation angle θ in `(-π, π]`.
    pub angle: f64,
    /// `‖A − χR(θ)‖_F / ‖A‖_F`.
    pub residual: f64,
}

impl AffineMap {
    /// The similarity `y ↦ target + scale·R(angle)·(y − source)`.
    pub fn similarity(scale: f64, angle: f64, source: Point, target: Point) -> Self {
        let (s, c) = angle.sin_cos();
        let a = [[scale * c, -scale * s], [scale * s, scale * c]];
        // t = target − A·source
        let asrc = Point::new(
            a[0][0] * source.x + a[0][1] * source.y,
            a[1][0] * source.x + a[1][1] * source.y,
        );
        Self {
            a,
            t: target - asrc,
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a[0][0] * p.x + self.a[0][1] * p.y + self.t.x,
            self.a[1][0] * p.x + self.a[1][1] * p.y + self.t.y,
        )
    }

    /// Least-squares rotation–homothety fit of the linear part.
    ///
    /// Writing the linear part as a complex multiplication `z ↦ (u + iv)·z`
    /// plus a conjugate-linear defect, the best fit is
    /// `u = (a11 + a22)/2`, `v = (a21 − a12)/2`; the residual measures the
    /// conjugate-linear defect, which vanishes exactly when the map is a
    /// rotation–homothety.
    pub fn similarity_fit(&self) -> SimilarityFit {
        let [[a11, a12], [a21, a22]] = self.a;
        let u = 0.5 * (a11 + a22);
        let v = 0.5 * (a21 - a12);
        let scale = (u * u + v * v).sqrt();
        let angle = v.atan2(u);
        let norm = (a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22).sqrt();
        let (s, c) = angle.sin_cos();
        let r = [[scale * c, -scale * s], [scale * s, scale * c]];
        let mut defect = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                defect += (self.a[i][j] - r[i][j]).powi(2);
            }
        }
        let residual = if norm > 0.0 {
            defect.sqrt() / norm
        } else {
            f64::INFINITY
        };
        SimilarityFit {
            scale,
            angle,
            residual,
        }
    }
}

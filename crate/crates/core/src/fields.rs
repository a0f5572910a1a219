//! Scalar source and boundary data fields.
//!
//! A [`ScalarField`] is an evaluable function of plane points, used for
//! resolvent right-hand sides, boundary data, and initial values.  Besides
//! the analytic built-ins there is a point-cloud form backed by CSV samples
//! (nearest-neighbor evaluation), so externally produced grids can be fed
//! back in.

use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ScalarField {
    /// Constant value.
    Constant(f64),
    /// `sin(kx·πx)·sin(ky·πy)` — eigenfunctions of the Laplacian on the
    /// unit square with homogeneous boundary values.
    SinPi { kx: f64, ky: f64 },
    /// `a + b·x + c·y`.
    Linear { a: f64, b: f64, c: f64 },
    /// `exp(−((x−x0)² + (y−y0)²) / (2σ²))`.
    Gaussian { x0: f64, y0: f64, sigma: f64 },
    /// Nearest-neighbor interpolation of scattered samples.
    Cloud { samples: Vec<(Point, f64)> },
}

#[derive(Debug, Error)]
pub enum FieldParseError {
    #[error("unrecognized field syntax {0:?}; see `ScalarField::parse`")]
    Syntax(String),
    #[error("field {0:?}: expected {1} numeric parameters")]
    Arity(String, usize),
    #[error("could not read samples: {0}")]
    Io(#[from] std::io::Error),
    #[error("sample file line {0}: expected `x,y,value`")]
    BadSampleLine(usize),
    #[error("sample file is empty")]
    EmptySamples,
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::Constant(0.0)
    }

    pub fn one() -> Self {
        ScalarField::Constant(1.0)
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ScalarField::Constant(v) => *v,
            ScalarField::SinPi { kx, ky } => {
                (kx * std::f64::consts::PI * p.x).sin() * (ky * std::f64::consts::PI * p.y).sin()
            }
            ScalarField::Linear { a, b, c } => a + b * p.x + c * p.y,
            ScalarField::Gaussian { x0, y0, sigma } => {
                let dx = p.x - x0;
                let dy = p.y - y0;
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            }
            ScalarField::Cloud { samples } => samples
                .iter()
                .min_by(|a, b| a.0.dist(p).total_cmp(&b.0.dist(p)))
                .map(|(_, v)| *v)
                .unwrap_or(0.0),
        }
    }

    /// Parses the compact command-line syntax:
    ///
    /// * a bare number — constant field;
    /// * `const:v`;
    /// * `sinpi:kx,ky`;
    /// * `linear:a,b,c`;
    /// * `gaussian:x0,y0,sigma`;
    /// * `csv:path` — nearest-neighbor samples from an `x,y,value` file.
    pub fn parse(s: &str) -> Result<Self, FieldParseError> {
        let s = s.trim();
        if let Ok(v) = s.parse::<f64>() {
            return Ok(ScalarField::Constant(v));
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| FieldParseError::Syntax(s.into()))?;
        let nums = |n: usize| -> Result<Vec<f64>, FieldParseError> {
            let vals: Result<Vec<f64>, _> =
                rest.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == n => Ok(v),
                _ => Err(FieldParseError::Arity(kind.into(), n)),
            }
        };
        match kind {
            "const" => Ok(ScalarField::Constant(nums(1)?[0])),
            "sinpi" => {
                let v = nums(2)?;
                Ok(ScalarField::SinPi { kx: v[0], ky: v[1] })
            }
            "linear" => {
                let v = nums(3)?;
                Ok(ScalarField::Linear {
                    a: v[0],
                    b: v[1],
                    c: v[2],
                })
            }
            "gaussian" => {
                let v = nums(3)?;
                Ok(ScalarField::Gaussian {
                    x0: v[0],
                    y0: v[1],
                    sigma: v[2],
                })
            }
            "csv" => ScalarField::from_csv(Path::new(rest)),
            _ => Err(FieldParseError::Syntax(s.into())),
        }
    }

    /// Loads `x,y,value` lines (header lines are skipped) as a
    /// nearest-neighbor cloud.
    pub fn from_csv(path: &Path) -> Result<Self, FieldParseError> {
        let text = std::fs::read_to_string(path)?;
        let mut samples = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(|t| t.trim()).collect();
            if parts.len() != 3 {
                return Err(FieldParseError::BadSampleLine(ln + 1));
            }
            match (
                parts[0].parse::<f64>(),
                parts[1].parse::<f64>(),
                parts[2].parse::<f64>(),
            ) {
                (Ok(x), Ok(y), Ok(v)) => samples.push((Point::new(x, y), v)),
                _ if ln == 0 => continue, // header row
                _ => return Err(FieldParseError::BadSampleLine(ln + 1)),
            }
        }
        if samples.is_empty() {
            return Err(FieldParseError::EmptySamples);
        }
        Ok(ScalarField::Cloud { samples })
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(v) => write!(f, "const:{v}"),
            ScalarField::SinPi { kx, ky } => write!(f, "sinpi:{kx},{ky}"),
            ScalarField::Linear { a, b, c } => write!(f, "linear:{a},{b},{c}"),
            ScalarField::Gaussian { x0, y0, sigma } => write!(f, "gaussian:{x0},{y0},{sigma}"),
            ScalarField::Cloud { samples } => write!(f, "cloud[{} samples]", samples.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parse_round_trips() {
        let f = ScalarField::parse("1").unwrap();
        assert_eq!(f.eval(Point::new(0.3, 0.7)), 1.0);
        let f = ScalarField::parse("sinpi:1,1").unwrap();
        assert_relative_eq!(f.eval(Point::new(0.5, 0.5)), 1.0, epsilon = 1e-15);
        let f = ScalarField::parse("linear: 1, 2, 3 ").unwrap();
        assert_relative_eq!(f.eval(Point::new(1.0, 1.0)), 6.0);
        assert!(ScalarField::parse("nope:1").is_err());
        assert!(ScalarField::parse("sinpi:1").is_err());
    }

    #[test]
    fn cloud_nearest_neighbor() {
        let f = ScalarField::Cloud {
            samples: vec![(Point::new(0.0, 0.0), 1.0), (Point::new(1.0, 0.0), 2.0)],
        };
        assert_eq!(f.eval(Point::new(0.1, 0.1)), 1.0);
        assert_eq!(f.eval(Point::new(0.9, 0.0)), 2.0);
    }
}

//! JSON reading and writing of [`DomainSpec`] values.
//!
//! The on-disk schema is slightly friendlier than the in-memory types:
//! points are `[x, y]` pairs, and map transforms may be given either as
//! `{"scale", "angle", "source"?, "target"?}` similarities (angles in
//! radians; source/target default to the anchor corner) or as raw
//! `{"matrix", "offset"}` affine maps.

use super::{AffineMap, BoundaryMap, DomainSpec, OperatorCoefficients, Point};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("could not read spec file: {0}")]
    Io(#[from] std::io::Error),
    #[error("spec file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("map {0} references corner {1}, but only {2} corners are declared")]
    BadAnchor(usize, usize, usize),
}

#[derive(Serialize, Deserialize)]
struct FileSpec {
    name: String,
    arcs: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    corners: Vec<[f64; 2]>,
    #[serde(default)]
    maps: Vec<FileMap>,
    coefficients: OperatorCoefficients,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples_per_arc: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct FileMap {
    arc: usize,
    anchor: usize,
    amplitude: f64,
    transform: FileTransform,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FileTransform {
    Similarity {
        scale: f64,
        angle: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<[f64; 2]>,
    },
    Matrix {
        matrix: [[f64; 2]; 2],
        offset: [f64; 2],
    },
}

fn pt(a: [f64; 2]) -> Point {
    Point::new(a[0], a[1])
}

/// Parses a spec from JSON text.
pub fn parse_spec(text: &str) -> Result<DomainSpec, SpecFileError> {
    let file: FileSpec = serde_json::from_str(text)?;
    let corners: Vec<Point> = file.corners.iter().copied().map(pt).collect();
    let mut maps = Vec::with_capacity(file.maps.len());
    for (mi, m) in file.maps.iter().enumerate() {
        let anchor_pt =
            *corners
                .get(m.anchor)
                .ok_or(SpecFileError::BadAnchor(mi, m.anchor, corners.len()))?;
        let transform = match &m.transform {
            FileTransform::Similarity {
                scale,
                angle,
                source,
                target,
            } => AffineMap::similarity(
                *scale,
                *angle,
                source.map(pt).unwrap_or(anchor_pt),
                target.map(pt).unwrap_or(anchor_pt),
            ),
            FileTransform::Matrix { matrix, offset } => AffineMap {
                a: *matrix,
                t: pt(*offset),
            },
        };
        maps.push(BoundaryMap {
            arc: m.arc,
            anchor: m.anchor,
            amplitude: m.amplitude,
            transform,
        });
    }
    Ok(DomainSpec {
        name: file.name,
        arcs: file
            .arcs
            .iter()
            .map(|arc| arc.iter().copied().map(pt).collect())
            .collect(),
        corners,
        maps,
        coefficients: file.coefficients,
        eps_override: file.eps,
        samples_per_arc: file.samples_per_arc.unwrap_or(256),
    })
}

/// Loads a spec from a JSON file.
pub fn load_spec(path: &Path) -> Result<DomainSpec, SpecFileError> {
    parse_spec(&std::fs::read_to_string(path)?)
}

/// Serializes a spec to pretty JSON (transforms in lossless matrix form).
pub fn spec_to_json(spec: &DomainSpec) -> String {
    let file = FileSpec {
        name: spec.name.clone(),
        arcs: spec
            .arcs
            .iter()
            .map(|arc| arc.iter().map(|p| [p.x, p.y]).collect())
            .collect(),
        corners: spec.corners.iter().map(|p| [p.x, p.y]).collect(),
        maps: spec
            .maps
            .iter()
            .map(|m| FileMap {
                arc: m.arc,
                anchor: m.anchor,
                amplitude: m.amplitude,
                transform: FileTransform::Matrix {
                    matrix: m.transform.a,
                    offset: [m.transform.t.x, m.transform.t.y],
                },
            })
            .collect(),
        coefficients: spec.coefficients.clone(),
        eps: spec.eps_override,
        samples_per_arc: Some(spec.samples_per_arc),
    };
    serde_json::to_string_pretty(&file).expect("spec serialization cannot fail")
}

/// Saves a spec as a JSON file.
pub fn save_spec(spec: &DomainSpec, path: &Path) -> Result<(), SpecFileError> {
    std::fs::write(path, spec_to_json(spec))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_spec;
    use crate::presets;
    use approx::assert_relative_eq;

    #[test]
    fn similarity_schema_parses() {
        let text = r#"{
            "name": "square",
            "arcs": [
                [[0,0],[1,0]],
                [[1,0],[1,1],[0,1],[0,0]]
            ],
            "corners": [[0,0]],
            "maps": [{
                "arc": 0, "anchor": 0, "amplitude": 0.5,
                "transform": {"scale": 0.5, "angle": 0.7853981633974483}
            }],
            "coefficients": {"p11": 1, "p12": 0, "p22": 1}
        }"#;
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.maps.len(), 1);
        let fit = spec.maps[0].transform.similarity_fit();
        assert_relative_eq!(fit.scale, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.angle, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        let (_, report) = validate_spec(spec).unwrap();
        assert!(report.all_passed());
    }

    #[test]
    fn json_round_trip_preserves_validation() {
        for spec in [presets::square_nonlocal(), presets::lshape_nonlocal()] {
            let text = spec_to_json(&spec);
            let back = parse_spec(&text).unwrap();
            assert_eq!(back.name, spec.name);
            assert_eq!(back.maps.len(), spec.maps.len());
            let (_, report) = validate_spec(back).unwrap();
            assert!(report.all_passed(), "{}: {:?}", spec.name, report.failed());
        }
    }

    #[test]
    fn bad_anchor_is_reported() {
        let text = r#"{
            "name": "broken",
            "arcs": [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
            "corners": [],
            "maps": [{"arc": 0, "anchor": 3, "amplitude": 0.5,
                      "transform": {"scale": 0.5, "angle": 0.5}}],
            "coefficients": {"p11": 1, "p12": 0, "p22": 1}
        }"#;
        assert!(matches!(
            parse_spec(text),
            Err(SpecFileError::BadAnchor(0, 3, 0))
        ));
    }
}

//! JSON model files.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "name": "AXIAL-1",
//!   "dimension": 3,
//!   "units": "m",
//!   "chains": [{
//!     "base_frame": {"translation": [0, 0, 0], "rotation": [0, 0, 0]},
//!     "elements": [
//!       {"type": "actuated", "motion": "prismatic", "axis": [1, 0, 0], "home": 0.0},
//!       {"type": "elastic", "motion": "prismatic", "axis": [1, 0, 0], "stiffness": 1e6, "rest": 0.0},
//!       {"type": "fixed", "translation": [1, 0, 0], "rotation": [0, 0, 0]}
//!     ],
//!     "assembly_error": [0, 0, 0]
//!   }]
//! }
//! ```
//!
//! With `"units": "mm"` every length is in mm, translational stiffness in
//! N/mm and rotational stiffness in N·mm/rad. Rotations are always radians.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    AssemblyErrorBound, ChainElement, ChainModel, Dimension, Frame, JointElement, JointRole, ManipulatorModel, Motion,
};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    M,
    Mm,
}

impl LengthUnit {
    /// Metres per file unit.
    pub fn to_si(self) -> f64 {
        match self {
            LengthUnit::M => 1.0,
            LengthUnit::Mm => 1e-3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LengthUnit::M => "m",
            LengthUnit::Mm => "mm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "m" => Some(LengthUnit::M),
            "mm" => Some(LengthUnit::Mm),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema: u32,
    name: String,
    dimension: usize,
    units: LengthUnit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    commanded: Option<Vec<usize>>,
    /// `[translation, rotation]` bound on ‖ε_i‖.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assembly_error_bound: Option<[f64; 2]>,
    chains: Vec<ChainFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    base_frame: FrameFile,
    elements: Vec<ElementFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assembly_error: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameFile {
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default)]
    rotation: [f64; 3],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MotionFile {
    Prismatic,
    Revolute,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ElementFile {
    Fixed {
        #[serde(default)]
        translation: [f64; 3],
        #[serde(default)]
        rotation: [f64; 3],
    },
    Actuated {
        motion: MotionFile,
        axis: [f64; 3],
        #[serde(default)]
        home: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 2]>,
    },
    Passive {
        motion: MotionFile,
        axis: [f64; 3],
        #[serde(default)]
        home: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 2]>,
    },
    Elastic {
        motion: MotionFile,
        axis: [f64; 3],
        stiffness: f64,
        #[serde(default)]
        rest: f64,
    },
}

fn motion_from(m: MotionFile) -> Motion {
    match m {
        MotionFile::Prismatic => Motion::Prismatic,
        MotionFile::Revolute => Motion::Revolute,
    }
}

fn motion_to(m: Motion) -> MotionFile {
    match m {
        Motion::Prismatic => MotionFile::Prismatic,
        Motion::Revolute => MotionFile::Revolute,
    }
}

/// Scale factors from file units to SI for one joint.
struct JointScale {
    value: f64,
    stiffness: f64,
}

fn joint_scale(motion: Motion, unit: LengthUnit) -> JointScale {
    let l = unit.to_si();
    match motion {
        // N/mm → N/m
        Motion::Prismatic => JointScale {
            value: l,
            stiffness: 1.0 / l,
        },
        // N·mm/rad → N·m/rad
        Motion::Revolute => JointScale {
            value: 1.0,
            stiffness: l,
        },
    }
}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn frame_from(f: &FrameFile, l: f64) -> Frame {
    Frame::new(Vector3::from(f.translation) * l, Vector3::from(f.rotation))
}

fn frame_to(f: &Frame, l: f64) -> FrameFile {
    let t = f.translation / l;
    FrameFile {
        translation: [t.x, t.y, t.z],
        rotation: [f.rotation.x, f.rotation.y, f.rotation.z],
    }
}

/// Parse a model file without checking model invariants (schema only).
pub fn parse_model_unchecked(text: &str) -> Result<ManipulatorModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema_err(path, e.into_inner().to_string())
    })?;

    if file.schema != SCHEMA_VERSION {
        return Err(schema_err(
            "schema",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.schema),
        ));
    }
    let dimension = Dimension::from_size(file.dimension)
        .ok_or_else(|| schema_err("dimension", format!("must be 3 or 6, got {}", file.dimension)))?;
    let d = dimension.size();
    let unit = file.units;
    let l = unit.to_si();

    let mut chains = Vec::with_capacity(file.chains.len());
    for (ci, cf) in file.chains.iter().enumerate() {
        let mut elements = Vec::with_capacity(cf.elements.len());
        for ef in &cf.elements {
            let element = match ef {
                ElementFile::Fixed { translation, rotation } => ChainElement::Fixed(frame_from(
                    &FrameFile {
                        translation: *translation,
                        rotation: *rotation,
                    },
                    l,
                )),
                ElementFile::Actuated {
                    motion,
                    axis,
                    home,
                    bounds,
                }
                | ElementFile::Passive {
                    motion,
                    axis,
                    home,
                    bounds,
                } => {
                    let motion = motion_from(*motion);
                    let s = joint_scale(motion, unit);
                    let home = home * s.value;
                    let bounds = bounds.map(|[lo, hi]| (lo * s.value, hi * s.value));
                    let role = if matches!(ef, ElementFile::Actuated { .. }) {
                        JointRole::Actuated { home, bounds }
                    } else {
                        JointRole::Passive { home, bounds }
                    };
                    ChainElement::Joint(JointElement {
                        motion,
                        axis: Vector3::from(*axis),
                        role,
                    })
                }
                ElementFile::Elastic {
                    motion,
                    axis,
                    stiffness,
                    rest,
                } => {
                    let motion = motion_from(*motion);
                    let s = joint_scale(motion, unit);
                    ChainElement::Joint(JointElement {
                        motion,
                        axis: Vector3::from(*axis),
                        role: JointRole::Elastic {
                            stiffness: stiffness * s.stiffness,
                            rest: rest * s.value,
                        },
                    })
                }
            };
            elements.push(element);
        }
        let assembly_error = match &cf.assembly_error {
            None => DVector::zeros(d),
            Some(v) if v.len() != d => {
                return Err(schema_err(
                    format!("chains[{ci}].assembly_error"),
                    format!("expected {d} values, got {}", v.len()),
                ))
            }
            Some(v) => DVector::from_iterator(
                d,
                v.iter()
                    .enumerate()
                    .map(|(k, &e)| if dimension.is_translational(k) { e * l } else { e }),
            ),
        };
        chains.push(ChainModel {
            name: cf.name.clone().unwrap_or_else(|| format!("chain{ci}")),
            base_frame: frame_from(&cf.base_frame, l),
            elements,
            assembly_error,
        });
    }

    let error_bound = file
        .assembly_error_bound
        .map(|[t, r]| AssemblyErrorBound {
            translation: t * l,
            rotation: r,
        })
        .unwrap_or_default();

    Ok(ManipulatorModel {
        name: file.name,
        dimension,
        chains,
        commanded: file.commanded.unwrap_or_else(|| (0..d).collect()),
        error_bound,
    })
}

/// Parse and validate a model file.
pub fn parse_model(text: &str) -> Result<ManipulatorModel> {
    parse_model_unchecked(text)?.checked()
}

/// SHA-256 of the model's canonical SI serialization, as lowercase hex.
///
/// Equal models hash equal regardless of the units or layout of the file
/// they were read from.
pub fn model_hash(model: &ManipulatorModel) -> String {
    Sha256::digest(serialize_model(model, LengthUnit::M).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Serialize a model to the documented JSON schema.
pub fn serialize_model(model: &ManipulatorModel, unit: LengthUnit) -> String {
    let l = unit.to_si();
    let d = model.d();
    let chains = model
        .chains
        .iter()
        .map(|c| ChainFile {
            name: Some(c.name.clone()),
            base_frame: frame_to(&c.base_frame, l),
            elements: c
                .elements
                .iter()
                .map(|e| match e {
                    ChainElement::Fixed(f) => {
                        let ff = frame_to(f, l);
                        ElementFile::Fixed {
                            translation: ff.translation,
                            rotation: ff.rotation,
                        }
                    }
                    ChainElement::Joint(j) => {
                        let s = joint_scale(j.motion, unit);
                        let motion = motion_to(j.motion);
                        let axis = [j.axis.x, j.axis.y, j.axis.z];
                        match j.role {
                            JointRole::Actuated { home, bounds } => ElementFile::Actuated {
                                motion,
                                axis,
                                home: home / s.value,
                                bounds: bounds.map(|(lo, hi)| [lo / s.value, hi / s.value]),
                            },
                            JointRole::Passive { home, bounds } => ElementFile::Passive {
                                motion,
                                axis,
                                home: home / s.value,
                                bounds: bounds.map(|(lo, hi)| [lo / s.value, hi / s.value]),
                            },
                            JointRole::Elastic { stiffness, rest } => ElementFile::Elastic {
                                motion,
                                axis,
                                stiffness: stiffness / s.stiffness,
                                rest: rest / s.value,
                            },
                        }
                    }
                })
                .collect(),
            assembly_error: Some(
                (0..d)
                    .map(|k| {
                        let e = c.assembly_error[k];
                        if model.dimension.is_translational(k) {
                            e / l
                        } else {
                            e
                        }
                    })
                    .collect(),
            ),
        })
        .collect();
    let default_commanded: Vec<usize> = (0..d).collect();
    let file = ModelFile {
        schema: SCHEMA_VERSION,
        name: model.name.clone(),
        dimension: d,
        units: unit,
        commanded: (model.commanded != default_commanded).then(|| model.commanded.clone()),
        assembly_error_bound: (model.error_bound != AssemblyErrorBound::default())
            .then(|| [model.error_bound.translation / l, model.error_bound.rotation]),
        chains,
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_fixture, FIXTURE_NAMES};

    #[test]
    fn fixtures_round_trip_bit_exact() {
        for name in FIXTURE_NAMES {
            let model = builtin_fixture(name).unwrap();
            let text = serialize_model(&model, LengthUnit::M);
            let back = parse_model(&text).unwrap();
            assert_eq!(back, model, "{name}");
        }
    }

    #[test]
    fn millimetre_file_is_converted_to_si() {
        let model = builtin_fixture("PLANAR-RP").unwrap();
        let text = serialize_model(&model, LengthUnit::Mm);
        assert!(text.contains("\"mm\""));
        let back = parse_model(&text).unwrap();
        let (a, b) = (back.chains[0].joint_stiffness(), model.chains[0].joint_stiffness());
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 1e-12 * b[k]);
        }
        match (&back.chains[0].elements[2], &model.chains[0].elements[2]) {
            (ChainElement::Fixed(fa), ChainElement::Fixed(fb)) => {
                assert!((fa.translation - fb.translation).norm() < 1e-15)
            }
            _ => panic!("layout changed"),
        }
    }

    #[test]
    fn zero_stiffness_file_is_rejected() {
        let text = serialize_model(&builtin_fixture("AXIAL-1").unwrap(), LengthUnit::M)
            .replace("\"stiffness\": 1000000.0", "\"stiffness\": 0.0");
        let err = parse_model(&text).unwrap_err();
        assert!(err.to_string().contains("non-positive stiffness"), "{err}");
        // still loadable without checks, for diagnostics
        assert!(parse_model_unchecked(&text).is_ok());
    }

    #[test]
    fn assembly_error_passes_through() {
        let mut model = builtin_fixture("TWO-ORTHO").unwrap();
        model.chains[0].assembly_error = DVector::from_vec(vec![1e-4, 0.0, 0.0]);
        let back = parse_model(&serialize_model(&model, LengthUnit::M)).unwrap();
        assert_eq!(back.chains[0].assembly_error.as_slice(), &[1e-4, 0.0, 0.0]);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let text = serialize_model(&builtin_fixture("AXIAL-1").unwrap(), LengthUnit::M)
            .replace("\"stiffness\": 1000000.0", "\"stiffness\": \"stiff\"");
        match parse_model(&text).unwrap_err() {
            Error::Schema { path, .. } => assert!(path.contains("elements"), "{path}"),
            e => panic!("unexpected {e}"),
        }
        let text = serialize_model(&builtin_fixture("AXIAL-1").unwrap(), LengthUnit::M)
            .replace("\"schema\": 1", "\"schema\": 2");
        assert!(parse_model(&text).unwrap_err().to_string().contains("schema version"));
        assert!(parse_model("{\"name\": \"x\"}").is_err());
    }

    #[test]
    fn hash_is_unit_independent_and_sensitive() {
        let model = builtin_fixture("TWO-ORTHO").unwrap();
        let h = model_hash(&model);
        assert_eq!(h.len(), 64);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
        let text = serialize_model(&model, LengthUnit::Mm);
        let from_mm = parse_model(&text).unwrap();
        // the mm trip is exact for this fixture's values
        assert_eq!(model_hash(&from_mm), h);
        let mut other = model.clone();
        other.chains[1].assembly_error[0] = 1e-6;
        assert_ne!(model_hash(&other), h);
    }
}

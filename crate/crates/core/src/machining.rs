//! Groove-milling load profile and circular machining paths.

use std::f64::consts::TAU;

use nalgebra::DVector;

use crate::equilibrium::Wrench;
use crate::error::{Error, Result};
use crate::kinematics::Pose;

/// Cutting-force components in the tool frame and the tool length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MillingParams {
    /// Radial force F_r (N).
    pub fr: f64,
    /// Tangential force F_t (N).
    pub ft: f64,
    /// Axial force F_z (N).
    pub fz: f64,
    /// Tool length h (m).
    pub tool_length: f64,
}

impl Default for MillingParams {
    /// Groove-milling loads (215, −10, −25) N with a 100 mm tool.
    fn default() -> Self {
        MillingParams {
            fr: 215.0,
            ft: -10.0,
            fz: -25.0,
            tool_length: 0.1,
        }
    }
}

impl MillingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tool_length.is_finite() && self.tool_length >= 0.0) {
            return Err(Error::InvalidOptions(format!(
                "tool length must be ≥ 0, got {}",
                self.tool_length
            )));
        }
        if ![self.fr, self.ft, self.fz].iter().all(|f| f.is_finite()) {
            return Err(Error::InvalidOptions("milling forces must be finite".into()));
        }
        Ok(())
    }
}

/// Spatial wrench at the tool tip for orientation `phi` (rad):
///
/// ```text
/// Fx = Fr cos φ + Ft sin φ
/// Fy = Fr sin φ + Ft cos φ
/// F  = (Fx, Fy, Fz, −Fy h, Fx h, 0)
/// ```
///
/// The `Fy` row is not a rotation of `(Fr, Ft)`, so the in-plane magnitude
/// varies with φ as `√(Fr² + Ft² + 2 Fr Ft sin 2φ)`.
pub fn milling_wrench(phi: f64, p: &MillingParams) -> Wrench {
    let (s, c) = phi.sin_cos();
    let fx = p.fr * c + p.ft * s;
    let fy = p.fr * s + p.ft * c;
    DVector::from_vec(vec![fx, fy, p.fz, -fy * p.tool_length, fx * p.tool_length, 0.0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    /// Tool orientation angle (rad).
    pub phi: f64,
    pub t0: Pose,
    pub wrench: Wrench,
}

/// `n` points on the circle of `radius` about `center` in the xy-plane, at
/// `φ_k = 2πk/n`. With `closed` an extra point at `φ = 2π` repeats the first
/// position.
pub fn circle_trajectory(
    center: &Pose,
    radius: f64,
    n: usize,
    params: &MillingParams,
    closed: bool,
) -> Result<Vec<TrajectoryPoint>> {
    if center.len() != 6 {
        return Err(Error::Dimension {
            what: "circle center",
            expected: 6,
            got: center.len(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidOptions(format!(
            "circle needs at least 3 points, got {n}"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidOptions(format!("radius must be positive, got {radius}")));
    }
    params.validate()?;
    let count = if closed { n + 1 } else { n };
    Ok((0..count)
        .map(|k| {
            let phi = TAU * k as f64 / n as f64;
            let (s, c) = phi.sin_cos();
            let mut t0 = center.clone();
            t0[0] += radius * c;
            t0[1] += radius * s;
            TrajectoryPoint {
                phi,
                t0,
                wrench: milling_wrench(phi, params),
            }
        })
        .collect())
}

/// Q1 workspace point, (126.35, 126.35, 126.35) mm.
pub const Q1: [f64; 3] = [0.12635, 0.12635, 0.12635];

/// Named workspace point as a spatial pose with zero rotation.
pub fn workspace_preset(name: &str) -> Result<Pose> {
    match name.trim().to_ascii_uppercase().as_str() {
        "Q1" => Ok(DVector::from_vec(vec![Q1[0], Q1[1], Q1[2], 0.0, 0.0, 0.0])),
        "Q0" | "Q3" => Err(Error::PresetUndefined(name.trim().to_string())),
        _ => Err(Error::UnknownPreset(name.to_string())),
    }
}

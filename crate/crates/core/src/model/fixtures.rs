//! Built-in analytic fixtures used by the test suite and the CLI demo.
//!
//! | name      | d | chains | notes |
//! |-----------|---|--------|-------|
//! | AXIAL-1   | 3 | 1 | actuated prismatic along x, spring block diag(1e6, 1e6, 1e4) |
//! | PLANAR-RP | 3 | 1 | passive revolute at origin, actuated prismatic, 1 m link, spring block diag(1e6, 1e6, 1e4) |
//! | TWO-ORTHO | 3 | 2 | AXIAL-1-style chains along x and y, lateral/rotational springs 1e2, meeting at the origin |
//! | ORTHO-3   | 6 | 3 | orthogonal spatial chains, see [`ortho3_chain`] |
//!
//! ORTHO-3 is a desk stand-in for a three-axis translational machining
//! manipulator. Its geometry and stiffness values are declared here and are
//! not measured parameters of any real machine.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DVector, Vector3};

use super::{ChainElement, ChainModel, Dimension, Frame, JointElement, JointRole, ManipulatorModel, Motion};
use crate::error::{Error, Result};

pub const FIXTURE_NAMES: [&str; 4] = ["AXIAL-1", "PLANAR-RP", "TWO-ORTHO", "ORTHO-3"];

/// ORTHO-3 slider-to-leg spring block: (tx, ty, tz, rx, ry, rz) in the chain frame.
pub const ORTHO3_SPRINGS: [f64; 6] = [2e6, 5e5, 5e5, 4e3, 2e3, 2e3];
/// Distance from the chain base to the workspace origin (m).
pub const ORTHO3_BASE_OFFSET: f64 = 0.6;
/// Leg length between the spring block and the passive slides (m).
pub const ORTHO3_LEG: f64 = 0.4;

fn x() -> Vector3<f64> {
    Vector3::x()
}
fn y() -> Vector3<f64> {
    Vector3::y()
}
fn z() -> Vector3<f64> {
    Vector3::z()
}

fn joint(j: JointElement) -> ChainElement {
    ChainElement::Joint(j)
}

fn planar_springs(kx: f64, ky: f64, kphi: f64) -> Vec<ChainElement> {
    vec![
        joint(JointElement::elastic(Motion::Prismatic, x(), kx)),
        joint(JointElement::elastic(Motion::Prismatic, y(), ky)),
        joint(JointElement::elastic(Motion::Revolute, z(), kphi)),
    ]
}

/// The trailing fixed rotation undoes the base rotation so every chain ends in
/// the platform frame.
fn axial_chain(name: &str, base: Frame, home: f64, kx: f64, ky: f64, kphi: f64) -> ChainModel {
    let mut elements = vec![joint(JointElement::actuated(Motion::Prismatic, x(), home))];
    elements.extend(planar_springs(kx, ky, kphi));
    if base.rotation != Vector3::zeros() {
        elements.push(ChainElement::Fixed(Frame::new(Vector3::zeros(), -base.rotation)));
    }
    ChainModel {
        name: name.to_string(),
        base_frame: base,
        elements,
        assembly_error: DVector::zeros(3),
    }
}

fn axial_1() -> ManipulatorModel {
    ManipulatorModel {
        name: "AXIAL-1".into(),
        dimension: Dimension::Planar,
        chains: vec![axial_chain("axial", Frame::identity(), 0.0, 1e6, 1e6, 1e4)],
        commanded: vec![0, 1, 2],
        error_bound: Default::default(),
    }
}

fn planar_rp() -> ManipulatorModel {
    let mut elements = vec![
        joint(JointElement::passive(Motion::Revolute, z(), 0.0)),
        joint(JointElement::actuated(Motion::Prismatic, x(), 0.0)),
        ChainElement::Fixed(Frame::translation(1.0, 0.0, 0.0)),
    ];
    elements.extend(planar_springs(1e6, 1e6, 1e4));
    ManipulatorModel {
        name: "PLANAR-RP".into(),
        dimension: Dimension::Planar,
        chains: vec![ChainModel {
            name: "rp".into(),
            base_frame: Frame::identity(),
            elements,
            assembly_error: DVector::zeros(3),
        }],
        commanded: vec![0, 1, 2],
        error_bound: Default::default(),
    }
}

fn two_ortho() -> ManipulatorModel {
    let cx = axial_chain("x", Frame::translation(-0.2, 0.0, 0.0), 0.2, 1e6, 1e2, 1e2);
    let cy = axial_chain(
        "y",
        Frame::new(Vector3::new(0.0, -0.2, 0.0), Vector3::new(0.0, 0.0, FRAC_PI_2)),
        0.2,
        1e6,
        1e2,
        1e2,
    );
    ManipulatorModel {
        name: "TWO-ORTHO".into(),
        dimension: Dimension::Planar,
        chains: vec![cx, cy],
        commanded: vec![0, 1, 2],
        error_bound: Default::default(),
    }
}

/// One ORTHO-3 chain, built along local x and placed by `base_rotation`.
///
/// Local layout: actuated slide along x (home 0.2 m) → 6-DOF spring block →
/// rigid leg of [`ORTHO3_LEG`] along x → passive slides along y then z →
/// rotation back into the platform frame. The passive slides let every chain reach any point of the
/// workspace, while rotations stay constrained by all three spring blocks.
pub fn ortho3_chain(name: &str, base_rotation: Vector3<f64>) -> ChainModel {
    let rot = nalgebra::Rotation3::new(base_rotation);
    let base = Frame::new(rot * Vector3::new(-ORTHO3_BASE_OFFSET, 0.0, 0.0), base_rotation);
    let slide = JointElement {
        motion: Motion::Prismatic,
        axis: x(),
        role: JointRole::Actuated {
            home: ORTHO3_BASE_OFFSET - ORTHO3_LEG,
            bounds: Some((0.0, 0.6)),
        },
    };
    let passive = |axis| JointElement {
        motion: Motion::Prismatic,
        axis,
        role: JointRole::Passive {
            home: 0.0,
            bounds: Some((-0.3, 0.3)),
        },
    };
    let [ktx, kty, ktz, krx, kry, krz] = ORTHO3_SPRINGS;
    let elements = vec![
        joint(slide),
        joint(JointElement::elastic(Motion::Prismatic, x(), ktx)),
        joint(JointElement::elastic(Motion::Prismatic, y(), kty)),
        joint(JointElement::elastic(Motion::Prismatic, z(), ktz)),
        joint(JointElement::elastic(Motion::Revolute, x(), krx)),
        joint(JointElement::elastic(Motion::Revolute, y(), kry)),
        joint(JointElement::elastic(Motion::Revolute, z(), krz)),
        ChainElement::Fixed(Frame::translation(ORTHO3_LEG, 0.0, 0.0)),
        joint(passive(y())),
        joint(passive(z())),
        ChainElement::Fixed(Frame::new(Vector3::zeros(), -base_rotation)),
    ];
    ChainModel {
        name: name.to_string(),
        base_frame: base,
        elements,
        assembly_error: DVector::zeros(6),
    }
}

fn ortho_3() -> ManipulatorModel {
    ManipulatorModel {
        name: "ORTHO-3".into(),
        dimension: Dimension::Spatial,
        chains: vec![
            ortho3_chain("x", Vector3::zeros()),
            ortho3_chain("y", Vector3::new(0.0, 0.0, FRAC_PI_2)),
            ortho3_chain("z", Vector3::new(0.0, -FRAC_PI_2, 0.0)),
        ],
        commanded: vec![0, 1, 2],
        error_bound: Default::default(),
    }
}

/// ORTHO-3 chain actuated axes; each passes through the origin.
pub const ORTHO3_ACTUATED_AXES: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// End-point shifts of the ORTHO-3 chains when each actuator is mounted
/// rotated by `angle` (rad) about its own axis, evaluated at `point`.
///
/// The shift is the displacement of `point` under that rotation together
/// with the rotation itself.
pub fn ortho3_actuator_misalignment(angle: f64, point: &Vector3<f64>) -> Vec<DVector<f64>> {
    ORTHO3_ACTUATED_AXES
        .iter()
        .map(|a| {
            let w = Vector3::from(*a) * angle;
            let dp = nalgebra::Rotation3::new(w) * point - point;
            DVector::from_vec(vec![dp.x, dp.y, dp.z, w.x, w.y, w.z])
        })
        .collect()
}

/// 1° actuator misalignment of every ORTHO-3 chain, evaluated at the demo
/// workspace point (0.12635, 0.12635, 0.12635) m.
pub fn ortho3_demo_assembly_errors() -> Vec<DVector<f64>> {
    ortho3_actuator_misalignment(1f64.to_radians(), &Vector3::new(0.12635, 0.12635, 0.12635))
}

/// Look up one of [`FIXTURE_NAMES`].
pub fn builtin_fixture(name: &str) -> Result<ManipulatorModel> {
    let model = match name.to_ascii_uppercase().as_str() {
        "AXIAL-1" => axial_1(),
        "PLANAR-RP" => planar_rp(),
        "TWO-ORTHO" => two_ortho(),
        "ORTHO-3" => ortho_3(),
        _ => return Err(Error::UnknownFixture(name.to_string())),
    };
    model.checked()
}

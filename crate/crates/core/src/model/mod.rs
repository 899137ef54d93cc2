//! Manipulator data schema: chains of rigid transforms and 1-DOF joints.
//!
//! A chain is an ordered list of fixed frames and joints. Joints are either
//! actuated, passive, or elastic (virtual springs). A multi-DOF spring is a
//! run of consecutive elastic joints, so the joint stiffness matrix is always
//! diagonal. Every quantity is SI internally (m, rad, N, N·m).

mod file;
mod fixtures;

use std::fmt;

use nalgebra::{DVector, Isometry3, Translation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::{self, ChainState};
use crate::linalg;

pub use file::{model_hash, parse_model, parse_model_unchecked, serialize_model, LengthUnit, SCHEMA_VERSION};
pub use fixtures::{builtin_fixture, ortho3_actuator_misalignment, ortho3_demo_assembly_errors, FIXTURE_NAMES};

/// Unit-norm tolerance for joint axes.
pub const AXIS_NORM_TOL: f64 = 1e-12;
/// Nominal chain end-points must coincide within this distance (m).
pub const END_POINT_TOL: f64 = 1e-9;
/// Relative singular-value threshold for the elastic rank check.
pub const RANK_TOL: f64 = 1e-9;

/// Operational-space dimension.
///
/// Planar poses are `(x, y, φz)`; spatial poses are `(x, y, z, r)` with `r` a
/// rotation vector. Internally everything is evaluated in 6-D and projected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Planar,
    Spatial,
}

impl Dimension {
    pub fn from_size(d: usize) -> Option<Self> {
        match d {
            3 => Some(Dimension::Planar),
            6 => Some(Dimension::Spatial),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dimension::Planar => 3,
            Dimension::Spatial => 6,
        }
    }

    /// Rows of the 6-D (x, y, z, rx, ry, rz) vector kept in this space.
    pub fn rows(self) -> &'static [usize] {
        match self {
            Dimension::Planar => &[0, 1, 5],
            Dimension::Spatial => &[0, 1, 2, 3, 4, 5],
        }
    }

    /// Indices of the translational components in operational coordinates.
    pub fn translational(self) -> &'static [usize] {
        match self {
            Dimension::Planar => &[0, 1],
            Dimension::Spatial => &[0, 1, 2],
        }
    }

    pub fn rotational(self) -> &'static [usize] {
        match self {
            Dimension::Planar => &[2],
            Dimension::Spatial => &[3, 4, 5],
        }
    }

    pub fn is_translational(self, index: usize) -> bool {
        self.translational().contains(&index)
    }
}

/// Rigid displacement given as a translation and a rotation vector.
///
/// Kept in declared form so files round-trip bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub translation: Vector3<f64>,
    pub rotation: Vector3<f64>,
}

impl Frame {
    pub fn identity() -> Self {
        Frame {
            translation: Vector3::zeros(),
            rotation: Vector3::zeros(),
        }
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Frame {
            translation: Vector3::new(x, y, z),
            rotation: Vector3::zeros(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: Vector3<f64>) -> Self {
        Frame { translation, rotation }
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.translation),
            UnitQuaternion::from_scaled_axis(self.rotation),
        )
    }

    pub fn is_identity(&self) -> bool {
        self.translation == Vector3::zeros() && self.rotation == Vector3::zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Prismatic,
    Revolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Actuated,
    Passive,
    Elastic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointRole {
    /// `home` seeds the rigid inverse kinematics.
    Actuated {
        home: f64,
        bounds: Option<(f64, f64)>,
    },
    Passive {
        home: f64,
        bounds: Option<(f64, f64)>,
    },
    /// Virtual spring: stiffness in N/m or N·m/rad, rest value in m or rad.
    Elastic {
        stiffness: f64,
        rest: f64,
    },
}

/// 1-DOF joint whose axis is expressed in the preceding local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointElement {
    pub motion: Motion,
    pub axis: Vector3<f64>,
    pub role: JointRole,
}

impl JointElement {
    pub fn kind(&self) -> JointKind {
        match self.role {
            JointRole::Actuated { .. } => JointKind::Actuated,
            JointRole::Passive { .. } => JointKind::Passive,
            JointRole::Elastic { .. } => JointKind::Elastic,
        }
    }

    pub fn actuated(motion: Motion, axis: Vector3<f64>, home: f64) -> Self {
        JointElement {
            motion,
            axis,
            role: JointRole::Actuated { home, bounds: None },
        }
    }

    pub fn passive(motion: Motion, axis: Vector3<f64>, home: f64) -> Self {
        JointElement {
            motion,
            axis,
            role: JointRole::Passive { home, bounds: None },
        }
    }

    pub fn elastic(motion: Motion, axis: Vector3<f64>, stiffness: f64) -> Self {
        JointElement {
            motion,
            axis,
            role: JointRole::Elastic { stiffness, rest: 0.0 },
        }
    }

    /// Local transform produced by joint value `value`.
    pub(crate) fn transform(&self, value: f64) -> Isometry3<f64> {
        match self.motion {
            Motion::Prismatic => {
                Isometry3::from_parts(Translation3::from(self.axis * value), UnitQuaternion::identity())
            }
            Motion::Revolute => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_scaled_axis(self.axis * value),
            ),
        }
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        match self.role {
            JointRole::Actuated { bounds, .. } | JointRole::Passive { bounds, .. } => bounds,
            JointRole::Elastic { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainElement {
    Fixed(Frame),
    Joint(JointElement),
}

/// Bound on ‖ε_i‖ split into translational (m) and rotational (rad) parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyErrorBound {
    pub translation: f64,
    pub rotation: f64,
}

impl Default for AssemblyErrorBound {
    fn default() -> Self {
        AssemblyErrorBound {
            translation: 0.01,
            rotation: 0.1,
        }
    }
}

/// One serial chain from the world frame to the shared end-platform point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    pub name: String,
    pub base_frame: Frame,
    pub elements: Vec<ChainElement>,
    /// End-point shift of this chain caused by manufacturing/assembly errors,
    /// in operational coordinates.
    pub assembly_error: DVector<f64>,
}

impl ChainModel {
    pub fn joints(&self) -> impl Iterator<Item = &JointElement> {
        self.elements.iter().filter_map(|e| match e {
            ChainElement::Joint(j) => Some(j),
            ChainElement::Fixed(_) => None,
        })
    }

    pub fn count(&self, kind: JointKind) -> usize {
        self.joints().filter(|j| j.kind() == kind).count()
    }

    pub fn n_actuated(&self) -> usize {
        self.count(JointKind::Actuated)
    }

    pub fn n_passive(&self) -> usize {
        self.count(JointKind::Passive)
    }

    pub fn n_elastic(&self) -> usize {
        self.count(JointKind::Elastic)
    }

    /// Diagonal of K_θ in elastic-joint order.
    pub fn joint_stiffness(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n_elastic(),
            self.joints().filter_map(|j| match j.role {
                JointRole::Elastic { stiffness, .. } => Some(stiffness),
                _ => None,
            }),
        )
    }

    /// Spring rest values θ0 in elastic-joint order.
    pub fn rest(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n_elastic(),
            self.joints().filter_map(|j| match j.role {
                JointRole::Elastic { rest, .. } => Some(rest),
                _ => None,
            }),
        )
    }

    /// Declared home configuration with springs at rest.
    pub fn home_state(&self) -> ChainState {
        let pick = |kind: JointKind| {
            self.joints()
                .filter(|j| j.kind() == kind)
                .map(|j| match j.role {
                    JointRole::Actuated { home, .. } | JointRole::Passive { home, .. } => home,
                    JointRole::Elastic { rest, .. } => rest,
                })
                .collect::<Vec<_>>()
        };
        ChainState {
            rho: DVector::from_vec(pick(JointKind::Actuated)),
            q: DVector::from_vec(pick(JointKind::Passive)),
            theta: DVector::from_vec(pick(JointKind::Elastic)),
        }
    }

    /// Bounds of the actuated (`Actuated`) or passive (`Passive`) joints in order.
    pub(crate) fn bounds_of(&self, kind: JointKind) -> Vec<Option<(f64, f64)>> {
        self.joints().filter(|j| j.kind() == kind).map(|j| j.bounds()).collect()
    }
}

/// `m` chains sharing one end-platform.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorModel {
    pub name: String,
    pub dimension: Dimension,
    pub chains: Vec<ChainModel>,
    /// Operational components the controller can command. The remaining
    /// components of the loaded pose are left free during compensation.
    pub commanded: Vec<usize>,
    pub error_bound: AssemblyErrorBound,
}

impl ManipulatorModel {
    /// Build and validate.
    pub fn new(
        name: impl Into<String>,
        dimension: Dimension,
        chains: Vec<ChainModel>,
        commanded: Option<Vec<usize>>,
    ) -> Result<Self> {
        let model = ManipulatorModel {
            name: name.into(),
            dimension,
            commanded: commanded.unwrap_or_else(|| (0..dimension.size()).collect()),
            chains,
            error_bound: AssemblyErrorBound::default(),
        };
        model.checked()
    }

    pub fn checked(self) -> Result<Self> {
        let diags = validate_model(&self);
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidModel(diags))
        }
    }

    pub fn d(&self) -> usize {
        self.dimension.size()
    }

    pub fn m(&self) -> usize {
        self.chains.len()
    }

    pub fn assembly_errors(&self) -> Vec<DVector<f64>> {
        self.chains.iter().map(|c| c.assembly_error.clone()).collect()
    }

    pub fn has_assembly_errors(&self) -> bool {
        self.chains.iter().any(|c| c.assembly_error.iter().any(|&v| v != 0.0))
    }

    /// Copy of the model with every ε_i set to zero.
    pub fn without_assembly_errors(&self) -> Self {
        let mut out = self.clone();
        for chain in &mut out.chains {
            chain.assembly_error = DVector::zeros(self.d());
        }
        out
    }

    /// Copy of the model carrying the given ε_i, validated against the bound.
    pub fn with_assembly_errors(&self, errors: &[DVector<f64>]) -> Result<Self> {
        if errors.len() != self.m() {
            return Err(Error::Dimension {
                what: "assembly errors",
                expected: self.m(),
                got: errors.len(),
            });
        }
        let mut out = self.clone();
        for (chain, e) in out.chains.iter_mut().zip(errors) {
            chain.assembly_error = e.clone();
        }
        out.checked()
    }

    /// Whether every operational component is commanded.
    pub fn fully_commanded(&self) -> bool {
        self.commanded.len() == self.d()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    NoChains,
    NonFinite,
    AxisNorm,
    NonPositiveStiffness,
    NoActuator,
    RankDeficient,
    AssemblyError,
    PlanarConstraint,
    Bounds,
    EndPointMismatch,
    Commanded,
}

/// One invariant violation found by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub chain: Option<usize>,
    pub element: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.chain, self.element) {
            (Some(c), Some(e)) => write!(f, "chains[{c}].elements[{e}]: {}", self.message),
            (Some(c), None) => write!(f, "chains[{c}]: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

fn diag(kind: DiagnosticKind, chain: Option<usize>, element: Option<usize>, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        kind,
        chain,
        element,
        message: message.into(),
    }
}

fn check_planar_frame(frame: &Frame) -> bool {
    frame.translation.z == 0.0 && frame.rotation.x == 0.0 && frame.rotation.y == 0.0
}

/// Check every model invariant; an empty list means the model is valid.
pub fn validate_model(model: &ManipulatorModel) -> Vec<Diagnostic> {
    use DiagnosticKind::*;
    let mut out = Vec::new();
    let d = model.d();

    if model.chains.is_empty() {
        out.push(diag(NoChains, None, None, "model has no chains"));
    }
    let mut seen = vec![false; d];
    for &c in &model.commanded {
        if c >= d || seen[c] {
            out.push(diag(Commanded, None, None, format!("invalid commanded component {c}")));
        } else {
            seen[c] = true;
        }
    }
    if model.commanded.is_empty() {
        out.push(diag(Commanded, None, None, "no commanded components"));
    }

    let mut structurally_ok = true;
    for (ci, chain) in model.chains.iter().enumerate() {
        let c = Some(ci);
        let before = out.len();
        let planar = model.dimension == Dimension::Planar;
        let frame_ok = |f: &Frame| f.translation.iter().chain(f.rotation.iter()).all(|v| v.is_finite());
        if !frame_ok(&chain.base_frame) {
            out.push(diag(NonFinite, c, None, "non-finite base frame"));
        } else if planar && !check_planar_frame(&chain.base_frame) {
            out.push(diag(PlanarConstraint, c, None, "base frame leaves the xy-plane"));
        }
        for (ei, element) in chain.elements.iter().enumerate() {
            let e = Some(ei);
            match element {
                ChainElement::Fixed(frame) => {
                    if !frame_ok(frame) {
                        out.push(diag(NonFinite, c, e, "non-finite fixed transform"));
                    } else if planar && !check_planar_frame(frame) {
                        out.push(diag(PlanarConstraint, c, e, "fixed transform leaves the xy-plane"));
                    }
                }
                ChainElement::Joint(joint) => {
                    let norm = joint.axis.norm();
                    if !norm.is_finite() || (norm - 1.0).abs() > AXIS_NORM_TOL {
                        out.push(diag(AxisNorm, c, e, format!("axis norm {norm} is not 1")));
                    }
                    if planar {
                        let ok = match joint.motion {
                            Motion::Prismatic => joint.axis.z == 0.0,
                            Motion::Revolute => joint.axis.x == 0.0 && joint.axis.y == 0.0,
                        };
                        if !ok {
                            out.push(diag(PlanarConstraint, c, e, "joint axis leaves the xy-plane"));
                        }
                    }
                    match joint.role {
                        JointRole::Elastic { stiffness, rest } => {
                            if !(stiffness.is_finite() && stiffness > 0.0) {
                                out.push(diag(
                                    NonPositiveStiffness,
                                    c,
                                    e,
                                    format!("non-positive stiffness {stiffness}"),
                                ));
                            }
                            if !rest.is_finite() {
                                out.push(diag(NonFinite, c, e, "non-finite rest value"));
                            }
                        }
                        JointRole::Actuated { home, bounds } | JointRole::Passive { home, bounds } => {
                            if !home.is_finite() {
                                out.push(diag(NonFinite, c, e, "non-finite home value"));
                            }
                            if let Some((lo, hi)) = bounds {
                                if !(lo < hi && lo <= home && home <= hi) {
                                    out.push(diag(
                                        Bounds,
                                        c,
                                        e,
                                        format!("bounds [{lo}, {hi}] invalid for home {home}"),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        if chain.n_actuated() == 0 {
            out.push(diag(NoActuator, c, None, "chain has no actuated joint"));
        }

        let eps = &chain.assembly_error;
        if eps.len() != d {
            out.push(diag(
                AssemblyError,
                c,
                None,
                format!("assembly error has {} components, expected {d}", eps.len()),
            ));
        } else if eps.iter().any(|v| !v.is_finite()) {
            out.push(diag(AssemblyError, c, None, "non-finite assembly error"));
        } else {
            let norm_of = |idx: &[usize]| idx.iter().map(|&i| eps[i] * eps[i]).sum::<f64>().sqrt();
            let t = norm_of(model.dimension.translational());
            let r = norm_of(model.dimension.rotational());
            if t > model.error_bound.translation || r > model.error_bound.rotation {
                out.push(diag(
                    AssemblyError,
                    c,
                    None,
                    format!(
                        "assembly error ({t:.3e} m, {r:.3e} rad) exceeds bound ({} m, {} rad); likely a unit error",
                        model.error_bound.translation, model.error_bound.rotation
                    ),
                ));
            }
        }

        if out.len() > before {
            structurally_ok = false;
            continue;
        }
        let state = chain.home_state();
        let jac = kinematics::chain_jacobians(chain, model.dimension, &state);
        let r = linalg::rank(&jac.jtheta, RANK_TOL);
        if r < d {
            out.push(diag(
                RankDeficient,
                c,
                None,
                format!("elastic joints span rank {r} < {d} at the home configuration"),
            ));
            structurally_ok = false;
        }
    }

    if structurally_ok && model.chains.len() > 1 {
        let ends: Vec<_> = model
            .chains
            .iter()
            .map(|ch| kinematics::chain_geometry(ch, model.dimension, &ch.home_state()))
            .collect();
        for (ci, end) in ends.iter().enumerate().skip(1) {
            let gap = model
                .dimension
                .translational()
                .iter()
                .map(|&k| (end[k] - ends[0][k]).powi(2))
                .sum::<f64>()
                .sqrt();
            let rot_gap = model
                .dimension
                .rotational()
                .iter()
                .map(|&k| (end[k] - ends[0][k]).abs())
                .fold(0.0, f64::max);
            if gap > END_POINT_TOL || rot_gap > END_POINT_TOL {
                out.push(diag(
                    EndPointMismatch,
                    Some(ci),
                    None,
                    format!("nominal end-point differs from chain 0 by {gap:.3e} m / {rot_gap:.3e} rad at home"),
                ));
            }
        }
    }
    out
}

//! Chain geometry g(ρ, q, θ), its first and second derivatives, and rigid
//! inverse kinematics.
//!
//! Everything is evaluated in 6-D world coordinates `(p, r)` with `r` the
//! rotation vector of the end frame, then projected onto the rows of the
//! operational space. Joint twists are world-frame `(v, ω)` with `v = c × ω`
//! for a revolute axis through `c` and `ω = 0` for a prismatic one.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{inverse_left_jacobian, inverse_left_jacobian_derivative};
use crate::model::{ChainElement, ChainModel, Dimension, JointKind, ManipulatorModel, Motion};

/// Operational-space location: `(x, y, φz)` planar or `(x, y, z, r)` spatial.
pub type Pose = DVector<f64>;

/// Joint coordinates of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Actuated coordinates.
    pub rho: DVector<f64>,
    /// Passive coordinates.
    pub q: DVector<f64>,
    /// Elastic (virtual-joint) coordinates.
    pub theta: DVector<f64>,
}

impl ChainState {
    /// Whether the vector lengths match the chain's joint counts.
    pub fn fits(&self, chain: &ChainModel) -> bool {
        self.rho.len() == chain.n_actuated()
            && self.q.len() == chain.n_passive()
            && self.theta.len() == chain.n_elastic()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainJacobians {
    /// d × n_ρ
    pub jrho: DMatrix<f64>,
    /// d × n_q
    pub jq: DMatrix<f64>,
    /// d × n_θ
    pub jtheta: DMatrix<f64>,
}

/// Second derivatives of the scalar `g(q, θ)ᵀ F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainHessians {
    pub hqq: DMatrix<f64>,
    pub hqtheta: DMatrix<f64>,
    pub hthetaq: DMatrix<f64>,
    pub hthetatheta: DMatrix<f64>,
}

#[derive(Clone, Copy)]
struct Twist {
    v: Vector3<f64>,
    w: Vector3<f64>,
}

/// One forward pass: world twists of every joint and the end frame.
pub(crate) struct ChainEval {
    dimension: Dimension,
    kinds: Vec<JointKind>,
    twists: Vec<Twist>,
    p: Vector3<f64>,
    r: Vector3<f64>,
    jinv: Matrix3<f64>,
}

fn rotation_vector(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    q.scaled_axis()
}

impl ChainEval {
    pub(crate) fn new(chain: &ChainModel, dimension: Dimension, state: &ChainState) -> Self {
        debug_assert!(state.fits(chain));
        let mut frame: Isometry3<f64> = chain.base_frame.to_isometry();
        let mut kinds = Vec::new();
        let mut twists = Vec::new();
        let (mut ia, mut iq, mut it) = (0, 0, 0);
        for element in &chain.elements {
            match element {
                ChainElement::Fixed(f) => frame *= f.to_isometry(),
                ChainElement::Joint(j) => {
                    let kind = j.kind();
                    let value = match kind {
                        JointKind::Actuated => {
                            ia += 1;
                            state.rho[ia - 1]
                        }
                        JointKind::Passive => {
                            iq += 1;
                            state.q[iq - 1]
                        }
                        JointKind::Elastic => {
                            it += 1;
                            state.theta[it - 1]
                        }
                    };
                    let axis = frame.rotation * j.axis;
                    let twist = match j.motion {
                        Motion::Prismatic => Twist {
                            v: axis,
                            w: Vector3::zeros(),
                        },
                        Motion::Revolute => Twist {
                            v: frame.translation.vector.cross(&axis),
                            w: axis,
                        },
                    };
                    kinds.push(kind);
                    twists.push(twist);
                    frame *= j.transform(value);
                }
            }
        }
        let r = rotation_vector(&frame.rotation);
        ChainEval {
            dimension,
            kinds,
            twists,
            p: frame.translation.vector,
            r,
            jinv: inverse_left_jacobian(&r),
        }
    }

    fn project(&self, v6: [f64; 6]) -> DVector<f64> {
        let rows = self.dimension.rows();
        DVector::from_iterator(rows.len(), rows.iter().map(|&k| v6[k]))
    }

    pub(crate) fn pose(&self) -> Pose {
        self.project([self.p.x, self.p.y, self.p.z, self.r.x, self.r.y, self.r.z])
    }

    fn column6(&self, j: usize) -> [f64; 6] {
        let t = self.twists[j];
        let dp = t.v + t.w.cross(&self.p);
        let dr = self.jinv * t.w;
        [dp.x, dp.y, dp.z, dr.x, dr.y, dr.z]
    }

    fn indices(&self, kind: JointKind) -> Vec<usize> {
        (0..self.kinds.len()).filter(|&j| self.kinds[j] == kind).collect()
    }

    pub(crate) fn jacobian(&self, kind: JointKind) -> DMatrix<f64> {
        let idx = self.indices(kind);
        let d = self.dimension.size();
        let mut m = DMatrix::zeros(d, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            m.set_column(c, &self.project(self.column6(j)));
        }
        m
    }

    pub(crate) fn jacobians(&self) -> ChainJacobians {
        ChainJacobians {
            jrho: self.jacobian(JointKind::Actuated),
            jq: self.jacobian(JointKind::Passive),
            jtheta: self.jacobian(JointKind::Elastic),
        }
    }

    /// `F · ∂J_b/∂u_a` for every joint pair, in chain order.
    fn hessian_full(&self, force: &DVector<f64>) -> DMatrix<f64> {
        let n = self.twists.len();
        let mut f6 = [0.0; 6];
        for (k, &row) in self.dimension.rows().iter().enumerate() {
            f6[row] = force[k];
        }
        let f = Vector3::new(f6[0], f6[1], f6[2]);
        let mo = Vector3::new(f6[3], f6[4], f6[5]);
        let mut h = DMatrix::zeros(n, n);
        if f == Vector3::zeros() && mo == Vector3::zeros() {
            return h;
        }
        for a in 0..n {
            let ta = self.twists[a];
            let dp = ta.v + ta.w.cross(&self.p);
            let dr = self.jinv * ta.w;
            for b in 0..n {
                let tb = self.twists[b];
                // a precedes b: b's axis is carried along by a.
                let (dv, dw) = if a < b {
                    (ta.w.cross(&tb.v) + ta.v.cross(&tb.w), ta.w.cross(&tb.w))
                } else {
                    (Vector3::zeros(), Vector3::zeros())
                };
                let hp = dv + dw.cross(&self.p) + tb.w.cross(&dp);
                let hr = inverse_left_jacobian_derivative(&self.r, &dr, &tb.w) + self.jinv * dw;
                h[(a, b)] = f.dot(&hp) + mo.dot(&hr);
            }
        }
        h
    }

    pub(crate) fn hessians(&self, force: &DVector<f64>) -> ChainHessians {
        let h = self.hessian_full(force);
        let q = self.indices(JointKind::Passive);
        let t = self.indices(JointKind::Elastic);
        let block =
            |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| h[(rows[i], cols[j])]);
        ChainHessians {
            hqq: block(&q, &q),
            hqtheta: block(&q, &t),
            hthetaq: block(&t, &q),
            hthetatheta: block(&t, &t),
        }
    }
}

/// End-point pose of the chain at `state`.
pub fn chain_geometry(chain: &ChainModel, dimension: Dimension, state: &ChainState) -> Pose {
    ChainEval::new(chain, dimension, state).pose()
}

/// Analytic Jacobians of [`chain_geometry`], columns in joint order.
pub fn chain_jacobians(chain: &ChainModel, dimension: Dimension, state: &ChainState) -> ChainJacobians {
    ChainEval::new(chain, dimension, state).jacobians()
}

/// Hessian blocks of `g(q, θ)ᵀ F` at `state`.
pub fn chain_hessians(
    chain: &ChainModel,
    dimension: Dimension,
    state: &ChainState,
    force: &DVector<f64>,
) -> ChainHessians {
    ChainEval::new(chain, dimension, state).hessians(force)
}

pub const IK_MAX_ITERATIONS: usize = 200;
pub const IK_TOLERANCE: f64 = 1e-12;
/// Rigid IK solutions farther than this from the target are outside the workspace.
pub const IK_REACH_TOLERANCE: f64 = 1e-9;
const IK_DAMPING: f64 = 1e-10;

/// Damped least-squares rigid IK over `(ρ, q)` with `θ = θ0`, seeded from the
/// chain's home configuration.
///
/// Returns the state and the remaining error `target − g`. A target outside
/// the chain's reach yields the least-squares point and a nonzero error.
pub fn inverse_kinematics_least_squares(
    chain: &ChainModel,
    dimension: Dimension,
    target: &Pose,
) -> Result<(ChainState, DVector<f64>)> {
    let mut state = chain.home_state();
    let (na, nq) = (state.rho.len(), state.q.len());
    let mut last = f64::INFINITY;
    for _ in 0..IK_MAX_ITERATIONS {
        let eval = ChainEval::new(chain, dimension, &state);
        let err = target - eval.pose();
        let norm = err.norm();
        if norm < IK_TOLERANCE {
            return Ok((state, err));
        }
        let mut j = DMatrix::zeros(dimension.size(), na + nq);
        j.columns_mut(0, na).copy_from(&eval.jacobian(JointKind::Actuated));
        j.columns_mut(na, nq).copy_from(&eval.jacobian(JointKind::Passive));
        let jt = j.transpose();
        let mut a = &jt * &j;
        let lambda = IK_DAMPING * a.trace();
        for k in 0..a.nrows() {
            a[(k, k)] += lambda.max(f64::MIN_POSITIVE);
        }
        let g = &jt * &err;
        let step = match a.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => a.lu().solve(&g).ok_or(Error::Singular {
                what: "rigid inverse kinematics",
                condition: f64::INFINITY,
            })?,
        };
        let scale = 1.0 + state.rho.norm() + state.q.norm();
        if step.norm() <= 1e-15 * scale || (norm >= last && step.norm() <= 1e-12 * scale) {
            return Ok((state, err));
        }
        last = norm;
        state.rho += step.rows(0, na);
        state.q += step.rows(na, nq);
    }
    let err = target - chain_geometry(chain, dimension, &state);
    Err(Error::NotConverged {
        what: "rigid inverse kinematics",
        iterations: IK_MAX_ITERATIONS,
        residual: err.norm(),
        history: Vec::new(),
    })
}

/// Check actuated and passive coordinates against declared bounds.
pub fn check_bounds(chain: &ChainModel, state: &ChainState, chain_index: usize) -> Result<()> {
    let kinds = [(JointKind::Actuated, &state.rho), (JointKind::Passive, &state.q)];
    let mut joint = 0;
    for (kind, values) in kinds {
        for (bounds, &value) in chain.bounds_of(kind).iter().zip(values.iter()) {
            if let Some((lo, hi)) = *bounds {
                if !(lo <= value && value <= hi) {
                    return Err(Error::JointBounds {
                        chain: chain_index,
                        joint,
                        value,
                        lo,
                        hi,
                    });
                }
            }
            joint += 1;
        }
    }
    Ok(())
}

/// Rigid IK of every chain of the nominal model; `θ = θ0`.
///
/// Assembly errors are not applied: they enter through per-chain command
/// offsets instead.
pub fn inverse_kinematics_rigid(model: &ManipulatorModel, target: &Pose) -> Result<Vec<ChainState>> {
    if target.len() != model.d() {
        return Err(Error::Dimension {
            what: "target pose",
            expected: model.d(),
            got: target.len(),
        });
    }
    model
        .chains
        .iter()
        .enumerate()
        .map(|(i, chain)| {
            let (state, err) =
                inverse_kinematics_least_squares(chain, model.dimension, target).map_err(|e| e.in_chain(i))?;
            let residual = err.norm();
            if residual > IK_REACH_TOLERANCE {
                return Err(Error::OutsideWorkspace { chain: i, residual });
            }
            check_bounds(chain, &state, i)?;
            Ok(state)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_fixture, Frame, FIXTURE_NAMES};
    use std::f64::consts::FRAC_PI_2;

    fn state(rho: &[f64], q: &[f64], theta: &[f64]) -> ChainState {
        ChainState {
            rho: DVector::from_column_slice(rho),
            q: DVector::from_column_slice(q),
            theta: DVector::from_column_slice(theta),
        }
    }

    #[test]
    fn axial_geometry() {
        let m = builtin_fixture("AXIAL-1").unwrap();
        let c = &m.chains[0];
        let p = chain_geometry(c, m.dimension, &state(&[0.2], &[], &[1e-4, 0.0, 0.0]));
        assert!((p[0] - 0.2001).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
        let p = chain_geometry(c, m.dimension, &state(&[0.0], &[], &[0.0, 0.0, 0.0]));
        assert_eq!(p.as_slice(), &[0.0, 0.0, 0.0]);
        let j = chain_jacobians(c, m.dimension, &state(&[0.3], &[], &[1e-3, -2e-3, 0.0]));
        assert_eq!(j.jtheta, DMatrix::identity(3, 3));
        assert_eq!(j.jq.ncols(), 0);
    }

    #[test]
    fn planar_rp_quarter_turn() {
        let m = builtin_fixture("PLANAR-RP").unwrap();
        let p = chain_geometry(&m.chains[0], m.dimension, &state(&[0.0], &[FRAC_PI_2], &[0.0; 3]));
        assert!((p - DVector::from_vec(vec![0.0, 1.0, FRAC_PI_2])).norm() < 1e-15);
        let j = chain_jacobians(&m.chains[0], m.dimension, &state(&[0.0], &[0.0], &[0.0; 3]));
        assert!((j.jq.column(0) - DVector::from_vec(vec![0.0, 1.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn identity_fixed_transform_changes_nothing() {
        for name in FIXTURE_NAMES {
            let m = builtin_fixture(name).unwrap();
            let c = &m.chains[0];
            let mut s = c.home_state();
            s.theta
                .iter_mut()
                .enumerate()
                .for_each(|(k, v)| *v = 1e-3 * (k as f64 + 1.0));
            let base = chain_jacobians(c, m.dimension, &s);
            let g = chain_geometry(c, m.dimension, &s);
            for at in 0..=c.elements.len() {
                let mut c2 = c.clone();
                c2.elements.insert(at, ChainElement::Fixed(Frame::identity()));
                assert!((chain_geometry(&c2, m.dimension, &s) - &g).amax() <= 1e-15);
                assert!((chain_jacobians(&c2, m.dimension, &s).jtheta - &base.jtheta).amax() <= 1e-15);
            }
        }
    }

    #[test]
    fn axial_hessians_vanish() {
        let m = builtin_fixture("AXIAL-1").unwrap();
        let h = chain_hessians(
            &m.chains[0],
            m.dimension,
            &state(&[0.2], &[], &[1e-3, 2e-3, 0.0]),
            &DVector::from_vec(vec![3.0, -4.0, 5.0]),
        );
        assert_eq!(h.hthetatheta.amax(), 0.0);
    }

    #[test]
    fn zero_force_gives_zero_hessians() {
        for name in FIXTURE_NAMES {
            let m = builtin_fixture(name).unwrap();
            let c = &m.chains[0];
            let h = chain_hessians(c, m.dimension, &c.home_state(), &DVector::zeros(m.d()));
            assert_eq!(h.hqq.amax().max(h.hthetatheta.amax()).max(h.hqtheta.amax()), 0.0);
        }
    }

    #[test]
    fn ik_axial() {
        let m = builtin_fixture("AXIAL-1").unwrap();
        let s = inverse_kinematics_rigid(&m, &DVector::from_vec(vec![0.3, 0.0, 0.0])).unwrap();
        assert!((s[0].rho[0] - 0.3).abs() < 1e-15);
        let err = inverse_kinematics_rigid(&m, &DVector::from_vec(vec![0.3, 0.5, 0.0])).unwrap_err();
        assert!(matches!(err, Error::OutsideWorkspace { chain: 0, .. }), "{err}");
    }

    #[test]
    fn ik_respects_bounds() {
        let m = builtin_fixture("ORTHO-3").unwrap();
        let far = DVector::from_vec(vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            inverse_kinematics_rigid(&m, &far),
            Err(Error::JointBounds { chain: 0, .. })
        ));
    }
}

//! Loaded Cartesian stiffness of a chain with the passive-joint correction,
//! the parallel total, and the target-point stiffness `∂f(t | t0)/∂t0`.
//!
//! With `k = (K_θ − Hθθ)⁻¹` and `Jq' = Jq + Jθ k Hθq`:
//!
//! ```text
//! Kc0 = (Jθ k Jθᵀ)⁻¹
//! Kcq = −Kc0 Jq' (Hqq + Hqθ k Hθq − Jq'ᵀ Kc0 Jq')⁻¹ Jq'ᵀ Kc0
//! Kc  = Kc0 − Kcq
//! ```
//!
//! which is the exact derivative `∂f_i/∂t` of the equilibrium map.

use nalgebra::{DMatrix, DVector};

use crate::equilibrium::{Assembly, EquilibriumOptions, Wrench};
use crate::error::Result;
use crate::kinematics::{ChainEval, ChainState, Pose};
use crate::linalg::checked_inverse;
use crate::model::{ChainModel, Dimension, JointKind, ManipulatorModel};

/// Central-difference step over `t0` (m or rad).
pub const TARGET_POINT_STEP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessDecomposition {
    /// Loaded stiffness with passive joints locked.
    pub kc0: DMatrix<f64>,
    /// Passive-joint correction; zero without passive joints.
    pub kcq: DMatrix<f64>,
    pub kc: DMatrix<f64>,
}

/// Loaded Cartesian stiffness of one chain at `state` under `F`.
pub fn chain_stiffness(
    chain: &ChainModel,
    dimension: Dimension,
    state: &ChainState,
    force: &Wrench,
) -> Result<StiffnessDecomposition> {
    let eval = ChainEval::new(chain, dimension, state);
    let jq = eval.jacobian(JointKind::Passive);
    let jt = eval.jacobian(JointKind::Elastic);
    let h = eval.hessians(force);

    let mut loaded = -h.hthetatheta;
    for (j, kj) in chain.joint_stiffness().iter().enumerate() {
        loaded[(j, j)] += kj;
    }
    let k = checked_inverse(&loaded, "loaded joint stiffness")?;
    let kc0 = checked_inverse(&(&jt * &k * jt.transpose()), "chain compliance")?;
    let d = dimension.size();
    if jq.ncols() == 0 {
        return Ok(StiffnessDecomposition {
            kcq: DMatrix::zeros(d, d),
            kc: kc0.clone(),
            kc0,
        });
    }
    let jqf = &jq + &jt * &k * &h.hthetaq;
    let a = &h.hqq + &h.hqtheta * &k * &h.hthetaq - jqf.transpose() * &kc0 * &jqf;
    let a_inv = checked_inverse(&a, "passive-joint block")?;
    let kcq = -(&kc0 * &jqf * a_inv * jqf.transpose() * &kc0);
    let kc = &kc0 - &kcq;
    Ok(StiffnessDecomposition { kc0, kcq, kc })
}

/// `Σ_i Kc_i` at the equilibria of `(t, t0)`.
pub fn total_stiffness(model: &ManipulatorModel, t: &Pose, t0: &Pose) -> Result<DMatrix<f64>> {
    let asm = Assembly::new(model, t0)?;
    let eq = asm.equilibria(t, None, &EquilibriumOptions::default())?;
    asm.stiffness(&eq)
}

/// Columns `cols` of `∂f(t | c + δ_i)/∂c` by central differences, with the
/// per-chain offsets `δ_i` held fixed.
pub fn target_point_columns(
    model: &ManipulatorModel,
    t: &Pose,
    command: &Pose,
    offsets: &[DVector<f64>],
    cols: &[usize],
    opts: &EquilibriumOptions,
) -> Result<DMatrix<f64>> {
    let d = model.d();
    let mut out = DMatrix::zeros(d, cols.len());
    let h = TARGET_POINT_STEP;
    let force_at = |shift: f64, k: usize| -> Result<Wrench> {
        let mut c = command.clone();
        c[k] += shift;
        let commands: Vec<Pose> = offsets.iter().map(|o| &c + o).collect();
        Assembly::with_commands(model, &commands)?.force(t, opts)
    };
    for (j, &k) in cols.iter().enumerate() {
        let col = (force_at(h, k)? - force_at(-h, k)?) / (2.0 * h);
        out.set_column(j, &col);
    }
    Ok(out)
}

/// `K_t.p. = ∂f(t | t0)/∂t0` by central differences over `t0`.
pub fn target_point_stiffness(model: &ManipulatorModel, t: &Pose, t0: &Pose) -> Result<DMatrix<f64>> {
    let d = model.d();
    let offsets = vec![DVector::zeros(d); model.m()];
    let cols: Vec<usize> = (0..d).collect();
    target_point_columns(model, t, t0, &offsets, &cols, &EquilibriumOptions::default())
}

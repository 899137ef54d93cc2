//! Loaded static equilibrium of each chain and the resulting force–deflection
//! maps `f_i(t | t0)` and `f(t | t0) = Σ f_i`.
//!
//! A chain is anchored by a command pose `t0`: rigid IK of `t0` fixes `ρ` and
//! seeds `q`, with springs at rest. Components of `t0` the chain cannot reach
//! rigidly are carried as a constant end-point offset, so the rigid end-point
//! of the anchored chain is always `t0`. The chain's real end-point is
//! `g(q, θ) + ε_i`; holding it at `t` means solving
//!
//! ```text
//! g(q, θ) = t − ε_i − a
//! Jqᵀ F = 0
//! Jθᵀ F = K_θ (θ − θ0)
//! ```
//!
//! for `(F, q, θ)` by Newton's method on the symmetric block system
//!
//! ```text
//! ⎡ 0    Jq    Jθ      ⎤
//! ⎢ Jqᵀ  Hqq   Hqθ     ⎥
//! ⎣ Jθᵀ  Hθq   Hθθ − K ⎦
//! ```
//!
//! where the `H` blocks are second derivatives of `gᵀF`. Dropping them gives
//! the plain first-order update; keeping them makes the iteration quadratic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinematics::{self, check_bounds, ChainEval, ChainState, Pose};
use crate::linalg;
use crate::model::{ChainModel, Dimension, JointKind, ManipulatorModel};
use crate::stiffness::{chain_stiffness, StiffnessDecomposition};

/// Operational-space force and moment.
pub type Wrench = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    /// Bound on ‖g − (t − ε − a)‖∞ (m, rad).
    pub tol_pose: f64,
    /// Bound on the joint-space force balance ‖(Jqᵀ F, Jθᵀ F − K(θ − θ0))‖∞.
    pub tol_force: f64,
    /// Bound on the last `(q, θ)` update.
    pub tol_step: f64,
    pub max_iterations: usize,
    /// Include the `H` blocks in the Newton matrix.
    pub geometric_terms: bool,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            tol_pose: 1e-9,
            tol_force: 1e-9,
            tol_step: 1e-12,
            max_iterations: 100,
            geometric_terms: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    /// Wrench needed to hold the end-point at `t`.
    pub force: Wrench,
    pub state: ChainState,
    /// Newton solves performed.
    pub iterations: usize,
    /// Final max of pose and force-balance residuals.
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Actuator configuration of one chain for a command pose.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainAnchor {
    pub command: Pose,
    pub rho: DVector<f64>,
    /// Passive coordinates of the rigid solution.
    pub q: DVector<f64>,
    /// `command − g(ρ, q, θ0)`: the part of the command the chain cannot reach rigidly.
    pub offset: DVector<f64>,
}

impl ChainAnchor {
    /// Least-squares rigid IK of `command` on the nominal chain.
    pub fn new(chain: &ChainModel, dimension: Dimension, command: &Pose, chain_index: usize) -> Result<Self> {
        if command.len() != dimension.size() {
            return Err(Error::Dimension {
                what: "command pose",
                expected: dimension.size(),
                got: command.len(),
            });
        }
        let (state, offset) = kinematics::inverse_kinematics_least_squares(chain, dimension, command)
            .map_err(|e| e.in_chain(chain_index))?;
        check_bounds(chain, &state, chain_index)?;
        Ok(ChainAnchor {
            command: command.clone(),
            rho: state.rho,
            q: state.q,
            offset,
        })
    }

    /// `(ρ, q, θ0)`.
    pub fn rigid_state(&self, chain: &ChainModel) -> ChainState {
        ChainState {
            rho: self.rho.clone(),
            q: self.q.clone(),
            theta: chain.rest(),
        }
    }
}

fn infinity_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// Solve `M x = b`; LU first, damped least squares if LU breaks down.
fn solve_kkt(m: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(x) = m.clone().lu().solve(b).filter(|x| x.iter().all(|v| v.is_finite())) {
        return Ok(x);
    }
    let mt = m.transpose();
    let mut a = &mt * &m;
    let lambda = 1e-12 * a.trace().max(f64::MIN_POSITIVE);
    for k in 0..a.nrows() {
        a[(k, k)] += lambda;
    }
    a.lu()
        .solve(&(&mt * b))
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::Singular {
            what: "equilibrium system",
            condition: linalg::condition_number(&m),
        })
}

/// Equilibrium of one anchored chain with its end-point held at `t`.
///
/// `start` warm-starts `(F, q, θ)` from a nearby solution.
pub fn solve_chain(
    chain: &ChainModel,
    dimension: Dimension,
    anchor: &ChainAnchor,
    t: &Pose,
    start: Option<&EquilibriumResult>,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumResult> {
    let d = dimension.size();
    if t.len() != d {
        return Err(Error::Dimension {
            what: "pose",
            expected: d,
            got: t.len(),
        });
    }
    let hold = t - &chain.assembly_error - &anchor.offset;
    let k = chain.joint_stiffness();
    let rest = chain.rest();
    let (nq, nt) = (chain.n_passive(), chain.n_elastic());
    let n = d + nq + nt;

    let (mut force, mut state) = match start {
        Some(s) => (s.force.clone(), s.state.clone()),
        None => (DVector::zeros(d), anchor.rigid_state(chain)),
    };
    state.rho.copy_from(&anchor.rho);

    let mut history = Vec::new();
    let mut last_step = f64::INFINITY;
    for iteration in 0..=opts.max_iterations {
        let eval = ChainEval::new(chain, dimension, &state);
        let jq = eval.jacobian(JointKind::Passive);
        let jt = eval.jacobian(JointKind::Elastic);
        let r1 = eval.pose() - &hold;
        let r2 = jq.tr_mul(&force);
        let spring = k.component_mul(&(&state.theta - &rest));
        let r3 = jt.tr_mul(&force) - &spring;
        let pose_res = infinity_norm(&r1);
        let force_res = infinity_norm(&r2).max(infinity_norm(&r3));
        let residual = pose_res.max(force_res);
        history.push(residual);
        if !residual.is_finite() {
            return Err(Error::Diverged {
                what: "chain equilibrium",
                iterations: iteration,
                residual,
                history,
            });
        }
        if pose_res <= opts.tol_pose && force_res <= opts.tol_force && last_step <= opts.tol_step {
            return Ok(EquilibriumResult {
                force,
                state,
                iterations: iteration,
                residual,
                history,
            });
        }
        if iteration == opts.max_iterations {
            break;
        }

        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, d), (d, nq)).copy_from(&jq);
        m.view_mut((0, d + nq), (d, nt)).copy_from(&jt);
        m.view_mut((d, 0), (nq, d)).copy_from(&jq.transpose());
        m.view_mut((d + nq, 0), (nt, d)).copy_from(&jt.transpose());
        if opts.geometric_terms {
            let h = eval.hessians(&force);
            m.view_mut((d, d), (nq, nq)).copy_from(&h.hqq);
            m.view_mut((d, d + nq), (nq, nt)).copy_from(&h.hqtheta);
            m.view_mut((d + nq, d), (nt, nq)).copy_from(&h.hthetaq);
            m.view_mut((d + nq, d + nq), (nt, nt)).copy_from(&h.hthetatheta);
        }
        for j in 0..nt {
            m[(d + nq + j, d + nq + j)] -= k[j];
        }
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, d).copy_from(&r1);
        rhs.rows_mut(d, nq).copy_from(&r2);
        rhs.rows_mut(d + nq, nt).copy_from(&r3);
        let step = -solve_kkt(m, &rhs)?;

        force += step.rows(0, d);
        state.q += step.rows(d, nq);
        state.theta += step.rows(d + nq, nt);
        last_step = infinity_norm(&step.rows(d, nq + nt).into_owned());
    }
    let residual = *history.last().unwrap_or(&f64::NAN);
    Err(Error::NotConverged {
        what: "chain equilibrium",
        iterations: opts.max_iterations,
        residual,
        history,
    })
}

/// Equilibrium of `chain` held at `t` when commanded to `t0`.
pub fn chain_equilibrium(
    chain: &ChainModel,
    dimension: Dimension,
    t: &Pose,
    t0: &Pose,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumResult> {
    let anchor = ChainAnchor::new(chain, dimension, t0, 0)?;
    solve_chain(chain, dimension, &anchor, t, None, opts)
}

/// `f_i(t | t0)` with default options.
pub fn chain_force(chain: &ChainModel, dimension: Dimension, t: &Pose, t0: &Pose) -> Result<Wrench> {
    Ok(chain_equilibrium(chain, dimension, t, t0, &EquilibriumOptions::default())?.force)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflectionOptions {
    /// Bound on ‖F − f(t)‖₂ (N, N·m).
    pub tol_force: f64,
    pub max_iterations: usize,
    /// Consecutive residual increases treated as divergence.
    pub divergence_window: usize,
    pub equilibrium: EquilibriumOptions,
}

impl Default for DeflectionOptions {
    fn default() -> Self {
        DeflectionOptions {
            tol_force: 1e-8,
            max_iterations: 50,
            divergence_window: 5,
            equilibrium: EquilibriumOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionResult {
    /// Loaded pose `t_F`.
    pub pose: Pose,
    /// Per-chain equilibria at `t_F`.
    pub chains: Vec<EquilibriumResult>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Model whose chains are anchored at given commands (one per chain).
#[derive(Debug, Clone)]
pub struct Assembly<'a> {
    pub model: &'a ManipulatorModel,
    anchors: Vec<ChainAnchor>,
}

impl<'a> Assembly<'a> {
    /// Every chain commanded to `t0`.
    pub fn new(model: &'a ManipulatorModel, t0: &Pose) -> Result<Self> {
        Self::with_commands(model, &vec![t0.clone(); model.m()])
    }

    pub fn with_commands(model: &'a ManipulatorModel, commands: &[Pose]) -> Result<Self> {
        if commands.len() != model.m() {
            return Err(Error::Dimension {
                what: "per-chain commands",
                expected: model.m(),
                got: commands.len(),
            });
        }
        let anchors = model
            .chains
            .iter()
            .zip(commands)
            .enumerate()
            .map(|(i, (chain, c))| ChainAnchor::new(chain, model.dimension, c, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Assembly { model, anchors })
    }

    pub fn anchors(&self) -> &[ChainAnchor] {
        &self.anchors
    }

    /// Per-chain equilibria with the platform held at `t`.
    pub fn equilibria(
        &self,
        t: &Pose,
        start: Option<&[EquilibriumResult]>,
        opts: &EquilibriumOptions,
    ) -> Result<Vec<EquilibriumResult>> {
        self.model
            .chains
            .iter()
            .zip(&self.anchors)
            .enumerate()
            .map(|(i, (chain, anchor))| {
                solve_chain(chain, self.model.dimension, anchor, t, start.map(|s| &s[i]), opts)
                    .map_err(|e| e.in_chain(i))
            })
            .collect()
    }

    /// `f(t | commands)`.
    pub fn force(&self, t: &Pose, opts: &EquilibriumOptions) -> Result<Wrench> {
        Ok(sum_forces(&self.equilibria(t, None, opts)?, self.model.d()))
    }

    /// Per-chain loaded stiffness at the given equilibria.
    pub fn chain_stiffnesses(&self, equilibria: &[EquilibriumResult]) -> Result<Vec<StiffnessDecomposition>> {
        self.model
            .chains
            .iter()
            .zip(equilibria)
            .enumerate()
            .map(|(i, (chain, eq))| {
                chain_stiffness(chain, self.model.dimension, &eq.state, &eq.force).map_err(|e| e.in_chain(i))
            })
            .collect()
    }

    /// `Σ Kc_i` at the given equilibria.
    pub fn stiffness(&self, equilibria: &[EquilibriumResult]) -> Result<DMatrix<f64>> {
        let d = self.model.d();
        Ok(self
            .chain_stiffnesses(equilibria)?
            .iter()
            .fold(DMatrix::zeros(d, d), |acc, s| acc + &s.kc))
    }

    /// Pose `t_F` with `f(t_F) = F`, by Newton's method from `start` using
    /// the total stiffness as Jacobian.
    pub fn deflect(&self, wrench: &Wrench, start: &Pose, opts: &DeflectionOptions) -> Result<DeflectionResult> {
        let d = self.model.d();
        if wrench.len() != d {
            return Err(Error::Dimension {
                what: "wrench",
                expected: d,
                got: wrench.len(),
            });
        }
        let mut t = start.clone();
        let mut chains = self.equilibria(&t, None, &opts.equilibrium)?;
        let mut history = Vec::new();
        let mut increases = 0;
        for iteration in 0..=opts.max_iterations {
            let r = wrench - sum_forces(&chains, d);
            let residual = r.norm();
            if let Some(&prev) = history.last() {
                increases = if residual > prev { increases + 1 } else { 0 };
            }
            history.push(residual);
            if residual <= opts.tol_force {
                return Ok(DeflectionResult {
                    pose: t,
                    chains,
                    iterations: iteration,
                    residual,
                    history,
                });
            }
            if increases >= opts.divergence_window || !residual.is_finite() {
                return Err(Error::Diverged {
                    what: "deflected pose",
                    iterations: iteration,
                    residual,
                    history,
                });
            }
            if iteration == opts.max_iterations {
                break;
            }
            let k = self.stiffness(&chains)?;
            t += linalg::checked_solve(&k, &r, "total stiffness")?;
            chains = self.equilibria(&t, Some(&chains), &opts.equilibrium)?;
        }
        let residual = *history.last().unwrap_or(&f64::NAN);
        Err(Error::NotConverged {
            what: "deflected pose",
            iterations: opts.max_iterations,
            residual,
            history,
        })
    }
}

pub fn sum_forces(results: &[EquilibriumResult], d: usize) -> Wrench {
    results.iter().fold(DVector::zeros(d), |acc, r| acc + &r.force)
}

/// `f(t | t0) = Σ_i f_i(t | t0)`, each chain carrying its own `ε_i`.
pub fn total_force(model: &ManipulatorModel, t: &Pose, t0: &Pose) -> Result<Wrench> {
    Assembly::new(model, t0)?.force(t, &EquilibriumOptions::default())
}

/// Loaded pose under `F` when every chain is commanded to `t0`.
pub fn deflected_pose(model: &ManipulatorModel, wrench: &Wrench, t0: &Pose) -> Result<Pose> {
    Ok(Assembly::new(model, t0)?
        .deflect(wrench, t0, &DeflectionOptions::default())?
        .pose)
}

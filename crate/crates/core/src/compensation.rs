//! Off-line compensation: find the commanded target `t0'` whose loaded pose
//! under `F` is the desired `t0`, i.e. `f(t0 | t0') = F`.
//!
//! Only the model's commanded components of the target can be changed. The
//! remaining components of the loaded pose are unknowns too, so each scheme
//! solves the square system `R(x) = F − f(t* | c) = 0` in
//! `x = (c[commanded], t*[free])`, with `t*[commanded] = t0[commanded]`.
//! With every component commanded the schemes reduce to
//!
//! ```text
//! newton      c' = c + K_tp⁻¹ (F − f(t0 | c))
//! linearized  c' = c − α Kc⁻¹ (F − f(t0 | c))
//! fixed point c' = c + α (t0 − f⁻¹(F | c))
//! ```
//!
//! stopping when ‖F − f(t0 | c)‖ < ε_F.
//!
//! Non-perfect chains are handled per point by shifting each chain's command
//! by `Δt_ε − ε_i`, where `Δt_ε` is the stiffness-weighted mean of the `ε_i`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::equilibrium::{sum_forces, Assembly, DeflectionOptions, EquilibriumResult, Wrench};
use crate::error::{Error, Result};
use crate::kinematics::{chain_jacobians, ChainState, Pose};
use crate::linalg::checked_solve;
use crate::model::{ChainModel, Dimension, ManipulatorModel};
use crate::stiffness::{chain_stiffness, target_point_columns};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Newton,
    Linearized,
    FixedPoint,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Newton, Method::Linearized, Method::FixedPoint];

    pub fn name(self) -> &'static str {
        match self {
            Method::Newton => "newton",
            Method::Linearized => "linearized",
            Method::FixedPoint => "fixed-point",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Method::Newton),
            "linearized" => Ok(Method::Linearized),
            "fixed-point" | "fixed_point" => Ok(Method::FixedPoint),
            _ => Err(Error::InvalidOptions(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensationOptions {
    pub method: Method,
    /// Relaxation for the linearized and fixed-point schemes, in (0, 1].
    pub alpha: f64,
    /// Force-residual tolerance (N).
    pub eps_f: f64,
    /// Pose tolerance for the verification pass (m).
    pub eps_t: f64,
    pub max_iterations: usize,
    /// Consecutive residual increases treated as divergence.
    pub divergence_window: usize,
    /// Fraction of trajectory points allowed to fail before the run aborts.
    pub max_failure_fraction: f64,
    pub deflection: DeflectionOptions,
}

impl Default for CompensationOptions {
    fn default() -> Self {
        CompensationOptions {
            method: Method::FixedPoint,
            alpha: 0.5,
            eps_f: 1e-6,
            eps_t: 1e-8,
            max_iterations: 50,
            divergence_window: 5,
            max_failure_fraction: 0.0,
            deflection: DeflectionOptions::default(),
        }
    }
}

impl CompensationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidOptions(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.eps_f.is_finite() && self.eps_f > 0.0 && self.eps_t.is_finite() && self.eps_t > 0.0) {
            return Err(Error::InvalidOptions("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidOptions("max_iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return Err(Error::InvalidOptions("failure fraction must be in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationPointResult {
    /// Desired pose.
    pub t0: Pose,
    /// Modified target `t0'`.
    pub t0_mod: Pose,
    /// Loaded pose reached under the modified commands.
    pub loaded_pose: Pose,
    /// Assembly-induced offset `Δt_ε`.
    pub delta_t_eps: Pose,
    /// Per-chain target shifts `Δt0_i` relative to `t0`.
    pub per_chain_targets: Vec<Pose>,
    /// Actuator coordinates under the modified commands.
    pub rho: Vec<DVector<f64>>,
    /// Actuator offsets versus rigid IK of `t0`.
    pub delta_rho: Vec<DVector<f64>>,
    /// Actuator reactions at the loaded state.
    pub tau: Vec<DVector<f64>>,
    pub chain_forces: Vec<Wrench>,
    /// Final ‖F − f(t0 | t0')‖ (N).
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// ‖loaded pose − t0‖ over commanded components from an independent
    /// deflection solve (m); set by the trajectory pass.
    pub verification: Option<f64>,
}

/// Per-chain target `Δt0_i = Δt0 + Δt_ε − ε_i`.
pub fn per_chain_targets(delta_t0: &Pose, delta_t_eps: &Pose, errors: &[DVector<f64>]) -> Vec<Pose> {
    errors.iter().map(|e| delta_t0 + delta_t_eps - e).collect()
}

/// `Δt_ε = (Σ Kc_i)⁻¹ Σ Kc_i ε_i` with unloaded chain stiffness at `t`.
pub fn assembly_deflection(model: &ManipulatorModel, t: &Pose, errors: &[DVector<f64>]) -> Result<Pose> {
    let d = model.d();
    if errors.len() != model.m() {
        return Err(Error::Dimension {
            what: "assembly errors",
            expected: model.m(),
            got: errors.len(),
        });
    }
    let nominal = model.without_assembly_errors();
    let asm = Assembly::new(&nominal, t)?;
    let zero = DVector::zeros(d);
    let mut k_sum = DMatrix::zeros(d, d);
    let mut weighted = DVector::zeros(d);
    for (i, ((chain, anchor), e)) in nominal.chains.iter().zip(asm.anchors()).zip(errors).enumerate() {
        let kc = chain_stiffness(chain, model.dimension, &anchor.rigid_state(chain), &zero)
            .map_err(|err| err.in_chain(i))?
            .kc;
        weighted += &kc * e;
        k_sum += kc;
    }
    checked_solve(&k_sum, &weighted, "total stiffness")
}

/// `τ = J_ρᵀ F` at the chain's loaded state.
pub fn actuator_reactions(
    chain: &ChainModel,
    dimension: Dimension,
    state: &ChainState,
    force: &Wrench,
) -> DVector<f64> {
    chain_jacobians(chain, dimension, state).jrho.tr_mul(force)
}

struct SchemeOutcome {
    command: Pose,
    loaded: Pose,
    chains: Vec<EquilibriumResult>,
    iterations: usize,
    residual: f64,
    history: Vec<f64>,
}

fn free_components(model: &ManipulatorModel) -> Vec<usize> {
    (0..model.d()).filter(|k| !model.commanded.contains(k)).collect()
}

fn commands(c: &Pose, offsets: &[DVector<f64>]) -> Vec<Pose> {
    offsets.iter().map(|o| c + o).collect()
}

/// Tracks the residual sequence for the stop, divergence and budget rules.
struct Monitor<'o> {
    what: &'static str,
    opts: &'o CompensationOptions,
    history: Vec<f64>,
    increases: usize,
}

impl<'o> Monitor<'o> {
    fn new(what: &'static str, opts: &'o CompensationOptions) -> Self {
        Monitor {
            what,
            opts,
            history: Vec::new(),
            increases: 0,
        }
    }

    /// `Ok(true)` when converged, `Ok(false)` to keep iterating.
    fn record(&mut self, iteration: usize, residual: f64) -> Result<bool> {
        if let Some(&prev) = self.history.last() {
            self.increases = if residual > prev { self.increases + 1 } else { 0 };
        }
        self.history.push(residual);
        if residual < self.opts.eps_f {
            return Ok(true);
        }
        if self.increases >= self.opts.divergence_window || !residual.is_finite() {
            return Err(Error::Diverged {
                what: self.what,
                iterations: iteration,
                residual,
                history: std::mem::take(&mut self.history),
            });
        }
        if iteration >= self.opts.max_iterations {
            return Err(Error::NotConverged {
                what: self.what,
                iterations: iteration,
                residual,
                history: std::mem::take(&mut self.history),
            });
        }
        Ok(false)
    }
}

fn run_jacobian_scheme(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    offsets: &[DVector<f64>],
    method: Method,
    opts: &CompensationOptions,
) -> Result<SchemeOutcome> {
    let d = model.d();
    let cmd = &model.commanded;
    let free = free_components(model);
    let eq_opts = &opts.deflection.equilibrium;
    let mut c = t0.clone();
    let mut loaded = t0.clone();
    let mut chains: Option<Vec<EquilibriumResult>> = None;
    let mut monitor = Monitor::new(
        if method == Method::Newton {
            "newton compensation"
        } else {
            "linearized compensation"
        },
        opts,
    );
    for iteration in 0.. {
        let asm = Assembly::with_commands(model, &commands(&c, offsets))?;
        let eq = asm.equilibria(&loaded, chains.as_deref(), eq_opts)?;
        let r = wrench - sum_forces(&eq, d);
        if monitor.record(iteration, r.norm())? {
            return Ok(SchemeOutcome {
                command: c,
                loaded,
                chains: eq,
                iterations: iteration,
                residual: r.norm(),
                history: monitor.history,
            });
        }
        let kc = asm.stiffness(&eq)?;
        let mut jac = DMatrix::zeros(d, d);
        match method {
            Method::Newton => {
                let ktp = target_point_columns(model, &loaded, &c, offsets, cmd, eq_opts)?;
                for (j, _) in cmd.iter().enumerate() {
                    jac.set_column(j, &ktp.column(j));
                }
            }
            _ => {
                for (j, &k) in cmd.iter().enumerate() {
                    jac.set_column(j, &(-kc.column(k)));
                }
            }
        }
        for (j, &k) in free.iter().enumerate() {
            jac.set_column(cmd.len() + j, &kc.column(k));
        }
        let what = if method == Method::Newton {
            "target-point stiffness"
        } else {
            "total stiffness"
        };
        let mut step = checked_solve(&jac, &r, what)?;
        if method == Method::Linearized {
            step *= opts.alpha;
        }
        for (j, &k) in cmd.iter().enumerate() {
            c[k] += step[j];
        }
        for (j, &k) in free.iter().enumerate() {
            loaded[k] += step[cmd.len() + j];
        }
        chains = Some(eq);
    }
    unreachable!()
}

fn run_fixed_point(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    offsets: &[DVector<f64>],
    opts: &CompensationOptions,
) -> Result<SchemeOutcome> {
    let d = model.d();
    let free = free_components(model);
    let eq_opts = &opts.deflection.equilibrium;
    let mut c = t0.clone();
    let mut start = t0.clone();
    let mut monitor = Monitor::new("fixed-point compensation", opts);
    for iteration in 0.. {
        let asm = Assembly::with_commands(model, &commands(&c, offsets))?;
        let deflection = asm.deflect(wrench, &start, &opts.deflection)?;
        let t_f = deflection.pose;
        let mut loaded = t0.clone();
        for &k in &free {
            loaded[k] = t_f[k];
        }
        let eq = asm.equilibria(&loaded, Some(&deflection.chains), eq_opts)?;
        let r = wrench - sum_forces(&eq, d);
        if monitor.record(iteration, r.norm())? {
            return Ok(SchemeOutcome {
                command: c,
                loaded,
                chains: eq,
                iterations: iteration,
                residual: r.norm(),
                history: monitor.history,
            });
        }
        for &k in &model.commanded {
            c[k] += opts.alpha * (t0[k] - t_f[k]);
        }
        start = t_f;
    }
    unreachable!()
}

fn run_scheme(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    offsets: &[DVector<f64>],
    opts: &CompensationOptions,
) -> Result<SchemeOutcome> {
    opts.validate()?;
    for (what, v) in [("target pose", t0), ("wrench", wrench)] {
        if v.len() != model.d() {
            return Err(Error::Dimension {
                what,
                expected: model.d(),
                got: v.len(),
            });
        }
    }
    match opts.method {
        Method::FixedPoint => run_fixed_point(model, t0, wrench, offsets, opts),
        m => run_jacobian_scheme(model, t0, wrench, offsets, m, opts),
    }
}

fn finish(
    model: &ManipulatorModel,
    t0: &Pose,
    offsets: &[DVector<f64>],
    delta_t_eps: Pose,
    outcome: SchemeOutcome,
) -> Result<CompensationPointResult> {
    let asm = Assembly::with_commands(model, &commands(&outcome.command, offsets))?;
    let nominal = Assembly::new(model, t0)?;
    let delta_t0 = &outcome.command - t0;
    let per_chain = offsets.iter().map(|o| &delta_t0 + o).collect();
    let rho: Vec<DVector<f64>> = asm.anchors().iter().map(|a| a.rho.clone()).collect();
    let delta_rho = rho.iter().zip(nominal.anchors()).map(|(r, a)| r - &a.rho).collect();
    let tau = model
        .chains
        .iter()
        .zip(&outcome.chains)
        .map(|(chain, eq)| actuator_reactions(chain, model.dimension, &eq.state, &eq.force))
        .collect();
    Ok(CompensationPointResult {
        t0: t0.clone(),
        t0_mod: outcome.command,
        loaded_pose: outcome.loaded,
        delta_t_eps,
        per_chain_targets: per_chain,
        rho,
        delta_rho,
        tau,
        chain_forces: outcome.chains.iter().map(|e| e.force.clone()).collect(),
        residual: outcome.residual,
        iterations: outcome.iterations,
        history: outcome.history,
        verification: None,
    })
}

fn compensate_with(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    method: Method,
    opts: &CompensationOptions,
) -> Result<CompensationPointResult> {
    let opts = CompensationOptions { method, ..*opts };
    let offsets = vec![DVector::zeros(model.d()); model.m()];
    let outcome = run_scheme(model, t0, wrench, &offsets, &opts)?;
    finish(model, t0, &offsets, DVector::zeros(model.d()), outcome)
}

/// Newton scheme on the target-point stiffness, every chain commanded alike.
pub fn compensate_newton(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    opts: &CompensationOptions,
) -> Result<CompensationPointResult> {
    compensate_with(model, t0, wrench, Method::Newton, opts)
}

/// Relaxed scheme using `−Kc` in place of the target-point stiffness.
pub fn compensate_linearized(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    opts: &CompensationOptions,
) -> Result<CompensationPointResult> {
    compensate_with(model, t0, wrench, Method::Linearized, opts)
}

/// Stiffness-free scheme driven by repeated deflection solves.
pub fn compensate_fixed_point(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    opts: &CompensationOptions,
) -> Result<CompensationPointResult> {
    compensate_with(model, t0, wrench, Method::FixedPoint, opts)
}

/// Projection onto the commanded components.
fn project_commanded(model: &ManipulatorModel, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(model.d(), |k, _| if model.commanded.contains(&k) { v[k] } else { 0.0 })
}

/// Full per-point procedure: assembly offset, per-chain commands, the selected
/// scheme against the combined loading, then IK and actuator reactions.
pub fn compensate_point(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    opts: &CompensationOptions,
) -> Result<CompensationPointResult> {
    let errors = model.assembly_errors();
    let d = model.d();
    let (delta_t_eps, offsets) = if model.has_assembly_errors() {
        let dt = assembly_deflection(model, t0, &errors)?;
        let zero = DVector::zeros(d);
        let offsets = per_chain_targets(&zero, &dt, &errors)
            .iter()
            .map(|o| project_commanded(model, o))
            .collect::<Vec<_>>();
        (dt, offsets)
    } else {
        (DVector::zeros(d), vec![DVector::zeros(d); model.m()])
    };
    let outcome = run_scheme(model, t0, wrench, &offsets, opts)?;
    finish(model, t0, &offsets, delta_t_eps, outcome)
}

/// Loaded pose reached by `result`'s per-chain commands, solved from scratch;
/// returns the commanded-component distance to `t0` (m).
pub fn verify_point(
    model: &ManipulatorModel,
    result: &CompensationPointResult,
    wrench: &Wrench,
    opts: &CompensationOptions,
) -> Result<f64> {
    let cmds: Vec<Pose> = result.per_chain_targets.iter().map(|dt| &result.t0 + dt).collect();
    let asm = Assembly::with_commands(model, &cmds)?;
    let t_f = asm.deflect(wrench, &result.t0, &opts.deflection)?.pose;
    let err = &t_f - &result.t0;
    Ok(model.commanded.iter().map(|&k| err[k] * err[k]).sum::<f64>().sqrt())
}

#[derive(Debug)]
pub struct CompensatedTrajectory {
    /// One entry per input point, in input order.
    pub points: Vec<Result<CompensationPointResult>>,
}

impl CompensatedTrajectory {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| p.is_err()).count()
    }

    pub fn max_verification(&self) -> f64 {
        self.points
            .iter()
            .filter_map(|p| p.as_ref().ok()?.verification)
            .fold(0.0, f64::max)
    }
}

/// Compensate every `(t0, F)` point and verify each against an independent
/// deflection solve. Points are processed in order; the run stops at the
/// first failure beyond `max_failure_fraction`.
pub fn compensate_trajectory(
    model: &ManipulatorModel,
    trajectory: &[(Pose, Wrench)],
    opts: &CompensationOptions,
) -> Result<CompensatedTrajectory> {
    opts.validate()?;
    let total = trajectory.len();
    let allowed = (opts.max_failure_fraction * total as f64).floor() as usize;
    let mut points = Vec::with_capacity(total);
    let mut failed = 0;
    for (index, (t0, wrench)) in trajectory.iter().enumerate() {
        let outcome = compensate_point(model, t0, wrench, opts).and_then(|mut r| {
            let residual = verify_point(model, &r, wrench, opts)?;
            if residual > opts.eps_t {
                return Err(Error::NotConverged {
                    what: "verification",
                    iterations: r.iterations,
                    residual,
                    history: r.history,
                });
            }
            r.verification = Some(residual);
            Ok(r)
        });
        if let Err(e) = outcome {
            failed += 1;
            let e = Error::Point {
                index,
                source: Box::new(e),
            };
            if failed > allowed {
                return Err(if allowed == 0 {
                    e
                } else {
                    Error::TooManyFailures {
                        failed,
                        total,
                        allowed: opts.max_failure_fraction,
                        last: Box::new(e),
                    }
                });
            }
            points.push(Err(e));
        } else {
            points.push(outcome);
        }
    }
    Ok(CompensatedTrajectory { points })
}

/// Uncompensated loaded-pose errors from each source and both together.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionErrors {
    /// Assembly errors and the wrench together.
    pub combined: Pose,
    /// Assembly errors only (`F = 0`).
    pub assembly: Pose,
    /// Wrench only, perfect chains.
    pub compliance: Pose,
}

impl SuperpositionErrors {
    pub fn superposed(&self) -> Pose {
        &self.assembly + &self.compliance
    }
}

/// Loaded-pose errors with every chain commanded to `t0`.
pub fn superposition_errors(
    model: &ManipulatorModel,
    t0: &Pose,
    wrench: &Wrench,
    opts: &CompensationOptions,
) -> Result<SuperpositionErrors> {
    let perfect = model.without_assembly_errors();
    let zero = DVector::zeros(model.d());
    let deflect = |m: &ManipulatorModel, f: &Wrench| -> Result<Pose> {
        Ok(Assembly::new(m, t0)?.deflect(f, t0, &opts.deflection)?.pose - t0)
    };
    Ok(SuperpositionErrors {
        combined: deflect(model, wrench)?,
        assembly: deflect(model, &zero)?,
        compliance: deflect(&perfect, wrench)?,
    })
}

/// Euclidean norm over the translational components.
pub fn positional_norm(dimension: Dimension, v: &DVector<f64>) -> f64 {
    dimension
        .translational()
        .iter()
        .map(|&k| v[k] * v[k])
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_fixture;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("secant".parse::<Method>().is_err());
    }

    #[test]
    fn options_are_checked() {
        let bad = CompensationOptions {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CompensationOptions {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(CompensationOptions::default().validate().is_ok());
    }

    #[test]
    fn axial_newton_lands_short() {
        let m = builtin_fixture("AXIAL-1").unwrap();
        let r = compensate_newton(&m, &v(&[0.2, 0.0, 0.0]), &v(&[100.0, 0.0, 0.0]), &Default::default()).unwrap();
        assert!((r.t0_mod[0] - 0.1999).abs() < 1e-9 * 0.1999, "{}", r.t0_mod);
        assert!((r.delta_rho[0][0] + 1e-4).abs() < 1e-12);
        assert!((r.tau[0][0] - 100.0).abs() < 1e-6);
    }

    #[test]
    fn zero_wrench_needs_no_compensation() {
        let m = builtin_fixture("TWO-ORTHO").unwrap();
        let t0 = v(&[0.01, 0.02, 0.0]);
        for method in Method::ALL {
            let opts = CompensationOptions {
                method,
                ..Default::default()
            };
            let r = compensate_point(&m, &t0, &DVector::zeros(3), &opts).unwrap();
            assert_eq!(r.t0_mod, t0);
            assert_eq!(r.iterations, 0);
        }
    }
}

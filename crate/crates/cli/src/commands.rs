use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use pkm_compliance::compensation::{
    compensate_trajectory, positional_norm, superposition_errors, CompensatedTrajectory, CompensationOptions,
    CompensationPointResult,
};
use pkm_compliance::equilibrium::{deflected_pose, Assembly, EquilibriumOptions, Wrench};
use pkm_compliance::kinematics::Pose;
use pkm_compliance::machining::{circle_trajectory, workspace_preset, MillingParams};
use pkm_compliance::model::{
    builtin_fixture, model_hash, ortho3_demo_assembly_errors, parse_model_unchecked, validate_model, Dimension,
    JointKind, LengthUnit, ManipulatorModel, Motion,
};
use serde::Serialize;

use crate::files::{
    expand, load_model, num, parse_trajectory, pose_columns, pose_from_si, pose_to_si, project, read_text,
    wrench_columns, wrench_from_si, wrench_to_si, write_outputs, Provenance, Row, Table, BUILTIN_PREFIX, POSE_NAMES,
    WRENCH_NAMES,
};
use crate::{Command, ErrorArgs, Failure, SolverArgs};

/// Condition number above which a stiffness matrix is reported as near-singular.
const CONDITION_WARNING: f64 = 1e8;

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { model } => validate(&model),
        Command::Compensate {
            model,
            trajectory,
            out_dir,
            units,
            errors,
            solver,
        } => {
            let started = Instant::now();
            let text = read_text(&trajectory)?;
            let (rows, input_unit) = parse_trajectory(&text, units.map(Into::into))?;
            let unit = units.map(Into::into).unwrap_or(input_unit);
            let base = load_model(&model)?;
            let model_used = apply_errors(base, &errors, unit)?;
            let run = Run::new("compensate", &model_used, &model, unit, &solver)?;
            let result = run.compensate(&rows)?;
            let mut outputs = run.trajectory_tables(&rows, &result);
            run.finish(&out_dir, &mut outputs, &result, started)
        }
        Command::MillingDemo {
            model,
            out_dir,
            units,
            preset,
            center,
            radius,
            points,
            closed,
            fr,
            ft,
            fz,
            tool_length,
            errors,
            solver,
        } => {
            let started = Instant::now();
            let unit: LengthUnit = units.into();
            let (base, source) = match &model {
                Some(source) => (load_model(source)?, source.clone()),
                None => (
                    builtin_fixture("ORTHO-3")?.with_assembly_errors(&ortho3_demo_assembly_errors())?,
                    format!("{BUILTIN_PREFIX}ORTHO-3 with 1 deg actuator misalignment"),
                ),
            };
            let model_used = apply_errors(base, &errors, unit)?;
            if model_used.dimension != Dimension::Spatial {
                return Err(Failure::Usage("milling-demo needs a spatial (6-D) model".into()));
            }
            let center = match (center, preset) {
                (Some(c), _) => {
                    expect_len(&c, 3, "--center")?;
                    let si = pose_to_si(&[c[0], c[1], c[2], 0.0, 0.0, 0.0], unit);
                    DVector::from_row_slice(&si)
                }
                (None, p) => workspace_preset(p.as_deref().unwrap_or("Q1"))?,
            };
            let params = MillingParams {
                fr,
                ft,
                fz,
                tool_length: tool_length.map_or(0.1, |h| h * unit.to_si()),
            };
            let radius = radius.map_or(0.05, |r| r * unit.to_si());
            let circle = circle_trajectory(&center, radius, points, &params, closed)?;
            let rows: Vec<Row> = circle
                .iter()
                .map(|p| Row {
                    phi: p.phi,
                    pose: std::array::from_fn(|k| p.t0[k]),
                    wrench: std::array::from_fn(|k| p.wrench[k]),
                })
                .collect();

            let run = Run::new("milling-demo", &model_used, &source, unit, &solver)?;
            let result = run.compensate(&rows)?;
            let mut outputs = vec![("trajectory.csv".to_string(), run.input_table(&rows))];
            outputs.extend(run.trajectory_tables(&rows, &result));
            outputs.extend(run.superposition_tables(&rows, &result)?);
            run.finish(&out_dir, &mut outputs, &result, started)
        }
        Command::Stiffness {
            model,
            pose,
            wrench,
            units,
            errors,
        } => {
            let unit: LengthUnit = units.into();
            let m = apply_errors(load_model(&model)?, &errors, unit)?;
            stiffness(&m, &pose, wrench.as_deref(), unit)
        }
    }
}

fn validate(source: &str) -> Result<(), Failure> {
    let model = match source.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => builtin_fixture(name)?,
        None => parse_model_unchecked(&read_text(Path::new(source))?)?,
    };
    let diagnostics = validate_model(&model);
    if diagnostics.is_empty() {
        println!(
            "{}: valid ({} chains, d = {}) sha256:{}",
            model.name,
            model.m(),
            model.d(),
            model_hash(&model)
        );
        return Ok(());
    }
    for d in &diagnostics {
        eprintln!("{}: {d}", model.name);
    }
    Err(Failure::Numerical(format!(
        "{} invalid: {} problem(s)",
        model.name,
        diagnostics.len()
    )))
}

fn expect_len(values: &[f64], n: usize, flag: &str) -> Result<(), Failure> {
    if values.len() == n {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{flag} takes {n} comma-separated values, got {}",
            values.len()
        )))
    }
}

fn parse_values(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Failure::Usage(format!("`{v}` is not a finite number")))
        })
        .collect()
}

fn apply_errors(model: ManipulatorModel, args: &ErrorArgs, unit: LengthUnit) -> Result<ManipulatorModel, Failure> {
    let mut errors = if args.no_assembly_error {
        vec![DVector::zeros(model.d()); model.m()]
    } else {
        model.assembly_errors()
    };
    if !args.no_assembly_error && args.assembly_error.is_empty() {
        return Ok(model);
    }
    for item in &args.assembly_error {
        let (chain, values) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--assembly-error `{item}`: expected CHAIN=x,y,z,rx,ry,rz")))?;
        let index = model
            .chains
            .iter()
            .position(|c| c.name == chain)
            .or_else(|| chain.parse::<usize>().ok().filter(|&i| i < model.m()))
            .ok_or_else(|| Failure::Usage(format!("--assembly-error: no chain `{chain}`")))?;
        let v = parse_values(values)?;
        if v.len() != 6 {
            return Err(Failure::Usage(format!(
                "--assembly-error `{item}`: expected 6 values, got {}",
                v.len()
            )));
        }
        let si = pose_to_si(&v, unit);
        errors[index] = project(model.dimension, &si, "assembly error", &POSE_NAMES).map_err(Failure::Usage)?;
    }
    Ok(model.with_assembly_errors(&errors)?)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: String,
    command: &'a str,
    arguments: Vec<String>,
    model: ManifestModel<'a>,
    units: &'a str,
    options: ManifestOptions,
    summary: Summary,
    files: Vec<String>,
    wall_time_s: f64,
    created_unix_s: u64,
}

#[derive(Serialize)]
struct ManifestModel<'a> {
    name: &'a str,
    sha256: &'a str,
    source: &'a str,
    assembly_errors_si: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ManifestOptions {
    method: String,
    alpha: f64,
    eps_f_n: f64,
    eps_t_m: f64,
    max_iterations: usize,
    allowed_failure_fraction: f64,
}

#[derive(Serialize)]
struct Summary {
    points: usize,
    converged: usize,
    failed: Vec<PointFailure>,
    max_iterations: usize,
    max_force_residual_n: f64,
    max_verification_m: f64,
}

#[derive(Serialize)]
struct PointFailure {
    index: usize,
    error: String,
    residual_history: Vec<f64>,
}

/// Everything shared by the commands that compensate a trajectory.
struct Run<'a> {
    model: &'a ManipulatorModel,
    source: &'a str,
    hash: String,
    unit: LengthUnit,
    opts: CompensationOptions,
    provenance: Provenance,
}

impl<'a> Run<'a> {
    fn new(
        command: &str,
        model: &'a ManipulatorModel,
        source: &'a str,
        unit: LengthUnit,
        solver: &SolverArgs,
    ) -> Result<Self, Failure> {
        let opts = CompensationOptions {
            method: solver.method.into(),
            alpha: solver.alpha,
            eps_f: solver.eps_f,
            eps_t: solver.eps_t,
            max_iterations: solver.max_iter,
            max_failure_fraction: solver.allow_failures,
            ..Default::default()
        };
        opts.validate()?;
        let hash = model_hash(model);
        let provenance = Provenance {
            command: command.to_string(),
            model_name: model.name.clone(),
            model_hash: hash.clone(),
            unit,
            method: opts.method.to_string(),
            alpha: opts.alpha,
            eps_f: opts.eps_f,
            eps_t: opts.eps_t,
        };
        Ok(Run {
            model,
            source,
            hash,
            unit,
            opts,
            provenance,
        })
    }

    fn operational(&self, row: &Row, index: usize) -> Result<(Pose, Wrench), Failure> {
        let dim = self.model.dimension;
        let at = |e: String| Failure::Usage(format!("trajectory point {index}: {e}"));
        Ok((
            project(dim, &row.pose, "pose", &POSE_NAMES).map_err(at)?,
            project(dim, &row.wrench, "wrench", &WRENCH_NAMES).map_err(at)?,
        ))
    }

    fn compensate(&self, rows: &[Row]) -> Result<CompensatedTrajectory, Failure> {
        let points = rows
            .iter()
            .enumerate()
            .map(|(i, r)| self.operational(r, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(compensate_trajectory(self.model, &points, &self.opts)?)
    }

    fn pose_cells(&self, pose: &[f64; 6]) -> Vec<String> {
        pose_from_si(pose, self.unit).iter().map(|&v| num(v)).collect()
    }

    fn position_cells(&self, v: &DVector<f64>) -> Vec<String> {
        let full = expand(self.model.dimension, v);
        self.pose_cells(&full)[..3].to_vec()
    }

    fn wrench_cells(&self, wrench: &[f64; 6]) -> Vec<String> {
        wrench_from_si(wrench, self.unit).iter().map(|&v| num(v)).collect()
    }

    fn trajectory_columns(&self) -> Vec<String> {
        let mut cols = vec!["phi_deg".to_string()];
        cols.extend(pose_columns("", self.unit));
        cols.extend(wrench_columns(self.unit));
        cols
    }

    /// The target trajectory in input format.
    fn input_table(&self, rows: &[Row]) -> String {
        let mut t = Table::new(self.trajectory_columns());
        for r in rows {
            let mut cells = vec![num(r.phi.to_degrees())];
            cells.extend(self.pose_cells(&r.pose));
            cells.extend(self.wrench_cells(&r.wrench));
            t.row(cells);
        }
        t.render(&self.provenance.header("target trajectory"))
    }

    /// Per actuator: column label stem and whether it is prismatic.
    fn actuators(&self) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        for chain in &self.model.chains {
            let acts: Vec<_> = chain.joints().filter(|j| j.kind() == JointKind::Actuated).collect();
            for (k, j) in acts.iter().enumerate() {
                let stem = if acts.len() == 1 {
                    chain.name.clone()
                } else {
                    format!("{}.{k}", chain.name)
                };
                out.push((stem, j.motion == Motion::Prismatic));
            }
        }
        out
    }

    fn trajectory_tables(&self, rows: &[Row], result: &CompensatedTrajectory) -> Vec<(String, String)> {
        let l = self.unit.label();
        let actuators = self.actuators();
        let phi = |r: &Row| num(r.phi.to_degrees());
        let nan = |n: usize| vec!["nan".to_string(); n];

        let mut compensated = Table::new(self.trajectory_columns());
        let mut drho = Table::new(
            std::iter::once("phi_deg".to_string())
                .chain(
                    actuators
                        .iter()
                        .map(|(s, p)| format!("drho_{s}_{}", if *p { l } else { "deg" })),
                )
                .collect(),
        );
        let mut tau = Table::new(
            std::iter::once("phi_deg".to_string())
                .chain(actuators.iter().map(|(s, p)| {
                    if *p {
                        format!("tau_{s}_N")
                    } else {
                        format!("tau_{s}_N{l}")
                    }
                }))
                .collect(),
        );
        let mut residual = Table::new(
            [
                "phi_deg",
                "status",
                "iterations",
                "force_residual_N",
                &format!("verification_{l}"),
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        );

        for (r, point) in rows.iter().zip(&result.points) {
            match point {
                Ok(p) => {
                    let mut row = vec![phi(r)];
                    row.extend(self.pose_cells(&expand(self.model.dimension, &p.t0_mod)));
                    row.extend(self.wrench_cells(&r.wrench));
                    compensated.row(row);
                    drho.row(std::iter::once(phi(r)).chain(self.actuator_cells(
                        p,
                        &actuators,
                        |p| &p.delta_rho,
                        false,
                    )));
                    tau.row(std::iter::once(phi(r)).chain(self.actuator_cells(p, &actuators, |p| &p.tau, true)));
                    residual.row([
                        phi(r),
                        "ok".into(),
                        p.iterations.to_string(),
                        num(p.residual),
                        num(p.verification.unwrap_or(f64::NAN) / self.unit.to_si()),
                    ]);
                }
                Err(_) => {
                    let mut row = vec![phi(r)];
                    row.extend(nan(6));
                    row.extend(self.wrench_cells(&r.wrench));
                    compensated.row(row);
                    drho.row(std::iter::once(phi(r)).chain(nan(actuators.len())));
                    tau.row(std::iter::once(phi(r)).chain(nan(actuators.len())));
                    residual.row([phi(r), "failed".into(), "nan".into(), "nan".into(), "nan".into()]);
                }
            }
        }
        let h = |title: &str| self.provenance.header(title);
        vec![
            (
                "compensated.csv".into(),
                compensated.render(&h("adjusted trajectory (commanded targets)")),
            ),
            (
                "delta_rho.csv".into(),
                drho.render(&h("actuator offsets versus rigid inverse kinematics")),
            ),
            ("tau.csv".into(), tau.render(&h("actuator forces at the loaded state"))),
            ("residual.csv".into(), residual.render(&h("per-point convergence"))),
        ]
    }

    /// Per-actuator values; `moment` selects moment rather than angle scaling
    /// for revolute actuators.
    fn actuator_cells(
        &self,
        p: &CompensationPointResult,
        actuators: &[(String, bool)],
        field: impl Fn(&CompensationPointResult) -> &Vec<DVector<f64>>,
        moment: bool,
    ) -> Vec<String> {
        let values: Vec<f64> = field(p).iter().flat_map(|v| v.iter().copied()).collect();
        values
            .iter()
            .zip(actuators)
            .map(|(&v, (_, prismatic))| {
                let scaled = match (prismatic, moment) {
                    (true, false) => v / self.unit.to_si(),
                    (true, true) => v,
                    (false, false) => v.to_degrees(),
                    (false, true) => v / self.unit.to_si(),
                };
                num(scaled)
            })
            .collect()
    }

    fn superposition_tables(
        &self,
        rows: &[Row],
        result: &CompensatedTrajectory,
    ) -> Result<Vec<(String, String)>, Failure> {
        let l = self.unit.label();
        let xyz = |p: &str| {
            ["x", "y", "z"]
                .iter()
                .map(|a| format!("{p}{a}_{l}"))
                .collect::<Vec<_>>()
        };
        let mut sources_cols = vec!["phi_deg".to_string()];
        for p in ["target_", "eps_only_", "f_only_", "combined_", "adjusted_"] {
            sources_cols.extend(xyz(p));
        }
        let mut sup_cols = vec!["phi_deg".to_string()];
        for p in ["e_assembly_", "e_compliance_", "e_combined_", "e_superposed_"] {
            sup_cols.extend(xyz(p));
        }
        sup_cols.extend([
            format!("gap_{l}"),
            format!("combined_norm_{l}"),
            format!("superposed_norm_{l}"),
        ]);
        let mut sources = Table::new(sources_cols);
        let mut sup = Table::new(sup_cols);
        let dim = self.model.dimension;

        for (i, (r, point)) in rows.iter().zip(&result.points).enumerate() {
            let (t0, wrench) = self.operational(r, i)?;
            let e = superposition_errors(self.model, &t0, &wrench, &self.opts).map_err(|e| {
                Failure::from(pkm_compliance::Error::Point {
                    index: i,
                    source: Box::new(e),
                })
            })?;
            let superposed = e.superposed();
            let phi = num(r.phi.to_degrees());

            let mut row = vec![phi.clone()];
            row.extend(self.position_cells(&t0));
            row.extend(self.position_cells(&(&t0 + &e.assembly)));
            row.extend(self.position_cells(&(&t0 + &e.compliance)));
            row.extend(self.position_cells(&(&t0 + &e.combined)));
            match point {
                Ok(p) => row.extend(self.position_cells(&p.t0_mod)),
                Err(_) => row.extend(vec!["nan".to_string(); 3]),
            }
            sources.row(row);

            let mut row = vec![phi];
            for v in [&e.assembly, &e.compliance, &e.combined, &superposed] {
                row.extend(self.position_cells(v));
            }
            let to_unit = |x: f64| num(x / self.unit.to_si());
            row.push(to_unit(positional_norm(dim, &(&e.combined - &superposed))));
            row.push(to_unit(positional_norm(dim, &e.combined)));
            row.push(to_unit(positional_norm(dim, &superposed)));
            sup.row(row);
        }
        let h = |title: &str| self.provenance.header(title);
        Ok(vec![
            (
                "error_sources.csv".into(),
                sources.render(&h(
                    "target, assembly-only, load-only, combined and adjusted trajectories",
                )),
            ),
            (
                "superposition.csv".into(),
                sup.render(&h("uncompensated errors from each source versus their sum")),
            ),
        ])
    }

    fn finish(
        &self,
        out_dir: &Path,
        outputs: &mut Vec<(String, String)>,
        result: &CompensatedTrajectory,
        started: Instant,
    ) -> Result<(), Failure> {
        let mut failed = Vec::new();
        let mut max_iterations = 0;
        let mut max_residual: f64 = 0.0;
        for (index, p) in result.points.iter().enumerate() {
            match p {
                Ok(p) => {
                    max_iterations = max_iterations.max(p.iterations);
                    max_residual = max_residual.max(p.residual);
                }
                Err(e) => failed.push(PointFailure {
                    index,
                    error: e.to_string(),
                    residual_history: e.history().map(<[f64]>::to_vec).unwrap_or_default(),
                }),
            }
        }
        for f in &failed {
            eprintln!("warning: point {} failed: {}", f.index, f.error);
        }
        let mut files: Vec<String> = outputs.iter().map(|(n, _)| n.clone()).collect();
        files.push("manifest.json".into());
        let manifest = Manifest {
            tool: format!("pkmc {}", env!("CARGO_PKG_VERSION")),
            command: &self.provenance.command,
            arguments: std::env::args().skip(1).collect(),
            model: ManifestModel {
                name: &self.model.name,
                sha256: &self.hash,
                source: self.source,
                assembly_errors_si: self
                    .model
                    .assembly_errors()
                    .iter()
                    .map(|e| e.iter().copied().collect())
                    .collect(),
            },
            units: self.unit.label(),
            options: ManifestOptions {
                method: self.opts.method.to_string(),
                alpha: self.opts.alpha,
                eps_f_n: self.opts.eps_f,
                eps_t_m: self.opts.eps_t,
                max_iterations: self.opts.max_iterations,
                allowed_failure_fraction: self.opts.max_failure_fraction,
            },
            summary: Summary {
                points: result.points.len(),
                converged: result.points.len() - failed.len(),
                failed,
                max_iterations,
                max_force_residual_n: max_residual,
                max_verification_m: result.max_verification(),
            },
            files,
            wall_time_s: started.elapsed().as_secs_f64(),
            created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Usage(e.to_string()))?;
        outputs.push(("manifest.json".into(), json + "\n"));
        write_outputs(out_dir, outputs)?;
        println!(
            "{} points, {} converged, max verification residual {:.3e} m -> {}",
            manifest.summary.points,
            manifest.summary.converged,
            manifest.summary.max_verification_m,
            out_dir.display()
        );
        Ok(())
    }
}

fn print_matrix(label: &str, m: &DMatrix<f64>) {
    println!("{label}");
    for r in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols()).map(|c| format!("{:>13.5e}", m[(r, c)] + 0.0)).collect();
        println!("  {}", cells.join(" "));
    }
}

/// Rank (relative to the largest singular value) and condition number.
fn conditioning(m: &DMatrix<f64>) -> (usize, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-9 * max).count();
    let min = sv.min();
    (rank, if min > 0.0 { max / min } else { f64::INFINITY })
}

fn describe(m: &DMatrix<f64>) -> (usize, f64) {
    let asym = (m - m.transpose()).norm() / m.norm().max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let (rank, cond) = conditioning(m);
    println!(
        "  asymmetry {asym:.2e}, rank {rank}/{}, condition {cond:.3e}, eigenvalues [{}]",
        m.nrows(),
        eig.iter().map(|e| format!("{e:.4e}")).collect::<Vec<_>>().join(", ")
    );
    (rank, cond)
}

fn stiffness(model: &ManipulatorModel, pose: &[f64], wrench: Option<&[f64]>, unit: LengthUnit) -> Result<(), Failure> {
    expect_len(pose, 6, "--pose")?;
    if let Some(w) = wrench {
        expect_len(w, 6, "--wrench")?;
    }
    let dim = model.dimension;
    let t0 = project(dim, &pose_to_si(pose, unit), "pose", &POSE_NAMES).map_err(Failure::Usage)?;
    let (t, loaded) = match wrench {
        Some(w) => {
            let f = project(dim, &wrench_to_si(w, unit), "wrench", &WRENCH_NAMES).map_err(Failure::Usage)?;
            (deflected_pose(model, &f, &t0)?, true)
        }
        None => (t0.clone(), false),
    };
    let asm = Assembly::new(model, &t0)?;
    let eq = asm.equilibria(&t, None, &EquilibriumOptions::default())?;
    let per_chain = asm.chain_stiffnesses(&eq)?;
    let total = asm.stiffness(&eq)?;

    println!("model {} sha256:{}", model.name, model_hash(model));
    println!(
        "units: SI (N/m, N/rad, N·m/rad); coordinates {:?}",
        coordinate_names(dim)
    );
    if loaded {
        let dt = &t - &t0;
        println!(
            "loaded pose offset from command: [{}]",
            dt.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(", ")
        );
    }
    for ((chain, s), e) in model.chains.iter().zip(&per_chain).zip(&eq) {
        println!(
            "\nchain {} (force [{}])",
            chain.name,
            e.force
                .iter()
                .map(|v| format!("{v:.4e}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        print_matrix("Kc0 (passive joints locked)", &s.kc0);
        print_matrix("Kcq (passive-joint correction)", &s.kcq);
        print_matrix("Kc", &s.kc);
        describe(&s.kc);
    }
    println!();
    print_matrix("total Kc", &total);
    let (rank, cond) = describe(&total);
    if rank < total.nrows() {
        eprintln!(
            "warning: total stiffness is singular (rank {rank}/{}, condition {cond:.3e})",
            total.nrows()
        );
    } else if cond > CONDITION_WARNING {
        eprintln!("warning: near-singular pose, total stiffness condition number {cond:.3e}");
    }
    Ok(())
}

fn coordinate_names(dim: Dimension) -> Vec<&'static str> {
    dim.rows().iter().map(|&k| POSE_NAMES[k]).collect()
}

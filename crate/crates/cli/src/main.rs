//! `pkmc`: compliance-error compensation for parallel manipulators.
//!
//! Exit status is 0 on success, 1 on numerical or model-validation failure and
//! 2 on I/O or usage errors.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pkm_compliance::compensation::Method;
use pkm_compliance::model::LengthUnit;

#[derive(Debug, Parser)]
#[command(
    name = "pkmc",
    version,
    about = "Stiffness analysis and off-line compliance-error compensation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file against every structural invariant.
    Validate {
        /// Model file, or `builtin:NAME` for a built-in fixture.
        #[arg(long)]
        model: String,
    },
    /// Compensate a trajectory file and write the adjusted trajectory with
    /// actuator offsets, actuator forces and residuals.
    Compensate {
        #[arg(long)]
        model: String,
        /// Trajectory file: φ (deg), pose (6), wrench (6) per row.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Output length unit; defaults to the trajectory's own unit.
        #[arg(long, value_enum)]
        units: Option<Units>,
        #[command(flatten)]
        errors: ErrorArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Generate a groove-milling circle, compensate it and write the
    /// error-source and superposition tables alongside.
    MillingDemo {
        /// Defaults to ORTHO-3 with 1° actuator misalignment on every chain.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Length unit for every option and output file.
        #[arg(long, value_enum, default_value_t = Units::M)]
        units: Units,
        /// Named circle centre.
        #[arg(long, conflicts_with = "center")]
        preset: Option<String>,
        /// Circle centre `x,y,z`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        /// Circle radius [default: 50 mm].
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 360)]
        points: usize,
        /// Append a closing point at φ = 360°.
        #[arg(long)]
        closed: bool,
        /// Radial cutting force (N).
        #[arg(long, default_value_t = 215.0, allow_negative_numbers = true)]
        fr: f64,
        /// Tangential cutting force (N).
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        ft: f64,
        /// Axial cutting force (N).
        #[arg(long, default_value_t = -25.0, allow_negative_numbers = true)]
        fz: f64,
        /// Tool length [default: 100 mm].
        #[arg(long)]
        tool_length: Option<f64>,
        #[command(flatten)]
        errors: ErrorArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print per-chain and total Cartesian stiffness at a pose.
    Stiffness {
        #[arg(long)]
        model: String,
        /// Pose `x,y,z,rx,ry,rz` (lengths in --units, angles in degrees).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        pose: Vec<f64>,
        /// External wrench `fx,fy,fz,mx,my,mz`; stiffness is then evaluated
        /// at the loaded pose.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        wrench: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Units::M)]
        units: Units,
        #[command(flatten)]
        errors: ErrorArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct ErrorArgs {
    /// Chain end-point error `CHAIN=x,y,z,rx,ry,rz` (lengths in --units,
    /// angles in degrees); CHAIN is a chain name or index. Repeatable.
    #[arg(long = "assembly-error", value_name = "CHAIN=VALUES", allow_hyphen_values = true)]
    assembly_error: Vec<String>,
    /// Zero every chain's assembly error before applying --assembly-error.
    #[arg(long)]
    no_assembly_error: bool,
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::FixedPoint)]
    method: MethodArg,
    /// Relaxation factor in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Force-residual tolerance (N).
    #[arg(long, default_value_t = 1e-6)]
    eps_f: f64,
    /// Pose tolerance of the verification pass (m).
    #[arg(long, default_value_t = 1e-8)]
    eps_t: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Fraction of points allowed to fail before the run aborts.
    #[arg(long, default_value_t = 0.0)]
    allow_failures: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    M,
    Mm,
}

impl From<Units> for LengthUnit {
    fn from(u: Units) -> Self {
        match u {
            Units::M => LengthUnit::M,
            Units::Mm => LengthUnit::Mm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Newton,
    Linearized,
    FixedPoint,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Newton => Method::Newton,
            MethodArg::Linearized => Method::Linearized,
            MethodArg::FixedPoint => Method::FixedPoint,
        }
    }
}

/// Failure with its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1.
    Numerical(String),
    /// Exit 2.
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Numerical(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Numerical(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<pkm_compliance::Error> for Failure {
    fn from(e: pkm_compliance::Error) -> Self {
        use pkm_compliance::Error as E;
        let mut msg = e.to_string();
        if let Some(h) = e.history() {
            let trace: Vec<String> = h.iter().map(|r| format!("{r:.3e}")).collect();
            msg.push_str(&format!("\nresidual history: [{}]", trace.join(", ")));
        }
        match e {
            E::Schema { .. }
            | E::UnknownFixture(_)
            | E::UnknownPreset(_)
            | E::PresetUndefined(_)
            | E::Dimension { .. }
            | E::InvalidOptions(_) => Failure::Usage(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

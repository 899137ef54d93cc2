//! Model loading, trajectory files, provenance headers and atomic output.
//!
//! Trajectory files are comma-separated text with `#` comment lines. A
//! `# units: mm|m` line sets the length unit. The first non-comment line may be
//! a column header. Each row is
//!
//! ```text
//! phi_deg, x, y, z, rx, ry, rz, fx, fy, fz, mx, my, mz
//! ```
//!
//! with lengths in the file unit, rotation-vector components in degrees,
//! forces in N and moments in N·(file unit).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DVector;
use pkm_compliance::model::{builtin_fixture, parse_model, Dimension, LengthUnit, ManipulatorModel};

use crate::Failure;

pub const BUILTIN_PREFIX: &str = "builtin:";

/// Reads `builtin:NAME` or a validated model file.
pub fn load_model(source: &str) -> Result<ManipulatorModel, Failure> {
    if let Some(name) = source.strip_prefix(BUILTIN_PREFIX) {
        return Ok(builtin_fixture(name)?);
    }
    let text = read_text(Path::new(source))?;
    Ok(parse_model(&text)?)
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// One trajectory row in SI units and radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub phi: f64,
    /// `(x, y, z, rx, ry, rz)`.
    pub pose: [f64; 6],
    /// `(fx, fy, fz, mx, my, mz)`.
    pub wrench: [f64; 6],
}

pub const POSE_NAMES: [&str; 6] = ["x", "y", "z", "rx", "ry", "rz"];
pub const WRENCH_NAMES: [&str; 6] = ["fx", "fy", "fz", "mx", "my", "mz"];

pub fn pose_to_si(values: &[f64], unit: LengthUnit) -> [f64; 6] {
    std::array::from_fn(|k| {
        if k < 3 {
            values[k] * unit.to_si()
        } else {
            values[k].to_radians()
        }
    })
}

pub fn pose_from_si(values: &[f64], unit: LengthUnit) -> [f64; 6] {
    std::array::from_fn(|k| {
        if k < 3 {
            values[k] / unit.to_si()
        } else {
            values[k].to_degrees()
        }
    })
}

pub fn wrench_to_si(values: &[f64], unit: LengthUnit) -> [f64; 6] {
    std::array::from_fn(|k| if k < 3 { values[k] } else { values[k] * unit.to_si() })
}

pub fn wrench_from_si(values: &[f64], unit: LengthUnit) -> [f64; 6] {
    std::array::from_fn(|k| if k < 3 { values[k] } else { values[k] / unit.to_si() })
}

/// Column labels for a pose, e.g. `x_mm` and `rx_deg`.
pub fn pose_columns(prefix: &str, unit: LengthUnit) -> Vec<String> {
    POSE_NAMES
        .iter()
        .enumerate()
        .map(|(k, n)| format!("{prefix}{n}_{}", if k < 3 { unit.label() } else { "deg" }))
        .collect()
}

pub fn wrench_columns(unit: LengthUnit) -> Vec<String> {
    WRENCH_NAMES
        .iter()
        .enumerate()
        .map(|(k, n)| {
            if k < 3 {
                format!("{n}_N")
            } else {
                format!("{n}_N{}", unit.label())
            }
        })
        .collect()
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split([',', ';', '\t', ' ']).filter(|f| !f.is_empty()).collect()
}

/// Parses a trajectory file. `fallback` applies when the file has no units line.
pub fn parse_trajectory(text: &str, fallback: Option<LengthUnit>) -> Result<(Vec<Row>, LengthUnit), Failure> {
    let mut unit = None;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = n + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("units:") {
                let u = LengthUnit::parse(value)
                    .ok_or_else(|| Failure::Usage(format!("line {lineno}: unknown unit `{}`", value.trim())))?;
                if rows.is_empty() {
                    unit = Some(u);
                } else {
                    return Err(Failure::Usage(format!("line {lineno}: units line after data")));
                }
            }
            continue;
        }
        let fields = split_fields(line);
        if !saw_header && rows.is_empty() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            saw_header = true;
            continue;
        }
        if fields.len() != 13 {
            return Err(Failure::Usage(format!(
                "line {lineno}: expected 13 values, found {}",
                fields.len()
            )));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Failure::Usage(format!("line {lineno}: `{f}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    let unit = unit
        .or(fallback)
        .ok_or_else(|| Failure::Usage("trajectory has no `# units: mm|m` line; pass --units".into()))?;
    if rows.is_empty() {
        return Err(Failure::Usage("trajectory has no data rows".into()));
    }
    let rows = rows
        .into_iter()
        .map(|v| Row {
            phi: v[0].to_radians(),
            pose: pose_to_si(&v[1..7], unit),
            wrench: wrench_to_si(&v[7..13], unit),
        })
        .collect();
    Ok((rows, unit))
}

/// Projects 6-D values onto the model's operational space; dropped components
/// must be zero.
pub fn project(dimension: Dimension, values: &[f64; 6], what: &str, names: &[&str; 6]) -> Result<DVector<f64>, String> {
    let rows = dimension.rows();
    for (k, v) in values.iter().enumerate() {
        if !rows.contains(&k) && *v != 0.0 {
            return Err(format!(
                "{what} component {} = {v} has no meaning for a planar model",
                names[k]
            ));
        }
    }
    Ok(DVector::from_iterator(rows.len(), rows.iter().map(|&k| values[k])))
}

/// Inverse of [`project`].
pub fn expand(dimension: Dimension, v: &DVector<f64>) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (i, &k) in dimension.rows().iter().enumerate() {
        out[k] = v[i];
    }
    out
}

/// Provenance lines written at the top of every data file.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub model_name: String,
    pub model_hash: String,
    pub unit: LengthUnit,
    pub method: String,
    pub alpha: f64,
    pub eps_f: f64,
    pub eps_t: f64,
}

impl Provenance {
    pub fn header(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# pkmc {}: {title}", self.command);
        let _ = writeln!(s, "# model: {} sha256:{}", self.model_name, self.model_hash);
        let _ = writeln!(s, "# units: {}", self.unit.label());
        let _ = writeln!(s, "# angles: deg, forces: N, moments: N·{}", self.unit.label());
        let _ = writeln!(s, "# method: {}", self.method);
        let _ = writeln!(s, "# alpha: {}", num(self.alpha));
        let _ = writeln!(s, "# eps_f: {} N", num(self.eps_f));
        let _ = writeln!(s, "# eps_t: {} m", num(self.eps_t));
        s
    }
}

/// Shortest round-trip decimal, in exponent form outside [1e-4, 1e15);
/// negative zero prints as `0`.
pub fn num(x: f64) -> String {
    let x = x + 0.0;
    if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// A data file: header, column names, rows.
pub struct Table {
    columns: Vec<String>,
    body: String,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            body: String::new(),
        }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        debug_assert_eq!(cells.len(), self.columns.len());
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn render(&self, header: &str) -> String {
        format!("{header}{}\n{}", self.columns.join(","), self.body)
    }
}

/// Writes every `(name, contents)` into `dir` via temporary files renamed in
/// place, so each output is either complete or absent.
pub fn write_outputs(dir: &Path, outputs: &[(String, String)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    let mut staged = Vec::with_capacity(outputs.len());
    for (name, contents) in outputs {
        let prefix = format!(".{name}.");
        let mut builder = tempfile::Builder::new();
        builder.prefix(&prefix);
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            builder.permissions(fs::Permissions::from_mode(0o644));
        }
        let mut tmp = builder
            .tempfile_in(dir)
            .map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, path) in staged {
        tmp.persist(&path)
            .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e.error)))?;
    }
    Ok(())
}

use std::path::Path;
use std::process::{Command, Output};

fn pkmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pkmc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Column names and numeric rows of an output file.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (cols, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (cols, rows) = table(path);
    let k = cols
        .iter()
        .position(|c| c == name)
        .unwrap_or_else(|| panic!("{name} not in {cols:?}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn validate_exit_codes() {
    let ok = pkmc(&["validate", "--model", &data("models/axial-1.json")]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("AXIAL-1: valid"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(data("models/axial-1.json")).unwrap();
    std::fs::write(&bad, text.replacen("\"stiffness\": 1000000.0", "\"stiffness\": 0.0", 1)).unwrap();
    let out = pkmc(&["validate", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("non-positive stiffness"), "{}", stderr(&out));

    let missing = pkmc(&["validate", "--model", "/nonexistent/model.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let usage = pkmc(&["validate"]);
    assert_eq!(usage.status.code(), Some(2));
    let unknown = pkmc(&["validate", "--model", "builtin:ORTHO-9"]);
    assert_eq!(unknown.status.code(), Some(2));
}

/// Diagonal of the printed total stiffness.
fn total_diagonal(text: &str) -> Vec<f64> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.iter().position(|l| *l == "total Kc").unwrap() + 1;
    lines[start..]
        .iter()
        .take_while(|l| !l.trim_start().starts_with("asymmetry"))
        .enumerate()
        .map(|(i, l)| l.split_whitespace().nth(i).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn stiffness_reports_fixture_values() {
    let out = pkmc(&["stiffness", "--model", "builtin:AXIAL-1", "--pose", "0.2,0,0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(total_diagonal(&stdout(&out)), vec![1e6, 1e6, 1e4]);

    let out = pkmc(&["stiffness", "--model", "builtin:TWO-ORTHO", "--pose", "0,0,0,0,0,0"]);
    let diag = total_diagonal(&stdout(&out));
    for (got, want) in diag.iter().zip([1e6 + 1e2, 1e2 + 1e6, 2e2]) {
        assert!((got - want).abs() <= 1e-5 * want, "{diag:?}");
    }

    let out = pkmc(&["stiffness", "--model", "builtin:PLANAR-RP", "--pose", "1,0,0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stderr(&out).contains("warning") && stderr(&out).contains("condition"),
        "{}",
        stderr(&out)
    );

    let out = pkmc(&["stiffness", "--model", "builtin:AXIAL-1", "--pose", "0.2,0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_trajectory(dir: &Path, name: &str, rows: &[[f64; 13]], unit: &str) -> String {
    let mut text = format!("# units: {unit}\nphi_deg,x,y,z,rx,ry,rz,fx,fy,fz,mx,my,mz\n");
    for r in rows {
        text.push_str(&r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn zero_wrench_trajectory_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<[f64; 13]> = (0..6)
        .map(|k| {
            let phi = 60.0 * k as f64;
            let mut r = [0.0; 13];
            r[0] = phi;
            r[1] = 126.35 + 50.0 * phi.to_radians().cos();
            r[2] = 126.35 + 50.0 * phi.to_radians().sin();
            r[3] = 126.35;
            r
        })
        .collect();
    let traj = write_trajectory(dir.path(), "t.csv", &rows, "mm");
    let out_dir = dir.path().join("out");
    let out = pkmc(&[
        "compensate",
        "--model",
        "builtin:ORTHO-3",
        "--trajectory",
        &traj,
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for (k, name) in ["x_mm", "y_mm", "z_mm"].iter().enumerate() {
        let got = column(&out_dir.join("compensated.csv"), name);
        for (g, r) in got.iter().zip(&rows) {
            assert!(
                (g - r[k + 1]).abs() <= 1e-15 * r[k + 1].abs().max(1.0),
                "{name}: {g} vs {}",
                r[k + 1]
            );
        }
    }
    let (cols, drho) = table(&out_dir.join("delta_rho.csv"));
    assert_eq!(cols, ["phi_deg", "drho_x_mm", "drho_y_mm", "drho_z_mm"]);
    for r in drho {
        for cell in &r[1..] {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn compensated_output_is_a_valid_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [[0.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0]];
    let traj = write_trajectory(dir.path(), "t.csv", &rows, "m");
    let out_dir = dir.path().join("out");
    let out = pkmc(&[
        "compensate",
        "--model",
        "builtin:AXIAL-1",
        "--trajectory",
        &traj,
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--method",
        "newton",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let x = column(&out_dir.join("compensated.csv"), "x_m");
    assert!((x[0] - 0.1999).abs() < 1e-12, "{x:?}");
    assert!((column(&out_dir.join("tau.csv"), "tau_axial_N")[0] - 100.0).abs() < 1e-6);
    assert!((column(&out_dir.join("delta_rho.csv"), "drho_axial_m")[0] + 1e-4).abs() < 1e-12);

    // feeding the adjusted trajectory back in is accepted
    let again = dir.path().join("again");
    let out = pkmc(&[
        "compensate",
        "--model",
        "builtin:AXIAL-1",
        "--trajectory",
        out_dir.join("compensated.csv").to_str().unwrap(),
        "--out-dir",
        again.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn failing_point_is_reported_by_index() {
    let dir = tempfile::tempdir().unwrap();
    let mut far = [0.0; 13];
    far[3] = 5.0;
    let traj = write_trajectory(dir.path(), "t.csv", &[[0.0; 13], far], "m");
    let out_dir = dir.path().join("out");
    let out = pkmc(&[
        "compensate",
        "--model",
        "builtin:ORTHO-3",
        "--trajectory",
        &traj,
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("trajectory point 1"), "{}", stderr(&out));
    assert!(!out_dir.join("compensated.csv").exists());

    let out = pkmc(&[
        "compensate",
        "--model",
        "builtin:ORTHO-3",
        "--trajectory",
        &traj,
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--allow-failures",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (_, rows) = table(&out_dir.join("residual.csv"));
    assert_eq!(rows[0][1], "ok");
    assert_eq!(rows[1][1], "failed");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["summary"]["failed"][0]["index"], 1);
}

#[test]
fn malformed_trajectory_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, "0,0,0,0,0,0,0,0,0,0,0,0,0\n").unwrap();
    let out_dir = dir.path().join("out");
    let args = [
        "compensate",
        "--model",
        "builtin:ORTHO-3",
        "--trajectory",
        path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ];
    let out = pkmc(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("units"));
    std::fs::write(&path, "# units: m\n0,0,0\n").unwrap();
    let out = pkmc(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"));
    let out = pkmc(&[&args[..], &["--alpha", "1.5"]].concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn milling_demo_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("demo");
    let out = pkmc(&[
        "milling-demo",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--points",
        "12",
        "--units",
        "mm",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let files = [
        "trajectory.csv",
        "compensated.csv",
        "delta_rho.csv",
        "tau.csv",
        "residual.csv",
        "error_sources.csv",
        "superposition.csv",
    ];
    for f in files {
        let text = std::fs::read_to_string(out_dir.join(f)).unwrap();
        for key in [
            "# units: mm",
            "# method: fixed-point",
            "# alpha: 0.5",
            "# eps_f: 1e-6 N",
            "# eps_t: 1e-8 m",
            "sha256:",
        ] {
            assert!(text.contains(key), "{f} lacks {key}");
        }
    }
    let (cols, _) = table(&out_dir.join("error_sources.csv"));
    for stem in ["target_", "eps_only_", "f_only_", "combined_", "adjusted_"] {
        assert!(cols.iter().any(|c| c.starts_with(stem)), "{stem} missing from {cols:?}");
    }
    // the two error sources interact: gap above 10 eps_t everywhere
    for gap in column(&out_dir.join("superposition.csv"), "gap_mm") {
        assert!(gap * 1e-3 > 10.0 * 1e-8, "{gap}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["summary"]["converged"], 12);
    assert!(manifest["summary"]["max_verification_m"].as_f64().unwrap() < 1e-8);
    assert!(manifest["wall_time_s"].is_number());

    // without assembly errors the assembly-only trajectory is the target
    let perfect = dir.path().join("perfect");
    let out = pkmc(&[
        "milling-demo",
        "--out-dir",
        perfect.to_str().unwrap(),
        "--points",
        "6",
        "--no-assembly-error",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for axis in ["x", "y", "z"] {
        let target = column(&perfect.join("error_sources.csv"), &format!("target_{axis}_m"));
        let eps_only = column(&perfect.join("error_sources.csv"), &format!("eps_only_{axis}_m"));
        assert_eq!(target, eps_only);
    }
}

#[test]
fn milling_demo_options() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("demo");
    let d = out_dir.to_str().unwrap();
    let out = pkmc(&["milling-demo", "--out-dir", d, "--points", "4", "--preset", "Q0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("undefined"));
    let out = pkmc(&[
        "milling-demo",
        "--out-dir",
        d,
        "--points",
        "4",
        "--center",
        "100,100,100",
        "--radius",
        "20",
        "--units",
        "mm",
        "--closed",
        "--assembly-error",
        "x=0,0,0.5,0,0,0",
        "--no-assembly-error",
        "--method",
        "newton",
        "--fr",
        "-100",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let phi = column(&out_dir.join("trajectory.csv"), "phi_deg");
    assert_eq!(phi, vec![0.0, 90.0, 180.0, 270.0, 360.0]);
    let x = column(&out_dir.join("trajectory.csv"), "x_mm");
    assert!((x[0] - 120.0).abs() < 1e-12);
    assert_eq!(column(&out_dir.join("trajectory.csv"), "fx_N")[0], -100.0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["model"]["assembly_errors_si"][0][2], 0.0005);
    assert_eq!(manifest["model"]["assembly_errors_si"][1][0], 0.0);

    let out = pkmc(&["milling-demo", "--out-dir", d, "--model", "builtin:AXIAL-1"]);
    assert_eq!(out.status.code(), Some(2));
}

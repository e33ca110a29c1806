use std::fs;
use std::path::Path;
use std::process::Command;

use sphereflow::config::parse_config;
use sphereflow::MonitorRecord;
use sphereflow_cli::{cmd_check, cmd_run, list_scenarios, monitors_csv, EXIT_MISMATCH, EXIT_OK};

fn config(text: &str, dir: &Path) -> sphereflow::config::RunConfig {
    let mut cfg = parse_config(text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn round_sphere_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("scenario = \"round_sphere\"\n[grid]\nnum_points = 64\n", dir.path());
    let out = cmd_run(&cfg).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK);
    let (header, rows) = read_csv(&dir.path().join("monitors.csv"));
    assert_eq!(header, MonitorRecord::COLUMNS);
    let res = rows.last().unwrap()[column(&header, "soliton_residual")];
    assert!(res <= 1e-6);

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("final_state.json")).unwrap()).unwrap();
    assert_eq!(json["terminal_status"], "converged");
    assert_eq!(json["h"].as_array().unwrap().len(), 64);
    assert_eq!(json["theta"].as_array().unwrap().len(), 64);
    assert!((json["soliton_constant"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let echo = fs::read_to_string(dir.path().join("echo.cfg")).unwrap();
    assert_eq!(parse_config(&echo).unwrap(), parse_config(&cfg.emit()).unwrap());
    assert!(echo.contains("residual_tol"));
}

#[test]
fn counterexample_run_breaks_down() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("scenario = \"counterexample\"\n[engine]\nsample_stride = 1\n", dir.path());
    let out = cmd_run(&cfg).unwrap();
    assert_eq!(out.status.label(), "breakdown(loss_of_convexity)");
    assert_eq!(out.exit_code(), EXIT_OK);
    let (header, rows) = read_csv(&dir.path().join("monitors.csv"));
    let z = column(&header, "zeta1_min");
    // starts at zero up to discretization error, ends clearly negative
    assert!(rows[0][z].abs() < 1e-5, "{}", rows[0][z]);
    assert!(rows.last().unwrap()[z] < -1e-5);
}

#[test]
fn mismatched_expectation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "[scenario]\nname = \"theorem2\"\nexpected = \"breakdown\"\n[grid]\nnum_points = 32\n[engine]\nt_max = 0.01\n",
        dir.path(),
    );
    let out = cmd_run(&cfg).unwrap();
    assert_eq!(out.status.label(), "t_max_reached");
    assert_eq!(out.exit_code(), EXIT_MISMATCH);
}

#[test]
fn theorem1a_run_converges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("scenario = \"theorem1a\"\n[grid]\nnum_points = 64\n", dir.path());
    let out = cmd_run(&cfg).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK, "{:?}", out.status);
    let (header, rows) = read_csv(&dir.path().join("monitors.csv"));
    assert!(rows.last().unwrap()[column(&header, "soliton_residual")] <= 1e-6);
}

#[test]
fn runs_are_bitwise_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = "scenario = \"theorem2\"\n[grid]\nnum_points = 32\n[engine]\nt_max = 0.2\nsample_stride = 7\n";
    cmd_run(&config(text, a.path())).unwrap();
    cmd_run(&config(text, b.path())).unwrap();
    let x = fs::read(a.path().join("monitors.csv")).unwrap();
    let y = fs::read(b.path().join("monitors.csv")).unwrap();
    assert!(x.len() > 200);
    assert_eq!(x, y);
}

#[test]
fn csv_schema_is_pinned() {
    let schema = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/monitors_schema.csv")).unwrap();
    let columns: Vec<&str> = schema.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(columns, MonitorRecord::COLUMNS);
    let csv = monitors_csv(&[]);
    assert_eq!(csv, format!("{}\n", columns.join(",")));
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let rec = MonitorRecord {
        time: 0.1,
        entropy_a: 1.0 / 3.0,
        eta: 1.0,
        conservation: 1.0,
        h_min: 1.0,
        h_max: 1.0,
        sigma_k_min: 1.0,
        sigma_k_max: 1.0,
        zeta1_min: -2.5e-9,
        zeta2_min: 1.0,
        grad_log_h_max: 0.0,
        soliton_residual: 0.0,
        speed_min: 1.0,
        speed_max: 1.0,
    };
    let csv = monitors_csv(&[rec]);
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "1.0000000000000001e-1");
    assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0 / 3.0);
    assert_eq!(fields[8], "-2.5000000000000001e-9");
}

#[test]
fn check_reports() {
    let dir = tempfile::tempdir().unwrap();
    let r = cmd_check(&config("scenario = \"counterexample\"\n", dir.path())).unwrap();
    assert!(!r.convexity.pass);
    assert!((r.convexity.min_eig + 0.5).abs() < 1e-3);
    assert!(r.convexity.theta_at_min.abs() < 0.01);
    assert!(r.render_text().contains("(3)-convexity: FAIL, min_eig ≈ -0.49"));

    let r = cmd_check(&config("scenario = \"round_sphere\"\n", dir.path())).unwrap();
    assert!(r.convexity.pass && r.closure_pass && r.firey.as_ref().unwrap().pass);

    let r = cmd_check(&config("scenario = \"theorem1\"\n", dir.path())).unwrap();
    assert!(r.convexity.pass);
    assert!((r.convexity.min_eig - 0.8).abs() < 1e-3);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["convexity"]["pass"], true);
}

#[test]
fn listing_names_every_preset() {
    let list = list_scenarios();
    for name in sphereflow::scenarios::SCENARIO_NAMES {
        assert!(list.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphereflow"))
}

#[test]
fn binary_runs_jobs_in_private_directories() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cfg");
    let b = dir.path().join("b.cfg");
    fs::write(&a, "scenario = \"round_sphere\"\n").unwrap();
    fs::write(&b, "scenario = \"counterexample\"\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["run", "--jobs", "2", "--grid-points", "128", "--output-dir"])
        .arg(&out_dir)
        .arg(&a)
        .arg(&b)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    for sub in ["00_a", "01_b"] {
        for file in ["monitors.csv", "final_state.json", "echo.cfg"] {
            assert!(out_dir.join(sub).join(file).exists(), "{sub}/{file}");
        }
    }
    let echo = fs::read_to_string(out_dir.join("00_a/echo.cfg")).unwrap();
    assert_eq!(parse_config(&echo).unwrap().num_points, 128);
}

#[test]
fn binary_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[scenario]\nname = \"theorem2\"\nk = 3\n").unwrap();
    let out = bin().arg("check").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k must satisfy 1 ≤ k ≤ n"));

    fs::write(&bad, "[scenario]\nname = \"theorem2\"\n[grid]\nnum_points = \n").unwrap();
    let out = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn unwritable_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    let cfg = config("scenario = \"round_sphere\"\n[grid]\nnum_points = 32\n", &file.join("sub"));
    assert!(cmd_run(&cfg).is_err());
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use yawstab::cli::{cmd_simulate, cmd_sweep, parse_metrics, read_records, RunManifest, RunMode, SweepManifest};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn manifest(scn: &str, out: &Path, mode: RunMode, plot: bool) -> RunManifest {
    RunManifest {
        scenario_path: scenario(scn),
        out_dir: out.to_path_buf(),
        mode,
        plot,
        overrides: Vec::new(),
    }
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|rd| rd.map(|e| e.unwrap().file_name().into_string().unwrap()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

#[test]
fn simulate_s1_writes_traces_metrics_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(&manifest("s1.scn", dir.path(), RunMode::Both, true)).unwrap();
    assert_eq!(
        listing(dir.path()),
        [
            "metrics.txt",
            "s1_controlled.csv",
            "s1_sideslip.svg",
            "s1_trajectory.svg",
            "s1_uncontrolled.csv",
            "s1_yaw_rate.svg"
        ]
    );
    let rows = (5.0f64 / 0.001).round() as usize + 1;
    for f in ["s1_controlled.csv", "s1_uncontrolled.csv"] {
        let text = fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,beta,r,beta_ref,r_ref,delta_f_cmd,M_cmd,delta_f_driver,wheel,T_brake,X,Y,psi"
        );
        let records = read_records(text.as_bytes()).unwrap();
        assert_eq!(records.len(), rows);
        // Constant speed: X advances by V Ts before the step.
        assert!((records[1].x - 0.02).abs() < 1e-12);
    }
}

#[test]
fn uncontrolled_only_writes_one_trace() {
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(&manifest("s2.scn", dir.path(), RunMode::UncontrolledOnly, false)).unwrap();
    assert_eq!(listing(dir.path()), ["metrics.txt", "s2_uncontrolled.csv"]);
    let metrics = fs::read_to_string(dir.path().join("metrics.txt")).unwrap();
    assert!(!metrics.lines().any(|l| l.starts_with("controlled.")));
    assert!(metrics.lines().any(|l| l.starts_with("uncontrolled.peak_yaw_error")));
    assert!(!metrics.contains("ratio."));
}

#[test]
fn malformed_scenario_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scn");
    fs::write(&bad, "speed_mps = fast\nmu = 0.5\n").unwrap();
    let out = dir.path().join("out");
    let mut m = manifest("s1.scn", &out, RunMode::Both, true);
    m.scenario_path = bad;
    let err = cmd_simulate(&m).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(listing(&out).is_empty());
}

#[test]
fn simulation_fault_is_distinct_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manifest("s3.scn", dir.path(), RunMode::Both, true);
    // A near-massless yaw axis leaves the controller with a degenerate QP.
    m.overrides = vec![("yaw_inertia".into(), "1e-6".into())];
    let err = cmd_simulate(&m).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(listing(dir.path()).is_empty());
}

#[test]
fn one_cell_sweep_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let sim_dir = dir.path().join("sim");
    let mut m = manifest("s2.scn", &sim_dir, RunMode::Both, false);
    m.overrides = vec![("duration_s".into(), "2".into())];
    cmd_simulate(&m).unwrap();
    let metrics = parse_metrics(&fs::read_to_string(sim_dir.join("metrics.txt")).unwrap());

    let sweep_dir = dir.path().join("sweep");
    let (path, rows) = cmd_sweep(&SweepManifest {
        scenario_path: scenario("s2.scn"),
        out_dir: sweep_dir,
        speeds: vec![50.0],
        mus: vec![0.7],
        overrides: m.overrides.clone(),
    })
    .unwrap();
    assert_eq!(rows.len(), 1);
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(&row[2], "ok");
    let mut compared = 0;
    for (name, value) in header.iter().zip(row.iter()).skip(3) {
        let from_sim = metrics.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());
        assert_eq!(from_sim, Some(value), "{name}");
        compared += 1;
    }
    assert_eq!(compared, 15);
}

#[test]
fn sweep_grid_is_cartesian_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let (path, rows) = cmd_sweep(&SweepManifest {
        scenario_path: scenario("s1.scn"),
        out_dir: dir.path().to_path_buf(),
        speeds: vec![20.0, 50.0, 70.0],
        mus: vec![0.4, 0.6, 0.7, 1.0],
        overrides: vec![("duration_s".into(), "1.5".into())],
    })
    .unwrap();
    assert_eq!(rows.len(), 12);
    let cells: Vec<(f64, f64)> = rows.iter().map(|r| (r.speed_mps, r.mu)).collect();
    assert_eq!(cells[0], (20.0, 0.4));
    assert_eq!(cells[3], (20.0, 1.0));
    assert_eq!(cells[4], (50.0, 0.4));
    assert_eq!(cells[11], (70.0, 1.0));
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn identical_cells_give_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = cmd_sweep(&SweepManifest {
        scenario_path: scenario("s3.scn"),
        out_dir: dir.path().to_path_buf(),
        speeds: vec![70.0, 70.0],
        mus: vec![0.4, 0.4],
        overrides: vec![("duration_s".into(), "1.5".into())],
    })
    .unwrap();
    let text = fs::read_to_string(path).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| *r == rows[0]));
}

#[test]
fn faulted_cell_is_recorded_and_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    let (_, rows) = cmd_sweep(&SweepManifest {
        scenario_path: scenario("s1.scn"),
        out_dir: dir.path().to_path_buf(),
        speeds: vec![20.0, -5.0],
        mus: vec![0.6],
        overrides: vec![("duration_s".into(), "1.2".into())],
    })
    .unwrap();
    assert!(rows[0].outcome.is_ok());
    assert!(rows[1].outcome.is_err());
}

#[test]
fn binary_exit_codes_and_env_default() {
    let exe = env!("CARGO_BIN_EXE_yawstab");
    let dir = tempfile::tempdir().unwrap();

    let status = Command::new(exe)
        .args(["simulate"])
        .arg(scenario("straight.scn"))
        .args(["--controlled-only", "--set", "duration_s=0.5"])
        .env("YAWSTAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(listing(dir.path()), ["metrics.txt", "straight_controlled.csv"]);

    let missing = Command::new(exe)
        .args(["simulate", "/nonexistent.scn"])
        .env("YAWSTAB_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let conflict = Command::new(exe)
        .arg("simulate")
        .arg(scenario("s1.scn"))
        .args(["--controlled-only", "--uncontrolled-only"])
        .output()
        .unwrap();
    assert_eq!(conflict.status.code(), Some(2));

    let bad_set = Command::new(exe)
        .arg("simulate")
        .arg(scenario("s1.scn"))
        .args(["--set", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(bad_set.status.code(), Some(2));
}

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sesi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sesi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, json: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn header(text: &str) -> Vec<String> {
    let line = text.lines().find(|l| !l.starts_with('#')).unwrap();
    line.split(',').map(String::from).collect()
}

fn meta(text: &str, key: &str) -> String {
    let prefix = format!("# {key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key}"))
        .to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn benchmark_run_has_801_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "b.json",
        r#"{"initial": "benchmark", "method": "sesi2"}"#,
    );
    let out = dir.path().join("run.csv");
    let o = sesi(&["run", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = read(&out);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 801);
    let h = header(&text);
    assert_eq!(h[0], "t");
    assert_eq!(&h[1..5], ["theta_0", "phi_0", "p_theta_0", "p_phi_0"]);
    assert_eq!(&h[13..18], ["E", "dE", "Lx", "Ly", "Lz"]);
    assert_eq!(h.len(), 1 + 12 + 5 + 6);
    assert_eq!(rows[0][14], 0.0);
    assert!((rows[800][0] - 800.0).abs() < 1e-9);
    assert!(text.contains("# wall_clock_s = "));
}

#[test]
fn equilibrium_run_has_zero_energy_deviation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "eq.json",
        r#"{"initial": [[1.0, 0.5, 0.0, 0.0]], "method": "sesi4", "n_steps": 100}"#,
    );
    let o = sesi(&["run", &cfg, "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[6] == 0.0));
}

#[test]
fn reruns_are_byte_identical_without_timing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "b.json",
        r#"{"initial": "benchmark", "method": "dopri45", "n_steps": 500}"#,
    );
    let a = sesi(&["run", &cfg, "--quiet", "--no-timing"]);
    let b = sesi(&["run", &cfg, "--quiet", "--no-timing"]);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert!(!String::from_utf8_lossy(&a.stdout).contains("wall_clock"));
}

#[test]
fn csv_numbers_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "b.json",
        r#"{"initial": "benchmark", "method": "sesi2", "n_steps": 1, "sample_every": 1}"#,
    );
    let o = sesi(&["run", &cfg, "--quiet", "--no-timing"]);
    let rows = data_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows[0][3], 0.25);
    assert_eq!(rows[0][4], 0.172_717_402_985_404_3);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(
        &dir,
        "bad.json",
        r#"{"initial": "benchmark", "method": "rk4"}"#,
    );
    assert_eq!(sesi(&["run", &bad, "--quiet"]).status.code(), Some(2));
    let missing = dir.path().join("none.json");
    assert_eq!(
        sesi(&["run", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );

    let pole = write_config(
        &dir,
        "pole.json",
        r#"{"initial": [[0.1, 0.0, -1.0, 0.0]], "method": "sesi2", "tau": 0.2, "n_steps": 10}"#,
    );
    let o = sesi(&["run", &pole, "--quiet"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 1"));

    let mass = write_config(
        &dir,
        "m.json",
        r#"{"initial": "benchmark", "method": "sesi2", "mass": 1.0}"#,
    );
    assert_eq!(sesi(&["run", &mass, "--quiet"]).status.code(), Some(5));
    assert_eq!(sesi(&["oracle", &mass, "--quiet"]).status.code(), Some(5));
}

#[test]
fn converge_reports_second_order() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"initial": "benchmark", "method": "sesi2"}"#,
    );
    let o = sesi(&["converge", &cfg, "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let slope: f64 = meta(&text, "slope").parse().unwrap();
    assert!((slope - 2.0).abs() <= 0.1, "{slope}");
    assert_eq!(data_rows(&text).len(), 4);

    let one = write_config(
        &dir,
        "one.json",
        r#"{"initial": "benchmark", "method": "sesi2", "taus": [0.1]}"#,
    );
    assert_eq!(sesi(&["converge", &one, "--quiet"]).status.code(), Some(2));
    let dp = write_config(
        &dir,
        "dp.json",
        r#"{"initial": "benchmark", "method": "dopri45"}"#,
    );
    assert_eq!(sesi(&["converge", &dp, "--quiet"]).status.code(), Some(2));
}

#[test]
fn compare_writes_per_method_files_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "cmp.json",
        r#"{"initial": "benchmark", "methods": ["sesi2", "sesi4", "midpoint", "dopri45"]}"#,
    );
    let out = dir.path().join("cmp");
    let o = sesi(&["compare", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for m in ["sesi2", "sesi4", "midpoint", "dopri45"] {
        assert_eq!(data_rows(&read(&out.join(format!("{m}.csv")))).len(), 801);
    }
    let summary = read(&out.join("summary.csv"));
    let lines: Vec<&str> = summary.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 5);
    let field = |method: &str, col: usize| -> f64 {
        let l = lines.iter().find(|l| l.starts_with(method)).unwrap();
        l.split(',').nth(col).unwrap().parse().unwrap()
    };
    for m in ["sesi2", "sesi4", "midpoint"] {
        assert!(field(m, 3) <= 2.0 * field(m, 2));
    }
    assert!(field("dopri45", 3) > field("dopri45", 2));
    assert!(field("midpoint", 7) > field("sesi2", 7));

    let single = write_config(
        &dir,
        "s.json",
        r#"{"initial": "benchmark", "methods": ["sesi2"]}"#,
    );
    assert_eq!(
        sesi(&["compare", &single, "--quiet"]).status.code(),
        Some(2)
    );
}

#[test]
fn compare_reports_partial_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "cmp.json",
        r#"{"initial": "benchmark", "methods": ["sesi2", "midpoint"], "n_steps": 100,
            "midpoint": {"tolerance": 1e-13, "max_iterations": 1}}"#,
    );
    let o = sesi(&["compare", &cfg, "--quiet", "--no-timing"]);
    assert_eq!(o.status.code(), Some(4));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("sesi2,ok,"));
    assert!(text.contains("midpoint,failed,"));
}

#[test]
fn oracle_output_is_six_fold_symmetric() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "o.json",
        r#"{"initial": "benchmark", "samples_per_period": 40}"#,
    );
    let o = sesi(&["oracle", &cfg, "--quiet", "--no-timing"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let advance: f64 = meta(&text, "azimuth_per_period").parse().unwrap();
    assert!((advance - PI / 3.0).abs() <= 1e-9);
    let closure: f64 = meta(&text, "closure_distance").parse().unwrap();
    assert!(closure <= 1e-8);

    let rows = data_rows(&text);
    assert_eq!(rows.len(), 6 * 40 + 1);
    let period: f64 = meta(&text, "radial_period").parse().unwrap();
    let dt = period / 40.0;
    for (k, r) in rows.iter().enumerate() {
        assert!((r[0] - k as f64 * dt).abs() <= 1e-12);
    }
    assert!((rows[240][0] - 6.0 * period).abs() <= 1e-12);
    // one period later, every sample is the earlier one rotated by pi/3
    let (s, c) = (PI / 3.0).sin_cos();
    for k in 0..200 {
        let (x, y) = (rows[k][3], rows[k][4]);
        let (x2, y2) = (rows[k + 40][3], rows[k + 40][4]);
        assert!((x2 - (c * x - s * y)).abs() <= 1e-10);
        assert!((y2 - (s * x + c * y)).abs() <= 1e-10);
    }
}

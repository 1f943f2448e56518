use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONSERVATIVE: &str = r#"{
  "schema_version": 1,
  "model": {"kind": "modal", "lambda": [1, 4, 9, 16]},
  "schedule": {"tau": 1.0, "cycles": 3, "even": [6.283185307179586], "odd": [0.5]},
  "profile": {"b1": 0.0, "b2": 0.0},
  "initial": {"kind": "values", "u": [1.0, 0.5, 0.25, 0.125], "v": [0.0, 0.0, 0.0, 0.0]},
  "numerics": {"dt": 0.031415926535897934}
}"#;

const PERIODIC: &str = r#"{
  "schema_version": 1,
  "model": {"kind": "modal", "lambda": [1, 4, 9, 16]},
  "schedule": {"tau": 1.0, "cycles": 10, "even": [6.283185307179586], "odd": [0.5]},
  "profile": {"b1": 1.0, "b2": 0.05},
  "initial": {"kind": "values", "u": [1.0, 1.0, 1.0, 1.0], "v": [0.0, 0.0, 0.0, 0.0]},
  "numerics": {"dt": 0.01, "sample_stride": 10},
  "certification": {"mode": "periodic"}
}"#;

const DESTABILIZING: &str = r#"{
  "schema_version": 1,
  "model": {"kind": "modal_string", "length": 1.0, "modes": 8, "omega1": [0.0, 1.0], "omega2": [0.0, 1.0]},
  "schedule": {"tau": 1.0, "cycles": 20, "even": [1.0], "odd": [1.0]},
  "profile": {"b1": 0.05, "b2": 2.0},
  "initial": {"kind": "sine_series", "u": [1.0], "v": [0.0]},
  "numerics": {"dt": 0.005, "sample_stride": 20},
  "certification": {"mode": "restricted"}
}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_delaystab"));
    c.env_remove("DELAYSTAB_WORKERS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    let mut c = bin();
    c.args(args).arg("--config").arg(config).arg("--out-dir").arg(out);
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn conservative_simulation_keeps_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CONSERVATIVE);
    let o = run(&["simulate", "--no-metadata"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,E_S,E,interval_index,parity,switch");
    let es: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(es.len() > 100);
    assert!(es.iter().all(|e| (e / es[0] - 1.0).abs() < 1e-10));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["switches"].as_array().unwrap().len(), 7);
    assert!(summary["es0"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_is_byte_identical_without_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", PERIODIC);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&run(&["simulate", "--no-metadata"], &cfg, out)), 0);
    }
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("trace.csv")).unwrap());

    let c = dir.path().join("c");
    assert_eq!(code(&run(&["simulate"], &cfg, &c)), 0);
    let tc = std::fs::read_to_string(c.join("trace.csv")).unwrap();
    let (meta, rest) = tc.split_once('\n').unwrap();
    assert!(meta.starts_with("# delaystab"));
    assert_eq!(rest.as_bytes(), &ta[..]);
}

#[test]
fn missing_tau_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &CONSERVATIVE.replace("\"tau\": 1.0, ", ""));
    let o = run(&["simulate"], &cfg, dir.path());
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.contains("missing field `tau`") && err.contains("schedule"), "{err}");
    assert!(err.contains("bad.json:4:"), "{err}");
}

#[test]
fn wave_step_above_grid_spacing_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "w.json",
        r#"{
          "schema_version": 1,
          "model": {"kind": "wave_internal", "length": 1.0, "nodes": 99, "omega1": [0.0, 1.0], "omega2": [0.0, 1.0]},
          "schedule": {"tau": 1.0, "cycles": 1, "even": [1.0], "odd": [0.5]},
          "profile": {"b1": 0.5, "b2": 0.1},
          "initial": {"kind": "sine_series", "u": [1.0], "v": [0.0]},
          "numerics": {"dt": 0.02}
        }"#,
    );
    let o = run(&["simulate"], &cfg, dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("exceeds h"), "{}", stderr(&o));
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pass = write(dir.path(), "pass.json", PERIODIC);
    let o = run(&["certify"], &pass, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "PASS");

    let fail = write(dir.path(), "fail.json", DESTABILIZING);
    assert_eq!(code(&run(&["certify"], &fail, dir.path())), 1);

    let unspecified = PERIODIC.replace(
        "\"b2\": 0.05}",
        "\"b2\": 0.05, \"tails\": {\"m\": {\"kind\": \"unspecified\"}, \"big_m\": {\"kind\": \"unspecified\"}, \"m_odd\": {\"kind\": \"unspecified\"}}}",
    );
    let undecidable = write(dir.path(), "u.json", &unspecified);
    assert_eq!(code(&run(&["certify"], &undecidable, dir.path())), 2);

    // no certification section
    let plain = write(dir.path(), "c.json", CONSERVATIVE);
    assert_eq!(code(&run(&["certify"], &plain, dir.path())), 3);
}

fn sweep_config(axes: &str) -> String {
    PERIODIC.replace(
        "\"certification\": {\"mode\": \"periodic\"}",
        &format!("\"certification\": {{\"mode\": \"periodic\"}}, \"sweep\": {{\"parameters\": [{axes}]}}"),
    )
}

#[test]
fn sweep_rows_follow_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        &sweep_config(r#"{"name": "m_odd_scale", "values": [1, 64]}, {"name": "t_tilde", "values": [0.25, 0.5]}"#),
    );
    let mut c = bin();
    c.args(["sweep", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).env("DELAYSTAB_WORKERS", "2");
    let o = c.output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(csv.lines().next().unwrap(), "index,m_odd_scale,t_tilde,verdict,rho_max,mu_hat,note");
    assert_eq!(rows.len(), 4);
    let key: Vec<(f64, f64)> = rows.iter().map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap())).collect();
    assert_eq!(key, vec![(1.0, 0.25), (1.0, 0.5), (64.0, 0.25), (64.0, 0.5)]);
    // a strong enough delayed gain breaks the certificate
    assert_eq!(rows[0][3], "PASS");
    assert_eq!(rows[3][3], "FAIL");

    // one point reproduces certify
    let one = write(dir.path(), "one.json", &sweep_config(r#"{"name": "tau", "values": [1.0]}"#));
    let out = dir.path().join("one");
    assert_eq!(code(&run(&["sweep"], &one, &out)), 0);
    let row = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let cert = run(&["certify"], &one, &out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let fields: Vec<&str> = row.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[2], report["verdict"].as_str().unwrap());
    assert_eq!(code(&cert), 0);
    let mu: f64 = fields[4].parse().unwrap();
    // JSON float parsing may be off by one ulp
    assert!((mu - report["decay_fit"]["mu"].as_f64().unwrap()).abs() <= 1e-15 * mu.abs());
}

#[test]
fn oversized_sweep_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = (1..=400).map(|i| format!("{}", 1.0 + i as f64 / 400.0)).collect();
    let v = values.join(", ");
    let cfg = write(
        dir.path(),
        "big.json",
        &sweep_config(&format!(r#"{{"name": "tau", "values": [{v}]}}, {{"name": "m_scale", "values": [{v}]}}"#)),
    );
    let o = run(&["sweep"], &cfg, dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("exceeds"), "{}", stderr(&o));
}

#[test]
fn plots_from_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", PERIODIC);
    assert_eq!(code(&run(&["simulate"], &cfg, dir.path())), 0);
    let o = bin().args(["plots", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["energy.gp", "log_energy.gp", "cycle_ratios.gp"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let log = std::fs::read_to_string(dir.path().join("log_energy.gp")).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let mu = summary["decay_fit"]["mu"].as_f64().unwrap();
    let line = log.lines().find(|l| l.starts_with("mu_hat = ")).unwrap();
    let in_script: f64 = line["mu_hat = ".len()..].parse().unwrap();
    assert!((in_script - mu).abs() <= 1e-15 * mu.abs());

    let empty = write(dir.path(), "empty.csv", "t,E_S,E,interval_index,parity,switch\n");
    let o = bin().args(["plots", "--trace"]).arg(&empty).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("empty trace"));

    let partial = write(dir.path(), "partial.csv", "t,E_S\n0,1\n");
    let o = bin().args(["plots", "--trace"]).arg(&partial).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("missing column"));
}

#[test]
fn observability_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "o.json",
        &PERIODIC.replace(
            "\"certification\"",
            "\"observability\": {\"t_min\": 3.141592653589793, \"t_max\": 6.283185307179586, \"points\": 3}, \"certification\"",
        ),
    );
    let o = run(&["observability"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("observability.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1));
}

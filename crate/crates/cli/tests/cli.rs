use modalbridge_cli::output::parse_csv;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_modalbridge"));
    c.env_remove("MODALBRIDGE_THREADS");
    c
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>) -> Output {
    let mut c = bin();
    c.args(args);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn schema(name: &str) -> Value {
    let text = std::fs::read_to_string(crate_dir().join("schemas").join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn type_ok(v: &Value, t: &str) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        _ => panic!("schema type {t}"),
    }
}

/// Structural check covering the keywords the published schemas use.
fn conforms(v: &Value, s: &Value) -> Result<(), String> {
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(t) => type_ok(v, t),
            Value::Array(ts) => ts.iter().any(|t| type_ok(v, t.as_str().unwrap())),
            _ => false,
        };
        if !ok {
            return Err(format!("{v} is not of type {t}"));
        }
    }
    if let Some(e) = s.get("enum") {
        if !e.as_array().unwrap().contains(v) {
            return Err(format!("{v} not in {e}"));
        }
    }
    if let Some(c) = s.get("const") {
        if c != v {
            return Err(format!("{v} != {c}"));
        }
    }
    if let Some(alts) = s.get("oneOf") {
        let n = alts.as_array().unwrap().iter().filter(|a| conforms(v, a).is_ok()).count();
        if n != 1 {
            return Err(format!("{v} matches {n} alternatives"));
        }
    }
    if let Some(obj) = v.as_object() {
        for r in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(r.as_str().unwrap()) {
                return Err(format!("missing {r}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, val) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(ps) => conforms(val, ps).map_err(|e| format!("{k}: {e}"))?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(arr), Some(items)) = (v.as_array(), s.get("items")) {
        for x in arr {
            conforms(x, items)?;
        }
    }
    Ok(())
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn kernel_half_columns_are_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kernel": {"hurst": 0.5, "n_t": 5, "n_s": 4}}"#);
    let o = run(&["kernel"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(header, ["t", "s", "K_hyp", "K_alt", "abs_rel_diff"]);
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[2] == 1.0 && r[3] == 1.0));
}

#[test]
fn kernel_forms_agree_at_three_quarters() {
    let o = run(&["kernel"], Some(&crate_dir().join("configs/kernel.json")));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows) = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| r[4] <= 1e-8));
}

#[test]
fn malformed_hurst_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kernel": {"hurst": 1.5}}"#);
    let o = run(&["kernel"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hurst"), "{}", stderr(&o));

    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 1.5, "rho": 0, "horizon": 1}, "density": {"endpoints": [[0, 0]]}}"#,
    );
    let o = run(&["density"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hurst"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kernel": {"hurst": 0.3, "colour": 1}}"#);
    let o = run(&["kernel"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
    // missing file, missing block, bad drift, bad flag
    assert_eq!(run(&["kernel"], Some(&dir.path().join("nope.json"))).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"model": {"hurst": 0.3, "rho": 0, "horizon": 1}}"#);
    assert_eq!(run(&["density"], Some(&cfg)).status.code(), Some(2));
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.3, "rho": 0, "horizon": 1, "h1": "sin(z)"}, "density": {"endpoints": [[0, 0]]}}"#,
    );
    let o = run(&["density"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("h1"));
    assert_eq!(run(&["kernel", "--format", "svg"], Some(&cfg)).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn modal_path_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.49, "rho": 0, "horizon": 1}, "modal_path": {"endpoint": [1, 1], "n": 100}}"#,
    );
    let o = run(&["modal-path"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(header, ["t", "x_path", "y_path", "m11", "m12", "m21", "m22"]);
    for r in &rows {
        assert!((r[1] - r[0]).abs() <= 0.05 && (r[2] - r[0]).abs() <= 0.05);
    }
    let last = rows.last().unwrap();
    assert!((last[0] - 1.0).abs() <= 1e-10 && (last[1] - 1.0).abs() <= 1e-10 && (last[2] - 1.0).abs() <= 1e-10);

    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.01, "rho": 0, "horizon": 1}, "modal_path": {"endpoint": [1, 1], "n": 200}}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["modal-path", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows) = parse_csv(&std::fs::read_to_string(out.join("modal_path.csv")).unwrap()).unwrap();
    assert!((rows[10][0] - 0.05).abs() < 1e-15);
    assert!(rows[10][2] > 0.45 && rows[10][2] < 0.55);
    assert!(std::fs::read_to_string(out.join("modal_path.svg")).unwrap().starts_with("<svg"));

    let o = run(&["modal-path", "--format", "svg"], Some(&cfg));
    assert!(stdout(&o).starts_with("<svg"));
}

#[test]
fn figure_grid_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["modal-path", "--figure-grid", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 16);
    assert_eq!(names.iter().filter(|n| n.ends_with(".svg")).count(), 4);
}

#[test]
fn density_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.3, "rho": 0.4, "horizon": 0.5}, "density": {"endpoints": [[0.1, 0.2], [-0.3, 0.0]], "n": 100}}"#,
    );
    let o = run(&["density"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    conforms(&v, &schema("density.schema.json")).unwrap();
    for r in v["results"].as_array().unwrap() {
        assert_eq!(r["p_hat_leading"], r["phi"]);
        assert!(r["alpha"].is_null());
    }

    // constant drifts, H = 1/2, rho = 0: product of two normal densities
    let (mu, nu, t) = (0.2, -0.1, 0.5);
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.5, "rho": 0, "horizon": 0.5, "x0": 0.1, "y0": 0.2, "h1": "0.2", "h2": "-0.1"},
            "density": {"endpoints": [[0.4, 0.0]], "n": 50}}"#,
    );
    let v = json(&run(&["density"], Some(&cfg)));
    let r = &v["results"][0];
    let g = |d: f64| (-d * d / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
    let exact = g(0.3 - mu * t) * g(-0.2 - nu * t);
    assert!((r["p_hat_full"].as_f64().unwrap() - exact).abs() <= 1e-10 * exact);
    assert_eq!(r["drift_class"], "TimeOnly");

    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.8, "rho": 0.2, "horizon": 0.5, "h1": "sin(x)", "holder_gamma": 0.4},
            "density": {"endpoints": [[0, 0]]}}"#,
    );
    let o = run(&["density"], Some(&cfg));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = run(&["density"], Some(&crate_dir().join("configs/density.json")));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    conforms(&json(&o), &schema("density.schema.json")).unwrap();
}

#[test]
fn simulate_is_deterministic_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.5, "rho": 0, "horizon": 1},
            "simulate": {"point": [0, 0], "n_paths": 40000, "n_steps": 8, "seed": 5, "chunk_size": 3000,
                         "estimator": {"kind": "bin", "width_x": 0.2, "width_y": 0.2}, "write_terminals": true}}"#,
    );
    let outs: Vec<(String, String)> = [("1", "a"), ("1", "b"), ("3", "c")]
        .iter()
        .map(|(threads, sub)| {
            let out = dir.path().join(sub);
            let o = bin()
                .args(["simulate", "--out", out.to_str().unwrap(), "--config"])
                .arg(&cfg)
                .env("MODALBRIDGE_THREADS", threads)
                .output()
                .unwrap();
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            (
                std::fs::read_to_string(out.join("simulate.json")).unwrap(),
                std::fs::read_to_string(out.join("terminals.csv")).unwrap(),
            )
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
    let v: Value = serde_json::from_str(&outs[0].0).unwrap();
    conforms(&v, &schema("simulate.schema.json")).unwrap();
    assert_eq!(v["n_paths"], 40000);
    assert_eq!(v["seed"], 5);
    let (_, rows) = parse_csv(&outs[0].1).unwrap();
    assert_eq!(rows.len(), 40000);
    // standard bivariate normal peak, small-bin bias well under 1%
    let (est, se) = (v["estimate"].as_f64().unwrap(), v["std_err"].as_f64().unwrap());
    let peak = 1.0 / (2.0 * std::f64::consts::PI);
    assert!((est - peak).abs() <= 3.0 * se + 0.01 * peak, "{est} +- {se}");

    // --seed overrides the config
    let o = run(&["simulate", "--seed", "6"], Some(&cfg));
    assert_eq!(json(&o)["seed"], 6);
    assert_eq!(
        bin().args(["kernel"]).env("MODALBRIDGE_THREADS", "zero").output().unwrap().status.code(),
        Some(2)
    );
}

#[test]
fn bridge_mc_zero_drift_is_the_prefactor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"hurst": 0.3, "rho": 0.5, "horizon": 0.5},
            "bridge_mc": {"endpoint": [0.2, 0.1], "n_paths": 100, "n_steps": 16, "seed": 1},
            "density": {"endpoints": [[0.2, 0.1]], "n": 16}}"#,
    );
    let o = run(&["bridge-mc"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    conforms(&v, &schema("bridge_mc.schema.json")).unwrap();
    let phi = json(&run(&["density"], Some(&cfg)))["results"][0]["phi"].as_f64().unwrap();
    assert!((v["estimate"].as_f64().unwrap() - phi).abs() <= 1e-14 * phi);
    assert_eq!(v["std_err"].as_f64().unwrap(), 0.0);

    let o = run(&["bridge-mc"], Some(&crate_dir().join("configs/bridge_mc.json")));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn validate_quick_and_fault_injection() {
    let o = run(&["validate", "--quick"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    conforms(&v, &schema("validate.schema.json")).unwrap();
    assert_eq!(v["passed"], true);
    let statuses: Vec<&str> = v["criteria"].as_array().unwrap().iter().map(|c| c["status"].as_str().unwrap()).collect();
    assert_eq!(statuses.len(), 11);
    assert_eq!(statuses.iter().filter(|s| **s == "pass").count(), 7);

    let o = run(&["validate", "--quick", "--fault-kappa-scale", "1.01"], None);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["passed"], false);
    assert_eq!(v["criteria"][0]["status"], "fail");
    assert!(stderr(&o).contains("criterion  1 [FAIL]"));
}

#[test]
fn shipped_configs_match_the_schema() {
    let s = schema("run_config.schema.json");
    for e in std::fs::read_dir(crate_dir().join("configs")).unwrap() {
        let p = e.unwrap().path();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        conforms(&v, &s).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        modalbridge_cli::config::RunConfig::load(&p).unwrap();
    }
}

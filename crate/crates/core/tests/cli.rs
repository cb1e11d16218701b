use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", self.stdout))
    }
}

fn sigcore(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_sigcore"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: status.code().expect("exit code"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> Run {
    let run = sigcore(args);
    assert_eq!(run.code, 0, "{args:?} failed: {}", run.stderr);
    assert!(run.stderr.is_empty(), "unexpected diagnostics: {}", run.stderr);
    run
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        Files {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn write(&self, name: &str, text: &str) -> String {
        let path: PathBuf = self.dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path.to_str().unwrap().to_string()
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_string()
    }
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn q_value(q: &Value, set: &[u64]) -> f64 {
    q["q"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| floats(&e["set"]).iter().map(|&c| c as u64).eq(set.iter().copied()))
        .unwrap()["value"]
        .as_f64()
        .unwrap()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

const BRIDGE: &str = r#"{"n":5,"structure":{"type":"paths","minimal_path_sets":[[1,4],[2,5],[1,3,5],[2,3,4]]}}"#;
const SERIES_PARALLEL: &str = r#"{"n":3,"structure":{"type":"paths","minimal_path_sets":[[1,2],[1,3]]}}"#;
const IID: &str = r#"{"type":"iid"}"#;

#[test]
fn signature_examples() {
    let f = Files::new();
    let series = f.write("series.json", r#"{"n":4,"structure":{"type":"series"}}"#);
    let iid = f.write("iid.json", IID);
    let out = ok(&["signature", "--system", &series, "--model", &iid]).json();
    assert_eq!(floats(&out["p"]), vec![1.0, 0.0, 0.0, 0.0]);
    assert_eq!(out["route"], "boland");

    let bridge = f.write("bridge.json", BRIDGE);
    let out = ok(&["signature", "--system", &bridge, "--model", &iid]).json();
    assert_close(&floats(&out["p"]), &[0.0, 0.2, 0.6, 0.2, 0.0], 1e-12);
    assert_close(&[out["checks"]["sum_p"].as_f64().unwrap()], &[1.0], 1e-12);
    let tails = floats(&out["tails"]);
    assert_eq!(tails.len(), 5);
    assert_close(&tails, &[1.0, 1.0, 0.8, 0.2, 0.0], 1e-12);
}

#[test]
fn signature_matches_simulation() {
    let f = Files::new();
    let system = f.write("sp.json", SERIES_PARALLEL);
    let model = f.write("w.json", r#"{"type":"weibull","alpha":1,"lambda":[1,1,2]}"#);
    let exact = ok(&["signature", "--system", &system, "--model", &model]).json();
    assert_eq!(exact["route"], "weibull_closed_form");
    let sim = ok(&["simulate", "--system", &system, "--model", &model, "--samples", "1000000", "--seed", "0"]).json();
    assert_eq!(sim["n_samples"], 1_000_000);
    assert_eq!(sim["model"]["lambda"], serde_json::json!([1, 1, 2]));
    for ((p, p_hat), se) in floats(&exact["p"]).iter().zip(floats(&sim["p_hat"])).zip(floats(&sim["se"])) {
        assert!((p - p_hat).abs() <= 3.0 * se.max(1e-12), "{p} vs {p_hat} ± {se}");
    }
}

#[test]
fn explicit_routes() {
    let f = Files::new();
    let system = f.write("sp.json", SERIES_PARALLEL);
    let model = f.write("w.json", r#"{"type":"weibull","alpha":1.5,"lambda":[1,3,2]}"#);
    let closed = floats(&ok(&["signature", "--system", &system, "--model", &model, "--route", "closed-form"]).json()["p"]);
    for route in ["difference", "quadrature"] {
        let out = ok(&["signature", "--system", &system, "--model", &model, "--route", route]).json();
        assert_close(&floats(&out["p"]), &closed, 1e-8);
    }
    let out = ok(&["signature", "--system", &system, "--model", &model, "--route", "quadrature", "--normalize-levels"]).json();
    assert_eq!(out["route"], "quadrature");
    assert_close(&[out["checks"]["sum_p"].as_f64().unwrap()], &[1.0], 1e-15);

    let iid = f.write("iid.json", IID);
    let boland = ok(&["signature", "--system", &system, "--model", &iid]).json();
    let general = ok(&["signature", "--system", &system, "--model", &iid, "--route", "exchangeable"]).json();
    assert_eq!(general["route"], "exchangeable");
    assert_eq!(boland["p"], general["p"]);
}

#[test]
fn quality_examples() {
    let f = Files::new();
    let iid = f.write("iid.json", r#"{"type":"iid","n":3}"#);
    let out = ok(&["quality", "--model", &iid]).json();
    assert_eq!(out["route"], "exchangeable");
    for set in [[1u64].as_slice(), &[2], &[3], &[1, 2], &[1, 3], &[2, 3]] {
        assert!((q_value(&out, set) - 1.0 / 3.0).abs() <= 1e-16);
    }
    assert_close(&floats(&out["level_sums"]), &[1.0, 1.0, 1.0], 1e-15);

    let w = f.write("w.json", r#"{"type":"weibull","alpha":1,"lambda":[1,2]}"#);
    let out = ok(&["quality", "--model", &w, "--tilde"]).json();
    assert!((q_value(&out, &[1]) - 2.0 / 3.0).abs() <= 1e-15);
    let tilde = out["q_tilde"].as_array().unwrap();
    assert!((tilde[1]["value"].as_f64().unwrap() - 4.0 / 3.0).abs() <= 1e-15);

    // uniform orderings give the exchangeable table
    let perms: Vec<String> = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]]
        .iter()
        .map(|p| format!(r#"{{"perm":[{},{},{}],"p":{}}}"#, p[0], p[1], p[2], 1.0 / 6.0))
        .collect();
    let uniform = f.write("u.json", &format!(r#"{{"type":"order_probs","probs":[{}]}}"#, perms.join(",")));
    let from_orders = ok(&["quality", "--model", &uniform]).json();
    assert_eq!(from_orders["route"], "order_probs");
    let iid_q = ok(&["quality", "--model", &iid]).json();
    let values = |v: &Value| -> Vec<f64> { v["q"].as_array().unwrap().iter().map(|e| e["value"].as_f64().unwrap()).collect() };
    assert_close(&values(&from_orders), &values(&iid_q), 1e-15);

    let iid_no_n = f.write("iid2.json", IID);
    let out = ok(&["quality", "--model", &iid_no_n, "--n", "4"]).json();
    assert_eq!(out["n"], 4);
}

#[test]
fn project_examples() {
    let f = Files::new();
    let system = f.write("sp.json", SERIES_PARALLEL);
    let model = f.write("w.json", r#"{"type":"weibull","alpha":2,"lambda":[1,2,3]}"#);
    let quality = ok(&["quality", "--model", &model]);
    let weights = f.write("q.json", &quality.stdout);
    let sig = ok(&["signature", "--system", &system, "--model", &model]).json();
    let proj = ok(&["project", "--function", &system, "--weights", &weights]).json();
    assert_close(&floats(&proj["c"]), &floats(&sig["p_raw"]), 1e-12);
    assert!(proj["residual_orthogonality"].as_f64().unwrap() <= 1e-10);

    // symmetric function: coefficients are the level differences
    let sym = f.write("sym.json", r#"{"n":2,"values":[0.5,2,2,3]}"#);
    let ones = f.write("ones.json", r#"{"n":2,"values":[1,1,1,1]}"#);
    let proj = ok(&["project", "--function", &sym, "--weights", &ones]).json();
    assert_close(&[proj["constant"].as_f64().unwrap()], &[0.5], 1e-15);
    assert_close(&floats(&proj["c"]), &[1.0, 1.5], 1e-15);
    assert!(proj["residual_orthogonality"].as_f64().unwrap() <= 1e-15);

    let constant = f.write("c.json", r#"{"n":2,"values":[7,7,7,7]}"#);
    let proj = ok(&["project", "--function", &constant, "--weights", &ones]).json();
    assert_close(&floats(&proj["c"]), &[0.0, 0.0], 1e-15);
}

#[test]
fn simulate_examples() {
    let f = Files::new();
    let parallel = f.write("par.json", r#"{"n":3,"structure":{"type":"parallel"}}"#);
    let model = f.write("m.json", r#"{"type":"independent","marginals":[{"dist":"uniform","a":0,"b":1},{"dist":"exponential","rate":2},{"dist":"lognormal","mu":0,"sigma":1}]}"#);
    let args = ["simulate", "--system", &parallel, "--model", &model, "--samples", "20000", "--seed", "9"];
    let a = ok(&args);
    assert_eq!(floats(&a.json()["p_hat"]), vec![0.0, 0.0, 1.0]);
    let b = ok(&args);
    assert_eq!(a.stdout, b.stdout);
    let bridge = f.write("bridge.json", BRIDGE);
    let model5 = f.write("w.json", r#"{"type":"weibull","alpha":2,"lambda":[1,2,3,4,5]}"#);
    let one = ok(&["simulate", "--system", &bridge, "--model", &model5, "--samples", "50000", "--seed", "3"]).stdout;
    let two = ok(&["simulate", "--system", &bridge, "--model", &model5, "--samples", "50000", "--seed", "3"]).stdout;
    let other = ok(&["simulate", "--system", &bridge, "--model", &model5, "--samples", "50000", "--seed", "4"]).stdout;
    assert_eq!(one, two);
    assert_ne!(one, other);
    let iid = f.write("iid.json", IID);
    let run = sigcore(&["simulate", "--system", &bridge, "--model", &iid, "--samples", "10"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("samplable"), "{}", run.stderr);
}

#[test]
fn check_weibull_examples() {
    let f = Files::new();
    let model = f.write("w.json", r#"{"type":"weibull","alpha":1.5,"lambda":[1,2,4]}"#);
    let q = f.write("q.json", &ok(&["quality", "--model", &model]).stdout);
    let out = ok(&["check-weibull", "--quality", &q]).json();
    assert_eq!(out["is_weibull_compatible"], true);
    let rates = floats(&out["recovered_rates"]);
    let powered: Vec<f64> = [1.0f64, 2.0, 4.0].iter().map(|l| l.powf(1.5)).collect();
    let total: f64 = powered.iter().sum();
    let rate_total: f64 = rates.iter().sum();
    for (r, p) in rates.iter().zip(&powered) {
        assert!((r / rate_total - p / total).abs() <= 1e-9);
    }

    let mut edited = ok(&["quality", "--model", &model]).json();
    // zero q({1,2}) = q([3] minus {3}) and move its mass to another set of the level
    for entry in edited["q"].as_array_mut().unwrap() {
        let set = floats(&entry["set"]);
        if set == [1.0, 2.0] {
            entry["value"] = 0.0.into();
        }
    }
    let moved = q_value(&ok(&["quality", "--model", &model]).json(), &[1, 2]);
    for entry in edited["q"].as_array_mut().unwrap() {
        if floats(&entry["set"]) == [1.0, 3.0] {
            let v = entry["value"].as_f64().unwrap();
            entry["value"] = (v + moved).into();
        }
    }
    let bad = f.write("bad.json", &edited.to_string());
    let run = sigcore(&["check-weibull", "--quality", &bad]);
    assert_eq!(run.code, 1);
    let out = run.json();
    assert_eq!(out["is_weibull_compatible"], false);
    assert!(out["reason"].as_str().unwrap().contains("positivity"));

    let iid = f.write("iid.json", r#"{"type":"exchangeable","n":4}"#);
    let q = f.write("qe.json", &ok(&["quality", "--model", &iid]).stdout);
    let out = ok(&["check-weibull", "--quality", &q]).json();
    let rates = floats(&out["recovered_rates"]);
    assert!(rates.iter().all(|&r| r == rates[0]));
}

#[test]
fn csv_and_json_agree() {
    let f = Files::new();
    let bridge = f.write("bridge.json", BRIDGE);
    let model = f.write("m.json", r#"{"type":"independent","marginals":[{"dist":"uniform","a":0,"b":2},{"dist":"exponential","rate":1},{"dist":"uniform","a":0,"b":2},{"dist":"exponential","rate":2},{"dist":"weibull","alpha":2,"rate":1}]}"#);
    let json = ok(&["signature", "--system", &bridge, "--model", &model, "--json"]).json();
    let csv = ok(&["signature", "--system", &bridge, "--model", &model, "--csv"]).stdout;
    let rows: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rows, floats(&json["p"]));
    for line in csv.lines().skip(1) {
        let mantissa = line.split(',').nth(1).unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{line}");
    }

    let json = ok(&["quality", "--model", &model]).json();
    let csv = ok(&["quality", "--model", &model, "--csv"]).stdout;
    let rows: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let values: Vec<f64> = json["q"].as_array().unwrap().iter().map(|e| e["value"].as_f64().unwrap()).collect();
    assert_eq!(rows, values);

    let sim_json = ok(&["simulate", "--system", &bridge, "--model", &model, "--samples", "5000"]).json();
    let sim_csv = ok(&["simulate", "--system", &bridge, "--model", &model, "--samples", "5000", "--csv"]).stdout;
    let rows: Vec<f64> = sim_csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rows, floats(&sim_json["p_hat"]));
}

#[test]
fn emitted_json_round_trips() {
    let f = Files::new();
    let model = f.write("m.json", r#"{"type":"independent","marginals":[{"dist":"weibull","alpha":2,"rate":1},{"dist":"weibull","alpha":2,"rate":3},{"dist":"exponential","rate":1}]}"#);
    let quality = ok(&["quality", "--model", &model, "--tilde"]);
    let q = f.write("q.json", &quality.stdout);
    // quality output is accepted as a quality table and as projection weights
    let check = sigcore(&["check-weibull", "--quality", &q]);
    assert_eq!(check.code, 1, "mixed shapes are not a common-shape Weibull law");
    let system = f.write("sp.json", SERIES_PARALLEL);
    ok(&["project", "--function", &system, "--weights", &q]);
    // simulation echoes the model verbatim
    let sim = ok(&["simulate", "--system", &system, "--model", &model, "--samples", "1000"]).json();
    let echoed = f.write("echo.json", &sim["model"].to_string());
    ok(&["quality", "--model", &echoed]);
}

fn expect_failure(args: &[&str], code: i32, needle: &str) {
    let run = sigcore(args);
    assert_eq!(run.code, code, "{args:?}: {}", run.stderr);
    assert!(run.stdout.is_empty(), "data on failure: {}", run.stdout);
    assert!(run.stderr.contains(needle), "{args:?}: {}", run.stderr);
}

#[test]
fn exit_codes() {
    let f = Files::new();
    let bridge = f.write("bridge.json", BRIDGE);
    let iid = f.write("iid.json", IID);
    let w2 = f.write("w2.json", r#"{"type":"weibull","alpha":1,"lambda":[1,2]}"#);
    let broken = f.write("broken.json", "{not json");
    let missing = f.path("missing.json");

    expect_failure(&["signature", "--system", &broken, "--model", &iid], 2, "structure file");
    expect_failure(&["signature", "--system", &missing, "--model", &iid], 2, "missing.json");
    expect_failure(&["signature", "--system", &bridge, "--model", &w2], 3, "arity mismatch");
    expect_failure(
        &["signature", "--system", &bridge, "--model", &iid, "--route", "closed-form"],
        3,
        "route",
    );
    let not_semicoherent = f.write("nc.json", r#"{"n":2,"structure":{"type":"table","bits":"0101"}}"#);
    let ok_system = sigcore(&["signature", "--system", &not_semicoherent, "--model", &iid]);
    assert_eq!(ok_system.code, 0, "0101 is x1, which is semicoherent");
    let boundary = f.write("b.json", r#"{"n":2,"structure":{"type":"table","bits":"0110"}}"#);
    expect_failure(&["signature", "--system", &boundary, "--model", &iid], 3, "not semicoherent");
    let decreasing = f.write("dec.json", r#"{"n":3,"structure":{"type":"table","bits":"01000001"}}"#);
    expect_failure(&["signature", "--system", &decreasing, "--model", &iid], 3, "{1}");
    let bad_field = f.write("bad.json", r#"{"type":"weibull","alpha":-1,"lambda":[1,2]}"#);
    expect_failure(&["quality", "--model", &bad_field], 2, "alpha");
    let model = f.write("m.json", r#"{"type":"independent","marginals":[{"dist":"lognormal","mu":0,"sigma":2},{"dist":"weibull","alpha":0.5,"rate":1}]}"#);
    expect_failure(&["quality", "--model", &model, "--tol", "1e-300"], 4, "subset");
    expect_failure(&["quality", "--model", &model, "--tol=-1"], 2, "tolerance");
    expect_failure(&["frobnicate"], 2, "frobnicate");
    expect_failure(&["signature", "--system", &bridge], 2, "--model");
}

#[test]
fn help_goes_to_stdout() {
    let run = ok(&["--help"]);
    for command in ["signature", "quality", "project", "simulate", "check-weibull"] {
        assert!(run.stdout.contains(command));
    }
    assert!(Path::new(env!("CARGO_BIN_EXE_sigcore")).exists());
}

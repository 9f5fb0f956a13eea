use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_widomspec"))
}

fn input(name: &str, text: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("widomspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("WIDOMSPEC_PREC").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn critical_point_of_symmetric_gap() {
    let f = input("sym.json", r#"{"band": [-2, 2], "gaps": [[-1, 1]]}"#);
    let v = json_of(&run(&["critical", "--input", f.to_str().unwrap()]));
    let c = v["c"].as_array().unwrap();
    assert_eq!(c.len(), 1);
    assert!(c[0].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["meta"]["config"]["prec_bits"], 128);
    assert!(v["meta"]["base_point"].as_str().unwrap().contains("a_k"));
}

#[test]
fn free_coefficients() {
    let f = input("free.json", r#"{"band": [-2, 2], "gaps": []}"#);
    let v = json_of(&run(&["coeffs", "--input", f.to_str().unwrap(), "--from", "-5", "--to", "5"]));
    assert_eq!(v["n0"], -5);
    assert_eq!(v["n1"], 5);
    for p in v["p"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    for q in v["q"].as_array().unwrap() {
        assert!(q.as_f64().unwrap().abs() < 1e-12);
    }
    let csv = run(&["coeffs", "--input", f.to_str().unwrap(), "--from", "0", "--to", "2", "--csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,p,q"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn verify_bundled_fixtures() {
    let out = run(&["verify"]);
    let v = json_of(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["fixtures"].as_array().unwrap().len(), 5);
    let report = String::from_utf8_lossy(&out.stderr);
    assert!(report.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn malformed_input_exits_2() {
    let f = input("bad.json", r#"{"band": [2, -2]}"#);
    let out = run(&["critical", "--input", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["field"], "band");

    let f = input("typo.json", r#"{"band": [-2, 2], "gapz": []}"#);
    assert_eq!(run(&["critical", "--input", f.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["critical"]).status.code(), Some(2));
}

#[test]
fn singular_evaluation_exits_3() {
    let f = input("one.json", r#"{"band": [-2, 2], "gaps": [[-1, 1]]}"#);
    let out = run(&["dos", "--input", f.to_str().unwrap(), "--z", "2,0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn precision_from_environment() {
    let f = input("env.json", r#"{"band": [-2, 2], "gaps": [[-1, 1]]}"#);
    let out = bin().args(["critical", "--input", f.to_str().unwrap()]).env("WIDOMSPEC_PREC", "256").output().unwrap();
    assert_eq!(json_of(&out)["meta"]["config"]["prec_bits"], 256);
    let out = bin().args(["critical", "--input", f.to_str().unwrap()]).env("WIDOMSPEC_PREC", "12").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn abel_invert_roundtrip() {
    let doc = r#"{"band": [-2, 2.5], "gaps": [[-1.3, -0.4], [0.6, 1.1]],
                  "divisor": [{"x": -1.0, "eps": -1}, {"x": 0.8, "eps": 1}]}"#;
    let f = input("two.json", doc);
    let a = json_of(&run(&["abel", "--input", f.to_str().unwrap()]));
    let alpha = a["alpha"].clone();
    let g = input("alpha.json", &format!(r#"{{"band": [-2, 2.5], "gaps": [[-1.3, -0.4], [0.6, 1.1]], "alpha": {alpha}}}"#));
    let inv = json_of(&run(&["invert", "--input", g.to_str().unwrap()]));
    let d = inv["divisor"].as_array().unwrap();
    assert!((d[0]["x"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert_eq!(d[0]["eps"], -1);
    assert!((d[1]["x"].as_f64().unwrap() - 0.8).abs() < 1e-8);
    assert_eq!(d[1]["eps"], 1);
}

#[test]
fn measure_mc_is_seeded() {
    let doc = r#"{"band": [-2, 2], "gaps": [[-1, 1]], "box": [{"gap": 1, "a": -0.5, "b": 0.5, "eps": 1}]}"#;
    let f = input("box.json", doc);
    let args = ["measure-mc", "--input", f.to_str().unwrap(), "--mc-samples", "4000", "--seed", "11"];
    let a = json_of(&run(&args));
    let b = json_of(&run(&args));
    assert_eq!(a["estimate"], b["estimate"]);
    assert_eq!(a["seed"], 11);
    let est = a["estimate"].as_f64().unwrap();
    let det = a["determinant"].as_f64().unwrap();
    assert!((est - det).abs() <= 4.0 * a["stderr"].as_f64().unwrap());
}

#[test]
fn comb_and_truncate() {
    let f = input("comb.json", r#"{"band": [-2, 2], "gaps": [[-1.3, -0.7], [0.2, 0.9]]}"#);
    let comb = json_of(&run(&["comb", "--input", f.to_str().unwrap()]));
    assert_eq!(comb["widom"], true);
    let teeth = comb["teeth"].clone();
    let g = input("teeth.json", &format!(r#"{{"band": [-2, 2], "teeth": {teeth}, "n_list": [1, 10, 1000]}}"#));
    let back = json_of(&run(&["comb", "--input", g.to_str().unwrap()]));
    let gaps = back["gaps"].as_array().unwrap();
    assert!((gaps[0][0].as_f64().unwrap() + 1.3).abs() < 1e-6);
    assert!((gaps[1][1].as_f64().unwrap() - 0.9).abs() < 1e-6);
    let t = json_of(&run(&["truncate", "--input", g.to_str().unwrap()]));
    let deltas: Vec<f64> = t["delta_report"].as_array().unwrap().iter().map(|r| r["delta"].as_f64().unwrap()).collect();
    assert!(deltas.windows(2).all(|w| w[1] <= w[0]));
    let csv = run(&["truncate", "--input", g.to_str().unwrap(), "--csv"]);
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("n,delta\n"));
}

#[test]
fn transfer_subcommand() {
    let f = input("tr.json", r#"{"band": [-2, 2], "gaps": [[-1, 1]], "divisor": [{"x": 0.3, "eps": 1}]}"#);
    let v = json_of(&run(&["transfer", "--input", f.to_str().unwrap(), "--z", "-1.5,0.1", "--n", "8"]));
    assert!(v["det_residual"].as_f64().unwrap() < 1e-10);
    assert!(v["cd_residual"].as_f64().unwrap() < 1e-8);
    assert!(v["normalization"]["residual"].as_f64().unwrap() < 1e-8);
}

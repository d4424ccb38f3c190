use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use qestkit::cli::model_file::{matrix_to_record, ModelFile, PointRecord};
use qestkit::model::{build_zoo_model, evaluate, Derivative, ModelKind};
use qestkit::random::random_point;

fn qestkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qestkit"))
        .args(args)
        .env_remove("QESTKIT_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Report without the echoed command line.
fn body(out: &Output) -> Value {
    let mut v = json(out);
    v.as_object_mut().unwrap().remove("command");
    v
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

/// A generic (neither D-invariant nor asymptotically classical) qutrit
/// model stored as a single explicit point.
fn generic_model_file(dir: &Path) -> std::path::PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_point(&mut rng, 3, 2).unwrap();
    let file = ModelFile {
        name: "generic".into(),
        dim: 3,
        params: 2,
        kind: ModelKind::Explicit,
        builtin_name: None,
        parameters: Default::default(),
        points: vec![PointRecord {
            theta: vec![0.0, 0.0],
            rho: matrix_to_record(p.rho().as_matrix()),
            drho: p.drho().iter().map(|d| matrix_to_record(d.as_matrix())).collect(),
        }],
    };
    let path = dir.join("generic.json");
    std::fs::write(&path, file.to_json()).unwrap();
    path
}

#[test]
fn classify_reports_qutrit_verdicts() {
    let out = qestkit(&["classify", "--zoo", "qutrit-qc", "--param", "c=2", "--theta", "0.2,0.3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let point = &v["classification"]["points"][0];
    assert_eq!(point["classical"]["verdict"], false);
    assert_eq!(point["quasi_classical"]["verdict"], true);
    assert_eq!(point["d_invariant"]["verdict"], false);
    assert_eq!(point["asymptotically_classical"]["verdict"], true);
    assert_eq!(v["command"]["name"], "classify");
    assert!(v.get("timings").is_none());
}

#[test]
fn timings_only_on_request() {
    let out = qestkit(&["classify", "--zoo", "qubit-equatorial", "--timings"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out).get("timings").is_some());
}

#[test]
fn bloch_grid_adds_agreement_section() {
    let out = qestkit(&["classify", "--zoo", "qubit-fixed-radius", "--param", "s0=0.8", "--grid", "0.1:0.4:4x0.1:0.4:4"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["bloch"]["all_agree"], true);
    assert_eq!(v["classification"]["points"].as_array().unwrap().len(), 16);
    assert_eq!(v["classification"]["global"]["d_invariant"]["verdict"], true);
}

#[test]
fn table_format_is_plain_text() {
    let out = qestkit(&["classify", "--zoo", "qutrit-qc", "--format", "table"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("model qutrit-qc"));
    assert!(text.contains("quasi_classical"));
}

#[test]
fn equatorial_bounds_agree_between_methods() {
    let auto = json(&qestkit(&["bounds", "--zoo", "qubit-equatorial", "--theta", "0.5,0"]));
    let numeric = json(&qestkit(&["bounds", "--zoo", "qubit-equatorial", "--theta", "0.5,0", "--method", "numeric"]));
    assert!((f(&auto["bounds"]["holevo"]) - 1.75).abs() < 1e-10);
    assert!((f(&numeric["bounds"]["holevo"]) - 1.75).abs() < 1e-4);
    assert!((f(&auto["bounds"]["sld"]) - 1.75).abs() < 1e-10);
    assert_eq!(numeric["holevo"]["solved_by"], "optimizer");
}

#[test]
fn closed_form_refuses_generic_models() {
    let dir = tempfile::tempdir().unwrap();
    let path = generic_model_file(dir.path());
    let out = qestkit(&["bounds", "--model", path.to_str().unwrap(), "--method", "closed-form"]);
    assert_eq!(code(&out), 1);
    let out = qestkit(&["bounds", "--model", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let (sld, rld, h) = (f(&v["bounds"]["sld"]), f(&v["bounds"]["rld"]), f(&v["bounds"]["holevo"]));
    assert!(h >= sld.max(rld) - 1e-8, "{h} vs {sld}, {rld}");
}

#[test]
fn exhausted_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = generic_model_file(dir.path());
    let out = qestkit(&["bounds", "--model", path.to_str().unwrap(), "--method", "numeric", "--max-evals", "3"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["holevo"]["converged"], false);
}

#[test]
fn weight_file_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("w.json");
    std::fs::write(&good, "[[2.0, 0.5], [0.5, 1.0]]").unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[[1.0, 2.0], [2.0, 1.0]]").unwrap();
    let out = qestkit(&["bounds", "--zoo", "qubit-equatorial", "--weight", good.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["weight"][0][1], 0.5);
    let out = qestkit(&["bounds", "--zoo", "qubit-equatorial", "--weight", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn invalid_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"name\": \"x\", \"dim\": ").unwrap();
    for args in [
        vec!["classify", "--model", broken.to_str().unwrap()],
        vec!["classify", "--zoo", "no-such-model"],
        vec!["classify", "--zoo", "qubit-full", "--theta", "0.1,0.2"],
        vec!["classify", "--zoo", "qubit-equatorial", "--grid", "0:1:0x0:1:2"],
        vec!["classify", "--zoo", "qubit-fixed-radius", "--param", "s0=1.5"],
        vec!["verify", "--dim", "3", "--params", "9"],
        vec!["zoo", "--describe", "nosuch"],
        vec!["bounds", "--zoo", "qubit-equatorial", "--tol", "-1"],
    ] {
        let out = qestkit(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn unknown_flags_exit_1() {
    assert_eq!(code(&qestkit(&["classify", "--bogus"])), 1);
    assert_eq!(code(&qestkit(&[])), 1);
}

#[test]
fn singular_points_exit_2() {
    let out = qestkit(&["classify", "--zoo", "qubit-full", "--theta", "0.8,0.8,0.8"]);
    assert_eq!(code(&out), 2);
    // the rank-deficient pure state at the north pole
    let out = qestkit(&["bounds", "--zoo", "qubit-full", "--theta", "0,0,1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_is_deterministic_and_seeded() {
    let a = qestkit(&["verify", "--random", "5", "--dim", "2", "--params", "1"]);
    let b = qestkit(&["verify", "--random", "5", "--dim", "2", "--params", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let explicit = qestkit(&["verify", "--random", "5", "--dim", "2", "--params", "1", "--seed", "42"]);
    assert_eq!(body(&a), body(&explicit));

    let env = Command::new(env!("CARGO_BIN_EXE_qestkit"))
        .args(["verify", "--random", "5", "--dim", "2", "--params", "1"])
        .env("QESTKIT_SEED", "7")
        .output()
        .unwrap();
    let flag = qestkit(&["verify", "--random", "5", "--dim", "2", "--params", "1", "--seed", "7"]);
    assert_eq!(body(&env), body(&flag));
    assert_ne!(body(&env), body(&a));
    assert_eq!(json(&env)["parameters"]["seed"], 7);
}

#[test]
fn verify_reports_the_failing_power_identity() {
    let out = qestkit(&["verify", "--random", "10", "--dim", "3", "--params", "2"]);
    assert_eq!(code(&out), 4);
    let v = json(&out);
    assert_eq!(v["all_pass"], false);
    let summary = v["summary"].as_object().unwrap();
    for (name, entry) in summary {
        let failures = entry["failures"].as_u64().unwrap();
        if name == "score_power.k2" || name == "score_power.k3" {
            assert_eq!(failures, 10, "{name}");
        } else {
            assert_eq!(failures, 0, "{name}");
        }
    }
}

#[test]
fn classify_output_is_byte_stable() {
    let args = ["classify", "--zoo", "qubit-full", "--grid", "0.1:0.3:2x0.1:0.3:2x0.1:0.3:2"];
    assert_eq!(qestkit(&args).stdout, qestkit(&args).stdout);
}

#[test]
fn zoo_model_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixed.json");
    std::fs::write(
        &path,
        r#"{"name": "fixed", "dim": 2, "params": 2, "kind": "bloch",
            "builtin_name": "qubit-fixed-radius", "parameters": {"s0": 0.7}}"#,
    )
    .unwrap();
    let from_file = json(&qestkit(&["bounds", "--model", path.to_str().unwrap(), "--theta", "0.3,0.2"]));
    let from_zoo = json(&qestkit(&["bounds", "--zoo", "qubit-fixed-radius", "--param", "s0=0.7", "--theta", "0.3,0.2"]));
    assert_eq!(from_file["bounds"], from_zoo["bounds"]);
    assert_eq!(from_file["information"], from_zoo["information"]);
}

#[test]
fn explicit_model_file_round_trips() {
    let model = build_zoo_model("qutrit-qc", &Default::default()).unwrap();
    let p = evaluate(&model, &[0.2, 0.3], Derivative::Auto).unwrap();
    let file = ModelFile {
        name: "stored-qutrit".into(),
        dim: 3,
        params: 2,
        kind: ModelKind::Explicit,
        builtin_name: None,
        parameters: Default::default(),
        points: vec![PointRecord {
            theta: vec![0.2, 0.3],
            rho: matrix_to_record(p.rho().as_matrix()),
            drho: p.drho().iter().map(|d| matrix_to_record(d.as_matrix())).collect(),
        }],
    };
    let text = file.to_json();
    let back = ModelFile::from_json(&text).unwrap();
    let q = evaluate(&back.to_model().unwrap(), &[0.2, 0.3], Derivative::Auto).unwrap();
    assert!((p.rho().as_matrix() - q.rho().as_matrix()).camax() < 1e-12);
    for (a, b) in p.drho().iter().zip(q.drho()) {
        assert!((a.as_matrix() - b.as_matrix()).camax() < 1e-12);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qutrit.json");
    std::fs::write(&path, text).unwrap();
    let stored = json(&qestkit(&["classify", "--model", path.to_str().unwrap()]));
    let zoo = json(&qestkit(&["classify", "--zoo", "qutrit-qc", "--theta", "0.2,0.3"]));
    for class in ["classical", "quasi_classical", "d_invariant", "asymptotically_classical"] {
        assert_eq!(
            stored["classification"]["points"][0][class]["verdict"],
            zoo["classification"]["points"][0][class]["verdict"]
        );
    }
}

#[test]
fn zoo_listing_and_description() {
    let list = json(&qestkit(&["zoo", "--list"]));
    let names: Vec<&str> = list["models"].as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    for expected in ["classical-diagonal", "qubit-full", "qubit-equatorial", "qubit-fixed-radius", "qubit-piecewise", "qutrit-qc"] {
        assert!(names.contains(&expected), "{expected}");
    }
    let out = qestkit(&["zoo", "--describe", "qubit-piecewise"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["model"]["name"], "qubit-piecewise");
}

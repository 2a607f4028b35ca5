use std::path::PathBuf;

use locclab::cli::{run, Outcome, EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK};
use locclab::io::{read_json, CertFile, ProtocolFile};
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name).to_string_lossy().into_owned()
}

fn locclab(args: &[&str]) -> Outcome {
    run(std::iter::once("locclab").chain(args.iter().copied()))
}

fn report(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).expect("report is JSON")
}

#[test]
fn deviation_of_trivial_povm() {
    let out = locclab(&["deviation", "--states", &data("triple_states.json"), "--protocol", &data("trivial_povm.json"), "--json"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let d = report(&out)["results"]["deviation"].as_f64().unwrap();
    assert!((d - 2.0 / 3.0).abs() < 1e-12);
    assert!(out.stderr.is_empty(), "{}", out.stderr);
}

#[test]
fn deviation_of_perfect_protocol_is_zero() {
    for measure in ["mf", "ce", "finite"] {
        let out = locclab(&[
            "deviation",
            "--states",
            &data("perfect_states.json"),
            "--protocol",
            &data("perfect_protocol.json"),
            "--measure",
            measure,
            "--json",
        ]);
        assert_eq!(out.code, EXIT_OK);
        assert_eq!(report(&out)["results"]["deviation"].as_f64().unwrap(), 0.0, "{measure}");
    }
}

#[test]
fn malformed_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let bad = bad.to_string_lossy().into_owned();
    let out = locclab(&["verify-cert", "--states", &bad, "--cert", &data("triple_cert_0.75.json"), "--chi", "0.75"]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.starts_with("error:"));
    let out = locclab(&["verify-cert", "--states", &data("triple_states.json"), "--cert", &bad, "--chi", "0.75"]);
    assert_eq!(out.code, EXIT_INPUT);
    // a basis file is not a states file
    assert_eq!(locclab(&["precheck", "--states", &data("domino_basis.json")]).code, EXIT_INPUT);
    assert_eq!(locclab(&["deviation", "--states", &data("triple_states.json")]).code, EXIT_INPUT);
    assert_eq!(locclab(&["appendix-e", "--chi", "0.2"]).code, EXIT_INPUT);
}

#[test]
fn verify_cert_exit_codes() {
    let args = |chi: &'static str| {
        locclab(&["verify-cert", "--states", &data("triple_states.json"), "--cert", &data("triple_cert_0.75.json"), "--chi", chi, "--json"])
    };
    assert_eq!(args("0.75").code, EXIT_OK);
    let fail = args("0.6");
    assert_eq!(fail.code, EXIT_NEGATIVE);
    let max_trace = report(&fail)["results"]["residuals"]["max_trace"].as_f64().unwrap();
    assert!((max_trace - 0.15).abs() < 1e-9);
}

#[test]
fn appendix_e_writes_diagonal_factors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.json");
    let out = locclab(&["appendix-e", "--chi", "0.45", "--out", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK);
    let cert: CertFile = read_json(&path).unwrap();
    assert_eq!(cert.factors.len(), 2);
    for f in &cert.factors {
        assert_eq!(f.len(), 2);
        assert_eq!(f[0][1], [0.0, 0.0]);
        assert_eq!(f[1][0], [0.0, 0.0]);
    }
    let verify = locclab(&["verify-cert", "--states", &data("triple_states.json"), "--cert", path.to_str().unwrap(), "--chi", "0.45"]);
    assert_eq!(verify.code, EXIT_OK);
}

#[test]
fn appendix_e_prints_artifact_without_out() {
    let out = locclab(&["appendix-e", "--chi", "0.75"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(out.stdout, std::fs::read_to_string(data("triple_cert_0.75.json")).unwrap());
}

#[test]
fn dissect_decisions() {
    let out = locclab(&["dissect", "--basis", &data("domino_basis.json"), "--json"]);
    assert_eq!(out.code, EXIT_NEGATIVE);
    assert_eq!(report(&out)["results"]["decision"], "NOT_DISCRIMINABLE");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let out = locclab(&["dissect", "--basis", &data("computational_3x3_basis.json"), "--out", path.to_str().unwrap(), "--json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(report(&out)["results"]["decision"], "FINITE_DISCRIMINABLE");
    let tree = read_json::<ProtocolFile>(&path).unwrap().to_tree().unwrap();
    assert_eq!(tree.leaves().len(), 9);
}

#[test]
fn scan_chi_on_triple_passes() {
    let out = locclab(&["scan-chi", "--states", &data("triple_states.json"), "--grid", "101", "--json"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(report(&out)["results"]["points"].as_array().unwrap().len(), 101);
}

#[test]
fn scan_chi_on_computational_states() {
    let out = locclab(&["scan-chi", "--states", &data("computational_states.json"), "--grid", "4", "--restarts", "4", "--json"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(report(&out)["results"]["points"][0]["method"], "search");
}

#[test]
fn search_cert_writes_verifiable_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = locclab(&["search-cert", "--states", &data("triple_states.json"), "--chi", "0.6", "--restarts", "8", "--out", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    let verify = locclab(&["verify-cert", "--states", &data("triple_states.json"), "--cert", path.to_str().unwrap(), "--chi", "0.6"]);
    assert_eq!(verify.code, EXIT_OK, "{}", verify.stdout);
}

#[test]
fn precheck_reports_eta() {
    let out = locclab(&["precheck", "--states", &data("triple_states.json"), "--json"]);
    assert_eq!(out.code, EXIT_OK);
    let r = report(&out);
    assert!(r["results"]["eta"].as_f64().unwrap() > 0.0);
    assert!(r["tolerances"].as_object().unwrap().contains_key("product_overlap_margin"));
}

#[test]
fn split_writes_modified_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.json");
    let out = locclab(&[
        "split",
        "--states",
        &data("computational_states.json"),
        "--protocol",
        &data("sharp_protocol.json"),
        "--delta",
        "0.2",
        "--out",
        path.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let written: Value = read_json(&path).unwrap();
    assert!(written["equivalence_residual"].as_f64().unwrap() <= 1e-8);
    let modified: ProtocolFile = serde_json::from_value(written["modified"].clone()).unwrap();
    modified.to_tree().unwrap();
    let stage_one: ProtocolFile = serde_json::from_value(written["stage_one"].clone()).unwrap();
    stage_one.to_tree().unwrap();
}

#[test]
fn split_rejects_finite_measure() {
    let out = locclab(&[
        "split",
        "--states",
        &data("computational_states.json"),
        "--protocol",
        &data("sharp_protocol.json"),
        "--delta",
        "0.2",
        "--measure",
        "finite",
    ]);
    assert_eq!(out.code, EXIT_INPUT);
}

#[test]
fn simulate_accepts_protocol_and_povm() {
    let out = locclab(&["simulate", "--states", &data("perfect_states.json"), "--protocol", &data("perfect_protocol.json"), "--json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(report(&out)["results"]["outcomes"], 2);
    let out = locclab(&["simulate", "--states", &data("perfect_states.json"), "--protocol", &data("trivial_povm.json"), "--json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(report(&out)["results"]["d_mf"], 0.5);
}

#[test]
fn reports_are_reproducible() {
    let args = ["search-cert", "--states", &data("triple_states.json"), "--chi", "0.45", "--seed", "11", "--json"];
    let a = locclab(&args);
    let b = locclab(&args);
    assert_eq!(a, b);
    assert_eq!(report(&a)["seed"], 11);
    let digest = report(&a)["inputs_digest"].as_str().unwrap().to_string();
    assert_eq!(digest.len(), 64);
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(locclab(&["--help"]).code, EXIT_OK);
    assert_eq!(locclab(&["deviation", "--nope"]).code, EXIT_INPUT);
    assert_eq!(locclab(&["frobnicate"]).code, EXIT_INPUT);
}

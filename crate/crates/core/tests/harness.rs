use bgain::harness::*;
use bgain::Error;
use sha2::{Digest, Sha256};

fn spec(json: &str) -> SweepSpec {
    SweepSpec::from_json(json).unwrap()
}

fn csv_hash(result: &SweepResult) -> Vec<u8> {
    Sha256::digest(render(result, Format::Csv).unwrap()).to_vec()
}

const THEOREM1: &str = r#"{
    "kind": "theorem1",
    "n": [3],
    "kernels": ["constant:1"],
    "triples": [[1, 1], [2, 2], [4, 4]],
    "alpha": [0],
    "inputs": [["gaussian:1", "gaussian:1"], ["bump:1.5", "gaussian:2"]],
    "sphere_order": 8
}"#;

#[test]
fn theorem1_sweep_passes() {
    let res = run_sweep(&spec(THEOREM1)).unwrap();
    assert_eq!(res.reports.len(), 4);
    assert!(res.failed.is_empty(), "{:?}", res.failed);
    assert!(res.all_pass());
    // p = q = 1 has no Hölder exponent r >= 1
    assert_eq!(res.skipped.len(), 2);
    assert!(res.skipped[0].cell.contains("exponents=(1,1)"));
    for r in &res.reports {
        assert!(r.ratio <= 1.0 + 1e-4, "{r:?}");
        let prod: f64 = r.norms.iter().map(|(_, v)| v).product();
        assert!((r.rhs - r.constant * prod).abs() <= 1e-12 * r.rhs.abs());
    }
}

#[test]
fn sharpness_sweep_converges() {
    let res = run_sweep(&spec(
        r#"{"kind": "sharpness", "triples": [[2, 2]], "eps": [0.1, 0.01, 0.001]}"#,
    ))
    .unwrap();
    let ratios: Vec<f64> = res.reports.iter().map(|r| r.ratio).collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    assert!(ratios[2] > 0.995 && ratios[2] <= 1.0 + 1e-8, "{ratios:?}");
    assert!(res.reports.iter().all(|r| r.name == "sharpness"));
}

#[test]
fn empty_spec_gives_no_reports() {
    for json in [
        r#"{"kind": "theorem1", "n": []}"#,
        r#"{"kind": "theorem2"}"#,
        r#"{"kind": "sharpness", "triples": [[2, 2]]}"#,
    ] {
        let res = run_sweep(&spec(json)).unwrap();
        assert_eq!(res, SweepResult::default());
    }
    let csv = String::from_utf8(render(&SweepResult::default(), Format::Csv).unwrap()).unwrap();
    assert_eq!(csv.trim_end(), CSV_COLUMNS.join(","));
}

#[test]
fn divergent_cells_are_skipped() {
    // β_b(-1, -1) is infinite for b ≡ 1 in three dimensions
    let res = run_sweep(&spec(
        r#"{"kind": "theorem1", "triples": [[2, 2]], "alpha": [0, 1],
            "inputs": [["gaussian:1", "gaussian:1"]], "sphere_order": 6}"#,
    ))
    .unwrap();
    assert_eq!(res.reports.len(), 1);
    assert!(res.reports[0].pass);
    assert_eq!(res.skipped.len(), 1);
    assert_eq!(res.skipped[0].reason, "divergent beta");
    assert!(res.failed.is_empty());

    let res = run_sweep(&spec(
        r#"{"kind": "theorem2", "triples": [[1, 1], [2, 2]], "lambda": [0],
            "inputs": [["gaussian:1", "gaussian:1"]], "sphere_order": 6, "tolerance": 1e-3}"#,
    ))
    .unwrap();
    assert_eq!(res.reports.len(), 1);
    assert!(res.reports[0].pass);
    assert_eq!(res.skipped.len(), 1);
    assert!(
        res.skipped[0].reason.contains("r'-condition"),
        "{}",
        res.skipped[0].reason
    );
    assert!(res.failed.is_empty());
}

#[test]
fn csv_layout_and_json_round_trip() {
    let res = run_sweep(&spec(
        r#"{"kind": "lemma23", "triples": [[2, 2]], "inputs": [["indicator:0,1", "gauss:1"]]}"#,
    ))
    .unwrap();
    assert_eq!(res.reports.len(), 1);
    let csv = String::from_utf8(render(&res, Format::Csv).unwrap()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_COLUMNS.join(","));
    assert!(lines[1].starts_with("lemma23,3,2,2,1,0,0,"), "{}", lines[1]);

    let json = render(&res, Format::Json).unwrap();
    let back: SweepResult = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, res);
}

#[test]
fn sweeps_are_byte_deterministic() {
    let lemma22 = r#"{
        "kind": "lemma22",
        "triples": [[3, 3, 3], [2, 4, 4]],
        "inputs": [["shifted:bump:1.5,0.3,0,0.1", "bump:1.2", "linearmod:shifted:bump:1.3,0,0.2,0"]],
        "seed": 42, "rotations": 512, "sphere_order": 6,
        "quadrature": {"rel_tol": 1e-8}
    }"#;
    let a = run_sweep(&spec(lemma22)).unwrap();
    let b = run_sweep(&spec(lemma22)).unwrap();
    assert!(a.all_pass(), "{a:?}");
    assert_eq!(csv_hash(&a), csv_hash(&b));
    let other = run_sweep(&spec(&lemma22.replace("42", "43"))).unwrap();
    assert_ne!(csv_hash(&a), csv_hash(&other));
    assert!(String::from_utf8(render(&a, Format::Csv).unwrap())
        .unwrap()
        .contains(",42,"));
}

#[test]
fn overrides_reach_matching_cells() {
    let res = run_sweep(&spec(
        r#"{"kind": "lemma23", "kernels": ["constant:1", "power:1,0.1,0"], "triples": [[2, 2]],
            "inputs": [["gauss:1", "gauss:2"]],
            "overrides": [{"kernel": "power:1,0.1,0", "quadrature": {"order": 24}}]}"#,
    ))
    .unwrap();
    let orders: Vec<usize> = res.reports.iter().map(|r| r.provenance.quad_order).collect();
    assert_eq!(orders, vec![16, 24]);
}

#[test]
fn config_errors_name_the_location() {
    let err = SweepSpec::from_json("{\n  \"kind\": \"theorem1\",\n  \"bogus\": 1\n}").unwrap_err();
    match err {
        Error::Config(msg) => assert!(msg.contains("line 3") && msg.contains("bogus"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        SweepSpec::from_json(r#"{"kind": "lemma9"}"#),
        Err(Error::Config(_))
    ));
    let bad_inputs = spec(r#"{"kind": "theorem1", "triples": [[2, 2]], "inputs": [["gaussian:1"]]}"#);
    assert!(matches!(run_sweep(&bad_inputs), Err(Error::Config(_))));
}

#[test]
fn emit_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_sweep(&spec(
        r#"{"kind": "lemma23", "triples": [[2, 2]], "inputs": [["indicator:0,1", "indicator:0,1"]]}"#,
    ))
    .unwrap();
    let path = dir.path().join("out.csv");
    emit(&res, Format::Csv, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), render(&res, Format::Csv).unwrap());
    let err = emit(&res, Format::Json, &dir.path().join("missing/out.json")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("missing"));
}

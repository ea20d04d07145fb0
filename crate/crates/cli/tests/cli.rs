use std::f64::consts::PI;
use std::process::{Command, Output};

fn bgain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgain"))
        .args(args)
        .env_remove("BG_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value_of(o: &Output, key: &str) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in {}", stdout(o)))
}

#[test]
fn beta_at_minus_half() {
    let o = bgain(&["beta", "--x=-0.5", "--y=-0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = value_of(&o, "beta").parse().unwrap();
    assert!((v - PI).abs() < 1e-8, "{v}");
    assert_eq!(value_of(&o, "finiteness"), "Finite");
}

#[test]
fn cutoff_json() {
    let o = bgain(&["cutoff", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["cutoff"].as_f64().unwrap() - 4.0 * PI).abs() < 1e-5);
}

#[test]
fn theorem2_hard_spheres_passes() {
    let o = bgain(&[
        "verify",
        "thm2",
        "--g",
        "gaussian:1",
        "--h",
        "gaussian:1",
        "--p",
        "1",
        "--q",
        "1",
        "--r",
        "1",
        "--lambda",
        "1",
        "--sphere-order",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("theorem2,3,1,1,1,0,1,"), "{row}");
    assert!(row.contains(",true,"));
}

#[test]
fn failed_inequality_exits_one() {
    // a tolerance below -1 cannot be met
    let o = bgain(&[
        "verify",
        "thm1",
        "--g",
        "gaussian:1",
        "--h",
        "gaussian:1",
        "--p",
        "2",
        "--q",
        "2",
        "--tolerance=-2",
        "--sphere-order",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_and_precondition_errors_exit_two() {
    assert_eq!(bgain(&["beta", "--x", "1"]).status.code(), Some(2));
    assert_eq!(bgain(&["cutoff", "--kernel", "wobbly:1"]).status.code(), Some(2));
    let o = bgain(&[
        "verify",
        "thm2",
        "--g",
        "gaussian:1",
        "--h",
        "gaussian:1",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition"));
    let o = bgain(&["verify", "thm1", "--g", "gaussian:1", "--p", "2", "--q", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn aliasing_exits_three() {
    let o = bgain(&[
        "qplus",
        "--n",
        "2",
        "--g",
        "gaussian:1",
        "--v",
        "0,0",
        "--method",
        "bobylev",
        "--half-width",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn qplus_methods_agree_on_equilibrium() {
    let mut vals = vec![];
    for method in ["direct", "carleman", "bobylev"] {
        let o = bgain(&[
            "qplus",
            "--n",
            "2",
            "--g",
            "gaussian:1",
            "--v",
            "0,0",
            "--method",
            method,
            "--sphere-order",
            "16",
        ]);
        assert_eq!(o.status.code(), Some(0));
        vals.push(value_of(&o, "Q+").parse::<f64>().unwrap());
    }
    for v in vals {
        assert!((v - 2.0 * PI * PI).abs() < 1e-5 * 2.0 * PI * PI, "{v}");
    }
}

#[test]
fn bobylev_grid_written() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let bin = dir.path().join("q.bin");
    for path in [&csv, &bin] {
        let o = bgain(&[
            "qplus",
            "--n",
            "2",
            "--g",
            "gaussian:1",
            "--v",
            "0,0",
            "--method",
            "bobylev",
            "--points",
            "32",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("i0,i1,value"));
    assert_eq!(text.lines().count(), 1 + 32 * 32);
    assert_eq!(&std::fs::read(&bin).unwrap()[..4], b"BGF1");
}

#[test]
fn radial_commands() {
    let o = bgain(&["op-b", "--g", "constant:1", "--h", "constant:1", "--x", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = value_of(&o, "B").parse().unwrap();
    // ξ has unit mass for b ≡ 1 in three dimensions
    assert!((v - 1.0).abs() < 1e-10, "{v}");
    let o = bgain(&[
        "verify",
        "lemma23",
        "--g",
        "gauss:1",
        "--h",
        "indicator:0,1",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bgain(&["sharpness", "--eps", "0.1,0.01", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn norms_and_operator_p() {
    let o = bgain(&["norm", "--f", "gaussian:1", "--p", "1"]);
    let v: f64 = value_of(&o, "norm").parse().unwrap();
    assert!((v - PI.powf(1.5)).abs() < 1e-8, "{v}");
    let o = bgain(&["norm", "--f", "gaussian:1", "--p", "inf"]);
    let v: f64 = value_of(&o, "norm").parse().unwrap();
    assert!((v - 1.0).abs() < 1e-10, "{v}");
    let o = bgain(&["norm", "--f", "radial:zero", "--p", "2"]);
    assert_eq!(value_of(&o, "norm"), "0");
    let o = bgain(&["op-p", "--g", "gaussian:1", "--h", "gaussian:1", "--k", "1,0,0"]);
    let v: f64 = value_of(&o, "P").parse().unwrap();
    // |k⁺|² + |k⁻|² = |k|²
    assert!((v - 4.0 * PI * (-1.0f64).exp()).abs() < 1e-10, "{v}");
}

#[test]
fn sweep_to_file_with_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{"kind": "theorem1", "triples": [[2, 2], [1, 1]], "inputs": [["gaussian:1", "gaussian:1"]], "sphere_order": 6}"#,
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let o = bgain(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");

    std::fs::write(&config, r#"{"kind": "theorem1", "bogus": 1}"#).unwrap();
    let o = bgain(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

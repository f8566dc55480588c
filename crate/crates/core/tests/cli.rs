use std::process::{Command, Output};

fn netnl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netnl"))
        .args(args)
        .env_remove("NETNL_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_depolarizing_linear() {
    let o = netnl(&["classify", "--channel", "depolarizing:0.4", "--topology", "linear", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdicts"][0]["theorem"], "thm1");
    assert_eq!(v["verdicts"][0]["status"], "breaking_certified");
    assert_eq!(v["pattern"]["m2"], 1);
}

#[test]
fn classify_routes_by_channel_class() {
    let o = netnl(&[
        "classify",
        "--channel",
        "pauli-damping:0.05,0.9,0.05",
        "--topology",
        "star",
        "--n",
        "14",
        "--m1",
        "4",
        "--m2",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v["verdicts"].as_array().unwrap().iter().map(|x| x["theorem"].as_str().unwrap()).collect();
    assert_eq!(names, ["thm6", "thm7"]);
    assert_eq!(v["verdicts"][1]["status"], "preserving_certified");
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        vec!["classify", "--channel", "depolarizing:1.5", "--topology", "linear", "--k", "1"],
        vec!["classify", "--channel", "pauli-damping:0.9,0.9,0.9", "--topology", "linear", "--k", "1"],
        vec!["classify", "--channel", "depolarizing:0.3", "--topology", "ring", "--k", "1"],
        vec!["classify", "--channel", "depolarizing:0.3", "--topology", "star", "--k", "3", "--m1", "1", "--m2", "0", "--n", "3"],
        vec!["threshold", "--topology", "fnn3", "--k", "7"],
        vec!["sweep", "--criterion", "thm3", "--grid", "t=0:1:0"],
        vec!["sweep", "--criterion", "thm6", "--grid", "t=0:1:0.5", "--fixed", "l1=0.1,l3=0.1"],
        vec!["verify", "soundness"],
        vec!["verify", "nonsense", "--seed", "1"],
        vec!["frobnicate"],
    ] {
        let o = netnl(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_witness_exits_3() {
    let o = netnl(&["witness", "--channel", "depolarizing:0.5", "--topology", "linear", "--k", "2"]);
    assert_eq!(o.status.code(), Some(3));
    let o = netnl(&["witness", "--channel", "pauli-damping:0.2,0.2,0.2", "--topology", "linear", "--k", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn witness_dephasing() {
    let o = netnl(&["witness", "--channel", "dephasing:0.5", "--topology", "linear", "--n", "2", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["closed_form_bound"].as_f64().unwrap() - 1.25f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["input_state"], "bell-phi-");
}

#[test]
fn threshold_text_and_json() {
    let o = netnl(&["threshold", "--topology", "linear", "--k", "1"]);
    assert_eq!(stdout(&o), "0.5\n");
    let o = netnl(&["threshold", "--topology", "fnn3", "--k", "5"]);
    assert!(stdout(&o).contains("all q certified"));
    let o = netnl(&["--format", "json", "threshold", "--topology", "star", "--k", "2", "--n", "4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["threshold"], 0.5);
}

#[test]
fn sweep_csv_is_deterministic_and_ordered() {
    let args = [
        "sweep",
        "--criterion",
        "thm6",
        "--grid",
        "t=0:0.5:0.25,l1=0:0.5:0.25",
        "--fixed",
        "l3=0.1",
        "--n",
        "4",
        "--m1",
        "2",
        "--m2",
        "1",
    ];
    let a = netnl(&args);
    let b = netnl(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "criterion,q,p,t,l1,l3,k,n,m1,m2,lhs,rhs,margin,valid,verdict");
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("thm6,,,0.0000000000000000e0,0.0000000000000000e0,"));
    assert!(lines[2].starts_with("thm6,,,0.0000000000000000e0,2.5000000000000000e-1,"));
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 15);
    }
}

#[test]
fn sweep_marks_inadmissible_points() {
    let o = netnl(&["sweep", "--criterion", "thm1", "--grid", "q=0:1.5:0.5", "--fixed", "k=2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert!(last.ends_with(",,,,false,inconclusive"), "{last}");
}

#[test]
fn out_file_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.json");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"criterion": "thm3", "grid": "t=0:0.2:0.1", "fixed": "l1=0.2,l3=0.2", "format": "json"}"#,
    )
    .unwrap();
    let o = netnl(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[0]["verdict"], "breaking");

    std::fs::write(&cfg, r#"{"criterion": "thm3", "bogus": 1}"#).unwrap();
    let o = netnl(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tolerance_from_env_and_flag() {
    // q sits just below the k = 1 threshold of 0.5.
    let args = ["classify", "--channel", "depolarizing:0.4999", "--topology", "linear", "--k", "1"];
    let strict = netnl(&args);
    let v: serde_json::Value = serde_json::from_str(&stdout(&strict)).unwrap();
    assert_eq!(v["verdicts"][0]["status"], "inconclusive");
    let loose = Command::new(env!("CARGO_BIN_EXE_netnl"))
        .args(args)
        .env("NETNL_TOL", "1e-3")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&loose)).unwrap();
    assert_eq!(v["verdicts"][0]["status"], "breaking_certified");
    let mut flag = args.to_vec();
    flag.extend(["--tol", "1e-3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&netnl(&flag))).unwrap();
    assert_eq!(v["verdicts"][0]["status"], "breaking_certified");
}

#[test]
fn verify_is_reproducible() {
    let args = ["verify", "eig-formulas", "--samples", "50", "--seed", "11"];
    let a = netnl(&args);
    let b = netnl(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = netnl(&["verify", "eig-formulas", "--samples", "50", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn verify_failure_exits_1() {
    // A near-identity unital channel at k = 6 is certified by the trilocal
    // criterion yet the Bell witness stays near sqrt 2.
    let o = netnl(&["verify", "soundness", "--seed", "7", "--criteria", "thm8", "--channels", "50", "--samples", "200"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn bound_from_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.json");
    std::fs::write(&f, r#"{"topology": "linear", "states": ["bell-phi+", "bell-psi-"]}"#).unwrap();
    let o = netnl(&["bound", "--scenario", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["bound"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["violated"], true);
}

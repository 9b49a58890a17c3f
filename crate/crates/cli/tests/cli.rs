use std::process::{Command, Output};

fn hst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hst"))
        .args(args)
        .output()
        .expect("spawn hst")
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = hst(&["build", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_input_file_exits_2() {
    let o = hst(&["census", "--input", "/nonexistent/points.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_lemmas_passes() {
    let o = hst(&["verify", "--lemmas", "--d-max", "3"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn failed_verification_exits_1() {
    // Five points in R^3 leave both others on one side with probability 3/5,
    // above the limiting tail 1/2 at x = 1.
    let o = hst(&[
        "verify",
        "--domination",
        "--d",
        "3",
        "--n",
        "5",
        "--trials",
        "2000",
    ]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
}

#[test]
fn experiment_without_out_writes_csv_to_stdout() {
    let o = hst(&[
        "experiment",
        "--n",
        "50",
        "--d",
        "2",
        "--trials",
        "3",
        "--seed",
        "9",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(
        lines[1],
        "trial,seed,n,d,height,mean_depth,root_left,root_right,wall_ms"
    );
    assert_eq!(lines.len(), 5);
}

#[test]
fn bounds_lambda_json() {
    let o = hst(&["bounds", "lambda", "--t", "0"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"], 2.0);
    assert_eq!(v["log_base"], "natural");
    assert_eq!(v["valid"], true);
}

#[test]
fn census_csv_of_moment_curve() {
    let o = hst(&["census", "--moment", "--n", "5", "--d", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, "k,count\n0,6\n1,8\n2,6\n");
}

#[test]
fn gen_then_build_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.txt");
    let tree = dir.path().join("t.txt");
    let p = pts.to_str().unwrap();
    assert!(hst(&[
        "gen",
        "--source",
        "sphere-rational",
        "--n",
        "12",
        "--d",
        "2",
        "--seed",
        "4",
        "--out",
        p
    ])
    .status
    .success());
    let o = hst(&[
        "build",
        "--input",
        p,
        "--seed",
        "1",
        "--tree",
        tree.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n"], 12);
    let parsed = hst_core::tree::parse_tree(&std::fs::read_to_string(&tree).unwrap()).unwrap();
    assert_eq!(parsed.stats().height as u64, v["height"].as_u64().unwrap());
}

#[test]
fn report_reads_experiment_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    let c = csv.to_str().unwrap();
    assert!(hst(&[
        "experiment",
        "--n",
        "64",
        "--d",
        "1",
        "--trials",
        "20",
        "--mode",
        "combinatorial",
        "--out",
        c
    ])
    .status
    .success());
    let o = hst(&["report", "--input", c]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trials"], 20);
    assert!(v["height"]["mean"].as_f64().unwrap() > v["mean_depth"]["mean"].as_f64().unwrap());
}

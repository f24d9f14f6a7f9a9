use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cw"))
        .args(args)
        .env_remove("CW_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sample_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    let report = dir.path().join("report.json");
    let out = cw(&[
        "sample",
        "--sizes",
        "5,7",
        "--beta",
        "0.8,1.2",
        "--n",
        "1000",
        "--seed",
        "42",
        "--out",
        p(&votes),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&votes).unwrap();
    assert!(csv.starts_with("# sizes=5,7\n"));
    assert_eq!(csv.lines().count(), 1001);

    let sidecar = json_file(&dir.path().join("votes.summary.json"));
    assert_eq!(sidecar["seed"], 42);
    assert_eq!(sidecar["version"], curie_weiss::VERSION);
    assert_eq!(sidecar["result"]["n"], 1000);
    assert_eq!(sidecar["result"]["groups"][1]["N"], 7);

    let out = cw(&[
        "estimate",
        "--input",
        p(&votes),
        "--sizes",
        "5,7",
        "--level",
        "0.95",
        "--out",
        p(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_file(&report);
    assert_eq!(r["command"], "estimate");
    assert_eq!(r["result"]["groups"].as_array().unwrap().len(), 2);
    let t_csv = r["result"]["groups"][0]["T"].as_f64().unwrap();
    assert_eq!(t_csv, sidecar["result"]["groups"][0]["T"].as_f64().unwrap());

    // the sidecar itself is an accepted summary
    let out = cw(&[
        "estimate",
        "--summary",
        p(&dir.path().join("votes.summary.json")),
    ]);
    assert_eq!(code(&out), 0);
    let from_summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(from_summary["result"], r["result"]);

    let weights = dir.path().join("weights.json");
    let out = cw(&["weights", "--from-report", p(&report), "--out", p(&weights)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let w = json_file(&weights);
    assert_eq!(w["result"]["groups"][0]["source"], "Estimated");
    assert!(w["result"]["groups"][0]["std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn saturated_summary_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    fs::write(
        &summary,
        r#"{"n": 20, "groups": [{"N": 5, "T": 25.0}, {"N": 4, "T": 3.2}]}"#,
    )
    .unwrap();
    let out = cw(&["estimate", "--summary", p(&summary)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["groups"][0]["classification"], "PosInfinite");
    assert_eq!(r["result"]["groups"][0]["beta_hat"], "inf");
    assert!(r["result"]["groups"][0]["ci"].is_null());
    assert_eq!(r["result"]["groups"][1]["classification"], "NegativeFinite");
}

#[test]
fn malformed_votes_exit_3_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("v.csv");
    fs::write(&votes, "# sizes=3\n1,-1,1\n-1,0,1\n").unwrap();
    let out = cw(&["estimate", "--input", p(&votes)]);
    assert_eq!(code(&out), 3);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3, column 2"), "{msg}");

    fs::write(&votes, "1,-1,1\n1,1\n").unwrap();
    assert_eq!(
        code(&cw(&["estimate", "--input", p(&votes), "--sizes", "3"])),
        3
    );
    fs::write(&votes, "1,-1,1\n").unwrap();
    assert_eq!(
        code(&cw(&["estimate", "--input", p(&votes), "--sizes", "2"])),
        3
    );
    assert_eq!(
        code(&cw(&[
            "estimate",
            "--input",
            p(&dir.path().join("missing.csv"))
        ])),
        3
    );
}

#[test]
fn statistic_out_of_range_exits_4() {
    let out = cw(&["estimate", "--t", "30", "--sizes", "5", "--n", "10"]);
    assert_eq!(code(&out), 4);
    let out = cw(&["weights", "--sizes", "5", "--beta", "-0.3"]);
    assert_eq!(code(&out), 4);
    let out = cw(&[
        "bounds",
        "--sizes",
        "5",
        "--beta",
        "0.8",
        "--n",
        "100",
        "--kind",
        "closed-set",
        "--set",
        "0:1",
    ]);
    assert_eq!(code(&out), 4);
    let out = cw(&[
        "bounds",
        "--sizes",
        "5",
        "--beta",
        "-0.8",
        "--n",
        "100",
        "--kind",
        "atypical-T",
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&cw(&["estimate"])), 2);
    assert_eq!(code(&cw(&["sample", "--sizes", "5", "--beta", "0.1"])), 2);
    assert_eq!(
        code(&cw(&["moments", "--sizes", "5", "--beta-grid", "2:1:0.1"])),
        2
    );
    assert_eq!(code(&cw(&["oracle", "--sizes", "17", "--beta", "0"])), 2);
    assert_eq!(
        code(&cw(&["weights", "--sizes", "5,7", "--beta", "1,2,3"])),
        2
    );
    assert_eq!(
        code(&cw(&["moments", "--sizes", "1", "--beta-grid", "0:1:1"])),
        2
    );
    assert_eq!(code(&cw(&["--version"])), 0);
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_cw"))
        .args(["oracle", "--sizes", "3", "--beta", "0"])
        .env("CW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad_threads), 2);
}

#[test]
fn bounds_report() {
    let out = cw(&[
        "bounds",
        "--sizes",
        "5",
        "--beta",
        "0.8",
        "--n",
        "1000",
        "--kind",
        "atypical-T",
    ]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["kind"], "AtypicalT");
    let delta = r["result"]["delta"].as_f64().unwrap();
    let bound = r["result"]["bound"].as_f64().unwrap();
    assert!(
        delta > 0.0 && (bound - 2.0 * (-1000.0 * delta).exp()).abs() <= 1e-12 * bound.max(1e-300)
    );

    let out = cw(&[
        "bounds",
        "--sizes",
        "5,6",
        "--beta",
        "0.8,1",
        "--n",
        "50",
        "--kind",
        "closed-set",
        "--set",
        "1.5:inf",
        "--set",
        "-inf:0.2,3:4",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["groups"], 2);
}

#[test]
fn moments_table() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = cw(&[
        "moments",
        "--sizes",
        "5",
        "--beta-grid",
        "-2:2:0.1",
        "--out",
        p(&curve),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,beta,theta,var_s2,abs_s"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[40][1], 2.0);
    let zero = rows.iter().find(|r| r[1].abs() < 1e-12).unwrap();
    assert!((zero[2] - 5.0).abs() < 1e-10);
    assert!(rows.windows(2).all(|w| w[0][2] < w[1][2]));
}

#[test]
fn oracle_matches_exact_values() {
    let out = cw(&["oracle", "--sizes", "3", "--beta", "0"]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["result"][0]["es4"].as_f64().unwrap() - 21.0).abs() < 1e-12);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_cw"))
            .args([
                "sample", "--sizes", "4,9", "--beta", "0.5,1.5", "--n", "3000", "--seed", "7",
            ])
            .args(["--out", p(&path)])
            .env("CW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        fs::read(&path).unwrap()
    };
    assert_eq!(run("1", "a.csv"), run("4", "b.csv"));
}

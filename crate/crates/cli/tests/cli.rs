use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn demo(f: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("demo")
        .join(f)
        .to_string_lossy()
        .into_owned()
}

fn qvn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvn"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    text.trim_end().to_string()
}

#[test]
fn run_reports_estimate_and_inventory() {
    let v = json(&qvn(&[
        "run",
        "--schedule",
        &demo("th.qvns"),
        "--memory",
        &demo("memory.qvnm"),
    ]));
    let c = &v["canonical"];
    let e = &c["estimate"];
    assert!(e["value"].as_f64().unwrap().abs() <= 4.0 * e["std_error"].as_f64().unwrap());
    assert_eq!(c["inventory"]["0"], 200);
    assert_eq!(c["inventory"]["1"], 200);
    assert_eq!(c["audit"]["fetches"], 600);
    assert_eq!(v["meta"]["command"], "run");
}

#[test]
fn threads_do_not_change_results() {
    let base = [
        "run",
        "--schedule",
        &demo("th.qvns"),
        "--memory",
        &demo("memory.qvnm"),
        "--records",
    ];
    let one = json(&qvn(&[&base[..], &["--threads", "1"]].concat()));
    let many = json(&qvn(&[&base[..], &["--threads", "3"]].concat()));
    assert_eq!(one["canonical"], many["canonical"]);
    let other = json(&qvn(&[&base[..], &["--seed", "99"]].concat()));
    assert_ne!(one["canonical"]["records"], other["canonical"]["records"]);
}

#[test]
fn compose_passes_every_strategy() {
    let v = json(&qvn(&[
        "compose",
        "--first",
        &demo("h.qvn"),
        "--second",
        &demo("t.qvn"),
        "--repeats",
        "5",
    ]));
    let rows = v["canonical"]["strategies"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["pass"] == true));
    let one = json(&qvn(&[
        "compose",
        "--first",
        &demo("h.qvn"),
        "--second",
        &demo("t.qvn"),
        "--strategy",
        "symmetric-pair",
    ]));
    assert_eq!(one["canonical"]["strategies"][0]["rounds_total"], 1);
}

#[test]
fn qec_check_separates_correctable_sets() {
    let x = json(&qvn(&["qec-check", "--code", &demo("rep3_x.qvnc")]));
    assert_eq!(x["canonical"]["satisfied"], true);
    assert_eq!(x["canonical"]["detection"]["satisfied"], true);
    let z = json(&qvn(&["qec-check", "--code", &demo("rep3_z.qvnc")]));
    assert_eq!(z["canonical"]["satisfied"], false);
    assert!(z["canonical"]["kl"]["max_residual"].as_f64().unwrap() >= 0.1);
}

#[test]
fn topo_eval_circle_of_t() {
    let v = json(&qvn(&["topo-eval", "--diagram", &demo("circle_t.qvnt")]));
    let a = &v["canonical"]["amplitude"];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((a["re"].as_f64().unwrap() - (1.0 + s) / 2.0).abs() < 1e-12);
    assert!((a["im"].as_f64().unwrap() - s / 2.0).abs() < 1e-12);
    assert!(a["text"].as_str().unwrap().starts_with("0.85355339059327"));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("qvn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = qvn(&[
        "topo-eval",
        "--diagram",
        &demo("link.qvnt"),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["canonical"]["closed"], true);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn errors_are_single_coded_lines() {
    let missing = qvn(&["topo-eval", "--diagram", "/nonexistent/x.qvnt"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr_line(&missing).starts_with("E_IO:"));

    let usage = qvn(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(2));
    assert!(stderr_line(&usage).starts_with("E_USAGE:"));

    let bad = std::env::temp_dir().join(format!("qvn-bad-{}.qvn", std::process::id()));
    std::fs::write(&bad, "QVN1 name=x n=1\nt=0 g=Q q=0\n").unwrap();
    let parse = qvn(&[
        "compose",
        "--first",
        bad.to_str().unwrap(),
        "--second",
        &demo("t.qvn"),
    ]);
    std::fs::remove_file(&bad).unwrap();
    assert_eq!(parse.status.code(), Some(3));
    let line = stderr_line(&parse);
    assert!(
        line.starts_with("E_PARSE:") && line.contains("line 2, column 5"),
        "{line}"
    );

    let no_shots = qvn(&[
        "run",
        "--schedule",
        &demo("th.qvns"),
        "--memory",
        &demo("memory.qvnm"),
        "--shots",
        "0",
    ]);
    assert_eq!(no_shots.status.code(), Some(2));
    assert!(stderr_line(&no_shots).starts_with("E_USAGE:"));
}

#[test]
fn running_out_of_copies_names_the_instruction() {
    let v = qvn(&[
        "run",
        "--schedule",
        &demo("th.qvns"),
        "--memory",
        &demo("memory.qvnm"),
        "--shots",
        "201",
    ]);
    // restores keep the two sources topped up, so 201 shots still succeed
    assert!(v.status.success());
    let sched = std::env::temp_dir().join(format!("qvn-sched-{}.qvns", std::process::id()));
    std::fs::write(
        &sched,
        "QVNS1 shots=201 seed=1\ncompose a=0 b=1 strategy=correction-table dest=7\n",
    )
    .unwrap();
    let out = qvn(&[
        "run",
        "--schedule",
        sched.to_str().unwrap(),
        "--memory",
        &demo("memory.qvnm"),
    ]);
    std::fs::remove_file(&sched).unwrap();
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(
        line.starts_with("E_OUT_OF_COPIES:") && line.contains("instruction 0"),
        "{line}"
    );
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dpalm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpalm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn dpalm")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_writes_trace_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let o = dpalm(
        &["solve", "--family", "lcqp", "--n", "3", "--d", "20", "--rho", "1", "--eps", "1e-3", "--seed", "7", "--save-x"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("out/lcqp__rho1__seed7.csv")).unwrap();
    assert!(trace.starts_with("k,beta,v,alpha,pres,dres,cs,inner_iters,grad_evals,wall_ms\n"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/lcqp__rho1__seed7.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "converged");
    assert_eq!(json["x"].as_array().unwrap().len(), 20);
    assert!(json.get("dual").is_none());
    assert_eq!(json["k_final"].as_u64().unwrap() as usize, trace.lines().count() - 1);
}

#[test]
fn negative_eps_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dpalm(&["solve", "--family", "lcqp", "--n", "2", "--d", "5", "--eps", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("must be positive"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = dpalm(&["solve", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn gen_then_solve_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = dpalm(
        &["gen", "--family", "qcqp", "--m", "2", "--d", "8", "--rho", "1", "--seed", "3", "--out", "q.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = dpalm(&["solve", "--instance", "q.json", "--eps", "1e-2", "--no-timing", "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("r/q.csv")).unwrap();
    assert!(trace.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")));
}

#[test]
fn bench_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "family": "lcqp", "n": 2, "d": 10, "rho": [0.1, 1.0],
        "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
        "solver": { "eps": 1e-3 },
        "out_dir": "a"
    }"#;
    fs::write(dir.path().join("exp.json"), cfg).unwrap();
    for out in ["a", "b"] {
        let o = dpalm(&["bench", "--config", "exp.json", "--no-timing", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 20);
    for n in &names {
        let a = fs::read(dir.path().join("a").join(n)).unwrap();
        let b = fs::read(dir.path().join("b").join(n)).unwrap();
        assert_eq!(a, b, "{n} differs between identical runs");
    }

    let o = dpalm(&["summarize", "a", "--out", "summary.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("10")));
}

#[test]
fn summarize_reports_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("lcqp__rho1__seed0.csv"), "k,beta\n1,2\n").unwrap();
    let o = dpalm(&["summarize", "lcqp__rho1__seed0.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lcqp__rho1__seed0.csv"));
}

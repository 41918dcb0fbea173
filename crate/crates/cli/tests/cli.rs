use std::path::Path;
use std::process::{Command, Output};

fn nldt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nldt")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = nldt(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn manifest_outputs(dir: &Path, name: &str) -> Vec<(String, String)> {
    let v: serde_json::Value = serde_json::from_str(&read(dir, name)).unwrap();
    v["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["path"].as_str().unwrap().to_string(), o["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn mountaincar_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["gen-data", "--env", "mountaincar", "--mode", "balanced", "--n", "4000", "--seed", "3", "--out", "data.csv"],
    );
    ok(d, &["gen-data", "--env", "mountaincar", "--n", "2000", "--seed", "4", "--out", "val.csv"]);
    ok(d, &["train-open", "--data", "data.csv", "--lower", "local", "--max-depth", "3", "--out", "tree.json"]);

    let m: serde_json::Value = serde_json::from_str(&read(d, "tree.json.manifest.json")).unwrap();
    assert_eq!(m["command"], "train-open");
    assert_eq!(m["config"]["lower"], "local");
    let nodes = m["details"]["induction"]["nodes"].as_array().unwrap();
    assert!(!nodes.is_empty());
    assert!(nodes[0].get("wall_ms").is_some() && nodes[0].get("f_u").is_some());

    ok(d, &["prune", "--tree", "tree.json", "--val", "val.csv", "--tolerance", "0.25", "--out", "pruned.json"]);
    ok(d, &["prefix", "--tree", "pruned.json", "--depth", "2", "--out", "p2.json"]);
    ok(
        d,
        &[
            "train-closed",
            "--tree",
            "p2.json",
            "--env",
            "mountaincar",
            "--generations",
            "2",
            "--out",
            "star.json",
            "--curve",
            "curve.csv",
            "--checkpoint",
            "ckpt.json",
        ],
    );
    let curve = read(d, "curve.csv");
    assert!(curve.starts_with("generation,best,mean\n"));
    assert_eq!(curve.lines().count(), 4);
    assert!(d.join("ckpt.json").exists());

    ok(d, &["reengineer", "--tree", "star.json", "--env", "mountaincar", "--samples", "2000", "--out", "final.json"]);
    let text = ok(
        d,
        &[
            "evaluate",
            "--tree",
            "final.json",
            "--env",
            "mountaincar",
            "--batches",
            "4",
            "--episodes",
            "50",
            "--test",
            "val.csv",
            "--report",
            "report.json",
        ],
    );
    assert!(text.contains("completion"));
    let report: serde_json::Value = serde_json::from_str(&read(d, "report.json")).unwrap();
    assert!(report["closed_loop"]["completion"]["mean"].as_f64().unwrap() >= 90.0);
    assert!(report["open_loop"]["test_accuracy"].as_f64().is_some());

    let rules = ok(d, &["export", "--tree", "final.json", "--format", "csv-rules"]);
    assert!(rules.starts_with("node,depth,left,right"));
    let json = ok(d, &["export", "--tree", "final.json", "--format", "json"]);
    assert!(json.contains("\"bounds\""));

    ok(d, &["rollout", "--tree", "final.json", "--env", "mountaincar", "--seed", "5", "--trace", "trace.csv"]);
    assert!(read(d, "trace.csv").starts_with("t,x,v,action,reward\n"));
    ok(
        d,
        &[
            "plot",
            "--kind",
            "action_vs_time",
            "--tree",
            "final.json",
            "--env",
            "mountaincar",
            "--steps",
            "300",
            "--out",
            "avt.csv",
        ],
    );
    let avt = read(d, "avt.csv");
    assert!(avt.starts_with("t,action\n"));
    assert_eq!(avt.lines().count(), 301);
}

#[test]
fn cartpole_text_export_has_rule_shape() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--env", "cartpole", "--n", "3000", "--seed", "1", "--out", "data.csv"]);
    ok(d, &["train-open", "--data", "data.csv", "--max-depth", "2", "--out", "tree.json"]);
    let text = ok(d, &["export", "--tree", "tree.json"]);
    assert!(text.starts_with("if "), "{text}");
    assert!(text.contains("Action = ") && text.contains("else") && text.trim_end().ends_with("end"));
}

#[test]
fn identical_runs_give_identical_artifacts_for_any_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--env", "cartpole", "--n", "2000", "--seed", "9", "--out", "data.csv"]);
    let mut hashes = Vec::new();
    for jobs in ["1", "8"] {
        let out = format!("tree{jobs}.json");
        ok(d, &["--jobs", jobs, "train-open", "--data", "data.csv", "--max-depth", "3", "--seed", "2", "--out", &out]);
        hashes.push(manifest_outputs(d, &format!("{out}.manifest.json"))[0].1.clone());
        let eval = format!("eval{jobs}.json");
        ok(
            d,
            &[
                "--jobs",
                jobs,
                "evaluate",
                "--tree",
                &out,
                "--env",
                "cartpole",
                "--batches",
                "3",
                "--episodes",
                "20",
                "--report",
                &eval,
            ],
        );
        let r: serde_json::Value = serde_json::from_str(&read(d, &eval)).unwrap();
        hashes.push(r["closed_loop"].to_string());
    }
    assert_eq!(hashes[0], hashes[2]);
    assert_eq!(hashes[1], hashes[3]);
    ok(d, &["gen-data", "--env", "cartpole", "--n", "2000", "--seed", "9", "--out", "again.csv"]);
    assert_eq!(manifest_outputs(d, "data.csv.manifest.json")[0].1, manifest_outputs(d, "again.csv.manifest.json")[0].1);
}

#[test]
fn errors_map_to_exit_codes_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| {
        let out = nldt(d, args);
        let err = String::from_utf8(out.stderr).unwrap();
        (out.status.code().unwrap(), err)
    };

    let (c, _) = code(&["evaluate", "--tree", "t.json", "--env", "lunarlander"]);
    assert_eq!(c, 2);
    let (c, _) = code(&["gen-data", "--env", "cartpole", "--oracle", "human", "--out", "x.csv"]);
    assert_eq!(c, 2);
    let (c, err) = code(&["evaluate", "--tree", "missing.json", "--env", "cartpole"]);
    assert_eq!(c, 3);
    assert_eq!(err.trim().lines().count(), 1, "{err}");

    std::fs::write(d.join("bad.csv"), "x0,x1,action\n0.1,0.2,0\n0.3,oops,1\n").unwrap();
    let (c, err) = code(&["train-open", "--data", "bad.csv", "--out", "tree.json"]);
    assert_eq!(c, 3);
    assert!(err.contains("line 3"), "{err}");
    assert!(!d.join("tree.json").exists());

    std::fs::write(d.join("cfg.json"), r#"{"tau_i": 2.0}"#).unwrap();
    std::fs::write(d.join("ok.csv"), "x0,action\n0.1,0\n0.9,1\n").unwrap();
    let (c, _) = code(&["train-open", "--data", "ok.csv", "--config", "cfg.json", "--out", "tree.json"]);
    assert_eq!(c, 2);

    let leftovers: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 3, "{leftovers:?}");
}

#[test]
fn tree_oracle_relabels_with_its_policy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("oracle.json"),
        r#"{"n_actions": 3, "d": 2, "bounds": {"min": [-1.2, -0.07], "max": [0.6, 0.07]}, "root": {"action": 1, "counts": [0, 0, 0]}}"#,
    )
    .unwrap();
    ok(d, &["gen-data", "--env", "mountaincar", "--oracle", "tree:oracle.json", "--n", "50", "--out", "data.csv"]);
    let data = read(d, "data.csv");
    assert!(data.lines().skip(1).all(|l| l.ends_with(",1")));
}

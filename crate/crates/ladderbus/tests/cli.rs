use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ladderbus::ctrlfile::{parse_program, write_program};
use tempfile::TempDir;

fn ladderbus(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ladderbus"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn ladderbus")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = ladderbus(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Every file under `root`, keyed by relative path.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let args = |d: &'static str| ["--seed", "7", "run", "-d", d, "--n", "24", "--edges", "70", "--frames", "2", "--trace"];
    ok(&args("a"), tmp.path());
    ok(&args("b"), tmp.path());
    let a = snapshot(&tmp.path().join("a"));
    assert!(a.contains_key(Path::new("trace.log")));
    assert!(a.contains_key(Path::new("controllers/ctrl_000.txt")));
    assert_eq!(a, snapshot(&tmp.path().join("b")));
    ok(&args("a"), tmp.path());
    assert_eq!(a, snapshot(&tmp.path().join("a")));
}

#[test]
fn stage_by_stage_matches_run() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    ok(&["run", "-d", "whole", "--n", "20", "--density", "0.15"], t);
    ok(&["gen", "-d", "steps", "--n", "20", "--density", "0.15"], t);
    for stage in ["place", "route", "group", "emit-ctrl", "sim", "cost"] {
        ok(&[stage, "-d", "steps"], t);
    }
    assert_eq!(snapshot(&t.join("whole")), snapshot(&t.join("steps")));
}

#[test]
fn rerunning_a_stage_drops_later_outputs() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    ok(&["run", "-d", "r", "--n", "16", "--edges", "40"], t);
    ok(&["group", "-d", "r", "--algorithm", "greedy"], t);
    assert!(t.join("r/scenarios.json").exists());
    assert!(!t.join("r/sim.json").exists());
    assert!(!t.join("r/cost.json").exists());
    assert!(!t.join("r/controllers").exists());
}

#[test]
fn report_omits_stages_not_run() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    ok(&["gen", "-d", "r", "--n", "12", "--edges", "30"], t);
    ok(&["place", "-d", "r"], t);
    ok(&["route", "-d", "r"], t);
    ok(&["group", "-d", "r"], t);
    let rep = json(&ok(&["report", "-d", "r", "--format", "json"], t));
    assert_eq!(rep["graph"]["n_edges"], 30);
    assert_eq!(rep["paths"], 30);
    assert!(rep.get("grouping").is_some());
    assert!(rep.get("controllers").is_none());
    assert!(rep.get("sim").is_none());
    assert!(rep.get("cost").is_none());
    let text = ok(&["report", "-d", "r"], t);
    assert!(text.contains("grouping"));
    assert!(!text.contains("sim "));
}

#[test]
fn sweep_table_round_trips_through_report() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    ok(
        &[
            "sweep", "--out", "s.csv", "--sizes", "12,16", "--densities", "0,0.2", "--seeds", "1,2",
            "--algorithms", "greedy,maxclique", "--workers", "2",
        ],
        t,
    );
    let table = fs::read_to_string(t.join("s.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("n,density,seed,algo,E,scenarios,lower_bound,ctrl_bits,ctrl_frac"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 2 * 2);
    for r in &rows {
        let (e, s, lb): (usize, usize, usize) = (r[4].parse().unwrap(), r[5].parse().unwrap(), r[6].parse().unwrap());
        assert!(s >= lb);
        if r[1] == "0.0" {
            assert_eq!((e, s), (0, 0));
        }
    }
    assert_eq!(ok(&["report", "--sweep", "s.csv"], t), table);
}

#[test]
fn synth_40_160_shape() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    ok(&["run", "-d", "r", "--n", "40", "--edges", "160"], t);
    let rep = json(&ok(&["report", "-d", "r", "--format", "json"], t));
    assert_eq!(rep["graph"]["name"], "synth_40(160)");
    assert_eq!(rep["graph"]["n_clusters"], 40);
    assert_eq!(rep["graph"]["n_edges"], 160);
    assert_eq!(rep["paths"], 160);
    let lb = rep["grouping"]["lower_bound"].as_u64().unwrap();
    assert!(lb >= 7);
    assert!(rep["grouping"]["scenarios"].as_u64().unwrap() >= lb);
    assert_eq!(rep["sim"]["clean"], true);
    assert_eq!(rep["sim"]["deliveries"], 160);
}

#[test]
fn graph_without_edges_needs_no_scenarios() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    ok(&["run", "-d", "r", "--n", "5", "--edges", "0"], t);
    let rep = json(&ok(&["report", "-d", "r", "--format", "json"], t));
    assert_eq!(rep["grouping"]["scenarios"], 0);
    assert_eq!(rep["sim"]["clean"], true);
    assert_eq!(rep["sim"]["steps"], 0);
}

#[test]
fn graph_file_input_and_metrics() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    fs::write(
        t.join("g.json"),
        r#"{"name": "tiny", "n_clusters": 3, "edges": [[0, 1, 4], [1, 2, 2], [2, 0, 1]]}"#,
    )
    .unwrap();
    let m = json(&ok(&["metrics", "--input", "g.json"], t));
    assert_eq!(m["n_edges"], 3);
    assert_eq!(m["max_total_degree"], 2);
    ok(&["run", "-d", "r", "--input", "g.json", "--frames", "3"], t);
    let rep = json(&ok(&["report", "-d", "r", "--format", "json"], t));
    assert_eq!(rep["graph"]["name"], "tiny");
    assert_eq!(rep["sim"]["deliveries"], 9);
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    fs::write(t.join("c.toml"), "seed = \"x\"\n").unwrap();
    let out = ladderbus(&["--config", "c.toml", "run", "-d", "r"], t);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("line 1"));
    fs::write(t.join("c.toml"), "[graph]\nnodes = 4\n").unwrap();
    assert_eq!(ladderbus(&["--config", "c.toml", "gen", "-d", "r"], t).status.code(), Some(2));
}

#[test]
fn stage_errors_exit_3() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    let out = ladderbus(&["route", "-d", "nothing"], t);
    assert_eq!(out.status.code(), Some(3));

    fs::write(
        t.join("bad.json"),
        r#"{"name": "bad", "n_clusters": 3, "edges": [[0, 1, 1], [2, 2, 1]]}"#,
    )
    .unwrap();
    let out = ladderbus(&["run", "-d", "r", "--input", "bad.json"], t);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_of(&out);
    assert!(err.contains("edges[1]") && err.contains("self-loop"), "{err}");

    fs::write(t.join("broken.json"), "{\"name\": \"x\",\n  \"n_clusters\": }").unwrap();
    let out = ladderbus(&["metrics", "--input", "broken.json"], t);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("line 2"));
}

#[test]
fn corrupted_controller_memory_exits_4() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    ok(&["run", "-d", "r", "--n", "10", "--edges", "20"], t);
    let file = t.join("r/controllers/ctrl_000.txt");
    let mut p = parse_program(&fs::read_to_string(&file).unwrap()).unwrap();
    for word in &mut p.memory {
        word.iter_mut().for_each(|b| *b = 0);
    }
    fs::write(&file, write_program(&p)).unwrap();
    let out = ladderbus(&["sim", "-d", "r"], t);
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
    let sim = json(&fs::read_to_string(t.join("r/sim.json")).unwrap());
    assert_eq!(sim["clean"], false);
}

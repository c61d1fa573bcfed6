use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SIX_BY_SIX: &str =
    r#"{"width":6,"height":6,"gamma":0.9,"rewards":[{"x":4,"y":2,"value":10}]}"#;

fn memoryless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memoryless"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn file(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solved(dir: &TempDir, instance: &str, mode: &str) -> PathBuf {
    let inst = file(dir, "instance.json", instance);
    let out = dir.path().join(format!("peaks-{mode}.json"));
    let o = memoryless(&["solve", s(&inst), "--mode", mode, "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn single_reward_solves_to_one_baseline_peak() {
    let dir = TempDir::new().unwrap();
    let out = solved(&dir, SIX_BY_SIX, "memoryless");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let peaks = doc["peaks"].as_array().unwrap();
    assert_eq!(peaks.len(), 1);
    assert_eq!(peaks[0]["kind"], "baseline");
    assert_eq!(
        (peaks[0]["pri"]["x"].as_u64(), peaks[0]["pri"]["y"].as_u64()),
        (Some(4), Some(2))
    );

    let memo = solved(&dir, SIX_BY_SIX, "memoized");
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        std::fs::read_to_string(&memo).unwrap()
    );
}

#[test]
fn solve_reports_count_and_time() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "i.json", SIX_BY_SIX);
    let out = dir.path().join("p.json");
    let o = memoryless(&["solve", s(&inst), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("peaks: 1"), "{text}");
    assert!(text.contains("wall_seconds: "), "{text}");
}

#[test]
fn invalid_instances_exit_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.json");
    let bad_gamma = file(
        &dir,
        "g.json",
        r#"{"width":6,"height":6,"gamma":1.0,"rewards":[{"x":4,"y":2,"value":10}]}"#,
    );
    let o = memoryless(&["solve", s(&bad_gamma), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("discount"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert!(!out.exists());

    let tiny = file(
        &dir,
        "t.json",
        r#"{"width":1,"height":1,"gamma":0.9,"rewards":[{"x":0,"y":0,"value":1}]}"#,
    );
    assert_eq!(memoryless(&["compare", s(&tiny)]).status.code(), Some(1));
    assert_eq!(
        memoryless(&["solve", "/nonexistent/file.json", "--out", s(&out)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(memoryless(&["solve"]).status.code(), Some(1));
}

#[test]
fn value_queries() {
    let dir = TempDir::new().unwrap();
    let peaks = solved(&dir, SIX_BY_SIX, "memoryless");
    let v = |xy: &str| memoryless(&["value", s(&peaks), "--state", xy]);
    assert_eq!(stdout(&v("4,5")).trim(), "38.3684211");
    assert_eq!(stdout(&v("4,2")).trim(), "52.6315789");
    let o = v("6,0");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
    assert_eq!(v("-1,0").status.code(), Some(1));
    assert_eq!(v("nonsense").status.code(), Some(1));

    let empty = file(
        &dir,
        "empty.json",
        r#"{"gamma":0.9,"width":3,"height":3,"peaks":[]}"#,
    );
    let o = memoryless(&["value", s(&empty), "--state", "1,1"]);
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn follow_prints_rows() {
    let dir = TempDir::new().unwrap();
    let peaks = solved(&dir, SIX_BY_SIX, "memoryless");
    let o = memoryless(&["follow", s(&peaks), "--start", "1,1", "--steps", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["x"], 4);
    assert_eq!(rows[3]["y"], 2);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r["step"], k + 1);
        assert!(r["action"].is_string());
    }
    // every move makes progress toward (4,2)
    let values: Vec<f64> = rows.iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));

    let one = memoryless(&["follow", s(&peaks), "--start", "1,1", "--steps", "1"]);
    assert_eq!(stdout(&one).lines().count(), 1);
    let zero = memoryless(&["follow", s(&peaks), "--start", "1,1", "--steps", "0"]);
    assert_eq!(zero.status.code(), Some(1));
}

#[test]
fn compare_passes_on_small_instances() {
    let dir = TempDir::new().unwrap();
    let inst = file(
        &dir,
        "c.json",
        r#"{"width":8,"height":7,"gamma":0.95,"rewards":[{"x":1,"y":1,"value":3},{"x":2,"y":1,"value":5},{"x":6,"y":5,"value":9},{"x":0,"y":6,"value":1}]}"#,
    );
    let o = memoryless(&["compare", s(&inst)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let diff_line = text
        .lines()
        .find(|l| l.starts_with("max_abs_diff: "))
        .unwrap();
    let diff = diff_line.trim_start_matches("max_abs_diff: ");
    assert!(diff.contains('e'), "{diff}");
    assert!(diff.parse::<f64>().unwrap() <= 1e-6);
    assert!(text.contains("vi_seconds: ") && text.contains("memoryless_seconds: "));
}

#[test]
fn bench_writes_csv() {
    let dir = TempDir::new().unwrap();
    let config = file(
        &dir,
        "sweep.json",
        r#"{"experiment":"rewards","grid_sizes":[[8,8]],"reward_counts":[2,4],"gammas":[0.9],"configs_per_point":2,"seed":5}"#,
    );
    let out = dir.path().join("out.csv");
    let o = memoryless(&["bench", s(&config), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some(
            "experiment,config_id,solver,n_rewards,n_states,gamma,wall_seconds,max_abs_diff_vs_vi"
        )
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4 * 3);
    for r in &rows {
        assert_eq!(r[0], "rewards");
        assert_eq!(r[4], "64");
        assert!(r[7].parse::<f64>().unwrap() <= 1e-6);
    }

    // rerunning with the same seed regenerates the same instance columns
    let again = dir.path().join("again.csv");
    assert!(memoryless(&["bench", s(&config), "--out", s(&again)])
        .status
        .success());
    let cols = |t: &str| -> Vec<String> {
        t.lines()
            .map(|l| {
                let f: Vec<_> = l.split(',').collect();
                [f[0], f[1], f[2], f[3], f[4], f[5]].join(",")
            })
            .collect()
    };
    assert_eq!(cols(&text), cols(&std::fs::read_to_string(&again).unwrap()));
}

#[test]
fn bench_empty_sweep_and_bad_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.csv");
    let empty = file(&dir, "e.json", r#"{"experiment":"states","solvers":[]}"#);
    assert!(memoryless(&["bench", s(&empty), "--out", s(&out)])
        .status
        .success());
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "experiment,config_id,solver,n_rewards,n_states,gamma,wall_seconds,max_abs_diff_vs_vi\n"
    );

    let bad = file(
        &dir,
        "b.json",
        r#"{"experiment":"states","configs_per_point":0}"#,
    );
    assert_eq!(
        memoryless(&["bench", s(&bad), "--out", s(&out)])
            .status
            .code(),
        Some(1)
    );
}

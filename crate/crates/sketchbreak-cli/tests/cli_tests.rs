//! End-to-end CLI tests: config loading, seed precedence, output files, the
//! external-process oracle, and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sketchbreak"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn attack_campaign_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{"scenario":"gapnorm-attack","n":48,"r":8,"m":800,"trials":2,
                "seed":5,"output_path":"{}"}}"#,
            stem.to_str().unwrap()
        ),
    );
    let out = bin()
        .args(["attack", "--config", &cfg, "--jobs", "2"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("campaign complete"));
    let trace = fs::read_to_string(format!("{}.jsonl", stem.to_str().unwrap())).unwrap();
    assert!(trace.lines().count() > 2);
    for line in trace.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    let summary = fs::read_to_string(format!("{}.csv", stem.to_str().unwrap())).unwrap();
    assert!(summary.starts_with("trials,successes"));
}

#[test]
fn seed_precedence_env_overrides_config_flag_overrides_env() {
    let dir = tempfile::tempdir().unwrap();
    let stem_a = dir.path().join("a");
    let stem_b = dir.path().join("b");
    let stem_c = dir.path().join("c");
    let mk = |stem: &Path| {
        format!(
            r#"{{"scenario":"gapnorm-attack","n":48,"r":8,"m":400,"trials":1,
                "seed":1,"output_path":"{}"}}"#,
            stem.to_str().unwrap()
        )
    };
    let cfg_a = write_config(dir.path(), "a.json", &mk(&stem_a));
    let cfg_b = write_config(dir.path(), "b.json", &mk(&stem_b));
    let cfg_c = write_config(dir.path(), "c.json", &mk(&stem_c));
    // Env seed 9 overrides the config's seed 1.
    assert!(bin()
        .args(["attack", "--config", &cfg_a])
        .env("SKETCHBREAK_SEED", "9")
        .status()
        .unwrap()
        .success());
    // Flag seed 9 overrides env seed 1234: outputs must match run A.
    assert!(bin()
        .args(["attack", "--config", &cfg_b, "--seed", "9"])
        .env("SKETCHBREAK_SEED", "1234")
        .status()
        .unwrap()
        .success());
    // Plain config seed 1 must differ.
    assert!(bin()
        .args(["attack", "--config", &cfg_c])
        .status()
        .unwrap()
        .success());
    let ja = fs::read_to_string(format!("{}.jsonl", stem_a.to_str().unwrap())).unwrap();
    let jb = fs::read_to_string(format!("{}.jsonl", stem_b.to_str().unwrap())).unwrap();
    let jc = fs::read_to_string(format!("{}.jsonl", stem_c.to_str().unwrap())).unwrap();
    assert_eq!(
        ja, jb,
        "equal effective seeds must reproduce bit-identically"
    );
    assert_ne!(ja, jc);
    // Non-numeric env seed is a loud error.
    let out = bin()
        .args(["attack", "--config", &cfg_a])
        .env("SKETCHBREAK_SEED", "not-a-number")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn chi2_table_command_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("delta.csv");
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{"scenario":"chi2-table","d":20,"b":8.0,"output_path":"{}"}}"#,
            out_path.to_str().unwrap()
        ),
    );
    let out = bin()
        .args(["chi2-table", "--config", &cfg])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,delta");
    assert_eq!(csv.lines().count(), 513);
}

#[test]
fn process_oracle_campaign_round_trips() {
    // External decider: accept iff ‖x‖² > n·(B/2·0.75 + 0.25), i.e. a
    // degenerate norm thresholder with no hidden subspace. The attack must
    // run the protocol cleanly; success is not required.
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("proc");
    let script = r#"
import sys, json
for line in sys.stdin:
    q = json.loads(line)["query"]
    s = sum(v*v for v in q)
    print(json.dumps({"answer": 1 if s > 2.7*len(q) else 0}), flush=True)
"#;
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{"scenario":"gapnorm-attack","n":16,"r":4,"m":200,"trials":1,
                "output_path":"{}"}}"#,
            stem.to_str().unwrap()
        ),
    );
    let out = bin()
        .args([
            "attack",
            "--config",
            &cfg,
            "--oracle-cmd",
            "python3",
            "-c",
            script,
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        fs::read_to_string(format!("{}.jsonl", stem.to_str().unwrap()))
            .unwrap()
            .lines()
            .count()
            > 0
    );
}

#[test]
fn invalid_config_fails_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"scenario":"gapnorm-attack","n":16,"r":16}"#,
    );
    let out = bin().args(["attack", "--config", &cfg]).output().unwrap();
    assert!(!out.status.success());
    let missing = bin()
        .args(["attack", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert!(!missing.status.success());
}

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use winofusion_core::pipeline::{Draft, DraftKind};

fn gen(out: &Path) -> Duration {
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_winofusion"))
        .args(["gen", "--out"])
        .arg(out)
        .env("RUST_LOG", "warn")
        .env_remove("WINOFUSION_CONFIG")
        .status()
        .unwrap();
    assert!(status.success());
    t.elapsed()
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let elapsed = gen(&a).max(gen(&b));
    assert!(elapsed < Duration::from_secs(5), "{elapsed:?}");
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x, y);
    let drafts: Vec<Draft> = String::from_utf8(x).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(drafts.iter().filter(|d| d.kind() == DraftKind::FullSchema).count() >= 5);
    assert!(drafts.iter().filter(|d| d.kind() == DraftKind::SemiTemplate).count() >= 10);
}

#[test]
fn provision_then_export_through_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("w.conf");
    fs::write(&conf, format!("store.dir = {}\n", dir.path().join("data").display())).unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_winofusion"))
            .env("WINOFUSION_CONFIG", &conf)
            .env("RUST_LOG", "warn")
            .args(args)
            .output()
            .unwrap()
    };
    let out = run(&["provision", "--id", "ana", "--role", "admin", "--key", "secret"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "secret");
    let again = run(&["provision", "--id", "ana", "--role", "admin"]);
    assert!(!again.status.success());
    let export = run(&["export", "--out", dir.path().join("out").to_str().unwrap()]);
    assert!(export.status.success());
    assert!(export.stdout.is_empty());
    let adapt = run(&["adapt", "--show"]);
    let view: serde_json::Value = serde_json::from_slice(&adapt.stdout).unwrap();
    assert!(view["config"]["sentence_length_max"].is_number());
}

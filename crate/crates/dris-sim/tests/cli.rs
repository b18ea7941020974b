//! End-to-end checks of the command-line binary: exit codes, output files,
//! and seed handling across repeated invocations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dris_sim::scenario::{default_config, serialize_scenario};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dris-sim"));
    // Keep the ambient environment from steering seeded runs.
    cmd.env_remove("DRIS_SEED");
    cmd
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dris-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn help_lists_the_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    for name in ["analyze", "simulate", "cep-demo", "validate"] {
        assert!(text.contains(name), "help does not mention {name}:\n{text}");
    }
}

#[test]
fn analyze_writes_identical_tables_on_reruns() {
    let dir = scratch("analyze");
    let first = dir.join("first.csv");
    let second = dir.join("second.csv");
    for out_path in [&first, &second] {
        let out = bin()
            .args(["analyze", "--sweep", "m_a", "--values", "500,1000,2000"])
            .arg("--out")
            .arg(out_path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = read(&first);
    assert_eq!(a, read(&second));
    assert!(a.starts_with("# schema=1\n"));
    assert!(a.contains("\nvalue,eta,rho_d"));
    // 4 metadata lines, 1 header, 3 rows.
    assert_eq!(a.lines().count(), 8);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_follows_the_seed_override() {
    let dir = scratch("simulate");
    let run = |name: &str, seed: &str| -> (String, String) {
        let path = dir.join(name);
        let out = bin()
            .args(["simulate", "--sweep", "tx_power_dbm", "--values", "-30"])
            .args(["--trials", "20", "--workers", "2"])
            .arg("--out")
            .arg(&path)
            .env("DRIS_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (read(&path), stdout_of(&out))
    };
    let (a, report) = run("a.csv", "7");
    let (b, _) = run("b.csv", "7");
    let (c, _) = run("c.csv", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.contains("# seed=7\n"));
    assert!(c.contains("# seed=8\n"));
    assert!(report.contains("cross-validation"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn cep_demo_dumps_truth_and_verdict() {
    let dir = scratch("demo");
    let path = dir.join("timeline.csv");
    let out = bin()
        .args(["cep-demo", "--scenario", "opt2"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&path);
    assert!(text.contains("truth_h_d,"));
    assert!(text.contains("tag,opt2,"));
    assert!(stdout_of(&out).contains("opt2"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn scenario_files_are_loaded() {
    let dir = scratch("config");
    let mut cfg = default_config();
    cfg.run.seed = 123;
    let cfg_path = dir.join("scenario.txt");
    std::fs::write(&cfg_path, serialize_scenario(&cfg)).unwrap();
    let out_path = dir.join("table.csv");
    let out = bin()
        .arg("analyze")
        .arg("--config")
        .arg(&cfg_path)
        .args(["--sweep", "m_e", "--values", "1000"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&out_path).contains("# seed=123\n"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = scratch("bad");
    let out_path = dir.join("never.csv");

    let out = bin()
        .args(["analyze", "--sweep", "bogus_axis", "--values", "1"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("axis"));

    let out = bin()
        .args(["cep-demo", "--scenario", "bogus"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = bin()
        .args(["simulate", "--sweep", "m_a", "--values", "100", "--trials", "0"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(!out.status.success());

    assert!(!out_path.exists(), "failed runs must not leave output files");
    std::fs::remove_dir_all(&dir).ok();
}

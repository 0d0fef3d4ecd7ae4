use std::path::Path;
use std::process::{Command, Output};

fn nqlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nqlab"))
        .args(args)
        .env_remove("NQLAB_GIT_REV")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("run nqlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn experiment_is_byte_identical_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let o = nqlab(&[
            "experiment",
            "--strategy",
            "one_sided_before_target,grover_two_sided,flag_bit_search,one_sided_after_index",
            "--n",
            "64,256",
            "--r",
            "0.25",
            "--trials",
            "300",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "7");
    let b = run("b.csv", "7");
    assert_eq!(a, b);
    assert_ne!(a, run("c.csv", "8"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# nqlab "));
    assert!(text.lines().next().unwrap().contains("master_seed=7"));
    let rows = csv_rows(&text);
    assert_eq!(rows[0], "strategy,n,r,j,trials,success_rate,ci_lo,ci_hi,mean_queries,se_queries,seed");
    assert_eq!(rows.len(), 1 + 8);
    assert!(rows.iter().any(|r| r.starts_with("one_sided_after_index,64,") && r.contains(",1,300,")));
}

#[test]
fn other_commands_are_deterministic() {
    for args in [
        vec!["verify", "--n", "2", "--r", "0.3"],
        vec!["progress", "--n", "8", "--r", "0.4", "--steps", "5"],
        vec!["coin-toss", "--trials", "5000", "--seed", "3"],
    ] {
        let (a, b) = (nqlab(&args), nqlab(&args));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), Some(0), "{args:?}");
    }
}

#[test]
fn verify_exit_codes_and_fault_injection() {
    let ok = nqlab(&["verify", "--n", "2,4", "--r", "0.2,0.7"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout(&ok);
    assert!(text.lines().filter(|l| l.contains(" PASS ")).count() > 100);
    assert!(!text.contains(" FAIL "));

    let bad = nqlab(&["verify", "--n", "2", "--r", "0.3", "--inject-fault", "k1x-sign"]);
    assert_eq!(bad.status.code(), Some(1));
    let worst = stdout(&bad)
        .lines()
        .filter(|l| l.starts_with("table1-choi") && l.contains(" FAIL "))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "{worst}");
}

#[test]
fn zero_rate_endpoint_skips_table_one() {
    let o = nqlab(&["verify", "--n", "4", "--r", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("table1 ") && l.contains("SKIP")));
    assert!(!text.contains("table1-unitary"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["verify", "--n", "3"],
        vec!["verify", "--n", "64"],
        vec!["experiment", "--n", "2097152", "--trials", "1"],
        vec!["experiment", "--strategy", "no_such_thing"],
        vec!["progress", "--n", "8", "--r", "0"],
        vec!["progress", "--scenario", "sideways"],
        vec!["verify", "--bogus"],
        vec!["coin-toss", "--trials", "0"],
    ] {
        let o = nqlab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let r0 = nqlab(&["progress", "--n", "8", "--r", "0"]);
    assert!(String::from_utf8_lossy(&r0.stderr).contains("r > 0"));
}

#[test]
fn progress_traces() {
    let o = nqlab(&["progress", "--n", "16", "--j", "0", "--r", "0.25", "--steps", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1 + 41);
    let summary: Vec<&str> = text.lines().filter(|l| l.starts_with("# ") && !l.starts_with("# nqlab")).collect();
    assert_eq!(summary.len(), 3);
    assert!(summary.iter().all(|l| l.ends_with("PASS")));

    let o = nqlab(&["progress", "--n", "16", "--scenario", "negligent", "--r", "0.5", "--steps", "40"]);
    assert_eq!(o.status.code(), Some(0));
    for row in &csv_rows(&stdout(&o))[1..] {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        if cols[0] > 0.0 {
            assert_eq!(cols[7], 1.75);
            assert!(cols[6] <= 1.75);
        }
    }

    let o = nqlab(&["progress", "--n", "16", "--r", "0.25", "--steps", "0"]);
    let text = stdout(&o);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0,0.0000000000000000e0,"));
}

#[test]
fn coin_toss_benchmark() {
    let o = nqlab(&["experiment", "--strategy", "coin_toss", "--trials", "1000000", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = csv_rows(&text)[1];
    let mean: f64 = row.split(',').nth(8).unwrap().parse().unwrap();
    assert!((mean - 3.0).abs() < 0.01, "{mean}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.toml");
    std::fs::write(
        &cfg,
        "[common]\nseed = 11\n\n[experiment]\nstrategy = [\"one_sided_after_target\"]\nn = [64]\nr = [0.5]\ntrials = 50\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = nqlab(&["--config", c, "experiment"]);
    assert_eq!(from_file.status.code(), Some(0));
    let text = stdout(&from_file);
    assert!(text.contains("master_seed=11"));
    assert!(csv_rows(&text)[1].starts_with("one_sided_after_target,64,5.0000000000000000e-1,0,50,"));
    let overridden = nqlab(&["--config", c, "experiment", "--trials", "20"]);
    assert!(csv_rows(&stdout(&overridden))[1].contains(",0,20,"));

    std::fs::write(&cfg, "[experiment]\nwidth = 3\n").unwrap();
    assert_eq!(nqlab(&["--config", c, "experiment"]).status.code(), Some(2));
    assert!(!Path::new(&dir.path().join("missing.toml")).exists());
    assert_eq!(
        nqlab(&["--config", dir.path().join("missing.toml").to_str().unwrap(), "verify"]).status.code(),
        Some(2)
    );
}

#[test]
fn provenance_header_reads_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_nqlab"))
        .args(["coin-toss", "--trials", "10"])
        .env("NQLAB_GIT_REV", "abc123")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    let first = String::from_utf8(o.stdout).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first, format!("# nqlab {}, git-ish=abc123, master_seed=0, timestamp=1700000000", env!("CARGO_PKG_VERSION")));
}

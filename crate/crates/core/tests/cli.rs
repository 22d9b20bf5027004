use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tucker-recover"))
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn complete_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "dims = 8,8,8\nrank = 2,2,2\nrho = 0.6\ntrials = 2\nsolvers = smqrgd,rgd\n").unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["complete", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(out.join("complete.csv")).unwrap();
    assert!(csv.starts_with("# experiment=complete\n# spec_hash="));
    assert!(csv.contains("# prng=chacha20-sha256key-v1\n# seed=0\n"));
    assert!(csv.contains("\ntrial,solver,iter,"));
    let meta = fs::read_to_string(out.join("meta.txt")).unwrap();
    assert!(meta.contains("[spec]"));
}

#[test]
fn seed_override_changes_data_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.cfg");
    fs::write(&cfg, "dims = 8,8,8\nranks = 1\nrhos = 0.1,0.3\ntrials = 4\n").unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let status = bin()
            .args(["phase", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        out.join("phase.csv")
    };
    let a = run("11", "a");
    let b = run("11", "b");
    let c = run("12", "c");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(fs::read_to_string(&c).unwrap().contains("# seed=12"));
    assert_eq!(data_rows(&a)[0], "r,rho,successes,trials,mean_iters");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("unknown", "colour = blue\n"),
        ("grid", "dims = 8,8,8\nrhos = \n"),
        ("trials", "trials = 0\n"),
        ("kind", "kind = noise\n"),
    ] {
        let cfg = dir.path().join(name);
        fs::write(&cfg, text).unwrap();
        let out = bin().args(["phase", "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{name}");
    }
    let out = bin().args(["phase", "--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("d.cfg");
    fs::write(
        &cfg,
        "dims = 8,8,8\nrank = 2,2,2\nrho = 0.5\ntrials = 1\nsolvers = tiht-ciht\nstep = 50\nmax_iters = 40\n",
    )
    .unwrap();
    let out = bin()
        .args(["complete", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let csv = fs::read_to_string(dir.path().join("o/complete.csv")).unwrap();
    assert!(csv.lines().last().unwrap().contains(",tiht-ciht,"));
}

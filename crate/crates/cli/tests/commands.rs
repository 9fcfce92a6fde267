use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nematic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nematic"))
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

#[test]
fn no_arguments_prints_usage_and_fails() {
    let o = nematic(&[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_fails_with_usage() {
    let o = nematic(&["frobnicate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn coeffs_prints_the_set() {
    let o = nematic(&["coeffs", "--kappa", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for key in ["kappa", "d1", "d2", "mu", "d3", "diffusion_D"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(key)), "{text}");
    }
}

#[test]
fn coeffs_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.csv");
    let c = cache.to_str().unwrap();
    let first = nematic(&["coeffs", "--kappa", "2", "--cache", c]);
    assert!(first.status.success(), "{}", stderr(&first));
    let rows = fs::read_to_string(&cache).unwrap().lines().count();
    let second = nematic(&["coeffs", "--kappa", "2", "--cache", c]);
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(fs::read_to_string(&cache).unwrap().lines().count(), rows);
}

#[test]
fn coeffs_rejects_negative_kappa() {
    let o = nematic(&["coeffs", "--kappa", "-1"]);
    assert!(!o.status.success());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("GvmParams"), "{}", stderr(&o));
}

#[test]
fn gci_table_writes_full_precision_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.csv");
    let o = nematic(&["gci-table", "--kappa", "2", "--grid", "101", "--out", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&file).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,g"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mantissa = row[1].split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
    assert_eq!(text.lines().count(), 102);
    assert!(file.with_extension("manifest.cfg").exists());
}

#[test]
fn hyperbolicity_emits_ndjson() {
    let o = nematic(&["hyperbolicity", "--kappa", "0.5", "--grid", "21"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recs: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 22);
    assert!(recs[..21].iter().all(|r| r["record"] == "row"));
    assert_eq!(recs[21]["hyperbolic"], true);
}

fn rerun_matches(cmd: &str, config_body: &str, files: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, config_body).unwrap();
    let first = dir.path().join("first");
    let o = nematic(&[cmd, "--config", config.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let second = dir.path().join("second");
    let manifest = first.join("manifest.cfg");
    let o = nematic(&[cmd, "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in files.iter().chain(&["manifest.cfg"]) {
        assert_eq!(read(&first, f), read(&second, f), "{f} differs");
    }
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn particles_rerun_from_manifest() {
    rerun_matches(
        "particles",
        "particles.n = 50\nparticles.dt = 0.05\nrun.t_end = 0.5\nrun.stride = 5\nrun.seed = 3\n",
        &["trajectory.ndjson", "summary.csv"],
    );
}

#[test]
fn macro_rerun_from_manifest() {
    rerun_matches(
        "macro",
        "macro.cells = 40\nmacro.t_end = 0.2\nmacro.stride = 5\nmacro.k_nonlocal = 0.01\n\
         macro.lambda0 = 1\nmacro.lambda1 = 0.5\ninit.preset = bands\n",
        &["snapshots.csv", "conserved.csv"],
    );
}

#[test]
fn config_errors_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    fs::write(&config, "particles.n = 10\nparticles.bogus = 1\n").unwrap();
    let o = nematic(&["particles", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("particles.bogus"), "{err}");

    fs::write(&config, "particles.n = 10\nparticles.n = 11\n").unwrap();
    let o = nematic(&["particles", "--config", config.to_str().unwrap()]);
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("line 1"), "{err}");

    fs::write(&config, "particles.kappa = -1\n").unwrap();
    let o = nematic(&["particles", "--config", config.to_str().unwrap()]);
    assert!(stderr(&o).contains("GvmParams"), "{}", stderr(&o));
}

#[test]
fn validate_writes_report_and_exit_status_follows_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reversal");
    let o = nematic(&["validate", "--experiment", "reversal-phase", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    for f in ["report.csv", "summary.txt", "manifest.cfg"] {
        assert!(out.join(f).exists(), "{f}");
    }

    // too short to reach the fixed points
    let config = dir.path().join("short.cfg");
    fs::write(&config, "experiment.kind = reversal-phase\nreversal.t_end = 0.01\n").unwrap();
    let o = nematic(&[
        "validate",
        "--experiment",
        "reversal-phase",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("short").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn validate_rejects_unknown_experiment() {
    let o = nematic(&["validate", "--experiment", "nope"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("reversal-phase"));
}

#[test]
fn golden_tables_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = nematic(&["golden", "--kappas", "0.5,2", "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["coefficients.csv", "coefficient_cache.csv", "metadata.txt"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

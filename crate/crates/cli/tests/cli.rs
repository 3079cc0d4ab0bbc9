use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

const LANGEVIN: &str = r#"
kind = "langevin"
seed = 5
[grid]
lower = [-3.0]
upper = [3.0]
points = [61]
boundary = ["reflecting"]
[dynamics]
gamma = 1.0
diffusion = 0.25
[free_energy]
preset = "quadratic"
curvature = -1.0
[particles]
count = 2000
write = 3
[run]
dt = 0.01
n_steps = 100
record_every = 50
"#;

fn emergent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emergent")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn write_config(dir: &TempDir, text: &str) -> String {
    let path = dir.path().join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn missing_gamma_is_a_config_error_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &LANGEVIN.replace("gamma = 1.0\n", ""));
    let out = dir.path().join("out");
    let o = emergent(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("gamma"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &LANGEVIN.replace("diffusion = 0.25", "diffusion = 0.25\ndifusion = 0.5"));
    let o = emergent(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("difusion"), "{}", stderr(&o));
}

#[test]
fn subcommand_must_match_kind() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, LANGEVIN);
    let o = emergent(&["solve", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("langevin"), "{}", stderr(&o));
}

#[test]
fn missing_seed_needs_the_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &LANGEVIN.replace("seed = 5\n", ""));
    let out = dir.path().join("o");
    let o = emergent(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
    let o = emergent(&["simulate", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn reruns_are_byte_identical_and_the_manifest_hashes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, LANGEVIN);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let o = emergent(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files = read_dir(&a);
    assert_eq!(files, read_dir(&b));
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["density.txt", "manifest.txt", "report.txt", "trajectories.txt"]);

    let manifest = String::from_utf8(fs::read(a.join("manifest.txt")).unwrap()).unwrap();
    assert_eq!(manifest.lines().count(), 3);
    for line in manifest.lines() {
        let (hash, name) = line.split_once("  ").unwrap();
        assert_eq!(hash, hex::encode(Sha256::digest(fs::read(a.join(name)).unwrap())), "{name}");
    }

    let o = emergent(&["simulate", "--config", &cfg, "--seed", "6", "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(fs::read(a.join("density.txt")).unwrap(), fs::read(c.join("density.txt")).unwrap());
}

#[test]
fn report_echoes_resolved_constants() {
    let dir = TempDir::new().unwrap();
    let o = emergent(&["solve", "--config", scenario("schrodinger.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = String::from_utf8_lossy(&o.stdout);
    for key in ["gamma = 0.5", "diffusion = 0.25", "epsilon = 1", "mass = 1", "hbar = 1", "lambda = 2"] {
        assert!(report.contains(key), "{key} missing from\n{report}");
    }
    assert!(report.contains("hbar_source = from_mu"));
}

#[test]
fn numerical_failure_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(scenario("compare.toml")).unwrap();
    let madelung = text
        .replace("kind = \"compare\"\nt_end = 1.0\nsamples = 10", "kind = \"madelung\"")
        .replace("momentum = [0.5]", "momentum = [0.5]\n\n[run]\nt_end = 1.0\ndt = 0.5");
    let cfg = write_config(&dir, &madelung);
    let o = emergent(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("madelung"), "{}", stderr(&o));
}

#[test]
fn compare_scenario_passes() {
    let dir = TempDir::new().unwrap();
    let o = emergent(&["compare", "--config", scenario("compare.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let series = fs::read_to_string(dir.path().join("l2.txt")).unwrap();
    let last: f64 = series.lines().last().unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(last <= 1e-3, "{last}");
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 11);
}

#[test]
fn shipped_scenarios_load() {
    for entry in fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let s = emergent_cli::config::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let cmd = [
            emergent_cli::Command::Simulate,
            emergent_cli::Command::Solve,
            emergent_cli::Command::Thermo,
            emergent_cli::Command::Measure,
            emergent_cli::Command::Compare,
            emergent_cli::Command::Verify,
        ]
        .into_iter()
        .find(|c| c.kinds().contains(&s.kind()))
        .unwrap();
        emergent_cli::load_scenario(cmd, &path, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn fast_verify_passes() {
    let dir = TempDir::new().unwrap();
    let o = emergent(&["verify", "--tier", "fast", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("PASS ")).count(), emergent_cli::verify::DOCUMENTED_COUNT);
}

#[test]
fn drift_sign_flip_fails_the_stationary_check_by_name() {
    let dir = TempDir::new().unwrap();
    let o = emergent(&["verify", "--inject-drift-sign-flip", "--only", "microdynamics", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("FAIL microdynamics/stationary-density"), "{report}");
    assert!(report.contains("PASS microdynamics/reproducibility"), "{report}");
}

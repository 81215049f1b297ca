use std::process::Command;

use gradcomp::cli::{self, load_instance, save_instance, ExperimentConfig, ExperimentKind, Instance, CSV_HEADER};
use gradcomp::lqrenv::default_lqr;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradcomp"))
}

#[test]
fn meta_alone_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [ExperimentKind::Quad, ExperimentKind::Lqr] {
        let mut c = ExperimentConfig::defaults(kind).with_path(dir.path().join(format!("{kind}-first")));
        c.seed = 6;
        c.emit_svg = true;
        let first = cli::run_experiment(&c).unwrap();
        let meta = std::fs::read_to_string(&first.meta_path).unwrap();
        let again = ExperimentConfig::from_meta(&meta)
            .unwrap()
            .with_path(dir.path().join(format!("{kind}-second")));
        let second = cli::run_experiment(&again).unwrap();
        assert_eq!(
            std::fs::read(&first.csv_path).unwrap(),
            std::fs::read(&second.csv_path).unwrap()
        );
        assert_eq!(first.fingerprint, second.fingerprint);
        assert!(meta.contains(&format!("instance_sha256={}", first.fingerprint)));
        assert!(first.svg_path.unwrap().exists());
    }
}

#[test]
fn saved_lqr_instance_matches_regeneration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lqr.inst");
    save_instance(&path, &Instance::Lqr(default_lqr(9).unwrap()), Some(9)).unwrap();
    let (loaded, seed) = load_instance(&path).unwrap();
    let Instance::Lqr(loaded) = loaded else { panic!("wrong kind") };
    let regenerated = default_lqr(seed.unwrap()).unwrap();
    assert_eq!(loaded.k_hat_star, regenerated.k_hat_star);
}

#[test]
fn binary_writes_csv_and_honours_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = bin()
        .args(["quad", "--seed", "1", "--out"])
        .arg(&out)
        .env("GRADCOMP_SEED", "4")
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    let meta = std::fs::read_to_string(out.with_extension("meta")).unwrap();
    assert!(meta.lines().any(|l| l == "seed=4"));
}

#[test]
fn binary_rejects_bad_flags() {
    let bad_scheme = bin().args(["lqr", "--grad-scheme", "backward"]).output().unwrap();
    assert!(!bad_scheme.status.success());
    let bad_env = bin().args(["quad"]).env("GRADCOMP_SEED", "x").output().unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let run = bin()
        .args(["sweep", "--param", "gamma", "--values", "", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.trim_end(), cli::SWEEP_HEADER);
}

#[test]
fn sweep_over_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let run = bin()
        .args(["sweep", "--param", "gamma", "--values", "0.3,0.6,0.9", "--seed", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

//! End-to-end checks of the harness through the library and the binary.

use std::path::Path;
use std::process::Command;

use dephasing::config::ExperimentConfig;
use dephasing::presets::{preset, NAMES};
use dephasing::run::{count_rows, run, RunManifest, Status};
use dephasing::Error;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dephasing"))
}

fn small(name: &str, out: &Path) -> ExperimentConfig {
    let mut c = preset(name)
        .unwrap()
        .with_overrides(&["ensemble.count=64"])
        .unwrap();
    c.output_dir = Some(out.to_path_buf());
    c
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn field_of(e: Error) -> String {
    match e {
        Error::Config { field, .. } => field,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn manifest_lists_every_file_with_its_row_count() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["fig1a", "fig2b", "fig3a"] {
        let dir = tmp.path().join(name);
        let m = run(&small(name, &dir)).unwrap();
        assert_eq!(m, read_manifest(&dir));
        let mut on_disk: Vec<String> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|f| f.ends_with(".tsv"))
            .collect();
        on_disk.sort();
        let mut listed: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
        listed.sort();
        assert_eq!(on_disk, listed, "{name}");
        for f in &m.files {
            assert_eq!(
                count_rows(&dir.join(&f.path)).unwrap(),
                f.rows,
                "{name}/{}",
                f.path
            );
        }
        for extra in ["config.toml", "plot.gp"] {
            assert!(dir.join(extra).exists(), "{name}/{extra}");
        }
        let header = std::fs::read_to_string(dir.join(&m.files[0].path)).unwrap();
        assert!(header.contains(&m.config_hash));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(&small("fig3b", &tmp.path().join("a"))).unwrap();
    let b = run(&small("fig3b", &tmp.path().join("b"))).unwrap();
    assert_eq!(a.config_hash, b.config_hash);
    for f in &a.files {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(&f.path)).unwrap(),
            std::fs::read(tmp.path().join("b").join(&f.path)).unwrap(),
            "{}",
            f.path
        );
    }
}

#[test]
fn saved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = run(&small("fig2a", &tmp.path().join("a"))).unwrap();
    let mut again = ExperimentConfig::load(&tmp.path().join("a/config.toml")).unwrap();
    again.output_dir = Some(tmp.path().join("b"));
    let second = run(&again).unwrap();
    assert_eq!(first.config_hash, second.config_hash);
    assert_eq!(first.fits, second.fits);
}

#[test]
fn hash_ignores_workers_and_output_dir() {
    let a = preset("fig1a").unwrap();
    let mut b = a.clone();
    b.workers = Some(3);
    b.output_dir = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    let c = a.with_overrides(&["seed=2"]).unwrap();
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn invalid_configs_name_the_field() {
    let bad_k = preset("fig1a")
        .unwrap()
        .with_overrides(&["map.k=-1"])
        .unwrap();
    assert_eq!(field_of(bad_k.validate().unwrap_err()), "map.k");

    let unknown =
        "kind = \"variance-vs-time\"\nseed = 1\nbogus = 3\n[map]\nk = 1.0\nepsilon = 0.1\n";
    assert_eq!(
        field_of(ExperimentConfig::from_toml(unknown).unwrap_err()),
        "bogus"
    );

    let wrong_type =
        "kind = \"variance-vs-time\"\nseed = 1\nsteps = 10\n[map]\nk = \"strong\"\nepsilon = 0.1\n";
    assert_eq!(
        field_of(ExperimentConfig::from_toml(wrong_type).unwrap_err()),
        "map.k"
    );

    let mut no_steps = preset("fig1a").unwrap();
    no_steps.steps = None;
    assert_eq!(field_of(no_steps.validate().unwrap_err()), "steps");
}

#[test]
fn overrides_reach_nested_fields() {
    let c = preset("fgr-compare")
        .unwrap()
        .with_overrides(&[
            "map.epsilon=0.01",
            "compare.rate_window=[3.0, 40.0]",
            "quantum.n=512",
        ])
        .unwrap();
    assert_eq!(c.map.epsilon, 0.01);
    assert_eq!(c.compare.unwrap().rate_window, [3.0, 40.0]);
    assert_eq!(c.quantum.unwrap().n, 512);
    assert!(preset("fig1a")
        .unwrap()
        .with_overrides(&["no-equals-sign"])
        .is_err());
}

#[test]
fn binary_runs_a_preset_and_reports_status() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig1b");
    let status = bin()
        .args([
            "variance-vs-time",
            "--preset",
            "fig1b",
            "--workers",
            "2",
            "--override",
            "ensemble.count=64",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(Status::Success.exit_code()));
    let m = read_manifest(&out);
    assert_eq!(m.status, Status::Success);
    assert_eq!(m.files[0].rows, 1001);
}

#[test]
fn binary_rejects_a_mismatched_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["correlators", "--preset", "fig1a", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(Status::Failed.exit_code()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`kind`"));
}

#[test]
fn binary_reports_bad_overrides() {
    let out = bin()
        .args([
            "run",
            "--preset",
            "fig1a",
            "--override",
            "map.k=-3",
            "--out",
            "/nonexistent/never",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(Status::Failed.exit_code()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("map.k"));
}

#[test]
fn binary_lists_presets_and_prints_configs() {
    let out = bin().arg("presets").output().unwrap();
    let listed = String::from_utf8(out.stdout).unwrap();
    for name in NAMES {
        assert!(listed.lines().any(|l| l.trim() == name), "{name}");
    }
    let out = bin()
        .args(["show-config", "--preset", "fig2a", "--seed", "7"])
        .output()
        .unwrap();
    let cfg = ExperimentConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.time, Some(7));
}

#[test]
fn flagged_runs_exit_with_the_flag_code() {
    let tmp = tempfile::tempdir().unwrap();
    // an expectation no data can meet
    let mut c = small("fig1a", tmp.path());
    c.fits[0].expect = Some([5.0, 6.0]);
    let path = tmp.path().join("flagged.toml");
    std::fs::write(&path, c.to_toml().unwrap()).unwrap();
    let status = bin()
        .arg("run")
        .arg("--config")
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(Status::Flagged.exit_code()));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slicefind::dataset::load_scores;
use slicefind::method::{fit_method, Method, MethodsConfig};
use slicefind::Setting as SettingDir;

fn slicefind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slicefind"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_grid(dir: &Path) -> PathBuf {
    let cfg = dir.join("grid.json");
    fs::write(&cfg, r#"{"n": 600, "d": 8}"#).unwrap();
    cfg
}

fn synth(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let cfg = small_grid(dir);
    let res = slicefind(&[
        "synth",
        "--seed",
        "4",
        "--config",
        p(&cfg),
        "--out",
        p(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    out
}

#[test]
fn synth_writes_one_directory_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth(dir.path(), "a");
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let settings = manifest["settings"].as_array().unwrap();
    assert_eq!(settings.len(), 15);
    let dirs = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_dir())
        .count();
    assert_eq!(dirs, 15);
    for s in settings {
        assert!(out
            .join(s["path"].as_str().unwrap())
            .join("setting.json")
            .exists());
    }
}

#[test]
fn synth_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a");
    let b = synth(dir.path(), "b");
    for entry in fs::read_dir(&a).unwrap() {
        let entry = entry.unwrap().path();
        if !entry.is_dir() {
            continue;
        }
        let other = b.join(entry.file_name().unwrap());
        for file in [
            "setting.json",
            "valid.csv",
            "test.csv",
            "valid.emb",
            "test.emb",
        ] {
            assert_eq!(
                fs::read(entry.join(file)).unwrap(),
                fs::read(other.join(file)).unwrap(),
                "{file}"
            );
        }
    }
}

#[test]
fn eval_reports_every_pair_and_survives_missing_settings() {
    let dir = tempfile::tempdir().unwrap();
    let settings = synth(dir.path(), "settings");
    let manifest = settings.join("manifest.json");
    let out = dir.path().join("eval");
    let res = slicefind(&["eval", "--manifest", p(&manifest), "--out", p(&out)]);
    assert!(res.status.success());
    for f in ["report.json", "report.md", "timings.json", "config.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let rows = report["results"].as_array().unwrap();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r["error"].is_null()));

    let gone = "rare-a0.05-r002";
    fs::remove_dir_all(settings.join(gone)).unwrap();
    let out2 = dir.path().join("eval2");
    let res = slicefind(&[
        "eval",
        "--manifest",
        p(&manifest),
        "--out",
        p(&out2),
        "--method",
        "confusion",
    ]);
    assert!(res.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out2.join("report.json")).unwrap()).unwrap();
    let rows = report["results"].as_array().unwrap();
    assert_eq!(rows.len(), 15);
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| !r["error"].is_null())
        .map(|r| r["setting_id"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec![gone]);
}

#[test]
fn run_matches_a_direct_library_fit() {
    let dir = tempfile::tempdir().unwrap();
    let settings = synth(dir.path(), "settings");
    let setting = settings.join("rare-a0.08-r000");
    let out = dir.path().join("run");
    let res = slicefind(&[
        "run",
        "--setting",
        p(&setting),
        "--method",
        "domino",
        "--seed",
        "11",
        "--out",
        p(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(out.join("model.json").exists());
    let from_cli = load_scores::<f64>(out.join("scores.json")).unwrap();

    let s = SettingDir::load(&setting).unwrap();
    let fitted = fit_method(
        Method::Domino,
        &MethodsConfig::default().with_seed(11),
        &s.valid.0,
        &s.valid.1,
    )
    .unwrap();
    let direct = fitted.score(&s.test.0, &s.test.1).unwrap();
    assert_eq!(from_cli.values(), direct.values());
}

#[test]
fn usage_errors_exit_2_and_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let settings = synth(dir.path(), "settings");
    let out = dir.path().join("bad");
    let res = slicefind(&[
        "eval",
        "--manifest",
        p(&settings.join("manifest.json")),
        "--out",
        p(&out),
        "--method",
        "bogus",
    ]);
    assert_eq!(res.status.code(), Some(2));

    let cfg = dir.path().join("corr.json");
    fs::write(
        &cfg,
        r#"{"slice_types": ["correlation"], "alphas": [0.05]}"#,
    )
    .unwrap();
    let res = slicefind(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("correlation-a0.05-r000"));
    assert!(!out.exists());

    fs::write(&cfg, r#"{"n": 100, "unknown_key": 1}"#).unwrap();
    assert_eq!(
        slicefind(&["synth", "--config", p(&cfg), "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let res = slicefind(&[
        "run",
        "--setting",
        p(&missing),
        "--method",
        "domino",
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(res.status.code(), Some(1));
}

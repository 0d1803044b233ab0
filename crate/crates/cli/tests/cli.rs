use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn ergoprop(config: &Path, out: &Path, extra: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ergoprop"));
    cmd.arg("--config").arg(config).arg("--out").arg(out).args(extra);
    match seed {
        Some(s) => cmd.env(ergoprop_cli::SEED_ENV, s),
        None => cmd.env_remove(ergoprop_cli::SEED_ENV),
    };
    cmd.output().expect("binary runs")
}

fn edited(dir: &Path, base: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(bundled(base)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join("edited.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn verify_run_passes_and_lists_its_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = ergoprop(&bundled("verify_depolarizing.json"), &out, &["--threads", "2"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["experiment"], "verify");
    let names: Vec<&str> = m["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for expected in ["metric_sandwich", "metric_boundary", "cptp", "composition", "contraction_inequality", "pf_residual"] {
        assert!(names.contains(&expected), "missing {expected} in {names:?}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS metric_sandwich")));
    for file in ["seeds.csv", "verify.csv", "config.json"] {
        assert!(out.join(file).exists(), "{file} not written");
    }
}

#[test]
fn negative_rate_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "verify_depolarizing.json", |v| {
        v["model"]["generators"][0]["rates"][1] = (-0.5).into();
    });
    let o = ergoprop(&cfg, &dir.path().join("run"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model"), "{err}");
    assert!(err.contains("rate"), "{err}");
    assert!(!dir.path().join("run").join("manifest.json").exists());
}

#[test]
fn unknown_key_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "verify_depolarizing.json", |v| {
        v["verify"] = serde_json::json!({ "metric_pairs": 10, "metric_tolerance": 1e-9 });
    });
    let o = ergoprop(&cfg, &dir.path().join("run"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("verify"), "{err}");
    assert!(err.contains("metric_tolerance"), "{err}");
}

#[test]
fn unknown_experiment_flag_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ergoprop(&bundled("verify_depolarizing.json"), &dir.path().join("run"), &["--experiment", "nope"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled("rankone_markov.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(ergoprop(&cfg, &a, &["--threads", "1"], None).status.code(), Some(0));
    assert_eq!(ergoprop(&cfg, &b, &["--threads", "3"], None).status.code(), Some(0));
    let mut compared = 0;
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if Path::new(&name).extension().is_some_and(|x| x == "csv") {
            assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
            compared += 1;
        }
    }
    assert!(compared >= 4);
    assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);
}

#[test]
fn seed_variable_replaces_the_master_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled("verify_depolarizing.json");
    let (base, moved) = (dir.path().join("base"), dir.path().join("moved"));
    assert_eq!(ergoprop(&cfg, &base, &[], None).status.code(), Some(0));
    assert_eq!(ergoprop(&cfg, &moved, &[], Some("1000")).status.code(), Some(0));
    assert_eq!(manifest(&moved)["master_seed"], 1000);
    let seeds = std::fs::read_to_string(moved.join("seeds.csv")).unwrap();
    assert_eq!(seeds.lines().nth(1), Some("0,1000"));
    assert_ne!(
        std::fs::read(base.join("verify.csv")).unwrap(),
        std::fs::read(moved.join("verify.csv")).unwrap()
    );

    let o = ergoprop(&cfg, &dir.path().join("bad"), &[], Some("minus one"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(ergoprop_cli::SEED_ENV));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ergoprop(&dir.path().join("absent.json"), &dir.path().join("run"), &[], None);
    assert_eq!(o.status.code(), Some(2));
}

/// The shipped JSON Schema names exactly the fields the parser accepts.
#[test]
fn schema_matches_config_fields() {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/config.schema.json")).unwrap(),
    )
    .unwrap();
    let keys = |v: &Value| -> Vec<String> {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    let cfg = ergoprop_cli::RunConfig::load(&bundled("kappa_iid.json")).unwrap();
    let resolved = serde_json::to_value(&cfg).unwrap();
    let props = &schema["properties"];
    assert_eq!(keys(props), keys(&resolved));
    assert_eq!(props["schema_version"]["const"], ergoprop_cli::config::SCHEMA_VERSION);
    for section in ["verify", "kappa", "decay", "rankone", "mixing", "highprob", "seeds"] {
        assert_eq!(keys(&props[section]["properties"]), keys(&resolved[section]), "{section}");
        if section != "seeds" {
            for (field, value) in resolved[section].as_object().unwrap() {
                assert_eq!(&props[section]["properties"][field]["default"], value, "{section}.{field}");
            }
        }
    }
    let model_keys = keys(&props["model"]["properties"]);
    for k in keys(&resolved["model"]) {
        assert!(model_keys.contains(&k), "model.{k}");
    }
    let experiments: Vec<&str> = props["experiment"]["enum"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let names: Vec<&str> = ergoprop_cli::Experiment::ALL.iter().map(|e| e.name()).collect();
    assert_eq!(experiments, names);
}

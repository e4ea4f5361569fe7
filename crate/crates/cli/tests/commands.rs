use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const CONFIG: &str = r#"
name = "small"
scenario = "strategic-incomplete"
seed = 11

[distribution]
kind = "custom"
thetas = [1.0, 2.0, 4.0]
counts = [4, 5, 3]

[market]
n_sus = 12
fee_max = 60.0

[sweep]
param = "eps0"
values = [0.0, 2.0, 8.0]
"#;

fn cli(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tvws-pricing"));
    cmd.args(args).env_remove("TVWS_PRICING_OUT");
    if let Some(dir) = out_env {
        cmd.env("TVWS_PRICING_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, file: &str, text: &str) -> String {
    let path = dir.join(file);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.toml", CONFIG);
    let out = dir.path().join("out");
    let status = cli(&["run", &config, "--out", out.to_str().unwrap()], None);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let csv = fs::read_to_string(out.join("small.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("series,scenario,sweep_param,sweep_value,br,r,do_utility"));
    assert_eq!(lines.len(), 4);
    assert!(!csv.contains('\r'));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run-manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["files"], serde_json::json!(["small.csv"]));
    assert_eq!(manifest["config_sha256"], hex::encode(Sha256::digest(CONFIG.as_bytes())));

    let again = dir.path().join("again");
    assert!(cli(&["run", &config, "--out", again.to_str().unwrap()], None).status.success());
    assert_eq!(fs::read(out.join("small.csv")).unwrap(), fs::read(again.join("small.csv")).unwrap());
}

#[test]
fn output_directory_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.toml", CONFIG);
    let root = dir.path().join("results");
    assert!(cli(&["run", &config], Some(&root)).status.success());
    assert!(root.join("small").join("small.csv").is_file());
    assert!(cli(&["preset", "fig8_contract_items"], Some(&root)).status.success());
    let items = fs::read_to_string(root.join("fig8_contract_items").join("fig8_contract_items.csv")).unwrap();
    assert_eq!(items.lines().count(), 51);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "exp.toml", CONFIG);
    let ok = cli(&["validate", &good], None);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("ok"));

    let bad = write_config(dir.path(), "bad.toml", &CONFIG.replace("counts = [4, 5, 3]", "counts = [4, 5, 4]"));
    let rejected = cli(&["validate", &bad], None);
    assert_eq!(rejected.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&rejected.stderr).contains("counts"));

    assert_eq!(cli(&["preset", "nope"], None).status.code(), Some(1));
    assert_eq!(cli(&["validate", "/nonexistent/exp.toml"], None).status.code(), Some(1));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let unwritable = cli(&["run", &good, "--out", blocker.join("sub").to_str().unwrap()], None);
    assert_eq!(unwritable.status.code(), Some(2));
}

#[test]
fn list_presets_names_every_preset() {
    let out = cli(&["list-presets"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig4_hybrid", "fig5_br_vs_eps0", "fig6_strategy_utility", "fig7_information",
        "fig8_contract_items", "fig9_suboptimal", "fig10_convergence"] {
        assert!(text.contains(name), "{name}");
    }
}

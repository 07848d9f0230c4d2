use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn keyrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keyrate")).args(args).output().expect("binary runs")
}

fn shipped_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL_SWEEP: &str = r#"{
    "protocols": ["bb84", "six_state", "n_bb84", "sqz_hom", "gg02"],
    "sigma2": 0.005,
    "axes": [
        {"name": "distance_km", "min": 0.0, "max": 80.0, "count": 5},
        {"name": "n_th", "values": [0.0, 0.02]}
    ]
}"#;

#[test]
fn sweep_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", SMALL_SWEEP);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = keyrate(&["sweep", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = std::fs::read(&a).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, std::fs::read(&b).unwrap());

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["rows"], 10);
    assert_eq!(meta["kind"], "sweep");
    let meta_b: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("b.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_sha256"], meta_b["config_sha256"]);
}

#[test]
fn sweep_without_output_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", SMALL_SWEEP);
    let o = keyrate(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("eta,distance_km,n_th,sigma2,squeezing_db,k_lower,k_upper"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn rate_and_bounds_print_values() {
    let o = keyrate(&["rate", "--protocol", "bb84", "--eta", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("rate          = 2.5000000000000000e-1"), "{text}");

    let o = keyrate(&["rate", "--protocol", "6s", "--distance-km", "20", "--nth", "0.01", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["protocol"], "six_state");
    assert!(json["rate"].as_f64().unwrap() > 0.0);

    let o = keyrate(&["bounds", "--eta", "0.5"]);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "k_lower = 1.0000000000000000e0\nk_upper = 1.0000000000000000e0\n"
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"axes": [], "unknown_key": 1}"#);
    assert_eq!(keyrate(&["sweep", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(keyrate(&["sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(keyrate(&["rate", "--protocol", "nope", "--eta", "0.5"]).status.code(), Some(2));
    assert_eq!(keyrate(&["rate", "--protocol", "bb84", "--eta", "1.5"]).status.code(), Some(2));
    assert_eq!(keyrate(&["rate", "--protocol", "bb84"]).status.code(), Some(2));
    assert_eq!(keyrate(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn computation_errors_exit_with_three() {
    // eta = 0 with no thermal noise is a degenerate channel for DV protocols.
    assert_eq!(keyrate(&["rate", "--protocol", "bb84", "--eta", "0"]).status.code(), Some(3));
}

#[test]
fn oracle_check_honours_threshold() {
    let o = keyrate(&["oracle-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout).unwrap().contains("lambda"));
    assert_eq!(keyrate(&["oracle-check", "--max-dev", "0"]).status.code(), Some(4));
}

#[test]
fn comparison_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cmp.toml",
        "k0 = 1e-6\n[[axes]]\nname = \"sigma2\"\nvalues = [0.0, 0.01]\n[[axes]]\nname = \"n_th\"\nvalues = [0.0, 0.01]\n",
    );
    let out = dir.path().join("loss.csv");
    let o =
        keyrate(&["compare", "loss-frontier", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("sigma2,n_th,sqz_hom_d_max_km,six_state_d_max_km,l_tilde\n"));
    assert_eq!(text.lines().count(), 5);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("loss.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "loss-frontier");
}

#[test]
fn shipped_configs_parse() {
    for name in
        ["rates_vs_distance.toml", "squeezing_scan.toml", "noise_frontier.toml", "loss_frontier.toml", "rate_map.json"]
    {
        let cfg = keyrate::SweepConfig::from_path(&shipped_config(name));
        assert!(cfg.is_ok(), "{name}: {cfg:?}");
    }
}

use std::path::Path;
use std::process::{Command, Output};

fn ebl(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ebl")).arg("--config").arg(&cfg).args(extra).current_dir(dir).output().unwrap()
}

#[test]
fn empty_config_names_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = ebl(dir.path(), "", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));
}

#[test]
fn unknown_key_reports_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = ebl(dir.path(), "experiment = \"layer\"\n[sweep.grid]\nrefin = 8\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.grid.refin"));
    let out = ebl(dir.path(), "experiment = \"layer\"\n[sweep]\neps = [0.5, 2.0, 0.1]\n", &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn residual_sweep_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = ebl(dir.path(), "experiment = \"residual-sweep\"\n", &["--out", "run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("run/residual_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines.iter().filter(|l| l.starts_with("eps,")).count(), 5);
    let slope: f64 = lines[6].split(',').nth(3).unwrap().parse().unwrap();
    assert!((1.2..=1.8).contains(&slope), "{slope}");
    let manifest = std::fs::read_to_string(dir.path().join("run/manifest.tsv")).unwrap();
    assert!(manifest.lines().any(|l| l.starts_with("residual_sweep.csv\t")));
    assert!(manifest.contains("check:residual-sweep/slope-n0\t-\tPASS"));
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"ground-state\"\n";
    for name in ["a", "b"] {
        let out = ebl(dir.path(), cfg, &["--experiment", "assemble", "--quick", "--seed", "7", "--out", name]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(dir.path().join("a/manifest.tsv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/manifest.tsv")).unwrap();
    assert_eq!(a, b);
    for line in a.lines().filter(|l| !l.starts_with("check:")) {
        let name = line.split('\t').next().unwrap();
        assert_eq!(std::fs::read(dir.path().join("a").join(name)).unwrap(), std::fs::read(dir.path().join("b").join(name)).unwrap(), "{name}");
    }
    assert!(a.contains("ua.bin\t"));
    let resolved = std::fs::read_to_string(dir.path().join("a/config.resolved.toml")).unwrap();
    assert!(resolved.contains("experiment = \"assemble\"") && resolved.contains("seed = 7"));
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = ebl(dir.path(), "experiment = \"ground-state\"\n[ground_state]\nkind = \"accelerated\"\n", &["--out", "run"]);
    assert_eq!(out.status.code(), Some(1));
    let manifest = std::fs::read_to_string(dir.path().join("run/manifest.tsv")).unwrap();
    assert!(manifest.contains("check:ground-state/cond\t-\tFAIL measured=1e0 threshold=<= 1e-10"));
}

#[test]
fn compute_error_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // dx2 = eps / 4 cannot resolve the layer
    let out = ebl(dir.path(), "experiment = \"assemble\"\n[profiles]\nn1 = 16\nn2 = 4\nintervals = 48\n[sweep.grid]\nrefine = 4.0\n", &["--out", "run"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wkb_assembler"));
}

#[test]
fn resolved_config_parses_back() {
    use ebl_cli::config::ExperimentConfig;
    let cfg = ExperimentConfig::parse("experiment = \"all\"\nseed = 3\n[norms]\nlambdas = [1.0, 3.0]\n").unwrap();
    let text = toml::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
}

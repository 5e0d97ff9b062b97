use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn propchaos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_propchaos")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const COUNTEREXAMPLE: &str = r#"
seed = 5
t = 1
replicas = 200
n_ladder = [16, 64, 256]
[kernel]
kind = "counterexample"
[initial]
law = "bernoulli"
p = "1/n"
[reference]
kind = "atoms"
symbols = [0]
"#;

#[test]
fn counterexample_sweep_flags_non_chaos() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", COUNTEREXAMPLE);
    let out = dir.path().join("out");
    let o = propchaos(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("non-chaotic output detected"), "{}", stdout(&o));
    let json = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(json.contains("non-chaotic output detected"));
    assert!(fs::read_to_string(out.join("report.csv")).unwrap().starts_with("n,metric,value,se,replicas\n"));
}

#[test]
fn sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", COUNTEREXAMPLE);
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = propchaos(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("report.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
    let other = dir.path().join("c");
    let o = propchaos(&["sweep", "--config", &cfg, "--out", other.to_str().unwrap(), "--seed", "6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(other.join("report.json").exists() && !other.join("report.csv").exists());
}

#[test]
fn kac_sweep_concentrates_toward_pde_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "k.toml",
        r#"
seed = 2
t = 0.5
replicas = 40
n_ladder = [50, 200, 800]
[kernel]
kind = "kac"
[initial]
law = "gaussian"
[reference]
kind = "pde"
cells = 256
[output]
format = "json"
"#,
    );
    let out = dir.path().join("out");
    let o = propchaos(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let means: Vec<f64> = report["ladder"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["concentration"]["mean"].as_f64().unwrap())
        .collect();
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
    assert!(stdout(&o).contains("chaos consistent along the ladder"));
}

#[test]
fn invalid_config_lists_errors() {
    let dir = tempfile::tempdir().unwrap();
    let body = COUNTEREXAMPLE.replace("seed = 5", "foo = 1").replace("[16, 64, 256]", "[100, 50, 200]");
    let cfg = write_config(dir.path(), "bad.toml", &body);
    let o = propchaos(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("\"foo\"") && err.contains("seed") && err.contains("n_ladder not increasing"), "{err}");
}

#[test]
fn io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = propchaos(&["sweep", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let cfg = write_config(dir.path(), "c.toml", COUNTEREXAMPLE);
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let o = propchaos(&["sweep", "--config", &cfg, "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn cell_errors_exit_2_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let body = COUNTEREXAMPLE.replace("kind = \"counterexample\"", "kind = \"kac\"");
    let cfg = write_config(dir.path(), "c.toml", &body);
    let out = dir.path().join("out");
    let o = propchaos(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let json = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(json.contains("\"errors\": [\n        \"run:"), "{json}");
}

#[test]
fn simulate_limit_and_entropy_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        r#"
seed = 9
t = 1
replicas = 4
n_ladder = [10, 20, 40]
[kernel]
kind = "mckean-vlasov"
drift = "ou(1.0)"
diffusion = "constant(1.0)"
dt = 0.05
[initial]
law = "gaussian"
mean = 1.0
std = 0.5
[reference]
kind = "pde"
cells = 200
half_width = 6.0
[simulate]
n = 12
[entropy]
p = [0.5, 0.25, 0.25]
ladder = [4, 16, 64]
"#,
    );
    let out = dir.path().join("out");
    let o = propchaos(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("configuration.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.starts_with("index,v\n"));
    assert!(fs::read_to_string(out.join("configuration.json")).unwrap().contains("\"events\": 20"));

    let o = propchaos(&["limit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let grid = fs::read_to_string(out.join("reference_grid.csv")).unwrap();
    assert!(grid.starts_with("center,mass\n"));
    assert_eq!(grid.lines().count(), 201);
    assert!(out.join("reference.json").exists() && out.join("reference.csv").exists());

    let o = propchaos(&["entropy", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("gaps strictly decrease: true"), "{}", stdout(&o));
    assert!(fs::read_to_string(out.join("entropy.csv")).unwrap().starts_with("n,specific_entropy,target,gap\n"));
}

#[test]
fn entropy_needs_a_finite_alphabet() {
    let dir = tempfile::tempdir().unwrap();
    let body = COUNTEREXAMPLE.replace("kind = \"counterexample\"", "kind = \"kac\"").replace("law = \"bernoulli\"\np = \"1/n\"", "law = \"gaussian\"");
    let cfg = write_config(dir.path(), "c.toml", &body);
    let o = propchaos(&["entropy", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

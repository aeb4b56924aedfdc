use std::path::Path;
use std::process::{Command, Output};

fn decaylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decaylab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(out: &str, key: &str) -> f64 {
    let line = out
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in {out}"));
    line.split_once(" = ").unwrap().1.trim_matches('"').parse().unwrap()
}

const SMALL: &str = r#"
system = "temam"
eps = 1.0
dt = 0.05
t_final = 6.0
n = 16
box_length = 50.26548245743669
data_kind = "power_law"
data_q = 1.0
amplitude = 20.0
cutoff = 0.6
divergence_free = true
seed = 4
fit_window = [1.0, 6.0]
"#;

fn write_config(dir: &Path, name: &str, extra: &str) -> std::path::PathBuf {
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, format!("name = \"{name}\"\n{SMALL}{extra}")).unwrap();
    path
}

#[test]
fn predict_prints_the_exponent() {
    let o = decaylab(&["predict", "--system", "lelievre", "--rstar", "0.5", "--delta", "0.1"]);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "predicted_exponent"), 1.4);
    let o = decaylab(&["predict", "--system", "temam", "--rstar", "inf"]);
    assert_eq!(value(&stdout(&o), "predicted_exponent"), 2.5);
}

#[test]
fn out_of_range_input_exits_with_2() {
    let o = decaylab(&["predict", "--system", "temam", "--rstar", "-1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = decaylab(&["predict", "--system", "euler", "--rstar", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = decaylab(&["bootstrap", "--rstar", "0", "--delta", "0.7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bootstrap_prints_the_history() {
    let o = decaylab(&["bootstrap", "--rstar", "0", "--delta", "0.05"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("history = [0, 0.5, 1, 1.45]"), "{out}");
}

#[test]
fn linear_decay_matches_the_sharp_rate() {
    let o = decaylab(&[
        "linear-decay",
        "--profile",
        "q=1",
        "--theta",
        "0.5",
        "--eps",
        "0.5",
        "--tmin",
        "100",
        "--tmax",
        "10000",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!((value(&out, "fitted_exponent") - 2.5).abs() < 0.05, "{out}");
    let o = decaylab(&[
        "linear-decay",
        "--profile",
        "q=1,annulus=1:2",
        "--tmin",
        "1",
        "--tmax",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_fit_and_decay_character_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "one", "");
    let o = decaylab(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    let fitted = value(&report, "fitted_exponent");

    let trace = dir.path().join("one.trace.csv");
    assert!(dir.path().join("one.report.toml").exists());
    let o = decaylab(&["fit", "--trace", trace.to_str().unwrap(), "--window", "1:6"]);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "exponent"), fitted);

    let o = decaylab(&["fit", "--trace", trace.to_str().unwrap(), "--window", "6:1"]);
    assert_eq!(o.status.code(), Some(2));

    // the estimate needs a finer lattice than the run above
    let big = dir.path().join("big.toml");
    let text = std::fs::read_to_string(&config).unwrap();
    std::fs::write(
        &big,
        text.replace("n = 16", "n = 64")
            .replace("50.26548245743669", "201.06192982974676"),
    )
    .unwrap();
    let o = decaylab(&["decay-character", "--input", big.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = value(&stdout(&o), "decay_character");
    assert!((r - 1.0).abs() < 0.1, "{r}");
}

#[test]
fn sweep_runs_every_config_and_reports_the_worst_code() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "a", "");
    write_config(dir.path(), "b", "alpha = 1.0\n");
    std::fs::write(
        dir.path().join("b.toml"),
        std::fs::read_to_string(dir.path().join("b.toml"))
            .unwrap()
            .replace("\"temam\"", "\"lelievre\""),
    )
    .unwrap();
    let o = decaylab(&["sweep", "--dir", dir.path().to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "configs"), 2.0);
    assert!(dir.path().join("a.report.toml").exists());
    assert!(dir.path().join("b.report.toml").exists());

    // a sweep over its own outputs skips the reports; a runaway config gives 3
    write_config(dir.path(), "c", "");
    let text = std::fs::read_to_string(dir.path().join("c.toml")).unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        text.replace("amplitude = 20.0", "amplitude = 40000.0")
            .replace("dt = 0.05", "dt = 0.5"),
    )
    .unwrap();
    let o = decaylab(&["sweep", "--dir", dir.path().to_str().unwrap(), "--workers", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(value(&stdout(&o), "configs"), 3.0);
}

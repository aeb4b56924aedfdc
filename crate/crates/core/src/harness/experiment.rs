use std::path::{Path, PathBuf};

use crate::decay::{default_window, estimate_decay_character, synthesize};
use crate::dynamics::{EnergyTrace, Integrator};
use crate::fit::fit_power_law;
use crate::io::write_trace_csv;
use crate::{Error, Result};

use super::config::ExperimentConfig;
use super::predict::predicted_exponent;
use super::report::{classify, late_exponent, Report, Verdict};

/// Result of one experiment: the report is always filled in; `error` holds
/// the failure that stopped it, if any.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub trace: Option<EnergyTrace<f64>>,
    pub error: Option<Error>,
}

impl Outcome {
    /// Process exit code: 0, 2 for invalid input, 3 for a numerical abort.
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, Error::exit_code)
    }
}

fn blank_report(config: &ExperimentConfig) -> Report {
    Report {
        name: config.name.clone(),
        system: config.system.clone(),
        eps: config.eps,
        alpha: config.alpha,
        delta: config.delta,
        guaranteed_dissipation: config.params().map(|p| p.guaranteed_dissipation()).unwrap_or(false),
        r_star_target: f64::NAN,
        r_star_measured: f64::NAN,
        fitted_exponent: f64::NAN,
        predicted_exponent: f64::NAN,
        window: config.fit_window,
        r_squared: f64::NAN,
        late_exponent: f64::NAN,
        energy_final: f64::NAN,
        status: "ok".into(),
        stage: "config".into(),
        verdict: Verdict::Failed,
        message: String::new(),
    }
}

/// Synthesis, run, fit and prediction for one config. Deterministic for a
/// given config.
pub fn run_experiment(config: &ExperimentConfig) -> Outcome {
    let mut report = blank_report(config);
    let mut trace = None;
    let error = stages(config, &mut report, &mut trace).err();
    if let Some(e) = &error {
        report.status = "error".into();
        report.verdict = Verdict::Failed;
        report.message = e.to_string();
    }
    Outcome { report, trace, error }
}

fn stages(config: &ExperimentConfig, report: &mut Report, trace_out: &mut Option<EnergyTrace<f64>>) -> Result<()> {
    config.validate()?;
    let grid = config.grid()?;
    let params = config.params()?;
    let spec = config.data_spec()?;
    let system = config.system()?;

    report.stage = "synthesis".into();
    report.r_star_target = spec.target().as_f64();
    let u0 = synthesize(&spec, &grid)?;

    report.stage = "estimate".into();
    let window = config
        .estimate_window
        .map(|[a, b]| (a, b))
        .unwrap_or_else(|| default_window(&grid));
    let mut notes = Vec::new();
    match estimate_decay_character(&u0, 0.0, window) {
        Ok(est) => report.r_star_measured = est.character.as_f64(),
        Err(Error::Inconclusive(msg)) => notes.push(format!("decay character inconclusive: {msg}")),
        Err(e) => return Err(e),
    }

    report.stage = "run".into();
    let mut integ = Integrator::new(grid, params)?;
    let trace = integ.run(&u0)?;
    report.energy_final = trace.energy_final().unwrap_or(f64::NAN);
    *trace_out = Some(trace.clone());

    report.stage = "fit".into();
    let fit_window = config.fit_window();
    let fit = fit_power_law(&trace.times, &trace.l2_sq, fit_window)?;
    report.fitted_exponent = fit.exponent;
    report.r_squared = fit.r_squared;
    let late = late_exponent(&trace.times, &trace.l2_sq, fit_window);
    report.late_exponent = late.unwrap_or(f64::NAN);

    report.stage = "predict".into();
    let r_star = if report.r_star_measured.is_nan() {
        report.r_star_target
    } else {
        report.r_star_measured
    };
    report.predicted_exponent = predicted_exponent(system, r_star, config.delta)?;
    report.verdict = classify(&fit, late, report.predicted_exponent);
    if report.verdict == Verdict::NonAlgebraic {
        notes.push("no single power law fits the window; decay looks faster than algebraic".into());
    }
    if !params.guaranteed_dissipation() {
        notes.push("alpha <= eps/4: energy decrease is not guaranteed".into());
    }
    report.stage = "done".into();
    report.message = notes.join("; ");
    Ok(())
}

/// Writes the report and (when present) the trace next to the config.
pub fn write_outputs(config: &ExperimentConfig, outcome: &Outcome) -> Result<()> {
    if let Some(trace) = &outcome.trace {
        write_trace_csv(config.trace_path(), trace)?;
    }
    outcome.report.write(&config.report_path())
}

/// The `*.toml` files directly inside `dir`, sorted, skipping reports.
pub fn collect_configs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if path.is_file() && name.ends_with(".toml") && !name.ends_with(".report.toml") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

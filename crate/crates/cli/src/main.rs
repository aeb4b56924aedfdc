use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use decaylab::decay::{default_window, estimate_decay_character, synthesize, DecayCharacter};
use decaylab::dynamics::System;
use decaylab::fit::{fit_power_law, log_spaced};
use decaylab::harness::{
    bootstrap_sequence, collect_configs, predicted_exponent, run_experiment, write_outputs, ExperimentConfig,
    DEFAULT_DELTA,
};
use decaylab::io::{read_field_csv, read_trace_csv};
use decaylab::radial::{fit_linear_exponent, ProfileShape, RadialProfile};
use decaylab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "decaylab",
    version,
    about = "Energy decay experiments for compressible Navier-Stokes approximations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predicted decay exponent of the energy for a system and decay character.
    Predict {
        #[arg(long)]
        system: String,
        /// Decay character; `inf` is accepted.
        #[arg(long, allow_hyphen_values = true)]
        rstar: f64,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Chain of exponent improvements for the Lelièvre system.
    Bootstrap {
        #[arg(long, allow_hyphen_values = true)]
        rstar: f64,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Estimate the decay character of a field (CSV) or of a config's initial data (TOML).
    DecayCharacter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        /// Radial band `LO:HI` for the shell fit.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
    /// Fit the decay exponent of the exact linear solution for a radial profile.
    LinearDecay(LinearDecayArgs),
    /// Run one experiment and write its trace and report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit a power law to a trace CSV.
    Fit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_parser = parse_window)]
        window: (f64, f64),
    },
    /// Run every config in a directory.
    Sweep {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Args)]
struct LinearDecayArgs {
    /// Comma separated: `q=Q[,cutoff=K|,width=W][,amplitude=A]` or `annulus=A:B`.
    #[arg(long)]
    profile: String,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long)]
    tmin: f64,
    #[arg(long)]
    tmax: f64,
    #[arg(long, default_value_t = 41)]
    points: usize,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let lo = a
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("bad lower bound `{a}`: {e}"))?;
    let hi = b
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("bad upper bound `{b}`: {e}"))?;
    Ok((lo, hi))
}

fn parse_profile(spec: &str) -> Result<RadialProfile<f64>> {
    let bad = |msg: String| Error::InvalidInput(format!("profile `{spec}`: {msg}"));
    let mut q = None;
    let mut cutoff = None;
    let mut width = None;
    let mut annulus = None;
    let mut amplitude = 1.0;
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| bad(format!("`{v}`: {e}")));
        match key.trim() {
            "q" => q = Some(num(value)?),
            "cutoff" => cutoff = Some(num(value)?),
            "width" => width = Some(num(value)?),
            "amplitude" => amplitude = num(value)?,
            "annulus" => {
                let (a, b) = value
                    .split_once(':')
                    .ok_or_else(|| bad("annulus needs INNER:OUTER".into()))?;
                annulus = Some((num(a)?, num(b)?));
            }
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    let shape = match (q, annulus) {
        (Some(_), Some(_)) => return Err(bad("give either q or annulus, not both".into())),
        (None, Some((inner, outer))) => ProfileShape::Annulus { inner, outer },
        (Some(q), None) => match (cutoff, width) {
            (Some(_), Some(_)) => return Err(bad("give either cutoff or width, not both".into())),
            (_, Some(width)) => ProfileShape::GaussianPowerLaw { q, width },
            (c, None) => ProfileShape::PowerLaw {
                q,
                cutoff: c.unwrap_or(1.0),
            },
        },
        (None, None) => return Err(bad("missing q or annulus".into())),
    };
    RadialProfile::new(shape)?.with_amplitude(amplitude)
}

fn character_str(c: &DecayCharacter<f64>) -> String {
    match c {
        DecayCharacter::Finite(r) => format!("{r}"),
        DecayCharacter::Infinity => "inf".into(),
        DecayCharacter::NegLimit => "-1.5".into(),
    }
}

fn predict(system: &str, rstar: f64, delta: f64) -> Result<()> {
    let system: System = system.parse()?;
    let p = predicted_exponent(system, rstar, delta)?;
    println!("system = \"{system}\"");
    println!("r_star = {rstar}");
    println!("delta = {delta}");
    println!("predicted_exponent = {p}");
    Ok(())
}

fn bootstrap(rstar: f64, delta: f64) -> Result<()> {
    let state = bootstrap_sequence(rstar, delta)?;
    let history: Vec<String> = state.history.iter().map(|b| b.to_string()).collect();
    println!("r_star = {rstar}");
    println!("delta = {delta}");
    println!("history = [{}]", history.join(", "));
    println!("beta = {}", state.beta);
    Ok(())
}

fn decay_character(input: &Path, s: f64, window: Option<(f64, f64)>) -> Result<()> {
    let field = if input.extension().is_some_and(|e| e == "toml") {
        let config = ExperimentConfig::from_path(input)?;
        config.validate()?;
        synthesize(&config.data_spec()?, &config.grid()?)?
    } else {
        read_field_csv(input)?
    };
    let window = window.unwrap_or_else(|| default_window(field.grid()));
    let est = estimate_decay_character(&field, s, window)?;
    println!("decay_character = \"{}\"", character_str(&est.character));
    println!("s = {s}");
    println!("slope = {}", est.slope);
    println!("window = [{}, {}]", est.fit_window.0, est.fit_window.1);
    println!("residual = {}", est.residual);
    Ok(())
}

fn linear_decay(args: &LinearDecayArgs) -> Result<()> {
    if args.points < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    let profile = parse_profile(&args.profile)?
        .with_theta(args.theta)?
        .with_eps(args.eps)?;
    let grid = log_spaced(args.tmin, args.tmax, args.points);
    let fit = fit_linear_exponent(&profile, &grid)?;
    let expected = profile.decay_character().map_or(f64::INFINITY, |q| 1.5 + q);
    println!("fitted_exponent = {}", fit.exponent);
    println!("r_squared = {}", fit.r_squared);
    println!("expected_exponent = {expected}");
    Ok(())
}

fn simulate(path: &Path) -> Result<i32> {
    let config = ExperimentConfig::from_path(path)?;
    let outcome = run_experiment(&config);
    write_outputs(&config, &outcome)?;
    print!("{}", outcome.report.to_toml_string());
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    Ok(outcome.exit_code())
}

fn fit(trace: &Path, window: (f64, f64)) -> Result<()> {
    let trace = read_trace_csv(trace)?;
    let fit = fit_power_law(&trace.times, &trace.l2_sq, window)?;
    println!("exponent = {}", fit.exponent);
    println!("prefactor = {}", fit.log_prefactor.exp());
    println!("r_squared = {}", fit.r_squared);
    println!("samples = {}", fit.samples);
    Ok(())
}

/// Worst exit code over all configs: 3 beats 2 beats 0.
fn sweep(dir: &Path, workers: usize) -> Result<i32> {
    if workers == 0 {
        return Err(Error::InvalidInput("workers must be at least 1".into()));
    }
    let configs = collect_configs(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let results: Vec<(PathBuf, Result<(String, i32)>)> = pool.install(|| {
        configs
            .par_iter()
            .map(|path| {
                let run = || -> Result<(String, i32)> {
                    let config = ExperimentConfig::from_path(path)?;
                    let outcome = run_experiment(&config);
                    write_outputs(&config, &outcome)?;
                    let r = &outcome.report;
                    let line = format!(
                        "{} system={} fitted={:.4} predicted={:.4} verdict={}",
                        r.name, r.system, r.fitted_exponent, r.predicted_exponent, r.verdict
                    );
                    Ok((line, outcome.exit_code()))
                };
                (path.clone(), run())
            })
            .collect()
    });
    let mut code = 0;
    for (path, result) in results {
        match result {
            Ok((line, c)) => {
                println!("{line}");
                code = code.max(c);
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = code.max(e.exit_code());
            }
        }
    }
    println!("configs = {}", configs.len());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Predict { system, rstar, delta } => predict(system, *rstar, *delta).map(|_| 0),
        Command::Bootstrap { rstar, delta } => bootstrap(*rstar, *delta).map(|_| 0),
        Command::DecayCharacter { input, s, window } => decay_character(input, *s, *window).map(|_| 0),
        Command::LinearDecay(args) => linear_decay(args).map(|_| 0),
        Command::Simulate { config } => simulate(config),
        Command::Fit { trace, window } => fit(trace, *window).map(|_| 0),
        Command::Sweep { dir, workers } => sweep(dir, *workers),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

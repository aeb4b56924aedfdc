use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decay::{DataKind, InitialDataSpec};
use crate::dynamics::{System, SystemParams};
use crate::spectral::GridSpec;
use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.05;

fn default_record_every() -> usize {
    1
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

/// One experiment, read from a flat TOML file.
///
/// ```toml
/// name = "lelievre_q05"
/// system = "lelievre"        # temam | lelievre | linear
/// eps = 1.0
/// alpha = 1.0
/// dt = 0.05
/// t_final = 100.0
/// record_every = 10
/// n = 64
/// box_length = 201.06192982974676
/// data_kind = "power_law"    # power_law | indicator_ball | annulus | lp_model
/// data_q = 0.5
/// cutoff = 0.6
/// seed = 7
/// fit_window = [10.0, 100.0]
/// ```
///
/// Relative output paths are resolved against the config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: String,
    pub eps: f64,
    #[serde(default)]
    pub alpha: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    pub n: usize,
    pub box_length: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    pub data_kind: String,
    #[serde(default)]
    pub data_q: Option<f64>,
    #[serde(default)]
    pub data_inner: Option<f64>,
    #[serde(default)]
    pub data_outer: Option<f64>,
    #[serde(default)]
    pub data_p: Option<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    pub cutoff: f64,
    #[serde(default)]
    pub divergence_free: bool,
    #[serde(default)]
    pub keep_mean: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub fit_window: [f64; 2],
    /// Radii window for the decay-character estimate; defaults to
    /// `[4 k_min, min(40 k_min, 0.9 cutoff)]`.
    #[serde(default)]
    pub estimate_window: Option<[f64; 2]>,
    #[serde(default)]
    pub trace_csv: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn system(&self) -> Result<System> {
        self.system.parse()
    }

    pub fn grid(&self) -> Result<GridSpec<f64>> {
        GridSpec::with_dealias(self.n, self.box_length, self.dealias_fraction)
    }

    pub fn params(&self) -> Result<SystemParams<f64>> {
        SystemParams::new(self.system()?, self.eps, self.alpha, self.dt, self.t_final)?
            .with_record_every(self.record_every)
    }

    pub fn data_spec(&self) -> Result<InitialDataSpec<f64>> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::invalid(format!("data_kind '{}' needs {key}", self.data_kind)))
        };
        let kind = match self.data_kind.as_str() {
            "power_law" => DataKind::PowerLaw {
                q: need(self.data_q, "data_q")?,
            },
            "indicator_ball" => DataKind::IndicatorBall,
            "annulus" => DataKind::Annulus {
                inner: need(self.data_inner, "data_inner")?,
                outer: need(self.data_outer, "data_outer")?,
            },
            "lp_model" => DataKind::LpModel {
                p: need(self.data_p, "data_p")?,
            },
            other => return Err(Error::invalid(format!("unknown data_kind '{other}'"))),
        };
        Ok(InitialDataSpec {
            kind,
            amplitude: self.amplitude,
            cutoff: self.cutoff,
            seed: self.seed,
            divergence_free: self.divergence_free,
            keep_mean: self.keep_mean,
        })
    }

    pub fn fit_window(&self) -> (f64, f64) {
        (self.fit_window[0], self.fit_window[1])
    }

    /// Checks that every piece is valid on its own and that the pieces fit
    /// together: the fit window lies inside the run and inside the torus
    /// validity horizon `0.1 / k_min²`, and the data fits the grid.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::invalid("name must be a non-empty file stem"));
        }
        let grid = self.grid()?;
        let params = self.params()?;
        let spec = self.data_spec()?;
        spec.validate(&grid)?;
        let (lo, hi) = self.fit_window();
        if !(lo >= 1.0 && hi > lo) {
            return Err(Error::invalid(format!(
                "fit_window must satisfy 1 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        if hi > params.t_final * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "fit_window ends at {hi}, after t_final = {}",
                params.t_final
            )));
        }
        let horizon = 0.1 / (grid.k_min() * grid.k_min());
        if hi > horizon * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "fit_window ends at {hi}, beyond the torus validity horizon 0.1/k_min² = {horizon}"
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1/2], got {}",
                self.delta
            )));
        }
        if let Some([a, b]) = self.estimate_window {
            if !(b > a && a > 0.0) {
                return Err(Error::invalid("estimate_window must be an increasing pair of radii"));
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn trace_path(&self) -> PathBuf {
        let p = self
            .trace_csv
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.trace.csv", self.name)));
        self.resolve(&p)
    }

    pub fn report_path(&self) -> PathBuf {
        let p = self
            .report
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.report.toml", self.name)));
        self.resolve(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"
system = "lelievre"
eps = 1.0
alpha = 1.0
dt = 0.1
t_final = 50.0
n = 64
box_length = 201.06192982974676
data_kind = "power_law"
data_q = 0.5
cutoff = 0.4
fit_window = [5.0, 50.0]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.delta, DEFAULT_DELTA);
        assert_eq!(c.record_every, 1);
        assert_eq!(c.system().unwrap(), System::Lelievre);
        assert!(!c.divergence_free);
        c.validate().unwrap();
        assert_eq!(c.report_path(), PathBuf::from("demo.report.toml"));
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let mut bad = c.clone();
        bad.fit_window = [5.0, 60.0];
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.t_final = 200.0;
        bad.fit_window = [5.0, 200.0];
        // k_min = 1/32, so the horizon is 102.4
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.cutoff = 5.0;
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.data_kind = "annulus".into();
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("{SAMPLE}\nbogus = 1\n")).is_err());
    }
}

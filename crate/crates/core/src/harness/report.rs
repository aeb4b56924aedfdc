use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fit::{fit_power_law, DecayFit, MIN_FIT_SAMPLES};
use crate::io::write_atomic;
use crate::{Error, Result};

/// Slack between fitted and predicted exponents before a verdict changes.
pub const REPORT_TOLERANCE: f64 = 0.1;
/// Fits below this r² are not treated as power laws.
const MIN_R_SQUARED: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Fitted exponent within tolerance of the predicted bound.
    Consistent,
    /// Decay clearly faster than the bound requires.
    SharperThanBound,
    /// Decay clearly slower than the bound allows.
    Inconsistent,
    /// No single power law fits (e.g. super-algebraic decay).
    NonAlgebraic,
    /// The run did not reach the comparison.
    Failed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::SharperThanBound => "sharper-than-bound",
            Verdict::Inconsistent => "inconsistent",
            Verdict::NonAlgebraic => "non-algebraic",
            Verdict::Failed => "failed",
        })
    }
}

/// One experiment's outcome. Values that could not be computed are NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub system: String,
    pub eps: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Whether the energy is guaranteed to be nonincreasing for these
    /// parameters (`false` flags a Lelièvre run with `α ≤ ε/4`).
    pub guaranteed_dissipation: bool,
    pub r_star_target: f64,
    pub r_star_measured: f64,
    pub fitted_exponent: f64,
    pub predicted_exponent: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub late_exponent: f64,
    pub energy_final: f64,
    /// `ok` or `error`.
    pub status: String,
    /// Last stage reached: config, synthesis, estimate, run, fit, predict, done.
    pub stage: String,
    pub verdict: Verdict,
    pub message: String,
}

impl Report {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: "<report>".into(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_toml_string().as_bytes())
    }
}

/// Exponent over the upper half (in `ln(1+t)`) of the window, if it holds
/// enough samples.
pub(crate) fn late_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Option<f64> {
    let (lo, hi) = window;
    let mid = (((1.0 + lo).ln() + (1.0 + hi).ln()) / 2.0).exp() - 1.0;
    let count = times.iter().filter(|t| **t >= mid && **t <= hi).count();
    if count < MIN_FIT_SAMPLES || mid < 1.0 {
        return None;
    }
    fit_power_law(times, values, (mid, hi)).ok().map(|f| f.exponent)
}

/// Compares a fit against the predicted upper-bound exponent.
///
/// A fit is non-algebraic when its r² is below 0.99 or when the exponent
/// over the late half of the window exceeds the full-window exponent by
/// more than half. Otherwise the fit is consistent within
/// [`REPORT_TOLERANCE`], sharper than the bound above it, and inconsistent
/// below it.
pub fn classify(fit: &DecayFit<f64>, late: Option<f64>, predicted: f64) -> Verdict {
    if !(fit.r_squared >= MIN_R_SQUARED) {
        return Verdict::NonAlgebraic;
    }
    if let Some(late) = late {
        if late > 1.5 * fit.exponent.max(0.0) + 0.25 {
            return Verdict::NonAlgebraic;
        }
    }
    if fit.exponent < predicted - REPORT_TOLERANCE {
        Verdict::Inconsistent
    } else if fit.exponent > predicted + REPORT_TOLERANCE {
        Verdict::SharperThanBound
    } else {
        Verdict::Consistent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::log_spaced;

    fn fit_of(f: impl Fn(f64) -> f64) -> (DecayFit<f64>, Option<f64>) {
        let t = log_spaced(1.0, 100.0, 60);
        let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        (
            fit_power_law(&t, &y, (1.0, 100.0)).unwrap(),
            late_exponent(&t, &y, (1.0, 100.0)),
        )
    }

    #[test]
    fn verdicts() {
        let (f, late) = fit_of(|t| (1.0 + t).powf(-1.5));
        assert_eq!(classify(&f, late, 1.5), Verdict::Consistent);
        assert_eq!(classify(&f, late, 1.0), Verdict::SharperThanBound);
        assert_eq!(classify(&f, late, 2.0), Verdict::Inconsistent);
        let (f, late) = fit_of(|t| (-t / 10.0).exp());
        assert_eq!(classify(&f, late, 1.5), Verdict::NonAlgebraic);
    }

    #[test]
    fn report_round_trips_with_nan_and_infinity() {
        let r = Report {
            name: "x".into(),
            system: "linear".into(),
            eps: 1.0,
            alpha: 0.0,
            delta: 0.05,
            guaranteed_dissipation: true,
            r_star_target: f64::INFINITY,
            r_star_measured: f64::INFINITY,
            fitted_exponent: 3.0,
            predicted_exponent: f64::INFINITY,
            window: [1.0, 10.0],
            r_squared: 0.5,
            late_exponent: f64::NAN,
            energy_final: 1e-3,
            status: "ok".into(),
            stage: "done".into(),
            verdict: Verdict::NonAlgebraic,
            message: String::new(),
        };
        let text = r.to_toml_string();
        assert!(text.contains("verdict = \"non-algebraic\""));
        let back = Report::from_toml_str(&text).unwrap();
        assert!(back.late_exponent.is_nan());
        assert_eq!(back.r_star_target, f64::INFINITY);
        assert_eq!(back.to_toml_string(), text);
    }
}

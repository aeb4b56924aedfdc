//! Power-law fits `y(t) ≈ C (1 + t)^{-p}` by least squares in log-log space.

use crate::{Error, Real, Result};

/// Minimum number of samples a fit window must contain.
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit<T> {
    /// Fitted `p` in `y ≈ C (1+t)^{-p}`.
    pub exponent: T,
    /// `ln C`.
    pub log_prefactor: T,
    pub window: (T, T),
    pub r_squared: T,
    pub samples: usize,
}

/// Ordinary least squares line through `(x, y)`: returns slope, intercept, r².
pub(crate) fn least_squares<T: Real>(x: &[T], y: &[T]) -> (T, T, T) {
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let sxx: T = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let syy: T = y.iter().map(|&b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == T::zero() {
        T::one()
    } else {
        let ss_res: T = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| {
                let e = b - (intercept + slope * a);
                e * e
            })
            .sum();
        T::one() - ss_res / syy
    };
    (slope, intercept, r2)
}

/// Fits `ln y` against `ln(1+t)` over the samples with `t ∈ [lo, hi]`.
pub fn fit_power_law<T: Real>(times: &[T], values: &[T], window: (T, T)) -> Result<DecayFit<T>> {
    if times.len() != values.len() {
        return Err(Error::invalid("times and values differ in length"));
    }
    let (lo, hi) = window;
    if !(lo >= T::one()) || !(hi > lo) {
        return Err(Error::invalid(format!(
            "fit window must satisfy 1 <= t_lo < t_hi, got [{lo}, {hi}]"
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < lo || t > hi {
            continue;
        }
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::invalid(format!(
                "nonpositive value {v} at t = {t} inside fit window"
            )));
        }
        x.push((T::one() + t).ln());
        y.push(v.ln());
    }
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::invalid(format!(
            "fit window [{lo}, {hi}] holds {} samples, need at least {MIN_FIT_SAMPLES}",
            x.len()
        )));
    }
    let (slope, intercept, r_squared) = least_squares(&x, &y);
    Ok(DecayFit {
        exponent: -slope,
        log_prefactor: intercept,
        window,
        r_squared,
        samples: x.len(),
    })
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_spaced<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    assert!(count >= 2 && lo > T::zero() && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::of_usize(count - 1);
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (a + step * T::of_usize(i)).exp()
            }
        })
        .collect()
}

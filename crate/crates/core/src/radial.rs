//! Continuum evaluation of `‖e^{tL}u₀‖²_{L²(ℝ³)}` for radially structured data.
//!
//! For data whose spectral amplitude depends only on `ρ = |ξ|`, with a fixed
//! share θ of each shell's energy along ξ, the exact semigroup reduces the
//! energy to a 1-D integral
//!
//! ```text
//! ‖v(t)‖² = ∫₀^∞ 4πρ² f(ρ)² [(1-θ) e^{-2tρ²} + θ e^{-2(1+1/ε)tρ²}] dρ
//! ```
//!
//! evaluated here by adaptive Gauss-Kronrod quadrature. No lattice is
//! involved, so the algebraic rates show up without torus artifacts.

use crate::fit::{fit_power_law, DecayFit};
use crate::quadrature::integrate;
use crate::symbol::check_eps;
use crate::{Error, Real, Result};

/// Relative accuracy requested from the quadrature.
const REL_TOL: f64 = 1e-10;
/// Gaussian factors below `e^{-GAUSS_TAIL}` are treated as zero.
const GAUSS_TAIL: f64 = 80.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProfileShape<T> {
    /// `f(ρ) = ρ^q` on `[0, cutoff]`, zero beyond. Decay character `q`.
    PowerLaw { q: T, cutoff: T },
    /// `f(ρ) = 1` on `[inner, outer]`. Vanishes near 0, decay character ∞.
    Annulus { inner: T, outer: T },
    /// `f(ρ) = ρ^q e^{-ρ²/w²}`: non-compact but integrable tail.
    GaussianPowerLaw { q: T, width: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfile<T> {
    pub shape: ProfileShape<T>,
    pub amplitude: T,
    /// Share of each shell's energy in the gradient (ξ-parallel) direction.
    pub theta: T,
    pub eps: T,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(shape: ProfileShape<T>) -> Result<Self> {
        let p = Self {
            shape,
            amplitude: T::one(),
            theta: T::zero(),
            eps: T::one(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn power_law(q: T, cutoff: T) -> Result<Self> {
        Self::new(ProfileShape::PowerLaw { q, cutoff })
    }

    pub fn annulus(inner: T, outer: T) -> Result<Self> {
        Self::new(ProfileShape::Annulus { inner, outer })
    }

    pub fn with_theta(mut self, theta: T) -> Result<Self> {
        self.theta = theta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: T) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_amplitude(mut self, amplitude: T) -> Result<Self> {
        self.amplitude = amplitude;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if !(self.theta >= T::zero() && self.theta <= T::one()) {
            return Err(Error::invalid(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("amplitude must be finite"));
        }
        let critical = T::of(-1.5);
        match self.shape {
            ProfileShape::PowerLaw { q, cutoff } => {
                if !(q > critical) {
                    return Err(Error::invalid(format!(
                        "power law q = {q} is not square integrable at the origin (need q > -3/2)"
                    )));
                }
                if !(cutoff > T::zero()) || !cutoff.is_finite() {
                    return Err(Error::invalid("power-law cutoff must be positive and finite"));
                }
            }
            ProfileShape::Annulus { inner, outer } => {
                if !(inner >= T::zero() && outer > inner) || !outer.is_finite() {
                    return Err(Error::invalid("annulus needs 0 <= inner < outer < inf"));
                }
            }
            ProfileShape::GaussianPowerLaw { q, width } => {
                if !(q > critical) {
                    return Err(Error::invalid(format!(
                        "power law q = {q} is not square integrable at the origin (need q > -3/2)"
                    )));
                }
                if !(width > T::zero()) || !width.is_finite() {
                    return Err(Error::invalid("gaussian width must be positive and finite"));
                }
            }
        }
        Ok(())
    }

    pub fn amplitude_at(&self, rho: T) -> T {
        let f = match self.shape {
            ProfileShape::PowerLaw { q, cutoff } => {
                if rho <= cutoff {
                    rho.powf(q)
                } else {
                    T::zero()
                }
            }
            ProfileShape::Annulus { inner, outer } => {
                if rho >= inner && rho <= outer {
                    T::one()
                } else {
                    T::zero()
                }
            }
            ProfileShape::GaussianPowerLaw { q, width } => rho.powf(q) * (-(rho * rho) / (width * width)).exp(),
        };
        self.amplitude * f
    }

    /// Decay character of the profile; `None` means +∞.
    pub fn decay_character(&self) -> Option<T> {
        match self.shape {
            ProfileShape::PowerLaw { q, .. } | ProfileShape::GaussianPowerLaw { q, .. } => Some(q),
            ProfileShape::Annulus { .. } => None,
        }
    }

    /// Where `f` stops contributing.
    fn support_end(&self) -> T {
        match self.shape {
            ProfileShape::PowerLaw { cutoff, .. } => cutoff,
            ProfileShape::Annulus { outer, .. } => outer,
            ProfileShape::GaussianPowerLaw { q, width } => {
                // e^{-2ρ²/w²} ρ^{2q} negligible well past the peak
                width * (T::of(GAUSS_TAIL / 2.0).sqrt() + q.max(T::zero()).sqrt())
            }
        }
    }

    fn breakpoints(&self) -> Vec<T> {
        match self.shape {
            ProfileShape::PowerLaw { cutoff, .. } => vec![cutoff],
            ProfileShape::Annulus { inner, outer } => vec![inner, outer],
            ProfileShape::GaussianPowerLaw { width, .. } => vec![width],
        }
    }

    /// Exponent `q` such that `f(ρ) ~ ρ^q` as `ρ → 0`, if `f` is nonzero there.
    fn origin_exponent(&self) -> Option<T> {
        match self.shape {
            ProfileShape::PowerLaw { q, .. } | ProfileShape::GaussianPowerLaw { q, .. } => Some(q),
            ProfileShape::Annulus { inner, .. } if inner == T::zero() => Some(T::zero()),
            ProfileShape::Annulus { .. } => None,
        }
    }
}

/// `‖e^{tL}u₀‖²` for the radial profile, relative accuracy better than 1e-8.
pub fn linear_norm_sq<T: Real>(profile: &RadialProfile<T>, t: T) -> Result<T> {
    profile.validate()?;
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let two = T::of(2.0);
    let theta = profile.theta;
    let enhanced = T::one() + profile.eps.recip();
    let four_pi = T::of(4.0) * T::PI();
    let integrand = |rho: T| {
        let f = profile.amplitude_at(rho);
        let r2 = rho * rho;
        let kernel = (T::one() - theta) * (-two * t * r2).exp() + theta * (-two * enhanced * t * r2).exp();
        four_pi * r2 * f * f * kernel
    };

    let mut end = profile.support_end();
    let mut points = profile.breakpoints();
    if t > T::zero() {
        let scale = (two * t).sqrt().recip();
        end = end.min(scale * T::of(GAUSS_TAIL).sqrt());
        for m in [0.25, 1.0, 4.0] {
            points.push(scale * T::of(m));
        }
    }
    points.push(T::zero());
    points.push(end);
    points.retain(|&p| p >= T::zero() && p <= end);
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * end);
    if points.len() < 2 {
        return Ok(T::zero());
    }

    let rel = T::of(REL_TOL);
    let tiny = T::min_positive_value();
    let mut total = T::zero();
    let mut rest_start = 0;
    if let Some(q) = profile.origin_exponent() {
        // ρ = b y^γ with γ = 1/(2q+3) removes the ρ^{2q+2} behaviour at 0.
        let b = points[1];
        let gamma = (two * q + T::of(3.0)).recip();
        let mapped = |y: T| {
            if y <= T::zero() {
                return T::zero();
            }
            let yg = y.powf(gamma);
            integrand(b * yg) * b * gamma * yg / y
        };
        total = total + integrate(mapped, &[T::zero(), T::one()], rel, tiny, 4000)?.value;
        rest_start = 1;
    }
    if points.len() - rest_start >= 2 {
        total = total + integrate(integrand, &points[rest_start..], rel, tiny, 4000)?.value;
    }
    Ok(total)
}

/// Fits the algebraic decay exponent of `‖v(t)‖²` over a time grid spanning
/// at least two decades.
pub fn fit_linear_exponent<T: Real>(profile: &RadialProfile<T>, t_grid: &[T]) -> Result<DecayFit<T>> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    let (lo, hi) = (t_grid[0], t_grid[t_grid.len() - 1]);
    if !(lo > T::zero()) || hi / lo < T::of(100.0) * (T::one() - T::of(1e-12)) {
        return Err(Error::invalid(
            "time grid must be positive and span at least two decades",
        ));
    }
    let values = t_grid
        .iter()
        .map(|&t| linear_norm_sq(profile, t))
        .collect::<Result<Vec<_>>>()?;
    if values.iter().all(|v| *v == T::zero()) {
        return Err(Error::invalid("profile has zero energy"));
    }
    fit_power_law(t_grid, &values, (lo, hi))
}

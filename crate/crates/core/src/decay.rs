//! Decay indicator, decay-character estimation and synthesis of initial data
//! with a prescribed low-frequency signature.
//!
//! Shell masses are reported in continuum units: `S(ρ) = Σ_{|k|≤ρ} L³|c_k|²`
//! approximates `∫_{B(ρ)} |û(ξ)|² dξ`, so a spectral density
//! `|û(ξ)| = |ξ|^q` near the origin gives `S(ρ) ≈ 4πρ^{2q+3}/(2q+3)`.

use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fit::{least_squares, log_spaced};
use crate::spectral::{cumulative_at, GridSpec, SpectralField};
use crate::{Error, Real, Result};

/// Radii sampled inside an estimation window.
const WINDOW_SAMPLES: usize = 32;
/// Minimum number of integer shells an estimation window must cover.
const MIN_SHELLS: usize = 8;
/// RMS log-residual above which the shell mass is not treated as a power law.
pub const MAX_LOG_RESIDUAL: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayCharacter<T> {
    Finite(T),
    /// Spectrum vanishes near the origin: faster than any algebraic rate.
    Infinity,
    /// Every `r > -3/2 + s` fails. Never produced by the estimator, which
    /// cannot resolve the boundary case on a finite lattice.
    NegLimit,
}

impl<T: Real> DecayCharacter<T> {
    pub fn finite(&self) -> Option<T> {
        match self {
            DecayCharacter::Finite(r) => Some(*r),
            _ => None,
        }
    }

    /// Numeric view with the sentinels mapped to `±∞`.
    pub fn as_f64(&self) -> f64 {
        match self {
            DecayCharacter::Finite(r) => r.to_f64_lossy(),
            DecayCharacter::Infinity => f64::INFINITY,
            DecayCharacter::NegLimit => f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayCharacterEstimate<T> {
    pub character: DecayCharacter<T>,
    /// Order of the `|k|^{2s}` weight.
    pub s: T,
    /// Slope of `ln S_s` against `ln ρ`; zero for the sentinels.
    pub slope: T,
    pub fit_window: (T, T),
    /// RMS residual of the log-log fit.
    pub residual: T,
}

impl<T: Real> DecayCharacterEstimate<T> {
    pub fn r_star(&self) -> Option<T> {
        self.character.finite()
    }
}

/// Default estimation window `[4 k_min, min(40 k_min, 0.9 cutoff)]`.
///
/// The lowest few shells carry a large relative lattice-count error, so the
/// window starts at the fourth shell.
pub fn default_window<T: Real>(grid: &GridSpec<T>) -> (T, T) {
    let k0 = grid.k_min();
    let hi = (T::of(40.0) * k0).min(T::of(0.9) * grid.cutoff());
    (T::of(4.0) * k0, hi)
}

fn check_band<T: Real>(grid: &GridSpec<T>, rho: T) -> Result<()> {
    let slack = T::one() + T::of(1e-12);
    let lo = T::of(2.0) * grid.k_min();
    if !(rho * slack >= lo) {
        return Err(Error::invalid(format!(
            "radius {rho} below the resolved band (2 k_min = {lo})"
        )));
    }
    if rho > grid.cutoff() * slack {
        return Err(Error::invalid(format!(
            "radius {rho} beyond the retained cutoff {}",
            grid.cutoff()
        )));
    }
    Ok(())
}

fn check_order<T: Real>(s: T) -> Result<()> {
    if !(s >= T::zero()) || !s.is_finite() {
        return Err(Error::invalid(format!("order s must be nonnegative, got {s}")));
    }
    Ok(())
}

/// `ρ^{-2r-3} S_s(ρ)` at each radius, where `S_s` weights each mode by
/// `|k|^{2s}`. The radii are given from large to small.
pub fn decay_indicator<T: Real>(field: &SpectralField<T>, r: T, s: T, rhos: &[T]) -> Result<Vec<T>> {
    check_order(s)?;
    if !(r > s - T::of(1.5)) {
        return Err(Error::invalid(format!(
            "r = {r} must exceed -3/2 + s = {}",
            s - T::of(1.5)
        )));
    }
    if rhos.is_empty() || rhos.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("radii must be strictly decreasing"));
    }
    for &rho in rhos {
        check_band(field.grid(), rho)?;
    }
    let buckets = field.shell_buckets(s);
    let mass = cumulative_at(field.grid(), &buckets, rhos);
    let power = -(T::of(2.0) * r + T::of(3.0));
    Ok(rhos.iter().zip(mass).map(|(&rho, m)| rho.powf(power) * m).collect())
}

/// Fits `ln S_s(ρ)` against `ln ρ` over the window; `r* = (slope - 3)/2`.
///
/// Returns the `Infinity` sentinel when the weighted mass at the lowest
/// resolved shell (`2 k_min`) is exactly zero and an `Inconclusive` error
/// when the shell mass does not follow a power law.
pub fn estimate_decay_character<T: Real>(
    field: &SpectralField<T>,
    s: T,
    window: (T, T),
) -> Result<DecayCharacterEstimate<T>> {
    check_order(s)?;
    let grid = field.grid();
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
    }
    check_band(grid, lo)?;
    check_band(grid, hi)?;
    let k0 = grid.k_min();
    let j_lo = (lo / k0).powi(2).to_f64_lossy().ceil() as usize;
    let j_hi = ((hi / k0).powi(2).to_f64_lossy() * (1.0 + 1e-12)).floor() as usize;
    if j_hi < j_lo || j_hi - j_lo + 1 < MIN_SHELLS {
        return Err(Error::invalid(format!(
            "window [{lo}, {hi}] covers fewer than {MIN_SHELLS} shells"
        )));
    }

    let buckets = field.shell_buckets(s);
    if buckets.iter().all(|b| *b == T::zero()) {
        return Err(Error::invalid("field has no weighted spectral energy"));
    }
    let lowest = cumulative_at(grid, &buckets, &[T::of(2.0) * k0])[0];
    if lowest == T::zero() {
        return Ok(DecayCharacterEstimate {
            character: DecayCharacter::Infinity,
            s,
            slope: T::zero(),
            fit_window: window,
            residual: T::zero(),
        });
    }

    let radii = log_spaced(lo, hi, WINDOW_SAMPLES);
    let mass = cumulative_at(grid, &buckets, &radii);
    let x: Vec<T> = radii.iter().map(|r| r.ln()).collect();
    let y: Vec<T> = mass.iter().map(|m| m.ln()).collect();
    let (slope, intercept, _) = least_squares(&x, &y);
    let ss: T = x
        .iter()
        .zip(&y)
        .map(|(&a, &b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let residual = (ss / T::of_usize(x.len())).sqrt();
    if !(residual <= T::of(MAX_LOG_RESIDUAL)) {
        return Err(Error::Inconclusive(format!(
            "shell mass is not a power law over [{lo}, {hi}] (rms log residual {residual})"
        )));
    }
    Ok(DecayCharacterEstimate {
        character: DecayCharacter::Finite((slope - T::of(3.0)) / T::of(2.0)),
        s,
        slope,
        fit_window: window,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataKind<T> {
    /// `|û(ξ)| = |ξ|^q` up to the cutoff.
    PowerLaw { q: T },
    /// `|û(ξ)| = 1` on `|ξ| ≤ cutoff`.
    IndicatorBall,
    /// `|û(ξ)| = 1` on `inner ≤ |ξ| ≤ outer`.
    Annulus { inner: T, outer: T },
    /// Spectral signature of an `Lᵖ ∩ L²` function, `1 ≤ p < 2`:
    /// `|û(ξ)| = |ξ|^{-3(1-1/p)}` up to the cutoff.
    LpModel { p: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialDataSpec<T> {
    pub kind: DataKind<T>,
    pub amplitude: T,
    /// Upper spectral radius (ignored by the annulus, which has its own).
    pub cutoff: T,
    pub seed: u64,
    /// Project every mode onto the plane orthogonal to its wavevector.
    pub divergence_free: bool,
    /// Give the mean mode the amplitude of the first shell instead of zero.
    pub keep_mean: bool,
}

impl<T: Real> InitialDataSpec<T> {
    pub fn new(kind: DataKind<T>, cutoff: T) -> Self {
        Self {
            kind,
            amplitude: T::one(),
            cutoff,
            seed: 0,
            divergence_free: false,
            keep_mean: false,
        }
    }

    pub fn power_law(q: T, cutoff: T) -> Self {
        Self::new(DataKind::PowerLaw { q }, cutoff)
    }

    /// Decay character the synthesized data is built to have; `Infinity`
    /// for the annulus.
    pub fn target(&self) -> DecayCharacter<T> {
        match self.kind {
            DataKind::PowerLaw { q } => DecayCharacter::Finite(q),
            DataKind::IndicatorBall => DecayCharacter::Finite(T::zero()),
            DataKind::Annulus { .. } => DecayCharacter::Infinity,
            DataKind::LpModel { p } => DecayCharacter::Finite(-T::of(3.0) * (T::one() - p.recip())),
        }
    }

    fn support(&self) -> (T, T) {
        match self.kind {
            DataKind::Annulus { inner, outer } => (inner, outer),
            _ => (T::zero(), self.cutoff),
        }
    }

    /// Checks the data description on its own and against the grid's dealiasing limit.
    pub fn validate(&self, grid: &GridSpec<T>) -> Result<()> {
        match self.kind {
            DataKind::PowerLaw { q } => {
                if !(q > T::of(-1.5)) || !q.is_finite() {
                    return Err(Error::invalid(format!("power law needs q > -3/2, got {q}")));
                }
            }
            DataKind::LpModel { p } => {
                if !(p >= T::one() && p < T::of(2.0)) {
                    return Err(Error::invalid(format!("lp model needs 1 <= p < 2, got {p}")));
                }
            }
            DataKind::Annulus { inner, outer } => {
                if !(inner > T::zero() && outer > inner) {
                    return Err(Error::invalid("annulus needs 0 < inner < outer"));
                }
            }
            DataKind::IndicatorBall => {}
        }
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("amplitude must be finite"));
        }
        let (_, top) = self.support();
        if !(top > T::zero()) || top > grid.cutoff() * (T::one() + T::of(1e-12)) {
            return Err(Error::invalid(format!(
                "spectral support {top} must lie within the dealiasing limit {}",
                grid.cutoff()
            )));
        }
        Ok(())
    }

    /// Spectral density `|û(ρ)|` (without the amplitude factor).
    fn profile(&self, rho: T) -> T {
        let (lo, hi) = self.support();
        if rho < lo || rho > hi {
            return T::zero();
        }
        match self.kind {
            DataKind::PowerLaw { q } => rho.powf(q),
            DataKind::LpModel { p } => rho.powf(-T::of(3.0) * (T::one() - p.recip())),
            DataKind::IndicatorBall | DataKind::Annulus { .. } => T::one(),
        }
    }
}

fn random_direction<T: Real>(rng: &mut ChaCha8Rng, project: Option<[T; 3]>) -> [Complex<T>; 3] {
    loop {
        let mut w: [Complex<T>; 3] = std::array::from_fn(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(T::of(re), T::of(im))
        });
        if let Some(k) = project {
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let dot = (w[0] * k[0] + w[1] * k[1] + w[2] * k[2]) / kk;
            for c in 0..3 {
                w[c] = w[c] - dot * k[c];
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm > T::of(1e-8) {
            return w.map(|z| z / norm);
        }
    }
}

/// Builds a real field with the requested deterministic radial amplitude and
/// seeded random polarization and phase per conjugate pair.
pub fn synthesize<T: Real>(spec: &InitialDataSpec<T>, grid: &GridSpec<T>) -> Result<SpectralField<T>> {
    spec.validate(grid)?;
    let k0 = grid.k_min();
    // |c_k| = |û(k)| (k_min/L)^{3/2} turns the density into series coefficients.
    let scale = spec.amplitude * (k0 / grid.box_length()).powf(T::of(1.5));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = grid.len();
    let mut coeffs: [Vec<Complex<T>>; 3] = std::array::from_fn(|_| vec![Complex::zero(); len]);

    if spec.keep_mean {
        let first = spec.profile(k0);
        let mut dir = [T::zero(); 3];
        loop {
            for d in dir.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *d = T::of(g);
            }
            let n = dir.iter().map(|d| *d * *d).sum::<T>().sqrt();
            if n > T::of(1e-8) {
                for c in 0..3 {
                    coeffs[c][0] = Complex::new(scale * first * dir[c] / n, T::zero());
                }
                break;
            }
        }
    }

    for idx in 1..len {
        let mirror = grid.mirror_index(idx);
        if mirror <= idx || !grid.is_retained(idx) {
            continue;
        }
        let k = grid.wavevector(idx);
        let rho = (T::of_i64(grid.lattice_sq(idx))).sqrt() * k0;
        let f = spec.profile(rho);
        if f == T::zero() {
            continue;
        }
        let dir = random_direction(&mut rng, spec.divergence_free.then_some(k));
        for c in 0..3 {
            let z = dir[c] * (scale * f);
            coeffs[c][idx] = z;
            coeffs[c][mirror] = z.conj();
        }
    }
    SpectralField::from_coefficients(*grid, coeffs)
}

//! Time integration of the Temam and Lelièvre systems
//!
//! ```text
//! Temam:     ∂t u + (u·∇)u + ½(div u)u = Δu + (1/ε)∇div u
//! Lelièvre:  ∂t u + (u·∇)u + α|u|²u    = Δu + (1/ε)∇div u
//! ```
//!
//! The linear part is propagated exactly (integrating-factor RK4 around
//! [`apply_propagator`]); the nonlinear part is evaluated pseudo-spectrally in
//! divergence form,
//!
//! ```text
//! N_i = ∂_j(u_i u_j) + c (div u) u_i + α|u|²u_i,   c = -½ (Temam), -1 (Lelièvre)
//! ```
//!
//! which costs two paired inverse and five paired forward FFTs per
//! evaluation. The quadratic products are alias-free under the 2/3 rule. The
//! cubic damping is a collocation product, so its pairing with `u` equals the
//! grid quadrature of `|u|⁴` exactly and the discrete energy balance matches
//! the continuous one term by term.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use crate::spectral::{GridSpec, Norms, SpectralField, SpectralWorkspace};
use crate::symbol::{apply_propagator, branch_factors, check_eps, propagate_mode};
use crate::{Error, Real, Result};

/// Largest sampling interval accepted by [`energy_inequality_residual`].
pub const MAX_RESIDUAL_SPACING: f64 = 0.1;
/// Relative one-step energy growth that counts as a blowup.
const BLOWUP_GROWTH: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum System {
    Temam,
    Lelievre,
    LinearOnly,
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Temam => "temam",
            System::Lelievre => "lelievre",
            System::LinearOnly => "linear",
        })
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "temam" | "temamornse" | "nse" => Ok(System::Temam),
            "lelievre" | "lelièvre" => Ok(System::Lelievre),
            "linear" | "linearonly" => Ok(System::LinearOnly),
            _ => Err(Error::invalid(format!("unknown system '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams<T> {
    pub system: System,
    pub eps: T,
    /// Damping strength; only the Lelièvre system uses it.
    pub alpha: T,
    pub dt: T,
    pub t_final: T,
    /// Record a sample every this many steps (the final time is always kept).
    pub record_every: usize,
}

impl<T: Real> SystemParams<T> {
    pub fn new(system: System, eps: T, alpha: T, dt: T, t_final: T) -> Result<Self> {
        let p = Self {
            system,
            eps,
            alpha,
            dt,
            t_final,
            record_every: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_record_every(mut self, stride: usize) -> Result<Self> {
        self.record_every = stride;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > T::zero()) || !self.t_final.is_finite() {
            return Err(Error::invalid(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        Ok(())
    }

    /// Whether the energy is guaranteed to be nonincreasing: always for the
    /// Temam and linear systems, for Lelièvre only when `α > ε/4`.
    pub fn guaranteed_dissipation(&self) -> bool {
        match self.system {
            System::Temam | System::LinearOnly => true,
            System::Lelievre => self.alpha > self.eps / T::of(4.0),
        }
    }

    /// Number of steps to reach `t_final`; the last one may be shorter.
    pub fn step_count(&self) -> usize {
        let ratio = (self.t_final / self.dt).to_f64_lossy();
        ((ratio * (1.0 - 1e-12)).ceil() as usize).max(1)
    }

    /// Length of step `s` (1-based): `dt` except possibly the last.
    pub fn step_length(&self, s: usize) -> T {
        let steps = self.step_count();
        if s == steps {
            self.t_final - self.dt * T::of_usize(steps - 1)
        } else {
            self.dt
        }
    }

    fn stabilizer(&self) -> T {
        match self.system {
            System::Temam => T::of(-0.5),
            System::Lelievre => -T::one(),
            System::LinearOnly => T::zero(),
        }
    }

    fn damping(&self) -> T {
        match self.system {
            System::Lelievre => self.alpha,
            _ => T::zero(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyTrace<T> {
    pub times: Vec<T>,
    pub l2_sq: Vec<T>,
    pub grad_sq: Vec<T>,
    pub div_sq: Vec<T>,
    pub l4_quartic: Vec<T>,
}

impl<T: Real> EnergyTrace<T> {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            l2_sq: Vec::new(),
            grad_sq: Vec::new(),
            div_sq: Vec::new(),
            l4_quartic: Vec::new(),
        }
    }

    pub fn push(&mut self, t: T, n: Norms<T>) {
        self.times.push(t);
        self.l2_sq.push(n.l2_sq);
        self.grad_sq.push(n.grad_sq);
        self.div_sq.push(n.div_sq);
        self.l4_quartic.push(n.l4_quartic);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample(&self, k: usize) -> Norms<T> {
        Norms {
            l2_sq: self.l2_sq[k],
            grad_sq: self.grad_sq[k],
            div_sq: self.div_sq[k],
            l4_quartic: self.l4_quartic[k],
        }
    }

    pub fn energy_final(&self) -> Option<T> {
        self.l2_sq.last().copied()
    }

    /// Checks lengths, ordering and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if [&self.l2_sq, &self.grad_sq, &self.div_sq, &self.l4_quartic]
            .iter()
            .any(|c| c.len() != n)
        {
            return Err(Error::invalid("trace columns differ in length"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trace times must be strictly increasing"));
        }
        let all = self
            .times
            .iter()
            .chain(&self.l2_sq)
            .chain(&self.grad_sq)
            .chain(&self.div_sq)
            .chain(&self.l4_quartic);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::invalid("trace contains non-finite entries"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DuhamelSplit<T> {
    pub times: Vec<T>,
    /// `‖e^{tL}u₀‖²`
    pub linear_energy: Vec<T>,
    /// `‖u(t) - e^{tL}u₀‖²`
    pub remainder_energy: Vec<T>,
    pub full_energy: Vec<T>,
}

type Coeffs<T> = [Vec<Complex<T>>; 3];

fn zero_coeffs<T: Real>(len: usize) -> Coeffs<T> {
    std::array::from_fn(|_| vec![Complex::zero(); len])
}

#[derive(Clone, Copy, Debug)]
struct Mode<T> {
    idx: usize,
    xi: [T; 3],
    kk: T,
}

/// Per-mode branch factors for one step length.
struct Factors<T> {
    h: T,
    half: Vec<(T, T)>,
    full: Vec<(T, T)>,
}

/// Stateful stepper holding FFT plans, the retained-mode table, propagator
/// factors and scratch buffers for one grid and parameter set.
pub struct Integrator<T: Real> {
    grid: GridSpec<T>,
    params: SystemParams<T>,
    ws: SpectralWorkspace<T>,
    modes: Arc<[Mode<T>]>,
    factors: Option<Factors<T>>,
    phys: [Vec<T>; 4],
    prod: [Vec<T>; 9],
    spec: [Vec<Complex<T>>; 9],
    div: Vec<Complex<T>>,
    k: [Coeffs<T>; 4],
    stage: Coeffs<T>,
    eu_half: Coeffs<T>,
    time: T,
}

impl<T: Real> Integrator<T> {
    pub fn new(grid: GridSpec<T>, params: SystemParams<T>) -> Result<Self> {
        params.validate()?;
        if params.system != System::LinearOnly && !(grid.dealias_fraction() < T::one()) {
            return Err(Error::invalid("nonlinear systems need a dealias fraction below 1"));
        }
        let len = grid.len();
        let k0sq = grid.k_min() * grid.k_min();
        let modes = (0..len)
            .filter(|&i| grid.is_retained(i))
            .map(|idx| Mode {
                idx,
                xi: grid.wavevector(idx),
                kk: k0sq * T::of_i64(grid.lattice_sq(idx)),
            })
            .collect();
        Ok(Self {
            grid,
            params,
            ws: SpectralWorkspace::new(grid),
            modes,
            factors: None,
            phys: std::array::from_fn(|_| vec![T::zero(); len]),
            prod: std::array::from_fn(|_| vec![T::zero(); len]),
            spec: std::array::from_fn(|_| vec![Complex::zero(); len]),
            div: vec![Complex::zero(); len],
            k: std::array::from_fn(|_| zero_coeffs(len)),
            stage: zero_coeffs(len),
            eu_half: zero_coeffs(len),
            time: T::zero(),
        })
    }

    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    pub fn norms(&mut self, field: &SpectralField<T>) -> Norms<T> {
        self.ws.norms(field)
    }

    fn check_grid(&self, field: &SpectralField<T>) -> Result<()> {
        if *field.grid() != self.grid {
            return Err(Error::invalid("field and integrator use different grids"));
        }
        Ok(())
    }

    /// `-N(u)`, truncated to the retained modes.
    pub fn nonlinear_rhs(&mut self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check_grid(field)?;
        let u = field.dealiased();
        let mut out = zero_coeffs(self.grid.len());
        self.rhs_into(u.components(), &mut out)?;
        Ok(SpectralField::from_parts(self.grid, out))
    }

    fn rhs_into(&mut self, u: &Coeffs<T>, out: &mut Coeffs<T>) -> Result<()> {
        let c = self.params.stabilizer();
        let alpha = self.params.damping();
        if self.params.system == System::LinearOnly {
            for m in self.modes.iter() {
                for comp in out.iter_mut() {
                    comp[m.idx] = Complex::zero();
                }
            }
            return Ok(());
        }
        let i = Complex::new(T::zero(), T::one());
        for m in self.modes.iter() {
            let dot = u[0][m.idx] * m.xi[0] + u[1][m.idx] * m.xi[1] + u[2][m.idx] * m.xi[2];
            self.div[m.idx] = i * dot;
        }
        let fft = self.ws.fft();
        let [p0, p1, p2, pd] = &mut self.phys;
        fft.inverse_pair(&u[0], Some(&u[1]), p0, Some(p1));
        fft.inverse_pair(&u[2], Some(&self.div), p2, Some(pd));

        let [s00, s01, s02, s11, s12, s22, q0, q1, q2] = &mut self.prod;
        let mut finite = true;
        for x in 0..p0.len() {
            let (a, b, w, d) = (p0[x], p1[x], p2[x], pd[x]);
            let sq = a * a + b * b + w * w;
            let g = c * d + alpha * sq;
            s00[x] = a * a;
            s01[x] = a * b;
            s02[x] = a * w;
            s11[x] = b * b;
            s12[x] = b * w;
            s22[x] = w * w;
            q0[x] = g * a;
            q1[x] = g * b;
            q2[x] = g * w;
            finite &= (g * sq).is_finite();
        }
        if !finite {
            return Err(Error::NumericalAbort {
                time: self.time.to_f64_lossy(),
                reason: "non-finite value in nonlinear products".into(),
            });
        }

        let fft = self.ws.fft();
        let [f00, f01, f02, f11, f12, f22, g0, g1, g2] = &mut self.spec;
        fft.forward_pair(s00, Some(s01), f00, Some(f01));
        fft.forward_pair(s02, Some(s11), f02, Some(f11));
        fft.forward_pair(s12, Some(s22), f12, Some(f22));
        fft.forward_pair(q0, Some(q1), g0, Some(g1));
        fft.forward_pair(q2, None, g2, None);

        for m in self.modes.iter() {
            let j = m.idx;
            let [k0, k1, k2] = m.xi;
            let n0 = i * (f00[j] * k0 + f01[j] * k1 + f02[j] * k2) + g0[j];
            let n1 = i * (f01[j] * k0 + f11[j] * k1 + f12[j] * k2) + g1[j];
            let n2 = i * (f02[j] * k0 + f12[j] * k1 + f22[j] * k2) + g2[j];
            out[0][j] = -n0;
            out[1][j] = -n1;
            out[2][j] = -n2;
        }
        Ok(())
    }

    fn ensure_factors(&mut self, h: T) {
        if self.factors.as_ref().is_some_and(|f| f.h == h) {
            return;
        }
        let eps = self.params.eps;
        let half_h = h * T::of(0.5);
        let half = self.modes.iter().map(|m| branch_factors(m.kk, half_h, eps)).collect();
        let full = self.modes.iter().map(|m| branch_factors(m.kk, h, eps)).collect();
        self.factors = Some(Factors { h, half, full });
    }

    /// One step of length `h`.
    fn advance(&mut self, field: &SpectralField<T>, h: T) -> Result<SpectralField<T>> {
        if self.params.system == System::LinearOnly {
            return apply_propagator(field, h, self.params.eps);
        }
        let before = field.l2_sq();
        let u = field.dealiased().into_components();
        self.ensure_factors(h);

        let mut k = std::mem::take(&mut self.k);
        let mut stage = std::mem::take(&mut self.stage);
        let mut ehu = std::mem::take(&mut self.eu_half);
        let result = self.lawson_rk4(&u, h, &mut k, &mut stage, &mut ehu);
        self.k = k;
        self.stage = stage;
        self.eu_half = ehu;
        let next = SpectralField::from_parts(self.grid, result?);

        let after = next.l2_sq();
        if !after.is_finite() {
            return Err(Error::NumericalAbort {
                time: self.time.to_f64_lossy(),
                reason: "energy became non-finite".into(),
            });
        }
        if self.params.guaranteed_dissipation() && after > before * T::of(1.0 + BLOWUP_GROWTH) {
            return Err(Error::NumericalAbort {
                time: self.time.to_f64_lossy(),
                reason: format!(
                    "energy grew from {before} to {after} in one step in a dissipative regime; dt = {h} is too large"
                ),
            });
        }
        Ok(next)
    }

    fn lawson_rk4(
        &mut self,
        u: &Coeffs<T>,
        h: T,
        k: &mut [Coeffs<T>; 4],
        stage: &mut Coeffs<T>,
        ehu: &mut Coeffs<T>,
    ) -> Result<Coeffs<T>> {
        let half_h = h * T::of(0.5);
        let sixth = h / T::of(6.0);
        let two = T::of(2.0);
        let factors = self.factors.take().expect("factors prepared");
        let modes = Arc::clone(&self.modes);
        let mode_vec = |src: &Coeffs<T>, j: usize| [src[0][j], src[1][j], src[2][j]];
        let store = |dst: &mut Coeffs<T>, j: usize, v: [Complex<T>; 3]| {
            dst[0][j] = v[0];
            dst[1][j] = v[1];
            dst[2][j] = v[2];
        };

        let mut run = || -> Result<Coeffs<T>> {
            let [k1, k2, k3, k4] = k;
            self.rhs_into(u, k1)?;
            for (m, &(hh, hg)) in modes.iter().zip(&factors.half) {
                let (uj, kj) = (mode_vec(u, m.idx), mode_vec(k1, m.idx));
                let arg = std::array::from_fn(|c| uj[c] + kj[c] * half_h);
                store(stage, m.idx, propagate_mode(&m.xi, m.kk, hh, hg, arg));
                store(ehu, m.idx, propagate_mode(&m.xi, m.kk, hh, hg, uj));
            }
            self.rhs_into(stage, k2)?;
            for m in modes.iter() {
                let (e, kj) = (mode_vec(ehu, m.idx), mode_vec(k2, m.idx));
                store(stage, m.idx, std::array::from_fn(|c| e[c] + kj[c] * half_h));
            }
            self.rhs_into(stage, k3)?;
            for (m, (&(hh, hg), &(fh, fg))) in modes.iter().zip(factors.half.iter().zip(&factors.full)) {
                let eu = propagate_mode(&m.xi, m.kk, fh, fg, mode_vec(u, m.idx));
                let ek = propagate_mode(&m.xi, m.kk, hh, hg, mode_vec(k3, m.idx));
                store(stage, m.idx, std::array::from_fn(|c| eu[c] + ek[c] * h));
            }
            self.rhs_into(stage, k4)?;
            let mut next = zero_coeffs(self.grid.len());
            for (m, (&(hh, hg), &(fh, fg))) in modes.iter().zip(factors.half.iter().zip(&factors.full)) {
                let j = m.idx;
                let eu = propagate_mode(&m.xi, m.kk, fh, fg, mode_vec(u, j));
                let e1 = propagate_mode(&m.xi, m.kk, fh, fg, mode_vec(k1, j));
                let mid = std::array::from_fn(|c| k2[c][j] + k3[c][j]);
                let e23 = propagate_mode(&m.xi, m.kk, hh, hg, mid);
                store(
                    &mut next,
                    j,
                    std::array::from_fn(|c| eu[c] + (e1[c] + e23[c] * two + k4[c][j]) * sixth),
                );
            }
            Ok(next)
        };
        let result = run();
        self.factors = Some(factors);
        result
    }

    /// One step of length `params.dt`.
    pub fn step(&mut self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check_grid(field)?;
        let dt = self.params.dt;
        self.advance(field, dt)
    }

    /// Integrates from `u0` to `t_final`, calling `observe` at every recorded
    /// sample (including `t = 0` and `t = t_final`).
    pub fn integrate(
        &mut self,
        u0: &SpectralField<T>,
        mut observe: impl FnMut(T, &SpectralField<T>, &mut Self) -> Result<()>,
    ) -> Result<SpectralField<T>> {
        self.check_grid(u0)?;
        let p = self.params;
        let steps = p.step_count();
        let mut u = if p.system == System::LinearOnly {
            u0.clone()
        } else {
            u0.dealiased()
        };
        self.time = T::zero();
        observe(T::zero(), &u, self)?;
        for s in 1..=steps {
            u = self.advance(&u, p.step_length(s))?;
            self.time = if s == steps { p.t_final } else { p.dt * T::of_usize(s) };
            if s % p.record_every == 0 || s == steps {
                let t = self.time;
                observe(t, &u, self)?;
            }
        }
        Ok(u)
    }

    pub fn run(&mut self, u0: &SpectralField<T>) -> Result<EnergyTrace<T>> {
        let mut trace = EnergyTrace::new();
        self.integrate(u0, |t, u, me| {
            let n = me.norms(u);
            trace.push(t, n);
            Ok(())
        })?;
        Ok(trace)
    }

    pub fn duhamel_split(&mut self, u0: &SpectralField<T>) -> Result<DuhamelSplit<T>> {
        let eps = self.params.eps;
        let mut split = DuhamelSplit::default();
        let mut linear = if self.params.system == System::LinearOnly {
            u0.clone()
        } else {
            u0.dealiased()
        };
        let p = self.params;
        let steps = p.step_count();
        let mut done = 0;
        self.integrate(u0, |t, u, _| {
            // advance the linear copy through the same step sequence as the run
            let target = if t == p.t_final {
                steps
            } else {
                (t / p.dt).round().to_usize().unwrap_or(0)
            };
            while done < target {
                done += 1;
                linear = apply_propagator(&linear, p.step_length(done), eps)?;
            }
            split.times.push(t);
            split.linear_energy.push(linear.l2_sq());
            split.full_energy.push(u.l2_sq());
            split.remainder_energy.push(u.sub(&linear)?.l2_sq());
            Ok(())
        })?;
        Ok(split)
    }
}

/// `-N(u)` for the configured system.
pub fn nonlinear_rhs<T: Real>(field: &SpectralField<T>, params: &SystemParams<T>) -> Result<SpectralField<T>> {
    Integrator::new(*field.grid(), *params)?.nonlinear_rhs(field)
}

/// One integrating-factor step of length `params.dt`.
pub fn step<T: Real>(field: &SpectralField<T>, params: &SystemParams<T>) -> Result<SpectralField<T>> {
    Integrator::new(*field.grid(), *params)?.step(field)
}

pub fn run<T: Real>(u0: &SpectralField<T>, params: &SystemParams<T>) -> Result<EnergyTrace<T>> {
    Integrator::new(*u0.grid(), *params)?.run(u0)
}

pub fn duhamel_split<T: Real>(u0: &SpectralField<T>, params: &SystemParams<T>) -> Result<DuhamelSplit<T>> {
    Integrator::new(*u0.grid(), *params)?.duhamel_split(u0)
}

/// Right-hand side of the energy balance `½ dE/dt ≤ -R` at one sample.
fn dissipation<T: Real>(n: &Norms<T>, params: &SystemParams<T>) -> T {
    match params.system {
        System::Lelievre => {
            n.grad_sq + T::of(0.75) / params.eps * n.div_sq + (params.alpha - params.eps / T::of(4.0)) * n.l4_quartic
        }
        System::Temam | System::LinearOnly => n.grad_sq + n.div_sq / params.eps,
    }
}

/// `½ (E_{k+1} - E_k)/Δt + R` per interval, with `R` averaged over the two
/// endpoint samples. Nonpositive (up to discretization error) when the
/// energy inequality holds.
pub fn energy_inequality_residual<T: Real>(trace: &EnergyTrace<T>, params: &SystemParams<T>) -> Result<Vec<T>> {
    trace.validate()?;
    check_eps(params.eps)?;
    if trace.len() < 2 {
        return Err(Error::invalid("trace needs at least two samples"));
    }
    let max_gap = T::of(MAX_RESIDUAL_SPACING * (1.0 + 1e-9));
    let half = T::of(0.5);
    let mut out = Vec::with_capacity(trace.len() - 1);
    for k in 0..trace.len() - 1 {
        let dt = trace.times[k + 1] - trace.times[k];
        if dt > max_gap {
            return Err(Error::invalid(format!(
                "samples {k}..{} are {dt} apart; the residual needs spacing <= {MAX_RESIDUAL_SPACING}",
                k + 1
            )));
        }
        let de = (trace.l2_sq[k + 1] - trace.l2_sq[k]) / dt;
        let r = half * (dissipation(&trace.sample(k), params) + dissipation(&trace.sample(k + 1), params));
        out.push(half * de + r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decay::{synthesize, InitialDataSpec};
    use std::f64::consts::PI;

    fn constant_field(grid: GridSpec<f64>, v: [f64; 3]) -> SpectralField<f64> {
        SpectralField::from_modes(grid, &[([0, 0, 0], v.map(|x| Complex::new(x, 0.0)))]).unwrap()
    }

    fn random_field(n: usize, seed: u64, amplitude: f64) -> SpectralField<f64> {
        let grid = GridSpec::new(n, 2.0 * PI).unwrap();
        let mut spec = InitialDataSpec::power_law(0.0, grid.cutoff());
        spec.seed = seed;
        spec.amplitude = amplitude;
        synthesize(&spec, &grid).unwrap()
    }

    /// Brute-force `-N` with plain sums for the quadratic terms and a cyclic
    /// sum for the cubic one.
    fn convolution_oracle(u: &SpectralField<f64>, params: &SystemParams<f64>) -> SpectralField<f64> {
        let g = *u.grid();
        let n = g.n() as i64;
        let i = Complex::new(0.0, 1.0);
        let retained: Vec<usize> = (0..g.len()).filter(|&j| g.is_retained(j)).collect();
        let c = params.stabilizer();
        let alpha = params.damping();
        let div = |j: usize| {
            let k = g.wavevector(j);
            let v = u.mode(j);
            i * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2])
        };
        let mut out = vec![];
        for &m in &retained {
            let lm = g.lattice(m);
            let km = g.wavevector(m);
            let mut nvec = [Complex::<f64>::zero(); 3];
            for &p in &retained {
                let lp = g.lattice(p);
                let lq = [lm[0] - lp[0], lm[1] - lp[1], lm[2] - lp[2]];
                if lq.iter().any(|x| x.abs() >= n / 2) {
                    continue;
                }
                let q = g.flat_index(lq);
                if !g.is_retained(q) {
                    continue;
                }
                let (up, uq) = (u.mode(p), u.mode(q));
                let dp = div(p);
                for a in 0..3 {
                    let mut conv = Complex::<f64>::zero();
                    for b in 0..3 {
                        conv += i * km[b] * up[a] * uq[b];
                    }
                    nvec[a] += conv + uq[a] * dp * c;
                }
            }
            if alpha != 0.0 {
                for &p in &retained {
                    for &q in &retained {
                        let (lp, lq) = (g.lattice(p), g.lattice(q));
                        let r = g.flat_index([lm[0] - lp[0] - lq[0], lm[1] - lp[1] - lq[1], lm[2] - lp[2] - lq[2]]);
                        if !g.is_retained(r) {
                            continue;
                        }
                        let (up, uq, ur) = (u.mode(p), u.mode(q), u.mode(r));
                        let dot = up[0] * uq[0] + up[1] * uq[1] + up[2] * uq[2];
                        for a in 0..3 {
                            nvec[a] += dot * ur[a] * alpha;
                        }
                    }
                }
            }
            out.push((lm, nvec.map(|z| -z)));
        }
        let mut field = SpectralField::zeros(g);
        let mut coeffs = field.clone().into_components();
        for (lm, v) in out {
            let j = g.flat_index(lm);
            for a in 0..3 {
                coeffs[a][j] = v[a];
            }
        }
        field = SpectralField::from_coefficients(g, coeffs).unwrap();
        field
    }

    fn params(system: System, dt: f64, t_final: f64) -> SystemParams<f64> {
        SystemParams::new(system, 1.0, 1.0, dt, t_final).unwrap()
    }

    #[test]
    fn system_names_round_trip() {
        for s in [System::Temam, System::Lelievre, System::LinearOnly] {
            assert_eq!(s.to_string().parse::<System>().unwrap(), s);
        }
        assert!("navier".parse::<System>().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(System::Temam, 0.0, 1.0, 0.1, 1.0).is_err());
        assert!(SystemParams::new(System::Temam, 1.0, -1.0, 0.1, 1.0).is_err());
        assert!(SystemParams::new(System::Temam, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(SystemParams::new(System::Temam, 1.0, 1.0, 0.1, 0.0).is_err());
        assert!(params(System::Temam, 0.1, 1.0).with_record_every(0).is_err());
        assert_eq!(params(System::Temam, 0.1, 1.0).step_count(), 10);
        assert_eq!(params(System::Temam, 0.3, 1.0).step_count(), 4);
        let weak = SystemParams::new(System::Lelievre, 1.0, 0.2, 0.1, 1.0).unwrap();
        assert!(!weak.guaranteed_dissipation());
        assert!(params(System::Lelievre, 0.1, 1.0).guaranteed_dissipation());
    }

    #[test]
    fn rhs_of_zero_and_constant_fields() {
        let g = GridSpec::new(8, 2.0 * PI).unwrap();
        let zero = SpectralField::zeros(g);
        for s in [System::Temam, System::Lelievre] {
            assert_eq!(nonlinear_rhs(&zero, &params(s, 0.1, 1.0)).unwrap().max_abs(), 0.0);
        }
        let c = [0.3, -0.4, 1.2];
        let u = constant_field(g, c);
        let temam = nonlinear_rhs(&u, &params(System::Temam, 0.1, 1.0)).unwrap();
        assert!(temam.max_abs() < 1e-15);
        let alpha = 0.7;
        let p = SystemParams::new(System::Lelievre, 1.0, alpha, 0.1, 1.0).unwrap();
        let lel = nonlinear_rhs(&u, &p).unwrap();
        let sq: f64 = c.iter().map(|x| x * x).sum();
        for a in 0..3 {
            assert!((lel.mode(0)[a] - Complex::new(-alpha * sq * c[a], 0.0)).norm() < 1e-14);
        }
        let rest: f64 = (1..g.len())
            .map(|j| lel.mode(j).iter().map(|z| z.norm()).sum::<f64>())
            .sum();
        assert!(rest < 1e-14);
    }

    #[test]
    fn rhs_matches_convolution_oracle() {
        let u = random_field(8, 3, 1.0);
        for s in [System::Temam, System::Lelievre] {
            let p = params(s, 0.1, 1.0);
            let fast = nonlinear_rhs(&u, &p).unwrap();
            let slow = convolution_oracle(&u, &p);
            let err = fast.max_abs_diff(&slow);
            assert!(err < 1e-12, "{s}: {err}");
        }
    }

    #[test]
    fn linear_step_is_the_propagator() {
        let u = random_field(8, 5, 1.0);
        let p = params(System::LinearOnly, 0.37, 1.0);
        assert_eq!(step(&u, &p).unwrap(), apply_propagator(&u, 0.37, 1.0).unwrap());
    }

    #[test]
    fn damping_ode_on_constant_mode() {
        let g = GridSpec::new(4, 2.0 * PI).unwrap();
        let u0 = constant_field(g, [1.0, 0.0, 0.0]);
        let p = params(System::Lelievre, 1e-2, 4.0);
        let mut integ = Integrator::new(g, p).unwrap();
        let end = integ.integrate(&u0, |_, _, _| Ok(())).unwrap();
        assert!((end.mode(0)[0].re - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn temam_single_solenoidal_mode_has_no_remainder() {
        let g = GridSpec::new(16, 2.0 * PI).unwrap();
        let u0 = SpectralField::from_modes(
            g,
            &[(
                [1, 0, 0],
                [Complex::zero(), Complex::new(0.0, -0.5), Complex::new(0.2, 0.0)],
            )],
        )
        .unwrap();
        let p = params(System::Temam, 0.05, 1.0);
        let split = duhamel_split(&u0, &p).unwrap();
        assert_eq!(split.remainder_energy[0], 0.0);
        assert!(split.remainder_energy.iter().all(|r| *r <= 1e-12));
    }

    #[test]
    fn linear_duhamel_remainder_is_zero() {
        let u0 = random_field(8, 9, 1.0);
        let p = params(System::LinearOnly, 0.1, 1.05);
        let split = duhamel_split(&u0, &p).unwrap();
        assert!(split.remainder_energy.iter().all(|r| *r == 0.0));
        assert_eq!(split.times.len(), 12);
    }

    #[test]
    fn run_records_endpoints() {
        let u0 = random_field(8, 1, 1.0);
        let p = params(System::Temam, 0.1, 1.05).with_record_every(3).unwrap();
        let trace = run(&u0, &p).unwrap();
        assert_eq!(trace.times.first(), Some(&0.0));
        assert_eq!(trace.times.last(), Some(&1.05));
        assert_eq!(trace.len(), 5);
        let zero = run(&SpectralField::zeros(*u0.grid()), &p).unwrap();
        assert!(zero.l2_sq.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn temam_energy_balance_is_exact_in_space() {
        // the transport term is energy neutral: dE/dt = -2(grad + div/ε)
        let u = random_field(16, 4, 2.0);
        let p = SystemParams::new(System::Temam, 0.5, 0.0, 0.1, 1.0).unwrap();
        let rhs = nonlinear_rhs(&u, &p).unwrap();
        let pairing: f64 = (0..u.grid().len())
            .map(|j| {
                let (a, b) = (u.mode(j), rhs.mode(j));
                (0..3).map(|c| (a[c].conj() * b[c]).re).sum::<f64>()
            })
            .sum();
        assert!(pairing.abs() < 1e-12 * u.l2_sq() / u.grid().volume());
    }

    #[test]
    fn lelievre_pairing_matches_energy_terms() {
        let u = random_field(16, 8, 2.0);
        let p = SystemParams::new(System::Lelievre, 1.0, 0.3, 0.1, 1.0).unwrap();
        let rhs = nonlinear_rhs(&u, &p).unwrap();
        let g = *u.grid();
        let pairing: f64 = (0..g.len())
            .map(|j| {
                let (a, b) = (u.mode(j), rhs.mode(j));
                (0..3).map(|c| (a[c].conj() * b[c]).re).sum::<f64>()
            })
            .sum::<f64>()
            * g.volume();
        // <u, -N> = ½∫div u |u|² - α∫|u|⁴ on the grid
        let phys = crate::spectral::inverse_transform(&u);
        let d = {
            let mut spec = SpectralField::zeros(g).into_components();
            for j in 0..g.len() {
                let k = g.wavevector(j);
                let v = u.mode(j);
                spec[0][j] = Complex::new(0.0, 1.0) * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]);
            }
            crate::spectral::inverse_transform(&SpectralField::from_coefficients(g, spec).unwrap())
        };
        let (mut cubic, mut quartic) = (0.0, 0.0);
        for x in 0..g.len() {
            let sq: f64 = (0..3).map(|c| phys.component(c)[x].powi(2)).sum();
            cubic += d.component(0)[x] * sq;
            quartic += sq * sq;
        }
        let w = g.volume() / g.len() as f64;
        let want = 0.5 * cubic * w - 0.3 * quartic * w;
        assert!(
            (pairing - want).abs() < 1e-10 * want.abs().max(1.0),
            "{pairing} vs {want}"
        );
    }

    #[test]
    fn integrator_is_fourth_order() {
        let u0 = random_field(8, 2, 1.0);
        let terminal = |dt: f64| {
            let p = SystemParams::new(System::Lelievre, 0.5, 1.0, dt, 0.4).unwrap();
            let mut integ = Integrator::new(*u0.grid(), p).unwrap();
            integ.integrate(&u0, |_, _, _| Ok(())).unwrap()
        };
        let reference = terminal(0.1 / 8.0);
        let coarse = terminal(0.1).max_abs_diff(&reference);
        let fine = terminal(0.05).max_abs_diff(&reference);
        assert!(coarse / fine > 3.5, "ratio {}", coarse / fine);
        assert!(coarse / fine > 10.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn residual_of_pure_heat_mode() {
        let g = GridSpec::new(8, 2.0 * PI).unwrap();
        let u0 = SpectralField::from_modes(
            g,
            &[([0, 1, 0], [Complex::new(0.0, -0.5), Complex::zero(), Complex::zero()])],
        )
        .unwrap();
        let p = params(System::LinearOnly, 0.01, 1.0);
        let trace = run(&u0, &p).unwrap();
        let res = energy_inequality_residual(&trace, &p).unwrap();
        let e0 = trace.l2_sq[0];
        // E = E0 e^{-2t}: the trapezoid residual is O(Δt²)
        assert!(
            res.iter().all(|r| r.abs() < 1e-4 * e0),
            "{:?}",
            res.iter().fold(0.0f64, |m, r| m.max(r.abs()))
        );
        assert!(res.iter().any(|r| r.abs() > 0.0));
    }

    #[test]
    fn residual_of_damping_ode() {
        let g = GridSpec::new(4, 2.0 * PI).unwrap();
        let u0 = constant_field(g, [1.0, 0.0, 0.0]);
        let p = params(System::Lelievre, 1e-2, 2.0);
        let trace = run(&u0, &p).unwrap();
        let v = g.volume();
        for (t, e) in trace.times.iter().zip(&trace.l2_sq) {
            assert!((e - v / (1.0 + 2.0 * t)).abs() < 1e-9 * v);
        }
        let res = energy_inequality_residual(&trace, &p).unwrap();
        // the inequality carries an ε/4 slack on the quartic term
        for (k, r) in res.iter().enumerate() {
            let l4 = 0.5 * (trace.l4_quartic[k] + trace.l4_quartic[k + 1]);
            assert!((r + 0.25 * l4).abs() < 1e-3 * v, "{r} {l4}");
        }
    }

    #[test]
    fn residual_rejects_sparse_traces() {
        let u0 = random_field(8, 1, 1.0);
        let p = params(System::Temam, 0.1, 1.0).with_record_every(2).unwrap();
        let trace = run(&u0, &p).unwrap();
        assert!(energy_inequality_residual(&trace, &p).is_err());
    }

    #[test]
    fn blowup_is_detected() {
        let u0 = random_field(8, 1, 400.0);
        let p = params(System::Temam, 0.5, 5.0);
        match run(&u0, &p) {
            Err(Error::NumericalAbort { .. }) => {}
            other => panic!("expected abort, got {:?}", other.map(|t| t.l2_sq)),
        }
    }
}

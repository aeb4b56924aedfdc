//! Periodic-box spectral representation of real 3-component vector fields.
//!
//! Coefficients are Fourier-series coefficients on the box `[0, L)³`:
//! `u(x) = Σ_k c_k e^{ik·x}` with `k ∈ (2π/L) ℤ³`. Under this convention
//! Plancherel reads `‖u‖²_{L²(box)} = L³ Σ_k |c_k|²`, and every norm and shell
//! statistic in the crate uses that single constant.
//!
//! Fields are stored on the full complex lattice (not a half spectrum) with
//! Hermitian symmetry `c(-k) = conj c(k)` enforced when a field is built.

mod fft;

use num_complex::Complex;
use num_traits::Zero;

use crate::{Error, Real, Result};

pub use fft::FftWorkspace;

/// Tolerance on `|c(-k) - conj c(k)|` (relative to the largest coefficient)
/// accepted when building a field from raw coefficients.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// A cubic periodic grid with `n` modes per axis on a box of side `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    n: usize,
    box_length: T,
    dealias_fraction: T,
}

impl<T: Real> GridSpec<T> {
    /// Grid with the standard 2/3 dealiasing fraction.
    pub fn new(n: usize, box_length: T) -> Result<Self> {
        Self::with_dealias(n, box_length, T::of(2.0) / T::of(3.0))
    }

    pub fn with_dealias(n: usize, box_length: T, dealias_fraction: T) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "grid size must be even and at least 4, got {n}"
            )));
        }
        if !(box_length > T::zero()) || !box_length.is_finite() {
            return Err(Error::invalid(format!("box length must be positive, got {box_length}")));
        }
        if !(dealias_fraction > T::zero() && dealias_fraction <= T::one()) {
            return Err(Error::invalid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(Self {
            n,
            box_length,
            dealias_fraction,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> T {
        self.box_length
    }

    pub fn dealias_fraction(&self) -> T {
        self.dealias_fraction
    }

    /// Number of lattice points, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> T {
        self.box_length * self.box_length * self.box_length
    }

    pub fn spacing(&self) -> T {
        self.box_length / T::of_usize(self.n)
    }

    /// Smallest nonzero wavenumber `2π/L`.
    pub fn k_min(&self) -> T {
        T::TAU() / self.box_length
    }

    /// Nyquist wavenumber `πn/L`.
    pub fn nyquist(&self) -> T {
        T::PI() * T::of_usize(self.n) / self.box_length
    }

    /// Largest wavenumber magnitude kept by dealiasing.
    pub fn cutoff(&self) -> T {
        self.dealias_fraction * self.nyquist()
    }

    /// Cutoff in lattice units squared, with a hair of slack so that lattice
    /// points sitting exactly on the sphere are retained.
    fn cutoff_lattice_sq(&self) -> f64 {
        let c = self.dealias_fraction.to_f64_lossy() * self.n as f64 / 2.0;
        c * c * (1.0 + 1e-12)
    }

    /// Signed frequency for an axis index (`fftfreq` convention).
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Integer lattice vector of a flat index.
    #[inline]
    pub fn lattice(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.signed_index(idx / (n * n)),
            self.signed_index((idx / n) % n),
            self.signed_index(idx % n),
        ]
    }

    /// Flat index of an integer lattice vector (taken modulo `n`).
    pub fn flat_index(&self, m: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |v: i64| v.rem_euclid(n) as usize;
        (w(m[0]) * self.n + w(m[1])) * self.n + w(m[2])
    }

    #[inline]
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (a, b, c) = (idx / (n * n), (idx / n) % n, idx % n);
        (((n - a) % n) * n + (n - b) % n) * n + (n - c) % n
    }

    #[inline]
    pub fn lattice_sq(&self, idx: usize) -> i64 {
        let m = self.lattice(idx);
        m[0] * m[0] + m[1] * m[1] + m[2] * m[2]
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [T; 3] {
        let k0 = self.k_min();
        self.lattice(idx).map(|m| k0 * T::of_i64(m))
    }

    /// Whether the mode survives 2/3-rule truncation.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        (self.lattice_sq(idx) as f64) <= self.cutoff_lattice_sq()
    }

    /// Physical coordinates of a flat grid index.
    pub fn position(&self, idx: usize) -> [T; 3] {
        let n = self.n;
        let h = self.spacing();
        [idx / (n * n), (idx / n) % n, idx % n].map(|i| h * T::of_usize(i))
    }
}

/// Real vector field sampled on the `n³` collocation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField<T> {
    grid: GridSpec<T>,
    data: [Vec<T>; 3],
}

impl<T: Real> PhysicalField<T> {
    pub fn new(grid: GridSpec<T>, data: [Vec<T>; 3]) -> Result<Self> {
        for (c, d) in data.iter().enumerate() {
            if d.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "component {c} has {} samples, grid needs {}",
                    d.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        let len = grid.len();
        Self {
            grid,
            data: [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: GridSpec<T>, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.position(idx));
            for c in 0..3 {
                out.data[c][idx] = v[c];
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[T] {
        &self.data[c]
    }

    pub fn into_components(self) -> [Vec<T>; 3] {
        self.data
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x - *y).abs()))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Grid quadrature of `|u|²` over the box.
    pub fn l2_sq(&self) -> T {
        let sum: T = (0..self.grid.len())
            .map(|i| (0..3).map(|c| self.data[c][i] * self.data[c][i]).sum::<T>())
            .sum();
        sum * self.grid.volume() / T::of_usize(self.grid.len())
    }
}

/// The four quadratic/quartic quantities entering the energy inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms<T> {
    pub l2_sq: T,
    pub grad_sq: T,
    pub div_sq: T,
    pub l4_quartic: T,
}

/// Cumulative spectral energy inside balls of increasing radius.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellMass<T> {
    pub radii: Vec<T>,
    pub mass: Vec<T>,
}

/// Fourier coefficients of a real 3-component field on a periodic box.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    grid: GridSpec<T>,
    coeffs: [Vec<Complex<T>>; 3],
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: GridSpec<T>) -> Self {
        let len = grid.len();
        let z = vec![Complex::zero(); len];
        Self {
            grid,
            coeffs: [z.clone(), z.clone(), z],
        }
    }

    /// Builds a field from raw coefficients, rejecting arrays that are not
    /// Hermitian-symmetric to [`SYMMETRY_TOLERANCE`] and then symmetrizing
    /// exactly.
    pub fn from_coefficients(grid: GridSpec<T>, coeffs: [Vec<Complex<T>>; 3]) -> Result<Self> {
        for (c, v) in coeffs.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "component {c} has {} coefficients, grid needs {}",
                    v.len(),
                    grid.len()
                )));
            }
        }
        let scale = coeffs
            .iter()
            .flatten()
            .fold(T::zero(), |m, z| m.max(z.norm()))
            .max(T::min_positive_value());
        let tol = T::of(SYMMETRY_TOLERANCE) * scale;
        let mut coeffs = coeffs;
        for comp in coeffs.iter_mut() {
            for idx in 0..grid.len() {
                let m = grid.mirror_index(idx);
                if m < idx {
                    continue;
                }
                let a = comp[idx];
                let b = comp[m].conj();
                if (a - b).norm() > tol || !a.re.is_finite() || !a.im.is_finite() {
                    return Err(Error::invalid(format!(
                        "coefficients violate Hermitian symmetry at lattice point {:?}",
                        grid.lattice(idx)
                    )));
                }
                let avg = (a + b) * T::of(0.5);
                comp[idx] = avg;
                comp[m] = avg.conj();
            }
        }
        Ok(Self { grid, coeffs })
    }

    /// Builds a field from a list of modes; each entry also sets its
    /// conjugate partner at `-k`. Repeated entries overwrite.
    pub fn from_modes(grid: GridSpec<T>, modes: &[([i64; 3], [Complex<T>; 3])]) -> Result<Self> {
        let mut field = Self::zeros(grid);
        for (m, c) in modes {
            let idx = grid.flat_index(*m);
            if grid.lattice(idx) != *m {
                return Err(Error::invalid(format!(
                    "lattice point {m:?} is not representable on an n = {} grid",
                    grid.n()
                )));
            }
            let mirror = grid.mirror_index(idx);
            for comp in 0..3 {
                if mirror == idx {
                    field.coeffs[comp][idx] = Complex::new(c[comp].re, T::zero());
                } else {
                    field.coeffs[comp][idx] = c[comp];
                    field.coeffs[comp][mirror] = c[comp].conj();
                }
            }
        }
        Ok(field)
    }

    /// Internal constructor for operations that preserve symmetry by
    /// construction (even real multipliers, `ik` derivatives, packed FFTs).
    pub(crate) fn from_parts(grid: GridSpec<T>, coeffs: [Vec<Complex<T>>; 3]) -> Self {
        debug_assert!(coeffs.iter().all(|c| c.len() == grid.len()));
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex<T>] {
        &self.coeffs[c]
    }

    pub(crate) fn components(&self) -> &[Vec<Complex<T>>; 3] {
        &self.coeffs
    }

    pub(crate) fn into_components(self) -> [Vec<Complex<T>>; 3] {
        self.coeffs
    }

    #[inline]
    pub fn mode(&self, idx: usize) -> [Complex<T>; 3] {
        [self.coeffs[0][idx], self.coeffs[1][idx], self.coeffs[2][idx]]
    }

    pub fn mode_at(&self, m: [i64; 3]) -> [Complex<T>; 3] {
        self.mode(self.grid.flat_index(m))
    }

    /// Applies a per-mode map. The map must commute with conjugation under
    /// `k -> -k` (true for real even multipliers and for `ik` factors), which
    /// keeps the result Hermitian.
    pub(crate) fn map_modes(&self, f: impl Fn(usize, [Complex<T>; 3]) -> [Complex<T>; 3]) -> Self {
        let mut out = Self::zeros(self.grid);
        for idx in 0..self.grid.len() {
            let v = f(idx, self.mode(idx));
            for c in 0..3 {
                out.coeffs[c][idx] = v[c];
            }
        }
        out
    }

    /// Truncation to the dealiasing sphere.
    pub fn dealiased(&self) -> Self {
        let grid = self.grid;
        self.map_modes(|idx, v| if grid.is_retained(idx) { v } else { [Complex::zero(); 3] })
    }

    pub fn is_dealiased(&self) -> bool {
        (0..self.grid.len())
            .filter(|&i| !self.grid.is_retained(i))
            .all(|i| self.mode(i).iter().all(|z| z.is_zero()))
    }

    pub fn scaled(&self, factor: T) -> Self {
        self.map_modes(|_, v| v.map(|z| z * factor))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::invalid("fields live on different grids"));
        }
        Ok(self.map_modes(|idx, v| {
            let w = other.mode(idx);
            [v[0] - w[0], v[1] - w[1], v[2] - w[2]]
        }))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x - *y).norm()))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().flatten().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest Hermitian-symmetry defect `|c(-k) - conj c(k)|`.
    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        for comp in &self.coeffs {
            for idx in 0..self.grid.len() {
                let m = self.grid.mirror_index(idx);
                worst = worst.max((comp[idx] - comp[m].conj()).norm());
            }
        }
        worst
    }

    #[inline]
    fn mode_energy(&self, idx: usize) -> T {
        self.coeffs.iter().map(|c| c[idx].norm_sqr()).sum()
    }

    /// `L³ Σ |c_k|²`.
    pub fn l2_sq(&self) -> T {
        let s: T = (0..self.grid.len()).map(|i| self.mode_energy(i)).sum();
        s * self.grid.volume()
    }

    /// `L³ Σ |k|² |c_k|²`.
    pub fn grad_sq(&self) -> T {
        let k0 = self.grid.k_min();
        let s: T = (0..self.grid.len())
            .map(|i| T::of_i64(self.grid.lattice_sq(i)) * self.mode_energy(i))
            .sum();
        s * k0 * k0 * self.grid.volume()
    }

    /// `L³ Σ |k·c_k|²`.
    pub fn div_sq(&self) -> T {
        let s: T = (0..self.grid.len())
            .map(|i| {
                let k = self.grid.wavevector(i);
                let v = self.mode(i);
                (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]).norm_sqr()
            })
            .sum();
        s * self.grid.volume()
    }

    /// All four energy-inequality quantities. Allocates FFT plans; reuse a
    /// [`SpectralWorkspace`] when calling repeatedly.
    pub fn norms(&self) -> Norms<T> {
        SpectralWorkspace::new(self.grid).norms(self)
    }

    /// Spectral energy per integer shell `|m|² = j`, with `m = k / k_min`.
    /// Bucket `j` holds `L³ Σ_{|m|²=j} |m k_min|^{2s} |c_k|²`.
    pub fn shell_buckets(&self, s: T) -> Vec<T> {
        let half = (self.grid.n / 2) as i64;
        let mut buckets = vec![T::zero(); (3 * half * half + 1) as usize];
        for idx in 0..self.grid.len() {
            let e = self.mode_energy(idx);
            if e > T::zero() {
                buckets[self.grid.lattice_sq(idx) as usize] = buckets[self.grid.lattice_sq(idx) as usize] + e;
            }
        }
        let vol = self.grid.volume();
        let k0sq = self.grid.k_min() * self.grid.k_min();
        for (j, b) in buckets.iter_mut().enumerate() {
            let weight = if s == T::zero() {
                T::one()
            } else if j == 0 {
                T::zero()
            } else {
                (k0sq * T::of_usize(j)).powf(s)
            };
            *b = *b * weight * vol;
        }
        buckets
    }

    /// Cumulative energy `S(ρ) = Σ_{|k|≤ρ} L³|c_k|²` at each radius.
    pub fn shell_mass(&self, radii: &[T]) -> Result<ShellMass<T>> {
        validate_radii(&self.grid, radii)?;
        let buckets = self.shell_buckets(T::zero());
        Ok(ShellMass {
            radii: radii.to_vec(),
            mass: cumulative_at(&self.grid, &buckets, radii),
        })
    }
}

fn validate_radii<T: Real>(grid: &GridSpec<T>, radii: &[T]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::invalid("no radii given"));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] >= T::zero()) {
        return Err(Error::invalid("radii must be nonnegative and strictly increasing"));
    }
    let cutoff = grid.cutoff() * T::of(1.0 + 1e-12);
    if radii[radii.len() - 1] > cutoff {
        return Err(Error::invalid(format!(
            "radius {} exceeds the retained-wavenumber cutoff {}",
            radii[radii.len() - 1],
            grid.cutoff()
        )));
    }
    Ok(())
}

/// Sums integer-shell buckets up to each radius.
pub(crate) fn cumulative_at<T: Real>(grid: &GridSpec<T>, buckets: &[T], radii: &[T]) -> Vec<T> {
    let mut prefix = Vec::with_capacity(buckets.len());
    let mut acc = T::zero();
    for &b in buckets {
        acc = acc + b;
        prefix.push(acc);
    }
    let k0 = grid.k_min().to_f64_lossy();
    radii
        .iter()
        .map(|&r| {
            let m = r.to_f64_lossy() / k0;
            let j = (m * m * (1.0 + 1e-12)).floor();
            let j = (j.max(0.0) as usize).min(prefix.len() - 1);
            prefix[j]
        })
        .collect()
}

/// FFT plans plus scratch fields for one grid.
pub struct SpectralWorkspace<T: Real> {
    grid: GridSpec<T>,
    fft: FftWorkspace<T>,
}

impl<T: Real> SpectralWorkspace<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        Self {
            grid,
            fft: FftWorkspace::new(grid.n()),
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub(crate) fn fft(&mut self) -> &mut FftWorkspace<T> {
        &mut self.fft
    }

    pub fn forward(&mut self, samples: &PhysicalField<T>) -> Result<SpectralField<T>> {
        if samples.grid.n() != self.grid.n() {
            return Err(Error::invalid("samples and workspace use different grids"));
        }
        let len = self.grid.len();
        let mut c0 = vec![Complex::zero(); len];
        let mut c1 = vec![Complex::zero(); len];
        let mut c2 = vec![Complex::zero(); len];
        self.fft
            .forward_pair(&samples.data[0], Some(&samples.data[1]), &mut c0, Some(&mut c1));
        self.fft.forward_pair(&samples.data[2], None, &mut c2, None);
        Ok(SpectralField::from_parts(samples.grid, [c0, c1, c2]))
    }

    pub fn inverse(&mut self, field: &SpectralField<T>) -> PhysicalField<T> {
        let mut out = PhysicalField::zeros(field.grid);
        let [d0, d1, d2] = &mut out.data;
        let c = &field.coeffs;
        self.fft.inverse_pair(&c[0], Some(&c[1]), d0, Some(d1));
        self.fft.inverse_pair(&c[2], None, d2, None);
        out
    }

    /// Norms of a field; the quartic term is the grid quadrature of `|u|⁴`
    /// for the dealiased field.
    pub fn norms(&mut self, field: &SpectralField<T>) -> Norms<T> {
        let physical = self.inverse(&field.dealiased());
        let n3 = physical.grid.len();
        let quartic: T = (0..n3)
            .map(|i| {
                let s: T = (0..3).map(|c| physical.data[c][i] * physical.data[c][i]).sum();
                s * s
            })
            .sum();
        Norms {
            l2_sq: field.l2_sq(),
            grad_sq: field.grad_sq(),
            div_sq: field.div_sq(),
            l4_quartic: quartic * field.grid.volume() / T::of_usize(n3),
        }
    }
}

/// Forward transform of grid samples to normalized Fourier coefficients.
pub fn forward_transform<T: Real>(samples: &PhysicalField<T>) -> Result<SpectralField<T>> {
    SpectralWorkspace::new(samples.grid).forward(samples)
}

/// Inverse transform to real grid samples.
pub fn inverse_transform<T: Real>(field: &SpectralField<T>) -> PhysicalField<T> {
    SpectralWorkspace::new(field.grid).inverse(field)
}

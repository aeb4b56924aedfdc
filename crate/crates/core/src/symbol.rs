//! The linear part `Lu = Δu + (1/ε)∇div u` of both compressible systems.
//!
//! Per wavevector ξ the operator acts through the symmetric matrix
//! `M(ξ) = -|ξ|² I - (1/ε) ξξᵀ`. Its semigroup is applied in projector form,
//!
//! ```text
//! e^{tM(ξ)} = e^{-t|ξ|²} I - Π(ξ) (e^{-t|ξ|²} - e^{-(1+1/ε)t|ξ|²}),   Π = ξξᵀ/|ξ|²
//! ```
//!
//! so solenoidal components decay like the heat kernel and gradient
//! components with the enhanced rate `(1 + 1/ε)|ξ|²`. At ξ = 0 the propagator
//! is the identity. For a fractional dissipation `|ξ|^{2a}` the linear decay
//! exponents would pick up a `1/a` factor; only `a = 1` occurs here.

use num_complex::Complex;
use num_traits::Zero;

use crate::spectral::SpectralField;
use crate::{Error, Real, Result};

pub type Matrix3<T> = [[T; 3]; 3];

/// `M(ξ)` for a given wavevector and ε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolMatrix<T>(pub Matrix3<T>);

/// `e^{tM(ξ)}` for a given wavevector, time and ε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorMatrix<T>(pub Matrix3<T>);

impl<T: Real> PropagatorMatrix<T> {
    pub fn apply(&self, v: [Complex<T>; 3]) -> [Complex<T>; 3] {
        let m = &self.0;
        std::array::from_fn(|i| v[0] * m[i][0] + v[1] * m[i][1] + v[2] * m[i][2])
    }
}

pub(crate) fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps > T::zero() && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps must be positive, got {eps}")))
    }
}

#[inline]
fn norm_sq<T: Real>(xi: &[T; 3]) -> T {
    xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
}

pub fn symbol<T: Real>(xi: [T; 3], eps: T) -> Result<SymbolMatrix<T>> {
    check_eps(eps)?;
    let kk = norm_sq(&xi);
    let inv_eps = eps.recip();
    Ok(SymbolMatrix(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let diag = if i == j { kk } else { T::zero() };
            -diag - inv_eps * (xi[i.min(j)] * xi[i.max(j)])
        })
    })))
}

/// Decay factors `(e^{-t|ξ|²}, e^{-(1+1/ε)t|ξ|²})` of the two eigenbranches.
#[inline]
pub(crate) fn branch_factors<T: Real>(kk: T, t: T, eps: T) -> (T, T) {
    let heat = (-t * kk).exp();
    let grad = (-(T::one() + eps.recip()) * t * kk).exp();
    (heat, grad)
}

/// Applies `e^{tM(ξ)}` to one coefficient vector given the precomputed branch
/// factors. Shared by the field propagator and the time stepper.
#[inline]
pub(crate) fn propagate_mode<T: Real>(xi: &[T; 3], kk: T, heat: T, grad: T, v: [Complex<T>; 3]) -> [Complex<T>; 3] {
    if kk == T::zero() {
        return v;
    }
    let dot = v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2];
    let proj = dot * ((grad - heat) / kk);
    [
        v[0] * heat + proj * xi[0],
        v[1] * heat + proj * xi[1],
        v[2] * heat + proj * xi[2],
    ]
}

pub fn propagator<T: Real>(xi: [T; 3], t: T, eps: T) -> Result<PropagatorMatrix<T>> {
    check_eps(eps)?;
    if !(t >= T::zero()) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let kk = norm_sq(&xi);
    if kk == T::zero() {
        return Ok(PropagatorMatrix(std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { T::one() } else { T::zero() })
        })));
    }
    let (heat, grad) = branch_factors(kk, t, eps);
    Ok(PropagatorMatrix(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let diag = if i == j { heat } else { T::zero() };
            diag - xi[i.min(j)] * xi[i.max(j)] / kk * (heat - grad)
        })
    })))
}

/// Exact linear flow `e^{tL}` applied coefficientwise.
pub fn apply_propagator<T: Real>(field: &SpectralField<T>, t: T, eps: T) -> Result<SpectralField<T>> {
    check_eps(eps)?;
    if !(t >= T::zero()) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let grid = *field.grid();
    let k0sq = grid.k_min() * grid.k_min();
    Ok(field.map_modes(|idx, v| {
        let kk = k0sq * T::of_i64(grid.lattice_sq(idx));
        let (heat, grad) = branch_factors(kk, t, eps);
        propagate_mode(&grid.wavevector(idx), kk, heat, grad, v)
    }))
}

/// `Λˢ = (-Δ)^{s/2}`: multiplies the coefficient at `k` by `|k|ˢ`; the mean
/// mode is zeroed.
pub fn apply_fractional_laplacian<T: Real>(field: &SpectralField<T>, s: T) -> Result<SpectralField<T>> {
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::invalid(format!("fractional order must be positive, got {s}")));
    }
    let grid = *field.grid();
    let k0sq = grid.k_min() * grid.k_min();
    let half = s * T::of(0.5);
    Ok(field.map_modes(|idx, v| {
        let m2 = grid.lattice_sq(idx);
        if m2 == 0 {
            return [Complex::zero(); 3];
        }
        let factor = (k0sq * T::of_i64(m2)).powf(half);
        v.map(|z| z * factor)
    }))
}

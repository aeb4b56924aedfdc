use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::Real;

const BLOCK: usize = 16;

/// Cached 3-D FFT plans and scratch space for one cubic grid size.
///
/// Real fields are always transformed two at a time by packing them into the
/// real and imaginary parts of one complex array. Unpacking after a forward
/// transform combines `Z(k)` with `conj Z(-k)`, so the coefficients it
/// produces are Hermitian-symmetric by construction rather than up to
/// rounding.
pub struct FftWorkspace<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    work: Vec<Complex<T>>,
    transposed: Vec<Complex<T>>,
    mirror: Vec<u32>,
}

impl<T: Real> FftWorkspace<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let len = n * n * n;
        let mut mirror = Vec::with_capacity(len);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let m = (((n - a) % n) * n + (n - b) % n) * n + (n - c) % n;
                    mirror.push(m as u32);
                }
            }
        }
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex::zero(); scratch_len],
            work: vec![Complex::zero(); len],
            transposed: vec![Complex::zero(); len],
            mirror,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Inverse transform of up to two Hermitian coefficient arrays into real
    /// samples (unnormalized sum, i.e. `u(x) = Σ c_k e^{ik·x}`).
    pub fn inverse_pair(
        &mut self,
        a: &[Complex<T>],
        b: Option<&[Complex<T>]>,
        out_a: &mut [T],
        out_b: Option<&mut [T]>,
    ) {
        let i = Complex::new(T::zero(), T::one());
        match b {
            Some(b) => {
                for ((w, &x), &y) in self.work.iter_mut().zip(a).zip(b) {
                    *w = x + i * y;
                }
            }
            None => self.work.copy_from_slice(a),
        }
        let plan = Arc::clone(&self.inverse);
        self.transform(plan.as_ref());
        for (o, w) in out_a.iter_mut().zip(&self.work) {
            *o = w.re;
        }
        if let Some(out_b) = out_b {
            for (o, w) in out_b.iter_mut().zip(&self.work) {
                *o = w.im;
            }
        }
    }

    /// Forward transform of up to two real sample arrays into normalized
    /// Fourier-series coefficients `c_k = n⁻³ Σ_x u(x) e^{-ik·x}`.
    pub fn forward_pair(
        &mut self,
        a: &[T],
        b: Option<&[T]>,
        out_a: &mut [Complex<T>],
        out_b: Option<&mut [Complex<T>]>,
    ) {
        match b {
            Some(b) => {
                for ((w, &x), &y) in self.work.iter_mut().zip(a).zip(b) {
                    *w = Complex::new(x, y);
                }
            }
            None => {
                for (w, &x) in self.work.iter_mut().zip(a) {
                    *w = Complex::new(x, T::zero());
                }
            }
        }
        let plan = Arc::clone(&self.forward);
        self.transform(plan.as_ref());
        let half = T::of(0.5) / T::of_usize(self.n * self.n * self.n);
        let work = &self.work;
        let mirror = &self.mirror;
        for (idx, o) in out_a.iter_mut().enumerate() {
            let z = work[idx];
            let zm = work[mirror[idx] as usize].conj();
            *o = (z + zm) * half;
        }
        if let Some(out_b) = out_b {
            // B(k) = (Z(k) - conj Z(-k)) / 2i
            for (idx, o) in out_b.iter_mut().enumerate() {
                let d = work[idx] - work[mirror[idx] as usize].conj();
                *o = Complex::new(d.im, -d.re) * half;
            }
        }
    }

    fn transform(&mut self, plan: &dyn Fft<T>) {
        let n = self.n;
        let n2 = n * n;
        // last axis is contiguous
        plan.process_with_scratch(&mut self.work, &mut self.scratch);

        // middle axis: transpose each n x n slab
        for (src, dst) in self.work.chunks(n2).zip(self.transposed.chunks_mut(n2)) {
            transpose(src, dst, n, n);
        }
        plan.process_with_scratch(&mut self.transposed, &mut self.scratch);
        for (src, dst) in self.transposed.chunks(n2).zip(self.work.chunks_mut(n2)) {
            transpose(src, dst, n, n);
        }

        // first axis: view as n x n² and transpose
        transpose(&self.work, &mut self.transposed, n, n2);
        plan.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, &mut self.work, n2, n);
    }
}

/// Blocked out-of-place transpose of a row-major `rows x cols` matrix.
fn transpose<C: Copy>(src: &[C], dst: &mut [C], rows: usize, cols: usize) {
    for r0 in (0..rows).step_by(BLOCK) {
        let r1 = (r0 + BLOCK).min(rows);
        for c0 in (0..cols).step_by(BLOCK) {
            let c1 = (c0 + BLOCK).min(cols);
            for r in r0..r1 {
                for c in c0..c1 {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_rectangular() {
        let src: Vec<usize> = (0..6 * 20).collect();
        let mut dst = vec![0; 120];
        transpose(&src, &mut dst, 6, 20);
        for r in 0..6 {
            for c in 0..20 {
                assert_eq!(dst[c * 6 + r], src[r * 20 + c]);
            }
        }
    }

    #[test]
    fn packed_forward_matches_naive_dft() {
        let n = 4;
        let len = n * n * n;
        let a: Vec<f64> = (0..len).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..len).map(|i| ((i * 5 + 1) % 13) as f64 * 0.25).collect();
        let mut ws = FftWorkspace::<f64>::new(n);
        let mut ca = vec![Complex::zero(); len];
        let mut cb = vec![Complex::zero(); len];
        ws.forward_pair(&a, Some(&b), &mut ca, Some(&mut cb));

        let tau = std::f64::consts::TAU;
        let at = |i: usize| (i / (n * n), (i / n) % n, i % n);
        for k in 0..len {
            let (k0, k1, k2) = at(k);
            let mut sa = Complex::new(0.0, 0.0);
            let mut sb = Complex::new(0.0, 0.0);
            for x in 0..len {
                let (x0, x1, x2) = at(x);
                let phase = -tau * ((k0 * x0 + k1 * x1 + k2 * x2) as f64) / n as f64;
                let e = Complex::new(phase.cos(), phase.sin());
                sa += e * a[x];
                sb += e * b[x];
            }
            sa /= len as f64;
            sb /= len as f64;
            assert!((sa - ca[k]).norm() < 1e-12);
            assert!((sb - cb[k]).norm() < 1e-12);
        }
    }
}

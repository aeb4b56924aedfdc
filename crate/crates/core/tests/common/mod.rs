//! Oracles shared by the integration tests. Everything here is computed from
//! first principles and does not call into the solver's own kernels.
#![allow(dead_code)]

use decaylab::spectral::{GridSpec, SpectralField};
use num_complex::Complex;

pub type M3 = [[f64; 3]; 3];

fn matmul(a: &M3, b: &M3) -> M3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn inf_norm(a: &M3) -> f64 {
    a.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring with a Taylor series on the scaled matrix.
pub fn expm(a: &M3) -> M3 {
    let norm = inf_norm(a);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let b: M3 = a.map(|r| r.map(|x| x * scale));
    let mut term: M3 = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }));
    let mut sum = term;
    for k in 1..=24 {
        term = matmul(&term, &b).map(|r| r.map(|x| x / k as f64));
        for i in 0..3 {
            for j in 0..3 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// `t (Δ + ε⁻¹∇div)` in Fourier variables: `-t(|ξ|² I + ε⁻¹ ξξᵀ)`.
pub fn generator(xi: [f64; 3], t: f64, eps: f64) -> M3 {
    let kk: f64 = xi.iter().map(|x| x * x).sum();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let d = if i == j { kk } else { 0.0 };
            -t * (d + xi[i] * xi[j] / eps)
        })
    })
}

/// `-N(u)` for `N_i = ∂_j(u_i u_j) + c (div u) u_i + α |u|² u_i`, by direct
/// convolution over the retained modes. Quadratic sums are plain; the cubic
/// term wraps indices mod n, as a pointwise product on the grid does.
pub fn brute_rhs(u: &SpectralField<f64>, c: f64, alpha: f64) -> Vec<([i64; 3], [Complex<f64>; 3])> {
    let g = *u.grid();
    let n = g.n() as i64;
    let k0 = g.k_min();
    let i = Complex::new(0.0, 1.0);
    let modes: Vec<([i64; 3], [Complex<f64>; 3])> = (0..g.len())
        .filter(|&j| g.is_retained(j))
        .map(|j| (g.lattice(j), u.mode(j)))
        .filter(|(_, v)| v.iter().any(|z| z.norm() > 0.0))
        .collect();
    let wrap = |x: i64| -> i64 {
        let r = x.rem_euclid(n);
        if r >= n / 2 {
            r - n
        } else {
            r
        }
    };
    let key = |m: [i64; 3]| m.map(wrap);
    let mut quad = std::collections::HashMap::<[i64; 3], [[Complex<f64>; 3]; 3]>::new();
    let mut divu = std::collections::HashMap::<[i64; 3], [Complex<f64>; 3]>::new();
    for (p, up) in &modes {
        for (q, uq) in &modes {
            let m = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            let e = quad.entry(m).or_insert([[Complex::new(0.0, 0.0); 3]; 3]);
            for a in 0..3 {
                for b in 0..3 {
                    e[a][b] += up[a] * uq[b];
                }
            }
            let dp = i * k0 * (up[0] * p[0] as f64 + up[1] * p[1] as f64 + up[2] * p[2] as f64);
            let d = divu.entry(m).or_insert([Complex::new(0.0, 0.0); 3]);
            for a in 0..3 {
                d[a] += dp * uq[a];
            }
        }
    }
    let mut cubic = std::collections::HashMap::<[i64; 3], [Complex<f64>; 3]>::new();
    if alpha != 0.0 {
        for (p, up) in &modes {
            for (q, uq) in &modes {
                let dot = up[0] * uq[0] + up[1] * uq[1] + up[2] * uq[2];
                for (r, ur) in &modes {
                    let m = key([p[0] + q[0] + r[0], p[1] + q[1] + r[1], p[2] + q[2] + r[2]]);
                    let e = cubic.entry(m).or_insert([Complex::new(0.0, 0.0); 3]);
                    for a in 0..3 {
                        e[a] += dot * ur[a];
                    }
                }
            }
        }
    }
    let zero = [Complex::new(0.0, 0.0); 3];
    (0..g.len())
        .filter(|&j| g.is_retained(j))
        .map(|j| {
            let m = g.lattice(j);
            let kv = m.map(|x| x as f64 * k0);
            let qm = quad.get(&m).copied().unwrap_or([zero; 3]);
            let dm = divu.get(&m).copied().unwrap_or(zero);
            let cm = cubic.get(&m).copied().unwrap_or(zero);
            let v = std::array::from_fn(|a| {
                let adv: Complex<f64> = (0..3).map(|b| i * kv[b] * qm[a][b]).sum();
                -(adv + c * dm[a] + alpha * cm[a])
            });
            (m, v)
        })
        .collect()
}

/// Field with the given nonzero modes; conjugate partners are implied.
pub fn field(grid: GridSpec<f64>, modes: &[([i64; 3], [Complex<f64>; 3])]) -> SpectralField<f64> {
    SpectralField::from_modes(grid, modes).unwrap()
}

/// `|u(t)|` for `u' = -α|u|²u`.
pub fn damping_ode(u0: f64, alpha: f64, t: f64) -> f64 {
    u0 / (1.0 + 2.0 * alpha * u0 * u0 * t).sqrt()
}

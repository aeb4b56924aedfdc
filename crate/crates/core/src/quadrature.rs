//! Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

use crate::{Error, Real, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub panels: usize,
}

#[derive(Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gauss_kronrod<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> Panel<T> {
    let center = (a + b) * T::of(0.5);
    let half = (b - a) * T::of(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::of(WGK[7]);
    let mut gauss = fc * T::of(WG[3]);
    for j in 0..7 {
        let dx = half * T::of(XGK[j]);
        let s = f(center - dx) + f(center + dx);
        kronrod = kronrod + s * T::of(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::of(WG[j / 2]);
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from one panel per
/// consecutive pair of `points` and bisecting the worst panel until the summed
/// error estimate is below `max(rel_tol·|I|, abs_tol)`.
pub fn integrate<T: Real>(
    f: impl Fn(T) -> T,
    points: &[T],
    rel_tol: T,
    abs_tol: T,
    max_panels: usize,
) -> Result<QuadResult<T>> {
    if points.len() < 2 || points.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("quadrature breakpoints must be strictly increasing"));
    }
    let mut panels: Vec<Panel<T>> = points.windows(2).map(|w| gauss_kronrod(&f, w[0], w[1])).collect();
    loop {
        let value: T = panels.iter().map(|p| p.value).sum();
        let error: T = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::invalid("integrand is not finite on the interval"));
        }
        if error <= (rel_tol * value.abs()).max(abs_tol) {
            return Ok(QuadResult {
                value,
                error,
                panels: panels.len(),
            });
        }
        if panels.len() >= max_panels {
            return Err(Error::Inconclusive(format!(
                "quadrature did not converge: estimate {value}, error {error}"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = (p.a + p.b) * T::of(0.5);
        panels.push(gauss_kronrod(&f, p.a, mid));
        panels.push(gauss_kronrod(&f, mid, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| 3.0 * x * x - x + 1.0, &[0.0, 2.0], 1e-14, 0.0, 10).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn gaussian_tail() {
        let r = integrate(|x: f64| (-x * x).exp(), &[0.0, 1.0, 10.0], 1e-12, 0.0, 500).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn integrable_singularity_converges() {
        let r = integrate(|x: f64| x.powf(-0.5), &[0.0, 1.0], 1e-8, 0.0, 2000).unwrap();
        assert!((r.value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_unsorted_points() {
        assert!(integrate(|x: f64| x, &[1.0, 0.0], 1e-8, 0.0, 10).is_err());
    }
}

//! Adaptive Gauss–Kronrod (7/15) quadrature.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    NoConvergence {
        a: f64,
        b: f64,
        tol: f64,
        estimate: f64,
        error: f64,
    },
    #[error("integrand is not finite at {0}")]
    NonFinite(f64),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite(c));
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        if !f1.is_finite() {
            return Err(QuadratureError::NonFinite(c - x));
        }
        if !f2.is_finite() {
            return Err(QuadratureError::NonFinite(c + x));
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive
/// bisection of the worst panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 4000;
    let (v, e) = gk15(&f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol || err <= 4.0 * f64::EPSILON * total.abs() {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(QuadratureError::NoConvergence {
                a,
                b,
                tol,
                estimate: total,
                error: err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&f, pa, mid)?;
        let (v2, e2) = gk15(&f, mid, pb)?;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn reciprocal_affine() {
        let v = integrate(|s| 1.0 / (2.0 + 3.0 * s), 0.0, 50.0, 1e-14).unwrap();
        let exact = (1.0 + 1.5 * 50.0f64).ln() / 3.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn kink_is_resolved() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn non_finite_integrand() {
        assert!(matches!(
            integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10),
            Err(QuadratureError::NonFinite(_)) | Err(QuadratureError::NoConvergence { .. })
        ));
    }
}

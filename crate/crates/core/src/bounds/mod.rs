//! Candidate lower/upper solution curves, their sup-norms and the shifted
//! strips `alpha0 = alpha - |alpha|`, `beta0 = beta + |beta|`.

pub mod exact;

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use exact::{ExactPoly, SturmSequence};

/// Highest polynomial degree accepted for bound curves.
pub const MAX_DEGREE: usize = 16;

const GRID_FALLBACK_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
    #[error("degree {0} exceeds the maximum of {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("bound curves disagree on the period ({0} vs {1})")]
    PeriodMismatch(f64, f64),
    #[error("t = {t} lies outside [0, {period}]")]
    OutOfDomain { t: f64, period: f64 },
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn derive(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

/// Polynomial on `[0, period]`, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFunction {
    coeffs: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    period: f64,
}

impl PolyFunction {
    pub fn new(coeffs: Vec<f64>, period: f64) -> Result<Self, BoundsError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(BoundsError::BadPeriod(period));
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(BoundsError::NonFiniteCoefficient { index });
        }
        let mut coeffs = coeffs;
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        if coeffs.len() - 1 > MAX_DEGREE {
            return Err(BoundsError::DegreeTooHigh(coeffs.len() - 1));
        }
        let d1 = derive(&coeffs);
        let d2 = derive(&d1);
        Ok(PolyFunction { coeffs, d1, d2, period })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self, t: f64) -> f64 {
        horner(&self.coeffs, t)
    }

    pub fn first(&self, t: f64) -> f64 {
        horner(&self.d1, t)
    }

    pub fn second(&self, t: f64) -> f64 {
        horner(&self.d2, t)
    }

    pub fn derivative(&self) -> PolyFunction {
        PolyFunction::new(self.d1.clone(), self.period).expect("derivative of a valid polynomial")
    }

    /// Same polynomial with `c` added to the constant term.
    pub fn add_constant(&self, c: f64) -> PolyFunction {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += c;
        PolyFunction::new(coeffs, self.period).expect("shifted polynomial stays valid")
    }

    pub fn sup_norm(&self) -> SupNorm {
        let candidates = self
            .critical_points()
            .unwrap_or_else(|| grid_critical_points(&|t| self.value(t), self.period));
        let mut best = SupNorm {
            value: self.value(0.0).abs(),
            at: 0.0,
        };
        for t in candidates.into_iter().chain(std::iter::once(self.period)) {
            let v = self.value(t).abs();
            if v > best.value {
                best = SupNorm { value: v, at: t };
            }
        }
        best
    }

    /// Roots of `p'` in `(0, period)`, isolated exactly by a Sturm chain and
    /// bisected to 1e-13 relative width. `None` if isolation gives up.
    fn critical_points(&self) -> Option<Vec<f64>> {
        if self.d1.iter().all(|c| *c == 0.0) {
            return Some(Vec::new());
        }
        let dp = ExactPoly::from_f64(&self.d1)?;
        let sturm = SturmSequence::new(&dp);
        let lo = BigRational::from_float(0.0)?;
        let hi = BigRational::from_float(self.period)?;
        let width = BigRational::from_float(1e-13 * self.period.max(1.0))?;
        let roots = sturm.roots_in_open(&lo, &hi, &width, 400)?;
        roots.iter().map(num_traits::ToPrimitive::to_f64).collect()
    }
}

/// Dense-grid maximiser of `|h|` refined by golden-section search; used when
/// exact root isolation is unavailable.
fn grid_critical_points(h: &dyn Fn(f64) -> f64, period: f64) -> Vec<f64> {
    let n = GRID_FALLBACK_POINTS;
    let step = period / n as f64;
    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..=n {
        let v = h(k as f64 * step).abs();
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let a = (best_k.saturating_sub(1)) as f64 * step;
    let b = ((best_k + 1).min(n)) as f64 * step;
    vec![best_k as f64 * step, golden_max(|t| h(t).abs(), a, b)]
}

fn golden_max(h: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    while (b - a).abs() > 1e-13 * b.abs().max(1.0) {
        if hc > hd {
            b = d;
            d = c;
            hd = hc;
            c = b - inv_phi * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + inv_phi * (b - a);
            hd = h(d);
        }
    }
    0.5 * (a + b)
}

/// `max |u(t)|` and the smallest `t` attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    pub value: f64,
    pub at: f64,
}

pub fn sup_norm(p: &PolyFunction) -> f64 {
    p.sup_norm().value
}

pub fn shift_lower(alpha: &PolyFunction) -> PolyFunction {
    alpha.add_constant(-sup_norm(alpha))
}

pub fn shift_upper(beta: &PolyFunction) -> PolyFunction {
    beta.add_constant(sup_norm(beta))
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Twice-differentiable curve given by value/first/second-derivative closures.
#[derive(Clone)]
pub struct CustomCurve {
    label: String,
    value: Arc<ScalarFn>,
    first: Arc<ScalarFn>,
    second: Arc<ScalarFn>,
    period: f64,
    offset: f64,
}

impl CustomCurve {
    pub fn new(
        label: impl Into<String>,
        period: f64,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        first: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, BoundsError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(BoundsError::BadPeriod(period));
        }
        Ok(CustomCurve {
            label: label.into(),
            value: Arc::new(value),
            first: Arc::new(first),
            second: Arc::new(second),
            period,
            offset: 0.0,
        })
    }
}

impl fmt::Debug for CustomCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomCurve({} {:+})", self.label, self.offset)
    }
}

/// A bound curve: exact polynomial or a general evaluator triple.
#[derive(Debug, Clone)]
pub enum Curve {
    Poly(PolyFunction),
    Custom(CustomCurve),
}

impl From<PolyFunction> for Curve {
    fn from(p: PolyFunction) -> Self {
        Curve::Poly(p)
    }
}

impl From<CustomCurve> for Curve {
    fn from(c: CustomCurve) -> Self {
        Curve::Custom(c)
    }
}

impl Curve {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Curve::Poly(p) => p.value(t),
            Curve::Custom(c) => (c.value)(t) + c.offset,
        }
    }

    pub fn first(&self, t: f64) -> f64 {
        match self {
            Curve::Poly(p) => p.first(t),
            Curve::Custom(c) => (c.first)(t),
        }
    }

    pub fn second(&self, t: f64) -> f64 {
        match self {
            Curve::Poly(p) => p.second(t),
            Curve::Custom(c) => (c.second)(t),
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            Curve::Poly(p) => p.period(),
            Curve::Custom(c) => c.period,
        }
    }

    pub fn as_poly(&self) -> Option<&PolyFunction> {
        match self {
            Curve::Poly(p) => Some(p),
            Curve::Custom(_) => None,
        }
    }

    pub fn sup_norm(&self) -> SupNorm {
        match self {
            Curve::Poly(p) => p.sup_norm(),
            Curve::Custom(_) => {
                let h = |t: f64| self.value(t);
                let mut best = SupNorm {
                    value: h(0.0).abs(),
                    at: 0.0,
                };
                let cands = grid_critical_points(&h, self.period());
                for t in cands.into_iter().chain(std::iter::once(self.period())) {
                    let v = h(t).abs();
                    if v > best.value {
                        best = SupNorm { value: v, at: t };
                    }
                }
                best
            }
        }
    }

    pub fn add_constant(&self, c: f64) -> Curve {
        match self {
            Curve::Poly(p) => Curve::Poly(p.add_constant(c)),
            Curve::Custom(cc) => {
                let mut cc = cc.clone();
                cc.offset += c;
                Curve::Custom(cc)
            }
        }
    }

    /// Extremes of the first derivative on `[0, period]`, sampled on `n` points.
    pub fn derivative_range(&self, n: usize) -> (f64, f64) {
        let n = n.max(2);
        let h = self.period() / (n - 1) as f64;
        (0..n)
            .map(|k| self.first(k as f64 * h))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Inside,
    /// `component` is 1 for `z`, 2 for `w`.
    Outside {
        component: u8,
        side: Side,
    },
}

/// Lower pair `(alpha1, alpha2)`, upper pair `(beta1, beta2)` and their shifts.
#[derive(Debug, Clone)]
pub struct BoundQuadruple {
    alpha: [Curve; 2],
    beta: [Curve; 2],
    alpha0: [Curve; 2],
    beta0: [Curve; 2],
    alpha_norm: [SupNorm; 2],
    beta_norm: [SupNorm; 2],
    period: f64,
}

impl BoundQuadruple {
    pub fn new(
        alpha1: impl Into<Curve>,
        alpha2: impl Into<Curve>,
        beta1: impl Into<Curve>,
        beta2: impl Into<Curve>,
    ) -> Result<Self, BoundsError> {
        let alpha = [alpha1.into(), alpha2.into()];
        let beta = [beta1.into(), beta2.into()];
        let period = alpha[0].period();
        for c in alpha.iter().chain(beta.iter()) {
            if c.period() != period {
                return Err(BoundsError::PeriodMismatch(period, c.period()));
            }
        }
        let alpha_norm = [alpha[0].sup_norm(), alpha[1].sup_norm()];
        let beta_norm = [beta[0].sup_norm(), beta[1].sup_norm()];
        let alpha0 = [
            alpha[0].add_constant(-alpha_norm[0].value),
            alpha[1].add_constant(-alpha_norm[1].value),
        ];
        let beta0 = [
            beta[0].add_constant(beta_norm[0].value),
            beta[1].add_constant(beta_norm[1].value),
        ];
        Ok(BoundQuadruple {
            alpha,
            beta,
            alpha0,
            beta0,
            alpha_norm,
            beta_norm,
            period,
        })
    }

    /// Polynomial bounds from ascending coefficient arrays.
    pub fn from_coeffs(
        alpha1: &[f64],
        alpha2: &[f64],
        beta1: &[f64],
        beta2: &[f64],
        period: f64,
    ) -> Result<Self, BoundsError> {
        let p = |c: &[f64]| PolyFunction::new(c.to_vec(), period);
        Self::new(p(alpha1)?, p(alpha2)?, p(beta1)?, p(beta2)?)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Lower curve for component `i` (0 = z, 1 = w).
    pub fn alpha(&self, i: usize) -> &Curve {
        &self.alpha[i]
    }

    pub fn beta(&self, i: usize) -> &Curve {
        &self.beta[i]
    }

    pub fn alpha0(&self, i: usize) -> &Curve {
        &self.alpha0[i]
    }

    pub fn beta0(&self, i: usize) -> &Curve {
        &self.beta0[i]
    }

    pub fn alpha_norm(&self, i: usize) -> SupNorm {
        self.alpha_norm[i]
    }

    pub fn beta_norm(&self, i: usize) -> SupNorm {
        self.beta_norm[i]
    }

    pub fn check_domain(&self, t: f64) -> Result<(), BoundsError> {
        if (0.0..=self.period).contains(&t) {
            Ok(())
        } else {
            Err(BoundsError::OutOfDomain { t, period: self.period })
        }
    }

    pub fn band_membership(&self, t: f64, z: f64, w: f64) -> Result<Membership, BoundsError> {
        self.check_domain(t)?;
        for (i, x) in [z, w].into_iter().enumerate() {
            let component = i as u8 + 1;
            if x < self.alpha0[i].value(t) {
                return Ok(Membership::Outside {
                    component,
                    side: Side::Below,
                });
            }
            if x > self.beta0[i].value(t) {
                return Ok(Membership::Outside {
                    component,
                    side: Side::Above,
                });
            }
        }
        Ok(Membership::Inside)
    }
}

pub fn band_membership(q: &BoundQuadruple, t: f64, z: f64, w: f64) -> Result<Membership, BoundsError> {
    q.band_membership(t, z, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64]) -> PolyFunction {
        PolyFunction::new(c.to_vec(), 1.0).unwrap()
    }

    fn example() -> BoundQuadruple {
        BoundQuadruple::from_coeffs(
            &[1.0, 0.0, 2.0, -2.0],
            &[0.0, 2.0, -2.0],
            &[1.2, 0.0, -2.0, 2.0],
            &[1.0, -3.0, 3.0],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn sup_norm_interior_maximum() {
        let n = poly(&[1.0, 0.0, 2.0, -2.0]).sup_norm();
        assert!((n.value - 35.0 / 27.0).abs() < 1e-14);
        assert!((n.at - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_trivial_and_endpoint() {
        assert_eq!(sup_norm(&poly(&[0.0])), 0.0);
        assert_eq!(sup_norm(&poly(&[])), 0.0);
        let n = poly(&[1.0, -3.0, 3.0]).sup_norm();
        assert_eq!(n.value, 1.0);
        // tie between t = 0 and t = 1: smallest t wins
        assert_eq!(n.at, 0.0);
    }

    #[test]
    fn shifts_match_reference_example() {
        let a1 = shift_lower(&poly(&[1.0, 0.0, 2.0, -2.0]));
        assert!((a1.coeffs()[0] + 8.0 / 27.0).abs() < 1e-15);
        assert_eq!(&a1.coeffs()[1..], &[0.0, 2.0, -2.0]);
        let a2 = shift_lower(&poly(&[0.0, 2.0, -2.0]));
        assert_eq!(a2.coeffs(), &[-0.5, 2.0, -2.0]);
        let b1 = shift_upper(&poly(&[1.2, 0.0, -2.0, 2.0]));
        assert_eq!(b1.coeffs(), &[2.4, 0.0, -2.0, 2.0]);
        let b2 = shift_upper(&poly(&[1.0, -3.0, 3.0]));
        assert_eq!(b2.coeffs(), &[2.0, -3.0, 3.0]);
        assert_eq!(shift_lower(&poly(&[0.0])).coeffs(), &[0.0]);
        assert_eq!(shift_upper(&poly(&[0.0])).coeffs(), &[0.0]);
    }

    #[test]
    fn membership() {
        let q = example();
        assert_eq!(q.band_membership(0.0, 0.0, 0.0).unwrap(), Membership::Inside);
        assert_eq!(
            q.band_membership(0.0, 10.0, 0.0).unwrap(),
            Membership::Outside {
                component: 1,
                side: Side::Above
            }
        );
        assert_eq!(
            q.band_membership(1.0, -5.0, 0.0).unwrap(),
            Membership::Outside {
                component: 1,
                side: Side::Below
            }
        );
        assert_eq!(
            q.band_membership(0.5, 0.0, 9.0).unwrap(),
            Membership::Outside {
                component: 2,
                side: Side::Above
            }
        );
        assert!(matches!(
            q.band_membership(1.5, 0.0, 0.0),
            Err(BoundsError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn invalid_polynomials() {
        assert!(matches!(
            PolyFunction::new(vec![1.0, f64::NAN], 1.0),
            Err(BoundsError::NonFiniteCoefficient { index: 1 })
        ));
        assert!(matches!(
            PolyFunction::new(vec![1.0; 18], 1.0),
            Err(BoundsError::DegreeTooHigh(17))
        ));
        assert!(PolyFunction::new(vec![1.0], -1.0).is_err());
    }

    #[test]
    fn custom_curve_norm_uses_grid_fallback() {
        use std::f64::consts::TAU;
        let c = CustomCurve::new(
            "sin",
            1.0,
            |t| (TAU * t).sin(),
            |t| TAU * (TAU * t).cos(),
            |t| -TAU * TAU * (TAU * t).sin(),
        )
        .unwrap();
        let n = Curve::from(c).sup_norm();
        assert!((n.value - 1.0).abs() < 1e-12);
        assert!((n.at - 0.25).abs() < 1e-6);
    }

    #[test]
    fn repeated_critical_point() {
        // p' = 3 (t - 1/2)^2 has a double root; max |p| is at an endpoint
        let p = poly(&[-0.125, 0.75, -1.5, 1.0]);
        let n = p.sup_norm();
        assert!((n.value - 0.125).abs() < 1e-15);
    }
}

//! Truncations, the auxiliary `(λ, μ)` family and the constants `r1, r2`.
//!
//! The auxiliary field is
//!
//! ```text
//! z'' = z + λ [f(t, δ1(t,z), δ2(t,w), z', w') − δ1(t,z)]
//! w'' = w + μ [g(t, δ1(t,z), δ2(t,w), z', w') − δ2(t,w)]
//! ```
//!
//! where `δi` clamps into the shifted strip `[αi⁰(t), βi⁰(t)]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundQuadruple, Curve};
use crate::certify::{derivative_bound, EnvelopeError, NagumoEnvelope};
use crate::solver::{Field, SolveError, StatePoint, Trajectory};
use crate::system::{CoupledSystem, Point, RhsError, Which};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomotopyError {
    #[error(transparent)]
    Eval(#[from] RhsError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("invalid homotopy parameter: {0}")]
    Config(String),
    #[error("non-finite value while computing r{component} at t = {t}")]
    Unbounded { component: u8, t: f64 },
}

#[derive(Debug, Clone)]
pub struct TruncationBand {
    pub lower: Curve,
    pub upper: Curve,
}

impl TruncationBand {
    pub fn new(lower: Curve, upper: Curve) -> Self {
        TruncationBand { lower, upper }
    }

    /// Band `[αi⁰, βi⁰]` for component `i` (0 = z, 1 = w).
    pub fn from_quadruple(q: &BoundQuadruple, i: usize) -> Self {
        TruncationBand::new(q.alpha0(i).clone(), q.beta0(i).clone())
    }

    pub fn clamp(&self, t: f64, x: f64) -> f64 {
        truncate(self, t, x)
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        self.lower.value(t) <= x && x <= self.upper.value(t)
    }
}

/// `δ(t, x)`: clamp of `x` into `[lower(t), upper(t)]`.
pub fn truncate(band: &TruncationBand, t: f64, x: f64) -> f64 {
    let (lo, hi) = (band.lower.value(t), band.upper.value(t));
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

#[derive(Debug, Clone)]
pub struct AuxiliarySystem {
    pub base: CoupledSystem,
    pub bands: [TruncationBand; 2],
    pub lambda: f64,
    pub mu: f64,
}

fn check_unit(name: &str, v: f64) -> Result<(), HomotopyError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(HomotopyError::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl AuxiliarySystem {
    pub fn new(base: CoupledSystem, q: &BoundQuadruple, lambda: f64, mu: f64) -> Result<Self, HomotopyError> {
        check_unit("lambda", lambda)?;
        check_unit("mu", mu)?;
        Ok(AuxiliarySystem {
            base,
            bands: [
                TruncationBand::from_quadruple(q, 0),
                TruncationBand::from_quadruple(q, 1),
            ],
            lambda,
            mu,
        })
    }

    pub fn with_parameters(&self, lambda: f64, mu: f64) -> Result<Self, HomotopyError> {
        check_unit("lambda", lambda)?;
        check_unit("mu", mu)?;
        Ok(AuxiliarySystem {
            lambda,
            mu,
            ..self.clone()
        })
    }

    pub fn period(&self) -> f64 {
        self.base.period()
    }

    /// `(z'', w'')` of the auxiliary field.
    pub fn aux_rhs(&self, p: &Point) -> Result<(f64, f64), RhsError> {
        let d1 = truncate(&self.bands[0], p.t, p.z0);
        let d2 = truncate(&self.bands[1], p.t, p.w0);
        let clamped = Point::new(p.t, d1, d2, p.z1, p.w1);
        // written as (x − λδ) + λ·f so that an inactive clamp at λ = 1 gives f exactly
        let z = if self.lambda == 0.0 {
            p.z0
        } else {
            (p.z0 - self.lambda * d1) + self.lambda * self.base.f(&clamped)?
        };
        let w = if self.mu == 0.0 {
            p.w0
        } else {
            (p.w0 - self.mu * d2) + self.mu * self.base.g(&clamped)?
        };
        Ok((z, w))
    }
}

pub fn aux_rhs(aux: &AuxiliarySystem, t: f64, z0: f64, w0: f64, z1: f64, w1: f64) -> Result<(f64, f64), RhsError> {
    aux.aux_rhs(&Point::new(t, z0, w0, z1, w1))
}

impl Field for AuxiliarySystem {
    fn accel(&self, t: f64, s: &StatePoint) -> Result<(f64, f64), SolveError> {
        Ok(self.aux_rhs(&s.at(t))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RConfig {
    pub grid_t: usize,
    /// λ (and μ) values where the conditions are evaluated; they are affine in λ.
    pub lambdas: Vec<f64>,
    /// Points across the free derivative interval `[−N*, N*]`.
    pub free_samples: usize,
    pub slack: f64,
}

impl Default for RConfig {
    fn default() -> Self {
        RConfig {
            grid_t: 2001,
            lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            free_samples: 201,
            slack: 1.1,
        }
    }
}

impl RConfig {
    fn validate(&self) -> Result<(), HomotopyError> {
        if self.grid_t < 3 || self.free_samples < 2 {
            return Err(HomotopyError::Config(
                "grid_t >= 3 and free_samples >= 2 required".into(),
            ));
        }
        if !(self.slack >= 1.0 && self.slack.is_finite()) {
            return Err(HomotopyError::Config(format!("slack must be >= 1, got {}", self.slack)));
        }
        for &l in &self.lambdas {
            check_unit("lambda", l)?;
        }
        if self.lambdas.is_empty() {
            return Err(HomotopyError::Config("at least one lambda sample required".into()));
        }
        Ok(())
    }

    fn refined(&self) -> RConfig {
        RConfig {
            grid_t: 2 * self.grid_t - 1,
            free_samples: 2 * self.free_samples - 1,
            ..self.clone()
        }
    }
}

/// Worst slack of each strict inequality; all must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RAudit {
    /// `min λf(t, β⁰, 0, w′) − β1⁰ + r1`.
    pub upper_f: f64,
    /// `min r1 + α1⁰ − λf(t, α⁰, 0, w′)`.
    pub lower_f: f64,
    pub upper_g: f64,
    pub lower_g: f64,
    /// `min(r1 − max β1⁰, r1 + min α1⁰)`.
    pub strip_1: f64,
    pub strip_2: f64,
}

impl RAudit {
    pub fn min_margin(&self) -> f64 {
        [
            self.upper_f,
            self.lower_f,
            self.upper_g,
            self.lower_g,
            self.strip_1,
            self.strip_2,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    pub fn all_positive(&self) -> bool {
        self.min_margin() > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBounds {
    pub r1: f64,
    pub r2: f64,
    /// Smallest admissible values before the slack factor.
    pub r1_star: f64,
    pub r2_star: f64,
    pub slack: f64,
    /// Free-derivative bounds `(N1, N2)` the conditions were checked over.
    pub n_star: (f64, f64),
    /// Margins re-evaluated with `r1, r2` on a twice finer grid.
    pub audit: RAudit,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k == n - 1 {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Per component: max of the required lower bounds on `r` from the upper
/// and lower λ-inequalities, and the strip extremes.
#[derive(Debug, Clone, Copy)]
struct Demands {
    upper: [f64; 2],
    lower: [f64; 2],
    strip: [f64; 2],
}

fn demands(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    n_star: (f64, f64),
    cfg: &RConfig,
) -> Result<Demands, HomotopyError> {
    let ts = linspace(0.0, q.period(), cfg.grid_t);
    let free = [
        linspace(-n_star.1, n_star.1, cfg.free_samples),
        linspace(-n_star.0, n_star.0, cfg.free_samples),
    ];
    let per_t = ts
        .par_iter()
        .map(|&t| -> Result<Demands, HomotopyError> {
            let a = [q.alpha0(0).value(t), q.alpha0(1).value(t)];
            let b = [q.beta0(0).value(t), q.beta0(1).value(t)];
            let mut d = Demands {
                upper: [f64::NEG_INFINITY; 2],
                lower: [f64::NEG_INFINITY; 2],
                strip: [b[0].max(-a[0]), b[1].max(-a[1])],
            };
            for (i, which) in [Which::F, Which::G].into_iter().enumerate() {
                for &v in &free[i] {
                    let (at_beta, at_alpha) = match which {
                        Which::F => (Point::new(t, b[0], b[1], 0.0, v), Point::new(t, a[0], a[1], 0.0, v)),
                        Which::G => (Point::new(t, b[0], b[1], v, 0.0), Point::new(t, a[0], a[1], v, 0.0)),
                    };
                    let fb = sys.eval_rhs(which, &at_beta)?;
                    let fa = sys.eval_rhs(which, &at_alpha)?;
                    for &l in &cfg.lambdas {
                        // r > β⁰ − λ f(β⁰…) and r > λ f(α⁰…) − α⁰
                        d.upper[i] = d.upper[i].max(b[i] - l * fb);
                        d.lower[i] = d.lower[i].max(l * fa - a[i]);
                    }
                }
                if !(d.upper[i].is_finite() && d.lower[i].is_finite()) {
                    return Err(HomotopyError::Unbounded {
                        component: i as u8 + 1,
                        t,
                    });
                }
            }
            Ok(d)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_t.into_iter().fold(
        Demands {
            upper: [f64::NEG_INFINITY; 2],
            lower: [f64::NEG_INFINITY; 2],
            strip: [f64::NEG_INFINITY; 2],
        },
        |mut acc, d| {
            for i in 0..2 {
                acc.upper[i] = acc.upper[i].max(d.upper[i]);
                acc.lower[i] = acc.lower[i].max(d.lower[i]);
                acc.strip[i] = acc.strip[i].max(d.strip[i]);
            }
            acc
        },
    ))
}

/// Smallest `r1, r2` satisfying the strip and λ-inequalities on the grid,
/// with the free derivative over `[−N*, N*]`, multiplied by `cfg.slack`.
pub fn compute_r(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    n_star: (f64, f64),
    cfg: &RConfig,
) -> Result<RBounds, HomotopyError> {
    cfg.validate()?;
    let d = demands(sys, q, n_star, cfg)?;
    let star = |i: usize| d.upper[i].max(d.lower[i]).max(d.strip[i]);
    let (r1_star, r2_star) = (star(0), star(1));
    // r must be positive even when every demand is zero
    let scale = |s: f64| {
        if s > 0.0 {
            cfg.slack * s
        } else {
            cfg.slack * f64::EPSILON
        }
    };
    let (r1, r2) = (scale(r1_star), scale(r2_star));
    let audit = audit_r(sys, q, n_star, r1, r2, &cfg.refined())?;
    Ok(RBounds {
        r1,
        r2,
        r1_star,
        r2_star,
        slack: cfg.slack,
        n_star,
        audit,
    })
}

/// Margins of the strict inequalities for given `r1, r2`.
pub fn audit_r(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    n_star: (f64, f64),
    r1: f64,
    r2: f64,
    cfg: &RConfig,
) -> Result<RAudit, HomotopyError> {
    cfg.validate()?;
    let d = demands(sys, q, n_star, cfg)?;
    Ok(RAudit {
        upper_f: r1 - d.upper[0],
        lower_f: r1 - d.lower[0],
        upper_g: r2 - d.upper[1],
        lower_g: r2 - d.lower[1],
        strip_1: r1 - d.strip[0],
        strip_2: r2 - d.strip[1],
    })
}

/// `N*` and `r` made mutually consistent: `N*` bounds the auxiliary problem
/// with envelopes `φ + 2 r1`, `ψ + 2 r2`, and `r` is computed over `|·| ≤ N*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriConstants {
    /// Bounds from the original envelopes.
    pub n_base: (f64, f64),
    /// Bounds from the augmented envelopes.
    pub n_star: (f64, f64),
    pub r: RBounds,
    pub iterations: usize,
    /// Whether the last pass left `N*` unchanged.
    pub settled: bool,
}

pub const APRIORI_MAX_PASSES: usize = 5;

pub fn apriori_constants(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    env_f: &NagumoEnvelope,
    env_g: &NagumoEnvelope,
    cfg: &RConfig,
) -> Result<AprioriConstants, HomotopyError> {
    let period = q.period();
    let n_base = (derivative_bound(env_f, period)?, derivative_bound(env_g, period)?);
    let mut n = n_base;
    let mut r = compute_r(sys, q, n, cfg)?;
    let mut iterations = 1;
    let mut settled = false;
    while iterations < APRIORI_MAX_PASSES {
        let next = (
            derivative_bound(&env_f.plus_constant(2.0 * r.r1), period)?,
            derivative_bound(&env_g.plus_constant(2.0 * r.r2), period)?,
        );
        iterations += 1;
        let next_r = compute_r(sys, q, next, cfg)?;
        let stable = next_r.r1 <= r.r1 && next_r.r2 <= r.r2;
        n = next;
        if stable {
            // r computed over a wider box can only grow; equality means the
            // augmented bound is consistent with the r used to build it
            r = RBounds { n_star: n, ..r };
            r.audit = audit_r(sys, q, n, r.r1, r.r2, &cfg.refined())?;
            settled = true;
            break;
        }
        r = next_r;
    }
    if !settled {
        let last = (
            derivative_bound(&env_f.plus_constant(2.0 * r.r1), period)?,
            derivative_bound(&env_g.plus_constant(2.0 * r.r2), period)?,
        );
        settled = last.0 <= n.0 && last.1 <= n.1;
        n = (n.0.max(last.0), n.1.max(last.1));
    }
    Ok(AprioriConstants {
        n_base,
        n_star: n,
        r,
        iterations,
        settled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub pass: bool,
    /// `max |z|, max |w|, max |z'|, max |w'|` over the samples.
    pub maxima: [f64; 4],
    /// `r1, r2, N1, N2`.
    pub limits: [f64; 4],
    /// Time of the worst ratio `maximum / limit`.
    pub witness_t: f64,
}

/// The a-priori bounds checked on a computed solution: `|z| < r1`, `|w| < r2`, `|z'| < N1`, `|w'| < N2`.
pub fn verify_apriori(traj: &Trajectory, r: &RBounds, n_star: (f64, f64)) -> AprioriReport {
    let limits = [r.r1, r.r2, n_star.0, n_star.1];
    let mut maxima = [0.0f64; 4];
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for s in traj.samples() {
        let v = s.state.to_array();
        for i in 0..4 {
            maxima[i] = maxima[i].max(v[i].abs());
            let ratio = v[i].abs() / limits[i];
            if ratio > worst.0 {
                worst = (ratio, s.t);
            }
        }
    }
    AprioriReport {
        pass: (0..4).all(|i| maxima[i] < limits[i]),
        maxima,
        limits,
        witness_t: worst.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{builtin_system, Rhs};

    fn example_q() -> BoundQuadruple {
        BoundQuadruple::from_coeffs(
            &[1.0, 0.0, 2.0, -2.0],
            &[0.0, 2.0, -2.0],
            &[1.2, 0.0, -2.0, 2.0],
            &[1.0, -3.0, 3.0],
            1.0,
        )
        .unwrap()
    }

    fn unit_q() -> BoundQuadruple {
        // α ≡ 0 has norm 0; use α ≡ -1/2, β ≡ 1/2 so that α⁰ ≡ -1, β⁰ ≡ 1
        BoundQuadruple::from_coeffs(&[-0.5], &[-0.5], &[0.5], &[0.5], 1.0).unwrap()
    }

    fn zero_system() -> CoupledSystem {
        let z = Rhs::native("zero", |_: &Point| 0.0);
        CoupledSystem::new("zero", z.clone(), z, 1.0).unwrap()
    }

    #[test]
    fn truncation_examples() {
        let q = example_q();
        let band = TruncationBand::from_quadruple(&q, 0);
        assert_eq!(truncate(&band, 0.0, 0.0), 0.0);
        assert_eq!(truncate(&band, 0.0, 10.0), 2.4);
        assert!((truncate(&band, 1.0, -5.0) + 8.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn homotopy_endpoints() {
        let sys = builtin_system("example").unwrap();
        let q = example_q();
        let aux0 = AuxiliarySystem::new(sys.clone(), &q, 0.0, 0.0).unwrap();
        assert_eq!(aux_rhs(&aux0, 0.3, 5.0, -7.0, 1.0, 2.0).unwrap(), (5.0, -7.0));
        let aux1 = aux0.with_parameters(1.0, 1.0).unwrap();
        let p = Point::new(0.4, 0.1, 0.2, -1.0, 3.0);
        let (z, w) = aux1.aux_rhs(&p).unwrap();
        assert_eq!(z, sys.f(&p).unwrap());
        assert_eq!(w, sys.g(&p).unwrap());
    }

    #[test]
    fn clamped_state_uses_band_edge() {
        let sys = builtin_system("example").unwrap();
        let aux = AuxiliarySystem::new(sys.clone(), &example_q(), 1.0, 1.0).unwrap();
        let (z, _) = aux_rhs(&aux, 0.0, 10.0, 0.5, 0.3, -0.2).unwrap();
        let expect = 10.0 + sys.f(&Point::new(0.0, 2.4, 0.5, 0.3, -0.2)).unwrap() - 2.4;
        assert!((z - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_field_constant_bands() {
        let r = compute_r(&zero_system(), &unit_q(), (1.0, 1.0), &RConfig::default()).unwrap();
        assert!((r.r1 - 1.1).abs() < 1e-15);
        assert!((r.r2 - 1.1).abs() < 1e-15);
        assert!(r.audit.all_positive());
    }

    #[test]
    fn example_r_dominates_strip() {
        let sys = builtin_system("example").unwrap();
        let cfg = RConfig {
            grid_t: 401,
            ..RConfig::default()
        };
        let r = compute_r(&sys, &example_q(), (120.0, 700.0), &cfg).unwrap();
        assert!(r.r1 >= 2.4);
        assert!(r.audit.all_positive(), "{:?}", r.audit);
    }

    #[test]
    fn bad_lambda() {
        let sys = builtin_system("example").unwrap();
        assert!(AuxiliarySystem::new(sys, &example_q(), 1.5, 0.0).is_err());
    }

    #[test]
    fn apriori_on_trajectories() {
        let r = compute_r(&zero_system(), &unit_q(), (1.0, 1.0), &RConfig::default()).unwrap();
        let zero = Trajectory::constant(StatePoint::default(), (0.0, 0.0), 1.0, 11);
        assert!(verify_apriori(&zero, &r, (1.0, 1.0)).pass);
        let big = Trajectory::constant(StatePoint::new(r.r1 + 1.0, 0.0, 0.0, 0.0), (0.0, 0.0), 1.0, 11);
        let rep = verify_apriori(&big, &r, (1.0, 1.0));
        assert!(!rep.pass);
        assert_eq!(rep.maxima[0], r.r1 + 1.0);
    }
}

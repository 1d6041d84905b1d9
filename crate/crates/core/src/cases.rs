//! The built-in case studies: systems, candidate bounds, growth envelopes and
//! the reference shifted-bound expressions they are checked against.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bounds::exact::{exact_sup_norm, ExactPoly};
use crate::bounds::{BoundQuadruple, BoundsError};
use crate::certify::NagumoEnvelope;
use crate::solver::Trajectory;
use crate::system::{Builtin, CoupledSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("unknown case `{0}` (expected example, vdp or manufactured_linear)")]
    Unknown(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

pub const CURVE_NAMES: [&str; 4] = ["alpha1", "alpha2", "beta1", "beta2"];
pub const SHIFT_NAMES: [&str; 4] = ["alpha1_0", "alpha2_0", "beta1_0", "beta2_0"];

/// A system with rational polynomial bounds `[α1, α2, β1, β2]` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub builtin: Builtin,
    pub system: CoupledSystem,
    pub exact_bounds: [ExactPoly; 4],
    pub bounds: BoundQuadruple,
    pub env_f: NagumoEnvelope,
    pub env_g: NagumoEnvelope,
    /// Published shifted bounds `[α1⁰, α2⁰, β1⁰, β2⁰]`, when there are any.
    pub reference_shifts: Option<[ExactPoly; 4]>,
}

fn poly(p: &[(i64, i64)]) -> ExactPoly {
    ExactPoly::from_ratios(p)
}

impl CaseStudy {
    pub fn new(builtin: Builtin) -> Result<Self, CaseError> {
        let pi = std::f64::consts::PI;
        let (exact_bounds, env_f, env_g, reference_shifts) = match builtin {
            Builtin::Example => (
                [
                    poly(&[(1, 1), (0, 1), (2, 1), (-2, 1)]),
                    poly(&[(0, 1), (2, 1), (-2, 1)]),
                    poly(&[(6, 5), (0, 1), (-2, 1), (2, 1)]),
                    poly(&[(1, 1), (-3, 1), (3, 1)]),
                ],
                NagumoEnvelope::Affine { a: 94.0 / 5.0, b: 3.0 },
                NagumoEnvelope::Affine { a: 477.0 / 5.0, b: 3.0 },
                Some([
                    poly(&[(-8, 27), (0, 1), (2, 1), (-2, 1)]),
                    poly(&[(-1, 2), (2, 1), (-2, 1)]),
                    poly(&[(12, 5), (0, 1), (-2, 1), (2, 1)]),
                    poly(&[(2, 1), (-3, 1), (3, 1)]),
                ]),
            ),
            Builtin::Vdp => (
                [
                    poly(&[(-1, 1), (1, 1), (-1, 1)]),
                    poly(&[(-3, 4), (1, 1), (-1, 1)]),
                    poly(&[(1, 1), (0, 1), (-1, 2), (1, 2)]),
                    poly(&[(1, 1), (0, 1), (-1, 1), (1, 1)]),
                ],
                NagumoEnvelope::Affine { a: 9.0, b: 3.0 },
                NagumoEnvelope::Affine {
                    a: 3.0 + 4.0 * pi,
                    b: 3.0,
                },
                Some([
                    poly(&[(-5, 4), (1, 1), (-1, 1)]),
                    poly(&[(-1, 1), (1, 1), (-1, 1)]),
                    poly(&[(2, 1), (0, 1), (-1, 2), (1, 2)]),
                    poly(&[(2, 1), (0, 1), (-1, 1), (1, 1)]),
                ]),
            ),
            // Wide constant strips only serve as truncation bands here:
            // |f| <= 2 + |z0| + |z1| <= 3 + |z1| + 1 on |z0| <= 2.
            Builtin::ManufacturedLinear => (
                [poly(&[(-1, 1)]), poly(&[(-1, 1)]), poly(&[(1, 1)]), poly(&[(1, 1)])],
                NagumoEnvelope::Affine { a: 4.0, b: 1.0 },
                NagumoEnvelope::Affine { a: 4.0, b: 1.0 },
                None,
            ),
        };
        let system = builtin.system();
        let f = |i: usize| exact_bounds[i].to_f64();
        let bounds = BoundQuadruple::from_coeffs(&f(0), &f(1), &f(2), &f(3), system.period())?;
        Ok(CaseStudy {
            builtin,
            system,
            exact_bounds,
            bounds,
            env_f,
            env_g,
            reference_shifts,
        })
    }

    pub fn by_name(name: &str) -> Result<Self, CaseError> {
        let builtin = name
            .parse::<Builtin>()
            .map_err(|_| CaseError::Unknown(name.to_string()))?;
        Self::new(builtin)
    }

    pub fn name(&self) -> &'static str {
        self.builtin.name()
    }

    /// `[α1⁰, α2⁰, β1⁰, β2⁰]` in exact arithmetic, or `None` if some norm has
    /// an irrational maximiser.
    pub fn exact_shifts(&self) -> Option<[ExactPoly; 4]> {
        exact_shifts(&self.exact_bounds, &BigRational::from_float(self.system.period())?)
    }

    pub fn shift_comparison(&self) -> Vec<ShiftComparison> {
        let Some(reference) = &self.reference_shifts else {
            return Vec::new();
        };
        let computed = self.exact_shifts();
        (0..4)
            .map(|i| {
                let c = computed.as_ref().map(|c| c[i].clone());
                ShiftComparison {
                    name: SHIFT_NAMES[i].to_string(),
                    computed: c
                        .as_ref()
                        .map(format_poly)
                        .unwrap_or_else(|| "(irrational norm)".into()),
                    reference: format_poly(&reference[i]),
                    matches: c.as_ref() == Some(&reference[i]),
                }
            })
            .collect()
    }

    /// One line per shifted bound that differs from its reference expression.
    pub fn shift_discrepancy_note(&self) -> String {
        self.shift_comparison()
            .iter()
            .filter(|c| !c.matches)
            .map(|c| {
                format!(
                    "{}: computed {} differs from reference {}",
                    c.name, c.computed, c.reference
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// `α − ‖α‖` for the first two and `β + ‖β‖` for the last two.
pub fn exact_shifts(bounds: &[ExactPoly; 4], period: &BigRational) -> Option<[ExactPoly; 4]> {
    let shift = |i: usize| -> Option<ExactPoly> {
        let (norm, _) = exact_sup_norm(&bounds[i], period)?;
        Some(if i < 2 {
            bounds[i].add_constant(&-norm)
        } else {
            bounds[i].add_constant(&norm)
        })
    };
    Some([shift(0)?, shift(1)?, shift(2)?, shift(3)?])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShiftComparison {
    pub name: String,
    pub computed: String,
    pub reference: String,
    pub matches: bool,
}

fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `-8/27 + 2t^2 - 2t^3` style rendering in ascending degree.
pub fn format_poly(p: &ExactPoly) -> String {
    let mut out = String::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let show_coeff = k == 0 || !mag.is_one();
        if show_coeff {
            out.push_str(&format_rational(&mag));
        }
        match k {
            0 => {}
            1 => out.push('t'),
            _ => {
                let _ = write!(out, "t^{k}");
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Least-squares fit `z ≈ c + A cos(2πt/T) + B sin(2πt/T)`; returns
/// `(A, B, sup |z − fit|)`.
pub fn fit_harmonic(traj: &Trajectory) -> (f64, f64, f64) {
    use nalgebra::{DMatrix, DVector};
    let s = traj.samples();
    let omega = std::f64::consts::TAU / traj.period();
    let a = DMatrix::from_fn(s.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => (omega * s[i].t).cos(),
        _ => (omega * s[i].t).sin(),
    });
    let y = DVector::from_iterator(s.len(), s.iter().map(|x| x.state.z));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .expect("thin SVD with both factors");
    let fit = &a * &coef;
    let sup = (fit - y).amax();
    (coef[1], coef[2], sup)
}

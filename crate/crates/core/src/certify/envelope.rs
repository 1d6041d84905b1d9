//! Nagumo growth envelopes and the a-priori derivative bound they induce.
//!
//! For a positive envelope `phi` with `∫_0^∞ ds/phi(s) = ∞`, the bound `N*` is
//! the smallest level with `∫_0^{N*} ds/phi(s) = T`. Any solution staying in
//! the strip then has `|z'| < N*`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate, QuadratureError};

/// Relative inflation applied to `N*` so the defining integral strictly exceeds `T`.
pub const STRICT_INFLATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("envelope must be positive: {0}")]
    NotPositive(String),
    #[error("invalid tabulated envelope: {0}")]
    InvalidSamples(String),
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("integral of 1/phi never reached T = {0} (envelope grows too fast)")]
    NoBracket(f64),
}

/// Monotone positive envelope `phi(s)`, `s >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NagumoEnvelope {
    /// `a + b s` with `a > 0`, `b >= 0`.
    Affine { a: f64, b: f64 },
    /// Piecewise-linear through `(s, phi)` samples starting at `s = 0`,
    /// continued linearly with `tail_slope` beyond the last sample.
    Tabulated { samples: Vec<(f64, f64)>, tail_slope: f64 },
}

impl NagumoEnvelope {
    pub fn affine(a: f64, b: f64) -> Result<Self, EnvelopeError> {
        let env = NagumoEnvelope::Affine { a, b };
        env.validate()?;
        Ok(env)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self, EnvelopeError> {
        let env = NagumoEnvelope::Tabulated { samples, tail_slope };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<(), EnvelopeError> {
        match self {
            NagumoEnvelope::Affine { a, b } => {
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(EnvelopeError::NotPositive(format!("a = {a}")));
                }
                if !(*b >= 0.0 && b.is_finite()) {
                    return Err(EnvelopeError::NotPositive(format!("b = {b} (must be >= 0)")));
                }
            }
            NagumoEnvelope::Tabulated { samples, tail_slope } => {
                let bad = |m: &str| Err(EnvelopeError::InvalidSamples(m.to_string()));
                if samples.is_empty() {
                    return bad("no samples");
                }
                if samples[0].0 != 0.0 {
                    return bad("first sample must be at s = 0");
                }
                if samples.iter().any(|(s, p)| !s.is_finite() || !p.is_finite()) {
                    return bad("samples must be finite");
                }
                if samples.iter().any(|(_, p)| *p <= 0.0) {
                    return Err(EnvelopeError::NotPositive("tabulated value <= 0".into()));
                }
                for w in samples.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return bad("abscissae must be strictly increasing");
                    }
                    if w[1].1 < w[0].1 {
                        return bad("values must be non-decreasing");
                    }
                }
                if !(*tail_slope >= 0.0 && tail_slope.is_finite()) {
                    return bad("tail slope must be finite and >= 0");
                }
            }
        }
        Ok(())
    }

    /// `phi(|s|)`.
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.abs();
        match self {
            NagumoEnvelope::Affine { a, b } => a + b * s,
            NagumoEnvelope::Tabulated { samples, tail_slope } => {
                let last = samples[samples.len() - 1];
                if s >= last.0 {
                    return last.1 + tail_slope * (s - last.0);
                }
                let k = samples.partition_point(|(x, _)| *x <= s) - 1;
                let (s0, p0) = samples[k];
                let (s1, p1) = samples[k + 1];
                p0 + (p1 - p0) * (s - s0) / (s1 - s0)
            }
        }
    }

    /// `phi + c`, as used for the auxiliary-problem envelope `phi + 2 r`.
    pub fn plus_constant(&self, c: f64) -> NagumoEnvelope {
        match self {
            NagumoEnvelope::Affine { a, b } => NagumoEnvelope::Affine { a: a + c, b: *b },
            NagumoEnvelope::Tabulated { samples, tail_slope } => NagumoEnvelope::Tabulated {
                samples: samples.iter().map(|(s, p)| (*s, p + c)).collect(),
                tail_slope: *tail_slope,
            },
        }
    }

    /// Closed form of the critical level for affine envelopes.
    pub fn critical_level_closed_form(&self, period: f64) -> Option<f64> {
        match self {
            NagumoEnvelope::Affine { a, b } if *b > 0.0 => Some(a / b * (b * period).exp_m1()),
            NagumoEnvelope::Affine { a, .. } => Some(a * period),
            NagumoEnvelope::Tabulated { .. } => None,
        }
    }

    /// `∫_a^b ds/phi(s)`, split at the breakpoints of a tabulated envelope so
    /// no quadrature panel straddles a kink.
    fn integrate_recip(&self, a: f64, b: f64, tol: f64) -> Result<f64, EnvelopeError> {
        let recip = |s: f64| 1.0 / self.eval(s);
        let mut cuts = vec![a];
        if let NagumoEnvelope::Tabulated { samples, .. } = self {
            cuts.extend(samples.iter().map(|(s, _)| *s).filter(|s| *s > a && *s < b));
        }
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += integrate(recip, w[0], w[1], tol)?;
        }
        Ok(total)
    }

    /// Critical level by adaptive quadrature of `1/phi` over geometrically
    /// growing panels, then bisection inside the panel where the running
    /// integral crosses `period`. Works for every envelope kind.
    pub fn critical_level_numeric(&self, period: f64) -> Result<f64, EnvelopeError> {
        self.validate()?;
        if !(period > 0.0 && period.is_finite()) {
            return Err(EnvelopeError::BadPeriod(period));
        }
        let tol = 1e-15 * period.max(1.0);
        let mut lo = 0.0;
        let mut hi = self.eval(0.0) * period / 16.0;
        let mut acc = 0.0;
        loop {
            if !hi.is_finite() {
                return Err(EnvelopeError::NoBracket(period));
            }
            let piece = self.integrate_recip(lo, hi, tol)?;
            if acc + piece >= period {
                break;
            }
            acc += piece;
            lo = hi;
            hi *= 2.0;
        }
        let (panel_start, base) = (lo, acc);
        let (mut a, mut b) = (lo, hi);
        while b - a > 1e-14 * b {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let v = base + self.integrate_recip(panel_start, mid, tol)?;
            if v >= period {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Smallest `N*` with `∫_0^{N*} ds/phi = T`, inflated by [`STRICT_INFLATION`].
pub fn derivative_bound(env: &NagumoEnvelope, period: f64) -> Result<f64, EnvelopeError> {
    env.validate()?;
    if !(period > 0.0 && period.is_finite()) {
        return Err(EnvelopeError::BadPeriod(period));
    }
    let level = match env.critical_level_closed_form(period) {
        Some(n) => n,
        None => env.critical_level_numeric(period)?,
    };
    Ok(level * (1.0 + STRICT_INFLATION))
}

//! Sampling-based certification of the lower/upper-solution inequalities,
//! endpoint conditions, monotonicity declarations and the Nagumo-type growth
//! condition.
//!
//! Quantifiers over a free derivative (`∀ w1 ∈ ℝ`) are discretised three
//! ways: a compact box, spot checks at large magnitudes, and the system's
//! declared cross envelope bounding how much the free variable can move the
//! right-hand side. A sampled spread exceeding the declaration makes the
//! condition INCONCLUSIVE rather than PASS.

pub mod envelope;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundQuadruple, Curve};
use crate::system::{CoupledSystem, Point, RhsError, Which};

pub use envelope::{derivative_bound, EnvelopeError, NagumoEnvelope};

/// Half-width used for a free-derivative box when neither the config nor a
/// derivative bound supplies one.
pub const FALLBACK_BOX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Eval(#[from] RhsError),
    #[error("invalid certification config: {0}")]
    Config(String),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificationConfig {
    /// Uniform sample count on `[0, T]`.
    pub grid_t: usize,
    /// Half-width of the `z1` search box; `None` means 10 × `N1`.
    pub box_z1: Option<f64>,
    /// Half-width of the `w1` search box; `None` means 10 × `N2`.
    pub box_w1: Option<f64>,
    /// Magnitudes (both signs) where free derivatives are spot-checked.
    pub asymptote_samples: Vec<f64>,
    pub tol_margin: f64,
    /// Points across a free-derivative box.
    pub free_samples: usize,
    /// Points across the cross-derivative box in the Nagumo check.
    pub cross_samples: usize,
    /// Points across each strip `[alpha0(t), beta0(t)]`.
    pub state_samples: usize,
}

impl Default for CertificationConfig {
    fn default() -> Self {
        CertificationConfig {
            grid_t: 2001,
            box_z1: None,
            box_w1: None,
            asymptote_samples: vec![1e2, 1e4, 1e6],
            tol_margin: 1e-9,
            free_samples: 41,
            cross_samples: 15,
            state_samples: 5,
        }
    }
}

impl CertificationConfig {
    pub fn validate(&self) -> Result<(), CertifyError> {
        let bad = |m: String| Err(CertifyError::Config(m));
        if self.grid_t < 3 {
            return bad(format!("grid_t must be >= 3, got {}", self.grid_t));
        }
        for (name, b) in [("box_z1", self.box_z1), ("box_w1", self.box_w1)] {
            if let Some(b) = b {
                if !(b > 0.0 && b.is_finite()) {
                    return bad(format!("{name} must be positive, got {b}"));
                }
            }
        }
        if !(self.tol_margin >= 0.0 && self.tol_margin.is_finite()) {
            return bad(format!("tol_margin must be >= 0, got {}", self.tol_margin));
        }
        if self.free_samples < 3 || self.cross_samples < 3 || self.state_samples < 2 {
            return bad("free/cross samples must be >= 3 and state samples >= 2".into());
        }
        if self.asymptote_samples.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return bad("asymptote samples must be positive and finite".into());
        }
        Ok(())
    }

    /// Fills unset boxes with ten times the given derivative bounds.
    pub fn with_derivative_bounds(mut self, n1: f64, n2: f64) -> Self {
        self.box_z1.get_or_insert(10.0 * n1);
        self.box_w1.get_or_insert(10.0 * n2);
        self
    }

    fn box_for(&self, var: FreeVar) -> f64 {
        match var {
            FreeVar::Z1 => self.box_z1,
            FreeVar::W1 => self.box_w1,
        }
        .unwrap_or(FALLBACK_BOX)
    }

    fn meta(&self) -> GridMeta {
        GridMeta {
            grid_t: self.grid_t,
            free_samples: self.free_samples,
            cross_samples: self.cross_samples,
            state_samples: self.state_samples,
            box_z1: self.box_for(FreeVar::Z1),
            box_w1: self.box_for(FreeVar::W1),
            asymptote_samples: self.asymptote_samples.clone(),
            tol_margin: self.tol_margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// FAIL dominates INCONCLUSIVE, which dominates PASS.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub free: BTreeMap<String, f64>,
}

impl Witness {
    fn at(t: f64, vars: &[(&str, f64)]) -> Self {
        Witness {
            t,
            free: vars.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn point(p: &Point) -> Self {
        Self::at(p.t, &[("z0", p.z0), ("w0", p.w0), ("z1", p.z1), ("w1", p.w1)])
    }

    /// The `(t, z0, w0, z1, w1)` recorded in this witness (missing entries are 0).
    pub fn as_point(&self) -> Point {
        let g = |k: &str| self.free.get(k).copied().unwrap_or(0.0);
        Point::new(self.t, g("z0"), g("w0"), g("z1"), g("w1"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub grid_t: usize,
    pub free_samples: usize,
    pub cross_samples: usize,
    pub state_samples: usize,
    pub box_z1: f64,
    pub box_w1: f64,
    pub asymptote_samples: Vec<f64>,
    pub tol_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub name: String,
    pub verdict: Verdict,
    /// Smallest observed slack; negative means the inequality is violated.
    pub worst_margin: f64,
    pub witness: Witness,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
    pub grid: GridMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub conditions: Vec<ConditionEntry>,
    pub overall: Verdict,
    pub bounds_note: String,
}

impl CertificationReport {
    fn from_entries(conditions: Vec<ConditionEntry>) -> Self {
        let overall = conditions.iter().fold(Verdict::Pass, |acc, c| acc.combine(c.verdict));
        CertificationReport {
            conditions,
            overall,
            bounds_note: String::new(),
        }
    }

    /// Concatenates condition lists and recomputes the overall verdict.
    pub fn merge(reports: impl IntoIterator<Item = CertificationReport>) -> Self {
        let mut entries = Vec::new();
        let mut notes = Vec::new();
        for r in reports {
            entries.extend(r.conditions);
            if !r.bounds_note.is_empty() {
                notes.push(r.bounds_note);
            }
        }
        let mut merged = Self::from_entries(entries);
        merged.bounds_note = notes.join("\n");
        merged
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionEntry> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FreeVar {
    Z1,
    W1,
}

impl FreeVar {
    /// The derivative that `which` leaves unconstrained.
    fn cross_of(which: Which) -> FreeVar {
        match which {
            Which::F => FreeVar::W1,
            Which::G => FreeVar::Z1,
        }
    }

    fn set(self, p: &mut Point, v: f64) {
        match self {
            FreeVar::Z1 => p.z1 = v,
            FreeVar::W1 => p.w1 = v,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
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

/// Symmetric samples of `[-half, half]`, quadratically clustered at zero,
/// plus `±a` for every asymptote magnitude beyond the box.
fn free_grid(half: f64, n: usize, asymptotes: &[f64]) -> Vec<f64> {
    let m = (n / 2).max(1);
    let mut out = vec![0.0];
    for k in 1..=m {
        let x = half * (k as f64 / m as f64).powi(2);
        out.push(x);
        out.push(-x);
    }
    for &a in asymptotes {
        if a > half {
            out.push(a);
            out.push(-a);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn t_grid(period: f64, n: usize) -> Vec<f64> {
    linspace(0.0, period, n)
}

/// Min and max of one right-hand side over a free variable.
struct Scan {
    min: f64,
    arg_min: f64,
    max: f64,
    arg_max: f64,
}

fn scan(sys: &CoupledSystem, which: Which, base: Point, var: FreeVar, samples: &[f64]) -> Result<Scan, RhsError> {
    let mut s = Scan {
        min: f64::INFINITY,
        arg_min: 0.0,
        max: f64::NEG_INFINITY,
        arg_max: 0.0,
    };
    for &x in samples {
        let mut p = base;
        var.set(&mut p, x);
        let v = sys.eval_rhs(which, &p)?;
        if v < s.min {
            s.min = v;
            s.arg_min = x;
        }
        if v > s.max {
            s.max = v;
            s.arg_max = x;
        }
    }
    Ok(s)
}

/// Running worst margin plus the worst cross-declaration excess.
#[derive(Debug, Clone)]
struct Tally {
    margin: f64,
    witness: Witness,
    excess: f64,
    excess_witness: Option<Witness>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            margin: f64::INFINITY,
            witness: Witness::at(0.0, &[]),
            excess: f64::NEG_INFINITY,
            excess_witness: None,
        }
    }

    fn margin(&mut self, m: f64, w: impl FnOnce() -> Witness) {
        if m < self.margin {
            self.margin = m;
            self.witness = w();
        }
    }

    fn excess(&mut self, e: f64, w: impl FnOnce() -> Witness) {
        if e > self.excess {
            self.excess = e;
            self.excess_witness = Some(w());
        }
    }

    fn absorb(&mut self, other: Tally) {
        if other.margin < self.margin {
            self.margin = other.margin;
            self.witness = other.witness;
        }
        if other.excess > self.excess {
            self.excess = other.excess;
            self.excess_witness = other.excess_witness;
        }
    }

    fn into_entry(self, name: &str, cfg: &CertificationConfig, declared: Option<f64>) -> ConditionEntry {
        let tol = cfg.tol_margin;
        let (verdict, witness, note) = if self.margin < -tol {
            (Verdict::Fail, self.witness, None)
        } else if self.excess > tol {
            let note = match declared {
                Some(b) => format!(
                    "free-derivative spread exceeds the declared cross envelope {b} by {:.3e}",
                    self.excess
                ),
                None => "right-hand side depends on the free derivative but no cross envelope is declared".to_string(),
            };
            (
                Verdict::Inconclusive,
                self.excess_witness.unwrap_or(self.witness),
                Some(note),
            )
        } else {
            (Verdict::Pass, self.witness, None)
        };
        ConditionEntry {
            name: name.to_string(),
            verdict,
            worst_margin: self.margin,
            witness,
            note,
            grid: cfg.meta(),
        }
    }
}

fn reduce(parts: Vec<Tally>) -> Tally {
    parts.into_iter().fold(Tally::new(), |mut acc, t| {
        acc.absorb(t);
        acc
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Lower,
    Upper,
}

/// Differential inequality for one component: lower means
/// `curve'' >= sup f(t, a1_0, a2_0, curve', ·)`, upper the mirror with inf.
fn differential_inequality(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    cfg: &CertificationConfig,
    kind: Kind,
    which: Which,
) -> Result<ConditionEntry, CertifyError> {
    let comp = match which {
        Which::F => 0,
        Which::G => 1,
    };
    let (curve, s1, s2): (&Curve, &Curve, &Curve) = match kind {
        Kind::Lower => (q.alpha(comp), q.alpha0(0), q.alpha0(1)),
        Kind::Upper => (q.beta(comp), q.beta0(0), q.beta0(1)),
    };
    let var = FreeVar::cross_of(which);
    let samples = free_grid(cfg.box_for(var), cfg.free_samples, &cfg.asymptote_samples);
    let declared = sys.cross_env(which);
    let ts = t_grid(q.period(), cfg.grid_t);
    let parts = ts
        .par_iter()
        .map(|&t| -> Result<Tally, RhsError> {
            let own = curve.first(t);
            let mut base = Point::new(t, s1.value(t), s2.value(t), 0.0, 0.0);
            match which {
                Which::F => base.z1 = own,
                Which::G => base.w1 = own,
            }
            let sc = scan(sys, which, base, var, &samples)?;
            let second = curve.second(t);
            let (margin, arg) = match kind {
                Kind::Lower => (second - sc.max, sc.arg_max),
                Kind::Upper => (sc.min - second, sc.arg_min),
            };
            let mut tally = Tally::new();
            let mut worst = base;
            var.set(&mut worst, arg);
            tally.margin(margin, || Witness::point(&worst));
            let excess = sc.max - sc.min - declared.unwrap_or(0.0);
            let mut spread_at = base;
            var.set(&mut spread_at, sc.arg_max);
            tally.excess(excess, || Witness::point(&spread_at));
            Ok(tally)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let name = match (kind, which) {
        (Kind::Lower, Which::F) => "lower_f",
        (Kind::Lower, Which::G) => "lower_g",
        (Kind::Upper, Which::F) => "upper_f",
        (Kind::Upper, Which::G) => "upper_g",
    };
    Ok(reduce(parts).into_entry(name, cfg, declared))
}

fn endpoint_conditions(q: &BoundQuadruple, cfg: &CertificationConfig, kind: Kind) -> ConditionEntry {
    let period = q.period();
    let mut tally = Tally::new();
    for comp in 0..2 {
        let c = match kind {
            Kind::Lower => q.alpha(comp),
            Kind::Upper => q.beta(comp),
        };
        let component = comp as f64 + 1.0;
        let (v0, vt) = (c.value(0.0), c.value(period));
        tally.margin(-(v0 - vt).abs(), || {
            Witness::at(period, &[("component", component), ("value_0", v0), ("value_T", vt)])
        });
        let (d0, dt) = (c.first(0.0), c.first(period));
        let slack = match kind {
            Kind::Lower => d0 - dt,
            Kind::Upper => dt - d0,
        };
        tally.margin(slack, || {
            Witness::at(period, &[("component", component), ("slope_0", d0), ("slope_T", dt)])
        });
    }
    let name = match kind {
        Kind::Lower => "lower_endpoints",
        Kind::Upper => "upper_endpoints",
    };
    tally.into_entry(name, cfg, None)
}

/// Lower-solution conditions: two differential inequalities and the
/// endpoint conditions `alpha(0) = alpha(T)`, `alpha'(0) >= alpha'(T)`.
pub fn certify_lower(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    cfg: &CertificationConfig,
) -> Result<CertificationReport, CertifyError> {
    cfg.validate()?;
    Ok(CertificationReport::from_entries(vec![
        differential_inequality(sys, q, cfg, Kind::Lower, Which::F)?,
        differential_inequality(sys, q, cfg, Kind::Lower, Which::G)?,
        endpoint_conditions(q, cfg, Kind::Lower),
    ]))
}

/// Upper-solution conditions, mirror of [`certify_lower`].
pub fn certify_upper(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    cfg: &CertificationConfig,
) -> Result<CertificationReport, CertifyError> {
    cfg.validate()?;
    Ok(CertificationReport::from_entries(vec![
        differential_inequality(sys, q, cfg, Kind::Upper, Which::F)?,
        differential_inequality(sys, q, cfg, Kind::Upper, Which::G)?,
        endpoint_conditions(q, cfg, Kind::Upper),
    ]))
}

/// `[min(min alpha_i', min beta_i'), max(max alpha_i', max beta_i')]`.
pub fn derivative_window(q: &BoundQuadruple, comp: usize, n: usize) -> (f64, f64) {
    let (a_lo, a_hi) = q.alpha(comp).derivative_range(n);
    let (b_lo, b_hi) = q.beta(comp).derivative_range(n);
    (a_lo.min(b_lo), a_hi.max(b_hi))
}

/// Samples `f` along `w0` and `g` along `z0` over the strip and the
/// derivative windows; any increase larger than `tol_margin` fails.
pub fn check_monotonicity(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    cfg: &CertificationConfig,
) -> Result<CertificationReport, CertifyError> {
    cfg.validate()?;
    let n = cfg.state_samples;
    let fine = 2 * n - 1;
    let (z1_lo, z1_hi) = derivative_window(q, 0, cfg.grid_t);
    let (w1_lo, w1_hi) = derivative_window(q, 1, cfg.grid_t);
    let z1s = linspace(z1_lo, z1_hi, n);
    let w1s = linspace(w1_lo, w1_hi, n);
    let ts = t_grid(q.period(), cfg.grid_t);
    let parts = ts
        .par_iter()
        .map(|&t| -> Result<Tally, RhsError> {
            let mut tally = Tally::new();
            let zb = (q.alpha0(0).value(t), q.beta0(0).value(t));
            let wb = (q.alpha0(1).value(t), q.beta0(1).value(t));
            for &z1 in &z1s {
                for &w1 in &w1s {
                    // f along w0 with z0 fixed
                    for &z0 in &linspace(zb.0, zb.1, n) {
                        let ws = linspace(wb.0, wb.1, fine);
                        let vals = ws
                            .iter()
                            .map(|&w0| sys.f(&Point::new(t, z0, w0, z1, w1)))
                            .collect::<Result<Vec<_>, _>>()?;
                        for k in 0..ws.len() {
                            let step = 1e-6 * ws[k].abs().max(1.0);
                            let p = Point::new(t, z0, ws[k], z1, w1);
                            let bumped = sys.f(&Point::new(t, z0, ws[k] + step, z1, w1))?;
                            tally.margin(vals[k] - bumped, || {
                                let mut w = Witness::point(&p);
                                w.free.insert("step".into(), step);
                                w.free.insert("which".into(), 1.0);
                                w
                            });
                            if k + 1 < ws.len() {
                                tally.margin(vals[k] - vals[k + 1], || {
                                    let mut w = Witness::point(&p);
                                    w.free.insert("step".into(), ws[k + 1] - ws[k]);
                                    w.free.insert("which".into(), 1.0);
                                    w
                                });
                            }
                        }
                    }
                    // g along z0 with w0 fixed
                    for &w0 in &linspace(wb.0, wb.1, n) {
                        let zs = linspace(zb.0, zb.1, fine);
                        let vals = zs
                            .iter()
                            .map(|&z0| sys.g(&Point::new(t, z0, w0, z1, w1)))
                            .collect::<Result<Vec<_>, _>>()?;
                        for k in 0..zs.len() {
                            let step = 1e-6 * zs[k].abs().max(1.0);
                            let p = Point::new(t, zs[k], w0, z1, w1);
                            let bumped = sys.g(&Point::new(t, zs[k] + step, w0, z1, w1))?;
                            tally.margin(vals[k] - bumped, || {
                                let mut w = Witness::point(&p);
                                w.free.insert("step".into(), step);
                                w.free.insert("which".into(), 2.0);
                                w
                            });
                            if k + 1 < zs.len() {
                                tally.margin(vals[k] - vals[k + 1], || {
                                    let mut w = Witness::point(&p);
                                    w.free.insert("step".into(), zs[k + 1] - zs[k]);
                                    w.free.insert("which".into(), 2.0);
                                    w
                                });
                            }
                        }
                    }
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut entry = reduce(parts).into_entry("monotonicity", cfg, None);
    if !(sys.monotone_f_w0 && sys.monotone_g_z0) {
        entry.note = Some("monotonicity not declared by the system; verdict is from sampling only".into());
    }
    Ok(CertificationReport::from_entries(vec![entry]))
}

fn nagumo_one(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    env: &NagumoEnvelope,
    cfg: &CertificationConfig,
    which: Which,
) -> Result<ConditionEntry, CertifyError> {
    let (own, cross) = match which {
        Which::F => (FreeVar::Z1, FreeVar::W1),
        Which::G => (FreeVar::W1, FreeVar::Z1),
    };
    let own_samples = free_grid(cfg.box_for(own), cfg.free_samples, &[]);
    let cross_samples = free_grid(cfg.box_for(cross), cfg.cross_samples, &cfg.asymptote_samples);
    let declared = sys.cross_env(which);
    let n = cfg.state_samples;
    let ts = t_grid(q.period(), cfg.grid_t);
    let parts = ts
        .par_iter()
        .map(|&t| -> Result<Tally, RhsError> {
            let mut tally = Tally::new();
            let zs = linspace(q.alpha0(0).value(t), q.beta0(0).value(t), n);
            let ws = linspace(q.alpha0(1).value(t), q.beta0(1).value(t), n);
            for &z0 in &zs {
                for &w0 in &ws {
                    for &d in &own_samples {
                        let mut base = Point::new(t, z0, w0, 0.0, 0.0);
                        own.set(&mut base, d);
                        let sc = scan(sys, which, base, cross, &cross_samples)?;
                        let bound = env.eval(d);
                        let (worst, arg) = if sc.max.abs() >= sc.min.abs() {
                            (sc.max.abs(), sc.arg_max)
                        } else {
                            (sc.min.abs(), sc.arg_min)
                        };
                        let mut p = base;
                        cross.set(&mut p, arg);
                        tally.margin(bound - worst, || Witness::point(&p));
                        tally.excess(sc.max - sc.min - declared.unwrap_or(0.0), || Witness::point(&p));
                    }
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let name = match which {
        Which::F => "nagumo_f",
        Which::G => "nagumo_g",
    };
    Ok(reduce(parts).into_entry(name, cfg, declared))
}

/// `|f| <= phi(|z1|)` and `|g| <= psi(|w1|)` on the strip set `S`.
pub fn certify_nagumo(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    env_f: &NagumoEnvelope,
    env_g: &NagumoEnvelope,
    cfg: &CertificationConfig,
) -> Result<CertificationReport, CertifyError> {
    cfg.validate()?;
    env_f.validate()?;
    env_g.validate()?;
    Ok(CertificationReport::from_entries(vec![
        nagumo_one(sys, q, env_f, cfg, Which::F)?,
        nagumo_one(sys, q, env_g, cfg, Which::G)?,
    ]))
}

pub const DERIVATIVE_WINDOW_NOTE: &str = "derivative windows for the monotonicity check use \
max(max alpha_i', max beta_i') as the upper end (the printed hypothesis takes min beta_i', which \
leaves the window empty for the worked examples)";

/// Every hypothesis: lower, upper, monotonicity and Nagumo (nine conditions).
/// Unset free-derivative boxes default to ten times the envelopes' derivative bounds.
pub fn certify_all(
    sys: &CoupledSystem,
    q: &BoundQuadruple,
    env_f: &NagumoEnvelope,
    env_g: &NagumoEnvelope,
    cfg: &CertificationConfig,
) -> Result<CertificationReport, CertifyError> {
    let n1 = derivative_bound(env_f, q.period())?;
    let n2 = derivative_bound(env_g, q.period())?;
    let cfg = cfg.clone().with_derivative_bounds(n1, n2);
    let mut report = CertificationReport::merge([
        certify_lower(sys, q, &cfg)?,
        certify_upper(sys, q, &cfg)?,
        check_monotonicity(sys, q, &cfg)?,
        certify_nagumo(sys, q, env_f, env_g, &cfg)?,
    ]);
    report.bounds_note = DERIVATIVE_WINDOW_NOTE.to_string();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::BoundQuadruple;
    use crate::system::{builtin_system, Rhs};

    fn example_bounds() -> BoundQuadruple {
        BoundQuadruple::from_coeffs(
            &[1.0, 0.0, 2.0, -2.0],
            &[0.0, 2.0, -2.0],
            &[1.2, 0.0, -2.0, 2.0],
            &[1.0, -3.0, 3.0],
            1.0,
        )
        .unwrap()
    }

    fn zero_bounds() -> BoundQuadruple {
        BoundQuadruple::from_coeffs(&[0.0], &[0.0], &[0.0], &[0.0], 1.0).unwrap()
    }

    fn constant_system(f: f64, g: f64) -> CoupledSystem {
        CoupledSystem::new(
            "const",
            Rhs::native("f", move |_: &Point| f),
            Rhs::native("g", move |_: &Point| g),
            1.0,
        )
        .unwrap()
        .with_cross_envelopes(Some(0.0), Some(0.0))
        .unwrap()
    }

    fn small_cfg() -> CertificationConfig {
        CertificationConfig {
            grid_t: 201,
            ..CertificationConfig::default()
        }
    }

    #[test]
    fn example_lower_and_upper_pass() {
        let sys = builtin_system("example").unwrap();
        let q = example_bounds();
        let cfg = small_cfg().with_derivative_bounds(120.0, 700.0);
        let lo = certify_lower(&sys, &q, &cfg).unwrap();
        let up = certify_upper(&sys, &q, &cfg).unwrap();
        for c in lo.conditions.iter().chain(up.conditions.iter()) {
            assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        }
        for name in ["lower_f", "lower_g"] {
            assert!(lo.condition(name).unwrap().worst_margin > 0.0);
        }
        for name in ["upper_f", "upper_g"] {
            assert!(up.condition(name).unwrap().worst_margin > 0.0);
        }
    }

    #[test]
    fn zero_lower_against_positive_field_fails() {
        let sys = constant_system(1.0, 1.0);
        let r = certify_lower(&sys, &zero_bounds(), &small_cfg()).unwrap();
        assert_eq!(r.overall, Verdict::Fail);
        assert_eq!(r.condition("lower_f").unwrap().worst_margin, -1.0);
    }

    #[test]
    fn zero_upper_against_negative_field_fails() {
        let sys = constant_system(-1.0, -1.0);
        let r = certify_upper(&sys, &zero_bounds(), &small_cfg()).unwrap();
        assert_eq!(r.condition("upper_g").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn endpoint_equality_failure() {
        let q = BoundQuadruple::from_coeffs(&[0.0, 1.0], &[0.0, 2.0, -2.0], &[0.0], &[0.0], 1.0).unwrap();
        let sys = constant_system(-1.0, -1.0);
        let r = certify_lower(&sys, &q, &small_cfg()).unwrap();
        let e = r.condition("lower_endpoints").unwrap();
        assert_eq!(e.verdict, Verdict::Fail);
        assert_eq!(e.worst_margin, -1.0);
        assert_eq!(e.witness.free["component"], 1.0);
    }

    #[test]
    fn upper_endpoint_slopes_for_beta2() {
        let q = example_bounds();
        assert_eq!(q.beta(1).first(0.0), -3.0);
        assert_eq!(q.beta(1).first(1.0), 3.0);
        let e = endpoint_conditions(&q, &small_cfg(), Kind::Upper);
        assert_eq!(e.verdict, Verdict::Pass);
    }

    #[test]
    fn monotonicity_example_and_vdp() {
        let q = example_bounds();
        let r = check_monotonicity(&builtin_system("example").unwrap(), &q, &small_cfg()).unwrap();
        assert_eq!(r.overall, Verdict::Pass);
        let vq = BoundQuadruple::from_coeffs(
            &[-1.0, 1.0, -1.0],
            &[-0.75, 1.0, -1.0],
            &[1.0, 0.0, -0.5, 0.5],
            &[1.0, 0.0, -1.0, 1.0],
            1.0,
        )
        .unwrap();
        let r = check_monotonicity(&builtin_system("vdp").unwrap(), &vq, &small_cfg()).unwrap();
        assert_eq!(r.overall, Verdict::Pass);
    }

    #[test]
    fn increasing_in_w0_fails_with_witness() {
        let sys = CoupledSystem::new("inc", Rhs::parse("w0").unwrap(), Rhs::parse("0").unwrap(), 1.0)
            .unwrap()
            .with_monotonicity(true, true);
        let r = check_monotonicity(&sys, &example_bounds(), &small_cfg()).unwrap();
        assert_eq!(r.overall, Verdict::Fail);
        let w = &r.conditions[0].witness;
        let p = w.as_point();
        let step = w.free["step"];
        let diff = sys.f(&Point { w0: p.w0 + step, ..p }).unwrap() - sys.f(&p).unwrap();
        assert!(diff > r.conditions[0].grid.tol_margin);
    }

    #[test]
    fn nagumo_constant_field_margin_one() {
        let sys = constant_system(3.0, -2.0);
        let env_f = NagumoEnvelope::affine(4.0, 0.0).unwrap();
        let env_g = NagumoEnvelope::affine(3.0, 0.0).unwrap();
        let r = certify_nagumo(&sys, &example_bounds(), &env_f, &env_g, &small_cfg()).unwrap();
        assert_eq!(r.overall, Verdict::Pass);
        assert_eq!(r.conditions[0].worst_margin, 1.0);
        assert_eq!(r.conditions[1].worst_margin, 1.0);
    }

    #[test]
    fn nagumo_quadratic_growth_fails_at_box_edge() {
        let sys = CoupledSystem::new("q", Rhs::parse("z1^2").unwrap(), Rhs::parse("0").unwrap(), 1.0)
            .unwrap()
            .with_cross_envelopes(Some(0.0), Some(0.0))
            .unwrap();
        let env = NagumoEnvelope::affine(1.0, 1.0).unwrap();
        let cfg = CertificationConfig {
            box_z1: Some(50.0),
            ..small_cfg()
        };
        let r = certify_nagumo(&sys, &example_bounds(), &env, &env, &cfg).unwrap();
        let c = r.condition("nagumo_f").unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.witness.free["z1"].abs(), 50.0);
    }

    #[test]
    fn undeclared_cross_dependence_is_inconclusive() {
        let sys = CoupledSystem::new(
            "x",
            Rhs::parse("-10 + atan(w1)").unwrap(),
            Rhs::parse("0").unwrap(),
            1.0,
        )
        .unwrap();
        let r = certify_lower(&sys, &zero_bounds(), &small_cfg()).unwrap();
        let c = r.condition("lower_f").unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert!(c.note.is_some());
    }

    #[test]
    fn bad_config() {
        let cfg = CertificationConfig {
            grid_t: 2,
            ..CertificationConfig::default()
        };
        assert!(matches!(
            certify_lower(&constant_system(0.0, 0.0), &zero_bounds(), &cfg),
            Err(CertifyError::Config(_))
        ));
    }

    #[test]
    fn free_grid_shape() {
        let g = free_grid(10.0, 5, &[1e2, 5.0]);
        assert_eq!(g, vec![-100.0, -10.0, -2.5, 0.0, 2.5, 10.0, 100.0]);
    }
}

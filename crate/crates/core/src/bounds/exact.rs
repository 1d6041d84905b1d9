//! Exact rational polynomials: Sturm sequences, real-root isolation and
//! sup-norms whose critical points are rational.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Polynomial with rational coefficients in ascending degree, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPoly {
    coeffs: Vec<BigRational>,
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl ExactPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ExactPoly { coeffs }
    }

    pub fn from_ratios(pairs: &[(i64, i64)]) -> Self {
        Self::new(pairs.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    /// Exact dyadic image of the given floats; `None` for non-finite input.
    pub fn from_f64(coeffs: &[f64]) -> Option<Self> {
        coeffs
            .iter()
            .map(|&c| BigRational::from_float(c))
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of `t^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn derivative(&self) -> ExactPoly {
        ExactPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn add_constant(&self, c: &BigRational) -> ExactPoly {
        let mut coeffs = self.coeffs.clone();
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        coeffs[0] = &coeffs[0] + c;
        ExactPoly::new(coeffs)
    }

    fn leading(&self) -> &BigRational {
        self.coeffs.last().expect("non-zero polynomial")
    }

    /// Remainder of Euclidean division by a non-zero divisor.
    fn rem(&self, divisor: &ExactPoly) -> ExactPoly {
        self.div_rem(divisor).1
    }

    fn div_rem(&self, divisor: &ExactPoly) -> (ExactPoly, ExactPoly) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (ExactPoly::new(Vec::new()), ExactPoly::new(rem));
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        let lead = divisor.leading();
        for k in (0..quot.len()).rev() {
            let q = &rem[k + dd] / lead;
            if !q.is_zero() {
                for (j, d) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] = &rem[k + j] - &q * d;
                }
            }
            quot[k] = q;
        }
        rem.truncate(dd);
        (ExactPoly::new(quot), ExactPoly::new(rem))
    }

    /// Scaled by a positive constant to be monic; sign pattern is preserved.
    fn monic(&self) -> ExactPoly {
        if self.is_zero() {
            return self.clone();
        }
        let lead = self.leading().abs();
        ExactPoly::new(self.coeffs.iter().map(|c| c / &lead).collect())
    }

    fn gcd(&self, other: &ExactPoly) -> ExactPoly {
        let (mut a, mut b) = (self.monic(), other.monic());
        while !b.is_zero() {
            let r = a.rem(&b).monic();
            a = b;
            b = r;
        }
        a
    }

    /// Same roots, each simple.
    pub fn square_free(&self) -> ExactPoly {
        if self.degree().unwrap_or(0) < 1 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            self.monic()
        } else {
            self.div_rem(&g).0.monic()
        }
    }
}

/// Sturm chain of a square-free polynomial.
#[derive(Debug, Clone)]
pub struct SturmSequence {
    chain: Vec<ExactPoly>,
}

impl SturmSequence {
    pub fn new(p: &ExactPoly) -> Self {
        let p0 = p.square_free();
        let mut chain = vec![p0.clone()];
        if p0.degree().unwrap_or(0) >= 1 {
            chain.push(p0.derivative().monic());
            loop {
                let n = chain.len();
                let r = chain[n - 2].rem(&chain[n - 1]);
                if r.is_zero() {
                    break;
                }
                let neg = ExactPoly::new(r.coeffs.iter().map(|c| -c).collect());
                chain.push(neg.monic());
            }
        }
        SturmSequence { chain }
    }

    pub fn base(&self) -> &ExactPoly {
        &self.chain[0]
    }

    fn sign_changes(&self, x: &BigRational) -> usize {
        let mut changes = 0;
        let mut last = 0i8;
        for p in &self.chain {
            let v = p.eval(x);
            let s = if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            };
            if s != 0 {
                if last != 0 && s != last {
                    changes += 1;
                }
                last = s;
            }
        }
        changes
    }

    /// Number of distinct real roots in the half-open interval `(lo, hi]`.
    pub fn count(&self, lo: &BigRational, hi: &BigRational) -> usize {
        if self.chain[0].is_zero() || self.chain[0].degree() == Some(0) {
            return 0;
        }
        self.sign_changes(lo).saturating_sub(self.sign_changes(hi))
    }

    /// Distinct roots in the open interval `(lo, hi)`, each located to within
    /// `width` (the midpoint of the final bracket is returned, or the exact
    /// root when a bisection point hits it). `None` if `max_depth` is exceeded.
    pub fn roots_in_open(
        &self,
        lo: &BigRational,
        hi: &BigRational,
        width: &BigRational,
        max_depth: usize,
    ) -> Option<Vec<BigRational>> {
        let mut total = self.count(lo, hi);
        if total > 0 && self.chain[0].eval(hi).is_zero() {
            total -= 1;
        }
        let mut out = Vec::new();
        self.isolate(lo.clone(), hi.clone(), total, width, max_depth, &mut out)?;
        out.sort();
        Some(out)
    }

    fn isolate(
        &self,
        lo: BigRational,
        hi: BigRational,
        n_open: usize,
        width: &BigRational,
        depth: usize,
        out: &mut Vec<BigRational>,
    ) -> Option<()> {
        if n_open == 0 {
            return Some(());
        }
        if depth == 0 {
            return None;
        }
        let two = BigRational::from_integer(BigInt::from(2));
        let mid = (&lo + &hi) / &two;
        let mid_is_root = self.chain[0].eval(&mid).is_zero();
        if n_open == 1 && (&hi - &lo) <= *width {
            out.push(mid);
            return Some(());
        }
        let mut left = self.count(&lo, &mid);
        if mid_is_root {
            out.push(mid.clone());
            left -= 1;
        }
        let right = n_open - left - usize::from(mid_is_root);
        self.isolate(lo, mid.clone(), left, width, depth - 1, out)?;
        self.isolate(mid, hi, right, width, depth - 1, out)
    }
}

fn divisors(n: &BigInt, limit: u64) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n == 0 || n > limit {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    Some(out)
}

/// Rational roots of `p` inside `(lo, hi)` by the rational root theorem.
/// `None` when coefficients are too large to enumerate divisors.
pub fn rational_roots_in_open(p: &ExactPoly, lo: &BigRational, hi: &BigRational) -> Option<Vec<BigRational>> {
    if p.degree().unwrap_or(0) == 0 {
        return Some(Vec::new());
    }
    let lcm = p.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = p.coeffs.iter().map(|c| (c * &lcm).to_integer()).collect();
    let first_nz = ints.iter().position(|c| !c.is_zero())?;
    let trimmed = &ints[first_nz..];
    let mut out = Vec::new();
    if first_nz > 0 && lo.is_negative() && hi.is_positive() {
        out.push(BigRational::zero());
    }
    if trimmed.len() > 1 {
        let num_div = divisors(&trimmed[0], 1_000_000_000_000)?;
        let den_div = divisors(trimmed.last().unwrap(), 1_000_000_000_000)?;
        for a in &num_div {
            for b in &den_div {
                for sign in [1, -1] {
                    let cand = BigRational::new(a * BigInt::from(sign), b.clone());
                    if &cand > lo && &cand < hi && p.eval(&cand).is_zero() && !out.contains(&cand) {
                        out.push(cand);
                    }
                }
            }
        }
    }
    out.sort();
    Some(out)
}

/// `max_{[0, period]} |p|` computed exactly, with the smallest maximising `t`.
/// Returns `None` when some critical point in `(0, period)` is irrational.
pub fn exact_sup_norm(p: &ExactPoly, period: &BigRational) -> Option<(BigRational, BigRational)> {
    let zero = BigRational::zero();
    let dp = p.derivative();
    let mut candidates = vec![zero.clone()];
    if !dp.is_zero() {
        let rational = rational_roots_in_open(&dp, &zero, period)?;
        let sturm = SturmSequence::new(&dp);
        let mut distinct = sturm.count(&zero, period);
        if distinct > 0 && sturm.base().eval(period).is_zero() {
            distinct -= 1;
        }
        if rational.len() != distinct {
            return None;
        }
        candidates.extend(rational);
    }
    candidates.push(period.clone());
    let mut best: Option<(BigRational, BigRational)> = None;
    for t in candidates {
        let v = p.eval(&t).abs();
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, t));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_counts_distinct_roots() {
        // (t - 1/4)^2 (t - 3/4) expanded: t^3 - 5/4 t^2 + 7/16 t - 3/64
        let p = ExactPoly::from_ratios(&[(-3, 64), (7, 16), (-5, 4), (1, 1)]);
        let s = SturmSequence::new(&p);
        assert_eq!(s.count(&rat(0, 1), &rat(1, 1)), 2);
        assert_eq!(s.count(&rat(0, 1), &rat(1, 2)), 1);
        let roots = s.roots_in_open(&rat(0, 1), &rat(1, 1), &rat(1, 1 << 40), 200).unwrap();
        assert_eq!(roots, vec![rat(1, 4), rat(3, 4)]);
    }

    #[test]
    fn irrational_roots_are_bracketed() {
        // t^2 - 1/2 has root 1/sqrt(2) in (0,1)
        let p = ExactPoly::from_ratios(&[(-1, 2), (0, 1), (1, 1)]);
        let s = SturmSequence::new(&p);
        let roots = s.roots_in_open(&rat(0, 1), &rat(1, 1), &rat(1, 1 << 45), 200).unwrap();
        assert_eq!(roots.len(), 1);
        let r = roots[0].to_f64().unwrap();
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn exact_norms() {
        let p = ExactPoly::from_ratios(&[(1, 1), (0, 1), (2, 1), (-2, 1)]);
        let (n, at) = exact_sup_norm(&p, &rat(1, 1)).unwrap();
        assert_eq!(n, rat(35, 27));
        assert_eq!(at, rat(2, 3));
        let q = ExactPoly::from_ratios(&[(1, 1), (-3, 1), (3, 1)]);
        assert_eq!(exact_sup_norm(&q, &rat(1, 1)).unwrap(), (rat(1, 1), rat(0, 1)));
        let zero = ExactPoly::new(vec![]);
        assert_eq!(exact_sup_norm(&zero, &rat(1, 1)).unwrap().0, rat(0, 1));
        // derivative 3t^2 - 1/2 has an irrational root in (0,1)
        let irr = ExactPoly::from_ratios(&[(0, 1), (-1, 2), (0, 1), (1, 1)]);
        assert!(exact_sup_norm(&irr, &rat(1, 1)).is_none());
    }

    #[test]
    fn square_free_part() {
        let p = ExactPoly::from_ratios(&[(1, 1), (-2, 1), (1, 1)]); // (t-1)^2
        assert_eq!(p.square_free(), ExactPoly::from_ratios(&[(-1, 1), (1, 1)]));
    }
}

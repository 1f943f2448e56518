//! Symbolic descriptions of sequences indexed by the cycle number `n ≥ 0`.
//!
//! Every supported family is a special case of the law
//! `scale · ratioⁿ · (n+1)^(−exponent)`, which is closed under products and
//! quotients. Series and infimum questions over all `n` are answered from
//! the law alone, never by numerically extrapolating a finite prefix.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Declared tail of a bound or length sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Constant { value: f64 },
    /// `scale · ratioⁿ`
    Geometric { scale: f64, ratio: f64 },
    /// `scale / (n+1)^exponent`
    PowerLaw { scale: f64, exponent: f64 },
    /// Only the materialized prefix is known; asymptotic questions are undecidable.
    Unspecified,
}

impl Tail {
    pub fn constant(value: f64) -> Self {
        Tail::Constant { value }
    }

    pub fn law(&self) -> Option<Law> {
        match *self {
            Tail::Constant { value } => Some(Law::new(value, 1.0, 0.0)),
            Tail::Geometric { scale, ratio } => Some(Law::new(scale, ratio, 0.0)),
            Tail::PowerLaw { scale, exponent } => Some(Law::new(scale, 1.0, exponent)),
            Tail::Unspecified => None,
        }
    }

    pub fn value(&self, n: usize) -> Option<f64> {
        self.law().map(|l| l.value(n))
    }

    pub fn is_constant(&self) -> bool {
        match self.law() {
            Some(l) => l.scale == 0.0 || (l.ratio == 1.0 && l.exponent == 0.0),
            None => false,
        }
    }

    /// Scale the whole sequence by a positive factor.
    pub fn scaled(&self, k: f64) -> Tail {
        match *self {
            Tail::Constant { value } => Tail::Constant { value: value * k },
            Tail::Geometric { scale, ratio } => Tail::Geometric { scale: scale * k, ratio },
            Tail::PowerLaw { scale, exponent } => Tail::PowerLaw { scale: scale * k, exponent },
            Tail::Unspecified => Tail::Unspecified,
        }
    }

    pub(crate) fn is_well_formed(&self) -> bool {
        match self.law() {
            Some(l) => {
                l.scale.is_finite()
                    && l.scale >= 0.0
                    && l.ratio.is_finite()
                    && l.ratio > 0.0
                    && l.exponent.is_finite()
            }
            None => true,
        }
    }
}

/// Limit of a nonnegative sequence as `n → ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Limit {
    Zero,
    Finite(f64),
    Infinite,
}

/// `scale · ratioⁿ · (n+1)^(−exponent)` with `scale ≥ 0`, `ratio > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Law {
    pub scale: f64,
    pub ratio: f64,
    pub exponent: f64,
}

impl Law {
    pub fn new(scale: f64, ratio: f64, exponent: f64) -> Self {
        Law { scale, ratio, exponent }
    }

    pub fn constant(value: f64) -> Self {
        Law::new(value, 1.0, 0.0)
    }

    pub fn value(&self, n: usize) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let n = n as f64;
        self.scale * (n * self.ratio.ln() - self.exponent * (n + 1.0).ln()).exp()
    }

    pub fn mul(&self, other: &Law) -> Law {
        Law::new(
            self.scale * other.scale,
            self.ratio * other.ratio,
            self.exponent + other.exponent,
        )
    }

    /// `None` when `other` is the zero sequence.
    pub fn div(&self, other: &Law) -> Option<Law> {
        if other.scale == 0.0 {
            return None;
        }
        Some(Law::new(
            self.scale / other.scale,
            self.ratio / other.ratio,
            self.exponent - other.exponent,
        ))
    }

    pub fn scaled(&self, k: f64) -> Law {
        Law::new(self.scale * k, self.ratio, self.exponent)
    }

    pub fn limit(&self) -> Limit {
        if self.scale == 0.0 {
            return Limit::Zero;
        }
        match self.ratio.partial_cmp(&1.0) {
            Some(Ordering::Less) => Limit::Zero,
            Some(Ordering::Greater) => Limit::Infinite,
            _ => {
                if self.exponent > 0.0 {
                    Limit::Zero
                } else if self.exponent == 0.0 {
                    Limit::Finite(self.scale)
                } else {
                    Limit::Infinite
                }
            }
        }
    }

    pub fn is_summable(&self) -> bool {
        self.asym().is_summable()
    }

    /// Exact `inf_{n ≥ n0}` of the sequence.
    pub fn inf_from(&self, n0: usize) -> f64 {
        if self.scale == 0.0 || self.limit() == Limit::Zero {
            return 0.0;
        }
        let ln_r = self.ratio.ln();
        let p = self.exponent;
        if ln_r >= 0.0 && p <= 0.0 {
            // nondecreasing
            return self.value(n0);
        }
        // ln_r > 0, p > 0: log-convex, unique minimiser near (n+1) = p / ln r
        self.extremum_near(n0, p / ln_r - 1.0, f64::min)
    }

    /// Exact `sup_{n ≥ n0}` of the sequence (may be infinite).
    pub fn sup_from(&self, n0: usize) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        if self.limit() == Limit::Infinite {
            return f64::INFINITY;
        }
        let ln_r = self.ratio.ln();
        let p = self.exponent;
        if ln_r <= 0.0 && p >= 0.0 {
            return self.value(n0);
        }
        // ln_r < 0, p < 0: log-concave, unique maximiser near (n+1) = p / ln r
        self.extremum_near(n0, p / ln_r - 1.0, f64::max)
    }

    fn extremum_near(&self, n0: usize, x_star: f64, pick: fn(f64, f64) -> f64) -> f64 {
        let mut best = self.value(n0);
        if x_star.is_finite() && x_star > n0 as f64 {
            let lo = x_star.floor() as usize;
            for n in [lo, lo + 1] {
                if n >= n0 {
                    best = pick(best, self.value(n));
                }
            }
        }
        best
    }

    pub fn asym(&self) -> Asym {
        Asym {
            coef: self.scale,
            rate: self.ratio.ln(),
            power: -self.exponent,
            log_power: 0,
        }
    }
}

/// Leading-order asymptotic form `coef · e^{rate·n} · (n+1)^power · ln(n+1)^log_power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asym {
    pub coef: f64,
    pub rate: f64,
    pub power: f64,
    pub log_power: i32,
}

impl Asym {
    pub fn constant(c: f64) -> Self {
        Asym { coef: c, rate: 0.0, power: 0.0, log_power: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.coef == 0.0
    }

    fn order(&self) -> (f64, f64, i32) {
        (self.rate, self.power, self.log_power)
    }

    /// Compare growth orders, ignoring the coefficient.
    pub fn cmp_order(&self, other: &Asym) -> Ordering {
        if self.is_zero() && other.is_zero() {
            return Ordering::Equal;
        }
        if self.is_zero() {
            return Ordering::Less;
        }
        if other.is_zero() {
            return Ordering::Greater;
        }
        let (a, b) = (self.order(), other.order());
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .then(a.2.cmp(&b.2))
    }

    pub fn limit(&self) -> Limit {
        if self.is_zero() {
            return Limit::Zero;
        }
        match self.cmp_order(&Asym::constant(1.0)) {
            Ordering::Less => Limit::Zero,
            Ordering::Equal => Limit::Finite(self.coef),
            Ordering::Greater => Limit::Infinite,
        }
    }

    pub fn is_summable(&self) -> bool {
        if self.is_zero() {
            return true;
        }
        if self.rate != 0.0 {
            return self.rate < 0.0;
        }
        if self.power != -1.0 {
            return self.power < -1.0;
        }
        self.log_power < -1
    }

    /// Leading term of a sum of two positive sequences.
    pub fn add(&self, other: &Asym) -> Asym {
        match self.cmp_order(other) {
            Ordering::Greater => *self,
            Ordering::Less => *other,
            Ordering::Equal => Asym { coef: self.coef + other.coef, ..*self },
        }
    }

    pub fn mul(&self, other: &Asym) -> Asym {
        Asym {
            coef: self.coef * other.coef,
            rate: self.rate + other.rate,
            power: self.power + other.power,
            log_power: self.log_power + other.log_power,
        }
    }

    /// `None` when dividing by the zero sequence.
    pub fn div(&self, other: &Asym) -> Option<Asym> {
        if other.is_zero() {
            return None;
        }
        Some(Asym {
            coef: self.coef / other.coef,
            rate: self.rate - other.rate,
            power: self.power - other.power,
            log_power: self.log_power - other.log_power,
        })
    }

    pub fn scaled(&self, k: f64) -> Asym {
        Asym { coef: self.coef * k, ..*self }
    }

    /// Leading term of `ln(1 + y_n)`; `None` when it leaves the family
    /// (iterated logarithms).
    pub fn ln_one_plus(&self) -> Option<Asym> {
        match self.limit() {
            Limit::Zero => Some(*self),
            Limit::Finite(a) => Some(Asym::constant((1.0 + a).ln())),
            Limit::Infinite => {
                if self.rate > 0.0 {
                    // ln y ~ rate·n ~ rate·(n+1)
                    Some(Asym { coef: self.rate, rate: 0.0, power: 1.0, log_power: 0 })
                } else if self.power > 0.0 {
                    Some(Asym { coef: self.power, rate: 0.0, power: 0.0, log_power: 1 })
                } else {
                    None
                }
            }
        }
    }

    /// Leading term of `y_n − k` for a sequence with a limit above `k`.
    /// `None` if the difference is not eventually positive or its order is lost.
    pub fn minus_constant(&self, k: f64) -> Option<Asym> {
        match self.limit() {
            Limit::Infinite => Some(*self),
            Limit::Finite(a) if a > k => Some(Asym::constant(a - k)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_inf(l: &Law, n0: usize) -> f64 {
        (n0..n0 + 20_000).map(|n| l.value(n)).fold(f64::INFINITY, f64::min)
    }

    fn brute_sup(l: &Law, n0: usize) -> f64 {
        (n0..n0 + 20_000).map(|n| l.value(n)).fold(0.0, f64::max)
    }

    #[test]
    fn values_of_each_family() {
        assert_eq!(Tail::constant(2.0).value(7), Some(2.0));
        let g = Tail::Geometric { scale: 3.0, ratio: 0.5 };
        assert!((g.value(2).unwrap() - 0.75).abs() < 1e-15);
        let p = Tail::PowerLaw { scale: 1.0, exponent: 2.0 };
        assert!((p.value(3).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(Tail::Unspecified.value(0), None);
    }

    #[test]
    fn inf_and_sup_match_enumeration() {
        let laws = [
            Law::new(2.0, 1.01, 3.0),
            Law::new(1.0, 1.0, -0.5),
            Law::new(1.0, 0.97, -2.0),
            Law::new(4.0, 1.0, 0.0),
            Law::new(1.0, 1.0, 1.0),
        ];
        for l in &laws {
            for n0 in [0usize, 3, 50] {
                if l.limit() != Limit::Zero {
                    let b = brute_inf(l, n0);
                    assert!((l.inf_from(n0) - b).abs() <= 1e-12 * b.max(1.0), "{l:?}");
                } else {
                    assert_eq!(l.inf_from(n0), 0.0);
                }
                if l.limit() != Limit::Infinite {
                    let b = brute_sup(l, n0);
                    assert!((l.sup_from(n0) - b).abs() <= 1e-12 * b.max(1.0), "{l:?}");
                } else {
                    assert!(l.sup_from(n0).is_infinite());
                }
            }
        }
    }

    #[test]
    fn summability_table() {
        assert!(Law::new(1.0, 0.5, 0.0).is_summable());
        assert!(!Law::new(1.0, 1.0, 1.0).is_summable());
        assert!(Law::new(1.0, 1.0, 1.5).is_summable());
        assert!(!Law::constant(0.1).is_summable());
        assert!(Law::constant(0.0).is_summable());
        assert!(!Law::new(1.0, 1.1, 5.0).is_summable());
    }

    #[test]
    fn ln_one_plus_orders() {
        let small = Law::new(1.0, 1.0, 2.0).asym();
        assert_eq!(small.ln_one_plus(), Some(small));
        let c = Asym::constant(1.0).ln_one_plus().unwrap();
        assert!((c.coef - 2f64.ln()).abs() < 1e-15);
        let geo = Law::new(1.0, 2.0, 0.0).asym().ln_one_plus().unwrap();
        assert_eq!((geo.power, geo.log_power), (1.0, 0));
        assert!((geo.coef - 2f64.ln()).abs() < 1e-15);
        let poly = Law::new(1.0, 1.0, -2.0).asym().ln_one_plus().unwrap();
        assert_eq!((poly.coef, poly.log_power), (2.0, 1));
    }
}

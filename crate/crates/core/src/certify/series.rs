//! Symbolic series conditions for asymptotic stability.
//!
//! Every verdict is read off the declared tails. A finite prefix never
//! changes convergence, so the materialized cycles play no part here.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use super::Status;
use crate::schedule::{Asym, BoundTails, Law, Limit, Tail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeriesKind {
    #[serde(rename = "STAR")]
    Star,
    #[serde(rename = "STARSTAR")]
    StarStar,
    #[serde(rename = "M32A")]
    M32A,
    #[serde(rename = "M32Anew")]
    M32ANew,
    #[serde(rename = "STAREXPLICIT")]
    StarExplicit,
}

impl SeriesKind {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesKind::Star => "STAR",
            SeriesKind::StarStar => "STARSTAR",
            SeriesKind::M32A => "M32A",
            SeriesKind::M32ANew => "M32Anew",
            SeriesKind::StarExplicit => "STAREXPLICIT",
        }
    }
}

/// Declared tails of every participating sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTails {
    pub bounds: BoundTails,
    /// `T_{2n}`
    pub even: Tail,
    /// `T_{2n+1}`
    pub odd: Tail,
}

/// Constants entering the summands. Unused fields are ignored by a kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConstants {
    /// observability constant `c`
    pub c: f64,
    /// embedding constant in the active-interval denominator (`C` or `C₁`)
    pub embed: f64,
    /// embedding constant of the delayed channel (`C` or `C₂`)
    pub embed_odd: f64,
    pub xi: f64,
    pub t_bar: f64,
    pub alphas: [f64; 3],
    /// damped observability constant shared by every cycle past the horizon
    pub d_tail: Option<f64>,
}

impl Default for SeriesConstants {
    fn default() -> Self {
        SeriesConstants {
            c: 1.0,
            embed: 1.0,
            embed_odd: 1.0,
            xi: 1.0,
            t_bar: 0.0,
            alphas: [0.0; 3],
            d_tail: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behaviour {
    Converges,
    Diverges,
    /// `Σ aₙ = −∞` for a signed summand
    DivergesToMinusInfinity,
    Bounded,
    Undecidable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubSeries {
    pub series: String,
    pub behaviour: Behaviour,
    pub required: Behaviour,
}

impl SubSeries {
    fn status(&self) -> Status {
        if self.behaviour == Behaviour::Undecidable {
            Status::Undecidable
        } else if self.behaviour == self.required {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub kind: SeriesKind,
    pub status: Status,
    pub parts: Vec<SubSeries>,
    pub reason: String,
}

fn summable(law: Option<Law>) -> Behaviour {
    match law {
        Some(l) if l.is_summable() => Behaviour::Converges,
        Some(_) => Behaviour::Diverges,
        None => Behaviour::Undecidable,
    }
}

fn summable_asym(a: Option<Asym>) -> Behaviour {
    match a {
        Some(a) if a.is_summable() => Behaviour::Converges,
        Some(_) => Behaviour::Diverges,
        None => Behaviour::Undecidable,
    }
}

/// For nonnegative `pₙ, qₙ`: does `Σ (pₙ − qₙ) = −∞`? `None` when the
/// leading terms cancel exactly.
pub fn sum_difference_to_minus_infinity(p: &Asym, q: &Asym) -> Option<bool> {
    match (p.is_summable(), q.is_summable()) {
        (_, true) => Some(false),
        (true, false) => Some(true),
        (false, false) => match p.cmp_order(q) {
            Ordering::Less => Some(true),
            Ordering::Greater => Some(false),
            Ordering::Equal => match q.coef.partial_cmp(&p.coef) {
                Some(Ordering::Greater) => Some(true),
                Some(Ordering::Less) => Some(false),
                _ => None,
            },
        },
    }
}

fn odd_product(t: &SeriesTails) -> Option<Law> {
    Some(t.bounds.m_odd.law()?.mul(&t.odd.law()?))
}

/// `mₙ / (1 + 4K²Tₙ²Mₙ²)`
fn active_gain(t: &SeriesTails, k: f64) -> Option<Asym> {
    let tm = t.even.law()?.mul(&t.bounds.big_m.law()?);
    let den = Asym::constant(1.0).add(&tm.mul(&tm).scaled(4.0 * k * k).asym());
    t.bounds.m.law()?.asym().div(&den)
}

fn combine(kind: SeriesKind, parts: Vec<SubSeries>, reason: String) -> SeriesVerdict {
    let status = Status::all(parts.iter().map(SubSeries::status));
    SeriesVerdict { kind, status, parts, reason }
}

const SUM_ODD: &str = "sum M_odd·T_odd";

pub fn check_series(kind: SeriesKind, tails: &SeriesTails, k: &SeriesConstants) -> SeriesVerdict {
    let odd = SubSeries {
        series: SUM_ODD.into(),
        behaviour: summable(odd_product(tails)),
        required: Behaviour::Converges,
    };
    match kind {
        SeriesKind::Star => {
            let gain = active_gain(tails, k.embed);
            let second = SubSeries {
                series: "sum m/(1 + 4C²T²M²)".into(),
                behaviour: summable_asym(gain),
                required: Behaviour::Diverges,
            };
            combine(kind, vec![odd, second], "p-series and geometric comparison on the tails".into())
        }
        SeriesKind::StarStar => {
            let behaviour = match k.d_tail {
                Some(d) if d > 0.0 && d.is_finite() => Behaviour::DivergesToMinusInfinity,
                _ => Behaviour::Undecidable,
            };
            let reason = match k.d_tail {
                Some(d) => format!("d_n = {d} on every cycle past the horizon, so ln d̂_n is a negative constant"),
                None => "d_n past the horizon is not determined by the declared tails".into(),
            };
            let second = SubSeries {
                series: "sum ln d̂_n".into(),
                behaviour,
                required: Behaviour::DivergesToMinusInfinity,
            };
            combine(kind, vec![odd, second], reason)
        }
        SeriesKind::M32A => {
            let (behaviour, reason) = m32a(tails, k);
            let part = SubSeries {
                series: "sum [C(ξ + 1/ξ)M_odd·T_odd + ln c_n]".into(),
                behaviour,
                required: Behaviour::DivergesToMinusInfinity,
            };
            combine(kind, vec![part], reason)
        }
        SeriesKind::M32ANew => {
            let (behaviour, reason) = m32a_new(tails, k);
            let part = SubSeries {
                series: "sum [C₂M_odd·T_odd + ln(ĉ_n + 1 − e^{−C₂M_odd·T_odd})]".into(),
                behaviour,
                required: Behaviour::DivergesToMinusInfinity,
            };
            combine(kind, vec![part], reason)
        }
        SeriesKind::StarExplicit => {
            let (ratio, reason) = explicit_ratio(tails, k);
            let second = SubSeries {
                series: "sum m(T − T̄)/(α₁Mm + α₂m + α₃)".into(),
                behaviour: summable_asym(ratio),
                required: Behaviour::Diverges,
            };
            combine(kind, vec![odd, second], reason)
        }
    }
}

fn verdict(v: Option<bool>) -> Behaviour {
    match v {
        Some(true) => Behaviour::DivergesToMinusInfinity,
        Some(false) => Behaviour::Bounded,
        None => Behaviour::Undecidable,
    }
}

fn m32a(tails: &SeriesTails, k: &SeriesConstants) -> (Behaviour, String) {
    let Some(prod) = odd_product(tails) else {
        return (Behaviour::Undecidable, "odd-interval tails unspecified".into());
    };
    let Some(gain) = active_gain(tails, k.embed) else {
        return (Behaviour::Undecidable, "active-interval tails unspecified".into());
    };
    let a = prod.asym().scaled(k.embed * (k.xi + 1.0 / k.xi));
    let Some(b) = gain.scaled(1.0 / (4.0 * k.c)).ln_one_plus() else {
        return (Behaviour::Undecidable, "ln(1 + y_n) leaves the supported family".into());
    };
    let v = sum_difference_to_minus_infinity(&a, &b);
    let reason = match v {
        Some(true) => "-ln c_n dominates the growth exponent".to_string(),
        Some(false) => "growth exponent is not dominated by -ln c_n".to_string(),
        None => "leading terms of growth and contraction cancel".to_string(),
    };
    (verdict(v), reason)
}

fn m32a_new(tails: &SeriesTails, k: &SeriesConstants) -> (Behaviour, String) {
    let Some(prod) = odd_product(tails) else {
        return (Behaviour::Undecidable, "odd-interval tails unspecified".into());
    };
    let Some(gain) = active_gain(tails, k.embed) else {
        return (Behaviour::Undecidable, "active-interval tails unspecified".into());
    };
    let x = prod.asym().scaled(k.embed_odd);
    let y_hat = gain.scaled(1.0 / (2.0 * k.c));
    let Some(ln_y) = y_hat.ln_one_plus() else {
        return (Behaviour::Undecidable, "ln(1 + ŷ_n) leaves the supported family".into());
    };
    match x.limit() {
        Limit::Zero => {
            // x − ln(1+ŷ) ≤ term ≤ x(2 + ŷ) − ln(1+ŷ)
            let upper = x.mul(&Asym::constant(2.0).add(&y_hat));
            if sum_difference_to_minus_infinity(&upper, &ln_y) == Some(true) {
                return (Behaviour::DivergesToMinusInfinity, "upper bound x(2 + ŷ) − ln(1 + ŷ) sums to −∞".into());
            }
            if sum_difference_to_minus_infinity(&x, &ln_y) == Some(false) {
                return (Behaviour::Bounded, "lower bound x − ln(1 + ŷ) does not sum to −∞".into());
            }
            (Behaviour::Undecidable, "upper and lower bounds disagree".into())
        }
        Limit::Finite(l) => {
            let c_hat = match y_hat.limit() {
                Limit::Zero => 1.0,
                Limit::Finite(a) => 1.0 / (1.0 + a),
                Limit::Infinite => 0.0,
            };
            let term = l + (c_hat + 1.0 - (-l).exp()).ln();
            let reason = format!("summand tends to {term}");
            if term < 0.0 {
                (Behaviour::DivergesToMinusInfinity, reason)
            } else if term > 0.0 {
                (Behaviour::Bounded, reason)
            } else {
                (Behaviour::Undecidable, reason)
            }
        }
        Limit::Infinite => (Behaviour::Bounded, "C₂M_odd·T_odd is unbounded".into()),
    }
}

fn explicit_ratio(tails: &SeriesTails, k: &SeriesConstants) -> (Option<Asym>, String) {
    let (Some(m), Some(big_m), Some(t)) = (tails.bounds.m.law(), tails.bounds.big_m.law(), tails.even.law())
    else {
        return (None, "active-interval tails unspecified".into());
    };
    let Some(gap) = t.asym().minus_constant(k.t_bar) else {
        return (None, "T_2n − T̄ is not eventually bounded away from 0".into());
    };
    let [a1, a2, a3] = k.alphas;
    let terms = [
        (a1, m.mul(&big_m).asym()),
        (a2, m.asym()),
        (a3, Asym::constant(1.0)),
    ];
    let den = terms
        .iter()
        .filter(|(a, s)| *a > 0.0 && !s.is_zero())
        .map(|(a, s)| s.scaled(*a))
        .reduce(|x, y| x.add(&y));
    let Some(den) = den else {
        return (None, "all quasi-observability constants vanish".into());
    };
    (m.asym().mul(&gap).div(&den), "p-series and geometric comparison on the tails".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tails(m_odd: Tail, odd: Tail) -> SeriesTails {
        SeriesTails {
            bounds: BoundTails { m: Tail::constant(1.0), big_m: Tail::constant(1.0), m_odd },
            even: Tail::constant(1.0),
            odd,
        }
    }

    #[test]
    fn geometric_odd_with_constant_gain_passes() {
        let t = tails(Tail::Geometric { scale: 1.0, ratio: 0.5 }, Tail::constant(1.0));
        let v = check_series(SeriesKind::Star, &t, &SeriesConstants::default());
        assert_eq!(v.status, Status::Pass);
        assert_eq!(v.parts[0].behaviour, Behaviour::Converges);
        assert_eq!(v.parts[1].behaviour, Behaviour::Diverges);
    }

    #[test]
    fn harmonic_odd_fails_first_condition() {
        let t = tails(Tail::PowerLaw { scale: 1.0, exponent: 1.0 }, Tail::constant(1.0));
        let v = check_series(SeriesKind::Star, &t, &SeriesConstants::default());
        assert_eq!(v.parts[0].behaviour, Behaviour::Diverges);
        assert_eq!(v.status, Status::Fail);
    }

    #[test]
    fn constant_d_hat_gives_minus_infinity() {
        let t = tails(Tail::Geometric { scale: 1.0, ratio: 0.5 }, Tail::constant(1.0));
        let k = SeriesConstants { d_tail: Some(1.0), ..Default::default() };
        let v = check_series(SeriesKind::StarStar, &t, &k);
        assert_eq!(v.parts[1].behaviour, Behaviour::DivergesToMinusInfinity);
        assert_eq!(v.status, Status::Pass);
        let v = check_series(SeriesKind::StarStar, &t, &SeriesConstants::default());
        assert_eq!(v.status, Status::Undecidable);
    }

    #[test]
    fn unspecified_tail_is_undecidable() {
        let t = tails(Tail::Unspecified, Tail::constant(1.0));
        for kind in [SeriesKind::Star, SeriesKind::M32A, SeriesKind::M32ANew] {
            assert_eq!(check_series(kind, &t, &SeriesConstants::default()).status, Status::Undecidable);
        }
    }

    #[test]
    fn gain_decaying_faster_than_harmonic_fails() {
        let mut t = tails(Tail::constant(0.0), Tail::constant(1.0));
        t.bounds.m = Tail::PowerLaw { scale: 1.0, exponent: 2.0 };
        let v = check_series(SeriesKind::Star, &t, &SeriesConstants::default());
        assert_eq!(v.parts[1].behaviour, Behaviour::Converges);
        assert_eq!(v.status, Status::Fail);
        // harmonic gain still diverges
        t.bounds.m = Tail::PowerLaw { scale: 1.0, exponent: 1.0 };
        assert_eq!(check_series(SeriesKind::Star, &t, &SeriesConstants::default()).status, Status::Pass);
    }

    #[test]
    fn growing_active_bound_kills_the_gain() {
        // m = M = n+1: m/(1 + 4M²) ~ 1/(4(n+1)), still harmonic
        let mut t = tails(Tail::constant(0.0), Tail::constant(1.0));
        t.bounds.m = Tail::PowerLaw { scale: 1.0, exponent: -1.0 };
        t.bounds.big_m = Tail::PowerLaw { scale: 1.0, exponent: -1.0 };
        assert_eq!(check_series(SeriesKind::Star, &t, &SeriesConstants::default()).status, Status::Pass);
        // M = (n+1)²: m/(4M²) ~ (n+1)^{-3}
        t.bounds.big_m = Tail::PowerLaw { scale: 1.0, exponent: -2.0 };
        assert_eq!(check_series(SeriesKind::Star, &t, &SeriesConstants::default()).status, Status::Fail);
    }

    #[test]
    fn m32a_compares_growth_with_contraction() {
        let k = SeriesConstants::default();
        // constant odd product vs constant contraction: compare limits
        let t = tails(Tail::constant(0.01), Tail::constant(1.0));
        // a = 2·0.01 = 0.02, b = ln(1 + 1/(4·5)) ≈ 0.0488
        assert_eq!(check_series(SeriesKind::M32A, &t, &k).status, Status::Pass);
        let t = tails(Tail::constant(0.1), Tail::constant(1.0));
        assert_eq!(check_series(SeriesKind::M32A, &t, &k).status, Status::Fail);
        let t = tails(Tail::Geometric { scale: 5.0, ratio: 0.9 }, Tail::constant(1.0));
        assert_eq!(check_series(SeriesKind::M32A, &t, &k).status, Status::Pass);
    }

    #[test]
    fn star_implies_m32a_and_m32a_new() {
        let cases = [
            (Tail::Geometric { scale: 1.0, ratio: 0.5 }, Tail::constant(1.0)),
            (Tail::PowerLaw { scale: 3.0, exponent: 2.0 }, Tail::constant(0.5)),
            (Tail::constant(0.0), Tail::constant(2.0)),
        ];
        for (m_odd, odd) in cases {
            let t = tails(m_odd, odd);
            let k = SeriesConstants::default();
            assert_eq!(check_series(SeriesKind::Star, &t, &k).status, Status::Pass);
            assert_eq!(check_series(SeriesKind::M32A, &t, &k).status, Status::Pass);
            assert_eq!(check_series(SeriesKind::M32ANew, &t, &k).status, Status::Pass);
        }
    }

    #[test]
    fn m32a_new_with_constant_delay_term() {
        let k = SeriesConstants::default();
        // ĉ → 1/1.1; x = 0.01: 0.01 + ln(ĉ + 1 − e^{−0.01}) < 0
        let t = tails(Tail::constant(0.01), Tail::constant(1.0));
        assert_eq!(check_series(SeriesKind::M32ANew, &t, &k).status, Status::Pass);
        // x = 2: 2 + ln(ĉ + 1 − e^{−2}) > 0
        let t = tails(Tail::constant(2.0), Tail::constant(1.0));
        assert_eq!(check_series(SeriesKind::M32ANew, &t, &k).status, Status::Fail);
        let t = tails(Tail::PowerLaw { scale: 1.0, exponent: -1.0 }, Tail::constant(1.0));
        assert_eq!(check_series(SeriesKind::M32ANew, &t, &k).status, Status::Fail);
    }

    #[test]
    fn explicit_series_follows_the_tails() {
        let k = SeriesConstants { alphas: [1.0, 1.0, 1.0], t_bar: 1.0, ..Default::default() };
        let mut t = tails(Tail::Geometric { scale: 1.0, ratio: 0.5 }, Tail::constant(1.0));
        t.even = Tail::constant(2.0);
        assert_eq!(check_series(SeriesKind::StarExplicit, &t, &k).status, Status::Pass);
        // T_2n → T̄ loses the order
        t.even = Tail::constant(1.0);
        assert_eq!(check_series(SeriesKind::StarExplicit, &t, &k).status, Status::Undecidable);
        // m = M = (n+1)²: m/(α₁Mm) ~ (n+1)^{-2}
        t.even = Tail::constant(2.0);
        t.bounds.m = Tail::PowerLaw { scale: 1.0, exponent: -2.0 };
        t.bounds.big_m = Tail::PowerLaw { scale: 1.0, exponent: -2.0 };
        assert_eq!(check_series(SeriesKind::StarExplicit, &t, &k).status, Status::Fail);
    }

    #[test]
    fn difference_rule() {
        let c = |v| Asym::constant(v);
        assert_eq!(sum_difference_to_minus_infinity(&c(1.0), &c(2.0)), Some(true));
        assert_eq!(sum_difference_to_minus_infinity(&c(2.0), &c(1.0)), Some(false));
        assert_eq!(sum_difference_to_minus_infinity(&c(1.0), &c(1.0)), None);
        let h = Law::new(1.0, 1.0, 1.0).asym();
        assert_eq!(sum_difference_to_minus_infinity(&Asym::constant(0.0), &h), Some(true));
        assert_eq!(sum_difference_to_minus_infinity(&h, &Law::new(1.0, 1.0, 2.0).asym()), Some(false));
    }
}

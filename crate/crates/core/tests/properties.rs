use proptest::prelude::*;

use delaystab::certify::{
    self, contraction_cn, contraction_cn_hat, contraction_dn_hat, cycle_bound_es, growth_factor_e, small_gain_threshold,
    CertModel, CertifyOptions, Family, Status,
};
use delaystab::energy::select_xi;
use delaystab::modal::{simulate, ModalState, ModalSystem, RunOptions};
use delaystab::observability::observability_constant;
use delaystab::schedule::{build_schedule, hypothesis, validate, FeedbackProfile, Parity, ValidationMode};

fn pos() -> impl Strategy<Value = f64> {
    0.01f64..10.0
}

proptest! {
    #[test]
    fn cn_in_unit_interval_and_monotone(c in pos(), embed in pos(), t in pos(), big_m in pos(), m in pos(), f in 1.01f64..3.0) {
        let base = contraction_cn(c, embed, t, big_m, m).unwrap();
        prop_assert!(base > 0.0 && base < 1.0);
        prop_assert!(contraction_cn(c * f, embed, t, big_m, m).unwrap() >= base);
        prop_assert!(contraction_cn(c, embed * f, t, big_m, m).unwrap() >= base);
        prop_assert!(contraction_cn(c, embed, t * f, big_m, m).unwrap() >= base);
        prop_assert!(contraction_cn(c, embed, t, big_m * f, m).unwrap() >= base);
        prop_assert!(contraction_cn(c, embed, t, big_m, m * f).unwrap() <= base);
    }

    #[test]
    fn standard_contraction_below_augmented(c in pos(), embed in pos(), t in pos(), big_m in pos(), m in pos()) {
        let hat = contraction_cn_hat(c, embed, t, big_m, m).unwrap();
        prop_assert!(hat > 0.0 && hat < 1.0);
        prop_assert!(hat <= contraction_cn(c, embed, t, big_m, m).unwrap());
    }

    #[test]
    fn dn_hat_in_unit_interval_and_increasing(d in 1e-6f64..1e6, f in 1.01f64..3.0) {
        let a = contraction_dn_hat(d).unwrap();
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(contraction_dn_hat(d * f).unwrap() > a);
    }

    #[test]
    fn growth_at_least_one_and_cycle_bound_brackets(embed in pos(), xi in pos(), m_odd in 0.0f64..2.0, t_odd in 0.0f64..2.0, c_hat in 0.0f64..1.0) {
        let g = growth_factor_e(embed, xi, m_odd, t_odd).unwrap();
        prop_assert!(g >= 1.0);
        prop_assert!(growth_factor_e(embed, xi, m_odd + 0.1, t_odd).unwrap() >= g);
        let b = cycle_bound_es(embed, m_odd, t_odd, c_hat).unwrap();
        prop_assert!(b >= c_hat - 1e-15);
    }

    #[test]
    fn small_gain_threshold_separates(d in 0.01f64..0.99, embed in pos(), t_tilde in pos(), f in 0.1f64..0.99) {
        let m_max = small_gain_threshold(d, embed, t_tilde).unwrap();
        let below = (embed * m_max * f * t_tilde).exp();
        prop_assert!(below * d + below - 1.0 < 1.0);
        let above = (embed * m_max / f * t_tilde).exp();
        prop_assert!(above * d + above - 1.0 > 1.0);
    }

    #[test]
    fn schedule_classify_round_trip(
        lens in prop::collection::vec((0.1f64..3.0, 0.1f64..3.0), 1..6),
        frac in 0.01f64..0.99,
    ) {
        let n = lens.len();
        let even: Vec<f64> = lens.iter().map(|l| l.0).collect();
        let odd: Vec<f64> = lens.iter().map(|l| l.1).collect();
        let s = build_schedule(&even, &odd, 1.0, n).unwrap();
        let times = s.times().to_vec();
        prop_assert_eq!(times.len(), 2 * n + 1);
        for k in 0..2 * n {
            let (i, p) = s.classify(times[k]).unwrap();
            prop_assert_eq!(i, k);
            prop_assert_eq!(p, Parity::of(k));
            let mid = times[k] + frac * (times[k + 1] - times[k]);
            prop_assert_eq!(s.classify(mid).unwrap().0, k);
        }
        for c in 0..n {
            prop_assert!((s.even_length(c) - even[c]).abs() < 1e-12);
            prop_assert!((s.odd_length(c) - odd[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn restricted_mode_tracks_short_delayed_intervals(odd in 0.1f64..2.0, tau in 0.2f64..1.5) {
        let s = build_schedule(&[2.0], &[odd], tau, 3).unwrap();
        let p = FeedbackProfile::constant(1.0, 0.2, 3).unwrap();
        let r = validate(&s, &p, ValidationMode::Restricted, 0.0);
        prop_assert_eq!(r.violates(hypothesis::REST), odd > tau * (1.0 + 1e-12));
        // the general mode never asks for short delayed intervals
        prop_assert!(!validate(&s, &p, ValidationMode::General, 0.0).violates(hypothesis::REST));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn observability_constant_non_increasing_in_horizon(l2 in 1.5f64..10.0, t in 0.5f64..4.0, f in 1.05f64..2.0) {
        let sys = ModalSystem::identity(vec![1.0, l2]).unwrap();
        let a = observability_constant(&sys, t).unwrap();
        let b = observability_constant(&sys, t * f).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-10));
    }

    #[test]
    fn solutions_are_linear(
        x in prop::collection::vec(-1.0f64..1.0, 6),
        y in prop::collection::vec(-1.0f64..1.0, 6),
        alpha in -2.0f64..2.0,
        b2 in -1.0f64..1.0,
    ) {
        let sys = ModalSystem::identity(vec![1.0, 4.0, 9.0]).unwrap();
        let s = build_schedule(&[1.5], &[0.8], 1.0, 2).unwrap();
        let p = FeedbackProfile::constant(0.7, b2, 2).unwrap();
        let run = |a: Vec<f64>, v: Vec<f64>| {
            let t = simulate(&sys, &s, &p, &ModalState::new(0.0, a, v), &RunOptions::new(0.02)).unwrap();
            let snap = t.final_snapshot().clone();
            (snap.u, snap.v)
        };
        let (ux, vx) = run(x[..3].to_vec(), x[3..].to_vec());
        let (uy, vy) = run(y[..3].to_vec(), y[3..].to_vec());
        let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
        let (uz, vz) = run(comb[..3].to_vec(), comb[3..].to_vec());
        for i in 0..3 {
            prop_assert!((uz[i] - (alpha * ux[i] + uy[i])).abs() < 1e-12);
            prop_assert!((vz[i] - (alpha * vx[i] + vy[i])).abs() < 1e-12);
        }
    }

    /// Per-cycle certified bounds chain into the measured energy decay.
    #[test]
    fn certified_cycle_bounds_hold_along_runs(
        b1 in 0.5f64..2.0,
        b2 in 0.0f64..0.3,
        t_odd in 0.2f64..1.0,
        a in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        prop_assume!(a.iter().any(|x| x.abs() > 0.1));
        let sys = ModalSystem::identity(vec![1.0, 4.0, 9.0]).unwrap();
        let s = build_schedule(&[std::f64::consts::PI], &[t_odd], 1.0, 4).unwrap();
        let p = FeedbackProfile::constant(b1, b2, 4).unwrap();
        let xi = select_xi(&p).unwrap().xi;
        let trace = simulate(&sys, &s, &p, &ModalState::new(0.0, a, vec![0.0; 3]), &RunOptions::new(0.02).xi(xi)).unwrap();
        let report = certify::certify(&s, &p, ValidationMode::Periodic, CertModel::Modal(&sys), CertifyOptions::default(), Some(&trace)).unwrap();
        for check in &report.measured {
            prop_assert_eq!(check.status, Status::Pass, "{}", check.name);
        }
        // chained bound over all cycles
        let aug = report.family(Family::Augmented).unwrap();
        let bound: f64 = aug.cycles.iter().map(|c| c.cycle_bound).product();
        let e0 = trace.switches[0].e;
        let e_end = trace.switches.last().unwrap().e;
        prop_assert!(e_end <= bound * e0 * (1.0 + 1e-9) + 1e-12);
    }
}

use bigjump_core::asymptotics::{per_epoch_series, SeriesOptions};
use bigjump_core::mc::Proportion;
use bigjump_core::presets;
use bigjump_core::risk_engine::{simulate, tail_curve, PremiumSpec, TruncationPolicy};
use bigjump_core::RareSet;
use proptest::prelude::*;

fn grid(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wilson_interval_brackets_estimate(n in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let hits = ((n as f64) * frac).floor() as u64;
        let p = Proportion::wilson(hits, n);
        prop_assert!(0.0 <= p.ci_low && p.ci_low <= p.p_hat && p.p_hat <= p.ci_high && p.ci_high <= 1.0);
    }

    #[test]
    fn projection_matches_membership(z in prop::collection::vec(0.0f64..100.0, 2), x in 0.1f64..100.0, lambda in 0.5f64..4.0) {
        let set = presets::reference_set();
        let proj = set.projection(&z).unwrap();
        prop_assert_eq!(set.contains(&z, x).unwrap(), proj > x);
        let scaled = set.scaled(lambda).unwrap();
        prop_assert!((scaled.projection(&z).unwrap() - proj / lambda).abs() <= 1e-12 * (1.0 + proj));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tail_curves_are_monotone_and_reproducible(seed in any::<u64>(), xs in prop::collection::vec(1.0f64..200.0, 1..6)) {
        let grid = grid(xs);
        let bundle = presets::theorem31_bundle();
        let set = presets::reference_set();
        let policy = TruncationPolicy::default();
        let a = tail_curve(&bundle, &set, &grid, 3000, &policy, seed).unwrap();
        let b = tail_curve(&bundle, &set, &grid, 3000, &policy, seed).unwrap();
        prop_assert_eq!(a.p_hat(), b.p_hat());
        prop_assert!(a.points.windows(2).all(|w| w[1].hits <= w[0].hits));
    }

    #[test]
    fn ruin_never_exceeds_tail(seed in any::<u64>(), c1 in 0.0f64..2.0, c2 in 0.0f64..2.0) {
        let bundle = presets::theorem31_bundle();
        let set = presets::reference_set();
        let grid = [2.0, 8.0, 30.0];
        let premium = PremiumSpec { rates: vec![c1, c2] };
        let r = simulate(&bundle, &set, &grid, 3000, &TruncationPolicy::default(), seed, Some(&premium)).unwrap();
        let psi = r.ruin.unwrap();
        for (q, p) in psi.iter().zip(&r.tail.points) {
            prop_assert!(q.hits <= p.hits);
        }
        prop_assert!(psi.windows(2).all(|w| w[1].hits <= w[0].hits));
    }

    #[test]
    fn series_value_is_the_sum_of_its_terms(seed in any::<u64>(), x in 5.0f64..200.0) {
        let opts = SeriesOptions { n_per_epoch: 2000, tol: 1e-2, ..SeriesOptions::default() };
        let s = per_epoch_series(&presets::theorem31_bundle(), &presets::reference_set(), x, &opts, seed).unwrap();
        let total: f64 = s.terms.iter().sum();
        prop_assert!((s.value - total).abs() <= 1e-12 * total.max(1e-300));
        prop_assert_eq!(s.terms.len() as u64, s.truncated_at);
        prop_assert!(s.terms.iter().all(|t| *t >= 0.0));
    }

    #[test]
    fn wider_sets_are_hit_more_often(seed in any::<u64>(), b in 0.5f64..3.0) {
        // A₂ with a larger b is a subset: fewer exceedances on identical paths.
        let bundle = presets::theorem31_bundle();
        let narrow = RareSet::new(vec![vec![0.5, 0.5]], "narrow").unwrap();
        let wide = narrow.scaled(1.0 / (1.0 + b)).unwrap();
        let policy = TruncationPolicy::default();
        let a = tail_curve(&bundle, &narrow, &[10.0], 2000, &policy, seed).unwrap();
        let w = tail_curve(&bundle, &wide, &[10.0], 2000, &policy, seed).unwrap();
        prop_assert!(a.points[0].hits <= w.points[0].hits);
    }
}

use pilot_core::distributions::{
    chisq_cdf, chisq_quantile, nct_cdf, norm_cdf, norm_quantile, t_cdf, t_quantile,
};
use pilot_core::effect::{effect_pilot_n, plan_effect_pilot};
use pilot_core::power::{
    power_for_effect_size, size_for_effect_size, DesignKind, EffectSpec, QuantileMode, TestDesign,
};
use pilot_core::variance::{
    pilot_n_approx, pilot_n_exact, plan_variance_pilot, PilotMode, PowerBounds, Side,
    VarianceOptions,
};
use proptest::prelude::*;

fn design(kind: DesignKind) -> TestDesign {
    TestDesign::new(kind, 0.05).unwrap()
}

fn kinds() -> impl Strategy<Value = DesignKind> {
    prop_oneof![Just(DesignKind::OneSample), Just(DesignKind::TwoSample)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normal_round_trip(p in 1e-12f64..(1.0 - 1e-12)) {
        let x = norm_quantile(p).unwrap();
        let back = norm_cdf(x).unwrap();
        prop_assert!((back - p).abs() <= 1e-10 * p.min(1.0 - p).max(1e-3));
    }

    #[test]
    fn t_round_trip(p in 0.001f64..0.999, df in 1.0f64..300.0) {
        let x = t_quantile(p, df).unwrap();
        prop_assert!((t_cdf(x, df).unwrap() - p).abs() < 1e-8);
    }

    #[test]
    fn chisq_round_trip(p in 0.001f64..0.999, df in 0.5f64..300.0) {
        let x = chisq_quantile(p, df).unwrap();
        prop_assert!((chisq_cdf(x, df).unwrap() - p).abs() < 1e-8);
    }

    #[test]
    fn nct_decreases_in_ncp(t in -3.0f64..5.0, df in 1.0f64..200.0, a in -3.0f64..4.0, gap in 0.01f64..2.0) {
        prop_assert!(nct_cdf(t, df, a + gap).unwrap() <= nct_cdf(t, df, a).unwrap() + 1e-14);
    }

    #[test]
    fn nct_with_zero_ncp_is_central(t in -8.0f64..8.0, df in 1.0f64..500.0) {
        prop_assert!((nct_cdf(t, df, 0.0).unwrap() - t_cdf(t, df).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn main_size_is_smallest_adequate(es in 0.15f64..2.0, target in 0.55f64..0.95, kind in kinds()) {
        let d = design(kind);
        let n = size_for_effect_size(es, &d, target, QuantileMode::TIterative).unwrap().n;
        prop_assert!(power_for_effect_size(n as f64, es, &d).unwrap() >= target);
        if n > 2 {
            prop_assert!(power_for_effect_size((n - 1) as f64, es, &d).unwrap() < target);
        }
    }

    #[test]
    fn variance_plan_depends_only_on_effect_size(
        delta in 0.2f64..5.0, sigma in 0.5f64..8.0, k in 0.1f64..20.0,
        p in 0.05f64..0.45, exact in any::<bool>(), kind in kinds(),
    ) {
        prop_assume!(delta / sigma < 2.5);
        let d = design(kind);
        let bounds = PowerBounds::new(p, 0.6).unwrap();
        let opts = VarianceOptions {
            pilot_mode: if exact { PilotMode::Exact } else { PilotMode::Approx },
            ..VarianceOptions::default()
        };
        let plan = |a: f64, b: f64| plan_variance_pilot(&EffectSpec::new(a, b).unwrap(), &d, 0.8, &bounds, opts).unwrap();
        let (x, y) = (plan(delta, sigma), plan(k * delta, k * sigma));
        prop_assert_eq!((x.n_lower, x.pilot_n), (y.n_lower, y.pilot_n));
    }

    #[test]
    fn effect_plan_depends_only_on_effect_size(
        mu in 0.2f64..4.0, sigma in 0.5f64..8.0, k in 0.1f64..20.0, p in 0.1f64..0.45, kind in kinds(),
    ) {
        prop_assume!(mu / sigma > 0.1 && mu / sigma < 2.5);
        let d = design(kind);
        let bounds = PowerBounds::new(p, 0.6).unwrap();
        let plan = |a: f64, b: f64| plan_effect_pilot(&EffectSpec::new(a, b).unwrap(), &d, 0.8, &bounds, QuantileMode::TIterative).unwrap();
        let (x, y) = (plan(mu, sigma), plan(k * mu, k * sigma));
        prop_assert_eq!((x.n_lower, x.pilot_n), (y.n_lower, y.pilot_n));
    }

    #[test]
    fn variance_pilot_sizes_shrink_with_risk(ratio in 0.3f64..0.9, p in 0.05f64..0.4, dp in 0.001f64..0.1) {
        let q = p + dp;
        prop_assert!(pilot_n_approx(ratio, q, false).unwrap() <= pilot_n_approx(ratio, p, false).unwrap());
        prop_assert!(pilot_n_exact(ratio, q, Side::Under, false).unwrap() <= pilot_n_exact(ratio, p, Side::Under, false).unwrap());
        prop_assert!(pilot_n_exact(1.0 / ratio, q, Side::Over, false).unwrap() <= pilot_n_exact(1.0 / ratio, p, Side::Over, false).unwrap());
    }

    #[test]
    fn effect_pilot_size_shrinks_with_gap(gap in 0.05f64..1.5, extra in 0.01f64..1.0, p in 0.05f64..0.45) {
        let d = design(DesignKind::TwoSample);
        let near = effect_pilot_n(0.0, gap, 1.0, p, &d, Side::Under).unwrap();
        let far = effect_pilot_n(0.0, gap + extra, 1.0, p, &d, Side::Under).unwrap();
        prop_assert!(far <= near);
    }

    #[test]
    fn pooled_pilot_needs_about_half(ratio in 0.3f64..0.9, p in 0.05f64..0.4) {
        let single = pilot_n_exact(ratio, p, Side::Under, false).unwrap();
        let pooled = pilot_n_exact(ratio, p, Side::Under, true).unwrap();
        // Same degrees of freedom: n - 1 versus 2n - 2.
        prop_assert!(pooled <= single && 2 * pooled >= single);
    }
}

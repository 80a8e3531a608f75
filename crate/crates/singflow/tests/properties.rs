use std::collections::BTreeMap;

use proptest::prelude::*;

use singflow::model::{preset_curvature, preset_power, psi, DatumClass, InitialDatum, ProblemSpec};
use singflow::regime::{classify_inputs, uniqueness_threshold, RegimeInputs, Verdict};
use singflow::scenario::{parse_list, parse_params, DatumSpec, Experiment, Preset, Scenario};
use singflow::solver::{cap_verdict, ordered_pair_violations, random_ordered_pair, CapRow};
use singflow::verify::{default_gamma_grid, fit_boundary_rate, residual, scale_sub, scale_super};

fn curvature_spec(beta2: f64) -> ProblemSpec {
    ProblemSpec::new(1.0, preset_curvature(beta2).unwrap(), InitialDatum::zero()).unwrap()
}

fn ident() -> impl Strategy<Value = String> {
    "[a-zA-Z_][a-zA-Z0-9_]{0,8}"
}

proptest! {
    #[test]
    fn params_round_trip(map in prop::collection::btree_map(ident(), -1e6f64..1e6, 0..6)) {
        let text: Vec<String> = map.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
        let parsed = parse_params(&text.join(",")).unwrap();
        prop_assert_eq!(parsed, map);
    }

    #[test]
    fn params_parser_is_total(s in "\\PC{0,40}") {
        if let Ok(map) = parse_params(&s) {
            prop_assert!(map.values().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn datum_parser_is_total(s in "(constant|polynomial|boundary_rate|power|wave)?:?[-0-9.,e ]{0,20}") {
        let _ = DatumSpec::parse(&s);
    }

    #[test]
    fn polynomial_datum_round_trip(coeffs in prop::collection::vec(-100.0f64..100.0, 1..10)) {
        let text: Vec<String> = coeffs.iter().map(|v| format!("{v:?}")).collect();
        let spec = DatumSpec::parse(&format!("polynomial:{}", text.join(","))).unwrap();
        prop_assert_eq!(spec, DatumSpec::Polynomial { coeffs });
    }

    #[test]
    fn list_parser_keeps_order(v in prop::collection::vec(-1e3f64..1e3, 1..8)) {
        let text: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        prop_assert_eq!(parse_list(&text.join(",")).unwrap(), v);
    }

    #[test]
    fn scenario_json_is_total(s in "\\PC{0,80}") {
        let _ = Scenario::from_json(&s);
    }

    #[test]
    fn scenario_json_round_trip(name in "[a-z]{1,8}", b in 0.01f64..10.0, n in 3usize..5000) {
        let mut sc = Scenario::new(name, Experiment::Solve);
        sc.b = b;
        sc.n = Some(n);
        sc.preset = Some(Preset::Curvature);
        sc.u0 = Some("constant:1".into());
        sc.cap = Some(100.0);
        sc.t_end = Some(0.1);
        sc.params = BTreeMap::from([("beta2".to_string(), 1.0)]);
        let text = serde_json::to_string(&sc).unwrap();
        let back = Scenario::from_json(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn residual_monotone_in_factor(
        beta2 in 0.2f64..3.0,
        dx in -50.0f64..50.0,
        dxx in -50.0f64..50.0,
        dt in -5.0f64..5.0,
        lo in 0.1f64..2.0,
        gap in 0.0f64..2.0,
    ) {
        let spec = curvature_spec(beta2);
        let (a, b) = (residual(&spec, dt, dx, dxx, lo).value, residual(&spec, dt, dx, dxx, lo + gap).value);
        let slack = 1e-12 * (1.0 + a.abs() + b.abs());
        if dxx >= 0.0 {
            prop_assert!(b <= a + slack);
        } else {
            prop_assert!(b >= a - slack);
        }
    }

    #[test]
    fn dilations_invert_each_other(lambda in 0.0f64..2.0, x in -0.9f64..0.9, t in 0.0f64..1.0) {
        let v = |x: f64, t: f64| (x * 3.0).sin() + t * t - x / (1.1 - x.abs());
        let w = scale_sub(scale_super(v, lambda), lambda);
        prop_assert!((w(x, t) - v(x, t)).abs() <= 1e-12 * (1.0 + v(x, t).abs()));
    }

    #[test]
    fn planted_rate_is_recovered(
        k in 0usize..21,
        d in 0.1f64..10.0,
        offset in -1.0f64..1.0,
    ) {
        let grid = default_gamma_grid(None);
        let gamma = grid[k];
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|i| 10f64.powf(-4.0 + 3.0 * i as f64 / 39.0))
            .map(|s| (s, d * psi(gamma, s).unwrap() + offset + 20.0))
            .collect();
        let fit = fit_boundary_rate(&samples, &grid).unwrap();
        prop_assert_eq!(fit.gamma, gamma);
        prop_assert!((fit.d - d).abs() <= 1e-6 * d);
    }

    #[test]
    fn classifier_needs_beta_only_below_two_slopes(
        alpha in -3.0f64..5.0,
        beta in prop::option::of(0.01f64..20.0),
        bounded_below: bool,
    ) {
        let out = classify_inputs(RegimeInputs { alpha, beta, class: DatumClass::Bounded, bounded_below });
        prop_assert_eq!(out.is_err(), alpha <= 1.0 && beta.is_none());
    }

    #[test]
    fn nonexistence_is_upward_closed_in_beta(alpha in -3.0f64..0.99, b1 in 0.01f64..20.0, b2 in 0.01f64..20.0) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let at = |beta: f64| {
            classify_inputs(RegimeInputs { alpha, beta: Some(beta), class: DatumClass::Bounded, bounded_below: true })
                .unwrap()
                .verdict
        };
        if at(lo) == Verdict::NotExists {
            prop_assert_eq!(at(hi), Verdict::NotExists);
        }
    }

    #[test]
    fn fast_enough_rates_are_unique(alpha in 1.01f64..5.0, extra in 0.0f64..3.0) {
        let th = uniqueness_threshold(alpha);
        let rate = singflow::model::BoundaryRate {
            gamma_plus: th + extra,
            gamma_minus: th,
            d_plus: 1.0,
            d_minus: 1.0,
            offset_plus: 0.0,
            offset_minus: 0.0,
        };
        let v = classify_inputs(RegimeInputs {
            alpha,
            beta: None,
            class: DatumClass::RateControlled(rate),
            bounded_below: true,
        })
        .unwrap();
        prop_assert_eq!(v.verdict, Verdict::ExistsUnique);
    }

    #[test]
    fn psi_is_decreasing(gamma in 0.0f64..5.0, s in 1e-6f64..10.0, ratio in 1.0001f64..10.0) {
        prop_assert!(psi(gamma, s * ratio).unwrap() < psi(gamma, s).unwrap());
    }

    #[test]
    fn divergence_dominates_cap_verdict(values in prop::collection::vec(-10.0f64..10.0, 4..8), bad in 0usize..8) {
        let rows: Vec<CapRow> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| CapRow {
                cap: 10.0 * (i + 1) as f64,
                probe_value: v,
                difference: (i > 0).then(|| v - values[i - 1]),
                monotone: i == 0 || v >= values[i - 1],
                diverged: i == bad % values.len(),
                steps: 1,
            })
            .collect();
        prop_assert_eq!(cap_verdict(&rows), singflow::solver::CapVerdict::Diverging);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_pairs_stay_ordered(seed: u64, beta2 in 0.5f64..2.0) {
        let spec = curvature_spec(beta2);
        let (lower, upper) = random_ordered_pair(seed, 1.0, 40, 5.0).unwrap();
        prop_assert!(lower.values.iter().zip(&upper.values).all(|(u, v)| u <= v));
        prop_assert_eq!(ordered_pair_violations(&spec, lower, upper, 0.01).unwrap(), 0);
    }

    #[test]
    fn power_presets_validate(alpha in -2.0f64..4.0, beta in 0.1f64..4.0) {
        let spec = ProblemSpec::new(1.0, preset_power(alpha, beta).unwrap(), InitialDatum::zero());
        prop_assert!(spec.is_ok());
    }
}

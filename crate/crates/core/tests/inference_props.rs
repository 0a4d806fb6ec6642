use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use wilks::betamodel::fit_mle;
use wilks::btmodel::{bt_fit_mle, bt_fit_mle_with_reference};
use wilks::graphdata::{simulate_beta_graph, simulate_bt_data};
use wilks::inference::*;
use wilks::numerics::{chi_square_sf, normal_sf, Tolerance};
use wilks::*;

fn bt_data(n: usize, k: u64, spread: f64, seed: u64) -> ComparisonData {
    let b = ParamVector::with_reference((0..n).map(|i| spread * i as f64 / n as f64).collect(), 0).unwrap();
    simulate_bt_data(&b, k, seed).unwrap()
}

#[test]
fn lrt_statistic_examples() {
    assert_eq!(lrt_statistic(-100.0, -100.0).unwrap(), 0.0);
    assert_abs_diff_eq!(lrt_statistic(-99.7245, -100.0).unwrap(), 0.551, epsilon = 1e-9);
    assert!(matches!(lrt_statistic(-100.0, -99.0), Err(WilksError::NegativeLrt { .. })));
    // rounding-level inversions clamp to zero
    assert_eq!(lrt_statistic(-100.0, -100.0 + 1e-12).unwrap(), 0.0);
}

#[test]
fn degrees_of_freedom_rules() {
    let s5 = NullHypothesis::specified((0..5).collect(), vec![0.0; 5]).unwrap();
    let h10 = NullHypothesis::homogeneous((0..10).collect()).unwrap();
    assert_eq!(degrees_of_freedom(Model::Beta, &s5).unwrap(), DegreesOfFreedom::Chi2(5));
    assert_eq!(degrees_of_freedom(Model::Beta, &h10).unwrap(), DegreesOfFreedom::Chi2(9));
    assert_eq!(degrees_of_freedom(Model::Bt, &s5).unwrap(), DegreesOfFreedom::NoChiSquareApprox);
    // a block beta_2 = beta_3 = beta_4 (three non-reference items) has two constraints
    let h3 = NullHypothesis::homogeneous(vec![1, 2, 3]).unwrap();
    assert_eq!(degrees_of_freedom(Model::Bt, &h3).unwrap(), DegreesOfFreedom::Chi2(2));
    let h2 = NullHypothesis::homogeneous(vec![1, 2]).unwrap();
    assert_eq!(degrees_of_freedom(Model::Bt, &h2).unwrap(), DegreesOfFreedom::Chi2(1));
}

#[test]
fn three_team_pvalue_uses_two_df() {
    // a statistic of 0.551 on three tied teams reads p = 0.759
    assert_eq!((chi_square_sf(0.551, 2).unwrap() * 1000.0).round() / 1000.0, 0.759);
    assert_eq!((chi_square_sf(1.892, 3).unwrap() * 1000.0).round() / 1000.0, 0.595);
}

#[test]
fn bt_specified_chi2_is_refused() {
    let d = bt_data(12, 3, 0.5, 1);
    let null = NullHypothesis::specified(vec![3, 4], vec![0.1, 0.2]).unwrap();
    let opts = LrtOptions {
        regime: RegimeChoice::Chi2,
        ..LrtOptions::default()
    };
    for _ in 0..3 {
        assert_eq!(
            run_lrt_with(Data::Comparisons(&d), &null, &opts, &Tolerance::default()),
            Err(WilksError::NoChiSquareApprox)
        );
    }
    let normal = run_lrt(Data::Comparisons(&d), &null, RegimeChoice::Auto, &Tolerance::default()).unwrap();
    assert!(matches!(normal.regime, Regime::NormalizedNormal { r: 3 }));
}

#[test]
fn non_binding_null_gives_unit_pvalue() {
    let truth = ParamVector::new((0..40).map(|i| i as f64 / 40.0 - 0.5).collect()).unwrap();
    let g = simulate_beta_graph(&truth, 3).unwrap();
    let tol = Tolerance::default();
    let full = fit_mle(&g, &tol).unwrap();
    let idx = vec![0, 5, 9];
    let vals = idx.iter().map(|&i| full.beta_hat.values()[i]).collect();
    let t = run_lrt(Data::Graph(&g), &NullHypothesis::specified(idx, vals).unwrap(), RegimeChoice::Chi2, &tol).unwrap();
    assert!(t.lrt_stat < 1e-9);
    assert!(t.p_value > 0.999999);
}

#[test]
fn wald_closed_forms() {
    let truth = ParamVector::new((0..50).map(|i| i as f64 / 50.0 - 0.3).collect()).unwrap();
    let g = simulate_beta_graph(&truth, 11).unwrap();
    let fit = fit_mle(&g, &Tolerance::default()).unwrap();
    let (stat, p) = wald_from_fit(&fit, &[4, 17]).unwrap();
    let b = fit.beta_hat.values();
    let v = &fit.fisher_diag;
    let want = (b[4] - b[17]).powi(2) / (1.0 / v[4] + 1.0 / v[17]);
    assert_abs_diff_eq!(stat, want, epsilon = 1e-12);
    assert_abs_diff_eq!(p, chi_square_sf(want, 1).unwrap(), epsilon = 1e-14);

    // a 6-cycle has identical fitted values everywhere
    let ring = UndirectedGraph::from_edges(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
    let (stat, p) = wald_test(Data::Graph(&ring), &[0, 2, 4], &Tolerance::default()).unwrap();
    assert!(stat < 1e-12);
    assert!(p > 1.0 - 1e-9);
}

#[test]
fn chi2_and_normal_agree_for_large_r() {
    let r = 200usize;
    let sd = (2.0 * r as f64).sqrt();
    for k in 0..=60 {
        let x = r as f64 - 3.0 * sd + k as f64 * 0.1 * sd;
        let chi = chi_square_sf(x, r as u32).unwrap();
        let nor = normal_sf((x - r as f64) / sd);
        assert!((chi - nor).abs() <= 0.02, "x {x}: {chi} vs {nor}");
    }
}

#[test]
fn statistic_is_invariant_to_relabeling_untested_nodes() {
    let n = 30;
    let truth = ParamVector::new((0..n).map(|i| 0.8 * i as f64 / n as f64 - 0.4).collect()).unwrap();
    let g = simulate_beta_graph(&truth, 21).unwrap();
    let null = NullHypothesis::homogeneous(vec![0, 1, 2, 3]).unwrap();
    let base = run_lrt(Data::Graph(&g), &null, RegimeChoice::Auto, &Tolerance::default()).unwrap();
    // reverse the labels of nodes 4..n
    let relabel = |i: usize| if i < 4 { i } else { n - 1 - (i - 4) };
    let h = UndirectedGraph::from_edges(n, g.edges().iter().map(|&(a, b)| (relabel(a), relabel(b)))).unwrap();
    let other = run_lrt(Data::Graph(&h), &null, RegimeChoice::Auto, &Tolerance::default()).unwrap();
    assert_abs_diff_eq!(base.lrt_stat, other.lrt_stat, epsilon = 1e-9);
}

#[test]
fn reference_in_block_is_tied_to_zero_with_warning() {
    let d = bt_data(10, 4, 0.5, 2);
    let null = NullHypothesis::homogeneous(vec![0, 1, 2]).unwrap();
    let t = run_lrt(Data::Comparisons(&d), &null, RegimeChoice::Chi2, &Tolerance::default()).unwrap();
    assert_eq!(t.regime, Regime::ChiSquare { df: 2 });
    assert!(t.warnings.iter().any(|w| w.contains("reference")));
}

#[test]
fn test_result_json_shape() {
    let d = bt_data(10, 4, 0.5, 3);
    let null = NullHypothesis::homogeneous(vec![1, 2, 3]).unwrap();
    let opts = LrtOptions {
        wald: true,
        ..LrtOptions::default()
    };
    let t = run_lrt_with(Data::Comparisons(&d), &null, &opts, &Tolerance::default()).unwrap();
    let v = serde_json::to_value(&t).unwrap();
    assert_eq!(v["model"], "bt");
    assert_eq!(v["regime"], "chi2");
    assert_eq!(v["df"], 2);
    assert_eq!(v["null"]["indices"], serde_json::json!([2, 3, 4]));
    assert!(v["wald"]["stat"].as_f64().unwrap() >= 0.0);
    assert!(v.get("z").is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn restricted_never_beats_full(seed in any::<u64>(), n in 8usize..30, spread in 0.0f64..1.5, homo in any::<bool>()) {
        let truth = ParamVector::new((0..n).map(|i| spread * i as f64 / n as f64 - 0.5).collect()).unwrap();
        let g = simulate_beta_graph(&truth, seed).unwrap();
        let null = if homo {
            NullHypothesis::homogeneous(vec![0, 2, 4]).unwrap()
        } else {
            NullHypothesis::specified(vec![1, 3], vec![truth.values()[1], truth.values()[3]]).unwrap()
        };
        if let Ok((full, restricted)) = fit_pair(Data::Graph(&g), &null, 0, &Tolerance::default()) {
            prop_assert!(restricted.loglik <= full.loglik + 1e-9);
            prop_assert!(lrt_statistic(full.loglik, restricted.loglik).unwrap() >= 0.0);
        }
    }

    #[test]
    fn bt_reference_choice_only_shifts(seed in any::<u64>(), n in 3usize..15, k in 1u64..4, new_ref in 0usize..15) {
        let d = bt_data(n, k, 1.0, seed);
        let r = new_ref % n;
        if let (Ok(a), Ok(b)) = (bt_fit_mle(&d, &Tolerance::default()), bt_fit_mle_with_reference(&d, r, &Tolerance::default())) {
            let (a, b) = (a.beta_hat.values(), b.beta_hat.values());
            for i in 0..n {
                prop_assert!(((a[i] - a[r]) - b[i]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn rejection_is_monotone_in_alpha(stats in prop::collection::vec(0.0f64..30.0, 1..50), a in 0.001f64..0.5, b in 0.001f64..0.5) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let rej = |alpha: f64| stats.iter().filter(|&&x| chi_square_sf(x, 3).unwrap() < alpha).count();
        prop_assert!(rej(lo) <= rej(hi));
    }
}

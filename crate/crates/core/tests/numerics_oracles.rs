use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use wilks::numerics::*;

#[test]
fn chi_square_matches_statrs() {
    for df in 1..=40u32 {
        let dist = ChiSquared::new(df as f64).unwrap();
        for k in 0..400 {
            let x = k as f64 * 0.25;
            assert_abs_diff_eq!(chi_square_sf(x, df).unwrap(), dist.sf(x), epsilon = 1e-12);
        }
    }
}

#[test]
fn chi_square_two_df_is_exponential() {
    assert_abs_diff_eq!(chi_square_sf(4.60517, 2).unwrap(), 0.1, epsilon = 1e-6);
    for k in 0..200 {
        let x = k as f64 * 0.3;
        assert_abs_diff_eq!(chi_square_sf(x, 2).unwrap(), (-x / 2.0).exp(), epsilon = 1e-14);
    }
}

#[test]
fn chi_square_sf_is_one_at_zero() {
    for df in [1, 2, 7, 300] {
        assert_eq!(chi_square_sf(0.0, df).unwrap(), 1.0);
    }
}

#[test]
fn large_df_tail() {
    // deep in the upper tail for large df
    let dist = ChiSquared::new(1000.0).unwrap();
    let x = 1300.0;
    let got = chi_square_sf(x, 1000).unwrap();
    assert!((got - dist.sf(x)).abs() / dist.sf(x) < 1e-8);
}

/// erfc by its Maclaurin series, summed in f64 with enough terms for |x| <= 3.
fn erfc_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn normal_sf_against_series_oracle() {
    let z = 1.6448536269514722;
    assert_abs_diff_eq!(normal_sf(z), 0.05, epsilon = 1e-9);
    assert_abs_diff_eq!(normal_sf(z), 0.5 * erfc_series(z / 2f64.sqrt()), epsilon = 1e-13);
    assert_eq!(normal_sf(0.0), 0.5);
    for k in -40..=40 {
        let z = k as f64 * 0.1;
        assert_abs_diff_eq!(normal_sf(z), 0.5 * erfc_series(z / 2f64.sqrt()), epsilon = 1e-12);
    }
}

#[test]
fn normal_quantile_matches_statrs() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for k in 1..1000 {
        let p = k as f64 / 1000.0;
        assert_abs_diff_eq!(normal_quantile(p).unwrap(), n.inverse_cdf(p), epsilon = 1e-9);
    }
    assert_eq!(normal_quantile(0.0).unwrap(), f64::NEG_INFINITY);
    assert_eq!(normal_quantile(1.0).unwrap(), f64::INFINITY);
    assert!(normal_quantile(1.5).is_err());
}

#[test]
fn chi_square_quantile_matches_statrs() {
    for df in [1u32, 2, 5, 10, 50, 200] {
        let d = ChiSquared::new(df as f64).unwrap();
        for p in [0.001, 0.05, 0.3, 0.5, 0.9, 0.999] {
            let q = chi_square_quantile(p, df).unwrap();
            assert_abs_diff_eq!(q, d.inverse_cdf(p), epsilon = 1e-7 * (1.0 + q));
        }
    }
}

#[test]
fn ln_gamma_matches_statrs() {
    for k in 1..200 {
        let x = k as f64 * 0.37;
        assert_abs_diff_eq!(ln_gamma(x), statrs::function::gamma::ln_gamma(x), epsilon = 1e-11);
    }
}

#[test]
fn tridiag_examples() {
    let id = TridiagonalMatrix::new(vec![1.0; 3], vec![0.0; 2]).unwrap();
    assert_eq!(tridiag_solve(&id, &[3.0, -1.0, 2.5]).unwrap(), vec![3.0, -1.0, 2.5]);
    let m = TridiagonalMatrix::new(vec![2.0, 2.0], vec![-1.0]).unwrap();
    let x = tridiag_solve(&m, &[1.0, 1.0]).unwrap();
    assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-15);
    let m = TridiagonalMatrix::new(vec![4.0; 3], vec![1.0; 2]).unwrap();
    assert_eq!(tridiag_solve(&m, &[0.0; 3]).unwrap(), vec![0.0; 3]);
}

fn spd_tridiag() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n.saturating_sub(1)),
            prop::collection::vec(0.1f64..3.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
            .prop_map(|(off, extra, rhs)| {
                let n = rhs.len();
                let diag = (0..n)
                    .map(|i| {
                        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
                        let right = off.get(i).map_or(0.0, |v| v.abs());
                        left + right + extra[i]
                    })
                    .collect();
                (diag, off, rhs)
            })
    })
}

proptest! {
    #[test]
    fn tridiag_residual_is_small((diag, off, rhs) in spd_tridiag()) {
        let m = TridiagonalMatrix::new(diag, off).unwrap();
        let x = tridiag_solve(&m, &rhs).unwrap();
        let back = m.mul_vec(&x).unwrap();
        for (a, b) in back.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn normal_reflection(z in -8.0f64..8.0) {
        prop_assert!((normal_sf(-z) - (1.0 - normal_sf(z))).abs() < 1e-15);
    }

    #[test]
    fn chi_square_sf_is_monotone(x in 0.0f64..100.0, dx in 0.0f64..5.0, df in 1u32..60) {
        prop_assert!(chi_square_sf(x + dx, df).unwrap() <= chi_square_sf(x, df).unwrap() + 1e-15);
    }
}

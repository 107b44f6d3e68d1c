use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use reprtune_core::stats::{acf, acf_peak, adf_lag_order, adf_test, pearson, rmse};

fn load(name: &str) -> Vec<f64> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut level = 0.0;
    white_noise(n, seed)
        .into_iter()
        .map(|e| {
            level += e;
            level
        })
        .collect()
}

// Reference statistics from statsmodels adfuller(maxlag=17, autolag=None, regression="c").
#[test]
fn adf_matches_statsmodels() {
    let wn = load("adf_white_noise.txt");
    let rw = load("adf_random_walk.txt");
    assert_eq!(adf_lag_order(wn.len()), 17);

    let r = adf_test(&wn).unwrap();
    assert_eq!(r.lags_used, 17);
    assert!((r.statistic - -5.247636054839419).abs() < 1e-8, "{}", r.statistic);
    assert!(r.stationary);

    let r = adf_test(&rw).unwrap();
    assert!((r.statistic - -1.42733867473408).abs() < 1e-8, "{}", r.statistic);
    assert!(!r.stationary);
}

// Reference values from statsmodels acf(fft=False) and numpy corrcoef.
#[test]
fn acf_and_pearson_match_reference() {
    let wn = load("adf_white_noise.txt");
    let rw = load("adf_random_walk.txt");
    let expected = [1.0, -0.09861450622824752, 0.05477712736732975, -0.05458047913957362, 0.038246137743637075, -0.024756550504536966];
    for (lag, e) in expected.iter().enumerate() {
        assert!((acf(&wn, lag).unwrap() - e).abs() < 1e-12, "lag {lag}");
    }
    for (lag, e) in [0.9918894630672924, 0.9844593377313943, 0.9767350109847349].iter().enumerate() {
        assert!((acf(&rw, lag + 1).unwrap() - e).abs() < 1e-12);
    }
    assert!((pearson(&wn[..250], &rw[..250]).unwrap() - 0.020962479570339473).abs() < 1e-12);
    assert!((pearson(&wn, &rw).unwrap() - 0.06632729281880216).abs() < 1e-12);
}

#[test]
fn acf_finds_period_thirteen() {
    let x: Vec<f64> = (0..520).map(|t| (2.0 * std::f64::consts::PI * t as f64 / 13.0).sin()).collect();
    assert!((acf(&x, 0).unwrap() - 1.0).abs() < 1e-15);
    let (lag, value) = acf_peak(&x).unwrap();
    assert_eq!(lag, 13);
    assert!(value > 0.9);
}

#[test]
fn adf_separates_noise_from_walks() {
    let stationary = (0..100).filter(|&s| adf_test(&white_noise(500, s)).unwrap().stationary).count();
    let unit_root = (0..100).filter(|&s| !adf_test(&random_walk(500, 1000 + s)).unwrap().stationary).count();
    assert!(stationary >= 95, "white noise stationary in {stationary}/100");
    assert!(unit_root >= 95, "random walk non-stationary in {unit_root}/100");
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn series() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0..100.0f64, 8..80)
    }

    proptest! {
        #[test]
        fn acf_is_sign_invariant(x in series(), lag in 0usize..6) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let a = acf(&x, lag).unwrap();
            prop_assert!((a - acf(&neg, lag).unwrap()).abs() < 1e-12);
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn pearson_is_affine_invariant(
            pairs in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 3..60),
            a in 0.1..10.0f64,
            b in -100.0..100.0f64,
            c in 0.1..10.0f64,
            d in -100.0..100.0f64,
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3) && y.iter().any(|v| (v - y[0]).abs() > 1e-3));
            let r = pearson(&x, &y).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ys: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            prop_assert!((r - pearson(&xs, &ys).unwrap()).abs() < 1e-9);
            let flipped: Vec<f64> = ys.iter().map(|v| -v).collect();
            prop_assert!((r + pearson(&xs, &flipped).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn rmse_is_a_metric(
            triples in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64), 1..40),
        ) {
            let a: Vec<f64> = triples.iter().map(|t| t.0).collect();
            let b: Vec<f64> = triples.iter().map(|t| t.1).collect();
            let c: Vec<f64> = triples.iter().map(|t| t.2).collect();
            let ab = rmse(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            prop_assert!((ab - rmse(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(rmse(&a, &c).unwrap() <= ab + rmse(&b, &c).unwrap() + 1e-9);
        }
    }
}

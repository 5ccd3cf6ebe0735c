use std::path::PathBuf;

use dgmvp::market::{
    compute_covariance, compute_covariance_with, load_prices, parse_prices, price_file_tickers,
    random_instance, synthetic_covariance, CovarianceMatrix, CovarianceMode, PriceSeries,
};
use dgmvp::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prices.csv")
}

fn universe() -> Vec<PriceSeries> {
    let path = fixture();
    let tickers = price_file_tickers(&path).unwrap();
    let names: Vec<&str> = tickers.iter().map(String::as_str).collect();
    load_prices(&path, &names).unwrap()
}

fn series(ticker: &str, prices: &[f64]) -> PriceSeries {
    PriceSeries {
        ticker: ticker.into(),
        dates: (0..prices.len()).map(|d| format!("2022-03-{:02}", d + 1)).collect(),
        prices: prices.to_vec(),
    }
}

/// Textbook two-pass estimator.
fn two_pass(x: &[f64], y: &[f64]) -> f64 {
    let t = x.len() as f64;
    let mx = x.iter().sum::<f64>() / t;
    let my = y.iter().sum::<f64>() / t;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (t - 1.0)
}

#[test]
fn two_tickers_three_dates() {
    let csv = "date,AAA,BBB,CCC\n2022-01-03,1.0,2.0,9\n2022-01-04,1.5,2.5,9\n2022-01-05,2.0,3.0,9\n";
    let s = parse_prices(csv.as_bytes(), &["AAA", "BBB"]).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].prices, vec![1.0, 1.5, 2.0]);
    assert_eq!(s[1].prices, vec![2.0, 2.5, 3.0]);
    assert_eq!(s[0].dates, s[1].dates);
}

#[test]
fn absent_ticker_is_reported() {
    let csv = "date,AAA\n2022-01-03,1.0\n";
    assert!(matches!(parse_prices(csv.as_bytes(), &["ZZZ"]), Err(Error::MissingTicker(t)) if t == "ZZZ"));
}

#[test]
fn missing_day_truncates_every_series() {
    let csv = "date,AAA,BBB\n2022-01-03,1,2\n2022-01-04,,3\n2022-01-05,4,5\n2022-01-06,6,7\n";
    let s = parse_prices(csv.as_bytes(), &["AAA", "BBB"]).unwrap();
    let dates = vec!["2022-01-03", "2022-01-05", "2022-01-06"];
    for x in &s {
        assert_eq!(x.dates, dates);
    }
    assert_eq!(s[0].prices, vec![1.0, 4.0, 6.0]);
    assert_eq!(s[1].prices, vec![2.0, 5.0, 7.0]);
}

#[test]
fn parse_errors_are_distinct() {
    let bad = "date,AAA\n2022-01-03,abc\n";
    assert!(matches!(parse_prices(bad.as_bytes(), &["AAA"]), Err(Error::BadPrice { .. })));
    let negative = "date,AAA\n2022-01-03,-1\n";
    assert!(matches!(parse_prices(negative.as_bytes(), &["AAA"]), Err(Error::BadPrice { .. })));
    let backwards = "date,AAA\n2022-01-04,1\n2022-01-03,1\n";
    assert!(matches!(parse_prices(backwards.as_bytes(), &["AAA"]), Err(Error::RaggedDates(_))));
}

#[test]
fn series_on_different_axes_are_rejected() {
    let a = series("A", &[1.0, 2.0, 3.0]);
    let mut b = series("B", &[1.0, 2.0, 3.0]);
    b.dates[2] = "2022-04-01".into();
    assert!(matches!(compute_covariance(&[a, b]), Err(Error::RaggedDates(_))));
}

#[test]
fn identical_series_share_one_variance() {
    let x = [3.0, 4.5, 2.0, 7.25, 5.0];
    let c = compute_covariance(&[series("A", &x), series("B", &x)]).unwrap();
    let var = two_pass(&x, &x);
    for i in 0..2 {
        for j in 0..2 {
            assert!((c.get(i, j) - var).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_series_give_zero_matrix() {
    let c = compute_covariance(&[series("A", &[5.0; 6]), series("B", &[2.0; 6])]).unwrap();
    assert!(c.sigma.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn single_observation_is_insufficient() {
    assert!(matches!(
        compute_covariance(&[series("A", &[1.0])]),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn fixture_covariance_matches_two_pass() {
    let u = universe();
    let pair = [u[1].clone(), u[5].clone()];
    let pair: Vec<PriceSeries> = pair
        .into_iter()
        .map(|mut s| {
            s.dates.truncate(100);
            s.prices.truncate(100);
            s
        })
        .collect();
    let c = compute_covariance(&pair).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want = two_pass(&pair[i].prices, &pair[j].prices);
            assert!((c.get(i, j) - want).abs() <= 1e-12 * want.abs().max(1e-300), "{i}{j}");
        }
    }
}

#[test]
fn returns_mode_uses_simple_returns() {
    let x = [100.0, 110.0, 99.0, 108.9];
    let c = compute_covariance_with(&[series("A", &x)], CovarianceMode::Returns).unwrap();
    let r: Vec<f64> = x.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    assert!((c.get(0, 0) - two_pass(&r, &r)).abs() < 1e-15);
}

#[test]
fn whole_universe_needs_no_sampling() {
    let u = universe();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inst = random_instance(&mut rng, &u, u.len()).unwrap();
    assert_eq!(inst.subset, (0..u.len()).collect::<Vec<_>>());
    assert_eq!(inst.covariance, compute_covariance(&u).unwrap());
}

#[test]
fn random_instance_is_reproducible_from_its_subset() {
    let u = universe();
    let a = random_instance(&mut ChaCha8Rng::seed_from_u64(7), &u, 4).unwrap();
    let b = random_instance(&mut ChaCha8Rng::seed_from_u64(7), &u, 4).unwrap();
    assert_eq!(a, b);
    let chosen: Vec<PriceSeries> = a.subset.iter().map(|&i| u[i].clone()).collect();
    assert_eq!(a.covariance, compute_covariance(&chosen).unwrap());
    assert!(a.covariance.is_psd());
}

#[test]
fn oversized_draw_is_an_error() {
    let u = universe();
    assert!(random_instance(&mut ChaCha8Rng::seed_from_u64(0), &u, 9).is_err());
}

#[test]
fn json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sigma.json");
    let c = compute_covariance(&universe()[..3]).unwrap();
    c.write_json(&path).unwrap();
    assert_eq!(CovarianceMatrix::read_json(&path).unwrap(), c);
}

#[test]
fn asymmetric_rows_are_rejected() {
    assert!(CovarianceMatrix::unlabeled(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
}

proptest! {
    #[test]
    fn synthetic_matrices_are_symmetric_psd(seed in any::<u64>(), n in 1usize..8, k in 1usize..4) {
        let c = synthetic_covariance(&mut ChaCha8Rng::seed_from_u64(seed), n, k);
        for i in 0..n {
            prop_assert!(c.get(i, i) >= 0.0);
            for j in 0..n {
                prop_assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
        prop_assert!(c.is_psd());
    }

    #[test]
    fn covariance_is_permutation_equivariant(seed in any::<u64>(), perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
        let u = dgmvp::market::synthetic_universe(
            &mut ChaCha8Rng::seed_from_u64(seed), &["a", "b", "c", "d", "e"], 30);
        let base = compute_covariance(&u).unwrap();
        let shuffled: Vec<PriceSeries> = perm.iter().map(|&i| u[i].clone()).collect();
        let c = compute_covariance(&shuffled).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = base.get(perm[i], perm[j]);
                prop_assert!((c.get(i, j) - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
        prop_assert!(c.is_psd());
    }
}

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dgmvp::encoding::{
    decode, encode, enumerate_feasible, feasible_count, is_feasible, rank_feasible,
    sample_feasible_uniform, unconstrained_count, unrank_feasible, BitString, EncodingSpec,
    LotVector, ENUMERATION_LIMIT,
};
use dgmvp::Error;

fn bits(s: &str) -> BitString {
    s.parse().unwrap()
}

/// Counts allocations of `total` lots over `n` assets by the recursion on the
/// first asset's share.
fn lemma_count(n: usize, total: u64, memo: &mut BTreeMap<(usize, u64), u128>) -> u128 {
    if n == 1 {
        return 1;
    }
    if let Some(&v) = memo.get(&(n, total)) {
        return v;
    }
    let v = (0..=total).map(|m| lemma_count(n - 1, m, memo)).sum();
    memo.insert((n, total), v);
    v
}

fn brute_force_count(spec: &EncodingSpec) -> u64 {
    (0..1u64 << spec.qubits())
        .filter(|&i| is_feasible(spec, &BitString::from_index(i, spec.qubits())))
        .count() as u64
}

#[test]
fn single_asset_all_ones_is_full_weight() {
    let spec = EncodingSpec::new(1, 4).unwrap();
    let (x, w) = decode(&spec, &bits("1111")).unwrap();
    assert_eq!(x, LotVector(vec![15]));
    assert_eq!(w.0, vec![Ratio::from_integer(1)]);
    assert_eq!(spec.lot(), Ratio::new(1, 15));
}

#[test]
fn zero_bits_decode_to_zero() {
    let spec = EncodingSpec::new(3, 2).unwrap();
    let (x, w) = decode(&spec, &BitString::zeros(6)).unwrap();
    assert_eq!(x.0, vec![0, 0, 0]);
    assert!(w.0.iter().all(|r| *r == Ratio::from_integer(0)));
}

#[test]
fn lsb_first_asset_major_decoding() {
    let spec = EncodingSpec::new(2, 2).unwrap();
    let (x, w) = decode(&spec, &bits("1001")).unwrap();
    assert_eq!(x.0, vec![1, 2]);
    assert_eq!(w.0, vec![Ratio::new(1, 3), Ratio::new(2, 3)]);
    assert_eq!(w.to_f64()[1], 2.0 / 3.0);
}

#[test]
fn wrong_length_is_rejected() {
    let spec = EncodingSpec::new(2, 2).unwrap();
    assert!(matches!(decode(&spec, &bits("101")), Err(Error::DimensionMismatch { .. })));
    assert!(!is_feasible(&spec, &bits("11")));
}

#[test]
fn text_form_round_trips() {
    let b = bits("0110100");
    assert_eq!(b.to_string(), "0110100");
    assert_eq!(b.to_index(), 0b0010110);
    assert!("01x".parse::<BitString>().is_err());
}

#[test]
fn feasibility_examples() {
    let one = EncodingSpec::new(1, 3).unwrap();
    assert!(is_feasible(&one, &bits("111")));
    assert!(!is_feasible(&one, &bits("000")));
    let spec = EncodingSpec::new(2, 2).unwrap();
    let feasible: Vec<Vec<u64>> = (0..16u64)
        .map(|i| BitString::from_index(i, 4))
        .filter(|b| is_feasible(&spec, b))
        .map(|b| decode(&spec, &b).unwrap().0 .0)
        .collect();
    let mut sorted = feasible.clone();
    sorted.sort();
    assert_eq!(sorted, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
}

#[test]
fn counts_spot_values() {
    for l in 1..8 {
        assert_eq!(feasible_count(1, l), BigUint::from(1u8));
    }
    assert_eq!(feasible_count(4, 3), BigUint::from(120u8));
    assert_eq!(unconstrained_count(1, 1), BigUint::from(2u8));
    assert_eq!(unconstrained_count(4, 3), BigUint::from(4096u32));
}

#[test]
fn counts_match_recursion() {
    let mut memo = BTreeMap::new();
    for n in 1..=5 {
        for l in 1..=5 {
            let want = lemma_count(n, (1 << l) - 1, &mut memo);
            assert_eq!(feasible_count(n, l), BigUint::from(want), "n={n} l={l}");
        }
    }
}

#[test]
fn pascal_identity() {
    let mut memo = BTreeMap::new();
    for n in 1..=5 {
        for total in 0..=31u64 {
            let lhs = lemma_count(n + 1, total, &mut memo);
            let rhs: u128 = (0..=total).map(|m| lemma_count(n, m, &mut memo)).sum();
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn counts_match_brute_force() {
    for n in 1..=5 {
        for l in 1..=4 {
            let spec = EncodingSpec::new(n, l).unwrap();
            assert_eq!(
                BigUint::from(brute_force_count(&spec)),
                feasible_count(n, l),
                "n={n} l={l}"
            );
        }
    }
}

#[test]
fn constraint_ratio_grows_with_n() {
    let ratio = |n| {
        let u = unconstrained_count(n, 3);
        let c = feasible_count(n, 3);
        u.to_string().parse::<f64>().unwrap() / c.to_string().parse::<f64>().unwrap()
    };
    for n in 2..5 {
        assert!(ratio(n + 1) > ratio(n));
    }
}

#[test]
fn enumeration_examples() {
    let one = EncodingSpec::new(1, 2).unwrap();
    assert_eq!(enumerate_feasible(&one).unwrap().collect::<Vec<_>>(), vec![bits("11")]);
    let spec = EncodingSpec::new(2, 2).unwrap();
    let got: HashSet<BitString> = enumerate_feasible(&spec).unwrap().collect();
    let want: HashSet<BitString> = (0..16u64)
        .map(|i| BitString::from_index(i, 4))
        .filter(|b| is_feasible(&spec, b))
        .collect();
    assert_eq!(got, want);
}

#[test]
fn enumeration_is_complete_and_distinct() {
    for n in 1..=4 {
        for l in 1..=4 {
            let spec = EncodingSpec::new(n, l).unwrap();
            let all: Vec<BitString> = enumerate_feasible(&spec).unwrap().collect();
            let distinct: HashSet<&BitString> = all.iter().collect();
            assert_eq!(distinct.len(), all.len());
            assert_eq!(BigUint::from(all.len()), feasible_count(n, l));
            assert!(all.iter().all(|b| is_feasible(&spec, b)));
        }
    }
}

#[test]
fn enumeration_guard() {
    let spec = EncodingSpec::new(5, 5).unwrap();
    assert!(spec.qubits() > ENUMERATION_LIMIT);
    assert!(matches!(enumerate_feasible(&spec), Err(Error::GuardExceeded { .. })));
}

#[test]
fn single_asset_sampling_is_constant() {
    let spec = EncodingSpec::new(1, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        assert_eq!(sample_feasible_uniform(&spec, &mut rng), bits("11111"));
    }
}

#[test]
fn uniform_sampling_within_three_sigma() {
    let spec = EncodingSpec::new(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 40_000;
    let mut counts: BTreeMap<BitString, usize> = BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(sample_feasible_uniform(&spec, &mut rng)).or_default() += 1;
    }
    assert_eq!(counts.len(), 4);
    let sd = (draws as f64 * 0.25 * 0.75).sqrt();
    for (b, c) in counts {
        assert!((c as f64 - draws as f64 / 4.0).abs() < 3.0 * sd, "{b}: {c}");
    }
}

#[test]
fn sampling_passes_chi_square() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let spec = EncodingSpec::new(3, 2).unwrap();
    let states: Vec<BitString> = enumerate_feasible(&spec).unwrap().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 20_000;
    let mut counts: BTreeMap<BitString, f64> = BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(sample_feasible_uniform(&spec, &mut rng)).or_default() += 1.0;
    }
    let expected = draws as f64 / states.len() as f64;
    let stat: f64 = states
        .iter()
        .map(|s| {
            let c = counts.get(s).copied().unwrap_or(0.0);
            (c - expected).powi(2) / expected
        })
        .sum();
    let p = 1.0 - ChiSquared::new((states.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi2 {stat} p {p}");
}

#[test]
fn unranking_boundaries() {
    let spec = EncodingSpec::new(4, 3).unwrap();
    let last = feasible_count(4, 3) - 1u8;
    let first = unrank_feasible(&spec, &BigUint::from(0u8)).unwrap();
    let final_ = unrank_feasible(&spec, &last).unwrap();
    assert_ne!(first, final_);
    for lots in [&first, &final_] {
        assert!(is_feasible(&spec, &encode(&spec, lots).unwrap()));
    }
    assert!(unrank_feasible(&spec, &(last + 1u8)).is_err());
}

proptest! {
    #[test]
    fn encode_decode_round_trip(n in 1usize..6, l in 1usize..5, seed in any::<u64>()) {
        use rand::Rng;
        let spec = EncodingSpec::new(n, l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lots = LotVector((0..n).map(|_| rng.random_range(0..=spec.max_lots())).collect());
        let b = encode(&spec, &lots).unwrap();
        prop_assert_eq!(decode(&spec, &b).unwrap().0, lots);
    }

    #[test]
    fn rank_inverts_unrank(n in 1usize..6, l in 1usize..5, r in any::<u64>()) {
        let spec = EncodingSpec::new(n, l).unwrap();
        let rank = BigUint::from(r) % feasible_count(n, l);
        let lots = unrank_feasible(&spec, &rank).unwrap();
        prop_assert_eq!(rank_feasible(&spec, &lots).unwrap(), rank);
    }
}

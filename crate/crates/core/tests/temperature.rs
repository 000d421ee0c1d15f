use proptest::prelude::*;
use tokscope_core::coldstart::{apply_temperature, entropy, ColdStartDistribution, MetricError};
use tokscope_core::vocab::{entries_from, BYTE_LEVEL};
use tokscope_core::{TokenId, Vocabulary};

const LADDER: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn vocab(n: usize) -> Vocabulary {
    let entries = (0..n)
        .map(|i| (BYTE_LEVEL.encode(format!("t{i}").as_bytes()), i as TokenId))
        .collect();
    Vocabulary::from_parts("temp", entries, vec![]).unwrap()
}

fn dense() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![1 => Just(0.0), 8 => 1e-9f64..1.0], 2..200).prop_filter_map(
        "needs mass",
        |w| {
            let total: f64 = w.iter().sum();
            (total > 0.0).then(|| w.iter().map(|x| x / total).collect())
        },
    )
}

fn dist(probs: &[f64]) -> (Vocabulary, ColdStartDistribution) {
    let v = vocab(probs.len());
    let entries = probs.iter().enumerate().map(|(i, &p)| (i as TokenId, p)).collect();
    let d = ColdStartDistribution::new("m", &v, entries, true).unwrap();
    (v, d)
}

proptest! {
    #[test]
    fn unit_temperature_is_identity(probs in dense()) {
        let (_, d) = dist(&probs);
        let t = apply_temperature(&d, 1.0).unwrap();
        for (a, b) in t.entries().iter().zip(d.entries()) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((a.1 - b.1).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_rises_with_temperature(probs in dense()) {
        let (_, d) = dist(&probs);
        let h: Vec<f64> = LADDER.iter().map(|&t| entropy(&apply_temperature(&d, t).unwrap())).collect();
        for w in h.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "entropy fell: {:?}", h);
        }
    }

    #[test]
    fn argmax_and_mass_are_preserved(probs in dense(), t in 0.05f64..20.0) {
        let (_, d) = dist(&probs);
        let scaled = apply_temperature(&d, t).unwrap();
        prop_assert_eq!(scaled.argmax(), d.argmax());
        prop_assert!((scaled.total_mass() - 1.0).abs() <= 1e-9);
        prop_assert!((scaled.temperature_applied() - t).abs() <= 1e-15);
    }

    #[test]
    fn composition_multiplies_temperatures(probs in dense(), a in 0.25f64..4.0, b in 0.25f64..4.0) {
        let (_, d) = dist(&probs);
        let twice = apply_temperature(&apply_temperature(&d, a).unwrap(), b).unwrap();
        let once = apply_temperature(&d, a * b).unwrap();
        prop_assert!((twice.temperature_applied() - a * b).abs() <= 1e-12);
        for (x, y) in twice.entries().iter().zip(once.entries()) {
            prop_assert!((x.1 - y.1).abs() <= 1e-9);
        }
    }
}

#[test]
fn two_token_example() {
    let v = Vocabulary::from_parts("pair", entries_from([("a", 0), ("b", 1)]), vec![]).unwrap();
    let d = ColdStartDistribution::new("m", &v, vec![(0, 0.8), (1, 0.2)], true).unwrap();
    let t = apply_temperature(&d, 2.0).unwrap();
    assert!((t.probability(0) - 2.0 / 3.0).abs() <= 1e-9);
    assert!((t.probability(1) - 1.0 / 3.0).abs() <= 1e-9);
}

#[test]
fn tiny_temperature_saturates_without_nan() {
    let (_, d) = dist(&[0.5, 0.3, 0.2]);
    let t = apply_temperature(&d, 1e-6).unwrap();
    assert_eq!(t.probability(0), 1.0);
    assert!(t.entries().iter().all(|e| e.1.is_finite()));
}

#[test]
fn invalid_temperatures() {
    let (v, d) = dist(&[0.5, 0.5]);
    for bad in [0.0, -0.5, f64::NAN, f64::INFINITY] {
        assert_eq!(apply_temperature(&d, bad), Err(MetricError::NonPositiveTemperature));
    }
    let sparse = ColdStartDistribution::new("m", &v, vec![(0, 0.5)], false).unwrap();
    assert_eq!(apply_temperature(&sparse, 2.0), Err(MetricError::SparseDistribution));
}

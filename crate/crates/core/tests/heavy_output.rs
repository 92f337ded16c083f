use proptest::prelude::*;
use qvx_core::circuit::generate_qv_circuit;
use qvx_core::heavy::{compute_heavy_set, heavy_fraction, ideal_heavy_probability};
use qvx_core::sim::{ideal_probabilities, index_to_bitstring, Counts};

/// Pairwise-comparison heavy set, no sorting.
fn brute_force_heavy(probs: &[f64]) -> Vec<usize> {
    let n = probs.len();
    (0..n)
        .filter(|&i| {
            let lighter_or_equal = probs.iter().filter(|&&q| q <= probs[i]).count();
            lighter_or_equal > n / 2
        })
        .collect()
}

#[test]
fn four_qubit_heavy_sets_have_half_the_outcomes() {
    for seed in 0..500 {
        let probs = ideal_probabilities(&generate_qv_circuit(4, seed).unwrap()).unwrap();
        let hs = compute_heavy_set(&probs).unwrap();
        assert_eq!(hs.len(), 8, "seed {seed}");
        assert_eq!(hs.members, brute_force_heavy(&probs), "seed {seed}");
        let ideal = ideal_heavy_probability(&probs, &hs).unwrap();
        assert!(ideal > 0.5 && ideal <= 1.0);
    }
}

#[test]
fn heavy_set_is_pure() {
    let probs = ideal_probabilities(&generate_qv_circuit(3, 4).unwrap()).unwrap();
    assert_eq!(compute_heavy_set(&probs).unwrap(), compute_heavy_set(&probs).unwrap());
}

fn distribution(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, 1 << m).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #[test]
    fn heavy_mass_dominates(probs in distribution(3)) {
        let hs = compute_heavy_set(&probs).unwrap();
        let mut sorted = probs.clone();
        sorted.sort_by(f64::total_cmp);
        let ties = sorted.windows(2).any(|w| w[0] == w[1]);
        prop_assume!(!ties);
        prop_assert_eq!(hs.len(), 4);
        prop_assert!(ideal_heavy_probability(&probs, &hs).unwrap() >= 0.5);
        for &i in &hs.members {
            prop_assert!(probs[i] > hs.median_probability);
        }
    }

    #[test]
    fn fraction_ignores_insertion_order(
        probs in distribution(2),
        shots in prop::collection::vec(0u64..50, 4),
        order in Just([3usize, 1, 0, 2]).prop_shuffle(),
    ) {
        prop_assume!(shots.iter().sum::<u64>() > 0);
        let hs = compute_heavy_set(&probs).unwrap();
        let forward = Counts::from_pairs(2, (0..4).map(|i| (index_to_bitstring(i, 2), shots[i])));
        let shuffled = Counts::from_pairs(2, order.iter().map(|&i| (index_to_bitstring(i, 2), shots[i])));
        prop_assert_eq!(heavy_fraction(&forward, &hs).unwrap(), heavy_fraction(&shuffled, &hs).unwrap());
    }
}

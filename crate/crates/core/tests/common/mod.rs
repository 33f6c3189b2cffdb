#![allow(dead_code)]

use proptest::prelude::*;
use ssc::model::{Instance, Realization};
use ssc::strategies::Permutation;

/// Instances with `lo..=hi` tests, costs in `1..=20` (integers, so ties
/// occur) and probabilities that include the endpoints 0 and 1.
pub fn instances(lo: usize, hi: usize) -> impl Strategy<Value = Instance> {
    (lo..=hi).prop_flat_map(|n| {
        let prob = prop_oneof![
            1 => Just(0.0),
            1 => Just(1.0),
            1 => Just(0.5),
            6 => 0.01f64..0.99,
        ];
        (
            proptest::collection::vec(1u32..=20, n),
            proptest::collection::vec(prob, n),
            proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), 0..=n),
        )
            .prop_map(move |(costs, probs, interior)| {
                let mut cuts = vec![0];
                cuts.extend(interior);
                cuts.push(n + 1);
                Instance::new(costs.into_iter().map(f64::from).collect(), probs, cuts).unwrap()
            })
    })
}

/// Strictly interior probabilities and real-valued costs.
pub fn strict_instances(lo: usize, hi: usize) -> impl Strategy<Value = Instance> {
    (lo..=hi).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.1f64..50.0, n),
            proptest::collection::vec(0.01f64..0.99, n),
            proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), 0..=n),
        )
            .prop_map(move |(costs, probs, interior)| {
                let mut cuts = vec![0];
                cuts.extend(interior);
                cuts.push(n + 1);
                Instance::new(costs, probs, cuts).unwrap()
            })
    })
}

pub fn with_permutation(inst: Instance) -> impl Strategy<Value = (Instance, Permutation)> {
    let n = inst.n();
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(move |order| (inst.clone(), Permutation::new(order, n).unwrap()))
}

pub fn realizations(n: usize) -> impl Iterator<Item = Realization> {
    (0..1u64 << n).map(move |mask| Realization::from_mask(n, mask))
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k - 1 {
            heap(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
        heap(k - 1, a, out);
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Naive adaptive optimum: plain recursion over the set of unqueried tests
/// and the success count, no memoisation.
pub fn naive_adaptive(inst: &Instance) -> f64 {
    fn go(inst: &Instance, left: u32, s: usize, k: usize) -> f64 {
        if inst.settled(s, k).is_some() {
            return 0.0;
        }
        (0..inst.n())
            .filter(|j| left & (1 << j) != 0)
            .map(|j| {
                let rest = left & !(1 << j);
                let p = inst.prob(j);
                let mut v = inst.cost(j);
                if p > 0.0 {
                    v += p * go(inst, rest, s + 1, k + 1);
                }
                if p < 1.0 {
                    v += (1.0 - p) * go(inst, rest, s, k + 1);
                }
                v
            })
            .fold(f64::INFINITY, f64::min)
    }
    go(inst, (1u32 << inst.n()) - 1, 0, 0)
}

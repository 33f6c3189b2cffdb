mod common;

use common::{instances, strict_instances};
use proptest::prelude::*;
use ssc::model::Instance;
use ssc::strategies::{
    preset_spec, preset_strategy, ratio_permutation, round_robin_merge, round_robin_trace,
    Permutation, Preset, RatioRule, RoundRobinSpec,
};

const RULES: [RatioRule; 3] = [RatioRule::Fail, RatioRule::Succ, RatioRule::Cheap];

fn weights() -> impl Strategy<Value = [f64; 3]> {
    [0.2f64..5.0, 0.2f64..5.0, 0.2f64..5.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ratio_orders_sort_their_keys(inst in instances(1, 15)) {
        for rule in RULES {
            let perm = ratio_permutation(&inst, rule);
            let keys: Vec<f64> = perm.order().iter().map(|&j| rule.key(inst.cost(j), inst.prob(j))).collect();
            for (w, pair) in keys.windows(2).zip(perm.order().windows(2)) {
                prop_assert!(w[0] < w[1] || (w[0] == w[1] && pair[0] < pair[1]));
            }
        }
    }

    #[test]
    fn dedup_merge_is_a_permutation(inst in instances(1, 15), w in weights()) {
        for spec in [
            preset_spec(&inst, Preset::TwoRR, None, true).unwrap(),
            preset_spec(&inst, Preset::ThreeRR, Some(w), true).unwrap(),
        ] {
            let seq = round_robin_merge(&inst, &spec).unwrap();
            prop_assert!(Permutation::new(seq.steps().to_vec(), inst.n()).is_ok());
        }
    }

    #[test]
    fn merge_picks_the_smallest_key(inst in instances(1, 15), w in weights(), dedup in any::<bool>()) {
        let spec = preset_spec(&inst, Preset::ThreeRR, Some(w), dedup).unwrap();
        for step in round_robin_trace(&inst, &spec).unwrap() {
            let best = step.keys[step.owner];
            prop_assert!(best.is_finite());
            for (h, &k) in step.keys.iter().enumerate() {
                prop_assert!(best < k || (best == k && step.owner <= h));
            }
        }
    }

    #[test]
    fn owners_follow_their_lists(inst in instances(1, 12), w in weights(), dedup in any::<bool>()) {
        let spec = preset_spec(&inst, Preset::ThreeRR, Some(w), dedup).unwrap();
        let trace = round_robin_trace(&inst, &spec).unwrap();
        let k = spec.sub_perms().len();
        if dedup {
            prop_assert_eq!(trace.len(), inst.n());
        } else {
            prop_assert_eq!(trace.len(), k * inst.n());
        }
        for h in 0..k {
            let owned: Vec<usize> = trace.iter().filter(|s| s.owner == h).map(|s| s.test).collect();
            let list = spec.sub_perms()[h].order();
            if dedup {
                let mut it = list.iter();
                prop_assert!(owned.iter().all(|t| it.any(|x| x == t)));
            } else {
                prop_assert_eq!(owned.as_slice(), list);
            }
        }
    }

    #[test]
    fn uniform_cost_scaling_changes_nothing(inst in strict_instances(1, 12), lambda in prop_oneof![Just(0.5), Just(3.0), 0.01f64..100.0]) {
        let scaled = inst.scaled(lambda).unwrap();
        for rule in RULES {
            prop_assert_eq!(ratio_permutation(&inst, rule), ratio_permutation(&scaled, rule));
        }
        for p in [Preset::TwoRR, Preset::ThreeRR] {
            prop_assert_eq!(preset_strategy(&inst, p, None).unwrap(), preset_strategy(&scaled, p, None).unwrap());
        }
    }

    #[test]
    fn relabeling_tests_relabels_orders(inst in strict_instances(2, 10), shuffle in Just((0..10).collect::<Vec<usize>>()).prop_shuffle()) {
        let n = inst.n();
        // sigma maps old index to new index
        let sigma: Vec<usize> = {
            let mut ranked: Vec<usize> = (0..n).collect();
            ranked.sort_by_key(|&j| shuffle[j]);
            let mut s = vec![0; n];
            for (new, &old) in ranked.iter().enumerate() {
                s[old] = new;
            }
            s
        };
        let mut costs = vec![0.0; n];
        let mut probs = vec![0.0; n];
        for j in 0..n {
            costs[sigma[j]] = inst.cost(j);
            probs[sigma[j]] = inst.prob(j);
        }
        let moved = Instance::new(costs, probs, inst.cuts().to_vec()).unwrap();
        let relabel = |p: &Permutation| -> Vec<usize> { p.order().iter().map(|&j| sigma[j]).collect() };
        for rule in RULES {
            let keys: Vec<f64> = (0..n).map(|j| rule.key(inst.cost(j), inst.prob(j))).collect();
            let distinct = (0..n).all(|a| (a + 1..n).all(|b| keys[a] != keys[b]));
            prop_assume!(distinct);
            let want = ratio_permutation(&moved, rule).into_inner();
            prop_assert_eq!(relabel(&ratio_permutation(&inst, rule)), want);
        }
        let merged = preset_strategy(&inst, Preset::ThreeRR, None).unwrap();
        let want = preset_strategy(&moved, Preset::ThreeRR, None).unwrap().into_inner();
        prop_assert_eq!(relabel(&merged), want);
    }

    #[test]
    fn single_sub_algorithm_is_passed_through(inst in instances(1, 12), w in 0.1f64..10.0) {
        let perm = ratio_permutation(&inst, RatioRule::Succ);
        let spec = RoundRobinSpec::new(vec![perm.clone()], vec![w], true).unwrap();
        let merged = round_robin_merge(&inst, &spec).unwrap();
        prop_assert_eq!(merged.steps(), perm.order());
    }
}

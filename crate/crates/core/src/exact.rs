//! Exponential-time exact baselines.
//!
//! Every quantity here depends on the set of conducted tests only through
//! per-test costs and probabilities, and determination depends only on
//! `(successes, number conducted)`. The adaptive solvers therefore run a
//! Bellman recursion over `(conducted bitmask, successes)`; the non-adaptive
//! solver is a shortest path over the subset lattice, since the expected
//! cost of an order is `sum_t c(step t) * P(undetermined | first t-1 tests)`
//! and that probability depends only on the set conducted.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::eval::{success_count_distribution, ConductedTest, ExecutionTrace, Strategy};
use crate::model::{Instance, Realization};
use crate::strategies::Permutation;

pub const DEFAULT_ADAPTIVE_LIMIT: usize = 20;
pub const DEFAULT_PERMUTATION_LIMIT: usize = 10;

/// Memory for the state tables grows as `2^n * n`; refuse beyond this even
/// when a caller raises the configured limit.
const HARD_LIMIT: usize = 26;

/// Relative slack under which two candidate values count as tied, so that
/// ties resolve to the lowest test index.
const TIE_TOLERANCE: f64 = 1e-12;

/// An adaptive strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireNode", into = "WireNode")]
pub enum DecisionTree {
    /// The class is determined.
    Leaf(usize),
    /// Conduct `test`, then continue in the branch matching its outcome.
    Test {
        test: usize,
        fail: Box<DecisionTree>,
        succ: Box<DecisionTree>,
    },
}

/// JSON shape: `{"test": id, "fail": node, "succ": node}` or `{"leaf": class}`,
/// with 1-based test ids.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireNode {
    Leaf {
        leaf: usize,
    },
    Test {
        test: usize,
        fail: Box<WireNode>,
        succ: Box<WireNode>,
    },
}

impl TryFrom<WireNode> for DecisionTree {
    type Error = Error;

    fn try_from(node: WireNode) -> Result<Self> {
        match node {
            WireNode::Leaf { leaf } if leaf >= 1 => Ok(DecisionTree::Leaf(leaf)),
            WireNode::Leaf { .. } => domain("leaf classes are 1-based"),
            WireNode::Test { test: 0, .. } => domain("test ids are 1-based"),
            WireNode::Test { test, fail, succ } => Ok(DecisionTree::Test {
                test: test - 1,
                fail: Box::new((*fail).try_into()?),
                succ: Box::new((*succ).try_into()?),
            }),
        }
    }
}

impl From<DecisionTree> for WireNode {
    fn from(tree: DecisionTree) -> Self {
        match tree {
            DecisionTree::Leaf(class) => WireNode::Leaf { leaf: class },
            DecisionTree::Test { test, fail, succ } => WireNode::Test {
                test: test + 1,
                fail: Box::new((*fail).into()),
                succ: Box::new((*succ).into()),
            },
        }
    }
}

impl DecisionTree {
    pub fn test(test: usize, fail: DecisionTree, succ: DecisionTree) -> Self {
        DecisionTree::Test {
            test,
            fail: Box::new(fail),
            succ: Box::new(succ),
        }
    }

    /// Test at the root, if any.
    pub fn root_test(&self) -> Option<usize> {
        match self {
            DecisionTree::Leaf(_) => None,
            DecisionTree::Test { test, .. } => Some(*test),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks that no path repeats a test and that every leaf names the class
    /// fixed by the outcomes on its path.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        fn walk(
            node: &DecisionTree,
            inst: &Instance,
            used: &mut Vec<bool>,
            successes: usize,
            depth: usize,
        ) -> Result<()> {
            match node {
                DecisionTree::Leaf(class) => match inst.settled(successes, depth) {
                    Some(c) if c == *class => Ok(()),
                    _ => Err(Error::Contract(format!(
                        "leaf {class} after {successes} successes in {depth} tests is not determined"
                    ))),
                },
                DecisionTree::Test { test, fail, succ } => {
                    if *test >= inst.n() || used[*test] {
                        return Err(Error::Contract(format!("test {} repeated or unknown", test + 1)));
                    }
                    used[*test] = true;
                    walk(fail, inst, used, successes, depth + 1)?;
                    walk(succ, inst, used, successes + 1, depth + 1)?;
                    used[*test] = false;
                    Ok(())
                }
            }
        }
        walk(self, instance, &mut vec![false; instance.n()], 0, 0)
    }
}

impl Strategy for DecisionTree {
    fn execute(&self, instance: &Instance, x: &Realization) -> Result<ExecutionTrace> {
        x.check(instance)?;
        let mut node = self;
        let mut used = vec![false; instance.n()];
        let (mut successes, mut depth) = (0, 0);
        let mut conducted = Vec::new();
        let mut total_cost = 0.0;
        loop {
            if let Some(class) = instance.settled(successes, depth) {
                return Ok(ExecutionTrace {
                    conducted,
                    total_cost,
                    class,
                });
            }
            match node {
                DecisionTree::Leaf(class) => {
                    return Err(Error::Contract(format!(
                        "tree stops at class {class} before the class is determined"
                    )))
                }
                DecisionTree::Test { test, fail, succ } => {
                    let j = *test;
                    if j >= instance.n() || std::mem::replace(&mut used[j], true) {
                        return Err(Error::Contract(format!(
                            "test {} repeated or unknown",
                            j + 1
                        )));
                    }
                    let outcome = x.outcome(j);
                    total_cost += instance.cost(j);
                    conducted.push(ConductedTest {
                        test: j,
                        outcome,
                        cost: instance.cost(j),
                    });
                    depth += 1;
                    successes += usize::from(outcome);
                    node = if outcome { succ } else { fail };
                }
            }
        }
    }
}

/// An optimal value together with a strategy attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved<S> {
    pub value: f64,
    pub strategy: S,
}

fn check_limit(instance: &Instance, limit: usize, what: &str) -> Result<()> {
    let n = instance.n();
    if n > limit || n > HARD_LIMIT {
        return Err(Error::Resource(format!(
            "{what} with n = {n} exceeds the limit of {}",
            limit.min(HARD_LIMIT)
        )));
    }
    Ok(())
}

fn improves(candidate: f64, best: f64) -> bool {
    candidate < best - TIE_TOLERANCE * best.abs().max(1.0)
}

/// Dense table over `(mask, successes)` with `successes <= popcount(mask)`.
struct StateTable {
    offsets: Vec<usize>,
    len: usize,
}

impl StateTable {
    fn new(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(1 << n);
        let mut len = 0;
        for mask in 0..1usize << n {
            offsets.push(len);
            len += mask.count_ones() as usize + 1;
        }
        Self { offsets, len }
    }

    #[inline]
    fn at(&self, mask: usize, successes: usize) -> usize {
        self.offsets[mask] + successes
    }
}

const NO_TEST: u8 = u8::MAX;

struct Bellman {
    table: StateTable,
    value: Vec<f64>,
    choice: Vec<u8>,
}

/// Minimizes the expected weighted cost, where conducting a test in state
/// `(mask, s)` costs `c_j * weight(mask, s)`.
fn bellman(instance: &Instance, weight: Option<&[f64]>) -> Bellman {
    let n = instance.n();
    let table = StateTable::new(n);
    let mut value = vec![0.0; table.len];
    let mut choice = vec![NO_TEST; table.len];
    for mask in (0..1usize << n).rev() {
        let k = mask.count_ones() as usize;
        for s in 0..=k {
            if instance.settled(s, k).is_some() {
                continue;
            }
            let idx = table.at(mask, s);
            let w = weight.map_or(1.0, |w| w[idx]);
            let mut best = f64::INFINITY;
            let mut arg = NO_TEST;
            for j in (0..n).filter(|j| mask >> j & 1 == 0) {
                let next = mask | 1 << j;
                let p = instance.prob(j);
                let v = instance.cost(j) * w
                    + p * value[table.at(next, s + 1)]
                    + (1.0 - p) * value[table.at(next, s)];
                if arg == NO_TEST || improves(v, best) {
                    best = v;
                    arg = j as u8;
                }
            }
            value[idx] = best;
            choice[idx] = arg;
        }
    }
    Bellman {
        table,
        value,
        choice,
    }
}

impl Bellman {
    fn tree(&self, instance: &Instance, mask: usize, successes: usize) -> DecisionTree {
        let k = mask.count_ones() as usize;
        if let Some(class) = instance.settled(successes, k) {
            return DecisionTree::Leaf(class);
        }
        let j = self.choice[self.table.at(mask, successes)] as usize;
        let next = mask | 1 << j;
        DecisionTree::test(
            j,
            self.tree(instance, next, successes),
            self.tree(instance, next, successes + 1),
        )
    }
}

/// Minimum expected cost over all adaptive strategies, with one optimal tree.
/// Ties go to the lowest test index.
pub fn optimal_adaptive(instance: &Instance, limit: usize) -> Result<Solved<DecisionTree>> {
    check_limit(instance, limit, "optimal adaptive search")?;
    let b = bellman(instance, None);
    Ok(Solved {
        value: b.value[b.table.at(0, 0)],
        strategy: b.tree(instance, 0, 0),
    })
}

/// Minimum of `E[cost | f(x) = class]` over all adaptive strategies.
///
/// The denominator `P(f = class)` does not depend on the strategy, so it
/// suffices to minimize `E[cost * 1{f = class}]`. Conducting test `j` in state
/// `(mask, s)` contributes `c_j * P(f = class | mask, s)` to that objective.
pub fn conditional_optimal_adaptive(
    instance: &Instance,
    class: usize,
    limit: usize,
) -> Result<Solved<DecisionTree>> {
    if class == 0 || class > instance.num_classes() {
        return domain(format!(
            "class {class} out of range 1..={}",
            instance.num_classes()
        ));
    }
    check_limit(instance, limit, "conditional optimal search")?;
    let n = instance.n();
    let table = StateTable::new(n);
    let full = (1usize << n) - 1;
    let mut hit = vec![0.0; table.len];
    for mask in (0..=full).rev() {
        let k = mask.count_ones() as usize;
        // any unconducted test can be revealed next; use the lowest
        let j = (!mask).trailing_zeros() as usize;
        for s in 0..=k {
            hit[table.at(mask, s)] = if mask == full {
                f64::from(u8::from(instance.class_of(s) == class))
            } else {
                let p = instance.prob(j);
                let next = mask | 1 << j;
                p * hit[table.at(next, s + 1)] + (1.0 - p) * hit[table.at(next, s)]
            };
        }
    }
    let p_class = hit[table.at(0, 0)];
    if p_class <= 0.0 {
        return domain(format!("class {class} has probability zero"));
    }
    let b = bellman(instance, Some(&hit));
    Ok(Solved {
        value: b.value[b.table.at(0, 0)] / p_class,
        strategy: b.tree(instance, 0, 0),
    })
}

/// Minimum expected cost over all test orders; among (near-)ties the
/// lexicographically smallest order is returned.
pub fn optimal_nonadaptive(instance: &Instance, limit: usize) -> Result<Solved<Permutation>> {
    check_limit(instance, limit, "optimal non-adaptive search")?;
    let n = instance.n();
    let full = (1usize << n) - 1;

    let mut undetermined = vec![0.0; full + 1];
    for (mask, u) in undetermined.iter_mut().enumerate() {
        let probs: Vec<f64> = (0..n)
            .filter(|j| mask >> j & 1 == 1)
            .map(|j| instance.prob(j))
            .collect();
        let k = probs.len();
        let dist = success_count_distribution(&probs);
        *u = (0..=k)
            .filter(|&s| instance.settled(s, k).is_none())
            .map(|s| dist.get(s))
            .sum();
    }

    // to_go[mask]: cheapest expected cost of finishing once `mask` is conducted
    let mut to_go = vec![0.0; full + 1];
    for mask in (0..full).rev() {
        to_go[mask] = (0..n)
            .filter(|j| mask >> j & 1 == 0)
            .map(|j| instance.cost(j) * undetermined[mask] + to_go[mask | 1 << j])
            .fold(f64::INFINITY, f64::min);
    }

    let mut order = Vec::with_capacity(n);
    let mut mask = 0;
    let mut value = 0.0;
    while mask != full {
        let slack = TIE_TOLERANCE * to_go[mask].abs().max(1.0);
        let j = (0..n)
            .filter(|j| mask >> j & 1 == 0)
            .find(|&j| {
                instance.cost(j) * undetermined[mask] + to_go[mask | 1 << j] <= to_go[mask] + slack
            })
            .expect("the minimizing test is among the candidates");
        value += instance.cost(j) * undetermined[mask];
        order.push(j);
        mask |= 1 << j;
    }
    Ok(Solved {
        value,
        strategy: Permutation::new(order, n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::expected_cost_enum;
    use crate::model::fixtures::sample4;

    fn gap(m: usize) -> Instance {
        let mut probs = vec![1.0; m];
        probs.extend(vec![0.0; m]);
        probs.push(0.5);
        Instance::new(vec![1.0; 2 * m + 1], probs, vec![0, m + 1, 2 * m + 2]).unwrap()
    }

    #[test]
    fn sample4_root_is_test_two() {
        let inst = sample4();
        let opt = optimal_adaptive(&inst, DEFAULT_ADAPTIVE_LIMIT).unwrap();
        assert_eq!(opt.strategy.root_test(), Some(1));
        opt.strategy.validate(&inst).unwrap();
        let again = expected_cost_enum(&inst, &opt.strategy, 20).unwrap();
        assert!((again - opt.value).abs() <= 1e-9);
    }

    #[test]
    fn gap_adaptive_values() {
        for m in 1..=5 {
            let opt = optimal_adaptive(&gap(m), DEFAULT_ADAPTIVE_LIMIT).unwrap();
            assert!(
                (opt.value - (m as f64 + 1.0)).abs() <= 1e-9,
                "m = {m}: {}",
                opt.value
            );
        }
    }

    #[test]
    fn gap_nonadaptive_value() {
        let opt = optimal_nonadaptive(&gap(2), DEFAULT_PERMUTATION_LIMIT).unwrap();
        assert!((opt.value - 4.0).abs() <= 1e-9);
        let check = crate::eval::expected_cost_perm(&gap(2), &opt.strategy).unwrap();
        assert!((check - 4.0).abs() <= 1e-9);
    }

    #[test]
    fn single_class_is_free() {
        let inst = Instance::new(vec![2.0, 1.0], vec![0.2, 0.7], vec![0, 3]).unwrap();
        let opt = optimal_adaptive(&inst, 20).unwrap();
        assert_eq!(opt.value, 0.0);
        assert_eq!(opt.strategy, DecisionTree::Leaf(1));
        assert_eq!(optimal_nonadaptive(&inst, 10).unwrap().value, 0.0);
    }

    #[test]
    fn one_test_instance() {
        let inst = Instance::new(vec![4.0], vec![0.35], vec![0, 1, 2]).unwrap();
        let non = optimal_nonadaptive(&inst, 10).unwrap();
        assert_eq!(non.value, 4.0);
        assert_eq!(non.strategy.order(), &[0]);
        for class in 1..=2 {
            let c = conditional_optimal_adaptive(&inst, class, 20).unwrap();
            assert!((c.value - 4.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn gap_conditional_success_class() {
        let m = 1;
        let eps = 1e-6;
        let inst = Instance::new(
            vec![1.0; 3],
            vec![1.0 - eps, eps, 0.5],
            vec![0, m + 1, 2 * m + 2],
        )
        .unwrap();
        let c = conditional_optimal_adaptive(&inst, 2, 20).unwrap();
        assert!((c.value - 2.0).abs() <= 1e-4, "{}", c.value);
    }

    #[test]
    fn limits_are_enforced() {
        let inst = gap(3);
        assert!(matches!(
            optimal_adaptive(&inst, 5),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            optimal_nonadaptive(&inst, 5),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            conditional_optimal_adaptive(&inst, 1, 5),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            conditional_optimal_adaptive(&inst, 3, 20),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tree_json_shape() {
        let tree = DecisionTree::test(1, DecisionTree::Leaf(1), DecisionTree::Leaf(2));
        let json = tree.to_json();
        assert_eq!(json, r#"{"test":2,"fail":{"leaf":1},"succ":{"leaf":2}}"#);
        assert_eq!(DecisionTree::from_json(&json).unwrap(), tree);
        assert!(
            DecisionTree::from_json(r#"{"test":0,"fail":{"leaf":1},"succ":{"leaf":2}}"#).is_err()
        );
        assert!(DecisionTree::from_json(r#"{"test":1,"fail":{"leaf":1}}"#).is_err());
    }

    #[test]
    fn malformed_trees_are_contract_errors() {
        let inst = sample4();
        let x = Realization::new(vec![false; 4]);
        let early_leaf = DecisionTree::test(0, DecisionTree::Leaf(1), DecisionTree::Leaf(2));
        assert!(matches!(
            early_leaf.execute(&inst, &x),
            Err(Error::Contract(_))
        ));
        assert!(early_leaf.validate(&inst).is_err());
        let repeat = DecisionTree::test(
            0,
            DecisionTree::test(0, DecisionTree::Leaf(1), DecisionTree::Leaf(1)),
            DecisionTree::Leaf(2),
        );
        assert!(matches!(repeat.execute(&inst, &x), Err(Error::Contract(_))));
    }
}

//! Ratio-ordered test permutations and the weighted round-robin combinator.
//!
//! The merge is outcome-independent: the choice at each step depends only on
//! costs and earlier choices, so it is precomputed to a full order here and
//! the stopping rule is applied later by the evaluator.

use std::fmt;

use crate::error::{domain, Result};
use crate::model::Instance;

/// Weight of the cheapest-first sub-algorithm in the default 3RR.
pub const DEFAULT_CHEAP_WEIGHT: f64 = std::f64::consts::SQRT_2;

/// Sort rule for a single-criterion ordering of the tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RatioRule {
    /// Ascending `c / (1 - p)`: hunts for failures.
    Fail,
    /// Ascending `c / p`: hunts for successes.
    Succ,
    /// Ascending cost.
    Cheap,
}

impl RatioRule {
    pub fn key(self, cost: f64, prob: f64) -> f64 {
        let denom = match self {
            RatioRule::Fail => 1.0 - prob,
            RatioRule::Succ => prob,
            RatioRule::Cheap => 1.0,
        };
        if denom <= 0.0 {
            f64::INFINITY
        } else {
            cost / denom
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RatioRule::Fail => "fail",
            RatioRule::Succ => "succ",
            RatioRule::Cheap => "cheap",
        }
    }
}

impl std::str::FromStr for RatioRule {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fail" => Ok(RatioRule::Fail),
            "succ" => Ok(RatioRule::Succ),
            "cheap" => Ok(RatioRule::Cheap),
            other => domain(format!("unknown rule {other:?}")),
        }
    }
}

/// A fixed order of all tests (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>, n: usize) -> Result<Self> {
        if order.len() != n {
            return domain(format!(
                "permutation has {} entries, expected {n}",
                order.len()
            ));
        }
        let mut seen = vec![false; n];
        for &j in &order {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return domain(format!("{order:?} is not a permutation of 0..{n}"));
            }
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for Permutation {
    /// Space-separated, 1-based.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_one_based(f, &self.0)
    }
}

/// A test order that may repeat tests (the duplicate-counting merge).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSequence {
    steps: Vec<usize>,
    dedup: bool,
}

impl TestSequence {
    /// `dedup = true` requires `steps` to be a permutation of `0..n`.
    pub fn new(steps: Vec<usize>, dedup: bool, n: usize) -> Result<Self> {
        if dedup {
            Permutation::new(steps.clone(), n)?;
        } else if let Some(&j) = steps.iter().find(|&&j| j >= n) {
            return domain(format!("test {} does not exist (n = {n})", j + 1));
        }
        Ok(Self { steps, dedup })
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn dedup(&self) -> bool {
        self.dedup
    }
}

impl From<Permutation> for TestSequence {
    fn from(p: Permutation) -> Self {
        Self {
            steps: p.0,
            dedup: true,
        }
    }
}

impl From<&Permutation> for TestSequence {
    fn from(p: &Permutation) -> Self {
        p.clone().into()
    }
}

impl fmt::Display for TestSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_one_based(f, &self.steps)
    }
}

fn write_one_based(f: &mut fmt::Formatter<'_>, ids: &[usize]) -> fmt::Result {
    for (i, j) in ids.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{}", j + 1)?;
    }
    Ok(())
}

/// Sorts tests by the rule's key; infinite keys go last and ties go to the
/// lower index.
pub fn ratio_permutation(instance: &Instance, rule: RatioRule) -> Permutation {
    let keys: Vec<f64> = instance
        .costs()
        .iter()
        .zip(instance.probs())
        .map(|(&c, &p)| rule.key(c, p))
        .collect();
    let mut order: Vec<usize> = (0..instance.n()).collect();
    // stable sort keeps index order among equal keys
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    Permutation(order)
}

/// Inputs to the round-robin combinator.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRobinSpec {
    sub_perms: Vec<Permutation>,
    weights: Vec<f64>,
    dedup: bool,
}

impl RoundRobinSpec {
    pub fn new(sub_perms: Vec<Permutation>, weights: Vec<f64>, dedup: bool) -> Result<Self> {
        if sub_perms.is_empty() {
            return domain("round robin needs at least one sub-algorithm");
        }
        if sub_perms.len() != weights.len() {
            return domain(format!(
                "{} sub-algorithms but {} weights",
                sub_perms.len(),
                weights.len()
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return domain(format!("weights must be positive, got {w}"));
        }
        let n = sub_perms[0].len();
        if sub_perms.iter().any(|p| p.len() != n) {
            return domain("sub-permutations have different lengths");
        }
        Ok(Self {
            sub_perms,
            weights,
            dedup,
        })
    }

    pub fn sub_perms(&self) -> &[Permutation] {
        &self.sub_perms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dedup(&self) -> bool {
        self.dedup
    }

    pub fn with_dedup(&self, dedup: bool) -> Self {
        Self {
            dedup,
            ..self.clone()
        }
    }
}

/// One iteration of the merge loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub test: usize,
    /// Index of the sub-algorithm chosen for this step.
    pub owner: usize,
    /// `(C_h + delta_h) / alpha_h` for every sub-algorithm before the choice;
    /// infinite for exhausted ones.
    pub keys: Vec<f64>,
}

/// Runs the merge loop to completion and records every choice.
///
/// With dedup each sub-algorithm skips tests already emitted, and the loop
/// ends after `n` steps. Without dedup sub-algorithms walk their own lists
/// and re-pay repeated tests; the loop ends when every list is exhausted.
pub fn round_robin_trace(instance: &Instance, spec: &RoundRobinSpec) -> Result<Vec<MergeStep>> {
    let n = instance.n();
    if spec.sub_perms[0].len() != n {
        return domain(format!(
            "sub-permutations cover {} tests, instance has {n}",
            spec.sub_perms[0].len()
        ));
    }
    let k = spec.sub_perms.len();
    let mut spent = vec![0.0; k];
    let mut cursor = vec![0usize; k];
    let mut emitted = vec![false; n];
    let total = if spec.dedup { n } else { k * n };
    let mut steps = Vec::with_capacity(total);

    for _ in 0..total {
        let mut keys = Vec::with_capacity(k);
        for h in 0..k {
            let order = spec.sub_perms[h].order();
            if spec.dedup {
                while cursor[h] < n && emitted[order[cursor[h]]] {
                    cursor[h] += 1;
                }
            }
            keys.push(match order.get(cursor[h]) {
                Some(&j) => (spent[h] + instance.cost(j)) / spec.weights[h],
                None => f64::INFINITY,
            });
        }
        // lowest index wins ties
        let owner = (0..k)
            .reduce(|best, h| if keys[h] < keys[best] { h } else { best })
            .expect("k >= 1");
        let test = spec.sub_perms[owner].order()[cursor[owner]];
        cursor[owner] += 1;
        spent[owner] += instance.cost(test);
        emitted[test] = true;
        steps.push(MergeStep { test, owner, keys });
    }
    Ok(steps)
}

/// The merged test order.
pub fn round_robin_merge(instance: &Instance, spec: &RoundRobinSpec) -> Result<TestSequence> {
    let steps = round_robin_trace(instance, spec)?;
    Ok(TestSequence {
        steps: steps.into_iter().map(|s| s.test).collect(),
        dedup: spec.dedup,
    })
}

/// The two named round-robin algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Fail and succ orders with unit weights.
    TwoRR,
    /// Fail, succ and cheap orders, weights `(1, 1, sqrt 2)` by default.
    ThreeRR,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::TwoRR => "2rr",
            Preset::ThreeRR => "3rr",
        }
    }
}

/// Builds the round-robin spec of a preset. Sub-algorithms are listed as
/// (fail, succ) or (fail, succ, cheap).
pub fn preset_spec(
    instance: &Instance,
    which: Preset,
    weights: Option<[f64; 3]>,
    dedup: bool,
) -> Result<RoundRobinSpec> {
    let fail = ratio_permutation(instance, RatioRule::Fail);
    let succ = ratio_permutation(instance, RatioRule::Succ);
    match which {
        Preset::TwoRR => {
            if weights.is_some() {
                return domain("2RR takes no weights");
            }
            RoundRobinSpec::new(vec![fail, succ], vec![1.0, 1.0], dedup)
        }
        Preset::ThreeRR => {
            let cheap = ratio_permutation(instance, RatioRule::Cheap);
            let w = weights.unwrap_or([1.0, 1.0, DEFAULT_CHEAP_WEIGHT]);
            RoundRobinSpec::new(vec![fail, succ, cheap], w.to_vec(), dedup)
        }
    }
}

/// The deduplicated merge order of a preset.
pub fn preset_strategy(
    instance: &Instance,
    which: Preset,
    weights: Option<[f64; 3]>,
) -> Result<Permutation> {
    let spec = preset_spec(instance, which, weights, true)?;
    let seq = round_robin_merge(instance, &spec)?;
    Ok(Permutation(seq.steps))
}

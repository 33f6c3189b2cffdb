//! Exact expected costs, per-realization replay and phase traces.
//!
//! A non-adaptive order reaches the same success count distribution no
//! matter which realization is drawn, so the expected cost follows from a
//! forward pass over `(step, successes so far)`:
//!
//! ```text
//! E[cost] = sum_t c(step t) * P(class undetermined after steps 1..t-1)
//! ```

use crate::error::{domain, Error, Result};
use crate::model::{Instance, Realization};
use crate::strategies::{round_robin_trace, Permutation, RoundRobinSpec, TestSequence};

/// Largest `n` the brute-force evaluator accepts unless overridden.
pub const DEFAULT_ENUM_LIMIT: usize = 20;

/// Distribution of the number of successes among independent tests.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution(Vec<f64>);

impl CountDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, count: usize) -> f64 {
        self.0.get(count).copied().unwrap_or(0.0)
    }

    /// Adds one more independent test.
    pub fn push(&mut self, p: f64) {
        self.0.push(0.0);
        for k in (0..self.0.len()).rev() {
            let stay = self.0[k] * (1.0 - p);
            let up = if k > 0 { self.0[k - 1] * p } else { 0.0 };
            self.0[k] = stay + up;
        }
    }
}

/// Poisson-binomial distribution by iterative convolution.
pub fn success_count_distribution(probs: &[f64]) -> CountDistribution {
    let mut dist = CountDistribution(vec![1.0]);
    for &p in probs {
        dist.push(p);
    }
    dist
}

/// One conducted test in a replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductedTest {
    pub test: usize,
    pub outcome: bool,
    pub cost: f64,
}

/// Result of replaying a strategy on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub conducted: Vec<ConductedTest>,
    pub total_cost: f64,
    pub class: usize,
}

/// Anything that can be replayed against a realization with the stopping
/// rule applied.
pub trait Strategy {
    fn execute(&self, instance: &Instance, realization: &Realization) -> Result<ExecutionTrace>;
}

impl Strategy for TestSequence {
    fn execute(&self, instance: &Instance, x: &Realization) -> Result<ExecutionTrace> {
        x.check(instance)?;
        check_steps(instance, self.steps())?;
        let mut seen = vec![false; instance.n()];
        let (mut successes, mut distinct) = (0, 0);
        let mut conducted = Vec::new();
        let mut total_cost = 0.0;
        for &j in self.steps() {
            if instance.settled(successes, distinct).is_some() {
                break;
            }
            let outcome = x.outcome(j);
            if !std::mem::replace(&mut seen[j], true) {
                distinct += 1;
                successes += usize::from(outcome);
            }
            total_cost += instance.cost(j);
            conducted.push(ConductedTest {
                test: j,
                outcome,
                cost: instance.cost(j),
            });
        }
        let class = instance.settled(successes, distinct).ok_or_else(|| {
            Error::Contract("test sequence ends before the class is determined".into())
        })?;
        Ok(ExecutionTrace {
            conducted,
            total_cost,
            class,
        })
    }
}

impl Strategy for Permutation {
    fn execute(&self, instance: &Instance, x: &Realization) -> Result<ExecutionTrace> {
        TestSequence::from(self).execute(instance, x)
    }
}

/// Replays `strategy` on `realization`.
pub fn execute<S: Strategy + ?Sized>(
    instance: &Instance,
    strategy: &S,
    realization: &Realization,
) -> Result<ExecutionTrace> {
    strategy.execute(instance, realization)
}

fn check_steps(instance: &Instance, steps: &[usize]) -> Result<()> {
    match steps.iter().find(|&&j| j >= instance.n()) {
        Some(j) => domain(format!(
            "test {} does not exist (n = {})",
            j + 1,
            instance.n()
        )),
        None => Ok(()),
    }
}

/// Forward pass over a sequence. Calls `visit(step, distinct, mass)` before every
/// step, where `mass[s]` is the probability of being undetermined with `s`
/// successes among the `distinct` tests conducted so far.
fn forward<F>(instance: &Instance, seq: &TestSequence, mut visit: F) -> Result<()>
where
    F: FnMut(usize, usize, &[f64]),
{
    check_steps(instance, seq.steps())?;
    let n = instance.n();
    let mut mass = vec![0.0; n + 1];
    let mut next = vec![0.0; n + 1];
    if instance.settled(0, 0).is_none() {
        mass[0] = 1.0;
    }
    let mut seen = vec![false; n];
    let mut distinct = 0;
    for (t, &j) in seq.steps().iter().enumerate() {
        visit(t, distinct, &mass[..=distinct]);
        if std::mem::replace(&mut seen[j], true) {
            continue;
        }
        let p = instance.prob(j);
        next[..=distinct + 1].fill(0.0);
        for s in 0..=distinct {
            next[s] += mass[s] * (1.0 - p);
            next[s + 1] += mass[s] * p;
        }
        distinct += 1;
        for s in 0..=distinct {
            mass[s] = if instance.settled(s, distinct).is_some() {
                0.0
            } else {
                next[s]
            };
        }
    }
    if (0..=distinct).any(|s| instance.settled(s, distinct).is_none()) {
        return Err(Error::Contract(
            "test sequence can end before the class is determined".into(),
        ));
    }
    Ok(())
}

/// Exact expected cost of a (possibly repeating) test order; `O(n^2)` for
/// permutations.
pub fn expected_cost(instance: &Instance, strategy: &TestSequence) -> Result<f64> {
    let mut total = 0.0;
    forward(instance, strategy, |t, _, mass| {
        let undetermined: f64 = mass.iter().sum();
        total += instance.cost(strategy.steps()[t]) * undetermined;
    })?;
    Ok(total)
}

/// Expected cost of a permutation.
pub fn expected_cost_perm(instance: &Instance, perm: &Permutation) -> Result<f64> {
    expected_cost(instance, &TestSequence::from(perm))
}

/// `E[cost | f(x) = class]`.
pub fn conditional_expected_cost(
    instance: &Instance,
    strategy: &TestSequence,
    class: usize,
) -> Result<f64> {
    if class == 0 || class > instance.num_classes() {
        return domain(format!(
            "class {class} out of range 1..={}",
            instance.num_classes()
        ));
    }
    let p_class = instance.class_probabilities()[class - 1];
    if p_class <= 0.0 {
        return domain(format!("class {class} has probability zero"));
    }
    check_steps(instance, strategy.steps())?;

    // distributions of successes among the tests not yet conducted, indexed
    // by the number of distinct tests conducted so far
    let n = instance.n();
    let mut first_seen = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for &j in strategy.steps() {
        if !std::mem::replace(&mut seen[j], true) {
            first_seen.push(j);
        }
    }
    let never: Vec<f64> = (0..n)
        .filter(|&j| !seen[j])
        .map(|j| instance.prob(j))
        .collect();
    let mut rest = success_count_distribution(&never);
    let mut suffix = vec![rest.clone()];
    for &j in first_seen.iter().rev() {
        rest.push(instance.prob(j));
        suffix.push(rest.clone());
    }
    suffix.reverse();

    let mut joint = 0.0;
    forward(instance, strategy, |t, distinct, mass| {
        let remaining = &suffix[distinct];
        let mut in_class = 0.0;
        for (s, m) in mass.iter().enumerate() {
            if *m == 0.0 {
                continue;
            }
            let hit: f64 = remaining
                .probabilities()
                .iter()
                .enumerate()
                .filter(|&(r, _)| instance.class_of(s + r) == class)
                .map(|(_, q)| q)
                .sum();
            in_class += m * hit;
        }
        joint += instance.cost(strategy.steps()[t]) * in_class;
    })?;
    Ok(joint / p_class)
}

fn check_enum_limit(instance: &Instance, limit: usize) -> Result<()> {
    if instance.n() > limit || instance.n() >= 64 {
        return Err(Error::Resource(format!(
            "enumeration over 2^{} realizations exceeds the limit of n = {limit}",
            instance.n()
        )));
    }
    Ok(())
}

/// Brute-force expected cost: sums over all `2^n` realizations.
pub fn expected_cost_enum<S: Strategy + ?Sized>(
    instance: &Instance,
    strategy: &S,
    limit: usize,
) -> Result<f64> {
    check_enum_limit(instance, limit)?;
    let n = instance.n();
    let mut total = 0.0;
    for mask in 0..1u64 << n {
        let x = Realization::from_mask(n, mask);
        let p = x.probability(instance);
        let trace = strategy.execute(instance, &x)?;
        total += p * trace.total_cost;
    }
    Ok(total)
}

/// Which ratio rule finishes the phase-2 verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verifier {
    Fail,
    Succ,
}

/// Two-phase decomposition of one round-robin run.
///
/// Phase 1 ends at the first step after which the run has seen `t_i`
/// successes or `n + 1 - t_{i+1}` failures, `i` being the realized class;
/// phase 2 ends at determination. Every step's cost is charged to the
/// sub-algorithm that was chosen for it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub class: usize,
    pub tau1: usize,
    pub tau2: usize,
    pub verifier: Verifier,
    pub phase1: Vec<f64>,
    pub phase2: Vec<f64>,
}

impl PhaseTrace {
    /// Sum of all shares.
    pub fn total(&self) -> f64 {
        self.phase1.iter().chain(&self.phase2).sum()
    }

    /// Per-sub-algorithm totals over both phases.
    pub fn shares(&self) -> Vec<f64> {
        self.phase1
            .iter()
            .zip(&self.phase2)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Fewest tests any strategy must conduct when the score lies in `class`.
pub fn min_tests_for_class(instance: &Instance, class: usize) -> usize {
    instance.lower_cut(class) + (instance.n() + 1 - instance.upper_cut(class))
}

pub fn phase_trace(
    instance: &Instance,
    spec: &RoundRobinSpec,
    realization: &Realization,
) -> Result<PhaseTrace> {
    realization.check(instance)?;
    let steps = round_robin_trace(instance, spec)?;
    let n = instance.n();
    let class = instance.class_of(realization.score());
    let need_succ = instance.lower_cut(class);
    let need_fail = n + 1 - instance.upper_cut(class);

    let k = spec.sub_perms().len();
    let mut phase1 = vec![0.0; k];
    let mut phase2 = vec![0.0; k];
    let mut seen = vec![false; n];
    let (mut successes, mut failures) = (0, 0);
    let mut tau1 = (need_succ == 0 || need_fail == 0).then_some(0);
    let mut succ_at_tau1 = 0;
    let mut tau2 = 0;

    for (t, step) in steps.iter().enumerate() {
        if instance.settled(successes, successes + failures).is_some() {
            break;
        }
        let cost = instance.cost(step.test);
        if tau1.is_none() {
            phase1[step.owner] += cost;
        } else {
            phase2[step.owner] += cost;
        }
        if !std::mem::replace(&mut seen[step.test], true) {
            if realization.outcome(step.test) {
                successes += 1;
            } else {
                failures += 1;
            }
        }
        if tau1.is_none() && (successes >= need_succ || failures >= need_fail) {
            tau1 = Some(t + 1);
            succ_at_tau1 = successes;
        }
        tau2 = t + 1;
    }
    if instance.settled(successes, successes + failures).is_none() {
        return Err(Error::Contract(
            "merged order never determines the class".into(),
        ));
    }
    // determination implies both thresholds, so phase 1 has ended
    let tau1 = tau1.expect("phase 1 ends no later than determination");
    let verifier = if succ_at_tau1 >= need_succ {
        Verifier::Fail
    } else {
        Verifier::Succ
    };
    Ok(PhaseTrace {
        class,
        tau1,
        tau2,
        verifier,
        phase1,
        phase2,
    })
}

//! Problem instances, score classification and sub-instance reduction.
//!
//! An instance has `n` independent tests with costs `c_j > 0` and success
//! probabilities `p_j`, plus cut points `0 = t_1 < t_2 < ... < t_{B+1} = n + 1`
//! that split the possible scores `0..=n` into `B` contiguous classes.
//!
//! Tests are addressed by 0-based index throughout the library; classes are
//! 1-based (`1..=B`). The CLI and the JSON tree format print tests 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A stochastic score classification instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    costs: Vec<f64>,
    probs: Vec<f64>,
    cuts: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    costs: Vec<f64>,
    probs: Vec<f64>,
    cuts: Vec<usize>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.costs, raw.probs, raw.cuts)
    }
}

impl From<Instance> for RawInstance {
    fn from(inst: Instance) -> Self {
        RawInstance {
            costs: inst.costs,
            probs: inst.probs,
            cuts: inst.cuts,
        }
    }
}

impl Instance {
    pub fn new(costs: Vec<f64>, probs: Vec<f64>, cuts: Vec<usize>) -> Result<Self> {
        let n = costs.len();
        if n == 0 {
            return domain("an instance needs at least one test");
        }
        if probs.len() != n {
            return domain(format!("{} costs but {} probabilities", n, probs.len()));
        }
        if let Some((j, c)) = costs
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c > 0.0))
        {
            return domain(format!(
                "cost of test {} must be positive and finite, got {c}",
                j + 1
            ));
        }
        if let Some((j, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return domain(format!(
                "probability of test {} must lie in [0, 1], got {p}",
                j + 1
            ));
        }
        Self::check_cuts(&cuts, n)?;
        Ok(Self { costs, probs, cuts })
    }

    fn check_cuts(cuts: &[usize], n: usize) -> Result<()> {
        if cuts.len() < 2 {
            return domain("cuts need at least two entries");
        }
        if cuts[0] != 0 || cuts[cuts.len() - 1] != n + 1 {
            return domain(format!("cuts must start at 0 and end at n + 1 = {}", n + 1));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return domain("cuts must be strictly increasing");
        }
        Ok(())
    }

    /// Parses the JSON instance format.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization cannot fail")
    }

    /// Number of tests.
    pub fn n(&self) -> usize {
        self.costs.len()
    }

    /// Number of classes.
    pub fn num_classes(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn cost(&self, test: usize) -> f64 {
        self.costs[test]
    }

    pub fn prob(&self, test: usize) -> f64 {
        self.probs[test]
    }

    /// Lower cut `t_i` of a 1-based class.
    pub fn lower_cut(&self, class: usize) -> usize {
        self.cuts[class - 1]
    }

    /// Exclusive upper cut `t_{i+1}` of a 1-based class.
    pub fn upper_cut(&self, class: usize) -> usize {
        self.cuts[class]
    }

    /// True when every probability lies in the open interval (0, 1).
    pub fn is_strict(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0 && p < 1.0)
    }

    /// The same instance with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.costs.iter().map(|c| c * factor).collect(),
            self.probs.clone(),
            self.cuts.clone(),
        )
    }

    /// Class of a score.
    pub fn classify(&self, score: usize) -> Result<usize> {
        if score > self.n() {
            return domain(format!("score {score} exceeds n = {}", self.n()));
        }
        Ok(self.class_of(score))
    }

    /// Class of a score known to lie in `0..=n`.
    #[inline]
    pub(crate) fn class_of(&self, score: usize) -> usize {
        self.cuts.partition_point(|&t| t <= score)
    }

    /// The class fixed by `successes` among `conducted` tests, if the
    /// remaining tests can no longer move the score into another class.
    pub fn determination(&self, successes: usize, conducted: usize) -> Result<Option<usize>> {
        if successes > conducted || conducted > self.n() {
            return domain(format!(
                "need successes <= conducted <= n, got {successes}, {conducted}, {}",
                self.n()
            ));
        }
        Ok(self.settled(successes, conducted))
    }

    /// Unchecked form of [`Instance::determination`].
    #[inline]
    pub fn settled(&self, successes: usize, conducted: usize) -> Option<usize> {
        debug_assert!(successes <= conducted && conducted <= self.n());
        let low = self.class_of(successes);
        // classes are contiguous, so agreement on both endpoints covers the range
        let high = self.class_of(successes + self.n() - conducted);
        (low == high).then_some(low)
    }

    /// Removes `test` after observing `outcome` (true = success).
    pub fn reduce(&self, test: usize, outcome: bool) -> Result<SubInstance> {
        SubInstance::root(self).reduce(test, outcome)
    }

    /// Sum of the `count` smallest costs.
    pub fn cheapest_cost_sum(&self, count: usize) -> f64 {
        let mut costs = self.costs.clone();
        costs.sort_by(f64::total_cmp);
        costs.iter().take(count).sum()
    }

    /// Probability of each 1-based class under the product distribution.
    pub fn class_probabilities(&self) -> Vec<f64> {
        let dist = crate::eval::success_count_distribution(&self.probs);
        let mut out = vec![0.0; self.num_classes()];
        for (score, p) in dist.probabilities().iter().enumerate() {
            out[self.class_of(score) - 1] += p;
        }
        out
    }
}

/// A binary outcome vector, `true` meaning success.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Realization(Vec<bool>);

impl Realization {
    pub fn new(outcomes: Vec<bool>) -> Self {
        Self(outcomes)
    }

    /// Bit `j` of `mask` becomes the outcome of test `j`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self((0..n).map(|j| mask >> j & 1 == 1).collect())
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn outcome(&self, test: usize) -> bool {
        self.0[test]
    }

    /// Number of successes.
    pub fn score(&self) -> usize {
        self.0.iter().filter(|&&x| x).count()
    }

    /// Probability of this realization under the instance's product measure.
    pub fn probability(&self, instance: &Instance) -> f64 {
        self.0
            .iter()
            .zip(instance.probs())
            .map(|(&x, &p)| if x { p } else { 1.0 - p })
            .product()
    }

    pub(crate) fn check(&self, instance: &Instance) -> Result<()> {
        if self.len() != instance.n() {
            return domain(format!(
                "realization has {} outcomes, instance has {} tests",
                self.len(),
                instance.n()
            ));
        }
        Ok(())
    }
}

/// Counts successes in a realization.
pub fn score_of(realization: &Realization) -> usize {
    realization.score()
}

/// The instance left after querying some tests, with maps back to the
/// original test and class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SubInstance {
    /// The remaining instance. May have zero tests once everything is queried.
    pub instance: Instance,
    /// `kept_tests[j]` is the original index of remaining test `j`.
    pub kept_tests: Vec<usize>,
    /// `class_map[k - 1]` is the original class of remaining class `k`.
    pub class_map: Vec<usize>,
}

impl SubInstance {
    /// The trivial reduction: nothing queried yet.
    pub fn root(instance: &Instance) -> Self {
        Self {
            instance: instance.clone(),
            kept_tests: (0..instance.n()).collect(),
            class_map: (1..=instance.num_classes()).collect(),
        }
    }

    /// Queries remaining test `test` (index into the current sub-instance).
    pub fn reduce(&self, test: usize, outcome: bool) -> Result<SubInstance> {
        let inst = &self.instance;
        let n = inst.n();
        if test >= n {
            return domain(format!("test {} does not exist (n = {n})", test + 1));
        }
        let rest = n - 1;
        let shift = usize::from(outcome);
        // class i of the current instance covers remaining scores
        // [t_i - shift, t_{i+1} - shift) intersected with 0..=rest
        let mut cuts = Vec::with_capacity(inst.cuts.len());
        let mut class_map = Vec::with_capacity(self.class_map.len());
        for class in 1..=inst.num_classes() {
            let lo = inst.lower_cut(class).saturating_sub(shift);
            let hi = (inst.upper_cut(class) - shift).min(rest + 1);
            if lo < hi {
                // duplicates cannot arise: the shifted cuts stay strictly increasing
                cuts.push(if cuts.is_empty() { 0 } else { lo });
                class_map.push(self.class_map[class - 1]);
            }
        }
        cuts.push(rest + 1);

        let mut costs = inst.costs.clone();
        let mut probs = inst.probs.clone();
        let mut kept = self.kept_tests.clone();
        costs.remove(test);
        probs.remove(test);
        kept.remove(test);
        let instance = if rest == 0 {
            // Instance::new rejects empty instances; an exhausted reduction is
            // still well-formed with the single class {0}.
            Instance { costs, probs, cuts }
        } else {
            Instance::new(costs, probs, cuts)?
        };
        Ok(SubInstance {
            instance,
            kept_tests: kept,
            class_map,
        })
    }

    /// Original class of a remaining class.
    pub fn original_class(&self, class: usize) -> usize {
        self.class_map[class - 1]
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::Instance;

    /// The four-test, three-class sample instance.
    pub fn sample4() -> Instance {
        Instance::new(
            vec![3.0, 4.0, 5.0, 6.0],
            vec![0.98, 0.4, 0.9, 0.5],
            vec![0, 1, 3, 5],
        )
        .unwrap()
    }
}

//! Instance generators, approximation-ratio studies and per-realization
//! audits of the round-robin bounds.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::eval::{
    self, conditional_expected_cost, expected_cost_perm, min_tests_for_class, phase_trace,
    DEFAULT_ENUM_LIMIT,
};
use crate::exact::{
    conditional_optimal_adaptive, optimal_adaptive, optimal_nonadaptive, DEFAULT_ADAPTIVE_LIMIT,
    DEFAULT_PERMUTATION_LIMIT,
};
use crate::model::{Instance, Realization};
use crate::strategies::{
    preset_spec, preset_strategy, ratio_permutation, Preset, RatioRule, RoundRobinSpec,
};

/// Absolute slack on every bound check.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Proven guarantee of 2RR.
pub const TWO_RR_FACTOR: f64 = 6.0;

/// Proven guarantee of 3RR with weights `(1, 1, sqrt 2)`: `3 + 2 sqrt 2`.
pub fn three_rr_factor() -> f64 {
    3.0 + 2.0 * std::f64::consts::SQRT_2
}

/// Parameters of the adaptivity-gap family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapParams {
    pub m: usize,
    pub eps: f64,
}

/// `m` near-sure successes, `m` near-sure failures and one fair coin, unit
/// costs, classes split at `m + 1`. The class is decided by the coin alone.
pub fn gap_instance(params: GapParams) -> Result<Instance> {
    let GapParams { m, eps } = params;
    if m == 0 {
        return domain("gap instances need m >= 1");
    }
    if !(0.0..0.5).contains(&eps) {
        return domain(format!("eps must lie in [0, 0.5), got {eps}"));
    }
    let n = 2 * m + 1;
    let mut probs = vec![1.0 - eps; m];
    probs.extend(std::iter::repeat_n(eps, m));
    probs.push(0.5);
    Instance::new(vec![1.0; n], probs, vec![0, m + 1, n + 1])
}

/// Seeded random instance: integer costs in `1..=100`, probabilities uniform
/// in `[0.01, 0.99]`, and `b - 1` distinct interior cuts drawn from `1..=n`.
pub fn random_instance(n: usize, b: usize, seed: u64) -> Result<Instance> {
    if n == 0 {
        return domain("random instances need n >= 1");
    }
    if b == 0 || b > n + 1 {
        return domain(format!(
            "number of classes must lie in 1..={}, got {b}",
            n + 1
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs = (0..n)
        .map(|_| f64::from(rng.gen_range(1u32..=100)))
        .collect();
    let probs = (0..n).map(|_| rng.gen_range(0.01..=0.99)).collect();
    let mut cuts: Vec<usize> = sample(&mut rng, n, b - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.push(0);
    cuts.push(n + 1);
    cuts.sort_unstable();
    Instance::new(costs, probs, cuts)
}

/// An instance tagged for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyInstance {
    pub id: usize,
    /// Seed or family label written to the `seed_or_family` column.
    pub origin: String,
    pub instance: Instance,
}

/// `count` random instances with `n` uniform in `n_range` and, unless fixed,
/// the number of classes uniform in `2..=n + 1`.
pub fn random_family(
    count: usize,
    n_range: (usize, usize),
    classes: Option<usize>,
    seed: u64,
) -> Result<Vec<StudyInstance>> {
    let (lo, hi) = n_range;
    if lo == 0 || lo > hi {
        return domain(format!("bad size range {lo}..={hi}"));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|id| {
            let n = master.gen_range(lo..=hi);
            let b = match classes {
                Some(b) => b,
                None => master.gen_range(2..=n + 1),
            };
            let s: u64 = master.gen();
            Ok(StudyInstance {
                id,
                origin: format!("seed={s}"),
                instance: random_instance(n, b, s)?,
            })
        })
        .collect()
}

/// Gap instances for `m = 1..=max_m`.
pub fn gap_family(max_m: usize, eps: f64) -> Result<Vec<StudyInstance>> {
    (1..=max_m)
        .map(|m| {
            Ok(StudyInstance {
                id: m - 1,
                origin: format!("gap(m={m},eps={eps})"),
                instance: gap_instance(GapParams { m, eps })?,
            })
        })
        .collect()
}

/// Columns to compute in a ratio study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Algorithms {
    pub two_rr: bool,
    pub three_rr: bool,
    pub opt_adaptive: bool,
    pub opt_nonadaptive: bool,
}

impl Default for Algorithms {
    fn default() -> Self {
        Self {
            two_rr: true,
            three_rr: true,
            opt_adaptive: true,
            opt_nonadaptive: true,
        }
    }
}

/// Size limits for the exponential computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_enum: usize,
    pub max_adaptive: usize,
    pub max_nonadaptive: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_enum: DEFAULT_ENUM_LIMIT,
            max_adaptive: DEFAULT_ADAPTIVE_LIMIT,
            max_nonadaptive: DEFAULT_PERMUTATION_LIMIT,
        }
    }
}

/// One row of a ratio study.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRecord {
    pub id: usize,
    pub n: usize,
    pub classes: usize,
    pub origin: String,
    pub cost_2rr: Option<f64>,
    pub cost_3rr: Option<f64>,
    pub cost_opt_adaptive: Option<f64>,
    pub cost_opt_nonadaptive: Option<f64>,
    pub ratio_2rr: Option<f64>,
    pub ratio_3rr: Option<f64>,
    pub adaptivity_ratio: Option<f64>,
    pub violations: Vec<&'static str>,
    pub errors: Vec<String>,
}

/// Quotient with the convention `0 / 0 = 1` (single-class instances).
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 && num == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn study_one(item: &StudyInstance, algs: Algorithms, limits: Limits) -> RatioRecord {
    let inst = &item.instance;
    let mut errors = Vec::new();
    let mut keep = |r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    let preset_cost =
        |p: Preset| -> Result<f64> { expected_cost_perm(inst, &preset_strategy(inst, p, None)?) };
    let cost_2rr = algs
        .two_rr
        .then(|| keep(preset_cost(Preset::TwoRR)))
        .flatten();
    let cost_3rr = algs
        .three_rr
        .then(|| keep(preset_cost(Preset::ThreeRR)))
        .flatten();
    let cost_opt_adaptive = algs
        .opt_adaptive
        .then(|| keep(optimal_adaptive(inst, limits.max_adaptive).map(|s| s.value)))
        .flatten();
    let cost_opt_nonadaptive = algs
        .opt_nonadaptive
        .then(|| keep(optimal_nonadaptive(inst, limits.max_nonadaptive).map(|s| s.value)))
        .flatten();

    let over = |cost: Option<f64>, factor: f64| match (cost, cost_opt_adaptive) {
        (Some(c), Some(opt)) => c > factor * opt + BOUND_TOLERANCE,
        _ => false,
    };
    let mut violations = Vec::new();
    if over(cost_2rr, TWO_RR_FACTOR) {
        violations.push("2rr_bound");
    }
    if over(cost_3rr, three_rr_factor()) {
        violations.push("3rr_bound");
    }
    // sanity: the adaptive optimum can never exceed a non-adaptive cost
    let non_adaptive = [cost_opt_nonadaptive, cost_2rr, cost_3rr];
    if let Some(opt) = cost_opt_adaptive {
        if non_adaptive
            .iter()
            .flatten()
            .any(|&c| opt > c + BOUND_TOLERANCE)
        {
            violations.push("adaptive_above_nonadaptive");
        }
    }
    if let Some(best) = cost_opt_nonadaptive {
        if non_adaptive[1..]
            .iter()
            .flatten()
            .any(|&c| best > c + BOUND_TOLERANCE)
        {
            violations.push("nonadaptive_above_round_robin");
        }
    }

    let versus = |c: Option<f64>, d: Option<f64>| c.zip(d).map(|(c, d)| ratio(c, d));
    RatioRecord {
        id: item.id,
        n: inst.n(),
        classes: inst.num_classes(),
        origin: item.origin.clone(),
        cost_2rr,
        cost_3rr,
        cost_opt_adaptive,
        cost_opt_nonadaptive,
        ratio_2rr: versus(cost_2rr, cost_opt_adaptive),
        ratio_3rr: versus(cost_3rr, cost_opt_adaptive),
        adaptivity_ratio: versus(cost_opt_nonadaptive, cost_opt_adaptive),
        violations,
        errors,
    }
}

/// Evaluates every instance independently (in parallel) and returns the
/// records in input order.
pub fn ratio_study(
    instances: &[StudyInstance],
    algs: Algorithms,
    limits: Limits,
) -> Vec<RatioRecord> {
    instances
        .par_iter()
        .map(|item| study_one(item, algs, limits))
        .collect()
}

/// Aggregate view of a ratio study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub records: usize,
    pub with_errors: usize,
    pub violations: usize,
    pub max_ratio_2rr: f64,
    pub max_ratio_3rr: f64,
    pub max_adaptivity_ratio: f64,
}

pub fn summarize(records: &[RatioRecord]) -> StudySummary {
    let max =
        |f: fn(&RatioRecord) -> Option<f64>| records.iter().filter_map(f).fold(f64::NAN, f64::max);
    StudySummary {
        records: records.len(),
        with_errors: records.iter().filter(|r| !r.errors.is_empty()).count(),
        violations: records.iter().map(|r| r.violations.len()).sum(),
        max_ratio_2rr: max(|r| r.ratio_2rr),
        max_ratio_3rr: max(|r| r.ratio_3rr),
        max_adaptivity_ratio: max(|r| r.adaptivity_ratio),
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "instance_id",
    "n",
    "B",
    "seed_or_family",
    "cost_2rr",
    "cost_3rr",
    "cost_opt_adaptive",
    "cost_opt_nonadaptive",
    "ratio_2rr",
    "ratio_3rr",
    "adaptivity_ratio",
    "violation_flags",
];

/// Formats like C's `%.12g`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_sig12).unwrap_or_default()
}

/// Writes the study as CSV with a header row.
pub fn write_csv<W: Write>(records: &[RatioRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let mut flags: Vec<String> = r.violations.iter().map(|v| v.to_string()).collect();
        flags.extend(r.errors.iter().map(|e| format!("error: {e}")));
        let flags = if flags.is_empty() {
            "none".to_string()
        } else {
            flags.join(";")
        };
        w.write_record([
            r.id.to_string(),
            r.n.to_string(),
            r.classes.to_string(),
            r.origin.clone(),
            cell(r.cost_2rr),
            cell(r.cost_3rr),
            cell(r.cost_opt_adaptive),
            cell(r.cost_opt_nonadaptive),
            cell(r.ratio_2rr),
            cell(r.ratio_3rr),
            cell(r.adaptivity_ratio),
            flags,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Which realizations a lemma audit visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealizationMode {
    /// All `2^n` outcome vectors.
    Exhaustive,
    /// Draws from the instance's own distribution.
    Sampled { per_instance: usize, seed: u64 },
}

/// Per-realization properties checked by [`lemma_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AuditCheck {
    /// Phase shares sum to the executed cost, and the replay ends at `tau2`
    /// with the realized class.
    Conservation,
    /// `min(t_i, n + 1 - t_{i+1}) <= tau1 <= tau2`.
    PhaseBounds,
    /// 3RR: `share1_h / alpha_h <= (1 / alpha_cheap) * (cost of the n_i cheapest tests)`.
    ThreeRrPhaseOne,
    /// 2RR: `share1_h <= 2 * (cost of the n_i cheapest tests)`.
    TwoRrPhaseOne,
    /// Each sub-algorithm's accumulated cost in one merge version, over its
    /// weight, is at most the other version's total over the smallest weight.
    CrossVersion,
}

impl AuditCheck {
    pub const ALL: [AuditCheck; 5] = [
        AuditCheck::Conservation,
        AuditCheck::PhaseBounds,
        AuditCheck::ThreeRrPhaseOne,
        AuditCheck::TwoRrPhaseOne,
        AuditCheck::CrossVersion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditCheck::Conservation => "conservation",
            AuditCheck::PhaseBounds => "phase_bounds",
            AuditCheck::ThreeRrPhaseOne => "3rr_phase1_share",
            AuditCheck::TwoRrPhaseOne => "2rr_phase1_share",
            AuditCheck::CrossVersion => "dedup_cross_version",
        }
    }
}

/// Tally of one check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckTally {
    pub checked: u64,
    pub violations: u64,
}

/// Outcome of a lemma audit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub instances: usize,
    pub realizations: u64,
    pub tallies: Vec<(AuditCheck, CheckTally)>,
    pub skipped: Vec<String>,
    /// A few violating cases, for diagnosis.
    pub examples: Vec<String>,
}

impl AuditReport {
    pub fn tally(&self, check: AuditCheck) -> CheckTally {
        self.tallies
            .iter()
            .find(|(c, _)| *c == check)
            .map(|(_, t)| *t)
            .unwrap_or_default()
    }

    pub fn total_violations(&self) -> u64 {
        self.tallies.iter().map(|(_, t)| t.violations).sum()
    }

    fn merge(&mut self, other: AuditReport) {
        self.instances += other.instances;
        self.realizations += other.realizations;
        for (check, t) in other.tallies {
            match self.tallies.iter_mut().find(|(c, _)| *c == check) {
                Some((_, mine)) => {
                    mine.checked += t.checked;
                    mine.violations += t.violations;
                }
                None => self.tallies.push((check, t)),
            }
        }
        self.skipped.extend(other.skipped);
        if self.examples.len() < 10 {
            self.examples
                .extend(other.examples.into_iter().take(10 - self.examples.len()));
        }
    }

    fn record(&mut self, check: AuditCheck, ok: bool, detail: impl FnOnce() -> String) {
        let entry = match self.tallies.iter_mut().find(|(c, _)| *c == check) {
            Some((_, t)) => t,
            None => {
                self.tallies.push((check, CheckTally::default()));
                &mut self.tallies.last_mut().expect("just pushed").1
            }
        };
        entry.checked += 1;
        if !ok {
            entry.violations += 1;
            if self.examples.len() < 10 {
                self.examples
                    .push(format!("{}: {}", check.name(), detail()));
            }
        }
    }
}

struct Audited {
    preset: Preset,
    dedup: RoundRobinSpec,
    plain: RoundRobinSpec,
}

fn audit_realization(
    inst: &Instance,
    specs: &[Audited],
    x: &Realization,
    report: &mut AuditReport,
) -> Result<()> {
    let le = |a: f64, b: f64| a <= b + BOUND_TOLERANCE;
    for a in specs {
        let tr = phase_trace(inst, &a.dedup, x)?;
        let plain = phase_trace(inst, &a.plain, x)?;
        let order = crate::strategies::round_robin_merge(inst, &a.dedup)?;
        let exec = eval::execute(inst, &order, x)?;
        let name = a.preset.name();

        let conserved = (tr.total() - exec.total_cost).abs() <= BOUND_TOLERANCE
            && tr.tau2 == exec.conducted.len()
            && tr.class == exec.class
            && exec.class == inst.class_of(x.score());
        report.record(AuditCheck::Conservation, conserved, || {
            format!(
                "{name} {x:?}: shares {} vs cost {}",
                tr.total(),
                exec.total_cost
            )
        });

        let floor = inst
            .lower_cut(tr.class)
            .min(inst.n() + 1 - inst.upper_cut(tr.class));
        report.record(
            AuditCheck::PhaseBounds,
            floor <= tr.tau1 && tr.tau1 <= tr.tau2,
            || {
                format!(
                    "{name} {x:?}: tau1 {} tau2 {} floor {floor}",
                    tr.tau1, tr.tau2
                )
            },
        );

        let cheapest = inst.cheapest_cost_sum(min_tests_for_class(inst, tr.class));
        let weights = a.dedup.weights();
        match a.preset {
            Preset::ThreeRR => {
                let cheap_weight = weights[2];
                for (h, share) in tr.phase1.iter().enumerate() {
                    report.record(
                        AuditCheck::ThreeRrPhaseOne,
                        le(share / weights[h], cheapest / cheap_weight),
                        || format!("{x:?}: sub {h} share {share} vs {cheapest}"),
                    );
                }
            }
            Preset::TwoRR => {
                for (h, share) in tr.phase1.iter().enumerate() {
                    report.record(
                        AuditCheck::TwoRrPhaseOne,
                        le(*share, 2.0 * cheapest),
                        || format!("{x:?}: sub {h} share {share} vs 2 * {cheapest}"),
                    );
                }
            }
        }

        let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
        for (mine, other) in [(&tr, &plain), (&plain, &tr)] {
            let cap = other.total() / min_weight;
            for (h, share) in mine.shares().iter().enumerate() {
                report.record(
                    AuditCheck::CrossVersion,
                    le(share / weights[h], cap),
                    || {
                        format!(
                            "{name} {x:?}: sub {h} accumulated {share} vs other total {}",
                            other.total()
                        )
                    },
                );
            }
        }
    }
    Ok(())
}

fn audit_instance(
    inst: &Instance,
    index: usize,
    mode: RealizationMode,
    limits: Limits,
) -> AuditReport {
    let mut report = AuditReport::default();
    let specs: Result<Vec<Audited>> = [Preset::TwoRR, Preset::ThreeRR]
        .into_iter()
        .map(|preset| {
            let dedup = preset_spec(inst, preset, None, true)?;
            Ok(Audited {
                preset,
                plain: dedup.with_dedup(false),
                dedup,
            })
        })
        .collect();
    let specs = match specs {
        Ok(s) => s,
        Err(e) => {
            report.skipped.push(format!("instance {index}: {e}"));
            return report;
        }
    };
    let n = inst.n();
    let realizations: Box<dyn Iterator<Item = Realization>> =
        match mode {
            RealizationMode::Exhaustive => {
                if n > limits.max_enum || n >= 64 {
                    report.skipped.push(format!(
                        "instance {index}: n = {n} exceeds the enumeration limit {}",
                        limits.max_enum
                    ));
                    return report;
                }
                Box::new((0..1u64 << n).map(move |mask| Realization::from_mask(n, mask)))
            }
            RealizationMode::Sampled { per_instance, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let probs = inst.probs().to_vec();
                Box::new((0..per_instance).map(move |_| {
                    Realization::new(probs.iter().map(|&p| rng.gen_bool(p)).collect())
                }))
            }
        };
    report.instances = 1;
    for x in realizations {
        report.realizations += 1;
        if let Err(e) = audit_realization(inst, &specs, &x, &mut report) {
            report.skipped.push(format!("instance {index}: {e}"));
            break;
        }
    }
    report
}

/// Checks the per-realization consequences of the phase analysis on every
/// visited realization of every instance.
pub fn lemma_audit(instances: &[Instance], mode: RealizationMode, limits: Limits) -> AuditReport {
    let parts: Vec<AuditReport> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| audit_instance(inst, i, mode, limits))
        .collect();
    let mut report = AuditReport {
        tallies: AuditCheck::ALL
            .iter()
            .map(|&c| (c, CheckTally::default()))
            .collect(),
        ..Default::default()
    };
    for part in parts {
        report.merge(part);
    }
    report
}

/// Which ratio order attained the conditional optimum for one class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairingTally {
    pub fail_only: usize,
    pub succ_only: usize,
    pub both: usize,
    pub neither: usize,
}

impl PairingTally {
    fn add(&mut self, fail: bool, succ: bool) {
        match (fail, succ) {
            (true, true) => self.both += 1,
            (true, false) => self.fail_only += 1,
            (false, true) => self.succ_only += 1,
            (false, false) => self.neither += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.fail_only + self.succ_only + self.both + self.neither
    }

    /// Cases in which the fail order was conditionally optimal.
    pub fn fail_optimal(&self) -> usize {
        self.fail_only + self.both
    }

    pub fn succ_optimal(&self) -> usize {
        self.succ_only + self.both
    }
}

/// Results of comparing conditional optima with the two ratio orders on
/// two-class instances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairingReport {
    pub instances: usize,
    /// Index 0 for class 1, index 1 for class 2.
    pub per_class: [PairingTally; 2],
    /// Largest `|optimum - min(fail cost, succ cost)|` seen.
    pub max_gap: f64,
    pub skipped: Vec<String>,
}

impl PairingReport {
    /// Whether the optimum equalled the better ratio order everywhere.
    pub fn disjunction_holds(&self) -> bool {
        self.per_class.iter().all(|t| t.neither == 0) && self.max_gap <= BOUND_TOLERANCE
    }

    /// Describes which class each ratio order was optimal for.
    pub fn pairing(&self) -> &'static str {
        let [one, two] = self.per_class;
        let fail_one = one.fail_optimal() == one.total();
        let succ_two = two.succ_optimal() == two.total();
        let succ_one = one.succ_optimal() == one.total();
        let fail_two = two.fail_optimal() == two.total();
        match (fail_one && succ_two, succ_one && fail_two) {
            (true, true) => "both pairings (ties throughout)",
            (true, false) => "fail order optimal given class 1, succ order given class 2",
            (false, true) => "succ order optimal given class 1, fail order given class 2",
            (false, false) => "no consistent pairing",
        }
    }
}

/// For each two-class instance and each class of positive probability,
/// compares the conditional adaptive optimum with the conditional costs of
/// the fail and succ orders.
pub fn pairing_study(instances: &[Instance], limit: usize) -> PairingReport {
    type Row = std::result::Result<Vec<(usize, f64, f64, f64)>, String>;
    let rows: Vec<Row> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            if inst.num_classes() != 2 {
                return Err(format!("instance {i}: {} classes", inst.num_classes()));
            }
            let fail = ratio_permutation(inst, RatioRule::Fail).into();
            let succ = ratio_permutation(inst, RatioRule::Succ).into();
            let probs = inst.class_probabilities();
            let mut out = Vec::new();
            for class in 1..=2 {
                if probs[class - 1] <= 0.0 {
                    continue;
                }
                let run = || -> Result<(usize, f64, f64, f64)> {
                    let opt = conditional_optimal_adaptive(inst, class, limit)?.value;
                    Ok((
                        class,
                        opt,
                        conditional_expected_cost(inst, &fail, class)?,
                        conditional_expected_cost(inst, &succ, class)?,
                    ))
                };
                out.push(run().map_err(|e: Error| format!("instance {i}: {e}"))?);
            }
            Ok(out)
        })
        .collect();

    let mut report = PairingReport::default();
    for row in rows {
        match row {
            Ok(cases) => {
                report.instances += 1;
                for (class, opt, fail, succ) in cases {
                    let hits = |c: f64| (c - opt).abs() <= BOUND_TOLERANCE;
                    report.per_class[class - 1].add(hits(fail), hits(succ));
                    report.max_gap = report.max_gap.max((fail.min(succ) - opt).abs());
                }
            }
            Err(note) => report.skipped.push(note),
        }
    }
    report
}

/// `|OPT(I_m^eps) - OPT(I_m^0)|` for each `eps`.
pub fn adaptive_continuity(m: usize, eps: &[f64], limit: usize) -> Result<Vec<f64>> {
    let base = optimal_adaptive(&gap_instance(GapParams { m, eps: 0.0 })?, limit)?.value;
    eps.iter()
        .map(|&e| {
            Ok(
                (optimal_adaptive(&gap_instance(GapParams { m, eps: e })?, limit)?.value - base)
                    .abs(),
            )
        })
        .collect()
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssc::eval::{conditional_expected_cost, expected_cost, expected_cost_enum, expected_cost_perm};
use ssc::exact::{optimal_adaptive, optimal_nonadaptive, DecisionTree};
use ssc::experiments::{
    gap_instance, lemma_audit, pairing_study, random_family, ratio_study, summarize, Algorithms,
    AuditCheck, GapParams, Limits, RealizationMode,
};
use ssc::strategies::{preset_strategy, Permutation, Preset, TestSequence};
use ssc::Instance;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn gap(m: usize) -> Instance {
    gap_instance(GapParams { m, eps: 0.0 }).expect("valid gap parameters")
}

fn gap_exactness() -> Verdict {
    let mut bad = Vec::new();
    for m in 1..=5 {
        let v = optimal_adaptive(&gap(m), 20).unwrap().value;
        if !within(v, (m + 1) as f64, 1e-9) {
            bad.push(format!("adaptive m={m}: {v}"));
        }
    }
    let mut non4 = f64::NAN;
    for m in 1..=4 {
        let v = optimal_nonadaptive(&gap(m), 10).unwrap().value;
        if !within(v, 1.5 * m as f64 + 1.0, 1e-9) {
            bad.push(format!("non-adaptive m={m}: {v}"));
        }
        non4 = v;
    }
    let ratio4 = non4 / optimal_adaptive(&gap(4), 20).unwrap().value;
    if ratio4 != 7.0 / 5.0 {
        bad.push(format!("ratio m=4: {ratio4}"));
    }
    let analytic = (1.5 * 100.0 + 1.0) / (100.0 + 1.0);
    if analytic <= 1.49 {
        bad.push(format!("analytic ratio m=100: {analytic}"));
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("OPT = m+1 (m<=5), non-adaptive = 1.5m+1 (m<=4), ratio(4) = {ratio4}, formula(100) = {analytic:.6}")
        } else {
            bad.join("; ")
        },
    )
}

fn two_rr_lower_bound() -> Verdict {
    let mut bad = Vec::new();
    let mut ratio9 = f64::NAN;
    for m in 1..=9 {
        let inst = gap(m);
        let order = preset_strategy(&inst, Preset::TwoRR, None).unwrap();
        let cost = expected_cost_perm(&inst, &order).unwrap();
        if !within(cost, (2 * m + 1) as f64, 1e-9) {
            bad.push(format!("m={m}: {cost}"));
        }
        if m == 9 {
            ratio9 = cost / optimal_adaptive(&inst, 20).unwrap().value;
        }
    }
    if ratio9.is_nan() || ratio9 < 1.8 {
        bad.push(format!("ratio at m=9: {ratio9}"));
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("2RR cost = 2m+1 for m<=9, ratio at m=9 = {ratio9}")
        } else {
            bad.join("; ")
        },
    )
}

fn approximation_audit() -> Verdict {
    let family = random_family(10_000, (2, 10), None, 0x5EED_0003).unwrap();
    let records = ratio_study(&family, Algorithms::default(), Limits::default());
    let bound_hits = records
        .iter()
        .filter(|r| {
            r.violations
                .iter()
                .any(|v| *v == "2rr_bound" || *v == "3rr_bound")
        })
        .count();
    let s = summarize(&records);
    let pass = s.records == 10_000 && s.with_errors == 0 && s.violations == 0;
    verdict(
        pass,
        format!(
            "{} instances, {} with errors, {} bound violations ({} flags total); max ratio 2RR {:.6} (bound 6), 3RR {:.6} (bound {:.6}), adaptivity {:.6}",
            s.records,
            s.with_errors,
            bound_hits,
            s.violations,
            s.max_ratio_2rr,
            s.max_ratio_3rr,
            3.0 + 2.0 * 2f64.sqrt(),
            s.max_adaptivity_ratio
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let family = random_family(1_000, (1, 12), None, 0x5EED_0004).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut dp_gap, mut total_gap) = (0.0f64, 0.0f64);
    for item in &family {
        let inst = &item.instance;
        let mut order: Vec<usize> = (0..inst.n()).collect();
        order.shuffle(&mut rng);
        let seq = TestSequence::from(Permutation::new(order, inst.n()).unwrap());
        let dp = expected_cost(inst, &seq).unwrap();
        let brute = expected_cost_enum(inst, &seq, 12).unwrap();
        dp_gap = dp_gap.max((dp - brute).abs());
        let mixed: f64 = inst
            .class_probabilities()
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(i, p)| p * conditional_expected_cost(inst, &seq, i + 1).unwrap())
            .sum();
        total_gap = total_gap.max((mixed - dp).abs());
    }
    verdict(
        dp_gap <= 1e-9 && total_gap <= 1e-9,
        format!("1000 pairs: max |DP - enumeration| = {dp_gap:.3e}, max |sum_i P(i) E[cost|i] - E[cost]| = {total_gap:.3e}"),
    )
}

/// The optimal tree of the four-test sample instance, written out by hand
/// with 1-based test ids.
const SAMPLE_TREE: &str = r#"
{"test":2,
 "fail":{"test":4,
   "fail":{"test":1,
     "fail":{"test":3,"fail":{"leaf":1},"succ":{"leaf":2}},
     "succ":{"leaf":2}},
   "succ":{"test":3,
     "fail":{"leaf":2},
     "succ":{"test":1,"fail":{"leaf":2},"succ":{"leaf":3}}}},
 "succ":{"test":3,
   "fail":{"test":4,
     "fail":{"leaf":2},
     "succ":{"test":1,"fail":{"leaf":2},"succ":{"leaf":3}}},
   "succ":{"test":1,
     "fail":{"test":4,"fail":{"leaf":2},"succ":{"leaf":3}},
     "succ":{"leaf":3}}}}"#;

fn sample_regression() -> Verdict {
    let inst = Instance::new(
        vec![3.0, 4.0, 5.0, 6.0],
        vec![0.98, 0.4, 0.9, 0.5],
        vec![0, 1, 3, 5],
    )
    .unwrap();
    let tree = DecisionTree::from_json(SAMPLE_TREE).unwrap();
    tree.validate(&inst).unwrap();
    let tree_cost = expected_cost_enum(&inst, &tree, 12).unwrap();
    let solved = optimal_adaptive(&inst, 20).unwrap();
    let root = solved.strategy.root_test().map(|t| t + 1);
    let merged: Vec<usize> = preset_strategy(&inst, Preset::TwoRR, None)
        .unwrap()
        .order()
        .iter()
        .map(|t| t + 1)
        .collect();
    let pass = root == Some(2) && within(solved.value, tree_cost, 1e-9) && merged == [1, 2, 3, 4];
    verdict(
        pass,
        format!(
            "root test {root:?}, OPT {} vs hand tree {tree_cost}, same tree: {}, 2RR order {merged:?}",
            solved.value,
            solved.strategy == tree
        ),
    )
}

fn conditional_pairing() -> Verdict {
    let family: Vec<Instance> = random_family(500, (1, 7), Some(2), 0x5EED_0006)
        .unwrap()
        .into_iter()
        .map(|s| s.instance)
        .collect();
    let report = pairing_study(&family, 20);
    let [one, two] = report.per_class;
    verdict(
        report.instances == 500 && report.skipped.is_empty() && report.disjunction_holds(),
        format!(
            "{} instances, max gap {:.3e}; class 1: fail optimal {}/{}, succ optimal {}/{}; class 2: fail optimal {}/{}, succ optimal {}/{}; pairing: {}",
            report.instances,
            report.max_gap,
            one.fail_optimal(),
            one.total(),
            one.succ_optimal(),
            one.total(),
            two.fail_optimal(),
            two.total(),
            two.succ_optimal(),
            two.total(),
            report.pairing()
        ),
    )
}

fn phase_audit() -> Verdict {
    let family: Vec<Instance> = random_family(1_000, (1, 8), None, 0x5EED_0007)
        .unwrap()
        .into_iter()
        .map(|s| s.instance)
        .collect();
    let limits = Limits {
        max_enum: 8,
        ..Limits::default()
    };
    let report = lemma_audit(&family, RealizationMode::Exhaustive, limits);
    let parts: Vec<String> = AuditCheck::ALL
        .iter()
        .map(|&c| {
            let t = report.tally(c);
            format!("{} {}/{}", c.name(), t.violations, t.checked)
        })
        .collect();
    let covered = AuditCheck::ALL.iter().all(|&c| report.tally(c).checked > 0);
    let pass = report.instances == 1_000
        && report.skipped.is_empty()
        && covered
        && report.total_violations() == 0;
    let mut detail = format!(
        "{} instances, {} realizations; violations/checked: {}",
        report.instances,
        report.realizations,
        parts.join(", ")
    );
    for e in report.examples.iter().take(3) {
        detail.push_str(&format!("; e.g. {e}"));
    }
    verdict(pass, detail)
}

fn main() {
    type Criterion = (&'static str, &'static str, Duration, fn() -> Verdict);
    let criteria: [Criterion; 7] = [
        (
            "AC1",
            "gap family exactness",
            Duration::from_secs(10),
            gap_exactness,
        ),
        (
            "AC2",
            "2RR lower bound on the gap family",
            Duration::from_secs(5),
            two_rr_lower_bound,
        ),
        (
            "AC3",
            "approximation bounds on random instances",
            Duration::from_secs(300),
            approximation_audit,
        ),
        (
            "AC4",
            "DP and enumeration oracles agree",
            Duration::from_secs(60),
            oracle_equivalence,
        ),
        (
            "AC5",
            "four-test sample regression",
            Duration::from_secs(1),
            sample_regression,
        ),
        (
            "AC6",
            "conditional optimality of ratio orders",
            Duration::from_secs(120),
            conditional_pairing,
        ),
        (
            "AC7",
            "phase and share audits",
            Duration::from_secs(180),
            phase_audit,
        ),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let ok = v.pass && elapsed <= budget;
        if !ok {
            failures += 1;
        }
        let timing = if elapsed <= budget {
            ""
        } else {
            " OVER BUDGET"
        };
        println!(
            "{} {id} {name} [{:.2}s / {}s{timing}]: {}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            v.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

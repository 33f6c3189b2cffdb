//! Command-line front end. [`run`] parses a token list, executes one
//! subcommand and returns the process exit code.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::eval::{conditional_expected_cost, expected_cost, DEFAULT_ENUM_LIMIT};
use crate::exact::{
    conditional_optimal_adaptive, optimal_adaptive, optimal_nonadaptive, DEFAULT_ADAPTIVE_LIMIT,
    DEFAULT_PERMUTATION_LIMIT,
};
use crate::experiments::{
    gap_family, gap_instance, lemma_audit, random_family, ratio_study, summarize, write_csv,
    Algorithms, AuditCheck, GapParams, Limits, RealizationMode, StudyInstance,
};
use crate::model::Instance;
use crate::strategies::{
    preset_spec, ratio_permutation, round_robin_merge, Permutation, Preset, RatioRule, TestSequence,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

const DEFAULT_ALPHA: &str = "1,1,1.4142135623730951";

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(
    name = "ssc",
    about = "Stochastic score classification toolkit",
    version
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a ratio permutation.
    Perm {
        #[command(flatten)]
        io: InstanceIo,
        #[arg(long, value_enum)]
        rule: Rule,
    },
    /// Print a round-robin merged order (repeats included when dedup is off).
    Merge {
        #[command(flatten)]
        io: InstanceIo,
        #[command(flatten)]
        strategy: StrategyArgs,
    },
    /// Expected cost of a strategy, optionally conditioned on a class.
    Eval {
        #[command(flatten)]
        io: InstanceIo,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[arg(long)]
        class: Option<usize>,
    },
    /// Optimal adaptive cost and decision tree.
    OptAdaptive {
        #[command(flatten)]
        io: InstanceIo,
        #[arg(long)]
        class: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ADAPTIVE_LIMIT)]
        max_adaptive: usize,
    },
    /// Optimal non-adaptive cost and order.
    OptNonadaptive {
        #[command(flatten)]
        io: InstanceIo,
        /// Largest n accepted.
        #[arg(long, default_value_t = DEFAULT_PERMUTATION_LIMIT)]
        max_enum: usize,
    },
    /// Class of every score and class probabilities.
    Classify {
        #[command(flatten)]
        io: InstanceIo,
    },
    /// Adaptivity-gap instance or a summary of its costs.
    Gap {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Emit::Instance)]
        emit: Emit,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ADAPTIVE_LIMIT)]
        max_adaptive: usize,
        #[arg(long, default_value_t = DEFAULT_PERMUTATION_LIMIT)]
        max_enum: usize,
    },
    /// Ratio study written as CSV. Uses the gap family when --m is given,
    /// otherwise seeded random instances.
    Study {
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Largest n for the non-adaptive optimum.
        #[arg(long, default_value_t = DEFAULT_PERMUTATION_LIMIT)]
        max_enum: usize,
        #[arg(long, default_value_t = DEFAULT_ADAPTIVE_LIMIT)]
        max_adaptive: usize,
    },
    /// Per-realization audit of the phase bounds on one instance or a
    /// seeded random family.
    Audit {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        /// Instances with more tests are sampled instead of enumerated.
        #[arg(long, default_value_t = 12)]
        max_enum: usize,
    },
}

#[derive(Debug, Args)]
pub struct InstanceIo {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    /// 2rr, 3rr or perm:<comma separated test ids>.
    #[arg(long)]
    pub strategy: String,
    /// 3RR weights (fail, succ, cheap).
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub dedup: Toggle,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Largest number of tests; sizes are drawn from 2..=n.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Fixed number of classes (drawn from 2..=n+1 when absent).
    #[arg(long)]
    pub b: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Rule {
    Fail,
    Succ,
    Cheap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Instance,
    Summary,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// code. Results go to stdout or `--out`, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(config.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Resource(_) => EXIT_RESOURCE,
                _ => EXIT_DOMAIN,
            }
        }
    }
}

fn load(path: &Path) -> Outcome<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(Instance::from_json(&text)?)
}

fn emit(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_alpha(text: &str) -> Outcome<[f64; 3]> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("bad --alpha '{text}': {e}")))?;
    values
        .try_into()
        .map_err(|_| Failure::Usage(format!("--alpha needs three values, got '{text}'")))
}

enum Chosen {
    Preset(Preset),
    Perm(Permutation),
}

fn parse_strategy(text: &str, inst: &Instance) -> Outcome<Chosen> {
    match text {
        "2rr" => Ok(Chosen::Preset(Preset::TwoRR)),
        "3rr" => Ok(Chosen::Preset(Preset::ThreeRR)),
        _ => {
            let ids = text
                .strip_prefix("perm:")
                .ok_or_else(|| Failure::Usage(format!("unknown strategy '{text}'")))?;
            let order = ids
                .split(',')
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(id) if id >= 1 => Ok(id - 1),
                    _ => Err(Failure::Usage(format!("bad test id '{s}' in --strategy"))),
                })
                .collect::<Outcome<Vec<_>>>()?;
            Ok(Chosen::Perm(Permutation::new(order, inst.n())?))
        }
    }
}

fn build_sequence(
    inst: &Instance,
    args: &StrategyArgs,
    require_preset: bool,
) -> Outcome<TestSequence> {
    let dedup = args.dedup == Toggle::On;
    match parse_strategy(&args.strategy, inst)? {
        Chosen::Preset(p) => {
            let weights = match (p, &args.alpha) {
                (Preset::ThreeRR, a) => Some(parse_alpha(a.as_deref().unwrap_or(DEFAULT_ALPHA))?),
                (Preset::TwoRR, Some(_)) => {
                    return Err(Failure::Usage("--alpha applies to 3rr only".into()))
                }
                (Preset::TwoRR, None) => None,
            };
            let spec = preset_spec(inst, p, weights, dedup)?;
            Ok(round_robin_merge(inst, &spec)?)
        }
        Chosen::Perm(_) if require_preset => {
            Err(Failure::Usage("merge needs --strategy 2rr or 3rr".into()))
        }
        Chosen::Perm(perm) => {
            if args.alpha.is_some() {
                return Err(Failure::Usage("--alpha applies to 3rr only".into()));
            }
            Ok(perm.into())
        }
    }
}

fn check_class(inst: &Instance, class: usize) -> Outcome<()> {
    if class == 0 || class > inst.num_classes() {
        return Err(Failure::Usage(format!(
            "--class must lie in 1..={}",
            inst.num_classes()
        )));
    }
    Ok(())
}

fn one_based(order: &[usize]) -> Vec<usize> {
    order.iter().map(|t| t + 1).collect()
}

fn execute(command: Command) -> Outcome<()> {
    match command {
        Command::Perm { io, rule } => {
            let inst = load(&io.instance)?;
            let rule = match rule {
                Rule::Fail => RatioRule::Fail,
                Rule::Succ => RatioRule::Succ,
                Rule::Cheap => RatioRule::Cheap,
            };
            emit(
                io.out.as_deref(),
                &format!("{}\n", ratio_permutation(&inst, rule)),
            )
        }
        Command::Merge { io, strategy } => {
            let inst = load(&io.instance)?;
            let seq = build_sequence(&inst, &strategy, true)?;
            emit(io.out.as_deref(), &format!("{seq}\n"))
        }
        Command::Eval {
            io,
            strategy,
            class,
        } => {
            let inst = load(&io.instance)?;
            let seq = build_sequence(&inst, &strategy, false)?;
            let value = match class {
                Some(c) => {
                    check_class(&inst, c)?;
                    conditional_expected_cost(&inst, &seq, c)?
                }
                None => expected_cost(&inst, &seq)?,
            };
            emit(io.out.as_deref(), &format!("{value}\n"))
        }
        Command::OptAdaptive {
            io,
            class,
            max_adaptive,
        } => {
            let inst = load(&io.instance)?;
            let solved = match class {
                Some(c) => {
                    check_class(&inst, c)?;
                    conditional_optimal_adaptive(&inst, c, max_adaptive)?
                }
                None => optimal_adaptive(&inst, max_adaptive)?,
            };
            let tree: serde_json::Value = serde_json::from_str(&solved.strategy.to_json())?;
            let doc = json!({ "value": solved.value, "tree": tree });
            emit(io.out.as_deref(), &format!("{doc}\n"))
        }
        Command::OptNonadaptive { io, max_enum } => {
            let inst = load(&io.instance)?;
            let solved = optimal_nonadaptive(&inst, max_enum)?;
            let doc = json!({ "value": solved.value, "order": one_based(solved.strategy.order()) });
            emit(io.out.as_deref(), &format!("{doc}\n"))
        }
        Command::Classify { io } => {
            let inst = load(&io.instance)?;
            let mut text = String::from("score class\n");
            for score in 0..=inst.n() {
                writeln!(text, "{score} {}", inst.classify(score)?).expect("string write");
            }
            text.push_str("class probability\n");
            for (i, p) in inst.class_probabilities().iter().enumerate() {
                writeln!(text, "{} {p}", i + 1).expect("string write");
            }
            emit(io.out.as_deref(), &text)
        }
        Command::Gap {
            m,
            eps,
            emit: what,
            out,
            max_adaptive,
            max_enum,
        } => {
            let inst = gap_instance(GapParams { m, eps })?;
            let text = match what {
                Emit::Instance => format!("{}\n", inst.to_json()),
                Emit::Summary => gap_summary(&inst, m, eps, max_adaptive, max_enum)?,
            };
            emit(out.as_deref(), &text)
        }
        Command::Study {
            out,
            family,
            m,
            eps,
            max_enum,
            max_adaptive,
        } => {
            let items: Vec<StudyInstance> = match m {
                Some(m) => gap_family(m, eps)?,
                None => random_family(family.count, (2, family.n), family.b, family.seed)?,
            };
            let limits = Limits {
                max_enum: DEFAULT_ENUM_LIMIT,
                max_adaptive,
                max_nonadaptive: max_enum,
            };
            let records = ratio_study(&items, Algorithms::default(), limits);
            let mut buf = Vec::new();
            write_csv(&records, &mut buf)?;
            emit(
                out.as_deref(),
                &String::from_utf8(buf).expect("csv output is utf-8"),
            )?;
            let s = summarize(&records);
            eprintln!(
                "records {} errors {} violations {} max ratio 2rr {} 3rr {} adaptivity {}",
                s.records,
                s.with_errors,
                s.violations,
                s.max_ratio_2rr,
                s.max_ratio_3rr,
                s.max_adaptivity_ratio
            );
            Ok(())
        }
        Command::Audit {
            instance,
            out,
            family,
            max_enum,
        } => {
            let instances = match &instance {
                Some(path) => vec![load(path)?],
                None => random_family(family.count, (2, family.n), family.b, family.seed)?
                    .into_iter()
                    .map(|s| s.instance)
                    .collect(),
            };
            let limits = Limits {
                max_enum,
                ..Limits::default()
            };
            let (small, large): (Vec<Instance>, Vec<Instance>) =
                instances.into_iter().partition(|i| i.n() <= max_enum);
            let mut report = lemma_audit(&small, RealizationMode::Exhaustive, limits);
            let sampled = lemma_audit(
                &large,
                RealizationMode::Sampled {
                    per_instance: 1000,
                    seed: family.seed,
                },
                limits,
            );
            let mut text = String::new();
            writeln!(
                text,
                "instances {} realizations {}",
                report.instances + sampled.instances,
                report.realizations + sampled.realizations
            )
            .expect("string write");
            for check in AuditCheck::ALL {
                let (a, b) = (report.tally(check), sampled.tally(check));
                writeln!(
                    text,
                    "{} checked {} violations {}",
                    check.name(),
                    a.checked + b.checked,
                    a.violations + b.violations
                )
                .expect("string write");
            }
            report.examples.extend(sampled.examples);
            report.skipped.extend(sampled.skipped);
            for e in &report.examples {
                writeln!(text, "violation {e}").expect("string write");
            }
            for s in &report.skipped {
                writeln!(text, "skipped {s}").expect("string write");
            }
            emit(out.as_deref(), &text)
        }
    }
}

fn gap_summary(
    inst: &Instance,
    m: usize,
    eps: f64,
    max_adaptive: usize,
    max_enum: usize,
) -> Outcome<String> {
    let cost = |p: Preset| -> Outcome<f64> {
        let spec = preset_spec(inst, p, None, true)?;
        Ok(expected_cost(inst, &round_robin_merge(inst, &spec)?)?)
    };
    let adaptive = optimal_adaptive(inst, max_adaptive)?.value;
    let nonadaptive = match optimal_nonadaptive(inst, max_enum) {
        Ok(s) => Some(s.value),
        Err(Error::Resource(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let (c2, c3) = (cost(Preset::TwoRR)?, cost(Preset::ThreeRR)?);
    let doc = json!({
        "m": m,
        "eps": eps,
        "n": inst.n(),
        "opt_adaptive": adaptive,
        "opt_nonadaptive": nonadaptive,
        "cost_2rr": c2,
        "cost_3rr": c3,
        "ratio_2rr": c2 / adaptive,
        "ratio_3rr": c3 / adaptive,
        "adaptivity_ratio": nonadaptive.map(|v| v / adaptive),
    });
    Ok(format!("{doc}\n"))
}

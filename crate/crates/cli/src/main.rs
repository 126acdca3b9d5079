//! `gamemetric`: metrics, kernels and payoff values for game files.
//!
//! Every command prints one JSON report on standard output. Diagnostics go
//! to standard error. Exit codes: 0 success, 1 invalid input or failed
//! check, 2 usage error.

mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use gamemetric::concurrent::{build_reduction, estimate_metric_concurrent, EstimatorParams};
use gamemetric::metrics::{bis_kernel, fixpoint, sim_kernel};
use gamemetric::payoffs::{
    average_value_estimate, bound_suite, discounted_value, total_reward_iterates, PayoffSpec, SuiteReport,
    DEFAULT_ALPHAS,
};
use gamemetric::random::random_game;
use gamemetric::{Base, Combine, FixpointReport, GameStructure, MetricKind, MetricMatrix, Player, Status};
use serde_json::{json, Map, Value};

const VALUE_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "gamemetric", version, about = "Simulation metrics and payoff values for stochastic games")]
struct Cli {
    /// Add wall-clock time to the report (makes output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game file for well-formedness.
    Validate {
        #[arg(long)]
        game: PathBuf,
    },
    /// Compute a simulation or bisimulation metric by Picard iteration.
    Metric(MetricArgs),
    /// Compute the simulation relation or the bisimulation partition.
    Kernel {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = BaseArg::Bis)]
        kind: BaseArg,
    },
    /// Discounted, average or n-step total value of a reward variable.
    #[command(group(ArgGroup::new("payoff").required(true).args(["alpha", "average", "total_steps"])))]
    Value {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        average: bool,
        #[arg(long)]
        total_steps: Option<usize>,
        #[arg(long, default_value = "r")]
        reward: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        player: u8,
    },
    /// Check the payoff bounds against every metric, on one game or on
    /// seeded random games.
    #[command(group(ArgGroup::new("source").required(true).args(["game", "trials"])))]
    CheckBounds {
        #[arg(long)]
        game: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long, default_value = "r")]
        reward: String,
    },
    /// Write the reachability reduction of a game to a new file.
    Reduce {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        prop: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a metric on a concurrent game (a lower bound).
    Estimate {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, default_value_t = EstimatorParams::default().samples)]
        samples: usize,
        #[arg(long, default_value_t = EstimatorParams::default().ascent_steps)]
        ascent_steps: usize,
        #[arg(long, default_value_t = EstimatorParams::default().step_size)]
        step_size: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, value_enum, default_value_t = BaseArg::Sim)]
    kind: BaseArg,
    #[arg(long, value_enum, default_value_t = CombineArg::Max)]
    combine: CombineArg,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Convergence tolerance of the iteration.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, requires = "to")]
    from: Option<String>,
    #[arg(long, requires = "from")]
    to: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseArg {
    Sim,
    Bis,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineArg {
    Max,
    Sum,
}

/// What a command produced: the payload fields, the status and the exit
/// code (nonzero when a check failed).
struct Outcome {
    summary: Option<Value>,
    result: Value,
    status: Status,
    failed: bool,
}

impl Outcome {
    fn ok(g: &GameStructure, result: Value, status: Status) -> Self {
        Outcome { summary: Some(report::summary(g)), result, status, failed: false }
    }
}

fn load(path: &Path) -> anyhow::Result<GameStructure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read file", path.display()))?;
    let g = GameStructure::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let violations = g.validate();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("{}: {v}", path.display())).collect();
        bail!(lines.join("\n"));
    }
    Ok(g)
}

fn lookup(g: &GameStructure, flag: &str, name: &str) -> anyhow::Result<usize> {
    g.lookup(name).map_err(|e| anyhow!("{flag}: {e}"))
}

impl MetricArgs {
    fn kind(&self) -> anyhow::Result<MetricKind> {
        let base = match self.kind {
            BaseArg::Sim => Base::Simulation,
            BaseArg::Bis => Base::Bisimulation,
        };
        let combine = match self.combine {
            CombineArg::Max => Combine::Max,
            CombineArg::Sum => Combine::Sum,
        };
        MetricKind::new(base, combine, self.alpha).map_err(|e| anyhow!("--alpha: {e}"))
    }

    fn payload(&self, g: &GameStructure, d: &MetricMatrix, fix: &FixpointReport) -> anyhow::Result<Value> {
        let mut out = Map::new();
        match (&self.from, &self.to) {
            (Some(from), Some(to)) => {
                let (s, t) = (lookup(g, "--from", from)?, lookup(g, "--to", to)?);
                out.insert("from".into(), json!(from));
                out.insert("to".into(), json!(to));
                out.insert("d".into(), report::num(d.get(s, t)));
            }
            _ => {
                out.insert("matrix".into(), report::matrix(g, d));
            }
        }
        out.insert("iterations".into(), json!(fix.iterations));
        out.insert("last_change".into(), report::num(fix.last_change));
        out.insert("divergent_pairs".into(), json!(fix.divergent_pairs));
        Ok(Value::Object(out))
    }
}

fn player(p: u8) -> Player {
    if p == 1 {
        Player::One
    } else {
        Player::Two
    }
}

fn metric(args: &MetricArgs) -> anyhow::Result<Outcome> {
    let g = load(&args.game)?;
    let kind = args.kind()?;
    if let (Some(from), Some(to)) = (&args.from, &args.to) {
        lookup(&g, "--from", from)?;
        lookup(&g, "--to", to)?;
    }
    let (d, fix) = fixpoint(&g, kind, args.epsilon, args.max_iters)
        .map_err(|e| anyhow!("{}: {e}", args.game.display()))?;
    Ok(Outcome::ok(&g, args.payload(&g, &d, &fix)?, fix.status))
}

fn estimate(args: &MetricArgs, params: EstimatorParams) -> anyhow::Result<Outcome> {
    let g = load(&args.game)?;
    let kind = args.kind()?;
    if let (Some(from), Some(to)) = (&args.from, &args.to) {
        lookup(&g, "--from", from)?;
        lookup(&g, "--to", to)?;
    }
    let (d, fix) = estimate_metric_concurrent(&g, kind, &params, args.epsilon, args.max_iters)
        .map_err(|e| anyhow!("{}: {e}", args.game.display()))?;
    Ok(Outcome::ok(&g, args.payload(&g, &d, &fix)?, fix.status))
}

fn kernel(path: &Path, kind: BaseArg) -> anyhow::Result<Outcome> {
    let g = load(path)?;
    let at = |e| anyhow!("{}: {e}", path.display());
    let result = match kind {
        BaseArg::Sim => json!({ "relation": report::relation(&g, &sim_kernel(&g).map_err(at)?) }),
        BaseArg::Bis => json!({ "blocks": report::partition(&g, &bis_kernel(&g).map_err(at)?) }),
    };
    Ok(Outcome::ok(&g, result, Status::Converged))
}

fn value(
    path: &Path,
    alpha: Option<f64>,
    average: bool,
    steps: Option<usize>,
    reward: &str,
    who: Player,
) -> anyhow::Result<Outcome> {
    let g = load(path)?;
    let at = |e| anyhow!("{}: {e}", path.display());
    let result = if let Some(alpha) = alpha {
        let w = discounted_value(&g, &PayoffSpec::new(reward, alpha, who), VALUE_TOL).map_err(at)?;
        json!({ "payoff": "discounted", "alpha": report::num(alpha), "values": report::valuation(&g, &w) })
    } else if average {
        let est = average_value_estimate(&g, reward, who, &DEFAULT_ALPHAS).map_err(at)?;
        let per_alpha: Vec<Value> = est
            .per_alpha
            .iter()
            .map(|(a, w)| json!({ "alpha": report::num(*a), "values": report::valuation(&g, w) }))
            .collect();
        json!({
            "payoff": "average",
            "values": report::valuation(&g, &est.value),
            "spread": report::per_state(&g, &est.spread),
            "per_alpha": per_alpha,
        })
    } else {
        let n = steps.expect("clap requires one payoff flag");
        let iterates = total_reward_iterates(&g, reward, who, n).map_err(at)?;
        let last = iterates.last().expect("at least one step");
        json!({ "payoff": "total", "steps": n, "values": report::valuation(&g, last) })
    };
    Ok(Outcome::ok(&g, result, Status::Converged))
}

/// The least informative status across the suite's metrics.
fn suite_status(suite: &SuiteReport) -> Status {
    let statuses: Vec<Status> = suite.metrics.iter().map(|(_, _, r)| r.status).collect();
    [Status::Divergent, Status::IterationLimited]
        .into_iter()
        .find(|s| statuses.contains(s))
        .unwrap_or(Status::Converged)
}

fn check_bounds_game(path: &Path, alpha: f64, reward: &str) -> anyhow::Result<Outcome> {
    let g = load(path)?;
    let suite = bound_suite(&g, reward, alpha).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let names = g.state_names();
    let list = |fs: &[_]| -> Vec<Value> { fs.iter().map(|f| report::finding(f, names)).collect() };
    let result = json!({
        "alpha": report::num(alpha),
        "checked": suite.bounds.checked,
        "violations": list(&suite.bounds.violations),
        "counterexamples": list(&suite.bounds.counterexamples),
    });
    let failed = !suite.bounds.violations.is_empty();
    Ok(Outcome { failed, ..Outcome::ok(&g, result, suite_status(&suite)) })
}

fn check_bounds_trials(trials: u64, seed: u64, alpha: f64, reward: &str) -> anyhow::Result<Outcome> {
    let mut checked = 0;
    let mut counterexamples = 0;
    let mut violations = Vec::new();
    let mut status = Status::Converged;
    for game_seed in seed..seed + trials {
        let g = random_game(game_seed);
        let suite = bound_suite(&g, reward, alpha).map_err(|e| anyhow!("seed {game_seed}: {e}"))?;
        checked += suite.bounds.checked;
        counterexamples += suite.bounds.counterexamples.len();
        for f in &suite.bounds.violations {
            let mut v = report::finding(f, g.state_names());
            v["seed"] = json!(game_seed);
            violations.push(v);
        }
        if suite_status(&suite) != Status::Converged {
            status = suite_status(&suite);
        }
    }
    let failed = !violations.is_empty();
    let result = json!({
        "alpha": report::num(alpha),
        "trials": trials,
        "seed": seed,
        "checked": checked,
        "violations": violations,
        "counterexamples": counterexamples,
    });
    Ok(Outcome { summary: None, result, status, failed })
}

fn reduce(path: &Path, prop: &str, out: &Path) -> anyhow::Result<Outcome> {
    let g = load(path)?;
    let reduced = build_reduction(&g, prop).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let mut text = reduced.to_json();
    text.push('\n');
    std::fs::write(out, text).with_context(|| format!("{}: cannot write file", out.display()))?;
    let added = reduced.state_names().last().expect("reduction adds a state");
    let result = json!({
        "out": out.display().to_string(),
        "added_state": added,
        "reduced": report::summary(&reduced),
    });
    Ok(Outcome::ok(&g, result, Status::Converged))
}

fn validate(path: &Path) -> anyhow::Result<Outcome> {
    let g = load(path)?;
    Ok(Outcome::ok(&g, json!({ "valid": true }), Status::Converged))
}

fn dispatch(command: &Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Validate { game } => validate(game),
        Command::Metric(args) => metric(args),
        Command::Kernel { game, kind } => kernel(game, *kind),
        Command::Value { game, alpha, average, total_steps, reward, player: p } => {
            value(game, *alpha, *average, *total_steps, reward, player(*p))
        }
        Command::CheckBounds { game: Some(game), alpha, reward, .. } => check_bounds_game(game, *alpha, reward),
        Command::CheckBounds { trials, seed, alpha, reward, .. } => {
            check_bounds_trials(trials.expect("clap requires a source"), *seed, *alpha, reward)
        }
        Command::Reduce { game, prop, out } => reduce(game, prop, out),
        Command::Estimate { metric, samples, ascent_steps, step_size, seed } => estimate(
            metric,
            EstimatorParams { samples: *samples, ascent_steps: *ascent_steps, step_size: *step_size, seed: *seed },
        ),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let start = Instant::now();
    let outcome = match dispatch(&cli.command) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };

    let mut out = Map::new();
    let name = argv.get(1..).unwrap_or_default().iter().find(|a| !a.starts_with('-')).cloned();
    out.insert("command".into(), json!({ "name": name, "args": argv[1..] }));
    if let Some(summary) = outcome.summary {
        out.insert("game".into(), summary);
    }
    out.insert("result".into(), outcome.result);
    out.insert("status".into(), json!(outcome.status.to_string()));
    if cli.timing {
        out.insert("elapsed_ms".into(), report::num(start.elapsed().as_secs_f64() * 1e3));
    }
    let text = serde_json::to_string_pretty(&Value::Object(out)).expect("reports serialize");
    // A closed pipe (e.g. `| head`) is not an error worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if outcome.failed {
        eprintln!("error: bound violations found");
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or schema error, 2 ergodicity certificate
//! failure, 3 truncation planning failure, 4 solver failure.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bounds::{
    self, BoundReport, BoundsError, EnvelopeConstants, EnvelopeStrategy, TailSide, TruncationBound, WeightSequence,
};
use crate::model::{load_model, ModelError, RateModel, Truncated};
use crate::simulate;
use crate::solver::{self, fmt17, CycleOptions, ProbabilitySnapshot, SolverError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    NotErgodic(BoundsError),
    #[error(transparent)]
    Truncation(BoundsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Model(_) | CliError::Io(_) => 1,
            CliError::NotErgodic(_) => 2,
            CliError::Truncation(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Stage { source, .. } => source.exit_code(),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::NotErgodicWithTheseWeights { .. } => CliError::NotErgodic(e),
            BoundsError::InvalidWeights(_) | BoundsError::Json(_) | BoundsError::InvalidEnvelope { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Truncation(e),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bilateral-bdp",
    version,
    about = "Bounds and transient solutions for birth-death processes on the integers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the exponential envelope and evaluate contraction and tail bounds.
    Bound(BoundArgs),
    /// Choose a truncation window and bound the truncation error.
    Truncate(TruncateArgs),
    /// Solve the truncated forward equations.
    Solve(SolveArgs),
    /// Evaluate concentration bounds.
    Tail(TailArgs),
    /// Monte-Carlo histogram of X(t).
    Simulate(SimulateArgs),
    /// Run the full pipeline for a built-in example.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in model name (ex1, ex2) or path to a model JSON document.
    #[arg(long, default_value = "ex1")]
    pub model: String,
    /// Weight sequence: JSON path or built-in (ex1, ex1-star, ex2, ex2-star).
    #[arg(long)]
    pub weights: Option<String>,
    /// Weights for the truncated process.
    #[arg(long)]
    pub weights_star: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n1: Option<i64>,
    #[arg(long)]
    pub n2: Option<i64>,
    #[arg(long)]
    pub n_paths: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Pointwise,
    PeriodAverage,
}

impl From<StrategyArg> for EnvelopeStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Pointwise => EnvelopeStrategy::Pointwise,
            StrategyArg::PeriodAverage => EnvelopeStrategy::PeriodAverage,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Both,
}

impl From<SideArg> for TailSide {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Left => TailSide::Left,
            SideArg::Right => TailSide::Right,
            SideArg::Both => TailSide::Both,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "pointwise")]
    pub strategy: StrategyArg,
    /// The two initial states compared by the contraction bound.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub x0: i64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub y0: i64,
    /// Number of points on the t grid (up to --t-end, default 20).
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Tail thresholds.
    #[arg(long = "tail-n", value_delimiter = ',', default_value = "5,10,20")]
    pub tail_n: Vec<i64>,
}

#[derive(Debug, Clone, Args)]
pub struct TruncateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1000)]
    pub k_probe: i64,
    /// Override the fitted envelope of the full process: M,beta.
    #[arg(long, value_delimiter = ',')]
    pub envelope: Option<Vec<f64>>,
    /// Override the fitted envelope of the truncated process: M*,beta*.
    #[arg(long, value_delimiter = ',')]
    pub envelope_star: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub x0: i64,
    #[arg(long, default_value_t = 0.1)]
    pub output_every: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "n", value_delimiter = ',', default_value = "5,10,20")]
    pub n: Vec<i64>,
    /// Evaluation times; `inf` gives the limiting bound.
    #[arg(long = "t", value_delimiter = ',', default_value = "1,5,10,inf")]
    pub t: Vec<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub side: SideArg,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub x0: i64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub x0: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    Ex1,
    Ex2,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub name: Example,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub n_paths: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Print the planned stages without running or writing anything.
    #[arg(long)]
    pub dry_run: bool,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Truncate(a) => cmd_truncate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Tail(a) => cmd_tail(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

/// Weight sequences shipped with the built-in examples.
pub fn builtin_weights(name: &str) -> Option<WeightSequence> {
    let w = match name {
        "ex1" => WeightSequence::mirror_geometric(8.0 / 7.0),
        "ex1-star" => WeightSequence::mirror_geometric(4.0 / 3.0),
        "ex2" => WeightSequence::scaled_geometric(2.0, 8.0 / 7.0),
        "ex2-star" => WeightSequence::scaled_geometric(2.0, std::f64::consts::SQRT_2),
        _ => return None,
    };
    Some(w.expect("built-in weights are valid"))
}

fn read_source(source: &str) -> Result<String, CliError> {
    fs::read_to_string(source).map_err(|e| CliError::Usage(format!("cannot read {source}: {e}")))
}

fn resolve_model(source: &str) -> Result<RateModel, CliError> {
    match RateModel::builtin(source) {
        Some(m) => Ok(m),
        None => Ok(load_model(&read_source(source)?)?),
    }
}

fn resolve_weights(source: Option<&str>, model: &RateModel, star: bool) -> Result<WeightSequence, CliError> {
    let flag = if star { "--weights-star" } else { "--weights" };
    let source = match source {
        Some(s) => s.to_string(),
        None if RateModel::builtin(&model.name).is_some() => {
            if star {
                format!("{}-star", model.name)
            } else {
                model.name.clone()
            }
        }
        None => return Err(CliError::Usage(format!("{flag} is required for custom models"))),
    };
    match builtin_weights(&source) {
        Some(w) => Ok(w),
        None => Ok(WeightSequence::from_json(&read_source(&source)?)?),
    }
}

fn model_period(model: &RateModel) -> Result<f64, CliError> {
    model
        .common_period()
        .ok_or_else(|| CliError::Usage("rate frequencies have no common period".into()))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

pub fn cmd_bound(a: &BoundArgs) -> Result<(), CliError> {
    let model = resolve_model(&a.common.model)?;
    let w = resolve_weights(a.common.weights.as_deref(), &model, false)?;
    let period = model_period(&model)?;
    let env = bounds::fit_envelope(&model, &w, a.strategy.into(), period)?;
    let t_end = positive("--t-end", a.common.t_end.unwrap_or(20.0))?;
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let lo = a.x0.min(a.y0).min(0) - 1;
    let hi = a.x0.max(a.y0).max(0) + 1;
    let p0 = ProbabilitySnapshot::delta(lo, hi, a.x0);
    let q0 = ProbabilitySnapshot::delta(lo, hi, a.y0);
    let grid: Vec<f64> = (0..a.points)
        .map(|i| t_end * i as f64 / (a.points - 1) as f64)
        .collect();
    let contraction: Vec<BoundReport> = grid
        .iter()
        .map(|t| bounds::contraction_bound(&w, &env, &p0, &q0, *t))
        .collect();
    let mut tails = Vec::new();
    for &n in &a.tail_n {
        if n < 1 {
            return Err(CliError::Usage(format!("tail threshold {n} must be positive")));
        }
        for side in [TailSide::Left, TailSide::Right, TailSide::Both] {
            tails.push(bounds::tail_bound(&model, &w, &env, &p0, n, f64::INFINITY, side));
        }
    }
    ensure_dir(&a.common.out)?;
    write_json(
        &a.common.out.join("bound.json"),
        &json!({
            "model": model.name,
            "period": period,
            "envelope": { "M": env.m, "beta": env.beta },
            "strategy": format!("{:?}", a.strategy),
            "initial_states": [a.x0, a.y0],
            "contraction": contraction,
            "tails_limiting": tails,
        }),
    )?;
    let mut csv = create(&a.common.out.join("contraction.csv"))?;
    writeln!(csv, "t,bound")?;
    for (t, r) in grid.iter().zip(&contraction) {
        writeln!(csv, "{},{}", fmt17(*t), fmt17(r.value))?;
    }
    csv.flush()?;
    println!("M = {}, beta = {}", env.m, env.beta);
    Ok(())
}

/// Everything `truncate` computes, reused by `solve` and `reproduce`.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationPlan {
    pub envelope: EnvelopeConstants,
    pub envelope_star: EnvelopeConstants,
    pub eps: f64,
    pub n1: i64,
    pub n2: i64,
    pub bound: TruncationBound,
    pub w_constant: f64,
    pub mean_error: BoundReport,
}

pub fn plan(
    model: &RateModel,
    w: &WeightSequence,
    w_star: &WeightSequence,
    env: EnvelopeConstants,
    env_star: EnvelopeConstants,
    eps: f64,
    k_probe: i64,
) -> Result<TruncationPlan, BoundsError> {
    let (n1, n2) = bounds::plan_truncation(model, w, w_star, &env, &env_star, eps)?;
    let bound = bounds::truncation_bound(model, w, w_star, &env, &env_star, n1, n2)?;
    let w_constant = bounds::w_constant(w, k_probe)?;
    Ok(TruncationPlan {
        envelope: env,
        envelope_star: env_star,
        eps,
        n1,
        n2,
        bound,
        w_constant,
        mean_error: bounds::mean_error_bound(bound.weighted, w_constant),
    })
}

fn envelope_override(values: &Option<Vec<f64>>) -> Result<Option<EnvelopeConstants>, CliError> {
    match values.as_deref() {
        None => Ok(None),
        Some([m, beta]) => Ok(Some(EnvelopeConstants::new(*m, *beta)?)),
        Some(_) => Err(CliError::Usage("envelope override takes M,beta".into())),
    }
}

/// Fits both envelopes; the truncated process is certified on the full
/// model, which is conservative for every window.
fn fit_pair(
    model: &RateModel,
    w: &WeightSequence,
    w_star: &WeightSequence,
) -> Result<(EnvelopeConstants, EnvelopeConstants), CliError> {
    let period = model_period(model)?;
    let env = bounds::fit_envelope(model, w, EnvelopeStrategy::Pointwise, period)?;
    let env_star = bounds::fit_envelope(model, w_star, EnvelopeStrategy::Pointwise, period)?;
    Ok((env, env_star))
}

pub fn cmd_truncate(a: &TruncateArgs) -> Result<(), CliError> {
    let model = resolve_model(&a.common.model)?;
    let w = resolve_weights(a.common.weights.as_deref(), &model, false)?;
    let w_star = resolve_weights(a.common.weights_star.as_deref(), &model, true)?;
    let eps = positive("--eps", a.common.eps.unwrap_or(1e-6))?;
    let (fit, fit_star) = fit_pair(&model, &w, &w_star)?;
    let env = envelope_override(&a.envelope)?.unwrap_or(fit);
    let env_star = envelope_override(&a.envelope_star)?.unwrap_or(fit_star);
    let plan = plan(&model, &w, &w_star, env, env_star, eps, a.k_probe)?;
    let fixed = match (a.common.n1, a.common.n2) {
        (Some(n1), Some(n2)) => Some(bounds::truncation_bound(&model, &w, &w_star, &env, &env_star, n1, n2)?),
        (None, None) => None,
        _ => return Err(CliError::Usage("--n1 and --n2 go together".into())),
    };
    ensure_dir(&a.common.out)?;
    write_json(
        &a.common.out.join("truncate.json"),
        &json!({
            "model": model.name,
            "plan": plan,
            "bound_report": plan.bound.report(),
            "requested_window": fixed,
        }),
    )?;
    println!(
        "window = ({}, {}), truncation bound = {:e}, mean error bound = {:e}",
        plan.n1, plan.n2, plan.bound.value, plan.mean_error.value
    );
    Ok(())
}

fn solve_window(c: &Common, model: &RateModel) -> Result<(i64, i64), CliError> {
    match (c.n1, c.n2) {
        (Some(n1), Some(n2)) if n1 < n2 => Ok((n1, n2)),
        (Some(n1), Some(n2)) => Err(CliError::Usage(format!("empty window ({n1}, {n2})"))),
        (None, None) => {
            let w = resolve_weights(c.weights.as_deref(), model, false)?;
            let w_star = resolve_weights(c.weights_star.as_deref(), model, true)?;
            let (env, env_star) = fit_pair(model, &w, &w_star)?;
            let eps = positive("--eps", c.eps.unwrap_or(1e-6))?;
            Ok(bounds::plan_truncation(model, &w, &w_star, &env, &env_star, eps)?)
        }
        _ => Err(CliError::Usage("--n1 and --n2 go together".into())),
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let model = resolve_model(&a.common.model)?;
    let (n1, n2) = solve_window(&a.common, &model)?;
    if !(n1..=n2).contains(&a.x0) {
        return Err(CliError::Usage(format!("x0 = {} outside ({n1}, {n2})", a.x0)));
    }
    let t_end = positive("--t-end", a.common.t_end.unwrap_or(10.0))?;
    let dt = positive("--dt", a.common.dt.unwrap_or_else(|| solver::default_step(&model)))?;
    let every = positive("--output-every", a.output_every)?;
    let p0 = ProbabilitySnapshot::delta(n1, n2, a.x0);
    let traj = solver::integrate(&model, (n1, n2), &p0, t_end, dt, every)?;
    ensure_dir(&a.common.out)?;
    let mut out = create(&a.common.out.join("trajectory.csv"))?;
    traj.write_csv(&mut out)?;
    out.flush()?;
    let mut out = create(&a.common.out.join("moments.csv"))?;
    traj.write_moments_csv(&mut out)?;
    out.flush()?;
    let last = solver::moments(traj.last());
    println!(
        "window = ({n1}, {n2}), t = {t_end}: mean = {}, variance = {}",
        last.mean, last.variance
    );
    Ok(())
}

pub fn cmd_tail(a: &TailArgs) -> Result<(), CliError> {
    let model = resolve_model(&a.common.model)?;
    let w = resolve_weights(a.common.weights.as_deref(), &model, false)?;
    let env = bounds::fit_envelope(&model, &w, EnvelopeStrategy::Pointwise, model_period(&model)?)?;
    let p0 = ProbabilitySnapshot::delta(a.x0.min(0) - 1, a.x0.max(0) + 1, a.x0);
    let mut reports = Vec::new();
    for &n in &a.n {
        if n < 1 {
            return Err(CliError::Usage(format!("tail threshold {n} must be positive")));
        }
        for &t in &a.t {
            if t.is_nan() || t < 0.0 {
                return Err(CliError::Usage(format!("time {t} must be nonnegative")));
            }
            let r = bounds::tail_bound(&model, &w, &env, &p0, n, t, a.side.into());
            println!("N = {n}, t = {t}: {:e}", r.value);
            reports.push(r);
        }
    }
    ensure_dir(&a.common.out)?;
    write_json(
        &a.common.out.join("tail.json"),
        &json!({ "model": model.name, "envelope": env, "x0": a.x0, "bounds": reports }),
    )
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let model = resolve_model(&a.common.model)?;
    let t = positive("--t-end", a.common.t_end.unwrap_or(1.0))?;
    let n = a.common.n_paths.unwrap_or(10_000);
    if n == 0 {
        return Err(CliError::Usage("--n-paths must be positive".into()));
    }
    let hist = simulate::empirical_distribution(&model, a.x0, t, n, a.common.seed);
    ensure_dir(&a.common.out)?;
    let mut out = create(&a.common.out.join("histogram.csv"))?;
    hist.write_csv(&mut out)?;
    out.flush()?;
    let m = solver::moments(&hist.snapshot);
    println!("{n} paths, t = {t}: mean = {}, variance = {}", m.mean, m.variance);
    Ok(())
}

/// Reference constants the reproduction is compared against.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReferenceValues {
    pub beta: f64,
    pub m: f64,
    pub beta_star: f64,
    pub m_star: f64,
    pub truncation_n: i64,
    pub truncation_bound: f64,
    pub cycle_tol: f64,
}

pub fn reference_values(ex: Example) -> ReferenceValues {
    match ex {
        Example::Ex1 => ReferenceValues {
            beta: 13.0 / 28.0,
            m: 1.0,
            beta_star: 1.0 / 3.0,
            m_star: 1.0,
            truncation_n: 150,
            truncation_bound: 2e-8,
            cycle_tol: 1e-8,
        },
        Example::Ex2 => ReferenceValues {
            beta: 0.09375,
            m: 1.0,
            beta_star: 0.09375,
            m_star: 1.0,
            truncation_n: 150,
            truncation_bound: 1e-7,
            cycle_tol: 1e-7,
        },
    }
}

const REPRODUCE_STAGES: [&str; 5] = [
    "bound: fit (M, beta) for d and (M*, beta*) for d*",
    "truncate: plan the window for eps = 1e-6 and evaluate the truncation and mean-error bounds",
    "solve: integrate from X(0) = 0 and detect the periodic limiting regime",
    "simulate: Monte-Carlo histogram at t = 5 against the solver",
    "write: figure CSVs and summary.json",
];

/// Figure states for the limiting-probability curves.
pub const FIGURE_STATES: [i64; 5] = [-5, -2, 0, 2, 5];

pub fn cmd_reproduce(a: &ReproduceArgs) -> Result<(), CliError> {
    let name = match a.name {
        Example::Ex1 => "ex1",
        Example::Ex2 => "ex2",
    };
    if a.dry_run {
        println!("reproduce {name} (dry run, nothing written):");
        for (i, stage) in REPRODUCE_STAGES.iter().enumerate() {
            println!("  {}. {stage}", i + 1);
        }
        return Ok(());
    }
    if a.n_paths == 0 {
        return Err(CliError::Usage("--n-paths must be positive".into()));
    }
    let stage = |stage: &'static str| {
        move |e: CliError| CliError::Stage {
            stage,
            source: Box::new(e),
        }
    };
    let reference = reference_values(a.name);
    let model = RateModel::builtin(name).expect("built-in");
    let w = builtin_weights(name).expect("built-in");
    let w_star = builtin_weights(&format!("{name}-star")).expect("built-in");

    let (env, env_star) = fit_pair(&model, &w, &w_star).map_err(stage("bound"))?;
    let truncated = Truncated::new(&model, -reference.truncation_n, reference.truncation_n);
    let env_star_window = bounds::fit_envelope(&truncated, &w_star, EnvelopeStrategy::Pointwise, 1.0)
        .map_err(|e| stage("bound")(e.into()))?;

    let plan = plan(&model, &w, &w_star, env, env_star, 1e-6, 1000).map_err(|e| stage("truncate")(e.into()))?;
    let at_reference = bounds::truncation_bound(
        &model,
        &w,
        &w_star,
        &env,
        &env_star,
        -reference.truncation_n,
        reference.truncation_n,
    )
    .map_err(|e| stage("truncate")(e.into()))?;
    let ref_env = EnvelopeConstants::new(reference.m, reference.beta).expect("valid");
    let ref_env_star = EnvelopeConstants::new(reference.m_star, reference.beta_star).expect("valid");
    let at_reference_constants = bounds::truncation_bound(
        &model,
        &w,
        &w_star,
        &ref_env,
        &ref_env_star,
        -reference.truncation_n,
        reference.truncation_n,
    )
    .map_err(|e| stage("truncate")(e.into()))?;

    let window = (plan.n1, plan.n2);
    let p0 = ProbabilitySnapshot::delta(window.0, window.1, 0);
    let cycle = solver::limiting_cycle(&model, window, &p0, 1.0, reference.cycle_tol, CycleOptions::default())
        .map_err(|e| stage("solve")(e.into()))?;
    let transient = solver::integrate(&model, window, &p0, 5.0, solver::default_step(&model), 5.0)
        .map_err(|e| stage("solve")(e.into()))?;

    let hist = simulate::empirical_distribution(&model, 0, 5.0, a.n_paths, a.seed);
    let solver_at_5 = transient.last();
    let tv = hist.snapshot.l1_distance(solver_at_5);
    let stderr_sum: f64 = hist.stderr.iter().sum();

    let out = &a.out;
    ensure_dir(out).map_err(stage("write"))?;
    let write_figures = || -> Result<(), CliError> {
        let mut f = create(&out.join(format!("{name}_limiting_probabilities.csv")))?;
        let header: Vec<String> = FIGURE_STATES.iter().map(|k| format!("p_{k}")).collect();
        writeln!(f, "t,{}", header.join(","))?;
        for s in cycle.trajectory.snapshots() {
            let row: Vec<String> = FIGURE_STATES.iter().map(|k| fmt17(s.prob(*k))).collect();
            writeln!(f, "{},{}", fmt17(s.time()), row.join(","))?;
        }
        f.flush()?;
        let mut f = create(&out.join(format!("{name}_limiting_moments.csv")))?;
        cycle.trajectory.write_moments_csv(&mut f)?;
        f.flush()?;
        let mut f = create(&out.join(format!("{name}_limiting_trajectory.csv")))?;
        cycle.trajectory.write_csv(&mut f)?;
        f.flush()?;
        let mut f = create(&out.join(format!("{name}_histogram_t5.csv")))?;
        hist.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    };
    write_figures().map_err(stage("write"))?;

    let moments = cycle.trajectory.moments();
    let mean_range = moments
        .iter()
        .map(|m| m.mean)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let var_range = moments
        .iter()
        .map(|m| m.variance)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let checks = json!({
        "beta_matches_reference": close(env.beta, reference.beta),
        "m_matches_reference": close(env.m, reference.m),
        "beta_star_at_least_reference": env_star.beta >= reference.beta_star - 1e-9,
        "truncation_bound_below_1e-6": at_reference_constants.value <= 1e-6,
        "planned_window_within_reference": plan.n2 <= reference.truncation_n,
        "limiting_cycle_found": cycle.distance < reference.cycle_tol,
        "monte_carlo_within_3_sigma": tv <= 3.0 * stderr_sum,
    });
    let summary = json!({
        "model": name,
        "envelope": env,
        "envelope_star": env_star,
        "envelope_star_on_reference_window": env_star_window,
        "reference": reference,
        "plan": plan,
        "truncation_bound_at_reference_window": at_reference,
        "truncation_bound_with_reference_constants": at_reference_constants,
        "truncation_bound_gap_to_reference": at_reference_constants.value / reference.truncation_bound,
        "limiting_cycle": {
            "start": cycle.start,
            "distance": cycle.distance,
            "tol": reference.cycle_tol,
            "mean_range": [mean_range.0, mean_range.1],
            "variance_range": [var_range.0, var_range.1],
        },
        "monte_carlo": {
            "t": 5.0,
            "n_paths": a.n_paths,
            "seed": a.seed,
            "l1_distance_to_solver": tv,
            "stderr_sum": stderr_sum,
        },
        "checks": checks,
    });
    write_json(&out.join(format!("{name}_summary.json")), &summary).map_err(stage("write"))?;
    println!(
        "{name}: beta = {}, beta* = {}, window = ({}, {}), truncation bound = {:e}, cycle from t = {}",
        env.beta, env_star.beta, plan.n1, plan.n2, plan.bound.value, cycle.start
    );
    Ok(())
}

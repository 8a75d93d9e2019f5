//! Transient distributions of the process confined to a finite window.
//!
//! The forward equations on `n1..=n2` form a tridiagonal system
//!
//! ```text
//! p'_i = λ_{i-1}(t) p_{i-1} − (λ_i(t) + μ_i(t)) p_i + μ_{i+1}(t) p_{i+1}
//! ```
//!
//! with `λ_{n2} = μ_{n1} = 0`, so probability never leaves the window and
//! every column of the generator sums to zero. It is integrated with the
//! classical fixed-step fourth-order Runge-Kutta scheme.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::{RateExpr, RateModel, Rates};

/// Largest admissible `dt·‖A‖`.
pub const STEP_LIMIT: f64 = 0.1;
pub const MASS_TOL: f64 = 1e-9;
pub const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("step {dt} exceeds the stability limit {max}")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("probability mass drifted to {mass} at t = {t}")]
    MassDrift { t: f64, mass: f64 },
    #[error("probability of state {k} went negative ({value}) at t = {t}")]
    NegativeProbability { t: f64, k: i64, value: f64 },
    #[error("initial distribution puts mass {mass} outside the window ({n1}, {n2})")]
    OutsideWindow { n1: i64, n2: i64, mass: f64 },
    #[error("invalid distribution: {0}")]
    InvalidSnapshot(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no periodic regime within {periods} periods (last distance {distance:e})")]
    NoConvergence { periods: usize, distance: f64 },
}

/// A distribution over `n1..=n2` at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySnapshot {
    n1: i64,
    n2: i64,
    probs: Vec<f64>,
    time: f64,
}

impl ProbabilitySnapshot {
    pub fn new(n1: i64, n2: i64, probs: Vec<f64>, time: f64) -> Result<Self, SolverError> {
        if n2 < n1 || probs.len() as i64 != n2 - n1 + 1 {
            return Err(SolverError::InvalidSnapshot(format!(
                "{} probabilities for window ({n1}, {n2})",
                probs.len()
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(SolverError::InvalidSnapshot(format!("time {time}")));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < -NEGATIVE_TOL)
        {
            return Err(SolverError::InvalidSnapshot(format!("p[{}] = {p}", n1 + i as i64)));
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p.max(0.0)).collect();
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(SolverError::InvalidSnapshot(format!("total mass {mass}")));
        }
        Ok(ProbabilitySnapshot { n1, n2, probs, time })
    }

    /// Point mass at `x` on the window `n1..=n2`.
    pub fn delta(n1: i64, n2: i64, x: i64) -> Self {
        assert!(n1 <= x && x <= n2, "state {x} outside ({n1}, {n2})");
        let mut probs = vec![0.0; (n2 - n1 + 1) as usize];
        probs[(x - n1) as usize] = 1.0;
        ProbabilitySnapshot {
            n1,
            n2,
            probs,
            time: 0.0,
        }
    }

    pub fn n1(&self) -> i64 {
        self.n1
    }

    pub fn n2(&self) -> i64 {
        self.n2
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P{X = k}`, zero outside the window.
    pub fn prob(&self, k: i64) -> f64 {
        if k < self.n1 || k > self.n2 {
            0.0
        } else {
            self.probs[(k - self.n1) as usize]
        }
    }

    pub fn states(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, p)| (self.n1 + i as i64, *p))
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn l1_distance(&self, other: &ProbabilitySnapshot) -> f64 {
        let lo = self.n1.min(other.n1);
        let hi = self.n2.max(other.n2);
        (lo..=hi).map(|k| (self.prob(k) - other.prob(k)).abs()).sum()
    }

    /// `P{X <= -n} + P{X >= n}`.
    pub fn tail(&self, n: i64) -> f64 {
        self.states().filter(|(k, _)| k.abs() >= n).map(|(_, p)| p).sum()
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// The same distribution on a different window; fails if mass would be lost.
    pub fn embed(&self, n1: i64, n2: i64) -> Result<Self, SolverError> {
        let outside: f64 = self.states().filter(|(k, _)| *k < n1 || *k > n2).map(|(_, p)| p).sum();
        if outside > 0.0 {
            return Err(SolverError::OutsideWindow { n1, n2, mass: outside });
        }
        let probs = (n1..=n2).map(|k| self.prob(k)).collect();
        Ok(ProbabilitySnapshot {
            n1,
            n2,
            probs,
            time: self.time,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of `X` under the snapshot.
pub fn moments(s: &ProbabilitySnapshot) -> Moments {
    let mean: f64 = s.states().map(|(k, p)| k as f64 * p).sum();
    let variance: f64 = s
        .states()
        .map(|(k, p)| {
            let c = k as f64 - mean;
            c * c * p
        })
        .sum();
    Moments {
        mean,
        variance: variance.max(0.0),
    }
}

/// Snapshots at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    snapshots: Vec<ProbabilitySnapshot>,
}

impl Trajectory {
    pub fn snapshots(&self) -> &[ProbabilitySnapshot] {
        &self.snapshots
    }

    pub fn first(&self) -> &ProbabilitySnapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &ProbabilitySnapshot {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn moments(&self) -> Vec<Moments> {
        self.snapshots.iter().map(moments).collect()
    }

    /// `t,k,p`, one row per time and state.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "t,k,p")?;
        for s in &self.snapshots {
            for (k, p) in s.states() {
                writeln!(out, "{},{k},{}", fmt17(s.time), fmt17(p))?;
            }
        }
        Ok(())
    }

    /// `t,mean,variance,mass`
    pub fn write_moments_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "t,mean,variance,mass")?;
        for s in &self.snapshots {
            let m = moments(s);
            writeln!(
                out,
                "{},{},{},{}",
                fmt17(s.time),
                fmt17(m.mean),
                fmt17(m.variance),
                fmt17(s.mass())
            )?;
        }
        Ok(())
    }
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Default step: `min(1e-3, 0.05/Δ)`.
pub fn default_step(model: &RateModel) -> f64 {
    let delta = model.global_bound();
    if delta > 0.0 {
        (0.05 / delta).min(1e-3)
    } else {
        1e-3
    }
}

/// Rates on a window, with each band's time profile evaluated once per time.
struct WindowRates {
    exprs: Vec<RateExpr>,
    values: Vec<f64>,
    birth: Vec<(usize, f64)>,
    death: Vec<(usize, f64)>,
}

impl WindowRates {
    fn new(model: &RateModel, n1: i64, n2: i64) -> Self {
        let mut exprs = Vec::new();
        let mut slot = |e: RateExpr| match exprs.iter().position(|x| *x == e) {
            Some(i) => i,
            None => {
                exprs.push(e);
                exprs.len() - 1
            }
        };
        let mut birth = Vec::with_capacity((n2 - n1 + 1) as usize);
        let mut death = Vec::with_capacity((n2 - n1 + 1) as usize);
        for i in n1..=n2 {
            let b = model.birth_band(i);
            let d = model.death_band(i);
            // truncation: nothing leaves the window
            let bf = if i == n2 { 0.0 } else { b.factor.eval(i) };
            let df = if i == n1 { 0.0 } else { d.factor.eval(i) };
            birth.push((slot(b.expr), bf));
            death.push((slot(d.expr), df));
        }
        let values = vec![0.0; exprs.len()];
        WindowRates {
            exprs,
            values,
            birth,
            death,
        }
    }

    fn fill(&mut self, t: f64, lam: &mut [f64], mu: &mut [f64]) {
        for (v, e) in self.values.iter_mut().zip(&self.exprs) {
            *v = e.eval(t);
        }
        for (l, (e, f)) in lam.iter_mut().zip(&self.birth) {
            *l = if *f == 0.0 { 0.0 } else { f * self.values[*e] };
        }
        for (m, (e, f)) in mu.iter_mut().zip(&self.death) {
            *m = if *f == 0.0 { 0.0 } else { f * self.values[*e] };
        }
    }
}

struct Stepper {
    rates: WindowRates,
    lam: Vec<f64>,
    mu: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

fn derivative(lam: &[f64], mu: &[f64], p: &[f64], out: &mut [f64]) {
    let n = p.len();
    for i in 0..n {
        let mut v = -(lam[i] + mu[i]) * p[i];
        if i > 0 {
            v += lam[i - 1] * p[i - 1];
        }
        if i + 1 < n {
            v += mu[i + 1] * p[i + 1];
        }
        out[i] = v;
    }
}

impl Stepper {
    fn new(model: &RateModel, n1: i64, n2: i64) -> Self {
        let n = (n2 - n1 + 1) as usize;
        Stepper {
            rates: WindowRates::new(model, n1, n2),
            lam: vec![0.0; n],
            mu: vec![0.0; n],
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, p: &mut [f64], t: f64, h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        self.rates.fill(t, &mut self.lam, &mut self.mu);
        derivative(&self.lam, &self.mu, p, k1);

        self.rates.fill(t + 0.5 * h, &mut self.lam, &mut self.mu);
        for ((x, p), k) in self.tmp.iter_mut().zip(p.iter()).zip(k1.iter()) {
            *x = p + 0.5 * h * k;
        }
        derivative(&self.lam, &self.mu, &self.tmp, k2);
        for ((x, p), k) in self.tmp.iter_mut().zip(p.iter()).zip(k2.iter()) {
            *x = p + 0.5 * h * k;
        }
        derivative(&self.lam, &self.mu, &self.tmp, k3);

        self.rates.fill(t + h, &mut self.lam, &mut self.mu);
        for ((x, p), k) in self.tmp.iter_mut().zip(p.iter()).zip(k3.iter()) {
            *x = p + h * k;
        }
        derivative(&self.lam, &self.mu, &self.tmp, k4);

        for i in 0..p.len() {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Integrates from `t0` to `t1` with the largest uniform step `<= dt`.
    fn advance(&mut self, p: &mut [f64], t0: f64, t1: f64, dt: f64) {
        let n = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        for s in 0..n {
            self.step(p, t0 + s as f64 * h, h);
        }
    }
}

/// `dt` limit for the window: `0.1 / (2·max_i(λ̄_i + μ̄_i))`.
pub fn max_step(model: &RateModel, n1: i64, n2: i64) -> f64 {
    let norm = 2.0
        * (n1..=n2)
            .map(|i| model.birth_bound(i) + model.death_bound(i))
            .fold(0.0, f64::max);
    if norm > 0.0 {
        STEP_LIMIT / norm
    } else {
        f64::INFINITY
    }
}

fn checked_snapshot(n1: i64, n2: i64, p: &[f64], t: f64) -> Result<ProbabilitySnapshot, SolverError> {
    if let Some((i, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < -NEGATIVE_TOL)
    {
        return Err(SolverError::NegativeProbability {
            t,
            k: n1 + i as i64,
            value: *v,
        });
    }
    let mass: f64 = p.iter().sum();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(SolverError::MassDrift { t, mass });
    }
    Ok(ProbabilitySnapshot {
        n1,
        n2,
        probs: p.iter().map(|v| v.max(0.0)).collect(),
        time: t,
    })
}

/// Solves the forward equations on `window` from `p0` (at `p0.time()`) up
/// to the absolute time `t_end`, recording a snapshot every `output_every`
/// and at `t_end`.
pub fn integrate(
    model: &RateModel,
    window: (i64, i64),
    p0: &ProbabilitySnapshot,
    t_end: f64,
    dt: f64,
    output_every: f64,
) -> Result<Trajectory, SolverError> {
    let (n1, n2) = window;
    if n2 <= n1 {
        return Err(SolverError::InvalidArgument(format!("empty window ({n1}, {n2})")));
    }
    if !(dt > 0.0 && output_every > 0.0 && t_end > p0.time) {
        return Err(SolverError::InvalidArgument(format!(
            "need dt > 0, output_every > 0 and t_end > {} (got {dt}, {output_every}, {t_end})",
            p0.time
        )));
    }
    let max = max_step(model, n1, n2);
    if dt > max {
        return Err(SolverError::StepTooLarge { dt, max });
    }
    let start = p0.embed(n1, n2)?;
    let mut p = start.probs.clone();
    let mut stepper = Stepper::new(model, n1, n2);
    let mut snapshots = vec![start];
    let mut t = p0.time;
    let mut k = 1u64;
    loop {
        let target = (p0.time + k as f64 * output_every).min(t_end);
        let next = if t_end - target <= 1e-12 * t_end.max(1.0) {
            t_end
        } else {
            target
        };
        stepper.advance(&mut p, t, next, dt);
        t = next;
        snapshots.push(checked_snapshot(n1, n2, &p, t)?);
        if t >= t_end {
            break;
        }
        k += 1;
    }
    Ok(Trajectory { snapshots })
}

#[derive(Debug, Clone, Copy)]
pub struct CycleOptions {
    /// Start scanning here; defaults to the initial snapshot's time.
    pub t_hint: Option<f64>,
    pub dt: Option<f64>,
    pub samples_per_period: usize,
    pub max_periods: usize,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            t_hint: None,
            dt: None,
            samples_per_period: 100,
            max_periods: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LimitingCycle {
    /// One period of the periodic regime, endpoints included.
    pub trajectory: Trajectory,
    /// `‖p(start + period) − p(start)‖₁`
    pub distance: f64,
    pub start: f64,
}

/// Runs forward period by period until `‖p(t + period) − p(t)‖₁ < tol`
/// and returns that period.
pub fn limiting_cycle(
    model: &RateModel,
    window: (i64, i64),
    p0: &ProbabilitySnapshot,
    period: f64,
    tol: f64,
    opts: CycleOptions,
) -> Result<LimitingCycle, SolverError> {
    if !(period > 0.0 && tol > 0.0 && opts.samples_per_period > 0) {
        return Err(SolverError::InvalidArgument(
            "period, tol and samples must be positive".into(),
        ));
    }
    let dt = opts.dt.unwrap_or_else(|| default_step(model));
    let mut current = p0.embed(window.0, window.1)?;
    if let Some(hint) = opts.t_hint.filter(|h| *h > p0.time) {
        current = integrate(model, window, &current, hint, dt, hint - p0.time)?
            .last()
            .clone();
    }
    let mut distance = f64::INFINITY;
    for _ in 0..opts.max_periods {
        let start = current.time;
        let traj = integrate(
            model,
            window,
            &current,
            start + period,
            dt,
            period / opts.samples_per_period as f64,
        )?;
        distance = traj.last().l1_distance(&current);
        if distance < tol {
            return Ok(LimitingCycle {
                trajectory: traj,
                distance,
                start,
            });
        }
        current = traj.last().clone();
    }
    Err(SolverError::NoConvergence {
        periods: opts.max_periods,
        distance,
    })
}

//! Exact path sampling by thinning.
//!
//! While the process sits in state `i`, candidate events arrive as a
//! Poisson stream of rate `R_i = λ̄_i + μ̄_i`. A candidate at time `t` is a
//! birth with probability `λ_i(t)/R_i`, a death with probability
//! `μ_i(t)/R_i`, and is discarded otherwise.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! so histograms do not depend on how paths are scheduled across threads.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::model::{RateModel, Rates};
use crate::solver::{fmt17, ProbabilitySnapshot};

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub seed: u64,
    pub jump_times: Vec<f64>,
    /// `states[0]` is the start; `states[j+1]` is entered at `jump_times[j]`.
    pub states: Vec<i64>,
    pub t_end: f64,
}

impl PathSample {
    /// State occupied at time `t`.
    pub fn state_at(&self, t: f64) -> i64 {
        let jumps = self.jump_times.partition_point(|s| *s <= t);
        self.states[jumps]
    }
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn run_path(model: &RateModel, x0: i64, t_end: f64, rng: &mut impl Rng, mut on_jump: impl FnMut(f64, i64)) -> i64 {
    let mut state = x0;
    let mut t = 0.0;
    loop {
        let (lam_bar, mu_bar) = model.rate_upper_bounds(state);
        let dominating = lam_bar + mu_bar;
        if dominating <= 0.0 {
            // absorbing: rates can never exceed their zero bounds
            return state;
        }
        let wait: f64 = rng.sample(Exp1);
        t += wait / dominating;
        if t > t_end {
            return state;
        }
        let u = rng.random::<f64>() * dominating;
        let lam = model.birth_rate(state, t);
        if u < lam {
            state += 1;
        } else if u < lam + model.death_rate(state, t) {
            state -= 1;
        } else {
            continue;
        }
        on_jump(t, state);
    }
}

/// One path on `[0, t_end]` from `x0`; identical for identical seeds.
pub fn sample_path(model: &RateModel, x0: i64, t_end: f64, seed: u64) -> PathSample {
    assert!(t_end > 0.0, "t_end must be positive");
    let mut rng = path_rng(seed, 0);
    let mut jump_times = Vec::new();
    let mut states = vec![x0];
    run_path(model, x0, t_end, &mut rng, |t, s| {
        jump_times.push(t);
        states.push(s);
    });
    PathSample {
        seed,
        jump_times,
        states,
        t_end,
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    /// Histogram of `X(t)` on the observed support.
    pub snapshot: ProbabilitySnapshot,
    /// `sqrt(p̂(1 − p̂)/n)` per state of the snapshot window.
    pub stderr: Vec<f64>,
    pub n_paths: u64,
    pub seed: u64,
}

impl EmpiricalDistribution {
    pub fn stderr_of(&self, k: i64) -> f64 {
        let s = &self.snapshot;
        if k < s.n1() || k > s.n2() {
            0.0
        } else {
            self.stderr[(k - s.n1()) as usize]
        }
    }

    /// `k,p_hat,stderr,n_paths,seed,t`
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "k,p_hat,stderr,n_paths,seed,t")?;
        for ((k, p), se) in self.snapshot.states().zip(&self.stderr) {
            writeln!(
                out,
                "{k},{},{},{},{},{}",
                fmt17(p),
                fmt17(*se),
                self.n_paths,
                self.seed,
                fmt17(self.snapshot.time())
            )?;
        }
        Ok(())
    }
}

/// Histogram of `X(t)` over `n_paths` independent paths started at `x0`.
pub fn empirical_distribution(model: &RateModel, x0: i64, t: f64, n_paths: u64, seed: u64) -> EmpiricalDistribution {
    assert!(n_paths >= 1, "need at least one path");
    assert!(t > 0.0, "t must be positive");
    let counts: BTreeMap<i64, u64> = (0..n_paths)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc, path| {
            let mut rng = path_rng(seed, path);
            *acc.entry(run_path(model, x0, t, &mut rng, |_, _| {})).or_insert(0u64) += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            a
        });
    let n1 = *counts.keys().next().expect("at least one path");
    let n2 = *counts.keys().next_back().expect("at least one path");
    let n = n_paths as f64;
    let probs: Vec<f64> = (n1..=n2)
        .map(|k| counts.get(&k).copied().unwrap_or(0) as f64 / n)
        .collect();
    let stderr = probs.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    let snapshot = ProbabilitySnapshot::new(n1, n2, probs, t).expect("histogram is a distribution");
    EmpiricalDistribution {
        snapshot,
        stderr,
        n_paths,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rates_never_move() {
        let m = RateModel::constant(0.0, 0.0).unwrap();
        let path = sample_path(&m, 0, 10.0, 7);
        assert!(path.jump_times.is_empty());
        assert_eq!(path.states, vec![0]);
    }

    #[test]
    fn same_seed_same_path() {
        let m = RateModel::example_random_walk();
        assert_eq!(sample_path(&m, 0, 5.0, 42), sample_path(&m, 0, 5.0, 42));
        assert_ne!(sample_path(&m, 0, 5.0, 42), sample_path(&m, 0, 5.0, 43));
    }

    #[test]
    fn paths_take_unit_steps_in_increasing_time() {
        let m = RateModel::example_taxi_queue();
        let path = sample_path(&m, 3, 20.0, 1);
        assert_eq!(path.states.len(), path.jump_times.len() + 1);
        assert!(path.states.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
        assert!(path.jump_times.windows(2).all(|w| w[0] < w[1]));
        assert!(path.jump_times.iter().all(|t| *t > 0.0 && *t <= 20.0));
        assert_eq!(path.state_at(0.0), 3);
    }

    #[test]
    fn single_path_histogram_is_one_hot() {
        let m = RateModel::example_random_walk();
        let e = empirical_distribution(&m, 0, 2.0, 1, 9);
        assert_eq!(e.snapshot.probs().iter().filter(|p| **p == 1.0).count(), 1);
        assert_eq!(e.snapshot.n1(), e.snapshot.n2());
    }

    #[test]
    fn histogram_is_reproducible_across_thread_counts() {
        let m = RateModel::example_taxi_queue();
        let a = empirical_distribution(&m, 0, 3.0, 5000, 11);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| empirical_distribution(&m, 0, 3.0, 5000, 11));
        assert_eq!(a.snapshot, b.snapshot);
    }

    #[test]
    fn histogram_csv_header() {
        let m = RateModel::constant(1.0, 1.0).unwrap();
        let e = empirical_distribution(&m, 0, 1.0, 100, 3);
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,p_hat,stderr,n_paths,seed,t\n"));
        assert_eq!(text.lines().count() as i64, 1 + e.snapshot.n2() - e.snapshot.n1() + 1);
    }
}

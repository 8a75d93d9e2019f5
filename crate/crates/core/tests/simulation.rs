mod common;

use bilateral_bdp::bounds::{self, EnvelopeStrategy, TailSide};
use bilateral_bdp::cli::builtin_weights;
use bilateral_bdp::model::{RateBand, RateExpr, StateFactor};
use bilateral_bdp::simulate::{empirical_distribution, sample_path};
use bilateral_bdp::solver::{self, ProbabilitySnapshot};
use bilateral_bdp::RateModel;
use common::skellam_pmf;

#[test]
fn histogram_agrees_with_skellam_within_three_sigma() {
    let m = RateModel::constant(2.0, 1.0).unwrap();
    let n = 200_000;
    let e = empirical_distribution(&m, 0, 1.5, n, 99);
    for k in -4..=8 {
        let exact = skellam_pmf(k, 2.0, 1.0, 1.5);
        let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((e.snapshot.prob(k) - exact).abs() <= 3.0 * sigma, "k={k}");
    }
}

#[test]
fn histogram_agrees_with_the_solver_on_the_taxi_queue() {
    let m = RateModel::example_taxi_queue();
    let n = 200_000;
    let e = empirical_distribution(&m, 0, 2.0, n, 5);
    let p0 = ProbabilitySnapshot::delta(-60, 60, 0);
    let ode = solver::integrate(&m, (-60, 60), &p0, 2.0, 1e-3, 2.0).unwrap();
    let ode = ode.last();
    for k in -3..=3 {
        let p = ode.prob(k);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((e.snapshot.prob(k) - p).abs() <= 3.5 * sigma, "k={k}");
    }
}

#[test]
fn empirical_tails_respect_the_concentration_bound() {
    let m = RateModel::example_random_walk();
    let w = builtin_weights("ex1").unwrap();
    let env = bounds::fit_envelope(&m, &w, EnvelopeStrategy::Pointwise, 1.0).unwrap();
    let p0 = ProbabilitySnapshot::delta(0, 0, 0);
    let e = empirical_distribution(&m, 0, 5.0, 50_000, 17);
    for n in [1, 2, 3, 5] {
        let bound = bounds::tail_bound(&m, &w, &env, &p0, n, 5.0, TailSide::Both).value;
        assert!(e.snapshot.tail(n) <= bound, "N={n}");
    }
}

#[test]
fn same_seed_same_histogram() {
    let m = RateModel::example_random_walk();
    let a = empirical_distribution(&m, 0, 1.0, 10_000, 3);
    let b = empirical_distribution(&m, 0, 1.0, 10_000, 3);
    assert_eq!(a.snapshot, b.snapshot);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn sampled_paths_only_jump_where_rates_allow() {
    // no births below zero and no deaths above: the walk never leaves 0
    let band = |lo, hi, rate| RateBand::new(lo, hi, RateExpr::constant(rate).unwrap(), StateFactor::One);
    let m = RateModel::new(
        "pinned",
        1,
        vec![band(i64::MIN, -1, 1.0), band(0, i64::MAX, 0.0)],
        vec![band(i64::MIN, 0, 0.0), band(1, i64::MAX, 1.0)],
    )
    .unwrap();
    let path = sample_path(&m, 0, 50.0, 8);
    assert_eq!(path.states, vec![0]);
    let from_three = sample_path(&m, 3, 50.0, 8);
    assert!(from_three.states.windows(2).all(|w| w[1] == w[0] - 1));
    assert_eq!(*from_three.states.last().unwrap(), 0);
}

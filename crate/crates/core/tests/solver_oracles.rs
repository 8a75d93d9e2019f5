mod common;

use bilateral_bdp::solver::{self, CycleOptions, ProbabilitySnapshot, SolverError};
use bilateral_bdp::RateModel;
use common::skellam_pmf;

#[test]
fn skellam_law_with_unequal_rates() {
    let m = RateModel::constant(2.0, 1.0).unwrap();
    let p0 = ProbabilitySnapshot::delta(-200, 200, 0);
    let p = solver::integrate(&m, (-200, 200), &p0, 2.0, 1e-3, 0.5).unwrap();
    for s in p.snapshots().iter().skip(1) {
        for k in -200..=200 {
            let exact = skellam_pmf(k, 2.0, 1.0, s.time());
            assert!((s.prob(k) - exact).abs() < 1e-9, "t={} k={k}", s.time());
        }
    }
}

#[test]
fn skellam_from_a_shifted_start() {
    let m = RateModel::constant(1.0, 1.0).unwrap();
    let p0 = ProbabilitySnapshot::delta(-100, 100, 3);
    let p = solver::integrate(&m, (-100, 100), &p0, 1.0, 1e-3, 1.0).unwrap();
    for k in -10..=16 {
        assert!((p.last().prob(k) - skellam_pmf(k - 3, 1.0, 1.0, 1.0)).abs() < 1e-9);
    }
}

#[test]
fn halving_the_step_cuts_the_error_sixteenfold() {
    let m = RateModel::constant(2.0, 1.0).unwrap();
    let p0 = ProbabilitySnapshot::delta(-60, 60, 0);
    let run = |dt: f64| {
        solver::integrate(&m, (-60, 60), &p0, 1.0, dt, 1.0)
            .unwrap()
            .last()
            .clone()
    };
    let (a, b, c) = (run(0.016), run(0.008), run(0.004));
    let ratio = a.l1_distance(&b) / b.l1_distance(&c);
    assert!((13.0..=19.0).contains(&ratio), "{ratio}");
}

#[test]
fn oversized_steps_are_refused() {
    let m = RateModel::example_random_walk();
    let p0 = ProbabilitySnapshot::delta(-10, 10, 0);
    let max = solver::max_step(&m, -10, 10);
    assert!((max - 0.1 / 16.0).abs() < 1e-15);
    let err = solver::integrate(&m, (-10, 10), &p0, 1.0, 2.0 * max, 0.5).unwrap_err();
    assert!(matches!(err, SolverError::StepTooLarge { .. }));
}

#[test]
fn initial_mass_outside_the_window_is_an_error() {
    let m = RateModel::example_taxi_queue();
    let p0 = ProbabilitySnapshot::delta(-10, 10, 8);
    let err = solver::integrate(&m, (-5, 5), &p0, 1.0, 1e-3, 0.5).unwrap_err();
    assert!(matches!(err, SolverError::OutsideWindow { .. }));
}

#[test]
fn output_grid_lands_on_requested_times() {
    let m = RateModel::example_taxi_queue();
    let p0 = ProbabilitySnapshot::delta(-30, 30, 0);
    let traj = solver::integrate(&m, (-30, 30), &p0, 1.0, 1e-3, 0.3).unwrap();
    let times = traj.times();
    assert_eq!(times.len(), 5);
    assert_eq!(times[0], 0.0);
    assert!((times[3] - 0.9).abs() < 1e-12);
    assert_eq!(*times.last().unwrap(), 1.0);
}

#[test]
fn random_walk_cycle_is_symmetric_and_periodic() {
    let m = RateModel::example_random_walk();
    let p0 = ProbabilitySnapshot::delta(-60, 60, 0);
    let cycle = solver::limiting_cycle(&m, (-60, 60), &p0, 1.0, 1e-9, CycleOptions::default()).unwrap();
    assert!(cycle.distance < 1e-9);
    for s in cycle.trajectory.snapshots() {
        for k in 1..=20 {
            assert!((s.prob(k) - s.prob(-k)).abs() < 1e-12);
        }
    }
    let first = cycle.trajectory.first();
    let last = cycle.trajectory.last();
    assert!((last.time() - first.time() - 1.0).abs() < 1e-12);
}

#[test]
fn trajectory_csv_is_long_format() {
    let m = RateModel::constant(1.0, 1.0).unwrap();
    let p0 = ProbabilitySnapshot::delta(-2, 2, 0);
    let traj = solver::integrate(&m, (-2, 2), &p0, 0.5, 1e-3, 0.25).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,k,p"));
    assert_eq!(lines.count(), 3 * 5);
    let mut buf = Vec::new();
    traj.write_moments_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("t,mean,variance,mass\n"));
}

#[test]
fn drifting_skellam_on_a_wide_window() {
    let m = RateModel::constant(2.0, 1.0).unwrap();
    let p0 = ProbabilitySnapshot::delta(-400, 400, 0);
    let traj = solver::integrate(&m, (-400, 400), &p0, 1.0, 1e-3, 1.0).unwrap();
    let p = traj.last();
    for k in -400..=400 {
        assert!((p.prob(k) - skellam_pmf(k, 2.0, 1.0, 1.0)).abs() <= 1e-8, "k={k}");
    }
    assert!((solver::moments(p).mean - 1.0).abs() < 1e-10);
}

//! Tail bounds for Pr(|X(t)| >= N), set against the solved distribution.
//!
//! cargo run --example concentration

use bilateral_bdp::bounds::{self, EnvelopeStrategy, TailSide};
use bilateral_bdp::cli::builtin_weights;
use bilateral_bdp::solver;
use bilateral_bdp::{ProbabilitySnapshot, RateModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = RateModel::example_taxi_queue();
    let w = builtin_weights("ex2").expect("built-in");
    let env = bounds::fit_envelope(&model, &w, EnvelopeStrategy::Pointwise, 1.0)?;
    let p0 = ProbabilitySnapshot::delta(-100, 100, 0);
    let traj = solver::integrate(&model, (-100, 100), &p0, 10.0, solver::default_step(&model), 1.0)?;

    println!("{:>4} {:>5} {:>12} {:>12}", "N", "t", "Pr(|X|>=N)", "bound");
    for n in [5, 10, 20] {
        for t in [1usize, 5, 10] {
            let exact = traj.snapshots()[t].tail(n);
            let bound = bounds::tail_bound(&model, &w, &env, &p0, n, t as f64, TailSide::Both).value;
            println!("{n:>4} {t:>5} {exact:>12.3e} {bound:>12.3e}");
        }
        let limit = bounds::tail_bound(&model, &w, &env, &p0, n, f64::INFINITY, TailSide::Both).value;
        println!("{n:>4} {:>5} {:>12} {limit:>12.3e}", "∞", "");
    }
    Ok(())
}

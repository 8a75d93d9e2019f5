//! Simulate sample paths by thinning and compare the histogram with the
//! solver.
//!
//! cargo run --release --example monte_carlo -- 100000

use bilateral_bdp::simulate::{empirical_distribution, sample_path};
use bilateral_bdp::solver;
use bilateral_bdp::{ProbabilitySnapshot, RateModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(100_000);
    let model = RateModel::example_taxi_queue();

    let path = sample_path(&model, 0, 2.0, 7);
    println!(
        "one path: {} jumps, X(1) = {}, X(2) = {}",
        path.jump_times.len(),
        path.state_at(1.0),
        path.state_at(2.0)
    );

    let hist = empirical_distribution(&model, 0, 5.0, n, 1);
    let p0 = ProbabilitySnapshot::delta(-100, 100, 0);
    let exact = solver::integrate(&model, (-100, 100), &p0, 5.0, solver::default_step(&model), 5.0)?;
    let exact = exact.last();
    println!("{:>4} {:>9} {:>9} {:>7}", "k", "p_hat", "p", "z");
    for k in -4..=4 {
        let se = hist.stderr_of(k).max(f64::MIN_POSITIVE);
        let z = (hist.snapshot.prob(k) - exact.prob(k)) / se;
        println!("{k:>4} {:>9.5} {:>9.5} {z:>7.2}", hist.snapshot.prob(k), exact.prob(k));
    }
    println!("l1 distance {:.4}", hist.snapshot.l1_distance(exact));
    Ok(())
}

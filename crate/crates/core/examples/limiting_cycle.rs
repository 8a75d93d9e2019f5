//! Run into the periodic limiting regime and print one period of it.
//!
//! cargo run --example limiting_cycle

use bilateral_bdp::solver::{self, CycleOptions};
use bilateral_bdp::{ProbabilitySnapshot, RateModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for model in [RateModel::example_random_walk(), RateModel::example_taxi_queue()] {
        let window = (-150, 150);
        let p0 = ProbabilitySnapshot::delta(window.0, window.1, 0);
        let opts = CycleOptions {
            samples_per_period: 8,
            ..CycleOptions::default()
        };
        let cycle = solver::limiting_cycle(&model, window, &p0, 1.0, 1e-7, opts)?;
        println!(
            "{}: periodic from t = {} (‖p(t+1) − p(t)‖ = {:.2e})",
            model.name, cycle.start, cycle.distance
        );
        println!(
            "  {:>6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "t", "p-5", "p-2", "p0", "p2", "p5", "mean", "var"
        );
        for (s, m) in cycle.trajectory.snapshots().iter().zip(cycle.trajectory.moments()) {
            let p: Vec<String> = [-5, -2, 0, 2, 5]
                .iter()
                .map(|k| format!("{:>9.5}", s.prob(*k)))
                .collect();
            println!(
                "  {:>6.3} {} {:>9.5} {:>9.5}",
                s.time(),
                p.join(" "),
                m.mean,
                m.variance
            );
        }
    }
    Ok(())
}

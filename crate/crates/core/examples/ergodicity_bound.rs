//! Fit the exponential envelope (M, β) and evaluate the contraction bound.
//!
//! cargo run --example ergodicity_bound

use bilateral_bdp::bounds::{self, EnvelopeStrategy};
use bilateral_bdp::cli::builtin_weights;
use bilateral_bdp::{ProbabilitySnapshot, RateModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["ex1", "ex2"] {
        let model = RateModel::builtin(name).expect("built-in");
        let w = builtin_weights(name).expect("built-in");
        let pointwise = bounds::fit_envelope(&model, &w, EnvelopeStrategy::Pointwise, 1.0)?;
        let average = bounds::fit_envelope(&model, &w, EnvelopeStrategy::PeriodAverage, 1.0)?;
        println!(
            "{name}: pointwise M={} β={:.6}; period-average M={:.4} β={:.6}",
            pointwise.m, pointwise.beta, average.m, average.beta
        );
        println!(
            "  β** at t = 0, 0.25, 0.75: {:.4} {:.4} {:.4}",
            bounds::beta_inf(&model, &w, 0.0),
            bounds::beta_inf(&model, &w, 0.25),
            bounds::beta_inf(&model, &w, 0.75)
        );

        let p = ProbabilitySnapshot::delta(-5, 5, 0);
        let q = ProbabilitySnapshot::delta(-5, 5, 5);
        for t in [0.0, 1.0, 5.0, 10.0] {
            let b = bounds::contraction_bound(&w, &pointwise, &p, &q, t);
            println!("  t={t:>4}: ‖p − q‖ bound {:.3e}", b.value);
        }
    }

    // a sequence that grows too fast certifies nothing
    let too_steep = bilateral_bdp::WeightSequence::mirror_geometric(2.0)?;
    let err = bounds::fit_envelope(
        &RateModel::example_random_walk(),
        &too_steep,
        EnvelopeStrategy::Pointwise,
        1.0,
    )
    .unwrap_err();
    println!("ratio 2 on ex1: {err}");
    Ok(())
}

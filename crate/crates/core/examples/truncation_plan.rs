//! Choose a truncation window for a target accuracy and report the bounds.
//!
//! cargo run --example truncation_plan -- 1e-6

use bilateral_bdp::bounds::{self, EnvelopeConstants};
use bilateral_bdp::cli::builtin_weights;
use bilateral_bdp::RateModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1e-6);
    let cases = [
        (
            "ex1",
            EnvelopeConstants::new(1.0, 13.0 / 28.0)?,
            EnvelopeConstants::new(1.0, 1.0 / 3.0)?,
        ),
        (
            "ex2",
            EnvelopeConstants::new(1.0, 0.09375)?,
            EnvelopeConstants::new(1.0, 0.09375)?,
        ),
    ];
    for (name, env, env_star) in cases {
        let model = RateModel::builtin(name).expect("built-in");
        let w = builtin_weights(name).expect("built-in");
        let w_star = builtin_weights(&format!("{name}-star")).expect("built-in");
        let (n1, n2) = bounds::plan_truncation(&model, &w, &w_star, &env, &env_star, eps)?;
        let plan = bounds::truncation_bound(&model, &w, &w_star, &env, &env_star, n1, n2)?;
        let at150 = bounds::truncation_bound(&model, &w, &w_star, &env, &env_star, -150, 150)?;
        let w_const = bounds::w_constant(&w, 1000)?;
        let mean = bounds::mean_error_bound(at150.weighted, w_const);
        println!("{name}: eps={eps:e} -> window ({n1}, {n2}), bound {:.3e}", plan.value);
        println!(
            "  at (-150, 150): bound {:.3e}, weighted {:.3e}, mean error {:.3e} (W = {w_const})",
            at150.value, at150.weighted, mean.value
        );
    }
    Ok(())
}

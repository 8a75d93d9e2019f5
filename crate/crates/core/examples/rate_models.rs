//! Build rate models in code and from JSON, then inspect their rates.
//!
//! cargo run --example rate_models

use bilateral_bdp::model::{RateBand, RateExpr, StateFactor};
use bilateral_bdp::{load_model, RateModel, Rates};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let walk = RateModel::example_random_walk();
    println!(
        "{}: horizon {}, period {:?}",
        walk.name,
        walk.horizon(),
        walk.common_period()
    );
    for i in -3..=3 {
        let (lam, mu) = walk.rate_upper_bounds(i);
        println!(
            "  i={i:>2}  λ(0.25)={:.3}  μ(0.25)={:.3}  bounds ({lam}, {mu})",
            walk.birth_rate(i, 0.25),
            walk.death_rate(i, 0.25)
        );
    }

    // a two-server queue with time-varying arrivals, written by hand
    let arrivals = RateExpr::new(1.5, 0.5, 0.0, 1.0)?;
    let service = RateExpr::constant(1.0)?;
    let queue = RateModel::new(
        "two-servers",
        2,
        vec![RateBand::everywhere(arrivals)],
        vec![
            RateBand::new(i64::MIN, 0, RateExpr::constant(0.5)?, StateFactor::One),
            RateBand::new(1, i64::MAX, service, StateFactor::MinLinear { cap: 2 }),
        ],
    )?;
    let json = queue.to_json();
    println!("{json}");
    assert_eq!(load_model(&json)?, queue);
    println!("global rate bound Δ = {}", queue.global_bound());
    Ok(())
}

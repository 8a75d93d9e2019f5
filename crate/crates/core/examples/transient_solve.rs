//! Solve the truncated forward equations and write trajectory CSVs.
//!
//! cargo run --example transient_solve -- out_dir

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use bilateral_bdp::solver::{self, moments};
use bilateral_bdp::{ProbabilitySnapshot, RateModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/transient".into()));
    std::fs::create_dir_all(&out)?;
    let model = RateModel::example_random_walk();
    let window = (-60, 60);
    let p0 = ProbabilitySnapshot::delta(window.0, window.1, 3);
    let traj = solver::integrate(&model, window, &p0, 5.0, solver::default_step(&model), 0.5)?;
    for s in traj.snapshots() {
        let m = moments(s);
        println!(
            "t={:>4.1}  mean={:>8.5}  variance={:>7.4}  P(X=0)={:.5}",
            s.time(),
            m.mean,
            m.variance,
            s.prob(0)
        );
    }
    traj.write_csv(BufWriter::new(File::create(out.join("trajectory.csv"))?))?;
    traj.write_moments_csv(BufWriter::new(File::create(out.join("moments.csv"))?))?;
    println!("wrote {}", out.display());
    Ok(())
}

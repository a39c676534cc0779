//! Learning-error decay in `N` for a five-asset max-call at desk scale.
//!
//! `cargo run --release --example rate_curve -- [seed]`

use kolmo_rfn::harness::{run_rate_curve, ExperimentSpec};

fn main() -> kolmo_rfn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut spec = ExperimentSpec::rate_curve_default();
    spec.master_seed = seed;
    let report = run_rate_curve(&spec)?;
    println!("{:>5} {:>10} {:>10} {:>9}", "N", "e_hat", "train", "ms");
    for r in &report.rows {
        println!(
            "{:>5} {:>10.5} {:>10.5} {:>9.0}",
            r.n,
            r.e_hat,
            r.train_risk.unwrap_or(f64::NAN),
            r.wall_ms
        );
    }
    println!("slope {:.3}", report.fitted_slope.unwrap_or(f64::NAN));
    Ok(())
}

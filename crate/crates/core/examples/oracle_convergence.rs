//! Training-free oracle weights for a smoothed tent: sup-grid error against
//! the exact convolution as the number of features grows.
//!
//! `cargo run --release --example oracle_convergence -- [seed]`

use kolmo_rfn::harness::{run_oracle_convergence, ExperimentKind, ExperimentSpec, OracleSettings};
use kolmo_rfn::payoff::Payoff;

fn main() -> kolmo_rfn::Result<()> {
    let mut spec = ExperimentSpec::rate_curve_default();
    spec.master_seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    spec.kind = ExperimentKind::OracleConvergence;
    spec.model = None;
    spec.payoff = Some(Payoff::unit_tent());
    spec.n_list = vec![25, 50, 100, 200, 400, 800];
    spec.oracle = Some(OracleSettings {
        c: 0.15,
        seeds: 20,
        grid_points: 201,
    });
    let report = run_oracle_convergence(&spec)?;
    println!("{:>5} {:>12}", "N", "mean sup err");
    for r in &report.rows {
        println!("{:>5} {:>12.4}", r.n, r.e_hat);
    }
    println!("slope {:.3}", report.fitted_slope.unwrap_or(f64::NAN));
    if let Some(r) = report.metric("error_ratio_100_400") {
        println!("e(100) / e(400) = {r:.3}");
    }
    Ok(())
}

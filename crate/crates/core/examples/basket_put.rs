//! Put prices as a function of strike, learned from simulated prices of a
//! single lognormal asset and compared with the closed form.
//!
//! `cargo run --release --example basket_put`

use kolmo_rfn::harness::{run_basket_put, BasketSettings, ExperimentKind, ExperimentSpec, ModelSpec};
use kolmo_rfn::training::{Method, SgdConfig, StepSize, TrainConfig};

fn main() -> kolmo_rfn::Result<()> {
    let mut spec = ExperimentSpec::rate_curve_default();
    spec.kind = ExperimentKind::BasketPut;
    spec.model = Some(ModelSpec::black_scholes(0.2, 0.0, 1));
    spec.payoff = None;
    spec.n_train = 50_000;
    spec.n_test = 5_000;
    spec.n_list = vec![25, 50, 100, 200];
    spec.basket = Some(BasketSettings {
        spot: vec![1.0],
        weights: vec![1.0],
        noise_std: 0.0,
        paths: 1000,
        reference_points: 101,
    });
    spec.trainers = vec![
        TrainConfig::default(),
        TrainConfig {
            method: Method::Constrained { lambda: 5.0 },
            cap: None,
        },
        TrainConfig {
            method: Method::Sgd(SgdConfig {
                lambda: 50.0,
                eta0: StepSize::Relative { relative: 0.5 },
                batch: None,
                steps: 20_000,
                seed: 0,
                average: false,
            }),
            cap: None,
        },
    ];
    let report = run_basket_put(&spec)?;
    let rmse = report.table("reference_rmse").and_then(|t| t.column("rmse")).unwrap_or_default();
    println!("{:>12} {:>5} {:>10} {:>12}", "trainer", "N", "e_hat", "closed-form");
    for (r, e) in report.rows.iter().zip(rmse) {
        println!("{:>12} {:>5} {:>10.2e} {:>12.2e}", r.method, r.n, r.e_hat, e);
    }
    Ok(())
}

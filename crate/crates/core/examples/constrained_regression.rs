//! The three trainers on one simulated dataset, with the dataset and model
//! written to disk and read back.
//!
//! `cargo run --release --example constrained_regression`

use kolmo_rfn::data::{Dataset, LabelKind};
use kolmo_rfn::levy::{gen_pde_dataset, LevyTriplet};
use kolmo_rfn::payoff::Payoff;
use kolmo_rfn::rfn::{HiddenWeights, RandomFeatureNet, WeightDistributionSpec};
use kolmo_rfn::training::{fit, prediction_error_estimate, Method, SgdConfig, StepSize, TrainConfig};

fn main() -> kolmo_rfn::Result<()> {
    let model = LevyTriplet::black_scholes_equal_correlation(0.2, 0.2, 3)?;
    let payoff = Payoff::MaxCall { strike: 1.0 };
    let train = gen_pde_dataset(&model, &payoff, 1.0, 1.0, 20_000, LabelKind::SingleDraw, 1)?;
    let test = gen_pde_dataset(&model, &payoff, 1.0, 1.0, 2_000, LabelKind::McPrice { paths: 500 }, 2)?;

    let dir = std::env::temp_dir().join("kolmo-rfn-example");
    std::fs::create_dir_all(&dir).map_err(|e| kolmo_rfn::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("train.csv");
    train.write(&path)?;
    let train = Dataset::read(&path)?;

    let hidden = HiddenWeights::sample(WeightDistributionSpec::default(), 80, 3, 3)?;
    let design = hidden.design_matrix(train.x())?;
    let configs = [
        TrainConfig::default(),
        TrainConfig { method: Method::Constrained { lambda: 2.0 }, cap: None },
        TrainConfig { method: Method::Constrained { lambda: 0.5 }, cap: Some(3.0) },
        TrainConfig {
            method: Method::Sgd(SgdConfig {
                lambda: 100.0,
                eta0: StepSize::Relative { relative: 0.5 },
                batch: None,
                steps: 50_000,
                seed: 4,
                average: false,
            }),
            cap: None,
        },
    ];
    println!("{:>12} {:>8} {:>10} {:>10} {:>8}", "method", "|W|", "train", "e_hat", "Lambda");
    for cfg in configs {
        let (w, diag) = fit(&design, train.y(), &cfg)?;
        let norm = w.norm();
        let net = RandomFeatureNet::new(hidden.clone(), w, cfg.cap)?;
        println!(
            "{:>12} {:>8.3} {:>10.5} {:>10.5} {:>8}",
            cfg.name(),
            norm,
            diag.empirical_risk,
            prediction_error_estimate(&net, &test)?,
            diag.lambda_multiplier.map(|l| format!("{l:.3}")).unwrap_or_default()
        );
    }
    Ok(())
}

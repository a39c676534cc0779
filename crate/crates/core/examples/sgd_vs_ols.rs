//! Projected SGD against the least-squares optimum on one fixed dataset.
//!
//! `cargo run --release --example sgd_vs_ols`

use kolmo_rfn::data::LabelKind;
use kolmo_rfn::harness::{run_sgd_vs_ols, ExperimentKind, ExperimentSpec, ModelSpec, SgdStudySettings};
use kolmo_rfn::payoff::Payoff;
use kolmo_rfn::training::{Method, SgdConfig, StepSize, TrainConfig};

fn main() -> kolmo_rfn::Result<()> {
    let spec = ExperimentSpec {
        kind: ExperimentKind::SgdVsOls,
        model: Some(ModelSpec::black_scholes(0.2, 0.2, 2)),
        payoff: Some(Payoff::MaxCall { strike: 1.0 }),
        n_train: 1000,
        n_test: 1000,
        n_list: vec![50],
        train: TrainConfig {
            method: Method::Sgd(SgdConfig {
                lambda: 1000.0,
                eta0: StepSize::Relative { relative: 0.5 },
                batch: Some(64),
                steps: 100_000,
                seed: 0,
                average: false,
            }),
            cap: None,
        },
        test_labels: LabelKind::McPrice { paths: 200 },
        sgd_study: Some(SgdStudySettings {
            seeds: 10,
            checkpoints: None,
        }),
        ..ExperimentSpec::rate_curve_default()
    };
    let report = run_sgd_vs_ols(&spec)?;
    let gaps = report.table("sgd_gap").expect("gap table");
    println!("{:>8} {:>12}", "steps", "risk gap");
    for r in &gaps.rows {
        println!("{:>8} {:>12.5}", r[1], r[2]);
    }
    for key in ["ols_risk", "final_gap_mean", "tolerance", "max_norm_ratio"] {
        println!("{key}: {:.5}", report.metric(key).unwrap_or(f64::NAN));
    }
    Ok(())
}

//! Hidden-layer sampling: moments of the direction law, nesting of draws,
//! and the JSON model document.
//!
//! `cargo run --release --example sample_weights`

use kolmo_rfn::rfn::{HiddenWeights, RandomFeatureNet, WeightDistributionSpec};

fn main() -> kolmo_rfn::Result<()> {
    let spec = WeightDistributionSpec::default();
    for dim in [1, 10, 50] {
        let h = HiddenWeights::sample(spec, 100_000, dim, 7)?;
        let target = spec.nu * dim as f64 / (spec.nu - 2.0);
        println!(
            "d={dim:>3}  E|A|^2 = {:>8.3}  (nu d / (nu - 2) = {target:.3})",
            h.mean_sq_row_norm()
        );
    }

    let big = HiddenWeights::sample(spec, 20, 3, 1)?;
    let small = HiddenWeights::sample(spec, 10, 3, 1)?;
    println!("first 10 of 20 equal a draw of 10: {}", big.prefix(10)? == small);

    let doc = RandomFeatureNet::zeros(small).to_document();
    let text = serde_json::to_string(&doc).expect("document serializes");
    println!("model document: {} bytes, starts {}", text.len(), &text[..60]);
    Ok(())
}

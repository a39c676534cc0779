//! Monte Carlo prices under exponential Lévy models, checked against
//! Black-Scholes and the martingale property.
//!
//! `cargo run --release --example price_mc`

use kolmo_rfn::levy::{black_scholes, equal_correlation, mc_expectation, price_mc, CompoundPoissonSpec, JumpAtom, LevyTriplet};
use kolmo_rfn::payoff::Payoff;
use kolmo_rfn::rng::StreamKey;

fn main() -> kolmo_rfn::Result<()> {
    let bs = LevyTriplet::black_scholes_equal_correlation(0.2, 0.0, 1)?;
    let call = Payoff::MaxCall { strike: 1.0 };
    let est = price_mc(&bs, &call, &[0.0], 1.0, 1_000_000, StreamKey::new(1))?;
    let exact = black_scholes::call(1.0, 1.0, 0.2, 1.0);
    println!(
        "ATM call: mc {:.6} +/- {:.6}, closed form {exact:.6}, z = {:.2}",
        est.mean,
        est.std_error,
        (est.mean - exact) / est.std_error
    );

    let d = 3;
    let jumps = CompoundPoissonSpec {
        intensity: 0.7,
        atoms: vec![
            JumpAtom { probability: 0.6, jump: vec![-0.3, 0.1, 0.0] },
            JumpAtom { probability: 0.4, jump: vec![1.2, -0.4, 0.5] },
        ],
        radius: 2.0,
    };
    let model = LevyTriplet::risk_neutral(equal_correlation(0.25, 0.3, d), Some(jumps))?;
    for i in 0..d {
        let m = mc_expectation(400_000, StreamKey::new(2).child(i as u64), |rng| {
            model.simulate_increment(1.0, rng)[i].exp()
        });
        println!("E[exp(L_1,{i})] = {:.5} +/- {:.5}", m.mean, m.std_error);
    }

    let put = Payoff::BasketPut { strike: 1.0, weights: vec![1.0 / d as f64; d] };
    let p = price_mc(&model, &put, &[0.0; 3], 1.0, 200_000, StreamKey::new(3))?;
    println!("equal-weight basket put with jumps: {:.5} +/- {:.5}", p.mean, p.std_error);
    Ok(())
}

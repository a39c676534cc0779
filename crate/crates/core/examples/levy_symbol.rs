//! Characteristic exponents, Gaussian decay, and the non-degeneracy check.
//!
//! `cargo run --release --example levy_symbol`

use kolmo_rfn::levy::{equal_correlation, CompoundPoissonSpec, JumpAtom, LevyTriplet, HORIZON_THRESHOLD};

fn main() -> kolmo_rfn::Result<()> {
    let jumps = CompoundPoissonSpec {
        intensity: 1.5,
        atoms: vec![
            JumpAtom { probability: 0.5, jump: vec![0.4, -0.2] },
            JumpAtom { probability: 0.5, jump: vec![-1.5, 0.3] },
        ],
        radius: 2.0,
    };
    let t = LevyTriplet::risk_neutral(equal_correlation(0.3, 0.5, 2), Some(jumps))?;
    let c = 0.5 * 0.09 * 0.5 * 0.999;
    let report = t.nondegeneracy(c, Some(1.0));
    println!("half smallest eigenvalue of Sigma: {:.5}", report.half_min_eigenvalue);
    println!("non-degenerate with C = {c:.5}: {}", report.holds);
    println!("C T above {HORIZON_THRESHOLD:.5}: {:?}", report.horizon_condition);
    for xi in [[0.0, 0.0], [1.0, 0.0], [2.0, -1.0], [10.0, 10.0]] {
        let eta = t.levy_symbol(&xi)?;
        let bound = (-c * (xi[0] * xi[0] + xi[1] * xi[1])).exp();
        println!(
            "xi={xi:?}: eta = {:.4} {:+.4}i, |E e^(i xi L_1)| = {:.3e} <= {bound:.3e}",
            eta.re,
            eta.im,
            eta.re.exp()
        );
    }
    Ok(())
}

//! Monte Carlo checks of the Borell-TIS and equicorrelated lower-tail bounds.
//!
//! cargo run --release --example bounds

use macropeaks::bounds::{borell_comparison, lopes_comparison, DEFAULT_MESH};
use macropeaks::fieldgen::exponential_correlation;

fn main() -> macropeaks::Result<()> {
    let corr = exponential_correlation(1.0);
    let cmp = borell_comparison(&corr, &[20.0], DEFAULT_MESH, 20_000, 3, &[1.0, 2.0, 3.0])?;
    println!(
        "sup over Q(20, 1): mu = {:.4} +- {:.4}",
        cmp.mu.mu, cmp.mu.stderr
    );
    for r in &cmp.rows {
        println!(
            "  x = {:.3}: frequency {:.5} +- {:.5}, bound {:.5}",
            r.x, r.frequency, r.stderr, r.bound
        );
    }

    let ns: Vec<usize> = (8..=13).map(|k| 1 << k).collect();
    let cmp = lopes_comparison(&ns, 0.3, 0.25, 20_000, 5)?;
    println!(
        "\nequicorrelated maxima, rho0 = 0.3, gamma0 = 0.25 (C = {:.4})",
        cmp.c
    );
    for r in &cmp.rows {
        println!(
            "  n = {:>5}: P = {:.5} +- {:.5}, bound {:.5}",
            r.n, r.probability, r.stderr, r.bound
        );
    }
    Ok(())
}

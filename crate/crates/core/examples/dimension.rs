//! Macroscopic dimension estimators on sets of known dimension.
//!
//! cargo run --release --example dimension

use macropeaks::dimension::{
    covering_series, estimate_dim_bisection, estimate_dim_counting, evenly_spread_set,
    integer_lattice, nu_brute_force_1d, nu_n_rho, thickness_test, TrendConfig,
};
use macropeaks::geometry::{block_set_union, skeleton_union, PointSet};

fn main() -> macropeaks::Result<()> {
    let cfg = TrendConfig::default();

    println!("evenly spread sets");
    for lambda in [0.25, 0.5, 0.75] {
        let set = evenly_spread_set(lambda, 14);
        let b = estimate_dim_bisection(&set, 14, 0.02, &cfg)?;
        let c = estimate_dim_counting(&set, 5..=14)?;
        println!(
            "  lambda = {lambda}: bisection {:.3} +- {:.3}, counting {:.3}",
            b.value, b.uncertainty, c.value
        );
    }

    let z = integer_lattice(12);
    for rho in [0.5, 1.5] {
        let s = covering_series(&z, rho, 12, &cfg)?;
        println!("integers, rho = {rho}: {:?}", s.trend);
    }

    println!("skeleton unions in d = 2");
    for theta in [0.3, 0.6] {
        let set = skeleton_union(1, 7, theta, 2)?;
        let b = estimate_dim_bisection(&set, 7, 0.02, &cfg)?;
        println!(
            "  theta = {theta}: bisection {:.3}, exact {:.3}",
            b.value,
            2.0 * (1.0 - theta)
        );
        let t = thickness_test(&set, theta, 2..=7)?;
        println!("    thickness certificate: {:?}", t.certified_dim);
    }

    let blocks = block_set_union(1, 9, 2.0, 1, 1, 1.0)?;
    let b = estimate_dim_bisection(&blocks, 9, 0.02, &cfg)?;
    println!(
        "block set (k = 1, q = 2, d = 1): {} points, bisection {:.3} (at most 1)",
        blocks.len(),
        b.value
    );

    let pts = PointSet::from_scalars([3.0, 3.5, 4.0, 6.0, 7.2]);
    for rho in [0.5, 1.0, 1.5] {
        println!(
            "nu_2 at rho = {rho}: dp {:.6}, brute force {:.6}",
            nu_n_rho(&pts, 2, rho).value,
            nu_brute_force_1d(&pts, 2, rho)
        );
    }
    Ok(())
}

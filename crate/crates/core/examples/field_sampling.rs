//! Gaussian field samples by circulant embedding and by Cholesky factorization.
//!
//! cargo run --release --example field_sampling

use macropeaks::fieldgen::{
    empirical_cov_check, exponential_correlation, CholeskySampler, CirculantOptions,
    CirculantSampler,
};
use macropeaks::geometry::{skeleton_union, PointSet};

fn main() -> macropeaks::Result<()> {
    let corr = exponential_correlation(1.0);

    // One long path on the integers of [e, e^10].
    let n = (10f64.exp() - 1f64.exp()) as usize;
    let sampler = CirculantSampler::new(&corr, n, 1.0, 1f64.exp(), CirculantOptions::default())?;
    let path = sampler.sample(42, 0);
    let max = path.values.iter().cloned().fold(f64::MIN, f64::max);
    println!(
        "circulant: {} points, embedding {}, clipped mass {:.2e}, max {max:.3}",
        path.len(),
        sampler.embedding_len(),
        sampler.clipped_mass
    );

    // Covariance check on a short lattice.
    let small = CirculantSampler::new(&corr, 6, 0.5, 0.0, CirculantOptions::default())?;
    let samples: Vec<_> = (0..4000).map(|r| small.sample(7, r)).collect();
    let check = empirical_cov_check(&samples, &corr)?;
    println!(
        "circulant covariance: max deviation {:.4}, max z {:.2}",
        check.max_deviation,
        check.max_z()
    );

    // Cholesky on scattered 2-d points: a skeleton union.
    let pts: PointSet = skeleton_union(1, 4, 0.6, 2)?;
    let chol = CholeskySampler::new(&corr, &pts)?;
    let samples: Vec<_> = (0..2000).map(|r| chol.sample(11, r)).collect();
    let check = empirical_cov_check(&samples[..], &corr)?;
    println!(
        "cholesky on {} skeleton points: max deviation {:.4}, max z {:.2}",
        pts.len(),
        check.max_deviation,
        check.max_z()
    );
    println!("\nfirst rows of the circulant sample csv:");
    for line in path.to_csv().lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}

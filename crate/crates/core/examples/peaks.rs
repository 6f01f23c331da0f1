//! Tall peaks of an e^-r field and stretch-factor validation.
//!
//! cargo run --release --example peaks

use macropeaks::fieldgen::{exponential_correlation, CirculantOptions, CirculantSampler};
use macropeaks::geometry::shell_of;
use macropeaks::peaks::{
    extract_spatial_peaks, validate_stretch, GaugeParams, StretchFactor, STRETCH_THRESHOLD,
};

fn main() -> macropeaks::Result<()> {
    let e = 1f64.exp();
    let n = (12f64.exp() - e) as usize;
    let sampler = CirculantSampler::new(
        &exponential_correlation(1.0),
        n,
        1.0,
        e,
        CirculantOptions::default(),
    )?;
    let field = sampler.sample(1, 0);
    for gamma in [0.25, 0.5, 0.75] {
        let peaks = extract_spatial_peaks(&field, &GaugeParams::normalized(gamma)?);
        let mut per_shell = [0usize; 13];
        for p in peaks.points.iter() {
            per_shell[shell_of(p).min(12) as usize] += 1;
        }
        let ratios: Vec<String> = (6..12)
            .map(|k| {
                format!(
                    "{:.2}",
                    (per_shell[k + 1] as f64 / per_shell[k].max(1) as f64).ln()
                )
            })
            .collect();
        println!(
            "gamma = {gamma}: {} peaks; log shell-count ratios {:?} (about 1 - gamma)",
            peaks.len(),
            ratios
        );
    }

    // Space-time correlation envelopes against stretch factors.
    let riesz = |t: f64, x: f64| (t * t * x.powf(-0.5)).min(1.0);
    let rep = validate_stretch(
        riesz,
        &StretchFactor::power_law(0.5)?,
        &[0.5, 1.0],
        10..=300,
        STRETCH_THRESHOLD,
    )?;
    println!("\nRiesz envelope, g(r) = r^0.5: passed = {}", rep.passed);
    let log_decay = |t: f64, x: f64| (0.5 * (0.5 * t).exp() / x.ln()).min(1.0);
    let rep = validate_stretch(
        log_decay,
        &StretchFactor::Exp,
        &[0.5, 1.0],
        3..=400,
        STRETCH_THRESHOLD,
    )?;
    println!("log-decay envelope, g(r) = e^r: passed = {}", rep.passed);
    let bounded = StretchFactor::tabulated(vec![2.0, 3.0, 4.0, 50.0], vec![2.0, 3.0, 4.0, 4.0])?;
    match validate_stretch(|_, _| 0.0, &bounded, &[0.5], 2..=10, STRETCH_THRESHOLD) {
        Err(e) => println!("bounded g: {e}"),
        Ok(r) => println!("bounded g unexpectedly accepted: {r:?}"),
    }
    Ok(())
}

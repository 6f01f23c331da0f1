//! Variances and correlation tables of the heat and wave solutions.
//!
//! cargo run --release --example covariance

use macropeaks::covariance::{correlation_table, variance, EquationSpec, TableOptions};
use macropeaks::spectral::CorrelationModel;
use std::f64::consts::PI;

fn main() -> macropeaks::Result<()> {
    let white = CorrelationModel::white_noise(1);
    let heat = EquationSpec::heat(2.0, white.clone())?;
    let wave = EquationSpec::wave(white)?;
    println!("white noise, d = 1");
    for t in [0.5, 1.0, 2.0] {
        println!(
            "  t = {t}: heat {:.10} (sqrt(t/2pi) = {:.10}), wave {:.10} (t^2/4 = {:.10})",
            variance(&heat, t)?,
            (t / (2.0 * PI)).sqrt(),
            variance(&wave, t)?,
            t * t / 4.0,
        );
    }

    let (alpha, beta) = (2.0, 0.5);
    let riesz = EquationSpec::heat(alpha, CorrelationModel::riesz(beta, 1)?)?;
    let ratio = variance(&riesz, 2.0)? / variance(&riesz, 1.0)?;
    println!(
        "\nRiesz beta = {beta}: v(2)/v(1) = {ratio:.6}, scaling law {:.6}",
        2f64.powf((alpha - beta) / alpha)
    );

    let spec = EquationSpec::heat(2.0, CorrelationModel::exponential(1.0, 1)?)?;
    let table = correlation_table(
        &spec,
        1.0,
        &TableOptions {
            r_max: 50.0,
            points: 40,
            ..TableOptions::default()
        },
    )?;
    println!("\nheat solution with e^-r noise, t = 1");
    for (r, v) in table.lags.iter().zip(&table.values).step_by(5) {
        println!("  r = {r:>10.4}  rho = {v:.6}");
    }
    println!(
        "  terminal {:.3e}, vanishes below {}: {}",
        table.terminal, table.threshold, table.vanishes
    );
    Ok(())
}

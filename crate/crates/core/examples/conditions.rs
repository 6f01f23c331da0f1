//! Integrability conditions and the mixing functional for a few noise models.
//!
//! cargo run --example conditions

use macropeaks::spectral::CorrelationModel;
use std::f64::consts::PI;

fn main() -> macropeaks::Result<()> {
    let alpha = 2.0;
    let models = [
        CorrelationModel::white_noise(1),
        CorrelationModel::white_noise(2),
        CorrelationModel::riesz(0.5, 1)?,
        CorrelationModel::riesz(1.5, 3)?,
        CorrelationModel::exponential(1.0, 2)?,
        CorrelationModel::log_decay(1.0, 1)?,
    ];
    println!(
        "{:<28} {:>8} {:>14} {:>16}",
        "model", "dalang", "integral", "reinforced(0.5)"
    );
    for m in &models {
        let dalang = m.check_dalang(alpha)?;
        let reinforced = m.check_reinforced(alpha, 0.5)?;
        let value = dalang
            .value
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "inf".into());
        println!(
            "{:<28} {:>8} {:>14} {:>16}",
            m.id(),
            dalang.satisfied,
            value,
            reinforced.satisfied
        );
        if let Some(w) = &dalang.divergence_witness {
            println!("    {w}");
        }
    }

    println!("\nwhite noise, d = 1: mixing functional against pi e^-|z|");
    let white = CorrelationModel::white_noise(1);
    for z in [0.5, 1.0, 2.0, 4.0] {
        let m = white.mixing_functional(alpha, &[z])?;
        println!(
            "  z = {z:<4} {:.10}  closed form {:.10}",
            m.value,
            PI * (-z).exp()
        );
    }
    Ok(())
}

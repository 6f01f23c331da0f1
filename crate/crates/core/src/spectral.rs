//! Correlation models of the spatial noise and the integrability conditions on
//! their spectral measures.
//!
//! Fourier convention: `f̂(ξ) = ∫ f(x) e^{-iξ·x} dx`, with white noise `δ ↦ 1`.

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::quadrature::integrate;
use crate::radial::{radial_integral, RadialMeasure, Tolerance, Weight};
use crate::special::{ball_volume, gamma, sphere_area};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parametric family of the correlation `f` (equivalently its spectral measure `f̂`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    WhiteNoise,
    /// `f(x) = c |x|^{-β}`
    Riesz {
        beta: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// `f(x) = e^{-λ|x|}`
    Exponential {
        lambda: f64,
    },
    /// `f(x) = e^{-|x|²/(2σ²)}`
    GaussianCorr {
        sigma: f64,
    },
    /// `f(x) = ∫_1^∞ u^{-2} exp(-(|x|/c) e^{-u}) du`, decaying like `1/log|x|`.
    LogDecay {
        c: f64,
    },
    /// Radial spectral density `f̂(k)` sampled at `radii` (starting at 0, zero beyond the
    /// last radius) plus optional spherical atoms `[radius, mass]`.
    Tabulated {
        radii: Vec<f64>,
        density: Vec<f64>,
        #[serde(default)]
        atoms: Vec<[f64; 2]>,
    },
}

fn one() -> f64 {
    1.0
}

/// A correlation model in dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub dim: usize,
}

/// Which integrability condition a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ConditionId {
    Dalang,
    Reinforced { eta: f64 },
    Mixing,
}

/// Outcome of an integrability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub satisfied: bool,
    /// Integral value when finite.
    pub value: Option<f64>,
    /// Why the integral diverges, when it does.
    pub divergence_witness: Option<String>,
    /// Decay exponent of the radial integrand `k^{d-1} f̂(k) W(k)` at infinity.
    pub tail_exponent: f64,
    pub error_estimate: f64,
}

/// Value of a spectral integral with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// `Γ((d+1)/2) π^{(d-1)/2} 2^d`, the constant of `ê_λ(ξ) = K_d λ/(λ²+|ξ|²)^{(d+1)/2}`.
fn exp_constant(d: usize) -> f64 {
    let df = d as f64;
    gamma((df + 1.0) / 2.0) * PI.powf((df - 1.0) / 2.0) * 2f64.powf(df)
}

/// Mass of the Fourier transform of `e^{-λ|x|}` inside the ball of radius `eps`.
fn exp_ball_mass(d: usize, lambda: f64, eps: f64) -> f64 {
    let s = eps / lambda;
    match d {
        1 => 4.0 * s.atan(),
        2 => 4.0 * PI * PI * (1.0 - 1.0 / (1.0 + s * s).sqrt()),
        3 => 16.0 * PI * PI * (s.atan() - s / (1.0 + s * s)),
        _ => {
            let kd = exp_constant(d);
            let om = sphere_area(d);
            integrate(
                |k: f64| {
                    om * k.powi(d as i32 - 1) * kd * lambda
                        / (lambda * lambda + k * k).powf((d as f64 + 1.0) / 2.0)
                },
                0.0,
                eps,
                1e-14,
                1e-12,
                200,
            )
            .value
        }
    }
}

/// Fourier constant of the Riesz kernel: `(|x|^{-β})^ = C(β,d) |ξ|^{β-d}`.
pub fn riesz_fourier_constant(beta: f64, d: usize) -> f64 {
    let df = d as f64;
    PI.powf(df / 2.0) * 2f64.powf(df - beta) * gamma((df - beta) / 2.0) / gamma(beta / 2.0)
}

impl CorrelationModel {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self> {
        let m = CorrelationModel { kind, dim };
        m.validate()?;
        Ok(m)
    }

    pub fn white_noise(dim: usize) -> Self {
        CorrelationModel {
            kind: ModelKind::WhiteNoise,
            dim,
        }
    }

    pub fn riesz(beta: f64, dim: usize) -> Result<Self> {
        Self::new(ModelKind::Riesz { beta, c: 1.0 }, dim)
    }

    pub fn exponential(lambda: f64, dim: usize) -> Result<Self> {
        Self::new(ModelKind::Exponential { lambda }, dim)
    }

    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        Self::new(ModelKind::GaussianCorr { sigma }, dim)
    }

    pub fn log_decay(c: f64, dim: usize) -> Result<Self> {
        Self::new(ModelKind::LogDecay { c }, dim)
    }

    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match &self.kind {
            ModelKind::WhiteNoise => Ok(()),
            ModelKind::Riesz { beta, c } => {
                pos("beta", *beta)?;
                pos("c", *c)?;
                if *beta >= self.dim as f64 {
                    return Err(Error::InvalidModel(format!(
                        "riesz requires beta < d, got beta={beta}, d={}",
                        self.dim
                    )));
                }
                Ok(())
            }
            ModelKind::Exponential { lambda } => pos("lambda", *lambda),
            ModelKind::GaussianCorr { sigma } => pos("sigma", *sigma),
            ModelKind::LogDecay { c } => pos("c", *c),
            ModelKind::Tabulated {
                radii,
                density,
                atoms,
            } => {
                if radii.len() < 2 || radii.len() != density.len() {
                    return Err(Error::InvalidModel(
                        "tabulated density needs matching radii/density of length >= 2".into(),
                    ));
                }
                if radii[0] != 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidModel(
                        "tabulated radii must start at 0 and increase strictly".into(),
                    ));
                }
                if density.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidModel(
                        "tabulated density values must be nonnegative".into(),
                    ));
                }
                if atoms.iter().any(|a| !(a[0] >= 0.0) || !(a[1] >= 0.0)) {
                    return Err(Error::InvalidModel(
                        "atoms need nonnegative radius and mass".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Short identifier used in metadata.
    pub fn id(&self) -> String {
        match &self.kind {
            ModelKind::WhiteNoise => format!("white_noise(d={})", self.dim),
            ModelKind::Riesz { beta, c } => format!("riesz(beta={beta},c={c},d={})", self.dim),
            ModelKind::Exponential { lambda } => {
                format!("exponential(lambda={lambda},d={})", self.dim)
            }
            ModelKind::GaussianCorr { sigma } => format!("gaussian(sigma={sigma},d={})", self.dim),
            ModelKind::LogDecay { c } => format!("log_decay(c={c},d={})", self.dim),
            ModelKind::Tabulated { radii, .. } => {
                format!("tabulated(n={},d={})", radii.len(), self.dim)
            }
        }
    }

    /// Whether `f` has pointwise values at every radius.
    pub fn is_function_kernel(&self) -> bool {
        matches!(
            self.kind,
            ModelKind::Exponential { .. }
                | ModelKind::GaussianCorr { .. }
                | ModelKind::LogDecay { .. }
        )
    }

    /// Decay exponent `p` in `f̂(k) ~ k^{-p}`; infinite for faster than any power.
    pub fn spectral_tail_exponent(&self) -> f64 {
        let d = self.dim as f64;
        match &self.kind {
            ModelKind::WhiteNoise => 0.0,
            ModelKind::Riesz { beta, .. } => d - beta,
            ModelKind::Exponential { .. } | ModelKind::LogDecay { .. } => d + 1.0,
            ModelKind::GaussianCorr { .. } | ModelKind::Tabulated { .. } => f64::INFINITY,
        }
    }

    /// Radial spectral density at `|ξ| = k`.
    pub fn radial_density(&self, k: f64) -> Result<f64> {
        let d = self.dim;
        let df = d as f64;
        Ok(match &self.kind {
            ModelKind::WhiteNoise => 1.0,
            ModelKind::Riesz { beta, c } => {
                if k == 0.0 {
                    return Ok(f64::INFINITY);
                }
                c * riesz_fourier_constant(*beta, d) * k.powf(beta - df)
            }
            ModelKind::Exponential { lambda } => {
                exp_constant(d) * lambda / (lambda * lambda + k * k).powf((df + 1.0) / 2.0)
            }
            ModelKind::GaussianCorr { sigma } => {
                (2.0 * PI * sigma * sigma).powf(df / 2.0) * (-0.5 * sigma * sigma * k * k).exp()
            }
            ModelKind::LogDecay { c } => log_decay_density(*c, d, k),
            ModelKind::Tabulated {
                radii,
                density,
                atoms,
            } => {
                if density.iter().all(|v| *v == 0.0) && !atoms.is_empty() {
                    return Err(Error::NoDensity);
                }
                tabulated_density(radii, density, k)
            }
        })
    }

    /// `f̂(ξ)` for a vector `ξ` of length `dim`.
    pub fn spectral_density_at(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim {
            return Err(Error::DomainError(format!(
                "xi has length {}, model dimension {}",
                xi.len(),
                self.dim
            )));
        }
        let k = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.radial_density(k)
    }

    /// `f(r)` at radius `r`.
    pub fn correlation_at(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::DomainError(format!(
                "radius must be nonnegative, got {r}"
            )));
        }
        match &self.kind {
            ModelKind::WhiteNoise => Err(Error::NotAFunction),
            ModelKind::Riesz { beta, c } => {
                if r == 0.0 {
                    Err(Error::DomainError(
                        "riesz kernel is singular at r = 0".into(),
                    ))
                } else {
                    Ok(c * r.powf(-beta))
                }
            }
            ModelKind::Exponential { lambda } => Ok((-lambda * r).exp()),
            ModelKind::GaussianCorr { sigma } => Ok((-r * r / (2.0 * sigma * sigma)).exp()),
            ModelKind::LogDecay { c } => Ok(log_decay_correlation(*c, r)),
            ModelKind::Tabulated { .. } => {
                let e = radial_integral(
                    self,
                    Weight::Power {
                        alpha: 2.0,
                        eta: 0.0,
                    },
                    r,
                    Tolerance::default(),
                )?;
                Ok(e.value / (2.0 * PI).powi(self.dim as i32))
            }
        }
    }

    /// Radial quadrature of `∫ (1+|ξ|^α)^{-η} e^{iξ·z} f̂(dξ)` after the closed-form tail check.
    fn weighted_integral(
        &self,
        alpha: f64,
        eta: f64,
        z: f64,
        tol: Tolerance,
    ) -> Result<std::result::Result<Integral, (f64, String)>> {
        let q = self.spectral_tail_exponent() + alpha * eta;
        if q <= self.dim as f64 {
            return Ok(Err((
                q - (self.dim as f64 - 1.0),
                format!(
                    "radial integrand decays like k^-{:.4} at infinity (spectral exponent {:.4} + alpha*eta {:.4} <= d = {})",
                    q - (self.dim as f64 - 1.0),
                    self.spectral_tail_exponent(),
                    alpha * eta,
                    self.dim
                ),
            )));
        }
        let e = radial_integral(self, Weight::Power { alpha, eta }, z, tol)?;
        Ok(Ok(Integral {
            value: e.value,
            error: e.error,
        }))
    }

    fn condition(&self, id: ConditionId, alpha: f64, eta: f64) -> Result<ConditionReport> {
        self.validate()?;
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::DomainError(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        let tail = self.spectral_tail_exponent() + alpha * eta - (self.dim as f64 - 1.0);
        match self.weighted_integral(alpha, eta, 0.0, Tolerance::default())? {
            Ok(i) => Ok(ConditionReport {
                condition: id,
                satisfied: true,
                value: Some(i.value),
                divergence_witness: None,
                tail_exponent: tail,
                error_estimate: i.error,
            }),
            Err((_, why)) => Ok(ConditionReport {
                condition: id,
                satisfied: false,
                value: None,
                divergence_witness: Some(why),
                tail_exponent: tail,
                error_estimate: f64::INFINITY,
            }),
        }
    }

    /// Dalang's condition `∫ f̂(dξ)/(1+|ξ|^α) < ∞`.
    pub fn check_dalang(&self, alpha: f64) -> Result<ConditionReport> {
        self.condition(ConditionId::Dalang, alpha, 1.0)
    }

    /// Reinforced condition `∫ f̂(dξ)/(1+|ξ|^α)^η < ∞`.
    pub fn check_reinforced(&self, alpha: f64, eta: f64) -> Result<ConditionReport> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::DomainError(format!(
                "eta must lie in [0, 1), got {eta}"
            )));
        }
        self.condition(ConditionId::Reinforced { eta }, alpha, eta)
    }

    /// `∫ e^{iξ·z} f̂(dξ)/(1+|ξ|^α)` for a lag vector `z`.
    pub fn mixing_functional(&self, alpha: f64, z: &[f64]) -> Result<Integral> {
        if z.len() != self.dim {
            return Err(Error::DomainError(format!(
                "z has length {}, model dimension {}",
                z.len(),
                self.dim
            )));
        }
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.mixing_functional_radial(alpha, r)
    }

    /// Mixing functional at lag norm `r`.
    pub fn mixing_functional_radial(&self, alpha: f64, r: f64) -> Result<Integral> {
        self.validate()?;
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::DomainError(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        match self.weighted_integral(alpha, 1.0, r, Tolerance::default())? {
            Ok(i) => Ok(i),
            Err((_, why)) => Err(Error::UnsatisfiedCondition(format!(
                "dalang condition fails: {why}"
            ))),
        }
    }
}

fn tabulated_density(radii: &[f64], density: &[f64], k: f64) -> f64 {
    let last = *radii.last().expect("validated");
    if k >= last {
        return if k == last {
            *density.last().expect("validated")
        } else {
            0.0
        };
    }
    let i = radii.partition_point(|&r| r <= k) - 1;
    let s = (k - radii[i]) / (radii[i + 1] - radii[i]);
    density[i] + s * (density[i + 1] - density[i])
}

/// `f̂(k) = ∫_1^∞ u^{-2} K_d λ_u/(λ_u² + k²)^{(d+1)/2} du`, `λ_u = e^{-u}/c`.
fn log_decay_density(c: f64, d: usize, k: f64) -> f64 {
    let kd = exp_constant(d);
    let p = (d as f64 + 1.0) / 2.0;
    let g = |u: f64| {
        let lam = (-u).exp() / c;
        kd * lam / (lam * lam + k * k).powf(p) / (u * u)
    };
    let ustar = -(c * k).ln();
    let mut sum = 0.0;
    let hi = if ustar > 1.0 {
        sum += integrate(g, 1.0, ustar, 0.0, 1e-12, 400).value;
        ustar
    } else {
        1.0
    };
    sum += integrate(g, hi, hi + 45.0, 0.0, 1e-12, 400).value;
    sum
}

/// `f(r) = ∫_1^∞ u^{-2} exp(-(r/c) e^{-u}) du`.
fn log_decay_correlation(c: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let ustar = (r / c).ln().max(1.0);
    let g = |u: f64| (-(r / c) * (-u).exp()).exp() / (u * u);
    let upper = ustar + 45.0;
    let lo = (ustar - 10.0).max(1.0);
    let mut v = integrate(g, lo, upper, 0.0, 1e-13, 400).value;
    if lo > 1.0 {
        v += integrate(g, 1.0, lo, 0.0, 1e-13, 400).value;
    }
    v + 1.0 / upper
}

impl RadialMeasure for CorrelationModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn density(&self, k: f64) -> f64 {
        self.radial_density(k).unwrap_or(0.0)
    }

    fn ball_mass(&self, eps: f64) -> f64 {
        let d = self.dim;
        let vol = ball_volume(d) * eps.powi(d as i32);
        match &self.kind {
            ModelKind::WhiteNoise => vol,
            ModelKind::Riesz { beta, c } => {
                sphere_area(d) * c * riesz_fourier_constant(*beta, d) * eps.powf(*beta) / beta
            }
            ModelKind::Exponential { lambda } => exp_ball_mass(d, *lambda, eps),
            ModelKind::GaussianCorr { sigma } => {
                (2.0 * PI * sigma * sigma).powf(d as f64 / 2.0) * vol
            }
            ModelKind::LogDecay { c } => {
                let g = |u: f64| exp_ball_mass(d, (-u).exp() / c, eps) / (u * u);
                let ustar = -(c * eps).ln();
                let mut v = 0.0;
                let mut lo = 1.0;
                if ustar > 1.0 {
                    v += integrate(g, 1.0, ustar, 0.0, 1e-12, 400).value;
                    lo = ustar;
                }
                v += integrate(g, lo, lo + 60.0, 0.0, 1e-12, 400).value;
                // remaining mass is the full transform, (2π)^d per unit of ∫u^{-2}
                v + (2.0 * PI).powi(d as i32) / (lo + 60.0)
            }
            ModelKind::Tabulated { density, atoms, .. } => {
                density[0] * vol
                    + atoms
                        .iter()
                        .filter(|a| a[0] < eps)
                        .map(|a| a[1])
                        .sum::<f64>()
            }
        }
    }

    fn tail_exponent(&self) -> f64 {
        self.spectral_tail_exponent()
    }

    fn flat_radius(&self) -> f64 {
        match &self.kind {
            ModelKind::WhiteNoise | ModelKind::Riesz { .. } | ModelKind::LogDecay { .. } => {
                f64::INFINITY
            }
            ModelKind::Exponential { lambda } => 1e-5 * lambda,
            ModelKind::GaussianCorr { sigma } => 1e-5 / sigma,
            ModelKind::Tabulated { radii, .. } => 1e-6 * radii[1],
        }
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            ModelKind::Tabulated { atoms, .. } => atoms.iter().map(|a| (a[0], a[1])).collect(),
            _ => Vec::new(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::Tabulated { radii, .. } => radii[1..].to_vec(),
            ModelKind::Exponential { lambda } => vec![*lambda],
            ModelKind::GaussianCorr { sigma } => vec![1.0 / sigma],
            _ => Vec::new(),
        }
    }
}

/// Tabulated radial correlation helper: PCHIP interpolant of `f(r)` (used by callers
/// that want a cheap lookup of an expensive kernel).
pub fn tabulate_correlation(model: &CorrelationModel, radii: &[f64]) -> Result<Pchip> {
    let vals = radii
        .iter()
        .map(|&r| model.correlation_at(r))
        .collect::<Result<Vec<_>>>()?;
    Pchip::new(radii.to_vec(), vals)
        .ok_or_else(|| Error::InvalidModel("radii must increase strictly".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riesz_correlation_at_four() {
        let m = CorrelationModel::riesz(0.5, 1).unwrap();
        assert_eq!(m.correlation_at(4.0).unwrap(), 0.5);
        assert!(matches!(m.correlation_at(0.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn normalised_kernels_at_origin() {
        assert_eq!(
            CorrelationModel::exponential(1.0, 1)
                .unwrap()
                .correlation_at(0.0)
                .unwrap(),
            1.0
        );
        assert_eq!(
            CorrelationModel::gaussian(2.0, 2)
                .unwrap()
                .correlation_at(0.0)
                .unwrap(),
            1.0
        );
        assert_eq!(
            CorrelationModel::log_decay(1.0, 1)
                .unwrap()
                .correlation_at(0.0)
                .unwrap(),
            1.0
        );
        assert_eq!(
            CorrelationModel::white_noise(1).correlation_at(0.1),
            Err(Error::NotAFunction)
        );
    }

    #[test]
    fn white_noise_density_is_one() {
        let m = CorrelationModel::white_noise(3);
        assert_eq!(m.spectral_density_at(&[0.3, -2.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn exponential_density_at_origin_is_two() {
        let m = CorrelationModel::exponential(1.0, 1).unwrap();
        assert!((m.spectral_density_at(&[0.0]).unwrap() - 2.0).abs() < 1e-15);
        // cross-check against ∫ e^{-|x|} dx by quadrature
        let q = 2.0 * integrate(|x: f64| (-x).exp(), 0.0, 60.0, 1e-14, 0.0, 100).value;
        assert!((q - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_density_matches_quadrature_in_d3() {
        // f̂(k) = (4π/k) ∫_0^∞ r sin(kr) e^{-r} dr
        let m = CorrelationModel::exponential(1.0, 3).unwrap();
        let k = 1.7;
        let q = 4.0 * PI / k
            * integrate(
                |r: f64| r * (k * r).sin() * (-r).exp(),
                0.0,
                80.0,
                1e-14,
                0.0,
                400,
            )
            .value;
        assert!((m.radial_density(k).unwrap() - q).abs() < 1e-10);
    }

    #[test]
    fn riesz_constant_matches_fresnel_oracle() {
        // 2∫_0^∞ x^{-1/2} cos(2x) dx = 4∫_0^∞ cos(2u²) du, composite Simpson plus asymptotic tail
        let upper = 60.0;
        let n = 200_000;
        let h = upper / n as f64;
        let f = |u: f64| (2.0 * u * u).cos();
        let mut s = f(0.0) + f(upper);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let mut integral = s * h / 3.0;
        integral += -(2.0 * upper * upper).sin() / (4.0 * upper);
        let oracle = 4.0 * integral;
        let m = CorrelationModel::riesz(0.5, 1).unwrap();
        let v = m.spectral_density_at(&[2.0]).unwrap();
        assert!((v - oracle).abs() < 1e-5, "{v} vs {oracle}");
        assert!((v - riesz_fourier_constant(0.5, 1) * 2f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn log_decay_density_integrates_to_2pi_times_f0() {
        // ∫ f̂ dξ = (2π)^d f(0) = 2π in d = 1
        let m = CorrelationModel::log_decay(1.0, 1).unwrap();
        let r = m.check_reinforced(2.0, 0.0).unwrap();
        assert!(r.satisfied);
        assert!((r.value.unwrap() - 2.0 * PI).abs() < 1e-6, "{:?}", r);
    }

    #[test]
    fn log_decay_correlation_decays_slowly() {
        let m = CorrelationModel::log_decay(1.0, 1).unwrap();
        let a = m.correlation_at(1e3).unwrap();
        let b = m.correlation_at(1e6).unwrap();
        assert!(a > b && b > 0.0);
        // f(r) ~ 1/log r
        assert!((b * (1e6f64).ln() - 1.0).abs() < 0.3);
    }

    #[test]
    fn dalang_white_noise_examples() {
        let m = CorrelationModel::white_noise(1);
        let r = m.check_dalang(2.0).unwrap();
        assert!(r.satisfied);
        assert!((r.value.unwrap() - PI).abs() < 1e-6);
        assert!(!m.check_dalang(0.5).unwrap().satisfied);
    }

    #[test]
    fn riesz_dalang_and_reinforced() {
        let m = CorrelationModel::riesz(0.5, 1).unwrap();
        assert!(m.check_dalang(2.0).unwrap().satisfied);
        let r = m.check_reinforced(2.0, 0.7).unwrap();
        assert!(r.satisfied);
        assert!((r.tail_exponent - 1.9).abs() < 1e-12);
    }

    #[test]
    fn reinforced_riesz_slow_tail_matches_beta_integral() {
        // 2C ∫_0^∞ k^{β-1} (1+k^α)^{-η} dk = (2C/α) B(β/α, η - β/α)
        let (beta, alpha, eta) = (0.767, 1.343, 0.624);
        let m = CorrelationModel::riesz(beta, 1).unwrap();
        let r = m.check_reinforced(alpha, eta).unwrap();
        let (a, b) = (beta / alpha, eta - beta / alpha);
        let exact =
            2.0 * riesz_fourier_constant(beta, 1) / alpha * gamma(a) * gamma(b) / gamma(a + b);
        assert!(r.satisfied);
        assert!(
            (r.value.unwrap() - exact).abs() < 1e-6 * exact,
            "{} vs {exact}",
            r.value.unwrap()
        );
    }

    #[test]
    fn reinforced_white_noise_threshold() {
        let m = CorrelationModel::white_noise(1);
        assert!(m.check_reinforced(2.0, 0.9).unwrap().satisfied);
        assert!(!m.check_reinforced(2.0, 0.4).unwrap().satisfied);
    }

    #[test]
    fn mixing_functional_white_noise() {
        let m = CorrelationModel::white_noise(1);
        let at0 = m.mixing_functional(2.0, &[0.0]).unwrap();
        assert!((at0.value - m.check_dalang(2.0).unwrap().value.unwrap()).abs() < 1e-9);
        let at3 = m.mixing_functional(2.0, &[3.0]).unwrap();
        assert!((at3.value - PI * (-3.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn riesz_mixing_decreases_to_zero() {
        let m = CorrelationModel::riesz(0.5, 1).unwrap();
        let mut last = f64::INFINITY;
        let first = m.mixing_functional_radial(2.0, 1.0).unwrap().value;
        for &z in &[1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 65536.0] {
            let v = m.mixing_functional_radial(2.0, z).unwrap().value;
            assert!(v < last && v > 0.0, "z={z} v={v}");
            last = v;
        }
        assert!(last < 0.05 * first);
    }

    #[test]
    fn tabulated_atoms_only_has_no_density() {
        let m = CorrelationModel::new(
            ModelKind::Tabulated {
                radii: vec![0.0, 1.0],
                density: vec![0.0, 0.0],
                atoms: vec![[1.0, 2.0]],
            },
            1,
        )
        .unwrap();
        assert_eq!(m.spectral_density_at(&[0.5]), Err(Error::NoDensity));
    }

    #[test]
    fn tabulated_atom_gives_cosine_correlation() {
        // mass 2π at radius 1 in d = 1 is f(x) = cos x
        let m = CorrelationModel::new(
            ModelKind::Tabulated {
                radii: vec![0.0, 1.0],
                density: vec![0.0, 0.0],
                atoms: vec![[1.0, 2.0 * PI]],
            },
            1,
        )
        .unwrap();
        assert!((m.correlation_at(0.7).unwrap() - 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CorrelationModel::riesz(1.5, 1).is_err());
        assert!(CorrelationModel::exponential(-1.0, 1).is_err());
        assert!(CorrelationModel::new(
            ModelKind::Tabulated {
                radii: vec![0.0, 1.0],
                density: vec![1.0, -1.0],
                atoms: vec![]
            },
            1
        )
        .is_err());
    }
}

//! Covariances of the mild solutions of the stochastic heat and wave equations
//! at fixed and mixed times, computed by spectral quadrature.

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::radial::{radial_integral, Tolerance, Weight};
use crate::spectral::CorrelationModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Linear operator of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Equation {
    /// `∂_t u = -(-Δ)^{α/2} u + noise`
    Heat { alpha: f64 },
    /// `∂_t² u = Δu + noise`, `d <= 3`
    Wave,
}

/// An equation together with its noise correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub equation: Equation,
    pub model: CorrelationModel,
}

/// A covariance value with its quadrature error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovEvaluation {
    pub t: f64,
    pub t2: Option<f64>,
    pub z: Vec<f64>,
    pub value: f64,
    pub error: f64,
}

impl EquationSpec {
    /// Builds a spec after checking Dalang's condition and the wave dimension range.
    pub fn new(equation: Equation, model: CorrelationModel) -> Result<Self> {
        let spec = EquationSpec { equation, model };
        spec.check()?;
        let report = spec.model.check_dalang(spec.alpha())?;
        if !report.satisfied {
            return Err(Error::UnsatisfiedCondition(format!(
                "dalang condition fails for {}: {}",
                spec.model.id(),
                report.divergence_witness.unwrap_or_default()
            )));
        }
        Ok(spec)
    }

    pub fn heat(alpha: f64, model: CorrelationModel) -> Result<Self> {
        Self::new(Equation::Heat { alpha }, model)
    }

    pub fn wave(model: CorrelationModel) -> Result<Self> {
        Self::new(Equation::Wave, model)
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }

    /// Order of the spatial operator (2 for the wave equation).
    pub fn alpha(&self) -> f64 {
        match self.equation {
            Equation::Heat { alpha } => alpha,
            Equation::Wave => 2.0,
        }
    }

    /// Cheap structural checks (parameter ranges, closed-form tail exponents).
    fn check(&self) -> Result<()> {
        self.model.validate()?;
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::DomainError(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if matches!(self.equation, Equation::Wave) && self.dim() > 3 {
            return Err(Error::Unsupported(format!(
                "wave equation requires d <= 3, got {}",
                self.dim()
            )));
        }
        if self.model.spectral_tail_exponent() + alpha <= self.dim() as f64 {
            return Err(Error::UnsatisfiedCondition(format!(
                "dalang condition fails for {}",
                self.model.id()
            )));
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        match self.equation {
            Equation::Heat { alpha } => format!("heat(alpha={alpha})+{}", self.model.id()),
            Equation::Wave => format!("wave+{}", self.model.id()),
        }
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn evaluate(spec: &EquationSpec, w: Weight, r: f64) -> Result<(f64, f64)> {
    spec.check()?;
    let e = radial_integral(&spec.model, w, r, Tolerance::default())?;
    let c = (2.0 * PI).powi(spec.dim() as i32);
    Ok((e.value / c, e.error / c))
}

fn check_lag(spec: &EquationSpec, z: &[f64]) -> Result<f64> {
    if z.len() != spec.dim() {
        return Err(Error::DomainError(format!(
            "lag has length {}, dimension {}",
            z.len(),
            spec.dim()
        )));
    }
    Ok(norm(z))
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!(
            "time must be positive, got {t}"
        )))
    }
}

/// Mixed-time heat covariance at lag norm `r`.
pub fn heat_covariance_radial(spec: &EquationSpec, t1: f64, t2: f64, r: f64) -> Result<(f64, f64)> {
    check_time(t1)?;
    check_time(t2)?;
    let alpha = match spec.equation {
        Equation::Heat { alpha } => alpha,
        Equation::Wave => {
            return Err(Error::DomainError(
                "heat covariance requested for a wave spec".into(),
            ))
        }
    };
    evaluate(spec, Weight::Heat { alpha, t1, t2 }, r)
}

/// Wave covariance at lag norm `r`.
pub fn wave_covariance_radial(spec: &EquationSpec, t: f64, r: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    if !matches!(spec.equation, Equation::Wave) {
        return Err(Error::DomainError(
            "wave covariance requested for a heat spec".into(),
        ));
    }
    evaluate(spec, Weight::Wave { t }, r)
}

/// `E[Z^H(t,x) Z^H(t,x+z)]`.
pub fn heat_covariance(spec: &EquationSpec, t: f64, z: &[f64]) -> Result<CovEvaluation> {
    let r = check_lag(spec, z)?;
    let (value, error) = heat_covariance_radial(spec, t, t, r)?;
    Ok(CovEvaluation {
        t,
        t2: None,
        z: z.to_vec(),
        value,
        error,
    })
}

/// `E[Z^H(t1,x) Z^H(t2,x+z)]`.
pub fn heat_covariance_st(
    spec: &EquationSpec,
    t1: f64,
    t2: f64,
    z: &[f64],
) -> Result<CovEvaluation> {
    let r = check_lag(spec, z)?;
    let (value, error) = heat_covariance_radial(spec, t1, t2, r)?;
    Ok(CovEvaluation {
        t: t1,
        t2: Some(t2),
        z: z.to_vec(),
        value,
        error,
    })
}

/// `E[Z^W(t,x) Z^W(t,x+z)]`.
pub fn wave_covariance(spec: &EquationSpec, t: f64, z: &[f64]) -> Result<CovEvaluation> {
    let r = check_lag(spec, z)?;
    let (value, error) = wave_covariance_radial(spec, t, r)?;
    Ok(CovEvaluation {
        t,
        t2: None,
        z: z.to_vec(),
        value,
        error,
    })
}

/// Fixed-time covariance at lag norm `r` for either equation.
pub fn covariance_radial(spec: &EquationSpec, t: f64, r: f64) -> Result<(f64, f64)> {
    match spec.equation {
        Equation::Heat { .. } => heat_covariance_radial(spec, t, t, r),
        Equation::Wave => wave_covariance_radial(spec, t, r),
    }
}

/// Variance `v(t)` of the solution at a fixed point.
pub fn variance(spec: &EquationSpec, t: f64) -> Result<f64> {
    Ok(covariance_radial(spec, t, 0.0)?.0)
}

/// Lag grid and vanishing threshold for [`correlation_function`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    /// First nonzero lag of the geometric grid.
    pub r_min: f64,
    pub r_max: f64,
    /// Number of nonzero lags.
    pub points: usize,
    pub threshold: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            r_min: 1e-2,
            r_max: 1e3,
            points: 120,
            threshold: 0.05,
        }
    }
}

/// Radial correlation `ρ_t(r) = cov(t, r)/v(t)` on a lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub id: String,
    pub t: f64,
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest quadrature error estimate relative to the variance.
    pub max_error: f64,
    pub monotone: bool,
    pub terminal: f64,
    pub threshold: f64,
    pub vanishes: bool,
    /// Mixing functional at the last lag relative to its value at zero, when defined.
    pub mixing_ratio: Option<f64>,
    /// Set when the mixing functional has decayed below the threshold while the table has not.
    pub inconsistent_decay: bool,
}

impl CorrelationTable {
    /// Builds a table from explicit values (lags must start at 0 and increase).
    pub fn from_values(
        id: impl Into<String>,
        t: f64,
        lags: Vec<f64>,
        values: Vec<f64>,
        threshold: f64,
    ) -> Result<Self> {
        if lags.len() < 2 || lags.len() != values.len() || lags[0] != 0.0 {
            return Err(Error::InvalidModel(
                "correlation table needs matching lags starting at 0".into(),
            ));
        }
        let terminal = *values.last().expect("non-empty");
        let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-9);
        let t = CorrelationTable {
            id: id.into(),
            t,
            lags,
            values,
            max_error: 0.0,
            monotone,
            terminal,
            threshold,
            vanishes: terminal.abs() <= threshold,
            mixing_ratio: None,
            inconsistent_decay: false,
        };
        t.interpolant()?;
        Ok(t)
    }

    pub fn interpolant(&self) -> Result<Pchip> {
        Pchip::new(self.lags.clone(), self.values.clone())
            .ok_or_else(|| Error::InvalidModel("lags must increase strictly".into()))
    }

    pub fn max_lag(&self) -> f64 {
        *self.lags.last().expect("non-empty")
    }

    /// CSV rows `lag,correlation`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# macropeaks-schema v1\nlag,correlation\n");
        for (l, v) in self.lags.iter().zip(&self.values) {
            s.push_str(&format!("{l:.17e},{v:.17e}\n"));
        }
        s
    }
}

fn lag_grid(opts: &TableOptions) -> Result<Vec<f64>> {
    if !(opts.r_min > 0.0 && opts.r_max > opts.r_min && opts.points >= 2) {
        return Err(Error::InvalidRange(format!(
            "need 0 < r_min < r_max and points >= 2, got {opts:?}"
        )));
    }
    let ratio = (opts.r_max / opts.r_min).powf(1.0 / (opts.points - 1) as f64);
    let mut lags = vec![0.0];
    lags.extend((0..opts.points).map(|i| {
        if i + 1 == opts.points {
            opts.r_max
        } else {
            opts.r_min * ratio.powi(i as i32)
        }
    }));
    Ok(lags)
}

/// Builds the correlation table without enforcing the vanishing threshold.
pub fn correlation_table(
    spec: &EquationSpec,
    t: f64,
    opts: &TableOptions,
) -> Result<CorrelationTable> {
    let lags = lag_grid(opts)?;
    let evals = lags
        .par_iter()
        .map(|&r| covariance_radial(spec, t, r))
        .collect::<Result<Vec<_>>>()?;
    let v = evals[0].0;
    if !(v > 0.0) {
        return Err(Error::DomainError(format!("variance {v} is not positive")));
    }
    let values: Vec<f64> = evals.iter().map(|e| e.0 / v).collect();
    let max_error = evals.iter().map(|e| e.1 / v).fold(0.0, f64::max);
    let mut table = CorrelationTable::from_values(spec.id(), t, lags, values, opts.threshold)?;
    table.max_error = max_error;
    if let Ok(m0) = spec.model.mixing_functional_radial(spec.alpha(), 0.0) {
        if let Ok(m1) = spec
            .model
            .mixing_functional_radial(spec.alpha(), opts.r_max)
        {
            let ratio = m1.value / m0.value;
            table.mixing_ratio = Some(ratio);
            table.inconsistent_decay = ratio.abs() <= opts.threshold && !table.vanishes;
        }
    }
    Ok(table)
}

/// `ρ_t(r) = cov(t, r)/v(t)` on a geometric lag grid; fails when the terminal value
/// does not fall below the vanishing threshold.
pub fn correlation_function(
    spec: &EquationSpec,
    t: f64,
    opts: &TableOptions,
) -> Result<CorrelationTable> {
    let table = correlation_table(spec, t, opts)?;
    if !table.vanishes {
        return Err(Error::NonVanishingCorrelation {
            terminal: table.terminal,
            threshold: table.threshold,
            lag: table.max_lag(),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white_heat() -> EquationSpec {
        EquationSpec::heat(2.0, CorrelationModel::white_noise(1)).unwrap()
    }

    #[test]
    fn white_noise_heat_variance() {
        let v = variance(&white_heat(), 1.0).unwrap();
        assert!((v - (1.0 / (2.0 * PI)).sqrt()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn white_noise_heat_covariance_matches_real_space_formula() {
        // cov(t, z) = ∫_0^t p_{2s}(z) ds with p_{2s} the heat kernel of variance 2s
        let spec = white_heat();
        for &z in &[0.5, 1.0, 3.0] {
            let oracle = crate::quadrature::integrate(
                |s: f64| (-(z * z) / (8.0 * s)).exp() / (8.0 * PI * s).sqrt(),
                0.0,
                1.0,
                1e-13,
                0.0,
                200,
            )
            .value;
            let v = heat_covariance(&spec, 1.0, &[z]).unwrap().value;
            assert!((v - oracle).abs() < 1e-8, "z={z}: {v} vs {oracle}");
        }
    }

    #[test]
    fn heat_covariance_vanishes_at_small_time() {
        let v = variance(&white_heat(), 1e-10).unwrap();
        assert!(v.abs() < 1e-4);
    }

    #[test]
    fn wave_white_noise_variance() {
        let spec = EquationSpec::wave(CorrelationModel::white_noise(1)).unwrap();
        assert!((variance(&spec, 1.0).unwrap() - 0.25).abs() < 1e-6);
        assert!((variance(&spec, 2.0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wave_white_noise_covariance_real_space() {
        // G(s,x) = ½ 1{|x|<s}; cov = ∫_0^t ¼ (2s - |z|)_+ ds = (t - |z|/2)_+² / 4
        let spec = EquationSpec::wave(CorrelationModel::white_noise(1)).unwrap();
        for &z in &[0.3, 1.0, 1.9, 2.5] {
            let v = wave_covariance(&spec, 1.0, &[z]).unwrap().value;
            let oracle = (1.0f64 - z / 2.0).max(0.0).powi(2) / 4.0;
            assert!((v - oracle).abs() < 1e-7, "z={z}: {v} vs {oracle}");
        }
    }

    #[test]
    fn mixed_time_reduces_to_fixed_time() {
        let spec = white_heat();
        for &z in &[0.0, 0.7, 5.0] {
            let a = heat_covariance(&spec, 1.3, &[z]).unwrap().value;
            let b = heat_covariance_st(&spec, 1.3, 1.3, &[z]).unwrap().value;
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_time_symmetric_and_matches_double_integral() {
        let spec = white_heat();
        let a = heat_covariance_st(&spec, 1.0, 2.0, &[0.0]).unwrap().value;
        let b = heat_covariance_st(&spec, 2.0, 1.0, &[0.0]).unwrap().value;
        assert_eq!(a, b);
        // ∫_0^1 (4π(3-2s))^{-1/2} ds
        let oracle = crate::quadrature::integrate(
            |s: f64| 1.0 / (4.0 * PI * (3.0 - 2.0 * s)).sqrt(),
            0.0,
            1.0,
            1e-14,
            0.0,
            50,
        )
        .value;
        assert!((a - oracle).abs() < 1e-8, "{a} vs {oracle}");
    }

    #[test]
    fn riesz_variance_scaling() {
        let spec = EquationSpec::heat(2.0, CorrelationModel::riesz(0.5, 1).unwrap()).unwrap();
        let r = variance(&spec, 2.0).unwrap() / variance(&spec, 1.0).unwrap();
        assert!((r - 2f64.powf(0.75)).abs() < 1e-3, "{r}");
    }

    #[test]
    fn correlation_table_white_noise_monotone() {
        let spec = white_heat();
        let t = correlation_function(
            &spec,
            1.0,
            &TableOptions {
                r_min: 0.01,
                r_max: 40.0,
                points: 60,
                threshold: 0.05,
            },
        )
        .unwrap();
        assert_eq!(t.values[0], 1.0);
        assert!(t.monotone);
        assert!(t.terminal < 1e-6);
        assert!(!t.inconsistent_decay);
    }

    #[test]
    fn nonvanishing_correlation_is_an_error() {
        let spec = EquationSpec::heat(2.0, CorrelationModel::log_decay(1.0, 1).unwrap()).unwrap();
        let r = correlation_function(
            &spec,
            1.0,
            &TableOptions {
                r_min: 0.1,
                r_max: 10.0,
                points: 8,
                threshold: 0.05,
            },
        );
        assert!(matches!(r, Err(Error::NonVanishingCorrelation { .. })));
    }

    #[test]
    fn riesz_correlation_below_power_envelope() {
        let spec = EquationSpec::heat(2.0, CorrelationModel::riesz(0.5, 1).unwrap()).unwrap();
        let t = correlation_table(
            &spec,
            1.0,
            &TableOptions {
                r_min: 1.0,
                r_max: 1e4,
                points: 20,
                threshold: 0.05,
            },
        )
        .unwrap();
        // ρ(r) r^β stays bounded at large r
        let ratios: Vec<f64> = t
            .lags
            .iter()
            .zip(&t.values)
            .skip(5)
            .map(|(r, v)| v * r.powf(0.5))
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 2.0, "{ratios:?}");
        assert!(ratios.last().unwrap() > &0.5);
    }

    #[test]
    fn dalang_failure_rejected() {
        let r = EquationSpec::heat(0.5, CorrelationModel::white_noise(1));
        assert!(matches!(r, Err(Error::UnsatisfiedCondition(_))));
        assert!(EquationSpec::wave(CorrelationModel::white_noise(4)).is_err());
    }
}

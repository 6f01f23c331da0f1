//! Tall-peak extraction.
//!
//! A spatial sample point `x` with `‖x‖ > e` is a peak at level `γ` when
//! `Z(x) ≥ √(2γ v log‖x‖)`. Space-time samples `(t, x)` are peaks when
//! `Z(t,x) ≥ √(2γ v(t) g(t))`, and are reported at `(e^{g(t)}, x)`.

use crate::error::{Error, Result};
use crate::fieldgen::FieldSample;
use crate::geometry::{euclidean_norm, PointSet};
use crate::interp::Pchip;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Gauge `√(2γ v log‖x‖)` on `‖x‖ > e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub gamma: f64,
    pub variance: f64,
}

impl GaugeParams {
    pub fn new(gamma: f64, variance: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::DomainError(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidVariance(variance));
        }
        Ok(GaugeParams { gamma, variance })
    }

    /// Gauge for a normalized field.
    pub fn normalized(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0)
    }

    /// Threshold at a point of norm `r`, or `None` when `r <= e`.
    pub fn threshold(&self, r: f64) -> Option<f64> {
        (r > E).then(|| (2.0 * self.gamma * self.variance * r.ln()).sqrt())
    }
}

/// Stretch factor `g` on `(1, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StretchFactor {
    /// `g(r) = r^δ`.
    PowerLaw { delta: f64 },
    /// `g(r) = e^r`.
    Exp,
    /// Monotone cubic through `(r_i, g_i)`; undefined outside the table.
    Tabulated { r: Vec<f64>, g: Vec<f64> },
}

impl StretchFactor {
    pub fn power_law(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::DomainError(format!(
                "stretch exponent must be positive, got {delta}"
            )));
        }
        Ok(StretchFactor::PowerLaw { delta })
    }

    pub fn tabulated(r: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let s = StretchFactor::Tabulated { r, g };
        s.interp()?;
        Ok(s)
    }

    fn interp(&self) -> Result<Pchip> {
        match self {
            StretchFactor::Tabulated { r, g } => {
                if r.len() != g.len() || r.len() < 2 || r[0] <= 1.0 {
                    return Err(Error::DomainError(
                        "stretch table needs matching lengths and r > 1".into(),
                    ));
                }
                Pchip::new(r.clone(), g.clone())
                    .ok_or_else(|| Error::DomainError("stretch table radii must increase".into()))
            }
            _ => unreachable!(),
        }
    }

    pub fn id(&self) -> String {
        match self {
            StretchFactor::PowerLaw { delta } => format!("r^{delta}"),
            StretchFactor::Exp => "e^r".into(),
            StretchFactor::Tabulated { r, .. } => format!("table({} knots)", r.len()),
        }
    }

    /// `g(r)`.
    pub fn forward(&self, r: f64) -> Result<f64> {
        if !(r > 1.0) {
            return Err(Error::DomainError(format!(
                "stretch factor is defined on (1,inf), got {r}"
            )));
        }
        match self {
            StretchFactor::PowerLaw { delta } => Ok(r.powf(*delta)),
            StretchFactor::Exp => Ok(r.exp()),
            StretchFactor::Tabulated { .. } => {
                let p = self.interp()?;
                p.eval(r).ok_or(Error::Extrapolation {
                    r,
                    max: p.domain().1,
                })
            }
        }
    }

    /// `g^{-1}(y)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match self {
            StretchFactor::PowerLaw { delta } => {
                let r = y.powf(1.0 / delta);
                if r > 1.0 {
                    Ok(r)
                } else {
                    Err(Error::DomainError(format!("{y} is outside the range of g")))
                }
            }
            StretchFactor::Exp => {
                if y > E {
                    Ok(y.ln())
                } else {
                    Err(Error::DomainError(format!("{y} is outside the range of g")))
                }
            }
            StretchFactor::Tabulated { r, g } => {
                let p = self.interp()?;
                let (lo, hi) = (r[0], r[r.len() - 1]);
                let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(y >= g[0] && y <= gmax) {
                    return Err(Error::DomainError(format!("{y} is outside the range of g")));
                }
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if p.eval(m).unwrap_or(f64::INFINITY) < y {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                Ok(b)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakKind {
    Spatial,
    SpaceTime,
}

/// Where an exceedance set came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: PeakKind,
    pub gamma: f64,
    /// Slice variance for spatial sets.
    pub variance: Option<f64>,
    pub stretch: Option<StretchFactor>,
    pub correlation_id: String,
    /// `(seed, replicate)` of each source sample.
    pub sources: Vec<(u64, u64)>,
}

/// Sample points passing the gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceSet {
    pub points: PointSet,
    pub values: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub provenance: Provenance,
}

impl ExceedanceSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let d = self.points.dim();
        let mut s = String::from("# macropeaks-schema v1\n");
        let cols: Vec<String> = (0..d)
            .map(|i| format!("x{i}"))
            .chain(["value".into(), "threshold".into()])
            .collect();
        s.push_str(&cols.join(","));
        s.push('\n');
        for ((p, v), th) in self.points.iter().zip(&self.values).zip(&self.thresholds) {
            for c in p {
                s.push_str(&format!("{c:.17e},"));
            }
            s.push_str(&format!("{v:.17e},{th:.17e}\n"));
        }
        s
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.provenance).expect("provenance serializes")
    }
}

/// Points of a spatial sample with `‖x‖ > e` and `Z(x) ≥ √(2γ v log‖x‖)`.
pub fn extract_spatial_peaks(field: &FieldSample, gauge: &GaugeParams) -> ExceedanceSet {
    let mut points = PointSet::new(field.points.dim());
    let mut values = Vec::new();
    let mut thresholds = Vec::new();
    for (p, &z) in field.points.iter().zip(&field.values) {
        if let Some(th) = gauge.threshold(euclidean_norm(p)) {
            if z >= th {
                points.push(p);
                values.push(z);
                thresholds.push(th);
            }
        }
    }
    ExceedanceSet {
        points,
        values,
        thresholds,
        provenance: Provenance {
            kind: PeakKind::Spatial,
            gamma: gauge.gamma,
            variance: Some(gauge.variance),
            stretch: None,
            correlation_id: field.correlation_id.clone(),
            sources: vec![(field.seed, field.replicate)],
        },
    }
}

/// Space-time peaks. Sample points are `(t, x)`; survivors are returned as `(e^{g(t)}, x)`.
///
/// Points with `t <= 1` or `g(t) <= 1` lie outside `(e, ∞) × R^d` and are skipped.
pub fn extract_spacetime_peaks<V: Fn(f64) -> f64>(
    fields: &[FieldSample],
    gamma: f64,
    variance: V,
    g: &StretchFactor,
) -> Result<ExceedanceSet> {
    if !(gamma > 0.0) {
        return Err(Error::DomainError(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let dim = fields.first().map(|f| f.points.dim()).unwrap_or(2);
    if dim < 2 {
        return Err(Error::DomainError(
            "space-time points need a time coordinate and at least one space coordinate".into(),
        ));
    }
    let mut points = PointSet::new(dim);
    let mut values = Vec::new();
    let mut thresholds = Vec::new();
    let mut sources = Vec::new();
    let mut buf = vec![0.0; dim];
    for field in fields {
        if field.points.dim() != dim {
            return Err(Error::MismatchedPoints);
        }
        sources.push((field.seed, field.replicate));
        for (p, &z) in field.points.iter().zip(&field.values) {
            let t = p[0];
            let v = variance(t);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidVariance(v));
            }
            if t <= 1.0 {
                continue;
            }
            let gt = g.forward(t)?;
            if gt <= 1.0 {
                continue;
            }
            let th = (2.0 * gamma * v * gt).sqrt();
            if z >= th {
                buf[0] = gt.exp();
                buf[1..].copy_from_slice(&p[1..]);
                points.push(&buf);
                values.push(z);
                thresholds.push(th);
            }
        }
    }
    Ok(ExceedanceSet {
        points,
        values,
        thresholds,
        provenance: Provenance {
            kind: PeakKind::SpaceTime,
            gamma,
            variance: None,
            stretch: Some(g.clone()),
            correlation_id: fields
                .first()
                .map(|f| f.correlation_id.clone())
                .unwrap_or_default(),
            sources,
        },
    })
}

/// One ε-sequence `𝓚(g^{-1}(n), e^{nε})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchSequence {
    pub epsilon: f64,
    pub n: Vec<u32>,
    pub values: Vec<f64>,
    pub vanishes: bool,
    pub final_half_monotone: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub stretch: String,
    pub threshold: f64,
    pub sequences: Vec<StretchSequence>,
    pub passed: bool,
}

/// Default vanishing threshold for stretch validation.
pub const STRETCH_THRESHOLD: f64 = 0.05;

/// Checks that `𝓚(g^{-1}(n), e^{nε})` falls below `threshold` and is non-increasing over the last half of `n_range`.
pub fn validate_stretch<K: Fn(f64, f64) -> f64>(
    corr: K,
    g: &StretchFactor,
    epsilons: &[f64],
    n_range: std::ops::RangeInclusive<u32>,
    threshold: f64,
) -> Result<StretchReport> {
    let ns: Vec<u32> = n_range.collect();
    if ns.len() < 2 {
        return Err(Error::InvalidRange(
            "need at least two grid values of n".into(),
        ));
    }
    let mut times = Vec::with_capacity(ns.len());
    for &n in &ns {
        let t = g.inverse(n as f64).map_err(|_| {
            Error::PreconditionFail(format!(
                "g does not reach {n}; it must increase to infinity"
            ))
        })?;
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(Error::PreconditionFail(format!(
                    "g is not strictly increasing near g^-1({n})"
                )));
            }
        }
        times.push(t);
    }
    let mut sequences = Vec::new();
    for &eps in epsilons {
        let values: Vec<f64> = ns
            .iter()
            .zip(&times)
            .map(|(&n, &t)| corr(t, (n as f64 * eps).exp()))
            .collect();
        let half = values.len() / 2;
        let final_half_monotone = values[half..]
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        let vanishes = *values.last().unwrap() < threshold;
        sequences.push(StretchSequence {
            epsilon: eps,
            n: ns.clone(),
            values,
            vanishes,
            final_half_monotone,
            passed: vanishes && final_half_monotone,
        });
    }
    let passed = sequences.iter().all(|s| s.passed);
    Ok(StretchReport {
        stretch: g.id(),
        threshold,
        sequences,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::Generator;

    fn sample(points: PointSet, values: Vec<f64>) -> FieldSample {
        FieldSample {
            points,
            values,
            generator: Generator::Cholesky,
            seed: 0,
            replicate: 0,
            correlation_id: "test".into(),
            warnings: vec![],
        }
    }

    #[test]
    fn zero_field_has_no_peaks() {
        let f = sample(PointSet::from_scalars([3.0, 10.0, 100.0]), vec![0.0; 3]);
        assert!(extract_spatial_peaks(&f, &GaugeParams::normalized(0.1).unwrap()).is_empty());
    }

    #[test]
    fn threshold_is_closed_and_norm_is_strict() {
        let g = GaugeParams::new(0.7, 2.0).unwrap();
        let x = 20.0f64;
        let th = (2.0 * 0.7 * 2.0 * x.ln()).sqrt();
        let f = sample(PointSet::from_scalars([x, E, -E]), vec![th, 1e6, 1e6]);
        let s = extract_spatial_peaks(&f, &g);
        assert_eq!(s.len(), 1);
        assert_eq!(s.points.point(0), &[x]);
    }

    #[test]
    fn spacetime_identity_stretch() {
        let pts = PointSet::from_points(2, &[vec![3.0, 0.5], vec![4.0, -1.0]]).unwrap();
        let g = StretchFactor::power_law(1.0).unwrap();
        let th = (2.0 * 0.5 * 1.5 * 3.0f64).sqrt();
        let f = sample(pts, vec![th, 0.0]);
        let s = extract_spacetime_peaks(std::slice::from_ref(&f), 0.5, |_| 1.5, &g).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.points.point(0)[0] - 3.0f64.exp()).abs() < 1e-12);
        assert_eq!(s.points.point(0)[1], 0.5);
        let zero = sample(f.points.clone(), vec![0.0, 0.0]);
        assert!(extract_spacetime_peaks(&[zero], 0.5, |_| 1.0, &g)
            .unwrap()
            .is_empty());
        assert!(matches!(
            extract_spacetime_peaks(&[f], 0.5, |_| 0.0, &g),
            Err(Error::InvalidVariance(_))
        ));
    }

    #[test]
    fn stretch_inverse_round_trips() {
        let gs = [
            StretchFactor::power_law(0.5).unwrap(),
            StretchFactor::Exp,
            StretchFactor::tabulated(vec![1.5, 2.0, 4.0, 8.0], vec![2.0, 3.0, 5.0, 9.0]).unwrap(),
        ];
        for g in &gs {
            for &r in &[2.0, 3.0, 5.5] {
                let y = g.forward(r).unwrap();
                assert!((g.inverse(y).unwrap() - r).abs() < 1e-9, "{}", g.id());
            }
        }
    }

    #[test]
    fn riesz_heat_envelope_with_power_stretch_passes() {
        let (c, beta) = (1.0, 0.5);
        let k = |t: f64, x: f64| (c * t * t * x.powf(-beta)).min(1.0);
        let g = StretchFactor::power_law(0.5).unwrap();
        // g^{-1}(n) = n², so 𝓚 = n⁴ e^{-nεβ}
        let rep = validate_stretch(k, &g, &[0.5, 1.0], 10..=300, STRETCH_THRESHOLD).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn log_envelope_with_exponential_stretch_passes() {
        let c = 0.5;
        let k = |t: f64, x: f64| (c * (c * t).exp() / x.ln()).min(1.0);
        let rep = validate_stretch(
            k,
            &StretchFactor::Exp,
            &[0.5, 1.0],
            3..=400,
            STRETCH_THRESHOLD,
        )
        .unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn bounded_stretch_is_rejected() {
        let g =
            StretchFactor::tabulated(vec![2.0, 3.0, 4.0, 50.0], vec![2.0, 3.0, 4.0, 4.0]).unwrap();
        let res = validate_stretch(|_, _| 0.0, &g, &[0.5], 2..=10, STRETCH_THRESHOLD);
        assert!(matches!(res, Err(Error::PreconditionFail(_))));
    }
}

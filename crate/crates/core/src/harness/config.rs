//! Experiment configuration (TOML or JSON).

use crate::covariance::Equation;
use crate::dimension::Trend;
use crate::error::{Error, Result};
use crate::spectral::{CorrelationModel, ModelKind};
use serde::{Deserialize, Deserializer, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Field correlation, or the noise correlation when an equation is given.
    pub correlation: CorrelationModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equation: Option<EquationBlock>,
    pub lattice: LatticeBlock,
    pub gauge: GaugeBlock,
    pub estimator: EstimatorBlock,
    pub replication: ReplicationBlock,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<Target>,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Equation whose time-`t` slice, normalized to unit variance, is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationBlock {
    #[serde(flatten)]
    pub equation: Equation,
    pub time: f64,
    /// Nonzero lags in the correlation table.
    #[serde(default = "default_table_points")]
    pub table_points: usize,
}

fn default_table_points() -> usize {
    120
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    #[default]
    Circulant,
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PointsKind {
    /// Regular grid from `start` to `e^{n_max}` in each coordinate.
    #[default]
    Lattice,
    /// `∪_{n <= n_max} 𝓘_n(θ)`.
    Skeleton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    #[serde(default)]
    pub generator: GeneratorKind,
    #[serde(default)]
    pub points: PointsKind,
    pub n_max: u32,
    #[serde(default = "one")]
    pub spacing: f64,
    #[serde(default = "e")]
    pub start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn e() -> f64 {
    std::f64::consts::E
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeBlock {
    /// One level or a list of levels.
    #[serde(deserialize_with = "one_or_many")]
    pub gamma: Vec<f64>,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Counting,
    Series,
    Bisection,
    Thickness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorBlock {
    pub methods: Vec<Method>,
    /// Shell range `[lo, hi]` for counting and thickness.
    pub n_range: [u32; 2],
    /// Covering exponents for the series method.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Bracket width for bisection.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicationBlock {
    pub seed: u64,
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Mean of per-replicate counting slopes.
    Counting,
    /// Counting slope of the replicate-averaged cell counts.
    CountingPooled,
    /// Mean of per-replicate bisection estimates.
    Bisection,
    /// Fraction of replicates with full skeleton occupancy from some `k <= k_max`.
    Thickness,
    /// Fraction of replicates whose covering series at `rho` has trend `trend`.
    Series,
}

/// A declared expectation checked after the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub metric: Metric,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<Trend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            path,
            format!("must be a positive number, got {v}"),
        ))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| {
            Error::config(
                e.span()
                    .map(|r| format!("bytes {r:?}"))
                    .unwrap_or_else(|| "<toml>".into()),
                e.message().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)
            .map_err(|e| Error::config(format!("line {}", e.line()), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let res = if path.extension().is_some_and(|x| x == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        res.map_err(|e| match e {
            Error::Config { path: p, message } => {
                Error::config(p, format!("{message} (in {})", path.display()))
            }
            other => other,
        })
    }

    /// Canonical JSON form, used as the config echo in records.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<serialize>", e.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.correlation.dim
    }

    /// Checks values and cross-block consistency; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        self.correlation
            .validate()
            .map_err(|e| Error::config("correlation", e.to_string()))?;
        let d = self.dim();
        if let Some(eq) = &self.equation {
            positive("equation.time", eq.time)?;
            if let Equation::Heat { alpha } = eq.equation {
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(Error::config(
                        "equation.alpha",
                        format!("must lie in (0,2], got {alpha}"),
                    ));
                }
            }
            if eq.table_points < 8 {
                return Err(Error::config(
                    "equation.table_points",
                    "need at least 8 lags",
                ));
            }
        } else if matches!(self.correlation.kind, ModelKind::Riesz { .. }) {
            return Err(Error::config(
                "correlation.kind",
                "a Riesz kernel has no value at the origin; sample it through an equation block",
            ));
        }
        let l = &self.lattice;
        if l.n_max < 2 {
            return Err(Error::config("lattice.n_max", "must be at least 2"));
        }
        positive("lattice.spacing", l.spacing)?;
        if !l.start.is_finite() {
            return Err(Error::config("lattice.start", "must be finite"));
        }
        if l.generator == GeneratorKind::Circulant && (d != 1 || l.points != PointsKind::Lattice) {
            return Err(Error::config(
                "lattice.generator",
                "the circulant generator needs d = 1 and points = \"lattice\"",
            ));
        }
        if l.points == PointsKind::Skeleton {
            match l.theta {
                Some(t) if t > 0.0 && t < 1.0 => {}
                _ => {
                    return Err(Error::config(
                        "lattice.theta",
                        "skeleton points need theta in (0,1)",
                    ))
                }
            }
        }
        if self.gauge.gamma.is_empty() {
            return Err(Error::config(
                "gauge.gamma",
                "at least one level is required",
            ));
        }
        for (i, &g) in self.gauge.gamma.iter().enumerate() {
            positive(&format!("gauge.gamma[{i}]"), g)?;
        }
        let est = &self.estimator;
        if est.methods.is_empty() {
            return Err(Error::config(
                "estimator.methods",
                "at least one method is required",
            ));
        }
        let [lo, hi] = est.n_range;
        if !(lo >= 1 && lo < hi) {
            return Err(Error::config(
                "estimator.n_range",
                format!("need 1 <= lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if hi > l.n_max + 1 {
            return Err(Error::config(
                "estimator.n_range",
                format!(
                    "upper shell {hi} lies beyond the sampled region (n_max = {})",
                    l.n_max
                ),
            ));
        }
        if (est.methods.contains(&Method::Series) || est.methods.contains(&Method::Bisection))
            && hi < 4
        {
            return Err(Error::config(
                "estimator.n_range",
                "series and bisection need shells up to at least 4",
            ));
        }
        if est.methods.contains(&Method::Series) && est.rho.is_empty() {
            return Err(Error::config(
                "estimator.rho",
                "the series method needs at least one exponent",
            ));
        }
        for (i, &r) in est.rho.iter().enumerate() {
            positive(&format!("estimator.rho[{i}]"), r)?;
        }
        if est.methods.contains(&Method::Thickness) {
            match est.theta {
                Some(t) if t > 0.0 && t < 1.0 => {}
                _ => {
                    return Err(Error::config(
                        "estimator.theta",
                        "thickness needs theta in (0,1)",
                    ))
                }
            }
        }
        positive("estimator.tolerance", est.tolerance)?;
        if self.replication.replicates == 0 {
            return Err(Error::config(
                "replication.replicates",
                "must be at least 1",
            ));
        }
        for (i, t) in self.targets.iter().enumerate() {
            let p = |f: &str| format!("targets[{i}].{f}");
            if !self.gauge.gamma.contains(&t.gamma) {
                return Err(Error::config(
                    p("gamma"),
                    format!("{} is not among gauge.gamma", t.gamma),
                ));
            }
            let need_method = match t.metric {
                Metric::Counting | Metric::CountingPooled => Method::Counting,
                Metric::Bisection => Method::Bisection,
                Metric::Thickness => Method::Thickness,
                Metric::Series => Method::Series,
            };
            if !est.methods.contains(&need_method) {
                return Err(Error::config(
                    p("metric"),
                    format!("needs estimator method {need_method:?}"),
                ));
            }
            match t.metric {
                Metric::Counting | Metric::CountingPooled | Metric::Bisection => {
                    if t.expected.is_none() {
                        return Err(Error::config(p("expected"), "required for this metric"));
                    }
                    positive(&p("tolerance"), t.tolerance.unwrap_or(f64::NAN))?;
                }
                Metric::Thickness => {
                    if t.k_max.is_none() {
                        return Err(Error::config(
                            p("k_max"),
                            "required for the thickness metric",
                        ));
                    }
                }
                Metric::Series => {
                    match t.rho {
                        Some(r) if est.rho.contains(&r) => {}
                        _ => return Err(Error::config(p("rho"), "must be one of estimator.rho")),
                    }
                    if t.trend.is_none() {
                        return Err(Error::config(p("trend"), "required for the series metric"));
                    }
                }
            }
            if let Some(f) = t.min_fraction {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::config(p("min_fraction"), "must lie in [0,1]"));
                }
            }
        }
        Ok(())
    }
}

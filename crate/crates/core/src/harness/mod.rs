//! Experiment pipelines: correlation → field → peaks → dimension estimates.

pub mod config;
pub mod io;
pub mod spacetime;

pub use config::{
    EstimatorBlock, ExperimentConfig, GaugeBlock, GeneratorKind, LatticeBlock, Method, Metric,
    PointsKind, ReplicationBlock, Target,
};

use crate::covariance::{correlation_table, EquationSpec, TableOptions};
use crate::dimension::{
    covering_series, estimate_dim_bisection, estimate_dim_counting, fit_counting_slope,
    thickness_test, unit_cell_counts, Trend, TrendConfig,
};
use crate::error::{Error, Result};
use crate::fieldgen::{
    white_correlation, CholeskySampler, CirculantOptions, CirculantSampler, ModelCorrelation,
    RadialCorrelation, TabulatedCorrelation,
};
use crate::geometry::{exp_n, skeleton_union, PointSet};
use crate::interp::mean_stderr;
use crate::peaks::{extract_spatial_peaks, GaugeParams};
use crate::spectral::ModelKind;
use io::{opt, write_atomic, CsvTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

/// Estimates from one replicate at one gauge level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: u64,
    pub gamma: f64,
    pub peaks: usize,
    pub counting: Option<f64>,
    /// Unit-cell counts per shell, kept for the pooled estimate.
    pub cell_counts: Vec<(u32, f64)>,
    pub bisection: Option<f64>,
    pub bisection_uncertainty: Option<f64>,
    pub thickness_first_full: Option<u32>,
    pub series: Vec<(f64, Trend)>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub gamma: f64,
    pub metric: String,
    pub rho: Option<f64>,
    pub value: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub target: Target,
    pub value: f64,
    pub passed: bool,
    pub detail: String,
}

/// Everything in a record that depends only on the config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub replicates: Vec<ReplicateResult>,
    pub aggregates: Vec<Aggregate>,
    pub targets: Vec<TargetOutcome>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub name: String,
    pub version: String,
    pub config: serde_json::Value,
    pub payload: Payload,
    pub passed: bool,
    pub wall_clock_secs: f64,
}

impl ExperimentRecord {
    /// Serialized numeric payload; identical across reruns with the same config and seed.
    pub fn payload_json(&self) -> String {
        serde_json::to_string(&self.payload).expect("payload serializes")
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            4
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("record serializes");
        write_atomic(&dir.join("record.json"), json.as_bytes())?;
        let mut reps = CsvTable::new(&[
            "replicate",
            "gamma",
            "peaks",
            "counting",
            "bisection",
            "bisection_uncertainty",
            "thickness_first_full",
            "errors",
        ]);
        for r in &self.payload.replicates {
            reps.row([
                r.replicate.to_string(),
                r.gamma.to_string(),
                r.peaks.to_string(),
                opt(r.counting),
                opt(r.bisection),
                opt(r.bisection_uncertainty),
                opt(r.thickness_first_full),
                format!("\"{}\"", r.errors.join("; ").replace('"', "'")),
            ]);
        }
        reps.write(&dir.join("replicates.csv"))?;
        let mut agg = CsvTable::new(&["gamma", "metric", "rho", "value", "stderr", "count"]);
        for a in &self.payload.aggregates {
            agg.row([
                a.gamma.to_string(),
                a.metric.clone(),
                opt(a.rho),
                a.value.to_string(),
                a.stderr.to_string(),
                a.count.to_string(),
            ]);
        }
        agg.write(&dir.join("aggregates.csv"))
    }
}

/// Overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Output root; the record goes to `<out>/<name>/`.
    pub out: Option<PathBuf>,
}

enum Sampler {
    Circulant(CirculantSampler),
    Cholesky(CholeskySampler),
}

impl Sampler {
    fn values(&self, seed: u64, replicate: u64) -> Vec<f64> {
        match self {
            Sampler::Circulant(s) => s.sample_values(seed, replicate),
            Sampler::Cholesky(s) => s.sample_values(seed, replicate),
        }
    }
}

fn sample_points(cfg: &ExperimentConfig) -> Result<PointSet> {
    let l = &cfg.lattice;
    let d = cfg.dim();
    let end = exp_n(l.n_max as f64);
    match l.points {
        PointsKind::Skeleton => skeleton_union(1, l.n_max, l.theta.expect("validated"), d),
        PointsKind::Lattice => {
            if l.start > end {
                return Err(Error::config("lattice.start", "lies beyond e^n_max"));
            }
            let m = ((end - l.start) / l.spacing).floor() as usize + 1;
            let axis: Vec<f64> = (0..m).map(|k| l.start + k as f64 * l.spacing).collect();
            let mut out = PointSet::new(d);
            let total = m.checked_pow(d as u32).unwrap_or(usize::MAX);
            if total > crate::geometry::DEFAULT_POINT_CAP {
                return Err(Error::SizeCap {
                    requested: total,
                    cap: crate::geometry::DEFAULT_POINT_CAP,
                });
            }
            let mut p = vec![0.0; d];
            crate::geometry::product_indices(m, d, |idx| {
                for k in 0..d {
                    p[k] = axis[idx[k]];
                }
                out.push(&p);
            });
            Ok(out)
        }
    }
}

fn field_correlation(
    cfg: &ExperimentConfig,
    max_lag: f64,
    warnings: &mut Vec<String>,
) -> Result<Arc<dyn RadialCorrelation>> {
    match &cfg.equation {
        None => match cfg.correlation.kind {
            ModelKind::WhiteNoise => Ok(Arc::new(white_correlation())),
            _ => Ok(Arc::new(ModelCorrelation::new(cfg.correlation.clone())?)),
        },
        Some(eq) => {
            let spec = EquationSpec::new(eq.equation, cfg.correlation.clone())?;
            let opts = TableOptions {
                r_max: (max_lag * 1.01).max(1.0),
                points: eq.table_points,
                ..TableOptions::default()
            };
            let table = correlation_table(&spec, eq.time, &opts)?;
            if !table.vanishes {
                warnings.push(format!(
                    "correlation of {} at t={} is still {:.3} at lag {:.3e}",
                    table.id,
                    eq.time,
                    table.terminal,
                    table.max_lag()
                ));
            }
            Ok(Arc::new(TabulatedCorrelation::from_table(&table)?))
        }
    }
}

fn build_sampler(
    cfg: &ExperimentConfig,
    points: &PointSet,
    warnings: &mut Vec<String>,
) -> Result<Sampler> {
    let l = &cfg.lattice;
    let d = cfg.dim() as f64;
    let extent = match l.points {
        PointsKind::Lattice => (exp_n(l.n_max as f64) - l.start) * d.sqrt(),
        PointsKind::Skeleton => 2.0 * exp_n(l.n_max as f64) * d.sqrt(),
    };
    let corr = field_correlation(cfg, extent, warnings)?;
    match l.generator {
        GeneratorKind::Circulant => {
            let s = CirculantSampler::new(
                corr.as_ref(),
                points.len(),
                l.spacing,
                l.start,
                CirculantOptions::default(),
            )?;
            warnings.extend(s.warnings.iter().cloned());
            Ok(Sampler::Circulant(s))
        }
        GeneratorKind::Cholesky => Ok(Sampler::Cholesky(CholeskySampler::new(
            corr.as_ref(),
            points,
        )?)),
    }
}

fn replicate_results(
    cfg: &ExperimentConfig,
    points: &PointSet,
    values: Vec<f64>,
    replicate: u64,
) -> Vec<ReplicateResult> {
    let field = crate::fieldgen::FieldSample {
        points: points.clone(),
        values,
        generator: match cfg.lattice.generator {
            GeneratorKind::Circulant => crate::fieldgen::Generator::Circulant1d,
            GeneratorKind::Cholesky => crate::fieldgen::Generator::Cholesky,
        },
        seed: cfg.replication.seed,
        replicate,
        correlation_id: String::new(),
        warnings: Vec::new(),
    };
    let est = &cfg.estimator;
    let [lo, hi] = est.n_range;
    let trend_cfg = TrendConfig::default();
    cfg.gauge
        .gamma
        .iter()
        .map(|&gamma| {
            let gauge = GaugeParams::normalized(gamma).expect("validated");
            let peaks = extract_spatial_peaks(&field, &gauge).points;
            let mut r = ReplicateResult {
                replicate,
                gamma,
                peaks: peaks.len(),
                counting: None,
                cell_counts: Vec::new(),
                bisection: None,
                bisection_uncertainty: None,
                thickness_first_full: None,
                series: Vec::new(),
                errors: Vec::new(),
            };
            for m in &est.methods {
                match m {
                    Method::Counting => {
                        r.cell_counts = unit_cell_counts(&peaks, lo, hi);
                        match estimate_dim_counting(&peaks, lo..=hi) {
                            Ok(e) => r.counting = Some(e.value),
                            Err(e) => r.errors.push(format!("counting: {e}")),
                        }
                    }
                    Method::Series => {
                        for &rho in &est.rho {
                            match covering_series(&peaks, rho, hi, &trend_cfg) {
                                Ok(s) => r.series.push((rho, s.trend)),
                                Err(e) => r.errors.push(format!("series: {e}")),
                            }
                        }
                    }
                    Method::Bisection => {
                        match estimate_dim_bisection(&peaks, hi, est.tolerance, &trend_cfg) {
                            Ok(e) => {
                                r.bisection = Some(e.value);
                                r.bisection_uncertainty = Some(e.uncertainty);
                            }
                            Err(e) => r.errors.push(format!("bisection: {e}")),
                        }
                    }
                    Method::Thickness => {
                        match thickness_test(&peaks, est.theta.expect("validated"), lo..=hi) {
                            Ok(t) => r.thickness_first_full = t.first_full,
                            Err(e) => r.errors.push(format!("thickness: {e}")),
                        }
                    }
                }
            }
            r
        })
        .collect()
}

fn stats(v: &[f64]) -> (f64, f64) {
    match v.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (v[0], 0.0),
        _ => mean_stderr(v),
    }
}

fn summarize(gamma: f64, metric: &str, rho: Option<f64>, v: &[f64]) -> Aggregate {
    let (value, stderr) = stats(v);
    Aggregate {
        gamma,
        metric: metric.into(),
        rho,
        value,
        stderr,
        count: v.len(),
    }
}

fn aggregate(cfg: &ExperimentConfig, reps: &[ReplicateResult]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &gamma in &cfg.gauge.gamma {
        let rs: Vec<&ReplicateResult> = reps.iter().filter(|r| r.gamma == gamma).collect();
        let k = rs.len() as f64;
        let peaks: Vec<f64> = rs.iter().map(|r| r.peaks as f64).collect();
        out.push(summarize(gamma, "peaks", None, &peaks));
        for m in &cfg.estimator.methods {
            match m {
                Method::Counting => {
                    let v: Vec<f64> = rs.iter().filter_map(|r| r.counting).collect();
                    out.push(summarize(gamma, "counting", None, &v));
                    let table: Vec<(u32, f64)> = (0..rs[0].cell_counts.len())
                        .map(|i| {
                            (
                                rs[0].cell_counts[i].0,
                                rs.iter().map(|r| r.cell_counts[i].1).sum::<f64>() / k,
                            )
                        })
                        .collect();
                    let pooled = fit_counting_slope(table, cfg.dim(), rs.len())
                        .map(|e| e.value)
                        .unwrap_or(f64::NAN);
                    out.push(Aggregate {
                        gamma,
                        metric: "counting_pooled".into(),
                        rho: None,
                        value: pooled,
                        stderr: f64::NAN,
                        count: rs.len(),
                    });
                }
                Method::Bisection => {
                    let v: Vec<f64> = rs.iter().filter_map(|r| r.bisection).collect();
                    out.push(summarize(gamma, "bisection", None, &v));
                }
                Method::Thickness => {
                    let v: Vec<f64> = rs
                        .iter()
                        .map(|r| {
                            if r.thickness_first_full.is_some() {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    out.push(summarize(gamma, "thickness_certified", None, &v));
                }
                Method::Series => {
                    for &rho in &cfg.estimator.rho {
                        for (name, trend) in [
                            ("series_summable", Trend::Summable),
                            ("series_divergent", Trend::Divergent),
                        ] {
                            let v: Vec<f64> = rs
                                .iter()
                                .map(|r| {
                                    if r.series.iter().any(|&(p, t)| p == rho && t == trend) {
                                        1.0
                                    } else {
                                        0.0
                                    }
                                })
                                .collect();
                            out.push(summarize(gamma, name, Some(rho), &v));
                        }
                    }
                }
            }
        }
    }
    out
}

fn evaluate_targets(
    cfg: &ExperimentConfig,
    reps: &[ReplicateResult],
    aggs: &[Aggregate],
) -> Vec<TargetOutcome> {
    cfg.targets
        .iter()
        .map(|t| {
            let rs: Vec<&ReplicateResult> = reps.iter().filter(|r| r.gamma == t.gamma).collect();
            let find = |metric: &str| {
                aggs.iter()
                    .find(|a| a.gamma == t.gamma && a.metric == metric)
                    .map(|a| a.value)
                    .unwrap_or(f64::NAN)
            };
            let fraction = |f: &dyn Fn(&ReplicateResult) -> bool| {
                rs.iter().filter(|r| f(r)).count() as f64 / rs.len() as f64
            };
            let (value, passed, detail) = match t.metric {
                Metric::Counting | Metric::CountingPooled | Metric::Bisection => {
                    let (expected, tol) = (
                        t.expected.expect("validated"),
                        t.tolerance.expect("validated"),
                    );
                    let value = match t.metric {
                        Metric::Counting => find("counting"),
                        Metric::CountingPooled => find("counting_pooled"),
                        _ => find("bisection"),
                    };
                    let mut passed = (value - expected).abs() <= tol;
                    let mut detail = format!("|{value:.4} - {expected}| <= {tol}");
                    if let Some(minf) = t.min_fraction {
                        let per = |r: &ReplicateResult| {
                            let v = if t.metric == Metric::Bisection {
                                r.bisection
                            } else {
                                r.counting
                            };
                            v.is_some_and(|v| (v - expected).abs() <= tol)
                        };
                        let f = fraction(&per);
                        passed &= f >= minf;
                        detail.push_str(&format!(
                            "; {f:.2} of replicates within tolerance (need {minf})"
                        ));
                    }
                    (value, passed, detail)
                }
                Metric::Thickness => {
                    let k = t.k_max.expect("validated");
                    let need = t.min_fraction.unwrap_or(1.0);
                    let f = fraction(&|r: &ReplicateResult| {
                        r.thickness_first_full.is_some_and(|n| n <= k)
                    });
                    (
                        f,
                        f >= need,
                        format!(
                            "{f:.2} of replicates fully occupied from some k <= {k} (need {need})"
                        ),
                    )
                }
                Metric::Series => {
                    let (rho, trend) = (t.rho.expect("validated"), t.trend.expect("validated"));
                    let need = t.min_fraction.unwrap_or(1.0);
                    let f = fraction(&|r: &ReplicateResult| {
                        r.series.iter().any(|&(p, tr)| p == rho && tr == trend)
                    });
                    (
                        f,
                        f >= need,
                        format!("{f:.2} of replicates show {trend:?} at rho={rho} (need {need})"),
                    )
                }
            };
            TargetOutcome {
                target: t.clone(),
                value,
                passed,
                detail,
            }
        })
        .collect()
}

/// Runs the pipeline declared by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentRecord> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.replication.seed = seed;
    }
    cfg.validate()?;
    let started = Instant::now();
    let mut warnings = Vec::new();
    if let Some(theta) = cfg.estimator.theta {
        for &g in &cfg.gauge.gamma {
            if theta < g / cfg.dim() as f64 {
                warnings.push(format!(
                    "theta={theta} < gamma/d={:.3}: a thickness certificate would exceed d - gamma",
                    g / cfg.dim() as f64
                ));
            }
        }
    }
    let points = sample_points(&cfg)?;
    let sampler = build_sampler(&cfg, &points, &mut warnings)?;
    let seed = cfg.replication.seed;
    let replicates: Vec<ReplicateResult> = (0..cfg.replication.replicates as u64)
        .into_par_iter()
        .flat_map_iter(|r| replicate_results(&cfg, &points, sampler.values(seed, r), r))
        .collect();
    let aggregates = aggregate(&cfg, &replicates);
    let targets = evaluate_targets(&cfg, &replicates, &aggregates);
    let passed = targets.iter().all(|t| t.passed);
    let name = cfg.name.clone().unwrap_or_else(|| "experiment".into());
    let record = ExperimentRecord {
        name: name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.canonical_json(),
        payload: Payload {
            replicates,
            aggregates,
            targets,
            warnings,
        },
        passed,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    if let Some(out) = opts.out.clone().or_else(|| cfg.output.dir.clone()) {
        record.write(&out.join(&name))?;
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Passed,
    Failed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub file: PathBuf,
    pub name: String,
    pub status: SuiteStatus,
    pub exit_code: i32,
    pub message: String,
    pub record: Option<ExperimentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SuiteSummary {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteSummary {
    /// 0 when every config passed; otherwise the largest per-config exit code.
    pub fn exit_code(&self) -> i32 {
        self.entries.iter().map(|e| e.exit_code).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["file", "name", "status", "exit_code", "message"]);
        for e in &self.entries {
            t.row([
                e.file.display().to_string(),
                e.name.clone(),
                format!("{:?}", e.status).to_lowercase(),
                e.exit_code.to_string(),
                format!("\"{}\"", e.message.replace('"', "'")),
            ]);
        }
        t.as_str().to_string()
    }
}

/// Runs every `.toml` and `.json` config in `dir` (sorted by file name).
pub fn run_suite(dir: &Path, opts: &RunOptions) -> Result<SuiteSummary> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::config(dir.display().to_string(), e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml" || x == "json"))
        .collect();
    files.sort();
    let entries = files
        .into_par_iter()
        .map(|file| {
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            match ExperimentConfig::from_path(&file) {
                Err(e) => SuiteEntry {
                    file,
                    name: stem,
                    status: SuiteStatus::Error,
                    exit_code: e.exit_code(),
                    message: e.to_string(),
                    record: None,
                },
                Ok(mut cfg) => {
                    if cfg.name.is_none() {
                        cfg.name = Some(stem.clone());
                    }
                    let name = cfg.name.clone().unwrap();
                    match run_experiment_with(&cfg, opts) {
                        Err(e) => SuiteEntry {
                            file,
                            name,
                            status: SuiteStatus::Error,
                            exit_code: e.exit_code(),
                            message: e.to_string(),
                            record: None,
                        },
                        Ok(rec) => {
                            let failed: Vec<String> = rec
                                .payload
                                .targets
                                .iter()
                                .filter(|t| !t.passed)
                                .map(|t| t.detail.clone())
                                .collect();
                            SuiteEntry {
                                file,
                                name,
                                status: if rec.passed {
                                    SuiteStatus::Passed
                                } else {
                                    SuiteStatus::Failed
                                },
                                exit_code: rec.exit_code(),
                                message: failed.join("; "),
                                record: Some(rec),
                            }
                        }
                    }
                }
            }
        })
        .collect();
    let summary = SuiteSummary { entries };
    if let Some(out) = &opts.out {
        write_atomic(&out.join("summary.csv"), summary.to_csv().as_bytes())?;
    }
    Ok(summary)
}

//! Samples of stationary mean-zero, variance-one Gaussian fields.
//!
//! Two generators: an exact Cholesky sampler on arbitrary point sets and a
//! circulant-embedding sampler on one-dimensional lattices. Randomness comes
//! from ChaCha8 substreams keyed by `(seed, replicate, block)`, so a replicate
//! can be regenerated in isolation and in any order.

use crate::covariance::CorrelationTable;
use crate::error::{Error, Result};
use crate::geometry::{distance, PointSet};
use crate::interp::{CompensatedSum, Pchip};
use crate::spectral::CorrelationModel;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Default maximum number of points for the Cholesky sampler.
pub const DEFAULT_CHOLESKY_CAP: usize = 8000;
/// Diagonal jitter added before factorization.
pub const JITTER: f64 = 1e-10;

/// Random stream for one `(seed, replicate, block)` triple.
pub fn substream(seed: u64, replicate: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng.set_word_pos((block as u128) << 40);
    rng
}

/// Vector of i.i.d. standard normals from a substream.
pub fn standard_normals(seed: u64, replicate: u64, block: u64, n: usize) -> Vec<f64> {
    let mut rng = substream(seed, replicate, block);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Radial correlation `ρ(r)` of a stationary isotropic field.
pub trait RadialCorrelation: Send + Sync {
    fn correlation(&self, r: f64) -> Result<f64>;
    fn id(&self) -> String;
}

impl<T: RadialCorrelation + ?Sized> RadialCorrelation for &T {
    fn correlation(&self, r: f64) -> Result<f64> {
        (**self).correlation(r)
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

impl<T: RadialCorrelation + ?Sized> RadialCorrelation for Arc<T> {
    fn correlation(&self, r: f64) -> Result<f64> {
        (**self).correlation(r)
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

/// Correlation given by a closure.
pub struct FnCorrelation<F> {
    f: F,
    id: String,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnCorrelation<F> {
    pub fn new(id: impl Into<String>, f: F) -> Self {
        FnCorrelation { f, id: id.into() }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> RadialCorrelation for FnCorrelation<F> {
    fn correlation(&self, r: f64) -> Result<f64> {
        Ok((self.f)(r))
    }
    fn id(&self) -> String {
        self.id.clone()
    }
}

/// `ρ(r) = e^{-λ r}`.
pub fn exponential_correlation(lambda: f64) -> FnCorrelation<impl Fn(f64) -> f64 + Send + Sync> {
    FnCorrelation::new(format!("exp(-{lambda}r)"), move |r: f64| {
        (-lambda * r).exp()
    })
}

/// `ρ(0) = 1`, `ρ(r) = 0` otherwise.
pub fn white_correlation() -> FnCorrelation<impl Fn(f64) -> f64 + Send + Sync> {
    FnCorrelation::new("delta", |r: f64| if r == 0.0 { 1.0 } else { 0.0 })
}

/// Normalized correlation of a function-valued spatial model, `f(r)/f(0)`.
pub struct ModelCorrelation {
    model: CorrelationModel,
    at_zero: f64,
}

impl ModelCorrelation {
    pub fn new(model: CorrelationModel) -> Result<Self> {
        let at_zero = model.correlation_at(0.0)?;
        if !(at_zero.is_finite() && at_zero > 0.0) {
            return Err(Error::InvalidModel(format!(
                "{} has no finite value at the origin",
                model.id()
            )));
        }
        Ok(ModelCorrelation { model, at_zero })
    }
}

impl RadialCorrelation for ModelCorrelation {
    fn correlation(&self, r: f64) -> Result<f64> {
        Ok(self.model.correlation_at(r)? / self.at_zero)
    }
    fn id(&self) -> String {
        self.model.id()
    }
}

/// Radial table with monotone cubic interpolation; lags outside the table are an error.
#[derive(Debug, Clone)]
pub struct TabulatedCorrelation {
    id: String,
    interp: Pchip,
}

impl TabulatedCorrelation {
    /// Table of `(lag, correlation)` pairs; the first lag must be 0 with correlation 1.
    pub fn new(id: impl Into<String>, lags: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lags.first() != Some(&0.0) {
            return Err(Error::DomainError(
                "correlation table must start at lag 0".into(),
            ));
        }
        if (values[0] - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidVariance(values[0]));
        }
        let interp = Pchip::new(lags, values)
            .ok_or_else(|| Error::DomainError("lags must be strictly increasing".into()))?;
        Ok(TabulatedCorrelation {
            id: id.into(),
            interp,
        })
    }

    /// Table from a covariance correlation table, with the lag-0 value prepended.
    pub fn from_table(table: &CorrelationTable) -> Result<Self> {
        let mut lags = vec![0.0];
        let mut values = vec![1.0];
        for (&l, &v) in table.lags.iter().zip(&table.values) {
            if l > 0.0 {
                lags.push(l);
                values.push(v);
            }
        }
        Self::new(table.id.clone(), lags, values)
    }

    pub fn max_lag(&self) -> f64 {
        self.interp.domain().1
    }
}

impl RadialCorrelation for TabulatedCorrelation {
    fn correlation(&self, r: f64) -> Result<f64> {
        self.interp.eval(r).ok_or(Error::Extrapolation {
            r,
            max: self.max_lag(),
        })
    }
    fn id(&self) -> String {
        self.id.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Cholesky,
    Circulant1d,
}

/// One realization of the field on a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub points: PointSet,
    pub values: Vec<f64>,
    pub generator: Generator,
    pub seed: u64,
    pub replicate: u64,
    pub correlation_id: String,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct SampleMeta<'a> {
    seed: u64,
    replicate: u64,
    generator: Generator,
    correlation_id: &'a str,
    points: usize,
    warnings: &'a [String],
}

impl FieldSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Point coordinates followed by the field value, one row per point.
    pub fn to_csv(&self) -> String {
        let d = self.points.dim();
        let mut s = String::from("# macropeaks-schema v1\n");
        let cols: Vec<String> = (0..d)
            .map(|i| format!("x{i}"))
            .chain(["value".to_string()])
            .collect();
        s.push_str(&cols.join(","));
        s.push('\n');
        for (p, v) in self.points.iter().zip(&self.values) {
            for c in p {
                s.push_str(&format!("{c:.17e},"));
            }
            s.push_str(&format!("{v:.17e}\n"));
        }
        s
    }

    /// JSON sidecar with seed, generator and warnings.
    pub fn metadata_json(&self) -> String {
        let meta = SampleMeta {
            seed: self.seed,
            replicate: self.replicate,
            generator: self.generator,
            correlation_id: &self.correlation_id,
            points: self.len(),
            warnings: &self.warnings,
        };
        serde_json::to_string_pretty(&meta).expect("metadata serializes")
    }
}

/// Exact sampler holding the Cholesky factor of the correlation matrix.
pub struct CholeskySampler {
    points: PointSet,
    lower: DMatrix<f64>,
    id: String,
}

impl CholeskySampler {
    pub fn new<C: RadialCorrelation + ?Sized>(corr: &C, points: &PointSet) -> Result<Self> {
        Self::with_cap(corr, points, DEFAULT_CHOLESKY_CAP)
    }

    pub fn with_cap<C: RadialCorrelation + ?Sized>(
        corr: &C,
        points: &PointSet,
        cap: usize,
    ) -> Result<Self> {
        Self::from_covariance(points, corr.id(), cap, |a, b| {
            corr.correlation(distance(a, b))
        })
    }

    /// Sampler for an arbitrary covariance `cov(x_i, x_j)`, evaluated on the lower triangle.
    /// The diagonal receives a jitter relative to its largest entry.
    pub fn from_covariance<F>(
        points: &PointSet,
        id: impl Into<String>,
        cap: usize,
        cov: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Result<f64>,
    {
        let id = id.into();
        let n = points.len();
        if n > cap {
            return Err(Error::SizeCap { requested: n, cap });
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = cov(points.point(i), points.point(j))?;
                if !v.is_finite() {
                    return Err(Error::FactorizationFailure(format!(
                        "covariance between points {i} and {j} is {v}"
                    )));
                }
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let scale = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max);
        for i in 0..n {
            m[(i, i)] += JITTER * scale;
        }
        let chol = m.cholesky().ok_or_else(|| {
            Error::FactorizationFailure(format!(
                "covariance matrix of {id} is not positive definite"
            ))
        })?;
        Ok(CholeskySampler {
            points: points.clone(),
            lower: chol.l(),
            id,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn sample_values(&self, seed: u64, replicate: u64) -> Vec<f64> {
        let z = nalgebra::DVector::from_vec(standard_normals(seed, replicate, 0, self.len()));
        (&self.lower * z).data.into()
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        FieldSample {
            points: self.points.clone(),
            values: self.sample_values(seed, replicate),
            generator: Generator::Cholesky,
            seed,
            replicate,
            correlation_id: self.id.clone(),
            warnings: Vec::new(),
        }
    }
}

/// Single exact draw on an arbitrary point set.
pub fn sample_cholesky<C: RadialCorrelation + ?Sized>(
    corr: &C,
    points: &PointSet,
    seed: u64,
) -> Result<FieldSample> {
    Ok(CholeskySampler::new(corr, points)?.sample(seed, 0))
}

/// Response to a circulant embedding with negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingFallback {
    /// Set negative eigenvalues to zero.
    #[default]
    Clip,
    /// Double the embedding length, then clip if still indefinite.
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirculantOptions {
    pub fallback: EmbeddingFallback,
    /// Largest clipped fraction of spectral mass accepted (with a warning).
    pub clip_tolerance: f64,
    pub max_attempts: usize,
}

impl Default for CirculantOptions {
    fn default() -> Self {
        CirculantOptions {
            fallback: EmbeddingFallback::Clip,
            clip_tolerance: 1e-6,
            max_attempts: 4,
        }
    }
}

/// Circulant-embedding sampler on the lattice `origin + k·spacing`, `k < n`.
pub struct CirculantSampler {
    n: usize,
    spacing: f64,
    origin: f64,
    scale: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
    id: String,
    pub clipped_mass: f64,
    pub warnings: Vec<String>,
}

fn embedding_spectrum<C: RadialCorrelation + ?Sized>(
    corr: &C,
    m: usize,
    spacing: f64,
    planner: &mut FftPlanner<f64>,
) -> Result<Vec<f64>> {
    let mut row: Vec<Complex64> = (0..m)
        .map(|j| {
            corr.correlation(j.min(m - j) as f64 * spacing)
                .map(|v| Complex64::new(v, 0.0))
        })
        .collect::<Result<_>>()?;
    planner.plan_fft_forward(m).process(&mut row);
    Ok(row.into_iter().map(|c| c.re).collect())
}

impl CirculantSampler {
    pub fn new<C: RadialCorrelation + ?Sized>(
        corr: &C,
        n: usize,
        spacing: f64,
        origin: f64,
        opts: CirculantOptions,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError(
                "lattice needs at least one point".into(),
            ));
        }
        if !(spacing > 0.0) {
            return Err(Error::DomainError(
                "lattice spacing must be positive".into(),
            ));
        }
        let id = corr.id();
        if n == 1 {
            return Ok(CirculantSampler {
                n,
                spacing,
                origin,
                scale: vec![1.0],
                fft: None,
                id,
                clipped_mass: 0.0,
                warnings: vec![],
            });
        }
        let mut planner = FftPlanner::new();
        let mut m = 2 * (n - 1);
        let attempts = match opts.fallback {
            EmbeddingFallback::Clip => 1,
            EmbeddingFallback::Double => opts.max_attempts.max(1),
        };
        let mut warnings = Vec::new();
        let mut lambda = Vec::new();
        for attempt in 0..attempts {
            lambda = embedding_spectrum(corr, m, spacing, &mut planner)?;
            let top = lambda.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let negative = lambda.iter().any(|&l| l < -1e-12 * top);
            if !negative || attempt + 1 == attempts {
                break;
            }
            warnings.push(format!("embedding of length {m} is indefinite; doubling"));
            m *= 2;
        }
        let total: f64 = lambda.iter().map(|l| l.abs()).sum();
        let top = lambda.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let clipped: f64 = lambda
            .iter()
            .filter(|&&l| l < -1e-12 * top)
            .map(|l| -l)
            .sum();
        let clipped_mass = if total > 0.0 { clipped / total } else { 0.0 };
        if clipped_mass > opts.clip_tolerance {
            return Err(Error::EmbeddingNotPsd(format!(
                "clipped spectral mass {clipped_mass:.3e} exceeds {:.1e} at embedding length {m}",
                opts.clip_tolerance
            )));
        }
        if clipped > 0.0 {
            warnings.push(format!(
                "clipped negative eigenvalues carrying {clipped_mass:.3e} of spectral mass"
            ));
        }
        let mf = m as f64;
        let scale = lambda.iter().map(|&l| (l.max(0.0) / mf).sqrt()).collect();
        let fft = planner.plan_fft_forward(m);
        Ok(CirculantSampler {
            n,
            spacing,
            origin,
            scale,
            fft: Some(fft),
            id,
            clipped_mass,
            warnings,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn embedding_len(&self) -> usize {
        self.scale.len()
    }

    pub fn points(&self) -> PointSet {
        PointSet::from_scalars((0..self.n).map(|k| self.origin + k as f64 * self.spacing))
    }

    pub fn sample_values(&self, seed: u64, replicate: u64) -> Vec<f64> {
        let Some(fft) = &self.fft else {
            return standard_normals(seed, replicate, 0, 1);
        };
        let m = self.scale.len();
        let mut rng = substream(seed, replicate, 0);
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex64::new(s * a, s * b)
            })
            .collect();
        debug_assert_eq!(buf.len(), m);
        fft.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        FieldSample {
            points: self.points(),
            values: self.sample_values(seed, replicate),
            generator: Generator::Circulant1d,
            seed,
            replicate,
            correlation_id: self.id.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Single draw on a one-dimensional lattice by circulant embedding.
pub fn sample_circulant_1d<C: RadialCorrelation + ?Sized>(
    corr: &C,
    n_points: usize,
    spacing: f64,
    origin: f64,
    seed: u64,
) -> Result<FieldSample> {
    Ok(
        CirculantSampler::new(corr, n_points, spacing, origin, CirculantOptions::default())?
            .sample(seed, 0),
    )
}

/// Empirical against target covariance for one pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEntry {
    pub i: usize,
    pub j: usize,
    pub lag: f64,
    pub target: f64,
    pub empirical: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovCheck {
    pub max_deviation: f64,
    pub entries: Vec<CovEntry>,
    /// Some point has zero empirical variance.
    pub degenerate: bool,
    pub samples: usize,
}

impl CovCheck {
    /// Largest deviation measured in standard errors (pairs with zero stderr skipped).
    pub fn max_z(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.stderr > 0.0)
            .map(|e| (e.empirical - e.target).abs() / e.stderr)
            .fold(0.0, f64::max)
    }
}

/// Second moments `E[X_i X_j]` across samples (mean zero is known), compared with `corr`.
pub fn empirical_cov_check<C: RadialCorrelation + ?Sized>(
    samples: &[FieldSample],
    corr: &C,
) -> Result<CovCheck> {
    if samples.len() < 2 {
        return Err(Error::DomainError("need at least two samples".into()));
    }
    let points = &samples[0].points;
    if samples
        .iter()
        .any(|s| &s.points != points || s.values.len() != points.len())
    {
        return Err(Error::MismatchedPoints);
    }
    let n = samples.len() as f64;
    let p = points.len();
    let mut entries = Vec::with_capacity(p * (p + 1) / 2);
    let mut degenerate = false;
    let mut max_deviation = 0.0f64;
    for i in 0..p {
        for j in 0..=i {
            let mut s = CompensatedSum::default();
            let mut s2 = CompensatedSum::default();
            for smp in samples {
                let v = smp.values[i] * smp.values[j];
                s.add(v);
                s2.add(v * v);
            }
            let mean = s.value() / n;
            let var = (s2.value() / n - mean * mean).max(0.0) * n / (n - 1.0);
            if i == j && mean == 0.0 {
                degenerate = true;
            }
            let lag = distance(points.point(i), points.point(j));
            let target = corr.correlation(lag)?;
            max_deviation = max_deviation.max((mean - target).abs());
            entries.push(CovEntry {
                i,
                j,
                lag,
                target,
                empirical: mean,
                stderr: (var / n).sqrt(),
            });
        }
    }
    Ok(CovCheck {
        max_deviation,
        entries,
        degenerate,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(n: usize) -> PointSet {
        PointSet::from_scalars((0..n).map(|k| k as f64))
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a = standard_normals(7, 3, 1, 5);
        assert_eq!(a, standard_normals(7, 3, 1, 5));
        assert_ne!(a, standard_normals(7, 4, 1, 5));
        assert_ne!(a, standard_normals(7, 3, 2, 5));
        assert_ne!(a, standard_normals(8, 3, 1, 5));
    }

    #[test]
    fn white_cholesky_covariance_is_identity() {
        let pts = PointSet::from_scalars([0.0, 1.0, 2.0]);
        let corr = white_correlation();
        let s = CholeskySampler::new(&corr, &pts).unwrap();
        let samples: Vec<_> = (0..100_000).map(|r| s.sample(11, r)).collect();
        let chk = empirical_cov_check(&samples, &corr).unwrap();
        assert!(chk.max_deviation < 0.02, "{}", chk.max_deviation);
    }

    #[test]
    fn single_point_is_standard_normal() {
        let pts = PointSet::from_scalars([3.0]);
        let s = CholeskySampler::new(&white_correlation(), &pts).unwrap();
        let v: Vec<f64> = (0..100_000).map(|r| s.sample_values(5, r)[0]).collect();
        let (m, _) = crate::interp::mean_stderr(&v);
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!(m.abs() < 0.01, "{m}");
        assert!((0.99..=1.01).contains(&var), "{var}");
    }

    #[test]
    fn invalid_correlation_fails_factorization() {
        let corr = FnCorrelation::new("1+r", |r: f64| 1.0 + r);
        let err = CholeskySampler::new(&corr, &lattice(4)).err().unwrap();
        assert!(matches!(err, Error::FactorizationFailure(_)));
    }

    #[test]
    fn size_cap_is_enforced() {
        let err = CholeskySampler::with_cap(&white_correlation(), &lattice(10), 5)
            .err()
            .unwrap();
        assert_eq!(
            err,
            Error::SizeCap {
                requested: 10,
                cap: 5
            }
        );
    }

    #[test]
    fn circulant_lag_one_correlation() {
        let corr = exponential_correlation(1.0);
        let s = CirculantSampler::new(&corr, 4096, 1.0, 0.0, CirculantOptions::default()).unwrap();
        assert!(s.warnings.is_empty());
        let mut acc = 0.0;
        let mut count = 0.0;
        for r in 0..200 {
            let v = s.sample_values(3, r);
            for w in v.windows(2) {
                acc += w[0] * w[1];
                count += 1.0;
            }
        }
        assert!((acc / count - (-1.0f64).exp()).abs() < 0.02);
    }

    #[test]
    fn circulant_single_point() {
        let s = sample_circulant_1d(&exponential_correlation(1.0), 1, 1.0, 0.0, 9).unwrap();
        assert_eq!(s.values.len(), 1);
        assert!(s.values[0].is_finite());
    }

    #[test]
    fn circulant_matches_cholesky_on_sublattice() {
        let corr = exponential_correlation(1.0);
        let circ =
            CirculantSampler::new(&corr, 2048, 1.0, 0.0, CirculantOptions::default()).unwrap();
        let sub = lattice(64);
        let chol = CholeskySampler::new(&corr, &sub).unwrap();
        let reps = 2000;
        let a: Vec<FieldSample> = (0..reps)
            .map(|r| {
                let v = circ.sample_values(1, r);
                FieldSample {
                    points: sub.clone(),
                    values: v[..64].to_vec(),
                    generator: Generator::Circulant1d,
                    seed: 1,
                    replicate: r,
                    correlation_id: String::new(),
                    warnings: vec![],
                }
            })
            .collect();
        let b: Vec<FieldSample> = (0..reps).map(|r| chol.sample(2, r)).collect();
        let ca = empirical_cov_check(&a, &corr).unwrap();
        let cb = empirical_cov_check(&b, &corr).unwrap();
        let mut worst = 0.0f64;
        for (x, y) in ca.entries.iter().zip(&cb.entries) {
            let se = (x.stderr * x.stderr + y.stderr * y.stderr).sqrt();
            worst = worst.max((x.empirical - y.empirical).abs() / se);
        }
        // 2080 pairs; the maximum of that many correlated |N(0,1)| stays well under 5
        assert!(worst < 5.0, "{worst}");
    }

    #[test]
    fn indefinite_embedding_is_reported() {
        // cos(2.5r) is a valid correlation on the line, but its even circulant extension is indefinite
        let corr = FnCorrelation::new("cos", |r: f64| (r * 2.5).cos());
        let res = CirculantSampler::new(&corr, 64, 1.0, 0.0, CirculantOptions::default());
        match res {
            Err(Error::EmbeddingNotPsd(_)) => {}
            Ok(s) => assert!(s.clipped_mass <= 1e-6),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn tabulated_correlation_refuses_extrapolation() {
        let t = TabulatedCorrelation::new("t", vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.2]).unwrap();
        assert!((t.correlation(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            t.correlation(2.5),
            Err(Error::Extrapolation { .. })
        ));
    }

    #[test]
    fn identity_check_with_iid_normals() {
        let pts = lattice(5);
        let samples: Vec<FieldSample> = (0..10_000)
            .map(|r| FieldSample {
                points: pts.clone(),
                values: standard_normals(4, r, 0, 5),
                generator: Generator::Cholesky,
                seed: 4,
                replicate: r,
                correlation_id: "delta".into(),
                warnings: vec![],
            })
            .collect();
        let chk = empirical_cov_check(&samples, &white_correlation()).unwrap();
        assert!(chk.max_deviation <= 0.05);
        assert!(!chk.degenerate);
    }

    #[test]
    fn degenerate_and_small_inputs() {
        let pts = lattice(3);
        let mk = |vals: Vec<f64>| FieldSample {
            points: pts.clone(),
            values: vals,
            generator: Generator::Cholesky,
            seed: 0,
            replicate: 0,
            correlation_id: String::new(),
            warnings: vec![],
        };
        let zero: Vec<_> = (0..4).map(|_| mk(vec![0.0; 3])).collect();
        let corr = exponential_correlation(1.0);
        let chk = empirical_cov_check(&zero, &corr).unwrap();
        assert!(chk.degenerate);
        assert!((chk.max_deviation - 1.0).abs() < 1e-15);
        let few: Vec<_> = (0..10).map(|r| mk(standard_normals(1, r, 0, 3))).collect();
        let chk = empirical_cov_check(&few, &corr).unwrap();
        assert_eq!(chk.entries.len(), 6);
        assert!(chk.entries.iter().all(|e| e.stderr > 0.0));
        let other = FieldSample {
            points: lattice(2),
            ..mk(vec![0.0, 0.0])
        };
        assert_eq!(
            empirical_cov_check(&[mk(vec![0.0; 3]), other], &corr).err(),
            Some(Error::MismatchedPoints)
        );
    }

    #[test]
    fn sampling_is_bit_reproducible() {
        let corr = exponential_correlation(0.5);
        let pts =
            PointSet::from_points(2, &[vec![0.0, 0.0], vec![1.0, 0.5], vec![2.0, 2.0]]).unwrap();
        let a = sample_cholesky(&corr, &pts, 42).unwrap();
        let b = sample_cholesky(&corr, &pts, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_circulant_1d(&corr, 100, 0.5, 0.0, 42).unwrap();
        let e = sample_circulant_1d(&corr, 100, 0.5, 0.0, 42).unwrap();
        assert_eq!(c.values, e.values);
        assert!(a
            .to_csv()
            .starts_with("# macropeaks-schema v1\nx0,x1,value\n"));
        assert!(c.metadata_json().contains("\"seed\": 42"));
    }
}

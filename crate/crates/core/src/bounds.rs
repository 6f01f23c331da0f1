//! Gaussian tail bounds and their Monte Carlo counterparts.

use crate::error::{Error, Result};
use crate::fieldgen::{substream, CholeskySampler, RadialCorrelation};
use crate::geometry::{product_indices, PointSet};
use crate::interp::mean_stderr;
use crate::quadrature::integrate;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default mesh points per axis for sup estimation.
pub const DEFAULT_MESH: usize = 17;
/// Largest vector length for the lower-tail sampler.
pub const LOWER_TAIL_CAP: usize = 1 << 22;

/// `μ = E[sup_{Q(a,1)} Z]`, with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorellParams {
    pub mu: f64,
    pub stderr: f64,
}

impl BorellParams {
    pub fn exact(mu: f64) -> Self {
        BorellParams { mu, stderr: 0.0 }
    }
}

/// `min(1, 2 exp(-x²/2 + μx))` for `x >= μ`.
pub fn borell_tis_bound(x: f64, params: &BorellParams) -> Result<f64> {
    if x < params.mu {
        return Err(Error::RangeError { x, mu: params.mu });
    }
    Ok((2.0 * (-0.5 * x * x + params.mu * x).exp()).min(1.0))
}

/// Mesh of `Q(a, 1)` with `mesh` points per axis, endpoints included.
pub fn unit_cube_mesh(anchor: &[f64], mesh: usize) -> PointSet {
    let d = anchor.len();
    let mut out = PointSet::new(d);
    let h = if mesh > 1 {
        1.0 / (mesh - 1) as f64
    } else {
        0.0
    };
    let mut p = vec![0.0; d];
    product_indices(mesh, d, |idx| {
        for k in 0..d {
            p[k] = anchor[k] + idx[k] as f64 * h;
        }
        out.push(&p);
    });
    out
}

/// Discrete maxima of the field over the meshed unit cube, one per replicate.
pub fn cube_maxima<C: RadialCorrelation + ?Sized>(
    corr: &C,
    anchor: &[f64],
    mesh: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if mesh == 0 {
        return Err(Error::DomainError(
            "mesh needs at least one point per axis".into(),
        ));
    }
    let sampler = CholeskySampler::new(corr, &unit_cube_mesh(anchor, mesh))?;
    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            sampler
                .sample_values(seed, r)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Monte Carlo `E[max over the meshed Q(a,1)]`.
pub fn estimate_mu<C: RadialCorrelation + ?Sized>(
    corr: &C,
    anchor: &[f64],
    mesh: usize,
    replicates: usize,
    seed: u64,
) -> Result<BorellParams> {
    let maxima = cube_maxima(corr, anchor, mesh, replicates, seed)?;
    let (mu, stderr) = mean_stderr(&maxima);
    Ok(BorellParams { mu, stderr })
}

/// Empirical `P{max >= x}` with binomial standard error.
pub fn tail_frequency(maxima: &[f64], x: f64) -> (f64, f64) {
    let n = maxima.len() as f64;
    let p = maxima.iter().filter(|&&m| m >= x).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    pub bound: f64,
    pub frequency: f64,
    pub stderr: f64,
}

impl TailRow {
    /// Empirical frequency exceeds the bound by more than `k` standard errors.
    pub fn violates(&self, k: f64) -> bool {
        self.frequency > self.bound + k * self.stderr
    }
}

/// Upper-tail frequencies of the meshed sup against the bound at `μ̂ + 3·stderr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorellComparison {
    pub mu: BorellParams,
    pub mu_used: f64,
    pub rows: Vec<TailRow>,
}

/// Compares tail frequencies at `x = μ̂ + offset` with the Borell–TIS bound.
pub fn borell_comparison<C: RadialCorrelation + ?Sized>(
    corr: &C,
    anchor: &[f64],
    mesh: usize,
    replicates: usize,
    seed: u64,
    offsets: &[f64],
) -> Result<BorellComparison> {
    let maxima = cube_maxima(corr, anchor, mesh, replicates, seed)?;
    let (mu, stderr) = mean_stderr(&maxima);
    let mu_used = mu + 3.0 * stderr;
    let params = BorellParams::exact(mu_used);
    let mut rows = Vec::new();
    for &o in offsets {
        let x = mu + o;
        let bound = borell_tis_bound(x.max(mu_used), &params)?;
        let (frequency, se) = tail_frequency(&maxima, x);
        rows.push(TailRow {
            x,
            bound,
            frequency,
            stderr: se,
        });
    }
    Ok(BorellComparison {
        mu: BorellParams { mu, stderr },
        mu_used,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LopesParams {
    pub rho0: f64,
    pub gamma0: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

/// `α0 = (1-ρ0)(1-√γ0)²/ρ0`, `β0 = (1-ρ0)(1-√γ0)/ρ0`.
pub fn lopes_constants(rho0: f64, gamma0: f64) -> Result<LopesParams> {
    for (name, v) in [("rho0", rho0), ("gamma0", gamma0)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::DomainError(format!(
                "{name} must lie in (0,1), got {v}"
            )));
        }
    }
    let s = 1.0 - gamma0.sqrt();
    let beta0 = (1.0 - rho0) * s / rho0;
    Ok(LopesParams {
        rho0,
        gamma0,
        alpha0: beta0 * s,
        beta0,
    })
}

/// `C n^{-α0} (log n)^{(β0-1)/2}` for `n >= 2`.
pub fn lopes_bound(n: f64, params: &LopesParams, c: f64) -> f64 {
    c * n.powf(-params.alpha0) * n.ln().powf(0.5 * (params.beta0 - 1.0))
}

/// Smallest `n0 >= 2` beyond which `lopes_bound` decreases in `n`.
pub fn lopes_monotone_from(params: &LopesParams) -> f64 {
    // d/dn log bound = (-α0 + (β0-1)/(2 log n)) / n
    ((params.beta0 - 1.0) / (2.0 * params.alpha0))
        .exp()
        .max(2.0)
}

/// `C` making the bound equal `probability` at `n`.
pub fn calibrate_lopes(n: f64, probability: f64, params: &LopesParams) -> f64 {
    probability / lopes_bound(n, params, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerTailEstimate {
    pub n: usize,
    pub threshold: f64,
    pub probability: f64,
    pub stderr: f64,
    pub replicates: usize,
}

/// `P{max_i X_i <= √(2γ0(1-ρ0) log n)}` for equicorrelated standard normals by quadrature of
/// `∫ φ(w) Φ((u - √ρ0 w)/√(1-ρ0))^n dw`.
pub fn equicorrelated_lower_tail_exact(n: usize, rho0: f64, gamma0: f64) -> Result<f64> {
    if n == 0 || !(0.0..1.0).contains(&rho0) || !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::DomainError(format!(
            "need n >= 1, rho0 in [0,1) and gamma0 in (0,1), got {n}, {rho0}, {gamma0}"
        )));
    }
    let u = (2.0 * gamma0 * (1.0 - rho0) * (n as f64).ln()).sqrt();
    let (a, b) = (rho0.sqrt(), (1.0 - rho0).sqrt());
    let f = |w: f64| {
        let upper = 0.5 * statrs::function::erf::erfc((u - a * w) / b / std::f64::consts::SQRT_2);
        let log_phi = -0.5 * w * w - 0.5 * (2.0 * std::f64::consts::PI).ln();
        (log_phi + n as f64 * (-upper).ln_1p()).exp()
    };
    let est = integrate(f, -12.0, 12.0, 1e-15, 1e-11, 2000);
    if est.error > 1e-9 {
        return Err(Error::QuadratureFailure {
            value: est.value,
            error: est.error,
            tolerance: 1e-9,
        });
    }
    Ok(est.value)
}

/// Monte Carlo `P{max_i X_i <= √(2γ0(1-ρ0) log n)}` for equicorrelated standard normals.
///
/// Uses `X_i = √ρ0 W + √(1-ρ0) ξ_i`; `ρ0 = 0` gives independent coordinates.
pub fn empirical_max_lower_tail(
    n: usize,
    rho0: f64,
    gamma0: f64,
    replicates: usize,
    seed: u64,
) -> Result<LowerTailEstimate> {
    if n == 0 {
        return Err(Error::DomainError("need at least one coordinate".into()));
    }
    if n > LOWER_TAIL_CAP {
        return Err(Error::SizeCap {
            requested: n,
            cap: LOWER_TAIL_CAP,
        });
    }
    if !(0.0..1.0).contains(&rho0) || !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::DomainError(format!(
            "need rho0 in [0,1) and gamma0 in (0,1), got {rho0}, {gamma0}"
        )));
    }
    let threshold = (2.0 * gamma0 * (1.0 - rho0) * (n as f64).ln()).sqrt();
    let (a, b) = (rho0.sqrt(), (1.0 - rho0).sqrt());
    let hits: usize = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r, n as u64);
            let w: f64 = rng.sample(StandardNormal);
            // max_i X_i <= th  iff  max_i ξ_i <= (th - a W)/b
            let cut = (threshold - a * w) / b;
            for _ in 0..n {
                let xi: f64 = rng.sample(StandardNormal);
                if xi > cut {
                    return 0;
                }
            }
            1
        })
        .sum();
    let p = hits as f64 / replicates as f64;
    Ok(LowerTailEstimate {
        n,
        threshold,
        probability: p,
        stderr: (p * (1.0 - p) / replicates as f64).sqrt(),
        replicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LopesRow {
    pub n: usize,
    pub probability: f64,
    pub stderr: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LopesComparison {
    pub params: LopesParams,
    /// Constant calibrated at the first grid point.
    pub c: f64,
    pub rows: Vec<LopesRow>,
}

/// Lower-tail probabilities on an `n` grid against the bound calibrated at the first `n`.
pub fn lopes_comparison(
    ns: &[usize],
    rho0: f64,
    gamma0: f64,
    replicates: usize,
    seed: u64,
) -> Result<LopesComparison> {
    let params = lopes_constants(rho0, gamma0)?;
    let est: Vec<LowerTailEstimate> = ns
        .iter()
        .map(|&n| empirical_max_lower_tail(n, rho0, gamma0, replicates, seed))
        .collect::<Result<_>>()?;
    let first = est
        .first()
        .ok_or_else(|| Error::DomainError("empty n grid".into()))?;
    let c = calibrate_lopes(first.n as f64, first.probability, &params);
    let rows = est
        .iter()
        .map(|e| LopesRow {
            n: e.n,
            probability: e.probability,
            stderr: e.stderr,
            bound: lopes_bound(e.n as f64, &params, c),
        })
        .collect();
    Ok(LopesComparison { params, c, rows })
}

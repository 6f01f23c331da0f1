//! Space-time peaks of the heat solution sampled on skeleton points.
//!
//! Times are the integers `τ ∈ (e^n, e^{n+1}]`, mapped to `t = g^{-1}(log τ)`. For each
//! `τ` and each anchor `x ∈ 𝓘_n(θ)` the field is sampled on the δ-subskeleton of
//! `Q(x, e^{nθ})`. Full occupancy of every `{τ} × Q(x, e^{nθ})` from some shell on
//! gives the lower bound `1 + d(1-θ)`; the counting slope of the peak set gives the upper one.

use crate::covariance::{heat_covariance_st, variance, EquationSpec};
use crate::dimension::estimate_dim_counting;
use crate::error::{Error, Result};
use crate::fieldgen::{CholeskySampler, DEFAULT_CHOLESKY_CAP};
use crate::geometry::{exp_n, subskeleton_in_cube, Cube, PointSet, SkeletonSpec};
use crate::peaks::{extract_spacetime_peaks, StretchFactor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeDesign {
    pub spec: EquationSpec,
    pub stretch: StretchFactor,
    pub gamma: f64,
    pub theta: f64,
    pub delta: f64,
    pub n_lo: u32,
    pub n_hi: u32,
}

/// Sample points `(t, x)` with the occupancy cell of each.
#[derive(Debug, Clone)]
pub struct SpaceTimeGrid {
    pub points: PointSet,
    /// `(n, τ, anchor index)` per point.
    pub cells: Vec<(u32, u64, usize)>,
    /// Number of cells per shell.
    pub cells_per_shell: Vec<(u32, usize)>,
}

impl SpaceTimeDesign {
    pub fn grid(&self) -> Result<SpaceTimeGrid> {
        if self.spec.dim() != 1 {
            return Err(Error::Unsupported(
                "space-time grids are built for d = 1".into(),
            ));
        }
        let mut points = PointSet::new(2);
        let mut cells = Vec::new();
        let mut cells_per_shell = Vec::new();
        for n in self.n_lo..=self.n_hi {
            let anchors = SkeletonSpec::new(n, self.theta, 1)?.anchors();
            let side = exp_n(n as f64 * self.theta);
            let sub: Vec<Vec<f64>> = anchors
                .iter()
                .map(|&a| {
                    let s = subskeleton_in_cube(n, self.delta, &Cube::new(vec![a], side)?)?;
                    Ok(s.points.iter().map(|p| p[0]).collect())
                })
                .collect::<Result<_>>()?;
            let taus =
                (exp_n(n as f64).floor() as u64 + 1)..=(exp_n(n as f64 + 1.0).floor() as u64);
            let mut count = 0;
            for tau in taus {
                let t = self.stretch.inverse((tau as f64).ln())?;
                for (k, xs) in sub.iter().enumerate() {
                    count += 1;
                    for &x in xs {
                        points.push(&[t, x]);
                        cells.push((n, tau, k));
                    }
                }
            }
            cells_per_shell.push((n, count));
        }
        Ok(SpaceTimeGrid {
            points,
            cells,
            cells_per_shell,
        })
    }

    /// Factorizes the space-time covariance on the grid; entries are cached by time pair and lag.
    pub fn sampler(&self, grid: &SpaceTimeGrid) -> Result<CholeskySampler> {
        let pts = &grid.points;
        let mut keys: Vec<(u64, u64, u64)> = Vec::new();
        for i in 0..pts.len() {
            for j in 0..=i {
                keys.push(cov_key(pts.point(i), pts.point(j)));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let values: Vec<f64> = keys
            .par_iter()
            .map(|&(a, b, r)| {
                heat_covariance_st(
                    &self.spec,
                    f64::from_bits(a),
                    f64::from_bits(b),
                    &[f64::from_bits(r)],
                )
                .map(|c| c.value)
            })
            .collect::<Result<_>>()?;
        let table: HashMap<(u64, u64, u64), f64> = keys.into_iter().zip(values).collect();
        CholeskySampler::from_covariance(pts, self.spec.id(), DEFAULT_CHOLESKY_CAP, |p, q| {
            Ok(table[&cov_key(p, q)])
        })
    }
}

fn cov_key(p: &[f64], q: &[f64]) -> (u64, u64, u64) {
    let (a, b) = if p[0] <= q[0] {
        (p[0], q[0])
    } else {
        (q[0], p[0])
    };
    (a.to_bits(), b.to_bits(), (p[1] - q[1]).abs().to_bits())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeReplicate {
    pub replicate: u64,
    pub peaks: usize,
    /// Occupied cells over total, per shell.
    pub occupancy: Vec<(u32, usize, usize)>,
    /// Smallest `k` with full occupancy for all shells in `[k, n_hi]`.
    pub first_full: Option<u32>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl SpaceTimeReplicate {
    /// Both bounds exist and lie within `tol` of `target`.
    pub fn brackets(&self, target: f64, tol: f64) -> bool {
        matches!((self.lower, self.upper), (Some(l), Some(u)) if (l - target).abs() <= tol && (u - target).abs() <= tol)
    }
}

/// One replicate: sample, extract space-time peaks, test occupancy and fit the counting slope.
pub fn spacetime_replicate(
    design: &SpaceTimeDesign,
    grid: &SpaceTimeGrid,
    sampler: &CholeskySampler,
    variances: &HashMap<u64, f64>,
    seed: u64,
    replicate: u64,
) -> Result<SpaceTimeReplicate> {
    let field = sampler.sample(seed, replicate);
    let peaks = extract_spacetime_peaks(
        std::slice::from_ref(&field),
        design.gamma,
        |t| variances[&t.to_bits()],
        &design.stretch,
    )?;
    let mut hit: HashMap<(u32, u64, usize), bool> = HashMap::new();
    for (i, &cell) in grid.cells.iter().enumerate() {
        let p = field.points.point(i);
        let th =
            (2.0 * design.gamma * variances[&p[0].to_bits()] * design.stretch.forward(p[0])?)
                .sqrt();
        *hit.entry(cell).or_default() |= field.values[i] >= th;
    }
    let occupancy: Vec<(u32, usize, usize)> = grid
        .cells_per_shell
        .iter()
        .map(|&(n, total)| (n, hit.iter().filter(|(c, &h)| c.0 == n && h).count(), total))
        .collect();
    let first_full = occupancy
        .iter()
        .rev()
        .take_while(|(_, occ, total)| occ == total)
        .last()
        .map(|o| o.0);
    let d = design.spec.dim() as f64;
    // τ ∈ (e^n, e^{n+1}] lies in shell n + 1
    let upper = estimate_dim_counting(&peaks.points, design.n_lo + 1..=design.n_hi + 1)
        .ok()
        .map(|e| e.value);
    Ok(SpaceTimeReplicate {
        replicate,
        peaks: peaks.len(),
        occupancy,
        first_full,
        lower: first_full.map(|_| 1.0 + d * (1.0 - design.theta)),
        upper,
    })
}

/// Runs `replicates` replicates of `design`.
pub fn run_spacetime(
    design: &SpaceTimeDesign,
    seed: u64,
    replicates: usize,
) -> Result<Vec<SpaceTimeReplicate>> {
    let grid = design.grid()?;
    let sampler = design.sampler(&grid)?;
    let mut variances = HashMap::new();
    for p in grid.points.iter() {
        if let std::collections::hash_map::Entry::Vacant(e) = variances.entry(p[0].to_bits()) {
            e.insert(variance(&design.spec, p[0])?);
        }
    }
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| spacetime_replicate(design, &grid, &sampler, &variances, seed, r))
        .collect()
}

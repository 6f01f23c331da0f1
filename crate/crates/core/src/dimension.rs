//! Shell coverings and macroscopic dimension estimates.
//!
//! `ν^n_ρ(E) = inf Σ (s(Q_i)/e^n)^ρ` over covers of `E ∩ S_n` by cubes of side
//! at least 1 contained in `S_n`. In one dimension the infimum is computed
//! exactly; in higher dimensions a multi-scale tree cover gives an upper bound.

use crate::error::{Error, Result};
use crate::geometry::{
    euclidean_norm, exp_n, shell_bounds, shell_of, Cube, PointSet, SkeletonSpec,
};
use crate::interp::ls_fit;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMethod {
    ExactDp,
    /// Upper bound only.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub n: u32,
    pub rho: f64,
    pub value: f64,
    pub cubes: Vec<Cube>,
    pub method: CoverMethod,
}

impl CoveringResult {
    /// Cost of the realized cover at another exponent.
    pub fn cost_at(&self, rho: f64) -> f64 {
        self.cubes
            .iter()
            .map(|c| cube_cost(c.side, self.n, rho))
            .sum()
    }
}

fn cube_cost(side: f64, n: u32, rho: f64) -> f64 {
    (side.max(1.0) / exp_n(n as f64)).powf(rho)
}

/// Points of `points` lying in `S_n`.
pub fn shell_points(points: &PointSet, n: u32) -> PointSet {
    points.filter(|p| shell_of(p) == n)
}

/// Splits a set by shell index, keeping shells `0..=n_max`.
pub fn partition_by_shell(points: &PointSet, n_max: u32) -> Vec<PointSet> {
    let mut out = vec![PointSet::new(points.dim()); n_max as usize + 1];
    for p in points.iter() {
        let n = shell_of(p);
        if n <= n_max {
            out[n as usize].push(p);
        }
    }
    out
}

/// Connected pieces `[lo, hi)` of `S_n` in one dimension.
fn components_1d(n: u32) -> Vec<(f64, f64)> {
    let (inner, outer) = shell_bounds(n);
    if n == 0 {
        vec![(-1.0, 1.0)]
    } else {
        vec![(-outer, -inner), (inner, outer)]
    }
}

/// `ν^n_ρ` of a set; exact in `d = 1`, tree cover in `d >= 2`.
pub fn nu_n_rho(points: &PointSet, n: u32, rho: f64) -> CoveringResult {
    assert!(rho > 0.0, "covering exponent must be positive");
    let shell = shell_points(points, n);
    if points.dim() == 1 {
        nu_exact_1d(&shell, n, rho)
    } else {
        nu_tree(&shell, n, rho)
    }
}

/// Tree cover in any dimension; an upper bound for `ν^n_ρ`.
pub fn nu_n_rho_greedy(points: &PointSet, n: u32, rho: f64) -> CoveringResult {
    nu_tree(&shell_points(points, n), n, rho)
}

fn nu_exact_1d(shell: &PointSet, n: u32, rho: f64) -> CoveringResult {
    let mut value = 0.0;
    let mut cubes = Vec::new();
    for (lo, hi) in components_1d(n) {
        let mut xs: Vec<f64> = shell
            .iter()
            .map(|p| p[0])
            .filter(|&x| x >= lo && x < hi)
            .collect();
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let (dp, from) = if rho > 1.0 {
            cover_dp_convex(&xs, n, rho)
        } else {
            cover_dp_concave(&xs, n, rho)
        };
        value += dp[xs.len()];
        let mut j = xs.len();
        while j > 0 {
            let i = from[j];
            // half-open cubes approach the infimum from above
            let mut side = (xs[j - 1] - xs[i]).max(1.0);
            let mut corner = xs[i].min(hi - side);
            while corner + side <= xs[j - 1] {
                side = side.next_up();
                corner = xs[i].min(hi - side);
            }
            cubes.push(Cube {
                corner: vec![corner],
                side,
            });
            j = i;
        }
    }
    cubes.reverse();
    CoveringResult {
        n,
        rho,
        value,
        cubes,
        method: CoverMethod::ExactDp,
    }
}

// dp[j] is the cheapest cover of xs[..j]; the last cube covers xs[from[j]..j].
// Near-ties go to the cover with fewer cubes.
struct CoverDp {
    dp: Vec<f64>,
    count: Vec<usize>,
    from: Vec<usize>,
}

impl CoverDp {
    fn new(m: usize) -> Self {
        CoverDp {
            dp: vec![0.0; m + 1],
            count: vec![0; m + 1],
            from: vec![0; m + 1],
        }
    }

    fn offer(&mut self, j: usize, i: usize, cand: f64, best: &mut (f64, usize)) {
        let tie = best.0.is_finite() && (cand - best.0).abs() <= 1e-14 * best.0;
        if (cand < best.0 && !tie) || (tie && self.count[i] + 1 < self.count[best.1] + 1) {
            *best = (cand, i);
            self.dp[j] = cand;
            self.count[j] = self.count[i] + 1;
            self.from[j] = i;
        }
    }
}

/// `ρ > 1`: a cube of span `s > 1` with `s^ρ > s + 1` costs more than `⌊s⌋ + 1`
/// unit cubes over the same points, and the excess grows with `s`, so the scan stops there.
fn cover_dp_convex(xs: &[f64], n: u32, rho: f64) -> (Vec<f64>, Vec<usize>) {
    let m = xs.len();
    let mut st = CoverDp::new(m);
    for j in 1..=m {
        let mut best = (f64::INFINITY, j - 1);
        for i in (0..j).rev() {
            let span = xs[j - 1] - xs[i];
            if span > 1.0 && span.powf(rho) > span + 1.0 {
                break;
            }
            let cand = st.dp[i] + cube_cost(span, n, rho);
            st.offer(j, i, cand, &mut best);
        }
    }
    (st.dp, st.from)
}

/// `ρ <= 1`. Candidates within span 1 all cost `e^{-nρ}`, so the leftmost is best
/// (`dp` is nondecreasing). Beyond span 1 the cost is concave, so a newer candidate
/// beats an older one on a prefix of future `j`; a stack of candidates, each owning
/// a range of `j`, gives the minimum with binary searches.
fn cover_dp_concave(xs: &[f64], n: u32, rho: f64) -> (Vec<f64>, Vec<usize>) {
    let m = xs.len();
    let mut st = CoverDp::new(m);
    let unit = cube_cost(1.0, n, rho);
    let val = |dp: &[f64], i: usize, j: usize| dp[i] + cube_cost(xs[j - 1] - xs[i], n, rho);
    // (candidate, end): the candidate owns j below `end` and above the owner above it
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut near = 0usize;
    for j in 1..=m {
        while stack.len() > 1 && stack.last().unwrap().1 <= j {
            stack.pop();
        }
        // candidates leaving the near window join the far stack
        while xs[j - 1] - xs[near] > 1.0 {
            let b = near;
            near += 1;
            // `b` beats everything popped so far on [j, start)
            let mut start = j;
            loop {
                let Some(&(a, a_end)) = stack.last() else {
                    stack.push((b, m + 1));
                    break;
                };
                if val(&st.dp, b, start) >= val(&st.dp, a, start) {
                    // no better than `a` from `start` on, hence no better than what follows `a`
                    if start > j {
                        stack.push((b, start));
                    }
                    break;
                }
                // first index in [start, a_end) where `a` is at least as good as `b`
                let (mut l, mut r) = (start, a_end);
                while l < r {
                    let mid = (l + r) / 2;
                    if mid <= m && val(&st.dp, b, mid) < val(&st.dp, a, mid) {
                        l = mid + 1;
                    } else {
                        r = mid;
                    }
                }
                if l >= a_end {
                    stack.pop();
                    start = a_end;
                } else {
                    stack.push((b, l));
                    break;
                }
            }
        }
        let mut best = (f64::INFINITY, j - 1);
        st.offer(j, near, st.dp[near] + unit, &mut best);
        if let Some(&(a, _)) = stack.last() {
            let cand = val(&st.dp, a, j);
            st.offer(j, a, cand, &mut best);
        }
    }
    (st.dp, st.from)
}

/// Minimum over all partitions of the points of `S_n` into groups, each group
/// covered by one interval of side `max(1, span)` inside a single piece of `S_n`.
/// Exhaustive; meant for small sets.
pub fn nu_brute_force_1d(points: &PointSet, n: u32, rho: f64) -> f64 {
    assert_eq!(points.dim(), 1);
    let mut xs: Vec<f64> = shell_points(points, n).iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    assert!(xs.len() <= 12, "brute force is exponential");
    let comps = components_1d(n);
    let comp = |x: f64| {
        comps
            .iter()
            .position(|&(lo, hi)| x >= lo && x < hi)
            .unwrap()
    };
    let mut best = f64::INFINITY;
    let mut groups: Vec<Vec<f64>> = Vec::new();
    fn rec(
        i: usize,
        xs: &[f64],
        groups: &mut Vec<Vec<f64>>,
        best: &mut f64,
        n: u32,
        rho: f64,
        comp: &dyn Fn(f64) -> usize,
    ) {
        if i == xs.len() {
            let mut total = 0.0;
            for g in groups.iter() {
                if g.iter().any(|&x| comp(x) != comp(g[0])) {
                    return;
                }
                let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                total += cube_cost(hi - lo, n, rho);
            }
            *best = best.min(total);
            return;
        }
        for k in 0..groups.len() {
            groups[k].push(xs[i]);
            rec(i + 1, xs, groups, best, n, rho, comp);
            groups[k].pop();
        }
        groups.push(vec![xs[i]]);
        rec(i + 1, xs, groups, best, n, rho, comp);
        groups.pop();
    }
    if xs.is_empty() {
        return 0.0;
    }
    rec(0, &xs, &mut groups, &mut best, n, rho, &comp);
    best
}

/// Disjoint boxes `[lo, hi)` whose union is `S_n`.
fn shell_slabs(n: u32, d: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (inner, outer) = shell_bounds(n);
    if n == 0 {
        return vec![(vec![-1.0; d], vec![1.0; d])];
    }
    let mut out = Vec::with_capacity(2 * d);
    for k in 0..d {
        for sign in [-1.0, 1.0] {
            let mut lo = vec![0.0; d];
            let mut hi = vec![0.0; d];
            for i in 0..d {
                if i < k {
                    lo[i] = -inner;
                    hi[i] = inner;
                } else if i > k {
                    lo[i] = -outer;
                    hi[i] = outer;
                } else if sign > 0.0 {
                    lo[i] = inner;
                    hi[i] = outer;
                } else {
                    lo[i] = -outer;
                    hi[i] = -inner;
                }
            }
            out.push((lo, hi));
        }
    }
    out
}

fn tree_cover(
    pts: &[&[f64]],
    corner: &[f64],
    side: f64,
    n: u32,
    rho: f64,
    out: &mut Vec<Cube>,
) -> f64 {
    let d = corner.len();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for p in pts {
        for k in 0..d {
            mins[k] = mins[k].min(p[k]);
            maxs[k] = maxs[k].max(p[k]);
        }
    }
    let extent = (0..d).map(|k| maxs[k] - mins[k]).fold(0.0, f64::max);
    let own_side = extent.max(1.0).min(side);
    let own = cube_cost(own_side, n, rho);
    let own_cube = Cube {
        corner: (0..d)
            .map(|k| mins[k].min(corner[k] + side - own_side))
            .collect(),
        side: own_side,
    };
    if pts.len() == 1 || side / 2.0 < 1.0 || own_side <= 1.0 {
        out.push(own_cube);
        return own;
    }
    let half = side / 2.0;
    let mut children: HashMap<usize, Vec<&[f64]>> = HashMap::new();
    for &p in pts {
        let mut key = 0;
        for k in 0..d {
            if p[k] >= corner[k] + half {
                key |= 1 << k;
            }
        }
        children.entry(key).or_default().push(p);
    }
    let mut sub = Vec::new();
    let mut total = 0.0;
    for (key, cp) in &children {
        let c: Vec<f64> = (0..d)
            .map(|k| corner[k] + if key >> k & 1 == 1 { half } else { 0.0 })
            .collect();
        total += tree_cover(cp, &c, half, n, rho, &mut sub);
        if total >= own {
            break;
        }
    }
    if total < own {
        out.extend(sub);
        total
    } else {
        out.push(own_cube);
        own
    }
}

fn nu_tree(shell: &PointSet, n: u32, rho: f64) -> CoveringResult {
    let d = shell.dim();
    let mut value = 0.0;
    let mut cubes = Vec::new();
    if shell.is_empty() {
        return CoveringResult {
            n,
            rho,
            value,
            cubes,
            method: CoverMethod::Greedy,
        };
    }
    let slabs = shell_slabs(n, d);
    let (inner, outer) = shell_bounds(n);
    let root = if n == 0 { 2.0 } else { outer - inner };
    let mut tiles: HashMap<(usize, Vec<usize>), Vec<&[f64]>> = HashMap::new();
    for p in shell.iter() {
        let s = slabs
            .iter()
            .position(|(lo, hi)| {
                p.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(x, (l, h))| *x >= *l && *x < *h)
            })
            .expect("shell point lies in a slab");
        let (lo, hi) = &slabs[s];
        let idx: Vec<usize> = (0..d)
            .map(|k| {
                let count = ((hi[k] - lo[k]) / root - 1e-12).ceil().max(1.0) as usize;
                (((p[k] - lo[k]) / root).floor() as usize).min(count - 1)
            })
            .collect();
        tiles.entry((s, idx)).or_default().push(p);
    }
    let mut keys: Vec<_> = tiles.keys().cloned().collect();
    keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for key in keys {
        let (lo, hi) = &slabs[key.0];
        let corner: Vec<f64> = (0..d)
            .map(|k| {
                let count = ((hi[k] - lo[k]) / root - 1e-12).ceil().max(1.0) as usize;
                if key.1[k] + 1 == count {
                    hi[k] - root
                } else {
                    lo[k] + key.1[k] as f64 * root
                }
            })
            .collect();
        value += tree_cover(&tiles[&key], &corner, root, n, rho, &mut cubes);
    }
    CoveringResult {
        n,
        rho,
        value,
        cubes,
        method: CoverMethod::Greedy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Summable,
    Divergent,
    Inconclusive,
}

/// Trend classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    /// `|slope|` beyond which the log-linear trend is decisive.
    pub slope_threshold: f64,
    /// Slopes at or above `-flat_tolerance` count as flat.
    pub flat_tolerance: f64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            slope_threshold: 0.1,
            flat_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringSeries {
    pub rho: f64,
    /// `(n, ν^n_ρ)` for `n = 1..=n_max`.
    pub values: Vec<(u32, f64)>,
    /// Log-linear slope over the final half, when at least two values there are positive.
    pub slope: Option<f64>,
    pub trend: Trend,
    pub method: CoverMethod,
}

/// Classifies a per-shell sequence by the log-linear slope of its final half.
pub fn classify_trend(values: &[(u32, f64)], cfg: &TrendConfig) -> (Option<f64>, Trend) {
    if values.iter().all(|&(_, v)| v == 0.0) {
        return (None, Trend::Summable);
    }
    let start = values.len() / 2;
    let tail = &values[start..];
    let (x, y): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(n, v)| (n as f64, v.ln()))
        .unzip();
    if x.len() < 2 {
        return (None, Trend::Summable);
    }
    let (slope, _) = ls_fit(&x, &y).expect("distinct shell indices");
    let all_positive = tail.iter().all(|&(_, v)| v > 0.0);
    let trend = if slope > cfg.slope_threshold || (slope >= -cfg.flat_tolerance && all_positive) {
        Trend::Divergent
    } else if slope < -cfg.slope_threshold {
        Trend::Summable
    } else {
        Trend::Inconclusive
    };
    (Some(slope), trend)
}

/// `ν^n_ρ` for `n = 1..=n_max` with its trend.
pub fn covering_series(
    points: &PointSet,
    rho: f64,
    n_max: u32,
    cfg: &TrendConfig,
) -> Result<CoveringSeries> {
    let shells = partition_by_shell(points, n_max);
    covering_series_shells(&shells, rho, cfg)
}

fn covering_series_shells(
    shells: &[PointSet],
    rho: f64,
    cfg: &TrendConfig,
) -> Result<CoveringSeries> {
    let n_max = shells.len() as u32 - 1;
    if n_max < 4 {
        return Err(Error::InvalidRange(format!(
            "covering series needs n_max >= 4, got {n_max}"
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidRange(format!(
            "covering exponent must be positive, got {rho}"
        )));
    }
    let results: Vec<CoveringResult> = (1..=n_max)
        .into_par_iter()
        .map(|n| nu_n_rho(&shells[n as usize], n, rho))
        .collect();
    let method = if shells[0].dim() == 1 {
        CoverMethod::ExactDp
    } else {
        CoverMethod::Greedy
    };
    let values: Vec<(u32, f64)> = results.iter().map(|r| (r.n, r.value)).collect();
    let (slope, trend) = classify_trend(&values, cfg);
    Ok(CoveringSeries {
        rho,
        values,
        slope,
        trend,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    CountingSlope,
    SeriesBisection,
    Thickness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n_lo: u32,
    pub n_hi: u32,
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub method: EstimateMethod,
    pub value: f64,
    /// Half-width of the bracket (bisection) or standard error across replicates.
    pub uncertainty: f64,
    pub lower: f64,
    pub upper: f64,
    /// `false` when the estimate rests on greedy covers and is an upper bound only.
    pub exact: bool,
    pub fit: Option<FitDiagnostics>,
    /// Per-shell quantity behind the estimate (counts or series values).
    pub table: Vec<(u32, f64)>,
    /// Probed exponents and their trends.
    pub probes: Vec<(f64, Trend)>,
    pub replicates: usize,
}

/// Distinct unit cells `⌊x⌋` hit per shell, for points with `‖x‖ > e`.
pub fn unit_cell_counts(points: &PointSet, n_lo: u32, n_hi: u32) -> Vec<(u32, f64)> {
    let mut cells: Vec<HashSet<Vec<i64>>> = vec![HashSet::new(); (n_hi - n_lo + 1) as usize];
    for p in points.iter() {
        if euclidean_norm(p) <= E {
            continue;
        }
        let n = shell_of(p);
        if n < n_lo || n > n_hi {
            continue;
        }
        cells[(n - n_lo) as usize].insert(p.iter().map(|v| v.floor() as i64).collect());
    }
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| (n_lo + i as u32, c.len() as f64))
        .collect()
}

/// Counting estimate from a per-shell table of (mean) cell counts.
pub fn fit_counting_slope(
    table: Vec<(u32, f64)>,
    d: usize,
    replicates: usize,
) -> Result<DimensionEstimate> {
    let (x, y): (Vec<f64>, Vec<f64>) = table
        .iter()
        .filter(|&&(_, c)| c > 0.0)
        .map(|&(n, c)| (n as f64, c.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientShells {
            found: x.len(),
            needed: 3,
        });
    }
    let (slope, intercept) = ls_fit(&x, &y).expect("distinct shell indices");
    let residuals = x
        .iter()
        .zip(&y)
        .map(|(a, b)| b - (slope * a + intercept))
        .collect();
    let value = slope.clamp(0.0, d as f64);
    let fit = FitDiagnostics {
        n_lo: x[0] as u32,
        n_hi: *x.last().unwrap() as u32,
        slope,
        intercept,
        residuals,
    };
    Ok(DimensionEstimate {
        method: EstimateMethod::CountingSlope,
        value,
        uncertainty: 0.0,
        lower: value,
        upper: value,
        exact: true,
        fit: Some(fit),
        table,
        probes: Vec::new(),
        replicates,
    })
}

/// Slope of `log(#unit cells hit in S_n)` against `n`.
pub fn estimate_dim_counting(
    points: &PointSet,
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<DimensionEstimate> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    fit_counting_slope(unit_cell_counts(points, lo.max(1), hi), points.dim(), 1)
}

/// Counting slope of the mean cell count across replicate sets.
pub fn estimate_dim_counting_pooled(
    sets: &[PointSet],
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<DimensionEstimate> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    let d = sets
        .first()
        .map(|s| s.dim())
        .ok_or(Error::InsufficientShells {
            found: 0,
            needed: 3,
        })?;
    let per: Vec<Vec<(u32, f64)>> = sets
        .par_iter()
        .map(|s| unit_cell_counts(s, lo.max(1), hi))
        .collect();
    let k = sets.len() as f64;
    let table: Vec<(u32, f64)> = (0..per[0].len())
        .map(|i| (per[0][i].0, per.iter().map(|t| t[i].1).sum::<f64>() / k))
        .collect();
    let mut est = fit_counting_slope(table, d, sets.len())?;
    let singles: Vec<f64> = sets
        .iter()
        .filter_map(|s| estimate_dim_counting(s, lo..=hi).ok())
        .map(|e| e.value)
        .collect();
    if singles.len() > 1 {
        let (_, se) = crate::interp::mean_stderr(&singles);
        est.uncertainty = se;
        est.lower = est.value - se;
        est.upper = est.value + se;
    }
    Ok(est)
}

/// Bisection on the trend of the covering series.
///
/// Two boundaries are located: the largest exponent still certified divergent
/// and the smallest certified summable. The estimate is the midpoint of the two,
/// and the uncertainty covers both brackets, so an inconclusive band widens it.
pub fn estimate_dim_bisection(
    points: &PointSet,
    n_max: u32,
    tolerance: f64,
    cfg: &TrendConfig,
) -> Result<DimensionEstimate> {
    let shells = partition_by_shell(points, n_max);
    let occupied = shells.iter().skip(1).filter(|s| !s.is_empty()).count();
    if occupied < 3 {
        return Err(Error::InsufficientShells {
            found: occupied,
            needed: 3,
        });
    }
    let d = points.dim() as f64;
    let mut probes: Vec<(f64, Trend)> = Vec::new();
    let mut trend_at = |rho: f64| -> Result<Trend> {
        if let Some(&(_, t)) = probes.iter().find(|(r, _)| *r == rho) {
            return Ok(t);
        }
        let t = covering_series_shells(&shells, rho, cfg)?.trend;
        probes.push((rho, t));
        Ok(t)
    };
    let floor = 1e-3;
    // edge of certified divergence: Divergent below, anything else above
    let (mut a, mut b) = (floor, d);
    if trend_at(b)? == Trend::Divergent {
        a = d;
    } else if trend_at(a)? != Trend::Divergent {
        b = floor;
        a = 0.0;
    } else {
        while b - a > tolerance {
            let m = 0.5 * (a + b);
            if trend_at(m)? == Trend::Divergent {
                a = m;
            } else {
                b = m;
            }
        }
    }
    let (div_lo, div_hi) = (a, b);
    // edge of certified summability: Summable above, anything else below
    let (mut a, mut b) = (div_lo.max(floor), d);
    if trend_at(a)? == Trend::Summable {
        b = a;
        a = 0.0;
    } else if trend_at(b)? != Trend::Summable {
        a = d;
    } else {
        while b - a > tolerance {
            let m = 0.5 * (a + b);
            if trend_at(m)? == Trend::Summable {
                b = m;
            } else {
                a = m;
            }
        }
    }
    let (sum_lo, sum_hi) = (a, b);
    let lower = div_lo.min(sum_lo);
    let upper = div_hi.max(sum_hi).min(d);
    let lower = lower.max(0.0);
    let value = (0.25 * (div_lo + div_hi + sum_lo + sum_hi)).clamp(0.0, d);
    let method = if points.dim() == 1 {
        CoverMethod::ExactDp
    } else {
        CoverMethod::Greedy
    };
    let mut probes_sorted = probes;
    probes_sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let final_series = covering_series_shells(&shells, value.max(floor), cfg)?;
    Ok(DimensionEstimate {
        method: EstimateMethod::SeriesBisection,
        value,
        uncertainty: 0.5 * (upper - lower),
        lower,
        upper,
        exact: method == CoverMethod::ExactDp,
        fit: None,
        table: final_series.values,
        probes: probes_sorted,
        replicates: 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessRow {
    pub n: u32,
    pub occupied: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessReport {
    pub theta: f64,
    pub rows: Vec<ThicknessRow>,
    /// First `k` with full occupancy for every tested `n >= k`.
    pub first_full: Option<u32>,
    /// `d(1-θ)` when `first_full` exists.
    pub certified_dim: Option<f64>,
}

/// Occupancy of the skeleton cubes `Q(x, e^{nθ})`, `x ∈ 𝓘_n(θ)`.
pub fn thickness_test(
    points: &PointSet,
    theta: f64,
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<ThicknessReport> {
    let d = points.dim();
    let mut rows = Vec::new();
    for n in n_range.clone() {
        let spec = SkeletonSpec::new(n.max(1), theta, d)?;
        let per_axis = spec.anchors_per_axis();
        let total = per_axis.checked_pow(d as u32).ok_or(Error::SizeCap {
            requested: usize::MAX,
            cap: usize::MAX,
        })?;
        let base = exp_n(spec.n as f64);
        let step = spec.spacing();
        let mut hit: HashSet<Vec<usize>> = HashSet::new();
        for p in points.iter() {
            let idx: Option<Vec<usize>> = p
                .iter()
                .map(|&v| {
                    let j = ((v - base) / step + 1e-9).floor();
                    (j >= 0.0 && (j as usize) < per_axis).then_some(j as usize)
                })
                .collect();
            if let Some(idx) = idx {
                hit.insert(idx);
            }
        }
        let occupied = hit.len();
        rows.push(ThicknessRow {
            n,
            occupied,
            total,
            fraction: occupied as f64 / total as f64,
        });
    }
    let mut first_full = None;
    for r in rows.iter().rev() {
        if r.occupied == r.total {
            first_full = Some(r.n);
        } else {
            break;
        }
    }
    let certified_dim = first_full.map(|_| d as f64 * (1.0 - theta));
    Ok(ThicknessReport {
        theta,
        rows,
        first_full,
        certified_dim,
    })
}

/// Multiples of `⌈e^{n(1-λ)}⌉` inside each `S_n`, `1 <= n <= n_max`, in `d = 1`.
pub fn evenly_spread_set(lambda: f64, n_max: u32) -> PointSet {
    let mut out = Vec::new();
    for n in 1..=n_max {
        let step = exp_n(n as f64 * (1.0 - lambda)).ceil();
        let (_, outer) = shell_bounds(n);
        let kmax = (outer / step).ceil() as i64;
        for k in -kmax..=kmax {
            let x = k as f64 * step;
            if shell_of(&[x]) == n {
                out.push(x);
            }
        }
    }
    PointSet::from_scalars(out)
}

/// Integer points of `V_{n_max}` in `d = 1`.
pub fn integer_lattice(n_max: u32) -> PointSet {
    let outer = exp_n(n_max as f64);
    let m = outer.ceil() as i64;
    PointSet::from_scalars(
        (-m..=m)
            .map(|v| v as f64)
            .filter(|&v| v >= -outer && v < outer),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::skeleton_union;

    #[test]
    fn empty_and_single_point() {
        let empty = PointSet::new(1);
        assert_eq!(nu_n_rho(&empty, 3, 0.5).value, 0.0);
        let one = PointSet::from_scalars([10.0]);
        let r = nu_n_rho(&one, 3, 0.7);
        assert!((r.value - (-3.0f64 * 0.7).exp()).abs() < 1e-15);
        let r2 = nu_n_rho(
            &PointSet::from_points(2, &[vec![10.0, -3.0]]).unwrap(),
            3,
            0.7,
        );
        assert!((r2.value - (-3.0f64 * 0.7).exp()).abs() < 1e-15);
    }

    fn quadratic_dp(xs: &[f64], n: u32, rho: f64) -> f64 {
        let mut dp = vec![0.0f64; xs.len() + 1];
        for j in 1..=xs.len() {
            dp[j] = (0..j)
                .map(|i| dp[i] + cube_cost(xs[j - 1] - xs[i], n, rho))
                .fold(f64::INFINITY, f64::min);
        }
        dp[xs.len()]
    }

    #[test]
    fn fast_dp_matches_quadratic_dp() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..300 {
            let n = rng.random_range(2..=6u32);
            let (lo, hi) = crate::geometry::shell_bounds(n);
            let m = rng.random_range(1..=250usize);
            // clustered points so that both near and far candidates matter
            let centers: Vec<f64> = (0..rng.random_range(1..6))
                .map(|_| rng.random_range(lo..hi))
                .collect();
            let mut xs: Vec<f64> = (0..m)
                .map(|_| {
                    let c = centers[rng.random_range(0..centers.len())];
                    let w = [0.3, 2.0, 20.0][rng.random_range(0..3)];
                    (c + rng.random_range(-w..w)).clamp(lo, hi - 1e-9)
                })
                .collect();
            if trial % 3 == 0 {
                for x in xs.iter_mut() {
                    *x = x.floor().max(lo.ceil());
                }
            }
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let pts = PointSet::from_scalars(xs.iter().copied());
            for rho in [0.1, 0.35, 0.5, 0.8, 1.0, 1.001, 1.3, 2.0] {
                let fast = nu_n_rho(&pts, n, rho);
                let slow = quadratic_dp(&xs, n, rho);
                assert!(
                    (fast.value - slow).abs() <= 1e-12 * slow.max(1e-300),
                    "trial {trial} n={n} rho={rho}: {} vs {slow}",
                    fast.value
                );
                let recost: f64 = fast.cubes.iter().map(|c| cube_cost(c.side, n, rho)).sum();
                assert!((recost - fast.value).abs() <= 1e-12 * slow);
                for &x in &xs {
                    assert!(
                        fast.cubes.iter().any(|c| c.contains(&[x])),
                        "trial {trial} n={n} rho={rho} x={x} cubes {:?}",
                        fast.cubes
                    );
                }
            }
        }
    }

    #[test]
    fn dp_matches_brute_force_on_small_sets() {
        for n in [1u32, 2] {
            let ints: Vec<f64> = crate::geometry::shell_integers(n);
            let pool: Vec<f64> = ints.into_iter().take(9).collect();
            for mask in 1u32..(1 << pool.len()) {
                if mask.count_ones() > 6 {
                    continue;
                }
                let pts = PointSet::from_scalars(
                    (0..pool.len())
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| pool[i]),
                );
                for rho in [0.5, 1.0, 1.5] {
                    let dp = nu_n_rho(&pts, n, rho).value;
                    let bf = nu_brute_force_1d(&pts, n, rho);
                    assert!(
                        (dp - bf).abs() <= 1e-12,
                        "n={n} rho={rho} {:?}: {dp} vs {bf}",
                        pts.coords()
                    );
                }
            }
        }
    }

    #[test]
    fn realized_cover_is_valid() {
        let pts = evenly_spread_set(0.5, 8);
        for n in 3..=8 {
            let r = nu_n_rho(&pts, n, 0.6);
            let shell = shell_points(&pts, n);
            for p in shell.iter() {
                assert!(r
                    .cubes
                    .iter()
                    .any(|c| c.corner[0] <= p[0] + 1e-9 && p[0] <= c.corner[0] + c.side + 1e-9));
            }
            for c in &r.cubes {
                assert!(c.side >= 1.0);
                assert!(shell_of(&c.corner) == n);
            }
            assert!((r.cost_at(0.6) - r.value).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_bounds_exact_from_above() {
        let pts = evenly_spread_set(0.6, 7);
        for n in 2..=7 {
            for rho in [0.3, 0.6, 1.2] {
                let exact = nu_n_rho(&pts, n, rho).value;
                let greedy = nu_n_rho_greedy(&pts, n, rho).value;
                assert!(greedy >= exact - 1e-12, "n={n} rho={rho}");
            }
        }
    }

    #[test]
    fn greedy_cover_stays_in_shell_in_2d() {
        let mut pts = PointSet::new(2);
        for i in -30..30 {
            for j in -30..30 {
                pts.push(&[i as f64 * 0.7, j as f64 * 1.3]);
            }
        }
        for n in 1..=3 {
            let r = nu_n_rho(&pts, n, 1.0);
            let sh = shell_points(&pts, n);
            for p in sh.iter() {
                assert!(r.cubes.iter().any(|c| p
                    .iter()
                    .zip(&c.corner)
                    .all(|(x, k)| *x >= *k - 1e-9 && *x <= k + c.side + 1e-9)));
            }
        }
    }

    #[test]
    fn series_trends_on_evenly_spread_set() {
        let pts = evenly_spread_set(0.5, 12);
        let cfg = TrendConfig::default();
        assert_eq!(
            covering_series(&pts, 0.75, 12, &cfg).unwrap().trend,
            Trend::Summable
        );
        assert_eq!(
            covering_series(&pts, 0.25, 12, &cfg).unwrap().trend,
            Trend::Divergent
        );
        assert_eq!(
            covering_series(&PointSet::new(1), 0.5, 12, &cfg)
                .unwrap()
                .trend,
            Trend::Summable
        );
    }

    #[test]
    fn per_shell_values_follow_the_oracle() {
        let pts = evenly_spread_set(0.5, 8);
        for n in 1..=3 {
            for rho in [0.75, 1.0] {
                assert!(
                    (nu_n_rho(&pts, n, rho).value - nu_brute_force_1d(&pts, n, rho)).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn counting_examples() {
        let lat = integer_lattice(12);
        let e = estimate_dim_counting(&lat, 1..=12).unwrap();
        assert!((e.value - 1.0).abs() < 0.05, "{}", e.value);
        let sk = skeleton_union(1, 12, 0.5, 1).unwrap();
        let e = estimate_dim_counting(&sk, 1..=13).unwrap();
        assert!((e.value - 0.5).abs() < 0.1, "{}", e.value);
        let one = PointSet::from_scalars((1..=12).map(|n| exp_n(n as f64 - 0.5)));
        let e = estimate_dim_counting(&one, 1..=12).unwrap();
        assert!(e.value.abs() < 0.05);
        assert!(matches!(
            estimate_dim_counting(&PointSet::from_scalars([5.0]), 1..=12),
            Err(Error::InsufficientShells { .. })
        ));
    }

    #[test]
    fn bisection_on_evenly_spread_set() {
        let pts = evenly_spread_set(0.5, 12);
        let e = estimate_dim_bisection(&pts, 12, 0.02, &TrendConfig::default()).unwrap();
        assert!((e.value - 0.5).abs() <= 0.1, "{e:?}");
        assert!(e.lower <= e.value && e.value <= e.upper);
    }

    #[test]
    fn bisection_on_lattice() {
        let e =
            estimate_dim_bisection(&integer_lattice(9), 9, 0.02, &TrendConfig::default()).unwrap();
        assert!((e.value - 1.0).abs() <= 0.05, "{e:?}");
    }

    #[test]
    fn thickness_examples() {
        let lat = integer_lattice(9);
        let r = thickness_test(&lat, 0.5, 1..=8).unwrap();
        assert!(r.rows.iter().all(|r| r.fraction == 1.0));
        assert_eq!(r.first_full, Some(1));
        let r = thickness_test(&PointSet::new(1), 0.5, 1..=8).unwrap();
        assert!(r.rows.iter().all(|r| r.fraction == 0.0));
        assert_eq!(r.first_full, None);
        let sk = skeleton_union(1, 8, 0.4, 2).unwrap();
        let r = thickness_test(&sk, 0.4, 1..=8).unwrap();
        assert_eq!(r.first_full, Some(1));
        assert!((r.certified_dim.unwrap() - 1.2).abs() < 1e-12);
    }
}

//! Exponential shells, cubes and θ-skeletons.
//!
//! `V_n = [-e^n, e^n)^d`, `S_0 = V_0` and `S_n = V_n \ V_{n-1}` for `n >= 1`.
//! Cubes are half-open: `Q(x, r) = Π [x_i, x_i + r)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default cap on generated point counts.
pub const DEFAULT_POINT_CAP: usize = 5_000_000;

/// `e^n`.
pub fn exp_n(n: f64) -> f64 {
    n.exp()
}

/// Finite point set in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        PointSet {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::DomainError(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut s = PointSet::new(dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DomainError(format!(
                    "point of length {} in a set of dimension {dim}",
                    p.len()
                )));
            }
            s.coords.extend_from_slice(p);
        }
        Ok(s)
    }

    /// One-dimensional set from scalar coordinates.
    pub fn from_scalars<I: IntoIterator<Item = f64>>(xs: I) -> Self {
        PointSet {
            dim: 1,
            coords: xs.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(p);
    }

    pub fn extend(&mut self, other: &PointSet) {
        assert_eq!(other.dim, self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(&other.coords);
    }

    /// Points whose indices are listed.
    pub fn select(&self, idx: &[usize]) -> PointSet {
        let mut s = PointSet::new(self.dim);
        for &i in idx {
            s.push(self.point(i));
        }
        s
    }

    /// Points satisfying a predicate.
    pub fn filter<F: Fn(&[f64]) -> bool>(&self, f: F) -> PointSet {
        let mut s = PointSet::new(self.dim);
        for p in self.iter().filter(|p| f(p)) {
            s.push(p);
        }
        s
    }
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Half-open cube `Q(x, r)` with `r >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub corner: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(corner: Vec<f64>, side: f64) -> Result<Self> {
        if !(side >= 1.0) || !side.is_finite() {
            return Err(Error::DomainError(format!(
                "cube side must be >= 1, got {side}"
            )));
        }
        Ok(Cube { corner, side })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.corner)
            .all(|(v, c)| *v >= *c && *v < c + self.side)
    }

    /// Whether the cube lies inside the shell `S_n`.
    pub fn inside_shell(&self, n: u32) -> bool {
        let (_, outer) = shell_bounds(n);
        let inner = if n == 0 { 0.0 } else { exp_n(n as f64 - 1.0) };
        let upper_ok = self
            .corner
            .iter()
            .all(|c| *c >= -outer && c + self.side <= outer * (1.0 + 1e-12));
        if n == 0 {
            return upper_ok;
        }
        // some axis keeps the cube outside V_{n-1}
        upper_ok
            && self
                .corner
                .iter()
                .any(|c| *c >= inner * (1.0 - 1e-12) || c + self.side <= -inner * (1.0 - 1e-12))
    }
}

/// Exponential shell `S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shell {
    pub n: u32,
}

impl Shell {
    pub fn new(n: u32) -> Self {
        Shell { n }
    }

    pub fn bounds(&self) -> (f64, f64) {
        shell_bounds(self.n)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        shell_of(x) == self.n
    }
}

/// Radii `(e^{n-1}, e^n)` delimiting `S_n` (inner radius 0 for `n = 0`).
pub fn shell_bounds(n: u32) -> (f64, f64) {
    let outer = exp_n(n as f64);
    let inner = if n == 0 { 0.0 } else { exp_n(n as f64 - 1.0) };
    (inner, outer)
}

fn axis_shell(v: f64) -> u32 {
    // smallest n >= 0 with -e^n <= v < e^n
    if v >= 0.0 {
        if v < 1.0 {
            return 0;
        }
        let mut n = v.ln().floor().max(0.0) as u32 + 1;
        while n > 0 && exp_n(n as f64 - 1.0) > v {
            n -= 1;
        }
        while exp_n(n as f64) <= v {
            n += 1;
        }
        n
    } else {
        let a = -v;
        if a <= 1.0 {
            return 0;
        }
        let mut n = a.ln().ceil().max(0.0) as u32;
        while exp_n(n as f64) < a {
            n += 1;
        }
        while n > 0 && exp_n(n as f64 - 1.0) >= a {
            n -= 1;
        }
        n
    }
}

/// Index `n` of the shell `S_n` containing `x`.
pub fn shell_of(x: &[f64]) -> u32 {
    x.iter().map(|&v| axis_shell(v)).max().unwrap_or(0)
}

/// θ-skeleton parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSpec {
    pub n: u32,
    pub theta: f64,
    pub dim: usize,
}

impl SkeletonSpec {
    pub fn new(n: u32, theta: f64, dim: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidRange("skeleton needs n >= 1".into()));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidRange(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        Ok(SkeletonSpec { n, theta, dim })
    }

    /// Spacing `e^{nθ}` between consecutive anchors.
    pub fn spacing(&self) -> f64 {
        exp_n(self.n as f64 * self.theta)
    }

    /// Per-axis anchors `e^n + j e^{nθ}`, `0 <= j <= ⌊e^{n(1-θ)}⌋`.
    pub fn anchors(&self) -> Vec<f64> {
        let base = exp_n(self.n as f64);
        let step = self.spacing();
        let jmax = exp_n(self.n as f64 * (1.0 - self.theta)).floor() as usize;
        (0..=jmax).map(|j| base + j as f64 * step).collect()
    }

    pub fn anchors_per_axis(&self) -> usize {
        exp_n(self.n as f64 * (1.0 - self.theta)).floor() as usize + 1
    }

    pub fn count(&self) -> Option<usize> {
        self.anchors_per_axis().checked_pow(self.dim as u32)
    }
}

/// Cartesian product of `d` index ranges `0..m`.
pub(crate) fn product_indices(m: usize, d: usize, mut f: impl FnMut(&[usize])) {
    if m == 0 {
        return;
    }
    let mut idx = vec![0usize; d];
    loop {
        f(&idx);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The skeleton `𝓘_n(θ)` in `R^d`.
pub fn skeleton_points(n: u32, theta: f64, d: usize) -> Result<PointSet> {
    skeleton_points_capped(n, theta, d, DEFAULT_POINT_CAP)
}

pub fn skeleton_points_capped(n: u32, theta: f64, d: usize, cap: usize) -> Result<PointSet> {
    let spec = SkeletonSpec::new(n, theta, d)?;
    let count = spec.count().unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::SizeCap {
            requested: count,
            cap,
        });
    }
    let anchors = spec.anchors();
    let mut out = PointSet::new(d);
    let mut p = vec![0.0; d];
    product_indices(anchors.len(), d, |idx| {
        for (k, &i) in idx.iter().enumerate() {
            p[k] = anchors[i];
        }
        out.push(&p);
    });
    Ok(out)
}

/// Union of the skeletons `𝓘_n(θ)` for `n` in `lo..=hi`.
pub fn skeleton_union(lo: u32, hi: u32, theta: f64, d: usize) -> Result<PointSet> {
    let mut out = PointSet::new(d);
    for n in lo.max(1)..=hi {
        out.extend(&skeleton_points(n, theta, d)?);
    }
    Ok(out)
}

/// Result of a sub-skeleton selection inside a skeleton cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSkeleton {
    pub points: PointSet,
    pub count: usize,
    /// `e^{nd(θ-δ)}`.
    pub nominal: f64,
    /// Smallest `c` with `count ∈ [nominal/c, c·nominal]`.
    pub c: f64,
    pub min_separation: f64,
}

/// δ-skeleton points inside a cube `Q(x, e^{nθ})`; `θ` is read off the cube side.
pub fn subskeleton_in_cube(n: u32, delta: f64, cube: &Cube) -> Result<SubSkeleton> {
    if n < 1 {
        return Err(Error::InvalidRange("n must be >= 1".into()));
    }
    let theta = cube.side.ln() / n as f64;
    if !(delta > 0.0) || delta >= theta - 1e-12 {
        return Err(Error::InvalidRange(format!(
            "need 0 < delta < theta, got delta={delta}, theta={theta}"
        )));
    }
    let d = cube.corner.len();
    let fine = SkeletonSpec::new(n, delta, d)?;
    let base = exp_n(n as f64);
    let step = fine.spacing();
    // δ-lattice e^n + j e^{nδ}, j >= 0, restricted to the cube
    let per_axis: Vec<Vec<f64>> = cube
        .corner
        .iter()
        .map(|&c| {
            let j0 = ((c - base) / step).ceil().max(0.0) as i64;
            (j0..)
                .map(|j| base + j as f64 * step)
                .skip_while(|&a| a < c)
                .take_while(|&a| a < c + cube.side)
                .collect()
        })
        .collect();
    let count: usize = per_axis.iter().map(|v| v.len()).product();
    if count > DEFAULT_POINT_CAP {
        return Err(Error::SizeCap {
            requested: count,
            cap: DEFAULT_POINT_CAP,
        });
    }
    let mut points = PointSet::new(d);
    if count > 0 {
        let mut p = vec![0.0; d];
        let mut idx = vec![0usize; d];
        'outer: loop {
            for k in 0..d {
                p[k] = per_axis[k][idx[k]];
            }
            points.push(&p);
            let mut k = 0;
            loop {
                if k == d {
                    break 'outer;
                }
                idx[k] += 1;
                if idx[k] < per_axis[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    let nominal = exp_n(n as f64 * d as f64 * (theta - delta));
    let c = if count == 0 {
        f64::INFINITY
    } else {
        (count as f64 / nominal).max(nominal / count as f64)
    };
    let min_separation = if count > 1 {
        fine.spacing()
    } else {
        f64::INFINITY
    };
    Ok(SubSkeleton {
        points,
        count,
        nominal,
        c,
        min_separation,
    })
}

fn axis_lattice(lo_open: f64, hi_closed: f64, spacing: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = (lo_open / spacing).floor() as i64 + 1;
    loop {
        let v = m as f64 * spacing;
        if v > hi_closed {
            break;
        }
        if v > lo_open {
            out.push(v);
        }
        m += 1;
    }
    out
}

/// Lattice sample of `F_n = (0, e^{n/q}]^k × (e^{n/q}, e^{n+1}]^{d+1-k}` in `R^{d+1}`.
pub fn block_set_points(n: u32, q: f64, k: usize, d: usize, spacing: f64) -> Result<PointSet> {
    block_set_filtered(n, q, k, d, spacing, |_| true)
}

fn block_set_filtered(
    n: u32,
    q: f64,
    k: usize,
    d: usize,
    spacing: f64,
    keep: impl Fn(&[f64]) -> bool,
) -> Result<PointSet> {
    if n < 1 {
        return Err(Error::InvalidRange("n must be >= 1".into()));
    }
    if !(q > 1.0) {
        return Err(Error::InvalidRange(format!("q must exceed 1, got {q}")));
    }
    if k < 1 || k > d + 1 {
        return Err(Error::InvalidRange(format!(
            "k must lie in [1, d+1], got {k}"
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidRange("spacing must be positive".into()));
    }
    let nn = n as f64;
    let cut = exp_n(nn / q);
    let low = axis_lattice(0.0, cut, spacing);
    let high = axis_lattice(cut, exp_n(nn + 1.0), spacing);
    let dd = d + 1;
    let total = low.len().checked_pow(k as u32).and_then(|a| {
        high.len()
            .checked_pow((dd - k) as u32)
            .and_then(|b| a.checked_mul(b))
    });
    match total {
        Some(t) if t <= DEFAULT_POINT_CAP => {}
        _ => {
            return Err(Error::SizeCap {
                requested: total.unwrap_or(usize::MAX),
                cap: DEFAULT_POINT_CAP,
            })
        }
    }
    let axes: Vec<&Vec<f64>> = (0..dd).map(|i| if i < k { &low } else { &high }).collect();
    let mut out = PointSet::new(dd);
    if axes.iter().any(|a| a.is_empty()) {
        return Ok(out);
    }
    let mut idx = vec![0usize; dd];
    let mut p = vec![0.0; dd];
    loop {
        for i in 0..dd {
            p[i] = axes[i][idx[i]];
        }
        if keep(&p) {
            out.push(&p);
        }
        let mut i = 0;
        loop {
            if i == dd {
                return Ok(out);
            }
            idx[i] += 1;
            if idx[i] < axes[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// `∪_{n=lo}^{hi} (F_n ∩ S_{n+1})`, the block set restricted to the shells it is built for.
pub fn block_set_union(
    lo: u32,
    hi: u32,
    q: f64,
    k: usize,
    d: usize,
    spacing: f64,
) -> Result<PointSet> {
    let mut out = PointSet::new(d + 1);
    for n in lo.max(1)..=hi {
        out.extend(&block_set_filtered(n, q, k, d, spacing, |p| {
            shell_of(p) == n + 1
        })?);
    }
    Ok(out)
}

/// Integer points of `S_n` in `d = 1`.
pub fn shell_integers(n: u32) -> Vec<f64> {
    let (_, outer) = shell_bounds(n);
    let m = outer.ceil() as i64 + 1;
    (-m..=m)
        .map(|v| v as f64)
        .filter(|&v| shell_of(&[v]) == n)
        .collect()
}

//! Adaptive Gauss–Kronrod and Filon–Legendre quadrature.

use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            evals: self.evals + other.evals,
        }
    }
}

/// Single 15-point Kronrod rule with the embedded 7-point Gauss error estimate.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * h;
    let error = ((resk - resg) * h).abs();
    Estimate {
        value,
        error,
        evals: 15,
    }
}

struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&o.est.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration over `[a, b]`.
///
/// Bisects the interval with the largest error until the total error falls
/// under `max(abs_tol, rel_tol * |value|)` or `max_segments` is reached.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Estimate {
    if a == b {
        return Estimate::default();
    }
    let first = gk15(&mut f, a, b);
    let mut evals = first.evals;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });
    let mut value = first.value;
    let mut error = first.error;
    while error > abs_tol.max(rel_tol * value.abs()) && heap.len() < max_segments {
        let seg = heap.pop().expect("non-empty heap");
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            heap.push(seg);
            break;
        }
        let l = gk15(&mut f, seg.a, m);
        let r = gk15(&mut f, m, seg.b);
        evals += 30;
        value += l.value + r.value - seg.est.value;
        error += l.error + r.error - seg.est.error;
        heap.push(Segment {
            a: seg.a,
            b: m,
            est: l,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            est: r,
        });
    }
    // recompute from the segments to shed accumulated round-off
    let mut v = 0.0;
    let mut e = 0.0;
    for s in heap.iter() {
        v += s.est.value;
        e += s.est.error;
    }
    Estimate {
        value: v,
        error: e,
        evals,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomials `P_0..P_{n-1}` at `x`.
fn legendre_all(n: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n > 1 {
        out[1] = x;
    }
    for k in 2..n {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Spherical Bessel functions `j_0..j_{n-1}` at `x >= 0`.
pub fn spherical_bessel(n: usize, x: f64, out: &mut [f64]) {
    let x = x.abs();
    if x < 1e-4 {
        let mut dfact = 1.0;
        let mut pow = 1.0;
        for (l, o) in out.iter_mut().enumerate().take(n) {
            let lf = l as f64;
            dfact *= 2.0 * lf + 1.0;
            *o = pow / dfact * (1.0 - x * x / (2.0 * (2.0 * lf + 3.0)));
            pow *= x;
        }
        return;
    }
    let (s, c) = x.sin_cos();
    if x > n as f64 {
        out[0] = s / x;
        if n > 1 {
            out[1] = s / (x * x) - c / x;
        }
        for l in 1..n.saturating_sub(1) {
            out[l + 1] = (2.0 * l as f64 + 1.0) / x * out[l] - out[l - 1];
        }
        return;
    }
    // Miller's downward recurrence, normalised by sum_l (2l+1) j_l^2 = 1
    let start = n + 20 + x as usize;
    let mut jp1 = 0.0;
    let mut j = 1.0;
    let mut norm = 0.0;
    let mut vals = vec![0.0; n];
    for l in (0..=start).rev() {
        if l < n {
            vals[l] = j;
        }
        norm += (2.0 * l as f64 + 1.0) * j * j;
        let jm1 = (2.0 * l as f64 + 1.0) / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e100 {
            let s = 1e-100;
            j *= s;
            jp1 *= s;
            norm *= s * s;
            for v in vals.iter_mut() {
                *v *= s;
            }
        }
    }
    let scale = 1.0 / norm.sqrt();
    let sign = if (vals[0] * scale) * (s / x) < 0.0 {
        -1.0
    } else {
        1.0
    };
    for l in 0..n {
        out[l] = vals[l] * scale * sign;
    }
}

/// Number of Legendre nodes per Filon panel.
pub const FILON_NODES: usize = 20;

struct FilonRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // p[l * n + j] = P_l(x_j)
    p: Vec<f64>,
}

fn filon_rule() -> &'static FilonRule {
    static RULE: OnceLock<FilonRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = FILON_NODES;
        let (nodes, weights) = gauss_legendre(n);
        let mut p = vec![0.0; n * n];
        let mut buf = vec![0.0; n];
        for (j, &x) in nodes.iter().enumerate() {
            legendre_all(n, x, &mut buf);
            for l in 0..n {
                p[l * n + j] = buf[l];
            }
        }
        FilonRule { nodes, weights, p }
    })
}

/// Filon–Legendre estimate of `∫_a^b amp(k) e^{i nu k} dk` for smooth complex `amp`.
///
/// The amplitude is projected onto Legendre polynomials on the panel, and each
/// polynomial is integrated exactly against the exponential. The error estimate
/// comes from the decay of the two highest coefficients.
#[allow(clippy::needless_range_loop)]
pub fn filon_panel<F: FnMut(f64) -> Complex64>(
    amp: &mut F,
    nu: f64,
    a: f64,
    b: f64,
) -> (Complex64, f64) {
    let rule = filon_rule();
    let n = FILON_NODES;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [Complex64::new(0.0, 0.0); FILON_NODES];
    for j in 0..n {
        fv[j] = amp(c + h * rule.nodes[j]);
    }
    let mut jl = [0.0; FILON_NODES];
    spherical_bessel(n, nu * h, &mut jl);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ipow = Complex64::new(1.0, 0.0);
    let mut tail = 0.0;
    let mut scale = 0.0f64;
    for l in 0..n {
        let mut coef = Complex64::new(0.0, 0.0);
        for j in 0..n {
            coef += fv[j] * (rule.weights[j] * rule.p[l * n + j]);
        }
        coef *= (2.0 * l as f64 + 1.0) / 2.0;
        scale = scale.max(coef.norm());
        if l + 2 >= n {
            tail += coef.norm();
        }
        acc += coef * ipow * (2.0 * jl[l]);
        ipow *= Complex64::new(0.0, 1.0);
    }
    let phase = Complex64::from_polar(1.0, nu * c);
    let value = acc * phase * h;
    let err = 2.0 * h * tail + 1e-15 * h * scale;
    (value, err)
}

/// Adaptive Filon–Legendre integral over `[a, b]`, splitting panels whose
/// coefficient tail exceeds `tol`.
pub fn filon<F: FnMut(f64) -> Complex64>(
    amp: &mut F,
    nu: f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> (Complex64, f64, usize) {
    let (v, e) = filon_panel(amp, nu, a, b);
    if e <= tol || depth == 0 {
        return (v, e, FILON_NODES);
    }
    let m = 0.5 * (a + b);
    let (v1, e1, n1) = filon(amp, nu, a, m, 0.5 * tol, depth - 1);
    let (v2, e2, n2) = filon(amp, nu, m, b, 0.5 * tol, depth - 1);
    (v1 + v2, e1 + e2, n1 + n2 + FILON_NODES)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_for_degree_22() {
        let mut f = |x: f64| x.powi(22) + x.powi(21);
        let e = gk15(&mut f, -1.0, 1.0);
        assert!((e.value - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_embedded_rule_is_degree_13() {
        // the error estimate vanishes for polynomials the 7-point rule integrates exactly
        let mut f = |x: f64| 3.0 * x.powi(12) - x.powi(5);
        let e = gk15(&mut f, 0.0, 2.0);
        assert!(e.error < 1e-12 * e.value.abs());
        assert!((e.value - (3.0 * 2f64.powi(13) / 13.0 - 2f64.powi(6) / 6.0)).abs() < 1e-10);
    }

    #[test]
    fn adaptive_handles_sqrt_singularity() {
        let e = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 500);
        assert!((e.value - 2.0).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        let (x, w) = gauss_legendre(20);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 0.4).abs() < 1e-14);
    }

    #[test]
    fn spherical_bessel_matches_closed_forms() {
        let mut out = [0.0; 4];
        for &x in &[1e-6, 0.3, 1.0, 2.5, 7.0, 40.0] {
            spherical_bessel(4, x, &mut out);
            let (s, c) = (f64::sin(x), f64::cos(x));
            let j0 = s / x;
            let j1 = s / (x * x) - c / x;
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            assert!((out[0] - j0).abs() < 1e-12, "x={x}");
            assert!((out[1] - j1).abs() < 1e-10, "x={x}");
            if x > 1e-3 {
                assert!((out[2] - j2).abs() < 1e-9, "x={x} {} {}", out[2], j2);
            }
        }
    }

    #[test]
    fn filon_matches_closed_form_oscillatory_integral() {
        // ∫_1^3 e^{-k} e^{i 200 k} dk
        let nu = 200.0;
        let mut amp = |k: f64| Complex64::new((-k).exp(), 0.0);
        let (v, e, _) = filon(&mut amp, nu, 1.0, 3.0, 1e-12, 10);
        let z = Complex64::new(-1.0, nu);
        let exact = ((z * 3.0).exp() - z.exp()) / z;
        assert!((v - exact).norm() < 1e-12, "{v} {exact} {e}");
    }
}

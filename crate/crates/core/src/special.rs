//! Special functions not covered by `statrs`.

use std::f64::consts::{FRAC_PI_4, PI};

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Hankel asymptotic factors `(P, Q)` with `J0(x) = sqrt(2/(πx)) (P cos χ - Q sin χ)`, `χ = x - π/4`.
pub fn bessel_j0_pq(x: f64) -> (f64, f64) {
    let mut p = 0.0f64;
    let mut q = 0.0f64;
    // a_k = prod_{j<=k} (-(2j-1)^2) / (k! 8^k x^k)
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 0..60usize {
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 * p.abs().max(1e-300) {
            break;
        }
        let kf = (k + 1) as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(odd * odd) / (kf * 8.0 * x);
    }
    (p, q)
}

/// Bessel function of the first kind of order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x >= 25.0 {
        let (p, q) = bessel_j0_pq(x);
        let chi = x - FRAC_PI_4;
        return (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin());
    }
    // J0(x) = (1/π) ∫_0^π cos(x sin θ) dθ; midpoint rule is spectrally accurate here
    let n = 64usize;
    let h = PI / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let th = (i as f64 + 0.5) * h;
        s += (x * th.sin()).cos();
    }
    s / n as f64
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

/// Radial kernel `Φ_d(x)` with `∫_{S^{d-1}} e^{i k u·z} du = |S^{d-1}| Φ_d(k|z|)`.
pub fn radial_kernel(d: usize, x: f64) -> f64 {
    match d {
        1 => x.cos(),
        2 => bessel_j0(x),
        3 => {
            if x.abs() < 1e-4 {
                1.0 - x * x / 6.0
            } else {
                x.sin() / x
            }
        }
        _ => unreachable!("radial kernel only for d <= 3"),
    }
}

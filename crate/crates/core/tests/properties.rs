use macropeaks::dimension::{nu_brute_force_1d, nu_n_rho, nu_n_rho_greedy};
use macropeaks::fieldgen::{
    empirical_cov_check, exponential_correlation, CholeskySampler, FieldSample, Generator,
};
use macropeaks::geometry::{shell_bounds, PointSet};
use macropeaks::peaks::{extract_spatial_peaks, GaugeParams};
use macropeaks::spectral::CorrelationModel;
use proptest::prelude::*;

fn sample(xs: &[f64], zs: &[f64]) -> FieldSample {
    FieldSample {
        points: PointSet::from_scalars(xs.iter().copied()),
        values: zs.to_vec(),
        generator: Generator::Cholesky,
        seed: 0,
        replicate: 0,
        correlation_id: "test".into(),
        warnings: Vec::new(),
    }
}

fn field() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((-200.0f64..200.0, -1.0f64..5.0), 1..60)
        .prop_map(|v| v.into_iter().unzip())
}

/// Points of `S_n` on the positive piece.
fn shell_set(n: u32, max: usize) -> impl Strategy<Value = Vec<f64>> {
    let (lo, hi) = shell_bounds(n);
    prop::collection::vec(lo..hi, 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn raising_gamma_shrinks_the_peak_set((xs, zs) in field(), g1 in 0.05f64..2.0, dg in 0.0f64..2.0) {
        let f = sample(&xs, &zs);
        let low = extract_spatial_peaks(&f, &GaugeParams::normalized(g1).unwrap());
        let high = extract_spatial_peaks(&f, &GaugeParams::normalized(g1 + dg).unwrap());
        for p in high.points.iter() {
            prop_assert!(low.points.iter().any(|q| q == p));
        }
    }

    #[test]
    fn peaks_are_scale_equivariant((xs, zs) in field(), gamma in 0.05f64..2.0, v in 0.1f64..10.0) {
        let f = sample(&xs, &zs);
        let scaled: Vec<f64> = zs.iter().map(|z| z * v.sqrt()).collect();
        let a = extract_spatial_peaks(&f, &GaugeParams::normalized(gamma).unwrap());
        let b = extract_spatial_peaks(&sample(&xs, &scaled), &GaugeParams::new(gamma, v).unwrap());
        // equality up to rounding at the threshold
        prop_assert!(a.len().abs_diff(b.len()) <= 1, "{} vs {}", a.len(), b.len());
    }

    #[test]
    fn peaks_stay_outside_the_unit_scale((xs, zs) in field(), gamma in 0.05f64..2.0) {
        let peaks = extract_spatial_peaks(&sample(&xs, &zs), &GaugeParams::normalized(gamma).unwrap());
        for (p, (z, th)) in peaks.points.iter().zip(peaks.values.iter().zip(&peaks.thresholds)) {
            prop_assert!(p[0].abs() > std::f64::consts::E);
            prop_assert!(z >= th);
        }
    }

    #[test]
    fn covering_value_is_monotone_in_the_set(a in shell_set(3, 25), b in shell_set(3, 25), rho in 0.1f64..2.0) {
        let small = PointSet::from_scalars(a.iter().copied());
        let big = PointSet::from_scalars(a.iter().chain(&b).copied());
        let (va, vb) = (nu_n_rho(&small, 3, rho).value, nu_n_rho(&big, 3, rho).value);
        prop_assert!(va <= vb * (1.0 + 1e-12), "{va} > {vb}");
    }

    #[test]
    fn exact_cover_is_below_tree_cover(a in shell_set(4, 40), rho in 0.1f64..2.0) {
        let pts = PointSet::from_scalars(a.iter().copied());
        let exact = nu_n_rho(&pts, 4, rho);
        let tree = nu_n_rho_greedy(&pts, 4, rho);
        prop_assert!(exact.value <= tree.value * (1.0 + 1e-12), "{} > {}", exact.value, tree.value);
        for p in pts.iter() {
            prop_assert!(exact.cubes.iter().any(|c| c.contains(p)));
        }
        prop_assert!((exact.cost_at(rho) - exact.value).abs() <= 1e-12 * exact.value.max(1.0));
    }

    #[test]
    fn exact_cover_matches_brute_force(a in shell_set(2, 9), neg in shell_set(2, 4), rho in 0.05f64..2.5) {
        let pts = PointSet::from_scalars(a.iter().copied().chain(neg.iter().map(|x| -x)));
        let dp = nu_n_rho(&pts, 2, rho).value;
        let bf = nu_brute_force_1d(&pts, 2, rho);
        prop_assert!((dp - bf).abs() <= 1e-12 * bf.max(1.0), "{dp} vs {bf}");
    }

    #[test]
    fn covering_value_is_bounded_by_unit_tiling(a in shell_set(3, 30), rho in 0.05f64..2.5) {
        let pts = PointSet::from_scalars(a.iter().copied());
        let mut cells: Vec<i64> = a.iter().map(|x| x.floor() as i64).collect();
        cells.sort_unstable();
        cells.dedup();
        let tiling = cells.len() as f64 * (-3.0 * rho).exp();
        prop_assert!(nu_n_rho(&pts, 3, rho).value <= tiling * (1.0 + 1e-12));
    }

    #[test]
    fn reinforced_condition_is_monotone_in_eta(beta in 0.05f64..0.95, alpha in 0.5f64..2.0, e1 in 0.0f64..0.99, de in 0.0f64..0.99) {
        let m = CorrelationModel::riesz(beta, 1).unwrap();
        let e2 = (e1 + de).min(0.99);
        let weak = m.check_reinforced(alpha, e1).unwrap();
        let strong = m.check_reinforced(alpha, e2).unwrap();
        if weak.satisfied {
            prop_assert!(strong.satisfied);
        }
        if strong.satisfied {
            prop_assert!(m.check_dalang(alpha).unwrap().satisfied);
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), rep in 0u64..1000) {
        let pts = PointSet::from_scalars((0..20).map(|i| 3.0 + i as f64 * 0.7));
        let s = CholeskySampler::new(&exponential_correlation(1.0), &pts).unwrap();
        prop_assert_eq!(s.sample_values(seed, rep), s.sample_values(seed, rep));
        prop_assert_ne!(s.sample_values(seed, rep), s.sample_values(seed, rep + 1));
    }
}

#[test]
fn empirical_covariance_matches_target() {
    let corr = exponential_correlation(0.5);
    let pts = PointSet::from_scalars((0..8).map(|i| i as f64 * 0.4));
    let s = CholeskySampler::new(&corr, &pts).unwrap();
    let samples: Vec<FieldSample> = (0..4000).map(|r| s.sample(11, r)).collect();
    let check = empirical_cov_check(&samples, &corr).unwrap();
    assert!(!check.degenerate);
    assert!(check.max_z() < 5.0, "max z = {}", check.max_z());
}

//! Acceptance criteria. Prints one PASS/FAIL line per criterion.
//!
//! Exits 0 after reporting; set MACROPEAKS_ACCEPTANCE_STRICT=1 to exit 4 when any criterion fails.

use macropeaks::bounds::{
    borell_comparison, equicorrelated_lower_tail_exact, lopes_comparison, DEFAULT_MESH,
};
use macropeaks::covariance::{variance, EquationSpec};
use macropeaks::dimension::{
    estimate_dim_bisection, evenly_spread_set, nu_brute_force_1d, nu_n_rho, thickness_test,
    TrendConfig,
};
use macropeaks::fieldgen::{exponential_correlation, CirculantOptions, CirculantSampler};
use macropeaks::geometry::{block_set_union, shell_integers, skeleton_union, PointSet};
use macropeaks::harness::spacetime::{run_spacetime, SpaceTimeDesign};
use macropeaks::harness::{run_experiment, ExperimentConfig, ExperimentRecord};
use macropeaks::peaks::{
    extract_spatial_peaks, validate_stretch, GaugeParams, StretchFactor, STRETCH_THRESHOLD,
};
use macropeaks::spectral::CorrelationModel;
use macropeaks::Error;
use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

const SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn run_config(file: &str) -> ExperimentRecord {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs/acceptance")
        .join(file);
    let cfg = ExperimentConfig::from_path(&path).expect("config parses");
    run_experiment(&cfg).expect("experiment runs")
}

fn targets_detail(rec: &ExperimentRecord) -> (bool, String) {
    let parts: Vec<String> = rec
        .payload
        .targets
        .iter()
        .map(|t| format!("gamma={} {}", t.target.gamma, t.detail))
        .collect();
    (rec.passed, parts.join("; "))
}

fn counting_peaks() -> Outcome {
    let rec = run_config("counting_d1.toml");
    let means: Vec<String> = rec
        .payload
        .aggregates
        .iter()
        .filter(|a| a.metric == "counting")
        .map(|a| format!("{}: {:.3}", a.gamma, a.value))
        .collect();
    let (passed, detail) = targets_detail(&rec);
    outcome(
        passed,
        format!(
            "pooled counting slope {detail}; per-seed means {}",
            means.join(", ")
        ),
    )
}

fn thickness_lower_bound() -> Outcome {
    let rec = run_config("thickness_d1.toml");
    let (passed, detail) = targets_detail(&rec);
    // occupancy of one replicate, for the record
    let e = 1f64.exp();
    let n = (13f64.exp() - e) as usize;
    let sampler = CirculantSampler::new(
        &exponential_correlation(1.0),
        n,
        1.0,
        e,
        CirculantOptions::default(),
    )
    .unwrap();
    let peaks = extract_spatial_peaks(
        &sampler.sample(SEED, 0),
        &GaugeParams::normalized(0.2).unwrap(),
    )
    .points;
    let t = thickness_test(&peaks, 0.4, 8..=12).unwrap();
    let rows: Vec<String> = t
        .rows
        .iter()
        .map(|r| format!("n={} {}/{}", r.n, r.occupied, r.total))
        .collect();
    outcome(
        passed,
        format!("{detail}; replicate 0 occupancy {}", rows.join(", ")),
    )
}

fn covering_dichotomy() -> Outcome {
    let rec = run_config("series_d1.toml");
    let (passed, detail) = targets_detail(&rec);
    outcome(passed, detail)
}

fn exact_covering_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [1u32, 2] {
        let pool = shell_integers(n);
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
                worst = worst
                    .max((nu_n_rho(&pts, n, rho).value - nu_brute_force_1d(&pts, n, rho)).abs());
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{cases} subsets x rho, max |dp - brute force| = {worst:.2e} (tol 1e-12)"),
    )
}

fn deterministic_oracles() -> Outcome {
    let cfg = TrendConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.25, 0.5, 0.75] {
        let est = estimate_dim_bisection(&evenly_spread_set(lambda, 14), 14, 0.02, &cfg).unwrap();
        let pass = (est.value - lambda).abs() <= 0.1;
        ok &= pass;
        parts.push(format!("evenly spread {lambda}: {:.3}", est.value));
    }
    let blocks = block_set_union(1, 9, 2.0, 1, 1, 1.0).unwrap();
    let est = estimate_dim_bisection(&blocks, 9, 0.02, &cfg).unwrap();
    ok &= est.value <= 1.1;
    parts.push(format!(
        "block set (d+1=2, k=1, q=2): {:.3} (<= 1.1)",
        est.value
    ));
    for (d, theta, n_max) in [
        (1usize, 0.25, 12u32),
        (1, 0.5, 12),
        (1, 0.75, 12),
        (2, 0.3, 7),
        (2, 0.6, 7),
    ] {
        let set = skeleton_union(1, n_max, theta, d).unwrap();
        let est = estimate_dim_bisection(&set, n_max, 0.02, &cfg).unwrap();
        let exact = d as f64 * (1.0 - theta);
        ok &= (est.value - exact).abs() <= 0.1;
        parts.push(format!(
            "skeleton d={d} theta={theta}: {:.3} vs {exact:.2}",
            est.value
        ));
    }
    outcome(ok, parts.join("; "))
}

fn covariance_closed_forms() -> Outcome {
    let white = CorrelationModel::white_noise(1);
    let heat = variance(&EquationSpec::heat(2.0, white.clone()).unwrap(), 1.0).unwrap();
    let wave = variance(&EquationSpec::wave(white).unwrap(), 1.0).unwrap();
    let (alpha, beta) = (2.0, 0.5);
    let riesz = EquationSpec::heat(alpha, CorrelationModel::riesz(beta, 1).unwrap()).unwrap();
    let ratio = variance(&riesz, 2.0).unwrap() / variance(&riesz, 1.0).unwrap();
    let eh = (heat - (1.0 / (2.0 * PI)).sqrt()).abs();
    let ew = (wave - 0.25).abs();
    let er = (ratio - 2f64.powf((alpha - beta) / alpha)).abs();
    outcome(eh <= 1e-6 && ew <= 1e-6 && er <= 1e-3, format!("|vH(1) - 1/sqrt(2pi)| = {eh:.2e}, |vW(1) - 1/4| = {ew:.2e}, |vH(2)/vH(1) - 2^0.75| = {er:.2e}"))
}

fn mixing_oracle() -> Outcome {
    let white = CorrelationModel::white_noise(1);
    let worst = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&z| (white.mixing_functional(2.0, &[z]).unwrap().value - PI * (-z).exp()).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-6,
        format!("max |M(z) - pi e^-z| = {worst:.2e} over z in {{0.5, 1, 2, 4}}"),
    )
}

fn borell_dominance() -> Outcome {
    let cmp = borell_comparison(
        &exponential_correlation(1.0),
        &[20.0],
        DEFAULT_MESH,
        100_000,
        SEED,
        &[1.0, 2.0, 3.0],
    )
    .unwrap();
    let ok = cmp.rows.iter().all(|r| !r.violates(3.0));
    let rows: Vec<String> = cmp
        .rows
        .iter()
        .map(|r| {
            format!(
                "x={:.3}: {:.5} +- {:.5} vs {:.5}",
                r.x, r.frequency, r.stderr, r.bound
            )
        })
        .collect();
    outcome(
        ok,
        format!(
            "mu = {:.4} +- {:.4}; {}",
            cmp.mu.mu,
            cmp.mu.stderr,
            rows.join("; ")
        ),
    )
}

fn lopes_decay() -> Outcome {
    let ns: Vec<usize> = (8..=13).map(|k| 1 << k).collect();
    let cmp = lopes_comparison(&ns, 0.3, 0.25, 100_000, SEED).unwrap();
    let mut ok = true;
    for w in cmp.rows.windows(2) {
        ok &= w[1].probability <= w[0].probability + 3.0 * w[0].stderr.hypot(w[1].stderr);
    }
    ok &= cmp
        .rows
        .iter()
        .all(|r| r.probability <= r.bound + 3.0 * r.stderr);
    let rows: Vec<String> = cmp
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={}: {:.5} +- {:.5} (exact {:.5}, bound {:.5})",
                r.n,
                r.probability,
                r.stderr,
                equicorrelated_lower_tail_exact(r.n, 0.3, 0.25).unwrap(),
                r.bound
            )
        })
        .collect();
    outcome(ok, format!("C = {:.4}; {}", cmp.c, rows.join("; ")))
}

fn spacetime_bracket() -> Outcome {
    let spec = EquationSpec::heat(2.0, CorrelationModel::riesz(0.5, 1).unwrap()).unwrap();
    let design = SpaceTimeDesign {
        spec,
        stretch: StretchFactor::power_law(0.5).unwrap(),
        gamma: 0.8,
        theta: 0.9,
        delta: 0.1,
        n_lo: 1,
        n_hi: 3,
    };
    let points = design.grid().unwrap().points.len();
    let reps = run_spacetime(&design, SEED, 20).unwrap();
    let hits = reps.iter().filter(|r| r.brackets(1.2, 0.25)).count();
    let full = reps.iter().filter(|r| r.first_full.is_some()).count();
    let with_peaks = reps.iter().filter(|r| r.peaks > 0).count();
    let occ = |n: u32| {
        reps.iter()
            .map(|r| {
                r.occupancy
                    .iter()
                    .find(|o| o.0 == n)
                    .map_or(0.0, |o| o.1 as f64 / o.2 as f64)
            })
            .sum::<f64>()
            / reps.len() as f64
    };
    outcome(
        hits >= 14,
        format!("{hits}/20 seeds bracket 1.2 +- 0.25 (need 14); {points} space-time points; {full} seeds fully occupied; {with_peaks} seeds with peaks; mean occupancy n=1..3: {:.2}, {:.2}, {:.2}", occ(1), occ(2), occ(3)),
    )
}

fn stretch_validation() -> Outcome {
    let riesz = |t: f64, x: f64| (t * t * x.powf(-0.5)).min(1.0);
    let a = validate_stretch(
        riesz,
        &StretchFactor::power_law(0.5).unwrap(),
        &[0.5, 1.0],
        10..=300,
        STRETCH_THRESHOLD,
    )
    .map(|r| r.passed);
    let log_decay = |t: f64, x: f64| (0.5 * (0.5 * t).exp() / x.ln()).min(1.0);
    let b = validate_stretch(
        log_decay,
        &StretchFactor::Exp,
        &[0.5, 1.0],
        3..=400,
        STRETCH_THRESHOLD,
    )
    .map(|r| r.passed);
    let bounded =
        StretchFactor::tabulated(vec![2.0, 3.0, 4.0, 50.0], vec![2.0, 3.0, 4.0, 4.0]).unwrap();
    let c = validate_stretch(|_, _| 0.0, &bounded, &[0.5], 2..=10, STRETCH_THRESHOLD);
    let ok = matches!(a, Ok(true))
        && matches!(b, Ok(true))
        && matches!(c, Err(Error::PreconditionFail(_)));
    outcome(
        ok,
        format!(
            "riesz with r^0.5: {a:?}; log-decay with e^r: {b:?}; bounded g: {}",
            c.map(|r| format!("{r:?}"))
                .unwrap_or_else(|e| e.to_string())
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "counting slope of peaks, d=1", counting_peaks),
        (2, "thickness lower bound", thickness_lower_bound),
        (3, "covering-series dichotomy", covering_dichotomy),
        (4, "exact covering oracle", exact_covering_oracle),
        (5, "deterministic dimension oracles", deterministic_oracles),
        (6, "covariance closed forms", covariance_closed_forms),
        (7, "mixing functional oracle", mixing_oracle),
        (8, "Borell-TIS dominance", borell_dominance),
        (9, "Lopes decay", lopes_decay),
        (10, "space-time bracket", spacetime_bracket),
        (11, "stretch validation", stretch_validation),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{tag} criterion {id} ({name}, {:.1}s): {}",
            start.elapsed().as_secs_f64(),
            o.detail
        )
        .unwrap();
        out.flush().unwrap();
        if !o.passed {
            failed.push(id);
        }
    }
    writeln!(
        out,
        "acceptance: {} passed, {} failed {:?}",
        11 - failed.len(),
        failed.len(),
        failed
    )
    .unwrap();
    if !failed.is_empty() && std::env::var("MACROPEAKS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(4);
    }
}

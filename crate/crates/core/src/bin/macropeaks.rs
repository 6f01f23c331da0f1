use clap::{Args, Parser, Subcommand, ValueEnum};
use macropeaks::bounds::{borell_comparison, lopes_comparison, DEFAULT_MESH};
use macropeaks::covariance::{correlation_table, variance, Equation, EquationSpec, TableOptions};
use macropeaks::dimension::{
    covering_series, estimate_dim_bisection, estimate_dim_counting, thickness_test, TrendConfig,
};
use macropeaks::fieldgen::{
    white_correlation, CholeskySampler, CirculantOptions, CirculantSampler, FieldSample, Generator,
    ModelCorrelation, RadialCorrelation,
};
use macropeaks::geometry::PointSet;
use macropeaks::harness::io::{read_points_csv, write_atomic, CsvTable};
use macropeaks::harness::{run_experiment_with, run_suite, ExperimentConfig, RunOptions};
use macropeaks::peaks::{extract_spatial_peaks, GaugeParams};
use macropeaks::spectral::{CorrelationModel, ModelKind};
use macropeaks::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "macropeaks",
    version,
    about = "Tall peaks of Gaussian fields and stochastic PDEs"
)]
struct Cli {
    /// Base seed for random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (MACROPEAKS_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dalang, reinforced and mixing conditions of a noise model.
    CheckConditions {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long)]
        eta: Option<f64>,
        /// Lags at which to evaluate the mixing functional.
        #[arg(long, value_delimiter = ',')]
        mixing_z: Vec<f64>,
    },
    /// Variance and normalized correlation table of a heat or wave solution.
    Covariance {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = EquationArg::Heat)]
        equation: EquationArg,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 1e3)]
        r_max: f64,
        #[arg(long, default_value_t = 120)]
        points: usize,
    },
    /// One field sample on a one-dimensional lattice.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1024)]
        n_points: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 0.0)]
        origin: f64,
        #[arg(long, value_enum, default_value_t = GeneratorArg::Circulant)]
        generator: GeneratorArg,
    },
    /// Peaks of a sampled field read from CSV (columns x0.., value).
    Peaks {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
    },
    /// Dimension estimate of a point set read from CSV (columns x0..).
    Dimension {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = DimMethod::Counting)]
        method: DimMethod,
        #[arg(long, default_value_t = 1)]
        n_lo: u32,
        #[arg(long, default_value_t = 12)]
        n_hi: u32,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Monte Carlo comparison with the Borell-TIS or the equicorrelated lower-tail bound.
    Bounds {
        #[arg(long, value_enum)]
        kind: BoundKind,
        /// Field correlation e^{-λr} (borell).
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_MESH)]
        mesh: usize,
        #[arg(long, default_value_t = 20.0)]
        anchor: f64,
        #[arg(long, default_value_t = 0.3)]
        rho0: f64,
        #[arg(long, default_value_t = 0.25)]
        gamma0: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [256usize, 512, 1024, 2048, 4096, 8192])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        replicates: usize,
    },
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run every config in a directory.
    Suite { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    WhiteNoise,
    Riesz,
    Exponential,
    Gaussian,
    LogDecay,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Exponential)]
    model: ModelArg,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
}

impl ModelArgs {
    fn build(&self) -> Result<CorrelationModel> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::config(format!("--{name}"), "required by this model"))
        };
        let kind = match self.model {
            ModelArg::WhiteNoise => ModelKind::WhiteNoise,
            ModelArg::Riesz => ModelKind::Riesz {
                beta: need(self.beta, "beta")?,
                c: self.c.unwrap_or(1.0),
            },
            ModelArg::Exponential => ModelKind::Exponential {
                lambda: self.lambda.unwrap_or(1.0),
            },
            ModelArg::Gaussian => ModelKind::GaussianCorr {
                sigma: need(self.sigma, "sigma")?,
            },
            ModelArg::LogDecay => ModelKind::LogDecay {
                c: self.c.unwrap_or(1.0),
            },
        };
        CorrelationModel::new(kind, self.dim).map_err(|e| Error::config("--model", e.to_string()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EquationArg {
    Heat,
    Wave,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Circulant,
    Cholesky,
}

#[derive(Clone, Copy, ValueEnum)]
enum DimMethod {
    Counting,
    Series,
    Bisection,
    Thickness,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Borell,
    Lopes,
}

/// Writes `text` to `<out>/<file>` or prints it.
fn emit(out: &Option<PathBuf>, file: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => write_atomic(&dir.join(file), text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn read_input(path: &Path) -> Result<(PointSet, Option<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("--input", format!("{}: {e}", path.display())))?;
    read_points_csv(&text)
}

fn run(cli: Cli) -> Result<i32> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out;
    match cli.command {
        Command::CheckConditions {
            model,
            alpha,
            eta,
            mixing_z,
        } => {
            let m = model.build()?;
            let mut reports = vec![m.check_dalang(alpha)?];
            if let Some(eta) = eta {
                reports.push(m.check_reinforced(alpha, eta)?);
            }
            let mixing: Vec<(f64, f64, f64)> = mixing_z
                .iter()
                .map(|&z| {
                    m.mixing_functional_radial(alpha, z)
                        .map(|i| (z, i.value, i.error))
                })
                .collect::<Result<_>>()?;
            emit(
                &out,
                "conditions.json",
                &json(
                    &serde_json::json!({ "model": m.id(), "alpha": alpha, "reports": reports, "mixing": mixing }),
                ),
            )?;
        }
        Command::Covariance {
            model,
            equation,
            alpha,
            time,
            r_max,
            points,
        } => {
            let eq = match equation {
                EquationArg::Heat => Equation::Heat { alpha },
                EquationArg::Wave => Equation::Wave,
            };
            let spec = EquationSpec::new(eq, model.build()?)?;
            let v = variance(&spec, time)?;
            let table = correlation_table(
                &spec,
                time,
                &TableOptions {
                    r_max,
                    points,
                    ..TableOptions::default()
                },
            )?;
            eprintln!(
                "variance({time}) = {v:.12e}; terminal correlation {:.4e}",
                table.terminal
            );
            emit(&out, "correlation.csv", &table.to_csv())?;
        }
        Command::Simulate {
            model,
            n_points,
            spacing,
            origin,
            generator,
        } => {
            let m = model.build()?;
            let corr: Box<dyn RadialCorrelation> = match m.kind {
                ModelKind::WhiteNoise => Box::new(white_correlation()),
                _ => Box::new(ModelCorrelation::new(m)?),
            };
            let sample = match generator {
                GeneratorArg::Circulant => CirculantSampler::new(
                    corr.as_ref(),
                    n_points,
                    spacing,
                    origin,
                    CirculantOptions::default(),
                )?
                .sample(seed, 0),
                GeneratorArg::Cholesky => {
                    let pts =
                        PointSet::from_scalars((0..n_points).map(|k| origin + k as f64 * spacing));
                    CholeskySampler::new(corr.as_ref(), &pts)?.sample(seed, 0)
                }
            };
            emit(&out, "sample.csv", &sample.to_csv())?;
            if out.is_some() {
                emit(&out, "sample.json", &sample.metadata_json())?;
            }
        }
        Command::Peaks {
            input,
            gamma,
            variance,
        } => {
            let (points, values) = read_input(&input)?;
            let values =
                values.ok_or_else(|| Error::config("--input", "csv has no value column"))?;
            let gauge = GaugeParams::new(gamma, variance)
                .map_err(|e| Error::config("--gamma", e.to_string()))?;
            let field = FieldSample {
                points,
                values,
                generator: Generator::Cholesky,
                seed,
                replicate: 0,
                correlation_id: input.display().to_string(),
                warnings: vec![],
            };
            let set = extract_spatial_peaks(&field, &gauge);
            emit(&out, "peaks.csv", &set.to_csv())?;
            if out.is_some() {
                emit(&out, "peaks.json", &set.metadata_json())?;
            }
        }
        Command::Dimension {
            input,
            method,
            n_lo,
            n_hi,
            rho,
            theta,
            tolerance,
        } => {
            let (points, _) = read_input(&input)?;
            let cfg = TrendConfig::default();
            let text = match method {
                DimMethod::Counting => json(&estimate_dim_counting(&points, n_lo..=n_hi)?),
                DimMethod::Series => json(&covering_series(&points, rho, n_hi, &cfg)?),
                DimMethod::Bisection => {
                    json(&estimate_dim_bisection(&points, n_hi, tolerance, &cfg)?)
                }
                DimMethod::Thickness => json(&thickness_test(&points, theta, n_lo..=n_hi)?),
            };
            emit(&out, "dimension.json", &text)?;
        }
        Command::Bounds {
            kind,
            lambda,
            mesh,
            anchor,
            rho0,
            gamma0,
            ns,
            replicates,
        } => match kind {
            BoundKind::Borell => {
                let corr = macropeaks::fieldgen::exponential_correlation(lambda);
                let cmp =
                    borell_comparison(&corr, &[anchor], mesh, replicates, seed, &[1.0, 2.0, 3.0])?;
                let mut t = CsvTable::new(&["x", "bound", "frequency", "stderr"]);
                for r in &cmp.rows {
                    t.row([
                        r.x.to_string(),
                        r.bound.to_string(),
                        r.frequency.to_string(),
                        r.stderr.to_string(),
                    ]);
                }
                eprintln!("mu = {:.5} +- {:.5}", cmp.mu.mu, cmp.mu.stderr);
                emit(&out, "borell.csv", t.as_str())?;
            }
            BoundKind::Lopes => {
                let cmp = lopes_comparison(&ns, rho0, gamma0, replicates, seed)?;
                let mut t = CsvTable::new(&["n", "probability", "stderr", "bound"]);
                for r in &cmp.rows {
                    t.row([
                        r.n.to_string(),
                        r.probability.to_string(),
                        r.stderr.to_string(),
                        r.bound.to_string(),
                    ]);
                }
                eprintln!(
                    "alpha0 = {:.5}, beta0 = {:.5}, C = {:.5}",
                    cmp.params.alpha0, cmp.params.beta0, cmp.c
                );
                emit(&out, "lopes.csv", t.as_str())?;
            }
        },
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let rec = run_experiment_with(
                &cfg,
                &RunOptions {
                    seed: cli.seed,
                    out: out.clone(),
                },
            )?;
            for t in &rec.payload.targets {
                eprintln!("{} {}", if t.passed { "PASS" } else { "FAIL" }, t.detail);
            }
            if out.is_none() {
                print!("{}", json(&rec));
            }
            return Ok(rec.exit_code());
        }
        Command::Suite { dir } => {
            let summary = run_suite(
                &dir,
                &RunOptions {
                    seed: cli.seed,
                    out: out.clone(),
                },
            )?;
            for e in &summary.entries {
                eprintln!("{:?} {} {}", e.status, e.name, e.message);
            }
            if out.is_none() {
                print!("{}", summary.to_csv());
            }
            return Ok(summary.exit_code());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("MACROPEAKS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli.threads);
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

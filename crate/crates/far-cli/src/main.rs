//! `far` — command-line front end: Mittag-Leffler evaluation, filter
//! diagnostics, problem assembly, single solver runs, and benchmark grids.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use far_core::baselines::{baseline_run, BaselineConfig};
use far_core::bench::{emit_plots, run_benchmark, BenchConfig, PlotKind, RateMethod};
use far_core::far::{far_run, Method};
use far_core::ml::{ml_eval_detailed, MLParams};
use far_core::problems::{add_noise, make_example, ExampleId};
use far_core::spectral::{standard_grid, verify_generator, filter_g, bias_r};
use far_core::stopping::StoppingRule;
use far_core::FractionalOrder;

#[derive(Parser)]
#[command(name = "far", about = "Fractional asymptotical regularization toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mittag-Leffler function evaluation
    Mlf {
        #[command(subcommand)]
        cmd: MlfCmd,
    },
    /// Filter/bias function diagnostics
    Filters {
        #[command(subcommand)]
        cmd: FiltersCmd,
    },
    /// Test-problem assembly
    Problem {
        #[command(subcommand)]
        cmd: ProblemCmd,
    },
    /// Run a single regularization method
    Solve(SolveArgs),
    /// Benchmark grids and rate experiments
    Bench {
        #[command(subcommand)]
        cmd: BenchCmd,
    },
}

#[derive(Subcommand)]
enum MlfCmd {
    /// Print E_{θ₁,θ₂}(z) and its error estimate
    Eval {
        #[arg(long)]
        theta1: f64,
        #[arg(long)]
        theta2: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long)]
        precision: Option<f64>,
    },
}

#[derive(Subcommand)]
enum FiltersCmd {
    /// Verify the generator-function conditions and write a JSON report
    Report {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
        /// Largest spectral value of the grid (default 1)
        #[arg(long, default_value_t = 1.0)]
        lambda_max: f64,
    },
    /// CSV sweep of (θ, α, λ, g, r) over standard grids
    Sweep {
        /// Comma-separated orders
        #[arg(long, value_delimiter = ',')]
        theta_list: Vec<f64>,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda_max: f64,
    },
}

#[derive(Subcommand)]
enum ProblemCmd {
    /// Assemble an example instance with optional noise
    Make {
        #[arg(long)]
        example: ExampleIdArg,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Multiplicative noise magnitude δ′
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy)]
struct ExampleIdArg(ExampleId);

impl std::str::FromStr for ExampleIdArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(ExampleIdArg)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    method: Method,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    example: ExampleIdArg,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.1)]
    tau: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
    /// Chebyshev ν parameter
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the residual history as CSV
    #[arg(long)]
    residuals_csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Execute a benchmark grid from a JSON config
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `out_dir`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit convergence-rate exponents over a noise ladder
    Rate {
        #[arg(long)]
        example: ExampleIdArg,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Comma-separated δ′ values (≥ 4 spanning ≥ 2 decades)
        #[arg(long, value_delimiter = ',')]
        noise_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 19.4850)]
        dt: f64,
        /// Fit from closed-form spectral solutions instead of iterative runs
        #[arg(long)]
        spectral: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also emit rate_loglog plot data into this directory
        #[arg(long)]
        plots: Option<PathBuf>,
    },
}

fn order(theta: f64) -> Result<FractionalOrder> {
    FractionalOrder::new(theta).context("invalid fractional order")
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Mlf { cmd: MlfCmd::Eval { theta1, theta2, z, precision } } => {
            let params = match precision {
                Some(p) => MLParams::with_precision(theta1, theta2, p)?,
                None => MLParams::new(theta1, theta2)?,
            };
            let eval = ml_eval_detailed(&params, z)?;
            println!("{:.15e} (error estimate {:.3e})", eval.value, eval.error_estimate);
        }
        Command::Filters { cmd } => match cmd {
            FiltersCmd::Report { theta, out, lambda_max } => {
                let theta = order(theta)?;
                let alphas = standard_grid(1e-6, 1.0);
                let lambdas = standard_grid(lambda_max * 1e-6, lambda_max);
                let report = verify_generator(theta, lambda_max, &alphas, &lambdas)?;
                fs::write(&out, serde_json::to_string_pretty(&report)?)?;
                println!(
                    "theta {}: max bias violation {:.3e}, max sqrt-lambda g violation {:.3e} -> {}",
                    theta.get(),
                    report.max_bias_violation,
                    report.max_sqrtlam_g_violation,
                    out.display()
                );
            }
            FiltersCmd::Sweep { theta_list, csv, lambda_max } => {
                if theta_list.is_empty() {
                    bail!("--theta-list must not be empty");
                }
                let mut text = String::from("theta,alpha,lambda,g,r\n");
                for &th in &theta_list {
                    let theta = order(th)?;
                    for &alpha in &standard_grid(1e-6, 1.0) {
                        let t = alpha.powf(-1.0 / theta.get());
                        for &lam in &standard_grid(lambda_max * 1e-6, lambda_max) {
                            let g = filter_g(theta, t, lam)?;
                            let r = bias_r(theta, t, lam)?;
                            text.push_str(&format!(
                                "{th},{alpha:.10e},{lam:.10e},{g:.10e},{r:.10e}\n"
                            ));
                        }
                    }
                }
                fs::write(&csv, text)?;
                println!("wrote {}", csv.display());
            }
        },
        Command::Problem { cmd: ProblemCmd::Make { example, n, noise, seed, out } } => {
            let instance = add_noise(&make_example(example.0, n)?, noise, seed)?;
            fs::write(&out, serde_json::to_string(&instance)?)?;
            println!(
                "{} n={n} delta'={noise} realized delta={:.6e} -> {}",
                example.0,
                instance.delta,
                out.display()
            );
        }
        Command::Solve(args) => {
            let instance = add_noise(&make_example(args.example.0, args.n)?, args.noise, args.seed)?;
            let (stop, below_theory) = StoppingRule::discrepancy(args.tau)?;
            if below_theory {
                eprintln!("warning: tau = {} is below the theoretical threshold 3", args.tau);
            }
            let record = match args.method {
                Method::Far => {
                    let theta = order(args.theta.unwrap_or(1.0))?;
                    far_run(
                        &instance,
                        theta,
                        args.dt.unwrap_or(19.4850),
                        &stop,
                        args.max_iter,
                        false,
                    )
                }
                m => {
                    let mut cfg = BaselineConfig::new(m, args.max_iter);
                    cfg.dt = args.dt;
                    cfg.nu = args.nu;
                    baseline_run(&instance, &cfg, &stop)?
                }
            };
            if let Some(path) = &args.residuals_csv {
                let mut text = String::from("k,residual\n");
                for (k, r) in record.residual_norms.iter().enumerate() {
                    text.push_str(&format!("{k},{r:.10e}\n"));
                }
                fs::write(path, text)?;
            }
            fs::write(&args.out, serde_json::to_string_pretty(&record)?)?;
            println!(
                "{} k*={} l2err={:.4} stop={:?} -> {}",
                args.method,
                record.k_star,
                record.l2err,
                record.stop_reason,
                args.out.display()
            );
        }
        Command::Bench { cmd } => match cmd {
            BenchCmd::Run { config, out } => {
                let text = fs::read_to_string(&config)
                    .with_context(|| format!("reading {}", config.display()))?;
                let mut cfg: BenchConfig = serde_json::from_str(&text).context("parsing config")?;
                if let Some(dir) = out {
                    cfg.out_dir = Some(dir);
                }
                let records = run_benchmark(&cfg)?;
                let failures = records.iter().filter(|r| r.error.is_some()).count();
                println!("{} runs, {} failures", records.len(), failures);
                if let Some(dir) = &cfg.out_dir {
                    println!("outputs in {}", dir.display());
                }
            }
            BenchCmd::Rate {
                example,
                theta,
                p,
                noise_list,
                seeds,
                n,
                dt,
                spectral,
                out,
                plots,
            } => {
                let method = if spectral {
                    RateMethod::SpectralApriori { theta, p, c: 1.0 }
                } else {
                    RateMethod::Iterative(far_core::bench::MethodSpec::far(theta))
                };
                let report = far_core::bench::rate_experiment(
                    example.0, &method, &noise_list, &seeds, n, dt, 3.1, 200_000,
                )?;
                println!(
                    "err slope {:.4} ± {:.4} (theory {:.4}); k* slope {:.4} ± {:.4} (theory {:.4})",
                    report.err_slope,
                    report.err_halfwidth,
                    2.0 * p / (2.0 * p + 1.0),
                    report.kstar_slope,
                    report.kstar_halfwidth,
                    2.0 / (theta * (2.0 * p + 1.0)),
                );
                if let Some(path) = out {
                    fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                }
                if let Some(dir) = plots {
                    emit_plots(&PlotKind::RateLoglog { report: &report }, &dir)?;
                }
            }
        },
    }
    Ok(())
}

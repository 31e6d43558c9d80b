use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use zoosaddle::harness::{grid_search, run_experiment, selftest, ExperimentConfig};
use zoosaddle::{build_legendre_kernel, gen_matrix_game, Error, Normalization};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Zero-order methods for stochastic saddle-point problems.
#[derive(Debug, Parser)]
#[command(name = "zoosaddle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (method, seed) cell of an experiment config, one CSV each.
    Run {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[run] output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Grid-search constant step sizes and smoothing radii for one method.
    Grid {
        /// Experiment config file listing exactly one method and >= 3 seeds.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated step sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
        /// Comma-separated smoothing radii.
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        /// Overrides `[run] n_iters` for the short budget of each cell.
        #[arg(long)]
        n_iters: Option<usize>,
        /// Score table path; defaults to `grid_scores.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the Legendre smoothing kernels and their constants as CSV.
    KernelTable {
        /// Comma-separated smoothness orders in (2, 7].
        #[arg(long, value_delimiter = ',', required = true)]
        beta_list: Vec<f64>,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a payoff matrix and save it as text.
    GenProblem {
        /// Problem type; only `matgame` is generated.
        #[arg(long = "type", default_value = "matgame")]
        kind: String,
        /// Number of columns (dimension of x).
        #[arg(long)]
        n: usize,
        /// Number of rows (dimension of y).
        #[arg(long)]
        k: usize,
        /// Generator seed.
        #[arg(long)]
        seed: u64,
        /// `maxabs` or `rowsum`.
        #[arg(long, default_value = "maxabs")]
        normalization: String,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the fast numerical self-checks.
    Selftest,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn classify(e: Error) -> Failure {
    let code = match e.root() {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::MissingConstant(_)
        | Error::InvalidDimension(_)
        | Error::UnsupportedOrder(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    };
    Failure { code, error: e.into() }
}

fn config_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_CONFIG, error: e.into() }
}

fn runtime_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_RUNTIME, error: e.into() }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::from_file(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(config_failure)
}

fn kernel_table(betas: &[f64]) -> Result<String, Error> {
    let mut out = String::from("beta,l,coeffs,kappa,kappa_beta,max_moment_residual\n");
    for &beta in betas {
        let k = build_legendre_kernel(beta)?;
        let coeffs: Vec<String> = k.coeffs().iter().map(|c| format!("{c}")).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:e}",
            beta,
            k.l(),
            coeffs.join(" "),
            k.kappa(),
            k.kappa_beta(),
            k.max_moment_residual()
        );
    }
    Ok(out)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, output_dir } => {
            let mut cfg = load_config(&config)?;
            if let Some(dir) = output_dir {
                cfg.run.output_dir = dir;
            }
            let reports = run_experiment(&cfg).map_err(classify)?;
            for r in reports {
                println!(
                    "{} seed {}: final gap {:e} after {} oracle calls -> {}",
                    r.method,
                    r.seed,
                    r.final_gap,
                    r.oracle_calls,
                    r.path.display()
                );
            }
        }
        Command::Grid { config, gamma, tau, n_iters, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(n) = n_iters {
                cfg.run.n_iters = n;
            }
            let outcome = grid_search(&cfg, &gamma, &tau).map_err(classify)?;
            let path = out.unwrap_or_else(|| cfg.run.output_dir.join("grid_scores.csv"));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))
                    .map_err(runtime_failure)?;
            }
            std::fs::write(&path, outcome.to_csv())
                .with_context(|| format!("writing {}", path.display()))
                .map_err(runtime_failure)?;
            println!("best gamma {:e}, tau {:e}; table -> {}", outcome.best_gamma, outcome.best_tau, path.display());
        }
        Command::KernelTable { beta_list, out } => {
            let table = kernel_table(&beta_list).map_err(classify)?;
            match out {
                Some(path) => std::fs::write(&path, table)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(runtime_failure)?,
                None => print!("{table}"),
            }
        }
        Command::GenProblem { kind, n, k, seed, normalization, out } => {
            if kind != "matgame" {
                return Err(config_failure(anyhow::anyhow!("unsupported problem type `{kind}` (matgame)")));
            }
            let norm = Normalization::parse(&normalization).map_err(classify)?;
            let game = gen_matrix_game(n, k, seed, norm).map_err(classify)?;
            game.save(&out).map_err(classify)?;
            println!("{}x{} game, checksum {:016x} -> {}", game.k(), game.n(), game.checksum(), out.display());
        }
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(runtime_failure(anyhow::anyhow!("self-test failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            if let Some(Error::Interrupted { partial, .. }) = f.error.downcast_ref::<Error>() {
                eprintln!("{} rows were logged before the failure", partial.rows().len());
            }
            ExitCode::from(f.code)
        }
    }
}

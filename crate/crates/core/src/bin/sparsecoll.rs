use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sparsecoll::cli::study::plan_builder;
use sparsecoll::cli::tables::{nodes_csv, plan_report_json, weights_csv};
use sparsecoll::cli::{run_exactness, run_study, ExperimentConfig};
use sparsecoll::indexset::calibrate_xi;
use sparsecoll::nodes::NodeFamily;
use sparsecoll::{Error, Result};

#[derive(Parser)]
#[command(name = "sparsecoll", version, about = "Sparse-grid collocation and quadrature for parametric elliptic problems")]
struct Cli {
    /// Worker threads for solver and sample batches (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// `verify` runs the exactness suite before a study.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Fast)]
    profile: Profile,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    Verify,
    Fast,
}

#[derive(Subcommand)]
enum Command {
    /// Nodes and quadrature weights of one univariate rule, as CSV.
    Nodes {
        /// gauss-hermite, szabados or gauss-jacobi.
        #[arg(long)]
        family: String,
        /// Rule level (the rule has m + 1 points).
        #[arg(long)]
        m: usize,
        /// Jacobi parameter for gauss-jacobi.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-dimensional weight factors of a configured study, as CSV.
    Weights {
        #[arg(long)]
        config: PathBuf,
        /// Which weight sequence: 1 or 2.
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, default_value_t = 8)]
        max_order: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Index plan of a configured study, as JSON with size statistics.
    Indexset {
        #[arg(long)]
        config: PathBuf,
        /// Threshold ξ.
        #[arg(long, conflicts_with = "budget", required_unless_present = "budget")]
        xi: Option<f64>,
        /// Calibrate ξ to this budget under the configured cost instead.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the invariant suite; exits nonzero if any check fails.
    Exactness {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence study: study.csv, summary.json and timings.csv.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides study.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exactness(out: Option<&Path>) -> Result<bool> {
    let checks = run_exactness();
    let mut table = String::from("check,passed,detail\n");
    for c in &checks {
        table += &format!("{},{},{}\n", c.name, c.passed, c.detail);
    }
    emit(&table, out)?;
    Ok(checks.iter().all(|c| c.passed))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::Nodes { family, m, a, out } => {
            let family = NodeFamily::parse(&family, a)?;
            emit(&nodes_csv(family, m)?, out.as_deref())
        }
        Command::Weights { config, r, max_order, out } => {
            let config = ExperimentConfig::load(&config)?;
            let weights = config.weights()?;
            let spec = match r {
                1 => &weights.spec1,
                2 => &weights.spec2,
                _ => return Err(Error::Usage(format!("--r must be 1 or 2, got {r}"))),
            };
            emit(&weights_csv(spec, max_order)?, out.as_deref())
        }
        Command::Indexset { config, xi, budget, out } => {
            let config = ExperimentConfig::load(&config)?;
            let build = plan_builder(&config)?;
            let plan = match (xi, budget) {
                (Some(xi), _) => build(xi, None)?,
                (None, Some(n)) => calibrate_xi(n, config.study.cost, config.family(), &build)?.1,
                (None, None) => unreachable!("clap requires one of --xi and --budget"),
            };
            emit(&(plan_report_json(&plan, config.family())? + "\n"), out.as_deref())
        }
        Command::Exactness { out } => {
            if exactness(out.as_deref())? {
                Ok(())
            } else {
                Err(Error::Convergence("exactness suite reported failures".into()))
            }
        }
        Command::Study { config, out, seed } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                config.study.seed = seed;
            }
            if cli.profile == Profile::Verify {
                std::fs::create_dir_all(&out)
                    .map_err(|e| Error::Usage(format!("cannot create {}: {e}", out.display())))?;
                if !exactness(Some(&out.join("exactness.csv")))? {
                    return Err(Error::Convergence("exactness suite reported failures".into()));
                }
            }
            let summary = run_study(&config)?;
            summary.write_all(&out)?;
            let fitted = summary.fitted_rate.map_or("n/a".to_string(), |r| format!("{r:.3}"));
            println!(
                "{} rows written to {}; fitted rate {fitted}, predicted {:.3}",
                summary.rows.len(),
                out.display(),
                summary.predicted_rate
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

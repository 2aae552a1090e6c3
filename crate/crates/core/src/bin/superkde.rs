use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use superkde::kernels::{DEFAULT_J_MAX, DEFAULT_MOMENT_EPS};
use superkde::risk::mise_exact;
use superkde::sim::{run_and_write, ConfigOverrides, ExperimentConfig};
use superkde::{DensitySpec, Error, KernelSpec, Result};

/// Kernel density estimation with superkernels: exact risk, kernel
/// classification and a seeded bandwidth-selection simulation.
#[derive(Parser, Debug)]
#[command(name = "superkde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte Carlo comparison of bandwidth selectors and write a CSV.
    Sim(SimArgs),
    /// Print the flatness constants, order and moments of a built-in kernel.
    Classify {
        #[arg(long)]
        kernel: String,
    },
    /// Print the exact MISE and its bias/variance split.
    Mise {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        density: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        h: f64,
    },
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    /// Comma-separated, e.g. `cv,sj,politis`.
    #[arg(long)]
    selectors: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    ise_scale: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Print one sample fingerprint per replication to stderr.
    #[arg(long)]
    verbose: bool,
}

impl SimArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            density: self.density.clone(),
            kernel: self.kernel.clone(),
            selectors: self.selectors.clone(),
            sizes: self.sizes.clone(),
            reps: self.reps.clone(),
            seed: self.seed.clone(),
            out: self.out.clone(),
            ise_scale: self.ise_scale.clone(),
            workers: self.workers.clone(),
            verbose: self.verbose.then(|| "true".to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sim(args) => {
            let config = ExperimentConfig::resolve(args.config.as_deref(), args.overrides())?;
            let outcome = run_and_write(&config)?;
            eprintln!(
                "wrote {} rows to {} ({} failed replications)",
                outcome.rows.len(),
                config.out_path.display(),
                outcome.failures.len()
            );
        }
        Command::Classify { kernel } => {
            let k = KernelSpec::by_name(&kernel)?;
            println!("{}", k.classify(DEFAULT_J_MAX, DEFAULT_MOMENT_EPS)?);
        }
        Command::Mise { kernel, density, n, h } => {
            let k = KernelSpec::by_name(&kernel)?;
            let d = DensitySpec::by_name(&density)?;
            println!("{}", mise_exact(&k, &d, n, h)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

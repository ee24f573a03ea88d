use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fraclap::config::ExperimentConfig;
use fraclap::experiments::{self, csv_columns, write_outputs, ALL};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fraclap",
    about = "Lattice experiments for the fractional Laplacian on long cylinders",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue scaling invariance on congruent grids
    Scaling(Common),
    /// Eigenvalue sandwich on growing cylinders
    Sandwich(Common),
    /// Randomized exact form inequalities
    FormsCheck(Common),
    /// Dimension-reduction convergence of solutions and minima
    Reduction(Common),
    /// Recovery sequence rates and limsup bound
    Recovery(Common),
    /// Pointwise limits of the rescaled energies
    GammaPointwise(Common),
    /// Cross-checks against independent oracles
    Oracle(Common),
    /// Run every experiment in sequence
    All(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file; omitted keys take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override s_values
    #[arg(long = "s", value_name = "S")]
    s_values: Vec<f64>,
    /// Override ell_values
    #[arg(long = "ell", value_name = "ELL")]
    ell_values: Vec<f64>,
    /// Override the section spacing hx
    #[arg(long)]
    hx: Option<f64>,
    /// Override the transverse spacing ht
    #[arg(long)]
    ht: Option<f64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the RNG seed
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if !self.s_values.is_empty() {
            cfg.s_values = self.s_values.clone();
        }
        if !self.ell_values.is_empty() {
            cfg.ell_values = self.ell_values.clone();
        }
        if let Some(hx) = self.hx {
            cfg.hx = hx;
        }
        if let Some(ht) = self.ht {
            cfg.ht = Some(ht);
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.display().to_string();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FRACLAP_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("FRACLAP_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("installing the global thread pool")?;
    }
    Ok(())
}

fn run_one(name: &str, cfg: &ExperimentConfig) -> Result<bool> {
    let report = experiments::run(name, cfg)?;
    write_outputs(&report, csv_columns(name))?;
    let failed = report.assertions.iter().filter(|a| !a.pass).count();
    println!(
        "{name}: {} assertions, {failed} failed, {:.1}s -> {}/{}.json",
        report.assertions.len(),
        report.elapsed_seconds,
        cfg.out_dir,
        name.replace('-', "_"),
    );
    for a in report.assertions.iter().filter(|a| !a.pass) {
        println!("  FAIL {} (lhs={:.6e} rhs={:.6e} slack={:.3e})", a.property, a.lhs, a.rhs, a.slack);
    }
    Ok(report.passed)
}

fn run(cli: &Cli) -> Result<bool> {
    init_threads()?;
    let (names, common): (Vec<&str>, &Common) = match &cli.command {
        Command::Scaling(c) => (vec!["scaling"], c),
        Command::Sandwich(c) => (vec!["sandwich"], c),
        Command::FormsCheck(c) => (vec!["forms-check"], c),
        Command::Reduction(c) => (vec!["reduction"], c),
        Command::Recovery(c) => (vec!["recovery"], c),
        Command::GammaPointwise(c) => (vec!["gamma-pointwise"], c),
        Command::Oracle(c) => (vec!["oracle"], c),
        Command::All(c) => (ALL.to_vec(), c),
    };
    let cfg = common.config()?;
    let mut all_pass = true;
    for name in names {
        all_pass &= run_one(name, &cfg)?;
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! The named experiments behind the CLI. Each takes a config, runs a
//! sweep, and returns a report with per-cell records and inequality
//! assertions.

pub mod forms_check;
pub mod gamma_pointwise;
pub mod oracle;
pub mod recovery;
pub mod reduction;
pub mod sandwich;
pub mod scaling;

use crate::config::ExperimentConfig;
use crate::report::ExperimentReport;
use anyhow::{bail, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::Instant;

pub const ALL: &[&str] = &[
    "scaling",
    "sandwich",
    "forms-check",
    "reduction",
    "recovery",
    "gamma-pointwise",
    "oracle",
];

pub fn run(name: &str, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let t0 = Instant::now();
    let mut report = match name {
        "scaling" => scaling::run(cfg)?,
        "sandwich" => sandwich::run(cfg)?,
        "forms-check" => forms_check::run(cfg)?,
        "reduction" => reduction::run(cfg)?,
        "recovery" => recovery::run(cfg)?,
        "gamma-pointwise" => gamma_pointwise::run(cfg)?,
        "oracle" => oracle::run(cfg)?,
        other => bail!("unknown experiment '{other}'"),
    };
    report.sort_cells();
    report.elapsed_seconds = t0.elapsed().as_secs_f64();
    Ok(report)
}

/// Write the JSON report plus the experiment's CSV into the output dir.
pub fn write_outputs(report: &ExperimentReport, columns: &[&str]) -> Result<()> {
    let dir = Path::new(&report.config.out_dir);
    let stem = report.experiment.replace('-', "_");
    report.write_json(&dir.join(format!("{stem}.json")))?;
    report.write_csv(&dir.join(format!("{stem}.csv")), columns)?;
    Ok(())
}

pub fn csv_columns(name: &str) -> &'static [&'static str] {
    match name {
        "scaling" => &["s", "ell", "hx", "lambda", "product"],
        "sandwich" => &[
            "s",
            "ell",
            "hx",
            "ht",
            "lambda_omega",
            "lambda_B1",
            "lambda_Omega",
            "lower_slack",
            "upper_slack",
            "gap",
            "envelope",
        ],
        "forms-check" => &[
            "s",
            "vectors",
            "min_slack_split_upper",
            "min_slack_split_lower",
            "min_slack_slice_x",
            "min_slack_slice_t",
            "min_slack_average",
            "min_slack_mean_slice",
            "min_slack_poincare",
        ],
        "reduction" => &[
            "s",
            "ell",
            "hs_error",
            "l2_error",
            "m_breve",
            "m_inf",
            "load_residual",
        ],
        "recovery" => &[
            "s",
            "ell",
            "mean_phi",
            "grad_over_ell",
            "energy_over_ell_s",
            "i_ell",
            "i_inf",
        ],
        "gamma-pointwise" => &["s", "ell", "e_split", "e_full", "e_limit"],
        "oracle" => &["check", "s", "got", "expected", "rel_error"],
        _ => &[],
    }
}

/// Seeded uniform(-1,1) node values; the stream is a pure function of
/// `(seed, tag, index)`.
pub(crate) fn random_values(seed: u64, tag: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15));
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

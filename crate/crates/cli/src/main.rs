//! Population-size estimation from multiple overlapping lists.
//!
//! Subcommands: `ingest` (validate and aggregate records), `fit` (run the
//! selected estimator per region), `summarize` (tables, comparisons,
//! densities from posterior sample files), `simulate` (synthetic data with
//! ground truth and an optional end-to-end validation run).
//!
//! Exit codes: 0 success, 1 validation failure, 2 divergence, 3 internal
//! error.

mod cmd_fit;
mod cmd_ingest;
mod cmd_simulate;
mod cmd_summarize;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lcmcr::Error;

use config::{Estimator, FileConfig, Overrides};

#[derive(Parser)]
#[command(name = "lcmcr", version, about = "Multi-list capture-recapture population estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOverrides {
    /// TOML run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record-level CSV (record_id, region, label, indicators...).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory of per-region aggregated count files from `ingest`.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Stratification scheme (TOML: labels + region map).
    #[arg(long)]
    scheme: Option<PathBuf>,
    /// Output directory (env override: LCMCR_OUTPUT_DIR).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for region-level parallelism (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Minimum per-list record count for list inclusion.
    #[arg(long)]
    min_count: Option<u64>,
    /// Treat records with missing labels as this (existing) label.
    #[arg(long)]
    missing_as_label: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate records and write per-region aggregated counts plus a report.
    Ingest {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Fit the selected estimator per region and write samples plus manifest.
    Fit {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long, value_enum)]
        estimator: Option<Estimator>,
        /// Chain preset: "desk" or "paper".
        #[arg(long)]
        chain_preset: Option<String>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long)]
        thin: Option<u64>,
        /// Prior preset: "diffuse" or "conservative".
        #[arg(long)]
        prior_preset: Option<String>,
        /// Truncation level of the latent-class mixture.
        #[arg(long)]
        k_star: Option<usize>,
        /// Credible level used by the log-linear profile intervals.
        #[arg(long)]
        level: Option<f64>,
        /// Exit 0 even when chains diverge (divergences stay flagged).
        #[arg(long)]
        allow_divergence: bool,
    },
    /// Aggregate sample files into summary, comparison and density tables.
    Summarize {
        /// Sample file or directory containing samples_*.csv.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Central credible level.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Report Pr(N_A > N_B) and the difference bound for a label pair.
        #[arg(long, num_args = 2, value_names = ["LABEL_A", "LABEL_B"])]
        compare: Vec<String>,
        /// Export a histogram/density table for this quantity (repeatable).
        #[arg(long)]
        density: Vec<String>,
        #[arg(long)]
        bins: Option<usize>,
        /// Probability attached to the one-sided difference bound.
        #[arg(long, default_value_t = 0.95)]
        bound_q: f64,
    },
    /// Generate a synthetic dataset with ground truth from a spec file.
    Simulate {
        /// Generative spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 20_200_801)]
        seed: u64,
        /// Run the pipeline on the simulated data and print a verdict.
        #[arg(long)]
        validate: bool,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } => 2,
        Error::Internal(_) => 3,
        _ => 1,
    }
}

fn fail(err: Error) -> ExitCode {
    // Machine-readable error list on stderr, human-readable line after it.
    let payload = serde_json::json!({ "errors": [err.to_string()] });
    eprintln!("{payload}");
    eprintln!("error: {err}");
    ExitCode::from(exit_code_for(&err))
}

fn resolve_with(common: CommonOverrides, extra: Overrides) -> Result<config::RunConfig, Error> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        data: common.data,
        counts: common.counts,
        scheme: common.scheme,
        output: common.output,
        seed: common.seed,
        workers: common.workers,
        min_list_count: common.min_count,
        missing_as_label: common.missing_as_label,
        ..extra
    };
    config::resolve(file, flags)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest { common } => {
            let config = match resolve_with(common, Overrides::default()) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match cmd_ingest::run(&config) {
                Ok(report) => {
                    cmd_ingest::print_report(&report);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Fit {
            common,
            estimator,
            chain_preset,
            iterations,
            burn_in,
            thin,
            prior_preset,
            k_star,
            level,
            allow_divergence,
        } => {
            let extra = Overrides {
                estimator,
                chain_preset,
                iterations,
                burn_in,
                thin,
                prior_preset,
                k_star,
                level,
                ..Overrides::default()
            };
            let config = match resolve_with(common, extra) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match cmd_fit::run(&config) {
                Ok(manifest) => {
                    println!(
                        "fitted {} region(s) with {} in {:.2}s; outputs in {}",
                        manifest.regions.len(),
                        manifest.estimator,
                        manifest.wall_secs,
                        config.output.display()
                    );
                    if manifest.divergences > 0 {
                        eprintln!(
                            "warning: {} chain(s) diverged (flagged in manifest)",
                            manifest.divergences
                        );
                        if !allow_divergence {
                            return ExitCode::from(2);
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Summarize {
            samples,
            output,
            level,
            compare,
            density,
            bins,
            bound_q,
        } => {
            let compare_pairs = compare
                .chunks(2)
                .filter(|c| c.len() == 2)
                .map(|c| (c[0].clone(), c[1].clone()))
                .collect();
            let args = cmd_summarize::SummarizeArgs {
                output: output.unwrap_or_else(|| cmd_summarize::default_output_for(&samples)),
                samples,
                level,
                compare: compare_pairs,
                density,
                bins,
                bound_q,
            };
            match cmd_summarize::run(&args) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Simulate { spec, output, seed, validate } => {
            let args = cmd_simulate::SimulateArgs { spec, output, seed, validate };
            match cmd_simulate::run(&args) {
                Ok(verdict) if verdict.passed => ExitCode::SUCCESS,
                Ok(_) => ExitCode::from(1),
                Err(e) => fail(e),
            }
        }
    }
}

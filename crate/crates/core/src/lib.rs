//! Closed-population size estimation from multiple incomplete, overlapping lists.
//!
//! The centerpiece is a latent-class capture-recapture (LCMCR) model: capture
//! patterns within each stratum follow a truncated stick-breaking mixture of
//! product-Bernoulli distributions, and the posterior of the population size is
//! explored by Gibbs sampling with a 1/N prior. The sampler is extended to
//! strata with partially missing labels: records whose stratum label is absent
//! are imputed (missing-at-random) jointly with the rest of the chain state, so
//! per-stratum totals account for the records that could not be attributed
//! up front.
//!
//! Crate layout:
//!
//! * [`data`] — record ingestion, capture-pattern encoding, stratification and
//!   list-inclusion filtering down to pattern-count sufficient statistics.
//! * [`kernels`] — seeded, stream-separated sampling primitives, including the
//!   composite negative-multinomial draw used for the unobserved cell.
//! * [`gibbs`] — the extended LCMCR Gibbs sampler; the plain model is the
//!   single-stratum, fully-labeled special case.
//! * [`loglinear`] — a log-linear comparison estimator (conditional maximum
//!   likelihood via iterative proportional fitting, up to two-way terms).
//! * [`posterior`] — aggregation and summarization of posterior draws,
//!   difference probabilities, density export, multiple-run pooling.
//! * [`synth`] — synthetic data generation from the complete-data model and
//!   exact closed-form oracles used to validate the sampler.
//! * [`fit`] — the per-region fitting pipeline shared by the CLI and the
//!   validation studies.

pub mod data;
pub mod error;
pub mod fit;
pub mod gibbs;
pub mod kernels;
pub mod loglinear;
pub mod posterior;
pub mod synth;

pub use data::{
    apply_list_inclusion, build_pattern_counts, parse_records, stratify, CapturePattern,
    CsvSchema, PatternCounts, RecordRow, StratificationScheme,
};
pub use error::{Error, Result};
pub use gibbs::{run_chain, ChainConfig, PriorConfig, SamplerState};
pub use kernels::RngStream;
pub use posterior::{
    aggregate, compare_labels, density_export, pool_multiple_runs, summarize, Draw,
    PosteriorSamples,
};
pub use synth::{generate_population, grid_posterior_oracle, SyntheticSpec};

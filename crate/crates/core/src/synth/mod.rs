//! Synthetic data generation and independent validation oracles.

mod generate;
mod oracle;
mod study;

pub use generate::{generate_population, MarMechanism, SyntheticSpec, SyntheticTruth};
pub use oracle::{default_n_max, grid_posterior_oracle, GridPosterior};
pub use study::{coverage_study, CoverageReport, ReplicateOutcome};

//! Extended latent-class capture-recapture Gibbs sampler.

mod config;
mod sampler;
mod state;

pub use config::{ChainConfig, PriorConfig, DEFAULT_K_STAR};
pub use sampler::{run_chain, Sampler};
pub use state::{init_state, GibbsData, SamplerState};

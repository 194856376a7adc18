//! Prior and chain-schedule configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation level of the stick-breaking mixture.
pub const DEFAULT_K_STAR: usize = 10;

/// Hyperparameters of the extended model.
///
/// `a`, `b` parameterize the Gamma prior on each stratum's stick-breaking
/// concentration (`a = b = 0.25` is the diffuse default); `lambda_beta[y]`
/// holds the `(p_y, q_y)` Beta prior on list-inclusion probabilities for
/// label `y`; `rho_weights` is the Dirichlet prior on the stratum shares,
/// all-ones by default. The improper `p(N) ∝ 1/N` prior on the total is
/// built into the sampler and not configurable.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PriorConfig {
    pub a: f64,
    pub b: f64,
    pub lambda_beta: Vec<(f64, f64)>,
    pub rho_weights: Vec<f64>,
    pub k_star: usize,
}

impl PriorConfig {
    /// Diffuse defaults: Gamma(0.25, 0.25) concentration, Beta(1, 1) list
    /// probabilities, Dirichlet(1, ..., 1) shares.
    pub fn uniform(n_labels: usize, k_star: usize) -> Self {
        Self {
            a: 0.25,
            b: 0.25,
            lambda_beta: vec![(1.0, 1.0); n_labels],
            rho_weights: vec![1.0; n_labels],
            k_star,
        }
    }

    /// Same Beta prior for every label.
    pub fn with_lambda_prior(n_labels: usize, k_star: usize, p: f64, q: f64) -> Self {
        Self { lambda_beta: vec![(p, q); n_labels], ..Self::uniform(n_labels, k_star) }
    }

    pub fn validate(&self, n_labels: usize) -> Result<()> {
        if !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(Error::Argument(format!(
                "alpha hyperparameters must be positive, got a={}, b={}",
                self.a, self.b
            )));
        }
        if self.k_star < 1 {
            return Err(Error::Argument("K* must be at least 1".into()));
        }
        if self.lambda_beta.len() != n_labels || self.rho_weights.len() != n_labels {
            return Err(Error::Argument(format!(
                "prior is sized for {} labels, data has {n_labels}",
                self.lambda_beta.len()
            )));
        }
        for &(p, q) in &self.lambda_beta {
            if !(p > 0.0) || !(q > 0.0) {
                return Err(Error::Argument(format!(
                    "lambda Beta parameters must be positive, got ({p}, {q})"
                )));
            }
        }
        if self.rho_weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Argument("rho weights must be positive".into()));
        }
        Ok(())
    }
}

/// Iteration schedule of one chain. `iterations` counts post-burn-in sweeps;
/// every `thin`-th of them is recorded, for exactly
/// `iterations / thin` retained draws.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChainConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl ChainConfig {
    /// Desk-scale default: quick enough for interactive use.
    pub fn desk(seed: u64) -> Self {
        Self { iterations: 200_000, burn_in: 10_000, thin: 20, seed, stream_id: 0 }
    }

    /// Production-scale schedule: 100M iterations, 500k burn-in, one draw
    /// every 10k.
    pub fn paper(seed: u64) -> Self {
        Self { iterations: 100_000_000, burn_in: 500_000, thin: 10_000, seed, stream_id: 0 }
    }

    pub fn with_stream(mut self, stream_id: u64) -> Self {
        self.stream_id = stream_id;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Argument("thin must be at least 1".into()));
        }
        if self.iterations < self.thin {
            return Err(Error::Argument(format!(
                "iterations ({}) must be at least thin ({})",
                self.iterations, self.thin
            )));
        }
        Ok(())
    }

    pub fn retained_draws(&self) -> u64 {
        self.iterations / self.thin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_draw_arithmetic() {
        let c = ChainConfig { iterations: 10, burn_in: 0, thin: 5, seed: 1, stream_id: 0 };
        c.validate().unwrap();
        assert_eq!(c.retained_draws(), 2);
        assert_eq!(ChainConfig::paper(1).retained_draws(), 10_000);
    }

    #[test]
    fn rejects_bad_schedules_and_priors() {
        let c = ChainConfig { iterations: 3, burn_in: 0, thin: 5, seed: 1, stream_id: 0 };
        assert!(c.validate().is_err());
        assert!(PriorConfig::uniform(2, 0).validate(2).is_err());
        assert!(PriorConfig::uniform(2, 10).validate(3).is_err());
        let mut p = PriorConfig::uniform(2, 10);
        p.lambda_beta[1] = (0.0, 1.0);
        assert!(p.validate(2).is_err());
    }
}

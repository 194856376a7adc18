//! Latent state of the collapsed sampler.
//!
//! Individuals are never stored: every update operates on pattern-count
//! tensors, so one sweep costs O(|patterns| · |labels| · K* · J) regardless of
//! the number of records.

use crate::data::{CapturePattern, PatternCounts};
use crate::error::{Error, Result};
use crate::gibbs::config::PriorConfig;
use crate::kernels::RngStream;

/// Immutable sufficient statistics for one chain.
#[derive(Clone, Debug)]
pub struct GibbsData {
    pub labels: Vec<String>,
    pub lists: usize,
    /// Distinct observed patterns in ascending order.
    pub patterns: Vec<CapturePattern>,
    /// Fixed observed-label counts, `[pattern * Y + label]`.
    pub obs_totals: Vec<u64>,
    /// Fixed missing-label counts per pattern.
    pub mis_totals: Vec<u64>,
    /// Observed records with label `y` (excludes missing-label rows).
    pub n_y_obs: Vec<u64>,
    /// Total observed records, labeled plus missing.
    pub n: u64,
}

impl GibbsData {
    pub fn from_counts(counts: &PatternCounts) -> Result<Self> {
        counts.check_invariants().map_err(|e| Error::Internal(e.to_string()))?;
        if counts.n_total() == 0 {
            return Err(Error::Argument("cannot sample from empty counts".into()));
        }
        let labels = counts.labels().to_vec();
        let y_count = labels.len();
        let mut patterns: Vec<CapturePattern> =
            counts.observed().keys().map(|&(p, _)| p).collect();
        patterns.extend(counts.missing().keys().copied());
        patterns.sort_unstable();
        patterns.dedup();

        let x_count = patterns.len();
        let mut obs_totals = vec![0u64; x_count * y_count];
        let mut mis_totals = vec![0u64; x_count];
        for (x, &pattern) in patterns.iter().enumerate() {
            for y in 0..y_count {
                if let Some(&c) = counts.observed().get(&(pattern, y)) {
                    obs_totals[x * y_count + y] = c;
                }
            }
            if let Some(&c) = counts.missing().get(&pattern) {
                mis_totals[x] = c;
            }
        }
        Ok(Self {
            labels,
            lists: counts.lists(),
            patterns,
            obs_totals,
            mis_totals,
            n_y_obs: counts.n_by_label().to_vec(),
            n: counts.n_total(),
        })
    }

    pub fn n_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn n_missing(&self) -> u64 {
        self.mis_totals.iter().sum()
    }
}

/// All latent tensors of the sampler. Layouts are row-major:
/// `omega_obs[x][y][k]`, `lambda[y][j][k]`, `v/pi/omega0[y][k]`.
#[derive(Clone, Debug)]
pub struct SamplerState {
    pub n_patterns: usize,
    pub n_labels: usize,
    pub n_lists: usize,
    pub k_star: usize,
    /// Class allocation of observed-label records per (pattern, label).
    pub omega_obs: Vec<u64>,
    /// Joint (label, class) allocation of missing-label records per pattern.
    pub omega_mis: Vec<u64>,
    /// Unobserved individuals per (label, class).
    pub omega0: Vec<u64>,
    /// List-inclusion probabilities, in (0, 1).
    pub lambda: Vec<f64>,
    /// Stick-breaking fractions, `v[y][K*-1] = 1`.
    pub v: Vec<f64>,
    /// Mixture weights derived from `v`.
    pub pi: Vec<f64>,
    /// Stick-breaking concentration per label.
    pub alpha: Vec<f64>,
    /// Stratum shares.
    pub rho: Vec<f64>,
    /// Missing-label records currently imputed to each label.
    pub imputed: Vec<u64>,
}

impl SamplerState {
    #[inline]
    pub fn idx_xyk(&self, x: usize, y: usize, k: usize) -> usize {
        (x * self.n_labels + y) * self.k_star + k
    }

    #[inline]
    pub fn idx_yjk(&self, y: usize, j: usize, k: usize) -> usize {
        (y * self.n_lists + j) * self.k_star + k
    }

    #[inline]
    pub fn idx_yk(&self, y: usize, k: usize) -> usize {
        y * self.k_star + k
    }

    /// Unobserved individuals currently assigned to label `y`.
    pub fn omega0_label(&self, y: usize) -> u64 {
        (0..self.k_star).map(|k| self.omega0[self.idx_yk(y, k)]).sum()
    }

    /// Current population size of label `y`: observed + imputed + unobserved.
    pub fn n_label(&self, data: &GibbsData, y: usize) -> u64 {
        data.n_y_obs[y] + self.imputed[y] + self.omega0_label(y)
    }

    pub fn n_total(&self, data: &GibbsData) -> u64 {
        (0..self.n_labels).map(|y| self.n_label(data, y)).sum()
    }

    /// Recomputes `pi[y]` from the stick fractions.
    pub fn rebuild_pi(&mut self, y: usize) {
        let mut remaining = 1.0;
        for k in 0..self.k_star {
            let idx = self.idx_yk(y, k);
            self.pi[idx] = self.v[idx] * remaining;
            remaining *= 1.0 - self.v[idx];
        }
    }

    /// Checks every structural invariant. Cheap relative to a sweep; run every
    /// iteration in debug builds, periodically in release.
    pub fn check_invariants(&self, data: &GibbsData) -> Result<()> {
        let (x_n, y_n, k_n) = (self.n_patterns, self.n_labels, self.k_star);
        for x in 0..x_n {
            for y in 0..y_n {
                let total: u64 = (0..k_n).map(|k| self.omega_obs[self.idx_xyk(x, y, k)]).sum();
                if total != data.obs_totals[x * y_n + y] {
                    return Err(Error::Internal(format!(
                        "observed-count conservation broken at pattern {x}, label {y}"
                    )));
                }
            }
            let total: u64 = (0..y_n)
                .flat_map(|y| (0..k_n).map(move |k| (y, k)))
                .map(|(y, k)| self.omega_mis[self.idx_xyk(x, y, k)])
                .sum();
            if total != data.mis_totals[x] {
                return Err(Error::Internal(format!(
                    "missing-count conservation broken at pattern {x}"
                )));
            }
        }
        for y in 0..y_n {
            let imputed: u64 = (0..x_n)
                .flat_map(|x| (0..k_n).map(move |k| (x, k)))
                .map(|(x, k)| self.omega_mis[self.idx_xyk(x, y, k)])
                .sum();
            if imputed != self.imputed[y] {
                return Err(Error::Internal(format!("imputed tally stale for label {y}")));
            }
            let pi_sum: f64 = (0..k_n).map(|k| self.pi[self.idx_yk(y, k)]).sum();
            if (pi_sum - 1.0).abs() > 1e-12 {
                return Err(Error::Internal(format!(
                    "pi for label {y} sums to {pi_sum}, expected 1"
                )));
            }
            if !(self.alpha[y] > 0.0) {
                return Err(Error::Internal(format!("alpha for label {y} not positive")));
            }
        }
        let rho_sum: f64 = self.rho.iter().sum();
        if (rho_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Internal(format!("rho sums to {rho_sum}, expected 1")));
        }
        if self.lambda.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::Internal("lambda left the open unit interval".into()));
        }
        Ok(())
    }
}

/// Draws the initial state: parameters from their priors, observed counts
/// allocated to classes uniformly at random, missing counts uniformly over
/// (label, class), no unobserved individuals.
pub fn init_state(
    data: &GibbsData,
    prior: &PriorConfig,
    rng: &mut RngStream,
) -> Result<SamplerState> {
    let (x_n, y_n, j_n, k_n) = (data.n_patterns(), data.n_labels(), data.lists, prior.k_star);
    let alpha0 = prior.a / prior.b;
    let mut state = SamplerState {
        n_patterns: x_n,
        n_labels: y_n,
        n_lists: j_n,
        k_star: k_n,
        omega_obs: vec![0; x_n * y_n * k_n],
        omega_mis: vec![0; x_n * y_n * k_n],
        omega0: vec![0; y_n * k_n],
        lambda: vec![0.0; y_n * j_n * k_n],
        v: vec![0.0; y_n * k_n],
        pi: vec![0.0; y_n * k_n],
        alpha: vec![alpha0; y_n],
        rho: vec![0.0; y_n],
        imputed: vec![0; y_n],
    };

    for y in 0..y_n {
        let (p, q) = prior.lambda_beta[y];
        for j in 0..j_n {
            for k in 0..k_n {
                let idx = state.idx_yjk(y, j, k);
                state.lambda[idx] = rng.sample_beta(p, q)?;
            }
        }
        for k in 0..k_n - 1 {
            let idx = state.idx_yk(y, k);
            state.v[idx] = rng.sample_beta(1.0, alpha0)?;
        }
        let last = state.idx_yk(y, k_n - 1);
        state.v[last] = 1.0;
        state.rebuild_pi(y);
    }

    let weight_sum: f64 = prior.rho_weights.iter().sum();
    for y in 0..y_n {
        state.rho[y] = prior.rho_weights[y] / weight_sum;
    }

    let uniform_k = vec![1.0 / k_n as f64; k_n];
    for x in 0..x_n {
        for y in 0..y_n {
            let total = data.obs_totals[x * y_n + y];
            if total > 0 {
                let alloc = rng.sample_multinomial(total, &uniform_k)?;
                for k in 0..k_n {
                    let idx = state.idx_xyk(x, y, k);
                    state.omega_obs[idx] = alloc[k];
                }
            }
        }
    }
    let uniform_yk = vec![1.0 / (y_n * k_n) as f64; y_n * k_n];
    for x in 0..x_n {
        let total = data.mis_totals[x];
        if total > 0 {
            let alloc = rng.sample_multinomial(total, &uniform_yk)?;
            for y in 0..y_n {
                for k in 0..k_n {
                    let c = alloc[y * k_n + k];
                    let idx = state.idx_xyk(x, y, k);
                    state.omega_mis[idx] = c;
                    state.imputed[y] += c;
                }
            }
        }
    }

    state.check_invariants(data)?;
    Ok(state)
}

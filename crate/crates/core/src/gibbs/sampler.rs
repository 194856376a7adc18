//! The extended latent-class capture-recapture Gibbs sampler.
//!
//! One sweep updates, in order:
//!
//! 1. class allocation of observed-label counts, per (pattern, label):
//!    `Multinomial(count, p)` with `p_k ∝ π_{yk} Π_j λ^{x_j} (1-λ)^{1-x_j}`;
//! 2. joint (label, class) allocation of missing-label counts, per pattern:
//!    `q_{yk} ∝ ρ_y π_{yk} Π_j λ^{x_j} (1-λ)^{1-x_j}`;
//! 3. `λ_{yjk} ~ Beta(m¹_{yjk} + p_y, m⁰_{yjk} + q_y)`, where `m⁰` counts the
//!    unobserved cell as never listed;
//! 4. stick fractions `V_{yk} ~ Beta(1 + ν_{yk}, α_y + Σ_{h>k} ν_{yh})` with
//!    `V_{yK*} = 1`, and `π` rebuilt by stick-breaking;
//! 5. `α_y ~ Gamma(a - 1 + K*, b - log π_{yK*})`;
//! 6. the unobserved cell: a negative-multinomial draw with total shape `n`
//!    and cell weights `c_{yk} = ρ_y π_{yk} Π_j (1 - λ_{yjk})`, refused as a
//!    divergence when the weights' sum reaches 1;
//! 7. `ρ ~ Dirichlet(N_y + rho_weights)`.
//!
//! Allocation probabilities are computed in log space with max-subtraction;
//! products over lists underflow otherwise. With a single label and no
//! missing rows, steps 2 and 7 degenerate and the updates coincide with the
//! plain (unstratified) model.

use crate::error::{Error, Result};
use crate::gibbs::config::{ChainConfig, PriorConfig};
use crate::gibbs::state::{init_state, GibbsData, SamplerState};
use crate::kernels::RngStream;
use crate::posterior::{ChainDiagnostics, DivergenceInfo, Draw, PosteriorSamples, RunMeta};

/// Release-build invariant check cadence (every iteration in debug builds).
const INVARIANT_CHECK_INTERVAL: u64 = 10_000;

/// Floor for `log π_{yK*}` when the last stick weight underflows to zero.
const LOG_STICK_FLOOR: f64 = -700.0;

struct AllocationCaches {
    /// `log π_{yk}`.
    log_pi: Vec<f64>,
    /// `Σ_j log(1 - λ_{yjk})` per (label, class): the all-zero pattern's
    /// log-likelihood.
    base: Vec<f64>,
    /// `log λ_{yjk} - log(1 - λ_{yjk})`.
    diff: Vec<f64>,
    fresh: bool,
}

/// One chain of the extended sampler. Fields are public so validation code
/// can exercise individual steps against hand-built states.
pub struct Sampler {
    pub data: GibbsData,
    pub prior: PriorConfig,
    pub state: SamplerState,
    pub diagnostics: ChainDiagnostics,
    rng: RngStream,
    caches: AllocationCaches,
    logw: Vec<f64>,
    probs: Vec<f64>,
    m1: Vec<u64>,
    m0: Vec<u64>,
    nu: Vec<u64>,
}

impl Sampler {
    pub fn new(data: GibbsData, prior: PriorConfig, mut rng: RngStream) -> Result<Self> {
        prior.validate(data.n_labels())?;
        let state = init_state(&data, &prior, &mut rng)?;
        let yk = data.n_labels() * prior.k_star;
        let yjk = data.n_labels() * data.lists * prior.k_star;
        Ok(Self {
            data,
            prior,
            state,
            diagnostics: ChainDiagnostics::default(),
            rng,
            caches: AllocationCaches {
                log_pi: vec![0.0; yk],
                base: vec![0.0; yk],
                diff: vec![0.0; yjk],
                fresh: false,
            },
            logw: vec![0.0; yk],
            probs: vec![0.0; yk],
            m1: vec![0; yjk],
            m0: vec![0; yjk],
            nu: vec![0; yk],
        })
    }

    pub fn rng(&mut self) -> &mut RngStream {
        &mut self.rng
    }

    /// Marks the allocation caches stale; must be called after any direct
    /// mutation of `lambda`, `pi` or `rho` from outside the step methods.
    pub fn invalidate_caches(&mut self) {
        self.caches.fresh = false;
    }

    fn refresh_caches(&mut self) {
        if self.caches.fresh {
            return;
        }
        let s = &self.state;
        for i in 0..s.pi.len() {
            self.caches.log_pi[i] = s.pi[i].ln();
        }
        self.caches.base.fill(0.0);
        for y in 0..s.n_labels {
            for j in 0..s.n_lists {
                for k in 0..s.k_star {
                    let l = s.lambda[s.idx_yjk(y, j, k)];
                    let log_l = l.ln();
                    let log_1m = (1.0 - l).ln();
                    self.caches.diff[s.idx_yjk(y, j, k)] = log_l - log_1m;
                    self.caches.base[s.idx_yk(y, k)] += log_1m;
                }
            }
        }
        self.caches.fresh = true;
    }

    /// Turns `logw[..len]` into normalized probabilities in `probs[..len]`.
    /// Returns false when every weight underflowed and a uniform fallback was
    /// used instead.
    fn normalize_log_weights(&mut self, len: usize) -> bool {
        let max = self.logw[..len].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            let u = 1.0 / len as f64;
            self.probs[..len].fill(u);
            return false;
        }
        let mut total = 0.0;
        for i in 0..len {
            let w = (self.logw[i] - max).exp();
            self.probs[i] = w;
            total += w;
        }
        if !(total > 0.0) {
            let u = 1.0 / len as f64;
            self.probs[..len].fill(u);
            return false;
        }
        for p in &mut self.probs[..len] {
            *p /= total;
        }
        true
    }

    /// Class allocation of the observed-label counts (conserves each
    /// (pattern, label) total).
    pub fn step_allocate_observed(&mut self) -> Result<()> {
        self.refresh_caches();
        let (x_n, y_n, k_n) = (self.state.n_patterns, self.state.n_labels, self.state.k_star);
        for x in 0..x_n {
            let pattern = self.data.patterns[x];
            for y in 0..y_n {
                let total = self.data.obs_totals[x * y_n + y];
                if total == 0 {
                    for k in 0..k_n {
                        let idx = self.state.idx_xyk(x, y, k);
                        self.state.omega_obs[idx] = 0;
                    }
                    continue;
                }
                for k in 0..k_n {
                    let yk = self.state.idx_yk(y, k);
                    let mut lw = self.caches.log_pi[yk] + self.caches.base[yk];
                    for j in 0..self.state.n_lists {
                        if pattern.contains(j) {
                            lw += self.caches.diff[self.state.idx_yjk(y, j, k)];
                        }
                    }
                    self.logw[k] = lw;
                }
                if !self.normalize_log_weights(k_n) {
                    self.diagnostics.degenerate_allocations += 1;
                }
                let alloc = {
                    let probs = &self.probs[..k_n];
                    self.rng.sample_multinomial(total, probs)?
                };
                for k in 0..k_n {
                    let idx = self.state.idx_xyk(x, y, k);
                    self.state.omega_obs[idx] = alloc[k];
                }
            }
        }
        Ok(())
    }

    /// Joint (label, class) allocation of the missing-label counts
    /// (conserves each pattern's total).
    pub fn step_allocate_missing(&mut self) -> Result<()> {
        self.refresh_caches();
        let (x_n, y_n, k_n) = (self.state.n_patterns, self.state.n_labels, self.state.k_star);
        self.state.imputed.fill(0);
        for x in 0..x_n {
            let total = self.data.mis_totals[x];
            if total == 0 {
                for y in 0..y_n {
                    for k in 0..k_n {
                        let idx = self.state.idx_xyk(x, y, k);
                        self.state.omega_mis[idx] = 0;
                    }
                }
                continue;
            }
            let pattern = self.data.patterns[x];
            for y in 0..y_n {
                let log_rho = self.state.rho[y].ln();
                for k in 0..k_n {
                    let yk = self.state.idx_yk(y, k);
                    let mut lw = log_rho + self.caches.log_pi[yk] + self.caches.base[yk];
                    for j in 0..self.state.n_lists {
                        if pattern.contains(j) {
                            lw += self.caches.diff[self.state.idx_yjk(y, j, k)];
                        }
                    }
                    self.logw[yk] = lw;
                }
            }
            if !self.normalize_log_weights(y_n * k_n) {
                self.diagnostics.degenerate_allocations += 1;
            }
            let alloc = {
                let probs = &self.probs[..y_n * k_n];
                self.rng.sample_multinomial(total, probs)?
            };
            for y in 0..y_n {
                for k in 0..k_n {
                    let c = alloc[y * k_n + k];
                    let idx = self.state.idx_xyk(x, y, k);
                    self.state.omega_mis[idx] = c;
                    self.state.imputed[y] += c;
                }
            }
        }
        Ok(())
    }

    /// Conjugate update of every list-inclusion probability.
    pub fn step_lambda(&mut self) -> Result<()> {
        let s = &self.state;
        let (x_n, y_n, j_n, k_n) = (s.n_patterns, s.n_labels, s.n_lists, s.k_star);
        self.m1.fill(0);
        self.m0.fill(0);
        for x in 0..x_n {
            let pattern = self.data.patterns[x];
            for y in 0..y_n {
                for k in 0..k_n {
                    let c = s.omega_obs[s.idx_xyk(x, y, k)] + s.omega_mis[s.idx_xyk(x, y, k)];
                    if c == 0 {
                        continue;
                    }
                    for j in 0..j_n {
                        if pattern.contains(j) {
                            self.m1[s.idx_yjk(y, j, k)] += c;
                        } else {
                            self.m0[s.idx_yjk(y, j, k)] += c;
                        }
                    }
                }
            }
        }
        for y in 0..y_n {
            for k in 0..k_n {
                let unobserved = s.omega0[s.idx_yk(y, k)];
                for j in 0..j_n {
                    self.m0[s.idx_yjk(y, j, k)] += unobserved;
                }
            }
        }
        for y in 0..y_n {
            let (p, q) = self.prior.lambda_beta[y];
            for j in 0..j_n {
                for k in 0..k_n {
                    let idx = self.state.idx_yjk(y, j, k);
                    self.state.lambda[idx] =
                        self.rng.sample_beta(self.m1[idx] as f64 + p, self.m0[idx] as f64 + q)?;
                }
            }
        }
        self.caches.fresh = false;
        Ok(())
    }

    /// Stick-fraction update; rebuilds `π` so each label's weights sum to one.
    pub fn step_sticks(&mut self) -> Result<()> {
        let (x_n, y_n, k_n) =
            (self.state.n_patterns, self.state.n_labels, self.state.k_star);
        self.nu.fill(0);
        for x in 0..x_n {
            for y in 0..y_n {
                for k in 0..k_n {
                    let idx = self.state.idx_xyk(x, y, k);
                    self.nu[self.state.idx_yk(y, k)] +=
                        self.state.omega_obs[idx] + self.state.omega_mis[idx];
                }
            }
        }
        for i in 0..self.state.omega0.len() {
            self.nu[i] += self.state.omega0[i];
        }
        for y in 0..y_n {
            let mut tail: u64 = (0..k_n).map(|k| self.nu[self.state.idx_yk(y, k)]).sum();
            for k in 0..k_n - 1 {
                let nu_k = self.nu[self.state.idx_yk(y, k)];
                tail -= nu_k;
                let idx = self.state.idx_yk(y, k);
                self.state.v[idx] = self.rng.sample_beta(
                    1.0 + nu_k as f64,
                    self.state.alpha[y] + tail as f64,
                )?;
            }
            let last = self.state.idx_yk(y, k_n - 1);
            self.state.v[last] = 1.0;
            self.state.rebuild_pi(y);
        }
        self.caches.fresh = false;
        Ok(())
    }

    /// Concentration update from the last stick weight.
    pub fn step_alpha(&mut self) -> Result<()> {
        let k_n = self.state.k_star;
        for y in 0..self.state.n_labels {
            let mut log_pik = self.state.pi[self.state.idx_yk(y, k_n - 1)].ln();
            if log_pik < LOG_STICK_FLOOR {
                log_pik = LOG_STICK_FLOOR;
                self.diagnostics.clamped_log_stick += 1;
            }
            self.state.alpha[y] = self.rng.sample_gamma(
                self.prior.a - 1.0 + k_n as f64,
                self.prior.b - log_pik,
            )?;
        }
        Ok(())
    }

    /// Unobserved-cell draw. Errors with [`Error::Divergence`] when the cell
    /// mass reaches one; the chain must abort and flag the iteration.
    pub fn step_unobserved(&mut self) -> Result<()> {
        let s = &self.state;
        let (y_n, j_n, k_n) = (s.n_labels, s.n_lists, s.k_star);
        let mut cells = vec![0.0f64; y_n * k_n];
        for y in 0..y_n {
            for k in 0..k_n {
                let mut miss_prob = 1.0;
                for j in 0..j_n {
                    miss_prob *= 1.0 - s.lambda[s.idx_yjk(y, j, k)];
                }
                cells[s.idx_yk(y, k)] = s.rho[y] * s.pi[s.idx_yk(y, k)] * miss_prob;
            }
        }
        let draws = self.rng.sample_negative_multinomial(self.data.n, &cells)?;
        self.state.omega0.copy_from_slice(&draws);
        Ok(())
    }

    /// Stratum-share update from the current per-label population sizes.
    pub fn step_rho(&mut self) -> Result<()> {
        let weights: Vec<f64> = (0..self.state.n_labels)
            .map(|y| self.state.n_label(&self.data, y) as f64 + self.prior.rho_weights[y])
            .collect();
        self.state.rho = self.rng.sample_dirichlet(&weights)?;
        self.caches.fresh = false;
        Ok(())
    }

    /// One full sweep in conditional order.
    pub fn sweep(&mut self) -> Result<()> {
        self.step_allocate_observed()?;
        self.step_allocate_missing()?;
        self.step_lambda()?;
        self.step_sticks()?;
        self.step_alpha()?;
        self.step_unobserved()?;
        self.step_rho()
    }

    fn record(&self, iteration: u64) -> Draw {
        let n_y: Vec<u64> =
            (0..self.state.n_labels).map(|y| self.state.n_label(&self.data, y)).collect();
        Draw {
            iteration,
            n_total: n_y.iter().sum(),
            n_y,
            rho: self.state.rho.clone(),
            imputed: self.state.imputed.clone(),
            alpha: self.state.alpha.clone(),
        }
    }

    /// Runs the chain schedule. A divergence aborts the chain and returns the
    /// draws recorded so far together with the diagnostic; any other error is
    /// a bug and propagates.
    pub fn run(mut self, chain: &ChainConfig) -> Result<PosteriorSamples> {
        chain.validate()?;
        let mut draws = Vec::with_capacity(chain.retained_draws() as usize);
        let total = chain.burn_in + chain.iterations;
        let mut t = 0u64;
        while t < total {
            t += 1;
            match self.sweep() {
                Ok(()) => {}
                Err(Error::Divergence { residual }) => {
                    self.diagnostics.divergence = Some(DivergenceInfo { iteration: t, residual });
                    break;
                }
                Err(e) => return Err(e),
            }
            if cfg!(debug_assertions) || t % INVARIANT_CHECK_INTERVAL == 0 {
                self.state.check_invariants(&self.data)?;
            }
            if t > chain.burn_in && (t - chain.burn_in) % chain.thin == 0 {
                draws.push(self.record(t - chain.burn_in));
            }
        }
        Ok(PosteriorSamples {
            labels: self.data.labels.clone(),
            draws,
            meta: RunMeta {
                seed: chain.seed,
                stream_id: chain.stream_id,
                ..RunMeta::default()
            },
            diagnostics: self.diagnostics,
        })
    }
}

/// Builds a sampler for the given counts and runs the chain schedule.
///
/// The plain (single-stratum) model is the special case of a single-label
/// table with no missing rows.
pub fn run_chain(
    counts: &crate::data::PatternCounts,
    prior: &PriorConfig,
    chain: &ChainConfig,
) -> Result<PosteriorSamples> {
    let data = GibbsData::from_counts(counts)?;
    let rng = RngStream::new(chain.seed, chain.stream_id);
    Sampler::new(data, prior.clone(), rng)?.run(chain)
}

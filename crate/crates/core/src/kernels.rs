//! Reproducible random sampling primitives.
//!
//! Every chain owns one [`RngStream`], identified by a `(seed, stream_id)`
//! pair. Streams are backed by ChaCha12, a counter-based generator whose
//! 64-bit stream parameter yields independent sequences for the same seed, so
//! chains can be distributed over workers in any order without changing their
//! draws.
//!
//! Besides the textbook distributions, this module provides the composite
//! negative-multinomial draw used for the unobserved cell: a negative-binomial
//! total split multinomially across cells. When the combined cell mass
//! approaches one the draw would be unbounded; the sampler treats that as a
//! divergence instead of looping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson};

use crate::error::{Error, Result};

/// Residual mass `1 - sum(cell_weights)` below which a negative-multinomial
/// draw is refused as divergent.
pub const DIVERGENCE_EPS: f64 = 1e-12;

/// A seeded, stream-separated random number generator owned by one chain.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on [0, 1).
    pub fn sample_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn sample_bernoulli(&mut self, p: f64) -> bool {
        self.sample_uniform() < p
    }

    /// Index draw from an unnormalized non-negative weight vector.
    pub fn sample_categorical(&mut self, weights: &[f64]) -> Result<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Argument(format!(
                "categorical weights must have positive finite sum, got {total}"
            )));
        }
        let u = self.sample_uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return Ok(i);
            }
        }
        Ok(weights.len() - 1)
    }

    /// Beta(shape1, shape2) draw, kept inside the open interval (0, 1).
    pub fn sample_beta(&mut self, shape1: f64, shape2: f64) -> Result<f64> {
        if !(shape1 > 0.0) || !(shape2 > 0.0) {
            return Err(Error::Argument(format!(
                "beta shapes must be positive, got ({shape1}, {shape2})"
            )));
        }
        let dist = Beta::new(shape1, shape2)
            .map_err(|e| Error::Argument(format!("beta({shape1}, {shape2}): {e}")))?;
        let x: f64 = dist.sample(&mut self.rng);
        Ok(x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
    }

    /// Gamma draw with shape/rate parameterization (mean = shape / rate).
    pub fn sample_gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        if !(shape > 0.0) || !(rate > 0.0) {
            return Err(Error::Argument(format!(
                "gamma parameters must be positive, got shape={shape}, rate={rate}"
            )));
        }
        let dist = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| Error::Argument(format!("gamma({shape}, {rate}): {e}")))?;
        let x: f64 = dist.sample(&mut self.rng);
        Ok(x.max(f64::MIN_POSITIVE))
    }

    /// Dirichlet draw via normalized Gamma(weight, 1) components.
    pub fn sample_dirichlet(&mut self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.is_empty() {
            return Err(Error::Argument("dirichlet weights must be non-empty".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Argument("dirichlet weights must all be positive".into()));
        }
        let mut out = Vec::with_capacity(weights.len());
        for &w in weights {
            out.push(self.sample_gamma(w, 1.0)?);
        }
        let total: f64 = out.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Internal(format!(
                "dirichlet normalization failed, component sum {total}"
            )));
        }
        for x in &mut out {
            *x /= total;
        }
        Ok(out)
    }

    /// Multinomial draw by sequential conditional binomials; the returned
    /// counts always sum to `total`.
    pub fn sample_multinomial(&mut self, total: u64, probs: &[f64]) -> Result<Vec<u64>> {
        if probs.is_empty() {
            return Err(Error::Argument("multinomial probabilities must be non-empty".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Argument("multinomial probabilities must be non-negative".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "multinomial probabilities must sum to 1 within 1e-9, got {sum}"
            )));
        }
        let k = probs.len();
        let mut out = vec![0u64; k];
        let mut remaining = total;
        let mut rest = 1.0_f64;
        for i in 0..k {
            if remaining == 0 {
                break;
            }
            if i == k - 1 {
                out[i] = remaining;
                break;
            }
            let p = if rest > 0.0 { (probs[i] / rest).clamp(0.0, 1.0) } else { 1.0 };
            let draw = if p >= 1.0 {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                let dist = Binomial::new(remaining, p)
                    .map_err(|e| Error::Internal(format!("binomial({remaining}, {p}): {e}")))?;
                dist.sample(&mut self.rng)
            };
            out[i] = draw;
            remaining -= draw;
            rest -= probs[i];
        }
        Ok(out)
    }

    /// Number of failures before the `successes`-th success; mean
    /// `successes * (1 - p) / p`. Sampled as a Gamma-mixed Poisson.
    pub fn sample_negative_binomial(&mut self, successes: u64, success_prob: f64) -> Result<u64> {
        if successes == 0 {
            return Err(Error::Argument("negative binomial requires successes >= 1".into()));
        }
        if !(success_prob > 0.0) || !(success_prob <= 1.0) {
            return Err(Error::Argument(format!(
                "negative binomial success probability must be in (0, 1], got {success_prob}"
            )));
        }
        if success_prob >= 1.0 {
            return Ok(0);
        }
        let scale = (1.0 - success_prob) / success_prob;
        let dist = Gamma::new(successes as f64, scale)
            .map_err(|e| Error::Internal(format!("gamma mixing draw: {e}")))?;
        let mean: f64 = dist.sample(&mut self.rng);
        if !(mean > 0.0) {
            return Ok(0);
        }
        let pois = Poisson::new(mean)
            .map_err(|e| Error::Internal(format!("poisson({mean}): {e}")))?;
        let x: f64 = pois.sample(&mut self.rng);
        Ok(x as u64)
    }

    /// Negative-multinomial draw: a negative-binomial total with success
    /// probability `1 - sum(cell_weights)`, split multinomially in proportion
    /// to the cell weights. Component means are
    /// `successes * w_i / (1 - sum(w))`.
    ///
    /// Refuses to draw when `1 - sum(w) < DIVERGENCE_EPS`: the expected total
    /// is unbounded and the caller must treat the iteration as divergent.
    pub fn sample_negative_multinomial(
        &mut self,
        successes: u64,
        cell_weights: &[f64],
    ) -> Result<Vec<u64>> {
        if cell_weights.is_empty() {
            return Err(Error::Argument("cell weights must be non-empty".into()));
        }
        if cell_weights.iter().any(|&w| !(0.0..=1.0).contains(&w) || !w.is_finite()) {
            return Err(Error::Argument("cell weights must lie in [0, 1)".into()));
        }
        let s: f64 = cell_weights.iter().sum();
        let residual = 1.0 - s;
        if residual < DIVERGENCE_EPS {
            return Err(Error::Divergence { residual });
        }
        if s <= 0.0 {
            return Ok(vec![0; cell_weights.len()]);
        }
        let total = self.sample_negative_binomial(successes, residual)?;
        let probs: Vec<f64> = cell_weights.iter().map(|w| w / s).collect();
        self.sample_multinomial(total, &probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_streams_reproduce_identically() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.sample_uniform().to_bits(), b.sample_uniform().to_bits());
        }
        let xs: Vec<f64> = (0..10).map(|_| a.sample_beta(2.0, 5.0).unwrap()).collect();
        let ys: Vec<f64> = (0..10).map(|_| b.sample_beta(2.0, 5.0).unwrap()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(7, 0);
        let mut b = RngStream::new(7, 1);
        let xa: Vec<u64> = (0..8).map(|_| a.sample_uniform().to_bits()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.sample_uniform().to_bits()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn beta_rejects_nonpositive_shapes() {
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(rng.sample_beta(0.0, 1.0), Err(Error::Argument(_))));
        assert!(matches!(rng.sample_beta(1.0, -2.0), Err(Error::Argument(_))));
    }

    #[test]
    fn gamma_rejects_nonpositive_rate() {
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(rng.sample_gamma(2.0, 0.0), Err(Error::Argument(_))));
        assert!(matches!(rng.sample_gamma(0.0, 2.0), Err(Error::Argument(_))));
    }

    #[test]
    fn dirichlet_is_normalized() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..200 {
            let p = rng.sample_dirichlet(&[0.5, 2.0, 7.0]).unwrap();
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "sum = {sum}");
            assert!(p.iter().all(|&x| x >= 0.0));
        }
        assert!(matches!(rng.sample_dirichlet(&[]), Err(Error::Argument(_))));
        assert!(matches!(rng.sample_dirichlet(&[1.0, 0.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn dirichlet_concentrates_on_dominant_weight() {
        let mut rng = RngStream::new(12, 0);
        for _ in 0..50 {
            let p = rng.sample_dirichlet(&[1e6, 1.0]).unwrap();
            assert!(p[0] > 0.99, "expected concentration, got {}", p[0]);
        }
    }

    #[test]
    fn multinomial_edge_cases() {
        let mut rng = RngStream::new(2, 0);
        assert_eq!(rng.sample_multinomial(0, &[0.3, 0.7]).unwrap(), vec![0, 0]);
        assert_eq!(rng.sample_multinomial(7, &[1.0, 0.0, 0.0]).unwrap(), vec![7, 0, 0]);
        assert!(matches!(rng.sample_multinomial(1, &[0.6, 0.6]), Err(Error::Argument(_))));
        for _ in 0..100 {
            let out = rng.sample_multinomial(123, &[0.2, 0.5, 0.3]).unwrap();
            assert_eq!(out.iter().sum::<u64>(), 123);
        }
    }

    #[test]
    fn negative_binomial_edge_cases() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..20 {
            assert_eq!(rng.sample_negative_binomial(5, 1.0).unwrap(), 0);
        }
        assert!(matches!(rng.sample_negative_binomial(5, 0.0), Err(Error::Argument(_))));
        assert!(matches!(rng.sample_negative_binomial(0, 0.5), Err(Error::Argument(_))));
    }

    #[test]
    fn negative_multinomial_zero_weights_yield_zero_vector() {
        let mut rng = RngStream::new(4, 0);
        assert_eq!(rng.sample_negative_multinomial(10, &[0.0, 0.0]).unwrap(), vec![0, 0]);
    }

    #[test]
    fn negative_multinomial_diverges_at_unit_mass() {
        let mut rng = RngStream::new(4, 0);
        let err = rng.sample_negative_multinomial(10, &[0.7, 0.3 - 1e-14]).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "got {err:?}");
    }

    #[test]
    fn negative_multinomial_rejects_bad_weights() {
        let mut rng = RngStream::new(4, 0);
        assert!(matches!(
            rng.sample_negative_multinomial(10, &[1.2]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(rng.sample_negative_multinomial(10, &[]), Err(Error::Argument(_))));
    }

    #[test]
    fn categorical_respects_weights() {
        let mut rng = RngStream::new(5, 0);
        assert_eq!(rng.sample_categorical(&[0.0, 3.0, 0.0]).unwrap(), 1);
        assert!(rng.sample_categorical(&[0.0, 0.0]).is_err());
    }
}

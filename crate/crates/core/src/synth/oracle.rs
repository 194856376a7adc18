//! Exact grid posterior for the single-stratum, single-class model.
//!
//! With one latent class and one stratum, list-inclusion probabilities can be
//! integrated out analytically (Beta-Binomial conjugacy), leaving a
//! one-dimensional posterior over the population size:
//!
//! ```text
//! p(N | data) ∝ (1/N) · N!/(N-n)! · Π_j B(p + m¹_j, q + N - m¹_j) / B(p, q)
//! ```
//!
//! for `N = n, n+1, ..., N_max`, where `m¹_j` is the observed count on list
//! `j`. Because no approximation beyond the truncation at `N_max` is made,
//! this pmf is ground truth for validating the sampler on K* = 1 fixtures.

use statrs::function::gamma::ln_gamma;

use crate::data::PatternCounts;
use crate::error::{Error, Result};

/// Exact truncated posterior pmf of the population size.
#[derive(Clone, Debug)]
pub struct GridPosterior {
    /// Smallest supported population size (= observed count).
    pub n_observed: u64,
    /// `pmf[i]` is the posterior mass of `N = n_observed + i`.
    pub pmf: Vec<f64>,
}

/// Default truncation: `N_max = 50 * n`, generous for the heavy right tails
/// produced by the 1/N prior.
pub fn default_n_max(n: u64) -> u64 {
    50 * n.max(1)
}

/// Computes the exact posterior pmf over `N` for single-label, fully labeled
/// counts under independent Beta(`prior_p`, `prior_q`) priors on each list
/// probability.
pub fn grid_posterior_oracle(
    counts: &PatternCounts,
    prior_p: f64,
    prior_q: f64,
    n_max: u64,
) -> Result<GridPosterior> {
    if counts.labels().len() != 1 {
        return Err(Error::Argument(format!(
            "oracle requires a single-label table, got {} labels",
            counts.labels().len()
        )));
    }
    if counts.n_missing() != 0 {
        return Err(Error::Argument("oracle requires fully labeled data".into()));
    }
    if !(prior_p > 0.0) || !(prior_q > 0.0) {
        return Err(Error::Argument("beta prior parameters must be positive".into()));
    }
    let n = counts.n_total();
    if n == 0 {
        return Err(Error::Argument("oracle needs at least one observed record".into()));
    }
    if n_max < n {
        return Err(Error::Argument(format!("N_max {n_max} is below the observed count {n}")));
    }

    let m1 = counts.list_marginals(0);
    let nf = n as f64;
    let mut logw = Vec::with_capacity((n_max - n + 1) as usize);
    for big_n in n..=n_max {
        let nn = big_n as f64;
        let mut lw = -nn.ln() + ln_gamma(nn + 1.0) - ln_gamma(nn - nf + 1.0);
        for &m in &m1 {
            let m = m as f64;
            lw += ln_gamma(prior_p + m) + ln_gamma(prior_q + nn - m)
                - ln_gamma(prior_p + prior_q + nn);
        }
        logw.push(lw);
    }

    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pmf: Vec<f64> = logw.iter().map(|&lw| (lw - max).exp()).collect();
    let total: f64 = pmf.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Internal(format!("oracle normalization failed, total {total}")));
    }
    for w in &mut pmf {
        *w /= total;
    }

    let tail = *pmf.last().expect("non-empty support");
    if tail > 1e-6 {
        return Err(Error::Argument(format!(
            "tail mass {tail:e} at N_max = {n_max} exceeds 1e-6; increase N_max"
        )));
    }
    Ok(GridPosterior { n_observed: n, pmf })
}

impl GridPosterior {
    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.pmf.len() as u64).map(move |i| self.n_observed + i)
    }

    pub fn mass_at(&self, n: u64) -> f64 {
        if n < self.n_observed {
            return 0.0;
        }
        self.pmf.get((n - self.n_observed) as usize).copied().unwrap_or(0.0)
    }

    pub fn mode(&self) -> u64 {
        let (idx, _) = self
            .pmf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("non-empty support");
        self.n_observed + idx as u64
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, &w)| w * (self.n_observed + i as u64) as f64)
            .sum()
    }

    /// Smallest N with cumulative mass >= q.
    pub fn quantile(&self, q: f64) -> u64 {
        let mut acc = 0.0;
        for (i, &w) in self.pmf.iter().enumerate() {
            acc += w;
            if acc >= q {
                return self.n_observed + i as u64;
            }
        }
        self.n_observed + (self.pmf.len() as u64 - 1)
    }

    pub fn median(&self) -> u64 {
        self.quantile(0.5)
    }

    /// Total-variation distance between this pmf and the empirical pmf of the
    /// given draws. Draws outside the truncated support contribute their full
    /// empirical mass.
    pub fn tv_distance(&self, draws: &[u64]) -> f64 {
        assert!(!draws.is_empty(), "tv_distance needs draws");
        let total = draws.len() as f64;
        let mut counts = vec![0u64; self.pmf.len()];
        let mut outside = 0u64;
        for &d in draws {
            if d >= self.n_observed && ((d - self.n_observed) as usize) < self.pmf.len() {
                counts[(d - self.n_observed) as usize] += 1;
            } else {
                outside += 1;
            }
        }
        let mut tv = outside as f64 / total;
        for (i, &c) in counts.iter().enumerate() {
            tv += (c as f64 / total - self.pmf[i]).abs();
        }
        0.5 * tv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CapturePattern, PatternCounts, StratificationScheme};
    use std::collections::BTreeMap;

    fn single_label_counts(entries: &[(&str, u64)], lists: usize) -> PatternCounts {
        let regions: BTreeMap<String, String> =
            [("R".to_string(), "R".to_string())].into_iter().collect();
        let scheme = StratificationScheme::new(regions, vec!["ALL".into()]).unwrap();
        let mut c = PatternCounts::empty(scheme.labels.clone(), lists);
        for &(p, count) in entries {
            c.add_observed(CapturePattern::parse(p).unwrap(), 0, count).unwrap();
        }
        c
    }

    /// The canonical two-list table: n11 = n10 = n01 = 5.
    fn petersen_counts() -> PatternCounts {
        single_label_counts(&[("11", 5), ("10", 5), ("01", 5)], 2)
    }

    #[test]
    fn pmf_normalizes_and_mode_is_plausible() {
        let oracle = grid_posterior_oracle(&petersen_counts(), 1.0, 1.0, 750).unwrap();
        let total: f64 = oracle.pmf.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9, "total {total}");
        let mode = oracle.mode();
        assert!((15..=30).contains(&mode), "mode {mode}");
    }

    #[test]
    fn single_list_posterior_normalizes() {
        let counts = single_label_counts(&[("1", 10)], 1);
        let oracle = grid_posterior_oracle(&counts, 1.0, 1.0, 20_000).unwrap();
        let total: f64 = oracle.pmf.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
        // p(N) ∝ 1/(N (N+1)) for one uniform-prior list: check the ratio.
        let r = oracle.mass_at(10) / oracle.mass_at(20);
        assert!((r - (20.0 * 21.0) / (10.0 * 11.0)).abs() < 1e-6, "ratio {r}");
    }

    #[test]
    fn rejects_empty_data_and_small_n_max() {
        let regions: BTreeMap<String, String> =
            [("R".to_string(), "R".to_string())].into_iter().collect();
        let scheme = StratificationScheme::new(regions, vec!["ALL".into()]).unwrap();
        let empty = PatternCounts::empty(scheme.labels.clone(), 2);
        assert!(grid_posterior_oracle(&empty, 1.0, 1.0, 100).is_err());

        let err = grid_posterior_oracle(&petersen_counts(), 1.0, 1.0, 30).unwrap_err();
        assert!(matches!(err, Error::Argument(ref m) if m.contains("N_max")), "{err}");
    }

    #[test]
    fn invariant_to_list_order() {
        let a = single_label_counts(&[("110", 7), ("011", 4), ("100", 9), ("001", 3)], 3);
        // Reverse the list order: pattern strings reversed.
        let b = single_label_counts(&[("011", 7), ("110", 4), ("001", 9), ("100", 3)], 3);
        let oa = grid_posterior_oracle(&a, 1.0, 1.0, 2000).unwrap();
        let ob = grid_posterior_oracle(&b, 1.0, 1.0, 2000).unwrap();
        for (x, y) in oa.pmf.iter().zip(ob.pmf.iter()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn tv_distance_of_exact_samples_is_small() {
        let oracle = grid_posterior_oracle(&petersen_counts(), 1.0, 1.0, 750).unwrap();
        // Deterministic "draws" proportional to the pmf itself.
        let mut draws = Vec::new();
        for (i, &w) in oracle.pmf.iter().enumerate() {
            let copies = (w * 100_000.0).round() as u64;
            for _ in 0..copies {
                draws.push(oracle.n_observed + i as u64);
            }
        }
        assert!(oracle.tv_distance(&draws) < 0.01);
    }
}

//! Profile-likelihood interval for the population size.
//!
//! For a candidate zero-cell count `n0`, the model is refitted by IPF on the
//! complete 2^J table (the zero cell now carries the pseudo-count `n0`) and
//! the profile log-likelihood
//!
//! ```text
//! l(n0) = ln Γ(N+1) - ln Γ(n0+1) + Σ_x y_x ln μ_x - N ln N,   N = n + n0
//! ```
//!
//! is evaluated. The interval collects every `N` whose likelihood-ratio
//! statistic `2(l_max - l)` stays below the chi-squared(1) quantile. Sparse
//! tables can leave the profile above the cutoff for as far as one cares to
//! scan; the interval is then flagged as unbounded above.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::loglinear::ipf::{CellTable, LoglinearModel};

/// The profile only feeds a likelihood ratio; margins this tight cost far
/// less than the zero-cell projection would need.
const PROFILE_TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: u32 = 5_000;

#[derive(Clone, Copy, Debug)]
pub struct ProfileInterval {
    pub lower: f64,
    pub upper: f64,
    /// Set when the profile was still above the cutoff at the scan limit.
    pub unbounded_upper: bool,
    /// Profile maximizer on the N scale.
    pub n_hat: f64,
    pub level: f64,
}

/// Complete-table IPF fit (zero cell included with pseudo-count `n0`),
/// returning the profile log-likelihood.
fn profile_loglik(table: &CellTable, pairs: &[(usize, usize)], n0: f64) -> Result<f64> {
    let j_n = table.lists;
    let size = 1usize << j_n;
    let mut obs = table.counts.clone();
    obs[0] = n0;
    let total = table.n + n0;

    let mut terms: Vec<Vec<usize>> = (0..j_n).map(|j| vec![j]).collect();
    terms.extend(pairs.iter().map(|&(a, b)| vec![a, b]));

    let mut fitted = vec![1.0; size];
    let mut sweeps = 0;
    let mut delta = f64::INFINITY;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for term in &terms {
            for mask in 0..(1u32 << term.len()) {
                let in_combo = |c: usize| {
                    term.iter()
                        .enumerate()
                        .all(|(i, &j)| ((c >> j) & 1 == 1) == (mask & (1 << i) != 0))
                };
                let mut o = 0.0;
                let mut f = 0.0;
                for c in 0..size {
                    if in_combo(c) {
                        o += obs[c];
                        f += fitted[c];
                    }
                }
                if f > 0.0 {
                    let factor = o / f;
                    for c in 0..size {
                        if in_combo(c) {
                            fitted[c] *= factor;
                        }
                    }
                }
            }
        }
        delta = 0.0;
        for term in &terms {
            for mask in 0..(1u32 << term.len()) {
                let in_combo = |c: usize| {
                    term.iter()
                        .enumerate()
                        .all(|(i, &j)| ((c >> j) & 1 == 1) == (mask & (1 << i) != 0))
                };
                let mut o = 0.0;
                let mut f = 0.0;
                for c in 0..size {
                    if in_combo(c) {
                        o += obs[c];
                        f += fitted[c];
                    }
                }
                if o > 0.0 {
                    delta = delta.max((f - o).abs() / o);
                }
            }
        }
        if delta < PROFILE_TOLERANCE {
            break;
        }
    }
    if delta >= PROFILE_TOLERANCE {
        return Err(Error::Convergence { sweeps, delta });
    }

    let mut ll = ln_gamma(total + 1.0) - ln_gamma(n0 + 1.0) - total * total.ln();
    for c in 0..size {
        if obs[c] > 0.0 {
            ll += obs[c] * fitted[c].max(1e-300).ln();
        }
    }
    Ok(ll)
}

/// Profile-likelihood interval on N for a fitted model. `scan_limit` bounds
/// the zero-cell scan (default `50 n`); a profile still above the cutoff
/// there yields `unbounded_upper`.
pub fn loglinear_ci(
    model: &LoglinearModel,
    table: &CellTable,
    level: f64,
    scan_limit: Option<u64>,
) -> Result<ProfileInterval> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Argument(format!("level must lie in [0, 1), got {level}")));
    }
    if level == 0.0 {
        return Ok(ProfileInterval {
            lower: model.n_hat,
            upper: model.n_hat,
            unbounded_upper: false,
            n_hat: model.n_hat,
            level,
        });
    }
    let n = table.n;
    let limit = scan_limit.unwrap_or((50.0 * n) as u64).max(10);
    let cutoff = ChiSquared::new(1.0)
        .map_err(|e| Error::Internal(format!("chi-squared(1): {e}")))?
        .inverse_cdf(level);

    // Coarse integer grid over n0; fine enough for interval endpoints at the
    // stated level, cheap enough to refit the table at every point.
    let step = ((limit as f64) / 2_000.0).ceil().max(1.0) as u64;
    let mut grid: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut best_n0 = 0.0;
    let mut n0 = 0u64;
    let mut unbounded = true;
    while n0 <= limit {
        let ll = profile_loglik(table, &model.pairs, n0 as f64)?;
        grid.push((n0 as f64, ll));
        if ll > best {
            best = ll;
            best_n0 = n0 as f64;
        }
        // Scan far enough past the peak to bracket the upper crossing.
        if ll < best - (cutoff / 2.0 + 4.0) && (n0 as f64) > best_n0 {
            unbounded = false;
            break;
        }
        n0 += step;
    }

    let inside = |ll: f64| 2.0 * (best - ll) <= cutoff;
    let cross = |a: (f64, f64), b: (f64, f64)| -> f64 {
        // Linear interpolation of 2(best - ll) across the cutoff.
        let fa = 2.0 * (best - a.1) - cutoff;
        let fb = 2.0 * (best - b.1) - cutoff;
        if (fb - fa).abs() < 1e-12 {
            return a.0;
        }
        a.0 + (b.0 - a.0) * (-fa) / (fb - fa)
    };

    let mut lower_n0 = grid.first().map(|&(x, _)| x).unwrap_or(0.0);
    let mut upper_n0 = grid.last().map(|&(x, _)| x).unwrap_or(0.0);
    for w in grid.windows(2) {
        if !inside(w[0].1) && inside(w[1].1) && w[1].0 <= best_n0 {
            lower_n0 = cross(w[0], w[1]);
        }
        if inside(w[0].1) && !inside(w[1].1) && w[0].0 >= best_n0 {
            upper_n0 = cross(w[0], w[1]);
            break;
        }
    }
    if inside(grid[0].1) {
        lower_n0 = 0.0;
    }

    Ok(ProfileInterval {
        lower: n + lower_n0,
        upper: n + upper_n0,
        unbounded_upper: unbounded,
        n_hat: n + best_n0,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loglinear::ipf::fit_loglinear;

    fn two_list_table(n11: f64, n10: f64, n01: f64) -> CellTable {
        CellTable::new(2, &[(0b11, n11), (0b01, n10), (0b10, n01)]).unwrap()
    }

    #[test]
    fn petersen_interval_contains_the_point_estimate() {
        let table = two_list_table(5.0, 5.0, 5.0);
        let model = fit_loglinear(&table, &[]).unwrap();
        let ci = loglinear_ci(&model, &table, 0.95, None).unwrap();
        assert!(!ci.unbounded_upper);
        assert!(ci.lower <= 20.0 && 20.0 <= ci.upper, "{ci:?}");
        assert!((ci.n_hat - 20.0).abs() <= 1.0, "profile max at {}", ci.n_hat);
    }

    #[test]
    fn level_zero_degenerates_to_the_point_estimate() {
        let table = two_list_table(5.0, 5.0, 5.0);
        let model = fit_loglinear(&table, &[]).unwrap();
        let ci = loglinear_ci(&model, &table, 0.0, None).unwrap();
        assert_eq!((ci.lower, ci.upper), (model.n_hat, model.n_hat));
    }

    #[test]
    fn near_disjoint_lists_flag_an_unbounded_upper_bound() {
        // Overlap of one record: the profile stays in the interval far past
        // any reasonable scan limit.
        let table = two_list_table(1.0, 50.0, 50.0);
        let model = fit_loglinear(&table, &[]).unwrap();
        let ci = loglinear_ci(&model, &table, 0.95, Some(5_000)).unwrap();
        assert!(ci.unbounded_upper, "{ci:?}");
    }
}

//! Model search over hierarchical two-way-interaction models.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loglinear::ipf::{fit_loglinear, CellTable, LoglinearModel};

/// Exhaustive enumeration is used up to this many lists; beyond it the pair
/// space (2^(J(J-1)/2) subsets) forces greedy forward selection.
pub const EXHAUSTIVE_LIST_LIMIT: usize = 6;
pub const SEARCH_LIST_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Rank by `G² - df ln n`, ascending. Deviance p-values are reported per
    /// model regardless of the ranking criterion.
    Bic,
}

#[derive(Debug)]
pub struct SearchOutcome {
    /// Fitted models, best first. Ties break on the lexicographically
    /// smallest term set.
    pub models: Vec<LoglinearModel>,
    /// Set when no pair term is identifiable: only independence was fitted.
    pub independence_only: bool,
    /// Models dropped because the zero-cell projection was not identified.
    pub skipped_unidentified: usize,
}

fn rank_key(m: &LoglinearModel) -> (f64, Vec<(usize, usize)>) {
    (m.bic, m.pairs.clone())
}

fn fit_many(
    table: &CellTable,
    candidates: Vec<Vec<(usize, usize)>>,
) -> Result<(Vec<LoglinearModel>, usize)> {
    let fits: Vec<Result<LoglinearModel>> = candidates
        .into_par_iter()
        .map(|pairs| fit_loglinear(table, &pairs))
        .collect();
    let mut models = Vec::new();
    let mut skipped = 0;
    for fit in fits {
        match fit {
            Ok(m) if m.zero_cell_identified => models.push(m),
            Ok(_) => skipped += 1,
            // A candidate can hit a zero margin or fail to converge without
            // invalidating the search.
            Err(Error::Unidentifiable(_)) | Err(Error::Convergence { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((models, skipped))
}

/// Fits identifiable hierarchical models up to two-way terms and ranks them.
/// Exhaustive over pair subsets for J <= 6, greedy forward selection for
/// J = 7, 8.
pub fn search_models(table: &CellTable, criterion: Criterion) -> Result<SearchOutcome> {
    let Criterion::Bic = criterion;
    let j_n = table.lists;
    if j_n > SEARCH_LIST_LIMIT {
        return Err(Error::Argument(format!(
            "model search supports up to {SEARCH_LIST_LIMIT} lists, got {j_n}"
        )));
    }

    // Pairs whose overlap margin allows estimation.
    let mut all_pairs = Vec::new();
    for a in 0..j_n {
        for b in (a + 1)..j_n {
            let overlap: f64 = (1..(1usize << j_n))
                .filter(|&c| c & (1 << a) != 0 && c & (1 << b) != 0)
                .map(|c| table.counts[c])
                .sum();
            if overlap > 0.0 {
                all_pairs.push((a, b));
            }
        }
    }

    let independence = fit_loglinear(table, &[])?;
    if all_pairs.is_empty() {
        return Ok(SearchOutcome {
            models: vec![independence],
            independence_only: true,
            skipped_unidentified: 0,
        });
    }

    let (mut models, skipped) = if j_n <= EXHAUSTIVE_LIST_LIMIT {
        let mut candidates = Vec::with_capacity(1 << all_pairs.len());
        for mask in 1u64..(1u64 << all_pairs.len()) {
            let pairs: Vec<(usize, usize)> = all_pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &p)| p)
                .collect();
            candidates.push(pairs);
        }
        fit_many(table, candidates)?
    } else {
        greedy_forward(table, &independence, &all_pairs)?
    };

    models.push(independence);
    models.sort_by(|a, b| {
        rank_key(a).partial_cmp(&rank_key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    models.dedup_by(|a, b| a.pairs == b.pairs);
    let independence_only = models.iter().all(|m| m.pairs.is_empty());
    Ok(SearchOutcome { models, independence_only, skipped_unidentified: skipped })
}

/// Starts from independence and adds the pair with the best criterion
/// improvement until no addition improves it. Every evaluated candidate is
/// kept for the ranking.
fn greedy_forward(
    table: &CellTable,
    independence: &LoglinearModel,
    all_pairs: &[(usize, usize)],
) -> Result<(Vec<LoglinearModel>, usize)> {
    let mut current: Vec<(usize, usize)> = Vec::new();
    let mut best_bic = independence.bic;
    let mut evaluated = Vec::new();
    let mut skipped = 0;
    loop {
        let candidates: Vec<Vec<(usize, usize)>> = all_pairs
            .iter()
            .filter(|p| !current.contains(p))
            .map(|&p| {
                let mut pairs = current.clone();
                pairs.push(p);
                pairs.sort_unstable();
                pairs
            })
            .collect();
        if candidates.is_empty() {
            break;
        }
        let (fits, s) = fit_many(table, candidates)?;
        skipped += s;
        let best_step = fits.iter().enumerate().min_by(|(_, a), (_, b)| {
            rank_key(a).partial_cmp(&rank_key(b)).unwrap_or(std::cmp::Ordering::Equal)
        });
        let improved = match best_step {
            Some((idx, m)) if m.bic < best_bic => {
                best_bic = m.bic;
                current = fits[idx].pairs.clone();
                true
            }
            _ => false,
        };
        evaluated.extend(fits);
        if !improved {
            break;
        }
    }
    Ok((evaluated, skipped))
}

//! Conditional maximum likelihood for hierarchical log-linear models via
//! iterative proportional fitting (IPF).
//!
//! The model table covers the 2^J - 1 observable cells; the all-zero cell is
//! structurally absent (conditional likelihood). IPF repeatedly rescales the
//! fitted table so each included term's margins match the observed margins;
//! at the fixed point the fitted table is the conditional MLE. The all-zero
//! cell is then projected by extracting the log-linear parameters from the
//! fitted table (least squares on the log scale, exact at the fixed point)
//! and evaluating the intercept.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::PatternCounts;
use crate::error::{Error, Result};

/// Margin-matching tolerance of the fixed point (relative). Tight because
/// margin error is amplified into the zero-cell projection when overlap
/// cells are small.
pub const IPF_TOLERANCE: f64 = 1e-12;
/// Residual margin error accepted as a boundary fit: when the conditional MLE
/// has fitted cells decaying to zero, IPF approaches it only sublinearly and
/// the fixed-point tolerance is unreachable in finite sweeps.
pub const BOUNDARY_TOLERANCE: f64 = 1e-3;
const MAX_SWEEPS: u32 = 5_000;

/// Observed cell counts over the full 2^J pattern space for one stratum.
/// Index = pattern bits; index 0 is structurally zero.
#[derive(Clone, Debug)]
pub struct CellTable {
    pub lists: usize,
    pub counts: Vec<f64>,
    pub n: f64,
}

impl CellTable {
    pub fn new(lists: usize, cells: &[(u16, f64)]) -> Result<Self> {
        if lists < 2 || lists > 16 {
            return Err(Error::Argument(format!("need 2..=16 lists, got {lists}")));
        }
        let mut counts = vec![0.0; 1usize << lists];
        for &(bits, count) in cells {
            if bits == 0 {
                return Err(Error::Validation("the all-zero cell is not observable".into()));
            }
            if (bits as usize) >= counts.len() {
                return Err(Error::Argument(format!("cell {bits:#b} outside {lists}-list table")));
            }
            if count < 0.0 {
                return Err(Error::Argument("cell counts must be non-negative".into()));
            }
            counts[bits as usize] += count;
        }
        let n = counts.iter().sum();
        Ok(Self { lists, counts, n })
    }

    /// Pools one label's observed counts (or all labels when `label` is
    /// `None`) into a cell table. Missing-label rows are never included.
    pub fn from_pattern_counts(counts: &PatternCounts, label: Option<usize>) -> Result<Self> {
        let cells: Vec<(u16, f64)> = counts
            .observed()
            .iter()
            .filter(|((_, y), _)| label.map_or(true, |l| *y == l))
            .map(|((p, _), &c)| (p.bits(), c as f64))
            .collect();
        Self::new(counts.lists(), &cells)
    }
}

/// A fitted hierarchical log-linear model (main effects for every list,
/// optional two-way interaction terms).
#[derive(Clone, Debug)]
pub struct LoglinearModel {
    pub lists: usize,
    /// Included pair terms, each `(j, j')` with `j < j'`.
    pub pairs: Vec<(usize, usize)>,
    /// Fitted expected counts over the observable cells (index = bits).
    pub fitted: Vec<f64>,
    /// Projected expectation of the all-zero cell.
    pub zero_cell: f64,
    /// False when the intercept is not identified on the observable cells
    /// (e.g. the saturated two-list model); `zero_cell`/`n_hat` are NaN then.
    pub zero_cell_identified: bool,
    pub n_hat: f64,
    /// G² over observed cells (0 log 0 = 0).
    pub deviance: f64,
    /// Observable cells minus parameters; negative for overparameterized
    /// models.
    pub df: i64,
    /// Deviance p-value, present when df > 0.
    pub p_value: Option<f64>,
    /// `G² - df ln n`; smaller is better.
    pub bic: f64,
    pub n: f64,
    pub sweeps: u32,
    /// True when the MLE lies on the boundary of the model (fitted cells
    /// decaying to zero, margins matched only to [`BOUNDARY_TOLERANCE`]).
    /// Such fits project unstable, typically enormous population sizes.
    pub boundary: bool,
}

fn term_combos(term: &[usize]) -> Vec<Vec<(usize, bool)>> {
    let mut combos = Vec::with_capacity(1 << term.len());
    for mask in 0..(1u32 << term.len()) {
        combos.push(
            term.iter().enumerate().map(|(i, &j)| (j, mask & (1 << i) != 0)).collect(),
        );
    }
    combos
}

fn cell_in_combo(bits: usize, combo: &[(usize, bool)]) -> bool {
    combo.iter().all(|&(j, on)| ((bits >> j) & 1 == 1) == on)
}

/// Fits the model with the given pair terms by IPF on the observable cells.
pub fn fit_loglinear(table: &CellTable, pairs: &[(usize, usize)]) -> Result<LoglinearModel> {
    let j_n = table.lists;
    if table.n <= 0.0 {
        return Err(Error::Argument("empty table".into()));
    }
    let mut pairs = pairs.to_vec();
    pairs.sort_unstable();
    pairs.dedup();
    for &(a, b) in &pairs {
        if a >= b || b >= j_n {
            return Err(Error::Argument(format!("bad pair term ({a}, {b}) for {j_n} lists")));
        }
    }

    let mut terms: Vec<Vec<usize>> = (0..j_n).map(|j| vec![j]).collect();
    terms.extend(pairs.iter().map(|&(a, b)| vec![a, b]));
    let size = 1usize << j_n;

    // Every margin combo with at least one observable cell must have a
    // positive observed count, otherwise the term cannot be estimated.
    for term in &terms {
        for combo in term_combos(term) {
            let cells: Vec<usize> = (1..size).filter(|&c| cell_in_combo(c, &combo)).collect();
            if cells.is_empty() {
                continue;
            }
            let margin: f64 = cells.iter().map(|&c| table.counts[c]).sum();
            if margin <= 0.0 {
                let desc: Vec<String> = combo
                    .iter()
                    .map(|&(j, on)| format!("list {}={}", j + 1, if on { 1 } else { 0 }))
                    .collect();
                return Err(Error::Unidentifiable(format!(
                    "term {{{}}} has a zero margin at ({})",
                    term.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(","),
                    desc.join(", ")
                )));
            }
        }
    }

    let mut fitted = vec![1.0; size];
    fitted[0] = 0.0;
    let mut sweeps = 0;
    let mut delta = f64::INFINITY;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for term in &terms {
            for combo in term_combos(term) {
                let mut obs = 0.0;
                let mut fit = 0.0;
                for c in 1..size {
                    if cell_in_combo(c, &combo) {
                        obs += table.counts[c];
                        fit += fitted[c];
                    }
                }
                if obs > 0.0 && fit > 0.0 {
                    let factor = obs / fit;
                    for c in 1..size {
                        if cell_in_combo(c, &combo) {
                            fitted[c] *= factor;
                        }
                    }
                }
            }
        }
        delta = 0.0;
        for term in &terms {
            for combo in term_combos(term) {
                let mut obs = 0.0;
                let mut fit = 0.0;
                for c in 1..size {
                    if cell_in_combo(c, &combo) {
                        obs += table.counts[c];
                        fit += fitted[c];
                    }
                }
                if obs > 0.0 {
                    delta = delta.max((fit - obs).abs() / obs);
                }
            }
        }
        if delta < IPF_TOLERANCE {
            break;
        }
    }
    let boundary = delta >= IPF_TOLERANCE;
    if boundary && delta >= BOUNDARY_TOLERANCE {
        return Err(Error::Convergence { sweeps, delta });
    }

    let (zero_cell, identified) = project_zero_cell(j_n, &pairs, &fitted);
    let n_hat = if identified { table.n + zero_cell } else { f64::NAN };

    let mut deviance = 0.0;
    for c in 1..size {
        let obs = table.counts[c];
        if obs > 0.0 {
            deviance += 2.0 * obs * (obs / fitted[c]).ln();
        }
    }
    // The fixed point can leave a tiny negative rounding residue.
    if deviance < 0.0 && deviance > -1e-8 {
        deviance = 0.0;
    }

    let params = 1 + j_n + pairs.len();
    let df = (size as i64 - 1) - params as i64;
    let p_value = if df > 0 {
        let chi = ChiSquared::new(df as f64)
            .map_err(|e| Error::Internal(format!("chi-squared(df={df}): {e}")))?;
        Some(1.0 - chi.cdf(deviance))
    } else {
        None
    };
    let bic = deviance - df as f64 * table.n.ln();

    Ok(LoglinearModel {
        lists: j_n,
        pairs,
        fitted,
        zero_cell,
        zero_cell_identified: identified,
        n_hat,
        deviance,
        df,
        p_value,
        bic,
        n: table.n,
        sweeps,
        boundary,
    })
}

/// Recovers the log-linear intercept from the fitted table by least squares
/// of `log fitted` on the model design over the observable cells, and
/// evaluates the zero cell `exp(intercept)`. Returns `(NaN, false)` when the
/// intercept is not identified (rank-deficient design).
fn project_zero_cell(lists: usize, pairs: &[(usize, usize)], fitted: &[f64]) -> (f64, bool) {
    let size = 1usize << lists;
    let p = 1 + lists + pairs.len();
    let design_row = |bits: usize| -> Vec<f64> {
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        for j in 0..lists {
            row.push(((bits >> j) & 1) as f64);
        }
        for &(a, b) in pairs {
            row.push((((bits >> a) & 1) & ((bits >> b) & 1)) as f64);
        }
        row
    };

    // Normal equations A beta = rhs.
    let mut a = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for bits in 1..size {
        let z = design_row(bits);
        let y = fitted[bits].max(1e-300).ln();
        for r in 0..p {
            rhs[r] += z[r] * y;
            for c in 0..p {
                a[r * p + c] += z[r] * z[c];
            }
        }
    }

    let scale = a.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut beta = rhs;
    // Gaussian elimination with partial pivoting.
    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&r1, &r2| {
                a[r1 * p + col].abs().partial_cmp(&a[r2 * p + col].abs()).unwrap()
            })
            .unwrap();
        if a[pivot_row * p + col].abs() <= 1e-9 * scale.max(1.0) {
            return (f64::NAN, false);
        }
        if pivot_row != col {
            for c in 0..p {
                a.swap(col * p + c, pivot_row * p + c);
            }
            beta.swap(col, pivot_row);
        }
        let pivot = a[col * p + col];
        for r in (col + 1)..p {
            let factor = a[r * p + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..p {
                a[r * p + c] -= factor * a[col * p + c];
            }
            beta[r] -= factor * beta[col];
        }
    }
    for col in (0..p).rev() {
        let mut v = beta[col];
        for c in (col + 1)..p {
            v -= a[col * p + c] * beta[c];
        }
        beta[col] = v / a[col * p + col];
    }

    (beta[0].exp(), true)
}

/// Classical two-list estimate `n1 * n2 / m`.
pub fn petersen_estimate(n1: f64, n2: f64, overlap: f64) -> f64 {
    n1 * n2 / overlap
}

/// Bias-corrected two-list estimate `(n1+1)(n2+1)/(m+1) - 1`.
pub fn chapman_estimate(n1: f64, n2: f64, overlap: f64) -> f64 {
    (n1 + 1.0) * (n2 + 1.0) / (overlap + 1.0) - 1.0
}

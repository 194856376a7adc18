//! Posterior draw containers, cross-stratum aggregation and summaries.
//!
//! Regions are modeled independently, so draws from independent per-region
//! chains may be paired by draw index; the index-wise sum then has the
//! distribution of the aggregate. This silently assumes equal thinned chain
//! lengths, which [`aggregate`] enforces instead of padding or truncating.

use serde::Serialize;

use crate::error::{Error, Result};

/// Provenance carried by every set of posterior samples.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunMeta {
    pub region: String,
    pub prior_scheme: String,
    pub seed: u64,
    pub stream_id: u64,
    pub config_hash: String,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DivergenceInfo {
    /// Iteration (1-based, including burn-in) at which the chain aborted.
    pub iteration: u64,
    /// Residual mass `1 - sum(cell weights)` at the abort.
    pub residual: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ChainDiagnostics {
    /// Set when the chain aborted on an unbounded population draw.
    pub divergence: Option<DivergenceInfo>,
    /// Iterations where `log pi_{K*}` had to be clamped at -700.
    pub clamped_log_stick: u64,
    /// Allocation draws that fell back to uniform weights after underflow.
    pub degenerate_allocations: u64,
}

impl ChainDiagnostics {
    pub fn merge(&mut self, other: &ChainDiagnostics) {
        if self.divergence.is_none() {
            self.divergence = other.divergence;
        }
        self.clamped_log_stick += other.clamped_log_stick;
        self.degenerate_allocations += other.degenerate_allocations;
    }
}

/// One retained (thinned) draw.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    /// Post-burn-in iteration the draw was recorded at.
    pub iteration: u64,
    pub n_total: u64,
    /// Population size per label, `n_y + omega0_y`.
    pub n_y: Vec<u64>,
    pub rho: Vec<f64>,
    /// Missing-label records imputed to each label at this iteration.
    pub imputed: Vec<u64>,
    pub alpha: Vec<f64>,
}

/// Thinned posterior draws for one region (or an aggregate of regions).
#[derive(Clone, Debug)]
pub struct PosteriorSamples {
    pub labels: Vec<String>,
    pub draws: Vec<Draw>,
    pub meta: RunMeta,
    pub diagnostics: ChainDiagnostics,
}

impl PosteriorSamples {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn is_diverged(&self) -> bool {
        self.diagnostics.divergence.is_some()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Names of all scalar quantities exposed per draw.
    pub fn quantity_names(&self) -> Vec<String> {
        let mut names = vec!["N_total".to_string()];
        names.extend(self.labels.iter().map(|l| format!("N_{l}")));
        names.extend(self.labels.iter().map(|l| format!("rho_{l}")));
        names.extend(self.labels.iter().map(|l| format!("imputed_{l}")));
        if self.draws.first().map(|d| !d.alpha.is_empty()).unwrap_or(false) {
            names.extend(self.labels.iter().map(|l| format!("alpha_{l}")));
        }
        names
    }

    /// Column extraction by quantity name; `None` when the name is unknown.
    pub fn quantity(&self, name: &str) -> Option<Vec<f64>> {
        if name == "N_total" {
            return Some(self.draws.iter().map(|d| d.n_total as f64).collect());
        }
        for (prefix, get) in [
            ("N_", 0usize),
            ("rho_", 1),
            ("imputed_", 2),
            ("alpha_", 3),
        ] {
            if let Some(label) = name.strip_prefix(prefix) {
                let y = self.label_index(label)?;
                let col: Option<Vec<f64>> = self
                    .draws
                    .iter()
                    .map(|d| match get {
                        0 => Some(d.n_y[y] as f64),
                        1 => Some(d.rho[y]),
                        2 => Some(d.imputed[y] as f64),
                        _ => d.alpha.get(y).copied(),
                    })
                    .collect();
                return col;
            }
        }
        None
    }

    pub fn n_y_draws(&self, label_idx: usize) -> Vec<u64> {
        self.draws.iter().map(|d| d.n_y[label_idx]).collect()
    }

    pub fn n_total_draws(&self) -> Vec<u64> {
        self.draws.iter().map(|d| d.n_total).collect()
    }
}

/// Draw-wise sum across independent per-region chains. Draw counts and label
/// sets must match exactly; the aggregate's `rho` is recomputed as each
/// label's share `N_y / N` and per-label `alpha` values are not carried over.
pub fn aggregate(regions: &[PosteriorSamples]) -> Result<PosteriorSamples> {
    let first = regions
        .first()
        .ok_or_else(|| Error::Argument("aggregate needs at least one region".into()))?;
    if regions.len() == 1 {
        return Ok(first.clone());
    }
    let n_draws = first.n_draws();
    let mismatched: Vec<String> = regions
        .iter()
        .filter(|r| r.n_draws() != n_draws)
        .map(|r| format!("{} ({} draws)", r.meta.region, r.n_draws()))
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::Validation(format!(
            "draw-count mismatch vs {} ({} draws): {}",
            first.meta.region,
            n_draws,
            mismatched.join(", ")
        )));
    }
    for r in regions {
        if r.labels != first.labels {
            return Err(Error::Validation(format!(
                "label sets differ between {} and {}",
                first.meta.region, r.meta.region
            )));
        }
    }

    let y_count = first.labels.len();
    let mut draws = Vec::with_capacity(n_draws);
    for i in 0..n_draws {
        let mut n_total = 0u64;
        let mut n_y = vec![0u64; y_count];
        let mut imputed = vec![0u64; y_count];
        for r in regions {
            let d = &r.draws[i];
            n_total += d.n_total;
            for y in 0..y_count {
                n_y[y] += d.n_y[y];
                imputed[y] += d.imputed[y];
            }
        }
        let rho = n_y
            .iter()
            .map(|&c| if n_total > 0 { c as f64 / n_total as f64 } else { 0.0 })
            .collect();
        draws.push(Draw {
            iteration: first.draws[i].iteration,
            n_total,
            n_y,
            rho,
            imputed,
            alpha: Vec::new(),
        });
    }

    let mut diagnostics = ChainDiagnostics::default();
    for r in regions {
        diagnostics.merge(&r.diagnostics);
    }
    let all_same_hash = regions.iter().all(|r| r.meta.config_hash == first.meta.config_hash);
    Ok(PosteriorSamples {
        labels: first.labels.clone(),
        draws,
        meta: RunMeta {
            region: regions.iter().map(|r| r.meta.region.as_str()).collect::<Vec<_>>().join("+"),
            prior_scheme: first.meta.prior_scheme.clone(),
            seed: first.meta.seed,
            stream_id: first.meta.stream_id,
            config_hash: if all_same_hash {
                first.meta.config_hash.clone()
            } else {
                "mixed".to_string()
            },
        },
        diagnostics,
    })
}

/// Type-7 (linear interpolation) quantile of unsorted data.
pub fn quantile_type7(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_type7_sorted(&sorted, q)
}

fn quantile_type7_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantitySummary {
    pub quantity: String,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    /// Central credible level the interval corresponds to.
    pub level: f64,
    pub n_draws: usize,
    pub rows: Vec<QuantitySummary>,
}

/// Posterior median, central credible interval (type-7 quantiles), mean and
/// standard deviation for every exposed quantity.
pub fn summarize(samples: &PosteriorSamples, level: f64) -> Result<Summary> {
    if samples.n_draws() < 2 {
        return Err(Error::Argument(format!(
            "summaries need at least 2 draws, got {}",
            samples.n_draws()
        )));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Argument(format!("level must lie in [0, 1), got {level}")));
    }
    let tail = (1.0 - level) / 2.0;
    let mut rows = Vec::new();
    for name in samples.quantity_names() {
        let values = samples.quantity(&name).expect("names come from the samples");
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        rows.push(QuantitySummary {
            quantity: name,
            median: quantile_type7_sorted(&sorted, 0.5),
            lower: quantile_type7_sorted(&sorted, tail),
            upper: quantile_type7_sorted(&sorted, 1.0 - tail),
            mean,
            sd: var.max(0.0).sqrt(),
        });
    }
    Ok(Summary { level, n_draws: samples.n_draws(), rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub pr_a_gt_b: f64,
    pub pr_b_gt_a: f64,
    pub pr_tie: f64,
    pub median_diff: f64,
    /// Value the difference exceeds with probability `q`.
    pub lower_bound: f64,
    pub q: f64,
}

/// Draw-wise difference `N_a - N_b`: exceedance probability, median
/// difference and the bound exceeded with probability `q`.
pub fn compare_labels(
    samples: &PosteriorSamples,
    label_a: &str,
    label_b: &str,
    q: f64,
) -> Result<Comparison> {
    let a = samples
        .label_index(label_a)
        .ok_or_else(|| Error::Argument(format!("label {label_a:?} not present")))?;
    let b = samples
        .label_index(label_b)
        .ok_or_else(|| Error::Argument(format!("label {label_b:?} not present")))?;
    if samples.n_draws() == 0 {
        return Err(Error::Argument("comparison needs draws".into()));
    }
    let diffs: Vec<f64> = samples
        .draws
        .iter()
        .map(|d| d.n_y[a] as f64 - d.n_y[b] as f64)
        .collect();
    let n = diffs.len() as f64;
    let gt = diffs.iter().filter(|&&d| d > 0.0).count() as f64;
    let lt = diffs.iter().filter(|&&d| d < 0.0).count() as f64;
    let tie = n - gt - lt;
    Ok(Comparison {
        label_a: label_a.to_string(),
        label_b: label_b.to_string(),
        pr_a_gt_b: gt / n,
        pr_b_gt_a: lt / n,
        pr_tie: tie / n,
        median_diff: quantile_type7(&diffs, 0.5),
        lower_bound: quantile_type7(&diffs, 1.0 - q),
        q,
    })
}

/// Histogram bin specification; equal-width bins over `[min, max]`.
#[derive(Clone, Copy, Debug)]
pub struct BinSpec {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityTable {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Per-bin probability mass (sums to 1 over in-range draws).
    pub mass: Vec<f64>,
    /// Gaussian KDE (Silverman bandwidth) on bin centers; absent for
    /// degenerate samples.
    pub kde: Option<Vec<(f64, f64)>>,
    pub note: Option<String>,
}

/// Histogram plus optional Gaussian-kernel density for one quantity.
pub fn density_export(
    samples: &PosteriorSamples,
    quantity: &str,
    grid: Option<BinSpec>,
) -> Result<DensityTable> {
    if samples.n_draws() < 2 {
        return Err(Error::Argument("density export needs at least 2 draws".into()));
    }
    let values = samples
        .quantity(quantity)
        .ok_or_else(|| Error::Argument(format!("unknown quantity {quantity:?}")))?;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spec = grid.unwrap_or_else(|| {
        let pad = ((hi - lo) * 1e-9).max(1e-9);
        BinSpec { min: lo, max: hi + pad, bins: 50 }
    });
    if !(spec.max > spec.min) || spec.bins == 0 {
        return Err(Error::Argument("bin spec must have max > min and bins >= 1".into()));
    }

    let width = (spec.max - spec.min) / spec.bins as f64;
    let mut counts = vec![0u64; spec.bins];
    let mut out_of_range = 0u64;
    for &v in &values {
        if v < spec.min || v > spec.max {
            out_of_range += 1;
            continue;
        }
        let idx = (((v - spec.min) / width) as usize).min(spec.bins - 1);
        counts[idx] += 1;
    }
    let in_range: u64 = counts.iter().sum();
    if in_range == 0 {
        return Err(Error::Argument("no draws fall inside the bin grid".into()));
    }
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / in_range as f64).collect();
    let edges: Vec<f64> = (0..=spec.bins).map(|i| spec.min + i as f64 * width).collect();

    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile_type7(&values, 0.75) - quantile_type7(&values, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bandwidth = 0.9 * spread * n.powf(-0.2);

    let mut note = None;
    if out_of_range > 0 {
        note = Some(format!("{out_of_range} draw(s) outside the bin grid were excluded"));
    }
    let kde = if bandwidth > 0.0 && sd > 0.0 {
        let inv = 1.0 / (bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        let centers: Vec<f64> = (0..spec.bins).map(|i| spec.min + (i as f64 + 0.5) * width).collect();
        Some(
            centers
                .iter()
                .map(|&c| {
                    let dens = values
                        .iter()
                        .map(|&x| {
                            let z = (c - x) / bandwidth;
                            inv * (-0.5 * z * z).exp()
                        })
                        .sum::<f64>()
                        / n;
                    (c, dens)
                })
                .collect(),
        )
    } else {
        note = Some(match note {
            Some(n) => format!("{n}; KDE skipped for zero-variance samples"),
            None => "KDE skipped for zero-variance samples".to_string(),
        });
        None
    };

    Ok(DensityTable { edges, counts, mass, kde, note })
}

/// Rubin's-rules combination of point estimates over completed datasets.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RubinPooled {
    pub estimate: f64,
    pub within: f64,
    pub between: f64,
    /// `within + (1 + 1/m) * between`.
    pub total_variance: f64,
    pub runs: usize,
}

/// Input to [`pool_multiple_runs`]: per-run `(estimate, variance)` pairs for
/// point estimators, or full posterior sample sets for Bayesian runs.
pub enum PoolInput<'a> {
    PointEstimates(&'a [(f64, f64)]),
    Bayesian(&'a [PosteriorSamples]),
}

pub enum Pooled {
    Rubin(RubinPooled),
    /// Concatenated draws; mixing posteriors across completed datasets is a
    /// pragmatic approximation and is flagged in the note.
    Bayesian { samples: PosteriorSamples, note: String },
}

/// Pools runs over multiply-completed datasets: Rubin's rules for point
/// estimates, draw concatenation for Bayesian runs.
pub fn pool_multiple_runs(input: PoolInput<'_>) -> Result<Pooled> {
    match input {
        PoolInput::PointEstimates(runs) => {
            if runs.is_empty() {
                return Err(Error::Argument("pooling needs at least one run".into()));
            }
            let m = runs.len() as f64;
            let estimate = runs.iter().map(|r| r.0).sum::<f64>() / m;
            let within = runs.iter().map(|r| r.1).sum::<f64>() / m;
            let between = if runs.len() > 1 {
                runs.iter().map(|r| (r.0 - estimate) * (r.0 - estimate)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            Ok(Pooled::Rubin(RubinPooled {
                estimate,
                within,
                between,
                total_variance: within + (1.0 + 1.0 / m) * between,
                runs: runs.len(),
            }))
        }
        PoolInput::Bayesian(runs) => {
            let first = runs
                .first()
                .ok_or_else(|| Error::Argument("pooling needs at least one run".into()))?;
            for r in runs {
                if r.labels != first.labels || r.meta.config_hash != first.meta.config_hash {
                    return Err(Error::Validation(
                        "runs to pool must share labels and configuration".into(),
                    ));
                }
            }
            let mut samples = first.clone();
            for r in &runs[1..] {
                samples.draws.extend(r.draws.iter().cloned());
                samples.diagnostics.merge(&r.diagnostics);
            }
            Ok(Pooled::Bayesian {
                samples,
                note: format!(
                    "concatenated draws from {} completed datasets (posterior mixture)",
                    runs.len()
                ),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples_from_ny(region: &str, rows: &[(u64, u64)]) -> PosteriorSamples {
        let labels = vec!["A".to_string(), "B".to_string()];
        let draws = rows
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Draw {
                iteration: i as u64 + 1,
                n_total: a + b,
                n_y: vec![a, b],
                rho: vec![0.5, 0.5],
                imputed: vec![0, 0],
                alpha: vec![0.25, 0.25],
            })
            .collect();
        PosteriorSamples {
            labels,
            draws,
            meta: RunMeta { region: region.into(), ..Default::default() },
            diagnostics: ChainDiagnostics::default(),
        }
    }

    #[test]
    fn aggregate_sums_draw_wise() {
        let r1 = samples_from_ny("R1", &[(10, 0), (10, 0)]);
        let r2 = samples_from_ny("R2", &[(5, 0), (5, 0)]);
        let agg = aggregate(&[r1, r2]).unwrap();
        assert!(agg.draws.iter().all(|d| d.n_y[0] == 15));
    }

    #[test]
    fn aggregate_of_one_region_is_identity() {
        let r1 = samples_from_ny("R1", &[(10, 3), (12, 4)]);
        let agg = aggregate(std::slice::from_ref(&r1)).unwrap();
        assert_eq!(agg.draws, r1.draws);
    }

    #[test]
    fn aggregation_is_draw_wise_not_median_wise() {
        // Skewed 3-draw example: aggregate median 4, not 2 + 2.
        let r1 = samples_from_ny("R1", &[(1, 0), (2, 0), (9, 0)]);
        let r2 = samples_from_ny("R2", &[(1, 0), (2, 0), (9, 0)]);
        let agg = aggregate(&[r1, r2]).unwrap();
        let med = quantile_type7(
            &agg.draws.iter().map(|d| d.n_y[0] as f64).collect::<Vec<_>>(),
            0.5,
        );
        assert_eq!(med, 4.0);
    }

    #[test]
    fn aggregate_rejects_mismatched_draw_counts() {
        let r1 = samples_from_ny("R1", &[(1, 0), (2, 0)]);
        let r2 = samples_from_ny("R2", &[(1, 0)]);
        let err = aggregate(&[r1, r2]).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("R2")), "{err}");
    }

    #[test]
    fn summarize_median_and_degenerate_interval() {
        let rows: Vec<(u64, u64)> = (1..=100).map(|i| (i, 7)).collect();
        let s = samples_from_ny("R", &rows);
        let summary = summarize(&s, 0.95).unwrap();
        let n_a = summary.rows.iter().find(|r| r.quantity == "N_A").unwrap();
        assert!((n_a.median - 50.5).abs() < 1e-12);
        assert!(n_a.lower <= n_a.median && n_a.median <= n_a.upper);
        let n_b = summary.rows.iter().find(|r| r.quantity == "N_B").unwrap();
        assert_eq!((n_b.lower, n_b.upper), (7.0, 7.0));
    }

    #[test]
    fn summarize_needs_two_draws() {
        let s = samples_from_ny("R", &[(1, 1)]);
        assert!(summarize(&s, 0.95).is_err());
    }

    #[test]
    fn aggregate_mean_is_sum_of_means() {
        let r1 = samples_from_ny("R1", &[(3, 1), (9, 2), (6, 3)]);
        let r2 = samples_from_ny("R2", &[(10, 5), (20, 5), (30, 5)]);
        let m1 = summarize(&r1, 0.9).unwrap();
        let m2 = summarize(&r2, 0.9).unwrap();
        let agg = summarize(&aggregate(&[r1, r2]).unwrap(), 0.9).unwrap();
        let mean = |s: &Summary, q: &str| {
            s.rows.iter().find(|r| r.quantity == q).unwrap().mean
        };
        assert!(
            (mean(&agg, "N_total") - mean(&m1, "N_total") - mean(&m2, "N_total")).abs() < 1e-9
        );
    }

    #[test]
    fn compare_labels_arithmetic() {
        let s = samples_from_ny("R", &[(10, 5), (20, 25), (30, 10)]);
        let cmp = compare_labels(&s, "A", "B", 0.95).unwrap();
        assert!((cmp.pr_a_gt_b - 2.0 / 3.0).abs() < 1e-12);
        assert!((cmp.median_diff - 5.0).abs() < 1e-12);
        assert!(
            (cmp.pr_a_gt_b + cmp.pr_b_gt_a + cmp.pr_tie - 1.0).abs() < 1e-15,
            "probabilities must partition"
        );
    }

    #[test]
    fn identical_draws_compare_as_ties() {
        let s = samples_from_ny("R", &[(7, 7), (9, 9), (4, 4)]);
        let cmp = compare_labels(&s, "A", "B", 0.95).unwrap();
        assert_eq!(cmp.pr_a_gt_b, 0.0);
        assert_eq!(cmp.pr_tie, 1.0);
        assert_eq!(cmp.median_diff, 0.0);
        assert!(compare_labels(&s, "A", "C", 0.95).is_err());
    }

    #[test]
    fn density_mass_sums_to_one() {
        let rows: Vec<(u64, u64)> = (0..1000).map(|i| (i % 37 + 1, 1)).collect();
        let s = samples_from_ny("R", &rows);
        let table = density_export(&s, "N_A", None).unwrap();
        let total: f64 = table.mass.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn constant_draws_occupy_one_bin_without_kde() {
        let s = samples_from_ny("R", &[(5, 1), (5, 1), (5, 1)]);
        let table =
            density_export(&s, "N_A", Some(BinSpec { min: 0.0, max: 10.0, bins: 10 })).unwrap();
        assert_eq!(table.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert!(table.kde.is_none());
        assert!(table.note.as_deref().unwrap_or("").contains("KDE skipped"));
    }

    #[test]
    fn rubin_rules_hand_example() {
        // Estimates 10 +/- 1 and 14 +/- 1: between-variance 8, total 13.
        let pooled = pool_multiple_runs(PoolInput::PointEstimates(&[(10.0, 1.0), (14.0, 1.0)]))
            .unwrap();
        match pooled {
            Pooled::Rubin(r) => {
                assert!((r.estimate - 12.0).abs() < 1e-12);
                assert!((r.between - 8.0).abs() < 1e-12);
                assert!((r.total_variance - 13.0).abs() < 1e-12);
            }
            _ => panic!("expected Rubin pooling"),
        }
    }

    #[test]
    fn rubin_single_run_keeps_within_variance_only() {
        let pooled =
            pool_multiple_runs(PoolInput::PointEstimates(&[(10.0, 2.5)])).unwrap();
        match pooled {
            Pooled::Rubin(r) => {
                assert_eq!(r.estimate, 10.0);
                assert_eq!(r.total_variance, 2.5);
                assert_eq!(r.between, 0.0);
            }
            _ => panic!("expected Rubin pooling"),
        }
    }

    #[test]
    fn identical_point_runs_pool_to_the_same_estimate() {
        let pooled =
            pool_multiple_runs(PoolInput::PointEstimates(&[(10.0, 1.0), (10.0, 1.0)])).unwrap();
        match pooled {
            Pooled::Rubin(r) => {
                assert_eq!(r.estimate, 10.0);
                assert_eq!(r.between, 0.0);
                assert_eq!(r.total_variance, 1.0);
            }
            _ => panic!("expected Rubin pooling"),
        }
    }

    #[test]
    fn bayesian_pooling_concatenates_and_checks_configs() {
        let r1 = samples_from_ny("R", &[(1, 1), (2, 2)]);
        let r2 = samples_from_ny("R", &[(3, 3)]);
        match pool_multiple_runs(PoolInput::Bayesian(&[r1.clone(), r2])).unwrap() {
            Pooled::Bayesian { samples, note } => {
                assert_eq!(samples.n_draws(), 3);
                assert!(note.contains("2 completed datasets"));
            }
            _ => panic!("expected Bayesian pooling"),
        }
        let mut r3 = samples_from_ny("R", &[(3, 3)]);
        r3.meta.config_hash = "different".into();
        assert!(pool_multiple_runs(PoolInput::Bayesian(&[r1, r3])).is_err());
    }

    #[test]
    fn bimodal_draws_yield_two_kde_maxima() {
        let mut rows = Vec::new();
        for i in 0..200u64 {
            rows.push((100 + i % 7, 1));
            rows.push((200 + i % 7, 1));
        }
        let s = samples_from_ny("R", &rows);
        let table =
            density_export(&s, "N_A", Some(BinSpec { min: 80.0, max: 230.0, bins: 60 })).unwrap();
        let kde = table.kde.expect("non-degenerate");
        let dens: Vec<f64> = kde.iter().map(|&(_, d)| d).collect();
        let maxima = dens
            .windows(3)
            .filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > 1e-4)
            .count();
        assert!(maxima >= 2, "expected two modes, found {maxima}");
    }
}

//! Per-region fitting pipeline shared by the CLI and the validation studies.
//!
//! Filtering decisions and fallbacks: every label is filtered for list
//! inclusion on its own marginals; labels that keep fewer than two lists are
//! not modeled, their population size stays fixed at the observed count, and
//! they do not receive imputed missing-label records. The joint fit runs on
//! the union of the modelable labels' active lists.

use crate::data::{apply_list_inclusion, prepare_region, LabelDecision, PatternCounts};
use crate::error::{Error, Result};
use crate::gibbs::{run_chain, ChainConfig, PriorConfig};
use crate::posterior::{ChainDiagnostics, Draw, PosteriorSamples, RunMeta};

/// Result of fitting one region.
#[derive(Debug)]
pub struct RegionFit {
    /// Draws over the full label set; fallback labels appear as constant
    /// columns at their observed count.
    pub samples: PosteriorSamples,
    /// Per-label filtering decision, in label order.
    pub decisions: Vec<LabelDecision>,
    /// Records dropped by projection onto the active lists.
    pub dropped: u64,
    /// Missing-label records that could not enter any model (whole region
    /// unmodelable).
    pub unassigned_missing: u64,
}

fn constant_draws(
    labels: &[String],
    n_y: &[u64],
    retained: u64,
    thin: u64,
) -> Vec<Draw> {
    let n_total: u64 = n_y.iter().sum();
    (1..=retained)
        .map(|i| Draw {
            iteration: i * thin,
            n_total,
            n_y: n_y.to_vec(),
            rho: n_y
                .iter()
                .map(|&c| if n_total > 0 { c as f64 / n_total as f64 } else { 0.0 })
                .collect(),
            imputed: vec![0; labels.len()],
            alpha: vec![0.0; labels.len()],
        })
        .collect()
}

fn subset_prior(prior: &PriorConfig, keep: &[usize]) -> PriorConfig {
    PriorConfig {
        a: prior.a,
        b: prior.b,
        lambda_beta: keep.iter().map(|&y| prior.lambda_beta[y]).collect(),
        rho_weights: keep.iter().map(|&y| prior.rho_weights[y]).collect(),
        k_star: prior.k_star,
    }
}

/// Joint fit with missing-label imputation. The chain's stream id is used
/// as-is; callers assign one stream per region.
pub fn fit_region_extended(
    counts: &PatternCounts,
    prior: &PriorConfig,
    chain: &ChainConfig,
    min_count: u64,
) -> Result<RegionFit> {
    prior.validate(counts.labels().len())?;
    chain.validate()?;
    let labels = counts.labels().to_vec();

    let prep = match prepare_region(counts, min_count) {
        Ok(prep) => prep,
        Err(Error::Unmodelable(reason)) => {
            let n_y = counts.n_by_label().to_vec();
            let decisions = labels
                .iter()
                .enumerate()
                .map(|(y, _)| LabelDecision::Fallback {
                    observed: n_y[y],
                    reason: reason.clone(),
                })
                .collect();
            let draws = constant_draws(&labels, &n_y, chain.retained_draws(), chain.thin);
            return Ok(RegionFit {
                samples: PosteriorSamples {
                    labels,
                    draws,
                    meta: RunMeta {
                        seed: chain.seed,
                        stream_id: chain.stream_id,
                        ..RunMeta::default()
                    },
                    diagnostics: ChainDiagnostics::default(),
                },
                decisions,
                dropped: 0,
                unassigned_missing: counts.n_missing(),
            });
        }
        Err(other) => return Err(other),
    };

    let sub_prior = subset_prior(prior, &prep.modeled_labels);
    let inner = run_chain(&prep.counts, &sub_prior, chain)?;

    // Expand draws back to the full label set; fallback labels stay at their
    // observed count with zero share, imputation and alpha.
    let y_full = labels.len();
    let fallback_n: Vec<u64> = (0..y_full).map(|y| counts.n_label(y)).collect();
    let mut draws = Vec::with_capacity(inner.draws.len());
    for d in &inner.draws {
        let mut n_y = fallback_n.clone();
        let mut rho = vec![0.0; y_full];
        let mut imputed = vec![0u64; y_full];
        let mut alpha = vec![0.0; y_full];
        for (inner_y, &full_y) in prep.modeled_labels.iter().enumerate() {
            n_y[full_y] = d.n_y[inner_y];
            rho[full_y] = d.rho[inner_y];
            imputed[full_y] = d.imputed[inner_y];
            alpha[full_y] = d.alpha[inner_y];
        }
        draws.push(Draw {
            iteration: d.iteration,
            n_total: n_y.iter().sum(),
            n_y,
            rho,
            imputed,
            alpha,
        });
    }

    Ok(RegionFit {
        samples: PosteriorSamples {
            labels,
            draws,
            meta: inner.meta,
            diagnostics: inner.diagnostics,
        },
        decisions: prep.decisions,
        dropped: prep.dropped,
        unassigned_missing: 0,
    })
}

/// Independent per-label (plain) fits, draw-paired into one sample set.
/// Requires fully labeled data; chains use stream ids
/// `chain.stream_id + label_index`.
pub fn fit_region_plain(
    counts: &PatternCounts,
    prior: &PriorConfig,
    chain: &ChainConfig,
    min_count: u64,
) -> Result<RegionFit> {
    prior.validate(counts.labels().len())?;
    chain.validate()?;
    if counts.n_missing() > 0 {
        return Err(Error::Validation(format!(
            "{} record(s) have missing labels; use the label-imputing estimator or \
             relabel them explicitly",
            counts.n_missing()
        )));
    }
    let labels = counts.labels().to_vec();
    let retained = chain.retained_draws() as usize;
    let mut decisions = Vec::with_capacity(labels.len());
    let mut per_label: Vec<Option<PosteriorSamples>> = Vec::with_capacity(labels.len());
    let mut dropped = 0;
    let mut diagnostics = ChainDiagnostics::default();

    for (y, label) in labels.iter().enumerate() {
        match apply_list_inclusion(counts, label, min_count) {
            Ok(inc) => {
                let sub_prior = subset_prior(prior, &[y]);
                let sub_chain = chain.with_stream(chain.stream_id + y as u64);
                let samples = run_chain(&inc.projected, &sub_prior, &sub_chain)?;
                diagnostics.merge(&samples.diagnostics);
                dropped += inc.dropped;
                decisions.push(LabelDecision::Modeled { active: inc.active });
                per_label.push(Some(samples));
            }
            Err(Error::Unmodelable(reason)) => {
                decisions.push(LabelDecision::Fallback {
                    observed: counts.n_label(y),
                    reason,
                });
                per_label.push(None);
            }
            Err(other) => return Err(other),
        }
    }

    // Diverged chains return short draw vectors; pair up to the shortest so
    // every retained index is complete.
    let min_len = per_label
        .iter()
        .flatten()
        .map(|s| s.n_draws())
        .min()
        .unwrap_or(retained);
    let mut draws = Vec::with_capacity(min_len);
    for i in 0..min_len {
        let mut n_y = vec![0u64; labels.len()];
        let mut alpha = vec![0.0; labels.len()];
        for (y, slot) in per_label.iter().enumerate() {
            match slot {
                Some(s) => {
                    n_y[y] = s.draws[i].n_y[0];
                    alpha[y] = s.draws[i].alpha[0];
                }
                None => n_y[y] = counts.n_label(y),
            }
        }
        let n_total: u64 = n_y.iter().sum();
        draws.push(Draw {
            iteration: (i as u64 + 1) * chain.thin,
            n_total,
            n_y: n_y.clone(),
            rho: n_y
                .iter()
                .map(|&c| if n_total > 0 { c as f64 / n_total as f64 } else { 0.0 })
                .collect(),
            imputed: vec![0; labels.len()],
            alpha,
        });
    }

    Ok(RegionFit {
        samples: PosteriorSamples {
            labels,
            draws,
            meta: RunMeta {
                seed: chain.seed,
                stream_id: chain.stream_id,
                ..RunMeta::default()
            },
            diagnostics,
        },
        decisions,
        dropped,
        unassigned_missing: 0,
    })
}

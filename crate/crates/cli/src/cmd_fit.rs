//! `fit`: run the selected estimator per region (regions in parallel) and
//! write posterior sample files (or model reports) plus a run manifest.
//!
//! Stream ids are assigned deterministically from the sorted region order, so
//! outputs are byte-identical for a given seed regardless of worker count.

use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use lcmcr::data::{apply_list_inclusion, LabelDecision, PatternCounts};
use lcmcr::fit::{fit_region_extended, fit_region_plain, RegionFit};
use lcmcr::loglinear::{loglinear_ci, search_models, CellTable, Criterion};
use lcmcr::posterior::DivergenceInfo;
use lcmcr::{Error, Result};

use crate::config::{Estimator, RunConfig};
use crate::io;
use crate::cmd_ingest::load_region_counts;

#[derive(Serialize)]
pub struct RegionManifest {
    pub region: String,
    pub file: String,
    pub stream_id: u64,
    pub n_observed: u64,
    pub n_missing: u64,
    pub dropped: u64,
    pub unassigned_missing: u64,
    pub divergence: Option<DivergenceInfo>,
    pub decisions: Vec<(String, LabelDecision)>,
    pub wall_secs: f64,
}

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub estimator: String,
    pub config: RunConfig,
    pub regions: Vec<RegionManifest>,
    pub divergences: usize,
    pub wall_secs: f64,
}

fn decisions_with_labels(counts: &PatternCounts, fit: &RegionFit) -> Vec<(String, LabelDecision)> {
    counts
        .labels()
        .iter()
        .cloned()
        .zip(fit.decisions.iter().cloned())
        .collect()
}

fn fit_one_sampled(
    config: &RunConfig,
    region: &str,
    counts: &PatternCounts,
    stream_id: u64,
) -> Result<RegionManifest> {
    let started = Instant::now();
    let prior = config.prior.prior_for_region(region, counts.labels().len());
    let chain = config.chain.chain_config(config.seed, stream_id);
    let mut fit = match config.estimator {
        Estimator::LcmcrMiss => {
            fit_region_extended(counts, &prior, &chain, config.min_list_count)?
        }
        Estimator::Lcmcr => fit_region_plain(counts, &prior, &chain, config.min_list_count)?,
        Estimator::Loglinear => unreachable!("loglinear goes through fit_one_loglinear"),
    };
    fit.samples.meta.region = region.to_string();
    fit.samples.meta.prior_scheme = config.prior.name.clone();
    fit.samples.meta.config_hash = config.hash();

    let file = io::samples_file_name(region);
    let n_obs: Vec<String> = counts.n_by_label().iter().map(u64::to_string).collect();
    io::write_samples(
        &config.output.join(&file),
        &fit.samples,
        &[("n_obs", n_obs.join(","))],
    )?;
    Ok(RegionManifest {
        region: region.to_string(),
        file,
        stream_id,
        n_observed: counts.n_total(),
        n_missing: counts.n_missing(),
        dropped: fit.dropped,
        unassigned_missing: fit.unassigned_missing,
        divergence: fit.samples.diagnostics.divergence,
        decisions: decisions_with_labels(counts, &fit),
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

fn fit_one_loglinear(
    config: &RunConfig,
    region: &str,
    counts: &PatternCounts,
) -> Result<RegionManifest> {
    let started = Instant::now();
    if counts.n_missing() > 0 {
        return Err(Error::Validation(format!(
            "region {region}: {} record(s) have missing labels; the log-linear estimator needs \
             fully labeled data (use missing_as_label or the lcmcr-miss estimator)",
            counts.n_missing()
        )));
    }
    let mut out = String::new();
    writeln!(out, "# config_hash: {}", config.hash()).expect("string write");
    writeln!(out, "# region: {region}").expect("string write");
    out.push_str(
        "label,n,active_lists,terms,n_hat,deviance,df,p_value,bic,ci_lower,ci_upper,\
         ci_unbounded,boundary,note\n",
    );
    let mut decisions = Vec::new();
    for (y, label) in counts.labels().iter().enumerate() {
        match apply_list_inclusion(counts, label, config.min_list_count) {
            Ok(inc) => {
                let table = CellTable::from_pattern_counts(&inc.projected, Some(0))?;
                let outcome = search_models(&table, Criterion::Bic)?;
                let best = &outcome.models[0];
                let ci = loglinear_ci(best, &table, config.level, None)?;
                let terms: Vec<String> = best
                    .pairs
                    .iter()
                    .map(|&(a, b)| format!("{}:{}", inc.active[a] + 1, inc.active[b] + 1))
                    .collect();
                let note = if outcome.independence_only { "independence-only" } else { "" };
                writeln!(
                    out,
                    "{label},{},{},{},{:.4},{:.6},{},{},{:.4},{:.4},{:.4},{},{},{note}",
                    table.n,
                    inc.active.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(";"),
                    if terms.is_empty() { "independence".to_string() } else { terms.join(";") },
                    best.n_hat,
                    best.deviance,
                    best.df,
                    best.p_value.map(|p| format!("{p:.6}")).unwrap_or_default(),
                    best.bic,
                    ci.lower,
                    ci.upper,
                    ci.unbounded_upper,
                    best.boundary,
                )
                .expect("string write");
                decisions
                    .push((label.clone(), LabelDecision::Modeled { active: inc.active.clone() }));
            }
            Err(Error::Unmodelable(reason)) => {
                writeln!(
                    out,
                    "{label},{},,,,,,,,,,,,unmodelable: {reason}",
                    counts.n_label(y)
                )
                .expect("string write");
                decisions.push((
                    label.clone(),
                    LabelDecision::Fallback { observed: counts.n_label(y), reason },
                ));
            }
            Err(other) => return Err(other),
        }
    }
    let file = format!("loglinear_{region}.csv");
    fs::write(config.output.join(&file), out)?;
    Ok(RegionManifest {
        region: region.to_string(),
        file,
        stream_id: 0,
        n_observed: counts.n_total(),
        n_missing: 0,
        dropped: 0,
        unassigned_missing: 0,
        divergence: None,
        decisions,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

pub fn run(config: &RunConfig) -> Result<Manifest> {
    let started = Instant::now();
    let scheme_path = config
        .scheme
        .as_ref()
        .ok_or_else(|| Error::Validation("fit needs a scheme file".into()))?;
    let scheme = io::load_scheme(scheme_path)?;
    let by_region = load_region_counts(config, &scheme)?;
    if by_region.is_empty() {
        return Err(Error::Validation("no regions to fit".into()));
    }
    fs::create_dir_all(&config.output)?;

    // One stream per region for the joint estimator; plain per-label chains
    // consume a block of label-count streams per region.
    let stream_stride = match config.estimator {
        Estimator::Lcmcr => scheme.labels.len() as u64,
        _ => 1,
    };
    let jobs: Vec<(usize, (&String, &PatternCounts))> = by_region.iter().enumerate().collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
    let results: Result<Vec<RegionManifest>> = pool.install(|| {
        jobs.into_par_iter()
            .map(|(idx, (region, counts))| {
                let stream_id = idx as u64 * stream_stride;
                match config.estimator {
                    Estimator::Loglinear => fit_one_loglinear(config, region, counts),
                    _ => fit_one_sampled(config, region, counts, stream_id),
                }
            })
            .collect()
    });
    let regions = results?;

    let manifest = Manifest {
        command: "fit".to_string(),
        config_hash: config.hash(),
        estimator: config.estimator.as_str().to_string(),
        config: config.clone(),
        divergences: regions.iter().filter(|r| r.divergence.is_some()).count(),
        regions,
        wall_secs: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
    fs::write(config.output.join("manifest.json"), json)?;
    Ok(manifest)
}

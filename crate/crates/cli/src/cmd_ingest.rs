//! `ingest`: validate records, write per-region aggregated count files and a
//! validation report.

use std::collections::BTreeMap;
use std::fs;

use serde::Serialize;

use lcmcr::data::{apply_list_inclusion, PatternCounts, StratificationScheme};
use lcmcr::{Error, Result};

use crate::config::RunConfig;
use crate::io;

#[derive(Serialize)]
pub struct LabelReport {
    pub label: String,
    pub n: u64,
    pub list_marginals: Vec<u64>,
    /// Active lists (1-based) or empty when unmodelable.
    pub active_lists: Vec<usize>,
    pub unmodelable: Option<String>,
    /// Records that projection onto the active lists would drop.
    pub dropped_by_projection: u64,
}

#[derive(Serialize)]
pub struct RegionReport {
    pub region: String,
    pub n: u64,
    pub n_missing_label: u64,
    pub distinct_patterns: usize,
    pub labels: Vec<LabelReport>,
}

#[derive(Serialize)]
pub struct IngestReport {
    pub config_hash: String,
    pub n_records: u64,
    pub n_missing_label: u64,
    pub distinct_patterns: usize,
    pub possible_patterns: u64,
    pub lists: usize,
    pub regions: Vec<RegionReport>,
}

fn region_report(
    region: &str,
    counts: &PatternCounts,
    min_count: u64,
) -> Result<RegionReport> {
    let mut labels = Vec::new();
    for (y, label) in counts.labels().iter().enumerate() {
        let n = counts.n_label(y);
        let marginals = counts.list_marginals(y);
        let entry = match apply_list_inclusion(counts, label, min_count) {
            Ok(inc) => LabelReport {
                label: label.clone(),
                n,
                list_marginals: marginals,
                active_lists: inc.active.iter().map(|j| j + 1).collect(),
                unmodelable: None,
                dropped_by_projection: inc.dropped,
            },
            Err(Error::Unmodelable(reason)) => LabelReport {
                label: label.clone(),
                n,
                list_marginals: marginals,
                active_lists: Vec::new(),
                unmodelable: Some(reason),
                dropped_by_projection: 0,
            },
            Err(other) => return Err(other),
        };
        labels.push(entry);
    }
    Ok(RegionReport {
        region: region.to_string(),
        n: counts.n_total(),
        n_missing_label: counts.n_missing(),
        distinct_patterns: counts.distinct_patterns(),
        labels,
    })
}

pub fn run(config: &RunConfig) -> Result<IngestReport> {
    let data = config
        .data
        .as_ref()
        .ok_or_else(|| Error::Validation("ingest needs a data file".into()))?;
    let scheme_path = config
        .scheme
        .as_ref()
        .ok_or_else(|| Error::Validation("ingest needs a scheme file".into()))?;
    let scheme = io::load_scheme(scheme_path)?;
    let rows = io::load_records(data, &scheme, config.missing_as_label.as_deref())?;
    if rows.is_empty() {
        return Err(Error::Validation("no records in input".into()));
    }
    let lists = rows[0].inclusion.lists();
    let by_region = lcmcr::data::stratify(&rows, &scheme)?;

    fs::create_dir_all(&config.output)?;
    let hash = config.hash();
    let mut regions = Vec::new();
    let mut n_missing = 0;
    let mut all_patterns = std::collections::BTreeSet::new();
    for (region, counts) in &by_region {
        counts.check_invariants()?;
        io::write_counts(
            &config.output.join(io::counts_file_name(region)),
            region,
            counts,
            &hash,
        )?;
        n_missing += counts.n_missing();
        all_patterns.extend(counts.observed().keys().map(|(p, _)| p.to_string()));
        all_patterns.extend(counts.missing().keys().map(|p| p.to_string()));
        regions.push(region_report(region, counts, config.min_list_count)?);
    }

    let report = IngestReport {
        config_hash: hash,
        n_records: rows.len() as u64,
        n_missing_label: n_missing,
        distinct_patterns: all_patterns.len(),
        possible_patterns: (1u64 << lists) - 1,
        lists,
        regions,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
    fs::write(config.output.join("ingest_report.json"), json)?;
    Ok(report)
}

pub fn print_report(report: &IngestReport) {
    println!(
        "ingested {} records ({} with missing label); {} of {} possible capture patterns observed",
        report.n_records, report.n_missing_label, report.distinct_patterns,
        report.possible_patterns
    );
    for region in &report.regions {
        println!(
            "region {}: n={} ({} missing label), {} patterns",
            region.region, region.n, region.n_missing_label, region.distinct_patterns
        );
        for l in &region.labels {
            let decision = match &l.unmodelable {
                Some(reason) => format!("UNMODELABLE ({reason})"),
                None => format!(
                    "active lists {:?}, {} record(s) dropped by projection",
                    l.active_lists, l.dropped_by_projection
                ),
            };
            println!(
                "  {:<12} n={:<7} marginals={:?} -> {}",
                l.label, l.n, l.list_marginals, decision
            );
        }
    }
}

/// Region counts loaded back for fitting: either from ingest output or
/// directly from a record file.
pub fn load_region_counts(
    config: &RunConfig,
    scheme: &StratificationScheme,
) -> Result<BTreeMap<String, PatternCounts>> {
    if let Some(dir) = &config.counts {
        let mut out = BTreeMap::new();
        for file in io::collect_counts_files(dir)? {
            let (region, counts) = io::read_counts(&file, scheme)?;
            if !scheme.has_region(&region) {
                return Err(Error::Validation(format!(
                    "{}: region {region:?} not in scheme",
                    file.display()
                )));
            }
            out.insert(region, counts);
        }
        return Ok(out);
    }
    let data = config
        .data
        .as_ref()
        .ok_or_else(|| Error::Validation("need either a counts directory or a data file".into()))?;
    let rows = io::load_records(data, scheme, config.missing_as_label.as_deref())?;
    lcmcr::data::stratify(&rows, scheme)
}

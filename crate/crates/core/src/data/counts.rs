//! Sufficient statistics: per-stratum counts of observed capture patterns.

use std::collections::{BTreeMap, BTreeSet};

use crate::data::parse::RecordRow;
use crate::data::pattern::CapturePattern;
use crate::data::scheme::StratificationScheme;
use crate::error::{Error, Result};

/// Tabulated capture patterns for one region: counts by `(pattern, label)`
/// for rows with an observed label, and by pattern alone for rows whose label
/// is missing. The all-zero pattern never appears as a key.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternCounts {
    /// Ordered label set shared by all count maps.
    labels: Vec<String>,
    /// Number of lists the patterns currently range over.
    lists: usize,
    /// Original list indices the current lists correspond to (identity until
    /// a projection narrows the list set).
    active_lists: Vec<usize>,
    obs: BTreeMap<(CapturePattern, usize), u64>,
    mis: BTreeMap<CapturePattern, u64>,
    n_y: Vec<u64>,
    n: u64,
    /// Records dropped because projection made their pattern all-zero.
    dropped: u64,
}

impl PatternCounts {
    pub fn empty(labels: Vec<String>, lists: usize) -> Self {
        let n_labels = labels.len();
        Self {
            labels,
            lists,
            active_lists: (0..lists).collect(),
            obs: BTreeMap::new(),
            mis: BTreeMap::new(),
            n_y: vec![0; n_labels],
            n: 0,
            dropped: 0,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn lists(&self) -> usize {
        self.lists
    }

    /// Original indices of the lists the patterns currently range over.
    pub fn active_lists(&self) -> &[usize] {
        &self.active_lists
    }

    pub fn observed(&self) -> &BTreeMap<(CapturePattern, usize), u64> {
        &self.obs
    }

    pub fn missing(&self) -> &BTreeMap<CapturePattern, u64> {
        &self.mis
    }

    /// Observed count for one label.
    pub fn n_label(&self, label_idx: usize) -> u64 {
        self.n_y[label_idx]
    }

    pub fn n_by_label(&self) -> &[u64] {
        &self.n_y
    }

    /// Total missing-label records.
    pub fn n_missing(&self) -> u64 {
        self.mis.values().sum()
    }

    /// Total observed records (labeled and unlabeled).
    pub fn n_total(&self) -> u64 {
        self.n
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Distinct observed patterns, labeled and unlabeled combined.
    pub fn distinct_patterns(&self) -> usize {
        let mut set: BTreeSet<CapturePattern> = self.obs.keys().map(|(p, _)| *p).collect();
        set.extend(self.mis.keys().copied());
        set.len()
    }

    pub fn add_observed(&mut self, pattern: CapturePattern, label_idx: usize, count: u64) -> Result<()> {
        self.check_pattern(pattern)?;
        if label_idx >= self.labels.len() {
            return Err(Error::Argument(format!("label index {label_idx} out of range")));
        }
        if count == 0 {
            return Ok(());
        }
        *self.obs.entry((pattern, label_idx)).or_insert(0) += count;
        self.n_y[label_idx] += count;
        self.n += count;
        Ok(())
    }

    pub fn add_missing(&mut self, pattern: CapturePattern, count: u64) -> Result<()> {
        self.check_pattern(pattern)?;
        if count == 0 {
            return Ok(());
        }
        *self.mis.entry(pattern).or_insert(0) += count;
        self.n += count;
        Ok(())
    }

    fn check_pattern(&self, pattern: CapturePattern) -> Result<()> {
        if pattern.is_empty() {
            return Err(Error::Validation("the all-zero pattern cannot be counted".into()));
        }
        if pattern.lists() != self.lists {
            return Err(Error::Argument(format!(
                "pattern has {} lists, table has {}",
                pattern.lists(),
                self.lists
            )));
        }
        Ok(())
    }

    /// Ingestion of pre-aggregated `(pattern, label, count)` triples; an empty
    /// label marks missing-label records.
    pub fn from_triples<I>(triples: I, scheme: &StratificationScheme, lists: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (CapturePattern, Option<String>, u64)>,
    {
        let mut counts = Self::empty(scheme.labels.clone(), lists);
        for (pattern, label, count) in triples {
            match label {
                Some(l) => {
                    let idx = scheme.label_index(&l).ok_or_else(|| {
                        Error::Validation(format!("unknown label token {l:?}"))
                    })?;
                    counts.add_observed(pattern, idx, count)?;
                }
                None => counts.add_missing(pattern, count)?,
            }
        }
        Ok(counts)
    }

    /// Marginal count on each list for one label (observed-label rows only).
    pub fn list_marginals(&self, label_idx: usize) -> Vec<u64> {
        let mut out = vec![0u64; self.lists];
        for (&(pattern, y), &count) in &self.obs {
            if y != label_idx {
                continue;
            }
            for (j, slot) in out.iter_mut().enumerate() {
                if pattern.contains(j) {
                    *slot += count;
                }
            }
        }
        out
    }

    /// Marginal count on each list over all rows, labeled or not.
    pub fn list_marginals_total(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.lists];
        for (&(pattern, _), &count) in &self.obs {
            for (j, slot) in out.iter_mut().enumerate() {
                if pattern.contains(j) {
                    *slot += count;
                }
            }
        }
        for (&pattern, &count) in &self.mis {
            for (j, slot) in out.iter_mut().enumerate() {
                if pattern.contains(j) {
                    *slot += count;
                }
            }
        }
        out
    }

    /// Restriction of the table to a list subset (positions into the current
    /// list axis). Records whose pattern becomes all-zero are dropped and
    /// tallied in [`PatternCounts::dropped`]; `n`, `n_y` shrink accordingly.
    pub fn project_lists(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Argument("projection needs at least one list".into()));
        }
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != keep.len() {
            return Err(Error::Argument("projection lists must be distinct".into()));
        }
        let mut out = Self::empty(self.labels.clone(), sorted.len());
        out.active_lists = sorted.iter().map(|&j| self.active_lists[j]).collect();
        out.dropped = self.dropped;
        for (&(pattern, y), &count) in &self.obs {
            let p = pattern.project(&sorted)?;
            if p.is_empty() {
                out.dropped += count;
            } else {
                out.add_observed(p, y, count)?;
            }
        }
        for (&pattern, &count) in &self.mis {
            let p = pattern.project(&sorted)?;
            if p.is_empty() {
                out.dropped += count;
            } else {
                out.add_missing(p, count)?;
            }
        }
        Ok(out)
    }

    /// Single-label view: keeps one label's observed counts (missing-label
    /// rows are excluded). Used for plain per-stratum fits.
    pub fn restrict_to_label(&self, label_idx: usize) -> Result<Self> {
        let label = self
            .labels
            .get(label_idx)
            .ok_or_else(|| Error::Argument(format!("label index {label_idx} out of range")))?
            .clone();
        let mut out = Self::empty(vec![label], self.lists);
        out.active_lists = self.active_lists.clone();
        for (&(pattern, y), &count) in &self.obs {
            if y == label_idx {
                out.add_observed(pattern, 0, count)?;
            }
        }
        Ok(out)
    }

    /// Internal consistency: `n` reconciles with the per-label and missing
    /// totals and no all-zero key is present.
    pub fn check_invariants(&self) -> Result<()> {
        let sum_obs: u64 = self.obs.values().sum();
        let sum_y: u64 = self.n_y.iter().sum();
        let sum_mis: u64 = self.mis.values().sum();
        if sum_obs != sum_y || sum_y + sum_mis != self.n {
            return Err(Error::Internal(format!(
                "count reconciliation failed: obs {sum_obs}, n_y {sum_y}, mis {sum_mis}, n {}",
                self.n
            )));
        }
        if self.obs.keys().any(|(p, _)| p.is_empty()) || self.mis.keys().any(|p| p.is_empty()) {
            return Err(Error::Internal("all-zero pattern stored in counts".into()));
        }
        Ok(())
    }
}

/// Tabulates rows (already restricted to one region) by `(pattern, label)`
/// and by pattern for missing-label rows.
pub fn build_pattern_counts(
    rows: &[RecordRow],
    scheme: &StratificationScheme,
) -> Result<PatternCounts> {
    let lists = match rows.first() {
        Some(r) => r.inclusion.lists(),
        None => return Ok(PatternCounts::empty(scheme.labels.clone(), 1)),
    };
    let mut counts = PatternCounts::empty(scheme.labels.clone(), lists);
    for row in rows {
        if row.inclusion.lists() != lists {
            return Err(Error::Validation(format!(
                "record {:?} has {} lists, expected {lists}",
                row.record_id,
                row.inclusion.lists()
            )));
        }
        match &row.label {
            Some(l) => {
                let idx = scheme
                    .label_index(l)
                    .ok_or_else(|| Error::Validation(format!("unknown label token {l:?}")))?;
                counts.add_observed(row.inclusion, idx, 1)?;
            }
            None => counts.add_missing(row.inclusion, 1)?,
        }
    }
    Ok(counts)
}

/// Partition of rows by region code; every code must be mapped by the scheme.
pub fn stratify(
    rows: &[RecordRow],
    scheme: &StratificationScheme,
) -> Result<BTreeMap<String, PatternCounts>> {
    let mut unmapped: BTreeSet<&str> = BTreeSet::new();
    let mut by_region: BTreeMap<&str, Vec<&RecordRow>> = BTreeMap::new();
    for row in rows {
        if !scheme.has_region(&row.region_code) {
            unmapped.insert(&row.region_code);
        } else {
            by_region.entry(&row.region_code).or_default().push(row);
        }
    }
    if !unmapped.is_empty() {
        let codes: Vec<&str> = unmapped.into_iter().collect();
        return Err(Error::Validation(format!(
            "region codes not in scheme: {}",
            codes.join(", ")
        )));
    }
    let mut out = BTreeMap::new();
    for (region, group) in by_region {
        let owned: Vec<RecordRow> = group.into_iter().cloned().collect();
        out.insert(region.to_string(), build_pattern_counts(&owned, scheme)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse::RecordRow;
    use std::collections::BTreeMap as Map;

    fn scheme() -> StratificationScheme {
        let regions: Map<String, String> = [
            ("A".to_string(), "A".to_string()),
            ("B".to_string(), "B".to_string()),
        ]
        .into_iter()
        .collect();
        StratificationScheme::new(regions, vec!["EST".into(), "SLU".into()]).unwrap()
    }

    fn row(id: &str, region: &str, label: Option<&str>, pattern: &str) -> RecordRow {
        RecordRow {
            record_id: id.into(),
            region_code: region.into(),
            label: label.map(String::from),
            inclusion: CapturePattern::parse(pattern).unwrap(),
        }
    }

    #[test]
    fn tabulates_by_pattern_and_label() {
        let rows = vec![
            row("1", "A", Some("EST"), "110"),
            row("2", "A", Some("EST"), "110"),
            row("3", "A", Some("SLU"), "010"),
            row("4", "A", None, "100"),
        ];
        let c = build_pattern_counts(&rows, &scheme()).unwrap();
        let p110 = CapturePattern::parse("110").unwrap();
        let p010 = CapturePattern::parse("010").unwrap();
        let p100 = CapturePattern::parse("100").unwrap();
        assert_eq!(c.observed()[&(p110, 0)], 2);
        assert_eq!(c.observed()[&(p010, 1)], 1);
        assert_eq!(c.missing()[&p100], 1);
        assert_eq!(c.n_total(), 4);
        assert_eq!(c.n_label(0), 2);
        c.check_invariants().unwrap();
    }

    #[test]
    fn empty_rows_give_empty_counts() {
        let c = build_pattern_counts(&[], &scheme()).unwrap();
        assert_eq!(c.n_total(), 0);
        assert!(c.observed().is_empty() && c.missing().is_empty());
    }

    #[test]
    fn repeated_pattern_accumulates() {
        let rows: Vec<RecordRow> =
            (0..10).map(|i| row(&format!("r{i}"), "A", Some("EST"), "100")).collect();
        let c = build_pattern_counts(&rows, &scheme()).unwrap();
        assert_eq!(c.n_label(0), 10);
        assert_eq!(c.observed()[&(CapturePattern::parse("100").unwrap(), 0)], 10);
    }

    #[test]
    fn stratify_partitions_rows() {
        let rows = vec![
            row("1", "A", Some("EST"), "10"),
            row("2", "A", Some("SLU"), "01"),
            row("3", "B", None, "11"),
        ];
        let by_region = stratify(&rows, &scheme()).unwrap();
        assert_eq!(by_region.len(), 2);
        assert_eq!(by_region["A"].n_total(), 2);
        assert_eq!(by_region["B"].n_total(), 1);
        let total: u64 = by_region.values().map(|c| c.n_total()).sum();
        assert_eq!(total, rows.len() as u64);
    }

    #[test]
    fn stratify_names_unmapped_regions() {
        let rows = vec![row("1", "LIMA", Some("EST"), "10")];
        let err = stratify(&rows, &scheme()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("LIMA")), "{err}");
    }

    #[test]
    fn projection_drops_all_zero_and_tracks_count() {
        let rows = vec![
            row("1", "A", Some("EST"), "0010000"),
            row("2", "A", Some("EST"), "1010000"),
        ];
        let c = build_pattern_counts(&rows, &scheme()).unwrap();
        let proj = c.project_lists(&[0, 1]).unwrap();
        assert_eq!(proj.dropped(), 1);
        assert_eq!(proj.n_total(), 1);
        assert!(proj.observed().keys().all(|(p, _)| !p.is_empty()));
        assert_eq!(proj.active_lists(), &[0, 1]);
    }
}

//! List-inclusion filtering.
//!
//! A list enters a stratum's model only if it records at least `min_count`
//! individuals for that stratum and shares at least one individual with some
//! other retained list. Lists failing the overlap condition are removed
//! iteratively until a fixed point, so the returned set is idempotent under
//! re-filtering. Strata keeping fewer than two lists cannot be modeled; the
//! caller fixes their population size at the observed count.

use serde::Serialize;

use crate::data::counts::PatternCounts;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_LIST_COUNT: u64 = 4;

/// Result of filtering one stratum.
#[derive(Clone, Debug)]
pub struct ListInclusion {
    /// Original list indices that stay in the model, ascending.
    pub active: Vec<usize>,
    /// Single-label counts projected onto the active lists.
    pub projected: PatternCounts,
    /// Records dropped because their projected pattern became all-zero.
    pub dropped: u64,
}

/// Filters lists for one label of `counts` and projects that label's counts
/// onto the surviving set. Marginals and overlaps are computed from rows with
/// that observed label only.
pub fn apply_list_inclusion(
    counts: &PatternCounts,
    label: &str,
    min_count: u64,
) -> Result<ListInclusion> {
    if min_count < 1 {
        return Err(Error::Argument("min_count must be at least 1".into()));
    }
    let label_idx = counts
        .labels()
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::Argument(format!("unknown label {label:?}")))?;

    let marginals = counts.list_marginals(label_idx);
    let mut active: Vec<usize> = (0..counts.lists()).filter(|&j| marginals[j] >= min_count).collect();

    // Remove overlap-free lists until stable.
    loop {
        let mut removed = false;
        let mut keep = Vec::with_capacity(active.len());
        for &j in &active {
            let overlaps = counts.observed().iter().any(|(&(pattern, y), &count)| {
                y == label_idx
                    && count > 0
                    && pattern.contains(j)
                    && active.iter().any(|&j2| j2 != j && pattern.contains(j2))
            });
            if overlaps {
                keep.push(j);
            } else {
                removed = true;
            }
        }
        active = keep;
        if !removed {
            break;
        }
    }

    if active.len() < 2 {
        return Err(Error::Unmodelable(format!(
            "label {label:?}: {} list(s) survive filtering (min_count {min_count}); need 2",
            active.len()
        )));
    }

    let projected = counts.restrict_to_label(label_idx)?.project_lists(&active)?;
    let active_original: Vec<usize> = active.iter().map(|&j| counts.active_lists()[j]).collect();
    let dropped = projected.dropped();
    Ok(ListInclusion { active: active_original, projected, dropped })
}

/// Per-label outcome when preparing a region for a joint fit.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelDecision {
    /// The label is modeled; carries its own active list set (original indices).
    Modeled { active: Vec<usize> },
    /// Fewer than two lists survived; population size stays at the observed
    /// count and the label is excluded from the joint model.
    Fallback { observed: u64, reason: String },
}

/// A region's counts prepared for the joint (label-imputing) fit.
#[derive(Clone, Debug)]
pub struct RegionPrep {
    /// Counts over the union of the modelable labels' active lists. The label
    /// set is the modelable subset only, so missing-label records can only be
    /// imputed into modeled labels; missing-label rows are retained.
    pub counts: PatternCounts,
    /// Positions of the modeled labels within the full label set, in the
    /// order they appear in `counts.labels()`.
    pub modeled_labels: Vec<usize>,
    /// One decision per label of the full set, in label order.
    pub decisions: Vec<LabelDecision>,
    /// Records dropped by the projection onto the union list set.
    pub dropped: u64,
}

/// Runs per-label list inclusion and assembles the joint table on the union
/// of the surviving labels' active lists. Labels that cannot be modeled fall
/// back to their observed count; their rows leave the joint table and they do
/// not receive imputed missing-label records.
pub fn prepare_region(counts: &PatternCounts, min_count: u64) -> Result<RegionPrep> {
    let mut decisions = Vec::with_capacity(counts.labels().len());
    let mut union: Vec<usize> = Vec::new();
    let mut modeled_labels = Vec::new();
    for (idx, label) in counts.labels().iter().enumerate() {
        match apply_list_inclusion(counts, label, min_count) {
            Ok(inc) => {
                for &j in &inc.active {
                    if !union.contains(&j) {
                        union.push(j);
                    }
                }
                modeled_labels.push(idx);
                decisions.push(LabelDecision::Modeled { active: inc.active });
            }
            Err(Error::Unmodelable(reason)) => {
                decisions.push(LabelDecision::Fallback { observed: counts.n_label(idx), reason });
            }
            Err(other) => return Err(other),
        }
    }
    if modeled_labels.is_empty() || union.len() < 2 {
        return Err(Error::Unmodelable(
            "no label keeps two or more lists after filtering".into(),
        ));
    }
    union.sort_unstable();

    // Map union (original indices) back to positions in the current table.
    let positions: Vec<usize> = union
        .iter()
        .map(|orig| {
            counts
                .active_lists()
                .iter()
                .position(|a| a == orig)
                .expect("union lists come from this table")
        })
        .collect();

    let modeled_names: Vec<String> =
        modeled_labels.iter().map(|&y| counts.labels()[y].clone()).collect();
    let mut joint = PatternCounts::empty(modeled_names, counts.lists());
    for (&(pattern, y), &count) in counts.observed() {
        if let Some(new_y) = modeled_labels.iter().position(|&m| m == y) {
            joint.add_observed(pattern, new_y, count)?;
        }
    }
    for (&pattern, &count) in counts.missing() {
        joint.add_missing(pattern, count)?;
    }
    let projected = joint.project_lists(&positions)?;
    let dropped = projected.dropped();
    Ok(RegionPrep { counts: projected, modeled_labels, decisions, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::pattern::CapturePattern;
    use crate::data::scheme::StratificationScheme;
    use std::collections::BTreeMap;

    fn scheme(labels: &[&str]) -> StratificationScheme {
        let regions: BTreeMap<String, String> =
            [("R".to_string(), "R".to_string())].into_iter().collect();
        StratificationScheme::new(regions, labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn pat(s: &str) -> CapturePattern {
        CapturePattern::parse(s).unwrap()
    }

    #[test]
    fn threshold_rule_keeps_counted_overlapping_lists() {
        // List counts (100, 50, 3, 0, 20, 9, 0): seven lists, all pairwise
        // overlapping through a hub pattern on lists 1/2/5/6.
        let sch = scheme(&["EST"]);
        let mut c = PatternCounts::empty(sch.labels.clone(), 7);
        c.add_observed(pat("1100110"), 0, 9).unwrap();
        c.add_observed(pat("1100100"), 0, 11).unwrap();
        c.add_observed(pat("1110000"), 0, 3).unwrap();
        c.add_observed(pat("1100000"), 0, 27).unwrap();
        c.add_observed(pat("1000000"), 0, 50).unwrap();
        assert_eq!(c.list_marginals(0), vec![100, 50, 3, 0, 20, 9, 0]);

        let inc = apply_list_inclusion(&c, "EST", 4).unwrap();
        assert_eq!(inc.active, vec![0, 1, 4, 5]);
    }

    #[test]
    fn zero_overlap_is_unmodelable() {
        let sch = scheme(&["EST"]);
        let mut c = PatternCounts::empty(sch.labels.clone(), 2);
        c.add_observed(pat("10"), 0, 50).unwrap();
        c.add_observed(pat("01"), 0, 50).unwrap();
        let err = apply_list_inclusion(&c, "EST", 4).unwrap_err();
        assert!(matches!(err, Error::Unmodelable(_)), "{err}");
    }

    #[test]
    fn projection_drop_count_reported() {
        let sch = scheme(&["EST"]);
        let mut c = PatternCounts::empty(sch.labels.clone(), 3);
        c.add_observed(pat("110"), 0, 10).unwrap();
        c.add_observed(pat("100"), 0, 10).unwrap();
        c.add_observed(pat("010"), 0, 10).unwrap();
        // List 3 overlaps nothing and holds 4 records observed only there.
        c.add_observed(pat("001"), 0, 4).unwrap();
        let inc = apply_list_inclusion(&c, "EST", 4).unwrap();
        assert_eq!(inc.active, vec![0, 1]);
        assert_eq!(inc.dropped, 4);
        assert_eq!(inc.projected.n_total(), 30);
    }

    #[test]
    fn filtering_is_idempotent() {
        let sch = scheme(&["EST"]);
        let mut c = PatternCounts::empty(sch.labels.clone(), 4);
        c.add_observed(pat("1100"), 0, 6).unwrap();
        c.add_observed(pat("1010"), 0, 2).unwrap();
        c.add_observed(pat("0110"), 0, 1).unwrap();
        c.add_observed(pat("1000"), 0, 20).unwrap();
        c.add_observed(pat("0001"), 0, 9).unwrap();
        let first = apply_list_inclusion(&c, "EST", 4).unwrap();
        let again = apply_list_inclusion(&first.projected, "EST", 4).unwrap();
        assert_eq!(first.active, again.active);
        // Nothing left to drop once the active set is stable.
        assert_eq!(again.projected.n_total(), first.projected.n_total());
    }

    #[test]
    fn prepare_region_unions_modelable_labels() {
        let sch = scheme(&["EST", "SLU", "OTR"]);
        let mut c = PatternCounts::empty(sch.labels.clone(), 3);
        // EST active on lists 1-2, SLU on 2-3, OTR unmodelable (3 records).
        c.add_observed(pat("110"), 0, 10).unwrap();
        c.add_observed(pat("100"), 0, 10).unwrap();
        c.add_observed(pat("011"), 1, 10).unwrap();
        c.add_observed(pat("001"), 1, 10).unwrap();
        c.add_observed(pat("100"), 2, 3).unwrap();
        c.add_missing(pat("010"), 5).unwrap();

        let prep = prepare_region(&c, 4).unwrap();
        assert_eq!(prep.modeled_labels, vec![0, 1]);
        assert_eq!(prep.counts.active_lists(), &[0, 1, 2]);
        assert_eq!(prep.counts.labels(), &["EST".to_string(), "SLU".to_string()]);
        assert_eq!(prep.counts.n_missing(), 5);
        match &prep.decisions[2] {
            LabelDecision::Fallback { observed, .. } => assert_eq!(*observed, 3),
            other => panic!("expected fallback, got {other:?}"),
        }
    }

    #[test]
    fn prepare_region_fails_when_nothing_is_modelable() {
        let sch = scheme(&["EST"]);
        let mut c = PatternCounts::empty(sch.labels.clone(), 2);
        c.add_observed(pat("10"), 0, 50).unwrap();
        c.add_observed(pat("01"), 0, 50).unwrap();
        assert!(matches!(prepare_region(&c, 4), Err(Error::Unmodelable(_))));
    }
}

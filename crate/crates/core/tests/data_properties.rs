//! Property tests for ingestion, stratification and projection.

use std::collections::BTreeMap;

use proptest::prelude::*;

use lcmcr::data::{
    apply_list_inclusion, build_pattern_counts, stratify, CapturePattern, PatternCounts,
    RecordRow, StratificationScheme,
};

fn scheme() -> StratificationScheme {
    let regions: BTreeMap<String, String> = [
        ("R1".to_string(), "one".to_string()),
        ("R2".to_string(), "two".to_string()),
        ("R3".to_string(), "three".to_string()),
    ]
    .into_iter()
    .collect();
    StratificationScheme::new(regions, vec!["A".into(), "B".into()]).unwrap()
}

fn arb_row(lists: usize) -> impl Strategy<Value = RecordRow> {
    (1u16..(1 << lists), 0usize..3, proptest::option::of(0usize..2)).prop_map(
        move |(bits, region, label)| RecordRow {
            record_id: String::new(),
            region_code: format!("R{}", region + 1),
            label: label.map(|l| if l == 0 { "A".to_string() } else { "B".to_string() }),
            inclusion: CapturePattern::new(bits, lists).unwrap(),
        },
    )
}

proptest! {
    #[test]
    fn stratify_partitions_all_rows(rows in proptest::collection::vec(arb_row(4), 0..120)) {
        let rows: Vec<RecordRow> = rows
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| { r.record_id = format!("r{i}"); r })
            .collect();
        let by_region = stratify(&rows, &scheme()).unwrap();
        let total: u64 = by_region.values().map(|c| c.n_total()).sum();
        prop_assert_eq!(total, rows.len() as u64);
        for counts in by_region.values() {
            counts.check_invariants().unwrap();
        }
    }

    #[test]
    fn counts_reproduce_the_input_multiset(rows in proptest::collection::vec(arb_row(3), 1..80)) {
        let rows: Vec<RecordRow> = rows
            .into_iter()
            .map(|mut r| { r.region_code = "R1".into(); r })
            .collect();
        let counts = build_pattern_counts(&rows, &scheme()).unwrap();
        // Rebuild the multiset of (pattern, label) pairs and compare.
        let mut expected: BTreeMap<(String, Option<String>), u64> = BTreeMap::new();
        for r in &rows {
            *expected.entry((r.inclusion.to_string(), r.label.clone())).or_insert(0) += 1;
        }
        let mut got: BTreeMap<(String, Option<String>), u64> = BTreeMap::new();
        for (&(p, y), &c) in counts.observed() {
            *got.entry((p.to_string(), Some(counts.labels()[y].clone()))).or_insert(0) += c;
        }
        for (&p, &c) in counts.missing() {
            *got.entry((p.to_string(), None)).or_insert(0) += c;
        }
        prop_assert_eq!(expected, got);
    }

    #[test]
    fn projection_never_grows_counts_or_keeps_empty_patterns(
        rows in proptest::collection::vec(arb_row(5), 1..100),
        keep in proptest::sample::subsequence(vec![0usize, 1, 2, 3, 4], 1..=5),
    ) {
        let rows: Vec<RecordRow> = rows
            .into_iter()
            .map(|mut r| { r.region_code = "R1".into(); r })
            .collect();
        let counts = build_pattern_counts(&rows, &scheme()).unwrap();
        let projected = counts.project_lists(&keep).unwrap();
        prop_assert!(projected.n_total() <= counts.n_total());
        prop_assert_eq!(projected.n_total() + projected.dropped(), counts.n_total());
        for (p, _) in projected.observed().keys() {
            prop_assert!(!p.is_empty());
        }
        for p in projected.missing().keys() {
            prop_assert!(!p.is_empty());
        }
        projected.check_invariants().unwrap();
    }

    #[test]
    fn list_inclusion_is_idempotent(
        cells in proptest::collection::btree_map(1u16..16, 0u64..60, 1..12),
    ) {
        let mut counts = PatternCounts::empty(vec!["A".into()], 4);
        for (&bits, &c) in &cells {
            counts
                .add_observed(CapturePattern::new(bits, 4).unwrap(), 0, c)
                .unwrap();
        }
        match apply_list_inclusion(&counts, "A", 4) {
            Ok(first) => {
                let again = apply_list_inclusion(&first.projected, "A", 4).unwrap();
                prop_assert_eq!(&first.active, &again.active);
                prop_assert_eq!(first.projected.n_total(), again.projected.n_total());
            }
            Err(lcmcr::Error::Unmodelable(_)) => {}
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
        }
    }
}

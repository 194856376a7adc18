//! Record-level ingestion from delimiter-separated text.

use std::collections::BTreeSet;
use std::io::Read;

use crate::data::pattern::CapturePattern;
use crate::data::scheme::StratificationScheme;
use crate::error::{Error, Result};

/// One observed individual: an opaque id, the region it belongs to, an
/// optional stratum label (absent = missing) and its capture pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordRow {
    pub record_id: String,
    pub region_code: String,
    pub label: Option<String>,
    pub inclusion: CapturePattern,
}

/// Column mapping for the record file. The default layout is
/// `record_id, region, label, <J indicator columns>` with a header row;
/// `lists = None` infers J from the header width.
#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub delimiter: u8,
    pub id_column: usize,
    pub region_column: usize,
    pub label_column: usize,
    pub first_list_column: usize,
    pub lists: Option<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            delimiter: b',',
            id_column: 0,
            region_column: 1,
            label_column: 2,
            first_list_column: 3,
            lists: None,
        }
    }
}

/// Reads one `RecordRow` per input row, in input order.
///
/// Indicator cells must be `0` or `1`; an empty label cell is a missing
/// label; labels present must belong to the scheme's label set; record ids
/// must be unique; the all-zero pattern is rejected (such a record is
/// unobservable by construction).
pub fn parse_records<R: Read>(
    source: R,
    schema: &CsvSchema,
    scheme: &StratificationScheme,
) -> Result<Vec<RecordRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(source);

    let header_width = reader
        .headers()
        .map_err(|e| Error::Parse { row: 0, message: format!("bad header: {e}") })?
        .len();
    let lists = match schema.lists {
        Some(j) => j,
        None => header_width
            .checked_sub(schema.first_list_column)
            .filter(|&j| j > 0)
            .ok_or_else(|| Error::Parse {
                row: 0,
                message: format!(
                    "header has {header_width} columns, expected indicators from column {}",
                    schema.first_list_column + 1
                ),
            })?,
    };

    let mut rows = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let field = |col: usize, what: &str| -> Result<&str> {
            record.get(col).ok_or_else(|| Error::Parse {
                row,
                message: format!("missing {what} column {}", col + 1),
            })
        };

        let record_id = field(schema.id_column, "record id")?.trim().to_string();
        if record_id.is_empty() {
            return Err(Error::Validation(format!("row {row}: empty record id")));
        }
        if !seen_ids.insert(record_id.clone()) {
            return Err(Error::Validation(format!("row {row}: duplicate record id {record_id:?}")));
        }

        let region_code = field(schema.region_column, "region")?.trim().to_string();
        let label_raw = field(schema.label_column, "label")?.trim();
        let label = if label_raw.is_empty() {
            None
        } else {
            if scheme.label_index(label_raw).is_none() {
                return Err(Error::Validation(format!(
                    "row {row}: unknown label token {label_raw:?}"
                )));
            }
            Some(label_raw.to_string())
        };

        let mut indicators = Vec::with_capacity(lists);
        for j in 0..lists {
            let cell = field(schema.first_list_column + j, "indicator")?.trim();
            match cell {
                "0" => indicators.push(false),
                "1" => indicators.push(true),
                other => {
                    return Err(Error::Parse {
                        row,
                        message: format!("indicator for list {} must be 0/1, got {other:?}", j + 1),
                    })
                }
            }
        }
        let inclusion = CapturePattern::from_indicators(&indicators)?;
        if inclusion.is_empty() {
            return Err(Error::Validation(format!(
                "row {row}: record {record_id:?} has the all-zero capture pattern"
            )));
        }

        rows.push(RecordRow { record_id, region_code, label, inclusion });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn scheme() -> StratificationScheme {
        let regions: BTreeMap<String, String> = [
            ("AYA_CENT".to_string(), "Central".to_string()),
            ("SELVA".to_string(), "Amazon".to_string()),
            ("X".to_string(), "X".to_string()),
        ]
        .into_iter()
        .collect();
        StratificationScheme::new(regions, vec!["EST".into(), "SLU".into()]).unwrap()
    }

    #[test]
    fn maps_fields_directly() {
        let data = "id,region,label,l1,l2,l3,l4,l5,l6,l7\n\
                    r1,AYA_CENT,EST,1,0,0,0,0,0,0\n";
        let rows = parse_records(data.as_bytes(), &CsvSchema::default(), &scheme()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].label.as_deref(), Some("EST"));
        assert_eq!(rows[0].inclusion.to_string(), "1000000");
    }

    #[test]
    fn empty_label_is_missing() {
        let data = "id,region,label,l1,l2,l3,l4,l5,l6,l7\n\
                    r2,SELVA,,0,1,1,0,0,0,0\n";
        let rows = parse_records(data.as_bytes(), &CsvSchema::default(), &scheme()).unwrap();
        assert_eq!(rows[0].label, None);
        assert_eq!(rows[0].inclusion.to_string(), "0110000");
    }

    #[test]
    fn all_zero_pattern_is_rejected() {
        let data = "id,region,label,l1,l2,l3,l4,l5,l6,l7\n\
                    r3,X,EST,0,0,0,0,0,0,0\n";
        let err = parse_records(data.as_bytes(), &CsvSchema::default(), &scheme()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("all-zero")), "{err}");
    }

    #[test]
    fn malformed_indicator_names_row() {
        let data = "id,region,label,l1,l2\nr1,X,EST,1,2\n";
        let err = parse_records(data.as_bytes(), &CsvSchema::default(), &scheme()).unwrap_err();
        match err {
            Error::Parse { row, message } => {
                assert_eq!(row, 1);
                assert!(message.contains("0/1"), "{message}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn unknown_label_and_duplicate_id_are_validation_errors() {
        let bad_label = "id,region,label,l1,l2\nr1,X,NOPE,1,0\n";
        assert!(matches!(
            parse_records(bad_label.as_bytes(), &CsvSchema::default(), &scheme()),
            Err(Error::Validation(_))
        ));
        let dup = "id,region,label,l1,l2\nr1,X,EST,1,0\nr1,X,EST,0,1\n";
        assert!(matches!(
            parse_records(dup.as_bytes(), &CsvSchema::default(), &scheme()),
            Err(Error::Validation(ref m)) if m.contains("duplicate")
        ));
    }
}

//! Record ingestion, capture-pattern encoding, stratification and
//! sufficient-statistic construction.
//!
//! All functions here are pure over immutable inputs and safe to call from
//! concurrent workers.

mod counts;
mod filter;
mod parse;
mod pattern;
mod scheme;

pub use counts::{build_pattern_counts, stratify, PatternCounts};
pub use filter::{
    apply_list_inclusion, prepare_region, LabelDecision, ListInclusion, RegionPrep,
    DEFAULT_MIN_LIST_COUNT,
};
pub use parse::{parse_records, CsvSchema, RecordRow};
pub use pattern::{CapturePattern, MAX_LISTS};
pub use scheme::StratificationScheme;

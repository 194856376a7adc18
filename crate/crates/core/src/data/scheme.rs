//! Stratification scheme: region codes and the ordered stratum label set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User-supplied stratification: a map from region code to region name plus
/// the ordered finite set of stratum labels. Missingness is encoded by an
/// absent label, so the label set itself must not contain an empty token.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratificationScheme {
    pub regions: BTreeMap<String, String>,
    pub labels: Vec<String>,
}

impl StratificationScheme {
    pub fn new(regions: BTreeMap<String, String>, labels: Vec<String>) -> Result<Self> {
        let scheme = Self { regions, labels };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::Validation("label set must be non-empty".into()));
        }
        for label in &self.labels {
            if label.trim().is_empty() {
                return Err(Error::Validation(
                    "label set must not contain an empty (reserved missing) token".into(),
                ));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for label in &self.labels {
            if !seen.insert(label) {
                return Err(Error::Validation(format!("duplicate label {label:?}")));
            }
        }
        if self.regions.is_empty() {
            return Err(Error::Validation("region map must be non-empty".into()));
        }
        Ok(())
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn has_region(&self, code: &str) -> bool {
        self.regions.contains_key(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regions() -> BTreeMap<String, String> {
        [("R1".to_string(), "Region one".to_string())].into_iter().collect()
    }

    #[test]
    fn accepts_simple_scheme() {
        let s = StratificationScheme::new(regions(), vec!["EST".into(), "SLU".into()]).unwrap();
        assert_eq!(s.label_index("SLU"), Some(1));
        assert_eq!(s.label_index("OTR"), None);
    }

    #[test]
    fn rejects_empty_or_duplicate_labels() {
        assert!(StratificationScheme::new(regions(), vec![]).is_err());
        assert!(StratificationScheme::new(regions(), vec!["".into()]).is_err());
        assert!(StratificationScheme::new(regions(), vec!["A".into(), "A".into()]).is_err());
    }
}

//! Capture patterns: fixed-length binary inclusion vectors over the lists.

use std::fmt;

use crate::error::{Error, Result};

/// Hard cap on the number of lists; the pattern space 2^J must stay small
/// enough for dense count maps.
pub const MAX_LISTS: usize = 16;

/// Presence/absence of one individual across `J` lists.
///
/// Bit `j` (0-based) records membership on list `j`. The canonical textual
/// form is a `J`-character 0/1 string with list 1 leftmost, so `"1000000"`
/// with seven lists means "list 1 only". The all-zero pattern denotes an
/// unobservable individual and never appears in observed data.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CapturePattern {
    bits: u16,
    lists: u8,
}

impl CapturePattern {
    pub fn new(bits: u16, lists: usize) -> Result<Self> {
        if lists == 0 || lists > MAX_LISTS {
            return Err(Error::Argument(format!(
                "number of lists must be in 1..={MAX_LISTS}, got {lists}"
            )));
        }
        if lists < MAX_LISTS && bits >> lists != 0 {
            return Err(Error::Argument(format!(
                "pattern {bits:#b} has bits beyond list {lists}"
            )));
        }
        Ok(Self { bits, lists: lists as u8 })
    }

    /// Parses the canonical 0/1 string form (list 1 leftmost).
    pub fn parse(text: &str) -> Result<Self> {
        let lists = text.len();
        if lists == 0 || lists > MAX_LISTS {
            return Err(Error::Argument(format!(
                "pattern string length must be in 1..={MAX_LISTS}, got {lists}"
            )));
        }
        let mut bits = 0u16;
        for (j, c) in text.chars().enumerate() {
            match c {
                '1' => bits |= 1 << j,
                '0' => {}
                other => {
                    return Err(Error::Argument(format!(
                        "pattern must contain only 0/1, got {other:?}"
                    )))
                }
            }
        }
        Ok(Self { bits, lists: lists as u8 })
    }

    pub fn from_indicators(indicators: &[bool]) -> Result<Self> {
        let mut bits = 0u16;
        for (j, &on) in indicators.iter().enumerate() {
            if on {
                bits |= 1 << j;
            }
        }
        Self::new(bits, indicators.len())
    }

    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn lists(&self) -> usize {
        self.lists as usize
    }

    /// True when the individual appears on no list.
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// Membership on list `j` (0-based).
    pub fn contains(&self, list: usize) -> bool {
        list < self.lists() && self.bits & (1 << list) != 0
    }

    /// Number of lists the individual appears on.
    pub fn count(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Restriction to the given (0-based, strictly increasing) list subset.
    /// The result may be all-zero; callers decide whether to drop it.
    pub fn project(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Argument("projection needs at least one list".into()));
        }
        let mut bits = 0u16;
        for (new_j, &old_j) in keep.iter().enumerate() {
            if old_j >= self.lists() {
                return Err(Error::Argument(format!(
                    "projection index {old_j} out of range for {} lists",
                    self.lists()
                )));
            }
            if self.contains(old_j) {
                bits |= 1 << new_j;
            }
        }
        Self::new(bits, keep.len())
    }
}

impl fmt::Display for CapturePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.lists() {
            f.write_str(if self.contains(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for CapturePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CapturePattern({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let p = CapturePattern::parse("1000000").unwrap();
        assert_eq!(p.lists(), 7);
        assert!(p.contains(0));
        assert!(!p.contains(1));
        assert_eq!(p.to_string(), "1000000");

        let q = CapturePattern::parse("0110000").unwrap();
        assert!(q.contains(1) && q.contains(2));
        assert_eq!(q.count(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CapturePattern::parse("").is_err());
        assert!(CapturePattern::parse("01x0").is_err());
        assert!(CapturePattern::parse(&"0".repeat(17)).is_err());
        assert!(CapturePattern::new(0b100, 2).is_err());
    }

    #[test]
    fn projection_keeps_selected_lists_in_order() {
        let p = CapturePattern::parse("0010000").unwrap();
        let proj = p.project(&[0, 1]).unwrap();
        assert!(proj.is_empty());
        let proj2 = p.project(&[2, 4]).unwrap();
        assert_eq!(proj2.to_string(), "10");
    }
}

//! Synthetic population generation from the complete-data model.

use serde::{Deserialize, Serialize};

use crate::data::{CapturePattern, RecordRow};
use crate::error::{Error, Result};
use crate::kernels::RngStream;

/// Label-deletion mechanism. Deletion probability may depend on the capture
/// pattern but never on the label itself, which is exactly the
/// missing-at-random assumption the model relies on.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarMechanism {
    /// Pattern-independent deletion with a constant rate.
    Constant { rate: f64 },
    /// Deletion rate chosen by how many lists the record appears on:
    /// `rates[min(count - 1, len - 1)]`.
    PerListCount { rates: Vec<f64> },
}

impl MarMechanism {
    pub fn deletion_prob(&self, pattern: CapturePattern) -> f64 {
        match self {
            MarMechanism::Constant { rate } => *rate,
            MarMechanism::PerListCount { rates } => {
                let idx = (pattern.count() as usize).saturating_sub(1);
                rates[idx.min(rates.len() - 1)]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |r: &f64| (0.0..=1.0).contains(r);
        let valid = match self {
            MarMechanism::Constant { rate } => ok(rate),
            MarMechanism::PerListCount { rates } => !rates.is_empty() && rates.iter().all(ok),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Argument("MAR deletion rates must lie in [0, 1]".into()))
        }
    }
}

/// Complete-data generative specification: true population size, stratum
/// shares, per-stratum class weights and list-inclusion probabilities, and
/// the label-deletion mechanism.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_true: u64,
    pub labels: Vec<String>,
    /// True stratum shares, one per label.
    pub rho: Vec<f64>,
    /// True class weights per label; class counts may differ across labels.
    pub pi: Vec<Vec<f64>>,
    /// `lambda[y][j][k]`: inclusion probability on list `j` for class `k` of
    /// label `y`. All labels share the same number of lists.
    pub lambda: Vec<Vec<Vec<f64>>>,
    pub mar: MarMechanism,
    #[serde(default = "default_region")]
    pub region: String,
}

fn default_region() -> String {
    "SIM".to_string()
}

impl SyntheticSpec {
    pub fn lists(&self) -> usize {
        self.lambda.first().map(|l| l.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_true == 0 {
            return Err(Error::Argument("n_true must be positive".into()));
        }
        let y = self.labels.len();
        if y == 0 || self.rho.len() != y || self.pi.len() != y || self.lambda.len() != y {
            return Err(Error::Argument(
                "labels, rho, pi and lambda must have one entry per label".into(),
            ));
        }
        check_probability_vector("rho", &self.rho)?;
        let lists = self.lists();
        if lists == 0 || lists > crate::data::MAX_LISTS {
            return Err(Error::Argument(format!("need 1..=16 lists, got {lists}")));
        }
        for (label, (pi_y, lambda_y)) in self.labels.iter().zip(self.pi.iter().zip(&self.lambda)) {
            check_probability_vector(&format!("pi[{label}]"), pi_y)?;
            if lambda_y.len() != lists {
                return Err(Error::Argument(format!(
                    "lambda[{label}] must cover {lists} lists"
                )));
            }
            for (j, row) in lambda_y.iter().enumerate() {
                if row.len() != pi_y.len() {
                    return Err(Error::Argument(format!(
                        "lambda[{label}][list {}] must have {} classes",
                        j + 1,
                        pi_y.len()
                    )));
                }
                if row.iter().any(|l| !(0.0..=1.0).contains(l)) {
                    return Err(Error::Argument(format!(
                        "lambda[{label}][list {}] entries must lie in [0, 1]",
                        j + 1
                    )));
                }
            }
        }
        self.mar.validate()
    }
}

fn check_probability_vector(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Argument(format!("{name} must be non-negative and non-empty")));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!("{name} must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Per-label ground truth recorded at generation time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub labels: Vec<String>,
    /// True population size per label (observed or not).
    pub n_true_y: Vec<u64>,
    /// Individuals with the all-zero pattern per label.
    pub unobserved_y: Vec<u64>,
    /// Observed individuals per label (before label deletion).
    pub observed_y: Vec<u64>,
    /// Observed records whose label was deleted.
    pub deleted_labels: u64,
}

impl SyntheticTruth {
    pub fn n_observed(&self) -> u64 {
        self.observed_y.iter().sum()
    }
}

/// Draws a population of `spec.n_true` individuals, discards the unobserved
/// (all-zero) ones into the truth record, and deletes labels of retained
/// records according to the MAR mechanism.
pub fn generate_population(
    spec: &SyntheticSpec,
    rng: &mut RngStream,
) -> Result<(Vec<RecordRow>, SyntheticTruth)> {
    spec.validate()?;
    let y_count = spec.labels.len();
    let lists = spec.lists();
    let mut records = Vec::new();
    let mut n_true_y = vec![0u64; y_count];
    let mut unobserved_y = vec![0u64; y_count];
    let mut observed_y = vec![0u64; y_count];
    let mut deleted = 0u64;

    for i in 0..spec.n_true {
        let y = rng.sample_categorical(&spec.rho)?;
        n_true_y[y] += 1;
        let k = rng.sample_categorical(&spec.pi[y])?;
        let mut bits = 0u16;
        for j in 0..lists {
            if rng.sample_bernoulli(spec.lambda[y][j][k]) {
                bits |= 1 << j;
            }
        }
        if bits == 0 {
            unobserved_y[y] += 1;
            continue;
        }
        observed_y[y] += 1;
        let pattern = CapturePattern::new(bits, lists)?;
        let label = if rng.sample_bernoulli(spec.mar.deletion_prob(pattern)) {
            deleted += 1;
            None
        } else {
            Some(spec.labels[y].clone())
        };
        records.push(RecordRow {
            record_id: format!("sim{:07}", i + 1),
            region_code: spec.region.clone(),
            label,
            inclusion: pattern,
        });
    }

    let truth = SyntheticTruth {
        labels: spec.labels.clone(),
        n_true_y,
        unobserved_y,
        observed_y,
        deleted_labels: deleted,
    };
    Ok((records, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_list_spec(lambda: f64, mar_rate: f64) -> SyntheticSpec {
        SyntheticSpec {
            n_true: 10_000,
            labels: vec!["ALL".into()],
            rho: vec![1.0],
            pi: vec![vec![1.0]],
            lambda: vec![vec![vec![lambda], vec![lambda]]],
            mar: MarMechanism::Constant { rate: mar_rate },
            region: "SIM".into(),
        }
    }

    #[test]
    fn full_capture_observes_everyone() {
        let spec = two_list_spec(1.0, 0.0);
        let mut rng = RngStream::new(1, 0);
        let (records, truth) = generate_population(&spec, &mut rng).unwrap();
        assert_eq!(records.len(), 10_000);
        assert_eq!(truth.unobserved_y[0], 0);
        assert!(records.iter().all(|r| r.inclusion.to_string() == "11"));
    }

    #[test]
    fn zero_capture_observes_no_one() {
        let spec = two_list_spec(0.0, 0.0);
        let mut rng = RngStream::new(2, 0);
        let (records, truth) = generate_population(&spec, &mut rng).unwrap();
        assert!(records.is_empty());
        assert_eq!(truth.unobserved_y[0], 10_000);
    }

    #[test]
    fn observed_count_matches_capture_probability() {
        // Two lists at 0.5: capture probability 1 - 0.25 = 0.75.
        let spec = two_list_spec(0.5, 0.0);
        let mut rng = RngStream::new(3, 0);
        let (records, _) = generate_population(&spec, &mut rng).unwrap();
        let n = records.len() as f64;
        let se = (10_000.0_f64 * 0.75 * 0.25).sqrt();
        assert!((n - 7_500.0).abs() <= 3.0 * se, "n = {n}");
    }

    #[test]
    fn truth_identity_holds_per_label() {
        let spec = SyntheticSpec {
            n_true: 5_000,
            labels: vec!["A".into(), "B".into()],
            rho: vec![0.3, 0.7],
            pi: vec![vec![0.5, 0.5], vec![1.0]],
            lambda: vec![
                vec![vec![0.4, 0.8], vec![0.2, 0.6], vec![0.5, 0.1]],
                vec![vec![0.3], vec![0.3], vec![0.3]],
            ],
            mar: MarMechanism::Constant { rate: 0.25 },
            region: "SIM".into(),
        };
        let mut rng = RngStream::new(4, 0);
        let (records, truth) = generate_population(&spec, &mut rng).unwrap();
        for y in 0..2 {
            assert_eq!(truth.n_true_y[y], truth.observed_y[y] + truth.unobserved_y[y]);
        }
        assert_eq!(truth.n_true_y.iter().sum::<u64>(), 5_000);
        assert_eq!(records.len() as u64, truth.n_observed());
        let missing = records.iter().filter(|r| r.label.is_none()).count() as u64;
        assert_eq!(missing, truth.deleted_labels);
    }

    #[test]
    fn mar_rate_is_pattern_wise_consistent() {
        // Deletion must hit every pattern at the same rate.
        let spec = two_list_spec(0.5, 0.2);
        let mut rng = RngStream::new(5, 0);
        let (records, _) = generate_population(&spec, &mut rng).unwrap();
        for pattern in ["10", "01", "11"] {
            let of_pattern: Vec<_> =
                records.iter().filter(|r| r.inclusion.to_string() == pattern).collect();
            let total = of_pattern.len() as f64;
            let deleted = of_pattern.iter().filter(|r| r.label.is_none()).count() as f64;
            let se = (total * 0.2 * 0.8).sqrt();
            assert!(
                (deleted - 0.2 * total).abs() <= 3.0 * se,
                "pattern {pattern}: {deleted}/{total}"
            );
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut spec = two_list_spec(0.5, 0.2);
        spec.rho = vec![0.5];
        assert!(spec.validate().is_err());
        let mut spec = two_list_spec(0.5, 0.2);
        spec.lambda[0][0][0] = 1.5;
        assert!(spec.validate().is_err());
        let mut spec = two_list_spec(0.5, 1.2);
        spec.mar = MarMechanism::Constant { rate: 1.2 };
        assert!(spec.validate().is_err());
    }
}

//! Property tests for the log-linear estimator.

use proptest::prelude::*;

use lcmcr::loglinear::{fit_loglinear, petersen_estimate, CellTable};

proptest! {
    // Two-list independence is algebraically the Petersen estimator whenever
    // the overlap cell is occupied (all three cells occupied keeps the main
    // effects identifiable).
    #[test]
    fn independence_equals_petersen(n11 in 1u64..500, n10 in 1u64..500, n01 in 1u64..500) {
        let table = CellTable::new(
            2,
            &[(0b01, n10 as f64), (0b10, n01 as f64), (0b11, n11 as f64)],
        )
        .unwrap();
        let model = fit_loglinear(&table, &[]).unwrap();
        let n1 = (n10 + n11) as f64;
        let n2 = (n01 + n11) as f64;
        let petersen = petersen_estimate(n1, n2, n11 as f64);
        prop_assert!(
            (model.n_hat - petersen).abs() <= 1e-8 * petersen.max(1.0),
            "n_hat {} vs petersen {}",
            model.n_hat,
            petersen
        );
        prop_assert!(model.n_hat >= table.n - 1e-9);
    }

    // The IPF fixed point matches every included margin and never estimates
    // below the observed count.
    #[test]
    fn margins_match_and_estimate_dominates_observed(
        counts in proptest::collection::vec(1u64..200, 7),
        with_pair in any::<bool>(),
    ) {
        let cells: Vec<(u16, f64)> =
            (1..8u16).map(|bits| (bits, counts[(bits - 1) as usize] as f64)).collect();
        let table = CellTable::new(3, &cells).unwrap();
        let pairs: &[(usize, usize)] = if with_pair { &[(0, 1)] } else { &[] };
        let model = fit_loglinear(&table, pairs).unwrap();
        prop_assert!(!model.boundary);
        // Main-effect margins.
        for j in 0..3 {
            let (mut fit, mut obs) = (0.0, 0.0);
            for c in 1..8usize {
                if c & (1 << j) != 0 {
                    fit += model.fitted[c];
                    obs += table.counts[c];
                }
            }
            prop_assert!((fit - obs).abs() <= 1e-8 * obs, "list {j}: {fit} vs {obs}");
        }
        if with_pair {
            let (mut fit, mut obs) = (0.0, 0.0);
            for c in 1..8usize {
                if c & 0b011 == 0b011 {
                    fit += model.fitted[c];
                    obs += table.counts[c];
                }
            }
            prop_assert!((fit - obs).abs() <= 1e-8 * obs, "pair margin: {fit} vs {obs}");
        }
        prop_assert!(model.n_hat >= table.n - 1e-9);
    }
}

//! Accuracy metrics, convergence diagnostics and the replicate test-set study.

mod diagnostics;
mod study;

pub use diagnostics::{ks_statistic, ks_two_sample, posterior_distance, spearman, KsResult};
pub use study::{
    pool_indices, run_study, AccuracyCell, AccuracyReport, StudyConfig,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewValues(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Standardized root sum of squared errors of accepted values around the truth:
/// `(1/r) * sqrt(sum_j (a_j - truth)^2 / Var(a))`.
pub fn rsse(accepted: &[f64], truth: f64) -> Result<f64> {
    if accepted.iter().chain(std::iter::once(&truth)).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("accepted values"));
    }
    let var = sample_variance(accepted)?;
    if var <= 0.0 || accepted.iter().all(|&a| a == accepted[0]) {
        return Err(Error::ZeroVariance);
    }
    let r = accepted.len() as f64;
    let sse: f64 = accepted.iter().map(|a| (a - truth).powi(2)).sum();
    Ok((sse / var).sqrt() / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseSummary {
    pub rmse: f64,
    pub n_contributing: usize,
    pub n_excluded: usize,
}

/// Mean of the defined RSSE values; `None` entries are counted as excluded.
pub fn rmse(rsse_values: &[Option<f64>]) -> Result<RmseSummary> {
    let defined: Vec<f64> = rsse_values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::NothingToAverage);
    }
    Ok(RmseSummary {
        rmse: defined.iter().sum::<f64>() / defined.len() as f64,
        n_contributing: defined.len(),
        n_excluded: rsse_values.len() - defined.len(),
    })
}

/// `100 * |rmse_method - rmse_abc| / rmse_abc`.
pub fn percent_excess(rmse_method: f64, rmse_abc: f64) -> Result<f64> {
    if !(rmse_abc.is_finite() && rmse_abc > 0.0) {
        return Err(Error::ZeroBaseline(rmse_abc));
    }
    if !rmse_method.is_finite() {
        return Err(Error::NonFinite("rmse"));
    }
    Ok(100.0 * (rmse_method - rmse_abc).abs() / rmse_abc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rsse_two_point_example() {
        assert!((rsse(&[1.0, -1.0], 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rsse_hand_computed() {
        // mean 2, var 1, sse around 0 = 1 + 4 + 9 = 14
        let v = rsse(&[1.0, 2.0, 3.0], 0.0).unwrap();
        assert!((v - 14f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rsse_errors() {
        assert!(matches!(rsse(&[1.0], 0.0), Err(Error::TooFewValues(1))));
        assert!(matches!(rsse(&[], 0.0), Err(Error::TooFewValues(0))));
        assert!(matches!(rsse(&[0.1; 5], 0.0), Err(Error::ZeroVariance)));
        assert!(rsse(&[0.0, f64::NAN], 0.0).is_err());
    }

    #[test]
    fn rmse_examples() {
        let s = rmse(&[Some(0.5), Some(1.5)]).unwrap();
        assert_eq!((s.rmse, s.n_contributing, s.n_excluded), (1.0, 2, 0));
        assert_eq!(rmse(&[Some(0.7)]).unwrap().rmse, 0.7);
        let s = rmse(&[Some(1.0), None, Some(2.0)]).unwrap();
        assert_eq!((s.rmse, s.n_contributing, s.n_excluded), (1.5, 2, 1));
        assert!(matches!(rmse(&[None, None]), Err(Error::NothingToAverage)));
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn percent_excess_examples() {
        assert_eq!(percent_excess(5.290, 5.290).unwrap(), 0.0);
        let a = percent_excess(6.021, 5.290).unwrap();
        assert!((a - 13.8185).abs() < 1e-3, "{a}");
        assert_eq!(format!("{a:.2}"), "13.82");
        let b = percent_excess(5.640, 5.290).unwrap();
        assert!((b - 6.616).abs() < 1e-3, "{b}");
        assert!(matches!(percent_excess(1.0, 0.0), Err(Error::ZeroBaseline(_))));
    }

    proptest! {
        #[test]
        fn rsse_scale_invariant(
            values in prop::collection::vec(-10.0f64..10.0, 2..30),
            truth in -10.0f64..10.0,
            c in 0.01f64..100.0,
        ) {
            prop_assume!(sample_variance(&values).unwrap() > 1e-6);
            let base = rsse(&values, truth).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            let other = rsse(&scaled, truth * c).unwrap();
            prop_assert!((base - other).abs() <= 1e-9 * base.max(1.0));
        }

        #[test]
        fn rmse_permutation_invariant(
            values in prop::collection::vec(prop::option::of(0.0f64..5.0), 1..20),
            seed in any::<u64>(),
        ) {
            prop_assume!(values.iter().any(|v| v.is_some()));
            let mut shuffled = values.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut crate::rng::SeedSpec::new(seed).rng());
            let a = rmse(&values).unwrap();
            let b = rmse(&shuffled).unwrap();
            prop_assert!((a.rmse - b.rmse).abs() < 1e-12);
            prop_assert_eq!(a.n_contributing, b.n_contributing);
        }

        #[test]
        fn percent_excess_symmetric_difference(x in 0.01f64..10.0, d in 0.0f64..5.0) {
            prop_assert_eq!(percent_excess(x, x).unwrap(), 0.0);
            let up = percent_excess(x + d, x).unwrap();
            let down = percent_excess(x - d, x).unwrap();
            prop_assert!((up - down).abs() < 1e-9 * up.max(1.0));
            prop_assert!(up >= 0.0);
        }
    }
}

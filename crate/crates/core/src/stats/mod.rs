//! Distribution of fluctuation values: histogram with a moment-fitted
//! Gaussian, skewness, and the normality and two-sample tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Normal};

use crate::error::{Error, Result};

pub mod ks;
pub mod lilliefors;
pub mod shapiro_wilk;

pub use ks::{ks_two_sample, KsMethod};
pub use lilliefors::{lilliefors_statistic, lilliefors_test, LillieforsTable};
pub use shapiro_wilk::{shapiro_wilk, shapiro_wilk_test};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    Lilliefors,
    ShapiroWilk,
    KsTwoSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: TestName,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    /// Critical value of the statistic at `alpha`, when the decision is
    /// made against a tabulated critical value.
    pub critical_value: Option<f64>,
    pub reject: bool,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("significance level {alpha} outside (0, 1)")))
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Adjusted Fisher-Pearson skewness `G1`. For fewer than three values the
/// unadjusted moment ratio is returned.
pub fn skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = mean(x);
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    let g1 = m3 / m2.powf(1.5);
    if x.len() < 3 {
        g1
    } else {
        g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
    }
}

/// Linear-interpolated quantile of sorted data, `q` in `[0, 1]`.
pub(crate) fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Freedman-Diaconis bin count, at least 2. Falls back to Sturges when the
/// interquartile range vanishes.
pub fn freedman_diaconis_bins(values: &[f64]) -> usize {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len().max(1) as f64;
    let iqr = sorted_quantile(&s, 0.75) - sorted_quantile(&s, 0.25);
    let range = s[s.len() - 1] - s[0];
    let bins = if iqr > 0.0 && range > 0.0 {
        (range / (2.0 * iqr * n.powf(-1.0 / 3.0))).ceil() as usize
    } else {
        (n.log2().ceil() as usize) + 1
    };
    bins.max(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramFit {
    /// `counts.len() + 1` equal-width edges spanning `[min, max]`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub gauss_mu: f64,
    pub gauss_sigma: f64,
    pub skewness: f64,
}

impl HistogramFit {
    pub fn sample_size(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fitted Gaussian scaled to histogram counts at `x`.
    pub fn expected_count_density(&self, x: f64) -> f64 {
        let width = self.bin_edges[1] - self.bin_edges[0];
        let normal = Normal::new(self.gauss_mu, self.gauss_sigma).expect("sigma > 0");
        normal.pdf(x) * self.sample_size() as f64 * width
    }
}

pub fn histogram_gauss_fit(values: &[f64], bin_count: usize) -> Result<HistogramFit> {
    if values.is_empty() {
        return Err(Error::SampleTooSmall { needed: 1, got: 0 });
    }
    if bin_count < 2 {
        return Err(Error::Config(format!("bin count {bin_count} < 2")));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 2 || hi == lo {
        return Err(Error::DegenerateSample);
    }
    let sigma = sample_variance(values).sqrt();
    if sigma <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    let width = (hi - lo) / bin_count as f64;
    let bin_edges: Vec<f64> = (0..=bin_count)
        .map(|k| if k == bin_count { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0u64; bin_count];
    for &v in values {
        let k = (((v - lo) / width).floor() as usize).min(bin_count - 1);
        counts[k] += 1;
    }
    Ok(HistogramFit {
        bin_edges,
        counts,
        gauss_mu: mean(values),
        gauss_sigma: sigma,
        skewness: skewness(values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn symmetric_pair() {
        let h = histogram_gauss_fit(&[-1.0, 1.0], 2).unwrap();
        assert_eq!(h.gauss_mu, 0.0);
        assert_eq!(h.skewness, 0.0);
        assert_eq!(h.counts, vec![1, 1]);
    }

    #[test]
    fn right_outlier_skews_positive() {
        let h = histogram_gauss_fit(&[0.0, 0.0, 0.0, 10.0], 4).unwrap();
        assert!(h.skewness > 0.0);
        // G1 = g1 * sqrt(12) / 2 with g1 = 1.1547 for this sample.
        assert_abs_diff_eq!(h.skewness, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate() {
        assert!(matches!(
            histogram_gauss_fit(&[3.0; 5], 4),
            Err(Error::DegenerateSample)
        ));
        assert!(histogram_gauss_fit(&[], 4).is_err());
        assert!(histogram_gauss_fit(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn fd_bins() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        // IQR 49.5, width 2 * 49.5 / 100^(1/3) = 21.33, range 99 -> 4.64 -> 5 bins
        assert_eq!(freedman_diaconis_bins(&v), 5);
        assert_eq!(freedman_diaconis_bins(&[1.0, 1.0, 1.0, 1.0]), 3);
    }

    proptest! {
        #[test]
        fn counts_sum_to_n(v in prop::collection::vec(-1e3f64..1e3, 2..300), bins in 2usize..40) {
            prop_assume!(v.iter().any(|&x| x != v[0]));
            let h = histogram_gauss_fit(&v, bins).unwrap();
            prop_assert_eq!(h.sample_size(), v.len() as u64);
            prop_assert_eq!(h.bin_edges.len(), bins + 1);
            prop_assert!(h.gauss_sigma > 0.0);
        }
    }
}

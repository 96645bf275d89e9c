//! Two-sample Kolmogorov-Smirnov test.
//!
//! Small samples (`n_a * n_b <= 10000`) get the exact permutation p-value by
//! counting lattice paths; ties are handled by checking the ECDF difference
//! only at the end of each tied run of the pooled sample. Larger samples use
//! the asymptotic Kolmogorov distribution with `n_e = n_a n_b / (n_a + n_b)`.

use serde::{Deserialize, Serialize};

use super::{check_alpha, TestName, TestResult};
use crate::error::{Error, Result};

pub const EXACT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsMethod {
    Exact,
    Asymptotic,
}

/// Pooled sample in sorted order: for each position, whether it came from
/// `a`, and whether a tied run ends there.
fn pooled_layout(a: &[f64], b: &[f64]) -> (Vec<bool>, Vec<bool>) {
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let from_a = pooled.iter().map(|p| p.1).collect();
    let run_end = (0..pooled.len())
        .map(|k| k + 1 == pooled.len() || pooled[k + 1].0 != pooled[k].0)
        .collect();
    (from_a, run_end)
}

/// `max |i n_b - j n_a|` over run ends, i.e. `D * n_a * n_b` as an integer.
fn scaled_statistic(from_a: &[bool], run_end: &[bool], na: usize, nb: usize) -> u64 {
    let (mut i, mut j) = (0i64, 0i64);
    let mut best = 0u64;
    for (k, &is_a) in from_a.iter().enumerate() {
        if is_a {
            i += 1;
        } else {
            j += 1;
        }
        if run_end[k] {
            best = best.max((i * nb as i64 - j * na as i64).unsigned_abs());
        }
    }
    best
}

/// `P(D >= d)` under random relabelling of the pooled sample.
fn exact_p_value(run_end: &[bool], na: usize, nb: usize, d_scaled: u64) -> f64 {
    if d_scaled == 0 {
        return 1.0;
    }
    // inside[i]: labelings of the first k pooled positions with i taken from
    // `a` that stayed strictly below d at every run end so far
    let mut inside = vec![0.0f64; na + 1];
    inside[0] = 1.0;
    for (k, &end) in run_end.iter().enumerate() {
        let step = k + 1;
        let lo = step.saturating_sub(nb);
        let hi = step.min(na);
        let mut next = vec![0.0f64; na + 1];
        for i in lo..=hi {
            let mut c = 0.0;
            if i > 0 {
                c += inside[i - 1];
            }
            if step - i >= 1 && i + nb >= step {
                c += inside[i];
            }
            if end {
                let j = step - i;
                let dist = (i as i64 * nb as i64 - j as i64 * na as i64).unsigned_abs();
                if dist >= d_scaled {
                    c = 0.0;
                }
            }
            next[i] = c;
        }
        inside = next;
    }
    let total = binomial(na + nb, na);
    ((total - inside[na]) / total).clamp(0.0, 1.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64).round()
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Statistic, p-value and the method used.
pub fn ks_two_sample_p(a: &[f64], b: &[f64]) -> Result<(f64, f64, KsMethod)> {
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return Err(Error::SampleTooSmall { needed: 1, got: 0 });
    }
    let (from_a, run_end) = pooled_layout(a, b);
    let d_scaled = scaled_statistic(&from_a, &run_end, na, nb);
    let d = d_scaled as f64 / (na * nb) as f64;
    if na * nb <= EXACT_LIMIT {
        Ok((d, exact_p_value(&run_end, na, nb, d_scaled), KsMethod::Exact))
    } else {
        let ne = (na * nb) as f64 / (na + nb) as f64;
        Ok((d, kolmogorov_survival(ne.sqrt() * d), KsMethod::Asymptotic))
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (d, p, _) = ks_two_sample_p(a, b)?;
    Ok(TestResult {
        test_name: TestName::KsTwoSample,
        statistic: d,
        p_value: p,
        alpha,
        critical_value: None,
        reject: p < alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-sample statistic straight from the ECDFs.
    fn ecdf_statistic(a: &[f64], b: &[f64]) -> f64 {
        let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    /// Enumerates every split of the pooled sample into groups of the
    /// original sizes.
    fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = pooled.len();
        let d_obs = ecdf_statistic(a, b);
        let (mut hits, mut total) = (0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != a.len() {
                continue;
            }
            let (pa, pb): (Vec<_>, Vec<_>) = (0..n).partition(|&k| mask & (1 << k) != 0);
            let xa: Vec<f64> = pa.iter().map(|&k| pooled[k]).collect();
            let xb: Vec<f64> = pb.iter().map(|&k| pooled[k]).collect();
            total += 1;
            if ecdf_statistic(&xa, &xb) >= d_obs - 1e-12 {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0, 5.0];
        let r = ks_two_sample(&a, &a, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
    }

    #[test]
    fn disjoint_supports() {
        let (d, p, m) = ks_two_sample_p(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(m, KsMethod::Exact);
        assert!((p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn matches_scipy_exact() {
        // scipy.stats.ks_2samp(method="exact")
        let (d, p, _) = ks_two_sample_p(&[1.5, 2.25, 3.1, 4.7], &[2.0, 5.5, 6.1, 7.3, 8.8]).unwrap();
        assert!((d - 0.8).abs() < 1e-15);
        assert!((p - 0.07936507936507936).abs() < 1e-12);
        let (d, p, _) =
            ks_two_sample_p(&[0.1, 0.4, 0.35, 0.9, 1.2, 1.5, 0.05], &[1.1, 2.0, 0.95, 3.3, 0.2, 1.7]).unwrap();
        assert!((d - 0.5476190476190477).abs() < 1e-15);
        assert!((p - 0.21212121212121213).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_branch() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| i as f64 * 2.0 + 0.5).collect();
        let (_, p, m) = ks_two_sample_p(&a, &b).unwrap();
        assert_eq!(m, KsMethod::Asymptotic);
        assert!(p > 0.5);
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn empty_sample() {
        assert!(ks_two_sample(&[], &[1.0], 0.05).is_err());
    }

    proptest! {
        #[test]
        fn exact_matches_permutation_enumeration(
            a in prop::collection::vec(0u8..6, 1..=8),
            b in prop::collection::vec(0u8..6, 1..=8),
        ) {
            // small integer support forces plenty of ties
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let (d, p, _) = ks_two_sample_p(&a, &b).unwrap();
            prop_assert!((d - ecdf_statistic(&a, &b)).abs() < 1e-12);
            prop_assert!((p - permutation_p(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_increasing_affine_map(
            a in prop::collection::vec(-100.0f64..100.0, 1..30),
            b in prop::collection::vec(-100.0f64..100.0, 1..30),
            scale in 0.01f64..100.0,
            shift in -1e3f64..1e3,
        ) {
            let f = |v: &Vec<f64>| v.iter().map(|x| x * scale + shift).collect::<Vec<_>>();
            let (d0, p0, _) = ks_two_sample_p(&a, &b).unwrap();
            let (d1, p1, _) = ks_two_sample_p(&f(&a), &f(&b)).unwrap();
            // ties can only be created by rounding, so allow equality of stats
            prop_assume!(a.iter().chain(&b).all(|x| a.iter().chain(&b).filter(|y| *y == x).count() == 1));
            prop_assert_eq!(d0, d1);
            prop_assert!((p0 - p1).abs() < 1e-12);
        }
    }
}

//! Shapiro-Wilk W test using Royston's (1995) approximations for the
//! order-statistic weights and the normalizing transformation of W.
//! Valid for 3 <= n <= 5000.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_alpha, TestName, TestResult};
use crate::error::{Error, Result};

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Positive weights for the lower half of the order statistics, largest
/// first. The full antisymmetric coefficient vector has unit norm.
pub fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let std_normal = Normal::standard();
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half)
        .map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Returns `(W, p)` for the sample.
pub fn shapiro_wilk(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < MIN_N {
        return Err(Error::SampleTooSmall { needed: MIN_N, got: n });
    }
    if n > MAX_N {
        return Err(Error::SampleTooLarge { max: MAX_N, got: n });
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    if x[n - 1] - x[0] <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    let a = coefficients(n);
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let b: f64 = a.iter().enumerate().map(|(i, ai)| ai * (x[n - 1 - i] - x[i])).sum();
    let w = (b * b / ss).min(1.0);

    let p = if n == 3 {
        use std::f64::consts::{FRAC_PI_3, PI};
        (6.0 / PI * (w.sqrt().asin() - FRAC_PI_3)).clamp(0.0, 1.0)
    } else {
        let nf = n as f64;
        let y = (1.0 - w).ln();
        let (z, mu, sigma) = if n <= 11 {
            let gamma = poly(&G, nf);
            if y >= gamma {
                return Ok((w, 1e-99));
            }
            (-(gamma - y).ln(), poly(&C3, nf), poly(&C4, nf).exp())
        } else {
            let ln_n = nf.ln();
            (y, poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        1.0 - Normal::new(mu, sigma).expect("sigma > 0").cdf(z)
    };
    Ok((w, p))
}

pub fn shapiro_wilk_test(values: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (w, p) = shapiro_wilk(values)?;
    Ok(TestResult {
        test_name: TestName::ShapiroWilk,
        statistic: w,
        p_value: p,
        alpha,
        critical_value: None,
        reject: p < alpha,
    })
}

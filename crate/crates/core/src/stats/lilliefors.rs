//! Lilliefors test: the Kolmogorov-Smirnov distance to a normal law whose
//! mean and standard deviation are estimated from the sample.
//!
//! The null distribution has no closed form. Critical values and p-values
//! come from a Monte Carlo table of quantiles of `sqrt(n) * D`, shipped in
//! `data/lilliefors_table.csv` and regenerated with
//! `cargo run --release --example lilliefors_table`.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_alpha, sorted_quantile, TestName, TestResult};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const MIN_N: usize = 5;

/// Upper-tail probabilities at which the table stores quantiles.
pub const LEVELS: [f64; 30] = [
    0.001, 0.002, 0.005, 0.01, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.125, 0.15, 0.175, 0.20,
    0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.99,
];

/// Sample sizes tabulated by the shipped table.
pub const GRID: [usize; 42] = [
    5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 22, 25, 30, 35, 40, 45, 50, 60, 70, 80, 90, 100, 120,
    150, 200, 250, 300, 400, 500, 700, 1000, 1500, 2000, 3000, 4000, 5000,
];

pub const SHIPPED_REPLICATES: usize = 100_000;
pub const SHIPPED_SEED: u64 = 0x5EED_1111;

const BATCH: usize = 1000;
const SHIPPED_TABLE: &str = include_str!("../../data/lilliefors_table.csv");

/// Lilliefors distance `D` for a sample; `None` when the spread is zero.
pub fn lilliefors_statistic(values: &[f64]) -> Option<f64> {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    lilliefors_statistic_sorted(&x)
}

fn lilliefors_statistic_sorted(x: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return None;
    }
    let normal = Normal::standard();
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let cdf = normal.cdf((v - mean) / sd);
        d = d.max((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n);
    }
    Some(d)
}

/// Quantiles of `sqrt(n) * D` under normality, per sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct LillieforsTable {
    pub levels: Vec<f64>,
    /// `(n, quantiles)`; `quantiles[k]` is exceeded with probability `levels[k]`.
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl LillieforsTable {
    pub fn shipped() -> &'static LillieforsTable {
        static TABLE: std::sync::OnceLock<LillieforsTable> = std::sync::OnceLock::new();
        TABLE.get_or_init(|| {
            LillieforsTable::from_csv(SHIPPED_TABLE.as_bytes()).expect("shipped Lilliefors table is valid")
        })
    }

    /// Simulates the table: `replicates` standard-normal samples per size,
    /// drawn in batches whose RNG streams depend only on `(seed, n, batch)`.
    pub fn simulate(sizes: &[usize], replicates: usize, seed: u64, exec: Execution) -> Self {
        let rows = sizes
            .iter()
            .map(|&n| {
                let batches = replicates.div_ceil(BATCH);
                let mut stats: Vec<f64> = exec
                    .map_range(batches, |b| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(((n as u64) << 24) | b as u64);
                        let count = BATCH.min(replicates - b * BATCH);
                        let mut x = vec![0.0; n];
                        (0..count)
                            .map(|_| {
                                for v in x.iter_mut() {
                                    *v = StandardNormal.sample(&mut rng);
                                }
                                x.sort_by(f64::total_cmp);
                                lilliefors_statistic_sorted(&x).unwrap_or(0.0) * (n as f64).sqrt()
                            })
                            .collect::<Vec<_>>()
                    })
                    .into_iter()
                    .flatten()
                    .collect();
                stats.sort_by(f64::total_cmp);
                let q = LEVELS.iter().map(|p| sorted_quantile(&stats, 1.0 - p)).collect();
                (n, q)
            })
            .collect();
        LillieforsTable {
            levels: LEVELS.to_vec(),
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "n")?;
        for p in &self.levels {
            write!(w, ",{p}")?;
        }
        writeln!(w)?;
        for (n, q) in &self.rows {
            write!(w, "{n}")?;
            for v in q {
                write!(w, ",{v:.6}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let header = rdr.headers()?.clone();
        let levels = header
            .iter()
            .skip(1)
            .map(|h| h.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("lilliefors table header: {e}")))?;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let bad = |e: String| Error::Config(format!("lilliefors table: {e}"));
            let n = rec[0].parse::<usize>().map_err(|e| bad(e.to_string()))?;
            let q = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(e.to_string()))?;
            if q.len() != levels.len() {
                return Err(bad(format!("row n={n} has {} values", q.len())));
            }
            rows.push((n, q));
        }
        if rows.is_empty() || rows.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config("lilliefors table rows must be sorted by n".into()));
        }
        Ok(LillieforsTable { levels, rows })
    }

    /// Quantile row for `n`, linear in `1/sqrt(n)` between tabulated sizes and
    /// held at the largest size beyond the grid.
    fn row_for(&self, n: usize) -> Vec<f64> {
        let first = &self.rows[0];
        let last = &self.rows[self.rows.len() - 1];
        if n <= first.0 {
            return first.1.clone();
        }
        if n >= last.0 {
            return last.1.clone();
        }
        let k = self.rows.partition_point(|r| r.0 <= n);
        let (n0, q0) = &self.rows[k - 1];
        if *n0 == n {
            return q0.clone();
        }
        let (n1, q1) = &self.rows[k];
        let t = |m: usize| 1.0 / (m as f64).sqrt();
        let w = (t(n) - t(*n0)) / (t(*n1) - t(*n0));
        q0.iter().zip(q1).map(|(a, b)| a + w * (b - a)).collect()
    }

    /// Critical value of `D` at upper-tail probability `alpha`.
    pub fn critical_value(&self, n: usize, alpha: f64) -> Result<f64> {
        let lo = self.levels[0];
        let hi = self.levels[self.levels.len() - 1];
        if !(alpha >= lo && alpha <= hi) {
            return Err(Error::Config(format!(
                "alpha {alpha} outside tabulated range [{lo}, {hi}]"
            )));
        }
        let row = self.row_for(n);
        let k = self.levels.partition_point(|&p| p < alpha).min(self.levels.len() - 1);
        let scaled = if self.levels[k] == alpha || k == 0 {
            row[k]
        } else {
            let (p0, p1) = (self.levels[k - 1], self.levels[k]);
            row[k - 1] + (alpha - p0) / (p1 - p0) * (row[k] - row[k - 1])
        };
        Ok(scaled / (n as f64).sqrt())
    }

    /// Upper-tail probability of the observed `D`. Interpolated linearly in
    /// the table, log-linearly beyond its most extreme level.
    pub fn p_value(&self, n: usize, d: f64) -> f64 {
        let x = d * (n as f64).sqrt();
        let row = self.row_for(n);
        let p = &self.levels;
        let last = p.len() - 1;
        if x >= row[0] {
            let slope = (p[1].ln() - p[0].ln()) / (row[1] - row[0]);
            return (p[0].ln() + slope * (x - row[0])).exp().min(p[0]);
        }
        if x <= row[last] {
            return (p[last] + (1.0 - p[last]) * (row[last] - x) / row[last]).min(1.0);
        }
        let k = row.partition_point(|&q| q > x);
        let (q0, q1) = (row[k - 1], row[k]);
        p[k - 1] + (q0 - x) / (q0 - q1) * (p[k] - p[k - 1])
    }
}

/// Lilliefors test using the shipped table.
pub fn lilliefors_test(values: &[f64], alpha: f64) -> Result<TestResult> {
    lilliefors_test_with(values, alpha, LillieforsTable::shipped())
}

pub fn lilliefors_test_with(values: &[f64], alpha: f64, table: &LillieforsTable) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = values.len();
    if n < MIN_N {
        return Err(Error::SampleTooSmall { needed: MIN_N, got: n });
    }
    let d = lilliefors_statistic(values).ok_or(Error::DegenerateSample)?;
    let crit = table.critical_value(n, alpha)?;
    Ok(TestResult {
        test_name: TestName::Lilliefors,
        statistic: d,
        p_value: table.p_value(n, d),
        alpha,
        critical_value: Some(crit),
        reject: d > crit,
    })
}

//! Regression of longer-window ACF peak lags on the short-window lag across
//! cycles, and agreement between ACF and wavelet period estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::acf::{AcfPeak, AcfSurvey, Significance, WindowName};
use crate::error::{Error, Result};
use crate::wavelet::WaveletAnalysis;
use crate::{Hemisphere, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairingRule {
    /// Both peaks above one standard error.
    #[default]
    OneSe,
    /// Both peaks above two standard errors.
    TwoSe,
    /// Window peaks taken as detected, with no significance floor.
    ArgmaxOnly,
}

impl PairingRule {
    pub fn admits(self, peak: &AcfPeak) -> bool {
        match self {
            PairingRule::OneSe => peak.significance >= Significance::Between1Se2Se,
            PairingRule::TwoSe => peak.significance == Significance::Above2Se,
            PairingRule::ArgmaxOnly => true,
        }
    }
}

/// Window holding the `k`-th multiple of the short period.
pub fn window_for(k: u8) -> Option<WindowName> {
    match k {
        2 => Some(WindowName::Mid),
        3 => Some(WindowName::Long),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakPair {
    pub hemisphere: Hemisphere,
    pub cycle_number: u32,
    pub kind: SeriesKind,
    pub tau: usize,
    pub tau_k: usize,
    pub k: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCollection {
    pub kind: SeriesKind,
    pub k: u8,
    pub pairs: Vec<PeakPair>,
    /// Analysed hemisphere-cycles that failed the floor.
    pub excluded: usize,
}

pub fn collect_pairs(survey: &AcfSurvey, kind: SeriesKind, k: u8, rule: PairingRule) -> PairCollection {
    let mut pairs = Vec::new();
    let mut excluded = 0;
    let long = window_for(k);
    for a in survey.of_kind(kind) {
        let short = a.peak(WindowName::Short);
        let other = long.and_then(|w| a.peak(w));
        match (short, other) {
            (Some(s), Some(o)) if rule.admits(s) && rule.admits(o) => pairs.push(PeakPair {
                hemisphere: a.hemisphere,
                cycle_number: a.cycle_number,
                kind,
                tau: s.lag,
                tau_k: o.lag,
                k,
            }),
            _ => excluded += 1,
        }
    }
    PairCollection {
        kind,
        k,
        pairs,
        excluded,
    }
}

pub const MIN_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub fitted: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; 0 when the ordinates are all equal.
    pub r: f64,
    pub n_points: usize,
    pub x_mean: f64,
    pub sxx: f64,
    /// Residual standard error with `n - 2` degrees of freedom.
    pub residual_se: f64,
    /// Two-sided 95% Student t quantile for `n - 2` degrees of freedom.
    pub t_quantile: f64,
    /// Mean-response 95% half-widths at each distinct abscissa.
    pub band: Vec<BandPoint>,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    pub fn half_width(&self, x: f64) -> f64 {
        let n = self.n_points as f64;
        self.t_quantile * self.residual_se * (1.0 / n + (x - self.x_mean).powi(2) / self.sxx).sqrt()
    }

    pub fn band_at(&self, x: f64) -> BandPoint {
        BandPoint {
            x,
            fitted: self.predict(x),
            half_width: self.half_width(x),
        }
    }
}

/// Ordinary least squares of `y` on `x` with a 95% mean-response band.
pub fn fit_regression(points: &[(f64, f64)]) -> Result<RegressionFit> {
    let n = points.len();
    if n < MIN_POINTS {
        return Err(Error::SampleTooSmall {
            needed: MIN_POINTS,
            got: n,
        });
    }
    let nf = n as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - x_mean, y - y_mean);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateAbscissae);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let r = if syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let sse: f64 = points.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = nf - 2.0;
    let residual_se = (sse.max(0.0) / dof).sqrt();
    let t_quantile = StudentsT::new(0.0, 1.0, dof).expect("dof >= 1").inverse_cdf(0.975);

    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut fit = RegressionFit {
        slope,
        intercept,
        r,
        n_points: n,
        x_mean,
        sxx,
        residual_se,
        t_quantile,
        band: Vec::new(),
    };
    fit.band = xs.into_iter().map(|x| fit.band_at(x)).collect();
    Ok(fit)
}

pub fn fit_pairs(pairs: &[PeakPair]) -> Result<RegressionFit> {
    let pts: Vec<(f64, f64)> = pairs.iter().map(|p| (p.tau as f64, p.tau_k as f64)).collect();
    fit_regression(&pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPeak {
    pub hemisphere: Hemisphere,
    pub cycle_number: u32,
    pub acf_lag: usize,
    pub wavelet_period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub kind: SeriesKind,
    pub matched: Vec<MatchedPeak>,
    /// Pearson r over matched pairs; absent with fewer than two pairs or
    /// zero variance on either side.
    pub pearson_r: Option<f64>,
    /// Share of matched ACF peaks with the wavelet period within one
    /// rotation; absent when nothing matched.
    pub fraction_within_one: Option<f64>,
}

pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Matches each admitted short-window ACF peak with the wavelet
/// global-spectrum peak of the same hemisphere, cycle and kind inside
/// `[lo, hi]`.
pub fn method_agreement(
    survey: &AcfSurvey,
    wavelets: &[WaveletAnalysis],
    kind: SeriesKind,
    rule: PairingRule,
    lo: f64,
    hi: f64,
) -> Agreement {
    let mut matched = Vec::new();
    for a in survey.of_kind(kind) {
        let Some(peak) = a.peak(WindowName::Short).filter(|p| rule.admits(p)) else {
            continue;
        };
        let w = wavelets
            .iter()
            .find(|w| w.hemisphere == a.hemisphere && w.cycle_number == a.cycle_number && w.series_kind == kind);
        if let Some(gp) = w.and_then(|w| w.peak_in_range(lo, hi)) {
            matched.push(MatchedPeak {
                hemisphere: a.hemisphere,
                cycle_number: a.cycle_number,
                acf_lag: peak.lag,
                wavelet_period: gp.period,
            });
        }
    }
    let xy: Vec<(f64, f64)> = matched.iter().map(|m| (m.acf_lag as f64, m.wavelet_period)).collect();
    let within = matched
        .iter()
        .filter(|m| (m.wavelet_period - m.acf_lag as f64).abs() <= 1.0)
        .count();
    Agreement {
        kind,
        pearson_r: pearson(&xy),
        fraction_within_one: (!matched.is_empty()).then(|| within as f64 / matched.len() as f64),
        matched,
    }
}

//! Morlet continuous wavelet transform with cone of influence, pointwise
//! significance against a white or red-noise background, and the global
//! (time-averaged) wavelet spectrum.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::acf::autocorrelation;
use crate::calendar::CycleSegment;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fluct::FluctuationSeries;
use crate::{Hemisphere, SeriesKind};

pub const MIN_LEN: usize = 16;

/// Ratio of equivalent Fourier period to wavelet scale.
pub fn fourier_factor(omega0: f64) -> f64 {
    4.0 * PI / (omega0 + (2.0 + omega0 * omega0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    White,
    /// AR(1) spectrum with the lag-1 autocorrelation of the analysed series.
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoiPolicy {
    #[default]
    All,
    ExcludeCoi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveletParams {
    pub omega0: f64,
    /// Smallest scale in rotations; `2 * dt` when unset.
    pub s0: Option<f64>,
    pub dj: f64,
    /// Number of scales is `jmax + 1`; chosen so the largest period is
    /// about `n / 2` when unset.
    pub jmax: Option<usize>,
    pub background: Background,
    pub coi_policy: CoiPolicy,
}

impl Default for WaveletParams {
    fn default() -> Self {
        WaveletParams {
            omega0: 6.0,
            s0: None,
            dj: 0.125,
            jmax: None,
            background: Background::Red,
            coi_policy: CoiPolicy::All,
        }
    }
}

impl WaveletParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) {
            return Err(Error::Config(format!("omega0 {} must be positive", self.omega0)));
        }
        if !(self.dj > 0.0) {
            return Err(Error::Config(format!("dj {} must be positive", self.dj)));
        }
        if let Some(s0) = self.s0 {
            if !(s0 > 0.0) {
                return Err(Error::Config(format!("s0 {s0} must be positive")));
            }
        }
        Ok(())
    }
}

/// Raw transform output.
#[derive(Debug, Clone, PartialEq)]
pub struct Cwt {
    pub scales: Vec<f64>,
    pub periods: Vec<f64>,
    /// `|W|^2 / sigma^2`, indexed `[scale][time]`.
    pub power: Vec<Vec<f64>>,
    /// Largest trustworthy period at each time.
    pub coi: Vec<f64>,
    /// Population variance of the input.
    pub variance: f64,
}

/// Default largest scale index: period of the last scale about `n * dt / 2`.
pub fn default_jmax(n: usize, dt: f64, s0: f64, dj: f64, omega0: f64) -> usize {
    let smax = n as f64 * dt / 2.0 / fourier_factor(omega0);
    ((smax / s0).log2() / dj).floor().max(0.0) as usize
}

pub fn morlet_cwt(x: &[f64], dt: f64, s0: f64, dj: f64, jmax: usize, omega0: f64) -> Result<Cwt> {
    let n = x.len();
    if n < MIN_LEN {
        return Err(Error::SeriesTooShort {
            needed: MIN_LEN,
            got: n,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let variance = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if !(variance > 0.0) {
        return Err(Error::ConstantSeries);
    }

    let npad = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(npad);
    let inv = planner.plan_fft_inverse(npad);

    let mut spectrum: Vec<Complex<f64>> = (0..npad)
        .map(|i| Complex::new(if i < n { x[i] - mean } else { 0.0 }, 0.0))
        .collect();
    fwd.process(&mut spectrum);

    let dw = 2.0 * PI / (npad as f64 * dt);
    let omega: Vec<f64> = (0..npad)
        .map(|k| {
            if k <= npad / 2 {
                k as f64 * dw
            } else {
                -((npad - k) as f64) * dw
            }
        })
        .collect();

    let ff = fourier_factor(omega0);
    let scales: Vec<f64> = (0..=jmax).map(|j| s0 * 2f64.powf(j as f64 * dj)).collect();
    let periods: Vec<f64> = scales.iter().map(|s| ff * s).collect();

    let mut buf = vec![Complex::new(0.0, 0.0); npad];
    let power = scales
        .iter()
        .map(|&s| {
            let norm = (2.0 * PI * s / dt).sqrt() * PI.powf(-0.25);
            for k in 0..npad {
                buf[k] = if omega[k] > 0.0 {
                    let e = s * omega[k] - omega0;
                    spectrum[k] * (norm * (-0.5 * e * e).exp())
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            inv.process(&mut buf);
            let scale = 1.0 / npad as f64;
            buf[..n].iter().map(|w| (w * scale).norm_sqr() / variance).collect()
        })
        .collect();

    let coi_factor = ff / 2f64.sqrt() * dt;
    let coi = (0..n).map(|t| coi_factor * t.min(n - 1 - t) as f64).collect();

    Ok(Cwt {
        scales,
        periods,
        power,
        coi,
        variance,
    })
}

/// Background spectrum at `period`, normalized to unit variance.
pub fn background_spectrum(lag1: f64, period: f64, dt: f64) -> f64 {
    let a = lag1;
    let freq = dt / period;
    (1.0 - a * a) / (1.0 + a * a - 2.0 * a * (2.0 * PI * freq).cos())
}

/// Quantile of chi-square with two degrees of freedom.
fn chi2_2_quantile(level: f64) -> f64 {
    -2.0 * (1.0 - level).ln()
}

/// Normalized-power threshold per scale.
pub fn significance_thresholds(periods: &[f64], lag1: f64, dt: f64, level: f64) -> Vec<f64> {
    let q = chi2_2_quantile(level) / 2.0;
    periods.iter().map(|&p| background_spectrum(lag1, p, dt) * q).collect()
}

pub fn significance_mask(cwt: &Cwt, lag1: f64, dt: f64, level: f64) -> Vec<Vec<bool>> {
    let thresholds = significance_thresholds(&cwt.periods, lag1, dt, level);
    cwt.power
        .iter()
        .zip(&thresholds)
        .map(|(row, &th)| row.iter().map(|&p| p > th).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalPeak {
    /// Interpolated in log-period.
    pub period: f64,
    pub power: f64,
    pub scale_index: usize,
}

/// Per-scale time average. Under `ExcludeCoi` only times where the period
/// lies inside the cone are averaged; scales with none are `None`.
pub fn global_spectrum(cwt: &Cwt, policy: CoiPolicy) -> Vec<Option<f64>> {
    cwt.power
        .iter()
        .zip(&cwt.periods)
        .map(|(row, &period)| {
            let (sum, count) = row
                .iter()
                .zip(&cwt.coi)
                .filter(|(_, &coi)| policy == CoiPolicy::All || period <= coi)
                .fold((0.0, 0usize), |(s, c), (&p, _)| (s + p, c + 1));
            (count > 0).then(|| sum / count as f64)
        })
        .collect()
}

/// Parabolic refinement of a maximum at `j` in log2-period.
fn refine(periods: &[f64], gws: &[Option<f64>], j: usize) -> (f64, f64) {
    let y = gws[j].expect("defined at the maximum");
    let (Some(Some(a)), Some(Some(c))) = (j.checked_sub(1).map(|i| gws[i]), gws.get(j + 1)) else {
        return (periods[j], y);
    };
    let denom = a - 2.0 * y + c;
    if denom >= 0.0 {
        return (periods[j], y);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    let lp = periods[j].log2();
    let step = (periods[j + 1].log2() - periods[j - 1].log2()) / 2.0;
    (2f64.powf(lp + delta * step), y - 0.25 * (a - c) * delta)
}

/// Interior local maxima ranked by power, strongest first.
pub fn global_peaks(periods: &[f64], gws: &[Option<f64>]) -> Vec<GlobalPeak> {
    let mut peaks: Vec<GlobalPeak> = (1..gws.len().saturating_sub(1))
        .filter(|&j| match (gws[j - 1], gws[j], gws[j + 1]) {
            (Some(a), Some(b), Some(c)) => b > a && b >= c,
            _ => false,
        })
        .map(|j| {
            let (period, power) = refine(periods, gws, j);
            GlobalPeak {
                period,
                power,
                scale_index: j,
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.scale_index.cmp(&b.scale_index)));
    peaks
}

/// Refined maximum of the spectrum over scales whose period lies in
/// `[lo, hi]`; ties go to the shorter period.
pub fn argmax_in_range(periods: &[f64], gws: &[Option<f64>], lo: f64, hi: f64) -> Option<GlobalPeak> {
    let mut best: Option<usize> = None;
    for (j, (&p, g)) in periods.iter().zip(gws).enumerate() {
        if let (true, Some(v)) = (p >= lo && p <= hi, g) {
            if best.is_none_or(|b| *v > gws[b].unwrap()) {
                best = Some(j);
            }
        }
    }
    best.map(|j| {
        let (period, power) = refine(periods, gws, j);
        GlobalPeak {
            period: period.clamp(lo, hi),
            power,
            scale_index: j,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletAnalysis {
    pub hemisphere: Hemisphere,
    pub cycle_number: u32,
    pub series_kind: SeriesKind,
    pub scales: Vec<f64>,
    pub periods: Vec<f64>,
    pub power: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    pub coi: Vec<f64>,
    pub global_spectrum: Vec<Option<f64>>,
    pub global_peaks: Vec<GlobalPeak>,
    /// Lag-1 coefficient of the significance background (0 for white).
    pub lag1: f64,
}

impl WaveletAnalysis {
    pub fn len(&self) -> usize {
        self.coi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coi.is_empty()
    }

    pub fn in_coi(&self, scale_index: usize, t: usize) -> bool {
        self.periods[scale_index] > self.coi[t]
    }

    pub fn argmax(&self) -> Option<GlobalPeak> {
        argmax_in_range(&self.periods, &self.global_spectrum, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Strongest local peak with period in `[lo, hi]`, else the range
    /// argmax.
    pub fn peak_in_range(&self, lo: f64, hi: f64) -> Option<GlobalPeak> {
        self.global_peaks
            .iter()
            .find(|p| p.period >= lo && p.period <= hi)
            .copied()
            .or_else(|| argmax_in_range(&self.periods, &self.global_spectrum, lo, hi))
    }
}

/// Lag-1 autocorrelation used for the red background, kept inside (-1, 1).
pub fn lag1_coefficient(x: &[f64]) -> Result<f64> {
    let (c, _) = autocorrelation(x, 1)?;
    Ok(c[1].clamp(-0.99, 0.99))
}

pub fn analyze(
    x: &[f64],
    hemisphere: Hemisphere,
    cycle_number: u32,
    series_kind: SeriesKind,
    params: &WaveletParams,
    level: f64,
) -> Result<WaveletAnalysis> {
    params.validate()?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("significance level {level} outside (0, 1)")));
    }
    let dt = 1.0;
    let s0 = params.s0.unwrap_or(2.0 * dt);
    let jmax = params
        .jmax
        .unwrap_or_else(|| default_jmax(x.len(), dt, s0, params.dj, params.omega0));
    let cwt = morlet_cwt(x, dt, s0, params.dj, jmax, params.omega0)?;
    let lag1 = match params.background {
        Background::White => 0.0,
        Background::Red => lag1_coefficient(x)?,
    };
    let significant = significance_mask(&cwt, lag1, dt, level);
    let global_spectrum = global_spectrum(&cwt, params.coi_policy);
    let global_peaks = global_peaks(&cwt.periods, &global_spectrum);
    Ok(WaveletAnalysis {
        hemisphere,
        cycle_number,
        series_kind,
        scales: cwt.scales,
        periods: cwt.periods,
        power: cwt.power,
        significant,
        coi: cwt.coi,
        global_spectrum,
        global_peaks,
        lag1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletSkip {
    pub hemisphere: Hemisphere,
    pub cycle_number: u32,
    pub series_kind: SeriesKind,
    pub reason: String,
}

/// Transforms every (hemisphere, cycle, kind), ordered by that key.
/// Short or constant segments are skipped.
pub fn cycle_wavelet_survey(
    inputs: &[(&FluctuationSeries, &[CycleSegment])],
    params: &WaveletParams,
    level: f64,
    exec: Execution,
) -> Result<(Vec<WaveletAnalysis>, Vec<WaveletSkip>)> {
    params.validate()?;
    let mut jobs = Vec::new();
    for (fs, segments) in inputs {
        for seg in segments.iter() {
            for kind in SeriesKind::ALL {
                jobs.push((*fs, seg, kind));
            }
        }
    }
    jobs.sort_by_key(|(fs, seg, kind)| (fs.hemisphere, seg.cycle, *kind));
    let results = exec.map(&jobs, |(fs, seg, kind)| {
        analyze(
            &fs.kind(*kind)[seg.range.clone()],
            fs.hemisphere,
            seg.cycle,
            *kind,
            params,
            level,
        )
    });
    let mut analyses = Vec::new();
    let mut skipped = Vec::new();
    for ((fs, seg, kind), res) in jobs.iter().zip(results) {
        match res {
            Ok(a) => analyses.push(a),
            Err(e @ (Error::SeriesTooShort { .. } | Error::ConstantSeries)) => skipped.push(WaveletSkip {
                hemisphere: fs.hemisphere,
                cycle_number: seg.cycle,
                series_kind: *kind,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((analyses, skipped))
}

//! Per-cycle autocorrelation with Bartlett standard errors, windowed peak
//! detection and significance classification.

use serde::{Deserialize, Serialize};

use crate::calendar::CycleSegment;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fluct::FluctuationSeries;
use crate::{Hemisphere, SeriesKind};

/// Lags beyond this are comparable to a cycle length and not trusted.
pub const RELIABLE_MAX_LAG: usize = 27;

/// Sample autocorrelation `c` (biased, `1/n` normalization, mean removed)
/// and Bartlett standard errors `se` for lags `0..=max_lag`.
///
/// `se[0] = 0`; for `tau >= 1`, `se[tau] = sqrt((1 + 2 sum_{0<j<tau} c_j^2) / n)`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    if n < max_lag + 2 {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 2,
            got: n,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if !(denom > 0.0) {
        return Err(Error::ConstantSeries);
    }
    let mut c = Vec::with_capacity(max_lag + 1);
    c.push(1.0);
    for tau in 1..=max_lag {
        let num: f64 = d.iter().zip(&d[tau..]).map(|(a, b)| a * b).sum();
        c.push(num / denom);
    }
    let mut se = Vec::with_capacity(max_lag + 1);
    se.push(0.0);
    let mut acc = 1.0;
    for tau in 1..=max_lag {
        if tau >= 2 {
            acc += 2.0 * c[tau - 1] * c[tau - 1];
        }
        se.push((acc / n as f64).sqrt());
    }
    Ok((c, se))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowName {
    Short,
    Mid,
    Long,
}

/// Inclusive lag range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagWindow {
    pub name: WindowName,
    pub lo: usize,
    pub hi: usize,
}

impl LagWindow {
    pub fn contains(&self, lag: usize) -> bool {
        (self.lo..=self.hi).contains(&lag)
    }
}

pub const DEFAULT_WINDOWS: [LagWindow; 3] = [
    LagWindow {
        name: WindowName::Short,
        lo: 7,
        hi: 13,
    },
    LagWindow {
        name: WindowName::Mid,
        lo: 14,
        hi: 19,
    },
    LagWindow {
        name: WindowName::Long,
        lo: 20,
        hi: 27,
    },
];

/// Windows must be non-empty, start at lag >= 1, and be ordered and disjoint.
pub fn validate_windows(windows: &[LagWindow]) -> Result<()> {
    for w in windows {
        if w.lo == 0 || w.lo > w.hi {
            return Err(Error::Config(format!("bad lag window [{}, {}]", w.lo, w.hi)));
        }
    }
    if windows.windows(2).any(|p| p[0].hi >= p[1].lo) {
        return Err(Error::Config("lag windows must be ordered and disjoint".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Below1Se,
    Between1Se2Se,
    Above2Se,
}

impl Significance {
    pub fn classify(c: f64, se: f64) -> Self {
        if c > 2.0 * se {
            Significance::Above2Se
        } else if c > se {
            Significance::Between1Se2Se
        } else {
            Significance::Below1Se
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcfPeak {
    pub lag: usize,
    pub value: f64,
    pub se: f64,
    pub window: WindowName,
    pub significance: Significance,
    /// Whether the lag is a true local maximum rather than the window
    /// argmax fallback.
    pub local_max: bool,
}

fn is_local_max(c: &[f64], tau: usize) -> bool {
    tau >= 1 && c[tau] > c[tau - 1] && (tau + 1 >= c.len() || c[tau] >= c[tau + 1])
}

/// For each window, the largest local maximum of `c` inside it, or the
/// window argmax when there is none. Ties go to the smaller lag. Windows
/// reaching past the computed lags are clipped; empty ones are skipped.
pub fn detect_peaks(c: &[f64], se: &[f64], windows: &[LagWindow]) -> Vec<AcfPeak> {
    let mut peaks = Vec::new();
    for w in windows {
        let hi = w.hi.min(c.len().saturating_sub(1));
        if w.lo > hi {
            continue;
        }
        let best = |lags: &mut dyn Iterator<Item = usize>| {
            lags.fold(None::<usize>, |best, t| match best {
                Some(b) if c[b] >= c[t] => Some(b),
                _ => Some(t),
            })
        };
        let local = best(&mut (w.lo..=hi).filter(|&t| is_local_max(c, t)));
        let (lag, local_max) = match local {
            Some(t) => (t, true),
            None => (best(&mut (w.lo..=hi)).expect("non-empty window"), false),
        };
        peaks.push(AcfPeak {
            lag,
            value: c[lag],
            se: se[lag],
            window: w.name,
            significance: Significance::classify(c[lag], se[lag]),
            local_max,
        });
    }
    peaks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfAnalysis {
    pub hemisphere: Hemisphere,
    pub cycle_number: u32,
    pub series_kind: SeriesKind,
    /// Segment length.
    pub n: usize,
    /// `c[tau]` for lags `0..=max_lag`.
    pub c: Vec<f64>,
    pub se: Vec<f64>,
    pub peaks: Vec<AcfPeak>,
}

impl AcfAnalysis {
    pub fn max_lag(&self) -> usize {
        self.c.len() - 1
    }

    pub fn is_reliable(&self, lag: usize) -> bool {
        lag <= RELIABLE_MAX_LAG
    }

    pub fn peak(&self, window: WindowName) -> Option<&AcfPeak> {
        self.peaks.iter().find(|p| p.window == window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcfConfig {
    pub max_lag: usize,
    pub windows: Vec<LagWindow>,
}

impl Default for AcfConfig {
    fn default() -> Self {
        AcfConfig {
            max_lag: RELIABLE_MAX_LAG,
            windows: DEFAULT_WINDOWS.to_vec(),
        }
    }
}

impl AcfConfig {
    pub fn validate(&self) -> Result<()> {
        validate_windows(&self.windows)?;
        if let Some(last) = self.windows.last() {
            if self.max_lag < last.hi {
                return Err(Error::Config(format!(
                    "max_lag {} below the last window bound {}",
                    self.max_lag, last.hi
                )));
            }
        }
        Ok(())
    }
}

pub fn analyze_segment(
    x: &[f64],
    hemisphere: Hemisphere,
    cycle_number: u32,
    series_kind: SeriesKind,
    cfg: &AcfConfig,
) -> Result<AcfAnalysis> {
    let (c, se) = autocorrelation(x, cfg.max_lag)?;
    let peaks = detect_peaks(&c, &se, &cfg.windows);
    Ok(AcfAnalysis {
        hemisphere,
        cycle_number,
        series_kind,
        n: x.len(),
        c,
        se,
        peaks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCase {
    pub hemisphere: Hemisphere,
    pub cycle_number: u32,
    pub series_kind: SeriesKind,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub series_kind: SeriesKind,
    /// Hemisphere-cycles analysed (skipped ones excluded).
    pub cases: usize,
    pub above_2se_share: Option<f64>,
    pub between_1se_2se_share: Option<f64>,
    /// Mean lag of short-window peaks classified above 2 se.
    pub mean_significant_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfSurvey {
    /// Ordered by (hemisphere, cycle, kind).
    pub analyses: Vec<AcfAnalysis>,
    pub skipped: Vec<SkippedCase>,
    pub summary: Vec<KindSummary>,
    pub windows: Vec<LagWindow>,
}

impl AcfSurvey {
    pub fn get(&self, hemisphere: Hemisphere, cycle: u32, kind: SeriesKind) -> Option<&AcfAnalysis> {
        self.analyses
            .iter()
            .find(|a| a.hemisphere == hemisphere && a.cycle_number == cycle && a.series_kind == kind)
    }

    pub fn of_kind(&self, kind: SeriesKind) -> impl Iterator<Item = &AcfAnalysis> {
        self.analyses.iter().filter(move |a| a.series_kind == kind)
    }

    pub fn summary_for(&self, kind: SeriesKind) -> Option<&KindSummary> {
        self.summary.iter().find(|s| s.series_kind == kind)
    }
}

/// Summary over the analyses of one kind, using the first configured window
/// as the short window.
pub fn summarize(analyses: &[AcfAnalysis], kind: SeriesKind, short: WindowName) -> KindSummary {
    let of_kind: Vec<&AcfAnalysis> = analyses.iter().filter(|a| a.series_kind == kind).collect();
    let cases = of_kind.len();
    let short_peaks: Vec<&AcfPeak> = of_kind.iter().filter_map(|a| a.peak(short)).collect();
    let share = |s: Significance| {
        (cases > 0).then(|| short_peaks.iter().filter(|p| p.significance == s).count() as f64 / cases as f64)
    };
    let sig: Vec<f64> = short_peaks
        .iter()
        .filter(|p| p.significance == Significance::Above2Se)
        .map(|p| p.lag as f64)
        .collect();
    KindSummary {
        series_kind: kind,
        cases,
        above_2se_share: share(Significance::Above2Se),
        between_1se_2se_share: share(Significance::Between1Se2Se),
        mean_significant_tau: (!sig.is_empty()).then(|| sig.iter().sum::<f64>() / sig.len() as f64),
    }
}

/// Runs the ACF for every (hemisphere, cycle, kind). Segments too short for
/// `max_lag` or constant within a cycle are skipped and left out of the
/// summary denominators.
pub fn cycle_acf_survey(
    inputs: &[(&FluctuationSeries, &[CycleSegment])],
    cfg: &AcfConfig,
    exec: Execution,
) -> Result<AcfSurvey> {
    cfg.validate()?;
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
        let x = &fs.kind(*kind)[seg.range.clone()];
        analyze_segment(x, fs.hemisphere, seg.cycle, *kind, cfg)
    });

    let mut analyses = Vec::new();
    let mut skipped = Vec::new();
    for ((fs, seg, kind), res) in jobs.iter().zip(results) {
        match res {
            Ok(a) => analyses.push(a),
            Err(e @ (Error::SeriesTooShort { .. } | Error::ConstantSeries)) => {
                let reason = match e {
                    Error::SeriesTooShort { needed, got } => Error::SegmentTooShort {
                        cycle: seg.cycle,
                        len: got,
                        needed,
                    }
                    .to_string(),
                    other => other.to_string(),
                };
                skipped.push(SkippedCase {
                    hemisphere: fs.hemisphere,
                    cycle_number: seg.cycle,
                    series_kind: *kind,
                    reason,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let short = cfg.windows.first().map(|w| w.name).unwrap_or(WindowName::Short);
    let summary = SeriesKind::ALL
        .iter()
        .map(|&k| summarize(&analyses, k, short))
        .collect();
    Ok(AcfSurvey {
        analyses,
        skipped,
        summary,
        windows: cfg.windows.clone(),
    })
}

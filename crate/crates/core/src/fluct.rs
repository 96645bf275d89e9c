//! Per-rotation mean areas, the 13-rotation running mean and the signed
//! fluctuation series.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calendar::{rotation_of_date, CarringtonEphemeris};
use crate::error::{Error, Result};
use crate::ingest::{DailyAreaRecord, GapPolicy};
use crate::{Hemisphere, SeriesKind};

/// Half-width of the centered smoothing window.
pub const SMOOTH_HALF_WIDTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationMean {
    pub rotation_index: i64,
    /// Mean daily area over the rotation, millionths of a hemisphere.
    pub mean_area: f64,
    /// Number of contributing days.
    pub day_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSeries {
    pub hemisphere: Hemisphere,
    pub ephemeris: CarringtonEphemeris,
    pub rotations: Vec<RotationMean>,
}

impl RotationSeries {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn means(&self) -> Vec<f64> {
        self.rotations.iter().map(|r| r.mean_area).collect()
    }
}

fn calendar_days_in_rotation(rotation: i64, eph: &CarringtonEphemeris) -> u32 {
    let first = eph.rotation_start(rotation).date() - chrono::Days::new(1);
    first
        .iter_days()
        .take(30)
        .filter(|d| rotation_of_date(*d, eph).ok() == Some(rotation))
        .count() as u32
}

/// Averages one hemisphere's daily areas over each Carrington rotation.
///
/// Rotations between the first and last observed one that received no day
/// at all are filled with zero area under [`GapPolicy::Zero`] and are an
/// [`Error::EmptyRotation`] otherwise.
pub fn rotation_means(
    records: &[DailyAreaRecord],
    hemisphere: Hemisphere,
    eph: &CarringtonEphemeris,
    policy: GapPolicy,
) -> Result<RotationSeries> {
    eph.validate()?;
    let mut sums: BTreeMap<i64, (f64, u32)> = BTreeMap::new();
    for r in records {
        let rot = rotation_of_date(r.date, eph)?;
        let e = sums.entry(rot).or_insert((0.0, 0));
        e.0 += r.area(hemisphere);
        e.1 += 1;
    }
    let mut rotations = Vec::with_capacity(sums.len());
    if let (Some(&first), Some(&last)) = (sums.keys().next(), sums.keys().next_back()) {
        for rot in first..=last {
            match sums.get(&rot) {
                Some(&(sum, count)) => rotations.push(RotationMean {
                    rotation_index: rot,
                    mean_area: sum / count as f64,
                    day_count: count,
                }),
                None if policy == GapPolicy::Zero => rotations.push(RotationMean {
                    rotation_index: rot,
                    mean_area: 0.0,
                    day_count: calendar_days_in_rotation(rot, eph),
                }),
                None => return Err(Error::EmptyRotation(rot)),
            }
        }
    }
    Ok(RotationSeries {
        hemisphere,
        ephemeris: *eph,
        rotations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePolicy {
    /// Truncate the window at the series ends and divide by its actual size.
    #[default]
    Shrink,
    /// Leave the first and last six values undefined.
    Trim,
}

/// Centered 13-point running mean of `values`.
pub fn running_mean_13(values: &[f64], policy: EdgePolicy) -> Result<Vec<Option<f64>>> {
    let n = values.len();
    let needed = match policy {
        EdgePolicy::Shrink => 1,
        EdgePolicy::Trim => 2 * SMOOTH_HALF_WIDTH + 1,
    };
    if n < needed {
        return Err(Error::SeriesTooShort { needed, got: n });
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(SMOOTH_HALF_WIDTH);
            let hi = (i + SMOOTH_HALF_WIDTH).min(n - 1);
            let full = i >= SMOOTH_HALF_WIDTH && i + SMOOTH_HALF_WIDTH < n;
            if !full && policy == EdgePolicy::Trim {
                return None;
            }
            let window = &values[lo..=hi];
            Some(window.iter().sum::<f64>() / window.len() as f64)
        })
        .collect())
}

pub fn smooth_13(series: &RotationSeries, policy: EdgePolicy) -> Result<Vec<Option<f64>>> {
    running_mean_13(&series.means(), policy)
}

/// Fluctuations about the running mean together with their positive and
/// negative parts. All vectors share one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSeries {
    pub hemisphere: Hemisphere,
    pub ephemeris: CarringtonEphemeris,
    pub rotation_index: Vec<i64>,
    pub mean_area: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub values: Vec<f64>,
    pub positive_part: Vec<f64>,
    pub negative_part: Vec<f64>,
}

impl FluctuationSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kind(&self, kind: SeriesKind) -> &[f64] {
        match kind {
            SeriesKind::Original => &self.values,
            SeriesKind::Positive => &self.positive_part,
            SeriesKind::Negative => &self.negative_part,
        }
    }

    /// Rotation series restricted to the rotations kept in this series.
    pub fn rotation_series(&self) -> RotationSeries {
        RotationSeries {
            hemisphere: self.hemisphere,
            ephemeris: self.ephemeris,
            rotations: self
                .rotation_index
                .iter()
                .zip(&self.mean_area)
                .map(|(&rotation_index, &mean_area)| RotationMean {
                    rotation_index,
                    mean_area,
                    day_count: 0,
                })
                .collect(),
        }
    }
}

/// `F+ = F` where `F > 0`, else 0.
pub fn positive_part(f: f64) -> f64 {
    if f > 0.0 {
        f
    } else {
        0.0
    }
}

/// `F- = F` where `F <= 0`, else 0.
pub fn negative_part(f: f64) -> f64 {
    if f > 0.0 {
        0.0
    } else {
        f
    }
}

pub fn fluctuations(series: &RotationSeries, policy: EdgePolicy) -> Result<FluctuationSeries> {
    let smoothed = smooth_13(series, policy)?;
    let mut out = FluctuationSeries {
        hemisphere: series.hemisphere,
        ephemeris: series.ephemeris,
        rotation_index: Vec::new(),
        mean_area: Vec::new(),
        smoothed: Vec::new(),
        values: Vec::new(),
        positive_part: Vec::new(),
        negative_part: Vec::new(),
    };
    for (rot, sbar) in series.rotations.iter().zip(smoothed) {
        let Some(sbar) = sbar else { continue };
        let f = rot.mean_area - sbar;
        out.rotation_index.push(rot.rotation_index);
        out.mean_area.push(rot.mean_area);
        out.smoothed.push(sbar);
        out.values.push(f);
        out.positive_part.push(positive_part(f));
        out.negative_part.push(negative_part(f));
    }
    Ok(out)
}

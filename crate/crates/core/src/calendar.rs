//! Carrington rotation numbering and solar-cycle segmentation.

use std::io::Read;
use std::ops::Range;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluct::RotationSeries;

/// Julian date of 0001-01-01 12:00 UT (proleptic Gregorian) minus one.
const JDN_OFFSET: i64 = 1_721_425;

/// A Julian date (days, fractional).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct JulianDate(pub f64);

impl JulianDate {
    /// Noon UT of a calendar day.
    pub fn noon(date: NaiveDate) -> Self {
        JulianDate((date.num_days_from_ce() as i64 + JDN_OFFSET) as f64)
    }

    /// Calendar day containing this instant.
    pub fn date(self) -> NaiveDate {
        let jdn = (self.0 + 0.5).floor() as i64;
        NaiveDate::from_num_days_from_ce_opt((jdn - JDN_OFFSET) as i32).expect("julian date out of calendar range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarringtonEphemeris {
    /// Start of rotation 1.
    pub epoch_julian_date: f64,
    pub synodic_period_days: f64,
}

impl Default for CarringtonEphemeris {
    /// Rotation 1 begins 1853-11-09, mean synodic period 27.2753 d.
    fn default() -> Self {
        CarringtonEphemeris {
            epoch_julian_date: 2_398_167.329,
            synodic_period_days: 27.2753,
        }
    }
}

impl CarringtonEphemeris {
    pub fn new(epoch_julian_date: f64, synodic_period_days: f64) -> Result<Self> {
        let eph = CarringtonEphemeris {
            epoch_julian_date,
            synodic_period_days,
        };
        eph.validate()?;
        Ok(eph)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.synodic_period_days > 25.0 && self.synodic_period_days < 30.0) {
            return Err(Error::InvalidEphemeris(format!(
                "synodic period {} outside (25, 30) days",
                self.synodic_period_days
            )));
        }
        if !self.epoch_julian_date.is_finite() {
            return Err(Error::InvalidEphemeris("non-finite epoch".into()));
        }
        Ok(())
    }

    pub fn rotation_start(&self, rotation: i64) -> JulianDate {
        JulianDate(self.epoch_julian_date + (rotation - 1) as f64 * self.synodic_period_days)
    }

    pub fn rotation_mid(&self, rotation: i64) -> JulianDate {
        JulianDate(self.epoch_julian_date + (rotation as f64 - 0.5) * self.synodic_period_days)
    }

    pub fn mid_date(&self, rotation: i64) -> NaiveDate {
        self.rotation_mid(rotation).date()
    }
}

/// Carrington rotation containing the instant `jd`.
pub fn rotation_number(jd: JulianDate, eph: &CarringtonEphemeris) -> Result<i64> {
    if jd.0 < eph.epoch_julian_date {
        return Err(Error::DateBeforeEpoch(format!("JD {}", jd.0)));
    }
    let mut rot = ((jd.0 - eph.epoch_julian_date) / eph.synodic_period_days).floor() as i64 + 1;
    // keep the division consistent with rotation_start at the boundaries
    if eph.rotation_start(rot + 1) <= jd {
        rot += 1;
    } else if eph.rotation_start(rot) > jd {
        rot -= 1;
    }
    Ok(rot)
}

/// Rotation containing noon UT of `date`.
pub fn rotation_of_date(date: NaiveDate, eph: &CarringtonEphemeris) -> Result<i64> {
    rotation_number(JulianDate::noon(date), eph).map_err(|_| Error::DateBeforeEpoch(date.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleEntry {
    pub cycle: u32,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

/// Contiguous, ordered solar-cycle date ranges (`start` inclusive, `end`
/// exclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleTable {
    entries: Vec<CycleEntry>,
}

const SHIPPED_CYCLES: &str = include_str!("../data/cycles.csv");

impl CycleTable {
    pub fn new(entries: Vec<CycleEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidCycleTable("no cycles".into()));
        }
        for e in &entries {
            if e.start_date >= e.end_date {
                return Err(Error::InvalidCycleTable(format!(
                    "cycle {} ends before it starts",
                    e.cycle
                )));
            }
        }
        for w in entries.windows(2) {
            if w[1].cycle <= w[0].cycle {
                return Err(Error::InvalidCycleTable("cycles not sorted by number".into()));
            }
            if w[0].end_date != w[1].start_date {
                return Err(Error::InvalidCycleTable(format!(
                    "cycle {} does not end where cycle {} starts",
                    w[0].cycle, w[1].cycle
                )));
            }
        }
        Ok(CycleTable { entries })
    }

    /// The table shipped with the crate (cycles 12 to 23).
    pub fn shipped() -> Self {
        Self::from_csv(SHIPPED_CYCLES.as_bytes()).expect("shipped cycle table is valid")
    }

    /// Reads `cycle,start_date,end_date`; `#` lines are comments.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let entries = rdr
            .deserialize::<CycleEntry>()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidCycleTable(e.to_string()))?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[CycleEntry] {
        &self.entries
    }

    pub fn span(&self) -> (NaiveDate, NaiveDate) {
        (
            self.entries[0].start_date,
            self.entries[self.entries.len() - 1].end_date,
        )
    }

    pub fn cycle_of(&self, date: NaiveDate) -> Option<u32> {
        self.entries
            .iter()
            .find(|e| e.start_date <= date && date < e.end_date)
            .map(|e| e.cycle)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleSegment {
    pub cycle: u32,
    /// Positions into the rotation series.
    pub range: Range<usize>,
}

/// Assigns every rotation, by its mid-date, to a cycle. Cycles without any
/// rotation are omitted.
pub fn segment_cycles(series: &RotationSeries, table: &CycleTable) -> Result<Vec<CycleSegment>> {
    let mut out: Vec<CycleSegment> = Vec::new();
    for (pos, rot) in series.rotations.iter().enumerate() {
        let mid = series.ephemeris.mid_date(rot.rotation_index);
        let cycle = table.cycle_of(mid).ok_or(Error::UncoveredRotation {
            rotation: rot.rotation_index,
            mid_date: mid,
        })?;
        match out.last_mut() {
            Some(seg) if seg.cycle == cycle => seg.range.end = pos + 1,
            _ => out.push(CycleSegment {
                cycle,
                range: pos..pos + 1,
            }),
        }
    }
    Ok(out)
}

/// Restricts a rotation series to rotations whose mid-date lies inside the
/// table's span.
pub fn crop_to_table(series: &RotationSeries, table: &CycleTable) -> RotationSeries {
    let (start, end) = table.span();
    let rotations = series
        .rotations
        .iter()
        .filter(|r| {
            let mid = series.ephemeris.mid_date(r.rotation_index);
            start <= mid && mid < end
        })
        .cloned()
        .collect();
    RotationSeries {
        hemisphere: series.hemisphere,
        ephemeris: series.ephemeris,
        rotations,
    }
}

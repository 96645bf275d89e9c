//! Daily hemispheric sunspot-area files.
//!
//! The parser is driven by a [`ColumnMap`] so that the same code reads the
//! whitespace-delimited Greenwich/NGDC layout (`year month day total north
//! south`) and the canonical CSV this crate writes back out.

use std::io::{BufRead, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One calendar day of hemispheric sunspot areas, in millionths of a solar
/// hemisphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyAreaRecord {
    pub date: NaiveDate,
    pub area_total: f64,
    pub area_north: f64,
    pub area_south: f64,
}

impl DailyAreaRecord {
    pub fn area(&self, hemisphere: crate::Hemisphere) -> f64 {
        match hemisphere {
            crate::Hemisphere::North => self.area_north,
            crate::Hemisphere::South => self.area_south,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delimiter {
    Whitespace,
    Comma,
}

/// Where the date lives on a data line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateColumns {
    /// Separate integer year, month and day fields.
    Ymd { year: usize, month: usize, day: usize },
    /// A single ISO-8601 `YYYY-MM-DD` field.
    Iso(usize),
}

impl DateColumns {
    fn indices(&self) -> Vec<usize> {
        match *self {
            DateColumns::Ymd { year, month, day } => vec![year, month, day],
            DateColumns::Iso(i) => vec![i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub delimiter: Delimiter,
    pub date_columns: DateColumns,
    pub north_column: usize,
    pub south_column: usize,
    pub total_column: Option<usize>,
    /// Token marking an absent value. A day whose north or south field carries
    /// it is treated as missing.
    pub missing_sentinel: String,
}

impl Default for ColumnMap {
    /// Greenwich daily hemispheric-area layout.
    fn default() -> Self {
        ColumnMap {
            delimiter: Delimiter::Whitespace,
            date_columns: DateColumns::Ymd {
                year: 0,
                month: 1,
                day: 2,
            },
            total_column: Some(3),
            north_column: 4,
            south_column: 5,
            missing_sentinel: "-1".to_string(),
        }
    }
}

impl ColumnMap {
    /// Layout of the canonical CSV written by [`write_canonical_csv`].
    pub fn canonical_csv() -> Self {
        ColumnMap {
            delimiter: Delimiter::Comma,
            date_columns: DateColumns::Iso(0),
            total_column: Some(1),
            north_column: 2,
            south_column: 3,
            missing_sentinel: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut idx = self.date_columns.indices();
        idx.push(self.north_column);
        idx.push(self.south_column);
        idx.extend(self.total_column);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != idx.len() {
            return Err(Error::InvalidColumnMap(format!(
                "column indices must be distinct, got {idx:?}"
            )));
        }
        Ok(())
    }

    fn max_index(&self) -> usize {
        let mut idx = self.date_columns.indices();
        idx.push(self.north_column);
        idx.push(self.south_column);
        idx.extend(self.total_column);
        idx.into_iter().max().unwrap_or(0)
    }
}

/// Parser output together with line accounting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DailyFile {
    pub records: Vec<DailyAreaRecord>,
    /// Header, comment and blank lines.
    pub header_lines: usize,
    /// Numeric lines whose hemispheric value carried the missing sentinel.
    pub missing_lines: usize,
    pub total_lines: usize,
}

fn is_data_token(tok: &str) -> bool {
    tok.chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
}

fn split_line(line: &str, delimiter: Delimiter) -> Vec<&str> {
    match delimiter {
        Delimiter::Whitespace => line.split_whitespace().collect(),
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
    }
}

/// Parses a daily-area file. Records must have strictly increasing dates.
pub fn parse_daily_file<R: BufRead>(source: R, map: &ColumnMap) -> Result<DailyFile> {
    map.validate()?;
    let mut out = DailyFile::default();
    let mut last: Option<NaiveDate> = None;

    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(format!("reading line {lineno}"), e))?;
        out.total_lines += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            out.header_lines += 1;
            continue;
        }
        let tokens = split_line(trimmed, map.delimiter);
        if !is_data_token(tokens[0]) {
            out.header_lines += 1;
            continue;
        }
        let malformed = || Error::MalformedLine {
            line: lineno,
            content: line.clone(),
        };
        if tokens.len() <= map.max_index() {
            return Err(malformed());
        }

        let date = match map.date_columns {
            DateColumns::Ymd { year, month, day } => {
                let y: i32 = tokens[year].parse().map_err(|_| malformed())?;
                let m: u32 = tokens[month].parse().map_err(|_| malformed())?;
                let d: u32 = tokens[day].parse().map_err(|_| malformed())?;
                NaiveDate::from_ymd_opt(y, m, d).ok_or_else(malformed)?
            }
            DateColumns::Iso(c) => NaiveDate::parse_from_str(tokens[c], "%Y-%m-%d").map_err(|_| malformed())?,
        };

        let sentinel = map.missing_sentinel.as_str();
        let is_missing = |tok: &str| !sentinel.is_empty() && tok == sentinel;
        if is_missing(tokens[map.north_column]) || is_missing(tokens[map.south_column]) {
            out.missing_lines += 1;
            continue;
        }
        let area = |c: usize| -> Result<f64> {
            let v: f64 = tokens[c].parse().map_err(|_| malformed())?;
            if !v.is_finite() {
                return Err(malformed());
            }
            if v < 0.0 {
                return Err(Error::NegativeArea { line: lineno, value: v });
            }
            Ok(v)
        };
        let area_north = area(map.north_column)?;
        let area_south = area(map.south_column)?;
        let area_total = match map.total_column {
            Some(c) if !is_missing(tokens[c]) => area(c)?,
            _ => area_north + area_south,
        };

        if let Some(prev) = last {
            if date <= prev {
                return Err(Error::NonMonotonicDate { line: lineno, date });
            }
        }
        last = Some(date);
        out.records.push(DailyAreaRecord {
            date,
            area_total,
            area_north,
            area_south,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Leave gaps in place; rotation means divide by the available-day count.
    #[default]
    Skip,
    /// Insert zero-area days.
    Zero,
    /// Any calendar gap is an error.
    Error,
}

/// Applies a gap policy to date-sorted records.
pub fn fill_gaps(records: &[DailyAreaRecord], policy: GapPolicy) -> Result<Vec<DailyAreaRecord>> {
    if policy == GapPolicy::Skip {
        return Ok(records.to_vec());
    }
    let mut out = Vec::with_capacity(records.len());
    for pair in records.windows(2) {
        out.push(pair[0]);
        let mut next = pair[0].date.succ_opt().expect("date overflow");
        while next < pair[1].date {
            match policy {
                GapPolicy::Error => return Err(Error::GapFound(next)),
                _ => out.push(DailyAreaRecord {
                    date: next,
                    area_total: 0.0,
                    area_north: 0.0,
                    area_south: 0.0,
                }),
            }
            next = next.succ_opt().expect("date overflow");
        }
    }
    out.extend(records.last());
    Ok(out)
}

/// Writes `date,area_total,area_north,area_south` with ISO dates. Values use
/// shortest round-trip formatting, so reparsing is lossless.
pub fn write_canonical_csv<W: Write>(records: &[DailyAreaRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "date,area_total,area_north,area_south")?;
    for r in records {
        writeln!(
            w,
            "{:04}-{:02}-{:02},{},{},{}",
            r.date.year(),
            r.date.month(),
            r.date.day(),
            r.area_total,
            r.area_north,
            r.area_south
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn parse(text: &str) -> Result<DailyFile> {
        parse_daily_file(text.as_bytes(), &ColumnMap::default())
    }

    #[test]
    fn maps_fields() {
        let f = parse("1900 1 2 200.0 120.0 80.0\n").unwrap();
        assert_eq!(
            f.records,
            vec![DailyAreaRecord {
                date: d(1900, 1, 2),
                area_total: 200.0,
                area_north: 120.0,
                area_south: 80.0
            }]
        );
    }

    #[test]
    fn empty_file() {
        let f = parse("").unwrap();
        assert!(f.records.is_empty());
        assert_eq!(f.total_lines, 0);
    }

    #[test]
    fn shuffled_date_is_reported_at_its_line() {
        let text = "\
# Greenwich daily areas
Year Mon Day Total North South
1900 1 1 10 5 5
1900 1 2 10 5 5
1900 1 3 10 5 5
1900 1 5 10 5 5
1900 1 4 10 5 5
1900 1 6 10 5 5
1900 1 7 10 5 5
1900 1 8 10 5 5
";
        match parse(text) {
            Err(Error::NonMonotonicDate { line, date }) => {
                assert_eq!(line, 7);
                assert_eq!(date, d(1900, 1, 4));
            }
            other => panic!("expected NonMonotonicDate, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_date_rejected() {
        assert!(matches!(
            parse("1900 1 1 1 1 0\n1900 1 1 1 1 0\n"),
            Err(Error::NonMonotonicDate { line: 2, .. })
        ));
    }

    #[test]
    fn malformed_and_negative() {
        assert!(matches!(
            parse("1900 1 1 10 x 5\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse("1900 1 1 10 5\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(parse("1900 2 30 10 5 5\n"), Err(Error::MalformedLine { .. })));
        assert!(matches!(
            parse("1900 1 1 10 -5 5\n"),
            Err(Error::NegativeArea { line: 1, .. })
        ));
    }

    #[test]
    fn sentinel_days_are_missing_and_total_is_derived() {
        let map = ColumnMap {
            total_column: None,
            ..ColumnMap::default()
        };
        let f = parse_daily_file("1900 1 1 x 3.5 1.5\n1900 1 2 x -1 2\n".as_bytes(), &map).unwrap();
        assert_eq!(f.records.len(), 1);
        assert_eq!(f.records[0].area_total, 5.0);
        assert_eq!(f.missing_lines, 1);
    }

    #[test]
    fn column_map_indices_distinct() {
        let mut map = ColumnMap::default();
        map.south_column = map.north_column;
        assert!(matches!(map.validate(), Err(Error::InvalidColumnMap(_))));
    }

    #[test]
    fn gaps() {
        let recs = vec![
            DailyAreaRecord {
                date: d(1900, 1, 1),
                area_total: 3.0,
                area_north: 1.0,
                area_south: 2.0,
            },
            DailyAreaRecord {
                date: d(1900, 1, 3),
                area_total: 3.0,
                area_north: 1.0,
                area_south: 2.0,
            },
        ];
        assert_eq!(fill_gaps(&recs, GapPolicy::Skip).unwrap(), recs);
        let z = fill_gaps(&recs, GapPolicy::Zero).unwrap();
        assert_eq!(z.len(), 3);
        assert_eq!(z[1].date, d(1900, 1, 2));
        assert_eq!(z[1].area_north, 0.0);
        assert!(matches!(
            fill_gaps(&recs, GapPolicy::Error),
            Err(Error::GapFound(g)) if g == d(1900, 1, 2)
        ));

        let contiguous = z.clone();
        for p in [GapPolicy::Skip, GapPolicy::Zero, GapPolicy::Error] {
            assert_eq!(fill_gaps(&contiguous, p).unwrap(), contiguous);
        }
    }

    fn arb_records() -> impl Strategy<Value = Vec<DailyAreaRecord>> {
        prop::collection::vec((1u32..5, 0.0f64..5000.0, 0.0f64..5000.0), 0..40).prop_map(|steps| {
            let mut date = d(1874, 5, 9);
            steps
                .into_iter()
                .map(|(gap, n, s)| {
                    date = date + chrono::Days::new(gap as u64);
                    DailyAreaRecord {
                        date,
                        area_total: n + s,
                        area_north: n,
                        area_south: s,
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn canonical_csv_round_trip(recs in arb_records()) {
            let mut buf = Vec::new();
            write_canonical_csv(&recs, &mut buf).unwrap();
            let back = parse_daily_file(buf.as_slice(), &ColumnMap::canonical_csv()).unwrap();
            prop_assert_eq!(&back.records, &recs);
            prop_assert_eq!(back.records.len() + back.header_lines + back.missing_lines, back.total_lines);
        }

        #[test]
        fn no_line_silently_dropped(recs in arb_records(), headers in 0usize..4) {
            let mut text = String::new();
            for h in 0..headers {
                text.push_str(&format!("# header {h}\n"));
            }
            for r in &recs {
                text.push_str(&format!("{} {} {} {} {} {}\n",
                    r.date.year(), r.date.month(), r.date.day(), r.area_total, r.area_north, r.area_south));
            }
            let f = parse(&text).unwrap();
            prop_assert_eq!(f.records.len() + f.header_lines + f.missing_lines, text.lines().count());
            prop_assert_eq!(f.records.len(), recs.len());
        }
    }
}

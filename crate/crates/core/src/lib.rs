//! Sunspot-area fluctuation analysis.
//!
//! The chain runs from daily hemispheric sunspot areas to Carrington-rotation
//! means, 13-rotation fluctuations and their positive/negative parts, then
//! to per-cycle autocorrelation and Morlet wavelet periodicity detection, and
//! finally to regressions testing whether the longer quasi-periods are integer
//! multiples of the ~10-rotation one.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod acf;
pub mod calendar;
pub mod error;
pub mod exec;
pub mod fluct;
pub mod harmonics;
pub mod ingest;
pub mod output;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod wavelet;

pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hemisphere {
    North,
    South,
}

impl Hemisphere {
    pub const ALL: [Hemisphere; 2] = [Hemisphere::North, Hemisphere::South];

    pub fn as_str(self) -> &'static str {
        match self {
            Hemisphere::North => "north",
            Hemisphere::South => "south",
        }
    }
}

impl fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which fluctuation series is analysed: the full series or one signed part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Original,
    Positive,
    Negative,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 3] = [SeriesKind::Original, SeriesKind::Positive, SeriesKind::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Original => "original",
            SeriesKind::Positive => "positive",
            SeriesKind::Negative => "negative",
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised anywhere in the analysis chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed data line: {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: date {date} does not follow the previous record")]
    NonMonotonicDate { line: usize, date: NaiveDate },
    #[error("line {line}: negative area {value}")]
    NegativeArea { line: usize, value: f64 },
    #[error("calendar gap: first missing date is {0}")]
    GapFound(NaiveDate),
    #[error("invalid column map: {0}")]
    InvalidColumnMap(String),

    #[error("date {0} precedes the Carrington ephemeris epoch")]
    DateBeforeEpoch(String),
    #[error("rotation {rotation} (mid-date {mid_date}) is not covered by the cycle table")]
    UncoveredRotation { rotation: i64, mid_date: NaiveDate },
    #[error("invalid cycle table: {0}")]
    InvalidCycleTable(String),
    #[error("invalid ephemeris: {0}")]
    InvalidEphemeris(String),

    #[error("rotation {0} has no contributing days")]
    EmptyRotation(i64),
    #[error("series too short: need at least {needed}, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("series is constant")]
    ConstantSeries,
    #[error("degenerate sample: zero spread")]
    DegenerateSample,
    #[error("sample too small: need at least {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },
    #[error("sample too large: at most {max}, got {got}")]
    SampleTooLarge { max: usize, got: usize },
    #[error("all abscissae are equal; regression slope undefined")]
    DegenerateAbscissae,
    #[error("cycle {cycle}: segment of {len} rotations is too short (need {needed})")]
    SegmentTooShort { cycle: u32, len: usize, needed: usize },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("{module}: {source}")]
    InModule {
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse error classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Degenerate,
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn in_module(self, module: &'static str) -> Self {
        Error::InModule {
            module,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InModule { source, .. } => source.class(),
            InvalidColumnMap(_) | InvalidCycleTable(_) | InvalidEphemeris(_) | InvalidSpec(_) | Config(_) | Toml(_) => {
                ErrorClass::Config
            }
            MalformedLine { .. }
            | NonMonotonicDate { .. }
            | NegativeArea { .. }
            | GapFound(_)
            | DateBeforeEpoch(_)
            | UncoveredRotation { .. }
            | EmptyRotation(_)
            | Io { .. }
            | Csv(_)
            | Json(_) => ErrorClass::Data,
            SeriesTooShort { .. }
            | ConstantSeries
            | DegenerateSample
            | SampleTooSmall { .. }
            | SampleTooLarge { .. }
            | DegenerateAbscissae
            | SegmentTooShort { .. } => ErrorClass::Degenerate,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

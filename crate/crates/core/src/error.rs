use std::path::PathBuf;

use thiserror::Error;

use crate::assembly::Column;

/// Failures while reading or validating input data files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed timestamp '{0}', expected YYYY-MM-DDTHH:00:00Z")]
    BadTimestamp(String),
    #[error("unknown forecast source '{0}' (expected aro, det or ens_mu)")]
    UnknownSource(String),
    #[error("unknown station archetype '{0}'")]
    UnknownArchetype(String),
    #[error("station id must be nonempty")]
    EmptyStationId,
    #[error("duplicate station id '{0}'")]
    DuplicateStation(String),
    #[error("temperature {0} degC outside plausible range [-90, 60]")]
    Implausible(f64),
    #[error("lead {lead_h} h exceeds {source_name} horizon of {horizon_h} h")]
    BeyondHorizon {
        source_name: &'static str,
        lead_h: u32,
        horizon_h: u32,
    },
    #[error("init hour {found:02} differs from the archive init hour {expected:02}")]
    InitHour { expected: u32, found: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: header must be '{expected}'")]
    Header {
        path: PathBuf,
        expected: &'static str,
    },
}

/// Failures building a design matrix for one (station, lead, mode) cell.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("lead {0} h is not on the lead-time grid")]
    LeadNotInGrid(u32),
    #[error("no init dates supplied")]
    NoInits,
    #[error("station {station}, lead {lead_h} h, mode {mode}: every row has a missing value")]
    EmptyDesign {
        station: String,
        lead_h: u32,
        mode: String,
    },
    #[error("station {station}, lead {lead_h} h: source {source_name} is beyond its horizon")]
    NoPredictor {
        station: String,
        lead_h: u32,
        source_name: &'static str,
    },
    #[error("station {station}, lead {lead_h} h, mode {mode}: {rows} complete rows, need {min}")]
    TooFewRows {
        station: String,
        lead_h: u32,
        mode: String,
        rows: usize,
        min: usize,
    },
}

/// Failures fitting or applying a Gaussian regression.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("{rows} rows cannot identify {cols} coefficients")]
    TooFewRows { rows: usize, cols: usize },
    #[error("design columns do not match the fitted coefficients")]
    ColumnMismatch,
    #[error("predictor '{0}' missing from row")]
    MissingPredictor(Column),
    #[error("non-finite value in design or target")]
    NonFinite,
}

/// Failures in scoring and cross-validation.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("length mismatch: {0} predictions vs {1} observations")]
    LengthMismatch(usize, usize),
    #[error("cannot score an empty sample")]
    Empty,
    #[error("reference MAE must be positive, got {0}")]
    ZeroReference(f64),
    #[error("{found} distinct years available, {k} folds requested")]
    TooFewYears { found: usize, k: usize },
    #[error("fold count must be at least 1")]
    ZeroFolds,
    #[error("date ranges overlap or leave init {0} unassigned")]
    BadRanges(String),
    #[error("station {station}, mode {mode}, lead {lead_h} h, fold {fold}: {source}")]
    Assembly {
        station: String,
        mode: String,
        lead_h: u32,
        fold: usize,
        #[source]
        source: Box<AssemblyError>,
    },
    #[error("station {station}, mode {mode}, lead {lead_h} h, fold {fold}: {source}")]
    Fit {
        station: String,
        mode: String,
        lead_h: u32,
        fold: usize,
        #[source]
        source: FitError,
    },
    #[error("skill reference mode '{0}' was not scored")]
    UnknownReference(String),
}

/// Invalid synthetic-world parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("n_days = {0}; at least 400 days are needed for year-blocked validation")]
    TooFewDays(u32),
}

/// Crate-level error with a process exit-code mapping.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("station {station}, mode {mode}, lead {lead_h} h: {source}")]
    CellFit {
        station: String,
        mode: String,
        lead_h: u32,
        #[source]
        source: FitError,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// 2 for data and configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Assembly(_) | Error::Fit(_) | Error::CellFit { .. } => 3,
            Error::Verify(VerifyError::Assembly { .. } | VerifyError::Fit { .. }) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

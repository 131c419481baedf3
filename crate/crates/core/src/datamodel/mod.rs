//! Time-indexed containers, the lead-time grid, and station metadata.
//!
//! Everything downstream is keyed on the postprocessing clock: an init time
//! (12 UTC by default) and a lead in whole hours. Missing values are absent
//! map entries, never sentinel numbers.

mod grid;
pub mod ingest;
mod series;
mod time;

pub use grid::{GridParams, LeadTimeGrid};
pub use series::{
    is_plausible, Archetype, Dataset, ForecastArchive, Horizons, InitOffset, ObservationSeries,
    Source, StationData, StationMeta, PLAUSIBLE_RANGE,
};
pub use time::{day_of_year, valid_time, Timestamp};

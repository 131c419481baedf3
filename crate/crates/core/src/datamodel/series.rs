use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::time::Timestamp;
use crate::error::IngestError;

/// Plausible near-surface temperature range in degC.
pub const PLAUSIBLE_RANGE: (f64, f64) = (-90.0, 60.0);

pub fn is_plausible(temp_c: f64) -> bool {
    temp_c.is_finite() && (PLAUSIBLE_RANGE.0..=PLAUSIBLE_RANGE.1).contains(&temp_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Archetype {
    Plain,
    Valley,
    Mountain,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Plain, Archetype::Valley, Archetype::Mountain];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Plain => "plain",
            Archetype::Valley => "valley",
            Archetype::Mountain => "mountain",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| IngestError::UnknownArchetype(s.to_string()))
    }
}

/// Station identity. The archetype is unknown for ingested CSV data unless configured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationMeta {
    pub id: String,
    pub archetype: Option<Archetype>,
}

impl StationMeta {
    pub fn new(id: impl Into<String>, archetype: Option<Archetype>) -> Result<Self, IngestError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(IngestError::EmptyStationId);
        }
        Ok(StationMeta { id, archetype })
    }
}

/// NWP forecast sources, in source-name order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "aro")]
    Aro,
    #[serde(rename = "det")]
    Det,
    #[serde(rename = "ens_mu")]
    EnsMu,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Aro, Source::Det, Source::EnsMu];

    pub fn name(self) -> &'static str {
        match self {
            Source::Aro => "aro",
            Source::Det => "det",
            Source::EnsMu => "ens_mu",
        }
    }

    /// Spelling used in mode names and fit-CSV column headers.
    pub fn short(self) -> &'static str {
        match self {
            Source::Aro => "aro",
            Source::Det => "det",
            Source::EnsMu => "ensmu",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn default_horizon_h(self) -> u32 {
        match self {
            Source::Aro => 36,
            Source::Det => 84,
            Source::EnsMu => 132,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Source {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.name() == s)
            .ok_or_else(|| IngestError::UnknownSource(s.to_string()))
    }
}

/// Per-source lead cutoffs in postprocessing-lead hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Horizons {
    pub aro: u32,
    pub det: u32,
    pub ens_mu: u32,
}

impl Horizons {
    pub fn get(&self, source: Source) -> u32 {
        match source {
            Source::Aro => self.aro,
            Source::Det => self.det,
            Source::EnsMu => self.ens_mu,
        }
    }
}

impl Default for Horizons {
    fn default() -> Self {
        Horizons {
            aro: Source::Aro.default_horizon_h(),
            det: Source::Det.default_horizon_h(),
            ens_mu: Source::EnsMu.default_horizon_h(),
        }
    }
}

/// Hourly observed temperatures at one station.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub station: String,
    values: BTreeMap<Timestamp, f64>,
}

impl ObservationSeries {
    pub fn new(station: impl Into<String>) -> Self {
        ObservationSeries {
            station: station.into(),
            values: BTreeMap::new(),
        }
    }

    /// Inserts a value after the plausibility screen. A later value at the same time replaces the earlier one.
    pub fn insert(&mut self, t: Timestamp, temp_c: f64) -> Result<(), IngestError> {
        if !is_plausible(temp_c) {
            return Err(IngestError::Implausible(temp_c));
        }
        self.values.insert(t, temp_c);
        Ok(())
    }

    pub fn get(&self, t: Timestamp) -> Option<f64> {
        self.values.get(&t).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Timestamp, f64)> + '_ {
        self.values.iter().map(|(t, v)| (*t, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Forecasts of one source at one station, keyed by (postprocessing init, postprocessing lead).
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastArchive {
    pub source: Source,
    pub horizon_h: u32,
    pub init_hour: u32,
    values: BTreeMap<(Timestamp, u32), f64>,
}

impl ForecastArchive {
    pub fn new(source: Source, horizon_h: u32, init_hour: u32) -> Self {
        ForecastArchive {
            source,
            horizon_h,
            init_hour,
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, init: Timestamp, lead_h: u32, temp_c: f64) -> Result<(), IngestError> {
        if lead_h > self.horizon_h {
            return Err(IngestError::BeyondHorizon {
                source_name: self.source.name(),
                lead_h,
                horizon_h: self.horizon_h,
            });
        }
        if init.hour() != self.init_hour {
            return Err(IngestError::InitHour {
                expected: self.init_hour,
                found: init.hour(),
            });
        }
        if !is_plausible(temp_c) {
            return Err(IngestError::Implausible(temp_c));
        }
        self.values.insert((init, lead_h), temp_c);
        Ok(())
    }

    pub fn get(&self, init: Timestamp, lead_h: u32) -> Option<f64> {
        self.values.get(&(init, lead_h)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Timestamp, u32), f64)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_stored_lead(&self) -> Option<u32> {
        self.values.keys().map(|(_, l)| *l).max()
    }
}

/// Maps raw NWP (init, lead) keys onto the postprocessing clock.
///
/// NWP runs start `init_offset_h` hours before the postprocessing init, so raw lead `L`
/// becomes postprocessing lead `L - init_offset_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitOffset {
    pub init_offset_h: u32,
}

impl Default for InitOffset {
    fn default() -> Self {
        InitOffset { init_offset_h: 12 }
    }
}

impl InitOffset {
    /// Returns `None` for raw leads that fall before the postprocessing init.
    pub fn to_postprocessing(
        &self,
        nwp_init: Timestamp,
        raw_lead_h: u32,
    ) -> Option<(Timestamp, u32)> {
        let lead = raw_lead_h.checked_sub(self.init_offset_h)?;
        Some((nwp_init.add_hours(self.init_offset_h), lead))
    }
}

/// Everything known about one station: observations plus one archive per source.
#[derive(Debug, Clone, PartialEq)]
pub struct StationData {
    pub meta: StationMeta,
    pub obs: ObservationSeries,
    pub archives: [ForecastArchive; 3],
}

impl StationData {
    pub fn empty(meta: StationMeta, horizons: Horizons, init_hour: u32) -> Self {
        let archives = Source::ALL.map(|s| ForecastArchive::new(s, horizons.get(s), init_hour));
        let obs = ObservationSeries::new(meta.id.clone());
        StationData {
            meta,
            obs,
            archives,
        }
    }

    pub fn archive(&self, source: Source) -> &ForecastArchive {
        &self.archives[source.index()]
    }

    pub fn archive_mut(&mut self, source: Source) -> &mut ForecastArchive {
        &mut self.archives[source.index()]
    }

    pub fn horizons(&self) -> Horizons {
        Horizons {
            aro: self.archive(Source::Aro).horizon_h,
            det: self.archive(Source::Det).horizon_h,
            ens_mu: self.archive(Source::EnsMu).horizon_h,
        }
    }

    pub fn init_hour(&self) -> u32 {
        self.archives[0].init_hour
    }

    /// All distinct init times present in any archive, ascending.
    pub fn inits(&self) -> Vec<Timestamp> {
        let mut inits: Vec<Timestamp> = self
            .archives
            .iter()
            .flat_map(|a| a.iter().map(|((init, _), _)| init))
            .collect();
        inits.sort_unstable();
        inits.dedup();
        inits
    }
}

/// A set of stations with unique ids, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    stations: Vec<StationData>,
}

impl Dataset {
    pub fn new(stations: Vec<StationData>) -> Result<Self, IngestError> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &stations {
            if !seen.insert(s.meta.id.clone()) {
                return Err(IngestError::DuplicateStation(s.meta.id.clone()));
            }
        }
        Ok(Dataset { stations })
    }

    pub fn stations(&self) -> &[StationData] {
        &self.stations
    }

    pub fn station(&self, id: &str) -> Option<&StationData> {
        self.stations.iter().find(|s| s.meta.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn init() -> Timestamp {
        Timestamp::from_ymdh(2022, 7, 1, 12).unwrap()
    }

    #[test]
    fn observation_plausibility_screen() {
        let mut obs = ObservationSeries::new("vie");
        assert!(obs.insert(init(), 18.2).is_ok());
        assert!(matches!(
            obs.insert(init(), 61.0),
            Err(IngestError::Implausible(_))
        ));
        assert!(obs.insert(init(), -90.0).is_ok());
        assert!(obs.insert(init(), f64::NAN).is_err());
        assert_eq!(obs.get(init()), Some(-90.0));
    }

    #[test]
    fn archive_rejects_beyond_horizon_and_foreign_init_hour() {
        let mut a = ForecastArchive::new(Source::Aro, 36, 12);
        assert!(a.insert(init(), 36, 10.0).is_ok());
        assert!(matches!(
            a.insert(init(), 37, 10.0),
            Err(IngestError::BeyondHorizon { .. })
        ));
        let midnight = Timestamp::from_ymdh(2022, 7, 1, 0).unwrap();
        assert!(matches!(
            a.insert(midnight, 1, 10.0),
            Err(IngestError::InitHour { .. })
        ));
        assert_eq!(a.max_stored_lead(), Some(36));
    }

    #[test]
    fn init_offset_rebases_nwp_leads() {
        let nwp_init = Timestamp::from_ymdh(2022, 7, 1, 0).unwrap();
        let off = InitOffset::default();
        assert_eq!(off.to_postprocessing(nwp_init, 48), Some((init(), 36)));
        assert_eq!(off.to_postprocessing(nwp_init, 12), Some((init(), 0)));
        assert_eq!(off.to_postprocessing(nwp_init, 11), None);
    }

    #[test]
    fn station_ids_unique_and_nonempty() {
        assert!(StationMeta::new("  ", None).is_err());
        let a = StationData::empty(
            StationMeta::new("a", None).unwrap(),
            Horizons::default(),
            12,
        );
        assert!(matches!(
            Dataset::new(vec![a.clone(), a]),
            Err(IngestError::DuplicateStation(_))
        ));
    }

    #[test]
    fn source_names_roundtrip() {
        for s in Source::ALL {
            assert_eq!(s.name().parse::<Source>().unwrap(), s);
        }
        assert!("ecmwf".parse::<Source>().is_err());
    }
}

//! CSV reading and writing for observations and forecasts.
//!
//! Observations: `station,valid_time_utc,temp_c`.
//! Forecasts: `station,source,init_time_utc,lead_h,temp_c`, with `lead_h` on the
//! postprocessing clock. Rows that fail validation are skipped and reported with
//! their line number; a malformed header aborts the read.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::series::{Archetype, Dataset, Horizons, InitOffset, Source, StationData, StationMeta};
use super::time::Timestamp;
use crate::error::IngestError;

pub const OBS_HEADER: &str = "station,valid_time_utc,temp_c";
pub const FORECAST_HEADER: &str = "station,source,init_time_utc,lead_h,temp_c";

/// Outcome counts of one ingestion pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    /// `line N: reason` for every rejected row.
    pub diagnostics: Vec<String>,
}

impl IngestReport {
    fn reject(&mut self, line: u64, reason: impl std::fmt::Display) {
        self.rejected += 1;
        self.diagnostics.push(format!("line {line}: {reason}"));
    }

    fn merge(&mut self, other: IngestReport) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.diagnostics.extend(other.diagnostics);
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub horizons: Horizons,
    pub init_hour: u32,
    /// Optional archetype labels for station ids.
    pub archetypes: BTreeMap<String, Archetype>,
    /// When set, forecast rows carry raw NWP init times and leads, shifted onto the
    /// postprocessing clock on the way in.
    pub nwp_offset: Option<InitOffset>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            horizons: Horizons::default(),
            init_hour: 12,
            archetypes: BTreeMap::new(),
            nwp_offset: None,
        }
    }
}

/// Stations accumulated during ingestion, in order of first appearance.
struct Builder<'a> {
    opts: &'a IngestOptions,
    order: Vec<String>,
    stations: BTreeMap<String, StationData>,
}

impl<'a> Builder<'a> {
    fn new(opts: &'a IngestOptions) -> Self {
        Builder {
            opts,
            order: Vec::new(),
            stations: BTreeMap::new(),
        }
    }

    fn station(&mut self, id: &str) -> Result<&mut StationData, IngestError> {
        if !self.stations.contains_key(id) {
            let meta = StationMeta::new(id, self.opts.archetypes.get(id).copied())?;
            self.order.push(id.to_string());
            self.stations.insert(
                id.to_string(),
                StationData::empty(meta, self.opts.horizons, self.opts.init_hour),
            );
        }
        Ok(self.stations.get_mut(id).expect("inserted above"))
    }

    fn finish(mut self) -> Dataset {
        let stations = self
            .order
            .iter()
            .map(|id| self.stations.remove(id).expect("ordered id present"))
            .collect();
        Dataset::new(stations).expect("ids are unique by construction")
    }
}

fn check_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    path: &Path,
    expected: &'static str,
) -> Result<(), IngestError> {
    let headers = rdr.headers().map_err(|source| IngestError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got.join(",") != expected {
        return Err(IngestError::Header {
            path: path.to_path_buf(),
            expected,
        });
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_temp(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("bad temperature '{s}'"))
}

fn read_obs_into<R: Read>(
    input: R,
    path: &Path,
    builder: &mut Builder<'_>,
) -> Result<IngestReport, IngestError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, path, OBS_HEADER)?;
    let mut report = IngestReport::default();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.reject(line, e);
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 3 {
            report.reject(line, format!("expected 3 fields, found {}", rec.len()));
            continue;
        }
        let row = (|| -> Result<(), String> {
            let t: Timestamp = rec[1].parse().map_err(|e: IngestError| e.to_string())?;
            let v = parse_temp(&rec[2])?;
            let st = builder.station(&rec[0]).map_err(|e| e.to_string())?;
            st.obs.insert(t, v).map_err(|e| e.to_string())
        })();
        match row {
            Ok(()) => report.accepted += 1,
            Err(reason) => report.reject(line, reason),
        }
    }
    Ok(report)
}

fn read_forecasts_into<R: Read>(
    input: R,
    path: &Path,
    builder: &mut Builder<'_>,
) -> Result<IngestReport, IngestError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, path, FORECAST_HEADER)?;
    let mut report = IngestReport::default();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.reject(line, e);
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 5 {
            report.reject(line, format!("expected 5 fields, found {}", rec.len()));
            continue;
        }
        let row = (|| -> Result<(), String> {
            let source: Source = rec[1].parse().map_err(|e: IngestError| e.to_string())?;
            let init: Timestamp = rec[2].parse().map_err(|e: IngestError| e.to_string())?;
            let lead: u32 = rec[3]
                .parse()
                .map_err(|_| format!("bad lead_h '{}'", &rec[3]))?;
            let v = parse_temp(&rec[4])?;
            let (init, lead) = match builder.opts.nwp_offset {
                Some(off) => off
                    .to_postprocessing(init, lead)
                    .ok_or_else(|| format!("raw lead {lead} h precedes the postprocessing init"))?,
                None => (init, lead),
            };
            let st = builder.station(&rec[0]).map_err(|e| e.to_string())?;
            st.archive_mut(source)
                .insert(init, lead, v)
                .map_err(|e| e.to_string())
        })();
        match row {
            Ok(()) => report.accepted += 1,
            Err(reason) => report.reject(line, reason),
        }
    }
    Ok(report)
}

/// Reads observation and forecast CSV streams into a dataset.
pub fn read_dataset<R1: Read, R2: Read>(
    obs: R1,
    obs_path: &Path,
    forecasts: R2,
    forecast_path: &Path,
    opts: &IngestOptions,
) -> Result<(Dataset, IngestReport, IngestReport), IngestError> {
    let mut builder = Builder::new(opts);
    let obs_report = read_obs_into(obs, obs_path, &mut builder)?;
    let fc_report = read_forecasts_into(forecasts, forecast_path, &mut builder)?;
    Ok((builder.finish(), obs_report, fc_report))
}

/// Reads observation and forecast CSV files into a dataset.
pub fn load_dataset(
    obs_path: &Path,
    forecast_path: &Path,
    opts: &IngestOptions,
) -> Result<(Dataset, IngestReport), IngestError> {
    let open = |p: &Path| {
        std::fs::File::open(p).map_err(|source| IngestError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let (ds, mut report, fc) = read_dataset(
        open(obs_path)?,
        obs_path,
        open(forecast_path)?,
        forecast_path,
        opts,
    )?;
    report.merge(fc);
    Ok((ds, report))
}

/// Writes all observations, stations in dataset order, times ascending.
pub fn write_observations<W: Write>(out: W, ds: &Dataset) -> csv::Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OBS_HEADER.split(','))?;
    let mut n = 0;
    for st in ds.stations() {
        for (t, v) in st.obs.iter() {
            w.write_record([st.meta.id.as_str(), &t.to_string(), &v.to_string()])?;
            n += 1;
        }
    }
    w.flush()?;
    Ok(n)
}

/// Writes all forecasts, stations in dataset order, then source, init and lead ascending.
pub fn write_forecasts<W: Write>(out: W, ds: &Dataset) -> csv::Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FORECAST_HEADER.split(','))?;
    let mut n = 0;
    for st in ds.stations() {
        for archive in &st.archives {
            for ((init, lead), v) in archive.iter() {
                w.write_record([
                    st.meta.id.as_str(),
                    archive.source.name(),
                    &init.to_string(),
                    &lead.to_string(),
                    &v.to_string(),
                ])?;
                n += 1;
            }
        }
    }
    w.flush()?;
    Ok(n)
}

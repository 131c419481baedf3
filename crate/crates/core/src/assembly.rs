//! Per-(station, lead) design matrices under the different predictor modes.
//!
//! In persistence mode every lead carries the same nine columns: the +0 h
//! observation, and each model read at `min(lead, horizon)` so that an expired
//! model stays in the regression as its last available forecast. Reference mode
//! drops a model once its horizon is passed and has no observation column.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datamodel::{
    day_of_year, valid_time, Horizons, LeadTimeGrid, ObservationSeries, Source, StationData,
    Timestamp,
};
use crate::error::AssemblyError;

/// Regression columns in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Column {
    Intercept,
    Pers,
    Aro,
    Det,
    EnsMu,
    Sin1,
    Cos1,
    Sin2,
    Cos2,
}

impl Column {
    pub const ALL: [Column; 9] = [
        Column::Intercept,
        Column::Pers,
        Column::Aro,
        Column::Det,
        Column::EnsMu,
        Column::Sin1,
        Column::Cos1,
        Column::Sin2,
        Column::Cos2,
    ];
    pub const HARMONICS: [Column; 4] = [Column::Sin1, Column::Cos1, Column::Sin2, Column::Cos2];

    pub fn name(self) -> &'static str {
        match self {
            Column::Intercept => "intercept",
            Column::Pers => "pers",
            Column::Aro => "aro",
            Column::Det => "det",
            Column::EnsMu => "ens_mu",
            Column::Sin1 => "sin1",
            Column::Cos1 => "cos1",
            Column::Sin2 => "sin2",
            Column::Cos2 => "cos2",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_source(source: Source) -> Column {
        match source {
            Source::Aro => Column::Aro,
            Source::Det => Column::Det,
            Source::EnsMu => Column::EnsMu,
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which predictors enter the regression.
///
/// `ReferenceWithout` is the reference set with one source removed at every lead;
/// the blending baselines use it as the "without local model" forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredictorMode {
    Persistence,
    Reference,
    Single(Source),
    ReferenceWithout(Source),
}

impl PredictorMode {
    pub fn name(self) -> String {
        match self {
            PredictorMode::Persistence => "persistence".into(),
            PredictorMode::Reference => "reference".into(),
            PredictorMode::Single(s) => format!("single_{}", s.short()),
            PredictorMode::ReferenceWithout(s) => format!("reference_without_{}", s.short()),
        }
    }

    /// The concrete predictor set at `lead_h`.
    pub fn plan(
        self,
        station: &str,
        lead_h: u32,
        horizons: Horizons,
        opts: &AssemblyOptions,
    ) -> Result<ColumnPlan, AssemblyError> {
        let live = |s: Source| horizons.get(s) >= lead_h;
        let plan = match self {
            PredictorMode::Persistence => ColumnPlan {
                pers: opts.pers_max_lead_h.is_none_or(|max| lead_h <= max),
                models: Source::ALL
                    .iter()
                    .map(|&s| (s, effective_lead(lead_h, horizons.get(s))))
                    .collect(),
            },
            PredictorMode::Reference => ColumnPlan {
                pers: false,
                models: Source::ALL
                    .iter()
                    .filter(|&&s| live(s))
                    .map(|&s| (s, lead_h))
                    .collect(),
            },
            PredictorMode::ReferenceWithout(excluded) => ColumnPlan {
                pers: false,
                models: Source::ALL
                    .iter()
                    .filter(|&&s| s != excluded && live(s))
                    .map(|&s| (s, lead_h))
                    .collect(),
            },
            PredictorMode::Single(s) => {
                if !live(s) {
                    return Err(AssemblyError::NoPredictor {
                        station: station.to_string(),
                        lead_h,
                        source_name: s.name(),
                    });
                }
                ColumnPlan {
                    pers: false,
                    models: vec![(s, lead_h)],
                }
            }
        };
        Ok(plan)
    }
}

impl fmt::Display for PredictorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PredictorMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut modes = vec![PredictorMode::Persistence, PredictorMode::Reference];
        for src in Source::ALL {
            modes.push(PredictorMode::Single(src));
            modes.push(PredictorMode::ReferenceWithout(src));
        }
        modes
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown predictor mode '{s}'"))
    }
}

/// Resolved predictors for one lead: whether the +0 h observation is used, and
/// the lead at which each included source is read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPlan {
    pub pers: bool,
    pub models: Vec<(Source, u32)>,
}

impl ColumnPlan {
    pub fn columns(&self) -> Vec<Column> {
        let mut cols = vec![Column::Intercept];
        if self.pers {
            cols.push(Column::Pers);
        }
        cols.extend(self.models.iter().map(|(s, _)| Column::from_source(*s)));
        cols.extend(Column::HARMONICS);
        cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyOptions {
    /// Complete rows required for a design to be usable.
    pub min_rows: usize,
    /// Drop the observation column at leads beyond this value. `None` keeps it everywhere.
    pub pers_max_lead_h: Option<u32>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            min_rows: 100,
            pers_max_lead_h: None,
        }
    }
}

/// `(sin 2πd/365, cos 2πd/365, sin 4πd/365, cos 4πd/365)`.
///
/// The divisor is 365 even in leap years, so day 366 runs slightly past one period.
pub fn seasonal_basis(doy: u32) -> Result<[f64; 4], String> {
    if !(1..=366).contains(&doy) {
        return Err(format!("day of year {doy} outside 1..=366"));
    }
    let x = 2.0 * PI * f64::from(doy) / 365.0;
    Ok([x.sin(), x.cos(), (2.0 * x).sin(), (2.0 * x).cos()])
}

/// Lead at which a source is read: the requested lead, frozen at the horizon.
pub fn effective_lead(requested_lead_h: u32, horizon_h: u32) -> u32 {
    requested_lead_h.min(horizon_h)
}

/// Observed value at the init time itself.
pub fn observation_persistence(init: Timestamp, obs: &ObservationSeries) -> Option<f64> {
    obs.get(valid_time(init, LeadTimeGrid::PERSISTENCE_ANCHOR_H))
}

/// Predictor values for one case, indexed by [`Column`]. Absent columns are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictorRow {
    values: [Option<f64>; 9],
}

impl PredictorRow {
    pub fn get(&self, c: Column) -> Option<f64> {
        self.values[c.index()]
    }

    pub fn set(&mut self, c: Column, v: f64) -> &mut Self {
        self.values[c.index()] = Some(v);
        self
    }

    pub fn with(mut self, c: Column, v: f64) -> Self {
        self.set(c, v);
        self
    }
}

/// Builds the predictor row for one init, or `None` if any planned value is missing.
pub fn predictor_row(
    station: &StationData,
    init: Timestamp,
    lead_h: u32,
    plan: &ColumnPlan,
) -> Option<PredictorRow> {
    let mut row = PredictorRow::default();
    row.set(Column::Intercept, 1.0);
    if plan.pers {
        row.set(Column::Pers, observation_persistence(init, &station.obs)?);
    }
    for &(source, read_lead) in &plan.models {
        let v = station.archive(source).get(init, read_lead)?;
        row.set(Column::from_source(source), v);
    }
    let doy = day_of_year(valid_time(init, lead_h));
    let basis = seasonal_basis(doy).expect("calendar day of year is in range");
    for (c, v) in Column::HARMONICS.into_iter().zip(basis) {
        row.set(c, v);
    }
    Some(row)
}

/// Named predictor columns and target for one (station, lead, mode) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub station: String,
    pub mode: PredictorMode,
    pub lead_h: u32,
    pub columns: Vec<Column>,
    /// Column-major values, `data[j][i]` for column `j`, row `i`.
    pub data: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    /// Init time of each row.
    pub inits: Vec<Timestamp>,
}

impl DesignMatrix {
    /// Builds a design from raw parts, checking shape and the intercept column.
    pub fn from_columns(
        columns: Vec<Column>,
        data: Vec<Vec<f64>>,
        target: Vec<f64>,
    ) -> Result<Self, String> {
        if columns.len() != data.len() {
            return Err("one data vector per column required".into());
        }
        if target.is_empty() || data.iter().any(|c| c.len() != target.len()) {
            return Err("columns and target must share a nonzero length".into());
        }
        match columns.iter().position(|&c| c == Column::Intercept) {
            Some(j) if data[j].iter().all(|&v| v == 1.0) => {}
            _ => return Err("an all-ones intercept column is required".into()),
        }
        let n = target.len();
        Ok(DesignMatrix {
            station: String::new(),
            mode: PredictorMode::Reference,
            lead_h: 0,
            columns,
            data,
            target,
            inits: (0..n as i64).map(Timestamp::from_epoch_hours).collect(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, c: Column) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|&x| x == c)
            .map(|j| self.data[j].as_slice())
    }

    pub fn row(&self, i: usize) -> PredictorRow {
        let mut row = PredictorRow::default();
        for (j, &c) in self.columns.iter().enumerate() {
            row.set(c, self.data[j][i]);
        }
        row
    }

    /// Keeps only rows whose init is accepted by `keep`.
    pub fn filter_rows(&self, mut keep: impl FnMut(Timestamp) -> bool) -> DesignMatrix {
        let idx: Vec<usize> = (0..self.n_rows())
            .filter(|&i| keep(self.inits[i]))
            .collect();
        DesignMatrix {
            station: self.station.clone(),
            mode: self.mode,
            lead_h: self.lead_h,
            columns: self.columns.clone(),
            data: self
                .data
                .iter()
                .map(|col| idx.iter().map(|&i| col[i]).collect())
                .collect(),
            target: idx.iter().map(|&i| self.target[i]).collect(),
            inits: idx.iter().map(|&i| self.inits[i]).collect(),
        }
    }

    /// Debug dump: one row per init, columns in canonical order, target last.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["init_time_utc".to_string()];
        header.extend(self.columns.iter().map(|c| c.name().to_string()));
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![self.inits[i].to_string()];
            rec.extend(self.data.iter().map(|col| col[i].to_string()));
            rec.push(self.target[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Assembles the design for `station` at `lead_h` over the given init times.
///
/// Rows with a missing target or any missing planned predictor are dropped.
pub fn assemble(
    station: &StationData,
    lead_h: u32,
    mode: PredictorMode,
    grid: &LeadTimeGrid,
    inits: &[Timestamp],
    opts: &AssemblyOptions,
) -> Result<DesignMatrix, AssemblyError> {
    if !grid.contains(lead_h) {
        return Err(AssemblyError::LeadNotInGrid(lead_h));
    }
    if inits.is_empty() {
        return Err(AssemblyError::NoInits);
    }
    let id = station.meta.id.as_str();
    let plan = mode.plan(id, lead_h, station.horizons(), opts)?;
    let columns = plan.columns();
    let mut data = vec![Vec::with_capacity(inits.len()); columns.len()];
    let mut target = Vec::with_capacity(inits.len());
    let mut kept = Vec::with_capacity(inits.len());

    for &init in inits {
        let Some(y) = station.obs.get(valid_time(init, lead_h)) else {
            continue;
        };
        let Some(row) = predictor_row(station, init, lead_h, &plan) else {
            continue;
        };
        for (j, &c) in columns.iter().enumerate() {
            data[j].push(row.get(c).expect("planned column present"));
        }
        target.push(y);
        kept.push(init);
    }

    if target.is_empty() {
        return Err(AssemblyError::EmptyDesign {
            station: id.to_string(),
            lead_h,
            mode: mode.name(),
        });
    }
    if target.len() < opts.min_rows {
        return Err(AssemblyError::TooFewRows {
            station: id.to_string(),
            lead_h,
            mode: mode.name(),
            rows: target.len(),
            min: opts.min_rows,
        });
    }
    Ok(DesignMatrix {
        station: id.to_string(),
        mode,
        lead_h,
        columns,
        data,
        target,
        inits: kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::StationMeta;
    use proptest::prelude::*;

    fn init(day: u32) -> Timestamp {
        Timestamp::from_ymdh(2022, 3, day, 12).unwrap()
    }

    /// Two inits far enough apart that their valid times never overlap; each source value encodes (source, init day, lead) so reads can be traced.
    fn toy_station() -> StationData {
        let meta = StationMeta::new("ibk", None).unwrap();
        let mut st = StationData::empty(meta, Horizons::default(), 12);
        for day in [1u32, 11] {
            let i = init(day);
            st.obs.insert(i, 5.0 + f64::from(day)).unwrap();
            for lead in 1..=132 {
                st.obs
                    .insert(valid_time(i, lead), f64::from(lead) / 10.0)
                    .unwrap();
            }
            for (k, src) in Source::ALL.into_iter().enumerate() {
                for lead in 1..=src.default_horizon_h() {
                    let v = 10.0 * (k as f64 + 1.0) + f64::from(day) + f64::from(lead) / 1000.0;
                    st.archive_mut(src).insert(i, lead, v).unwrap();
                }
            }
        }
        st
    }

    fn opts() -> AssemblyOptions {
        AssemblyOptions {
            min_rows: 1,
            pers_max_lead_h: None,
        }
    }

    fn build(
        st: &StationData,
        lead: u32,
        mode: PredictorMode,
    ) -> Result<DesignMatrix, AssemblyError> {
        assemble(
            st,
            lead,
            mode,
            &LeadTimeGrid::default(),
            &[init(1), init(11)],
            &opts(),
        )
    }

    #[test]
    fn seasonal_basis_values() {
        let b = seasonal_basis(365).unwrap();
        for (got, want) in b.iter().zip([0.0, 1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        // Independent evaluation of the four formulas.
        let d = 100.0_f64;
        let want = [
            (2.0 * PI * d / 365.0).sin(),
            (2.0 * PI * d / 365.0).cos(),
            (4.0 * PI * d / 365.0).sin(),
            (4.0 * PI * d / 365.0).cos(),
        ];
        let got = seasonal_basis(100).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!(seasonal_basis(0).is_err());
        assert!(seasonal_basis(367).is_err());
        assert!(seasonal_basis(366).is_ok());
    }

    #[test]
    fn effective_lead_examples() {
        assert_eq!(effective_lead(40, 36), 36);
        assert_eq!(effective_lead(20, 36), 20);
        assert_eq!(effective_lead(132, 84), 84);
    }

    #[test]
    fn observation_persistence_lookup() {
        let st = toy_station();
        assert_eq!(observation_persistence(init(1), &st.obs), Some(6.0));
        assert_eq!(observation_persistence(init(25), &st.obs), None);
    }

    #[test]
    fn persistence_mode_freezes_expired_models() {
        let st = toy_station();
        let dm = build(&st, 40, PredictorMode::Persistence).unwrap();
        assert_eq!(dm.n_cols(), 9);
        let aro = dm.column(Column::Aro).unwrap();
        assert_eq!(aro[0], st.archive(Source::Aro).get(init(1), 36).unwrap());
        assert_eq!(aro[1], st.archive(Source::Aro).get(init(11), 36).unwrap());
        let det = dm.column(Column::Det).unwrap();
        assert_eq!(det[0], st.archive(Source::Det).get(init(1), 40).unwrap());
        // Observation anchor is the same at every lead of one init.
        for lead in [1, 40, 132] {
            let dm = build(&st, lead, PredictorMode::Persistence).unwrap();
            assert_eq!(dm.column(Column::Pers).unwrap(), &[6.0, 16.0]);
            assert_eq!(dm.target, vec![f64::from(lead) / 10.0; 2]);
        }
        let dm132 = build(&st, 132, PredictorMode::Persistence).unwrap();
        assert_eq!(
            dm132.column(Column::Det).unwrap()[0],
            st.archive(Source::Det).get(init(1), 84).unwrap()
        );
    }

    #[test]
    fn reference_mode_drops_expired_models() {
        let st = toy_station();
        let dm = build(&st, 90, PredictorMode::Reference).unwrap();
        assert_eq!(
            dm.columns,
            vec![
                Column::Intercept,
                Column::EnsMu,
                Column::Sin1,
                Column::Cos1,
                Column::Sin2,
                Column::Cos2
            ]
        );
        assert_eq!(
            build(&st, 36, PredictorMode::Reference).unwrap().n_cols(),
            8
        );
        assert_eq!(
            build(&st, 37, PredictorMode::Reference).unwrap().n_cols(),
            7
        );
    }

    #[test]
    fn single_mode_beyond_horizon_fails() {
        let st = toy_station();
        assert_eq!(
            build(&st, 36, PredictorMode::Single(Source::Aro))
                .unwrap()
                .n_cols(),
            6
        );
        assert!(matches!(
            build(&st, 37, PredictorMode::Single(Source::Aro)),
            Err(AssemblyError::NoPredictor { .. })
        ));
    }

    #[test]
    fn reference_without_source() {
        let st = toy_station();
        let dm = build(&st, 30, PredictorMode::ReferenceWithout(Source::Aro)).unwrap();
        assert!(dm.column(Column::Aro).is_none());
        assert_eq!(
            dm.columns,
            build(&st, 37, PredictorMode::Reference).unwrap().columns
        );
    }

    #[test]
    fn rows_with_missing_values_are_dropped() {
        let mut st = toy_station();
        // Remove the anchor observation of init 2: persistence loses that row, reference does not.
        let mut obs = crate::datamodel::ObservationSeries::new("ibk");
        for (t, v) in st.obs.iter().filter(|(t, _)| *t != init(11)) {
            obs.insert(t, v).unwrap();
        }
        st.obs = obs;
        assert_eq!(
            build(&st, 5, PredictorMode::Persistence).unwrap().inits,
            vec![init(1)]
        );
        assert_eq!(build(&st, 5, PredictorMode::Reference).unwrap().n_rows(), 2);
        let err = assemble(
            &st,
            5,
            PredictorMode::Persistence,
            &LeadTimeGrid::default(),
            &[init(11)],
            &opts(),
        );
        assert!(matches!(err, Err(AssemblyError::EmptyDesign { .. })));
        let strict = AssemblyOptions {
            min_rows: 100,
            ..opts()
        };
        let err = assemble(
            &st,
            5,
            PredictorMode::Reference,
            &LeadTimeGrid::default(),
            &[init(1)],
            &strict,
        );
        assert!(matches!(
            err,
            Err(AssemblyError::TooFewRows {
                rows: 1,
                min: 100,
                ..
            })
        ));
    }

    #[test]
    fn off_grid_lead_rejected() {
        let st = toy_station();
        assert_eq!(
            build(&st, 85, PredictorMode::Reference),
            Err(AssemblyError::LeadNotInGrid(85))
        );
    }

    #[test]
    fn pers_can_be_dropped_beyond_a_lead() {
        let st = toy_station();
        let o = AssemblyOptions {
            min_rows: 1,
            pers_max_lead_h: Some(48),
        };
        let grid = LeadTimeGrid::default();
        let at =
            |lead| assemble(&st, lead, PredictorMode::Persistence, &grid, &[init(1)], &o).unwrap();
        assert!(at(48).column(Column::Pers).is_some());
        assert!(at(49).column(Column::Pers).is_none());
    }

    #[test]
    fn mode_names_parse() {
        for m in [
            PredictorMode::Persistence,
            PredictorMode::Reference,
            PredictorMode::Single(Source::EnsMu),
            PredictorMode::ReferenceWithout(Source::Aro),
        ] {
            assert_eq!(m.name().parse::<PredictorMode>().unwrap(), m);
        }
        assert_eq!(PredictorMode::Single(Source::EnsMu).name(), "single_ensmu");
    }

    #[test]
    fn nesting_and_column_counts_over_grid() {
        let st = toy_station();
        let grid = LeadTimeGrid::default();
        let mut prev_ref = usize::MAX;
        for &lead in grid.leads() {
            let p = build(&st, lead, PredictorMode::Persistence).unwrap();
            let r = build(&st, lead, PredictorMode::Reference).unwrap();
            assert_eq!(p.n_cols(), 9);
            let expired = Source::ALL
                .iter()
                .filter(|s| s.default_horizon_h() < lead)
                .count();
            assert_eq!(r.n_cols(), 9 - 1 - expired);
            assert!(r.n_cols() <= prev_ref);
            prev_ref = r.n_cols();
            assert!(r.columns.iter().all(|c| p.columns.contains(c)) && r.n_cols() < p.n_cols());
            if lead <= 36 {
                for src in Source::ALL {
                    let c = Column::from_source(src);
                    assert_eq!(p.column(c), r.column(c));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn effective_lead_monotone(a in 1u32..200, b in 1u32..200, h in 1u32..200) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(effective_lead(lo, h) <= effective_lead(hi, h));
            if lo >= h {
                prop_assert_eq!(effective_lead(lo, h), h);
            }
        }

        #[test]
        fn basis_bounded_and_pythagorean(doy in 1u32..=366) {
            let b = seasonal_basis(doy).unwrap();
            prop_assert!(b.iter().all(|v| (-1.0..=1.0).contains(v)));
            prop_assert!((b[0] * b[0] + b[1] * b[1] - 1.0).abs() < 1e-12);
        }
    }
}

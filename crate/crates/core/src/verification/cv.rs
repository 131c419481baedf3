use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::folds::FoldSpec;
use super::metrics::mae;
use super::table::{ScoreRow, ScoreTable};
use crate::assembly::{assemble, AssemblyOptions, PredictorMode};
use crate::datamodel::{valid_time, Dataset, LeadTimeGrid, StationData, Timestamp};
use crate::emos::{fit_emos_with, predict, FitOptions, GaussianPrediction};
use crate::error::{AssemblyError, VerifyError};

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub assembly: AssemblyOptions,
    pub fit: FitOptions,
    /// Modes the persistence mode is scored against.
    pub skill_references: Vec<String>,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            assembly: AssemblyOptions::default(),
            fit: FitOptions::default(),
            skill_references: vec!["reference".into()],
        }
    }
}

/// Out-of-sample predictions of one mode at one station, by lead then init.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModePredictions {
    pub station: String,
    pub mode: String,
    pub by_lead: BTreeMap<u32, BTreeMap<Timestamp, GaussianPrediction>>,
}

impl ModePredictions {
    pub fn get(&self, lead_h: u32, init: Timestamp) -> Option<GaussianPrediction> {
        self.by_lead.get(&lead_h)?.get(&init).copied()
    }
}

/// Which calendar years fed a fit and which it was scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct FitAudit {
    pub station: String,
    pub mode: String,
    pub lead_h: u32,
    pub fold: usize,
    pub train_years: BTreeSet<i32>,
    pub test_years: BTreeSet<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub table: ScoreTable,
    pub predictions: Vec<ModePredictions>,
    pub audit: Vec<FitAudit>,
}

type LeadResult = (u32, BTreeMap<Timestamp, GaussianPrediction>, Vec<FitAudit>);

fn predict_lead(
    station: &StationData,
    grid: &LeadTimeGrid,
    inits: &[Timestamp],
    lead_h: u32,
    mode: PredictorMode,
    folds: &FoldSpec,
    opts: &CvOptions,
) -> Result<Option<LeadResult>, VerifyError> {
    let id = station.meta.id.as_str();
    let cell_err = |fold, source| VerifyError::Assembly {
        station: id.to_string(),
        mode: mode.name(),
        lead_h,
        fold,
        source: Box::new(source),
    };
    match mode.plan(id, lead_h, station.horizons(), &opts.assembly) {
        Err(AssemblyError::NoPredictor { .. }) => return Ok(None),
        Err(e) => return Err(cell_err(0, e)),
        Ok(_) => {}
    }
    let test_opts = AssemblyOptions {
        min_rows: 1,
        ..opts.assembly
    };
    let mut preds = BTreeMap::new();
    let mut audit = Vec::new();
    for fold in 0..folds.k {
        let test_inits = folds.test_inits(inits, fold);
        if test_inits.is_empty() {
            continue;
        }
        let train_inits = folds.train_inits(inits, fold);
        let train = assemble(station, lead_h, mode, grid, &train_inits, &opts.assembly)
            .map_err(|e| cell_err(fold, e))?;
        let fit = fit_emos_with(&train, &opts.fit).map_err(|source| VerifyError::Fit {
            station: id.to_string(),
            mode: mode.name(),
            lead_h,
            fold,
            source,
        })?;
        let test = match assemble(station, lead_h, mode, grid, &test_inits, &test_opts) {
            Ok(dm) => dm,
            Err(AssemblyError::EmptyDesign { .. }) => continue,
            Err(e) => return Err(cell_err(fold, e)),
        };
        for i in 0..test.n_rows() {
            let p = predict(&fit, &test.row(i)).expect("test design has the fitted columns");
            preds.insert(test.inits[i], p);
        }
        audit.push(FitAudit {
            station: id.to_string(),
            mode: mode.name(),
            lead_h,
            fold,
            train_years: train.inits.iter().map(|t| t.year()).collect(),
            test_years: test.inits.iter().map(|t| t.year()).collect(),
        });
    }
    Ok(Some((lead_h, preds, audit)))
}

/// Fits `mode` on each fold complement and predicts the held-out fold, at every grid lead
/// where the mode is defined.
pub fn cv_predict(
    station: &StationData,
    grid: &LeadTimeGrid,
    mode: PredictorMode,
    folds: &FoldSpec,
    opts: &CvOptions,
) -> Result<(ModePredictions, Vec<FitAudit>), VerifyError> {
    cv_predict_leads(station, grid, grid.leads(), mode, folds, opts)
}

/// Like [`cv_predict`], restricted to `leads`.
pub fn cv_predict_leads(
    station: &StationData,
    grid: &LeadTimeGrid,
    leads: &[u32],
    mode: PredictorMode,
    folds: &FoldSpec,
    opts: &CvOptions,
) -> Result<(ModePredictions, Vec<FitAudit>), VerifyError> {
    let inits: Vec<Timestamp> = station
        .inits()
        .into_iter()
        .filter(|t| folds.fold_of(*t).is_some())
        .collect();
    let per_lead: Vec<Option<LeadResult>> = leads
        .par_iter()
        .map(|&lead| predict_lead(station, grid, &inits, lead, mode, folds, opts))
        .collect::<Result<_, _>>()?;
    let mut out = ModePredictions {
        station: station.meta.id.clone(),
        mode: mode.name(),
        by_lead: BTreeMap::new(),
    };
    let mut audit = Vec::new();
    for (lead, preds, a) in per_lead.into_iter().flatten() {
        out.by_lead.insert(lead, preds);
        audit.extend(a);
    }
    Ok((out, audit))
}

/// Scores predictions per (station, mode, lead).
///
/// At each (station, lead) only inits predicted by every mode present at that lead are
/// scored, so all modes share one case set. Rows are ordered by station (dataset order),
/// mode (`predictions` order) and lead.
pub fn score(
    dataset: &Dataset,
    predictions: &[ModePredictions],
    skill_references: &[String],
) -> Result<ScoreTable, VerifyError> {
    let mut table = ScoreTable::default();
    for st in dataset.stations() {
        let preds: Vec<&ModePredictions> = predictions
            .iter()
            .filter(|p| p.station == st.meta.id)
            .collect();
        let leads: BTreeSet<u32> = preds
            .iter()
            .flat_map(|p| p.by_lead.keys().copied())
            .collect();
        let mut per_mode: Vec<Vec<ScoreRow>> = vec![Vec::new(); preds.len()];
        for lead in leads {
            let present: Vec<(usize, &BTreeMap<Timestamp, GaussianPrediction>)> = preds
                .iter()
                .enumerate()
                .filter_map(|(k, p)| p.by_lead.get(&lead).map(|m| (k, m)))
                .collect();
            let shared: Vec<Timestamp> = present[0]
                .1
                .keys()
                .copied()
                .filter(|t| present.iter().all(|(_, m)| m.contains_key(t)))
                .filter(|t| st.obs.get(valid_time(*t, lead)).is_some())
                .collect();
            if shared.is_empty() {
                continue;
            }
            let observed: Vec<f64> = shared
                .iter()
                .map(|t| st.obs.get(valid_time(*t, lead)).expect("filtered above"))
                .collect();
            for (k, m) in &present {
                let mu: Vec<f64> = shared.iter().map(|t| m[t].mu).collect();
                per_mode[*k].push(ScoreRow {
                    station: st.meta.id.clone(),
                    mode: preds[*k].mode.clone(),
                    lead_h: lead,
                    n_cases: shared.len(),
                    mae: mae(&mu, &observed)?,
                });
            }
        }
        table.rows.extend(per_mode.into_iter().flatten());
    }
    for reference in skill_references {
        table.add_skill(reference)?;
    }
    Ok(table)
}

/// Cross-validated scores of `modes` at every station.
pub fn cross_validate(
    dataset: &Dataset,
    grid: &LeadTimeGrid,
    modes: &[PredictorMode],
    folds: &FoldSpec,
    opts: &CvOptions,
) -> Result<CvOutcome, VerifyError> {
    let mut predictions = Vec::new();
    let mut audit = Vec::new();
    for st in dataset.stations() {
        for &mode in modes {
            let (p, a) = cv_predict(st, grid, mode, folds, opts)?;
            predictions.push(p);
            audit.extend(a);
        }
    }
    let table = score(dataset, &predictions, &opts.skill_references)?;
    Ok(CvOutcome {
        table,
        predictions,
        audit,
    })
}

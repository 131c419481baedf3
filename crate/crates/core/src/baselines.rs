//! Blending baselines for the handover from the local model to the global models,
//! and single-source regressions.
//!
//! Both transitions blend two reference-mode regressions: one with the local
//! source and one without it. `transition1` ramps the weight of the local
//! forecast linearly down to zero at the transition lead. `transition2` keeps the
//! local forecast up to the transition, then mixes the last local-inclusive
//! forecast into the next few leads with a decreasing weight.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assembly::PredictorMode;
use crate::datamodel::{Dataset, LeadTimeGrid, Source, StationData};
use crate::emos::GaussianPrediction;
use crate::error::VerifyError;
use crate::verification::{
    cross_validate, cv_predict, cv_predict_leads, CvOptions, FoldSpec, ModePredictions, ScoreTable,
};

pub const TRANSITION1: &str = "transition1";
pub const TRANSITION2: &str = "transition2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightProfile {
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionConfig {
    pub transition_lead_h: u32,
    /// Leads before the transition over which `transition1` ramps down.
    pub window_h: u32,
    /// Leads after the transition that `transition2` still blends.
    pub extrapolation_leads: u32,
    pub profile: WeightProfile,
    /// The short-horizon model being handed over.
    pub local_source: Source,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        TransitionConfig {
            transition_lead_h: 36,
            window_h: 6,
            extrapolation_leads: 3,
            profile: WeightProfile::Linear,
            local_source: Source::Aro,
        }
    }
}

impl TransitionConfig {
    pub fn validate(&self, grid: &LeadTimeGrid) -> Result<(), String> {
        if self.window_h < 1 {
            return Err("window_h must be at least 1".into());
        }
        if self.extrapolation_leads < 1 {
            return Err("extrapolation_leads must be at least 1".into());
        }
        if !grid.contains(self.transition_lead_h) {
            return Err(format!(
                "transition lead {} is not on the grid",
                self.transition_lead_h
            ));
        }
        Ok(())
    }

    /// Weight of the local-inclusive forecast in `transition1` at `lead_h`.
    pub fn weighted_average_weight(&self, lead_h: u32) -> f64 {
        let t = f64::from(self.transition_lead_h);
        let start = t - f64::from(self.window_h);
        let l = f64::from(lead_h);
        match self.profile {
            WeightProfile::Linear => ((t - l) / (t - start)).clamp(0.0, 1.0),
        }
    }

    /// Weight of the last local-inclusive forecast in `transition2`, `step` leads past the transition.
    pub fn extrapolation_weight(&self, step: u32) -> f64 {
        let n = self.extrapolation_leads;
        if step == 0 || step > n {
            return 0.0;
        }
        match self.profile {
            WeightProfile::Linear => f64::from(n + 1 - step) / f64::from(n + 1),
        }
    }
}

fn blend(a: GaussianPrediction, b: GaussianPrediction, w: f64) -> GaussianPrediction {
    if w == 1.0 {
        return a;
    }
    if w == 0.0 {
        return b;
    }
    GaussianPrediction {
        mu: w * a.mu + (1.0 - w) * b.mu,
        sigma: w * a.sigma + (1.0 - w) * b.sigma,
    }
}

/// Linear time-weighted average of the forecasts with and without the local model.
pub fn transition_weighted_average(
    pred_with_local: GaussianPrediction,
    pred_without_local: GaussianPrediction,
    lead_h: u32,
    cfg: &TransitionConfig,
) -> GaussianPrediction {
    blend(
        pred_with_local,
        pred_without_local,
        cfg.weighted_average_weight(lead_h),
    )
}

/// Mixes the last local-inclusive forecast into the forecast without the local model,
/// `leads_past_transition` grid steps after the transition.
pub fn transition_extrapolation(
    last_with_local: GaussianPrediction,
    pred_without_local: GaussianPrediction,
    leads_past_transition: u32,
    cfg: &TransitionConfig,
) -> GaussianPrediction {
    blend(
        last_with_local,
        pred_without_local,
        cfg.extrapolation_weight(leads_past_transition),
    )
}

/// Builds both transition forecasts from cross-validated reference predictions.
///
/// `reference` is the reference mode (local model included up to its horizon, absent after);
/// `without_local` is the reference mode without the local model, needed inside the
/// `transition1` window.
pub fn blend_transitions(
    grid: &LeadTimeGrid,
    reference: &ModePredictions,
    without_local: &ModePredictions,
    cfg: &TransitionConfig,
) -> (ModePredictions, ModePredictions) {
    let t = cfg.transition_lead_h;
    let mut t1 = ModePredictions {
        station: reference.station.clone(),
        mode: TRANSITION1.into(),
        by_lead: BTreeMap::new(),
    };
    let mut t2 = ModePredictions {
        station: reference.station.clone(),
        mode: TRANSITION2.into(),
        by_lead: BTreeMap::new(),
    };
    let after: Vec<u32> = grid.leads().iter().copied().filter(|&l| l > t).collect();
    let empty = BTreeMap::new();
    let at_transition = reference.by_lead.get(&t).unwrap_or(&empty);

    for (&lead, preds) in &reference.by_lead {
        let w = cfg.weighted_average_weight(lead);
        let out1 = if lead > t || w == 1.0 {
            preds.clone()
        } else {
            let Some(nl) = without_local.by_lead.get(&lead) else {
                continue;
            };
            preds
                .iter()
                .filter_map(|(init, p)| {
                    nl.get(init)
                        .map(|q| (*init, transition_weighted_average(*p, *q, lead, cfg)))
                })
                .collect()
        };
        t1.by_lead.insert(lead, out1);

        let step = after.iter().position(|&l| l == lead).map(|i| i as u32 + 1);
        let out2 = match step {
            Some(k) if k <= cfg.extrapolation_leads => preds
                .iter()
                .filter_map(|(init, p)| {
                    at_transition
                        .get(init)
                        .map(|last| (*init, transition_extrapolation(*last, *p, k, cfg)))
                })
                .collect(),
            _ => preds.clone(),
        };
        t2.by_lead.insert(lead, out2);
    }
    (t1, t2)
}

/// Cross-validated predictions of both transitions at one station. Also returns the
/// reference predictions they were built from.
pub fn run_transitions(
    station: &StationData,
    grid: &LeadTimeGrid,
    folds: &FoldSpec,
    cfg: &TransitionConfig,
    opts: &CvOptions,
) -> Result<[ModePredictions; 3], VerifyError> {
    let (reference, _) = cv_predict(station, grid, PredictorMode::Reference, folds, opts)?;
    let window: Vec<u32> = grid
        .leads()
        .iter()
        .copied()
        .filter(|&l| l <= cfg.transition_lead_h && cfg.weighted_average_weight(l) < 1.0)
        .collect();
    let (without, _) = cv_predict_leads(
        station,
        grid,
        &window,
        PredictorMode::ReferenceWithout(cfg.local_source),
        folds,
        opts,
    )?;
    let (t1, t2) = blend_transitions(grid, &reference, &without, cfg);
    Ok([reference, t1, t2])
}

/// Cross-validated scores of the regression on a single source, at the leads it covers.
pub fn run_single_model(
    source: Source,
    dataset: &Dataset,
    grid: &LeadTimeGrid,
    folds: &FoldSpec,
    opts: &CvOptions,
) -> Result<ScoreTable, VerifyError> {
    let opts = CvOptions {
        skill_references: Vec::new(),
        ..opts.clone()
    };
    Ok(cross_validate(
        dataset,
        grid,
        &[PredictorMode::Single(source)],
        folds,
        &opts,
    )?
    .table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Timestamp;
    use proptest::prelude::*;

    fn g(mu: f64, sigma: f64) -> GaussianPrediction {
        GaussianPrediction { mu, sigma }
    }

    #[test]
    fn weighted_average_schedule() {
        let cfg = TransitionConfig::default();
        let (a, b) = (g(10.0, 1.0), g(14.0, 2.0));
        assert_eq!(transition_weighted_average(a, b, 30, &cfg), a);
        assert_eq!(transition_weighted_average(a, b, 12, &cfg), a);
        assert_eq!(transition_weighted_average(a, b, 36, &cfg), b);
        // Linear ramp from 1 at lead 30 to 0 at lead 36, evaluated at its midpoint.
        let w_mid = (36.0 - 33.0) / (36.0 - 30.0);
        assert_eq!(w_mid, 0.5);
        let mid = transition_weighted_average(a, b, 33, &cfg);
        assert!((mid.mu - 12.0).abs() < 1e-12);
        assert!((mid.sigma - 1.5).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_schedule() {
        let cfg = TransitionConfig::default();
        let (last, without) = (g(8.0, 1.0), g(12.0, 1.0));
        assert_eq!(transition_extrapolation(last, without, 4, &cfg), without);
        let weights: Vec<f64> = (1..=3).map(|k| cfg.extrapolation_weight(k)).collect();
        assert_eq!(weights, vec![0.75, 0.5, 0.25]);
        let step3 = transition_extrapolation(last, without, 3, &cfg);
        assert!((step3.mu - (0.25 * 8.0 + 0.75 * 12.0)).abs() < 1e-12);
        for k in 1..=6 {
            assert_eq!(transition_extrapolation(last, last, k, &cfg), last);
        }
    }

    #[test]
    fn unit_window_is_a_hard_cutoff() {
        let cfg = TransitionConfig {
            window_h: 1,
            ..TransitionConfig::default()
        };
        let (a, b) = (g(1.0, 1.0), g(2.0, 1.0));
        assert_eq!(transition_weighted_average(a, b, 35, &cfg), a);
        assert_eq!(transition_weighted_average(a, b, 36, &cfg), b);
    }

    #[test]
    fn config_validation() {
        let grid = LeadTimeGrid::default();
        assert!(TransitionConfig::default().validate(&grid).is_ok());
        let bad = TransitionConfig {
            window_h: 0,
            ..Default::default()
        };
        assert!(bad.validate(&grid).is_err());
        let off = TransitionConfig {
            transition_lead_h: 85,
            ..Default::default()
        };
        assert!(off.validate(&grid).is_err());
    }

    #[test]
    fn blended_series_follow_the_schedules() {
        let grid = LeadTimeGrid::default();
        let cfg = TransitionConfig::default();
        let init = Timestamp::from_ymdh(2022, 1, 1, 12).unwrap();
        let mut reference = ModePredictions {
            station: "s".into(),
            mode: "reference".into(),
            ..Default::default()
        };
        let mut without = ModePredictions {
            station: "s".into(),
            mode: "reference_without_aro".into(),
            ..Default::default()
        };
        for &lead in grid.leads() {
            let one = |mu| [(init, g(mu, 1.0))].into_iter().collect();
            reference.by_lead.insert(lead, one(f64::from(lead)));
            if (31..=36).contains(&lead) {
                without.by_lead.insert(lead, one(100.0));
            }
        }
        let (t1, t2) = blend_transitions(&grid, &reference, &without, &cfg);
        assert_eq!(t1.get(30, init).unwrap().mu, 30.0);
        assert!((t1.get(33, init).unwrap().mu - (0.5 * 33.0 + 50.0)).abs() < 1e-12);
        assert_eq!(t1.get(36, init).unwrap().mu, 100.0);
        assert_eq!(t1.get(37, init).unwrap().mu, 37.0);
        assert_eq!(t2.get(36, init).unwrap().mu, 36.0);
        assert!((t2.get(37, init).unwrap().mu - (0.75 * 36.0 + 0.25 * 37.0)).abs() < 1e-12);
        assert!((t2.get(39, init).unwrap().mu - (0.25 * 36.0 + 0.75 * 39.0)).abs() < 1e-12);
        assert_eq!(t2.get(40, init).unwrap().mu, 40.0);
        // Steps count grid leads, so the coarse segment is handled the same way.
        let cfg84 = TransitionConfig {
            transition_lead_h: 84,
            ..cfg
        };
        let (_, t2) = blend_transitions(&grid, &reference, &without, &cfg84);
        assert!((t2.get(87, init).unwrap().mu - (0.75 * 84.0 + 0.25 * 87.0)).abs() < 1e-12);
        assert_eq!(t2.get(96, init).unwrap().mu, 96.0);
    }

    proptest! {
        #[test]
        fn blend_weights_stay_in_unit_interval(lead in 1u32..=132, step in 0u32..10,
                                               window in 1u32..20, n in 1u32..6,
                                               a in -30.0f64..30.0, b in -30.0f64..30.0) {
            let cfg = TransitionConfig { window_h: window, extrapolation_leads: n, ..Default::default() };
            for w in [cfg.weighted_average_weight(lead), cfg.extrapolation_weight(step)] {
                prop_assert!((0.0..=1.0).contains(&w));
                prop_assert!((w + (1.0 - w) - 1.0).abs() < 1e-15);
            }
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let m1 = transition_weighted_average(g(a, 1.0), g(b, 1.0), lead, &cfg).mu;
            let m2 = transition_extrapolation(g(a, 1.0), g(b, 1.0), step.max(1), &cfg).mu;
            prop_assert!(lo - 1e-12 <= m1 && m1 <= hi + 1e-12);
            prop_assert!(lo - 1e-12 <= m2 && m2 <= hi + 1e-12);
        }
    }
}

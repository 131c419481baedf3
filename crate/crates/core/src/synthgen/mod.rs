//! Seeded synthetic station worlds: observations plus three forecast sources.
//!
//! Truth is a seasonal cycle plus a diurnal cycle plus an hourly AR(1) anomaly.
//! Observations add white noise. Each source forecasts the truth at the valid
//! time plus a deterministic bias and an error that is AR(1) along lead with a
//! standard deviation growing linearly in lead. Because the error is correlated
//! along lead, a source's last forecast keeps information about later truth.
//!
//! Random draws come from independent streams (see [`rng`]): stream 0 drives the
//! truth (anomaly path, then observation noise), streams 1..=3 the source errors
//! in source-name order (aro, det, ens_mu), stream 4 the optional missingness.

pub mod rng;

use std::f64::consts::PI;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    Archetype, Dataset, Horizons, LeadTimeGrid, Source, StationData, StationMeta, Timestamp,
};
use crate::error::SynthError;
use rng::Stream;

/// Error and bias characteristics of one forecast source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceProfile {
    pub bias_const: f64,
    pub bias_seasonal_amp: f64,
    /// Bias amplitude over the day, largest at 03 UTC.
    pub bias_diurnal_amp: f64,
    pub error_sd_at_lead0: f64,
    /// Increase of the error sd per lead hour.
    pub error_sd_growth: f64,
    /// Lag-one correlation of the error between consecutive lead hours.
    pub error_ar1_rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthProfile {
    pub archetype: Archetype,
    pub mean_temp: f64,
    pub seasonal_amp: f64,
    pub diurnal_amp: f64,
    /// Stationary sd of the truth anomaly.
    pub anomaly_sd: f64,
    pub obs_ar1_rho: f64,
    pub obs_noise_sd: f64,
    pub aro: SourceProfile,
    pub det: SourceProfile,
    pub ens_mu: SourceProfile,
}

impl SynthProfile {
    pub fn source(&self, s: Source) -> &SourceProfile {
        match s {
            Source::Aro => &self.aro,
            Source::Det => &self.det,
            Source::EnsMu => &self.ens_mu,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidProfile(m));
        let rho_ok = |r: f64| (0.0..1.0).contains(&r);
        if !(self.anomaly_sd > 0.0 && self.obs_noise_sd > 0.0) {
            return bad("anomaly_sd and obs_noise_sd must be positive".into());
        }
        if !rho_ok(self.obs_ar1_rho) {
            return bad(format!("obs_ar1_rho {} outside [0, 1)", self.obs_ar1_rho));
        }
        for s in Source::ALL {
            let p = self.source(s);
            if p.error_sd_at_lead0.is_nan() || p.error_sd_at_lead0 <= 0.0 || p.error_sd_growth < 0.0
            {
                return bad(format!("{s}: error sd must be positive and non-decreasing"));
            }
            if !rho_ok(p.error_ar1_rho) {
                return bad(format!(
                    "{s}: error_ar1_rho {} outside [0, 1)",
                    p.error_ar1_rho
                ));
            }
        }
        Ok(())
    }

    /// Deterministic part of the truth: seasonal plus diurnal cycle.
    pub fn climatology(&self, t: Timestamp) -> f64 {
        let doy = f64::from(t.day_of_year());
        let hour = f64::from(t.hour());
        self.mean_temp - self.seasonal_amp * (2.0 * PI * (doy - 20.0) / 365.0).cos()
            + self.diurnal_amp * (2.0 * PI * (hour - 15.0) / 24.0).cos()
    }

    /// Systematic error of source `s` at valid time `t`.
    pub fn bias(&self, s: Source, t: Timestamp) -> f64 {
        let p = self.source(s);
        let doy = f64::from(t.day_of_year());
        let hour = f64::from(t.hour());
        p.bias_const
            + p.bias_seasonal_amp * (2.0 * PI * doy / 365.0).sin()
            + p.bias_diurnal_amp * (2.0 * PI * (hour - 3.0) / 24.0).cos()
    }

    /// Shipped profile for an archetype.
    ///
    /// plain: weak anomaly persistence and small biases, sources of similar quality.
    /// valley: strongly persistent anomalies, nocturnal cold-pool bias, and a local
    /// model much better than the global ones.
    /// mountain: large constant global-model bias and the largest local-model advantage.
    pub fn default_for(archetype: Archetype) -> Self {
        let src =
            |bias_const, bias_seasonal_amp, bias_diurnal_amp, sd0, growth, rho| SourceProfile {
                bias_const,
                bias_seasonal_amp,
                bias_diurnal_amp,
                error_sd_at_lead0: sd0,
                error_sd_growth: growth,
                error_ar1_rho: rho,
            };
        match archetype {
            Archetype::Plain => SynthProfile {
                archetype,
                mean_temp: 11.0,
                seasonal_amp: 10.0,
                diurnal_amp: 4.0,
                anomaly_sd: 2.5,
                obs_ar1_rho: 0.97,
                obs_noise_sd: 0.3,
                aro: src(0.2, 0.3, 0.4, 1.0, 0.04, 0.97),
                det: src(-0.3, 0.4, 0.5, 1.3, 0.03, 0.97),
                ens_mu: src(-0.3, 0.4, 0.5, 1.3, 0.012, 0.98),
            },
            Archetype::Valley => SynthProfile {
                archetype,
                mean_temp: 9.0,
                seasonal_amp: 11.0,
                diurnal_amp: 6.0,
                anomaly_sd: 3.0,
                obs_ar1_rho: 0.98,
                obs_noise_sd: 0.3,
                aro: src(0.5, 0.5, 1.5, 1.5, 0.03, 0.97),
                det: src(1.5, 1.0, 3.0, 2.2, 0.03, 0.97),
                ens_mu: src(1.5, 1.0, 3.0, 2.1, 0.012, 0.98),
            },
            Archetype::Mountain => SynthProfile {
                archetype,
                mean_temp: -5.0,
                seasonal_amp: 7.0,
                diurnal_amp: 2.0,
                anomaly_sd: 3.5,
                obs_ar1_rho: 0.98,
                obs_noise_sd: 0.3,
                aro: src(-0.5, 0.3, 0.3, 1.4, 0.03, 0.97),
                det: src(4.0, 1.0, 0.5, 2.6, 0.03, 0.97),
                ens_mu: src(4.0, 1.0, 0.5, 2.5, 0.012, 0.98),
            },
        }
    }
}

/// What to generate, independent of the per-station profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldSpec {
    pub n_days: u32,
    pub start_date: NaiveDate,
    pub init_hour: u32,
    /// Probability that any single observation or forecast value is dropped.
    pub missing_rate: f64,
    pub horizons: Horizons,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            n_days: 1100,
            start_date: NaiveDate::from_ymd_opt(2021, 7, 1).expect("valid date"),
            init_hour: 12,
            missing_rate: 0.0,
            horizons: Horizons::default(),
        }
    }
}

/// Generates one station. Identical arguments give bit-identical output.
pub fn generate_world(
    seed: u64,
    station_id: &str,
    profile: &SynthProfile,
    spec: &WorldSpec,
    grid: &LeadTimeGrid,
) -> Result<StationData, SynthError> {
    profile.validate()?;
    if spec.n_days < 400 {
        return Err(SynthError::TooFewDays(spec.n_days));
    }
    if !(0.0..1.0).contains(&spec.missing_rate) {
        return Err(SynthError::InvalidProfile(
            "missing_rate outside [0, 1)".into(),
        ));
    }
    let first_init = Timestamp::from_date_hour(spec.start_date, spec.init_hour)
        .ok_or_else(|| SynthError::InvalidProfile(format!("init hour {}", spec.init_hour)))?;
    let max_h = Source::ALL
        .iter()
        .map(|s| spec.horizons.get(*s))
        .max()
        .unwrap_or(0)
        .max(grid.max_lead());
    let n_hours = 24 * (spec.n_days as usize - 1) + max_h as usize + 1;
    let hour_at = |i: usize| Timestamp::from_epoch_hours(first_init.epoch_hours() + i as i64);

    // Truth stream: anomaly path, then observation noise.
    let mut truth_rng = Stream::new(seed, 0);
    let rho = profile.obs_ar1_rho;
    let innov_sd = profile.anomaly_sd * (1.0 - rho * rho).sqrt();
    let mut anomaly = Vec::with_capacity(n_hours);
    let mut a = profile.anomaly_sd * truth_rng.normal();
    for i in 0..n_hours {
        if i > 0 {
            a = rho * a + innov_sd * truth_rng.normal();
        }
        anomaly.push(a);
    }
    let truth: Vec<f64> = (0..n_hours)
        .map(|i| profile.climatology(hour_at(i)) + anomaly[i])
        .collect();
    let obs_values: Vec<f64> = truth
        .iter()
        .map(|t| t + profile.obs_noise_sd * truth_rng.normal())
        .collect();

    let meta = StationMeta::new(station_id, Some(profile.archetype))
        .map_err(|e| SynthError::InvalidProfile(e.to_string()))?;
    let mut station = StationData::empty(meta, spec.horizons, spec.init_hour);
    let mut miss_rng = Stream::new(seed, 4);
    let keep = |rng: &mut Stream| spec.missing_rate == 0.0 || rng.uniform() >= spec.missing_rate;

    for (i, v) in obs_values.iter().enumerate() {
        if keep(&mut miss_rng) {
            station
                .obs
                .insert(hour_at(i), v.clamp(-90.0, 60.0))
                .expect("clamped into the plausible range");
        }
    }

    for (k, source) in Source::ALL.into_iter().enumerate() {
        let p = profile.source(source);
        let horizon = spec.horizons.get(source);
        let mut err_rng = Stream::new(seed, 1 + k as u64);
        let innov = (1.0 - p.error_ar1_rho * p.error_ar1_rho).sqrt();
        for day in 0..spec.n_days as usize {
            let base = 24 * day;
            let init = hour_at(base);
            let mut u = err_rng.normal();
            for lead in 1..=horizon {
                u = p.error_ar1_rho * u + innov * err_rng.normal();
                if !grid.contains(lead) {
                    continue;
                }
                let t = hour_at(base + lead as usize);
                let sd = p.error_sd_at_lead0 + p.error_sd_growth * f64::from(lead);
                let v = truth[base + lead as usize] + profile.bias(source, t) + sd * u;
                if keep(&mut miss_rng) {
                    station
                        .archive_mut(source)
                        .insert(init, lead, v.clamp(-90.0, 60.0))
                        .expect("lead within horizon and init hour matches");
                }
            }
        }
    }
    Ok(station)
}

/// Default station ids and seeds for the three shipped archetypes.
pub fn default_stations(seed: u64) -> Vec<(String, Archetype, u64)> {
    Archetype::ALL
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name().to_string(), *a, seed.wrapping_add(i as u64)))
        .collect()
}

/// Generates one station per `(id, profile, seed)` entry.
pub fn generate_dataset(
    stations: &[(String, SynthProfile, u64)],
    spec: &WorldSpec,
    grid: &LeadTimeGrid,
) -> Result<Dataset, SynthError> {
    let data = stations
        .iter()
        .map(|(id, profile, seed)| generate_world(*seed, id, profile, spec, grid))
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(data).map_err(|e| SynthError::InvalidProfile(e.to_string()))
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::assembly::{AssemblyOptions, PredictorMode};
use crate::baselines::{TransitionConfig, TRANSITION1, TRANSITION2};
use crate::datamodel::{Archetype, GridParams, Horizons, LeadTimeGrid};
use crate::emos::FitOptions;
use crate::error::{Error, Result};
use crate::synthgen::{SynthProfile, WorldSpec};

/// Seed of the shipped synthetic benchmark.
pub const DEFAULT_SEED: u64 = 20240601;

/// Everything one pipeline invocation needs. Exactly one of `data` and `synth` is set.
///
/// Omitted tables and keys take their defaults, except that an omitted `[synth]` table
/// stays absent so that a file with only `[data]` is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Postprocessing init hour (UTC).
    #[serde(default = "default_init_hour")]
    pub init_hour: u32,
    /// Modes to run, in output order.
    #[serde(default = "default_modes")]
    pub modes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub horizons: Horizons,
    #[serde(default)]
    pub folds: FoldConfig,
    #[serde(default)]
    pub assembly: AssemblyOptions,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub transition: TransitionConfig,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_init_hour() -> u32 {
    12
}

fn default_modes() -> Vec<String> {
    ["persistence", "reference", TRANSITION1, TRANSITION2]
        .map(String::from)
        .to_vec()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: default_out_dir(),
            init_hour: default_init_hour(),
            modes: default_modes(),
            data: None,
            synth: Some(SynthConfig::default()),
            grid: GridParams::default(),
            horizons: Horizons::default(),
            folds: FoldConfig::default(),
            assembly: AssemblyOptions::default(),
            fit: FitOptions::default(),
            transition: TransitionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub observations: PathBuf,
    pub forecasts: PathBuf,
    /// Forecast rows are keyed by raw NWP init and lead rather than the postprocessing clock.
    #[serde(default)]
    pub raw_nwp_leads: bool,
    #[serde(default = "default_offset")]
    pub nwp_init_offset_h: u32,
    #[serde(default)]
    pub archetypes: BTreeMap<String, Archetype>,
}

fn default_offset() -> u32 {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_days: u32,
    pub start_date: NaiveDate,
    pub missing_rate: f64,
    pub stations: Vec<SynthStation>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let world = WorldSpec::default();
        SynthConfig {
            seed: DEFAULT_SEED,
            n_days: world.n_days,
            start_date: world.start_date,
            missing_rate: world.missing_rate,
            stations: Archetype::ALL
                .iter()
                .enumerate()
                .map(|(i, a)| SynthStation {
                    id: a.name().to_string(),
                    seed_offset: i as u64,
                    profile: SynthProfile::default_for(*a),
                })
                .collect(),
        }
    }
}

/// One synthetic station; its world seed is `synth.seed + seed_offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthStation {
    pub id: String,
    pub seed_offset: u64,
    pub profile: SynthProfile,
}

/// Either `k` year-blocked folds or explicit inclusive date ranges, one per fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FoldConfig {
    pub k: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ranges: Vec<[NaiveDate; 2]>,
}

impl Default for FoldConfig {
    fn default() -> Self {
        FoldConfig {
            k: 3,
            ranges: Vec::new(),
        }
    }
}

/// A mode as named in the config: a regression mode or a blending baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSpec {
    Emos(PredictorMode),
    Transition1,
    Transition2,
}

impl ModeSpec {
    pub fn name(self) -> String {
        match self {
            ModeSpec::Emos(m) => m.name(),
            ModeSpec::Transition1 => TRANSITION1.into(),
            ModeSpec::Transition2 => TRANSITION2.into(),
        }
    }
}

impl FromStr for ModeSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            TRANSITION1 => Ok(ModeSpec::Transition1),
            TRANSITION2 => Ok(ModeSpec::Transition2),
            other => other.parse().map(ModeSpec::Emos),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (&self.data, &self.synth) {
            (Some(_), Some(_)) => {
                return bad("set exactly one of [data] and [synth], not both".into())
            }
            (None, None) => return bad("set exactly one of [data] and [synth]".into()),
            _ => {}
        }
        if self.init_hour > 23 {
            return bad(format!("init_hour {} outside 0..=23", self.init_hour));
        }
        let grid = self.lead_grid()?;
        self.transition.validate(&grid).map_err(Error::Config)?;
        self.mode_specs()?;
        if self.folds.k == 0 && self.folds.ranges.is_empty() {
            return bad("folds.k must be at least 1".into());
        }
        if let Some(s) = &self.synth {
            if s.stations.is_empty() {
                return bad("[synth] needs at least one station".into());
            }
            for st in &s.stations {
                st.profile
                    .validate()
                    .map_err(|e| Error::Config(format!("station '{}': {e}", st.id)))?;
            }
        }
        Ok(())
    }

    pub fn lead_grid(&self) -> Result<LeadTimeGrid> {
        LeadTimeGrid::new(self.grid).map_err(Error::Config)
    }

    /// Parsed modes, duplicates removed, first occurrence kept.
    pub fn mode_specs(&self) -> Result<Vec<ModeSpec>> {
        if self.modes.is_empty() {
            return Err(Error::Config("modes must not be empty".into()));
        }
        let mut out: Vec<ModeSpec> = Vec::new();
        for m in &self.modes {
            let spec: ModeSpec = m.trim().parse().map_err(Error::Config)?;
            if !out.contains(&spec) {
                out.push(spec);
            }
        }
        Ok(out)
    }

    pub fn world_spec(&self) -> Option<WorldSpec> {
        self.synth.as_ref().map(|s| WorldSpec {
            n_days: s.n_days,
            start_date: s.start_date,
            init_hour: self.init_hour,
            missing_rate: s.missing_rate,
            horizons: self.horizons,
        })
    }

    /// Replaces the synthetic seed. Fails for data-backed configs.
    pub fn set_seed(&mut self, seed: u64) -> Result<()> {
        match &mut self.synth {
            Some(s) => {
                s.seed = seed;
                Ok(())
            }
            None => Err(Error::Config("--seed requires a [synth] config".into())),
        }
    }

    /// Replaces the mode list with a comma-separated one.
    pub fn set_modes(&mut self, list: &str) -> Result<()> {
        self.modes = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        self.mode_specs().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_survives_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn shipped_example_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/default.toml");
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn data_and_synth_are_exclusive() {
        let both = r#"
            [data]
            observations = "o.csv"
            forecasts = "f.csv"
            [synth]
            seed = 1
        "#;
        assert!(matches!(RunConfig::from_toml(both), Err(Error::Config(_))));
        let data_only = r#"
            [data]
            observations = "o.csv"
            forecasts = "f.csv"
        "#;
        let cfg = RunConfig::from_toml(data_only).unwrap();
        assert!(cfg.synth.is_none());
        assert_eq!(cfg.data.unwrap().nwp_init_offset_h, 12);
        assert!(RunConfig::from_toml("").is_err());
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set_modes("persistence,nonsense").is_err());
        cfg.set_modes("reference, transition2").unwrap();
        assert_eq!(
            cfg.mode_specs().unwrap(),
            vec![
                ModeSpec::Emos(PredictorMode::Reference),
                ModeSpec::Transition2
            ]
        );
    }
}

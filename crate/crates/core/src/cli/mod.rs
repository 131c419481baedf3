//! Pipeline commands behind the `seamless` binary.
//!
//! Every command takes a validated [`RunConfig`] and writes into `cfg.out_dir`,
//! creating it if needed. Progress and notices go to the supplied writer so
//! callers (and tests) decide where they end up. File writes happen on one
//! thread in a fixed order; only the per-lead fitting inside cross-validation
//! runs in parallel, so identical configs give byte-identical outputs.

pub mod charts;
pub mod config;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{DataConfig, FoldConfig, ModeSpec, RunConfig, SynthConfig, SynthStation};

use crate::assembly::{assemble, PredictorMode};
use crate::baselines::run_transitions;
use crate::datamodel::ingest::{load_dataset, write_forecasts, write_observations, IngestOptions};
use crate::datamodel::{Dataset, InitOffset, LeadTimeGrid, Source, StationData, Timestamp};
use crate::emos::{fit_emos_with, write_fits, EmosFit};
use crate::error::{AssemblyError, Error, Result};
use crate::synthgen::generate_dataset;
use crate::verification::{
    cv_predict, make_folds, score, write_average, CvOptions, FitAudit, FoldSpec, ModePredictions,
    ScoreTable, SKILL_TARGET,
};

pub const OBS_FILE: &str = "obs.csv";
pub const FORECAST_FILE: &str = "forecasts.csv";
pub const FIT_FILE: &str = "fits.csv";
pub const SCORE_FILE: &str = "scores.csv";
pub const SKILL_FILE: &str = "skill.csv";
pub const AVERAGE_FILE: &str = "skill_station_average.csv";
pub const MAE_CHART: &str = "mae.svg";
pub const SKILL_CHART: &str = "skill.svg";

/// Modes the persistence mode is compared against, when they are run.
const SKILL_REFERENCES: [&str; 3] = ["reference", "transition1", "transition2"];

fn create_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_csv_file<T>(
    path: &Path,
    body: impl FnOnce(BufWriter<File>) -> csv::Result<T>,
) -> Result<T> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    body(BufWriter::new(file)).map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn write_text_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn say(out: &mut dyn Write, msg: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(msg)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::io("<stdout>", e))
}

/// Builds or reads the dataset the config points at.
pub fn load_data(cfg: &RunConfig, out: &mut dyn Write) -> Result<Dataset> {
    let grid = cfg.lead_grid()?;
    if let (Some(synth), Some(world)) = (&cfg.synth, cfg.world_spec()) {
        let stations: Vec<_> = synth
            .stations
            .iter()
            .map(|s| {
                (
                    s.id.clone(),
                    s.profile,
                    synth.seed.wrapping_add(s.seed_offset),
                )
            })
            .collect();
        return Ok(generate_dataset(&stations, &world, &grid)?);
    }
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("no [data] or [synth] section".into()))?;
    let opts = IngestOptions {
        horizons: cfg.horizons,
        init_hour: cfg.init_hour,
        archetypes: data.archetypes.clone(),
        nwp_offset: data.raw_nwp_leads.then_some(InitOffset {
            init_offset_h: data.nwp_init_offset_h,
        }),
    };
    let (ds, report) = load_dataset(&data.observations, &data.forecasts, &opts)?;
    say(
        out,
        format_args!(
            "ingested {} rows, rejected {}",
            report.accepted, report.rejected
        ),
    )?;
    for d in report.diagnostics.iter().take(10) {
        say(out, format_args!("  {d}"))?;
    }
    if ds.stations().is_empty() {
        return Err(Error::Config("input files contain no stations".into()));
    }
    Ok(ds)
}

/// All init times across stations, ascending.
fn all_inits(ds: &Dataset) -> Vec<Timestamp> {
    let set: BTreeSet<Timestamp> = ds.stations().iter().flat_map(|s| s.inits()).collect();
    set.into_iter().collect()
}

pub fn build_folds(cfg: &RunConfig, ds: &Dataset) -> Result<FoldSpec> {
    let inits = all_inits(ds);
    let folds = if cfg.folds.ranges.is_empty() {
        make_folds(&inits, cfg.folds.k)?
    } else {
        let ranges: Vec<_> = cfg.folds.ranges.iter().map(|[a, b]| (*a, *b)).collect();
        FoldSpec::from_ranges(&inits, &ranges)?
    };
    Ok(folds)
}

fn cv_options(cfg: &RunConfig, specs: &[ModeSpec]) -> CvOptions {
    let names: Vec<String> = specs.iter().map(|s| s.name()).collect();
    let skill_references = if names.iter().any(|n| n == SKILL_TARGET) {
        SKILL_REFERENCES
            .iter()
            .filter(|r| names.iter().any(|n| n == *r))
            .map(|r| r.to_string())
            .collect()
    } else {
        Vec::new()
    };
    CvOptions {
        assembly: cfg.assembly,
        fit: cfg.fit,
        skill_references,
    }
}

/// Out-of-sample predictions for every requested mode at one station, in `specs` order.
pub fn predict_station(
    station: &StationData,
    grid: &LeadTimeGrid,
    folds: &FoldSpec,
    specs: &[ModeSpec],
    cfg: &RunConfig,
    opts: &CvOptions,
) -> Result<(Vec<ModePredictions>, Vec<FitAudit>)> {
    let wants_transitions = specs
        .iter()
        .any(|s| matches!(s, ModeSpec::Transition1 | ModeSpec::Transition2));
    let blended = if wants_transitions {
        Some(run_transitions(
            station,
            grid,
            folds,
            &cfg.transition,
            opts,
        )?)
    } else {
        None
    };
    let mut preds = Vec::with_capacity(specs.len());
    let mut audit = Vec::new();
    for spec in specs {
        let p = match (spec, &blended) {
            (ModeSpec::Emos(PredictorMode::Reference), Some([r, _, _])) => r.clone(),
            (ModeSpec::Transition1, Some([_, t1, _])) => t1.clone(),
            (ModeSpec::Transition2, Some([_, _, t2])) => t2.clone(),
            (ModeSpec::Emos(mode), _) => {
                let (p, a) = cv_predict(station, grid, *mode, folds, opts)?;
                audit.extend(a);
                p
            }
            _ => unreachable!("transitions are computed whenever requested"),
        };
        preds.push(p);
    }
    Ok((preds, audit))
}

/// Cross-validated score table for the configured modes.
pub fn verify_dataset(cfg: &RunConfig, ds: &Dataset, specs: &[ModeSpec]) -> Result<ScoreTable> {
    let grid = cfg.lead_grid()?;
    let folds = build_folds(cfg, ds)?;
    let opts = cv_options(cfg, specs);
    let mut preds = Vec::new();
    for st in ds.stations() {
        preds.extend(predict_station(st, &grid, &folds, specs, cfg, &opts)?.0);
    }
    Ok(score(ds, &preds, &opts.skill_references)?)
}

/// Fits every regression mode on all data, per station and lead.
pub fn fit_all(cfg: &RunConfig, ds: &Dataset, specs: &[ModeSpec]) -> Result<Vec<EmosFit>> {
    let grid = cfg.lead_grid()?;
    let mut fits = Vec::new();
    for st in ds.stations() {
        let inits = st.inits();
        for spec in specs {
            let ModeSpec::Emos(mode) = *spec else {
                continue;
            };
            let per_lead: Vec<Option<EmosFit>> = grid
                .leads()
                .par_iter()
                .map(|&lead| {
                    let dm = match assemble(st, lead, mode, &grid, &inits, &cfg.assembly) {
                        Ok(dm) => dm,
                        Err(AssemblyError::NoPredictor { .. }) => return Ok(None),
                        Err(e) => return Err(Error::Assembly(e)),
                    };
                    fit_emos_with(&dm, &cfg.fit)
                        .map(Some)
                        .map_err(|source| Error::CellFit {
                            station: st.meta.id.clone(),
                            mode: mode.name(),
                            lead_h: lead,
                            source,
                        })
                })
                .collect::<Result<_>>()?;
            fits.extend(per_lead.into_iter().flatten());
        }
    }
    Ok(fits)
}

/// `synth`: writes the observation and forecast CSVs of the configured synthetic world.
pub fn cmd_synth(cfg: &RunConfig, out: &mut dyn Write) -> Result<(usize, usize)> {
    if cfg.synth.is_none() {
        return Err(Error::Config("synth needs a [synth] section".into()));
    }
    let ds = load_data(cfg, out)?;
    create_out_dir(&cfg.out_dir)?;
    let obs_path = cfg.out_dir.join(OBS_FILE);
    let fc_path = cfg.out_dir.join(FORECAST_FILE);
    let n_obs = write_csv_file(&obs_path, |w| write_observations(w, &ds))?;
    let n_fc = write_csv_file(&fc_path, |w| write_forecasts(w, &ds))?;
    say(
        out,
        format_args!("wrote {n_obs} observation rows to {}", obs_path.display()),
    )?;
    say(
        out,
        format_args!("wrote {n_fc} forecast rows to {}", fc_path.display()),
    )?;
    Ok((n_obs, n_fc))
}

/// `fit`: full-data fits of the regression modes, written to `fits.csv`.
pub fn cmd_fit(cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf> {
    let specs = cfg.mode_specs()?;
    let ds = load_data(cfg, out)?;
    let fits = fit_all(cfg, &ds, &specs)?;
    create_out_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join(FIT_FILE);
    write_csv_file(&path, |w| write_fits(w, &fits))?;
    let flagged = fits.iter().filter(|f| f.rank_deficient).count();
    say(
        out,
        format_args!("wrote {} fits to {}", fits.len(), path.display()),
    )?;
    if flagged > 0 {
        say(
            out,
            format_args!("note: {flagged} fits had rank-deficient designs"),
        )?;
    }
    Ok(path)
}

fn write_tables(cfg: &RunConfig, table: &ScoreTable, out: &mut dyn Write) -> Result<()> {
    create_out_dir(&cfg.out_dir)?;
    let scores = cfg.out_dir.join(SCORE_FILE);
    let skill = cfg.out_dir.join(SKILL_FILE);
    write_csv_file(&scores, |w| table.write_scores(w))?;
    write_csv_file(&skill, |w| table.write_skill(w))?;
    say(
        out,
        format_args!(
            "wrote {} score rows to {}",
            table.rows.len(),
            scores.display()
        ),
    )?;
    say(
        out,
        format_args!(
            "wrote {} skill rows to {}",
            table.skill.len(),
            skill.display()
        ),
    )?;
    if !table.skill.is_empty() {
        let avg = cfg.out_dir.join(AVERAGE_FILE);
        let rows = table.station_average()?;
        write_csv_file(&avg, |w| write_average(w, &rows))?;
        say(
            out,
            format_args!("wrote station-averaged skill to {}", avg.display()),
        )?;
    }
    Ok(())
}

/// `verify`: cross-validated score tables.
pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<ScoreTable> {
    let specs = cfg.mode_specs()?;
    let ds = load_data(cfg, out)?;
    let table = verify_dataset(cfg, &ds, &specs)?;
    write_tables(cfg, &table, out)?;
    Ok(table)
}

/// Lead where `source` runs out and the next grid lead after it.
fn handovers(cfg: &RunConfig, grid: &LeadTimeGrid) -> Vec<(u32, u32)> {
    [Source::Aro, Source::Det]
        .iter()
        .filter_map(|s| {
            let h = cfg.horizons.get(*s);
            let next = grid.leads().iter().copied().find(|l| *l > h)?;
            grid.contains(h).then_some((h, next))
        })
        .collect()
}

fn print_summary(
    cfg: &RunConfig,
    grid: &LeadTimeGrid,
    table: &ScoreTable,
    out: &mut dyn Write,
) -> Result<()> {
    let pairs = handovers(cfg, grid);
    say(out, format_args!("MAE across model horizons:"))?;
    for st in table.stations() {
        for mode in table.modes() {
            let mut line = format!("  {st:<10} {mode:<22}");
            for (a, b) in &pairs {
                match (table.mae_at(&st, &mode, *a), table.mae_at(&st, &mode, *b)) {
                    (Some(x), Some(y)) => line.push_str(&format!(
                        "  MAE({a})={x:.3} MAE({b})={y:.3} jump={:+.3}",
                        y - x
                    )),
                    _ => line.push_str(&format!("  {a}/{b}: n/a")),
                }
            }
            say(out, format_args!("{line}"))?;
        }
    }
    Ok(())
}

/// `plot`: renders both charts from the score CSVs in `out_dir`.
pub fn cmd_plot(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let grid = cfg.lead_grid()?;
    let scores_path = cfg.out_dir.join(SCORE_FILE);
    let skill_path = cfg.out_dir.join(SKILL_FILE);
    let open = |p: &Path| File::open(p).map_err(|e| Error::io(p, e));
    let table = ScoreTable::read(open(&scores_path)?, open(&skill_path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", cfg.out_dir.display())))?;
    let markers: Vec<u32> = handovers(cfg, &grid).iter().map(|(h, _)| *h).collect();
    let mae_path = cfg.out_dir.join(MAE_CHART);
    write_text_file(
        &mae_path,
        &charts::mae_chart(&table, grid.max_lead(), &markers),
    )?;
    say(out, format_args!("wrote {}", mae_path.display()))?;
    let skill_path = cfg.out_dir.join(SKILL_CHART);
    match charts::skill_chart(&table, grid.max_lead(), &markers) {
        Some(svg) => {
            write_text_file(&skill_path, &svg)?;
            say(out, format_args!("wrote {}", skill_path.display()))?;
        }
        None => {
            if skill_path.exists() {
                std::fs::remove_file(&skill_path).map_err(|e| Error::io(&skill_path, e))?;
            }
            say(
                out,
                format_args!(
                    "notice: skill chart omitted; it needs the persistence mode and at least one of {}",
                    SKILL_REFERENCES.join(", ")
                ),
            )?;
        }
    }
    Ok(())
}

/// `run`: fits, cross-validated scores, charts and a horizon summary.
pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write) -> Result<ScoreTable> {
    let specs = cfg.mode_specs()?;
    let grid = cfg.lead_grid()?;
    let ds = load_data(cfg, out)?;
    let fits = fit_all(cfg, &ds, &specs)?;
    create_out_dir(&cfg.out_dir)?;
    let fit_path = cfg.out_dir.join(FIT_FILE);
    write_csv_file(&fit_path, |w| write_fits(w, &fits))?;
    say(
        out,
        format_args!("wrote {} fits to {}", fits.len(), fit_path.display()),
    )?;
    let table = verify_dataset(cfg, &ds, &specs)?;
    write_tables(cfg, &table, out)?;
    cmd_plot(cfg, out)?;
    print_summary(cfg, &grid, &table, out)?;
    Ok(table)
}

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::metrics::skill_score;
use crate::error::VerifyError;

pub const SCORE_HEADER: &str = "station,mode,lead_h,n_cases,mae";
pub const SKILL_HEADER: &str = "station,lead_h,skill_pct,reference_mode";
pub const AVERAGE_HEADER: &str =
    "lead_h,reference_mode,mean_of_station_skill_pct,skill_of_pooled_mae_pct";

/// Mode whose skill is reported against each reference.
pub const SKILL_TARGET: &str = "persistence";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub station: String,
    pub mode: String,
    pub lead_h: u32,
    pub n_cases: usize,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkillRow {
    pub station: String,
    pub lead_h: u32,
    pub skill_pct: f64,
    pub reference_mode: String,
}

/// Station-averaged skill, both as the mean of per-station skills and as the skill of
/// case-weighted pooled MAEs.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageSkillRow {
    pub lead_h: u32,
    pub reference_mode: String,
    pub mean_of_station_skill_pct: f64,
    pub skill_of_pooled_mae_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
    pub skill: Vec<SkillRow>,
}

impl ScoreTable {
    pub fn mae_at(&self, station: &str, mode: &str, lead_h: u32) -> Option<f64> {
        self.row(station, mode, lead_h).map(|r| r.mae)
    }

    pub fn row(&self, station: &str, mode: &str, lead_h: u32) -> Option<&ScoreRow> {
        self.rows
            .iter()
            .find(|r| r.station == station && r.mode == mode && r.lead_h == lead_h)
    }

    pub fn skill_at(&self, station: &str, reference: &str, lead_h: u32) -> Option<f64> {
        self.skill
            .iter()
            .find(|r| r.station == station && r.reference_mode == reference && r.lead_h == lead_h)
            .map(|r| r.skill_pct)
    }

    /// MAE curve `(lead, mae)` for one station and mode, in lead order.
    pub fn curve(&self, station: &str, mode: &str) -> Vec<(u32, f64)> {
        let mut c: Vec<(u32, f64)> = self
            .rows
            .iter()
            .filter(|r| r.station == station && r.mode == mode)
            .map(|r| (r.lead_h, r.mae))
            .collect();
        c.sort_by_key(|p| p.0);
        c
    }

    pub fn skill_curve(&self, station: &str, reference: &str) -> Vec<(u32, f64)> {
        let mut c: Vec<(u32, f64)> = self
            .skill
            .iter()
            .filter(|r| r.station == station && r.reference_mode == reference)
            .map(|r| (r.lead_h, r.skill_pct))
            .collect();
        c.sort_by_key(|p| p.0);
        c
    }

    /// Distinct values in first-seen order.
    fn distinct<'a>(it: impl Iterator<Item = &'a String>) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in it {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }

    pub fn stations(&self) -> Vec<String> {
        Self::distinct(self.rows.iter().map(|r| &r.station))
    }

    pub fn modes(&self) -> Vec<String> {
        Self::distinct(self.rows.iter().map(|r| &r.mode))
    }

    pub fn references(&self) -> Vec<String> {
        Self::distinct(self.skill.iter().map(|r| &r.reference_mode))
    }

    /// Appends skill rows of [`SKILL_TARGET`] against `reference` wherever both are scored.
    pub fn add_skill(&mut self, reference: &str) -> Result<(), VerifyError> {
        let mut new_rows = Vec::new();
        for r in self.rows.iter().filter(|r| r.mode == SKILL_TARGET) {
            if let Some(mae_ref) = self.mae_at(&r.station, reference, r.lead_h) {
                new_rows.push(SkillRow {
                    station: r.station.clone(),
                    lead_h: r.lead_h,
                    skill_pct: skill_score(r.mae, mae_ref)?,
                    reference_mode: reference.to_string(),
                });
            }
        }
        self.skill.extend(new_rows);
        Ok(())
    }

    pub fn station_average(&self) -> Result<Vec<AverageSkillRow>, VerifyError> {
        // (reference, lead) -> (sum of skills, station count, summed |e| of target, of reference)
        let mut acc: BTreeMap<(String, u32), (f64, usize, f64, f64)> = BTreeMap::new();
        let order = self.references();
        for s in &self.skill {
            let target = self
                .row(&s.station, SKILL_TARGET, s.lead_h)
                .expect("skill rows derive from scored target rows");
            let reference = self
                .row(&s.station, &s.reference_mode, s.lead_h)
                .expect("skill rows derive from scored reference rows");
            let e = acc.entry((s.reference_mode.clone(), s.lead_h)).or_default();
            e.0 += s.skill_pct;
            e.1 += 1;
            e.2 += target.mae * target.n_cases as f64;
            e.3 += reference.mae * reference.n_cases as f64;
        }
        let mut out = Vec::new();
        for reference in &order {
            for ((r, lead), (sum, count, abs_t, abs_r)) in &acc {
                if r != reference {
                    continue;
                }
                out.push(AverageSkillRow {
                    lead_h: *lead,
                    reference_mode: r.clone(),
                    mean_of_station_skill_pct: sum / *count as f64,
                    skill_of_pooled_mae_pct: skill_score(*abs_t, *abs_r)?,
                });
            }
        }
        Ok(out)
    }

    pub fn write_scores<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SCORE_HEADER.split(','))?;
        for r in &self.rows {
            w.write_record([
                r.station.as_str(),
                &r.mode,
                &r.lead_h.to_string(),
                &r.n_cases.to_string(),
                &r.mae.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_skill<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SKILL_HEADER.split(','))?;
        for r in &self.skill {
            w.write_record([
                r.station.as_str(),
                &r.lead_h.to_string(),
                &r.skill_pct.to_string(),
                &r.reference_mode,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R1: Read, R2: Read>(scores: R1, skill: R2) -> Result<ScoreTable, String> {
        let rows = read_records(scores, SCORE_HEADER, |rec, line| {
            Ok(ScoreRow {
                station: rec[0].to_string(),
                mode: rec[1].to_string(),
                lead_h: parse(&rec[2], "lead_h", line)?,
                n_cases: parse(&rec[3], "n_cases", line)?,
                mae: parse(&rec[4], "mae", line)?,
            })
        })?;
        let skill = read_records(skill, SKILL_HEADER, |rec, line| {
            Ok(SkillRow {
                station: rec[0].to_string(),
                lead_h: parse(&rec[1], "lead_h", line)?,
                skill_pct: parse(&rec[2], "skill_pct", line)?,
                reference_mode: rec[3].to_string(),
            })
        })?;
        Ok(ScoreTable { rows, skill })
    }
}

pub fn write_average<W: Write>(out: W, rows: &[AverageSkillRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AVERAGE_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.lead_h.to_string(),
            r.reference_mode.clone(),
            r.mean_of_station_skill_pct.to_string(),
            r.skill_of_pooled_mae_pct.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str, line: u64) -> Result<T, String> {
    s.parse()
        .map_err(|_| format!("line {line}: bad {what} '{s}'"))
}

fn read_records<R: Read, T>(
    input: R,
    header: &str,
    mut f: impl FnMut(&csv::StringRecord, u64) -> Result<T, String>,
) -> Result<Vec<T>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if got.join(",") != header {
        return Err(format!("expected header '{header}'"));
    }
    let n = header.split(',').count();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != n {
            return Err(format!("line {line}: expected {n} fields"));
        }
        out.push(f(&rec, line)?);
    }
    Ok(out)
}

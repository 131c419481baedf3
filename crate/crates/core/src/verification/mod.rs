//! Cross-validated verification: year-blocked folds, MAE per lead, and MAE skill
//! scores of the persistence mode against named reference modes.

mod cv;
mod folds;
mod metrics;
mod table;

pub use cv::{
    cross_validate, cv_predict, cv_predict_leads, score, CvOptions, CvOutcome, FitAudit,
    ModePredictions,
};
pub use folds::{make_folds, FoldSpec};
pub use metrics::{mae, skill_score};
pub use table::{
    write_average, AverageSkillRow, ScoreRow, ScoreTable, SkillRow, AVERAGE_HEADER, SCORE_HEADER,
    SKILL_HEADER, SKILL_TARGET,
};

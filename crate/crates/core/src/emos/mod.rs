//! Homoscedastic Gaussian regression fitted by maximum likelihood.
//!
//! With a constant scale the likelihood is maximised by the least-squares
//! location coefficients and `sigma^2 = SSR / n`, so no iterative optimiser is
//! involved. [`nll`] exposes the objective so that claim can be checked.

mod qr;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::assembly::{Column, DesignMatrix, PredictorMode, PredictorRow};
use crate::datamodel::Timestamp;
use crate::error::FitError;

pub use qr::{lstsq_pivoted, LstsqSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Lower bound on the fitted scale, in degC.
    pub sigma_floor: f64,
    /// Relative pivot threshold below which a column counts as dependent.
    pub rank_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            sigma_floor: 0.01,
            rank_tol: 1e-10,
        }
    }
}

/// Fitted coefficients and scale for one (station, lead, mode) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EmosFit {
    pub station: String,
    pub mode: PredictorMode,
    pub lead_h: u32,
    /// One coefficient per design column, in design order.
    pub coefficients: Vec<(Column, f64)>,
    pub sigma: f64,
    pub n_train: usize,
    /// Set when the solver zeroed one or more dependent columns.
    pub rank_deficient: bool,
    /// Training residuals `y - mu`, in design row order. Empty for fits read from CSV.
    pub residuals: Vec<f64>,
}

impl EmosFit {
    pub fn coefficient(&self, c: Column) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|(col, _)| *col == c)
            .map(|(_, b)| *b)
    }

    fn same_columns(&self, dm: &DesignMatrix) -> bool {
        self.coefficients.len() == dm.columns.len()
            && dm.columns.iter().all(|c| self.coefficient(*c).is_some())
    }
}

/// Predictive distribution for one case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrediction {
    pub mu: f64,
    pub sigma: f64,
}

pub fn fit_emos(dm: &DesignMatrix) -> Result<EmosFit, FitError> {
    fit_emos_with(dm, &FitOptions::default())
}

pub fn fit_emos_with(dm: &DesignMatrix, opts: &FitOptions) -> Result<EmosFit, FitError> {
    let (n, p) = (dm.n_rows(), dm.n_cols());
    if n == 0 || n < p {
        return Err(FitError::TooFewRows { rows: n, cols: p });
    }
    if dm
        .target
        .iter()
        .chain(dm.data.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(FitError::NonFinite);
    }
    let sol = lstsq_pivoted(&dm.data, &dm.target, opts.rank_tol);
    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            let mu: f64 = sol
                .coefficients
                .iter()
                .zip(&dm.data)
                .map(|(b, col)| b * col[i])
                .sum();
            dm.target[i] - mu
        })
        .collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma = (ssr / n as f64).sqrt().max(opts.sigma_floor);
    Ok(EmosFit {
        station: dm.station.clone(),
        mode: dm.mode,
        lead_h: dm.lead_h,
        coefficients: dm.columns.iter().copied().zip(sol.coefficients).collect(),
        sigma,
        n_train: n,
        rank_deficient: sol.rank < p,
        residuals,
    })
}

/// Negative Gaussian log-likelihood of `dm.target` under `fit`, summed over rows.
pub fn nll(fit: &EmosFit, dm: &DesignMatrix) -> Result<f64, FitError> {
    if !fit.same_columns(dm) {
        return Err(FitError::ColumnMismatch);
    }
    let var = fit.sigma * fit.sigma;
    let norm = 0.5 * (2.0 * PI * var).ln();
    let total = (0..dm.n_rows())
        .map(|i| {
            let mu = predict(fit, &dm.row(i)).expect("columns checked").mu;
            let r = dm.target[i] - mu;
            norm + r * r / (2.0 * var)
        })
        .sum();
    Ok(total)
}

pub fn predict(fit: &EmosFit, row: &PredictorRow) -> Result<GaussianPrediction, FitError> {
    let mut mu = 0.0;
    for &(c, b) in &fit.coefficients {
        let x = row.get(c).ok_or(FitError::MissingPredictor(c))?;
        mu += b * x;
    }
    Ok(GaussianPrediction {
        mu,
        sigma: fit.sigma,
    })
}

/// In-sample NLL of two nested designs, each refitted on the rows (inits) they share.
///
/// Returns `(nll_larger, nll_smaller)`; for nested column sets the first never exceeds the second.
pub fn nested_nll(
    larger: &DesignMatrix,
    smaller: &DesignMatrix,
    opts: &FitOptions,
) -> Result<(f64, f64), FitError> {
    let in_smaller: BTreeSet<Timestamp> = smaller.inits.iter().copied().collect();
    let shared: BTreeSet<Timestamp> = larger
        .inits
        .iter()
        .filter(|t| in_smaller.contains(t))
        .copied()
        .collect();
    let a = larger.filter_rows(|t| shared.contains(&t));
    let b = smaller.filter_rows(|t| shared.contains(&t));
    let fa = fit_emos_with(&a, opts)?;
    let fb = fit_emos_with(&b, opts)?;
    Ok((nll(&fa, &a)?, nll(&fb, &b)?))
}

pub const FIT_HEADER: &str = "station,mode,lead_h,n_train,sigma,beta_intercept,beta_pers,beta_aro,beta_det,beta_ensmu,beta_sin1,beta_cos1,beta_sin2,beta_cos2";

/// Writes one row per fit; columns absent from a fit's mode are empty fields.
pub fn write_fits<W: Write>(out: W, fits: &[EmosFit]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIT_HEADER.split(','))?;
    for f in fits {
        let mut rec = vec![
            f.station.clone(),
            f.mode.name(),
            f.lead_h.to_string(),
            f.n_train.to_string(),
            f.sigma.to_string(),
        ];
        rec.extend(
            Column::ALL
                .iter()
                .map(|c| f.coefficient(*c).map(|b| b.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a fit CSV. Residuals are not stored and come back empty.
pub fn read_fits<R: Read>(input: R) -> Result<Vec<EmosFit>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != FIT_HEADER {
        return Err(format!("fit CSV header must be '{FIT_HEADER}'"));
    }
    let mut fits = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let err = |what: &str| format!("line {line}: bad {what}");
        let mut coefficients = Vec::new();
        for (k, c) in Column::ALL.iter().enumerate() {
            let field = &rec[5 + k];
            if !field.is_empty() {
                coefficients.push((*c, field.parse().map_err(|_| err(c.name()))?));
            }
        }
        fits.push(EmosFit {
            station: rec[0].to_string(),
            mode: rec[1].parse().map_err(|_| err("mode"))?,
            lead_h: rec[2].parse().map_err(|_| err("lead_h"))?,
            n_train: rec[3].parse().map_err(|_| err("n_train"))?,
            sigma: rec[4].parse().map_err(|_| err("sigma"))?,
            coefficients,
            rank_deficient: false,
            residuals: Vec::new(),
        });
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn design(cols: Vec<Column>, data: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        DesignMatrix::from_columns(cols, data, y).unwrap()
    }

    fn intercept_only(y: Vec<f64>) -> DesignMatrix {
        let n = y.len();
        design(vec![Column::Intercept], vec![vec![1.0; n]], y)
    }

    #[test]
    fn intercept_only_closed_form() {
        let fit = fit_emos(&intercept_only(vec![1.0, 2.0, 3.0])).unwrap();
        assert!((fit.coefficient(Column::Intercept).unwrap() - 2.0).abs() < 1e-14);
        assert!((fit.sigma - (2.0_f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn noise_free_fit_clamps_to_floor() {
        let x = vec![0.5, 1.5, -2.0, 4.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 0.7 * v).collect();
        let dm = design(
            vec![Column::Intercept, Column::Aro],
            vec![vec![1.0; 5], x],
            y,
        );
        let fit = fit_emos(&dm).unwrap();
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
        assert_eq!(fit.sigma, 0.01);
    }

    #[test]
    fn too_few_rows() {
        let dm = design(
            vec![Column::Intercept, Column::Aro, Column::Det],
            vec![vec![1.0; 2], vec![1.0, 2.0], vec![3.0, 1.0]],
            vec![1.0, 2.0],
        );
        assert_eq!(
            fit_emos(&dm),
            Err(FitError::TooFewRows { rows: 2, cols: 3 })
        );
    }

    #[test]
    fn nll_at_mode_of_unit_gaussian() {
        let dm = intercept_only(vec![4.0]);
        let fit = EmosFit {
            station: String::new(),
            mode: PredictorMode::Reference,
            lead_h: 1,
            coefficients: vec![(Column::Intercept, 4.0)],
            sigma: 1.0,
            n_train: 1,
            rank_deficient: false,
            residuals: vec![0.0],
        };
        let v = nll(&fit, &dm).unwrap();
        assert!((v - 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((v - 0.9189).abs() < 1e-4);
    }

    #[test]
    fn nll_rejects_mismatched_columns() {
        let fit = fit_emos(&intercept_only(vec![1.0, 2.0])).unwrap();
        let other = design(
            vec![Column::Intercept, Column::Pers],
            vec![vec![1.0; 2], vec![0.0, 1.0]],
            vec![1.0, 2.0],
        );
        assert_eq!(nll(&fit, &other), Err(FitError::ColumnMismatch));
    }

    #[test]
    fn predict_linearity_and_missing() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let p = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let y: Vec<f64> = x
            .iter()
            .zip(&p)
            .map(|(a, b): (&f64, &f64)| 1.0 + 0.5 * a - 0.25 * b + (a * b).sin())
            .collect();
        let dm = design(
            vec![Column::Intercept, Column::Pers, Column::Aro],
            vec![vec![1.0; 6], p, x],
            y,
        );
        let fit = fit_emos(&dm).unwrap();
        let zero = PredictorRow::default()
            .with(Column::Intercept, 1.0)
            .with(Column::Pers, 0.0)
            .with(Column::Aro, 0.0);
        assert_eq!(
            predict(&fit, &zero).unwrap().mu,
            fit.coefficient(Column::Intercept).unwrap()
        );
        let base = zero.with(Column::Pers, 10.0).with(Column::Aro, 2.0);
        let shifted = base.with(Column::Pers, 11.0);
        let d = predict(&fit, &shifted).unwrap().mu - predict(&fit, &base).unwrap().mu;
        assert!((d - fit.coefficient(Column::Pers).unwrap()).abs() < 1e-12);
        for i in 0..dm.n_rows() {
            let mu = predict(&fit, &dm.row(i)).unwrap().mu;
            assert!((dm.target[i] - mu - fit.residuals[i]).abs() < 1e-12);
        }
        let missing = PredictorRow::default().with(Column::Intercept, 1.0);
        assert_eq!(
            predict(&fit, &missing),
            Err(FitError::MissingPredictor(Column::Pers))
        );
    }

    #[test]
    fn collinear_column_flagged_and_zeroed() {
        let x = vec![1.0, 2.0, 3.0, 5.0, 8.0];
        let y = vec![2.0, 2.5, 3.9, 6.1, 9.0];
        let frozen = vec![7.0; 5];
        let dm = design(
            vec![Column::Intercept, Column::Aro, Column::Det],
            vec![vec![1.0; 5], frozen, x],
            y,
        );
        let fit = fit_emos(&dm).unwrap();
        assert!(fit.rank_deficient);
        let zeroed = [Column::Intercept, Column::Aro]
            .iter()
            .filter(|c| fit.coefficient(**c) == Some(0.0))
            .count();
        assert_eq!(zeroed, 1);
        let mean_resid: f64 = fit.residuals.iter().sum::<f64>() / 5.0;
        assert!(mean_resid.abs() < 1e-12);
    }

    #[test]
    fn fit_csv_roundtrip() {
        let dm = intercept_only(vec![1.0, 2.0, 3.5]);
        let mut fit = fit_emos(&dm).unwrap();
        fit.station = "vie".into();
        fit.lead_h = 7;
        let mut buf = Vec::new();
        write_fits(&mut buf, std::slice::from_ref(&fit)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("vie,reference,7,3,"));
        assert!(text.lines().nth(1).unwrap().ends_with(",,,,,,,,"));
        let back = read_fits(buf.as_slice()).unwrap();
        assert_eq!(back[0].coefficients, fit.coefficients);
        assert_eq!(back[0].sigma, fit.sigma);
        let mut again = Vec::new();
        write_fits(&mut again, &back).unwrap();
        assert_eq!(again, buf);
    }

    fn lcg_design(seed: u64, n: usize, shift: f64) -> DesignMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a: Vec<f64> = (0..n).map(|_| next() * 10.0).collect();
        let b: Vec<f64> = (0..n).map(|_| next() * 4.0).collect();
        let y: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(a, b)| 0.3 * a - b + next())
            .collect();
        let shifted = a.iter().map(|v| v + shift).collect();
        design(
            vec![Column::Intercept, Column::Aro, Column::Det],
            vec![vec![1.0; n], shifted, b],
            y,
        )
    }

    proptest! {
        #[test]
        fn residuals_have_zero_mean(seed in any::<u64>()) {
            let fit = fit_emos(&lcg_design(seed, 30, 0.0)).unwrap();
            let m: f64 = fit.residuals.iter().sum::<f64>() / 30.0;
            prop_assert!(m.abs() < 1e-10);
            let ssr: f64 = fit.residuals.iter().map(|r| r * r).sum();
            prop_assert!((fit.sigma - (ssr / 30.0).sqrt()).abs() < 1e-10);
        }

        #[test]
        fn shifting_a_column_leaves_fitted_values(seed in any::<u64>(), c in -50.0f64..50.0) {
            let a = lcg_design(seed, 25, 0.0);
            let b = lcg_design(seed, 25, c);
            let fa = fit_emos(&a).unwrap();
            let fb = fit_emos(&b).unwrap();
            for (ra, rb) in fa.residuals.iter().zip(&fb.residuals) {
                prop_assert!((ra - rb).abs() < 1e-8);
            }
            let slope = |f: &EmosFit| f.coefficient(Column::Aro).unwrap();
            prop_assert!((slope(&fa) - slope(&fb)).abs() < 1e-8);
            let shift = fa.coefficient(Column::Intercept).unwrap() - fb.coefficient(Column::Intercept).unwrap();
            prop_assert!((shift - c * slope(&fa)).abs() < 1e-7);
        }

        #[test]
        fn mle_beats_perturbed_coefficients(seed in any::<u64>(), d in -1.0f64..1.0) {
            let dm = lcg_design(seed, 40, 0.0);
            let fit = fit_emos(&dm).unwrap();
            let mut other = fit.clone();
            other.coefficients[1].1 += d;
            prop_assert!(nll(&fit, &dm).unwrap() <= nll(&other, &dm).unwrap() + 1e-12);
        }
    }
}

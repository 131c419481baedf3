use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};

use crate::datamodel::Timestamp;
use crate::error::VerifyError;

/// Assignment of init dates to cross-validation folds.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSpec {
    pub k: usize,
    assignment: BTreeMap<NaiveDate, usize>,
}

impl FoldSpec {
    /// Assigns each date to the fold of its range. Ranges are inclusive and must not overlap;
    /// every date must fall inside one of them.
    pub fn from_ranges(
        init_dates: &[Timestamp],
        ranges: &[(NaiveDate, NaiveDate)],
    ) -> Result<Self, VerifyError> {
        if ranges.is_empty() {
            return Err(VerifyError::ZeroFolds);
        }
        let mut assignment = BTreeMap::new();
        for t in init_dates {
            let d = t.date();
            let hits: Vec<usize> = ranges
                .iter()
                .enumerate()
                .filter(|(_, (lo, hi))| *lo <= d && d <= *hi)
                .map(|(i, _)| i)
                .collect();
            match hits.as_slice() {
                [f] => {
                    assignment.insert(d, *f);
                }
                _ => return Err(VerifyError::BadRanges(d.to_string())),
            }
        }
        let spec = FoldSpec {
            k: ranges.len(),
            assignment,
        };
        if (0..spec.k).any(|f| spec.dates_in(f).next().is_none()) {
            return Err(VerifyError::BadRanges("an empty range".into()));
        }
        Ok(spec)
    }

    pub fn fold_of(&self, init: Timestamp) -> Option<usize> {
        self.assignment.get(&init.date()).copied()
    }

    pub fn dates_in(&self, fold: usize) -> impl Iterator<Item = NaiveDate> + '_ {
        self.assignment
            .iter()
            .filter(move |(_, f)| **f == fold)
            .map(|(d, _)| *d)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.assignment.keys().copied()
    }

    /// Init times scored in `fold`.
    pub fn test_inits(&self, inits: &[Timestamp], fold: usize) -> Vec<Timestamp> {
        inits
            .iter()
            .copied()
            .filter(|t| self.fold_of(*t) == Some(fold))
            .collect()
    }

    /// Init times used to fit the model scored in `fold`: every other fold.
    /// With a single fold the fit is in-sample.
    pub fn train_inits(&self, inits: &[Timestamp], fold: usize) -> Vec<Timestamp> {
        if self.k == 1 {
            return self.test_inits(inits, fold);
        }
        inits
            .iter()
            .copied()
            .filter(|t| matches!(self.fold_of(*t), Some(f) if f != fold))
            .collect()
    }
}

/// Year-blocked folds: the distinct calendar years of the init dates, sorted, are dealt
/// round-robin onto `k` folds, so fold sizes differ by at most one year.
pub fn make_folds(init_dates: &[Timestamp], k: usize) -> Result<FoldSpec, VerifyError> {
    if k == 0 {
        return Err(VerifyError::ZeroFolds);
    }
    let years: BTreeSet<i32> = init_dates.iter().map(|t| t.year()).collect();
    if years.len() < k {
        return Err(VerifyError::TooFewYears {
            found: years.len(),
            k,
        });
    }
    let fold_of_year: BTreeMap<i32, usize> =
        years.iter().enumerate().map(|(i, y)| (*y, i % k)).collect();
    let assignment = init_dates
        .iter()
        .map(|t| {
            let d = t.date();
            (d, fold_of_year[&d.year()])
        })
        .collect();
    Ok(FoldSpec { k, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn daily(from: (i32, u32, u32), n: i64) -> Vec<Timestamp> {
        let start = Timestamp::from_ymdh(from.0, from.1, from.2, 12).unwrap();
        (0..n)
            .map(|d| Timestamp::from_epoch_hours(start.epoch_hours() + 24 * d))
            .collect()
    }

    #[test]
    fn three_years_three_folds() {
        let inits = daily((2021, 1, 1), 365 * 3);
        let f = make_folds(&inits, 3).unwrap();
        let years: Vec<BTreeSet<i32>> = (0..3)
            .map(|k| f.dates_in(k).map(|d| d.year()).collect())
            .collect();
        assert_eq!(years, vec![[2021].into(), [2022].into(), [2023].into()]);
    }

    #[test]
    fn single_fold_is_in_sample() {
        let inits = daily((2021, 7, 1), 400);
        let f = make_folds(&inits, 1).unwrap();
        assert_eq!(f.test_inits(&inits, 0), inits);
        assert_eq!(f.train_inits(&inits, 0), inits);
    }

    #[test]
    fn too_few_years() {
        let inits = daily((2022, 1, 1), 300);
        assert!(matches!(
            make_folds(&inits, 3),
            Err(VerifyError::TooFewYears { found: 1, k: 3 })
        ));
        assert!(matches!(make_folds(&inits, 0), Err(VerifyError::ZeroFolds)));
    }

    #[test]
    fn july_to_june_ranges() {
        let inits = daily((2021, 7, 1), 365 * 3);
        let d = |y, m, dd| NaiveDate::from_ymd_opt(y, m, dd).unwrap();
        let ranges = [
            (d(2021, 7, 1), d(2022, 6, 30)),
            (d(2022, 7, 1), d(2023, 6, 30)),
            (d(2023, 7, 1), d(2024, 6, 30)),
        ];
        let f = FoldSpec::from_ranges(&inits, &ranges).unwrap();
        assert_eq!(f.k, 3);
        assert_eq!(f.dates_in(1).count(), 365);
        let overlapping = [
            (d(2021, 7, 1), d(2023, 1, 1)),
            (d(2022, 7, 1), d(2024, 6, 30)),
        ];
        assert!(FoldSpec::from_ranges(&inits, &overlapping).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_dates(start_day in 0i64..2000, n in 400i64..1500, k in 1usize..4) {
            let base = Timestamp::from_ymdh(2015, 1, 1, 12).unwrap().epoch_hours() + 24 * start_day;
            let inits: Vec<Timestamp> = (0..n).map(|d| Timestamp::from_epoch_hours(base + 24 * d)).collect();
            let n_years = inits.iter().map(|t| t.year()).collect::<BTreeSet<_>>().len();
            prop_assume!(n_years >= k);
            let f = make_folds(&inits, k).unwrap();
            let mut seen = BTreeSet::new();
            for fold in 0..k {
                let test = f.test_inits(&inits, fold);
                prop_assert!(!test.is_empty());
                for t in &test {
                    prop_assert!(seen.insert(*t));
                }
                if k > 1 {
                    let train = f.train_inits(&inits, fold);
                    prop_assert_eq!(train.len() + test.len(), inits.len());
                    prop_assert!(train.iter().all(|t| !test.contains(t)));
                }
            }
            prop_assert_eq!(seen.len(), inits.len());
            // Same-year inits share a fold; fold year counts differ by at most one.
            let mut counts = vec![BTreeSet::new(); k];
            for t in &inits {
                counts[f.fold_of(*t).unwrap()].insert(t.year());
            }
            let sizes: Vec<usize> = counts.iter().map(|s| s.len()).collect();
            let all: usize = sizes.iter().sum();
            prop_assert_eq!(all, inits.iter().map(|t| t.year()).collect::<BTreeSet<_>>().len());
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}

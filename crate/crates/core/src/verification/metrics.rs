use crate::error::VerifyError;

/// Mean absolute error of point forecasts.
pub fn mae(predicted: &[f64], observed: &[f64]) -> Result<f64, VerifyError> {
    if predicted.len() != observed.len() {
        return Err(VerifyError::LengthMismatch(predicted.len(), observed.len()));
    }
    if predicted.is_empty() {
        return Err(VerifyError::Empty);
    }
    let sum: f64 = predicted
        .iter()
        .zip(observed)
        .map(|(p, o)| (p - o).abs())
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// MAE skill score in percent, `(1 - mae / mae_ref) * 100`.
pub fn skill_score(mae: f64, mae_ref: f64) -> Result<f64, VerifyError> {
    if mae_ref.is_nan() || mae_ref <= 0.0 {
        return Err(VerifyError::ZeroReference(mae_ref));
    }
    Ok((1.0 - mae / mae_ref) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(
            mae(&[1.0], &[1.0, 2.0]),
            Err(VerifyError::LengthMismatch(1, 2))
        ));
        assert!(matches!(mae(&[], &[]), Err(VerifyError::Empty)));
    }

    #[test]
    fn skill_examples() {
        assert_eq!(skill_score(1.0, 1.0).unwrap(), 0.0);
        assert!((skill_score(0.35, 1.0).unwrap() - 65.0).abs() < 1e-12);
        assert_eq!(skill_score(2.0, 1.0).unwrap(), -100.0);
        assert!(matches!(
            skill_score(1.0, 0.0),
            Err(VerifyError::ZeroReference(_))
        ));
    }

    proptest! {
        #[test]
        fn mae_is_permutation_invariant(pairs in prop::collection::vec((-40.0f64..40.0, -40.0f64..40.0), 1..50), rot in 0usize..50) {
            let (p, o): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            shuffled.rotate_left(rot % pairs.len());
            shuffled.reverse();
            let (ps, os): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            let a = mae(&p, &o).unwrap();
            let b = mae(&ps, &os).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

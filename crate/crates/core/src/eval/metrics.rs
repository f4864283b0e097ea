use super::EvalError;

fn check(y: &[f64], y_hat: &[f64]) -> Result<(), EvalError> {
    if y.len() != y_hat.len() {
        return Err(EvalError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    check(y, y_hat)?;
    let total: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / y.len() as f64)
}

/// Root mean squared error.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    check(y, y_hat)?;
    let total: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((total / y.len() as f64).sqrt())
}

/// MAE with contaminated training data over MAE with clean training data.
pub fn increase_ratio(mae_contaminated: f64, mae_clean: f64) -> Result<f64, EvalError> {
    if mae_clean.is_nan() || mae_clean <= 0.0 {
        return Err(EvalError::ZeroCleanMae);
    }
    Ok(mae_contaminated / mae_clean)
}

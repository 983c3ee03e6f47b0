//! Observed convergence rates.

use crate::error::{Error, Result};

fn check_positive(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(Error::UndefinedRate(format!("{what} {v} is not a positive finite number"))),
        None => Ok(()),
    }
}

/// `log2(e_h / e_{h/2})`.
pub fn rate(coarse: f64, fine: f64) -> Result<f64> {
    check_positive(&[coarse, fine], "error")?;
    Ok((coarse / fine).log2())
}

/// Rates between consecutive entries of a halving sequence.
pub fn pairwise_rates(errors: &[f64]) -> Result<Vec<f64>> {
    errors.windows(2).map(|w| rate(w[0], w[1])).collect()
}

/// Least-squares slope of `log e` against `log h`.
pub fn least_squares_rate(h: &[f64], errors: &[f64]) -> Result<f64> {
    if h.len() != errors.len() || h.len() < 2 {
        return Err(Error::UndefinedRate(format!(
            "need at least two matching (h, error) pairs, got {} and {}",
            h.len(),
            errors.len()
        )));
    }
    check_positive(h, "mesh size")?;
    check_positive(errors, "error")?;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedRate("all mesh sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

use crate::{Error, Result};

/// Gelman–Rubin potential scale reduction factor on the second halves of
/// equal-length traces. Zero within-chain variance yields 1 when the chain
/// means agree and +∞ otherwise.
pub fn psrf(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    let len = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m < 2 || len < 10 {
        return Err(Error::InsufficientChains { chains: m, len });
    }
    if chains.iter().any(|c| c.len() != len) {
        return Err(Error::InvalidInput("chains must have equal length".into()));
    }
    let halves: Vec<&[f64]> = chains.iter().map(|c| &c[len / 2..]).collect();
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / n).collect();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = n / (m as f64 - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let scale = grand.abs().max(1.0);
    if w <= f64::EPSILON * f64::EPSILON * scale * scale {
        return Ok(if b <= f64::EPSILON * scale * scale { 1.0 } else { f64::INFINITY });
    }
    Ok((((n - 1.0) / n * w + b / n) / w).sqrt())
}

//! Goodness-of-fit tests used by the distributional checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument(
            "KS test needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Argument("KS test sample contains NaN".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let en = (n1 * n2 / (n1 + n2)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// `Q(λ) = 2 Σ_{j≥1} (-1)^(j-1) exp(-2 j² λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = f64::from(j);
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson χ² test of `counts` against the uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> Result<TestResult> {
    if counts.len() < 2 {
        return Err(Error::Argument(
            "chi-square test needs at least two cells".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Argument(
            "chi-square test on zero observations".into(),
        ));
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dist =
        ChiSquared::new((counts.len() - 1) as f64).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(TestResult {
        statistic,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

//! Two-sample Kolmogorov–Smirnov test and sample summaries.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    #[serde(rename = "d")]
    pub d_statistic: f64,
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "p")]
    pub p_value: f64,
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(x) = sample.iter().find(|x| x.is_nan()) {
        return Err(Error::NonFinite(format!("sample value {x}")));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Largest gap between the right-continuous ECDFs, evaluated at every pooled
/// point after all tied values on both sides have been consumed.
fn sup_ecdf_gap(x: &[f64], y: &[f64]) -> f64 {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    // once one sample is exhausted the gap only shrinks towards zero
    d.max((i as f64 / n1 - j as f64 / n2).abs())
}

/// Asymptotic Kolmogorov survival function `Q(λ) = 2 Σ (-1)^(j-1) exp(-2 j² λ²)`.
///
/// For small `λ` the alternating series converges slowly, so the equivalent
/// theta-function form `1 - (√(2π)/λ) Σ exp(-(2j-1)² π² / (8λ²))` is used there.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    const TOL: f64 = 1e-12;
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut sum = 0.0;
        for j in 1..=100u32 {
            let k = f64::from(2 * j - 1);
            let term = (-k * k * pi2 / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < TOL {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for j in 1..=100u32 {
            let jf = f64::from(j);
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sum += sign * term;
            if term < TOL {
                break;
            }
            sign = -sign;
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}

pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    let (xs, ys) = (sorted(x)?, sorted(y)?);
    let d = sup_ecdf_gap(&xs, &ys);
    let (n1, n2) = (xs.len(), ys.len());
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    Ok(KsResult { d_statistic: d, n1, n2, p_value: kolmogorov_q(lambda) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); zero for one value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Welford single-pass summary.
pub fn summarize(sample: &[f64]) -> Result<Summary> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &x) in sample.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
        min = min.min(x);
        max = max.max(x);
    }
    let n = sample.len();
    let std = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(Summary { mean, std, min, max, count: n })
}

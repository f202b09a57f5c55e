//! Change decomposition and regression-to-the-mean diagnostics.
//!
//! Follow-up is split into an endogenous part carried over from baseline
//! (slope `beta1`) and a residual part weighted by `beta2 = 1 - beta1`.
//! Subtracting baseline from both sides leaves the change score as the
//! residual part plus a biasing term `-beta2 * Y0`. On natural-unit data Y0
//! is mean-centred inside the biasing term and the constant moves into the
//! residual part; contrasts are unaffected.
//!
//! Random and exogenous change cannot be separated with two waves, so only
//! their weighted sum is reported.

use serde::{Deserialize, Serialize};

use crate::dgp::cols;
use crate::error::{LabError, Result};
use crate::scm::Dataset;

/// OLS slope of Y1 on Y0, pooled within strata of `within_strata_of` when
/// given (i.e. the baseline coefficient of an ANCOVA on the strata).
pub fn endogenous_slope(ds: &Dataset, within_strata_of: Option<&str>) -> Result<f64> {
    let y0 = ds.column(cols::Y0)?;
    let y1 = ds.column(cols::Y1)?;
    let strata: Vec<usize> = match within_strata_of {
        None => vec![0; ds.n()],
        Some(name) => {
            let col = ds.column(name)?;
            let mut levels: Vec<f64> = Vec::new();
            col.iter()
                .map(|v| match levels.iter().position(|l| l == v) {
                    Some(i) => i,
                    None => {
                        levels.push(*v);
                        levels.len() - 1
                    }
                })
                .collect()
        }
    };
    let k = strata.iter().max().map_or(0, |m| m + 1);
    let mut count = vec![0usize; k];
    let mut sum0 = vec![0.0; k];
    let mut sum1 = vec![0.0; k];
    for ((&s, &a), &b) in strata.iter().zip(y0).zip(y1) {
        count[s] += 1;
        sum0[s] += a;
        sum1[s] += b;
    }
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((&s, &a), &b) in strata.iter().zip(y0).zip(y1) {
        let da = a - sum0[s] / count[s] as f64;
        let db = b - sum1[s] / count[s] as f64;
        sxx += da * da;
        sxy += da * db;
    }
    if sxx <= 0.0 {
        return Err(LabError::ZeroVariance(cols::Y0.to_string()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeDecomposition {
    pub beta1: f64,
    pub beta2: f64,
    /// Per-row `Y1 - beta1*Y0 - beta2*mean(Y0)`: the weighted random plus
    /// exogenous change, with constants absorbed.
    pub residual_change: Vec<f64>,
    /// Per-row `-beta2 * (Y0 - mean(Y0))`.
    pub bias_term: Vec<f64>,
}

/// Splits the change score into residual change and the biasing term for
/// any `beta1`. `residual_change + bias_term == Y1 - Y0` row by row.
pub fn decompose_change(ds: &Dataset, beta1: f64) -> Result<ChangeDecomposition> {
    if !beta1.is_finite() {
        return Err(LabError::Config("beta1 must be finite".into()));
    }
    let y0 = ds.column(cols::Y0)?;
    let y1 = ds.column(cols::Y1)?;
    let beta2 = 1.0 - beta1;
    let mean0 = y0.iter().sum::<f64>() / y0.len() as f64;
    let residual_change = y1
        .iter()
        .zip(y0)
        .map(|(b, a)| b - beta1 * a - beta2 * mean0)
        .collect();
    let bias_term = y0.iter().map(|a| -beta2 * (a - mean0)).collect();
    Ok(ChangeDecomposition {
        beta1,
        beta2,
        residual_change,
        bias_term,
    })
}

/// Boy-minus-girl difference in the mean of `values`.
pub fn group_contrast(ds: &Dataset, values: &[f64]) -> Result<f64> {
    let x = ds.column(cols::X)?;
    let (mut s, mut c) = ([0.0; 2], [0usize; 2]);
    for (&g, &v) in x.iter().zip(values) {
        let arm = (g > 0.0) as usize;
        s[arm] += v;
        c[arm] += 1;
    }
    if c[0] == 0 {
        return Err(LabError::EmptyArm("girls"));
    }
    if c[1] == 0 {
        return Err(LabError::EmptyArm("boys"));
    }
    Ok(s[1] / c[1] as f64 - s[0] / c[0] as f64)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// How the biasing term distorts the change-score contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnosis {
    /// Exposure and baseline are uncorrelated (within sampling error).
    #[serde(rename = "no bias contribution")]
    NoBias,
    /// The biasing term (nearly) cancels the residual contrast.
    #[serde(rename = "exact cancellation")]
    ExactCancellation,
    /// The biasing term outweighs the residual contrast and flips its sign.
    #[serde(rename = "sign reversal")]
    SignReversal,
    /// Same sign as the residual contrast but pulled towards zero.
    #[serde(rename = "attenuation")]
    Attenuation,
    /// Same sign as the residual contrast and pushed away from zero.
    #[serde(rename = "amplification")]
    Amplification,
}

impl Diagnosis {
    pub fn as_str(self) -> &'static str {
        match self {
            Diagnosis::NoBias => "no bias contribution",
            Diagnosis::ExactCancellation => "exact cancellation",
            Diagnosis::SignReversal => "sign reversal",
            Diagnosis::Attenuation => "attenuation",
            Diagnosis::Amplification => "amplification",
        }
    }
}

/// Change-score contrasts within this fraction of the residual contrast
/// count as cancelled.
pub const CANCELLATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasingTermReport {
    pub corr_x_y0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub bias_contrast_kg: f64,
    pub residual_contrast_kg: f64,
    pub change_score_contrast_kg: f64,
    pub diagnosis: Diagnosis,
}

pub fn diagnose(corr_x_y0: f64, n: usize, bias: f64, residual: f64) -> Diagnosis {
    // |r| under 3 standard errors of a null correlation.
    if corr_x_y0.abs() <= 3.0 / (n as f64).sqrt() {
        return Diagnosis::NoBias;
    }
    let change = bias + residual;
    if change.abs() <= CANCELLATION_FRACTION * residual.abs() {
        Diagnosis::ExactCancellation
    } else if change.signum() != residual.signum() {
        Diagnosis::SignReversal
    } else if change.abs() < residual.abs() {
        Diagnosis::Attenuation
    } else {
        Diagnosis::Amplification
    }
}

/// Correlation of exposure with baseline, the within-sex slope, and how the
/// biasing term shapes the change-score contrast.
pub fn biasing_term_report(ds: &Dataset) -> Result<BiasingTermReport> {
    let corr_x_y0 = correlation(ds.column(cols::X)?, ds.column(cols::Y0)?);
    let beta1 = endogenous_slope(ds, Some(cols::X))?;
    let parts = decompose_change(ds, beta1)?;
    let bias = group_contrast(ds, &parts.bias_term)?;
    let residual = group_contrast(ds, &parts.residual_change)?;
    Ok(BiasingTermReport {
        corr_x_y0,
        beta1,
        beta2: parts.beta2,
        bias_contrast_kg: bias,
        residual_contrast_kg: residual,
        change_score_contrast_kg: bias + residual,
        diagnosis: diagnose(corr_x_y0, ds.n(), bias, residual),
    })
}

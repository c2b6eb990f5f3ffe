//! The least squares loss, the double penalised cost functional, robust
//! baseline estimation, and the theory-driven penalty scalings.
//!
//! All sums run in canonical point order so totals are bit-reproducible
//! across runs and thread counts.

use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::hull::hull_cardinality;
use crate::lattice::{GridSpec, Partition, Region};
use crate::{Error, Result};

/// Gaussian consistency constant for the median absolute deviation.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// The knobs of the double penalised cost: per-region penalty `beta`,
/// per-hull-point penalty `lambda`, variance proxy `sigma2`, and the baseline
/// mean `mu0` (known or robustly estimated, never fitted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub beta: f64,
    pub lambda: f64,
    pub sigma2: f64,
    pub mu0: f64,
}

impl CostParams {
    pub fn new(beta: f64, lambda: f64, sigma2: f64, mu0: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
        }
        if beta < 0.0 || lambda < 0.0 {
            return Err(Error::InvalidParameter("penalties must be nonnegative".into()));
        }
        Ok(Self { beta, lambda, sigma2, mu0 })
    }
}

/// Itemised cost of a partition. `total` is always assembled in the same
/// order: losses first, then the count penalty, then the hull penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub loss_baseline: f64,
    pub loss_anomalies: f64,
    /// `beta * m`.
    pub penalty_count: f64,
    /// `lambda * sum_j |Co(R_j)|`.
    pub penalty_hull: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn assemble(loss_baseline: f64, loss_anomalies: f64, penalty_count: f64, penalty_hull: f64) -> Self {
        let total = ((loss_baseline + loss_anomalies) + penalty_count) + penalty_hull;
        Self { loss_baseline, loss_anomalies, penalty_count, penalty_hull, total }
    }
}

/// `(1/sigma2) * sum_{s in R} (Y(s) - mu)^2` over the valid cells of `R`.
/// An empty region costs 0.
pub fn regional_loss(field: &Field, region: &Region, mu: f64, sigma2: f64) -> Result<f64> {
    if region.grid() != field.grid() {
        return Err(Error::MismatchedGrids(
            region.grid().dims().to_vec(),
            field.grid().dims().to_vec(),
        ));
    }
    let mut ss = 0.0;
    for y in field.region_values(region) {
        let d = y - mu;
        ss += d * d;
    }
    Ok(ss / sigma2)
}

/// Loss at the fitted (sample mean) signal, with the fitted mean itself.
/// This is the minimum of `regional_loss` over `mu`.
pub fn fitted_loss(field: &Field, region: &Region, sigma2: f64) -> Result<(f64, f64)> {
    if region.grid() != field.grid() {
        return Err(Error::MismatchedGrids(
            region.grid().dims().to_vec(),
            field.grid().dims().to_vec(),
        ));
    }
    let (mut sum, mut count) = (0.0, 0usize);
    for y in field.region_values(region) {
        sum += y;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    let mu_hat = sum / count as f64;
    let loss = regional_loss(field, region, mu_hat, sigma2)?;
    Ok((loss, mu_hat))
}

/// The double penalised cost of a partition:
/// baseline loss at the fixed `mu0`, fitted loss per anomaly, plus
/// `beta * m` and `lambda * sum_j |Co(R_j)|`.
pub fn penalised_cost(field: &Field, partition: &Partition, params: &CostParams) -> Result<CostBreakdown> {
    let loss_baseline = regional_loss(field, &partition.baseline, params.mu0, params.sigma2)?;
    let mut loss_anomalies = 0.0;
    let mut hull_total = 0usize;
    for region in &partition.anomalies {
        let (loss, _) = fitted_loss(field, region, params.sigma2)?;
        loss_anomalies += loss;
        hull_total += hull_cardinality(region)?;
    }
    let penalty_count = params.beta * partition.m() as f64;
    let penalty_hull = params.lambda * hull_total as f64;
    Ok(CostBreakdown::assemble(loss_baseline, loss_anomalies, penalty_count, penalty_hull))
}

/// Robust baseline estimates: `mu0` is the median of all valid values and
/// `sigma` is scaled MAD. A zero MAD is reported as an error rather than
/// silently replaced; the caller may supply `sigma2` explicitly.
pub fn robust_baseline(field: &Field) -> Result<(f64, f64)> {
    let mut values: Vec<f64> = (0..field.grid().n())
        .filter(|&i| field.is_valid(i))
        .map(|i| field.value(i))
        .collect();
    if values.len() < 2 {
        return Err(Error::TooFewCells(2));
    }
    let mu0 = median_inplace(&mut values);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - mu0).abs()).collect();
    let mad = median_inplace(&mut dev);
    let sigma = MAD_CONSISTENCY * mad;
    if sigma == 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok((mu0, sigma))
}

pub(crate) fn median_inplace(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Penalty scalings from the consistency theory under a dependence parameter
/// `phi` (`phi = 1` is the independent case):
///
/// ```text
/// beta   = c_beta   * (n^phi / n_max)     * ln n
/// lambda = c_lambda * (n^(phi-1) / n_max) * ln n
/// ```
///
/// At `phi = 1`, d = 2 on a square grid this reduces to
/// `beta = c_beta * sqrt(n) ln n`, `lambda = c_lambda * ln n / sqrt(n)`.
/// The absolute constants are the caller's to choose; the theory does not
/// pin them down.
pub fn theoretical_penalties(
    grid: &GridSpec,
    sigma2: f64,
    c_beta: f64,
    c_lambda: f64,
    phi: f64,
) -> Result<(f64, f64)> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter("sigma2 must be positive".into()));
    }
    let n = grid.n() as f64;
    let n_max = grid.n_max() as f64;
    if phi < 1.0 || n.powf(phi - 1.0) > n_max {
        return Err(Error::InvalidParameter(format!(
            "phi = {phi} outside the admissible regime (phi >= 1 and n^(phi-1) <= n_max)"
        )));
    }
    let log_n = n.ln();
    let beta = c_beta * n.powf(phi) / n_max * log_n;
    let lambda = c_lambda * n.powf(phi - 1.0) / n_max * log_n;
    Ok((beta, lambda))
}

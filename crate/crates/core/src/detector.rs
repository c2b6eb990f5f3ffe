//! The approximate double-penalised least squares detector: a grid search
//! over (m, N) cells, one CRS carve and one cost evaluation per cell, and a
//! deterministic global argmin.
//!
//! The all-baseline model (m = 0) is always a candidate cell, so anomaly-free
//! fields resolve to zero regions instead of a forced spurious one. Ties
//! break towards smaller m, then smaller N.

use serde::Serialize;

use crate::cost::{self, CostBreakdown, CostParams};
use crate::crs::{self, CrsScratch};
use crate::field::Field;
use crate::hull;
use crate::lattice::{Partition, Region};
use crate::{Error, Result};

/// Size threshold rule for CRS regions at inner-loop index m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum XiRule {
    /// `xi_m = scale * floor(log10(sqrt(n))) / m`; the reference scale is 20.
    ScaledLog { scale: f64 },
    /// A constant threshold, independent of m.
    Fixed { value: f64 },
}

impl XiRule {
    pub(crate) fn xi(&self, n_eff: usize, m: usize) -> f64 {
        match *self {
            XiRule::ScaledLog { scale } => {
                scale * (n_eff as f64).sqrt().log10().floor() / m as f64
            }
            XiRule::Fixed { value } => value,
        }
    }
}

/// Detector knobs. `mu0`/`sigma2` left unset are resolved by
/// [`cost::robust_baseline`] before the search.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub beta: f64,
    pub lambda: f64,
    pub sigma2: Option<f64>,
    pub mu0: Option<f64>,
    /// Largest anomaly count tried per N column (ignored under `faithful`).
    pub m_max: usize,
    /// Subsampling step over the N grid; 1 scans every prefix length.
    pub n_stride: usize,
    pub xi_rule: XiRule,
    /// Scan m all the way up to N with stride 1. Quartic in n; for tiny
    /// grids and reference runs only.
    pub faithful: bool,
    /// Re-estimate the baseline mean from the detected baseline and rerun.
    pub two_pass: bool,
    /// Retain the full (m, N) cost matrix in the result.
    pub keep_cost_surface: bool,
}

impl DetectorConfig {
    pub fn new(beta: f64, lambda: f64) -> Self {
        Self {
            beta,
            lambda,
            sigma2: None,
            mu0: None,
            m_max: 20,
            n_stride: 1,
            xi_rule: XiRule::ScaledLog { scale: 20.0 },
            faithful: false,
            two_pass: false,
            keep_cost_surface: false,
        }
    }

    pub fn with_known_baseline(mut self, mu0: f64, sigma2: f64) -> Self {
        self.mu0 = Some(mu0);
        self.sigma2 = Some(sigma2);
        self
    }
}

/// Per-cell totals of the scan. Row m = 0 is the null model, identical in
/// every column; `None` marks cells outside the scanned range (m > N).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSurface {
    /// Scanned prefix lengths (columns).
    pub n_values: Vec<usize>,
    /// `totals[m][col]` for m = 0..=m_max.
    pub totals: Vec<Vec<Option<f64>>>,
}

impl CostSurface {
    /// Location of the minimum as an (m, N) pair under the detector's
    /// tie-break order.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best: Option<(f64, usize, usize)> = None;
        for (m, row) in self.totals.iter().enumerate() {
            for (col, cell) in row.iter().enumerate() {
                if let Some(total) = *cell {
                    let cand = (total, m, self.n_values[col]);
                    let better = match best {
                        None => true,
                        Some(b) => (cand.0, cand.1, cand.2) < b,
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
        }
        let (_, m, n) = best.expect("surface has at least the null row");
        (m, n)
    }
}

/// Detection output: the partition, its exact cost, and where in the (m, N)
/// grid the argmin sat.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub m_hat: usize,
    pub regions: Vec<Region>,
    pub region_means: Vec<f64>,
    pub baseline: Region,
    pub best_cost: CostBreakdown,
    /// (m, N) coordinates of the winning cell; (0, 0) for the null model.
    pub argmin_cell: (usize, usize),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_surface: Option<CostSurface>,
}

/// Resolve the baseline parameters, robustly estimating whichever of
/// `mu0`/`sigma2` the config leaves unset.
fn resolve_params(field: &Field, config: &DetectorConfig) -> Result<CostParams> {
    let (mu0, sigma2) = match (config.mu0, config.sigma2) {
        (Some(m), Some(s)) => (m, s),
        (given_mu, given_s2) => {
            let (mu_hat, sigma_hat) = cost::robust_baseline(field)?;
            (
                given_mu.unwrap_or(mu_hat),
                given_s2.unwrap_or(sigma_hat * sigma_hat),
            )
        }
    };
    CostParams::new(config.beta, config.lambda, sigma2, mu0)
}

struct CellOutcome {
    total: f64,
    m_cell: usize,
    n_top: usize,
}

struct ColumnOutcome {
    /// Totals for m = 1..=m_cap in this column.
    totals: Vec<f64>,
    best: Option<CellOutcome>,
}

/// Run the full (m, N) scan and return the argmin partition with its exact
/// recomputed cost. Also see [`detect`].
pub fn detect_with_params(field: &Field, config: &DetectorConfig) -> Result<(DetectionResult, CostParams)> {
    if config.n_stride == 0 || config.m_max == 0 {
        return Err(Error::InvalidParameter("m_max and n_stride must be at least 1".into()));
    }
    let params = resolve_params(field, config)?;
    let result = if config.two_pass {
        let first = search(field, config, &params)?;
        let mut mu_values: Vec<f64> = first
            .baseline
            .points()
            .iter()
            .filter_map(|p| {
                let idx = field.grid().index(p);
                field.is_valid(idx).then(|| field.value(idx))
            })
            .collect();
        if mu_values.is_empty() {
            return Err(Error::TooFewCells(1));
        }
        let mu0_refit = cost::median_inplace(&mut mu_values);
        let params2 = CostParams::new(config.beta, config.lambda, params.sigma2, mu0_refit)?;
        let second = search(field, config, &params2)?;
        return Ok((second, params2));
    } else {
        search(field, config, &params)?
    };
    Ok((result, params))
}

/// Approximate minimiser of the double penalised cost.
pub fn detect(field: &Field, config: &DetectorConfig) -> Result<DetectionResult> {
    detect_with_params(field, config).map(|(r, _)| r)
}

/// Two-pass detection regardless of `config.two_pass`: detect, re-estimate
/// the baseline mean as the median over the detected baseline, detect again.
pub fn detect_two_pass(field: &Field, config: &DetectorConfig) -> Result<DetectionResult> {
    let mut cfg = config.clone();
    cfg.two_pass = true;
    detect(field, &cfg)
}

/// The per-cell cost matrix for diagnostics; its argmin is the detector's
/// argmin cell.
pub fn cost_surface(field: &Field, config: &DetectorConfig) -> Result<CostSurface> {
    let mut cfg = config.clone();
    cfg.keep_cost_surface = true;
    let (result, _) = detect_with_params(field, &cfg)?;
    Ok(result.cost_surface.expect("surface retained"))
}

fn search(field: &Field, config: &DetectorConfig, params: &CostParams) -> Result<DetectionResult> {
    let grid = field.grid();
    let order = crs::sort_candidates(field, params.mu0);
    let n_eff = order.len();
    if n_eff == 0 {
        return Err(Error::TooFewCells(1));
    }

    // Total squared deviation from mu0 in canonical cell order: the null
    // model's loss numerator, and the base the subtractive baseline losses
    // start from.
    let mut t0 = 0.0;
    for idx in 0..grid.n() {
        if field.is_valid(idx) {
            let d = field.value(idx) - params.mu0;
            t0 += d * d;
        }
    }
    let total_null = t0 / params.sigma2;

    let m_limit = if config.faithful { n_eff } else { config.m_max };
    let stride = if config.faithful { 1 } else { config.n_stride };
    let mut n_values: Vec<usize> = (1..=n_eff).step_by(stride).collect();
    if *n_values.last().expect("nonempty") != n_eff {
        n_values.push(n_eff);
    }

    let eval_column = |scratch: &mut CrsScratch, n_top: usize| -> ColumnOutcome {
        let m_cap = m_limit.min(n_top);
        let mut totals = Vec::with_capacity(m_cap);
        let mut best: Option<CellOutcome> = None;
        for m in 1..=m_cap {
            let xi = config.xi_rule.xi(n_eff, m);
            let kept = crs::crs_cells(&order, n_top, m, xi, grid, n_eff, scratch);
            let total = cell_total(field, params, t0, m, &kept);
            totals.push(total);
            // Strict inequality against the null: exact ties resolve to m = 0.
            let better = match &best {
                None => total < total_null,
                Some(b) => total < b.total,
            };
            if better {
                best = Some(CellOutcome { total, m_cell: m, n_top });
            }
        }
        ColumnOutcome { totals, best }
    };

    #[cfg(feature = "parallel")]
    let columns: Vec<ColumnOutcome> = {
        use rayon::prelude::*;
        n_values
            .par_iter()
            .map_init(CrsScratch::new, |scratch, &n_top| eval_column(scratch, n_top))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let columns: Vec<ColumnOutcome> = {
        let mut scratch = CrsScratch::new();
        n_values.iter().map(|&n_top| eval_column(&mut scratch, n_top)).collect()
    };

    // Deterministic reduction in (total, m, N) order; the null model wins all
    // exact ties by having m = 0.
    let mut best_cell: Option<CellOutcome> = None;
    for col in &columns {
        if let Some(b) = &col.best {
            let better = match &best_cell {
                None => b.total < total_null,
                Some(cur) => {
                    (b.total, b.m_cell, b.n_top) < (cur.total, cur.m_cell, cur.n_top)
                }
            };
            if better {
                best_cell = Some(CellOutcome { total: b.total, m_cell: b.m_cell, n_top: b.n_top });
            }
        }
    }

    let surface = config.keep_cost_surface.then(|| {
        let m_rows = if config.faithful { n_eff } else { config.m_max };
        let mut totals = vec![vec![None; n_values.len()]; m_rows + 1];
        for (col, _) in n_values.iter().enumerate() {
            totals[0][col] = Some(total_null);
            for (i, &t) in columns[col].totals.iter().enumerate() {
                totals[i + 1][col] = Some(t);
            }
        }
        CostSurface { n_values: n_values.clone(), totals }
    });

    // Rebuild the winning partition and price it through the reference cost
    // path. If rounding in the subtractive scan ever put a cell a hair below
    // the null when the exact cost is not, fall back to the null model.
    let (partition, argmin_cell) = match &best_cell {
        None => (Partition::null(grid), (0, 0)),
        Some(cell) => {
            let mut scratch = CrsScratch::new();
            let xi = config.xi_rule.xi(n_eff, cell.m_cell);
            let kept = crs::crs_cells(&order, cell.n_top, cell.m_cell, xi, grid, n_eff, &mut scratch);
            let regions = crs::cells_to_regions(grid, &kept);
            (
                Partition::from_anomalies(grid, regions)?,
                (cell.m_cell, cell.n_top),
            )
        }
    };
    let mut best_cost = cost::penalised_cost(field, &partition, params)?;
    let (partition, argmin_cell) = if partition.m() > 0 {
        let null_cost = cost::penalised_cost(field, &Partition::null(grid), params)?;
        if best_cost.total > null_cost.total {
            best_cost = null_cost;
            (Partition::null(grid), (0, 0))
        } else {
            (partition, argmin_cell)
        }
    } else {
        (partition, argmin_cell)
    };

    let mut region_means = Vec::with_capacity(partition.m());
    for region in &partition.anomalies {
        let (_, mu_hat) = cost::fitted_loss(field, region, params.sigma2)?;
        region_means.push(mu_hat);
    }

    Ok(DetectionResult {
        m_hat: partition.m(),
        regions: partition.anomalies,
        region_means,
        baseline: partition.baseline,
        best_cost,
        argmin_cell,
        cost_surface: surface,
    })
}

/// Cost of one CRS outcome through the subtractive baseline identity.
/// Per-region terms replicate `fitted_loss` operation-for-operation.
/// The count penalty prices the cell's requested m, as in the search
/// objective; a kept count below the request can only overstate the cell, so
/// the exact recomputation on the final partition never exceeds its scan
/// value.
fn cell_total(field: &Field, params: &CostParams, t0: f64, m_requested: usize, kept: &[Vec<u32>]) -> f64 {
    let grid = field.grid();
    let mut claimed_sq = 0.0;
    let mut loss_anomalies = 0.0;
    let mut hull_total = 0usize;
    for cells in kept {
        let mut sum = 0.0;
        for &c in cells {
            let y = field.value(c as usize);
            let d = y - params.mu0;
            claimed_sq += d * d;
            sum += y;
        }
        let mu_hat = sum / cells.len() as f64;
        let mut ss = 0.0;
        for &c in cells {
            let d = field.value(c as usize) - mu_hat;
            ss += d * d;
        }
        loss_anomalies += ss / params.sigma2;
        let points: Vec<_> = cells.iter().map(|&c| grid.point(c as usize)).collect();
        hull_total += hull::cardinality_of_points(grid.d(), &points);
    }
    let loss_baseline = (t0 - claimed_sq) / params.sigma2;
    let penalty_count = params.beta * m_requested as f64;
    let penalty_hull = params.lambda * hull_total as f64;
    ((loss_baseline + loss_anomalies) + penalty_count) + penalty_hull
}

//! Browser bindings for the demo page: simulate a synthetic field, run the
//! detector, and inspect hulls of hand-drawn regions. All results cross the
//! boundary as JSON strings; rendering stays in JavaScript.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dpls_sad::detector::{detect_with_params, DetectorConfig, XiRule};
use dpls_sad::simulate::{
    derive_seed, make_truth, sample_dependent_field, sample_field, SettingId, SimSetting,
};
use dpls_sad::{hull, io, Field, GridSpec, Region};

fn err_js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct SimOut {
    dims: Vec<u32>,
    values: Vec<f64>,
    truth_cells: Vec<Vec<usize>>,
    means: Vec<f64>,
    delta_min: f64,
    beta_rule: f64,
    lambda_rule: f64,
}

/// Generate a synthetic field with ground truth. Returns JSON with the grid,
/// cell values, true region cell indices and the `beta = delta * delta_min`
/// rule evaluated for convenience.
#[wasm_bindgen]
pub fn simulate_field(
    setting: &str,
    n: usize,
    delta: f64,
    area: usize,
    sigma: f64,
    zeta: f64,
    seed: u64,
) -> Result<String, JsError> {
    let id: SettingId = setting.parse().map_err(err_js)?;
    let mut s = SimSetting::standard(id, n, delta, area, seed).map_err(err_js)?;
    if zeta > 0.0 {
        s.zeta = Some(zeta);
    }
    let truth = make_truth(&s).map_err(err_js)?;
    let noise_seed = derive_seed(seed, 2);
    let field = match s.zeta {
        Some(z) => sample_dependent_field(&truth, sigma, z, noise_seed).map_err(err_js)?,
        None => sample_field(&truth, sigma, noise_seed).map_err(err_js)?,
    };
    let beta_rule = delta * truth.delta_min;
    let out = SimOut {
        dims: field.grid().dims().to_vec(),
        values: field.values().to_vec(),
        truth_cells: truth.partition.anomalies.iter().map(Region::cell_indices).collect(),
        means: truth.means.clone(),
        delta_min: truth.delta_min,
        beta_rule,
        lambda_rule: beta_rule / n as f64,
    };
    serde_json::to_string(&out).map_err(err_js)
}

#[derive(Serialize)]
struct DetectOut {
    m_hat: usize,
    region_cells: Vec<Vec<usize>>,
    region_means: Vec<f64>,
    argmin_cell: (usize, usize),
    total: f64,
    loss_baseline: f64,
    loss_anomalies: f64,
    penalty_count: f64,
    penalty_hull: f64,
    mu0: f64,
    sigma2: f64,
    surface: Option<SurfaceOut>,
}

#[derive(Serialize)]
struct SurfaceOut {
    n_values: Vec<usize>,
    totals: Vec<Vec<Option<f64>>>,
}

/// Run the detector on raw values. `sigma2 <= 0` or a non-finite `mu0`
/// request robust estimation.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn detect_field(
    dims: &[u32],
    values: &[f64],
    beta: f64,
    lambda: f64,
    sigma2: f64,
    mu0: f64,
    m_max: usize,
    n_stride: usize,
    xi_scale: f64,
    two_pass: bool,
    want_surface: bool,
) -> Result<String, JsError> {
    let grid = GridSpec::new(dims).map_err(err_js)?;
    let field = Field::new(grid, values.to_vec()).map_err(err_js)?;
    let mut cfg = DetectorConfig::new(beta, lambda);
    cfg.sigma2 = (sigma2 > 0.0).then_some(sigma2);
    cfg.mu0 = mu0.is_finite().then_some(mu0);
    cfg.m_max = m_max.max(1);
    cfg.n_stride = n_stride.max(1);
    cfg.xi_rule = XiRule::ScaledLog { scale: xi_scale };
    cfg.two_pass = two_pass;
    cfg.keep_cost_surface = want_surface;
    let (result, params) = detect_with_params(&field, &cfg).map_err(err_js)?;
    let out = DetectOut {
        m_hat: result.m_hat,
        region_cells: result.regions.iter().map(Region::cell_indices).collect(),
        region_means: result.region_means.clone(),
        argmin_cell: result.argmin_cell,
        total: result.best_cost.total,
        loss_baseline: result.best_cost.loss_baseline,
        loss_anomalies: result.best_cost.loss_anomalies,
        penalty_count: result.best_cost.penalty_count,
        penalty_hull: result.best_cost.penalty_hull,
        mu0: params.mu0,
        sigma2: params.sigma2,
        surface: result.cost_surface.map(|s| SurfaceOut {
            n_values: s.n_values,
            totals: s.totals,
        }),
    };
    serde_json::to_string(&out).map_err(err_js)
}

#[derive(Serialize)]
struct HullOut {
    vertices: Vec<Vec<i32>>,
    enclosed_cells: Vec<usize>,
    cardinality: usize,
    excess: usize,
    smoothness: Vec<usize>,
}

/// Hull of a 2D region given as cell indices on a `dims` grid: polygon
/// vertices, every enclosed lattice cell, the cardinality/excess, and the
/// per-axis smoothness index.
#[wasm_bindgen]
pub fn hull_info(dims: &[u32], cells: &[u32]) -> Result<String, JsError> {
    let grid = GridSpec::new(dims).map_err(err_js)?;
    let points = cells.iter().map(|&c| grid.point(c as usize)).collect();
    let region = Region::new(grid.clone(), points).map_err(err_js)?;
    let polytope = hull::convex_hull(&region).map_err(err_js)?;
    let cardinality = hull::hull_cardinality(&region).map_err(err_js)?;
    // Enclosed cells for shading: every grid cell whose point lies in the
    // hull, recovered by the region-vs-hull counting identity on singletons.
    let enclosed_cells: Vec<usize> = (0..grid.n())
        .filter(|&idx| {
            let p = grid.point(idx);
            let mut pts: Vec<_> = region.points().to_vec();
            pts.push(p);
            let bigger = Region::new(grid.clone(), pts).expect("in-bounds");
            hull::hull_cardinality(&bigger).map(|c| c == cardinality).unwrap_or(false)
        })
        .collect();
    let smoothness = (0..grid.d())
        .map(|axis| dpls_sad::lattice::smoothness_index(&region, axis))
        .collect();
    let out = HullOut {
        vertices: polytope.vertices.iter().map(|p| p.coords().to_vec()).collect(),
        enclosed_cells,
        cardinality,
        excess: cardinality - region.len(),
        smoothness,
    };
    serde_json::to_string(&out).map_err(err_js)
}

/// Grid-file text for the current field, so demo states can be replayed with
/// the command line tool.
#[wasm_bindgen]
pub fn grid_file_text(dims: &[u32], values: &[f64]) -> Result<String, JsError> {
    let grid = GridSpec::new(dims).map_err(err_js)?;
    let field = Field::new(grid, values.to_vec()).map_err(err_js)?;
    let mut buf = Vec::new();
    io::write_grid(&mut buf, &field).map_err(err_js)?;
    Ok(String::from_utf8(buf).expect("grid files are UTF-8"))
}

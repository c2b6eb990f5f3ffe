//! Command line front end: synthetic field generation, detection, Monte
//! Carlo benchmarks, hull inspection, the exhaustive reference minimiser and
//! raster preprocessing.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpls_sad::detector::{DetectorConfig, XiRule};
use dpls_sad::evaluate::{run_monte_carlo, McConfig, PenaltyRule};
use dpls_sad::simulate::{
    make_truth, sample_dependent_field, sample_field, derive_seed, SettingId, SimSetting,
};
use dpls_sad::{cost, detector, hull, io, oracle, Error};

#[derive(Parser)]
#[command(name = "dpls-sad", version, about = "Spatial anomaly detection on lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic field with ground truth attached.
    Simulate(SimulateArgs),
    /// Detect anomaly regions in a grid file.
    Detect(DetectArgs),
    /// Monte Carlo benchmark: simulate and detect B replicates, report NoC/Err.
    Bench(BenchArgs),
    /// Convex hull and enclosed-lattice-point count of a region.
    Hull(HullArgs),
    /// Exhaustive exact minimiser on a tiny grid (reference tool).
    Oracle(OracleArgs),
    /// Detrend and composite a raster stack into a single grid.
    Preprocess(PreprocessArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Layout family: 1, 2, 3 or 3d.
    #[arg(long)]
    setting: SettingId,
    /// Total cell count; a perfect square (2D) or cube (3d).
    #[arg(long)]
    n: usize,
    /// Minimal anomaly mean shift.
    #[arg(long)]
    delta: f64,
    /// Target total anomaly area.
    #[arg(long)]
    area: usize,
    /// Noise scale (errors are N(0, sigma^2)).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Correlation decay: errors get covariance exp(-zeta * dist).
    #[arg(long)]
    zeta: Option<f64>,
    /// Boundary jitter probability (defaults per setting).
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output grid file.
    #[arg(long)]
    out: PathBuf,
    /// Optional ground-truth JSON.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Input grid file.
    input: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    lambda: f64,
    /// Variance proxy; robustly estimated (MAD) when omitted.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Baseline mean; robustly estimated (median) when omitted.
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long, default_value_t = 20)]
    m_max: usize,
    #[arg(long, default_value_t = 1)]
    n_stride: usize,
    /// Scale of the region-size threshold xi_m = scale*floor(log10 sqrt(n))/m.
    #[arg(long, default_value_t = 20.0)]
    xi_scale: f64,
    /// Scan m all the way to N with stride 1 (quartic cost).
    #[arg(long)]
    faithful: bool,
    /// Re-estimate the baseline mean from the first pass and detect again.
    #[arg(long)]
    two_pass: bool,
    /// Attach the full (m, N) cost matrix to the result.
    #[arg(long)]
    emit_cost_surface: bool,
    /// Print the cost breakdown of the winning partition to stderr.
    #[arg(long)]
    explain_cost: bool,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    setting: SettingId,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    area: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of Monte Carlo replicates.
    #[arg(long, default_value_t = 100)]
    b: usize,
    /// Explicit beta; the default rule is beta = penalty-scale * delta * min|R_j|.
    #[arg(long)]
    beta: Option<f64>,
    /// Explicit lambda; defaults to beta / n.
    #[arg(long)]
    lambda: Option<f64>,
    /// Scale on the beta = delta * delta_min rule.
    #[arg(long, default_value_t = 1.0)]
    penalty_scale: f64,
    #[arg(long, default_value_t = 20)]
    m_max: usize,
    #[arg(long, default_value_t = 1)]
    n_stride: usize,
    #[arg(long, default_value_t = 20.0)]
    xi_scale: f64,
    #[arg(long)]
    two_pass: bool,
    /// Report JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-cell detection counts as CSV.
    #[arg(long)]
    freq_map: Option<PathBuf>,
    /// Per-cell detection counts as an 8-bit PGM heatmap (2D only).
    #[arg(long)]
    freq_pgm: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct HullArgs {
    /// Region JSON file: {"points": [[x, y, ...], ...]}, 1-based coords.
    input: PathBuf,
    /// Ambient grid dims; inferred from the points when omitted.
    #[arg(long, num_args = 1..=3)]
    dims: Option<Vec<u32>>,
}

#[derive(Args)]
struct OracleArgs {
    /// Input grid file (at most 16 cells).
    input: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.0)]
    mu0: f64,
    #[arg(long, default_value_t = 2)]
    max_labels: usize,
    /// Restrict anomaly regions to the smooth class R_K.
    #[arg(long)]
    smooth_k: Option<usize>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input raster stack file.
    input: PathBuf,
    /// Remove a per-cell linear trend over time first.
    #[arg(long)]
    detrend: bool,
    /// Composite window: "monthly" or a fixed slice count.
    #[arg(long, default_value = "monthly")]
    composite: String,
    /// Output grid file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible(_) | Error::TooLarge(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> dpls_sad::Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Detect(a) => detect_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Hull(a) => hull_cmd(a),
        Command::Oracle(a) => oracle_cmd(a),
        Command::Preprocess(a) => preprocess_cmd(a),
    }
}

fn simulate_cmd(a: SimulateArgs) -> dpls_sad::Result<()> {
    let mut setting = SimSetting::standard(a.setting, a.n, a.delta, a.area, a.seed)?;
    if let Some(j) = a.jitter {
        setting.jitter_prob = j;
    }
    setting.zeta = a.zeta;
    let truth = make_truth(&setting)?;
    let noise_seed = derive_seed(setting.seed, 2);
    let field = match a.zeta {
        Some(zeta) => sample_dependent_field(&truth, a.sigma, zeta, noise_seed)?,
        None => sample_field(&truth, a.sigma, noise_seed)?,
    };
    io::save_grid(&a.out, &field)?;
    if let Some(path) = a.truth {
        io::save_json(path, &truth)?;
    }
    eprintln!(
        "wrote {} ({} cells, {} regions, delta_min {})",
        a.out.display(),
        setting.grid.n(),
        truth.m_star,
        truth.delta_min
    );
    Ok(())
}

fn detector_config(
    beta: f64,
    lambda: f64,
    sigma2: Option<f64>,
    mu0: Option<f64>,
    m_max: usize,
    n_stride: usize,
    xi_scale: f64,
    faithful: bool,
    two_pass: bool,
    surface: bool,
) -> DetectorConfig {
    let mut cfg = DetectorConfig::new(beta, lambda);
    cfg.sigma2 = sigma2;
    cfg.mu0 = mu0;
    cfg.m_max = m_max;
    cfg.n_stride = n_stride;
    cfg.xi_rule = XiRule::ScaledLog { scale: xi_scale };
    cfg.faithful = faithful;
    cfg.two_pass = two_pass;
    cfg.keep_cost_surface = surface;
    cfg
}

fn detect_cmd(a: DetectArgs) -> dpls_sad::Result<()> {
    if let Some(t) = a.threads {
        dpls_sad::configure_threads(t)?;
    }
    let field = io::load_grid(&a.input)?;
    let cfg = detector_config(
        a.beta,
        a.lambda,
        a.sigma2,
        a.mu0,
        a.m_max,
        a.n_stride,
        a.xi_scale,
        a.faithful,
        a.two_pass,
        a.emit_cost_surface,
    );
    let (result, params) = detector::detect_with_params(&field, &cfg)?;
    if a.explain_cost {
        let c = &result.best_cost;
        eprintln!(
            "baseline mu0 {:.6}, sigma2 {:.6}; m_hat {} at cell (m={}, N={})",
            params.mu0, params.sigma2, result.m_hat, result.argmin_cell.0, result.argmin_cell.1
        );
        eprintln!(
            "loss_baseline {:.6} + loss_anomalies {:.6} + beta*m {:.6} + lambda*hull {:.6} = {:.6}",
            c.loss_baseline, c.loss_anomalies, c.penalty_count, c.penalty_hull, c.total
        );
    }
    let json = io::to_json_pretty(&result)?;
    match a.out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> dpls_sad::Result<()> {
    if let Some(t) = a.threads {
        dpls_sad::configure_threads(t)?;
    }
    let mut setting = SimSetting::standard(a.setting, a.n, a.delta, a.area, a.seed)?;
    if let Some(j) = a.jitter {
        setting.jitter_prob = j;
    }
    setting.zeta = a.zeta;
    let sigma2 = if a.sigma > 0.0 { a.sigma * a.sigma } else { 1.0 };
    let (beta, lambda, penalty) = match (a.beta, a.lambda) {
        (Some(beta), lambda) => (beta, lambda.unwrap_or(beta / a.n as f64), PenaltyRule::Explicit),
        (None, _) => (0.0, 0.0, PenaltyRule::DeltaTimesDelta { scale: a.penalty_scale }),
    };
    let detector = detector_config(
        beta,
        lambda,
        Some(sigma2),
        Some(0.0),
        a.m_max,
        a.n_stride,
        a.xi_scale,
        false,
        a.two_pass,
        false,
    );
    let config = McConfig { detector, penalty, sigma: a.sigma };
    let report = run_monte_carlo(&setting, &config, a.b)?;
    eprintln!(
        "B={} m*={} NoC={:.3} Err={:.3} (detect wall {:.1}s)",
        report.b,
        report.m_star,
        report.noc,
        report.err,
        report.total_runtime_secs()
    );
    if let Some(path) = &a.out {
        io::save_json(path, &report)?;
    }
    if let Some(path) = &a.freq_map {
        let mut buf = Vec::new();
        io::write_freq_csv(&mut buf, &setting.grid, &report.freq_map)?;
        std::fs::write(path, buf)?;
    }
    if let Some(path) = &a.freq_pgm {
        let mut buf = Vec::new();
        io::write_freq_pgm(&mut buf, &setting.grid, &report.freq_map, report.b)?;
        std::fs::write(path, buf)?;
    }
    Ok(())
}

fn hull_cmd(a: HullArgs) -> dpls_sad::Result<()> {
    let region = io::load_region(&a.input, a.dims.as_deref())?;
    let polytope = hull::convex_hull(&region)?;
    let cardinality = hull::hull_cardinality(&region)?;
    #[derive(serde::Serialize)]
    struct HullOut {
        vertices: Vec<Vec<i32>>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        facets: Vec<hull::Facet>,
        cardinality: usize,
        excess: usize,
    }
    let out = HullOut {
        vertices: polytope.vertices.iter().map(|p| p.coords().to_vec()).collect(),
        facets: polytope.facets.clone(),
        cardinality,
        excess: cardinality - region.len(),
    };
    print!("{}", io::to_json_pretty(&out)?);
    Ok(())
}

fn oracle_cmd(a: OracleArgs) -> dpls_sad::Result<()> {
    let field = io::load_grid(&a.input)?;
    let params = cost::CostParams::new(a.beta, a.lambda, a.sigma2, a.mu0)?;
    let result = oracle::exact_minimise(&field, &params, a.max_labels, a.smooth_k)?;
    #[derive(serde::Serialize)]
    struct OracleOut<'a> {
        best_cost: f64,
        enumerated: u64,
        m: usize,
        regions: &'a [dpls_sad::Region],
    }
    let out = OracleOut {
        best_cost: result.best_cost,
        enumerated: result.enumerated,
        m: result.best_partition.m(),
        regions: &result.best_partition.anomalies,
    };
    print!("{}", io::to_json_pretty(&out)?);
    Ok(())
}

fn preprocess_cmd(a: PreprocessArgs) -> dpls_sad::Result<()> {
    let stack = io::load_stack(&a.input)?;
    let stack = if a.detrend { io::detrend_linear(&stack)? } else { stack };
    let window = match a.composite.as_str() {
        "monthly" => io::CompositeWindow::CalendarMonth,
        other => {
            let k: usize = other.parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "composite must be 'monthly' or a slice count, got '{other}'"
                ))
            })?;
            io::CompositeWindow::FixedCount(k)
        }
    };
    let field = io::max_composite(&stack, window)?;
    io::save_grid(&a.out, &field)?;
    eprintln!("wrote {} from {} slices", a.out.display(), stack.len());
    Ok(())
}

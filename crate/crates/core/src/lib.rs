//! Spatial anomaly detection on regular lattices by double penalised least
//! squares (DPLS-SAD).
//!
//! The observed field is modelled as a region-wise constant mean plus noise:
//! a baseline region with known (or robustly estimated) mean, and an unknown
//! number of anomaly regions with arbitrary shapes. Detection minimises
//!
//! ```text
//! C(m; R_1..R_m) = L(R_0) + sum_j L(R_j) + beta * m + lambda * sum_j |Co(R_j)|
//! ```
//!
//! where `L` is the sigma-normalised least squares loss and `|Co(R)|` is the
//! number of lattice points enclosed by the minimum convex hull of `R`. The
//! hull penalty discourages merging distant regions into one sprawling
//! estimate. The exact minimisation is NP-hard; [`detector::detect`] runs the
//! approximate search (circular region segmentation over a grid of candidate
//! counts), and [`oracle::exact_minimise`] provides the exhaustive reference
//! on tiny lattices.
//!
//! The companion modules cover synthetic field generation ([`simulate`]),
//! Monte Carlo evaluation ([`evaluate`]), raster preprocessing and file
//! formats ([`io`]).

pub mod cost;
pub mod crs;
pub mod detector;
mod error;
pub mod evaluate;
pub mod field;
pub mod hull;
pub mod io;
pub mod lattice;
pub mod oracle;
pub mod simulate;

pub use cost::{CostBreakdown, CostParams};
pub use detector::{DetectionResult, DetectorConfig};
pub use error::Error;
pub use field::Field;
pub use lattice::{GridSpec, Partition, Point, Region};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Pin the global worker pool size. Results are identical for any worker
/// count; this only controls resource usage.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) -> Result<()> {
    Ok(())
}

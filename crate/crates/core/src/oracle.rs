//! Exhaustive exact minimiser of the double penalised cost on tiny lattices.
//!
//! Every assignment of cells to {baseline, anomaly-1, .., anomaly-L} is
//! enumerated (deduplicated up to label permutation), with per-subset losses
//! and hull cardinalities memoised over bitmasks. Each memoised term is
//! accumulated in canonical cell order with the same operations as the
//! reference cost path, so every enumerated assignment's cost is bit-identical
//! to `penalised_cost` of that partition. That makes "approximate >= exact"
//! comparisons against the detector exact, with no tolerance.

use crate::cost::{CostParams, penalised_cost};
use crate::field::Field;
use crate::hull;
use crate::lattice::{max_smoothness_index, Partition, Region};
use crate::{Error, Result};

/// Hard cap on the exhaustive search: `(labels+1)^n` assignments.
pub const MAX_CELLS: usize = 16;
pub const MAX_LABELS: usize = 2;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_partition: Partition,
    pub best_cost: f64,
    /// Assignments actually costed (after label dedup and smoothness filtering).
    pub enumerated: u64,
}

struct SubsetTables {
    /// Fitted least squares loss per nonempty subset.
    fitted: Vec<f64>,
    /// Baseline loss at mu0 per subset.
    base: Vec<f64>,
    /// Hull cardinality per nonempty subset.
    hull: Vec<u32>,
    /// Subset passes the smoothness filter (always true when unfiltered).
    smooth: Vec<bool>,
}

fn build_tables(field: &Field, params: &CostParams, smooth_k: Option<usize>) -> SubsetTables {
    let grid = field.grid();
    let n = grid.n();
    let size = 1usize << n;
    let values: Vec<f64> = (0..n).map(|i| field.value(i)).collect();
    let d = grid.d();

    let mut fitted = vec![0.0; size];
    let mut base = vec![0.0; size];
    let mut hull_card = vec![0u32; size];
    let mut smooth = vec![true; size];

    let mut cells = Vec::with_capacity(n);
    for mask in 1..size {
        cells.clear();
        for i in 0..n {
            if mask & (1 << i) != 0 {
                cells.push(i);
            }
        }
        // Same operation order as fitted_loss / regional_loss over the
        // corresponding region.
        let mut sum = 0.0;
        for &c in &cells {
            sum += values[c];
        }
        let mu_hat = sum / cells.len() as f64;
        let mut ss_fit = 0.0;
        let mut ss_base = 0.0;
        for &c in &cells {
            let df = values[c] - mu_hat;
            ss_fit += df * df;
            let db = values[c] - params.mu0;
            ss_base += db * db;
        }
        fitted[mask] = ss_fit / params.sigma2;
        base[mask] = ss_base / params.sigma2;

        let points: Vec<_> = cells.iter().map(|&c| grid.point(c)).collect();
        hull_card[mask] = hull::cardinality_of_points(d, &points) as u32;
        if let Some(k) = smooth_k {
            let region = Region::new(grid.clone(), points).expect("in-bounds");
            smooth[mask] = max_smoothness_index(&region) <= k;
        }
    }
    SubsetTables { fitted, base, hull: hull_card, smooth }
}

/// Global minimum of the double penalised cost over all assignments of cells
/// to at most `max_labels` anomaly regions, by brute force. Pass `smooth_k`
/// to restrict anomaly regions to the smooth class `R_K`.
pub fn exact_minimise(
    field: &Field,
    params: &CostParams,
    max_labels: usize,
    smooth_k: Option<usize>,
) -> Result<OracleResult> {
    let grid = field.grid();
    let n = grid.n();
    if n > MAX_CELLS {
        return Err(Error::TooLarge(format!("{n} cells exceeds the cap of {MAX_CELLS}")));
    }
    if max_labels > MAX_LABELS {
        return Err(Error::TooLarge(format!(
            "{max_labels} labels exceeds the cap of {MAX_LABELS}"
        )));
    }
    if field.mask().is_some() {
        return Err(Error::InvalidParameter("the oracle expects an unmasked field".into()));
    }

    let tables = build_tables(field, params, smooth_k);
    let full = (1usize << n) - 1;

    // Cost assembly mirrors CostBreakdown::assemble term for term.
    let cost1 = |a: usize| -> f64 {
        ((tables.base[full ^ a] + tables.fitted[a]) + params.beta)
            + params.lambda * tables.hull[a] as f64
    };
    let cost2 = |a: usize, b: usize| -> f64 {
        ((tables.base[full ^ (a | b)] + (tables.fitted[a] + tables.fitted[b]))
            + params.beta * 2.0)
            + params.lambda * (tables.hull[a] as usize + tables.hull[b] as usize) as f64
    };

    let mut enumerated = 1u64;
    // Null assignment.
    let mut best: (f64, Vec<usize>) = (tables.base[full], Vec::new());

    // Tie order: cost, then fewer regions, then lexicographically smaller
    // mask list. Total and deterministic, so label permutations and
    // enumeration order cannot change the winner.
    let consider = |cost: f64, masks: Vec<usize>, best: &mut (f64, Vec<usize>)| {
        let better = match cost.total_cmp(&best.0) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => (masks.len(), &masks) < (best.1.len(), &best.1),
        };
        if better {
            *best = (cost, masks);
        }
    };

    // Single anomaly.
    for a in 1..=full {
        if !tables.smooth[a] {
            continue;
        }
        enumerated += 1;
        let c = cost1(a);
        consider(c, vec![a], &mut best);
    }

    // Two anomalies, deduplicated by requiring the mask containing the lowest
    // set bit of the union to come first.
    if max_labels >= 2 {
        for union in 1..=full {
            if (union as u64).count_ones() < 2 {
                continue;
            }
            let low = union & union.wrapping_neg();
            // Iterate proper nonempty submasks a of union with a < union.
            let mut a = (union - 1) & union;
            while a > 0 {
                let b = union ^ a;
                // Canonical labelling: region containing the lowest cell first.
                if a & low != 0 && tables.smooth[a] && tables.smooth[b] {
                    enumerated += 1;
                    let c = cost2(a, b);
                    consider(c, vec![a, b], &mut best);
                }
                a = (a - 1) & union;
            }
        }
    }

    let (best_cost, masks) = best;
    let regions: Vec<Region> = masks
        .iter()
        .map(|&mask| {
            let pts = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| grid.point(i)).collect();
            Region::new(grid.clone(), pts).expect("in-bounds")
        })
        .collect();
    let best_partition = Partition::from_anomalies(grid, regions)?;
    debug_assert_eq!(
        penalised_cost(field, &best_partition, params)?.total,
        best_cost,
        "memoised cost must replicate the reference path exactly"
    );
    Ok(OracleResult { best_partition, best_cost, enumerated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridSpec;

    #[test]
    fn comparison_is_strictly_ordered() {
        // The tuple comparison in `consider` must behave like a min-fold.
        let g = GridSpec::new(&[1, 4]).unwrap();
        let f = Field::new(g, vec![0.0, 0.0, 9.0, 9.0]).unwrap();
        let params = CostParams::new(1.0, 0.1, 1.0, 0.0).unwrap();
        let r = exact_minimise(&f, &params, 2, None).unwrap();
        // Isolating {9,9} costs 1 + 0.2 vs leaving them in baseline at 162.
        assert_eq!(r.best_partition.m(), 1);
        assert_eq!(r.best_partition.anomalies[0].len(), 2);
    }

    #[test]
    fn constant_field_stays_all_baseline() {
        let g = GridSpec::square(3);
        let f = Field::constant(g, 4.0);
        let params = CostParams::new(0.5, 0.1, 1.0, 4.0).unwrap();
        let r = exact_minimise(&f, &params, 2, None).unwrap();
        assert_eq!(r.best_partition.m(), 0);
        assert_eq!(r.best_cost, 0.0);
    }

    #[test]
    fn single_hot_cell_isolated() {
        let g = GridSpec::square(3);
        let mut vals = vec![0.0; 9];
        vals[4] = 100.0;
        let f = Field::new(g.clone(), vals).unwrap();
        let params = CostParams::new(1.0, 0.1, 1.0, 0.0).unwrap();
        let r = exact_minimise(&f, &params, 2, None).unwrap();
        assert_eq!(r.best_partition.m(), 1);
        assert_eq!(r.best_partition.anomalies[0].points(), &[g.point(4)]);
        // Enumerated: 1 null + (2^9 - 1) singles + pairs.
        assert!(r.enumerated > (1 << 9));
    }

    #[test]
    fn relabeling_cannot_change_the_optimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let g = GridSpec::new(&[2, 4]).unwrap();
        let vals: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
        let f = Field::new(g, vals).unwrap();
        let params = CostParams::new(0.8, 0.05, 1.0, 0.0).unwrap();
        let r = exact_minimise(&f, &params, 2, None).unwrap();
        // Enumeration visits each unordered pair once; rerunning is identical.
        let r2 = exact_minimise(&f, &params, 2, None).unwrap();
        assert_eq!(r.best_cost, r2.best_cost);
        assert_eq!(r.best_partition, r2.best_partition);
        assert_eq!(r.enumerated, r2.enumerated);
    }

    #[test]
    fn lower_beta_weakly_lowers_cost_and_raises_m() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = GridSpec::square(3);
        let vals: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = Field::new(g, vals).unwrap();
        let mut prev_cost = f64::INFINITY;
        let mut prev_m = usize::MAX;
        for &beta in &[8.0, 4.0, 2.0, 1.0, 0.5, 0.1] {
            let params = CostParams::new(beta, 0.05, 1.0, 0.0).unwrap();
            let r = exact_minimise(&f, &params, 2, None).unwrap();
            assert!(r.best_cost <= prev_cost + 1e-12);
            assert!(prev_m == usize::MAX || r.best_partition.m() >= prev_m);
            prev_cost = r.best_cost;
            prev_m = r.best_partition.m();
        }
    }

    #[test]
    fn lambda_zero_bound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let g = GridSpec::square(3);
        let vals: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = Field::new(g, vals).unwrap();
        let with = exact_minimise(&f, &CostParams::new(1.0, 0.2, 1.0, 0.0).unwrap(), 2, None).unwrap();
        let without = exact_minimise(&f, &CostParams::new(1.0, 0.0, 1.0, 0.0).unwrap(), 2, None).unwrap();
        assert!(without.best_cost <= with.best_cost);
    }

    #[test]
    fn smoothness_filter_restricts_regions() {
        let g = GridSpec::new(&[1, 8]).unwrap();
        // Alternating spikes force a 4-run region when unrestricted.
        let f = Field::new(g, vec![9.0, 0.0, 9.0, 0.0, 9.0, 0.0, 9.0, 0.0]).unwrap();
        let params = CostParams::new(0.5, 0.0, 1.0, 0.0).unwrap();
        let free = exact_minimise(&f, &params, 1, None).unwrap();
        assert_eq!(free.best_partition.m(), 1);
        assert_eq!(max_smoothness_index(&free.best_partition.anomalies[0]), 4);
        let filtered = exact_minimise(&f, &params, 1, Some(2)).unwrap();
        assert!(filtered
            .best_partition
            .anomalies
            .iter()
            .all(|r| max_smoothness_index(r) <= 2));
        assert!(filtered.best_cost >= free.best_cost);
    }

    #[test]
    fn size_guards() {
        let g = GridSpec::new(&[5, 4]).unwrap();
        let f = Field::constant(g, 0.0);
        let params = CostParams::new(1.0, 0.1, 1.0, 0.0).unwrap();
        assert!(matches!(exact_minimise(&f, &params, 1, None), Err(Error::TooLarge(_))));
        let small = Field::constant(GridSpec::square(2), 0.0);
        assert!(matches!(exact_minimise(&small, &params, 3, None), Err(Error::TooLarge(_))));
    }
}

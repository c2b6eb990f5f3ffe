//! Circular region segmentation: carve the most deviant candidate cells into
//! at most `m` ball-shaped regions.
//!
//! Candidates are the cells ranked by absolute deviation from the baseline
//! mean. Each pass centres a ball of radius `(n Gamma(d/2+1) / (m pi^(d/2)))^(1/d)`
//! on the most deviant remaining candidate and claims every remaining
//! candidate inside it; balls smaller than the size threshold `xi` are
//! discarded to the baseline. The loop stops once `m` regions are kept or the
//! candidates run out, so every candidate ends up either in a kept region or
//! in the baseline.

use crate::field::Field;
use crate::lattice::{GridSpec, Point, Region};

/// Candidate cells sorted by `|Y(s) - mu0|`, most deviant first, ties broken
/// by canonical point order. `key[i]` is the absolute deviation of `perm[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateOrder {
    pub perm: Vec<u32>,
    pub key: Vec<f64>,
}

impl CandidateOrder {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// Rank the valid cells of the field by absolute deviation from `mu0`,
/// descending. Masked cells never appear.
pub fn sort_candidates(field: &Field, mu0: f64) -> CandidateOrder {
    let mut cells: Vec<u32> = (0..field.grid().n() as u32)
        .filter(|&i| field.is_valid(i as usize))
        .collect();
    cells.sort_by(|&a, &b| {
        let da = (field.value(a as usize) - mu0).abs();
        let db = (field.value(b as usize) - mu0).abs();
        db.total_cmp(&da).then(a.cmp(&b))
    });
    let key = cells
        .iter()
        .map(|&i| (field.value(i as usize) - mu0).abs())
        .collect();
    CandidateOrder { perm: cells, key }
}

/// Squared CRS ball radius for carving `n_eff` cells into `m` regions on a
/// d-dimensional lattice: each ball's volume is `n_eff / m`.
///
/// `r^d = n Gamma(d/2+1) / (m pi^(d/2))` with the gamma values fixed per
/// dimension, so d = 2 is exactly `n/(m pi)`.
pub(crate) fn radius_sq(n_eff: usize, d: usize, m: usize) -> f64 {
    debug_assert!(m >= 1);
    let n = n_eff as f64;
    let m = m as f64;
    match d {
        // r = n/(2m): a 1D interval of length n/m.
        1 => {
            let r = n / (2.0 * m);
            r * r
        }
        2 => n / (m * std::f64::consts::PI),
        // r^3 = 3n/(4 pi m); libm keeps the cube root platform-stable.
        3 => {
            let r = libm::cbrt(3.0 * n / (4.0 * std::f64::consts::PI * m));
            r * r
        }
        _ => unreachable!("grids are capped at d = 3"),
    }
}

/// CRS ball radius on a grid of `grid.n()` cells.
pub fn crs_radius(grid: &GridSpec, m: usize) -> f64 {
    assert!(m >= 1);
    radius_sq(grid.n(), grid.d(), m).sqrt()
}

/// All lattice points within Euclidean distance `radius` of `center`
/// (closed ball), clipped to the grid.
pub fn ball(grid: &GridSpec, center: &Point, radius: f64) -> Region {
    let r2 = radius * radius;
    let offsets = ball_offsets(grid.d(), r2);
    let pts = offsets
        .iter()
        .filter_map(|off| {
            let coords: Vec<i32> = center
                .coords()
                .iter()
                .zip(off)
                .map(|(&c, &o)| c + o)
                .collect();
            let p = Point::new(&coords);
            grid.contains(&p).then_some(p)
        })
        .collect();
    Region::new(grid.clone(), pts).expect("ball points are clipped in-bounds")
}

/// Integer offsets with squared norm at most `r2`, in lexicographic order.
/// Shifting a sorted offset list by a centre preserves canonical order.
pub(crate) fn ball_offsets(d: usize, r2: f64) -> Vec<Vec<i32>> {
    let mut reach = 0i64;
    while ((reach + 1) * (reach + 1)) as f64 <= r2 {
        reach += 1;
    }
    let reach = reach as i32;
    let mut out = Vec::new();
    let mut current = vec![0i32; d];
    fill_offsets(d, r2, reach, 0, 0, &mut current, &mut out);
    out
}

fn fill_offsets(
    d: usize,
    r2: f64,
    reach: i32,
    axis: usize,
    norm_so_far: i64,
    current: &mut Vec<i32>,
    out: &mut Vec<Vec<i32>>,
) {
    if axis == d {
        out.push(current.clone());
        return;
    }
    for o in -reach..=reach {
        let norm = norm_so_far + (o as i64) * (o as i64);
        if norm as f64 <= r2 {
            current[axis] = o;
            fill_offsets(d, r2, reach, axis + 1, norm, current, out);
        }
    }
    current[axis] = 0;
}

/// One CRS pass over the first `n_top` candidates. Returns the kept regions
/// as lists of cell indices in canonical order, at most `m` of them, pairwise
/// disjoint. May return fewer than `m` regions, including none.
pub(crate) fn crs_cells(
    order: &CandidateOrder,
    n_top: usize,
    m: usize,
    xi: f64,
    grid: &GridSpec,
    n_eff: usize,
    scratch: &mut CrsScratch,
) -> Vec<Vec<u32>> {
    debug_assert!(n_top <= order.len());
    if m == 0 || n_top == 0 {
        return Vec::new();
    }
    let offsets = scratch.offsets(grid, n_eff, m);

    // Epoch-stamped membership: stamp[cell] == epoch means the cell is still
    // an unconsumed candidate.
    scratch.epoch += 1;
    let epoch = scratch.epoch;
    scratch.stamp.resize(grid.n(), 0);
    for &cell in &order.perm[..n_top] {
        scratch.stamp[cell as usize] = epoch;
    }

    let dims: Vec<i32> = grid.dims().iter().map(|&x| x as i32).collect();
    let strides = strides_of(grid);
    let mut kept: Vec<Vec<u32>> = Vec::new();
    let mut cursor = 0usize;
    while kept.len() < m && cursor < n_top {
        let center_cell = order.perm[cursor];
        if scratch.stamp[center_cell as usize] != epoch {
            cursor += 1;
            continue;
        }
        let center = decode(center_cell as usize, &dims, &strides);
        // Offsets are lex-sorted, so the claimed cells come out in canonical
        // order directly.
        let mut claimed: Vec<u32> = Vec::new();
        'offs: for off in offsets.iter() {
            let mut cell = 0usize;
            for ((&c, &o), (&dim, &stride)) in
                center.iter().zip(off).zip(dims.iter().zip(&strides))
            {
                let x = c + o;
                if x < 1 || x > dim {
                    continue 'offs;
                }
                cell += (x - 1) as usize * stride;
            }
            if scratch.stamp[cell] == epoch {
                claimed.push(cell as u32);
            }
        }
        for &cell in &claimed {
            scratch.stamp[cell as usize] = 0;
        }
        if claimed.len() as f64 >= xi {
            kept.push(claimed);
        }
    }
    kept
}

/// Reusable buffers for repeated CRS passes: the consumption stamps and the
/// per-m ball offset cache.
pub(crate) struct CrsScratch {
    stamp: Vec<u64>,
    epoch: u64,
    offset_cache: std::collections::BTreeMap<usize, std::sync::Arc<Vec<Vec<i32>>>>,
    cache_key: Option<(usize, usize)>,
}

impl CrsScratch {
    pub(crate) fn new() -> Self {
        Self {
            stamp: Vec::new(),
            epoch: 0,
            offset_cache: std::collections::BTreeMap::new(),
            cache_key: None,
        }
    }

    fn offsets(&mut self, grid: &GridSpec, n_eff: usize, m: usize) -> std::sync::Arc<Vec<Vec<i32>>> {
        let key = (grid.d(), n_eff);
        if self.cache_key != Some(key) {
            self.offset_cache.clear();
            self.cache_key = Some(key);
        }
        self.offset_cache
            .entry(m)
            .or_insert_with(|| std::sync::Arc::new(ball_offsets(grid.d(), radius_sq(n_eff, grid.d(), m))))
            .clone()
    }
}

fn strides_of(grid: &GridSpec) -> Vec<usize> {
    let d = grid.d();
    let mut strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * grid.dims()[i + 1] as usize;
    }
    strides
}

fn decode(mut cell: usize, dims: &[i32], strides: &[usize]) -> Vec<i32> {
    let mut coords = vec![0i32; dims.len()];
    for i in 0..dims.len() {
        coords[i] = (cell / strides[i]) as i32 + 1;
        cell %= strides[i];
    }
    coords
}

/// The public CRS operation: carve the first `n_top` candidates into at most
/// `m` ball-shaped regions, discarding those smaller than `xi`.
pub fn crs(order: &CandidateOrder, n_top: usize, m: usize, xi: f64, grid: &GridSpec) -> Vec<Region> {
    let mut scratch = CrsScratch::new();
    let cells = crs_cells(order, n_top.min(order.len()), m, xi, grid, grid.n(), &mut scratch);
    cells_to_regions(grid, &cells)
}

pub(crate) fn cells_to_regions(grid: &GridSpec, cells: &[Vec<u32>]) -> Vec<Region> {
    cells
        .iter()
        .map(|list| {
            let pts = list.iter().map(|&c| grid.point(c as usize)).collect();
            Region::new(grid.clone(), pts).expect("cells decode in-bounds")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    #[test]
    fn sort_candidates_by_absolute_deviation() {
        let g = GridSpec::new(&[1, 3]).unwrap();
        let f = Field::new(g, vec![5.0, -7.0, 1.0]).unwrap();
        let order = sort_candidates(&f, 0.0);
        assert_eq!(order.perm, vec![1, 0, 2]);
        assert_eq!(order.key, vec![7.0, 5.0, 1.0]);
    }

    #[test]
    fn ties_fall_back_to_canonical_order() {
        let g = GridSpec::square(2);
        let f = Field::new(g, vec![3.0, 3.0, 3.0, 3.0]).unwrap();
        let order = sort_candidates(&f, 0.0);
        assert_eq!(order.perm, vec![0, 1, 2, 3]);
    }

    #[test]
    fn keys_are_non_increasing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = GridSpec::square(7);
        let vals: Vec<f64> = (0..49).map(|_| rng.random_range(-5.0..5.0)).collect();
        let f = Field::new(g, vals).unwrap();
        let order = sort_candidates(&f, 0.3);
        assert!(order.key.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn radius_formula() {
        let g = GridSpec::square(50);
        let r = crs_radius(&g, 1);
        assert!((r - (2500.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((r - 28.209479).abs() < 1e-5);

        // d = 3: ball volume is n/m.
        let c = GridSpec::cube(12);
        let r3 = crs_radius(&c, 2);
        let volume = 4.0 / 3.0 * std::f64::consts::PI * r3.powi(3);
        assert!((volume - 1728.0 / 2.0).abs() < 1e-6);
    }

    #[test]
    fn ball_shapes() {
        let g = GridSpec::square(9);
        let center = Point::new(&[5, 5]);
        assert_eq!(ball(&g, &center, 0.0).points(), &[center.clone()]);
        // Radius 1 on an interior point: the 5-cell plus shape.
        let plus = ball(&g, &center, 1.0);
        assert_eq!(plus.len(), 5);
        assert!(plus.contains(&Point::new(&[4, 5])));
        assert!(plus.contains(&Point::new(&[5, 4])));
        assert!(!plus.contains(&Point::new(&[4, 4])));
        // Corner balls are clipped to in-bounds points.
        let corner = ball(&g, &Point::new(&[1, 1]), 1.0);
        assert_eq!(corner.len(), 3);
    }

    #[test]
    fn crs_single_candidate() {
        let g = GridSpec::square(4);
        let mut vals = vec![0.0; 16];
        vals[5] = 9.0;
        let f = Field::new(g.clone(), vals).unwrap();
        let order = sort_candidates(&f, 0.0);
        let regions = crs(&order, 1, 1, 1.0, &g);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].points(), &[g.point(5)]);
        // A threshold above the carved size discards everything.
        assert!(crs(&order, 1, 1, 2.0, &g).is_empty());
    }

    #[test]
    fn crs_two_far_clusters() {
        // Two tight 10-cell clusters in opposite corners of a 30x30 grid;
        // the m = 2 ball radius (~12) cannot bridge them.
        let g = GridSpec::square(30);
        let mut vals = vec![0.0; 900];
        let mut truth: Vec<Vec<u32>> = vec![Vec::new(), Vec::new()];
        for dx in 0..5 {
            for dy in 0..2 {
                let a = g.index(&Point::new(&[2 + dx, 2 + dy]));
                let b = g.index(&Point::new(&[25 + dx, 27 + dy]));
                vals[a] = 10.0;
                vals[b] = 10.0;
                truth[0].push(a as u32);
                truth[1].push(b as u32);
            }
        }
        let f = Field::new(g.clone(), vals).unwrap();
        let order = sort_candidates(&f, 0.0);
        let regions = crs(&order, 20, 2, 5.0, &g);
        assert_eq!(regions.len(), 2);
        let mut sizes: Vec<usize> = regions.iter().map(|r| r.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![10, 10]);
        // Each kept region is one of the clusters exactly.
        for r in &regions {
            let mut cells: Vec<u32> = r.cell_indices().iter().map(|&c| c as u32).collect();
            cells.sort_unstable();
            let mut t0 = truth[0].clone();
            let mut t1 = truth[1].clone();
            t0.sort_unstable();
            t1.sort_unstable();
            assert!(cells == t0 || cells == t1);
        }
    }

    #[test]
    fn kept_and_discarded_cover_the_prefix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = GridSpec::square(12);
        let vals: Vec<f64> = (0..144).map(|_| rng.random_range(-4.0..4.0)).collect();
        let f = Field::new(g.clone(), vals).unwrap();
        let order = sort_candidates(&f, 0.0);
        for &(n_top, m, xi) in &[(30usize, 3usize, 4.0f64), (60, 2, 8.0), (144, 5, 2.0)] {
            let regions = crs(&order, n_top, m, xi, &g);
            assert!(regions.len() <= m);
            // Kept regions are disjoint subsets of the prefix.
            let prefix: std::collections::BTreeSet<u32> =
                order.perm[..n_top].iter().copied().collect();
            let mut seen = std::collections::BTreeSet::new();
            for r in &regions {
                assert!((r.len() as f64) >= xi);
                for idx in r.cell_indices() {
                    assert!(prefix.contains(&(idx as u32)));
                    assert!(seen.insert(idx), "regions overlap");
                }
            }
            // Ball-shape bound on the intrinsic diameter.
            let r_ball = crs_radius(&g, m);
            for r in &regions {
                assert!(crate::lattice::intrinsic_diameter(r).unwrap() <= 2.0 * r_ball + 1e-9);
            }
        }
    }

    #[test]
    fn crs_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = GridSpec::square(10);
        let vals: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = Field::new(g.clone(), vals).unwrap();
        let order = sort_candidates(&f, 0.0);
        let a = crs(&order, 40, 3, 3.0, &g);
        let b = crs(&order, 40, 3, 3.0, &g);
        assert_eq!(a, b);
    }
}

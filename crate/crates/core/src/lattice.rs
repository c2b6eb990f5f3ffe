//! Lattice value types and the region algebra: grids, points, regions,
//! partitions, set distances, diameters and the per-axis smoothness index.
//!
//! Everything here is an immutable value; all operations are pure functions.
//! Points use 1-based coordinates matching the index set `{1..n_i}` of each
//! axis, and regions store their points in canonical (lexicographic) order so
//! that equal regions are bit-identical and all downstream sums are
//! reproducible.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A regular d-dimensional lattice, `1 <= d <= 3` for full feature support.
/// The region algebra itself is dimension-generic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    dims: Vec<u32>,
}

impl GridSpec {
    pub fn new(dims: &[u32]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGrid("no dimensions given".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!("zero-length axis in {dims:?}")));
        }
        let n: usize = dims.iter().map(|&d| d as usize).product();
        if n > (1 << 31) {
            return Err(Error::InvalidGrid(format!("grid of {n} cells is too large")));
        }
        Ok(Self { dims: dims.to_vec() })
    }

    /// Square 2D grid with `side * side` cells.
    pub fn square(side: u32) -> Self {
        Self::new(&[side, side]).expect("positive side")
    }

    /// Cubic 3D grid with `side^3` cells.
    pub fn cube(side: u32) -> Self {
        Self::new(&[side, side, side]).expect("positive side")
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    /// Number of axes d.
    pub fn d(&self) -> usize {
        self.dims.len()
    }

    /// Total cell count n.
    pub fn n(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    /// Largest axis length.
    pub fn n_max(&self) -> u32 {
        *self.dims.iter().max().expect("nonempty dims")
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.coords.len() == self.dims.len()
            && p.coords
                .iter()
                .zip(&self.dims)
                .all(|(&c, &d)| c >= 1 && c <= d as i32)
    }

    /// Canonical cell index of a point: lexicographic rank with the first
    /// axis slowest. Inverse of [`GridSpec::point`].
    pub fn index(&self, p: &Point) -> usize {
        debug_assert!(self.contains(p));
        let mut idx = 0usize;
        for (&c, &d) in p.coords.iter().zip(&self.dims) {
            idx = idx * d as usize + (c as usize - 1);
        }
        idx
    }

    pub fn point(&self, mut idx: usize) -> Point {
        debug_assert!(idx < self.n());
        let mut coords = vec![0i32; self.dims.len()];
        for (c, &d) in coords.iter_mut().zip(&self.dims).rev() {
            *c = (idx % d as usize) as i32 + 1;
            idx /= d as usize;
        }
        Point { coords }
    }

    /// All grid points in canonical order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.n()).map(|i| self.point(i))
    }

    /// The whole grid as a region.
    pub fn full_region(&self) -> Region {
        Region {
            grid: self.clone(),
            points: self.points().collect(),
        }
    }
}

/// A lattice point with 1-based integer coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<i32>,
}

impl Point {
    pub fn new(coords: &[i32]) -> Self {
        Self { coords: coords.to_vec() }
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords
    }

    /// Squared Euclidean distance, exact in integer arithmetic.
    pub fn dist_sq(&self, other: &Point) -> i64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| {
                let d = (a - b) as i64;
                d * d
            })
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.dist_sq(other) as f64).sqrt()
    }
}

impl From<&[i32]> for Point {
    fn from(coords: &[i32]) -> Self {
        Point::new(coords)
    }
}

/// A finite, duplicate-free set of lattice points in canonical
/// (lexicographic) order. Anomaly candidates, detected regions and ground
/// truth regions are all `Region`s; they need not be connected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    grid: GridSpec,
    points: Vec<Point>,
}

impl Region {
    /// Build a region from arbitrary points: sorts, deduplicates, and
    /// validates bounds against the grid.
    pub fn new(grid: GridSpec, mut points: Vec<Point>) -> Result<Self> {
        for p in &points {
            if !grid.contains(p) {
                return Err(Error::OutOfBounds(p.coords.clone(), grid.dims.clone()));
            }
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self { grid, points })
    }

    /// Build from points already in canonical order with no duplicates.
    pub(crate) fn from_sorted(grid: GridSpec, points: Vec<Point>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(points.iter().all(|p| grid.contains(p)));
        Self { grid, points }
    }

    pub fn empty(grid: GridSpec) -> Self {
        Self { grid, points: Vec::new() }
    }

    /// Convenience constructor from coordinate tuples.
    pub fn from_coords(grid: GridSpec, coords: &[&[i32]]) -> Result<Self> {
        Self::new(grid, coords.iter().map(|c| Point::new(c)).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// Canonical cell indices of the member points, ascending.
    pub fn cell_indices(&self) -> Vec<usize> {
        self.points.iter().map(|p| self.grid.index(p)).collect()
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        self.check_same_grid(other)?;
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Region::new(self.grid.clone(), points)
    }

    pub fn minus(&self, other: &Region) -> Result<Region> {
        self.check_same_grid(other)?;
        let points = self
            .points
            .iter()
            .filter(|p| !other.contains(p))
            .cloned()
            .collect();
        Ok(Region::from_sorted(self.grid.clone(), points))
    }

    pub fn intersection(&self, other: &Region) -> Result<Region> {
        self.check_same_grid(other)?;
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let points = small
            .points
            .iter()
            .filter(|p| big.contains(p))
            .cloned()
            .collect();
        Ok(Region::from_sorted(self.grid.clone(), points))
    }

    fn check_same_grid(&self, other: &Region) -> Result<()> {
        if self.grid.dims != other.grid.dims {
            return Err(Error::MismatchedGrids(
                self.grid.dims.clone(),
                other.grid.dims.clone(),
            ));
        }
        Ok(())
    }
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = ser.serialize_struct("Region", 1)?;
        s.serialize_field("points", &self.points)?;
        s.end()
    }
}

/// Number of points in exactly one of the two regions,
/// `|R \ R'| + |R' \ R|`. This is the localisation-error metric between an
/// estimated region and the truth.
pub fn symmetric_difference(a: &Region, b: &Region) -> Result<usize> {
    a.check_same_grid(b)?;
    // Merge walk over the two sorted point lists.
    let (pa, pb) = (a.points(), b.points());
    let (mut i, mut j, mut diff) = (0, 0, 0);
    while i < pa.len() && j < pb.len() {
        match pa[i].cmp(&pb[j]) {
            std::cmp::Ordering::Less => {
                diff += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    Ok(diff + (pa.len() - i) + (pb.len() - j))
}

/// Smallest Euclidean distance between any pair of points from the two
/// regions. Zero iff the regions share a point.
pub fn region_distance(a: &Region, b: &Region) -> Result<f64> {
    a.check_same_grid(b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut best = i64::MAX;
    for p in a.points() {
        for q in b.points() {
            best = best.min(p.dist_sq(q));
        }
    }
    Ok((best as f64).sqrt())
}

/// Region distance under a caller-supplied point metric. The default
/// Euclidean metric can be swapped for any other well-defined distance.
pub fn region_distance_with<F>(a: &Region, b: &Region, metric: F) -> Result<f64>
where
    F: Fn(&Point, &Point) -> f64,
{
    a.check_same_grid(b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut best = f64::INFINITY;
    for p in a.points() {
        for q in b.points() {
            best = best.min(metric(p, q));
        }
    }
    Ok(best)
}

/// Largest pairwise Euclidean distance within the region; 0 for a singleton.
pub fn intrinsic_diameter(r: &Region) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let pts = r.points();
    let mut best = 0i64;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(p.dist_sq(q));
        }
    }
    Ok((best as f64).sqrt())
}

/// Maximum, over all axis-parallel lines in direction `axis` (0-based), of
/// the number of maximal runs of consecutive region points on that line.
///
/// A region belongs to the smooth class `R_K` iff this is at most `K` for
/// every axis. An empty region scores 0; a solid rectangle scores 1 on every
/// axis; every hole or disconnected component on a line adds a run.
pub fn smoothness_index(r: &Region, axis: usize) -> usize {
    assert!(axis < r.grid.d(), "axis {axis} out of range");
    if r.is_empty() {
        return 0;
    }
    // Key a point by its other coordinates; count runs of consecutive values
    // of the axis coordinate within each key group.
    let mut lines: Vec<(Vec<i32>, i32)> = r
        .points()
        .iter()
        .map(|p| {
            let mut key: Vec<i32> = p.coords().to_vec();
            let v = key.remove(axis);
            (key, v)
        })
        .collect();
    lines.sort_unstable();
    let mut max_runs = 0usize;
    let mut i = 0;
    while i < lines.len() {
        let key = &lines[i].0;
        let mut runs = 0usize;
        let mut prev: Option<i32> = None;
        while i < lines.len() && &lines[i].0 == key {
            let v = lines[i].1;
            if prev != Some(v - 1) {
                runs += 1;
            }
            prev = Some(v);
            i += 1;
        }
        max_runs = max_runs.max(runs);
    }
    max_runs
}

/// Smoothness index maximised over all axes.
pub fn max_smoothness_index(r: &Region) -> usize {
    (0..r.grid.d()).map(|a| smoothness_index(r, a)).max().unwrap_or(0)
}

/// A full segmentation of the grid: the baseline region `R_0` plus `m`
/// pairwise disjoint anomaly regions. The baseline is always the complement
/// of the anomalies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub baseline: Region,
    pub anomalies: Vec<Region>,
}

impl Partition {
    /// Build from anomaly regions; the baseline is derived as the complement.
    /// Anomalies must be nonempty, pairwise disjoint and on the same grid.
    pub fn from_anomalies(grid: &GridSpec, anomalies: Vec<Region>) -> Result<Self> {
        let mut seen = vec![false; grid.n()];
        for r in &anomalies {
            if r.grid().dims != grid.dims {
                return Err(Error::MismatchedGrids(r.grid().dims.clone(), grid.dims.clone()));
            }
            if r.is_empty() {
                return Err(Error::InvalidPartition("empty anomaly region".into()));
            }
            for p in r.points() {
                let idx = grid.index(p);
                if seen[idx] {
                    return Err(Error::InvalidPartition(format!(
                        "anomaly regions overlap at {:?}",
                        p.coords()
                    )));
                }
                seen[idx] = true;
            }
        }
        let baseline_pts = (0..grid.n())
            .filter(|&i| !seen[i])
            .map(|i| grid.point(i))
            .collect();
        Ok(Self {
            baseline: Region::from_sorted(grid.clone(), baseline_pts),
            anomalies,
        })
    }

    /// The all-baseline partition (no anomalies).
    pub fn null(grid: &GridSpec) -> Self {
        Self {
            baseline: grid.full_region(),
            anomalies: Vec::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.baseline.grid()
    }

    pub fn m(&self) -> usize {
        self.anomalies.len()
    }
}

//! Minimum convex hull of a lattice region and the exact count of lattice
//! points it encloses, which drives the regional penalty term.
//!
//! All geometric predicates use integer (or i128) arithmetic, so vertex sets
//! and enclosed-point counts are exact: no floating-point boundary flicker.
//! Boundary lattice points count as enclosed (closed hull).
//!
//! 2D hulls come from a monotone chain over the region's canonical order,
//! counted by exact rational row scanlines. 3D hulls are built incrementally
//! and counted by bounding-box half-space enumeration, which is cheap and
//! exact at the grid sizes this crate targets.

use serde::Serialize;

use crate::lattice::{Point, Region};
use crate::{Error, Result};

/// A facet plane of a 3D hull with its outward normal in lowest integer
/// terms. A point `x` is on the inner side iff `normal . x <= offset`; the
/// hull is the intersection of all facet half-spaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Facet {
    pub normal: [i64; 3],
    pub offset: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HullKind {
    /// Single point.
    Point,
    /// Collinear region: two endpoint vertices.
    Segment,
    /// Planar polygon (the generic 2D case, or a coplanar 3D region),
    /// vertices in counter-clockwise order.
    Polygon,
    /// Full-rank 3D polytope.
    Polytope,
}

/// Minimal vertex representation of the convex hull of a region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullPolytope {
    /// Extreme points only. 2D (and coplanar 3D): counter-clockwise polygon
    /// order. Degenerate cases hold one point or the two segment endpoints.
    pub vertices: Vec<Point>,
    /// Facets with outward normals; nonempty only for full-rank 3D hulls.
    pub facets: Vec<Facet>,
    #[serde(skip)]
    kind: HullKind,
}

/// Convex hull with the fewest vertices enclosing the region.
pub fn convex_hull(region: &Region) -> Result<HullPolytope> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let d = region.grid().d();
    if d > 3 {
        return Err(Error::UnsupportedDimension(d, "d <= 3"));
    }
    let pts = extreme_candidates(region.points());
    Ok(hull_of_points(d, &pts))
}

/// Exact number of ambient lattice points inside or on the hull of the
/// region; always at least `|R|`.
pub fn hull_cardinality(region: &Region) -> Result<usize> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let d = region.grid().d();
    if d > 3 {
        return Err(Error::UnsupportedDimension(d, "d <= 3"));
    }
    Ok(cardinality_of_points(d, region.points()))
}

/// `hull_cardinality(R) - |R|`: how many baseline points the hull swallows.
/// Zero exactly when the region is convex (it fills its own hull).
pub fn hull_excess(region: &Region) -> Result<usize> {
    Ok(hull_cardinality(region)? - region.len())
}

/// Fast-path entry for the detector: points must be sorted canonically and
/// duplicate-free.
pub(crate) fn cardinality_of_points(d: usize, points: &[Point]) -> usize {
    debug_assert!(!points.is_empty());
    let pts = extreme_candidates(points);
    let hull = hull_of_points(d, &pts);
    match hull.kind {
        HullKind::Point => 1,
        HullKind::Segment => segment_count(&hull.vertices[0], &hull.vertices[1]),
        HullKind::Polygon => {
            if d == 2 {
                polygon_count_2d(&hull.vertices, |_, _| true)
            } else {
                coplanar_count_3d(&hull.vertices)
            }
        }
        HullKind::Polytope => polytope_count_3d(&hull.vertices, &hull.facets),
    }
}

/// Per-line extreme filter: on every axis-parallel line (in the last axis),
/// only the first and last region point can be a hull vertex, because any
/// point between two others is a convex combination of them. The input is in
/// canonical order, so lines are consecutive groups; the hull of the filtered
/// set equals the hull of the full set.
fn extreme_candidates(points: &[Point]) -> Vec<Point> {
    let d = points[0].coords().len();
    if d == 1 || points.len() <= 2 {
        return vec![points[0].clone(), points[points.len() - 1].clone()]
            .into_iter()
            .take(points.len().min(2))
            .collect();
    }
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=points.len() {
        let same_line = i < points.len()
            && points[i].coords()[..d - 1] == points[start].coords()[..d - 1];
        if !same_line {
            out.push(points[start].clone());
            if i - 1 > start {
                out.push(points[i - 1].clone());
            }
            start = i;
        }
    }
    out
}

fn hull_of_points(d: usize, pts: &[Point]) -> HullPolytope {
    if pts.len() == 1 {
        return HullPolytope { vertices: pts.to_vec(), facets: Vec::new(), kind: HullKind::Point };
    }
    // Collinearity check covers every dimension uniformly.
    if all_collinear(pts) {
        // Canonical order is monotone along any line, so the sorted extremes
        // are the segment endpoints.
        return HullPolytope {
            vertices: vec![pts[0].clone(), pts[pts.len() - 1].clone()],
            facets: Vec::new(),
            kind: HullKind::Segment,
        };
    }
    match d {
        2 => HullPolytope {
            vertices: monotone_chain(pts, &[0, 1]),
            facets: Vec::new(),
            kind: HullKind::Polygon,
        },
        3 => match find_simplex(pts) {
            Some(simplex) => hull_3d(pts, simplex),
            None => HullPolytope {
                // Rank 2: a planar polygon embedded in 3D.
                vertices: monotone_chain(pts, &plane_axes(pts).1),
                facets: Vec::new(),
                kind: HullKind::Polygon,
            },
        },
        _ => unreachable!("dimension checked by callers"),
    }
}

/// Four affinely independent point indices, or `None` when the set is
/// coplanar. The input is known not to be collinear.
fn find_simplex(pts: &[Point]) -> Option<[usize; 4]> {
    let p: Vec<[i64; 3]> = pts.iter().map(coords3).collect();
    let i2 = (2..pts.len()).find(|&i| !collinear(&pts[0], &pts[1], &pts[i]))?;
    let i3 = (2..pts.len())
        .find(|&i| i != i2 && orient3(&p[0], &p[1], &p[i2], &p[i]) != 0)?;
    Some([0, 1, i2, i3])
}

/// Plane normal of a rank-2 point set and the two axes that keep its
/// projection invertible (the dropped axis has the largest normal component).
fn plane_axes(pts: &[Point]) -> ([i64; 3], [usize; 2]) {
    let a = coords3(&pts[0]);
    let b = coords3(&pts[pts.len() - 1]);
    let k = (1..pts.len() - 1)
        .find(|&i| !collinear(&pts[0], &pts[pts.len() - 1], &pts[i]))
        .expect("rank-2 set has a non-collinear triple");
    let c = coords3(&pts[k]);
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let normal = cross3(u, v);
    let drop_axis = (0..3).max_by_key(|&i| normal[i].unsigned_abs()).expect("nonzero normal");
    let keep: Vec<usize> = (0..3).filter(|&i| i != drop_axis).collect();
    (normal, [keep[0], keep[1]])
}

fn all_collinear(pts: &[Point]) -> bool {
    if pts.len() <= 2 {
        return true;
    }
    let a = &pts[0];
    let b = &pts[pts.len() - 1];
    pts.iter().all(|p| collinear(a, b, p))
}

fn collinear(a: &Point, b: &Point, c: &Point) -> bool {
    let d = a.coords().len();
    let u: Vec<i64> = (0..d).map(|i| (b.coords()[i] - a.coords()[i]) as i64).collect();
    let v: Vec<i64> = (0..d).map(|i| (c.coords()[i] - a.coords()[i]) as i64).collect();
    for i in 0..d {
        for j in i + 1..d {
            if u[i] * v[j] - u[j] * v[i] != 0 {
                return false;
            }
        }
    }
    true
}

/// Lattice points on the closed segment [a, b]: gcd of the coordinate deltas
/// plus one.
fn segment_count(a: &Point, b: &Point) -> usize {
    let g = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(&x, &y)| (x - y).unsigned_abs() as u64)
        .fold(0u64, gcd);
    g as usize + 1
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Monotone chain on canonically sorted points, projected to the two axes in
/// `proj`. Returns the counter-clockwise polygon with collinear points
/// dropped (minimal vertex set). Assumes not all points collinear.
fn monotone_chain(pts: &[Point], proj: &[usize; 2]) -> Vec<Point> {
    let xy = |p: &Point| (p.coords()[proj[0]] as i64, p.coords()[proj[1]] as i64);
    let cross = |o: &Point, a: &Point, b: &Point| -> i64 {
        let (ox, oy) = xy(o);
        let (ax, ay) = xy(a);
        let (bx, by) = xy(b);
        (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)
    };
    // Points are lex-sorted on full coordinates; for proj == [0, 1] (the only
    // 2D case) that is exactly the (x, y) order the chain needs. For 3D
    // coplanar projections, re-sort on the projected pair.
    let mut sorted: Vec<&Point> = pts.iter().collect();
    sorted.sort_by_key(|p| xy(p));
    sorted.dedup_by_key(|p| xy(p));

    let mut lower: Vec<&Point> = Vec::new();
    for p in &sorted {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<&Point> = Vec::new();
    for p in sorted.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.into_iter().cloned().collect()
}

/// Exact closed-interval width of a convex polygon on one integer row,
/// resolved in rational arithmetic; `keep` filters individual columns (used
/// by the coplanar-3D divisibility check).
fn polygon_count_2d<F: Fn(i64, i64) -> bool>(verts: &[Point], keep: F) -> usize {
    let v: Vec<(i64, i64)> = verts
        .iter()
        .map(|p| (p.coords()[0] as i64, p.coords()[1] as i64))
        .collect();
    let xmin = v.iter().map(|p| p.0).min().unwrap();
    let xmax = v.iter().map(|p| p.0).max().unwrap();
    let mut count = 0usize;
    // Rows indexed by the first coordinate; scan the second along each row.
    for row in xmin..=xmax {
        // Lower/upper bounds of the row's intersection as rationals (num/den,
        // den > 0), starting empty.
        let mut lo: Option<(i128, i128)> = None;
        let mut hi: Option<(i128, i128)> = None;
        let mut add = |num: i128, den: i128| {
            debug_assert!(den > 0);
            match lo {
                None => lo = Some((num, den)),
                Some((n, d)) => {
                    if num * d < n * den {
                        lo = Some((num, den));
                    }
                }
            }
            match hi {
                None => hi = Some((num, den)),
                Some((n, d)) => {
                    if num * d > n * den {
                        hi = Some((num, den));
                    }
                }
            }
        };
        let k = v.len();
        for i in 0..k {
            let (x1, y1) = v[i];
            let (x2, y2) = v[(i + 1) % k];
            if x1 == x2 {
                if x1 == row {
                    add(y1 as i128, 1);
                    add(y2 as i128, 1);
                }
            } else if (x1.min(x2)..=x1.max(x2)).contains(&row) {
                // y(row) = y1 + (y2 - y1)(row - x1)/(x2 - x1)
                let mut den = (x2 - x1) as i128;
                let mut num = (y1 as i128) * den + (y2 - y1) as i128 * (row - x1) as i128;
                if den < 0 {
                    num = -num;
                    den = -den;
                }
                add(num, den);
            }
        }
        if let (Some((ln, ld)), Some((hn, hd))) = (lo, hi) {
            let ylo = ceil_div(ln, ld);
            let yhi = floor_div(hn, hd);
            for y in ylo..=yhi {
                if keep(row, y as i64) {
                    count += 1;
                }
            }
        }
    }
    count
}

fn floor_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    a.div_euclid(b)
}

fn ceil_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    -((-a).div_euclid(b))
}

/// Count lattice points of a coplanar 3D hull: project the polygon onto the
/// axis pair that keeps the projection invertible, scan it in 2D, and keep
/// the columns whose lifted third coordinate is an integer. `verts` is the
/// minimal planar hull in polygon order.
fn coplanar_count_3d(verts: &[Point]) -> usize {
    let (normal, keep) = plane_axes(verts);
    let a = coords3(&verts[0]);
    let offset: i64 = (0..3).map(|i| normal[i] * a[i]).sum();
    let proj: Vec<Point> = verts
        .iter()
        .map(|p| Point::new(&[p.coords()[keep[0]], p.coords()[keep[1]]]))
        .collect();
    let nk = normal[3 - keep[0] - keep[1]];
    let (nu, nv) = (normal[keep[0]], normal[keep[1]]);
    polygon_count_2d(&proj, |pu, pv| (offset - nu * pu - nv * pv) % nk == 0)
}

fn cross3(u: [i64; 3], v: [i64; 3]) -> [i64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// Signed orientation of d against the plane of (a, b, c): positive when d is
/// on the normal side of the winding.
fn orient3(a: &[i64; 3], b: &[i64; 3], c: &[i64; 3], d: &[i64; 3]) -> i128 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    let n = cross3(u, v);
    (n[0] as i128) * (w[0] as i128) + (n[1] as i128) * (w[1] as i128) + (n[2] as i128) * (w[2] as i128)
}

fn coords3(p: &Point) -> [i64; 3] {
    let c = p.coords();
    [c[0] as i64, c[1] as i64, c[2] as i64]
}

/// Incremental 3D convex hull with exact integer predicates. The input has
/// rank 3 and no duplicates; `simplex` holds four affinely independent
/// indices.
fn hull_3d(pts: &[Point], simplex: [usize; 4]) -> HullPolytope {
    let p: Vec<[i64; 3]> = pts.iter().map(coords3).collect();
    let n = p.len();
    let [i0, i1, i2, i3] = simplex;

    // Faces wind so their normals point away from the simplex interior. The
    // interior reference is the vertex sum (centroid times 4), which keeps
    // the test integral.
    let interior = [
        p[i0][0] + p[i1][0] + p[i2][0] + p[i3][0],
        p[i0][1] + p[i1][1] + p[i2][1] + p[i3][1],
        p[i0][2] + p[i1][2] + p[i2][2] + p[i3][2],
    ];
    let oriented = |a: usize, b: usize, c: usize| -> [usize; 3] {
        // orient3 against interior/4: scale the tested point by 4 instead.
        let a4 = [p[a][0] * 4, p[a][1] * 4, p[a][2] * 4];
        let b4 = [p[b][0] * 4, p[b][1] * 4, p[b][2] * 4];
        let c4 = [p[c][0] * 4, p[c][1] * 4, p[c][2] * 4];
        if orient3(&a4, &b4, &c4, &interior) < 0 {
            [a, b, c]
        } else {
            [a, c, b]
        }
    };
    let mut faces: Vec<[usize; 3]> = vec![
        oriented(i0, i1, i2),
        oriented(i0, i1, i3),
        oriented(i0, i2, i3),
        oriented(i1, i2, i3),
    ];

    for idx in 0..n {
        if idx == i0 || idx == i1 || idx == i2 || idx == i3 {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| {
                let [a, b, c] = faces[f];
                orient3(&p[a], &p[b], &p[c], &p[idx]) > 0
            })
            .collect();
        if visible.is_empty() {
            continue;
        }
        // Horizon edges: edges belonging to exactly one visible face, kept in
        // that face's winding direction. A BTreeMap keeps the construction
        // order independent of hash state.
        let mut edge_count: std::collections::BTreeMap<(usize, usize), (usize, (usize, usize))> =
            std::collections::BTreeMap::new();
        for &f in &visible {
            let [a, b, c] = faces[f];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                let e = edge_count.entry((u.min(v), u.max(v))).or_insert((0, (u, v)));
                e.0 += 1;
            }
        }
        let horizon: Vec<(usize, usize)> = edge_count
            .values()
            .filter(|(cnt, _)| *cnt == 1)
            .map(|(_, dir)| *dir)
            .collect();
        let mut keep: Vec<[usize; 3]> = (0..faces.len())
            .filter(|f| !visible.contains(f))
            .map(|f| faces[f])
            .collect();
        for (u, v) in horizon {
            keep.push([u, v, idx]);
        }
        faces = keep;
    }

    // Triangles coplanar with an inserted point survive the incremental
    // pass, so the face list can triangulate flat facets and keep interior
    // points as anchors. Collapse the triangles into primitive facet planes
    // and keep only the points that sit on at least three distinct planes:
    // exactly the 0-faces of the polytope.
    let mut planes: std::collections::BTreeSet<([i64; 3], i64)> = std::collections::BTreeSet::new();
    for &[a, b, c] in &faces {
        let u = [p[b][0] - p[a][0], p[b][1] - p[a][1], p[b][2] - p[a][2]];
        let v = [p[c][0] - p[a][0], p[c][1] - p[a][1], p[c][2] - p[a][2]];
        let normal = cross3(u, v);
        let offset = normal[0] * p[a][0] + normal[1] * p[a][1] + normal[2] * p[a][2];
        let g = normal
            .iter()
            .map(|x| x.unsigned_abs())
            .fold(offset.unsigned_abs(), gcd)
            .max(1);
        planes.insert((
            [normal[0] / g as i64, normal[1] / g as i64, normal[2] / g as i64],
            offset / g as i64,
        ));
    }
    let facets: Vec<Facet> = planes
        .into_iter()
        .map(|(normal, offset)| Facet { normal, offset })
        .collect();

    let mut vert_idx: Vec<usize> = faces.iter().flatten().copied().collect();
    vert_idx.sort_unstable();
    vert_idx.dedup();
    let vertices: Vec<Point> = vert_idx
        .into_iter()
        .filter(|&i| {
            let q = p[i];
            facets
                .iter()
                .filter(|f| f.normal[0] * q[0] + f.normal[1] * q[1] + f.normal[2] * q[2] == f.offset)
                .count()
                >= 3
        })
        .map(|i| pts[i].clone())
        .collect();
    HullPolytope { vertices, facets, kind: HullKind::Polytope }
}

/// Bounding-box enumeration against the facet half-spaces.
fn polytope_count_3d(vertices: &[Point], facets: &[Facet]) -> usize {
    let v: Vec<[i64; 3]> = vertices.iter().map(coords3).collect();
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for p in &v {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut count = 0usize;
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                let inside = facets.iter().all(|f| {
                    let dot = f.normal[0] as i128 * x as i128
                        + f.normal[1] as i128 * y as i128
                        + f.normal[2] as i128 * z as i128;
                    dot <= f.offset as i128
                });
                if inside {
                    count += 1;
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridSpec;

    fn grid(side: u32) -> GridSpec {
        GridSpec::square(side)
    }

    fn region2(coords: &[(i32, i32)]) -> Region {
        Region::new(
            grid(20),
            coords.iter().map(|&(x, y)| Point::new(&[x, y])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn square_corners_ccw() {
        let r = region2(&[(1, 1), (1, 4), (4, 1), (4, 4)]);
        let h = convex_hull(&r).unwrap();
        assert_eq!(h.vertices.len(), 4);
        // Counter-clockwise: consecutive cross products positive.
        let v: Vec<(i64, i64)> = h
            .vertices
            .iter()
            .map(|p| (p.coords()[0] as i64, p.coords()[1] as i64))
            .collect();
        for i in 0..4 {
            let (ax, ay) = v[i];
            let (bx, by) = v[(i + 1) % 4];
            let (cx, cy) = v[(i + 2) % 4];
            assert!((bx - ax) * (cy - ay) - (by - ay) * (cx - ax) > 0);
        }
    }

    #[test]
    fn collinear_points_collapse_to_endpoints() {
        let r = region2(&[(1, 1), (2, 2), (3, 3), (4, 4), (5, 5), (6, 6), (7, 7), (8, 8), (9, 9), (10, 10)]);
        let h = convex_hull(&r).unwrap();
        assert_eq!(h.vertices.len(), 2);
        assert_eq!(h.vertices[0], Point::new(&[1, 1]));
        assert_eq!(h.vertices[1], Point::new(&[10, 10]));
        assert_eq!(hull_cardinality(&r).unwrap(), 10);
    }

    #[test]
    fn singleton_and_solid_square() {
        let r = region2(&[(3, 7)]);
        assert_eq!(hull_cardinality(&r).unwrap(), 1);
        let sq = region2(&[(2, 2), (2, 3), (3, 2), (3, 3)]);
        assert_eq!(hull_cardinality(&sq).unwrap(), 4);
        assert_eq!(hull_excess(&sq).unwrap(), 0);
    }

    #[test]
    fn triangle_counts_six_lattice_points() {
        let r = region2(&[(1, 1), (1, 3), (3, 1)]);
        assert_eq!(hull_cardinality(&r).unwrap(), 6);
        assert_eq!(hull_excess(&r).unwrap(), 3);
    }

    #[test]
    fn concave_region_has_positive_excess() {
        // L-shape: hull encloses the missing corner block.
        let mut pts = Vec::new();
        for x in 1..=4 {
            for y in 1..=2 {
                pts.push((x, y));
            }
        }
        for x in 1..=2 {
            for y in 3..=4 {
                pts.push((x, y));
            }
        }
        let r = region2(&pts);
        assert!(hull_excess(&r).unwrap() > 0);
    }

    #[test]
    fn distant_points_inflate_excess() {
        // Compact block, then the same block plus far-away points.
        let mut block = Vec::new();
        for x in 1..=3 {
            for y in 1..=3 {
                block.push((x, y));
            }
        }
        let base_excess = hull_excess(&region2(&block)).unwrap();
        let mut spread = block.clone();
        for k in 0..9 {
            spread.push((18, 10 + (k % 3)));
        }
        let spread_excess = hull_excess(&region2(&spread)).unwrap();
        assert_eq!(base_excess, 0);
        assert!(spread_excess > 20);
    }

    #[test]
    fn segment_gcd_count() {
        let r = region2(&[(1, 1), (7, 4)]);
        // gcd(6, 3) = 3 -> 4 lattice points on the closed segment.
        assert_eq!(hull_cardinality(&r).unwrap(), 4);
    }

    #[test]
    fn translation_invariance() {
        let r = region2(&[(1, 1), (1, 5), (4, 2), (3, 4), (2, 2)]);
        let shifted: Vec<(i32, i32)> = r
            .points()
            .iter()
            .map(|p| (p.coords()[0] + 9, p.coords()[1] + 11))
            .collect();
        let s = region2(&shifted);
        assert_eq!(hull_cardinality(&r).unwrap(), hull_cardinality(&s).unwrap());
    }

    fn region3(coords: &[(i32, i32, i32)]) -> Region {
        Region::new(
            GridSpec::cube(10),
            coords.iter().map(|&(x, y, z)| Point::new(&[x, y, z])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn unit_cube_counts_eight() {
        let r = region3(&[
            (1, 1, 1),
            (1, 1, 2),
            (1, 2, 1),
            (1, 2, 2),
            (2, 1, 1),
            (2, 1, 2),
            (2, 2, 1),
            (2, 2, 2),
        ]);
        assert_eq!(hull_cardinality(&r).unwrap(), 8);
        let h = convex_hull(&r).unwrap();
        assert_eq!(h.vertices.len(), 8);
        assert!(!h.facets.is_empty());
    }

    #[test]
    fn cube_3x3_counts_interior() {
        let mut pts = Vec::new();
        for x in 1..=3 {
            for y in 1..=3 {
                for z in 1..=3 {
                    if x == 2 && y == 2 && z == 2 {
                        continue;
                    }
                    pts.push((x, y, z));
                }
            }
        }
        let r = region3(&pts);
        // Hull of the hollow cube encloses the centre too.
        assert_eq!(hull_cardinality(&r).unwrap(), 27);
        assert_eq!(hull_excess(&r).unwrap(), 1);
    }

    #[test]
    fn coplanar_3d_region() {
        // Triangle in the z=2 plane: same count as its 2D analogue.
        let r = region3(&[(1, 1, 2), (1, 3, 2), (3, 1, 2)]);
        assert_eq!(hull_cardinality(&r).unwrap(), 6);
        // Tilted plane x+y+z = 5: corners plus the three edge midpoints
        // (2,2,1), (2,1,2), (1,2,2) are lattice points of the triangle.
        let t = region3(&[(3, 1, 1), (1, 3, 1), (1, 1, 3)]);
        assert_eq!(hull_cardinality(&t).unwrap(), 6);
    }

    #[test]
    fn tetrahedron_with_face_points() {
        let r = region3(&[(1, 1, 1), (5, 1, 1), (1, 5, 1), (1, 1, 5), (2, 2, 1)]);
        let h = convex_hull(&r).unwrap();
        // (2,2,1) lies on the z=1 face: not a vertex.
        assert_eq!(h.vertices.len(), 4);
    }
}

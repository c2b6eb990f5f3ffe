//! Synthetic anomaly fields with known ground truth.
//!
//! Four reference layouts are generated, parameterised by the grid size, the
//! minimal signal `delta` and the target total anomaly area:
//!
//! 1. five equal squares with means `(Δ, 2Δ, 2Δ, 3Δ, 3Δ)`;
//! 2. an ellipse (`Δ`), a ring with a hole (`2Δ`) and a two-component
//!    region (`3Δ`);
//! 3. a concave U (`Δ`) and a two-component region (`Δ`);
//! 4. a 3D spherical shell and a two-component region, both `Δ`.
//!
//! Layouts are deterministic given the setting; boundary jitter (settings
//! 2, 3 and 3D) is seeded and rejects flips that would break the separation
//! floor between regions or push a region out of the smooth class. Noise is
//! drawn from a seeded, platform-stable generator, either i.i.d. standard
//! normal or a dense-factorised Gaussian vector with covariance
//! `sigma^2 * exp(-zeta * dist)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::field::Field;
use crate::lattice::{intrinsic_diameter, max_smoothness_index, region_distance, GridSpec, Partition, Point, Region};
use crate::{Error, Result};

/// Minimum Euclidean distance required between distinct anomaly regions.
pub const SEPARATION_FLOOR: f64 = 2.0;

/// Dense factorisation guard for the dependent-noise sampler.
pub const MAX_DEPENDENT_CELLS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SettingId {
    One,
    Two,
    Three,
    ThreeD,
}

impl std::str::FromStr for SettingId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "1" => Ok(SettingId::One),
            "2" => Ok(SettingId::Two),
            "3" => Ok(SettingId::Three),
            "3d" | "3D" => Ok(SettingId::ThreeD),
            other => Err(format!("unknown setting '{other}' (expected 1, 2, 3 or 3d)")),
        }
    }
}

impl SettingId {
    /// The smooth-class bound the generated regions are guaranteed to meet.
    pub fn smooth_cap(&self) -> usize {
        match self {
            SettingId::One => 1,
            _ => 6,
        }
    }

    fn jittered(&self) -> bool {
        !matches!(self, SettingId::One)
    }
}

/// A synthetic scenario: layout family, grid, signal and area targets,
/// boundary jitter probability, optional noise correlation decay, and the
/// seed everything is derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetting {
    pub setting_id: SettingId,
    pub grid: GridSpec,
    pub delta: f64,
    pub total_area: usize,
    pub jitter_prob: f64,
    pub zeta: Option<f64>,
    pub seed: u64,
}

impl SimSetting {
    /// Standard scenario on a square (2D) or cubic (3D) grid of `n` cells,
    /// with the reference jitter of 0.25 on the jittered settings.
    pub fn standard(setting_id: SettingId, n: usize, delta: f64, total_area: usize, seed: u64) -> Result<Self> {
        let grid = match setting_id {
            SettingId::ThreeD => {
                let side = (n as f64).cbrt().round() as u32;
                if (side as usize).pow(3) != n {
                    return Err(Error::Infeasible(format!("n = {n} is not a perfect cube")));
                }
                GridSpec::cube(side)
            }
            _ => {
                let side = (n as f64).sqrt().round() as u32;
                if (side as usize).pow(2) != n {
                    return Err(Error::Infeasible(format!("n = {n} is not a perfect square")));
                }
                GridSpec::square(side)
            }
        };
        if total_area >= n {
            return Err(Error::Infeasible(format!(
                "total anomaly area {total_area} must be below n = {n}"
            )));
        }
        Ok(Self {
            setting_id,
            grid,
            delta,
            total_area,
            jitter_prob: if setting_id.jittered() { 0.25 } else { 0.0 },
            zeta: None,
            seed,
        })
    }
}

/// The generated truth: the partition, the region means `mu*_0..mu*_m`, the
/// smallest region size, and the region count.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GroundTruth {
    pub partition: Partition,
    pub means: Vec<f64>,
    /// `min_j |R*_j|`, the delta of the SNR and of the `beta = Delta * delta`
    /// rule.
    pub delta_min: f64,
    pub m_star: usize,
}

impl GroundTruth {
    /// The region-wise constant mean surface in canonical cell order.
    pub fn mean_surface(&self) -> Vec<f64> {
        let grid = self.partition.grid();
        let mut mu = vec![self.means[0]; grid.n()];
        for (j, region) in self.partition.anomalies.iter().enumerate() {
            for p in region.points() {
                mu[grid.index(p)] = self.means[j + 1];
            }
        }
        mu
    }
}

/// Stable seed derivation for independent random streams.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Build the deterministic layout for the setting, apply boundary jitter,
/// and validate areas, separation and smoothness.
pub fn make_truth(setting: &SimSetting) -> Result<GroundTruth> {
    let (mut regions, multipliers) = match setting.setting_id {
        SettingId::One => layout_squares(setting)?,
        SettingId::Two => layout_shapes(setting)?,
        SettingId::Three => layout_concave(setting)?,
        SettingId::ThreeD => layout_3d(setting)?,
    };

    let built: usize = regions.iter().map(|r| r.len()).sum();
    let tolerance = (setting.total_area as f64 * 0.02).max(1.0);
    if (built as f64 - setting.total_area as f64).abs() > tolerance {
        return Err(Error::Infeasible(format!(
            "layout area {built} misses the target {} by more than 2%",
            setting.total_area
        )));
    }

    if setting.jitter_prob > 0.0 {
        // Additions must not push a region past single-ball coverage at the
        // setting's true region count.
        let diam_budget = match setting.setting_id {
            SettingId::One => None,
            SettingId::Two => Some(crate::crs::radius_sq(setting.grid.n(), 2, 3).sqrt()),
            SettingId::Three => Some(crate::crs::radius_sq(setting.grid.n(), 2, 2).sqrt()),
            SettingId::ThreeD => Some(crate::crs::radius_sq(setting.grid.n(), 3, 2).sqrt()),
        };
        jitter_boundaries(
            &setting.grid,
            &mut regions,
            setting.jitter_prob,
            setting.setting_id.smooth_cap(),
            diam_budget,
            derive_seed(setting.seed, 1),
        );
    }

    for (i, a) in regions.iter().enumerate() {
        if a.is_empty() {
            return Err(Error::Infeasible(format!("region {i} came out empty")));
        }
        if max_smoothness_index(a) > setting.setting_id.smooth_cap() {
            return Err(Error::Infeasible(format!("region {i} is not smooth enough")));
        }
        for b in regions.iter().skip(i + 1) {
            if region_distance(a, b)? < SEPARATION_FLOOR {
                return Err(Error::Infeasible("regions closer than the separation floor".into()));
            }
        }
    }

    let delta_min = regions.iter().map(Region::len).min().expect("nonempty layout") as f64;
    let m_star = regions.len();
    let mut means = vec![0.0];
    means.extend(multipliers.iter().map(|&k| k * setting.delta));
    let partition = Partition::from_anomalies(&setting.grid, regions)?;
    Ok(GroundTruth { partition, means, delta_min, m_star })
}

/// Setting 1: five squares of side `sqrt(area/5)`, corners plus centre,
/// means `(2, 3, 3, 2, 1) * delta` in layout order.
fn layout_squares(setting: &SimSetting) -> Result<(Vec<Region>, Vec<f64>)> {
    let grid = &setting.grid;
    require_2d(grid)?;
    let dim = grid.dims()[0] as i32;
    let side = ((setting.total_area as f64 / 5.0).sqrt()).round() as i32;
    if side < 1 {
        return Err(Error::Infeasible("area too small for five squares".into()));
    }
    if dim < 3 * side + 4 {
        return Err(Error::Infeasible(format!(
            "grid side {dim} cannot separate five {side}x{side} squares"
        )));
    }
    let lo = 2;
    let hi = dim - side;
    let mid = (dim - side) / 2 + 1;
    let anchors = [(lo, lo), (lo, hi), (hi, lo), (hi, hi), (mid, mid)];
    let mut regions = Vec::with_capacity(5);
    for (x0, y0) in anchors {
        let mut pts = Vec::with_capacity((side * side) as usize);
        for dx in 0..side {
            for dy in 0..side {
                pts.push(Point::new(&[x0 + dx, y0 + dy]));
            }
        }
        regions.push(Region::new(grid.clone(), pts)?);
    }
    Ok((regions, vec![2.0, 3.0, 3.0, 2.0, 1.0]))
}

/// Greedy scored fill: take exactly `count` allowed cells with the smallest
/// score, ties broken canonically.
fn take_by_score<F>(grid: &GridSpec, count: usize, blocked: &[bool], score: F) -> Result<Vec<usize>>
where
    F: Fn(&[i32]) -> f64,
{
    let mut scored: Vec<(f64, usize)> = (0..grid.n())
        .filter(|&i| !blocked[i])
        .map(|i| (score(grid.point(i).coords()), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if scored.len() < count {
        return Err(Error::Infeasible("not enough free cells for the layout".into()));
    }
    Ok(scored[..count].iter().map(|&(_, i)| i).collect())
}

fn block_with_margin(grid: &GridSpec, blocked: &mut [bool], cells: &[usize]) {
    // Block the cells and everything within the separation floor of them.
    let reach = SEPARATION_FLOOR.ceil() as i32;
    for &c in cells {
        let p = grid.point(c);
        let coords = p.coords().to_vec();
        let d = coords.len();
        let mut off = vec![-reach; d];
        loop {
            let sq: i64 = off.iter().map(|&o| (o * o) as i64).sum();
            if (sq as f64).sqrt() < SEPARATION_FLOOR + 1e-9 {
                let q: Vec<i32> = coords.iter().zip(&off).map(|(&a, &b)| a + b).collect();
                let qp = Point::new(&q);
                if grid.contains(&qp) {
                    blocked[grid.index(&qp)] = true;
                }
            }
            // Odometer over the offset cube.
            let mut axis = d;
            while axis > 0 {
                off[axis - 1] += 1;
                if off[axis - 1] <= reach {
                    break;
                }
                off[axis - 1] = -reach;
                axis -= 1;
            }
            if axis == 0 {
                break;
            }
        }
    }
}

fn cells_to_region(grid: &GridSpec, cells: &[usize]) -> Result<Region> {
    Region::new(grid.clone(), cells.iter().map(|&c| grid.point(c)).collect())
}

/// A two-component region: twin rectangles split by a 2-column crack, shaped
/// to keep the whole pair's diameter at or under `max_diam` so one CRS ball
/// centred anywhere in it covers it all.
fn split_pair_2d(
    grid: &GridSpec,
    center: [f64; 2],
    target: usize,
    max_diam: f64,
) -> Result<Vec<(i32, i32)>> {
    let half1 = (target + 1) / 2;
    let half2 = target - half1;
    // Pick the row count that minimises the pair diameter.
    let mut best: Option<(i64, i32)> = None;
    for h in 1..=target as i32 {
        let w1 = (half1 as i32 + h - 1) / h;
        let w2 = ((half2 as i32 + h - 1) / h).max(1);
        let d2 = ((h - 1) * (h - 1)) as i64 + ((w1 + w2 + 1) * (w1 + w2 + 1)) as i64;
        if best.map_or(true, |(bd, _)| d2 < bd) {
            best = Some((d2, h));
        }
    }
    let (d2, h) = best.expect("nonempty search");
    if (d2 as f64).sqrt() > max_diam {
        return Err(Error::Infeasible(format!(
            "two-component region of {target} cells cannot fit in diameter {max_diam:.2}"
        )));
    }
    let w1 = (half1 as i32 + h - 1) / h;
    let w2 = ((half2 as i32 + h - 1) / h).max(1);
    let x0 = (center[0] - (h as f64 - 1.0) / 2.0).round() as i32;
    let y0 = (center[1] - (w1 + 2 + w2) as f64 / 2.0).round() as i32;
    let mut cells = Vec::with_capacity(target);
    // Fill each block row-major and stop at its half quota, which trims the
    // last row deterministically.
    for (count, y_start, w) in [(half1, y0, w1), (half2, y0 + w1 + 2, w2)] {
        let mut placed = 0usize;
        'block: for x in x0..x0 + h {
            for y in y_start..y_start + w {
                if placed == count {
                    break 'block;
                }
                cells.push((x, y));
                placed += 1;
            }
        }
    }
    let dim0 = grid.dims()[0] as i32;
    let dim1 = grid.dims()[1] as i32;
    if cells
        .iter()
        .any(|&(x, y)| x < 1 || y < 1 || x > dim0 || y > dim1)
    {
        return Err(Error::Infeasible("two-component region does not fit the grid".into()));
    }
    Ok(cells)
}

fn euclid(coords: &[i32], center: &[f64]) -> f64 {
    coords
        .iter()
        .zip(center)
        .map(|(&c, &m)| (c as f64 - m) * (c as f64 - m))
        .sum::<f64>()
        .sqrt()
}

/// Setting 2: ellipse (Δ), ring (2Δ), two-component region (3Δ). Every shape
/// is kept within one CRS ball diameter at the true region count, so the
/// carve can recover each region from a single ball.
fn layout_shapes(setting: &SimSetting) -> Result<(Vec<Region>, Vec<f64>)> {
    let grid = &setting.grid;
    require_2d(grid)?;
    let dim = grid.dims()[0] as f64;
    let area = setting.total_area;
    // The weakest region (the two-component one, at Delta) is also the
    // smallest, so its noisy rank tail costs the least localisation error.
    let t1 = (area as f64 * 0.40).round() as usize;
    let t2 = (area as f64 * 0.35).round() as usize;
    let t3 = area - t1 - t2;
    if t1 < 2 || t3 < 2 {
        return Err(Error::Infeasible("area too small for three shapes".into()));
    }
    let ball_radius = crate::crs::radius_sq(grid.n(), 2, 3).sqrt();
    let mut blocked = vec![false; grid.n()];

    // Ellipse in the lower-right corner; the aspect adapts so the long axis
    // stays within one ball reach.
    let ec = [0.80 * dim, 0.80 * dim];
    let a_max = ball_radius / 2.0;
    let mut aspect = (t1 as f64 / (std::f64::consts::PI * a_max * a_max)).clamp(0.6, 0.9);
    let a_len = (t1 as f64 / (std::f64::consts::PI * aspect)).sqrt().min(a_max);
    aspect = aspect.max(0.6);
    let ellipse = take_by_score(grid, t1, &blocked, |c| {
        let dx = (c[0] as f64 - ec[0]) / a_len.max(1.0);
        let dy = (c[1] as f64 - ec[1]) / (a_len * aspect).max(1.0);
        dx * dx + dy * dy
    })?;
    block_with_margin(grid, &mut blocked, &ellipse);

    // Ring in the lower-left corner: nearest to a target radius, which
    // leaves the centre as a hole.
    let rc = [0.80 * dim, 0.20 * dim];
    let ring_radius = (t2 as f64 / (4.0 * std::f64::consts::PI))
        .max(2.0)
        .min((ball_radius / 2.0 - 1.8).max(2.0));
    let ring = take_by_score(grid, t2, &blocked, |c| (euclid(c, &rc) - ring_radius).abs())?;
    block_with_margin(grid, &mut blocked, &ring);

    // Two-component region along the top edge, where its carve ball clips
    // the grid boundary and sweeps up fewer stray baseline candidates.
    let pair = split_pair_2d(grid, [0.13 * dim, 0.50 * dim], t3, ball_radius)?;
    let pair_region = Region::new(
        grid.clone(),
        pair.iter().map(|&(x, y)| Point::new(&[x, y])).collect(),
    )?;

    Ok((
        vec![
            cells_to_region(grid, &ellipse)?,
            cells_to_region(grid, &ring)?,
            pair_region,
        ],
        vec![3.0, 2.0, 1.0],
    ))
}

/// Setting 3: a concave U (Δ) and a two-component region (Δ).
fn layout_concave(setting: &SimSetting) -> Result<(Vec<Region>, Vec<f64>)> {
    let grid = &setting.grid;
    require_2d(grid)?;
    let dim = grid.dims()[0] as i32;
    let area = setting.total_area;
    let tu = (area as f64 * 0.60).round() as usize;
    let tp = area - tu;
    if tp < 2 || tu < 8 {
        return Err(Error::Infeasible("area too small for the concave layout".into()));
    }

    // U-shape: W x H block minus an open notch; search the small parameter
    // space for the closest area at or above the target whose diagonal fits
    // one CRS ball at m = 2, then trim arm tips.
    let ball_diam = crate::crs::radius_sq(grid.n(), 2, 2).sqrt();
    let cap = ((dim as f64) * 0.45).floor() as i32;
    let mut best: Option<(usize, i32, i32, i32)> = None; // (excess, t, h, w)
    for t in 2..=6i32 {
        for h in (t + 1)..=cap {
            for w in (2 * t + 1)..=cap {
                let diag = ((((h - 1) * (h - 1)) + ((w - 1) * (w - 1))) as f64).sqrt();
                if diag > ball_diam {
                    continue;
                }
                let u_area = (w * h - (w - 2 * t) * (h - t)) as usize;
                if u_area < tu {
                    continue;
                }
                let excess = u_area - tu;
                let cand = (excess, t, h, w);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
    }
    let (excess, t, h, w) = best.ok_or_else(|| Error::Infeasible("no U-shape fits the area".into()))?;
    if excess > (2 * t) as usize {
        return Err(Error::Infeasible("cannot trim the U-shape to the target area".into()));
    }
    // Corner-to-corner placement: with equal means, only ball reach keeps
    // the regions from being carved together, so they sit as far apart as
    // the grid allows.
    let x0 = (0.08 * dim as f64).round().max(2.0) as i32;
    let y0 = x0;
    if x0 < 1 || y0 < 1 || x0 + h > dim || y0 + w > dim {
        return Err(Error::Infeasible("U-shape does not fit the grid".into()));
    }
    // Open side faces low x; arm tips are the smallest-x cells.
    let mut u_cells = Vec::new();
    for x in x0..x0 + h {
        for y in y0..y0 + w {
            let in_notch = x < x0 + h - t && y >= y0 + t && y < y0 + w - t;
            if !in_notch {
                u_cells.push((x, y));
            }
        }
    }
    // Deterministic trim from the open end, left arm first.
    u_cells.sort_by_key(|&(x, y)| (x, y));
    u_cells.drain(..excess);
    let u_region = Region::new(
        grid.clone(),
        u_cells.iter().map(|&(x, y)| Point::new(&[x, y])).collect(),
    )?;

    let pair = split_pair_2d(grid, [0.82 * dim as f64, 0.78 * dim as f64], tp, ball_diam)?;
    let pair_region = Region::new(
        grid.clone(),
        pair.iter().map(|&(x, y)| Point::new(&[x, y])).collect(),
    )?;

    Ok((vec![u_region, pair_region], vec![1.0, 1.0]))
}

/// 3D setting: a spherical shell with a hollow core and a two-component
/// region, both at Δ.
fn layout_3d(setting: &SimSetting) -> Result<(Vec<Region>, Vec<f64>)> {
    let grid = &setting.grid;
    if grid.d() != 3 {
        return Err(Error::Infeasible("the 3D setting needs a 3-axis grid".into()));
    }
    let dim = grid.dims()[0] as f64;
    let area = setting.total_area;
    let ts = (area as f64 * 0.58).round() as usize;
    let tp = area - ts;
    if tp < 4 {
        return Err(Error::Infeasible("area too small for the 3D layout".into()));
    }
    let ball_diam = crate::crs::radius_sq(grid.n(), 3, 2).sqrt();
    let mut blocked = vec![false; grid.n()];

    // Shell: nearest to the radius that a thin sphere of the target area has.
    let sc = [0.26 * dim, 0.26 * dim, 0.26 * dim];
    let shell_radius = (ts as f64 / (4.0 * std::f64::consts::PI))
        .sqrt()
        .max(1.6)
        .min((ball_diam / 2.0 - 1.2).max(1.6));
    let shell = take_by_score(grid, ts, &blocked, |c| (euclid(c, &sc) - shell_radius).abs())?;
    block_with_margin(grid, &mut blocked, &shell);

    // Twin bricks split by a 2-layer crack along the second axis; brick
    // dimensions chosen to minimise the pair diameter.
    let half1 = (tp + 1) / 2;
    let half2 = tp - half1;
    let mut best: Option<(i32, i32, i32)> = None;
    for a_try in 1..=8i32 {
        for b_try in 1..=8i32 {
            let c_try = (half1 as i32 + a_try * b_try - 1) / (a_try * b_try);
            let d2 = (a_try - 1) * (a_try - 1)
                + (2 * b_try + 1) * (2 * b_try + 1)
                + (c_try - 1) * (c_try - 1);
            if best.map_or(true, |(bd, _, _)| d2 < bd) {
                best = Some((d2, a_try, b_try));
            }
        }
    }
    let (diam2, a, b) = best.expect("nonempty search");
    let c_len = |half: usize| (half as i32 + a * b - 1) / (a * b);
    let (c1, c2) = (c_len(half1), c_len(half2));
    if (diam2 as f64).sqrt() > ball_diam {
        return Err(Error::Infeasible("3D pair cannot fit one CRS ball".into()));
    }
    let pc = [0.80 * dim, 0.80 * dim, 0.80 * dim];
    let x0 = (pc[0] - (a as f64 - 1.0) / 2.0).round() as i32;
    let y0 = (pc[1] - (2 * b + 2) as f64 / 2.0).round() as i32;
    let z0 = (pc[2] - (c1.max(c2) as f64 - 1.0) / 2.0).round() as i32;
    let mut pair_cells: Vec<Point> = Vec::with_capacity(tp);
    for (count, y_start, c_here) in [(half1, y0, c1), (half2, y0 + b + 2, c2)] {
        let mut placed = 0usize;
        'brick: for x in x0..x0 + a {
            for y in y_start..y_start + b {
                for z in z0..z0 + c_here {
                    if placed == count {
                        break 'brick;
                    }
                    pair_cells.push(Point::new(&[x, y, z]));
                    placed += 1;
                }
            }
        }
    }
    let pair_region = Region::new(grid.clone(), pair_cells)?;

    Ok((
        vec![cells_to_region(grid, &shell)?, pair_region],
        vec![1.0, 1.0],
    ))
}

fn require_2d(grid: &GridSpec) -> Result<()> {
    if grid.d() != 2 || grid.dims()[0] != grid.dims()[1] {
        return Err(Error::Infeasible("2D settings need a square grid".into()));
    }
    Ok(())
}

/// Bernoulli boundary flips. Every boundary candidate draws from the stream
/// in canonical order (so the pattern is reproducible); a drawn flip is
/// applied only if it keeps the region nonempty, smooth enough, and clear of
/// the other regions.
fn jitter_boundaries(
    grid: &GridSpec,
    regions: &mut [Region],
    prob: f64,
    smooth_cap: usize,
    diam_budget: Option<f64>,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..regions.len() {
        let member: Vec<bool> = {
            let mut m = vec![false; grid.n()];
            for idx in regions[j].cell_indices() {
                m[idx] = true;
            }
            m
        };
        // Removal candidates: member cells with a non-member face neighbour.
        // Addition candidates: non-member cells with a member face neighbour.
        let mut removals = Vec::new();
        let mut additions = Vec::new();
        for cell in 0..grid.n() {
            let on_boundary = face_neighbours(grid, cell)
                .into_iter()
                .any(|nb| member[nb] != member[cell]);
            if !on_boundary {
                continue;
            }
            if member[cell] {
                removals.push(cell);
            } else {
                additions.push(cell);
            }
        }
        let mut cells: std::collections::BTreeSet<usize> =
            regions[j].cell_indices().into_iter().collect();
        // Process removals and additions interleaved in a seeded shuffle,
        // holding the running area within a +-2 band of the layout so jitter
        // roughens the boundary without shrinking or inflating the region.
        let mut flips: Vec<(usize, bool)> = removals
            .into_iter()
            .map(|c| (c, false))
            .chain(additions.into_iter().map(|c| (c, true)))
            .collect();
        use rand::seq::SliceRandom;
        flips.shuffle(&mut rng);
        let mut net = 0i64;
        for (cell, adding) in flips {
            if adding && net >= 2 {
                continue;
            }
            if !adding && net <= -2 {
                continue;
            }
            if !(rng.random::<f64>() < prob) {
                continue;
            }
            let mut trial = cells.clone();
            if adding {
                trial.insert(cell);
            } else {
                trial.remove(&cell);
            }
            if trial.is_empty() {
                continue;
            }
            let trial_region = Region::new(
                grid.clone(),
                trial.iter().map(|&c| grid.point(c)).collect(),
            )
            .expect("jitter stays in-bounds");
            if max_smoothness_index(&trial_region) > smooth_cap {
                continue;
            }
            if adding {
                if let Some(budget) = diam_budget {
                    if intrinsic_diameter(&trial_region).expect("nonempty") > budget {
                        continue;
                    }
                }
                // Keep other regions out of this one's carve ball, not just
                // past the bare separation floor.
                let min_gap = diam_budget.unwrap_or(SEPARATION_FLOOR).max(SEPARATION_FLOOR);
                let single =
                    Region::new(grid.clone(), vec![grid.point(cell)]).expect("in-bounds");
                let clear = regions
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .all(|(_, other)| {
                        region_distance(&single, other).map_or(true, |d| d > min_gap)
                    });
                if !clear {
                    continue;
                }
            }
            cells = trial;
            net += if adding { 1 } else { -1 };
        }
        regions[j] = Region::new(grid.clone(), cells.iter().map(|&c| grid.point(c)).collect())
            .expect("jitter stays in-bounds");
    }
}

fn face_neighbours(grid: &GridSpec, cell: usize) -> Vec<usize> {
    let p = grid.point(cell);
    let mut out = Vec::with_capacity(2 * grid.d());
    for axis in 0..grid.d() {
        for step in [-1, 1] {
            let mut coords = p.coords().to_vec();
            coords[axis] += step;
            let q = Point::new(&coords);
            if grid.contains(&q) {
                out.push(grid.index(&q));
            }
        }
    }
    out
}

/// Observed field `Y = mu + sigma * eps` with i.i.d. standard normal errors
/// drawn in canonical cell order from a ChaCha stream.
pub fn sample_field(truth: &GroundTruth, sigma: f64, seed: u64) -> Result<Field> {
    if sigma < 0.0 {
        return Err(Error::InvalidParameter("sigma must be nonnegative".into()));
    }
    let grid = truth.partition.grid().clone();
    let mut values = truth.mean_surface();
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in values.iter_mut() {
            let eps: f64 = StandardNormal.sample(&mut rng);
            *v += sigma * eps;
        }
    }
    Field::new(grid, values)
}

/// Dense lower-Cholesky sampler for spatially correlated errors with
/// covariance `sigma^2 * exp(-zeta * dist(s, s'))`. Factorising once serves
/// any number of replicates.
pub struct DependentSampler {
    grid: GridSpec,
    sigma: f64,
    chol: Vec<f64>,
}

impl DependentSampler {
    pub fn new(grid: &GridSpec, sigma: f64, zeta: f64) -> Result<Self> {
        if !(zeta > 0.0) {
            return Err(Error::InvalidParameter("zeta must be positive".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidParameter("sigma must be nonnegative".into()));
        }
        let n = grid.n();
        if n > MAX_DEPENDENT_CELLS {
            return Err(Error::TooLarge(format!(
                "dependent sampling is dense-factorised; {n} cells exceeds {MAX_DEPENDENT_CELLS}"
            )));
        }
        let points: Vec<Point> = grid.points().collect();
        let mut cov = vec![0.0f64; n * n];
        for i in 0..n {
            cov[i * n + i] = 1.0;
            for j in 0..i {
                let c = (-zeta * points[i].dist(&points[j])).exp();
                cov[i * n + j] = c;
                cov[j * n + i] = c;
            }
        }
        let chol = match cholesky_lower(&cov, n) {
            Some(l) => l,
            None => {
                for i in 0..n {
                    cov[i * n + i] += 1e-10;
                }
                cholesky_lower(&cov, n).ok_or(Error::FactorisationFailed)?
            }
        };
        Ok(Self { grid: grid.clone(), sigma, chol })
    }

    /// One correlated error vector in canonical cell order.
    pub fn sample_errors(&self, seed: u64) -> Vec<f64> {
        let n = self.grid.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut eps = vec![0.0f64; n];
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i + 1];
            let mut acc = 0.0;
            for (l, zj) in row.iter().zip(&z) {
                acc += l * zj;
            }
            eps[i] = self.sigma * acc;
        }
        eps
    }

    pub fn sample_field(&self, truth: &GroundTruth, seed: u64) -> Result<Field> {
        if truth.partition.grid() != &self.grid {
            return Err(Error::MismatchedGrids(
                truth.partition.grid().dims().to_vec(),
                self.grid.dims().to_vec(),
            ));
        }
        let mut values = truth.mean_surface();
        for (v, e) in values.iter_mut().zip(self.sample_errors(seed)) {
            *v += e;
        }
        Field::new(self.grid.clone(), values)
    }
}

/// One-shot dependent sample; for repeated replicates build a
/// [`DependentSampler`] once instead.
pub fn sample_dependent_field(truth: &GroundTruth, sigma: f64, zeta: f64, seed: u64) -> Result<Field> {
    DependentSampler::new(truth.partition.grid(), sigma, zeta)?.sample_field(truth, seed)
}

/// Plain lower-triangular Cholesky; `None` when the matrix is not positive
/// definite.
fn cholesky_lower(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if diag <= 0.0 {
            return None;
        }
        let root = diag.sqrt();
        l[j * n + j] = root;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            for (x, y) in ri.iter().zip(rj) {
                s -= x * y;
            }
            l[i * n + j] = s / root;
        }
    }
    Some(l)
}

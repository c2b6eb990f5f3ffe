//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture` to
//! see them). Thresholds are pinned here, not tuned elsewhere.

use std::time::Instant;

use dpls_sad::cost::CostParams;
use dpls_sad::detector::{detect, DetectorConfig};
use dpls_sad::evaluate::{err_metric, run_monte_carlo, McConfig, McReport, PenaltyRule};
use dpls_sad::hull::{convex_hull, hull_cardinality};
use dpls_sad::lattice::{symmetric_difference, GridSpec, Point, Region};
use dpls_sad::oracle::exact_minimise;
use dpls_sad::simulate::{SettingId, SimSetting};
use dpls_sad::{io, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct BenchSpec {
    setting: SettingId,
    n: usize,
    delta: f64,
    area: usize,
    b: usize,
    penalty_scale: f64,
    zeta: Option<f64>,
    sigma: f64,
    m_max: usize,
    n_stride: usize,
    seed: u64,
}

impl BenchSpec {
    fn new(setting: SettingId, n: usize, delta: f64, area: usize, b: usize) -> Self {
        Self {
            setting,
            n,
            delta,
            area,
            b,
            penalty_scale: if setting == SettingId::Three { 0.65 } else { 1.0 },
            zeta: None,
            sigma: 1.0,
            m_max: 20,
            n_stride: 1,
            seed: 1000,
        }
    }

    fn run(&self) -> McReport {
        let mut setting =
            SimSetting::standard(self.setting, self.n, self.delta, self.area, self.seed).unwrap();
        setting.zeta = self.zeta;
        let sigma2 = if self.sigma > 0.0 { self.sigma * self.sigma } else { 1.0 };
        let mut det = DetectorConfig::new(0.0, 0.0).with_known_baseline(0.0, sigma2);
        det.m_max = self.m_max;
        det.n_stride = self.n_stride;
        let config = McConfig {
            detector: det,
            penalty: PenaltyRule::DeltaTimesDelta { scale: self.penalty_scale },
            sigma: self.sigma,
        };
        run_monte_carlo(&setting, &config, self.b).unwrap()
    }
}

fn verdict(num: u8, pass: bool, detail: &str) {
    let line = format!(
        "criterion {num}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(pass, "{line}");
}

/// Criterion 1: Setting 1 at n=400, Delta=3, |R|=125, B=50 with
/// beta = Delta*delta and lambda = beta/n reaches NoC >= 0.85 and mean
/// Err <= 0.20 within a 10 minute budget.
#[test]
fn criterion_1_table_trend_setting_one() {
    let started = Instant::now();
    let report = BenchSpec::new(SettingId::One, 400, 3.0, 125, 50).run();
    let wall = started.elapsed().as_secs_f64();
    let pass = report.noc >= 0.85 && report.err <= 0.20 && wall <= 600.0;
    verdict(
        1,
        pass,
        &format!(
            "Setting 1 n=400 D=3 |R|=125 B=50: NoC={:.3} (>=0.85), Err={:.3} (<=0.20), wall={wall:.0}s (<=600)",
            report.noc, report.err
        ),
    );
}

/// Criterion 2: NoC non-decreasing and Err non-increasing in Delta in
/// {1,2,3} for every setting at n=400 (B=50), within a 0.05 MC tolerance.
#[test]
fn criterion_2_snr_monotonicity() {
    let mut pass = true;
    let mut detail = String::new();
    for (setting, area) in [
        (SettingId::One, 125),
        (SettingId::Two, 60),
        (SettingId::Three, 42),
    ] {
        let reports: Vec<McReport> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&delta| BenchSpec::new(setting, 400, delta, area, 50).run())
            .collect();
        let nocs: Vec<f64> = reports.iter().map(|r| r.noc).collect();
        let errs: Vec<f64> = reports.iter().map(|r| r.err).collect();
        let ok = nocs.windows(2).all(|w| w[1] >= w[0] - 0.05)
            && errs.windows(2).all(|w| w[1] <= w[0] + 0.05);
        pass &= ok;
        detail.push_str(&format!(
            "[{setting:?}: NoC {:.2}/{:.2}/{:.2}, Err {:.2}/{:.2}/{:.2}] ",
            nocs[0], nocs[1], nocs[2], errs[0], errs[1], errs[2]
        ));
    }
    verdict(2, pass, &detail);
}

/// Criterion 3: 3D detection on a 12^3 grid, two anomalies, |R|=59, Delta=3,
/// B=30 reaches NoC >= 0.75.
#[test]
fn criterion_3_three_d_detection() {
    let mut spec = BenchSpec::new(SettingId::ThreeD, 1728, 3.0, 59, 30);
    spec.m_max = 8;
    spec.n_stride = 4;
    let report = spec.run();
    verdict(
        3,
        report.noc >= 0.75,
        &format!("3D 12^3 |R|=59 D=3 B=30: NoC={:.3} (>=0.75), Err={:.3}", report.noc, report.err),
    );
}

/// Criterion 4: weaker dependence detects no worse. Setting 2 style field at
/// n=2500, Delta=3, B=20: Err(zeta=3) <= Err(zeta=0.01) + 0.05.
#[test]
fn criterion_4_dependence_ordering() {
    let mut strong = BenchSpec::new(SettingId::Two, 2500, 3.0, 228, 20);
    strong.zeta = Some(0.01);
    strong.m_max = 10;
    strong.n_stride = 2;
    let mut weak = BenchSpec::new(SettingId::Two, 2500, 3.0, 228, 20);
    weak.zeta = Some(3.0);
    weak.m_max = 10;
    weak.n_stride = 2;
    let err_strong = strong.run().err;
    let err_weak = weak.run().err;
    verdict(
        4,
        err_weak <= err_strong + 0.05,
        &format!("Err(zeta=3)={err_weak:.3} vs Err(zeta=0.01)={err_strong:.3} + 0.05"),
    );
}

/// Criterion 5: hull cardinality equals bounding-box half-space enumeration
/// on 1000 random 15x15 regions (exact), and an independent membership
/// oracle on 200 random 8^3 regions.
#[test]
fn criterion_5_hull_oracle() {
    let grid = GridSpec::square(15);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let n_pts = rng.random_range(1..=25);
        let pts = (0..n_pts)
            .map(|_| Point::new(&[rng.random_range(1..=15), rng.random_range(1..=15)]))
            .collect();
        let region = Region::new(grid.clone(), pts).unwrap();
        if hull_cardinality(&region).unwrap() != bbox_halfspace_count_2d(&region) {
            mismatches += 1;
        }
    }
    let cube = GridSpec::cube(8);
    let mut mismatches_3d = 0usize;
    for _ in 0..200 {
        let n_pts = rng.random_range(1..=12);
        let pts = (0..n_pts)
            .map(|_| {
                Point::new(&[
                    rng.random_range(1..=8),
                    rng.random_range(1..=8),
                    rng.random_range(1..=8),
                ])
            })
            .collect();
        let region = Region::new(cube.clone(), pts).unwrap();
        if hull_cardinality(&region).unwrap() != caratheodory_count_3d(&region) {
            mismatches_3d += 1;
        }
    }
    verdict(
        5,
        mismatches == 0 && mismatches_3d == 0,
        &format!("2D mismatches {mismatches}/1000, 3D mismatches {mismatches_3d}/200"),
    );
}

/// Criterion 6: on 500 random 3x3 fields (half with a planted 2x2 block at
/// 10 sigma) the detector never reports a cost below the exhaustive optimum,
/// and on the planted (high-SNR) half it returns the optimal partition at
/// least 95% of the time.
#[test]
fn criterion_6_exact_minimiser_bound() {
    let grid = GridSpec::square(3);
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut bound_violations = 0usize;
    let mut planted_total = 0usize;
    let mut planted_matches = 0usize;
    for trial in 0..500 {
        let planted = trial % 2 == 1;
        let mut values: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (beta, lambda) = if planted {
            for p in [[1, 1], [1, 2], [2, 1], [2, 2]] {
                values[grid.index(&Point::new(&p))] += 10.0;
            }
            (40.0, 40.0 / 9.0)
        } else {
            (rng.random_range(0.1..6.0), rng.random_range(0.0..0.8))
        };
        let field = Field::new(grid.clone(), values).unwrap();
        let params = CostParams::new(beta, lambda, 1.0, 0.0).unwrap();
        let optimum = exact_minimise(&field, &params, 2, None).unwrap();
        let mut cfg = DetectorConfig::new(beta, lambda).with_known_baseline(0.0, 1.0);
        cfg.m_max = 2;
        let approx = detect(&field, &cfg).unwrap();
        if approx.best_cost.total < optimum.best_cost {
            bound_violations += 1;
        }
        if planted {
            planted_total += 1;
            let same = approx.m_hat == optimum.best_partition.m()
                && approx
                    .regions
                    .iter()
                    .zip(&optimum.best_partition.anomalies)
                    .all(|(a, b)| symmetric_difference(a, b).unwrap() == 0);
            if same {
                planted_matches += 1;
            }
        }
    }
    let match_rate = planted_matches as f64 / planted_total as f64;
    verdict(
        6,
        bound_violations == 0 && match_rate >= 0.95,
        &format!(
            "bound violations {bound_violations}/500, high-SNR partition matches {planted_matches}/{planted_total} ({match_rate:.3})"
        ),
    );
}

/// Criterion 7: metric properties over 10 000 random cases: Err identity and
/// empty-estimate conventions, permutation invariance, and the symmetric
/// difference metric axioms.
#[test]
fn criterion_7_metric_properties() {
    let grid = GridSpec::square(8);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut random_region = |rng: &mut ChaCha8Rng| {
        let n_pts = rng.random_range(1..=6);
        let pts = (0..n_pts)
            .map(|_| Point::new(&[rng.random_range(1..=8), rng.random_range(1..=8)]))
            .collect();
        Region::new(grid.clone(), pts).unwrap()
    };
    let mut failures = 0usize;
    for _ in 0..10_000 {
        let truth: Vec<Region> = (0..rng.random_range(1..=3)).map(|_| random_region(&mut rng)).collect();
        let est: Vec<Region> = (0..rng.random_range(0..=3)).map(|_| random_region(&mut rng)).collect();

        let ok_identity = err_metric(&truth, &truth).unwrap() == 0.0;
        let ok_empty = err_metric(&truth, &[]).unwrap() == 1.0;
        let base = err_metric(&truth, &est).unwrap();
        let mut t2 = truth.clone();
        t2.reverse();
        let mut e2 = est.clone();
        e2.reverse();
        let ok_perm = err_metric(&t2, &e2).unwrap() == base && base >= 0.0;

        // D axioms on one random triple per case.
        let (a, b, c) = (random_region(&mut rng), random_region(&mut rng), random_region(&mut rng));
        let dab = symmetric_difference(&a, &b).unwrap();
        let ok_d = dab == symmetric_difference(&b, &a).unwrap()
            && symmetric_difference(&a, &a).unwrap() == 0
            && (dab == 0) == (a == b)
            && dab <= symmetric_difference(&a, &c).unwrap() + symmetric_difference(&c, &b).unwrap();

        if !(ok_identity && ok_empty && ok_perm && ok_d) {
            failures += 1;
        }
    }
    verdict(7, failures == 0, &format!("{failures} failures in 10000 random cases"));
}

/// Criterion 8: byte-identical reports under different worker counts.
#[test]
fn criterion_8_determinism_across_workers() {
    let run = || {
        let spec = BenchSpec::new(SettingId::Two, 400, 3.0, 60, 10);
        io::to_json_pretty(&spec.run()).unwrap()
    };
    #[cfg(feature = "parallel")]
    let (report_a, report_b) = {
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        (pool1.install(run), pool4.install(run))
    };
    #[cfg(not(feature = "parallel"))]
    let (report_a, report_b) = (run(), run());
    verdict(
        8,
        report_a == report_b,
        &format!("reports of {} bytes compared byte for byte", report_a.len()),
    );
}

/// Criterion 9: with sigma = 0 every setting recovers its truth exactly.
#[test]
fn criterion_9_noiseless_sanity() {
    let mut pass = true;
    let mut detail = String::new();
    for (setting, n, area, m_max) in [
        (SettingId::One, 400, 80, 20),
        (SettingId::Two, 400, 60, 20),
        (SettingId::Three, 400, 42, 20),
        (SettingId::ThreeD, 1728, 59, 8),
    ] {
        let mut spec = BenchSpec::new(setting, n, 3.0, area, 5);
        spec.sigma = 0.0;
        spec.m_max = m_max;
        spec.seed = 4100;
        let report = spec.run();
        let ok = report.noc == 1.0 && report.err == 0.0;
        pass &= ok;
        detail.push_str(&format!("[{setting:?}: NoC={} Err={}] ", report.noc, report.err));
    }
    verdict(9, pass, &detail);
}

// ---- oracles shared by criterion 5 ----

fn bbox_halfspace_count_2d(region: &Region) -> usize {
    let hull = convex_hull(region).unwrap();
    let verts: Vec<(i64, i64)> = hull
        .vertices
        .iter()
        .map(|p| (p.coords()[0] as i64, p.coords()[1] as i64))
        .collect();
    let pts: Vec<(i64, i64)> = region
        .points()
        .iter()
        .map(|p| (p.coords()[0] as i64, p.coords()[1] as i64))
        .collect();
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let on_segment = |a: (i64, i64), b: (i64, i64), p: (i64, i64)| {
        cross(a, b, p) == 0
            && p.0 >= a.0.min(b.0)
            && p.0 <= a.0.max(b.0)
            && p.1 >= a.1.min(b.1)
            && p.1 <= a.1.max(b.1)
    };
    let (xmin, xmax) = (pts.iter().map(|p| p.0).min().unwrap(), pts.iter().map(|p| p.0).max().unwrap());
    let (ymin, ymax) = (pts.iter().map(|p| p.1).min().unwrap(), pts.iter().map(|p| p.1).max().unwrap());
    let mut count = 0;
    for x in xmin..=xmax {
        for y in ymin..=ymax {
            let inside = match verts.len() {
                1 => (x, y) == verts[0],
                2 => on_segment(verts[0], verts[1], (x, y)),
                _ => verts.iter().enumerate().all(|(i, &a)| {
                    let b = verts[(i + 1) % verts.len()];
                    cross(a, b, (x, y)) >= 0
                }),
            };
            if inside {
                count += 1;
            }
        }
    }
    count
}

fn caratheodory_count_3d(region: &Region) -> usize {
    let s: Vec<[i64; 3]> = region
        .points()
        .iter()
        .map(|p| [p.coords()[0] as i64, p.coords()[1] as i64, p.coords()[2] as i64])
        .collect();
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for q in &s {
        for a in 0..3 {
            lo[a] = lo[a].min(q[a]);
            hi[a] = hi[a].max(q[a]);
        }
    }
    let mut count = 0usize;
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                if in_hull_3d(&s, [x, y, z]) {
                    count += 1;
                }
            }
        }
    }
    count
}

fn cross3(u: [i64; 3], v: [i64; 3]) -> [i64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn sub3(u: [i64; 3], v: [i64; 3]) -> [i64; 3] {
    [u[0] - v[0], u[1] - v[1], u[2] - v[2]]
}

fn dot3(u: [i64; 3], v: [i64; 3]) -> i64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn orient3(a: [i64; 3], b: [i64; 3], c: [i64; 3], d: [i64; 3]) -> i64 {
    dot3(cross3(sub3(b, a), sub3(c, a)), sub3(d, a))
}

fn in_hull_3d(s: &[[i64; 3]], p: [i64; 3]) -> bool {
    if s.contains(&p) {
        return true;
    }
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let (a, b) = (s[i], s[j]);
            if cross3(sub3(b, a), sub3(p, a)) == [0, 0, 0]
                && (0..3).all(|k| p[k] >= a[k].min(b[k]) && p[k] <= a[k].max(b[k]))
            {
                return true;
            }
        }
    }
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            for k in j + 1..s.len() {
                let (a, b, c) = (s[i], s[j], s[k]);
                let n = cross3(sub3(b, a), sub3(c, a));
                if n == [0, 0, 0] || orient3(a, b, c, p) != 0 {
                    continue;
                }
                let s1 = dot3(cross3(sub3(b, a), sub3(p, a)), n);
                let s2 = dot3(cross3(sub3(c, b), sub3(p, b)), n);
                let s3 = dot3(cross3(sub3(a, c), sub3(p, c)), n);
                if (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0) {
                    return true;
                }
            }
        }
    }
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            for k in j + 1..s.len() {
                for l in k + 1..s.len() {
                    let t = [s[i], s[j], s[k], s[l]];
                    if orient3(t[0], t[1], t[2], t[3]) == 0 {
                        continue;
                    }
                    let faces = [
                        (t[0], t[1], t[2], t[3]),
                        (t[0], t[3], t[1], t[2]),
                        (t[1], t[3], t[2], t[0]),
                        (t[2], t[3], t[0], t[1]),
                    ];
                    if faces.iter().all(|&(a, b, c, opp)| {
                        let side_p = orient3(a, b, c, p);
                        let side_o = orient3(a, b, c, opp);
                        side_p == 0 || side_p.signum() == side_o.signum()
                    }) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

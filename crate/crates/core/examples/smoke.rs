use dpls_sad::detector::{DetectorConfig, XiRule};
use dpls_sad::evaluate::{run_monte_carlo, McConfig, PenaltyRule};
use dpls_sad::simulate::{SettingId, SimSetting};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let setting: SettingId = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(SettingId::One);
    let n: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(400);
    let delta: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(3.0);
    let area: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(125);
    let b: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(20);
    let scale: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let zeta: Option<f64> = args.get(7).map(|s| s.parse().unwrap());

    let mut s = SimSetting::standard(setting, n, delta, area, 1000).unwrap();
    s.zeta = zeta;
    let mut det = DetectorConfig::new(0.0, 0.0).with_known_baseline(0.0, 1.0);
    det.m_max = std::env::var("M_MAX").ok().and_then(|v| v.parse().ok()).unwrap_or(20);
    det.n_stride = std::env::var("STRIDE").ok().and_then(|v| v.parse().ok()).unwrap_or(1);
    det.xi_rule = XiRule::ScaledLog { scale: 20.0 };
    let cfg = McConfig { detector: det, penalty: PenaltyRule::DeltaTimesDelta { scale }, sigma: 1.0 };
    let t = Instant::now();
    let report = run_monte_carlo(&s, &cfg, b).unwrap();
    println!(
        "setting {:?} n={} delta={} area={} B={}: NoC={:.2} Err={:.3}  wall={:.1}s detect-time={:.2}s",
        setting, n, delta, area, b, report.noc, report.err, t.elapsed().as_secs_f64(), report.total_runtime_secs()
    );
    let mut mh: Vec<usize> = report.per_replicate.iter().map(|r| r.m_hat).collect();
    mh.sort_unstable();
    println!("m_hat distribution: {:?}", mh);
}

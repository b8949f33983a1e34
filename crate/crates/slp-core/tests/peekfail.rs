use std::time::Instant;
use slp_core::{run_experiment, Scheme, SimConfig};

#[test]
fn stress_block_designs_many_seeds() {
    let cfg = SimConfig {
        n_antennas: 16,
        n_users: 16,
        block_len: 50,
        qam_level: 2,
        noise_var: 1.0,
        eps_grid: vec![0.05, 0.01],
        n_channels: 6,
        schemes: vec![
            Scheme::SlpHeuristic { zeta: 1.0 },
            Scheme::SlpHeuristic { zeta: 1.2 },
            Scheme::SlpBlockAvg,
            Scheme::SlpBlockPeak,
        ],
        seed: 2024,
        sep_trials: 100,
    };
    let t0 = Instant::now();
    let results = run_experiment(&cfg).unwrap();
    println!("12 cells x 4 schemes: {:?}", t0.elapsed());
    let get = |r: usize, eps: f64, scheme: &str| -> &slp_core::TrialResult {
        results
            .iter()
            .find(|t| t.realization == r && t.eps == eps && t.scheme == scheme)
            .unwrap()
    };
    let mut failures = 0;
    for r in 0..6 {
        for &eps in &[0.05, 0.01] {
            let h1 = get(r, eps, "slp_heuristic(zeta=1)");
            let h12 = get(r, eps, "slp_heuristic(zeta=1.2)");
            let avg = get(r, eps, "slp_block_avg");
            let peak = get(r, eps, "slp_block_peak");
            let ok = !avg.degraded
                && !peak.degraded
                && avg.avg_power <= h1.avg_power * (1.0 + 1e-6)
                && peak.peak_energy <= avg.peak_energy * (1.0 + 1e-5)
                && peak.peak_energy <= h1.peak_energy * (1.0 + 1e-5)
                && peak.peak_energy <= h12.peak_energy * (1.0 + 1e-5)
                && peak.avg_power >= avg.avg_power * (1.0 - 1e-5);
            println!(
                "r={r} eps={eps}: avg[{} {:.3}/{:.3}] peak[{} {:.3}/{:.3}] heur1 {:.3}/{:.3} {}",
                avg.diag.status, avg.avg_power, avg.peak_energy,
                peak.diag.status, peak.avg_power, peak.peak_energy,
                h1.avg_power, h1.peak_energy,
                if ok { "OK" } else { "FAIL" }
            );
            if !ok {
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 0);
}

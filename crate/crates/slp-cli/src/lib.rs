//! Command-line front end for the symbol-level precoding simulator:
//! config parsing, experiment orchestration, and CSV/manifest artifacts.

pub mod config;
pub mod output;

use std::path::Path;
use std::time::Instant;

use slp_core::sep::{gain_constants, per_part_eps, sinr_target_from_sep};
use slp_core::{run_experiment, summarize, QamSpec, Scheme, SimConfig};

use config::CliConfig;
use output::RunManifest;

/// Exit code for configuration/validation failures.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for solver failures beyond the configured budget.
pub const EXIT_SOLVER: i32 = 3;

fn run_on_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(job),
        _ => job(),
    }
}

/// `slp run`: executes the configured experiment and writes results.csv,
/// summary.csv and manifest.json into `out_dir`.
pub fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
    seed_override: Option<u64>,
) -> i32 {
    let mut cfg: CliConfig = match config::load_config(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = seed_override {
        cfg.sim.seed = seed;
    }
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_CONFIG;
    }

    let cells = cfg.sim.n_channels * cfg.sim.eps_grid.len() * cfg.sim.schemes.len();
    println!(
        "running {} realizations x {} eps x {} schemes = {cells} cells (seed {})",
        cfg.sim.n_channels,
        cfg.sim.eps_grid.len(),
        cfg.sim.schemes.len(),
        cfg.sim.seed
    );
    let started = Instant::now();
    let results = match run_on_pool(threads, || run_experiment(&cfg.sim)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: experiment failed: {e}");
            return EXIT_SOLVER;
        }
    };
    let wall = started.elapsed().as_secs_f64();
    let summary = summarize(&results);

    let results_path = out_dir.join("results.csv");
    let summary_path = out_dir.join("summary.csv");
    let manifest_path = out_dir.join("manifest.json");
    if let Err(e) = output::write_results_csv(&results_path, &results) {
        eprintln!("error: writing {}: {e}", results_path.display());
        return EXIT_SOLVER;
    }
    if let Err(e) = output::write_summary_csv(&summary_path, &summary) {
        eprintln!("error: writing {}: {e}", summary_path.display());
        return EXIT_SOLVER;
    }
    let manifest = RunManifest::new(
        &cfg.sim,
        cfg.failure_budget,
        threads,
        wall,
        &results,
        results_path.clone(),
        summary_path.clone(),
    );
    if let Err(e) = manifest.write(&manifest_path) {
        eprintln!("error: writing {}: {e}", manifest_path.display());
        return EXIT_SOLVER;
    }

    let degraded = results.iter().filter(|r| r.degraded).count();
    println!(
        "done in {wall:.1}s: {} rows, {degraded} degraded cells -> {}",
        results.len(),
        out_dir.display()
    );
    if degraded > cfg.failure_budget {
        eprintln!(
            "error: {degraded} degraded cells exceed the failure budget of {}",
            cfg.failure_budget
        );
        return EXIT_SOLVER;
    }
    0
}

/// `slp check`: validates the configuration, prints the resolved bound
/// constants and SINR targets per ε, and runs a tiny smoke trial.
pub fn cmd_check(config_path: &Path) -> i32 {
    let cfg = match config::load_config(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let sim = &cfg.sim;
    println!(
        "config ok: N={} K={} T={} {}-QAM noise_var={} seed={} sep_trials={}",
        sim.n_antennas,
        sim.n_users,
        sim.block_len,
        QamSpec::new(sim.qam_level).map(|s| s.order()).unwrap_or(0),
        sim.noise_var,
        sim.seed,
        sim.sep_trials,
    );
    println!(
        "schemes: {}",
        sim.schemes.iter().map(Scheme::label).collect::<Vec<_>>().join(", ")
    );
    let noise_std = sim.noise_var.sqrt();
    let rho = match QamSpec::new(sim.qam_level) {
        Ok(s) => s.avg_energy(),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    println!("eps          eps_bar       alpha         beta          gamma");
    for &eps in &sim.eps_grid {
        let g = match gain_constants(noise_std, eps) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: eps={eps}: {e}");
                return EXIT_CONFIG;
            }
        };
        let gamma = match sinr_target_from_sep(rho, eps) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: eps={eps}: {e}");
                return EXIT_CONFIG;
            }
        };
        println!(
            "{eps:<12} {:<13.6} {:<13.6} {:<13.6} {gamma:<.6}",
            per_part_eps(eps),
            g.alpha,
            g.beta
        );
    }

    // tiny smoke trial with the configured schemes
    let smoke = SimConfig {
        n_antennas: 2,
        n_users: 2,
        block_len: 2,
        qam_level: sim.qam_level,
        noise_var: sim.noise_var,
        eps_grid: vec![sim.eps_grid[0]],
        n_channels: 1,
        schemes: sim.schemes.clone(),
        seed: sim.seed,
        sep_trials: 1000,
    };
    match run_experiment(&smoke) {
        Ok(results) => {
            let bad: Vec<_> = results.iter().filter(|r| r.degraded).collect();
            if bad.is_empty() {
                println!("smoke trial (K=N=2, T=2): ok");
                0
            } else {
                for r in bad {
                    eprintln!("error: smoke trial degraded: {} ({})", r.scheme, r.diag.status);
                }
                EXIT_CONFIG
            }
        }
        Err(e) => {
            eprintln!("error: smoke trial failed: {e}");
            EXIT_CONFIG
        }
    }
}

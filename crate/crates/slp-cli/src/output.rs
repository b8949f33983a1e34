//! Artifact writers: results.csv, summary.csv, manifest.json.
//!
//! The CSV schema is fixed (column order, 17-significant-digit floats,
//! header always present, LF endings), so two runs with the same seed
//! produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use slp_core::{Scheme, SimConfig, SummaryRow, TrialResult};

/// 17 significant digits, scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_results_csv(path: &Path, results: &[TrialResult]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"realization,eps,scheme,avg_power,peak_energy,max_emp_sep\n")?;
    for r in results {
        let max_sep = r.emp_sep.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.realization,
            format_float(r.eps),
            r.scheme,
            format_float(r.avg_power),
            format_float(r.peak_energy),
            format_float(max_sep),
        )?;
    }
    out.flush()
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"scheme,eps,mean_avg_power,mean_peak_energy,max_emp_sep\n")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.scheme,
            format_float(r.eps),
            format_float(r.mean_avg_power),
            format_float(r.mean_peak_energy),
            format_float(r.max_emp_sep),
        )?;
    }
    out.flush()
}

#[derive(Serialize)]
struct ConfigEcho {
    n_antennas: usize,
    n_users: usize,
    block_len: usize,
    qam_level: u32,
    noise_var: f64,
    eps_grid: Vec<f64>,
    n_channels: usize,
    schemes: Vec<String>,
    seed: u64,
    sep_trials: usize,
    failure_budget: usize,
}

#[derive(Serialize)]
struct CellStat {
    realization: usize,
    eps: f64,
    scheme: String,
    status: String,
    iterations: usize,
    kkt_residual: f64,
    degraded: bool,
}

#[derive(Serialize)]
struct ArtifactPaths {
    results: PathBuf,
    summary: PathBuf,
}

/// Everything needed to reproduce the run bit-identically, plus per-cell
/// solver statistics and the wall clock.
#[derive(Serialize)]
pub struct RunManifest {
    version: String,
    config: ConfigEcho,
    threads: Option<usize>,
    wall_clock_sec: f64,
    degraded_cells: usize,
    artifacts: ArtifactPaths,
    cells: Vec<CellStat>,
}

impl RunManifest {
    pub fn new(
        sim: &SimConfig,
        failure_budget: usize,
        threads: Option<usize>,
        wall_clock_sec: f64,
        results: &[TrialResult],
        results_path: PathBuf,
        summary_path: PathBuf,
    ) -> Self {
        let schemes = sim.schemes.iter().map(Scheme::label).collect();
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: ConfigEcho {
                n_antennas: sim.n_antennas,
                n_users: sim.n_users,
                block_len: sim.block_len,
                qam_level: sim.qam_level,
                noise_var: sim.noise_var,
                eps_grid: sim.eps_grid.clone(),
                n_channels: sim.n_channels,
                schemes,
                seed: sim.seed,
                sep_trials: sim.sep_trials,
                failure_budget,
            },
            threads,
            wall_clock_sec,
            degraded_cells: results.iter().filter(|r| r.degraded).count(),
            artifacts: ArtifactPaths { results: results_path, summary: summary_path },
            cells: results
                .iter()
                .map(|r| CellStat {
                    realization: r.realization,
                    eps: r.eps,
                    scheme: r.scheme.clone(),
                    status: r.diag.status.clone(),
                    iterations: r.diag.iterations,
                    kkt_residual: r.diag.kkt_residual,
                    degraded: r.degraded,
                })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_17_digits() {
        assert_eq!(format_float(0.05), "5.0000000000000003e-2");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(1.2497805), "1.2497805000000000e0");
    }

    #[test]
    fn csv_bytes_are_stable() {
        let r = TrialResult {
            realization: 0,
            eps: 0.05,
            scheme: "zf".into(),
            avg_power: 1.5,
            peak_energy: 2.5,
            emp_sep: vec![0.01, 0.02],
            sep_stderr: vec![0.001, 0.001],
            degraded: false,
            diag: slp_core::sim::SolverDiag {
                status: "closed_form".into(),
                iterations: 0,
                kkt_residual: 0.0,
            },
        };
        let dir = std::env::temp_dir().join("slp-output-test");
        std::fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.csv");
        let p2 = dir.join("b.csv");
        write_results_csv(&p1, std::slice::from_ref(&r)).unwrap();
        write_results_csv(&p2, std::slice::from_ref(&r)).unwrap();
        let a = std::fs::read(&p1).unwrap();
        assert_eq!(a, std::fs::read(&p2).unwrap());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("realization,eps,scheme,avg_power,peak_energy,max_emp_sep\n"));
        assert!(text.contains(",2.0000000000000000e-2\n"));
        assert!(!text.contains('\r'));
    }
}

//! Flat INI-style experiment configuration.
//!
//! Global keys set the experiment parameters; one section per scheme enables
//! it, in file order. Example:
//!
//! ```text
//! n_antennas = 16
//! n_users = 16
//! block_len = 50
//! qam_level = 2
//! noise_var = 1.0
//! eps_grid = 0.10, 0.05, 0.02, 0.01, 0.005
//! n_channels = 100
//! seed = 1
//!
//! [zf]
//! [linear_bf]
//! [slp_heuristic]
//! zeta = 1.0, 1.2
//! [slp_block_avg]
//! [slp_block_peak]
//! ```

use std::fmt;
use std::path::Path;

use slp_core::{Scheme, SimConfig};

/// A config problem with its source location.
#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: field '{}': {}",
            self.line, self.field, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, field: field.into(), message: message.into() }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub sim: SimConfig,
    /// Number of degraded (non-optimal / failed) scheme cells tolerated
    /// before `run` exits with code 3.
    pub failure_budget: usize,
}

struct RawItem {
    line: usize,
    key: String,
    value: String,
}

fn parse_items(text: &str) -> Result<(Vec<RawItem>, Vec<(usize, String, Vec<RawItem>)>), ConfigError> {
    let mut globals = Vec::new();
    let mut sections: Vec<(usize, String, Vec<RawItem>)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "section", "unterminated section header"))?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(err(line_no, "section", "empty section name"));
            }
            sections.push((line_no, name, Vec::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, "line", "expected 'key = value' or '[section]'"))?;
        let item = RawItem {
            line: line_no,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        };
        match sections.last_mut() {
            Some((_, _, items)) => items.push(item),
            None => globals.push(item),
        }
    }
    Ok((globals, sections))
}

fn parse_scalar<T: std::str::FromStr>(item: &RawItem) -> Result<T, ConfigError> {
    item.value
        .parse::<T>()
        .map_err(|_| err(item.line, &item.key, format!("cannot parse '{}'", item.value)))
}

fn parse_list_f64(item: &RawItem) -> Result<Vec<f64>, ConfigError> {
    item.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| err(item.line, &item.key, format!("cannot parse '{s}' as a number")))
        })
        .collect()
}

/// Parses and validates a configuration file's contents.
pub fn parse_config(text: &str) -> Result<CliConfig, ConfigError> {
    let (globals, sections) = parse_items(text)?;

    let mut n_antennas = None;
    let mut n_users = None;
    let mut block_len = None;
    let mut qam_level = None;
    let mut noise_var = None;
    let mut eps_grid = None;
    let mut n_channels = None;
    let mut seed = None;
    let mut sep_trials = slp_core::sim::DEFAULT_SEP_TRIALS;
    let mut failure_budget = 0usize;

    for item in &globals {
        match item.key.as_str() {
            "n_antennas" => n_antennas = Some(parse_scalar::<usize>(item)?),
            "n_users" => n_users = Some(parse_scalar::<usize>(item)?),
            "block_len" => block_len = Some(parse_scalar::<usize>(item)?),
            "qam_level" => qam_level = Some(parse_scalar::<u32>(item)?),
            "noise_var" => noise_var = Some(parse_scalar::<f64>(item)?),
            "eps_grid" => eps_grid = Some((item.line, parse_list_f64(item)?)),
            "n_channels" => n_channels = Some(parse_scalar::<usize>(item)?),
            "seed" => seed = Some(parse_scalar::<u64>(item)?),
            "sep_trials" => sep_trials = parse_scalar::<usize>(item)?,
            "failure_budget" => failure_budget = parse_scalar::<usize>(item)?,
            other => return Err(err(item.line, other, "unknown key")),
        }
    }

    let require = |name: &str, v: Option<usize>| -> Result<usize, ConfigError> {
        v.ok_or_else(|| err(0, name, "missing required key"))
    };
    let (eps_line, eps_grid) =
        eps_grid.ok_or_else(|| err(0, "eps_grid", "missing required key"))?;

    let mut schemes = Vec::new();
    for (line, name, items) in &sections {
        match name.as_str() {
            "zf" => {
                reject_keys(items)?;
                schemes.push(Scheme::Zf);
            }
            "linear_bf" => {
                reject_keys(items)?;
                schemes.push(Scheme::LinearBf);
            }
            "slp_block_avg" => {
                reject_keys(items)?;
                schemes.push(Scheme::SlpBlockAvg);
            }
            "slp_block_peak" => {
                reject_keys(items)?;
                schemes.push(Scheme::SlpBlockPeak);
            }
            "slp_heuristic" => {
                let mut zetas = vec![1.0];
                for item in items {
                    match item.key.as_str() {
                        "zeta" => zetas = parse_list_f64(item)?,
                        other => return Err(err(item.line, other, "unknown key")),
                    }
                }
                if zetas.is_empty() {
                    return Err(err(*line, "zeta", "needs at least one value"));
                }
                for zeta in zetas {
                    schemes.push(Scheme::SlpHeuristic { zeta });
                }
            }
            other => return Err(err(*line, other, "unknown scheme section")),
        }
    }

    let sim = SimConfig {
        n_antennas: require("n_antennas", n_antennas)?,
        n_users: require("n_users", n_users)?,
        block_len: require("block_len", block_len)?,
        qam_level: qam_level.ok_or_else(|| err(0, "qam_level", "missing required key"))?,
        noise_var: noise_var.ok_or_else(|| err(0, "noise_var", "missing required key"))?,
        eps_grid,
        n_channels: require("n_channels", n_channels)?,
        schemes,
        seed: seed.ok_or_else(|| err(0, "seed", "missing required key"))?,
        sep_trials,
    };
    sim.validate()
        .map_err(|e| err(eps_line, "config", e.to_string()))?;
    Ok(CliConfig { sim, failure_budget })
}

fn reject_keys(items: &[RawItem]) -> Result<(), ConfigError> {
    if let Some(item) = items.first() {
        return Err(err(item.line, &item.key, "this scheme takes no keys"));
    }
    Ok(())
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<CliConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# experiment
n_antennas = 4
n_users = 2
block_len = 8
qam_level = 2
noise_var = 1.0
eps_grid = 0.1, 0.05
n_channels = 3
seed = 7

[zf]
[slp_heuristic]
zeta = 1.0, 1.2
[slp_block_avg]
";

    #[test]
    fn parses_schemes_in_order() {
        let cfg = parse_config(GOOD).unwrap();
        assert_eq!(cfg.sim.n_antennas, 4);
        assert_eq!(cfg.sim.eps_grid, vec![0.1, 0.05]);
        assert_eq!(
            cfg.sim.schemes,
            vec![
                Scheme::Zf,
                Scheme::SlpHeuristic { zeta: 1.0 },
                Scheme::SlpHeuristic { zeta: 1.2 },
                Scheme::SlpBlockAvg,
            ]
        );
        assert_eq!(cfg.failure_budget, 0);
        assert_eq!(cfg.sim.sep_trials, slp_core::sim::DEFAULT_SEP_TRIALS);
    }

    #[test]
    fn rejects_eps_zero_with_location() {
        let bad = GOOD.replace("eps_grid = 0.1, 0.05", "eps_grid = 0.1, 0.0");
        let e = parse_config(&bad).unwrap_err();
        assert_eq!(e.line, 7);
        assert!(e.message.contains("unattainable SEP requirement"), "{e}");
    }

    #[test]
    fn rejects_k_above_n() {
        let bad = GOOD.replace("n_users = 2", "n_users = 9");
        let e = parse_config(&bad).unwrap_err();
        assert!(e.message.contains("K <= N"), "{e}");
    }

    #[test]
    fn rejects_unknown_key_and_section() {
        let e = parse_config(&format!("{GOOD}\nmystery = 1\n")).unwrap_err();
        assert_eq!(e.field, "mystery");
        let e = parse_config(&format!("{GOOD}\n[mystery]\n")).unwrap_err();
        assert_eq!(e.field, "mystery");
    }

    #[test]
    fn rejects_missing_keys() {
        let e = parse_config("n_antennas = 4\neps_grid = 0.1\n").unwrap_err();
        assert!(e.message.contains("missing required key"));
    }

    #[test]
    fn rejects_bad_zeta() {
        let bad = GOOD.replace("zeta = 1.0, 1.2", "zeta = 0.5");
        let e = parse_config(&bad).unwrap_err();
        assert!(e.message.contains("zeta"), "{e}");
    }
}

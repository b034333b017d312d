//! Run configuration: one JSON document whose fields command-line flags override.

use qrt_core::conic::SolveOptions;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Output encoding of tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            tol_gap: o.tol_gap,
            tol_feas: o.tol_feas,
            max_iter: o.max_iter,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol_gap: self.tol_gap,
            tol_feas: self.tol_feas,
            max_iter: self.max_iter,
            ..SolveOptions::default()
        }
    }
}

/// Every field a command may read. Absent fields fall back to the command's defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub state: Option<String>,
    pub target: Option<String>,
    pub theory: Option<String>,
    pub target_theory: Option<String>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub eps: Option<f64>,
    pub gamma_grid: Option<Vec<f64>>,
    pub p_grid: Option<Vec<f64>>,
    pub solver: SolverConfig,
    pub output: Option<String>,
    pub format: Format,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &str) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks grids and tolerances against their documented ranges.
    pub fn validate(&self) -> CliResult<()> {
        if let Some(g) = &self.gamma_grid {
            check_grid("gamma_grid", g, |x| (0.0..=1.0).contains(&x))?;
        }
        if let Some(g) = &self.p_grid {
            check_grid("p_grid", g, |x| x > 0.0 && x <= 1.0)?;
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(CliError::Config(format!("p = {p} must lie in (0, 1]")));
            }
        }
        if let Some(e) = self.eps {
            if !(0.0..1.0).contains(&e) {
                return Err(CliError::Config(format!("eps = {e} must lie in [0, 1)")));
            }
        }
        let s = &self.solver;
        if !(s.tol_gap > 0.0 && s.tol_feas > 0.0 && s.max_iter > 0) {
            return Err(CliError::Config("solver tolerances and iteration limit must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn require<'a>(&self, field: &'a Option<String>, name: &str) -> CliResult<&'a str> {
        field
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("missing --{name} (or \"{name}\" in the config file)")))
    }
}

fn check_grid(name: &str, g: &[f64], ok: impl Fn(f64) -> bool) -> CliResult<()> {
    if g.is_empty() {
        return Err(CliError::Config(format!("{name} is empty")));
    }
    if let Some(x) = g.iter().find(|&&x| !ok(x)) {
        return Err(CliError::Config(format!("{name} value {x} is out of range")));
    }
    Ok(())
}

/// `a:b:n` as n evenly spaced points from a to b, or a comma-separated list.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Config(format!("bad grid '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    spec.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_validation() {
        assert_eq!(parse_grid("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("a:b").is_err());
        let mut c = RunConfig {
            p_grid: Some(vec![]),
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        c.p_grid = Some(vec![0.5, 1.0]);
        assert!(c.validate().is_ok());
        c.p = Some(0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_file_fields() {
        let c: RunConfig = serde_json::from_str(r#"{"state": "bell:2", "theory": "ppt", "solver": {"tol_gap": 1e-9}}"#).unwrap();
        assert_eq!(c.solver.tol_gap, 1e-9);
        assert_eq!(c.solver.max_iter, SolveOptions::default().max_iter);
        assert!(serde_json::from_str::<RunConfig>(r#"{"stat": 1}"#).is_err());
    }
}

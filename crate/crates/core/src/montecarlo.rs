//! Ensemble estimates of explosion probabilities and phase-diagram sweeps.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_regime, RegimeVerdict};
use crate::model::{CompetitionSpec, ModelSpec, ValidationError};
use crate::simulate::{simulate_indexed, PathIndex, SimConfig};

/// Normal quantile of the 95% Wilson interval.
pub const WILSON_Z: f64 = 1.96;
/// Header line of every CSV file written by this crate.
pub const CSV_SCHEMA_HEADER: &str = "# cble-lab schema v1";
/// How many per-path failure messages an [`MCResult`] keeps.
const KEPT_FAILURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    /// Paths that completed; failed paths are excluded.
    pub n_paths: usize,
    pub n_exploded: usize,
    pub n_failed: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean explosion time over the exploded paths.
    pub mean_tau_k: Option<f64>,
    #[serde(default)]
    pub failures: Vec<String>,
    pub config_echo: SimConfig,
}

impl MCResult {
    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    fn from_counts(n_paths: usize, n_exploded: usize, taus: &[f64], failures: Vec<String>, n_failed: usize, cfg: &SimConfig) -> Self {
        let (ci_low, ci_high) = wilson_interval(n_exploded, n_paths, WILSON_Z);
        let estimate = if n_paths == 0 { 0.0 } else { n_exploded as f64 / n_paths as f64 };
        Self {
            n_paths,
            n_exploded,
            n_failed,
            estimate,
            ci_low,
            ci_high,
            mean_tau_k: (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64),
            failures,
            config_echo: cfg.clone(),
        }
    }
}

/// Wilson score interval for `k` successes out of `n`; `(0, 1)` when `n = 0`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let low = if k == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let high = if k == n { 1.0 } else { (center + half).clamp(p, 1.0) };
    (low, high)
}

/// Runs `n` independent paths of `m` and estimates the probability of
/// reaching `cfg.k_explode` before `cfg.t_horizon`.
pub fn estimate_explosion_prob(m: &ModelSpec, cfg: &SimConfig, n: usize) -> Result<MCResult, ValidationError> {
    estimate_cell(m, cfg, n, 0, None)
}

/// As [`estimate_explosion_prob`] for the paths of ensemble cell `cell`,
/// optionally with truncated environment jumps.
pub fn estimate_cell(
    m: &ModelSpec,
    cfg: &SimConfig,
    n: usize,
    cell: u64,
    truncation: Option<f64>,
) -> Result<MCResult, ValidationError> {
    m.validate()?;
    cfg.validate()?;
    if n == 0 {
        return Err(ValidationError::new("n", "need at least one path"));
    }
    let outcomes: Vec<_> = (0..n as u64)
        .into_par_iter()
        .map(|path| simulate_indexed(m, cfg, truncation, PathIndex { cell, path }).map(|p| p.tau_explode))
        .collect();

    let mut taus = Vec::new();
    let mut failures = Vec::new();
    let mut n_failed = 0;
    let mut n_paths = 0;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(tau) => {
                n_paths += 1;
                taus.extend(tau);
            }
            Err(e) => {
                n_failed += 1;
                if failures.len() < KEPT_FAILURES {
                    failures.push(format!("path {i}: {e}"));
                }
            }
        }
    }
    Ok(MCResult::from_counts(n_paths, taus.len(), &taus, failures, n_failed, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    ABar,
    B0,
    Q0,
    Sigma,
    Beta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::ABar => "a_bar",
            SweepParam::B0 => "b0",
            SweepParam::Q0 => "q0",
            SweepParam::Sigma => "sigma",
            SweepParam::Beta => "beta",
        }
    }

    /// Sets the parameter on `m`. The result is not validated.
    pub fn apply(self, m: &mut ModelSpec, value: f64) -> Result<(), ValidationError> {
        match self {
            SweepParam::Alpha => m.branching.mu.set_alpha(value),
            SweepParam::ABar => m.branching.mu.set_a_bar(value),
            SweepParam::Sigma => m.environment.sigma = value,
            SweepParam::Beta => m.environment.beta = value,
            SweepParam::B0 | SweepParam::Q0 => match &mut m.competition {
                CompetitionSpec::PowerLaw { b0, q0, .. } => {
                    if self == SweepParam::B0 {
                        *b0 = value;
                    } else {
                        *q0 = value;
                    }
                }
                CompetitionSpec::Tabulated { .. } => {
                    return Err(ValidationError::new(self.name(), "cannot sweep a tabulated competition"));
                }
            },
        }
        Ok(())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "alpha" => SweepParam::Alpha,
            "a_bar" | "abar" => SweepParam::ABar,
            "b0" => SweepParam::B0,
            "q0" => SweepParam::Q0,
            "sigma" => SweepParam::Sigma,
            "beta" => SweepParam::Beta,
            other => return Err(format!("unknown sweep parameter `{other}` (alpha, a_bar, b0, q0, sigma, beta)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Self {
        Self { param, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub row: usize,
    pub col: usize,
    pub axis1_value: f64,
    pub axis2_value: f64,
    pub verdict: Option<RegimeVerdict>,
    pub result: Option<MCResult>,
    /// Set when the swept model fails validation.
    pub invalid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub axis1: Axis,
    pub axis2: Axis,
    pub n_per_cell: usize,
    /// Row-major: `cells[i * axis2.values.len() + j]`.
    pub cells: Vec<PhaseCell>,
}

/// Classifies and simulates every cell of the grid `axis1 × axis2`. Cell
/// `c` (row-major) uses the substreams `(seed, c, path)`.
pub fn phase_diagram(
    base: &ModelSpec,
    cfg: &SimConfig,
    axis1: &Axis,
    axis2: &Axis,
    n_per_cell: usize,
) -> Result<PhaseDiagram, ValidationError> {
    cfg.validate()?;
    if n_per_cell == 0 {
        return Err(ValidationError::new("n_per_cell", "need at least one path per cell"));
    }
    for axis in [axis1, axis2] {
        if axis.values.is_empty() || axis.values.iter().any(|v| !v.is_finite()) {
            return Err(ValidationError::new(axis.param.name(), "axis values must be a non-empty list of finite numbers"));
        }
    }
    let mut cells = Vec::with_capacity(axis1.values.len() * axis2.values.len());
    for (i, &v1) in axis1.values.iter().enumerate() {
        for (j, &v2) in axis2.values.iter().enumerate() {
            let index = (i * axis2.values.len() + j) as u64;
            let mut m = base.clone();
            let prepared = axis1
                .param
                .apply(&mut m, v1)
                .and_then(|_| axis2.param.apply(&mut m, v2))
                .and_then(|_| m.validate());
            let mut cell = PhaseCell {
                row: i,
                col: j,
                axis1_value: v1,
                axis2_value: v2,
                verdict: None,
                result: None,
                invalid: None,
            };
            match prepared {
                Err(e) => cell.invalid = Some(e.to_string()),
                Ok(()) => match classify_regime(&m) {
                    Err(e) => cell.invalid = Some(e.to_string()),
                    Ok(v) => {
                        cell.verdict = Some(v);
                        cell.result = Some(estimate_cell(&m, cfg, n_per_cell, index, None)?);
                    }
                },
            }
            cells.push(cell);
        }
    }
    Ok(PhaseDiagram {
        axis1: axis1.clone(),
        axis2: axis2.clone(),
        n_per_cell,
        cells,
    })
}

impl PhaseDiagram {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_SCHEMA_HEADER);
        s.push('\n');
        s.push_str("axis1_value,axis2_value,verdict,clause,estimate,ci_low,ci_high,n_exploded,n_paths\n");
        for c in &self.cells {
            match (&c.verdict, &c.result) {
                (Some(v), Some(r)) => writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    c.axis1_value,
                    c.axis2_value,
                    v.verdict,
                    v.clause.tag(),
                    r.estimate,
                    r.ci_low,
                    r.ci_high,
                    r.n_exploded,
                    r.n_paths
                ),
                _ => writeln!(s, "{},{},Invalid,,,,,,", c.axis1_value, c.axis2_value),
            }
            .expect("writing to a String");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Verdict;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(10, 10, WILSON_Z);
        assert!((lo - 0.7225).abs() < 1e-3 && hi == 1.0);
        let (lo, hi) = wilson_interval(0, 10, WILSON_Z);
        assert!(lo == 0.0 && (hi - 0.2775).abs() < 1e-3);
        let (lo, hi) = wilson_interval(5, 10, WILSON_Z);
        assert!((lo + hi - 1.0).abs() < 1e-15);
        assert_eq!(wilson_interval(0, 0, WILSON_Z), (0.0, 1.0));
    }

    #[test]
    fn sweep_param_parsing() {
        assert_eq!("b0".parse::<SweepParam>().unwrap(), SweepParam::B0);
        assert!("gamma".parse::<SweepParam>().is_err());
    }

    #[test]
    fn invalid_cells_are_marked() {
        let base = ModelSpec::pure_stable(1.0, 0.5, 1.0);
        let cfg = SimConfig::new(1e-2, 0.1, 1e3, 0.05, 5);
        let d = phase_diagram(
            &base,
            &cfg,
            &Axis::new(SweepParam::Alpha, vec![0.5, 2.5]),
            &Axis::new(SweepParam::Beta, vec![0.0]),
            3,
        )
        .unwrap();
        assert_eq!(d.cells.len(), 2);
        assert_eq!(d.cells[0].verdict.as_ref().unwrap().verdict, Verdict::ExplodesWPP);
        assert!(d.cells[1].invalid.as_ref().unwrap().contains("alpha"));
        let csv = d.to_csv();
        assert!(csv.starts_with(CSV_SCHEMA_HEADER));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(3).unwrap().contains("Invalid"));
    }
}

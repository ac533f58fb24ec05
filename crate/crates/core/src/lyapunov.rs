//! Foster-Lyapunov scans.
//!
//! A scan is numerical evidence, not a proof: every result records the
//! finite grid it was checked on and, for nonexplosion, whether the
//! dominant terms of the analytic bound stay bounded beyond it.
//!
//! * Explosion: for a bounded, strictly increasing `g` and `d0 > 0`,
//!   `L g(y) ≥ d0 g(y)` for all `y ≥ ȳ` gives
//!   `P_{y0}{τ_∞ < ∞} ≥ (g(y0) - g(ȳ)) / sup g` for `y0 > ȳ`.
//! * Nonexplosion: `L g_n(y) ≤ d_n g_n(y)` on `[1/n, ∞)` with `g_n → ∞`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::special::{c_coeff, c_coeff_reflection};
use crate::analytics::test_function::{FamilySpec, TestFunction, TestFunctionError};
use crate::analytics::{generator_apply, generator_truncated, GeneratorError};
use crate::model::{ModelSpec, ValidationError};

/// Seed of the multiplicative grid jitter.
pub const DEFAULT_GRID_SEED: u64 = 0x00C0_FFEE_2024;
/// Floor applied to `d_n`.
pub const D_N_FLOOR: f64 = 1e-9;

/// Builds a [`TestFunction`] from a family description.
pub fn make_test_function(family: &FamilySpec) -> Result<TestFunction, TestFunctionError> {
    TestFunction::from_spec(family)
}

/// Geometric grid description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub y_min: f64,
    pub y_max: f64,
    #[serde(default = "default_points_per_decade")]
    pub points_per_decade: usize,
    /// Maximal relative jitter of interior points.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default = "default_grid_seed")]
    pub seed: u64,
}

fn default_points_per_decade() -> usize {
    64
}

fn default_jitter() -> f64 {
    0.01
}

fn default_grid_seed() -> u64 {
    DEFAULT_GRID_SEED
}

impl GridSpec {
    pub fn new(y_min: f64, y_max: f64) -> Self {
        Self {
            y_min,
            y_max,
            points_per_decade: default_points_per_decade(),
            jitter: default_jitter(),
            seed: DEFAULT_GRID_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Grid points, sorted; the end points are never jittered.
    pub fn points(&self) -> Result<Vec<f64>, ScanError> {
        if !(self.y_min > 0.0 && self.y_max > self.y_min && self.points_per_decade > 0) {
            return Err(ScanError::BadGrid(format!(
                "need 0 < y_min < y_max and points_per_decade > 0, got {self:?}"
            )));
        }
        if !(0.0..0.4).contains(&self.jitter) {
            return Err(ScanError::BadGrid(format!("jitter {} must lie in [0, 0.4)", self.jitter)));
        }
        let decades = (self.y_max / self.y_min).log10();
        let n = ((decades * self.points_per_decade as f64).ceil() as usize).max(1);
        let ratio = (self.y_max / self.y_min).ln() / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut pts: Vec<f64> = (0..=n)
            .map(|i| {
                let base = self.y_min * (ratio * i as f64).exp();
                let u: f64 = rng.gen_range(-1.0..=1.0);
                if i == 0 || i == n {
                    base
                } else {
                    base * (1.0 + self.jitter * u)
                }
            })
            .collect();
        pts[n] = self.y_max;
        pts.sort_by(f64::total_cmp);
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("no certificate found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    TestFunction(#[from] TestFunctionError),
    #[error("bad grid: {0}")]
    BadGrid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionCertificate {
    pub delta: f64,
    pub y_bar: f64,
    pub d0: f64,
    /// `min (L g(y) - d0 g(y))` over grid points `y ≥ ȳ`.
    pub margin: f64,
    pub y_max: f64,
    pub points_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexplosionEvidence {
    pub n: u32,
    pub k: f64,
    pub d_n: f64,
    /// Grid point where `L_k g_n / g_n` is largest.
    pub argmax: f64,
    pub y_max: f64,
    pub asymptotic_ok: bool,
    pub points_checked: usize,
}

/// Why a given `δ` cannot give a diverging leading term, if it cannot.
fn explosion_leading_term_obstacle(m: &ModelSpec, delta: f64) -> Option<String> {
    let alpha = m.branching.mu.alpha();
    let a_bar = m.branching.mu.a_bar();
    let lead = 1.0 - alpha - delta;
    if lead <= 0.0 {
        return Some(format!("1 - alpha - delta = {lead:.3} <= 0"));
    }
    let (b0, q0) = m.competition.power_envelope();
    if b0 == 0.0 {
        return None;
    }
    let comp = q0 - 1.0 - delta;
    if comp < lead {
        return None;
    }
    if comp == lead {
        let c = c_coeff(alpha, delta).expect("alpha < 1 and delta > 0");
        if b0 < a_bar * c {
            return None;
        }
        return Some(format!("b0 = {b0} >= a_bar c_(alpha,delta) = {}", a_bar * c));
    }
    Some(format!("competition exponent {q0} exceeds 2 - alpha"))
}

/// Explosion scan with `d0 = 1`.
pub fn scan_explosion_criterion(
    m: &ModelSpec,
    delta_grid: &[f64],
    grid: &GridSpec,
) -> Result<ExplosionCertificate, ScanError> {
    scan_explosion_criterion_with(m, delta_grid, grid, 1.0)
}

/// For each `δ` (in order), evaluates `L g` with `g(y) = exp(-y^{-δ})` on the
/// grid and looks for the smallest `ȳ` with `L g ≥ d0 g` on every grid point
/// `≥ ȳ`. At least the last decade of the grid must be covered.
pub fn scan_explosion_criterion_with(
    m: &ModelSpec,
    delta_grid: &[f64],
    grid: &GridSpec,
    d0: f64,
) -> Result<ExplosionCertificate, ScanError> {
    m.validate()?;
    if delta_grid.is_empty() {
        return Err(ScanError::BadGrid("empty delta grid".into()));
    }
    if !(d0 > 0.0) {
        return Err(ScanError::BadGrid(format!("d0 = {d0} must be positive")));
    }
    let pts = grid.points()?;
    let last_decade = pts.iter().filter(|&&y| y >= grid.y_max / 10.0).count();
    let mut reasons = Vec::new();

    for &delta in delta_grid {
        if let Some(reason) = explosion_leading_term_obstacle(m, delta) {
            reasons.push(format!("delta {delta}: {reason}"));
            continue;
        }
        let g = TestFunction::exp_inverse_power(delta)?;
        let residuals = pts
            .par_iter()
            .map(|&y| generator_apply(m, &g, y).map(|lg| lg - d0 * g.value(y)))
            .collect::<Result<Vec<f64>, _>>()?;

        let first_ok = residuals.iter().rposition(|&r| r < 0.0).map_or(0, |i| i + 1);
        let covered = pts.len() - first_ok;
        if covered < last_decade.max(1) {
            reasons.push(format!("delta {delta}: inequality fails within the last decade of the grid"));
            continue;
        }
        let margin = residuals[first_ok..].iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(ExplosionCertificate {
            delta,
            y_bar: pts[first_ok],
            d0,
            margin,
            y_max: grid.y_max,
            points_checked: covered,
        });
    }
    Err(ScanError::NotFound(reasons.join("; ")))
}

/// Re-checks `L g ≥ d0 g` on a fresh grid over `[ȳ, y_max]`.
pub fn replay_certificate(m: &ModelSpec, cert: &ExplosionCertificate, grid: &GridSpec) -> Result<bool, ScanError> {
    let g = TestFunction::exp_inverse_power(cert.delta)?;
    let replay = GridSpec {
        y_min: cert.y_bar,
        y_max: cert.y_max,
        ..grid.clone()
    };
    let pts = replay.points()?;
    let ok = pts
        .par_iter()
        .map(|&y| generator_apply(m, &g, y).map(|lg| lg >= cert.d0 * g.value(y)))
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(ok.into_iter().all(|b| b))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("test function `{0}` is unbounded")]
    Unbounded(&'static str),
    #[error("y_bar = {0} must be positive")]
    Threshold(f64),
}

/// `max(0, (g(y0) - g(ȳ)) / sup g)`.
pub fn explosion_prob_lower_bound(g: &TestFunction, y0: f64, y_bar: f64) -> Result<f64, BoundError> {
    let sup = g.sup().ok_or(BoundError::Unbounded(g.family_name()))?;
    if !(y_bar > 0.0) {
        return Err(BoundError::Threshold(y_bar));
    }
    if y0 <= y_bar {
        return Ok(0.0);
    }
    Ok(((g.value(y0) - g.value(y_bar)) / sup).clamp(0.0, 1.0))
}

/// Whether the dominant terms of the upper bound for `L_k g_n` stay bounded
/// as `y → ∞`: true iff `α ≥ 1`, or `q0 > 2-α` with `b0 > 0`, or
/// `q0 = 2-α` with `b0 ≥ ā c_{α,0}`.
pub fn nonexplosion_asymptotics_bounded(m: &ModelSpec) -> bool {
    let alpha = m.branching.mu.alpha();
    if alpha >= 1.0 {
        return true;
    }
    let (b0, q0) = m.competition.power_envelope();
    let critical = 2.0 - alpha;
    if b0 <= 0.0 {
        return false;
    }
    if (q0 - critical).abs() <= crate::classify::CRITICAL_EXPONENT_TOL {
        let c0 = m.branching.mu.a_bar() * c_coeff_reflection(alpha).expect("alpha < 1");
        return b0 >= c0 * (1.0 - crate::classify::CRITICAL_AMPLITUDE_RTOL);
    }
    q0 > critical
}

/// Nonexplosion scan on the default jittered grid.
pub fn scan_nonexplosion_criterion(m: &ModelSpec, n: u32, y_max: f64, k: f64) -> Result<NonexplosionEvidence, ScanError> {
    let grid = GridSpec::new(1.0 / f64::from(n.max(1)), y_max);
    scan_nonexplosion_criterion_on(m, n, &grid, k)
}

/// Evaluates `L_k g_n / g_n` over `[1/n, y_max]`; `d_n` is its maximum
/// (floored at [`D_N_FLOOR`]). Fails when the ratio keeps growing over the
/// last decade or the analytic tail bound is not bounded.
pub fn scan_nonexplosion_criterion_on(
    m: &ModelSpec,
    n: u32,
    grid: &GridSpec,
    k: f64,
) -> Result<NonexplosionEvidence, ScanError> {
    m.validate()?;
    let g = TestFunction::log_log(n)?;
    let lo = 1.0 / f64::from(n);
    if grid.y_min < lo {
        return Err(ScanError::BadGrid(format!("grid starts below 1/n = {lo}")));
    }
    let pts = grid.points()?;
    let ratios = pts
        .par_iter()
        .map(|&y| generator_truncated(m, &g, y, k).map(|lg| lg / g.value(y)))
        .collect::<Result<Vec<f64>, _>>()?;

    let (argmax_idx, max_ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });

    let tail_start = pts.partition_point(|&y| y < grid.y_max / 10.0);
    let tail = &ratios[tail_start..];
    let growing = tail.len() >= 2
        && tail.windows(2).all(|w| w[1] >= w[0])
        && tail[tail.len() - 1] > tail[0] + 0.01 * tail[0].abs().max(1e-3);
    if growing {
        return Err(ScanError::NotFound(format!(
            "L_k g_n / g_n grows monotonically over the last decade ({:.4} -> {:.4})",
            tail[0],
            tail[tail.len() - 1]
        )));
    }

    let asymptotic_ok = nonexplosion_asymptotics_bounded(m);
    if !asymptotic_ok {
        return Err(ScanError::NotFound(
            "dominant terms of the analytic bound are unbounded beyond the grid".into(),
        ));
    }
    Ok(NonexplosionEvidence {
        n,
        k,
        d_n: max_ratio.max(D_N_FLOOR),
        argmax: pts[argmax_idx],
        y_max: grid.y_max,
        asymptotic_ok,
        points_checked: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CompetitionSpec;

    #[test]
    fn grid_is_sorted_with_fixed_ends() {
        let g = GridSpec::new(1.0, 1e3).points().unwrap();
        assert_eq!(g.len(), 3 * 64 + 1);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 1e3);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let other = GridSpec::new(1.0, 1e3).with_seed(7).points().unwrap();
        assert_ne!(g, other);
    }

    #[test]
    fn lower_bound_example() {
        let g = TestFunction::exp_inverse_power(0.1).unwrap();
        let p = explosion_prob_lower_bound(&g, 1000.0, 10.0).unwrap();
        let expected = (-(1000f64.powf(-0.1))).exp() - (-(10f64.powf(-0.1))).exp();
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 0.1539).abs() < 1e-4);
        assert_eq!(explosion_prob_lower_bound(&g, 10.0, 10.0).unwrap(), 0.0);
        let far = explosion_prob_lower_bound(&g, 1e300, 10.0).unwrap();
        assert!((far - (1.0 - (-(10f64.powf(-0.1))).exp())).abs() < 1e-12);
        assert!(explosion_prob_lower_bound(&TestFunction::log_log(9).unwrap(), 2.0, 1.0).is_err());
    }

    #[test]
    fn heavy_index_has_no_explosion_certificate() {
        let m = ModelSpec::pure_stable(1.0, 1.5, 1.0);
        let err = scan_explosion_criterion(&m, &[0.05, 0.1], &GridSpec::new(1.0, 1e4)).unwrap_err();
        assert!(matches!(err, ScanError::NotFound(_)));
    }

    #[test]
    fn strong_competition_blocks_certificate() {
        let m = ModelSpec::pure_stable(1.0, 0.5, 1.0).with_competition(CompetitionSpec::PowerLaw {
            b0: 1e6,
            q0: 3.0,
            activation: 0.0,
        });
        let err = scan_explosion_criterion(&m, &[0.1], &GridSpec::new(1.0, 1e4)).unwrap_err();
        assert!(matches!(err, ScanError::NotFound(_)));
    }

    #[test]
    fn asymptotic_rule() {
        let comp = |b0, q0| CompetitionSpec::PowerLaw { b0, q0, activation: 1.0 };
        let pi2 = 2.0 * std::f64::consts::PI;
        assert!(nonexplosion_asymptotics_bounded(&ModelSpec::pure_stable(1.0, 1.0, 1.0)));
        assert!(!nonexplosion_asymptotics_bounded(&ModelSpec::pure_stable(1.0, 0.5, 1.0)));
        assert!(nonexplosion_asymptotics_bounded(&ModelSpec::pure_stable(1.0, 0.5, 1.0).with_competition(comp(pi2, 1.5))));
        assert!(!nonexplosion_asymptotics_bounded(&ModelSpec::pure_stable(1.0, 0.5, 1.0).with_competition(comp(6.0, 1.5))));
        assert!(nonexplosion_asymptotics_bounded(&ModelSpec::pure_stable(1.0, 0.5, 1.0).with_competition(comp(0.1, 1.6))));
    }
}

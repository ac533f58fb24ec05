//! Pathwise simulation of the branching SDE and its truncated-environment
//! variant, with hitting times and explosion detection.
//!
//! Each step of size `h` applies, in order:
//!
//! 1. drift `(β + b1 - compensators) y - b₀(y)` by one explicit midpoint step;
//! 2. branching diffusion, a CIR-style Gaussian increment of variance `2 b2² y h`;
//! 3. environment diffusion, the factor `exp(σ ΔW - σ² h / 2)`;
//! 4. branching jumps above the cutoff, sampled exactly with intensity `y μ(dz)`
//!    refreshed after every jump inside the step;
//! 5. branching jumps below the cutoff as a centred Gaussian of variance
//!    `y h ∫_0^cut z² μ(dz)`;
//! 6. environment jumps `y ← y e^z` at exact event times of the finite `ν`.
//!
//! The cutoff is `max(eps_jump, relative_jump_cutoff · y)`, so the number of
//! exactly simulated jumps per unit of relative growth stays bounded as `y`
//! grows. Setting `relative_jump_cutoff = 0` keeps it fixed at `eps_jump`.
//!
//! Explosion is declared at the first time `y ≥ k_explode`; zero is absorbing.

mod rng;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::generator::law_expectation;
use crate::model::{competition_eval, EnvironmentSpec, JumpLaw, JumpMeasureSpec, ModelSpec, ValidationError};
use crate::quadrature::QuadError;
use rng::{path_key, substream, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt_max: f64,
    pub eps_jump: f64,
    #[serde(alias = "K_explode")]
    pub k_explode: f64,
    #[serde(alias = "T_horizon")]
    pub t_horizon: f64,
    pub seed: u64,
    #[serde(default = "default_record_grid")]
    pub record_grid: f64,
    /// Levels whose first passage times are tracked at every step.
    #[serde(default)]
    pub watch_levels: Vec<f64>,
    /// `false` switches off every branching jump and its compensator.
    #[serde(default = "yes")]
    pub branching_jumps: bool,
    #[serde(default = "default_relative_cutoff")]
    pub relative_jump_cutoff: f64,
}

fn default_record_grid() -> f64 {
    0.01
}

fn default_relative_cutoff() -> f64 {
    1e-3
}

fn yes() -> bool {
    true
}

impl SimConfig {
    pub fn new(dt_max: f64, eps_jump: f64, k_explode: f64, t_horizon: f64, seed: u64) -> Self {
        Self {
            dt_max,
            eps_jump,
            k_explode,
            t_horizon,
            seed,
            record_grid: default_record_grid(),
            watch_levels: Vec::new(),
            branching_jumps: true,
            relative_jump_cutoff: default_relative_cutoff(),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let positive = |v: f64, field: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ValidationError::new(field, format!("must be positive and finite, got {v}")))
            }
        };
        positive(self.dt_max, "sim.dt_max")?;
        positive(self.t_horizon, "sim.t_horizon")?;
        positive(self.record_grid, "sim.record_grid")?;
        if !(self.eps_jump > 0.0 && self.eps_jump <= 1.0) {
            return Err(ValidationError::new("sim.eps_jump", format!("must lie in (0, 1], got {}", self.eps_jump)));
        }
        if !(self.k_explode > 1.0 && self.k_explode.is_finite()) {
            return Err(ValidationError::new("sim.k_explode", format!("must be > 1, got {}", self.k_explode)));
        }
        if !(0.0..=0.1).contains(&self.relative_jump_cutoff) {
            return Err(ValidationError::new(
                "sim.relative_jump_cutoff",
                format!("must lie in [0, 0.1], got {}", self.relative_jump_cutoff),
            ));
        }
        for &u in &self.watch_levels {
            positive(u, "sim.watch_levels")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelHits {
    pub level: f64,
    pub tau_minus: Option<f64>,
    pub tau_plus: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvJumpEvent {
    pub t: f64,
    pub z: f64,
    /// `false` when the jump was discarded by truncation.
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub samples: Vec<(f64, f64)>,
    pub tau_hits: Vec<LevelHits>,
    pub exploded: bool,
    pub tau_explode: Option<f64>,
    pub tau_zero: Option<f64>,
    pub truncation_level: Option<f64>,
    pub env_jump_log: Vec<EnvJumpEvent>,
    pub steps: u64,
}

impl PathRecord {
    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.0)
    }

    pub fn final_state(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.1)
    }

    /// Time of the first environment jump above `k`, if any.
    pub fn first_env_jump_above(&self, k: f64) -> Option<f64> {
        self.env_jump_log.iter().find(|e| e.z > k).map(|e| e.t)
    }

    /// Checks the structural invariants of a record.
    pub fn check(&self, k_explode: f64) -> Result<(), String> {
        if self.samples.iter().any(|s| !(s.1 >= 0.0)) {
            return Err("negative or NaN state".into());
        }
        if self.samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("sample times not strictly increasing".into());
        }
        if self.exploded && self.final_state() < k_explode {
            return Err("exploded path ends below the explosion level".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("step underflow at t = {t}, y = {y}: adaptive step {h:e}")]
    StepUnderflow { t: f64, y: f64, h: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Position of a path in an ensemble; selects its random substreams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathIndex {
    pub cell: u64,
    pub path: u64,
}

pub fn simulate_path(m: &ModelSpec, cfg: &SimConfig) -> Result<PathRecord, SimError> {
    simulate_indexed(m, cfg, None, PathIndex::default())
}

/// Same dynamics as [`simulate_path`] with environment jumps `z > k` dropped.
/// Random numbers are consumed identically, so both paths agree until the
/// first such jump.
pub fn simulate_truncated(m: &ModelSpec, cfg: &SimConfig, k: f64) -> Result<PathRecord, SimError> {
    simulate_indexed(m, cfg, Some(k), PathIndex::default())
}

/// First passage times below and above `u`. Watched levels use the values
/// tracked during simulation; other levels are read off the samples.
pub fn hitting_times(p: &PathRecord, u: f64) -> (Option<f64>, Option<f64>) {
    if let Some(h) = p.tau_hits.iter().find(|h| h.level == u) {
        return (h.tau_minus, h.tau_plus);
    }
    let minus = p.samples.iter().find(|s| s.1 <= u).map(|s| s.0);
    let plus = p.samples.iter().find(|s| s.1 >= u).map(|s| s.0);
    (minus, plus)
}

/// Branching-jump quantities for a fixed cutoff.
#[derive(Debug, Clone, Copy)]
struct JumpSplit {
    stable_lo: f64,
    stable_rate: f64,
    atom_rate: f64,
    /// Drift per unit state that replaces the compensation of the jumps.
    drift: f64,
    small_var: f64,
}

impl JumpSplit {
    fn new(mu: &JumpMeasureSpec, cutoff: f64) -> Self {
        let stable_lo = cutoff.max(mu.stable_cut());
        let stable_rate = mu.stable_tail(stable_lo);
        let atom_rate: f64 = mu.atoms().iter().map(|a| a.mass).sum();
        // exact jumps below 1 lose their compensator to the drift; Gaussian
        // jumps above 1 are centred, so their mean moves to the drift
        let mut drift = if cutoff < 1.0 {
            -mu.stable_moment(1.0, cutoff, 1.0)
        } else {
            mu.stable_moment(1.0, 1.0, cutoff)
        };
        drift -= mu.atoms().iter().filter(|a| a.size < 1.0).map(|a| a.mass * a.size).sum::<f64>();
        Self {
            stable_lo,
            stable_rate,
            atom_rate,
            drift,
            small_var: mu.stable_moment(2.0, 0.0, cutoff),
        }
    }

    fn rate(&self) -> f64 {
        self.stable_rate + self.atom_rate
    }

    fn sample(&self, mu: &JumpMeasureSpec, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.gen::<f64>() * self.rate();
        if u < self.stable_rate {
            let v: f64 = 1.0 - rng.gen::<f64>();
            return self.stable_lo * v.powf(-1.0 / mu.alpha());
        }
        let mut acc = self.stable_rate;
        for a in mu.atoms() {
            acc += a.mass;
            if u < acc {
                return a.size;
            }
        }
        mu.atoms().last().map_or(self.stable_lo, |a| a.size)
    }
}

/// `Σ rate · E[(e^Z - 1) 1{|Z| ≤ 1}]`.
fn environment_compensator(env: &EnvironmentSpec) -> Result<f64, QuadError> {
    let f = |z: f64| if z.abs() <= 1.0 { z.exp_m1() } else { 0.0 };
    let mut total = 0.0;
    for jump in env.nu.iter().filter(|j| j.rate > 0.0) {
        total += jump.rate * law_expectation(&jump.law, &f, f64::INFINITY)?.value;
    }
    Ok(total)
}

fn sample_env_jump(env: &EnvironmentSpec, total: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut law = &env.nu[env.nu.len() - 1].law;
    for jump in &env.nu {
        acc += jump.rate;
        if u < acc {
            law = &jump.law;
            break;
        }
    }
    match *law {
        JumpLaw::Point { z } => z,
        JumpLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
        JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
            let up = rng.gen::<f64>() < p_up;
            let e: f64 = rng.sample(Exp1);
            if up {
                e / eta_up
            } else {
                -e / eta_down
            }
        }
    }
}

struct Recorder {
    rec: PathRecord,
}

impl Recorder {
    fn observe(&mut self, t: f64, y: f64) {
        for h in &mut self.rec.tau_hits {
            if h.tau_minus.is_none() && y <= h.level {
                h.tau_minus = Some(t);
            }
            if h.tau_plus.is_none() && y >= h.level {
                h.tau_plus = Some(t);
            }
        }
    }

    fn push(&mut self, t: f64, y: f64) {
        match self.rec.samples.last_mut() {
            Some(last) if last.0 >= t => last.1 = y,
            _ => self.rec.samples.push((t, y)),
        }
    }

    fn explode(mut self, t: f64, y: f64) -> PathRecord {
        self.observe(t, y);
        self.push(t, y);
        self.rec.exploded = true;
        self.rec.tau_explode = Some(t);
        self.rec
    }

    fn absorb(mut self, t: f64) -> PathRecord {
        self.observe(t, 0.0);
        self.push(t, 0.0);
        self.rec.tau_zero = Some(t);
        self.rec
    }
}

/// Simulates the path at `index` of an ensemble; `truncation` drops
/// environment jumps above the given level.
pub fn simulate_indexed(
    m: &ModelSpec,
    cfg: &SimConfig,
    truncation: Option<f64>,
    index: PathIndex,
) -> Result<PathRecord, SimError> {
    m.validate()?;
    cfg.validate()?;
    if let Some(k) = truncation {
        if !(k >= 2.0) {
            return Err(ValidationError::new("k", format!("truncation level must be >= 2, got {k}")).into());
        }
    }

    let key = path_key(cfg.seed, index.cell, index.path);
    let mut rng_diff = substream(key, Source::BranchingDiffusion);
    let mut rng_env_diff = substream(key, Source::EnvironmentDiffusion);
    let mut rng_big = substream(key, Source::BigJumps);
    let mut rng_small = substream(key, Source::SmallJumps);
    let mut rng_env = substream(key, Source::EnvironmentJumps);

    let env = &m.environment;
    let mu = &m.branching.mu;
    let env_rate = env.total_rate();
    let base_coef = env.beta + m.branching.b1 - environment_compensator(env)?;
    let diff_var = 2.0 * m.branching.b2 * m.branching.b2;
    let sigma = env.sigma;
    let k_explode = cfg.k_explode;
    let horizon = cfg.t_horizon;
    let fixed_split = JumpSplit::new(mu, cfg.eps_jump);

    let mut out = Recorder {
        rec: PathRecord {
            samples: Vec::new(),
            tau_hits: cfg
                .watch_levels
                .iter()
                .map(|&level| LevelHits {
                    level,
                    tau_minus: None,
                    tau_plus: None,
                })
                .collect(),
            exploded: false,
            tau_explode: None,
            tau_zero: None,
            truncation_level: truncation,
            env_jump_log: Vec::new(),
            steps: 0,
        },
    };

    let mut t = 0.0;
    let mut y = m.y0;
    out.observe(t, y);
    out.push(t, y);
    if y == 0.0 {
        return Ok(out.absorb(0.0));
    }
    if y >= k_explode {
        return Ok(out.explode(0.0, y));
    }

    let mut next_env = if env_rate > 0.0 {
        rng_env.sample::<f64, _>(Exp1) / env_rate
    } else {
        f64::INFINITY
    };
    let mut record_count: u64 = 1;
    let mut next_record = cfg.record_grid;

    while t < horizon {
        let split = cfg.branching_jumps.then(|| {
            let cutoff = cfg.eps_jump.max(cfg.relative_jump_cutoff * y);
            if cutoff == cfg.eps_jump {
                fixed_split
            } else {
                JumpSplit::new(mu, cutoff)
            }
        });
        let coef = base_coef + split.map_or(0.0, |s| s.drift);
        let drift = |v: f64| coef * v - competition_eval(&m.competition, v);
        let a = drift(y);

        let mut h_adapt = cfg.dt_max;
        if a != 0.0 {
            let limit = 0.05 * y / a.abs();
            // below 1 the floor lets a strongly negative drift reach zero
            h_adapt = h_adapt.min(if y < 1.0 { limit.max(1e-6 * cfg.dt_max) } else { limit });
        }
        if let Some(s) = &split {
            let rate = y * s.rate();
            if rate > 0.0 {
                h_adapt = h_adapt.min(0.1 / rate);
            }
        }
        if h_adapt < 1e-12 * cfg.dt_max {
            return Err(SimError::StepUnderflow { t, y, h: h_adapt });
        }

        let mut t_new = t + h_adapt;
        let mut env_event = false;
        if next_record <= t_new {
            t_new = next_record;
        }
        if horizon <= t_new {
            t_new = horizon;
        }
        if next_env <= t_new {
            t_new = next_env;
            env_event = true;
        }
        let h = t_new - t;
        if !(h > 0.0) {
            return Err(SimError::StepUnderflow { t, y, h });
        }

        let y_mid = (y + 0.5 * h * a).max(0.0);
        y = (y + h * drift(y_mid)).max(0.0);

        if diff_var > 0.0 && y > 0.0 {
            let n: f64 = rng_diff.sample(StandardNormal);
            y = (y + (diff_var * y * h).sqrt() * n).max(0.0);
        }

        if sigma != 0.0 {
            let n: f64 = rng_env_diff.sample(StandardNormal);
            y *= (sigma * h.sqrt() * n - 0.5 * sigma * sigma * h).exp();
        }

        if let Some(s) = &split {
            let mut elapsed = 0.0;
            loop {
                let rate = y * s.rate();
                if !(rate > 0.0) {
                    break;
                }
                elapsed += rng_big.sample::<f64, _>(Exp1) / rate;
                if elapsed >= h {
                    break;
                }
                y += s.sample(mu, &mut rng_big);
                if y >= k_explode {
                    out.rec.steps += 1;
                    return Ok(out.explode(t + elapsed, y));
                }
            }
            if s.small_var > 0.0 && y > 0.0 {
                let n: f64 = rng_small.sample(StandardNormal);
                y = (y + (y * h * s.small_var).sqrt() * n).max(0.0);
            }
        }

        if env_event {
            let z = sample_env_jump(env, env_rate, &mut rng_env);
            next_env = t_new + rng_env.sample::<f64, _>(Exp1) / env_rate;
            let applied = truncation.map_or(true, |k| z <= k);
            out.rec.env_jump_log.push(EnvJumpEvent { t: t_new, z, applied });
            if applied {
                y *= z.exp();
            }
        }

        t = t_new;
        out.rec.steps += 1;
        if y >= k_explode {
            return Ok(out.explode(t, y));
        }
        if y == 0.0 {
            return Ok(out.absorb(t));
        }
        out.observe(t, y);
        if t == next_record {
            out.push(t, y);
            record_count += 1;
            next_record = record_count as f64 * cfg.record_grid;
        }
    }
    out.push(t, y);
    Ok(out.rec)
}

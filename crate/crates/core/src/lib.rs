//! Simulation and analysis of continuous-state branching processes with
//! competition in a Lévy random environment.
//!
//! * [`model`]: parameter specs, the branching mechanism and validation.
//! * [`analytics`]: special functions, the fractional integral identities
//!   and the generator `L`.
//! * [`classify`]: explosion/nonexplosion verdicts from the parameters.
//! * [`lyapunov`]: Foster-Lyapunov scans and the explosion lower bound.
//! * [`simulate`]: pathwise simulation with explosion detection.
//! * [`montecarlo`]: ensemble estimates and phase diagrams.
//! * [`cli`]: the `cble-lab` command line.

pub mod analytics;
pub mod classify;
pub mod cli;
pub mod lyapunov;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod simulate;

pub use classify::{classify_regime, Clause, RegimeVerdict, Verdict};
pub use model::{validate_model, ModelSpec, ValidationError};
pub use montecarlo::{estimate_explosion_prob, phase_diagram, MCResult};
pub use simulate::{hitting_times, simulate_path, simulate_truncated, PathRecord, SimConfig};

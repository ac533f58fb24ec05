//! Parameter specifications for the branching mechanism, the Lévy
//! environment and the competition mechanism, together with their
//! closed-form quantities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::special::gamma;
use crate::quadrature::{integrate_power_tail, integrate_power_weight, Tolerance};

/// A violated model invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ValidationError {
    pub field: String,
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

type Validation = Result<(), ValidationError>;

fn require(cond: bool, field: &str, reason: &str) -> Validation {
    if cond {
        Ok(())
    } else {
        Err(ValidationError::new(field, reason))
    }
}

fn finite(v: f64, field: &str) -> Validation {
    require(v.is_finite(), field, "must be a finite number")
}

/// One atom `mass · δ_size` of the finite part of a jump measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub mass: f64,
    pub size: f64,
}

/// The Lévy measure `μ` of the branching mechanism.
///
/// `PureStable` is `ā z^{-1-α} dz` on `(0, ∞)`. `StableTailPlusFinite` keeps
/// the same density only on `(A, ∞)` and adds finitely many atoms on `(0, A]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpMeasureSpec {
    PureStable {
        a_bar: f64,
        alpha: f64,
    },
    StableTailPlusFinite {
        a_bar: f64,
        alpha: f64,
        #[serde(alias = "A")]
        cut: f64,
        #[serde(default)]
        atoms: Vec<Atom>,
    },
}

impl JumpMeasureSpec {
    pub fn alpha(&self) -> f64 {
        match *self {
            Self::PureStable { alpha, .. } | Self::StableTailPlusFinite { alpha, .. } => alpha,
        }
    }

    pub fn a_bar(&self) -> f64 {
        match *self {
            Self::PureStable { a_bar, .. } | Self::StableTailPlusFinite { a_bar, .. } => a_bar,
        }
    }

    /// Left end of the support of the stable density.
    pub fn stable_cut(&self) -> f64 {
        match *self {
            Self::PureStable { .. } => 0.0,
            Self::StableTailPlusFinite { cut, .. } => cut,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        match self {
            Self::PureStable { .. } => &[],
            Self::StableTailPlusFinite { atoms, .. } => atoms,
        }
    }

    pub(crate) fn set_alpha(&mut self, value: f64) {
        match self {
            Self::PureStable { alpha, .. } | Self::StableTailPlusFinite { alpha, .. } => *alpha = value,
        }
    }

    pub(crate) fn set_a_bar(&mut self, value: f64) {
        match self {
            Self::PureStable { a_bar, .. } | Self::StableTailPlusFinite { a_bar, .. } => *a_bar = value,
        }
    }

    /// Stable mass of `[x, ∞)` restricted to the stable support.
    pub(crate) fn stable_tail(&self, x: f64) -> f64 {
        let lo = x.max(self.stable_cut());
        if lo <= 0.0 {
            return f64::INFINITY;
        }
        self.a_bar() * lo.powf(-self.alpha()) / self.alpha()
    }

    /// `∫_{(lo, hi)} z^p ā z^{-1-α} dz` over the stable support, `p ≠ α`.
    pub(crate) fn stable_moment(&self, p: f64, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.stable_cut());
        if hi <= lo {
            return 0.0;
        }
        let e = p - self.alpha();
        let a = self.a_bar();
        if e.abs() < 1e-12 {
            return a * (hi / lo).ln();
        }
        if lo == 0.0 {
            return a * hi.powf(e) / e;
        }
        a * (hi.powf(e) - lo.powf(e)) / e
    }

    fn validate(&self) -> Validation {
        let alpha = self.alpha();
        let a_bar = self.a_bar();
        finite(alpha, "mu.alpha")?;
        finite(a_bar, "mu.a_bar")?;
        require(alpha > 0.0 && alpha < 2.0, "mu.alpha", "stability index must lie in (0, 2)")?;
        require(a_bar > 0.0, "mu.a_bar", "tail amplitude must be positive")?;
        if let Self::StableTailPlusFinite { cut, atoms, .. } = self {
            finite(*cut, "mu.cut")?;
            require(*cut > 0.0, "mu.cut", "cut point A must be positive")?;
            for (i, atom) in atoms.iter().enumerate() {
                let field = format!("mu.atoms[{i}]");
                require(atom.mass.is_finite() && atom.mass >= 0.0, &field, "atom mass must be finite and non-negative")?;
                require(
                    atom.size > 0.0 && atom.size <= *cut,
                    &field,
                    "atom size must lie in (0, A]",
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingSpec {
    #[serde(default)]
    pub b1: f64,
    #[serde(default)]
    pub b2: f64,
    pub mu: JumpMeasureSpec,
}

/// Distribution of an environment jump `z` (the environment multiplies the
/// population by `e^z`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Point { z: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Upward with probability `p_up` and size `Exp(eta_up)`, otherwise
    /// downward with size `Exp(eta_down)`.
    TwoSidedExponential { p_up: f64, eta_up: f64, eta_down: f64 },
}

impl JumpLaw {
    fn validate(&self, field: &str) -> Validation {
        match *self {
            JumpLaw::Point { z } => finite(z, field),
            JumpLaw::Uniform { lo, hi } => {
                finite(lo, field)?;
                finite(hi, field)?;
                require(lo < hi, field, "uniform law needs lo < hi")
            }
            JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
                require((0.0..=1.0).contains(&p_up), field, "p_up must lie in [0, 1]")?;
                require(eta_up.is_finite() && eta_up > 0.0, field, "eta_up must be positive")?;
                require(eta_down.is_finite() && eta_down > 0.0, field, "eta_down must be positive")
            }
        }
    }

    /// Probability that `z` falls in `(lo, hi]`.
    pub fn probability(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match *self {
            JumpLaw::Point { z } => f64::from(z > lo && z <= hi),
            JumpLaw::Uniform { lo: a, hi: b } => ((hi.min(b) - lo.max(a)) / (b - a)).max(0.0),
            JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
                let up_cdf = |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-eta_up * x).exp() };
                let down_cdf = |x: f64| if x >= 0.0 { 1.0 } else { (eta_down * x).exp() };
                p_up * (up_cdf(hi) - up_cdf(lo)) + (1.0 - p_up) * (down_cdf(hi) - down_cdf(lo))
            }
        }
    }
}

/// One finite-activity component `rate · law` of the environment measure `ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvJump {
    pub rate: f64,
    pub law: JumpLaw,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub nu: Vec<EnvJump>,
}

impl EnvironmentSpec {
    pub fn total_rate(&self) -> f64 {
        self.nu.iter().map(|j| j.rate).sum()
    }

    /// `ν((lo, hi])`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.nu.iter().map(|j| j.rate * j.law.probability(lo, hi)).sum()
    }

    fn validate(&self) -> Validation {
        finite(self.beta, "environment.beta")?;
        finite(self.sigma, "environment.sigma")?;
        require(self.sigma >= 0.0, "environment.sigma", "must be non-negative")?;
        for (i, jump) in self.nu.iter().enumerate() {
            let field = format!("environment.nu[{i}]");
            require(jump.rate.is_finite() && jump.rate >= 0.0, &field, "rate must be finite and non-negative")?;
            jump.law.validate(&field)?;
        }
        Ok(())
    }
}

/// The competition mechanism `b₀(·)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompetitionSpec {
    /// `b0 · y^{q0}` for `y ≥ A`, linear from the origin below `A`.
    PowerLaw {
        b0: f64,
        q0: f64,
        #[serde(alias = "A", default)]
        activation: f64,
    },
    /// Piecewise-linear through `(y, value)` breakpoints starting at `(0, 0)`;
    /// the last segment is extended linearly.
    Tabulated { breakpoints: Vec<(f64, f64)> },
}

impl CompetitionSpec {
    pub const NONE: CompetitionSpec = CompetitionSpec::PowerLaw {
        b0: 0.0,
        q0: 1.0,
        activation: 0.0,
    };

    /// Power envelope `(b0, q0)` with `b₀(y) = b0 y^{q0}` for large `y`.
    pub fn power_envelope(&self) -> (f64, f64) {
        match self {
            CompetitionSpec::PowerLaw { b0, q0, .. } => (*b0, *q0),
            CompetitionSpec::Tabulated { breakpoints } => {
                let n = breakpoints.len();
                let (y0, v0) = breakpoints[n - 2];
                let (y1, v1) = breakpoints[n - 1];
                let slope = (v1 - v0) / (y1 - y0);
                if slope > 0.0 {
                    (slope, 1.0)
                } else {
                    (0.0, 1.0)
                }
            }
        }
    }

    fn validate(&self) -> Validation {
        match *self {
            CompetitionSpec::PowerLaw { b0, q0, activation } => {
                finite(b0, "competition.b0")?;
                finite(q0, "competition.q0")?;
                finite(activation, "competition.A")?;
                require(b0 >= 0.0, "competition.b0", "amplitude must be non-negative")?;
                require(activation >= 0.0, "competition.A", "activation level must be non-negative")?;
                if b0 > 0.0 {
                    require(
                        q0 >= 0.0,
                        "competition.q0",
                        "b0 · y^q0 with q0 < 0 is decreasing, so the competition is not monotone",
                    )?;
                    require(
                        activation > 0.0 || q0 > 0.0,
                        "competition.q0",
                        "with A = 0 the power law needs q0 > 0 to be continuous with b0(0) = 0 (competition monotone at 0)",
                    )?;
                }
                Ok(())
            }
            CompetitionSpec::Tabulated { ref breakpoints } => {
                let field = "competition.breakpoints";
                require(breakpoints.len() >= 2, field, "need at least two breakpoints")?;
                require(breakpoints[0] == (0.0, 0.0), field, "first breakpoint must be (0, 0)")?;
                for w in breakpoints.windows(2) {
                    let ((y0, v0), (y1, v1)) = (w[0], w[1]);
                    require(y1.is_finite() && v1.is_finite(), field, "breakpoints must be finite")?;
                    require(y1 > y0, field, "breakpoint abscissae must be strictly increasing")?;
                    require(v1 >= v0, field, "values must be non-decreasing")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub branching: BranchingSpec,
    #[serde(default)]
    pub environment: EnvironmentSpec,
    #[serde(default = "no_competition")]
    pub competition: CompetitionSpec,
    pub y0: f64,
}

fn no_competition() -> CompetitionSpec {
    CompetitionSpec::NONE
}

impl ModelSpec {
    /// Pure-stable branching, no environment, no competition.
    pub fn pure_stable(a_bar: f64, alpha: f64, y0: f64) -> Self {
        ModelSpec {
            branching: BranchingSpec {
                b1: 0.0,
                b2: 0.0,
                mu: JumpMeasureSpec::PureStable { a_bar, alpha },
            },
            environment: EnvironmentSpec::default(),
            competition: CompetitionSpec::NONE,
            y0,
        }
    }

    pub fn with_competition(mut self, competition: CompetitionSpec) -> Self {
        self.competition = competition;
        self
    }

    pub fn with_environment(mut self, environment: EnvironmentSpec) -> Self {
        self.environment = environment;
        self
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        finite(self.branching.b1, "branching.b1")?;
        finite(self.branching.b2, "branching.b2")?;
        self.branching.mu.validate()?;
        self.environment.validate()?;
        self.competition.validate()?;
        finite(self.y0, "y0")?;
        require(self.y0 >= 0.0, "y0", "initial state must be non-negative")
    }
}

/// Returns the spec unchanged when every invariant holds.
pub fn validate_model(raw: ModelSpec) -> Result<ModelSpec, ValidationError> {
    raw.validate()?;
    Ok(raw)
}

/// Branching mechanism `φ(λ)`.
///
/// The jump integral is taken in closed form for the pure-stable measure
/// (away from `α = 1`, where the two Gamma-function terms cancel) and by
/// quadrature otherwise.
pub fn phi(b: &BranchingSpec, lambda: f64) -> f64 {
    assert!(lambda >= 0.0, "phi requires lambda >= 0");
    if lambda == 0.0 {
        return 0.0;
    }
    let jump = match b.mu {
        JumpMeasureSpec::PureStable { a_bar, alpha } if (alpha - 1.0).abs() > 1e-2 => {
            a_bar * (gamma(-alpha) * lambda.powf(alpha) + lambda / (1.0 - alpha))
        }
        _ => phi_jump_quadrature(&b.mu, lambda),
    };
    -b.b1 * lambda + b.b2 * b.b2 * lambda * lambda + jump
}

/// `∫ (e^{-λz} - 1 + λz 1_{z<1}) μ(dz)` by quadrature.
pub fn phi_jump_quadrature(mu: &JumpMeasureSpec, lambda: f64) -> f64 {
    let tol = Tolerance::new(1e-12, 1e-10);
    let alpha = mu.alpha();
    let a_bar = mu.a_bar();
    let s = mu.stable_cut();
    let compensated = |z: f64| (-lambda * z).exp_m1() + lambda * z;
    let plain = |z: f64| (-lambda * z).exp_m1();

    let mut total = 0.0;
    if s < 1.0 {
        let (head, lo) = if s == 0.0 {
            // second-order Taylor term on (0, z*) in closed form
            let z_star = 1e-6 * (1.0 / lambda).min(1.0);
            let third = -lambda.powi(3) / 6.0 * z_star.powf(3.0 - alpha) / (3.0 - alpha);
            (0.5 * lambda * lambda * z_star.powf(2.0 - alpha) / (2.0 - alpha) + third, z_star)
        } else {
            (0.0, s)
        };
        let body = integrate_power_weight(compensated, lo, 1.0, alpha, tol)
            .map(|e| e.value)
            .unwrap_or_else(|e| not_converged_value(&e));
        total += a_bar * (head + body);
    }
    let tail = integrate_power_tail(plain, s.max(1.0), alpha, tol)
        .map(|e| e.value)
        .unwrap_or_else(|e| not_converged_value(&e));
    total += a_bar * tail;
    for atom in mu.atoms() {
        let z = atom.size;
        total += atom.mass * if z < 1.0 { compensated(z) } else { plain(z) };
    }
    total
}

fn not_converged_value(e: &crate::quadrature::QuadError) -> f64 {
    match e {
        crate::quadrature::QuadError::NotConverged { value, .. } => *value,
        crate::quadrature::QuadError::NonFinite { .. } => f64::NAN,
    }
}

/// `μ([x, ∞))`.
pub fn mu_tail_mass(m: &JumpMeasureSpec, x: f64) -> f64 {
    assert!(x > 0.0, "mu_tail_mass requires x > 0");
    let atoms: f64 = m.atoms().iter().filter(|a| a.size >= x).map(|a| a.mass).sum();
    m.stable_tail(x) + atoms
}

/// `b₀(y)`.
pub fn competition_eval(c: &CompetitionSpec, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    match c {
        CompetitionSpec::PowerLaw { b0, q0, activation } => {
            if *b0 == 0.0 {
                0.0
            } else if y >= *activation {
                b0 * y.powf(*q0)
            } else {
                b0 * activation.powf(*q0) * (y / activation)
            }
        }
        CompetitionSpec::Tabulated { breakpoints } => {
            let idx = breakpoints.partition_point(|&(x, _)| x <= y);
            let i = idx.clamp(1, breakpoints.len() - 1);
            let (x0, v0) = breakpoints[i - 1];
            let (x1, v1) = breakpoints[i];
            v0 + (v1 - v0) * (y - x0) / (x1 - x0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelSpec {
        ModelSpec::pure_stable(1.0, 0.5, 1.0).with_competition(CompetitionSpec::PowerLaw {
            b0: 0.0,
            q0: 2.0,
            activation: 0.0,
        })
    }

    #[test]
    fn accepts_plain_model() {
        assert_eq!(validate_model(base()).unwrap(), base());
    }

    #[test]
    fn rejects_alpha_two() {
        let mut m = base();
        m.branching.mu = JumpMeasureSpec::PureStable { a_bar: 1.0, alpha: 2.0 };
        assert_eq!(validate_model(m).unwrap_err().field, "mu.alpha");
    }

    #[test]
    fn rejects_negative_power_at_origin() {
        let m = base().with_competition(CompetitionSpec::PowerLaw {
            b0: 1.0,
            q0: -1.0,
            activation: 0.0,
        });
        let err = validate_model(m).unwrap_err();
        assert!(err.field.starts_with("competition"));
        assert!(err.reason.contains("monotone"));
    }

    #[test]
    fn rejects_negative_y0_and_rates() {
        let mut m = base();
        m.y0 = -1.0;
        assert_eq!(validate_model(m).unwrap_err().field, "y0");

        let m = base().with_environment(EnvironmentSpec {
            beta: 0.0,
            sigma: 0.0,
            nu: vec![EnvJump {
                rate: -1.0,
                law: JumpLaw::Point { z: 1.0 },
            }],
        });
        assert_eq!(validate_model(m).unwrap_err().field, "environment.nu[0]");
    }

    #[test]
    fn rejects_non_monotone_table_and_misplaced_atoms() {
        let m = base().with_competition(CompetitionSpec::Tabulated {
            breakpoints: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)],
        });
        assert!(validate_model(m).is_err());

        let mut m = base();
        m.branching.mu = JumpMeasureSpec::StableTailPlusFinite {
            a_bar: 1.0,
            alpha: 0.5,
            cut: 1.0,
            atoms: vec![Atom { mass: 1.0, size: 2.0 }],
        };
        assert_eq!(validate_model(m).unwrap_err().field, "mu.atoms[0]");
    }

    #[test]
    fn phi_vanishes_at_zero() {
        let b = BranchingSpec {
            b1: 1.0,
            b2: 0.0,
            mu: JumpMeasureSpec::PureStable { a_bar: 1.0, alpha: 0.5 },
        };
        assert_eq!(phi(&b, 0.0), 0.0);
    }

    #[test]
    fn phi_stable_half() {
        let b = BranchingSpec {
            b1: 0.0,
            b2: 0.0,
            mu: JumpMeasureSpec::PureStable { a_bar: 1.0, alpha: 0.5 },
        };
        let expected = 2.0 - 2.0 * std::f64::consts::PI.sqrt();
        assert!((phi(&b, 1.0) - expected).abs() < 1e-12);
        assert!((phi_jump_quadrature(&b.mu, 1.0) - expected).abs() < 1e-8);
    }

    #[test]
    fn phi_closed_form_agrees_with_quadrature() {
        for &alpha in &[0.2, 0.7, 1.3, 1.8] {
            for &lambda in &[0.1, 1.0, 7.5] {
                let mu = JumpMeasureSpec::PureStable { a_bar: 1.3, alpha };
                let b = BranchingSpec { b1: 0.0, b2: 0.0, mu: mu.clone() };
                let closed = phi(&b, lambda);
                let quad = phi_jump_quadrature(&mu, lambda);
                assert!(
                    (closed - quad).abs() <= 1e-8 * closed.abs().max(1.0),
                    "alpha {alpha} lambda {lambda}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn phi_neveu_case() {
        // ∫ (e^{-λz} - 1 + λz 1_{z<1}) z^{-2} dz = λ ln λ + (γ - 1) λ
        let euler_gamma = 0.577_215_664_901_532_9;
        let b = BranchingSpec {
            b1: 0.0,
            b2: 0.0,
            mu: JumpMeasureSpec::PureStable { a_bar: 1.0, alpha: 1.0 },
        };
        for &lambda in &[0.5f64, 2.0, 10.0] {
            let expected = lambda * lambda.ln() + (euler_gamma - 1.0) * lambda;
            assert!((phi(&b, lambda) - expected).abs() < 1e-8, "{lambda}");
        }
    }

    #[test]
    fn tail_mass_examples() {
        let pure = JumpMeasureSpec::PureStable { a_bar: 1.0, alpha: 0.5 };
        assert!((mu_tail_mass(&pure, 4.0) - 1.0).abs() < 1e-15);
        assert!(mu_tail_mass(&pure, 1e12) < 1e-3);

        let mixed = JumpMeasureSpec::StableTailPlusFinite {
            a_bar: 1.0,
            alpha: 0.5,
            cut: 1.0,
            atoms: vec![Atom { mass: 3.0, size: 0.5 }],
        };
        assert!((mu_tail_mass(&mixed, 0.25) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn tail_mass_one_sided_limits_at_atom() {
        let mixed = JumpMeasureSpec::StableTailPlusFinite {
            a_bar: 1.0,
            alpha: 0.5,
            cut: 1.0,
            atoms: vec![Atom { mass: 3.0, size: 0.5 }],
        };
        let at = mu_tail_mass(&mixed, 0.5);
        let left = mu_tail_mass(&mixed, 0.5 - 1e-12);
        let right = mu_tail_mass(&mixed, 0.5 + 1e-12);
        // [x, ∞) contains the atom for x ≤ 0.5 only
        assert_eq!(at, left);
        assert!((at - right - 3.0).abs() < 1e-12);
    }

    #[test]
    fn competition_examples() {
        let c = CompetitionSpec::PowerLaw {
            b0: 1.0,
            q0: 2.0,
            activation: 0.0,
        };
        assert_eq!(competition_eval(&c, 3.0), 9.0);
        assert_eq!(competition_eval(&c, 0.0), 0.0);
        let c = CompetitionSpec::PowerLaw {
            b0: 2.0,
            q0: 1.5,
            activation: 1.0,
        };
        assert!((competition_eval(&c, 0.5) - 1.0).abs() < 1e-15);
        let t = CompetitionSpec::Tabulated {
            breakpoints: vec![(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)],
        };
        assert_eq!(competition_eval(&t, 0.0), 0.0);
        assert!((competition_eval(&t, 2.0) - 2.5).abs() < 1e-15);
        assert!((competition_eval(&t, 5.0) - 4.0).abs() < 1e-15);
    }
}

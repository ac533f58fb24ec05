//! Regime classification from the stable tail index, the tail amplitude and
//! the power-law competition.
//!
//! Decision table, applied in order, for a stable tail `ā z^{-1-α}` and
//! competition `b₀(y) = b0 y^{q0}` beyond the activation level:
//!
//! | condition                                   | verdict       | clause             |
//! |---------------------------------------------|---------------|--------------------|
//! | `α ≥ 1`                                     | non-explosive | Corollary 3.3 (pure stable) / Theorem 3.2(i) |
//! | `α < 1`, `q0 > 2-α`, `b0 > 0`               | non-explosive | Theorem 3.2(ii)    |
//! | `α < 1`, `q0 = 2-α`, `b0 ≥ ā c_{α,0}`       | non-explosive | Theorem 3.2(iii)   |
//! | `α < 1`, `b0 = 0`                           | explodes w.p.p. | Theorem 3.1(i)   |
//! | `α < 1`, `q0 < 2-α`, `b0 > 0`               | explodes w.p.p. | Theorem 3.1(ii)  |
//! | `α < 1`, `q0 = 2-α`, `0 < b0 < ā c_{α,0}`   | explodes w.p.p. | Theorem 3.1(iii) |
//!
//! For `α < 1` the rows cover every `(q0, b0)`, so a power-law model is never
//! indeterminate. Tabulated competition is reported as indeterminate.
//!
//! `ExplodesWPP` means explosion with positive probability from large enough
//! initial states; it says nothing about almost-sure explosion or about a
//! specific threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::special::c_coeff_reflection;
use crate::model::{CompetitionSpec, JumpMeasureSpec, ModelSpec, ValidationError};

/// Tolerance used when testing `q0 = 2 - α`.
pub const CRITICAL_EXPONENT_TOL: f64 = 1e-12;
/// Relative tolerance used when testing `b0 = ā c_{α,0}`.
pub const CRITICAL_AMPLITUDE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    ExplodesWPP,
    NonExplosive,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ExplodesWPP => "ExplodesWPP",
            Verdict::NonExplosive => "NonExplosive",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    Cor33,
    Thm32i,
    Thm32ii,
    Thm32iii,
    Thm31i,
    Thm31ii,
    Thm31iii,
    TabulatedCompetition,
}

impl Clause {
    pub fn tag(self) -> &'static str {
        match self {
            Clause::Cor33 => "cor3.3",
            Clause::Thm32i => "thm3.2(i)",
            Clause::Thm32ii => "thm3.2(ii)",
            Clause::Thm32iii => "thm3.2(iii)",
            Clause::Thm31i => "thm3.1(i)",
            Clause::Thm31ii => "thm3.1(ii)",
            Clause::Thm31iii => "thm3.1(iii)",
            Clause::TabulatedCompetition => "tabulated",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Clause::Cor33 => "Corollary 3.3",
            Clause::Thm32i => "Theorem 3.2(i)",
            Clause::Thm32ii => "Theorem 3.2(ii)",
            Clause::Thm32iii => "Theorem 3.2(iii)",
            Clause::Thm31i => "Theorem 3.1(i)",
            Clause::Thm31ii => "Theorem 3.1(ii)",
            Clause::Thm31iii => "Theorem 3.1(iii)",
            Clause::TabulatedCompetition => "no power-law competition bound",
        }
    }

    pub fn verdict(self) -> Verdict {
        match self {
            Clause::Cor33 | Clause::Thm32i | Clause::Thm32ii | Clause::Thm32iii => Verdict::NonExplosive,
            Clause::Thm31i | Clause::Thm31ii | Clause::Thm31iii => Verdict::ExplodesWPP,
            Clause::TabulatedCompetition => Verdict::Indeterminate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub verdict: Verdict,
    pub clause: Clause,
    /// `ā c_{α,0}` when `α < 1`.
    pub boundary: Option<f64>,
    pub assumptions_used: Vec<String>,
}

impl std::fmt::Display for RegimeVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.verdict, self.clause.label())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),
}

/// Classifies a validated model.
pub fn classify_regime(m: &ModelSpec) -> Result<RegimeVerdict, ClassifyError> {
    m.validate()?;
    let mu = &m.branching.mu;
    let alpha = mu.alpha();
    let a_bar = mu.a_bar();
    let mut assumptions = Vec::new();
    let tail_note = match mu {
        JumpMeasureSpec::PureStable { .. } => {
            format!("mu(dz) = {a_bar} z^(-1-{alpha}) dz on (0, inf): tail bounded above and below with the same constants")
        }
        JumpMeasureSpec::StableTailPlusFinite { cut, .. } => {
            format!("mu(dz) = {a_bar} z^(-1-{alpha}) dz on ({cut}, inf): tail bounded above and below beyond A = {cut}")
        }
    };
    assumptions.push(tail_note);

    let boundary = (alpha < 1.0).then(|| a_bar * c_coeff_reflection(alpha).expect("alpha in (0, 1)"));

    if alpha >= 1.0 {
        let clause = match mu {
            JumpMeasureSpec::PureStable { .. } => Clause::Cor33,
            JumpMeasureSpec::StableTailPlusFinite { .. } => Clause::Thm32i,
        };
        assumptions.push("alpha >= 1: competition not needed".into());
        return Ok(finish(clause, boundary, assumptions));
    }

    let (b0, q0, activation) = match m.competition {
        CompetitionSpec::PowerLaw { b0, q0, activation } => (b0, q0, activation),
        CompetitionSpec::Tabulated { .. } => {
            assumptions.push("tabulated competition: no global power-law bound available".into());
            return Ok(finish(Clause::TabulatedCompetition, boundary, assumptions));
        }
    };
    let critical = 2.0 - alpha;
    let boundary_value = boundary.expect("alpha < 1");
    assumptions.push(format!(
        "b0(y) = {b0} y^{q0} for y >= {activation}: competition bounded above and below by the same power"
    ));

    let exponent_is_critical = (q0 - critical).abs() <= CRITICAL_EXPONENT_TOL;
    let at_or_above_boundary = b0 >= boundary_value * (1.0 - CRITICAL_AMPLITUDE_RTOL);

    let clause = if b0 > 0.0 && q0 > critical && !exponent_is_critical {
        Clause::Thm32ii
    } else if b0 > 0.0 && exponent_is_critical && at_or_above_boundary {
        Clause::Thm32iii
    } else if b0 == 0.0 {
        Clause::Thm31i
    } else if q0 < critical {
        Clause::Thm31ii
    } else {
        Clause::Thm31iii
    };
    Ok(finish(clause, boundary, assumptions))
}

fn finish(clause: Clause, boundary: Option<f64>, assumptions_used: Vec<String>) -> RegimeVerdict {
    RegimeVerdict {
        verdict: clause.verdict(),
        clause,
        boundary,
        assumptions_used,
    }
}

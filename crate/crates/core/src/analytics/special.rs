//! Gamma/Beta functions and the `c_{α,δ}` coefficient.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{name} = {value} is outside the domain {domain}")]
pub struct DomainError {
    pub name: &'static str,
    pub value: f64,
    pub domain: &'static str,
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `B(p, q) = Γ(p) Γ(q) / Γ(p + q)`.
pub fn beta_fn(p: f64, q: f64) -> Result<f64, DomainError> {
    if !(p > 0.0) {
        return Err(DomainError { name: "p", value: p, domain: "(0, ∞)" });
    }
    if !(q > 0.0) {
        return Err(DomainError { name: "q", value: q, domain: "(0, ∞)" });
    }
    if p + q < 170.0 {
        Ok(gamma(p) * gamma(q) / gamma(p + q))
    } else {
        Ok((libm::lgamma(p) + libm::lgamma(q) - libm::lgamma(p + q)).exp())
    }
}

/// `c_{α,δ} = α^{-1} B(α + δ, 1 - α)` for `α ∈ (0, 1)`, `δ ≥ 0`.
pub fn c_coeff(alpha: f64, delta: f64) -> Result<f64, DomainError> {
    check_alpha(alpha)?;
    if !(delta >= 0.0) {
        return Err(DomainError { name: "delta", value: delta, domain: "[0, ∞)" });
    }
    Ok(beta_fn(alpha + delta, 1.0 - alpha)? / alpha)
}

/// `c_{α,0}` through the reflection formula, `π / (α sin(απ))`.
pub fn c_coeff_reflection(alpha: f64) -> Result<f64, DomainError> {
    check_alpha(alpha)?;
    Ok(PI / (alpha * (alpha * PI).sin()))
}

fn check_alpha(alpha: f64) -> Result<(), DomainError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(DomainError { name: "alpha", value: alpha, domain: "(0, 1)" })
    }
}

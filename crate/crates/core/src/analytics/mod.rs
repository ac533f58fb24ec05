//! Special-function coefficients, the fractional integral identities behind
//! the explosion/nonexplosion thresholds, and the generator `L`.
//!
//! The two identities, for `y, δ > 0` and `α ∈ (0, 1)`:
//!
//! ```text
//! ∫₀^∞ [(y+z)^{-δ} - y^{-δ}] z^{-1-α} dz = -δ c_{α,δ} y^{-α-δ}
//! ∫₀^∞ [ln(y+z) - ln y]      z^{-1-α} dz =    c_{α,0} y^{-α}
//! ```
//!
//! with `c_{α,δ} = α^{-1} B(α+δ, 1-α)`. [`lemma_power_lhs`] and
//! [`lemma_log_lhs`] compute the left-hand sides by quadrature so they can
//! be checked against the closed forms.

pub mod generator;
pub mod special;
pub mod test_function;

pub use generator::{generator_apply, generator_truncated, GeneratorError};
pub use special::{beta_fn, c_coeff, c_coeff_reflection, DomainError};
pub use test_function::{FamilySpec, TestFunction, TestFunctionError};

use thiserror::Error;

use crate::quadrature::{integrate_power_tail, integrate_power_weight, QuadError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

const IDENTITY_TOL: Tolerance = Tolerance {
    abs: 1e-15,
    rel: 1e-12,
    max_intervals: 4000,
};

/// Split point of the scaled integrals below which a cubic Taylor expansion
/// of the integrand is integrated exactly.
const TAYLOR_CUT: f64 = 1e-4;

fn check_identity_args(y: f64, alpha: f64) -> Result<(), DomainError> {
    if !(y > 0.0) {
        return Err(DomainError { name: "y", value: y, domain: "(0, ∞)" });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DomainError { name: "alpha", value: alpha, domain: "(0, 1)" });
    }
    Ok(())
}

/// `∫_0^{u*} (c1 u + c2 u² + c3 u³) u^{-1-α} du`.
fn taylor_head(alpha: f64, c: [f64; 3]) -> f64 {
    let u = TAYLOR_CUT;
    c.iter()
        .enumerate()
        .map(|(i, ci)| {
            let p = (i + 1) as f64 - alpha;
            ci * u.powf(p) / p
        })
        .sum()
}

/// Quadrature value of `∫₀^∞ [(y+z)^{-δ} - y^{-δ}] z^{-1-α} dz`.
///
/// With `z = y u` the integral is `y^{-α-δ} ∫₀^∞ [(1+u)^{-δ} - 1] u^{-1-α} du`;
/// the `u` integral is split at `1` and handled by a Taylor head on `(0, u*)`.
pub fn lemma_power_lhs(y: f64, delta: f64, alpha: f64) -> Result<f64, IdentityError> {
    check_identity_args(y, alpha)?;
    if !(delta > 0.0) {
        return Err(DomainError { name: "delta", value: delta, domain: "(0, ∞)" }.into());
    }
    let f = |u: f64| (-delta * u.ln_1p()).exp_m1();
    let head = taylor_head(
        alpha,
        [
            -delta,
            0.5 * delta * (delta + 1.0),
            -delta * (delta + 1.0) * (delta + 2.0) / 6.0,
        ],
    );
    let body = integrate_power_weight(f, TAYLOR_CUT, 1.0, alpha, IDENTITY_TOL)?;
    let tail = integrate_power_tail(f, 1.0, alpha, IDENTITY_TOL)?;
    Ok(y.powf(-alpha - delta) * (head + body.value + tail.value))
}

/// Quadrature value of `∫₀^∞ [ln(y+z) - ln y] z^{-1-α} dz`.
pub fn lemma_log_lhs(y: f64, alpha: f64) -> Result<f64, IdentityError> {
    check_identity_args(y, alpha)?;
    let f = |u: f64| u.ln_1p();
    let head = taylor_head(alpha, [1.0, -0.5, 1.0 / 3.0]);
    let body = integrate_power_weight(f, TAYLOR_CUT, 1.0, alpha, IDENTITY_TOL)?;
    let tail = integrate_power_tail(f, 1.0, alpha, IDENTITY_TOL)?;
    Ok(y.powf(-alpha) * (head + body.value + tail.value))
}

/// Right-hand side `-δ c_{α,δ} y^{-α-δ}`.
pub fn lemma_power_rhs(y: f64, delta: f64, alpha: f64) -> Result<f64, DomainError> {
    Ok(-delta * c_coeff(alpha, delta)? * y.powf(-alpha - delta))
}

/// Right-hand side `c_{α,0} y^{-α}`.
pub fn lemma_log_rhs(y: f64, alpha: f64) -> Result<f64, DomainError> {
    Ok(c_coeff(alpha, 0.0)? * y.powf(-alpha))
}

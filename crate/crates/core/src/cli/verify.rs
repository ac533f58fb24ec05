//! Built-in numerical self-checks behind `verify-identities`.

use std::f64::consts::PI;

use crate::analytics::{
    beta_fn, c_coeff, c_coeff_reflection, generator_apply, lemma_log_lhs, lemma_log_rhs, lemma_power_lhs,
    lemma_power_rhs, TestFunction,
};
use crate::model::ModelSpec;

pub const IDENTITY_ALPHAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const IDENTITY_DELTAS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const IDENTITY_YS: [f64; 4] = [0.5, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn worst<I: IntoIterator<Item = Result<f64, String>>>(errors: I) -> Result<f64, String> {
    let mut m: f64 = 0.0;
    for e in errors {
        m = m.max(e?);
    }
    Ok(m)
}

fn check(name: &'static str, tol: f64, err: Result<f64, String>, what: &str) -> Check {
    match err {
        Ok(e) => Check {
            name,
            passed: e <= tol,
            detail: format!("{what}: max error {e:.2e} (tol {tol:.0e})"),
        },
        Err(msg) => Check {
            name,
            passed: false,
            detail: msg,
        },
    }
}

pub fn run_identity_checks() -> Vec<Check> {
    let mut out = Vec::new();

    let power = worst(IDENTITY_ALPHAS.iter().flat_map(|&a| {
        IDENTITY_DELTAS.iter().flat_map(move |&d| {
            IDENTITY_YS.iter().map(move |&y| {
                let lhs = lemma_power_lhs(y, d, a).map_err(|e| e.to_string())?;
                let rhs = lemma_power_rhs(y, d, a).map_err(|e| e.to_string())?;
                Ok(rel(lhs, rhs))
            })
        })
    }));
    out.push(check("power-identity", 1e-8, power, "80 (alpha, delta, y) points, relative"));

    let log = worst(IDENTITY_ALPHAS.iter().flat_map(|&a| {
        IDENTITY_YS.iter().map(move |&y| {
            let lhs = lemma_log_lhs(y, a).map_err(|e| e.to_string())?;
            let rhs = lemma_log_rhs(y, a).map_err(|e| e.to_string())?;
            Ok(rel(lhs, rhs))
        })
    }));
    out.push(check("log-identity", 1e-8, log, "20 (alpha, y) points, relative"));

    let reflection = worst((1..=50).map(|i| {
        let a = i as f64 / 51.0;
        let b = c_coeff(a, 0.0).map_err(|e| e.to_string())?;
        let r = c_coeff_reflection(a).map_err(|e| e.to_string())?;
        Ok(rel(b, r))
    }));
    out.push(check("c-reflection", 1e-12, reflection, "50 values of alpha, relative"));

    let examples = worst([
        beta_fn(0.5, 0.5).map(|v| rel(v, PI)).map_err(|e| e.to_string()),
        beta_fn(2.0, 3.0).map(|v| rel(v, 1.0 / 12.0)).map_err(|e| e.to_string()),
        c_coeff(0.5, 0.0).map(|v| rel(v, 2.0 * PI)).map_err(|e| e.to_string()),
        c_coeff(0.5, 1.0).map(|v| rel(v, PI)).map_err(|e| e.to_string()),
    ]);
    out.push(check("beta-and-c-values", 1e-12, examples, "B(1/2,1/2), B(2,3), c(1/2,0), c(1/2,1), relative"));

    let linear = generator_apply(&ModelSpec::pure_stable(1.0, 1.5, 1.0), &TestFunction::linear(), 1.0)
        .map(|v| (v - 2.0).abs())
        .map_err(|e| e.to_string());
    out.push(check("generator-linear", 1e-6, linear, "alpha = 1.5, y = 1, absolute"));

    let shifted = generator_apply(&ModelSpec::pure_stable(1.0, 0.5, 1.0), &TestFunction::shifted_inverse(), 1.0)
        .map(|v| (v - (PI * 2f64.powf(-1.5) - 0.5)).abs())
        .map_err(|e| e.to_string());
    out.push(check("generator-shifted-inverse", 1e-6, shifted, "alpha = 0.5, y = 1, absolute"));

    out
}

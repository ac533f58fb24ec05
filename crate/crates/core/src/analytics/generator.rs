//! Numerical evaluation of the generator `L` and its truncated variant `L_k`.

use thiserror::Error;

use super::test_function::TestFunction;
use crate::model::{competition_eval, EnvironmentSpec, JumpLaw, JumpMeasureSpec, ModelSpec};
use crate::quadrature::{
    integrate, integrate_exponential_tail, integrate_power_tail, integrate_power_weight, Estimate, QuadError,
    Tolerance,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("tail integral diverges at y = {y}: increments grow like z^{growth:.3} against a z^-(1+{alpha}) tail")]
    TailDivergence { y: f64, growth: f64, alpha: f64 },
    #[error("generator needs y > 0, got {0}")]
    Domain(f64),
    #[error("truncation level k must be >= 2, got {0}")]
    Truncation(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Quadrature tolerance for the generator integrals.
const TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-11,
    max_intervals: 4000,
};

/// `L g(y)`.
pub fn generator_apply(m: &ModelSpec, g: &TestFunction, y: f64) -> Result<f64, GeneratorError> {
    evaluate(m, g, y, None)
}

/// `L_k g(y)`: environment jumps with `z > k` are dropped.
pub fn generator_truncated(m: &ModelSpec, g: &TestFunction, y: f64, k: f64) -> Result<f64, GeneratorError> {
    if !(k >= 2.0) {
        return Err(GeneratorError::Truncation(k));
    }
    evaluate(m, g, y, Some(k))
}

fn evaluate(m: &ModelSpec, g: &TestFunction, y: f64, k: Option<f64>) -> Result<f64, GeneratorError> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(GeneratorError::Domain(y));
    }
    let (_, g1, g2) = g.eval(y);
    let env = &m.environment;
    let b = &m.branching;
    let drift = (env.beta + b.b1) * y - competition_eval(&m.competition, y);
    let diffusion = 0.5 * env.sigma * env.sigma * y * y + b.b2 * b.b2 * y;

    let mut total = 0.0;
    if g1 != 0.0 {
        total += drift * g1;
    }
    if g2 != 0.0 {
        total += diffusion * g2;
    }
    total += y * branching_integral(&b.mu, g, y)?.value;
    total += environment_integral(env, g, y, k)?.value;
    Ok(total)
}

/// Log-slope of `|g(y + z) - g(y)|` between the two largest probes.
fn tail_growth(g: &TestFunction, y: f64) -> f64 {
    let base = y.max(1.0);
    let probes = [1e6, 1e7, 1e8].map(|s| g.increment(y, s * base).abs());
    if probes.iter().any(|p| !p.is_finite()) {
        return f64::INFINITY;
    }
    if probes[2] == 0.0 {
        return f64::NEG_INFINITY;
    }
    if probes[1] == 0.0 {
        return f64::INFINITY;
    }
    (probes[2] / probes[1]).log10()
}

/// `∫₀¹ [g(y+z) - g(y) - g'(y) z] μ(dz) + ∫₁^∞ [g(y+z) - g(y)] μ(dz)`.
pub fn branching_integral(mu: &JumpMeasureSpec, g: &TestFunction, y: f64) -> Result<Estimate, GeneratorError> {
    let alpha = mu.alpha();
    let a_bar = mu.a_bar();

    let growth = tail_growth(g, y);
    if growth >= alpha - 1e-6 {
        return Err(GeneratorError::TailDivergence { y, growth, alpha });
    }

    let (_, g1, g2) = g.eval(y);
    let compensated = |z: f64| g.increment(y, z) - g1 * z;
    let plain = |z: f64| g.increment(y, z);
    let s = mu.stable_cut();

    let mut est = Estimate::ZERO;
    if s < 1.0 {
        let (head, lo) = if s == 0.0 {
            // below z* the integrand is replaced by ½ z² g''(y)
            let z_star = 1e-6 * y.min(1.0);
            (0.5 * g2 * z_star.powf(2.0 - alpha) / (2.0 - alpha), z_star)
        } else {
            (0.0, s)
        };
        let body = integrate_power_weight(compensated, lo, 1.0, alpha, TOL)?;
        est = est
            + Estimate {
                value: head,
                ..Estimate::ZERO
            }
            + body;
    }
    est = est + integrate_power_tail(plain, s.max(1.0), alpha, TOL)?;
    est = est.scale(a_bar);

    for atom in mu.atoms() {
        let z = atom.size;
        let v = if z < 1.0 { compensated(z) } else { plain(z) };
        est.value += atom.mass * v;
    }
    Ok(est)
}

/// Environment part of the generator; `k` truncates jumps with `z > k`.
pub fn environment_integral(
    env: &EnvironmentSpec,
    g: &TestFunction,
    y: f64,
    k: Option<f64>,
) -> Result<Estimate, GeneratorError> {
    let g1 = g.d1(y);
    let upper = k.unwrap_or(f64::INFINITY);
    let integrand = |z: f64| {
        if z > upper {
            0.0
        } else if (-1.0..=1.0).contains(&z) {
            g.ratio_increment(y, z) - y * z.exp_m1() * g1
        } else {
            g.ratio_increment(y, z)
        }
    };

    let mut est = Estimate::ZERO;
    for jump in &env.nu {
        if jump.rate == 0.0 {
            continue;
        }
        let e = law_expectation(&jump.law, &integrand, upper)?;
        est = est + e.scale(jump.rate);
    }
    Ok(est)
}

/// `E[f(Z)]` for `Z ~ law`, with `f` vanishing above `upper`; pieces are split
/// at `±1` where the integrand switches between compensated and plain forms.
pub(crate) fn law_expectation<F: Fn(f64) -> f64>(law: &JumpLaw, f: &F, upper: f64) -> Result<Estimate, QuadError> {
    match *law {
        JumpLaw::Point { z } => Ok(Estimate {
            value: f(z),
            ..Estimate::ZERO
        }),
        JumpLaw::Uniform { lo, hi } => {
            let density = 1.0 / (hi - lo);
            let hi = hi.min(upper);
            let mut cuts = vec![lo];
            cuts.extend([-1.0, 1.0].into_iter().filter(|&c| c > lo && c < hi));
            cuts.push(hi);
            let mut est = Estimate::ZERO;
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    est = est + integrate(f, w[0], w[1], TOL)?;
                }
            }
            Ok(est.scale(density))
        }
        JumpLaw::TwoSidedExponential { p_up, eta_up, eta_down } => {
            let mut est = Estimate::ZERO;
            if p_up > 0.0 {
                let dens = |z: f64| eta_up * (-eta_up * z).exp();
                let top = upper.min(1.0);
                if top > 0.0 {
                    est = est + integrate(|z| f(z) * dens(z), 0.0, top, TOL)?.scale(p_up);
                }
                if upper > 1.0 {
                    let mass_above_one = (-eta_up).exp();
                    let tail = if upper.is_finite() {
                        integrate(|z| f(z) * dens(z), 1.0, upper, TOL)?
                    } else {
                        integrate_exponential_tail(f, 1.0, eta_up, TOL)?.scale(mass_above_one)
                    };
                    est = est + tail.scale(p_up);
                }
            }
            if p_up < 1.0 {
                let q = 1.0 - p_up;
                let dens = |z: f64| eta_down * (eta_down * z).exp();
                est = est + integrate(|z| f(z) * dens(z), -1.0, 0.0, TOL)?.scale(q);
                let mass_below = (-eta_down).exp();
                est = est + integrate_exponential_tail(|z| f(-z), 1.0, eta_down, TOL)?.scale(q * mass_below);
            }
            Ok(est)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, EnvJump};
    use std::f64::consts::PI;

    #[test]
    fn constant_function_gives_zero() {
        let m = ModelSpec::pure_stable(1.0, 0.5, 1.0).with_environment(EnvironmentSpec {
            beta: 0.3,
            sigma: 0.7,
            nu: vec![EnvJump {
                rate: 1.0,
                law: JumpLaw::Uniform { lo: -2.0, hi: 3.0 },
            }],
        });
        let g = TestFunction::constant(4.2);
        for y in [0.1, 1.0, 50.0] {
            assert_eq!(generator_apply(&m, &g, y).unwrap(), 0.0);
        }
    }

    #[test]
    fn linear_function_heavy_tail() {
        let m = ModelSpec::pure_stable(1.0, 1.5, 1.0);
        let v = generator_apply(&m, &TestFunction::linear(), 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn linear_function_diverges_for_small_alpha() {
        let m = ModelSpec::pure_stable(1.0, 0.5, 1.0);
        let err = generator_apply(&m, &TestFunction::linear(), 1.0).unwrap_err();
        assert!(matches!(err, GeneratorError::TailDivergence { .. }));
    }

    #[test]
    fn shifted_inverse_point_value() {
        let m = ModelSpec::pure_stable(1.0, 0.5, 1.0);
        let v = generator_apply(&m, &TestFunction::shifted_inverse(), 1.0).unwrap();
        let expected = PI * 2f64.powf(-1.5) - 0.5;
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn truncation_removes_large_environment_jump() {
        let m = ModelSpec::pure_stable(1.0, 0.5, 1.0).with_environment(EnvironmentSpec {
            beta: 0.0,
            sigma: 0.0,
            nu: vec![EnvJump {
                rate: 1.0,
                law: JumpLaw::Point { z: 5.0 },
            }],
        });
        let g = TestFunction::exp_inverse_power(0.3).unwrap();
        let y = 2.0;
        let full = generator_apply(&m, &g, y).unwrap();
        let cut = generator_truncated(&m, &g, y, 2.0).unwrap();
        let excluded = g.value(y * 5f64.exp()) - g.value(y);
        assert!((full - cut - excluded).abs() < 1e-12);
        assert!(generator_truncated(&m, &g, y, 1.5).is_err());
    }

    #[test]
    fn atoms_enter_as_finite_sums() {
        // stable part beyond A = 2 plus one compensated atom and one plain atom
        let mu = JumpMeasureSpec::StableTailPlusFinite {
            a_bar: 1.0,
            alpha: 0.5,
            cut: 2.0,
            atoms: vec![Atom { mass: 2.0, size: 0.5 }, Atom { mass: 1.0, size: 1.5 }],
        };
        let g = TestFunction::shifted_inverse();
        let y = 1.0;
        let est = branching_integral(&mu, &g, y).unwrap();
        let g1 = g.d1(y);
        let atoms = 2.0 * (g.increment(y, 0.5) - 0.5 * g1) + g.increment(y, 1.5);
        // closed form of ∫_2^∞ [g(1+z) - g(1)] z^{-1.5} dz via direct quadrature
        let tail = integrate(
            |z: f64| if z > 0.0 { g.increment(y, z) * z.powf(-1.5) } else { 0.0 },
            2.0,
            1e7,
            Tolerance::new(1e-12, 1e-12),
        )
        .unwrap()
        .value
            + 0.5 * 2.0 * 1e7f64.powf(-0.5); // remainder, g increment ≈ 1/2 there
        assert!((est.value - atoms - tail).abs() < 1e-6, "{} vs {}", est.value, atoms + tail);
    }
}

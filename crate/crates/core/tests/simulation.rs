use std::f64::consts::PI;

use cble_lab::lyapunov::{explosion_prob_lower_bound, scan_explosion_criterion, GridSpec};
use cble_lab::analytics::TestFunction;
use cble_lab::model::{BranchingSpec, CompetitionSpec, EnvJump, EnvironmentSpec, JumpLaw, JumpMeasureSpec, ModelSpec};
use cble_lab::montecarlo::estimate_explosion_prob;
use cble_lab::simulate::{hitting_times, simulate_path, simulate_truncated, SimConfig};

fn battery() -> Vec<ModelSpec> {
    let critical = CompetitionSpec::PowerLaw {
        b0: 2.0 * PI,
        q0: 1.5,
        activation: 1.0,
    };
    let env = EnvironmentSpec {
        beta: 0.2,
        sigma: 0.5,
        nu: vec![
            EnvJump {
                rate: 0.5,
                law: JumpLaw::Uniform { lo: -3.0, hi: 2.0 },
            },
            EnvJump {
                rate: 0.3,
                law: JumpLaw::TwoSidedExponential {
                    p_up: 0.3,
                    eta_up: 2.0,
                    eta_down: 1.0,
                },
            },
        ],
    };
    vec![
        ModelSpec::pure_stable(1.0, 0.5, 2.0),
        ModelSpec::pure_stable(1.0, 0.5, 2.0).with_competition(critical.clone()),
        ModelSpec::pure_stable(1.0, 1.5, 2.0).with_environment(env.clone()),
        ModelSpec {
            branching: BranchingSpec {
                b1: -1.0,
                b2: 0.8,
                mu: JumpMeasureSpec::StableTailPlusFinite {
                    a_bar: 0.5,
                    alpha: 1.2,
                    cut: 0.5,
                    atoms: vec![cble_lab::model::Atom { mass: 1.0, size: 0.2 }],
                },
            },
            environment: env,
            competition: CompetitionSpec::PowerLaw {
                b0: 1.0,
                q0: 2.0,
                activation: 0.0,
            },
            y0: 2.0,
        },
    ]
}

#[test]
fn records_are_valid_across_the_battery() {
    for (i, m) in battery().into_iter().enumerate() {
        for seed in 0..10 {
            let cfg = SimConfig::new(1e-3, 1e-2, 1e6, 2.0, seed);
            let p = simulate_path(&m, &cfg).unwrap();
            p.check(cfg.k_explode).unwrap_or_else(|e| panic!("model {i}, seed {seed}: {e}"));
            assert_eq!(p, simulate_path(&m, &cfg).unwrap());
        }
    }
}

#[test]
fn truncation_without_large_jumps_changes_nothing() {
    let mut models = battery();
    models[0].environment.nu.clear();
    for seed in 0..10 {
        let cfg = SimConfig::new(1e-3, 1e-2, 1e6, 2.0, seed);
        for m in &models[..3] {
            let full = simulate_path(m, &cfg).unwrap();
            let mut cut = simulate_truncated(m, &cfg, 1e6).unwrap();
            assert_eq!(cut.truncation_level, Some(1e6));
            cut.truncation_level = None;
            assert_eq!(full, cut);
        }
        let mut cut = simulate_truncated(&models[0], &cfg, 2.0).unwrap();
        cut.truncation_level = None;
        assert_eq!(simulate_path(&models[0], &cfg).unwrap(), cut);
    }
}

#[test]
fn watched_levels_agree_with_samples() {
    let m = ModelSpec {
        branching: BranchingSpec {
            b1: 1.0,
            b2: 0.0,
            mu: JumpMeasureSpec::PureStable { a_bar: 1.0, alpha: 0.5 },
        },
        environment: EnvironmentSpec::default(),
        competition: CompetitionSpec::PowerLaw {
            b0: 1.0,
            q0: 2.0,
            activation: 0.0,
        },
        y0: 0.5,
    };
    let mut cfg = SimConfig::new(1e-3, 1.0, 1e8, 3.0, 0);
    cfg.branching_jumps = false;
    cfg.watch_levels = vec![0.75];
    let p = simulate_path(&m, &cfg).unwrap();
    let (_, plus) = hitting_times(&p, 0.75);
    assert!((plus.unwrap() - 3f64.ln()).abs() < 2e-3);
    cfg.watch_levels.clear();
    let q = simulate_path(&m, &cfg).unwrap();
    let (_, plus_sampled) = hitting_times(&q, 0.75);
    assert!((plus_sampled.unwrap() - 3f64.ln()).abs() <= cfg.record_grid);
}

#[test]
fn refinement_keeps_the_explosion_frequency() {
    let m = ModelSpec::pure_stable(1.0, 0.5, 2.0).with_competition(CompetitionSpec::PowerLaw {
        b0: 3.0,
        q0: 1.5,
        activation: 1.0,
    });
    let coarse = SimConfig::new(2e-3, 2e-2, 1e8, 5.0, 17);
    let fine = SimConfig::new(1e-3, 1e-2, 1e8, 5.0, 18);
    let n = 1000;
    let a = estimate_explosion_prob(&m, &coarse, n).unwrap();
    let b = estimate_explosion_prob(&m, &fine, n).unwrap();
    let se = (a.estimate * (1.0 - a.estimate) / n as f64 + b.estimate * (1.0 - b.estimate) / n as f64).sqrt();
    assert!((a.estimate - b.estimate).abs() < 2.0 * se.max(1.0 / n as f64), "{} vs {} (se {se})", a.estimate, b.estimate);
}

#[test]
fn doubling_paths_narrows_the_interval() {
    let m = ModelSpec::pure_stable(1.0, 0.5, 1.0).with_competition(CompetitionSpec::PowerLaw {
        b0: 3.0,
        q0: 1.5,
        activation: 1.0,
    });
    let cfg = SimConfig::new(1e-3, 1e-2, 1e8, 5.0, 4);
    let a = estimate_explosion_prob(&m, &cfg, 400).unwrap();
    let b = estimate_explosion_prob(&m, &cfg, 800).unwrap();
    let ratio = (b.ci_high - b.ci_low) / (a.ci_high - a.ci_low);
    assert!(ratio > 0.6 && ratio < 0.85, "width ratio {ratio} ({} / {})", a.estimate, b.estimate);
}

#[test]
fn estimate_respects_the_certified_lower_bound() {
    let m = ModelSpec::pure_stable(1.0, 0.5, 1e3);
    let cert = scan_explosion_criterion(&m, &[0.05, 0.1, 0.2], &GridSpec::new(1.0, 1e6)).unwrap();
    assert!(m.y0 > cert.y_bar);
    let g = TestFunction::exp_inverse_power(cert.delta).unwrap();
    let bound = explosion_prob_lower_bound(&g, m.y0, cert.y_bar).unwrap();
    let r = estimate_explosion_prob(&m, &SimConfig::new(1e-3, 1e-2, 1e8, 20.0, 8), 200).unwrap();
    assert!(r.estimate + 2.0 * r.halfwidth() >= bound, "{} vs {bound}", r.estimate);
}

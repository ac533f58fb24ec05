//! A few paths in a random environment, with level crossings and the jump log.

use cble_lab::model::{EnvJump, EnvironmentSpec, JumpLaw, ModelSpec};
use cble_lab::simulate::{hitting_times, simulate_path, SimConfig};

fn main() {
    let m = ModelSpec::pure_stable(1.0, 1.5, 1.0).with_environment(EnvironmentSpec {
        beta: 0.0,
        sigma: 0.3,
        nu: vec![EnvJump {
            rate: 0.5,
            law: JumpLaw::TwoSidedExponential {
                p_up: 0.4,
                eta_up: 2.0,
                eta_down: 1.0,
            },
        }],
    });
    for seed in 0..5 {
        let mut cfg = SimConfig::new(1e-3, 1e-2, 1e8, 5.0, seed);
        cfg.watch_levels = vec![0.5, 5.0];
        let p = simulate_path(&m, &cfg).unwrap();
        let (_, up) = hitting_times(&p, 5.0);
        let (down, _) = hitting_times(&p, 0.5);
        println!(
            "seed {seed}: end t = {:.3}, y = {:.4}, {} env jumps, tau+(5) = {up:?}, tau-(0.5) = {down:?}",
            p.end_time(),
            p.final_state(),
            p.env_jump_log.len()
        );
    }
}

//! Monte Carlo explosion frequency as the start point grows.

use cble_lab::estimate_explosion_prob;
use cble_lab::model::{CompetitionSpec, ModelSpec};
use cble_lab::simulate::SimConfig;

fn main() {
    let cfg = SimConfig::new(1e-3, 1e-2, 1e8, 10.0, 42);
    for y0 in [0.01, 0.1, 1.0, 10.0] {
        let m = ModelSpec::pure_stable(1.0, 0.5, y0).with_competition(CompetitionSpec::PowerLaw {
            b0: 3.0,
            q0: 1.5,
            activation: 1.0,
        });
        let r = estimate_explosion_prob(&m, &cfg, 400).unwrap();
        println!(
            "y0 = {y0:<5} estimate {:.3}  95% CI [{:.3}, {:.3}]  mean tau_K {:?}",
            r.estimate, r.ci_low, r.ci_high, r.mean_tau_k
        );
    }
}

//! Explosion certificate and nonexplosion evidence on either side of the critical competition.

use std::f64::consts::PI;

use cble_lab::analytics::TestFunction;
use cble_lab::lyapunov::{explosion_prob_lower_bound, scan_explosion_criterion, scan_nonexplosion_criterion, GridSpec};
use cble_lab::model::{CompetitionSpec, ModelSpec};

fn main() {
    let grid = GridSpec::new(1.0, 1e6);
    for b0 in [0.0, 5.0, 2.0 * PI + 0.5] {
        let m = ModelSpec::pure_stable(1.0, 0.5, 100.0).with_competition(CompetitionSpec::PowerLaw {
            b0,
            q0: 1.5,
            activation: 1.0,
        });
        print!("b0 = {b0:.3}: ");
        match scan_explosion_criterion(&m, &[0.05, 0.1, 0.2], &grid) {
            Ok(cert) => {
                let g = TestFunction::exp_inverse_power(cert.delta).unwrap();
                let bound = explosion_prob_lower_bound(&g, m.y0, cert.y_bar).ok();
                println!("explosion certified, delta {}, y_bar {:.2}, P(explode | y0 = 100) >= {bound:?}", cert.delta, cert.y_bar);
            }
            Err(e) => match scan_nonexplosion_criterion(&m, 9, 1e6, 10.0) {
                Ok(ev) => println!("no certificate ({e}); nonexplosion evidence d_n = {:.3e}", ev.d_n),
                Err(e2) => println!("neither scan succeeded: {e}; {e2}"),
            },
        }
    }
}

//! Regime verdicts across index, competition strength and exponent.

use std::f64::consts::PI;

use cble_lab::model::{CompetitionSpec, ModelSpec};
use cble_lab::classify_regime;

fn main() {
    let cases = [
        (1.2, 3.0, 0.5),
        (0.5, 0.0, 1.5),
        (0.5, 1.0, 1.2),
        (0.5, 6.0, 1.5),
        (0.5, 2.0 * PI, 1.5),
        (0.5, 1.0, 2.0),
    ];
    for (alpha, b0, q0) in cases {
        let m = ModelSpec::pure_stable(1.0, alpha, 1.0).with_competition(CompetitionSpec::PowerLaw {
            b0,
            q0,
            activation: 1.0,
        });
        let v = classify_regime(&m).expect("stable tail and power-law competition");
        let boundary = v.boundary.map_or(String::new(), |b| format!("  boundary {b:.6}"));
        println!("alpha {alpha:<4} b0 {b0:<8.4} q0 {q0:<4} -> {v}{boundary}");
    }
}

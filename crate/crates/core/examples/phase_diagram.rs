//! Small b0 x q0 phase diagram printed as CSV.

use std::f64::consts::PI;

use cble_lab::model::{CompetitionSpec, ModelSpec};
use cble_lab::montecarlo::{Axis, SweepParam};
use cble_lab::phase_diagram;
use cble_lab::simulate::SimConfig;

fn main() {
    let m = ModelSpec::pure_stable(1.0, 0.5, 1.0).with_competition(CompetitionSpec::PowerLaw {
        b0: 1.0,
        q0: 1.5,
        activation: 1.0,
    });
    let cfg = SimConfig::new(2e-3, 2e-2, 1e6, 5.0, 7);
    let b0 = Axis::new(SweepParam::B0, vec![0.0, 3.0, 2.0 * PI, 10.0]);
    let q0 = Axis::new(SweepParam::Q0, vec![1.2, 1.5, 1.8]);
    let d = phase_diagram(&m, &cfg, &b0, &q0, 40).unwrap();
    print!("{}", d.to_csv());
}

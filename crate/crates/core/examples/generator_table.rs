//! Tabulates L g for the explosion test function against its leading term.

use cble_lab::analytics::special::c_coeff;
use cble_lab::analytics::{generator_apply, TestFunction};
use cble_lab::model::ModelSpec;

fn main() {
    let (alpha, delta) = (0.5, 0.1);
    let m = ModelSpec::pure_stable(1.0, alpha, 1.0);
    let g = TestFunction::exp_inverse_power(delta).unwrap();
    let c = c_coeff(alpha, delta).unwrap();
    println!("{:>10} {:>14} {:>14} {:>8}", "y", "Lg", "leading", "ratio");
    for e in -1..=6 {
        let y = 10f64.powi(e);
        let lg = generator_apply(&m, &g, y).unwrap();
        let lead = g.value(y) * delta * c * y.powf(1.0 - alpha - delta);
        println!("{y:>10.0e} {lg:>14.6e} {lead:>14.6e} {:>8.4}", lg / lead);
    }
}

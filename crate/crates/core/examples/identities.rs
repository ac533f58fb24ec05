//! Runs the built-in identity checks.

use cble_lab::cli::verify::run_identity_checks;

fn main() {
    for c in run_identity_checks() {
        println!("{:<28} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
}

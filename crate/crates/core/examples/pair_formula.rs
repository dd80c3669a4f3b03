//! Fidelity from the Gaussian pair formula: measure the pair second moment
//! on a separation grid, refine where needed, and integrate.
//!
//! cargo run --release --example pair_formula

use std::f64::consts::PI;

use dephasing::compare::compare;
use dephasing::ensemble::EnsembleSpec;
use dephasing::fidelity::{default_separation_grid, dr_overlap, pair_formula_fidelity};
use dephasing::map::MapParams;
use dephasing::quantum::torus_hbar;

fn main() -> dephasing::Result<()> {
    let map = MapParams::new(20.0, 0.003);
    let hbar = torus_hbar(1000);
    let spec = EnsembleSpec::position_state(0.8 * PI, 2000, 1);
    let steps = 60;

    let result = pair_formula_fidelity(
        &spec,
        &map,
        hbar,
        steps,
        &default_separation_grid(10, 60),
        12,
    )?;
    let dr = dr_overlap(&spec, &map, hbar, steps)?;
    let c = compare(&dr, &result.curve, [2.0, 50.0])?;
    println!(
        "{} separation nodes after {} refinement rounds",
        result.scan.p_minus.len(),
        result.rounds
    );
    for t in (0..=steps).step_by(10) {
        println!(
            "t = {t:<3} pair formula {:.4}, Monte Carlo {:.4}",
            result.curve.m[t], dr.m[t]
        );
    }
    println!(
        "largest deviation {:.2} standard errors",
        c.max_z.unwrap_or(0.0)
    );
    Ok(())
}

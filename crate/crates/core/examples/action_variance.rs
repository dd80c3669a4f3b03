//! Variance of the action difference against time: a random walk for the
//! chaotic map and ballistic growth for the quasi-integrable one.
//!
//! cargo run --release --example action_variance

use std::f64::consts::PI;

use dephasing::ensemble::EnsembleSpec;
use dephasing::map::MapParams;
use dephasing::stats::variance_delta_action;

fn main() -> dephasing::Result<()> {
    let spec = EnsembleSpec::position_state(0.8 * PI, 1000, 1);
    for (label, map, window) in [
        (
            "chaotic k = 20",
            MapParams::new(20.0, 0.003),
            [10.0, 1000.0],
        ),
        (
            "quasi-integrable k = 0.3",
            MapParams::new(0.3, 0.005),
            [20.0, 1000.0],
        ),
    ] {
        let v = variance_delta_action(&spec, &map, 1000)?;
        let fit = v.fit_loglog(window)?;
        println!(
            "{label}: sigma^2(1000) = {:.3e}, log-log slope {:.4} (R^2 {:.4})",
            v.variance[1000], fit.slope, fit.r_squared
        );
    }
    Ok(())
}

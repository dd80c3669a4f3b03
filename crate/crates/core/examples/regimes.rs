//! Closed-form fidelity in every regime, and regime classification from
//! labelled slope fits.
//!
//! cargo run --example regimes

use std::f64::consts::PI;

use dephasing::ensemble::EnsembleSpec;
use dephasing::fidelity::{
    classify_regime, predict_fidelity, FitRole, LabeledFit, Regime, RegimeParams,
};
use dephasing::map::MapParams;
use dephasing::stats::variance_delta_action;

fn main() -> dephasing::Result<()> {
    let rp = RegimeParams {
        k: Some(0.06),
        c_v_inf: Some(0.02),
        d_force: Some(0.25),
        lambda: Some(2.3),
        alpha: Some(0.7),
        beta: Some(1.0),
        gamma: Some(1.0),
        hbar: Some(0.01),
        epsilon: Some(0.003),
        ..Default::default()
    };
    let times = [0, 1, 2, 5, 10, 20];
    for regime in Regime::ALL {
        match predict_fidelity(regime, &rp, &times) {
            Ok(c) => println!(
                "{:<18} {:?}{}",
                regime.name(),
                c.m.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>(),
                if c.clamped { "  (clamped)" } else { "" }
            ),
            Err(e) => println!("{:<18} {e}", regime.name()),
        }
    }

    // a missing parameter is named in the error
    let err = predict_fidelity(Regime::Lyapunov, &RegimeParams::default(), &times).unwrap_err();
    println!("without parameters: {err}");

    let spec = EnsembleSpec::position_state(0.8 * PI, 500, 1);
    for map in [MapParams::new(20.0, 0.003), MapParams::new(0.3, 0.005)] {
        let fit = variance_delta_action(&spec, &map, 1000)?.fit_loglog([20.0, 1000.0])?;
        let regime = classify_regime(&[LabeledFit {
            role: FitRole::Uncorrelated,
            fit,
        }]);
        println!(
            "k = {}: variance slope {:.3} -> {}",
            map.k,
            fit.slope,
            regime.name()
        );
    }
    Ok(())
}

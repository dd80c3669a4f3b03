//! Monte Carlo fidelity in the chaotic regime against the exponential
//! prediction built from the measured correlator integral.
//!
//! cargo run --release --example dr_fidelity

use std::f64::consts::PI;

use dephasing::ensemble::EnsembleSpec;
use dephasing::fidelity::{dr_overlap, predict_fidelity, Regime, RegimeParams};
use dephasing::map::MapParams;
use dephasing::quantum::torus_hbar;
use dephasing::stats::{
    fit_exponential_rate, integrate_correlator, potential_correlator, IntegrationMode,
};

fn main() -> dephasing::Result<()> {
    let map = MapParams::new(20.0, 0.003);
    let hbar = torus_hbar(1000);
    let spec = EnsembleSpec::position_state(0.8 * PI, 20_000, 1);
    let dr = dr_overlap(&spec, &map, hbar, 150)?;

    let cv = potential_correlator(&EnsembleSpec::uniform_torus(20_000, 1), &map, 20)?;
    let k = integrate_correlator(&cv, IntegrationMode::SumToPlateau)?.value;
    let rp = RegimeParams {
        k: Some(k),
        epsilon: Some(map.epsilon),
        hbar: Some(hbar),
        ..Default::default()
    };
    let fgr = predict_fidelity(Regime::FermiGoldenRule, &rp, &dr.times)?;

    println!("t    M_DR     +-se      FGR");
    for t in (0..=150).step_by(25) {
        println!(
            "{t:<4} {:.5}  {:.5}  {:.5}",
            dr.m[t], dr.std_err[t], fgr.m[t]
        );
    }
    let times: Vec<f64> = dr.times.iter().map(|&t| t as f64).collect();
    let rate = -fit_exponential_rate(&times, &dr.m, [2.0, 50.0])?.slope;
    println!(
        "fitted rate {rate:.5}, 2 K eps^2 / hbar^2 = {:.5}",
        2.0 * k * map.epsilon.powi(2) / (hbar * hbar)
    );
    Ok(())
}

//! Potential and force correlators and their integrals.
//!
//! cargo run --release --example correlators

use dephasing::ensemble::EnsembleSpec;
use dephasing::map::MapParams;
use dephasing::stats::{
    force_correlator, integrate_correlator, potential_correlator, IntegrationMode,
};

fn main() -> dephasing::Result<()> {
    let uniform = EnsembleSpec::uniform_torus(20_000, 1);

    let chaotic = MapParams::new(20.0, 0.003);
    let cv = potential_correlator(&uniform, &chaotic, 20)?;
    let cf = force_correlator(&uniform, &chaotic, 20)?;
    println!(
        "C_V(0) = {:.4} (1/8), C_F(0) = {:.4} (1/2)",
        cv.value[0], cf.value[0]
    );
    let k = integrate_correlator(&cv, IntegrationMode::SumToPlateau)?;
    let d = integrate_correlator(&cf, IntegrationMode::SumToPlateau)?;
    println!(
        "k = 20: K = {:.4} (converged {}, cutoff lag {}), D = {:.4}",
        k.value, k.converged, k.cutoff_lag, d.value
    );

    let quasi = MapParams::new(0.3, 0.005);
    let cv = potential_correlator(&uniform, &quasi, 400)?;
    let c_inf = integrate_correlator(&cv, IntegrationMode::Cesaro)?;
    println!(
        "k = 0.3: C_V^inf = {:.4} (converged {})",
        c_inf.value, c_inf.converged
    );
    Ok(())
}

//! Second moment of the action difference between nearby trajectories,
//! against time at fixed separation and against separation at fixed time.
//!
//! cargo run --release --example pair_variance

use std::f64::consts::PI;

use dephasing::ensemble::{EnsembleSpec, PairSpec};
use dephasing::map::MapParams;
use dephasing::stats::{
    branch_crossover, estimate_lyapunov, log_grid, pair_variance_vs_separation,
    pair_variance_vs_time, variance_delta_action, Smoothing,
};

fn main() -> dephasing::Result<()> {
    let base = EnsembleSpec::position_state(0.8 * PI, 1000, 1);
    let chaotic = MapParams::new(20.0, 0.003);
    let quasi = MapParams::new(0.3, 0.005);

    // against separation at t = 7: quadratic, then flat at twice sigma^2
    let grid = log_grid(1e-12, 1e3, 10);
    for (label, map) in [("chaotic", chaotic), ("quasi-integrable", quasi)] {
        let scan = pair_variance_vs_separation(&base, &map, 7, &grid)?;
        let small = scan.fit_loglog(7, [1e-12, 1e-9])?;
        let plateau = scan.plateau_mean(7, [1.0, 1000.0]).unwrap();
        let sigma2 = variance_delta_action(&base, &map, 7)?.variance[7];
        println!(
            "{label}: small-separation slope {:.4}, plateau / 2 sigma^2 = {:.3}",
            small.slope,
            plateau / (2.0 * sigma2)
        );
    }

    // against time at p- = 1e-9: exponential then linear for the chaotic map
    let pair = PairSpec::new(base.clone(), 1e-9);
    let series = pair_variance_vs_time(&pair, &chaotic, 2000, Smoothing::None)?;
    let early = series.fit_exponential([2.0, 8.0])?;
    let late = series.fit_loglog([50.0, 2000.0])?;
    let lyap = estimate_lyapunov(&base, &chaotic, 200)?;
    println!(
        "chaotic: early rate {:.3} (2 lambda = {:.3}), late slope {:.3}, crossover near t = {:.1}",
        early.slope,
        2.0 * lyap.lambda,
        late.slope,
        branch_crossover(&early, &late).unwrap_or(f64::NAN)
    );

    // cubic then quadratic for the quasi-integrable map, with (t/2, t) smoothing
    let series = pair_variance_vs_time(&pair, &quasi, 10_000, Smoothing::WindowAverage)?;
    println!(
        "quasi-integrable: early slope {:.3}, late slope {:.3}",
        series.fit_loglog([5.0, 50.0])?.slope,
        series.fit_loglog([200.0, 10_000.0])?.slope
    );
    Ok(())
}

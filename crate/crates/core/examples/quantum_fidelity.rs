//! Exact quantum fidelity of a position state on the torus, next to the
//! classical Monte Carlo estimate at the same effective Planck constant.
//!
//! cargo run --release --example quantum_fidelity

use std::f64::consts::TAU;

use dephasing::ensemble::EnsembleSpec;
use dephasing::fidelity::dr_overlap;
use dephasing::map::MapParams;
use dephasing::quantum::{grid_index, position_state, quantum_fidelity, torus_hbar};

fn main() -> dephasing::Result<()> {
    let (n, k, eps) = (1000, 20.0, 0.003);
    let hbar = torus_hbar(n);
    let j = grid_index(n, 0.8 * std::f64::consts::PI);
    let q = TAU * j as f64 / n as f64;
    println!("n = {n}, hbar = {hbar:.5}, position snapped to grid index {j} (q = {q:.5})");

    let quantum = quantum_fidelity(&position_state(n, q), k, eps, hbar, 100)?;
    let dr = dr_overlap(
        &EnsembleSpec::position_state(q, 20_000, 1),
        &MapParams::new(k, eps),
        hbar,
        100,
    )?;
    for t in (0..=100).step_by(20) {
        println!(
            "t = {t:<3} quantum {:.4}, Monte Carlo {:.4}",
            quantum.m[t], dr.m[t]
        );
    }
    Ok(())
}

//! Draws the two initial-state ensembles and a pair ensemble.
//!
//! cargo run --example ensembles

use std::f64::consts::PI;

use dephasing::ensemble::{sample, sample_pairs, EnsembleSpec, PairSpec, Placement};

fn main() -> dephasing::Result<()> {
    let uniform = EnsembleSpec::uniform_torus(100_000, 1);
    let pts = sample(&uniform)?;
    let mean_q = pts.iter().map(|x| x.q).sum::<f64>() / pts.len() as f64;
    println!("uniform torus: mean q = {mean_q:.4} (pi = {PI:.4})");

    let position = EnsembleSpec::position_state(0.8 * PI, 3, 1);
    for x in sample(&position)? {
        println!("position state: q = {:.4}, p = {:.4}", x.q, x.p);
    }
    let grid = position.clone().with_placement(Placement::Grid);
    println!(
        "grid placement: {:?}",
        sample(&grid)?.iter().map(|x| x.p).collect::<Vec<_>>()
    );

    // sampling is a pure function of the spec
    assert_eq!(sample(&position)?, sample(&position)?);

    let pairs = sample_pairs(&PairSpec::new(position, 1e-9))?;
    for (a, b) in &pairs {
        println!(
            "pair: q {:.4} = {:.4}, p difference {:.3e}",
            a.q,
            b.q,
            a.p - b.p
        );
    }
    Ok(())
}

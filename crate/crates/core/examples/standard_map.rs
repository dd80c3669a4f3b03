//! Iterates the perturbed standard map from one point and accumulates the
//! action difference along the unperturbed orbit.
//!
//! cargo run --example standard_map

use std::f64::consts::PI;

use dephasing::map::{
    inverse_step_map, propagate_tangent, propagate_with_action, step_map, MapParams, PhasePoint,
};

fn main() {
    let map = MapParams::new(20.0, 0.003);
    let x0 = PhasePoint::new(0.8 * PI, 0.5);

    let mut x = x0;
    println!("t  q         p");
    for t in 0..=5 {
        println!("{t}  {:.6}  {:.6}", x.q, x.p);
        x = step_map(x, &map);
    }

    // the inverse map recovers the start at weak kicks
    let weak = MapParams::new(0.3, 0.005).perturbed();
    let mut y = x0;
    for _ in 0..20 {
        y = step_map(y, &weak);
    }
    for _ in 0..20 {
        y = inverse_step_map(y, &weak);
    }
    println!(
        "round trip error after 20 steps at k = 0.3: {:.1e}",
        (y.q - x0.q).abs().max((y.p - x0.p).abs())
    );

    let series = propagate_with_action(x0, &map, 10);
    println!("delta S: {:?}", &series.delta_s[..4]);

    let frames = propagate_tangent(x0, &map, 1000, false);
    let last = frames.last().unwrap();
    println!(
        "after 1000 steps: ln stretch {:.1}, det - 1 = {:.1e}",
        last.ln_stretch(),
        last.determinant() - 1.0
    );
}

//! The perturbed standard map on the 2π-torus.
//!
//! One period of the dynamics is a kick followed by a drift:
//!
//! ```text
//! p' = p + k sin q + ε sin 2q   (mod 2π)
//! q' = q + p'                   (mod 2π)
//! ```
//!
//! The ε term derives from the perturbation potential `V(q) = ½ cos 2q`
//! through `-ε V'(q)`. Action differences are accumulated along the
//! *unperturbed* trajectory, so every [`ActionSeries`] is exactly linear in ε.

use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = std::f64::consts::TAU;

pub type Mat2 = [[f64; 2]; 2];

/// Reduce an angle to `[0, 2π)`.
///
/// For `|x| < 4π` this is one or two exact subtractions; beyond that the
/// floating remainder (also exact) is used.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    if (0.0..TWO_PI).contains(&x) {
        return x;
    }
    let r = if (TWO_PI..2.0 * TWO_PI).contains(&x) {
        x - TWO_PI
    } else if (-TWO_PI..0.0).contains(&x) {
        x + TWO_PI
    } else {
        x.rem_euclid(TWO_PI)
    };
    // r + 2π can round up onto 2π itself for tiny negative r.
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// A point `(q, p)` of the torus phase space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    /// Builds a point, wrapping both coordinates into `[0, 2π)`.
    pub fn new(q: f64, p: f64) -> Self {
        PhasePoint {
            q: wrap_angle(q),
            p: wrap_angle(p),
        }
    }

    pub fn is_canonical(&self) -> bool {
        (0.0..TWO_PI).contains(&self.q) && (0.0..TWO_PI).contains(&self.p)
    }
}

/// A kicked area-preserving map with a perturbation potential.
///
/// Implementors must keep `step` symplectic, return points in `[0, 2π)²`,
/// and make the ε-dependent kick equal to `-ε dV/dq`.
pub trait KickedMap: Send + Sync {
    /// One period of the dynamics; `perturbed` selects `H^ε` over `H⁰`.
    fn step(&self, x: PhasePoint, perturbed: bool) -> PhasePoint;

    /// Jacobian `∂(q', p') / ∂(q, p)` of [`KickedMap::step`] at `x`.
    fn jacobian(&self, x: PhasePoint, perturbed: bool) -> Mat2;

    /// Perturbation potential `V(q)`.
    fn potential(&self, q: f64) -> f64;

    /// Gradient `dV/dq`.
    fn potential_gradient(&self, q: f64) -> f64;

    /// Perturbation strength ε.
    fn epsilon(&self) -> f64;
}

/// Parameters of the perturbed standard map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParams {
    /// Kick strength; 0 is free rotation, large values are strongly chaotic.
    pub k: f64,
    /// Perturbation strength ε; its sign flips the perturbation.
    pub epsilon: f64,
    /// Whether [`step_map`] includes the ε kick.
    #[serde(default)]
    pub with_perturbation: bool,
}

impl MapParams {
    pub fn new(k: f64, epsilon: f64) -> Self {
        MapParams {
            k,
            epsilon,
            with_perturbation: false,
        }
    }

    pub fn perturbed(self) -> Self {
        MapParams {
            with_perturbation: true,
            ..self
        }
    }

    pub fn unperturbed(self) -> Self {
        MapParams {
            with_perturbation: false,
            ..self
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        MapParams { epsilon, ..self }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!(
                "kick strength k must be finite and >= 0, got {}",
                self.k
            )));
        }
        if !self.epsilon.is_finite() {
            return Err(crate::Error::InvalidParameter(format!(
                "epsilon must be finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

impl KickedMap for MapParams {
    #[inline]
    fn step(&self, x: PhasePoint, perturbed: bool) -> PhasePoint {
        let mut kick = self.k * x.q.sin();
        if perturbed {
            kick -= self.epsilon * self.potential_gradient(x.q);
        }
        let p = wrap_angle(x.p + kick);
        let q = wrap_angle(x.q + p);
        PhasePoint { q, p }
    }

    fn jacobian(&self, x: PhasePoint, perturbed: bool) -> Mat2 {
        let mut dkick = self.k * x.q.cos();
        if perturbed {
            dkick += 2.0 * self.epsilon * (2.0 * x.q).cos();
        }
        // rows: (q', p'); columns: (q, p)
        [[1.0 + dkick, 1.0], [dkick, 1.0]]
    }

    #[inline]
    fn potential(&self, q: f64) -> f64 {
        perturbation_potential(q)
    }

    #[inline]
    fn potential_gradient(&self, q: f64) -> f64 {
        -(2.0 * q).sin()
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// `V(q) = ½ cos 2q`. Zero mean over the circle.
#[inline]
pub fn perturbation_potential(q: f64) -> f64 {
    0.5 * (2.0 * q).cos()
}

/// One step of the standard map, with the ε kick iff `params.with_perturbation`.
#[inline]
pub fn step_map(x: PhasePoint, params: &MapParams) -> PhasePoint {
    params.step(x, params.with_perturbation)
}

/// Inverse of [`step_map`].
pub fn inverse_step_map(x: PhasePoint, params: &MapParams) -> PhasePoint {
    let q = wrap_angle(x.q - x.p);
    let mut kick = params.k * q.sin();
    if params.with_perturbation {
        kick += params.epsilon * (2.0 * q).sin();
    }
    PhasePoint {
        q,
        p: wrap_angle(x.p - kick),
    }
}

/// Iterator over the orbit of `x0`, starting with `x0` itself.
pub struct Orbit<'a, M: KickedMap + ?Sized> {
    map: &'a M,
    next: PhasePoint,
    perturbed: bool,
}

impl<M: KickedMap + ?Sized> Iterator for Orbit<'_, M> {
    type Item = PhasePoint;

    #[inline]
    fn next(&mut self) -> Option<PhasePoint> {
        let current = self.next;
        self.next = self.map.step(current, self.perturbed);
        Some(current)
    }
}

pub fn orbit<M: KickedMap + ?Sized>(map: &M, x0: PhasePoint, perturbed: bool) -> Orbit<'_, M> {
    Orbit {
        map,
        next: x0,
        perturbed,
    }
}

/// Cumulative action difference `ΔS(x′, t)` for `t = 0..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSeries {
    pub initial: PhasePoint,
    pub delta_s: Vec<f64>,
}

impl ActionSeries {
    pub fn steps(&self) -> usize {
        self.delta_s.len() - 1
    }
}

/// Accumulates `ΔS(x0, t) = -ε Σ_{n<t} V(q_n)` along the unperturbed orbit.
///
/// The potential sum is accumulated first and scaled by `-ε` per entry, so
/// series for different ε differ by exactly one rounding.
pub fn propagate_with_action<M: KickedMap + ?Sized>(
    x0: PhasePoint,
    map: &M,
    steps: usize,
) -> ActionSeries {
    let eps = map.epsilon();
    let mut delta_s = Vec::with_capacity(steps + 1);
    delta_s.push(0.0);
    let mut sum_v = 0.0;
    for x in orbit(map, x0, false).take(steps) {
        sum_v += map.potential(x.q);
        delta_s.push(-eps * sum_v);
    }
    ActionSeries {
        initial: x0,
        delta_s,
    }
}

/// Writes `Σ_{n<t} V(q_n)` for `t = 0..out.len()` into `out`.
///
/// Allocation-free core used by the ensemble statistics; multiply by `-ε`
/// to obtain ΔS.
#[inline]
pub(crate) fn potential_sums<M: KickedMap + ?Sized>(map: &M, x0: PhasePoint, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 0.0;
    let mut sum_v = 0.0;
    let mut x = x0;
    for slot in out.iter_mut().skip(1) {
        sum_v += map.potential(x.q);
        *slot = sum_v;
        x = map.step(x, false);
    }
}

/// Accumulated tangent map along an orbit, held as `Q · R`.
///
/// `Q` is a rotation and `R = [[r11, r12], [0, r22]]` is kept in log scale:
/// `ln r11`, `ln |r22|`, the sign of `r22` and the ratio `u = r12 / r11`.
/// Re-orthogonalising every step keeps the determinant exact to rounding
/// even when the entries of the full matrix would overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentFrame {
    rotation: Mat2,
    ln_r11: f64,
    ln_r22: f64,
    r22_negative: bool,
    shear: f64,
}

impl Default for TangentFrame {
    fn default() -> Self {
        Self::identity()
    }
}

impl TangentFrame {
    pub fn identity() -> Self {
        TangentFrame {
            rotation: [[1.0, 0.0], [0.0, 1.0]],
            ln_r11: 0.0,
            ln_r22: 0.0,
            r22_negative: false,
            shear: 0.0,
        }
    }

    /// Left-multiplies the frame by one step Jacobian.
    pub fn push(&mut self, jac: &Mat2) {
        let c = self.rotation;
        // columns of J·Q
        let a = [
            jac[0][0] * c[0][0] + jac[0][1] * c[1][0],
            jac[1][0] * c[0][0] + jac[1][1] * c[1][0],
        ];
        let b = [
            jac[0][0] * c[0][1] + jac[0][1] * c[1][1],
            jac[1][0] * c[0][1] + jac[1][1] * c[1][1],
        ];
        let r11 = a[0].hypot(a[1]);
        let q1 = [a[0] / r11, a[1] / r11];
        let q2 = [-q1[1], q1[0]];
        let r12 = q1[0] * b[0] + q1[1] * b[1];
        let r22 = q2[0] * b[0] + q2[1] * b[1];

        let ratio = self.r22_over_r11();
        self.shear += (r12 / r11) * ratio;
        self.ln_r11 += r11.ln();
        self.ln_r22 += r22.abs().ln();
        self.r22_negative ^= r22 < 0.0;
        self.rotation = [[q1[0], q2[0]], [q1[1], q2[1]]];
    }

    fn r22_over_r11(&self) -> f64 {
        let m = (self.ln_r22 - self.ln_r11).exp();
        if self.r22_negative {
            -m
        } else {
            m
        }
    }

    /// `ln` of the leading stretch factor; grows like `λ t` on chaotic orbits.
    pub fn ln_stretch(&self) -> f64 {
        self.ln_r11
    }

    /// Determinant of the accumulated Jacobian.
    pub fn determinant(&self) -> f64 {
        let d = (self.ln_r11 + self.ln_r22).exp();
        if self.r22_negative {
            -d
        } else {
            d
        }
    }

    /// The accumulated Jacobian. Entries overflow to infinity once the
    /// stretch exceeds the `f64` range; use the log-scale accessors then.
    pub fn matrix(&self) -> Mat2 {
        let r11 = self.ln_r11.exp();
        let r12 = self.shear * r11;
        let r22 = self.r22_over_r11() * r11;
        let c = self.rotation;
        [
            [c[0][0] * r11, c[0][0] * r12 + c[0][1] * r22],
            [c[1][0] * r11, c[1][0] * r12 + c[1][1] * r22],
        ]
    }

    /// Unit initial displacement that is stretched the most, `(δq, δp)`.
    ///
    /// This is the asymptotic unstable direction once `r22 / r11` is negligible.
    pub fn unstable_direction(&self) -> [f64; 2] {
        let n = 1.0f64.hypot(self.shear);
        [1.0 / n, self.shear / n]
    }

    /// `ln |δq(t)|` for a unit initial momentum displacement.
    pub fn ln_position_response_to_momentum(&self) -> f64 {
        let c = self.rotation;
        let v = c[0][0] * self.shear + c[0][1] * self.r22_over_r11();
        self.ln_r11 + v.abs().ln()
    }
}

/// Accumulated tangent frames for `t = 0..=T`; entry 0 is the identity.
pub fn propagate_tangent<M: KickedMap + ?Sized>(
    x0: PhasePoint,
    map: &M,
    steps: usize,
    perturbed: bool,
) -> Vec<TangentFrame> {
    let mut frames = Vec::with_capacity(steps + 1);
    let mut frame = TangentFrame::identity();
    frames.push(frame);
    for x in orbit(map, x0, perturbed).take(steps) {
        frame.push(&map.jacobian(x, perturbed));
        frames.push(frame);
    }
    frames
}

/// Final tangent frame after `steps` steps, without storing the history.
pub(crate) fn final_tangent<M: KickedMap + ?Sized>(
    x0: PhasePoint,
    map: &M,
    steps: usize,
    perturbed: bool,
) -> TangentFrame {
    let mut frame = TangentFrame::identity();
    for x in orbit(map, x0, perturbed).take(steps) {
        frame.push(&map.jacobian(x, perturbed));
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_rotation() {
        let x = step_map(PhasePoint::new(1.0, 0.5), &MapParams::new(0.0, 0.0));
        assert!((x.q - 1.5).abs() < 1e-15);
        assert!((x.p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chaotic_step_matches_hand_evaluation() {
        let x = step_map(PhasePoint::new(0.8 * PI, 0.5), &MapParams::new(20.0, 0.0));
        assert!((x.p - 5.972_52).abs() < 1e-5, "p' = {}", x.p);
        assert!((x.q - 2.202_61).abs() < 1e-5, "q' = {}", x.q);
    }

    #[test]
    fn origin_is_fixed() {
        for k in [0.0, 0.3, 20.0] {
            let x = step_map(PhasePoint::new(0.0, 0.0), &MapParams::new(k, 0.0));
            assert_eq!((x.q, x.p), (0.0, 0.0));
        }
    }

    #[test]
    fn potential_values() {
        assert!(perturbation_potential(PI / 4.0).abs() < 1e-16);
        assert_eq!(perturbation_potential(0.0), 0.5);
    }

    #[test]
    fn potential_has_zero_mean() {
        // midpoint rule on a 10^6 grid
        let n = 1_000_000;
        let h = TWO_PI / n as f64;
        let mean: f64 = (0..n)
            .map(|i| perturbation_potential((i as f64 + 0.5) * h))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 1e-9, "mean = {mean}");
    }

    #[test]
    fn perturbation_kick_is_minus_gradient() {
        let m = MapParams::new(0.0, 0.01).perturbed();
        let x = PhasePoint::new(0.7, 1.0);
        let y = step_map(x, &m);
        let expected = 1.0 - 0.01 * m.potential_gradient(0.7);
        assert!((y.p - expected).abs() < 1e-15);
    }

    #[test]
    fn wrap_edges() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert_eq!(wrap_angle(TWO_PI), 0.0);
        assert_eq!(wrap_angle(-1e-300), 0.0);
        assert!((wrap_angle(-0.5) - (TWO_PI - 0.5)).abs() < 1e-15);
        assert!((wrap_angle(3.0 * TWO_PI + 1.0) - 1.0).abs() < 1e-14);
        assert!((wrap_angle(-3.0 * TWO_PI + 1.0) - 1.0).abs() < 1e-14);
        for x in [-20.0, -1e-17, 4.0 * PI - 1e-16, 25.9] {
            let w = wrap_angle(x);
            assert!((0.0..TWO_PI).contains(&w), "{x} -> {w}");
        }
    }

    #[test]
    fn action_first_step() {
        let m = MapParams::new(20.0, 0.003);
        let s = propagate_with_action(PhasePoint::new(0.8 * PI, 1.234), &m, 1);
        assert_eq!(s.delta_s[0], 0.0);
        let expected = -0.003 * 0.5 * (1.6 * PI).cos();
        assert!((s.delta_s[1] - expected).abs() < 1e-18);
        assert!((s.delta_s[1] + 4.635e-4).abs() < 1e-7);
    }

    #[test]
    fn action_vanishes_without_perturbation() {
        let m = MapParams::new(20.0, 0.0);
        let s = propagate_with_action(PhasePoint::new(1.0, 2.0), &m, 50);
        assert!(s.delta_s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn action_on_fixed_point() {
        let m = MapParams::new(20.0, 0.003);
        let s = propagate_with_action(PhasePoint::new(0.0, 0.0), &m, 5);
        for (t, v) in s.delta_s.iter().enumerate() {
            assert!((v + 0.003 * 0.5 * t as f64).abs() < 1e-18);
        }
    }

    #[test]
    fn shear_tangent() {
        let m = MapParams::new(0.0, 0.0);
        let frames = propagate_tangent(PhasePoint::new(0.3, 0.4), &m, 17, false);
        assert_eq!(frames.len(), 18);
        for (t, f) in frames.iter().enumerate() {
            let j = f.matrix();
            assert!((j[0][0] - 1.0).abs() < 1e-12);
            assert!((j[0][1] - t as f64).abs() < 1e-12);
            assert!(j[1][0].abs() < 1e-12);
            assert!((j[1][1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_matches_product_at_short_times() {
        let m = MapParams::new(1.3, 0.02).perturbed();
        let x0 = PhasePoint::new(0.4, 2.1);
        let frames = propagate_tangent(x0, &m, 6, true);
        let mut prod: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
        for (x, f) in orbit(&m, x0, true).zip(frames.iter().skip(1)) {
            let j = m.jacobian(x, true);
            let mut next = [[0.0; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    next[r][c] = j[r][0] * prod[0][c] + j[r][1] * prod[1][c];
                }
            }
            prod = next;
            let got = f.matrix();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((got[r][c] - prod[r][c]).abs() < 1e-9 * (1.0 + prod[r][c].abs()));
                }
            }
        }
    }

    #[test]
    fn tangent_jacobian_matches_finite_differences() {
        let m = MapParams::new(2.5, 0.1).perturbed();
        let x = PhasePoint::new(1.1, 0.7);
        let j = m.jacobian(x, true);
        let h = 1e-7;
        let base = m.step(x, true);
        let dq = m.step(PhasePoint { q: x.q + h, ..x }, true);
        let dp = m.step(PhasePoint { p: x.p + h, ..x }, true);
        let diff = |a: f64, b: f64| {
            let d = a - b;
            (d + PI).rem_euclid(TWO_PI) - PI
        };
        assert!((diff(dq.q, base.q) / h - j[0][0]).abs() < 1e-5);
        assert!((diff(dq.p, base.p) / h - j[1][0]).abs() < 1e-5);
        assert!((diff(dp.q, base.q) / h - j[0][1]).abs() < 1e-5);
        assert!((diff(dp.p, base.p) / h - j[1][1]).abs() < 1e-5);
    }

    #[test]
    fn determinant_after_100_chaotic_steps() {
        let m = MapParams::new(20.0, 0.0);
        let f = final_tangent(PhasePoint::new(0.8 * PI, 0.5), &m, 100, false);
        assert!((f.determinant() - 1.0).abs() < 1e-9);
        assert!(f.ln_stretch() > 100.0);
    }

    #[test]
    fn inverse_recovers_quasi_integrable_orbit() {
        let m = MapParams::new(0.3, 0.005).perturbed();
        let x0 = PhasePoint::new(0.8 * PI, 1.7);
        let mut x = x0;
        for _ in 0..20 {
            x = step_map(x, &m);
        }
        for _ in 0..20 {
            x = inverse_step_map(x, &m);
        }
        assert!((x.q - x0.q).abs() < 1e-6 && (x.p - x0.p).abs() < 1e-6);
    }
}

//! Exact fidelity of the quantized kicked map on an n-state torus.
//!
//! One period is a kick `exp(-i V_tot(q)/ħ)` on the position grid followed by
//! free drift `exp(-i p²/2ħ)` on the momentum grid, matching the classical
//! kick-then-drift order.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::fidelity::{FidelityCurve, Method};
use crate::map::TWO_PI;
use crate::{Error, Result};

/// Amplitudes on the position grid `q_j = 2πj/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Circular mean position, `arg⟨e^{iq}⟩` wrapped to [0, 2π).
    pub fn mean_position(&self) -> f64 {
        let n = self.dim() as f64;
        let z: Complex64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * Complex64::from_polar(1.0, TWO_PI * j as f64 / n))
            .sum();
        z.arg().rem_euclid(TWO_PI)
    }
}

/// Grid index nearest to `q·n/2π`, modulo n.
pub fn grid_index(n: usize, q: f64) -> usize {
    ((q * n as f64 / TWO_PI).round() as i64).rem_euclid(n as i64) as usize
}

/// Position basis state at the grid point nearest `q`.
pub fn position_state(n: usize, q: f64) -> QuantumState {
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
    amplitudes[grid_index(n, q)] = Complex64::new(1.0, 0.0);
    QuantumState { amplitudes }
}

/// Minimum-uncertainty wavepacket centred at `(q0, p0)` with position width
/// `sqrt(ħ/2)`, periodised over neighbouring cells.
pub fn coherent_state(n: usize, hbar: f64, q0: f64, p0: f64) -> QuantumState {
    let sigma2 = hbar / 2.0;
    let mut amplitudes: Vec<Complex64> = (0..n)
        .map(|j| {
            let q = TWO_PI * j as f64 / n as f64;
            (-2..=2)
                .map(|w| {
                    let dq = q - q0 + TWO_PI * w as f64;
                    Complex64::from_polar((-dq * dq / (4.0 * sigma2)).exp(), p0 * dq / hbar)
                })
                .sum()
        })
        .collect();
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amplitudes {
        *a /= norm;
    }
    QuantumState { amplitudes }
}

/// `ħ = 2π/n`, the value consistent with n states on a (2π)² torus.
pub fn torus_hbar(n: usize) -> f64 {
    TWO_PI / n as f64
}

/// One period of the quantized map `p' = p + k sin q + ε sin 2q`, `q' = q + p'`.
pub struct KickedPropagator {
    pub n: usize,
    pub k: f64,
    pub epsilon: f64,
    pub hbar: f64,
    kick: Vec<Complex64>,
    /// Drift phase with the inverse-transform normalisation folded in.
    drift: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KickedPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KickedPropagator")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("epsilon", &self.epsilon)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl KickedPropagator {
    pub fn new(n: usize, k: f64, epsilon: f64, hbar: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "Hilbert-space dimension {n} < 2"
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::NonPositiveParameter {
                name: "hbar",
                value: hbar,
            });
        }
        let kick = (0..n)
            .map(|j| {
                let q = TWO_PI * j as f64 / n as f64;
                let v = k * q.cos() + 0.5 * epsilon * (2.0 * q).cos();
                Complex64::from_polar(1.0, -v / hbar)
            })
            .collect();
        let scale = 1.0 / n as f64;
        let drift = (0..n)
            .map(|l| {
                // signed momentum index in FFT order
                let m = if l < n.div_ceil(2) {
                    l as f64
                } else {
                    l as f64 - n as f64
                };
                let p = hbar * m;
                Complex64::from_polar(scale, -p * p / (2.0 * hbar))
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(KickedPropagator {
            n,
            k,
            epsilon,
            hbar,
            kick,
            drift,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// True when `n` is not a power of two; the transform is then slower.
    pub fn is_slow_size(&self) -> bool {
        !self.n.is_power_of_two()
    }

    /// Advances `psi` by one period in place.
    pub fn apply(&self, psi: &mut QuantumState, scratch: &mut Vec<Complex64>) {
        assert_eq!(psi.dim(), self.n, "state dimension mismatch");
        let need = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        scratch.resize(need, Complex64::new(0.0, 0.0));
        let a = &mut psi.amplitudes;
        for (x, k) in a.iter_mut().zip(&self.kick) {
            *x *= k;
        }
        self.forward.process_with_scratch(a, scratch);
        for (x, d) in a.iter_mut().zip(&self.drift) {
            *x *= d;
        }
        self.inverse.process_with_scratch(a, scratch);
    }
}

/// Advances `psi` by one period; allocates its own scratch space.
pub fn apply_propagator(psi: &QuantumState, prop: &KickedPropagator) -> QuantumState {
    let mut out = psi.clone();
    prop.apply(&mut out, &mut Vec::new());
    out
}

/// `M(t) = |⟨ψ_ε(t)|ψ_0(t)⟩|²` for `t = 0..=steps`, where the first branch
/// evolves with the perturbation and the second without.
///
/// Each value is divided by both branch norms, so M(0) = 1 exactly.
pub fn quantum_fidelity(
    psi0: &QuantumState,
    k: f64,
    epsilon: f64,
    hbar: f64,
    steps: usize,
) -> Result<FidelityCurve> {
    let n = psi0.dim();
    let perturbed = KickedPropagator::new(n, k, epsilon, hbar)?;
    let plain = KickedPropagator::new(n, k, 0.0, hbar)?;
    let (mut a, mut b) = (psi0.clone(), psi0.clone());
    let mut scratch = Vec::new();
    let mut m = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        if t > 0 {
            perturbed.apply(&mut a, &mut scratch);
            plain.apply(&mut b, &mut scratch);
        }
        let o = a.inner(&b);
        m.push((o.norm_sqr() / (a.norm_sqr() * b.norm_sqr())).min(1.0));
    }
    Ok(FidelityCurve {
        times: (0..=steps).collect(),
        m,
        std_err: Vec::new(),
        method: Method::QuantumExact,
        regime: None,
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{step_map, MapParams, PhasePoint};
    use std::f64::consts::PI;

    #[test]
    fn position_state_snaps_to_grid() {
        let s = position_state(10, 0.0);
        assert_eq!(s.amplitudes[0], Complex64::new(1.0, 0.0));
        assert_eq!(grid_index(100, 0.8 * PI), 40);
        assert_eq!(position_state(100, 0.8 * PI).norm_sqr(), 1.0);
        assert_eq!(grid_index(8, 2.0 * PI - 1e-9), 0);
    }

    #[test]
    fn norm_is_preserved() {
        let n = 256;
        let prop = KickedPropagator::new(n, 20.0, 0.003, torus_hbar(n)).unwrap();
        let mut psi = position_state(n, 0.8 * PI);
        let mut scratch = Vec::new();
        for _ in 0..100 {
            prop.apply(&mut psi, &mut scratch);
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_momentum_eigenstate_only_gains_phase() {
        let n = 64;
        let l = 5;
        let psi0 = QuantumState {
            amplitudes: (0..n)
                .map(|j| {
                    Complex64::from_polar(
                        1.0 / (n as f64).sqrt(),
                        TWO_PI * (l * j) as f64 / n as f64,
                    )
                })
                .collect(),
        };
        let prop = KickedPropagator::new(n, 0.0, 0.0, torus_hbar(n)).unwrap();
        let psi = apply_propagator(&psi0, &prop);
        let phase = psi.amplitudes[0] / psi0.amplitudes[0];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        for (a, b) in psi.amplitudes.iter().zip(&psi0.amplitudes) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
            assert!((a - phase * b).norm() < 1e-12);
        }
    }

    #[test]
    fn unperturbed_fidelity_is_one() {
        let psi = position_state(128, 0.8 * PI);
        let c = quantum_fidelity(&psi, 20.0, 0.0, torus_hbar(128), 50).unwrap();
        assert!(c.m.iter().all(|m| (m - 1.0).abs() < 1e-10));
        assert_eq!(c.m[0], 1.0);
    }

    #[test]
    fn swapping_branches_leaves_fidelity_unchanged() {
        let n = 128;
        let h = torus_hbar(n);
        let psi0 = position_state(n, 0.8 * PI);
        let c = quantum_fidelity(&psi0, 20.0, 0.01, h, 20).unwrap();
        let p = KickedPropagator::new(n, 20.0, 0.01, h).unwrap();
        let u = KickedPropagator::new(n, 20.0, 0.0, h).unwrap();
        let (mut a, mut b) = (psi0.clone(), psi0);
        let mut s = Vec::new();
        for t in 1..=20 {
            p.apply(&mut a, &mut s);
            u.apply(&mut b, &mut s);
            let swapped = b.inner(&a).norm_sqr() / (a.norm_sqr() * b.norm_sqr());
            assert!((swapped - c.m[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn wavepacket_follows_classical_map() {
        let n = 4096;
        let h = torus_hbar(n);
        let (q0, p0, k) = (1.0, 0.5, 0.3);
        let psi = apply_propagator(
            &coherent_state(n, h, q0, p0),
            &KickedPropagator::new(n, k, 0.0, h).unwrap(),
        );
        let classical = step_map(PhasePoint::new(q0, p0), &MapParams::new(k, 0.0));
        let spread = (h / 2.0).sqrt() * (1.0 + k);
        let dq = (psi.mean_position() - classical.q + PI).rem_euclid(TWO_PI) - PI;
        assert!(dq.abs() < 3.0 * spread, "dq = {dq}");
    }
}

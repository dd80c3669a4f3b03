//! Initial-condition ensembles drawn from the Wigner distributions used by
//! the dephasing representation.
//!
//! Every sample is a pure function of `(seed, index)`: the generator for
//! trajectory `i` is a ChaCha stream keyed by the seed with stream id `i`,
//! so any subset of the ensemble can be regenerated on any worker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::map::{wrap_angle, PhasePoint, TWO_PI};
use crate::{Error, Result};

/// Default ensemble size; the upper end of the 500 to 1000 trajectories
/// used for the action statistics.
pub const DEFAULT_COUNT: usize = 1000;

/// Which Wigner distribution the initial conditions are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampler {
    /// `ρ_W = 1/Ω`: `q` and `p` uniform on the torus.
    UniformTorus,
    /// `ρ_W = δ(q - Q) / Ω_p`: fixed position, uniform momentum.
    PositionState { q: f64 },
    /// Caller-supplied points, used verbatim.
    ExplicitList { points: Vec<PhasePoint> },
}

/// How the uniform coordinates are placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Independent pseudorandom draws.
    #[default]
    Random,
    /// Cell-centred regular grid (midpoint rule).
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub sampler: Sampler,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub placement: Placement,
}

impl EnsembleSpec {
    pub fn uniform_torus(count: usize, seed: u64) -> Self {
        EnsembleSpec {
            sampler: Sampler::UniformTorus,
            count,
            seed,
            placement: Placement::Random,
        }
    }

    pub fn position_state(q: f64, count: usize, seed: u64) -> Self {
        EnsembleSpec {
            sampler: Sampler::PositionState { q },
            count,
            seed,
            placement: Placement::Random,
        }
    }

    pub fn explicit(points: Vec<PhasePoint>) -> Self {
        EnsembleSpec {
            count: points.len(),
            sampler: Sampler::ExplicitList { points },
            seed: 0,
            placement: Placement::Random,
        }
    }

    pub fn with_placement(self, placement: Placement) -> Self {
        EnsembleSpec { placement, ..self }
    }

    pub fn with_count(self, count: usize) -> Self {
        EnsembleSpec { count, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        EnsembleSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Ensemble("count must be at least 1".into()));
        }
        match &self.sampler {
            Sampler::ExplicitList { points } if points.is_empty() => {
                Err(Error::Ensemble("explicit point list is empty".into()))
            }
            Sampler::ExplicitList { points } if points.len() != self.count => {
                Err(Error::Ensemble(format!(
                    "count {} does not match {} explicit points",
                    self.count,
                    points.len()
                )))
            }
            Sampler::PositionState { q } if !q.is_finite() => {
                Err(Error::Ensemble(format!("position Q = {q} is not finite")))
            }
            _ => Ok(()),
        }
    }

    /// The `index`-th initial condition. Assumes a validated spec.
    pub fn point(&self, index: usize) -> PhasePoint {
        match (&self.sampler, self.placement) {
            (Sampler::ExplicitList { points }, _) => points[index],
            (Sampler::UniformTorus, Placement::Random) => {
                let mut rng = self.stream(index);
                let q = rng.gen::<f64>() * TWO_PI;
                let p = rng.gen::<f64>() * TWO_PI;
                PhasePoint::new(q, p)
            }
            (Sampler::UniformTorus, Placement::Grid) => {
                let side = (self.count as f64).sqrt().ceil() as usize;
                let cell = TWO_PI / side as f64;
                let (iq, ip) = (index % side, index / side);
                PhasePoint::new((iq as f64 + 0.5) * cell, (ip as f64 + 0.5) * cell)
            }
            (Sampler::PositionState { q }, Placement::Random) => {
                let mut rng = self.stream(index);
                PhasePoint::new(*q, rng.gen::<f64>() * TWO_PI)
            }
            (Sampler::PositionState { q }, Placement::Grid) => {
                let p = (index as f64 + 0.5) * TWO_PI / self.count as f64;
                PhasePoint::new(*q, p)
            }
        }
    }

    fn stream(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Draws the whole ensemble.
pub fn sample(spec: &EnsembleSpec) -> Result<Vec<PhasePoint>> {
    spec.validate()?;
    Ok((0..spec.count).map(|i| spec.point(i)).collect())
}

/// Trajectory pairs `(x′, x″)` with `x″ = x′ - (0, p₋)` on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub base: EnsembleSpec,
    pub p_minus: f64,
}

impl PairSpec {
    pub fn new(base: EnsembleSpec, p_minus: f64) -> Self {
        PairSpec { base, p_minus }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.p_minus >= 0.0 && self.p_minus.is_finite()) {
            return Err(Error::Ensemble(format!(
                "momentum separation must be finite and >= 0, got {}",
                self.p_minus
            )));
        }
        Ok(())
    }

    pub fn pair(&self, index: usize) -> (PhasePoint, PhasePoint) {
        let first = self.base.point(index);
        (first, shift_momentum(first, self.p_minus))
    }
}

/// `x - (0, p_minus)`, wrapped.
#[inline]
pub fn shift_momentum(x: PhasePoint, p_minus: f64) -> PhasePoint {
    PhasePoint {
        q: x.q,
        p: wrap_angle(x.p - p_minus),
    }
}

pub fn sample_pairs(spec: &PairSpec) -> Result<Vec<(PhasePoint, PhasePoint)>> {
    spec.validate()?;
    Ok((0..spec.base.count).map(|i| spec.pair(i)).collect())
}

//! Named, reproducible experiment configurations.
//!
//! Every preset uses seed 1. Fit windows were fixed once per preset and are
//! reported in each run's manifest; all of them can be overridden.

use std::f64::consts::PI;

use crate::config::*;
use crate::ensemble::{Placement, Sampler};
use crate::fidelity::{FitRole, Regime, RegimeParams};
use crate::map::MapParams;
use crate::stats::{FitSpace, Smoothing};
use crate::{Error, Result};

/// Initial position of the position-state ensembles.
pub const Q0: f64 = 0.8 * PI;

pub const NAMES: [&str; 9] = [
    "fig1a",
    "fig1b",
    "fig2a",
    "fig2b",
    "fig3a",
    "fig3b",
    "fgr-compare",
    "gaussian-compare",
    "cubic-exponential-search",
];

fn chaotic() -> MapParams {
    MapParams::new(20.0, 0.003)
}

fn quasi_integrable() -> MapParams {
    MapParams::new(0.3, 0.005)
}

fn position(count: usize) -> Option<EnsembleConfig> {
    Some(EnsembleConfig {
        sampler: Sampler::PositionState { q: Q0 },
        count,
        placement: Placement::Random,
    })
}

fn uniform(count: usize) -> EnsembleConfig {
    EnsembleConfig {
        sampler: Sampler::UniformTorus,
        count,
        placement: Placement::Random,
    }
}

fn fit(name: &str, space: FitSpace, window: [f64; 2], expect: Option<[f64; 2]>) -> FitSpec {
    FitSpec {
        name: name.into(),
        space,
        window,
        target: FitTarget::Series,
        expect,
        role: None,
    }
}

fn base(kind: ExperimentKind, map: MapParams) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        seed: 1,
        map,
        ensemble: position(1000),
        p_minus: None,
        steps: None,
        time: None,
        grid: None,
        hbar: None,
        smoothing: Smoothing::None,
        fits: Vec::new(),
        correlators: None,
        lyapunov: None,
        quantum: None,
        predict: None,
        compare: None,
        output_dir: None,
        workers: None,
    }
}

fn separation_grid() -> Option<GridSpec> {
    // p₋ beyond 2π wraps; the long tail gives the plateau fit enough decades
    Some(GridSpec::Log {
        lo: 1e-12,
        hi: 1e3,
        per_decade: 25,
    })
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use ExperimentKind::*;
    use FitSpace::*;
    let c = match name {
        "fig1a" => ExperimentConfig {
            steps: Some(1000),
            fits: vec![fit("slope", LogLog, [10.0, 1000.0], Some([0.9, 1.1]))
                .with_role(FitRole::Uncorrelated)],
            ..base(VarianceVsTime, chaotic())
        },
        "fig1b" => ExperimentConfig {
            steps: Some(1000),
            fits: vec![fit("slope", LogLog, [20.0, 1000.0], Some([1.9, 2.1]))
                .with_role(FitRole::Uncorrelated)],
            ..base(VarianceVsTime, quasi_integrable())
        },
        "fig2a" => ExperimentConfig {
            time: Some(7),
            grid: separation_grid(),
            fits: vec![
                fit("small", LogLog, [1e-12, 1e-9], Some([1.85, 2.15])),
                fit("plateau", LogLog, [1.0, 1000.0], Some([-0.1, 0.1])),
            ],
            ..base(PairVarianceVsSeparation, chaotic())
        },
        "fig2b" => ExperimentConfig {
            time: Some(7),
            grid: separation_grid(),
            fits: vec![
                fit("small", LogLog, [1e-8, 1e-3], Some([1.9, 2.1])),
                fit("plateau", LogLog, [1.0, 1000.0], Some([-0.05, 0.05])),
            ],
            ..base(PairVarianceVsSeparation, quasi_integrable())
        },
        "fig3a" => ExperimentConfig {
            p_minus: Some(1e-9),
            steps: Some(2000),
            lyapunov: Some(LyapunovConfig { steps: 200 }),
            fits: vec![
                fit("early", SemiLog, [2.0, 8.0], None).with_role(FitRole::CorrelatedSmallT),
                fit("late", LogLog, [50.0, 2000.0], Some([0.8, 1.2])),
            ],
            ..base(PairVarianceVsTime, chaotic())
        },
        "fig3b" => ExperimentConfig {
            p_minus: Some(1e-9),
            steps: Some(10_000),
            smoothing: Smoothing::WindowAverage,
            fits: vec![
                fit("early", LogLog, [5.0, 50.0], Some([2.8, 3.3]))
                    .with_role(FitRole::CorrelatedSmallT),
                fit("late", LogLog, [200.0, 10_000.0], Some([1.85, 2.15])),
            ],
            ..base(PairVarianceVsTime, quasi_integrable())
        },
        "fgr-compare" => ExperimentConfig {
            ensemble: position(20_000),
            steps: Some(180),
            hbar: Some(HbarSpec::Dimension {
                n: 1000,
                convention: HbarConvention::Torus,
            }),
            quantum: Some(QuantumConfig { n: 1000 }),
            correlators: Some(CorrelatorConfig {
                max_lag: 20,
                ensemble: Some(uniform(20_000)),
            }),
            predict: Some(PredictConfig {
                regime: Regime::FermiGoldenRule,
                params: RegimeParams::default(),
            }),
            compare: Some(CompareConfig {
                against: vec![
                    Reference::ClosedForm,
                    Reference::Quantum,
                    Reference::PairFormula,
                ],
                rate_window: [2.0, 50.0],
                pair_formula_grid: None,
                pair_formula_max_rounds: 12,
            }),
            ..base(Compare, chaotic())
        },
        "gaussian-compare" => ExperimentConfig {
            ensemble: position(10_000),
            steps: Some(150),
            hbar: Some(HbarSpec::Dimension {
                n: 100,
                convention: HbarConvention::Torus,
            }),
            quantum: Some(QuantumConfig { n: 100 }),
            // C_V^∞ over the same position-state ensemble the fidelity uses
            correlators: Some(CorrelatorConfig {
                max_lag: 400,
                ensemble: None,
            }),
            predict: Some(PredictConfig {
                regime: Regime::Gaussian,
                params: RegimeParams::default(),
            }),
            compare: Some(CompareConfig {
                against: vec![
                    Reference::ClosedForm,
                    Reference::Quantum,
                    Reference::PairFormula,
                ],
                rate_window: [2.0, 50.0],
                pair_formula_grid: None,
                pair_formula_max_rounds: 12,
            }),
            ..base(Compare, quasi_integrable())
        },
        "cubic-exponential-search" => ExperimentConfig {
            ensemble: position(10_000),
            steps: Some(60),
            hbar: Some(HbarSpec::Dimension {
                n: 100,
                convention: HbarConvention::Torus,
            }),
            fits: vec![FitSpec {
                name: "decay-exponent".into(),
                space: LogLog,
                window: [2.0, 20.0],
                target: FitTarget::DecayExponent,
                expect: Some([2.75, 3.25]),
                role: Some(FitRole::CorrelatedSmallT),
            }],
            ..base(DrFidelity, quasi_integrable())
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(c)
}

impl FitSpec {
    pub fn with_role(self, role: FitRole) -> Self {
        FitSpec {
            role: Some(role),
            ..self
        }
    }
}

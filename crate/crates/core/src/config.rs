//! Experiment configuration: a TOML document describing one run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::ensemble::{EnsembleSpec, PairSpec, Placement, Sampler, DEFAULT_COUNT};
use crate::fidelity::{FitRole, Regime, RegimeParams};
use crate::map::MapParams;
use crate::stats::{log_grid, FitSpace, Smoothing};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VarianceVsTime,
    PairVarianceVsTime,
    PairVarianceVsSeparation,
    Correlators,
    DrFidelity,
    QuantumFidelity,
    Compare,
    Predict,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::VarianceVsTime,
        ExperimentKind::PairVarianceVsTime,
        ExperimentKind::PairVarianceVsSeparation,
        ExperimentKind::Correlators,
        ExperimentKind::DrFidelity,
        ExperimentKind::QuantumFidelity,
        ExperimentKind::Compare,
        ExperimentKind::Predict,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::VarianceVsTime => "variance-vs-time",
            ExperimentKind::PairVarianceVsTime => "pair-variance-vs-time",
            ExperimentKind::PairVarianceVsSeparation => "pair-variance-vs-separation",
            ExperimentKind::Correlators => "correlators",
            ExperimentKind::DrFidelity => "dr-fidelity",
            ExperimentKind::QuantumFidelity => "quantum-fidelity",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Predict => "predict",
        }
    }
}

/// Ensemble section; the seed lives at the top level of the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub sampler: Sampler,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub placement: Placement,
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

impl EnsembleConfig {
    pub fn spec(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            sampler: self.sampler.clone(),
            count: self.count,
            seed,
            placement: self.placement,
        }
    }
}

/// How a Hilbert-space dimension n maps to ħ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HbarConvention {
    /// `ħ = 2π/n`, consistent with n states on the (2π)² torus.
    #[default]
    Torus,
    /// `ħ = 1/(2πn)`.
    Inverse,
}

/// ħ given directly or derived from a Hilbert-space dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HbarSpec {
    Value(f64),
    Dimension {
        n: usize,
        #[serde(default)]
        convention: HbarConvention,
    },
}

impl HbarSpec {
    pub fn value(&self) -> f64 {
        match *self {
            HbarSpec::Value(h) => h,
            HbarSpec::Dimension {
                n,
                convention: HbarConvention::Torus,
            } => crate::map::TWO_PI / n as f64,
            HbarSpec::Dimension {
                n,
                convention: HbarConvention::Inverse,
            } => 1.0 / (crate::map::TWO_PI * n as f64),
        }
    }
}

/// Momentum-separation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Explicit(Vec<f64>),
    Log { lo: f64, hi: f64, per_decade: usize },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Explicit(v) => v.clone(),
            GridSpec::Log { lo, hi, per_decade } => log_grid(*lo, *hi, *per_decade),
        }
    }
}

/// What a fit is applied to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitTarget {
    /// The experiment's main series as written.
    #[default]
    Series,
    /// `-ln M` of a fidelity curve, for power-law decay exponents.
    DecayExponent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub name: String,
    pub space: FitSpace,
    pub window: [f64; 2],
    #[serde(default)]
    pub target: FitTarget,
    /// Expected slope range; a fit outside it flags the run.
    #[serde(default)]
    pub expect: Option<[f64; 2]>,
    /// Role used when classifying the regime from this fit.
    #[serde(default)]
    pub role: Option<FitRole>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorConfig {
    pub max_lag: usize,
    /// Ensemble for the correlators; defaults to the main ensemble.
    #[serde(default)]
    pub ensemble: Option<EnsembleConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumConfig {
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub regime: Regime,
    #[serde(default)]
    pub params: RegimeParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Quantum,
    PairFormula,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub against: Vec<Reference>,
    /// Window for the fitted exponential decay rates.
    pub rate_window: [f64; 2],
    /// Starting separation grid on [0, π] for the Gaussian pair-formula reference.
    #[serde(default)]
    pub pair_formula_grid: Option<GridSpec>,
    #[serde(default = "default_rounds")]
    pub pair_formula_max_rounds: usize,
}

fn default_rounds() -> usize {
    12
}

/// One experiment. Sections not used by `kind` may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub map: MapParams,
    #[serde(default)]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub p_minus: Option<f64>,
    /// Largest time step T.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Single time t for separation scans.
    #[serde(default)]
    pub time: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub hbar: Option<HbarSpec>,
    #[serde(default)]
    pub smoothing: Smoothing,
    #[serde(default)]
    pub fits: Vec<FitSpec>,
    #[serde(default)]
    pub correlators: Option<CorrelatorConfig>,
    #[serde(default)]
    pub lyapunov: Option<LyapunovConfig>,
    #[serde(default)]
    pub quantum: Option<QuantumConfig>,
    #[serde(default)]
    pub predict: Option<PredictConfig>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    /// Not part of the config hash.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Not part of the config hash.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn missing(field: &str) -> Error {
    Error::config(field, "required for this experiment kind")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| Error::config(toml_field(text, &e), e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Applies `key=value` overrides. Keys are dotted paths; values are TOML
    /// literals, with bare words taken as strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc =
            toml::Value::try_from(self).map_err(|e| Error::config("<config>", e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::config(item, "override must look like key=value"))?;
            let key = key.trim();
            let value = parse_literal(raw.trim());
            set_path(&mut doc, key, value)?;
        }
        let text = toml::to_string(&doc).map_err(|e| Error::config("<config>", e.to_string()))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, ignoring output location and
    /// worker count.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.workers = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec> {
        let e = self.ensemble.as_ref().ok_or_else(|| missing("ensemble"))?;
        let spec = e.spec(self.seed);
        spec.validate()
            .map_err(|err| Error::config("ensemble", err.to_string()))?;
        Ok(spec)
    }

    pub fn pair_spec(&self) -> Result<PairSpec> {
        let p = self.p_minus.ok_or_else(|| missing("p_minus"))?;
        let spec = PairSpec::new(self.ensemble_spec()?, p);
        spec.validate()
            .map_err(|err| Error::config("p_minus", err.to_string()))?;
        Ok(spec)
    }

    pub fn steps(&self) -> Result<usize> {
        self.steps.ok_or_else(|| missing("steps"))
    }

    pub fn time(&self) -> Result<usize> {
        self.time.ok_or_else(|| missing("time"))
    }

    pub fn hbar(&self) -> Result<f64> {
        let h = self.hbar.as_ref().ok_or_else(|| missing("hbar"))?.value();
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::config("hbar", format!("must be positive, got {h}")));
        }
        Ok(h)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid"))?.values();
        if g.is_empty() {
            return Err(Error::config("grid", "is empty"));
        }
        if let Some(bad) = g.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::config(
                "grid",
                format!("value {bad} must be finite and >= 0"),
            ));
        }
        Ok(g)
    }

    /// Checks that every section `kind` needs is present and sane.
    pub fn validate(&self) -> Result<()> {
        if let Err(e) = self.map.validate() {
            let field = if self.map.k >= 0.0 && self.map.k.is_finite() {
                "map.epsilon"
            } else {
                "map.k"
            };
            return Err(Error::config(field, e.to_string()));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        for f in &self.fits {
            if !(f.window[0] < f.window[1]) {
                return Err(Error::config(
                    format!("fits.{}.window", f.name),
                    "lower bound must be below upper",
                ));
            }
        }
        use ExperimentKind::*;
        match self.kind {
            VarianceVsTime => {
                self.ensemble_spec()?;
                self.steps()?;
            }
            PairVarianceVsTime => {
                self.pair_spec()?;
                self.steps()?;
            }
            PairVarianceVsSeparation => {
                self.ensemble_spec()?;
                self.time()?;
                self.grid()?;
            }
            Correlators => {
                self.ensemble_spec()?;
                self.correlators
                    .as_ref()
                    .ok_or_else(|| missing("correlators"))?;
            }
            DrFidelity => {
                self.ensemble_spec()?;
                self.steps()?;
                self.hbar()?;
            }
            QuantumFidelity => {
                self.quantum_q()?;
                self.quantum.as_ref().ok_or_else(|| missing("quantum"))?;
                self.steps()?;
                self.hbar()?;
            }
            Compare => {
                self.ensemble_spec()?;
                self.steps()?;
                self.hbar()?;
                let c = self.compare.as_ref().ok_or_else(|| missing("compare"))?;
                if c.against.is_empty() {
                    return Err(Error::config("compare.against", "lists no reference"));
                }
                for r in &c.against {
                    match r {
                        Reference::Quantum => {
                            self.quantum.as_ref().ok_or_else(|| missing("quantum"))?;
                            self.quantum_q()?;
                        }
                        Reference::PairFormula => {
                            self.quantum_q()?;
                        }
                        Reference::ClosedForm => {
                            self.predict.as_ref().ok_or_else(|| missing("predict"))?;
                        }
                    }
                }
            }
            Predict => {
                self.predict.as_ref().ok_or_else(|| missing("predict"))?;
                self.steps()?;
            }
        }
        Ok(())
    }

    /// Position Q of a position-state ensemble.
    pub fn quantum_q(&self) -> Result<f64> {
        match self.ensemble.as_ref().map(|e| &e.sampler) {
            Some(Sampler::PositionState { q }) => Ok(*q),
            _ => Err(Error::config(
                "ensemble.sampler",
                "a position-state sampler is required",
            )),
        }
    }
}

/// Dotted key of the line the parse error points at, e.g. `map.k`.
fn toml_field(text: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else {
        return "<config>".into();
    };
    let before = &text[..span.start.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let section = before[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim());
    let key = match line.split_once('=') {
        Some((k, _)) => k.trim(),
        None => line.trim().trim_matches(|c| c == '[' || c == ']').trim(),
    };
    match section {
        Some(sec) if !line.trim_start().starts_with('[') => format!("{sec}.{key}"),
        _ => key.to_string(),
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(doc: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::config(key, format!("`{}` is not a table", parts[..i].join(".")))
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::config(key, "empty key"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
kind = "pair-variance-vs-time"
seed = 3
steps = 50
p_minus = 1e-9
smoothing = "window-average"

[map]
k = 0.3
epsilon = 0.005

[ensemble]
count = 200
sampler = { kind = "position-state", q = 2.5132741228718345 }

[[fits]]
name = "early"
space = "log-log"
window = [5.0, 50.0]
expect = [2.8, 3.3]
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.kind, ExperimentKind::PairVarianceVsTime);
        assert_eq!(c.fits[0].expect, Some([2.8, 3.3]));
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_apply_dotted_paths() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let o = c
            .with_overrides(&["map.k=20", "ensemble.count=10", "seed=9", "smoothing=none"])
            .unwrap();
        assert_eq!(o.map.k, 20.0);
        assert_eq!(o.ensemble.as_ref().unwrap().count, 10);
        assert_eq!(o.seed, 9);
        assert_eq!(o.smoothing, Smoothing::None);
        assert!(c.with_overrides(&["nonsense"]).is_err());
        assert!(c.with_overrides(&["map.bogus=1"]).is_err());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut d = c.clone();
        d.workers = Some(4);
        d.output_dir = Some("elsewhere".into());
        assert_eq!(c.hash(), d.hash());
        d.seed = 4;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn missing_section_is_named() {
        let mut c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        c.p_minus = None;
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "p_minus"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hbar_conventions() {
        let t = HbarSpec::Dimension {
            n: 1000,
            convention: HbarConvention::Torus,
        };
        let i = HbarSpec::Dimension {
            n: 1000,
            convention: HbarConvention::Inverse,
        };
        assert!((t.value() - 2.0 * std::f64::consts::PI / 1000.0).abs() < 1e-18);
        assert!((i.value() - 1.0 / (2000.0 * std::f64::consts::PI)).abs() < 1e-18);
        let parsed: ExperimentConfig = ExperimentConfig::from_toml(
            "kind = \"predict\"\nsteps = 3\nhbar = { n = 100 }\n[map]\nk = 1\nepsilon = 0.1\n[predict]\nregime = \"gaussian\"\n",
        )
        .unwrap();
        assert!((parsed.hbar().unwrap() - 2.0 * std::f64::consts::PI / 100.0).abs() < 1e-15);
    }
}

//! Fidelity estimates: Monte Carlo dephasing representation, closed-form
//! regime predictions, and quadrature of the Gaussian pair formula over a
//! measured separation scan.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ensemble::EnsembleSpec;
use crate::map::{potential_sums, KickedMap, TWO_PI};
use crate::reduce::{reduce_indexed, ColumnSums};
use crate::stats::{scan_nodes, FitSpace, SeparationScan, SlopeFit};
use crate::{Error, Result};

/// How a fidelity curve was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DrMonteCarlo,
    ClosedForm,
    PairFormula,
    QuantumExact,
}

/// Decay regimes of the fidelity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    FermiGoldenRule,
    Gaussian,
    Lyapunov,
    Algebraic,
    Superexponential,
    CubicExponential,
    Unclassified,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::FermiGoldenRule,
        Regime::Gaussian,
        Regime::Lyapunov,
        Regime::Algebraic,
        Regime::Superexponential,
        Regime::CubicExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::FermiGoldenRule => "fermi-golden-rule",
            Regime::Gaussian => "gaussian",
            Regime::Lyapunov => "lyapunov",
            Regime::Algebraic => "algebraic",
            Regime::Superexponential => "superexponential",
            Regime::CubicExponential => "cubic-exponential",
            Regime::Unclassified => "unclassified",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurve {
    pub times: Vec<usize>,
    pub m: Vec<f64>,
    /// Standard error per time; empty for deterministic methods.
    #[serde(default)]
    pub std_err: Vec<f64>,
    pub method: Method,
    #[serde(default)]
    pub regime: Option<Regime>,
    /// True when some value of an asymptotic form was clamped to [0, 1].
    #[serde(default)]
    pub clamped: bool,
}

impl FidelityCurve {
    /// First time at which M drops below `level`, if any.
    pub fn first_below(&self, level: f64) -> Option<usize> {
        self.times
            .iter()
            .zip(&self.m)
            .find(|(_, m)| **m < level)
            .map(|(t, _)| *t)
    }
}

/// Parameters entering the closed-form predictions. Fields a regime does not
/// use may be left unset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeParams {
    /// Potential-correlator integral.
    #[serde(rename = "K", default)]
    pub k: Option<f64>,
    #[serde(rename = "C_V_inf", default)]
    pub c_v_inf: Option<f64>,
    /// Force-correlator integral.
    #[serde(rename = "D", default)]
    pub d_force: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(rename = "m", default)]
    pub mass: Option<f64>,
    #[serde(rename = "d", default)]
    pub dims: Option<u32>,
    #[serde(rename = "Omega", default)]
    pub omega: Option<f64>,
    #[serde(rename = "Omega_p", default)]
    pub omega_p: Option<f64>,
    #[serde(rename = "Omega_u", default)]
    pub omega_u: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub hbar: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn need(value: Option<f64>, name: &'static str) -> Result<f64> {
    let v = value.ok_or(Error::MissingParameter(name))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::NonPositiveParameter { name, value: v });
    }
    Ok(v)
}

impl RegimeParams {
    pub fn dims(&self) -> u32 {
        self.dims.unwrap_or(1)
    }
    pub fn mass(&self) -> f64 {
        self.mass.unwrap_or(1.0)
    }
    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or(TWO_PI.powi(2 * self.dims() as i32))
    }
    pub fn omega_p(&self) -> f64 {
        self.omega_p.unwrap_or(TWO_PI.powi(self.dims() as i32))
    }
    pub fn omega_u(&self) -> f64 {
        self.omega_u.unwrap_or(TWO_PI)
    }

    /// Checks the invariants shared by every regime.
    pub fn validate(&self) -> Result<()> {
        if self.dims() < 1 {
            return Err(Error::NonPositiveParameter {
                name: "d",
                value: 0.0,
            });
        }
        need(Some(self.mass()), "m")?;
        need(Some(self.omega()), "Omega")?;
        need(Some(self.omega_p()), "Omega_p")?;
        need(Some(self.omega_u()), "Omega_u")?;
        if let Some(h) = self.hbar {
            need(Some(h), "hbar")?;
        }
        Ok(())
    }
}

/// Evaluates the closed-form fidelity of `regime` at `times`.
///
/// The Lyapunov and algebraic forms are large-t asymptotics; values above 1
/// are clamped and `clamped` is set. Every form returns exactly 1 at t = 0.
/// The superexponential form is normalised as `exp(-βε²(e^{2λt} - 1))` so it
/// starts at 1.
pub fn predict_fidelity(
    regime: Regime,
    rp: &RegimeParams,
    times: &[usize],
) -> Result<FidelityCurve> {
    rp.validate()?;
    let eval: Box<dyn Fn(f64) -> f64> = match regime {
        Regime::FermiGoldenRule => {
            let (k, eps, hbar) = (
                need(rp.k, "K")?,
                need(rp.epsilon, "epsilon")?,
                need(rp.hbar, "hbar")?,
            );
            let rate = 2.0 * k * eps * eps / (hbar * hbar);
            Box::new(move |t| (-rate * t).exp())
        }
        Regime::Gaussian => {
            let (c, eps, hbar) = (
                need(rp.c_v_inf, "C_V_inf")?,
                need(rp.epsilon, "epsilon")?,
                need(rp.hbar, "hbar")?,
            );
            let rate = c * eps * eps / (hbar * hbar);
            Box::new(move |t| (-rate * t * t).exp())
        }
        Regime::Lyapunov => {
            let hbar = need(rp.hbar, "hbar")?;
            let alpha = need(rp.alpha, "alpha")?;
            let eps = need(rp.epsilon, "epsilon")?;
            let lambda = need(rp.lambda, "lambda")?;
            let d = need(rp.d_force, "D")?;
            let pre = hbar / (alpha * rp.omega_u() * eps) * (2.0 * PI * lambda / d).sqrt();
            Box::new(move |t| pre * (-lambda * t).exp())
        }
        Regime::Algebraic => {
            let hbar = need(rp.hbar, "hbar")?;
            let d = need(rp.d_force, "D")?;
            let eps = need(rp.epsilon, "epsilon")?;
            let m = rp.mass();
            let dims = rp.dims() as f64;
            let pre =
                (3.0 * PI * hbar * hbar * m * m / (d * eps * eps)).powf(dims / 2.0) / rp.omega_p();
            Box::new(move |t| pre * t.powf(-1.5 * dims))
        }
        Regime::Superexponential => {
            let (beta, eps, lambda) = (
                need(rp.beta, "beta")?,
                need(rp.epsilon, "epsilon")?,
                need(rp.lambda, "lambda")?,
            );
            Box::new(move |t| (-beta * eps * eps * (2.0 * lambda * t).exp_m1()).exp())
        }
        Regime::CubicExponential => {
            let (gamma, eps) = (need(rp.gamma, "gamma")?, need(rp.epsilon, "epsilon")?);
            Box::new(move |t| (-gamma * eps * eps * t * t * t).exp())
        }
        Regime::Unclassified => {
            return Err(Error::InvalidParameter(
                "cannot predict an unclassified regime".into(),
            ))
        }
    };
    let mut clamped = false;
    let m = times
        .iter()
        .map(|&t| {
            if t == 0 {
                return 1.0;
            }
            let v = eval(t as f64);
            if !(0.0..=1.0).contains(&v) {
                clamped = true;
            }
            v.clamp(0.0, 1.0)
        })
        .collect();
    Ok(FidelityCurve {
        times: times.to_vec(),
        m,
        std_err: Vec::new(),
        method: Method::ClosedForm,
        regime: Some(regime),
        clamped,
    })
}

/// Monte Carlo estimate of `M(t) = |⟨e^{iΔS/ħ}⟩|²` over the ensemble.
///
/// The standard error comes from the delta method applied to the sample
/// means of the cosine and sine of the phase.
pub fn dr_overlap<M: KickedMap>(
    spec: &EnsembleSpec,
    map: &M,
    hbar: f64,
    steps: usize,
) -> Result<FidelityCurve> {
    spec.validate()?;
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "hbar",
            value: hbar,
        });
    }
    let len = steps + 1;
    let scale = -map.epsilon() / hbar;
    let sums = reduce_indexed(
        spec.count,
        || (ColumnSums::new(5, len), vec![0.0; len]),
        |(acc, buf), i| {
            acc.count += 1;
            potential_sums(map, spec.point(i), buf);
            for (t, s) in buf.iter().enumerate() {
                let (sin, cos) = (scale * s).sin_cos();
                let c = &mut acc.columns;
                c[0][t] += cos;
                c[1][t] += sin;
                c[2][t] += cos * cos;
                c[3][t] += sin * sin;
                c[4][t] += cos * sin;
            }
        },
    )
    .0;
    let n = sums.count as f64;
    let c = &sums.columns;
    let mut m = Vec::with_capacity(len);
    let mut std_err = Vec::with_capacity(len);
    for t in 0..len {
        let (a, b) = (c[0][t] / n, c[1][t] / n);
        m.push((a * a + b * b).min(1.0));
        if sums.count < 2 {
            std_err.push(f64::NAN);
            continue;
        }
        let var_c = (c[2][t] / n - a * a).max(0.0);
        let var_s = (c[3][t] / n - b * b).max(0.0);
        let cov = c[4][t] / n - a * b;
        let var_y = 4.0 * (a * a * var_c + b * b * var_s + 2.0 * a * b * cov);
        std_err.push((var_y.max(0.0) / (n - 1.0)).sqrt());
    }
    Ok(FidelityCurve {
        times: (0..len).collect(),
        m,
        std_err,
        method: Method::DrMonteCarlo,
        regime: None,
        clamped: false,
    })
}

/// An interval of the separation grid where the integrand changes too fast.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageGap {
    pub time: usize,
    /// Index of the left node of the interval.
    pub node: usize,
    pub left: f64,
    pub right: f64,
}

/// Intervals narrower than this fraction of the normalised measure cannot
/// move M by more than the same amount and are not checked.
pub const NEGLIGIBLE_WIDTH: f64 = 1e-9;

/// Intervals where the integrand `exp(-v/2ħ²)` exceeds 1e-6 and changes by
/// more than 10% between adjacent nodes, beyond three standard errors of
/// the difference.
pub fn coverage_gaps(scan: &SeparationScan, hbar: f64, omega_p: f64) -> Vec<CoverageGap> {
    let p = &scan.p_minus;
    let two_h2 = 2.0 * hbar * hbar;
    let mut gaps = Vec::new();
    for (row, &time) in scan.times.iter().enumerate() {
        let v = &scan.moment[row];
        let se = &scan.std_err[row];
        for i in 0..p.len().saturating_sub(1) {
            if 2.0 * (p[i + 1] - p[i]) / omega_p < NEGLIGIBLE_WIDTH {
                continue;
            }
            let (fl, fr) = ((-v[i] / two_h2).exp(), (-v[i + 1] / two_h2).exp());
            let top = fl.max(fr);
            if top <= 1e-6 {
                continue;
            }
            let noise = ((fl * se[i]).powi(2) + (fr * se[i + 1]).powi(2)).sqrt() / two_h2;
            if (fl - fr).abs() > 0.1 * top + 3.0 * noise {
                gaps.push(CoverageGap {
                    time,
                    node: i,
                    left: fl,
                    right: fr,
                });
            }
        }
    }
    gaps
}

/// `M(t) = Ω_p⁻¹ ∫ dp₋ exp(-⟨(ΔS′ - ΔS″)²⟩ / 2ħ²)` by the trapezoidal rule.
///
/// The scan must run from p₋ = 0 to p₋ = π; the integrand is even in p₋, so
/// the half-period is doubled.
pub fn fidelity_from_pair_variance(
    scan: &SeparationScan,
    hbar: f64,
    omega_p: f64,
) -> Result<FidelityCurve> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "hbar",
            value: hbar,
        });
    }
    if !(omega_p > 0.0 && omega_p.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "Omega_p",
            value: omega_p,
        });
    }
    let p = &scan.p_minus;
    let (first, last) = (
        p.first().copied().unwrap_or(f64::NAN),
        p.last().copied().unwrap_or(f64::NAN),
    );
    if p.len() < 2
        || first != 0.0
        || (last - PI).abs() > 1e-12
        || p.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::GridRange { first, last });
    }
    if let Some(g) = coverage_gaps(scan, hbar, omega_p).first() {
        return Err(Error::Coverage {
            time: g.time,
            lo: p[g.node],
            hi: p[g.node + 1],
            left: g.left,
            right: g.right,
        });
    }
    let two_h2 = 2.0 * hbar * hbar;
    let norm = 2.0 / omega_p;
    let m = scan
        .moment
        .iter()
        .map(|v| {
            let trapezoid = |f: &dyn Fn(f64) -> f64| -> f64 {
                (0..p.len() - 1)
                    .map(|i| 0.5 * (f(v[i]) + f(v[i + 1])) * (p[i + 1] - p[i]))
                    .sum()
            };
            // near 1, integrate 1 - f so a flat unit integrand gives exactly 1;
            // near 0 that form cancels, so integrate f itself
            let from_deficit = norm * (PI - trapezoid(&|x| -(-x / two_h2).exp_m1()));
            let m = if from_deficit >= 0.5 {
                from_deficit
            } else {
                norm * trapezoid(&|x| (-x / two_h2).exp())
            };
            m.clamp(0.0, 1.0)
        })
        .collect();
    Ok(FidelityCurve {
        times: scan.times.clone(),
        m,
        std_err: Vec::new(),
        method: Method::PairFormula,
        regime: None,
        clamped: false,
    })
}

/// Default starting grid on [0, π]: zero, geometric from 1e-12 to 0.1, then
/// uniform to π.
pub fn default_separation_grid(per_decade: usize, uniform: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(crate::stats::log_grid(1e-12, 0.1, per_decade));
    let step = (PI - 0.1) / uniform as f64;
    g.extend((1..=uniform).map(|i| 0.1 + step * i as f64));
    *g.last_mut().unwrap() = PI;
    g
}

/// Result of [`pair_formula_fidelity`].
#[derive(Clone, Debug)]
pub struct PairFormulaResult {
    pub curve: FidelityCurve,
    pub scan: SeparationScan,
    /// Refinement rounds used.
    pub rounds: usize,
}

/// Measures the pair second moment on a separation grid, refines the grid
/// where the coverage check fails, and integrates.
///
/// New nodes are computed with the same base samples, so refinement never
/// changes values already measured.
pub fn pair_formula_fidelity<M: KickedMap>(
    base: &EnsembleSpec,
    map: &M,
    hbar: f64,
    steps: usize,
    grid: &[f64],
    max_rounds: usize,
) -> Result<PairFormulaResult> {
    let omega_p = TWO_PI;
    let times: Vec<usize> = (0..=steps).collect();
    let mut scan = scan_nodes(base, map, &times, grid)?;
    let mut rounds = 0;
    loop {
        let gaps = coverage_gaps(&scan, hbar, omega_p);
        if gaps.is_empty() || rounds == max_rounds {
            break;
        }
        let mut nodes: Vec<usize> = gaps.iter().map(|g| g.node).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let p = &scan.p_minus;
        let fresh: Vec<f64> = nodes
            .iter()
            .map(|&i| {
                let (a, b) = (p[i], p[i + 1]);
                if a > 0.0 && b / a > 4.0 {
                    (a * b).sqrt()
                } else {
                    0.5 * (a + b)
                }
            })
            .filter(|&x| !p.contains(&x))
            .collect();
        if fresh.is_empty() {
            break;
        }
        let extra = scan_nodes(base, map, &times, &fresh)?;
        scan.insert_nodes(extra);
        rounds += 1;
    }
    let curve = fidelity_from_pair_variance(&scan, hbar, omega_p)?;
    Ok(PairFormulaResult {
        curve,
        scan,
        rounds,
    })
}

/// Role of a slope fit presented to [`classify_regime`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitRole {
    /// σ²_ΔS (or the plateau of the pair moment) against t.
    Uncorrelated,
    /// Early pair-moment growth at small p₋, read as a short-time regime.
    CorrelatedSmallT,
    /// Early pair-moment growth at small p₋, read as a large-t regime.
    CorrelatedLargeT,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub role: FitRole,
    pub fit: SlopeFit,
}

/// Tolerance on fitted power-law exponents.
pub const SLOPE_TOLERANCE: f64 = 0.25;
/// Minimum R² for an exponential-growth verdict.
pub const MIN_R_SQUARED: f64 = 0.98;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dynamics {
    Chaotic,
    QuasiIntegrable,
}

fn verdict(f: &LabeledFit) -> Option<Dynamics> {
    let near = |target: f64| (f.fit.slope - target).abs() <= SLOPE_TOLERANCE;
    match (f.role, f.fit.space) {
        (FitRole::Uncorrelated, FitSpace::LogLog) if near(1.0) => Some(Dynamics::Chaotic),
        (FitRole::Uncorrelated, FitSpace::LogLog) if near(2.0) => Some(Dynamics::QuasiIntegrable),
        (FitRole::CorrelatedSmallT | FitRole::CorrelatedLargeT, FitSpace::SemiLog)
            if f.fit.slope > 0.0 && f.fit.r_squared >= MIN_R_SQUARED =>
        {
            Some(Dynamics::Chaotic)
        }
        (FitRole::CorrelatedSmallT | FitRole::CorrelatedLargeT, FitSpace::LogLog) if near(3.0) => {
            Some(Dynamics::QuasiIntegrable)
        }
        _ => None,
    }
}

/// Maps labelled fits to a decay regime.
///
/// The role of the first fit selects the column (uncorrelated, correlated
/// small t, correlated large t); every fit must agree on whether the
/// dynamics is chaotic or quasi-integrable. Anything else is unclassified.
pub fn classify_regime(fits: &[LabeledFit]) -> Regime {
    let Some(first) = fits.first() else {
        return Regime::Unclassified;
    };
    let mut dynamics = None;
    for f in fits {
        match (verdict(f), dynamics) {
            (None, _) => return Regime::Unclassified,
            (Some(v), None) => dynamics = Some(v),
            (Some(v), Some(d)) if v != d => return Regime::Unclassified,
            _ => {}
        }
    }
    match (first.role, dynamics.unwrap()) {
        (FitRole::Uncorrelated, Dynamics::Chaotic) => Regime::FermiGoldenRule,
        (FitRole::Uncorrelated, Dynamics::QuasiIntegrable) => Regime::Gaussian,
        (FitRole::CorrelatedSmallT, Dynamics::Chaotic) => Regime::Superexponential,
        (FitRole::CorrelatedSmallT, Dynamics::QuasiIntegrable) => Regime::CubicExponential,
        (FitRole::CorrelatedLargeT, Dynamics::Chaotic) => Regime::Lyapunov,
        (FitRole::CorrelatedLargeT, Dynamics::QuasiIntegrable) => Regime::Algebraic,
    }
}

/// Least-squares constant `c` in `-ln M(t) = c ε² g(t)` over `window`, with
/// `g(t) = e^{2λt} - 1` (superexponential, returns β) or `g(t) = t³`
/// (cubic-exponential, returns γ).
pub fn fit_short_time_constant(
    curve: &FidelityCurve,
    regime: Regime,
    epsilon: f64,
    lambda: Option<f64>,
    window: [usize; 2],
) -> Result<f64> {
    let g: Box<dyn Fn(f64) -> f64> = match regime {
        Regime::Superexponential => {
            let l = need(lambda, "lambda")?;
            Box::new(move |t| (2.0 * l * t).exp_m1())
        }
        Regime::CubicExponential => Box::new(|t| t * t * t),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "short-time constant is defined for superexponential and cubic-exponential, not {}",
                regime.name()
            )))
        }
    };
    let eps2 = need(Some(epsilon), "epsilon")?.powi(2);
    let (mut num, mut den, mut points) = (0.0, 0.0, 0);
    for (i, (&t, &m)) in curve.times.iter().zip(&curve.m).enumerate() {
        if t < window[0] || t > window[1] {
            continue;
        }
        if !(m > 0.0) {
            return Err(Error::NonPositive { index: i, value: m });
        }
        let x = eps2 * g(t as f64);
        num += x * -m.ln();
        den += x * x;
        points += 1;
    }
    if points == 0 || den == 0.0 {
        return Err(Error::EmptyWindow {
            lo: window[0] as f64,
            hi: window[1] as f64,
            points,
        });
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::MapParams;
    use crate::stats::{fit_exponential_rate, fit_loglog_slope};

    fn full() -> RegimeParams {
        RegimeParams {
            k: Some(0.06),
            c_v_inf: Some(0.1),
            d_force: Some(0.25),
            lambda: Some(2.3),
            alpha: Some(0.8),
            beta: Some(1.0),
            gamma: Some(2.0),
            hbar: Some(0.01),
            epsilon: Some(0.003),
            ..Default::default()
        }
    }

    #[test]
    fn every_regime_starts_at_one() {
        for r in Regime::ALL {
            let c = predict_fidelity(r, &full(), &[0, 1, 2]).unwrap();
            assert_eq!(c.m[0], 1.0, "{r:?}");
            assert!(c.m.iter().all(|m| (0.0..=1.0).contains(m)));
        }
    }

    #[test]
    fn algebraic_quarter_time_ratio() {
        let mut rp = full();
        rp.hbar = Some(1.0);
        rp.epsilon = Some(1e-3);
        let c = predict_fidelity(Regime::Algebraic, &rp, &[100, 400]).unwrap();
        assert!(!c.clamped);
        assert!((c.m[1] / c.m[0] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn gaussian_epsilon_doubling_quadruples_log() {
        let a = predict_fidelity(Regime::Gaussian, &full(), &[5]).unwrap();
        let mut rp = full();
        rp.epsilon = Some(0.006);
        let b = predict_fidelity(Regime::Gaussian, &rp, &[5]).unwrap();
        assert!((b.m[0].ln() / a.m[0].ln() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_is_clamped_at_small_t() {
        let mut rp = full();
        rp.hbar = Some(0.1);
        let c = predict_fidelity(Regime::Lyapunov, &rp, &[0, 1, 50]).unwrap();
        assert!(c.clamped);
        assert_eq!(c.m[1], 1.0);
        assert!(c.m[2] < 1.0);
    }

    #[test]
    fn missing_parameter_is_named() {
        let mut rp = full();
        rp.d_force = None;
        match predict_fidelity(Regime::Algebraic, &rp, &[1]) {
            Err(Error::MissingParameter(name)) => assert_eq!(name, "D"),
            other => panic!("{other:?}"),
        }
        rp.hbar = Some(-1.0);
        assert!(predict_fidelity(Regime::FermiGoldenRule, &rp, &[1]).is_err());
    }

    #[test]
    fn dr_unperturbed_is_identically_one() {
        let spec = EnsembleSpec::position_state(0.8 * PI, 64, 1);
        let c = dr_overlap(&spec, &MapParams::new(20.0, 0.0), 0.01, 20).unwrap();
        assert!(c.m.iter().all(|&m| m == 1.0));
    }

    #[test]
    fn dr_starts_at_one() {
        let spec = EnsembleSpec::uniform_torus(64, 1);
        let c = dr_overlap(&spec, &MapParams::new(20.0, 0.01), 0.01, 5).unwrap();
        assert_eq!(c.m[0], 1.0);
    }

    fn flat_scan(v: f64, grid: Vec<f64>) -> SeparationScan {
        SeparationScan {
            times: vec![3],
            moment: vec![vec![v; grid.len()]],
            std_err: vec![vec![0.0; grid.len()]],
            p_minus: grid,
            count: 10,
        }
    }

    #[test]
    fn zero_variance_gives_one() {
        let c = fidelity_from_pair_variance(
            &flat_scan(0.0, default_separation_grid(5, 20)),
            0.1,
            TWO_PI,
        )
        .unwrap();
        assert_eq!(c.m[0], 1.0);
    }

    #[test]
    fn constant_variance_gives_exponential() {
        let (v, h) = (0.003, 0.05);
        let c =
            fidelity_from_pair_variance(&flat_scan(v, default_separation_grid(5, 20)), h, TWO_PI)
                .unwrap();
        assert!((c.m[0] - (-v / (2.0 * h * h)).exp()).abs() < 1e-14);
    }

    #[test]
    fn grid_must_span_half_period() {
        let r = fidelity_from_pair_variance(&flat_scan(0.0, vec![0.0, 1.0, 3.0]), 0.1, TWO_PI);
        assert!(matches!(r, Err(Error::GridRange { .. })));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid = vec![0.0, 1.0, PI];
        let scan = SeparationScan {
            times: vec![1],
            moment: vec![vec![0.0, 0.1, 0.1]],
            std_err: vec![vec![0.0; 3]],
            p_minus: grid,
            count: 10,
        };
        match fidelity_from_pair_variance(&scan, 0.1, TWO_PI) {
            Err(Error::Coverage { lo, hi, .. }) => assert_eq!((lo, hi), (0.0, 1.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quadratic_variance_matches_erf_integral() {
        // v = c p²: M = (1/π)∫_0^π exp(-c p²/2ħ²) dp, checked by fine midpoint sum
        let (c, h) = (0.02, 0.1);
        let mut grid: Vec<f64> = (0..=4000).map(|i| PI * i as f64 / 4000.0).collect();
        grid[4000] = PI;
        let scan = SeparationScan {
            times: vec![1],
            moment: vec![grid.iter().map(|p| c * p * p).collect()],
            std_err: vec![vec![0.0; grid.len()]],
            p_minus: grid,
            count: 10,
        };
        let m = fidelity_from_pair_variance(&scan, h, TWO_PI).unwrap().m[0];
        let n = 200_000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let p = PI * (i as f64 + 0.5) / n as f64;
                (-c * p * p / (2.0 * h * h)).exp()
            })
            .sum::<f64>()
            / n as f64;
        assert!((m - oracle).abs() < 1e-6, "{m} vs {oracle}");
    }

    #[test]
    fn classification_table() {
        let x: Vec<f64> = (1..=50).map(|t| t as f64).collect();
        let pow = |a: f64| -> SlopeFit {
            let y: Vec<f64> = x.iter().map(|t| t.powf(a)).collect();
            fit_loglog_slope(&x, &y, [1.0, 50.0]).unwrap()
        };
        let exp = {
            let y: Vec<f64> = x.iter().map(|t| (0.5 * t).exp()).collect();
            fit_exponential_rate(&x, &y, [1.0, 20.0]).unwrap()
        };
        let lf = |role, fit| LabeledFit { role, fit };
        use FitRole::*;
        assert_eq!(
            classify_regime(&[lf(Uncorrelated, pow(1.0))]),
            Regime::FermiGoldenRule
        );
        assert_eq!(
            classify_regime(&[lf(Uncorrelated, pow(2.0))]),
            Regime::Gaussian
        );
        assert_eq!(
            classify_regime(&[lf(CorrelatedSmallT, pow(3.0))]),
            Regime::CubicExponential
        );
        assert_eq!(
            classify_regime(&[lf(CorrelatedSmallT, exp)]),
            Regime::Superexponential
        );
        assert_eq!(
            classify_regime(&[lf(CorrelatedLargeT, exp)]),
            Regime::Lyapunov
        );
        assert_eq!(
            classify_regime(&[lf(CorrelatedLargeT, pow(3.0)), lf(Uncorrelated, pow(2.0))]),
            Regime::Algebraic
        );
        assert_eq!(
            classify_regime(&[lf(Uncorrelated, pow(1.5))]),
            Regime::Unclassified
        );
        assert_eq!(
            classify_regime(&[lf(Uncorrelated, pow(1.0)), lf(CorrelatedSmallT, pow(3.0))]),
            Regime::Unclassified
        );
        assert_eq!(classify_regime(&[]), Regime::Unclassified);
    }

    #[test]
    fn short_time_constants_recover_inputs() {
        let times: Vec<usize> = (0..10).collect();
        let mut rp = full();
        let c = predict_fidelity(Regime::CubicExponential, &rp, &times).unwrap();
        let g = fit_short_time_constant(&c, Regime::CubicExponential, 0.003, None, [1, 9]).unwrap();
        assert!((g - 2.0).abs() < 1e-9);
        rp.lambda = Some(0.3);
        let c = predict_fidelity(Regime::Superexponential, &rp, &times).unwrap();
        let b = fit_short_time_constant(&c, Regime::Superexponential, 0.003, Some(0.3), [1, 9])
            .unwrap();
        assert!((b - 1.0).abs() < 1e-9);
    }
}

//! Action-difference statistics: σ²_ΔS, the pair second moment
//! ⟨(ΔS′ − ΔS″)²⟩, potential and force correlators with their integrals,
//! tangent-map Lyapunov estimates and the slope fits used to read off
//! power laws and exponential rates.

use serde::{Deserialize, Serialize};

use crate::ensemble::{shift_momentum, EnsembleSpec, PairSpec};
use crate::map::{final_tangent, orbit, potential_sums, KickedMap};
use crate::reduce::{reduce_indexed, ColumnSums, RunningMoments};
use crate::{Error, Result};

/// Optional post-processing of a time series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    #[default]
    None,
    /// Arithmetic mean over integer times in `(t/2, t]`.
    WindowAverage,
}

/// A variance (or second moment) indexed by integer time.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceSeries {
    pub times: Vec<usize>,
    pub variance: Vec<f64>,
    /// Naive standard error of each entry, before smoothing.
    pub std_err: Vec<f64>,
    pub count: usize,
    pub smoothing: Smoothing,
    /// Unsmoothed values; equal to `variance` when `smoothing` is `None`.
    pub raw: Vec<f64>,
    /// Sample mean of ΔS′ − ΔS″, pair series only.
    pub mean_difference: Option<Vec<f64>>,
    /// Excess kurtosis of ΔS′ − ΔS″ about zero, pair series only.
    pub excess_kurtosis: Option<Vec<f64>>,
}

impl VarianceSeries {
    fn times_f64(&self) -> Vec<f64> {
        self.times.iter().map(|&t| t as f64).collect()
    }

    pub fn fit_loglog(&self, window: [f64; 2]) -> Result<SlopeFit> {
        fit_loglog_slope(&self.times_f64(), &self.variance, window)
    }

    pub fn fit_exponential(&self, window: [f64; 2]) -> Result<SlopeFit> {
        fit_exponential_rate(&self.times_f64(), &self.variance, window)
    }
}

fn require_count(count: usize, needed: usize) -> Result<()> {
    if count < needed {
        return Err(Error::EnsembleTooSmall { count, needed });
    }
    Ok(())
}

/// Unbiased sample variance of ΔS(x′, t) across the ensemble, `t = 0..=steps`.
pub fn variance_delta_action<M: KickedMap>(
    spec: &EnsembleSpec,
    map: &M,
    steps: usize,
) -> Result<VarianceSeries> {
    spec.validate()?;
    require_count(spec.count, 2)?;
    let eps = map.epsilon();
    let len = steps + 1;
    let moments = reduce_indexed(
        spec.count,
        || (RunningMoments::new(len), vec![0.0; len]),
        |(acc, buf), i| {
            potential_sums(map, spec.point(i), buf);
            for v in buf.iter_mut() {
                *v *= -eps;
            }
            acc.push(buf);
        },
    )
    .0;
    let variance = moments.variance();
    let n = moments.count as f64;
    // SE of a sample variance under a normal approximation
    let std_err = variance
        .iter()
        .map(|v| v * (2.0 / (n - 1.0)).sqrt())
        .collect();
    Ok(VarianceSeries {
        times: (0..len).collect(),
        raw: variance.clone(),
        variance,
        std_err,
        count: spec.count,
        smoothing: Smoothing::None,
        mean_difference: None,
        excess_kurtosis: None,
    })
}

impl crate::reduce::Merge for (RunningMoments, Vec<f64>) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
    }
}

/// Sample mean of `(ΔS′ − ΔS″)²` over trajectory pairs, `t = 0..=steps`.
///
/// This is the raw second moment; the mean difference is reported alongside
/// and should stay near zero.
pub fn pair_variance_vs_time<M: KickedMap>(
    spec: &PairSpec,
    map: &M,
    steps: usize,
    smoothing: Smoothing,
) -> Result<VarianceSeries> {
    spec.validate()?;
    require_count(spec.base.count, 2)?;
    let eps = map.epsilon();
    let len = steps + 1;
    let sums = reduce_indexed(
        spec.base.count,
        || ColumnSums::new(3, len),
        |acc, i| {
            acc.count += 1;
            let (a, b) = spec.pair(i);
            let mut diff = 0.0;
            let cols = &mut acc.columns;
            for (t, (x, y)) in orbit(map, a, false)
                .zip(orbit(map, b, false))
                .take(steps)
                .enumerate()
            {
                diff += map.potential(x.q) - map.potential(y.q);
                let d = -eps * diff;
                let d2 = d * d;
                cols[0][t + 1] += d;
                cols[1][t + 1] += d2;
                cols[2][t + 1] += d2 * d2;
            }
        },
    );
    let n = sums.count as f64;
    let mean_difference: Vec<f64> = sums.columns[0].iter().map(|s| s / n).collect();
    let raw: Vec<f64> = sums.columns[1].iter().map(|s| s / n).collect();
    let fourth: Vec<f64> = sums.columns[2].iter().map(|s| s / n).collect();
    let std_err = raw
        .iter()
        .zip(&fourth)
        .map(|(m2, m4)| ((m4 - m2 * m2).max(0.0) / (n - 1.0)).sqrt())
        .collect();
    let excess_kurtosis = raw
        .iter()
        .zip(&fourth)
        .map(|(m2, m4)| if *m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 })
        .collect();
    let variance = match smoothing {
        Smoothing::None => raw.clone(),
        Smoothing::WindowAverage => window_average(&raw),
    };
    Ok(VarianceSeries {
        times: (0..len).collect(),
        variance,
        std_err,
        count: spec.base.count,
        smoothing,
        raw,
        mean_difference: Some(mean_difference),
        excess_kurtosis: Some(excess_kurtosis),
    })
}

/// Mean over integer times in `(t/2, t]`; entry 0 is copied.
pub fn window_average(series: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    for v in series {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..series.len())
        .map(|t| {
            if t == 0 {
                return series[0];
            }
            let lo = t / 2 + 1;
            (prefix[t + 1] - prefix[lo]) / (t + 1 - lo) as f64
        })
        .collect()
}

/// Pair second moment as a function of the momentum separation p₋, for one
/// or more times. Every grid node reuses the same base samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationScan {
    pub times: Vec<usize>,
    pub p_minus: Vec<f64>,
    /// `moment[row][node]` for `times[row]` and `p_minus[node]`.
    pub moment: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
    pub count: usize,
}

impl SeparationScan {
    pub fn row(&self, t: usize) -> Option<&[f64]> {
        self.times
            .iter()
            .position(|&s| s == t)
            .map(|r| self.moment[r].as_slice())
    }

    pub fn fit_loglog(&self, t: usize, window: [f64; 2]) -> Result<SlopeFit> {
        let row = self
            .row(t)
            .ok_or_else(|| Error::InvalidParameter(format!("scan has no row for t = {t}")))?;
        fit_loglog_slope(&self.p_minus, row, window)
    }

    /// Merges nodes measured on the same base ensemble and times, keeping
    /// `p_minus` sorted.
    pub fn insert_nodes(&mut self, other: SeparationScan) {
        assert_eq!(self.times, other.times, "scans must share times");
        let mut order: Vec<(f64, bool, usize)> = self
            .p_minus
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, false, i))
            .chain(other.p_minus.iter().enumerate().map(|(i, &p)| (p, true, i)))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let pick = |own: &[f64], new: &[f64]| -> Vec<f64> {
            order
                .iter()
                .map(|&(_, fresh, i)| if fresh { new[i] } else { own[i] })
                .collect()
        };
        for r in 0..self.times.len() {
            self.moment[r] = pick(&self.moment[r], &other.moment[r]);
            self.std_err[r] = pick(&self.std_err[r], &other.std_err[r]);
        }
        self.p_minus = order.iter().map(|o| o.0).collect();
    }

    /// Mean of the moment over grid nodes inside `window`.
    pub fn plateau_mean(&self, t: usize, window: [f64; 2]) -> Option<f64> {
        let row = self.row(t)?;
        let vals: Vec<f64> = self
            .p_minus
            .iter()
            .zip(row)
            .filter(|(p, _)| **p >= window[0] && **p <= window[1])
            .map(|(_, v)| *v)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Second moment of ΔS′ − ΔS″ at every `t = 0..=steps` and every grid node.
pub fn pair_moment_scan<M: KickedMap>(
    base: &EnsembleSpec,
    map: &M,
    steps: usize,
    grid: &[f64],
) -> Result<SeparationScan> {
    let times: Vec<usize> = (0..=steps).collect();
    scan_nodes(base, map, &times, grid)
}

/// Pair second moment at the single time `t` for each p₋ in `grid`.
pub fn pair_variance_vs_separation<M: KickedMap>(
    base: &EnsembleSpec,
    map: &M,
    t: usize,
    grid: &[f64],
) -> Result<SeparationScan> {
    scan_nodes(base, map, &[t], grid)
}

/// Pair second moment at each of `times` (ascending not required) and each
/// p₋ in `grid`.
pub fn scan_nodes<M: KickedMap>(
    base: &EnsembleSpec,
    map: &M,
    times: &[usize],
    grid: &[f64],
) -> Result<SeparationScan> {
    base.validate()?;
    require_count(base.count, 2)?;
    if let Some((i, g)) = grid
        .iter()
        .enumerate()
        .find(|(_, g)| !(**g >= 0.0 && g.is_finite()))
    {
        return Err(Error::InvalidParameter(format!(
            "separation grid entry {i} is {g}; must be finite and >= 0"
        )));
    }
    let steps = times.iter().copied().max().unwrap_or(0);
    // row index for each t, if recorded
    let mut row_of = vec![usize::MAX; steps + 1];
    for (r, &t) in times.iter().enumerate() {
        row_of[t] = r;
    }
    let nodes = grid.len();
    let cells = times.len() * nodes;
    let eps = map.epsilon();

    let sums = reduce_indexed(
        base.count,
        || (ColumnSums::new(2, cells), vec![0.0; steps]),
        |(acc, v_first), j| {
            acc.count += 1;
            let x0 = base.point(j);
            for (slot, x) in v_first.iter_mut().zip(orbit(map, x0, false)) {
                *slot = map.potential(x.q);
            }
            for (node, &g) in grid.iter().enumerate() {
                let mut diff = 0.0;
                let mut y = shift_momentum(x0, g);
                // X = 0 at t = 0, so a t = 0 row stays zero
                for (n, v) in v_first.iter().enumerate() {
                    diff += v - map.potential(y.q);
                    y = map.step(y, false);
                    let r = row_of[n + 1];
                    if r != usize::MAX {
                        let d = -eps * diff;
                        let d2 = d * d;
                        let c = r * nodes + node;
                        acc.columns[0][c] += d2;
                        acc.columns[1][c] += d2 * d2;
                    }
                }
            }
        },
    )
    .0;
    let n = sums.count as f64;
    let mut moment = Vec::with_capacity(times.len());
    let mut std_err = Vec::with_capacity(times.len());
    for r in 0..times.len() {
        let m2: Vec<f64> = (0..nodes)
            .map(|c| sums.columns[0][r * nodes + c] / n)
            .collect();
        let se = (0..nodes)
            .map(|c| {
                let m4 = sums.columns[1][r * nodes + c] / n;
                ((m4 - m2[c] * m2[c]).max(0.0) / (n - 1.0)).sqrt()
            })
            .collect();
        moment.push(m2);
        std_err.push(se);
    }
    Ok(SeparationScan {
        times: times.to_vec(),
        p_minus: grid.to_vec(),
        moment,
        std_err,
        count: base.count,
    })
}

impl crate::reduce::Merge for (ColumnSums, Vec<f64>) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
    }
}

/// Logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelatorKind {
    /// `C_V(t) = ⟨V(q_t) V(q_0)⟩`
    Potential,
    /// `C_F(t) = ⟨V′(q_t) V′(q_0)⟩`
    Force,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorSeries {
    pub lag: Vec<usize>,
    pub value: Vec<f64>,
    pub std_err: Vec<f64>,
    pub kind: CorrelatorKind,
}

/// `C_V(lag)` for `lag = 0..=max_lag`, averaged over `max_lag + 1` time
/// origins per trajectory and over the ensemble.
pub fn potential_correlator<M: KickedMap>(
    spec: &EnsembleSpec,
    map: &M,
    max_lag: usize,
) -> Result<CorrelatorSeries> {
    correlator(spec, map, max_lag, CorrelatorKind::Potential)
}

/// `C_F(lag)` with the force `-V′(q)`; same averaging as [`potential_correlator`].
pub fn force_correlator<M: KickedMap>(
    spec: &EnsembleSpec,
    map: &M,
    max_lag: usize,
) -> Result<CorrelatorSeries> {
    correlator(spec, map, max_lag, CorrelatorKind::Force)
}

fn correlator<M: KickedMap>(
    spec: &EnsembleSpec,
    map: &M,
    max_lag: usize,
    kind: CorrelatorKind,
) -> Result<CorrelatorSeries> {
    spec.validate()?;
    require_count(spec.count, 2)?;
    let origins = max_lag + 1;
    let len = origins + max_lag;
    let moments = reduce_indexed(
        spec.count,
        || {
            (
                RunningMoments::new(max_lag + 1),
                vec![0.0; len + max_lag + 1],
            )
        },
        |(acc, buf), i| {
            let (obs, per_traj) = buf.split_at_mut(len);
            for (slot, x) in obs.iter_mut().zip(orbit(map, spec.point(i), false)) {
                *slot = match kind {
                    CorrelatorKind::Potential => map.potential(x.q),
                    CorrelatorKind::Force => map.potential_gradient(x.q),
                };
            }
            for (lag, out) in per_traj.iter_mut().enumerate() {
                let s: f64 = (0..origins).map(|t0| obs[t0 + lag] * obs[t0]).sum();
                *out = s / origins as f64;
            }
            acc.push(per_traj);
        },
    )
    .0;
    let n = moments.count as f64;
    let std_err = moments.variance().iter().map(|v| (v / n).sqrt()).collect();
    Ok(CorrelatorSeries {
        lag: (0..=max_lag).collect(),
        value: moments.mean,
        std_err,
        kind,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMode {
    /// Trapezoidal cumulative sum truncated at the noise floor (K or D).
    SumToPlateau,
    /// Tail mean of the running time average (C_V^∞).
    Cesaro,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorIntegral {
    pub value: f64,
    /// False when the partial sum is still drifting at the end of the series.
    pub converged: bool,
    /// Last lag included in the estimate.
    pub cutoff_lag: usize,
    pub mode: IntegrationMode,
}

/// Integrates a correlator over lags with the lag-0 term half-weighted.
pub fn integrate_correlator(
    series: &CorrelatorSeries,
    mode: IntegrationMode,
) -> Result<CorrelatorIntegral> {
    let c = &series.value;
    let len = c.len();
    if len < 4 {
        return Err(Error::SeriesTooShort { len, needed: 4 });
    }
    let tail = &series.std_err[len / 2..];
    let tail_se = (tail.iter().map(|s| s * s).sum::<f64>() / tail.len() as f64).sqrt();

    match mode {
        IntegrationMode::SumToPlateau => {
            let floor = 2.0 * tail_se;
            let cutoff = (1..len - 1).find(|&l| c[l].abs() <= floor && c[l + 1].abs() <= floor);
            let partial = |upto: usize| 0.5 * c[0] + c[1..upto].iter().sum::<f64>();
            match cutoff {
                Some(l) => {
                    let value = partial(l);
                    let drift = (partial(len) - value).abs();
                    let allowed = 3.0 * tail_se * ((len - l) as f64).sqrt();
                    Ok(CorrelatorIntegral {
                        value,
                        converged: drift <= allowed,
                        cutoff_lag: l - 1,
                        mode,
                    })
                }
                None => Ok(CorrelatorIntegral {
                    value: partial(len),
                    converged: false,
                    cutoff_lag: len - 1,
                    mode,
                }),
            }
        }
        IntegrationMode::Cesaro => {
            // running average A(L) = (1/L) ∫_0^L C, trapezoidal
            let mut running = Vec::with_capacity(len - 1);
            let mut integral = 0.0;
            for l in 1..len {
                integral += 0.5 * (c[l - 1] + c[l]);
                running.push(integral / l as f64);
            }
            let m = running.len();
            let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            let value = mean(&running[m / 2..]);
            let third = mean(&running[m / 2..(3 * m) / 4]);
            let fourth = mean(&running[(3 * m) / 4..]);
            let converged = (third - fourth).abs() <= 0.1 * value.abs() + 3.0 * tail_se;
            Ok(CorrelatorIntegral {
                value,
                converged,
                cutoff_lag: len - 1,
                mode,
            })
        }
    }
}

/// Coordinates in which a straight line is fitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitSpace {
    /// `(ln x, ln y)`: slope is a power-law exponent.
    LogLog,
    /// `(x, ln y)`: slope is an exponential rate.
    SemiLog,
}

/// Least-squares line through transformed data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub fit_window: [f64; 2],
    /// Root-mean-square residual in the fit coordinates.
    pub residual: f64,
    pub r_squared: f64,
    pub points: usize,
    pub space: FitSpace,
}

impl SlopeFit {
    /// Fitted `ln y` at abscissa `x`.
    pub fn ln_value(&self, x: f64) -> f64 {
        match self.space {
            FitSpace::LogLog => self.intercept + self.slope * x.ln(),
            FitSpace::SemiLog => self.intercept + self.slope * x,
        }
    }
}

/// Slope of `ln y` against `ln x` over `window[0] <= x <= window[1]`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64], window: [f64; 2]) -> Result<SlopeFit> {
    fit_line(x, y, window, FitSpace::LogLog)
}

/// Slope of `ln y` against `x` over `window[0] <= x <= window[1]`.
pub fn fit_exponential_rate(x: &[f64], y: &[f64], window: [f64; 2]) -> Result<SlopeFit> {
    fit_line(x, y, window, FitSpace::SemiLog)
}

fn fit_line(x: &[f64], y: &[f64], window: [f64; 2], space: FitSpace) -> Result<SlopeFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        if xi < window[0] || xi > window[1] {
            continue;
        }
        if !(yi > 0.0) {
            return Err(Error::NonPositive {
                index: i,
                value: yi,
            });
        }
        let u = match space {
            FitSpace::LogLog => {
                if !(xi > 0.0) {
                    return Err(Error::NonPositive {
                        index: i,
                        value: xi,
                    });
                }
                xi.ln()
            }
            FitSpace::SemiLog => xi,
        };
        xs.push(u);
        ys.push(yi.ln());
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::EmptyWindow {
            lo: window[0],
            hi: window[1],
            points: n,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|u| (u - mx) * (u - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(u, v)| (u - mx) * (v - my)).sum();
    let syy: f64 = ys.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::EmptyWindow {
            lo: window[0],
            hi: window[1],
            points: 1,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(u, v)| (v - intercept - slope * u).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(SlopeFit {
        slope,
        intercept,
        fit_window: window,
        residual: (sse / nf).sqrt(),
        r_squared,
        points: n,
        space,
    })
}

/// Abscissa where two fitted branches predict the same value, searched
/// between the start of `early` and the end of `late`.
pub fn branch_crossover(early: &SlopeFit, late: &SlopeFit) -> Option<f64> {
    let lo = early.fit_window[0].max(f64::MIN_POSITIVE);
    let hi = late.fit_window[1];
    if !(hi > lo) {
        return None;
    }
    let gap = |x: f64| early.ln_value(x) - late.ln_value(x);
    // scan on a log grid for a sign change, then bisect
    let steps = 400;
    let at = |i: usize| lo * (hi / lo).powf(i as f64 / steps as f64);
    let mut prev = (lo, gap(lo));
    for i in 1..=steps {
        let x = at(i);
        let g = gap(x);
        if prev.1 == 0.0 {
            return Some(prev.0);
        }
        if prev.1.signum() != g.signum() {
            let (mut a, mut b) = (prev.0, x);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if gap(m).signum() == gap(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev = (x, g);
    }
    None
}

/// Lyapunov exponent and unstable-direction prefactor from tangent frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Ensemble mean of `ln(stretch) / steps`.
    pub lambda: f64,
    pub std_err: f64,
    /// Geometric-mean α in `δq(t) ≈ α x_u e^{λt}` for a momentum
    /// displacement, evaluated at `steps`.
    pub alpha: f64,
    pub count: usize,
    pub steps: usize,
}

pub fn estimate_lyapunov<M: KickedMap>(
    spec: &EnsembleSpec,
    map: &M,
    steps: usize,
) -> Result<LyapunovEstimate> {
    spec.validate()?;
    require_count(spec.count, 2)?;
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    // columns: λ_i, ln(δq) - ln|x_u|
    let m = reduce_indexed(
        spec.count,
        || RunningMoments::new(2),
        |acc, i| {
            let f = final_tangent(spec.point(i), map, steps, false);
            let lambda = f.ln_stretch() / steps as f64;
            let x_u = f.unstable_direction()[1].abs();
            let shape = f.ln_position_response_to_momentum() - x_u.ln() - f.ln_stretch();
            acc.push(&[lambda, shape]);
        },
    );
    let var = m.variance();
    Ok(LyapunovEstimate {
        lambda: m.mean[0],
        std_err: (var[0] / m.count as f64).sqrt(),
        alpha: m.mean[1].exp(),
        count: m.count,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::MapParams;
    use std::f64::consts::PI;

    #[test]
    fn zero_perturbation_gives_zero_variance() {
        let spec = EnsembleSpec::position_state(0.8 * PI, 50, 1);
        let v = variance_delta_action(&spec, &MapParams::new(20.0, 0.0), 30).unwrap();
        assert!(v.variance.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn variance_starts_at_zero_and_is_nonnegative() {
        let spec = EnsembleSpec::position_state(0.8 * PI, 100, 1);
        let v = variance_delta_action(&spec, &MapParams::new(20.0, 0.003), 30).unwrap();
        assert_eq!(v.variance[0], 0.0);
        // all trajectories share q0, so the first increment is common
        assert_eq!(v.variance[1], 0.0);
        assert!(v.variance.iter().all(|&x| x >= 0.0));
        assert!(v.variance[30] > 0.0);
    }

    #[test]
    fn variance_needs_two_samples() {
        let spec = EnsembleSpec::uniform_torus(1, 1);
        assert!(matches!(
            variance_delta_action(&spec, &MapParams::new(1.0, 0.1), 3),
            Err(Error::EnsembleTooSmall { .. })
        ));
    }

    #[test]
    fn identical_pairs_have_zero_moment() {
        let spec = PairSpec::new(EnsembleSpec::uniform_torus(40, 2), 0.0);
        let v = pair_variance_vs_time(&spec, &MapParams::new(20.0, 0.003), 20, Smoothing::None)
            .unwrap();
        assert!(v.variance.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn window_average_of_constant_and_ramp() {
        assert_eq!(window_average(&[2.0; 6]), vec![2.0; 6]);
        let ramp: Vec<f64> = (0..10).map(|t| t as f64).collect();
        let w = window_average(&ramp);
        // t = 9: mean of 5..=9
        assert_eq!(w[9], 7.0);
        assert_eq!(w[1], 1.0);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn scan_rows_match_time_series() {
        let base = EnsembleSpec::position_state(0.8 * PI, 30, 4);
        let map = MapParams::new(0.3, 0.005);
        let scan = pair_moment_scan(&base, &map, 12, &[0.0, 1e-3, 0.5]).unwrap();
        for (node, &g) in scan.p_minus.iter().enumerate() {
            let series =
                pair_variance_vs_time(&PairSpec::new(base.clone(), g), &map, 12, Smoothing::None)
                    .unwrap();
            for t in 0..=12 {
                let a = scan.moment[t][node];
                let b = series.raw[t];
                assert!(
                    (a - b).abs() <= 1e-12 * b.abs().max(1e-300),
                    "t={t} g={g}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn exact_power_law_slope() {
        let x: Vec<f64> = (1..=100).map(|t| t as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t).collect();
        let fit = fit_loglog_slope(&x, &y, [1.0, 100.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn exact_exponential_rate() {
        let x: Vec<f64> = (0..50).map(|t| t as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 5.0 * (0.7 * t).exp()).collect();
        let fit = fit_exponential_rate(&x, &y, [0.0, 49.0]).unwrap();
        assert!((fit.slope - 0.7).abs() < 1e-9);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_value_is_reported_with_index() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 2.0, 0.0, 4.0];
        match fit_loglog_slope(&x, &y, [1.0, 4.0]) {
            Err(Error::NonPositive { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        // outside the window it is ignored
        assert!(fit_loglog_slope(&x, &y, [1.0, 2.0]).is_ok());
    }

    #[test]
    fn reported_residual_reproduces() {
        let x: Vec<f64> = (1..=20).map(|t| t as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, t)| t.powf(1.5) * (1.0 + 0.05 * ((i * 7 % 5) as f64 - 2.0)))
            .collect();
        let fit = fit_loglog_slope(&x, &y, [3.0, 18.0]).unwrap();
        let sel: Vec<usize> = (2..18).collect();
        let rms = (sel
            .iter()
            .map(|&i| (y[i].ln() - fit.ln_value(x[i])).powi(2))
            .sum::<f64>()
            / sel.len() as f64)
            .sqrt();
        assert!((rms - fit.residual).abs() < 1e-12);
        assert_eq!(fit.points, sel.len());
    }

    #[test]
    fn crossover_of_power_laws() {
        // y = t^3 below 10, y = 10 t^2 above; branches meet at t = 10
        let x: Vec<f64> = (1..=100).map(|t| t as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| if t < 10.0 { t.powi(3) } else { 10.0 * t * t })
            .collect();
        let early = fit_loglog_slope(&x, &y, [1.0, 9.0]).unwrap();
        let late = fit_loglog_slope(&x, &y, [10.0, 100.0]).unwrap();
        let c = branch_crossover(&early, &late).unwrap();
        assert!((c - 10.0).abs() < 1e-6, "{c}");
    }

    #[test]
    fn cesaro_of_constant() {
        let s = CorrelatorSeries {
            lag: (0..10).collect(),
            value: vec![0.3; 10],
            std_err: vec![0.0; 10],
            kind: CorrelatorKind::Potential,
        };
        let r = integrate_correlator(&s, IntegrationMode::Cesaro).unwrap();
        assert!((r.value - 0.3).abs() < 1e-15);
        assert!(r.converged);
    }

    #[test]
    fn single_term_sum_is_half_weighted() {
        let mut value = vec![0.0; 10];
        value[0] = 0.8;
        let s = CorrelatorSeries {
            lag: (0..10).collect(),
            value,
            std_err: vec![0.0; 10],
            kind: CorrelatorKind::Potential,
        };
        let r = integrate_correlator(&s, IntegrationMode::SumToPlateau).unwrap();
        assert_eq!(r.value, 0.4);
        assert!(r.converged);
        assert_eq!(r.cutoff_lag, 0);
    }

    #[test]
    fn drifting_sum_is_flagged() {
        let s = CorrelatorSeries {
            lag: (0..20).collect(),
            value: vec![1.0; 20],
            std_err: vec![0.01; 20],
            kind: CorrelatorKind::Potential,
        };
        let r = integrate_correlator(&s, IntegrationMode::SumToPlateau).unwrap();
        assert!(!r.converged);
        assert_eq!(r.value, 0.5 + 19.0);
    }

    #[test]
    fn short_series_is_rejected() {
        let s = CorrelatorSeries {
            lag: vec![0, 1, 2],
            value: vec![1.0; 3],
            std_err: vec![0.0; 3],
            kind: CorrelatorKind::Force,
        };
        assert!(integrate_correlator(&s, IntegrationMode::Cesaro).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-12, 1e3, 25);
        assert_eq!(g.len(), 376);
        assert!((g[0] - 1e-12).abs() < 1e-27);
        assert!((g[375] - 1e3).abs() < 1e-9);
    }
}

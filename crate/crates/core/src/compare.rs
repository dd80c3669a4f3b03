//! Pointwise comparison of two fidelity curves on the same time grid.

use serde::{Deserialize, Serialize};

use crate::fidelity::FidelityCurve;
use crate::stats::fit_exponential_rate;
use crate::{Error, Result};

/// Level below which curves are no longer compared.
pub const CUTOFF_LEVEL: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub times: Vec<usize>,
    /// `|M_a(t) - M_b(t)|`.
    pub deviation: Vec<f64>,
    /// Decay rate of `b` divided by that of `a`; `None` when `a` does not decay.
    pub rate_ratio: Option<f64>,
    pub rate_a: Option<f64>,
    pub rate_b: Option<f64>,
    pub rate_window: [f64; 2],
    /// First time at which either curve is below [`CUTOFF_LEVEL`].
    pub cutoff: Option<usize>,
    /// Largest deviation strictly before `cutoff`.
    pub max_deviation: f64,
    /// Largest `|M_a - M_b| / se_a` before `cutoff`, when `a` carries errors.
    pub max_z: Option<f64>,
}

impl Comparison {
    /// True when every time before the cutoff deviates by at most `k`
    /// standard errors of `a` (plus 1e-12 for times where the error is 0).
    pub fn within_std_err(&self, a: &FidelityCurve, k: f64) -> bool {
        let end = self.cutoff.unwrap_or(self.times.len());
        (0..end.min(self.times.len())).all(|t| {
            a.std_err
                .get(t)
                .is_some_and(|se| self.deviation[t] <= k * se + 1e-12)
        })
    }
}

fn rate(c: &FidelityCurve, window: [f64; 2]) -> Option<f64> {
    let x: Vec<f64> = c.times.iter().map(|&t| t as f64).collect();
    fit_exponential_rate(&x, &c.m, window)
        .ok()
        .map(|f| -f.slope)
}

/// Compares `b` against `a`; the time grids must be identical.
pub fn compare(a: &FidelityCurve, b: &FidelityCurve, rate_window: [f64; 2]) -> Result<Comparison> {
    if a.times != b.times || a.m.len() != b.m.len() {
        return Err(Error::GridMismatch(format!(
            "{} times ({:?}..) vs {} times ({:?}..)",
            a.times.len(),
            a.times.first(),
            b.times.len(),
            b.times.first()
        )));
    }
    let deviation: Vec<f64> = a.m.iter().zip(&b.m).map(|(x, y)| (x - y).abs()).collect();
    let cutoff_index =
        a.m.iter()
            .zip(&b.m)
            .position(|(x, y)| x.min(*y) < CUTOFF_LEVEL);
    let end = cutoff_index.unwrap_or(deviation.len());
    let max_deviation = deviation[..end].iter().copied().fold(0.0, f64::max);
    let max_z = (a.std_err.len() == a.m.len()).then(|| {
        (0..end)
            .filter(|&t| a.std_err[t] > 0.0)
            .map(|t| deviation[t] / a.std_err[t])
            .fold(0.0, f64::max)
    });
    let (rate_a, rate_b) = (rate(a, rate_window), rate(b, rate_window));
    let rate_ratio = match (rate_a, rate_b) {
        (Some(ra), Some(rb)) if ra != 0.0 => Some(rb / ra),
        _ => None,
    };
    Ok(Comparison {
        times: a.times.clone(),
        deviation,
        rate_ratio,
        rate_a,
        rate_b,
        rate_window,
        cutoff: cutoff_index.map(|i| a.times[i]),
        max_deviation,
        max_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::Method;

    fn curve(m: Vec<f64>) -> FidelityCurve {
        FidelityCurve {
            times: (0..m.len()).collect(),
            std_err: vec![0.01; m.len()],
            m,
            method: Method::DrMonteCarlo,
            regime: None,
            clamped: false,
        }
    }

    #[test]
    fn identical_curves() {
        let a = curve((0..20).map(|t| (-0.1 * t as f64).exp()).collect());
        let c = compare(&a, &a, [2.0, 15.0]).unwrap();
        assert!(c.deviation.iter().all(|&d| d == 0.0));
        assert!((c.rate_ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!(c.within_std_err(&a, 3.0));
    }

    #[test]
    fn unperturbed_curves() {
        let a = curve(vec![1.0; 10]);
        let c = compare(&a, &a, [1.0, 9.0]).unwrap();
        assert_eq!(c.max_deviation, 0.0);
        assert_eq!(c.rate_ratio, None);
    }

    #[test]
    fn mismatched_grids() {
        let a = curve(vec![1.0; 10]);
        let b = curve(vec![1.0; 11]);
        assert!(matches!(
            compare(&a, &b, [1.0, 5.0]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn cutoff_limits_the_deviation() {
        let a = curve(vec![1.0, 0.5, 0.02, 0.005, 0.001]);
        let b = curve(vec![1.0, 0.49, 0.02, 0.5, 0.5]);
        let c = compare(&a, &b, [0.0, 2.0]).unwrap();
        assert_eq!(c.cutoff, Some(3));
        assert!((c.max_deviation - 0.01).abs() < 1e-12);
    }
}

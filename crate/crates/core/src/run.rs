//! Experiment execution and persistence: tab-separated data files, a JSON
//! manifest and a gnuplot script per run.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::compare::{compare, Comparison};
use crate::config::{ExperimentConfig, ExperimentKind, FitSpec, FitTarget, Reference};
use crate::ensemble::{EnsembleSpec, Sampler};
use crate::fidelity::{
    classify_regime, default_separation_grid, dr_overlap, fit_short_time_constant,
    pair_formula_fidelity, predict_fidelity, FidelityCurve, LabeledFit, Regime, RegimeParams,
};
use crate::map::TWO_PI;
use crate::quantum::{grid_index, position_state, quantum_fidelity};
use crate::reduce::with_workers;
use crate::stats::{
    branch_crossover, estimate_lyapunov, fit_exponential_rate, fit_loglog_slope, force_correlator,
    integrate_correlator, pair_variance_vs_separation, pair_variance_vs_time, potential_correlator,
    variance_delta_action, FitSpace, IntegrationMode, SlopeFit,
};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Accepted band for DR-vs-quantum decay-rate ratios.
pub const QUANTUM_RATE_BAND: [f64; 2] = [0.7, 1.3];
/// Accepted band for DR-vs-closed-form decay-rate ratios.
pub const PREDICTION_RATE_BAND: [f64; 2] = [0.75, 1.25];
/// Accepted band for plateau / (2 σ²_ΔS).
pub const PLATEAU_RATIO_BAND: [f64; 2] = [0.85, 1.15];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    /// Completed, but a fit, estimate or comparison fell outside its band.
    Flagged,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Failed => 1,
            Status::Flagged => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub name: String,
    pub fit: SlopeFit,
    pub expect: Option<[f64; 2]>,
    pub within: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub wall_time_s: f64,
    pub status: Status,
    pub files: Vec<FileEntry>,
    pub fits: Vec<FitRecord>,
    pub estimates: BTreeMap<String, f64>,
    pub regime: Option<Regime>,
    pub flags: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug)]
enum Cell {
    I(usize),
    F(f64),
}

/// One columnar output file.
#[derive(Debug)]
struct Table {
    name: &'static str,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    /// Log-scale axes for the plot script.
    log_x: bool,
    log_y: bool,
}

impl Table {
    fn new(name: &'static str, columns: &[&str], log_x: bool, log_y: bool) -> Self {
        Table {
            name,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            log_x,
            log_y,
        }
    }

    fn file(&self) -> String {
        format!("{}.tsv", self.name)
    }

    fn render(&self, cfg: &ExperimentConfig, hash: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dephasing {VERSION}");
        let _ = writeln!(s, "# config-hash {hash}");
        let _ = writeln!(s, "# kind {} seed {}", cfg.kind.name(), cfg.seed);
        let _ = writeln!(s, "# {}", self.columns.join("\t"));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::I(i) => i.to_string(),
                    Cell::F(x) => format!("{x:e}"),
                })
                .collect();
            s.push_str(&cells.join("\t"));
            s.push('\n');
        }
        s
    }
}

/// Everything produced by one experiment before it is written out.
#[derive(Debug, Default)]
struct Outcome {
    tables: Vec<Table>,
    fits: Vec<FitRecord>,
    estimates: BTreeMap<String, f64>,
    regime: Option<Regime>,
    flags: Vec<String>,
}

impl Outcome {
    fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }

    fn estimate(&mut self, key: impl Into<String>, value: f64) {
        self.estimates.insert(key.into(), value);
    }

    fn check_band(&mut self, key: &str, value: f64, band: [f64; 2]) {
        self.estimate(key, value);
        if !(value >= band[0] && value <= band[1]) {
            self.flag(format!(
                "{key} = {value} outside [{}, {}]",
                band[0], band[1]
            ));
        }
    }

    /// Fits every spec against `(x, y)`; decay-exponent targets use `-ln y`.
    fn apply_fits(&mut self, specs: &[FitSpec], x: &[f64], y: &[f64]) {
        for spec in specs {
            let ys: Vec<f64> = match spec.target {
                FitTarget::Series => y.to_vec(),
                FitTarget::DecayExponent => y.iter().map(|m| -m.ln()).collect(),
            };
            let result = match spec.space {
                FitSpace::LogLog => fit_loglog_slope(x, &ys, spec.window),
                FitSpace::SemiLog => fit_exponential_rate(x, &ys, spec.window),
            };
            match result {
                Ok(fit) => {
                    let within = spec
                        .expect
                        .map(|[lo, hi]| fit.slope >= lo && fit.slope <= hi);
                    if within == Some(false) {
                        self.flag(format!(
                            "fit `{}` slope {} outside {:?}",
                            spec.name,
                            fit.slope,
                            spec.expect.unwrap()
                        ));
                    }
                    self.fits.push(FitRecord {
                        name: spec.name.clone(),
                        fit,
                        expect: spec.expect,
                        within,
                    });
                }
                Err(e) => self.flag(format!("fit `{}` failed: {e}", spec.name)),
            }
        }
        let labeled: Vec<LabeledFit> = specs
            .iter()
            .filter_map(|s| {
                let role = s.role?;
                let rec = self.fits.iter().find(|r| r.name == s.name)?;
                Some(LabeledFit { role, fit: rec.fit })
            })
            .collect();
        if !labeled.is_empty() {
            self.regime = Some(classify_regime(&labeled));
        }
    }

    fn fit(&self, name: &str) -> Option<&SlopeFit> {
        self.fits.iter().find(|r| r.name == name).map(|r| &r.fit)
    }
}

fn times_f64(times: &[usize]) -> Vec<f64> {
    times.iter().map(|&t| t as f64).collect()
}

/// Output directory for `cfg`: its `output_dir`, else `out/<kind>`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.name()))
}

/// Validates, executes and persists one experiment.
///
/// Invalid configurations return an error before anything is written. Once
/// the output directory exists a manifest is always written, with status
/// `failed` if the computation itself errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let dir = output_dir(cfg);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let hash = cfg.hash();
    let start = Instant::now();
    let outcome = with_workers(cfg.workers, || execute(cfg)).and_then(|r| r);
    let wall_time_s = start.elapsed().as_secs_f64();

    let mut manifest = RunManifest {
        config_hash: hash.clone(),
        version: VERSION.to_string(),
        kind: cfg.kind,
        seed: cfg.seed,
        wall_time_s,
        status: Status::Failed,
        files: Vec::new(),
        fits: Vec::new(),
        estimates: BTreeMap::new(),
        regime: None,
        flags: Vec::new(),
        error: None,
    };
    match outcome {
        Ok(out) => {
            write(&dir.join("config.toml"), &cfg.to_toml()?)?;
            for t in &out.tables {
                write(&dir.join(t.file()), &t.render(cfg, &hash))?;
                manifest.files.push(FileEntry {
                    path: t.file(),
                    rows: t.rows.len(),
                });
            }
            write(&dir.join("plot.gp"), &plot_script(&out.tables))?;
            manifest.status = if out.flags.is_empty() {
                Status::Success
            } else {
                Status::Flagged
            };
            manifest.fits = out.fits;
            manifest.estimates = out.estimates;
            manifest.regime = out.regime;
            manifest.flags = out.flags;
        }
        Err(e) => manifest.error = Some(e.to_string()),
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&dir.join("manifest.json"), &(json + "\n"))?;
    Ok(manifest)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn plot_script(tables: &[Table]) -> String {
    let mut s = String::from("# gnuplot script generated alongside the data files\n");
    s.push_str("set terminal pngcairo size 900,600\nset key left top\n");
    for t in tables {
        let _ = writeln!(s, "\nset output '{}.png'", t.name);
        let _ = writeln!(s, "{}set logscale x", if t.log_x { "" } else { "un" });
        let _ = writeln!(s, "{}set logscale y", if t.log_y { "" } else { "un" });
        let _ = writeln!(s, "set xlabel '{}'", t.columns[0]);
        let series: Vec<String> = t
            .columns
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.ends_with("std_err") && !c.starts_with("dev_"))
            .map(|(i, c)| {
                format!(
                    "'{}' using 1:{} with linespoints title '{}'",
                    t.file(),
                    i + 1,
                    c
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    }
    s
}

fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    use ExperimentKind::*;
    let mut out = Outcome::default();
    let map = cfg.map;
    match cfg.kind {
        VarianceVsTime => {
            let v = variance_delta_action(&cfg.ensemble_spec()?, &map, cfg.steps()?)?;
            let mut t = Table::new("variance", &["t", "variance", "std_err"], true, true);
            for i in 0..v.times.len() {
                t.rows.push(vec![
                    Cell::I(v.times[i]),
                    Cell::F(v.variance[i]),
                    Cell::F(v.std_err[i]),
                ]);
            }
            out.apply_fits(&cfg.fits, &times_f64(&v.times), &v.variance);
            out.tables.push(t);
        }
        PairVarianceVsTime => {
            let spec = cfg.pair_spec()?;
            let v = pair_variance_vs_time(&spec, &map, cfg.steps()?, cfg.smoothing)?;
            let mean = v.mean_difference.as_ref().expect("pair series");
            let kurt = v.excess_kurtosis.as_ref().expect("pair series");
            let mut t = Table::new(
                "pair_variance",
                &[
                    "t",
                    "moment",
                    "raw",
                    "std_err",
                    "mean_difference",
                    "excess_kurtosis",
                ],
                true,
                true,
            );
            for i in 0..v.times.len() {
                t.rows.push(vec![
                    Cell::I(v.times[i]),
                    Cell::F(v.variance[i]),
                    Cell::F(v.raw[i]),
                    Cell::F(v.std_err[i]),
                    Cell::F(mean[i]),
                    Cell::F(kurt[i]),
                ]);
            }
            out.tables.push(t);
            out.apply_fits(&cfg.fits, &times_f64(&v.times), &v.variance);
            if let [a, b, ..] = cfg.fits.as_slice() {
                if let (Some(fa), Some(fb)) = (out.fit(&a.name), out.fit(&b.name)) {
                    if let Some(x) = branch_crossover(fa, fb) {
                        out.estimate("crossover", x);
                    }
                }
            }
            if let Some(l) = &cfg.lyapunov {
                let est = estimate_lyapunov(&spec.base, &map, l.steps)?;
                out.estimate("lambda", est.lambda);
                out.estimate("lambda_std_err", est.std_err);
                out.estimate("alpha", est.alpha);
                let semilog: Vec<(String, f64)> = out
                    .fits
                    .iter()
                    .filter(|r| r.fit.space == FitSpace::SemiLog)
                    .map(|r| (r.name.clone(), r.fit.slope))
                    .collect();
                for (name, slope) in semilog {
                    let key = format!("{name}_rate_over_2lambda");
                    out.check_band(&key, slope / (2.0 * est.lambda), [0.7, 1.3]);
                }
            }
        }
        PairVarianceVsSeparation => {
            let spec = cfg.ensemble_spec()?;
            let time = cfg.time()?;
            let scan = pair_variance_vs_separation(&spec, &map, time, &cfg.grid()?)?;
            let mut t = Table::new("separation", &["p_minus", "moment", "std_err"], true, true);
            for i in 0..scan.p_minus.len() {
                t.rows.push(vec![
                    Cell::F(scan.p_minus[i]),
                    Cell::F(scan.moment[0][i]),
                    Cell::F(scan.std_err[0][i]),
                ]);
            }
            out.tables.push(t);
            out.apply_fits(&cfg.fits, &scan.p_minus, &scan.moment[0]);
            let sigma2 = variance_delta_action(&spec, &map, time)?.variance[time];
            out.estimate("sigma2_at_t", sigma2);
            if let Some(p) = cfg.fits.iter().find(|f| f.name == "plateau") {
                if let Some(mean) = scan.plateau_mean(time, p.window) {
                    out.estimate("plateau_mean", mean);
                    out.check_band("plateau_ratio", mean / (2.0 * sigma2), PLATEAU_RATIO_BAND);
                }
            }
        }
        Correlators => {
            let c = cfg.correlators.as_ref().expect("validated");
            let spec = match &c.ensemble {
                Some(e) => e.spec(cfg.seed),
                None => cfg.ensemble_spec()?,
            };
            let cv = potential_correlator(&spec, &map, c.max_lag)?;
            let cf = force_correlator(&spec, &map, c.max_lag)?;
            let mut t = Table::new(
                "correlators",
                &["lag", "c_v", "c_v_std_err", "c_f", "c_f_std_err"],
                false,
                false,
            );
            for i in 0..cv.lag.len() {
                t.rows.push(vec![
                    Cell::I(cv.lag[i]),
                    Cell::F(cv.value[i]),
                    Cell::F(cv.std_err[i]),
                    Cell::F(cf.value[i]),
                    Cell::F(cf.std_err[i]),
                ]);
            }
            out.tables.push(t);
            for (key, series, mode) in [
                ("K", &cv, IntegrationMode::SumToPlateau),
                ("D", &cf, IntegrationMode::SumToPlateau),
                ("C_V_inf", &cv, IntegrationMode::Cesaro),
            ] {
                let r = integrate_correlator(series, mode)?;
                out.estimate(key, r.value);
                out.estimate(format!("{key}_cutoff_lag"), r.cutoff_lag as f64);
                if !r.converged {
                    out.flag(format!(
                        "{key} not converged by lag {}; partial value reported",
                        c.max_lag
                    ));
                }
            }
        }
        DrFidelity => {
            let spec = cfg.ensemble_spec()?;
            let curve = dr_overlap(&spec, &map, cfg.hbar()?, cfg.steps()?)?;
            out.tables.push(fidelity_table("fidelity", &curve));
            out.apply_fits(&cfg.fits, &times_f64(&curve.times), &curve.m);
            for f in cfg
                .fits
                .iter()
                .filter(|f| f.target == FitTarget::DecayExponent)
            {
                let w = [f.window[0] as usize, f.window[1] as usize];
                if let Ok(g) =
                    fit_short_time_constant(&curve, Regime::CubicExponential, map.epsilon, None, w)
                {
                    out.estimate(format!("{}_gamma", f.name), g);
                }
            }
        }
        QuantumFidelity => {
            let n = cfg.quantum.as_ref().expect("validated").n;
            let q = cfg.quantum_q()?;
            let curve = quantum_fidelity(
                &position_state(n, q),
                map.k,
                map.epsilon,
                cfg.hbar()?,
                cfg.steps()?,
            )?;
            note_snapping(&mut out, n, q);
            out.tables.push(fidelity_table("quantum", &curve));
            out.apply_fits(&cfg.fits, &times_f64(&curve.times), &curve.m);
        }
        Compare => compare_kind(cfg, &mut out)?,
        Predict => {
            let p = cfg.predict.as_ref().expect("validated");
            let mut rp = p.params.clone();
            rp.epsilon = rp.epsilon.or(Some(map.epsilon.abs()));
            if rp.hbar.is_none() {
                rp.hbar = cfg.hbar.as_ref().map(|h| h.value());
            }
            let times: Vec<usize> = (0..=cfg.steps()?).collect();
            let curve = predict_fidelity(p.regime, &rp, &times)?;
            out.regime = Some(p.regime);
            if curve.clamped {
                out.estimate("clamped", 1.0);
            }
            out.tables.push(fidelity_table("prediction", &curve));
        }
    }
    Ok(out)
}

fn fidelity_table(name: &'static str, c: &FidelityCurve) -> Table {
    let with_se = c.std_err.len() == c.m.len();
    let cols: &[&str] = if with_se {
        &["t", "m", "std_err"]
    } else {
        &["t", "m"]
    };
    let mut t = Table::new(name, cols, false, true);
    for i in 0..c.times.len() {
        let mut row = vec![Cell::I(c.times[i]), Cell::F(c.m[i])];
        if with_se {
            row.push(Cell::F(c.std_err[i]));
        }
        t.rows.push(row);
    }
    t
}

fn note_snapping(out: &mut Outcome, n: usize, q: f64) {
    let j = grid_index(n, q);
    out.estimate("grid_index", j as f64);
    out.estimate("snapped_q", TWO_PI * j as f64 / n as f64);
    if !n.is_power_of_two() {
        out.estimate("slow_fft_size", 1.0);
    }
}

/// Fills regime parameters the prediction needs from measured estimates.
fn measured_params(
    cfg: &ExperimentConfig,
    spec: &EnsembleSpec,
    dr: &FidelityCurve,
    out: &mut Outcome,
) -> Result<RegimeParams> {
    let p = cfg.predict.as_ref().expect("validated");
    let map = cfg.map;
    let mut rp = p.params.clone();
    rp.epsilon = rp.epsilon.or(Some(map.epsilon.abs()));
    rp.hbar = rp.hbar.or(Some(cfg.hbar()?));
    let needs_corr = match p.regime {
        Regime::FermiGoldenRule => rp.k.is_none(),
        Regime::Gaussian => rp.c_v_inf.is_none(),
        Regime::Lyapunov | Regime::Algebraic => rp.d_force.is_none(),
        _ => false,
    };
    if needs_corr {
        if let Some(c) = &cfg.correlators {
            let cspec = match &c.ensemble {
                Some(e) => e.spec(cfg.seed),
                None => spec.clone(),
            };
            let (series, mode, key) = match p.regime {
                Regime::FermiGoldenRule => (
                    potential_correlator(&cspec, &map, c.max_lag)?,
                    IntegrationMode::SumToPlateau,
                    "K",
                ),
                Regime::Gaussian => (
                    potential_correlator(&cspec, &map, c.max_lag)?,
                    IntegrationMode::Cesaro,
                    "C_V_inf",
                ),
                _ => (
                    force_correlator(&cspec, &map, c.max_lag)?,
                    IntegrationMode::SumToPlateau,
                    "D",
                ),
            };
            let r = integrate_correlator(&series, mode)?;
            out.estimate(key, r.value);
            if !r.converged {
                out.flag(format!("{key} not converged by lag {}", c.max_lag));
            }
            match key {
                "K" => rp.k = Some(r.value),
                "C_V_inf" => rp.c_v_inf = Some(r.value),
                _ => rp.d_force = Some(r.value),
            }
        }
    }
    if matches!(p.regime, Regime::Lyapunov | Regime::Superexponential)
        && (rp.lambda.is_none() || rp.alpha.is_none())
    {
        if let Some(l) = &cfg.lyapunov {
            let est = estimate_lyapunov(spec, &map, l.steps)?;
            rp.lambda = rp.lambda.or(Some(est.lambda));
            rp.alpha = rp.alpha.or(Some(est.alpha));
            out.estimate("lambda", est.lambda);
            out.estimate("alpha", est.alpha);
        }
    }
    let window = cfg.compare.as_ref().expect("validated").rate_window;
    let w = [window[0] as usize, window[1] as usize];
    if p.regime == Regime::Superexponential && rp.beta.is_none() {
        let b = fit_short_time_constant(dr, p.regime, map.epsilon.abs(), rp.lambda, w)?;
        out.estimate("beta", b);
        rp.beta = Some(b);
    }
    if p.regime == Regime::CubicExponential && rp.gamma.is_none() {
        let g = fit_short_time_constant(dr, p.regime, map.epsilon.abs(), None, w)?;
        out.estimate("gamma", g);
        rp.gamma = Some(g);
    }
    Ok(rp)
}

fn compare_kind(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let c = cfg.compare.as_ref().expect("validated");
    let map = cfg.map;
    let hbar = cfg.hbar()?;
    let steps = cfg.steps()?;
    let mut spec = cfg.ensemble_spec()?;
    let quantum_n = cfg.quantum.as_ref().map(|q| q.n);
    if let (true, Some(n)) = (c.against.contains(&Reference::Quantum), quantum_n) {
        // classical and quantum runs start from the same grid position
        let q = cfg.quantum_q()?;
        note_snapping(out, n, q);
        spec.sampler = Sampler::PositionState {
            q: TWO_PI * grid_index(n, q) as f64 / n as f64,
        };
    }
    let dr = dr_overlap(&spec, &map, hbar, steps)?;
    let mut table_cols = vec!["t".to_string(), "dr".into(), "dr_std_err".into()];
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for reference in &c.against {
        let (label, curve) = match reference {
            Reference::Quantum => {
                let n = quantum_n.expect("validated");
                let q = match spec.sampler {
                    Sampler::PositionState { q } => q,
                    _ => unreachable!("validated"),
                };
                (
                    "quantum",
                    quantum_fidelity(&position_state(n, q), map.k, map.epsilon, hbar, steps)?,
                )
            }
            Reference::PairFormula => {
                let grid = match &c.pair_formula_grid {
                    Some(g) => g.values(),
                    None => default_separation_grid(10, 60),
                };
                let r = pair_formula_fidelity(
                    &spec,
                    &map,
                    hbar,
                    steps,
                    &grid,
                    c.pair_formula_max_rounds,
                )?;
                out.estimate("pair_formula_rounds", r.rounds as f64);
                out.estimate("pair_formula_nodes", r.scan.p_minus.len() as f64);
                ("pair_formula", r.curve)
            }
            Reference::ClosedForm => {
                let rp = measured_params(cfg, &spec, &dr, out)?;
                let p = cfg.predict.as_ref().expect("validated");
                let curve = predict_fidelity(p.regime, &rp, &dr.times)?;
                out.regime = Some(p.regime);
                if curve.clamped {
                    out.estimate("closed_form_clamped", 1.0);
                }
                ("closed_form", curve)
            }
        };
        let cmp = compare(&dr, &curve, c.rate_window)?;
        record_comparison(out, label, *reference, &cmp, &dr);
        table_cols.push(label.to_string());
        table_cols.push(format!("dev_{label}"));
        columns.push(curve.m.clone());
        columns.push(cmp.deviation.clone());
    }

    let cols: Vec<&str> = table_cols.iter().map(|s| s.as_str()).collect();
    let mut t = Table::new("compare", &cols, false, true);
    for i in 0..dr.times.len() {
        let mut row = vec![
            Cell::I(dr.times[i]),
            Cell::F(dr.m[i]),
            Cell::F(dr.std_err[i]),
        ];
        row.extend(columns.iter().map(|col| Cell::F(col[i])));
        t.rows.push(row);
    }
    out.tables.push(t);
    Ok(())
}

fn record_comparison(
    out: &mut Outcome,
    label: &str,
    reference: Reference,
    cmp: &Comparison,
    dr: &FidelityCurve,
) {
    out.estimate(format!("{label}_max_deviation"), cmp.max_deviation);
    if let Some(c) = cmp.cutoff {
        out.estimate(format!("{label}_cutoff"), c as f64);
    }
    if let Some(r) = cmp.rate_a {
        out.estimate("dr_rate", r);
    }
    if let Some(r) = cmp.rate_b {
        out.estimate(format!("{label}_rate"), r);
    }
    let band = match reference {
        Reference::Quantum => Some(QUANTUM_RATE_BAND),
        Reference::ClosedForm => Some(PREDICTION_RATE_BAND),
        Reference::PairFormula => None,
    };
    match (cmp.rate_ratio, band) {
        (Some(r), Some(b)) => out.check_band(&format!("{label}_rate_ratio"), r, b),
        (Some(r), None) => out.estimate(format!("{label}_rate_ratio"), r),
        (None, _) => out.flag(format!("{label}: no decay rate in {:?}", cmp.rate_window)),
    }
    if reference == Reference::PairFormula {
        if let Some(z) = cmp.max_z {
            out.estimate("pair_formula_max_z", z);
        }
        if !cmp.within_std_err(dr, 3.0) {
            out.flag("pair formula departs from dr by more than 3 standard errors before M < 0.01");
        }
    }
}

/// Row count of a data file written by [`run`]: lines not starting with '#'.
pub fn count_rows(path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .count())
}

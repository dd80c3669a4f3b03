use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use dephasing::config::{ExperimentConfig, ExperimentKind};
use dephasing::presets;
use dephasing::run::{output_dir, run, Status};

#[derive(Parser)]
#[command(
    version,
    about = "Action statistics and fidelity decay of the perturbed standard map"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever experiment the config or preset describes.
    Run(Common),
    VarianceVsTime(Common),
    PairVarianceVsTime(Common),
    PairVarianceVsSeparation(Common),
    Correlators(Common),
    DrFidelity(Common),
    QuantumFidelity(Common),
    Compare(Common),
    Predict(Common),
    /// Print the resolved config as TOML without running it.
    ShowConfig(Common),
    /// List preset names.
    Presets,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset, e.g. fig1a.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: out/<kind>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Dotted-path override, e.g. --override map.k=5 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn resolve(c: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), None) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
        (None, Some(name)) => presets::preset(name).map_err(|e| e.to_string())?,
        _ => return Err("give exactly one of --config or --preset".into()),
    };
    cfg = cfg
        .with_overrides(&c.overrides)
        .map_err(|e| e.to_string())?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = Some(o.clone());
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    Ok(cfg)
}

fn execute(c: &Common, kind: Option<ExperimentKind>) -> Result<Status, String> {
    let cfg = resolve(c)?;
    if let Some(k) = kind {
        if k != cfg.kind {
            return Err(format!(
                "invalid config field `kind`: subcommand is {} but the config describes {}",
                k.name(),
                cfg.kind.name()
            ));
        }
    }
    let manifest = run(&cfg).map_err(|e| e.to_string())?;
    let dir = output_dir(&cfg);
    for f in &manifest.fits {
        println!(
            "fit {:<16} slope {:>10.5}  window [{}, {}]  rms {:.3e}",
            f.name, f.fit.slope, f.fit.fit_window[0], f.fit.fit_window[1], f.fit.residual
        );
    }
    for (k, v) in &manifest.estimates {
        println!("{k:<28} {v:.6e}");
    }
    if let Some(r) = manifest.regime {
        println!("regime {}", r.name());
    }
    for flag in &manifest.flags {
        eprintln!("flagged: {flag}");
    }
    if let Some(e) = &manifest.error {
        eprintln!("error: {e}");
    }
    println!(
        "{:?} in {:.2}s, {} file(s) in {}",
        manifest.status,
        manifest.wall_time_s,
        manifest.files.len(),
        dir.display()
    );
    Ok(manifest.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    use ExperimentKind as K;
    let result = match &cli.command {
        Command::Presets => {
            for name in presets::NAMES {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::ShowConfig(c) => {
            match resolve(c).and_then(|cfg| cfg.to_toml().map_err(|e| e.to_string())) {
                Ok(text) => {
                    print!("{text}");
                    return ExitCode::SUCCESS;
                }
                Err(e) => Err(e),
            }
        }
        Command::Run(c) => execute(c, None),
        Command::VarianceVsTime(c) => execute(c, Some(K::VarianceVsTime)),
        Command::PairVarianceVsTime(c) => execute(c, Some(K::PairVarianceVsTime)),
        Command::PairVarianceVsSeparation(c) => execute(c, Some(K::PairVarianceVsSeparation)),
        Command::Correlators(c) => execute(c, Some(K::Correlators)),
        Command::DrFidelity(c) => execute(c, Some(K::DrFidelity)),
        Command::QuantumFidelity(c) => execute(c, Some(K::QuantumFidelity)),
        Command::Compare(c) => execute(c, Some(K::Compare)),
        Command::Predict(c) => execute(c, Some(K::Predict)),
    };
    match result {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Failed.exit_code() as u8)
        }
    }
}

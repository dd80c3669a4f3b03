//! Runs a preset programmatically, with overrides, and reads back the
//! manifest.
//!
//! cargo run --release --example experiment -- [preset] [key=value ...]

use dephasing::presets::preset;
use dephasing::run::run;

fn main() -> dephasing::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "fig1a".into());
    let overrides: Vec<String> = args.collect();

    let mut cfg = preset(&name)?.with_overrides(&overrides)?;
    let dir = std::env::temp_dir().join(format!("dephasing-example-{name}"));
    cfg.output_dir = Some(dir.clone());
    println!("{}", cfg.to_toml()?);

    let manifest = run(&cfg)?;
    println!(
        "status {:?}, config hash {}",
        manifest.status,
        &manifest.config_hash[..12]
    );
    for f in &manifest.files {
        println!("  {} ({} rows)", dir.join(&f.path).display(), f.rows);
    }
    for f in &manifest.fits {
        println!(
            "  fit {}: slope {:.4}, expected {:?}",
            f.name, f.fit.slope, f.expect
        );
    }
    for (k, v) in &manifest.estimates {
        println!("  {k} = {v:.6}");
    }
    Ok(())
}

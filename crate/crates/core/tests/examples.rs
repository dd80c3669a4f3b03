//! Every example runs to completion. `cargo test` builds them next to the
//! test binaries.

use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 10] = [
    "standard_map",
    "ensembles",
    "action_variance",
    "pair_variance",
    "correlators",
    "dr_fidelity",
    "pair_formula",
    "quantum_fidelity",
    "regimes",
    "experiment",
];

fn example_dir() -> PathBuf {
    // target/<profile>/deps/<this test> -> target/<profile>/examples
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

#[test]
fn examples_run() {
    let dir = example_dir();
    let listed: Vec<String> =
        std::fs::read_dir(env!("CARGO_MANIFEST_DIR").to_owned() + "/examples")
            .unwrap()
            .map(|e| {
                e.unwrap()
                    .path()
                    .file_stem()
                    .unwrap()
                    .to_string_lossy()
                    .into_owned()
            })
            .collect();
    for name in &listed {
        assert!(
            EXAMPLES.contains(&name.as_str()),
            "example {name} is not exercised"
        );
    }
    for name in EXAMPLES {
        let path = dir.join(name);
        assert!(path.exists(), "{} not built", path.display());
        let mut cmd = Command::new(&path);
        if name == "experiment" {
            cmd.args(["fig2b", "ensemble.count=100"]);
        }
        let out = cmd.output().unwrap();
        assert!(
            out.status.success(),
            "{name} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}

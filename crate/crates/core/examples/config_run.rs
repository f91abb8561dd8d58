//! Runs a TOML configuration exactly as the `chiral-array run` command would.
//!
//! cargo run --release --example config_run -- examples/configs/dimer.toml

use std::path::PathBuf;

use chiral_array::config::SimulationConfig;
use chiral_array::runner::run;

fn main() -> chiral_array::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/dimer.toml"));
    let config = SimulationConfig::from_path(&path)?;
    let bundle = run(&config)?;
    for entry in &bundle.manifest.files {
        println!("{:<26} {:>9} bytes  {:?}  {}", entry.path, entry.bytes, entry.kind, &entry.sha256[..16]);
    }
    for w in &bundle.manifest.warnings {
        println!("warning: {w}");
    }
    if let Some(r) = &bundle.simulation.routing {
        println!("t_c = {:?}", r.t_c);
    }
    Ok(())
}

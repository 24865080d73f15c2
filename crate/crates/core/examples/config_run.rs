//! Runs any shipped or user config end to end, as the command-line tool does,
//! and prints the manifest.
//!
//! `cargo run --release --example config_run -- configs/hydrostatic.toml out/hydrostatic`

use std::path::PathBuf;

use inflow_ns::config::parse_config;
use inflow_ns::pipeline::{run, verify_manifest};

fn main() -> inflow_ns::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/inflow_smooth.toml")));
    let cfg = parse_config(&config)?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("inflow-ns-example"));

    let manifest = run(&cfg, &out, 1)?;
    println!("{} run of {} (config hash {})", manifest.experiment.name(), config.display(), &manifest.config_hash[..12]);
    for s in &manifest.summaries {
        println!("  {s}");
    }
    for a in &verify_manifest(&out)?.artifacts {
        println!("  {} {}", &a.sha256[..16], out.join(&a.path).display());
    }
    Ok(())
}

//! Integrates the pressure over inner boundary collars of shrinking width
//! and fits how the integral scales with the width.
//!
//! `cargo run --release --example pressure_probe`

use inflow_ns::audit::{boundary_pressure_probe, ProbeExponents};
use inflow_ns::config::parse_config;
use inflow_ns::momentum::run_simulation;

fn main() -> inflow_ns::Result<()> {
    for name in ["probe_steady", "probe_inflow"] {
        let path = format!("{}/configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
        let cfg = parse_config(std::path::Path::new(&path))?;
        let traj = run_simulation(&cfg.simulation()?)?;
        let law = traj.law()?.clone();
        let h = cfg.probe.as_ref().map(|p| p.h.clone()).unwrap_or_default();
        let r = boundary_pressure_probe(&traj, &law, &h, ProbeExponents::default())?;
        println!("{name}:");
        for (h, v) in r.h_values.iter().zip(&r.integrals) {
            println!("  h = {h:<5} integral {v:.5e}");
        }
        println!(
            "  fitted exponent {:.4}, predicted lower bound {:.4} (alpha {:.3}, kappa {})",
            r.fitted_exponent, r.predicted_exponent, r.alpha, r.kappa
        );
    }
    Ok(())
}

//! Relative energy of a run against the uniform stream it relaxes to, in the
//! three forms: against a general test pair, against a pair solving the
//! transport equation, and against a strong solution with the itemized
//! quadratic remainder.
//!
//! `cargo run --release --example relative_energy`

use inflow_ns::audit::{mesh_parameter, relative_energy_ledger, RelEnergyVariant};
use inflow_ns::config::parse_config;
use inflow_ns::momentum::run_simulation;

fn main() -> inflow_ns::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/inflow_smooth.toml");
    let cfg = parse_config(std::path::Path::new(path))?;
    let traj = run_simulation(&cfg.simulation()?)?;
    let strong = cfg.audit_strong()?.expect("the config names a strong pair");
    let (dx, dt) = mesh_parameter(&traj);

    for variant in [RelEnergyVariant::Rea, RelEnergyVariant::Rei, RelEnergyVariant::Reis] {
        println!("{variant:?}");
        for level in traj.stored_indices().into_iter().skip(1).step_by(4) {
            let r = relative_energy_ledger(&traj, &strong, traj.states[level].t, variant)?;
            println!(
                "  tau {:.3}: E {:.4e} (from {:.4e}), dissipation {:.3e}, residual {:+.3e}, pass {}",
                r.tau,
                r.e_tau,
                r.e_initial,
                r.dissipation_diff,
                r.residual,
                r.passes(dx, dt)
            );
            if let Some(items) = r.remainder {
                let [boundary, convection, taylor, gradient] = items.groups();
                println!(
                    "    remainder: boundary {boundary:.2e}, convection {convection:.2e}, pressure {taylor:.2e}, gradient {gradient:.2e}"
                );
            }
        }
    }
    Ok(())
}

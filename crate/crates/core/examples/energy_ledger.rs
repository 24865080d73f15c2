//! Runs the coupled solver on a closed box and on an open stream and prints
//! every term of the discrete energy balance at the stored times.
//!
//! `cargo run --release --example energy_ledger`

use inflow_ns::audit::{energy_ledger_series, mesh_parameter, slack};
use inflow_ns::config::parse_config_str;
use inflow_ns::momentum::run_simulation;

const CASE: &str = r#"
experiment = "simulate"

[domain]
lower = [0.0]
upper = [1.0]
cells = [100]

[boundary]
velocity = { kind = "constant", value = [VELOCITY] }
density = { kind = "constant", value = 1.0 }

[initial]
density = { kind = "bump", base = 1.0, amplitude = 0.3, center = [0.5], width = 0.5 }

[viscosity]
mu = 0.5

[time]
t_final = 0.5
"#;

fn main() -> inflow_ns::Result<()> {
    for (label, velocity) in [("closed box", "0.0"), ("open stream", "0.5")] {
        let cfg = parse_config_str(&CASE.replace("VELOCITY", velocity))?;
        let traj = run_simulation(&cfg.simulation()?)?;
        let (dx, dt) = mesh_parameter(&traj);
        println!("{label}: {} steps of {dt:.2e}", traj.steps.len());
        println!(
            "{:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>11}",
            "tau", "E(tau)", "E(0)", "viscous", "in-rel", "out-H", "in-flux", "conv", "residual"
        );
        for l in energy_ledger_series(&traj)? {
            println!(
                "{:>6.3} {:>10.6} {:>10.6} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>11.3e}",
                l.tau,
                l.final_energy,
                l.initial_energy,
                l.viscous_dissipation,
                l.inflow_relative_term,
                l.outflow_helmholtz_term,
                l.inflow_helmholtz_flux,
                l.convection_uinf,
                l.residual
            );
            assert!(l.residual >= -slack(l.scale, dx, dt));
        }
        println!();
    }
    Ok(())
}

//! Sweeps the density diffusion ε and the artificial pressure δ, showing the
//! compensation term vanish with ε and the runs settle as δ shrinks.
//!
//! `cargo run --release --example regularization_sweep [workers]`

use inflow_ns::config::parse_config;
use inflow_ns::pipeline::{delta_cauchy_decreasing, sweep, z_norm_decay};

fn main() -> inflow_ns::Result<()> {
    let workers = std::env::args().nth(1).and_then(|w| w.parse().ok()).unwrap_or(2);
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

    let eps = sweep(&parse_config(format!("{dir}/sweep_epsilon.toml").as_ref())?, workers)?;
    println!("{:>8} {:>12} {:>12} {:>10}", "epsilon", "|Z| total", "E(T)", "min rho");
    for r in &eps {
        println!("{:>8} {:>12.4e} {:>12.6} {:>10.5}", r.epsilon, r.z_norm_total, r.final_energy, r.min_rho);
    }
    if let Some((ok, _)) = z_norm_decay(&eps) {
        println!("falls by at least half per decade: {ok}\n");
    }

    let delta = sweep(&parse_config(format!("{dir}/sweep_delta.toml").as_ref())?, workers)?;
    println!("{:>8} {:>12} {:>14}", "delta", "E(T)", "L1 to previous");
    for r in &delta {
        let c = r.l1_cauchy.map(|c| format!("{c:.4e}")).unwrap_or_default();
        println!("{:>8} {:>12.6} {:>14}", r.delta, r.final_energy, c);
    }
    if let Some((ok, _)) = delta_cauchy_decreasing(&delta) {
        println!("differences decrease: {ok}");
    }
    Ok(())
}

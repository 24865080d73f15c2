//! Pressure laws, their Helmholtz functions, and the brute-forced constants
//! bounding the relative energy from below.
//!
//! `cargo run --release --example thermo_constants`

use inflow_ns::thermo::{
    field_split_constant, lower_bound_constant, relative_energy, residual_pressure_check, thermo_eval, BruteForceGrid,
    PressureLaw,
};

fn main() -> inflow_ns::Result<()> {
    let laws = [
        ("isothermal-like a=1, gamma=2", PressureLaw::power(1.0, 2.0)),
        ("air-like a=1, gamma=1.4", PressureLaw::power(1.0, 1.4)),
        ("gamma=2 with delta rho^5, delta=1e-3", PressureLaw::power(1.0, 2.0).regularized(1e-3, 5.0)),
    ];

    println!("{:<40} {:>6} {:>12} {:>12} {:>12}", "law", "rho", "p", "H", "E(rho|1)");
    for (name, law) in &laws {
        for rho in [0.25, 1.0, 4.0] {
            let s = thermo_eval(law, rho)?;
            println!("{name:<40} {rho:>6} {:>12.6} {:>12.6} {:>12.6}", s.p, s.h, relative_energy(law, rho, 1.0)?);
        }
    }

    let grid = BruteForceGrid::default();
    println!();
    for (name, law) in &laws {
        for (a, b) in [(1.0, 2.0), (0.5, 2.0)] {
            let lower = lower_bound_constant(law, a, b, &grid)?;
            let residual = residual_pressure_check(law, a, b, &grid)?;
            println!(
                "{name}: r in [{a}, {b}] -> c = {:.5} at (rho, r) = ({:.3}, {:.3}), field constant {:.5}",
                lower.c,
                lower.argmin.0,
                lower.argmin.1,
                field_split_constant(&lower, &residual)
            );
        }
    }
    println!("\nfor gamma = 2 on [1, 2] the minimum sits at the edge rho = a/2, r = a, where it equals 1/6");
    Ok(())
}

//! The density transport step on its own: an inflow front entering a
//! compressive flow, checked against the maximum-principle envelope, then
//! the randomized suite.
//!
//! `cargo run --release --example transport_max_principle`

use inflow_ns::field::{ScalarSpec, Vec2, VectorSpec};
use inflow_ns::grid::{build_domain, classify_boundary, DomainSpec};
use inflow_ns::transport::{
    mass_ledger, max_principle_audit, max_principle_suite, run_transport, SuiteSpec, TransportStepConfig,
};

fn main() -> inflow_ns::Result<()> {
    let n = 200;
    let domain = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] })?;
    let partition = classify_boundary(
        &domain,
        &VectorSpec::Linear { base: vec![1.0], gradient: vec![vec![-0.5]] },
        Some(&ScalarSpec::Constant { value: 2.0 }),
    )?;
    // u = 1 - 0.5 x squeezes the fluid, so the envelope grows like exp(∫ ‖div u‖).
    let u: Vec<Vec2> = domain.centers().iter().map(|x| [1.0 - 0.5 * x[0], 0.0]).collect();
    let cfg = TransportStepConfig { epsilon: 1e-3, dt: 0.4 / n as f64 };
    let traj = run_transport(vec![1.0; n], &|_| u.clone(), &partition, &cfg, 400)?;

    let last = traj.states.last().unwrap();
    let (lo, hi) = last.rho.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    println!("t = {:.2}: density range [{lo:.4}, {hi:.4}]", last.t);

    let mp = max_principle_audit(&traj, None);
    println!(
        "envelope [{}, {}] widened by exp({:.3}); worst excess {:.2e}, pass {}",
        mp.rho_lower, mp.rho_upper, mp.k_integral, mp.worst_excess, mp.pass
    );
    let mass = mass_ledger(&traj);
    println!("mass {:.6} -> {:.6}, ledger residual {:.2e}", mass.mass_0, mass.mass_t, mass.residual);

    let suite = max_principle_suite(&SuiteSpec::default(), 17)?;
    println!(
        "random suite: {} fields, {} with violations, worst excess {:.2e}",
        suite.fields, suite.failed_fields, suite.worst_excess
    );
    Ok(())
}

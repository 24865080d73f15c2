use proptest::prelude::*;

use inflow_ns::audit::boundary_pressure_probe;
use inflow_ns::field::{ScalarSpec, Vec2, VectorSpec};
use inflow_ns::grid::{build_domain, build_extension, classify_boundary, integrate, CellMask, Domain, DomainSpec, Region};
use inflow_ns::momentum::{gradient_norm2, run_simulation, stress, viscous_form, SimulationConfig, ViscosityParams};
use inflow_ns::thermo::{relative_energy, PressureLaw};
use inflow_ns::transport::{mass_ledger, run_transport, step_continuity, TransportStepConfig};
use inflow_ns::ws::{remainder, StrongCase, StrongSolution};

fn interval(n: usize) -> Domain {
    build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).unwrap()
}

fn square(n: usize) -> Domain {
    build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], cells: vec![n, n] }).unwrap()
}

fn tensor() -> impl Strategy<Value = [[f64; 2]; 2]> {
    prop::array::uniform2(prop::array::uniform2(-5.0..5.0f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_energy_is_a_bregman_distance(a in 0.2..5.0f64, gamma in 1.05..4.0f64, rho in 0.0..6.0f64, r in 0.3..3.0f64) {
        let law = PressureLaw::power(a, gamma);
        let e = relative_energy(&law, rho, r).unwrap();
        prop_assert!(e >= -1e-12 * (1.0 + law.helmholtz(rho).abs()));
        prop_assert!(relative_energy(&law, r, r).unwrap().abs() <= 1e-12 * (1.0 + law.helmholtz(r).abs()));
        if (rho - r).abs() > 1e-3 {
            prop_assert!(e > 0.0);
        }
    }

    #[test]
    fn artificial_pressure_enters_linearly(rho in 0.1..4.0f64, r in 0.5..2.0f64, delta in 1e-4..1e-2f64) {
        let base = PressureLaw::power(1.0, 2.0);
        let e0 = relative_energy(&base, rho, r).unwrap();
        let e1 = relative_energy(&base.clone().regularized(delta, 5.0), rho, r).unwrap();
        let e2 = relative_energy(&base.regularized(2.0 * delta, 5.0), rho, r).unwrap();
        prop_assert!((e2 - e0 - 2.0 * (e1 - e0)).abs() <= 1e-10 * (1.0 + e2.abs()));
    }

    #[test]
    fn classes_are_invariant_under_positive_scaling(u in -2.0..2.0f64, v in -2.0..2.0f64, s in 0.01..100.0f64) {
        let d = square(6);
        let spec = |k: f64| VectorSpec::Linear { base: vec![k * u, k * v], gradient: vec![vec![k, 0.0], vec![0.0, -0.5 * k]] };
        let rho_b = ScalarSpec::Constant { value: 1.0 };
        let p1 = classify_boundary(&d, &spec(1.0), Some(&rho_b)).unwrap();
        let p2 = classify_boundary(&d, &spec(s), Some(&rho_b)).unwrap();
        prop_assert_eq!(p1.class, p2.class);
    }

    #[test]
    fn integration_is_additive_over_disjoint_masks(values in prop::collection::vec(-3.0..3.0f64, 36), bits in prop::collection::vec(any::<bool>(), 36)) {
        let d = square(6);
        let m1 = CellMask { member: bits.clone() };
        let m2 = CellMask { member: bits.iter().map(|b| !b).collect() };
        let whole = integrate(&d, &values, Region::Cells(None)).unwrap();
        let parts = integrate(&d, &values, Region::Cells(Some(&m1))).unwrap() + integrate(&d, &values, Region::Cells(Some(&m2))).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-13);
    }

    #[test]
    fn stress_is_linear(g in tensor(), h in tensor(), s in -3.0..3.0f64, mu in 0.1..2.0f64, lambda in 0.0..2.0f64) {
        let visc = ViscosityParams { mu, lambda };
        let mut comb = [[0.0; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                comb[j][k] = g[j][k] + s * h[j][k];
            }
        }
        let (a, b, c) = (stress(&comb, &visc), stress(&g, &visc), stress(&h, &visc));
        for j in 0..2 {
            for k in 0..2 {
                prop_assert!((a[j][k] - b[j][k] - s * c[j][k]).abs() <= 1e-12 * (1.0 + a[j][k].abs()));
            }
        }
    }

    #[test]
    fn rotations_carry_no_shear_stress(w in -5.0..5.0f64, mu in 0.1..2.0f64) {
        let s = stress(&[[0.0, w], [-w, 0.0]], &ViscosityParams { mu, lambda: 0.0 });
        prop_assert!(s.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn viscous_form_is_coercive(values in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64), mu in 0.1..2.0f64, lambda in 0.0..2.0f64) {
        let d = square(8);
        let visc = ViscosityParams { mu, lambda };
        let w: Vec<Vec2> = (0..d.n_cells())
            .map(|c| if d.is_boundary_cell(c) { [0.0, 0.0] } else { [values[c].0, values[c].1] })
            .collect();
        let form = viscous_form(&d, &visc, &w, &w);
        prop_assert!(form >= mu * gradient_norm2(&d, &w) * (1.0 - 1e-12));
    }

    #[test]
    fn continuity_step_keeps_densities_nonnegative(
        rho in prop::collection::vec(0.0..2.0f64, 24),
        u in prop::collection::vec(-1.0..1.0f64, 24),
        eps in prop_oneof![Just(0.0), 1e-3..1e-1f64],
        rho_b in 0.0..2.0f64,
        ub in -1.0..1.0f64,
    ) {
        let d = interval(24);
        let p = classify_boundary(&d, &VectorSpec::Constant { value: vec![ub] }, Some(&ScalarSpec::Constant { value: rho_b })).unwrap();
        let vel: Vec<Vec2> = u.iter().map(|&x| [x, 0.0]).collect();
        let dt = 0.4 * d.spacing[0];
        let next = step_continuity(&rho, &vel, &p, &TransportStepConfig { epsilon: eps, dt }).unwrap();
        prop_assert!(next.iter().all(|&r| r >= -1e-12));
    }

    #[test]
    fn mass_ledger_closes_for_any_data(
        rho0 in prop::collection::vec(0.5..2.0f64, 20),
        amp in -1.0..1.0f64,
        ub in -1.0..1.0f64,
        eps in 0.0..0.05f64,
    ) {
        let d = interval(20);
        let p = classify_boundary(&d, &VectorSpec::Constant { value: vec![ub] }, Some(&ScalarSpec::Constant { value: 1.5 })).unwrap();
        let u: Vec<Vec2> = d.centers().iter().map(|x| [ub + amp * (3.0 * x[0]).sin(), 0.0]).collect();
        let traj = run_transport(rho0, &|_| u.clone(), &p, &TransportStepConfig { epsilon: eps, dt: 0.01 }, 30).unwrap();
        prop_assert!(mass_ledger(&traj).passes());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn probe_integrals_grow_with_the_collar(rho0 in prop::collection::vec(0.5..2.0f64, 40), ub in 0.1..1.0f64) {
        let d = interval(40);
        let p = classify_boundary(&d, &VectorSpec::Constant { value: vec![ub] }, Some(&ScalarSpec::Constant { value: 1.0 })).unwrap();
        let traj = run_transport(rho0, &|_| vec![[ub, 0.0]; 40], &p, &TransportStepConfig { epsilon: 0.0, dt: 0.01 }, 10).unwrap();
        let law = PressureLaw::power(1.0, 2.0);
        let rep = boundary_pressure_probe(&traj, &law, &[0.025, 0.05, 0.1, 0.2, 0.25], Default::default()).unwrap();
        prop_assert!(rep.integrals.iter().all(|&v| v >= 0.0));
        prop_assert!(rep.integrals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn remainder_items_regroup_to_the_total(amp in -0.3..0.3f64, k in 1.0..4.0f64, ub in 0.1..0.8f64, rho_b in 0.8..1.2f64) {
        let n = 24;
        let d = interval(n);
        let p = classify_boundary(&d, &VectorSpec::Constant { value: vec![ub] }, Some(&ScalarSpec::Constant { value: rho_b })).unwrap();
        let ext = build_extension(&p, 0.2).unwrap();
        let law = PressureLaw::power(1.0, 2.0);
        let visc = ViscosityParams { mu: 0.5, lambda: 0.0 };
        let rho0 = d.centers().iter().map(|x| 1.0 + amp * (k * x[0]).sin().powi(2)).collect();
        let cfg = SimulationConfig {
            partition: p, extension: ext, law: law.clone(), viscosity: visc.clone(), epsilon: 0.0, dt: None,
            t_final: 0.1, cadence: 1, rho0, u0: vec![[ub, 0.0]; n], forcing: None,
        };
        let traj = run_simulation(&cfg).unwrap();
        let strong = StrongSolution::new(StrongCase::UniformSteady { density: 1.0, velocity: vec![ub] }, &d, law, visc, 0.1).unwrap();
        for level in [0, traj.states.len() / 2, traj.states.len() - 1] {
            let items = remainder(&traj, &strong, level);
            prop_assert!((items.total - items.sum_of_groups()).abs() <= 1e-12 * (1.0 + items.total.abs()));
        }
    }
}

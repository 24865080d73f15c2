//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use inflow_ns::audit::{boundary_pressure_probe, energy_ledger_series, log_log_slope, mesh_parameter};
use inflow_ns::config::{parse_config, Experiment, RunConfig};
use inflow_ns::field::{ScalarSpec, TestField, VectorSpec};
use inflow_ns::grid::{build_domain, classify_boundary, DomainSpec};
use inflow_ns::momentum::run_simulation;
use inflow_ns::pipeline::{self, delta_cauchy_decreasing, z_norm_decay};
use inflow_ns::thermo::{is_essential, lower_bound_constant, relative_energy, thermo_eval, BruteForceGrid, PressureLaw};
use inflow_ns::transport::{
    mass_ledger_at, max_principle_suite, renorm_residual, run_transport, Renormalization, SuiteSpec,
    TransportStepConfig,
};
use inflow_ns::ws::{boundary_bound_linearity, initial_energy_scaling, stability_experiment, uniqueness_study};

type Check = std::result::Result<String, String>;

fn config(name: &str) -> RunConfig {
    parse_config(&configs_dir().join(format!("{name}.toml"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn thermo_identities() -> Check {
    let laws = [
        PressureLaw::power(1.0, 2.0),
        PressureLaw::power(2.5, 1.4),
        PressureLaw::power(1.0, 3.0).regularized(1e-3, 5.0),
    ];
    let (mut worst_h2, mut worst_h) = (0.0f64, 0.0f64);
    for law in &laws {
        for k in 0..10_000 {
            let rho = 10f64.powf(-3.0 + 6.0 * k as f64 / 9_999.0);
            let s = thermo_eval(law, rho).map_err(|e| e.to_string())?;
            worst_h2 = worst_h2.max((s.ddh - s.dp / rho).abs() / s.ddh.abs());
            worst_h = worst_h.max((rho * s.dh - s.h - s.p).abs() / (1.0 + s.p.abs()));
        }
    }
    verdict(
        worst_h2 <= 1e-8 && worst_h <= 1e-10,
        format!("max |H'' - p'/rho|/|H''| = {worst_h2:.2e}, max |rho H' - H - p|/(1+|p|) = {worst_h:.2e}"),
    )
}

fn quadratic_oracle() -> Check {
    let law = PressureLaw::power(1.0, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1_000_000 {
        let rho = rng.gen_range(0.0..5.0);
        let r = rng.gen_range(1e-3..5.0);
        let e = relative_energy(&law, rho, r).map_err(|e| e.to_string())?;
        worst = worst.max((e - (rho - r) * (rho - r)).abs());
    }
    verdict(worst <= 1e-12, format!("max |E - (rho - r)^2| = {worst:.2e} over 1e6 pairs"))
}

fn lower_bound_edge_value() -> Check {
    let law = PressureLaw::power(1.0, 2.0);
    let (a, b) = (1.0, 2.0);
    let rec = lower_bound_constant(&law, a, b, &BruteForceGrid::default()).map_err(|e| e.to_string())?;
    // Independent sweep on a grid twice as fine, checking E >= (c/2)·den directly.
    // The two grids place r differently, so E at rho = r is zero only to rounding.
    let step = BruteForceGrid::default().rho_step / 2.0;
    let (nr, nq) = (((4.0 * b + 4.0) / step).round() as usize, ((b - a) / step).round() as usize);
    let mut worst = f64::INFINITY;
    for i in 0..=nr {
        let rho = i as f64 * step;
        let ess = is_essential(rho, a, b);
        for j in 0..=nq {
            let r = a + j as f64 * step;
            let den = if ess { (rho - r) * (rho - r) } else { 1.0 + rho };
            let e = relative_energy(&law, rho, r).map_err(|e| e.to_string())?;
            worst = worst.min(e - 0.5 * rec.c * den);
        }
    }
    let edge = (rec.c - 1.0 / 6.0).abs();
    verdict(
        edge <= 1e-3 && worst >= -1e-12,
        format!("c(1,2) = {:.6} (|c - 1/6| = {edge:.1e}), min E - (c/2) den on the finer grid = {worst:.2e}", rec.c),
    )
}

fn transport_max_principle() -> Check {
    let rep = max_principle_suite(&SuiteSpec { fields: 100, ..SuiteSpec::default() }, 4).map_err(|e| e.to_string())?;
    verdict(
        rep.pass,
        format!("{} fields, {} with violations, worst excess {:.2e}", rep.fields, rep.failed_fields, rep.worst_excess),
    )
}

fn mass_ledgers() -> Check {
    let mut checked = 0;
    let mut failures = Vec::new();
    for entry in std::fs::read_dir(configs_dir()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let cfg = config(&name);
        match cfg.experiment {
            Experiment::Simulate | Experiment::Audit | Experiment::Probe => {
                let traj = run_simulation(&cfg.simulation().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                for level in traj.stored_indices() {
                    checked += 1;
                    if !mass_ledger_at(&traj, level).passes() {
                        failures.push(format!("{name}@{level}"));
                    }
                }
            }
            Experiment::Sweep => {
                for row in pipeline::sweep(&cfg, 4).map_err(|e| e.to_string())? {
                    checked += 1;
                    if !row.mass_pass {
                        failures.push(format!("{name}(eps={}, delta={}, cells={:?})", row.epsilon, row.delta, row.cells));
                    }
                }
            }
            Experiment::Ws | Experiment::Constants => {}
        }
    }
    verdict(failures.is_empty(), format!("{checked} ledgers checked, failing: {failures:?}"))
}

fn energy_inequality() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["closed_still", "inflow_smooth"] {
        let base = config(name);
        let (mut hs, mut negs) = (Vec::new(), Vec::new());
        for n in [50, 100, 200] {
            let mut cfg = base.clone();
            cfg.domain.cells = vec![n];
            let traj = run_simulation(&cfg.simulation().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let (dx, dt) = mesh_parameter(&traj);
            let ledgers = energy_ledger_series(&traj).map_err(|e| e.to_string())?;
            ok &= ledgers.iter().all(|l| l.passes(dx, dt));
            hs.push(dx + dt);
            negs.push(ledgers.iter().map(|l| l.negative_part()).fold(0.0, f64::max));
        }
        if negs.iter().all(|&v| v == 0.0) {
            details.push(format!("{name}: residual >= 0 on every mesh"));
        } else if negs.iter().all(|&v| v > 0.0) {
            let order = log_log_slope(&hs, &negs);
            ok &= order >= 1.0;
            details.push(format!("{name}: negative parts {}, order {order:.2}", sci(&negs)));
        } else {
            ok &= negs.windows(2).all(|w| w[1] <= w[0]);
            details.push(format!("{name}: negative parts {}", sci(&negs)));
        }
    }
    verdict(ok, details.join("; "))
}

fn weak_strong_uniqueness() -> Check {
    let cfg = config("ws_uniform");
    let meshes = cfg.ws_meshes().map_err(|e| e.to_string())?;
    let runs = meshes.iter().map(|m| cfg.stability(0.0, m)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let u = uniqueness_study(&runs).map_err(|e| e.to_string())?;
    let order = match u.observed_order {
        Some(p) => format!("observed order {p:.2}"),
        None => "exact to rounding on every mesh".to_string(),
    };
    verdict(u.pass, format!("sup E {} within envelopes {}, {order}", sci(&u.sup_e), sci(&u.envelope)))
}

fn stability_bounds() -> Check {
    let cfg = config("ws_uniform");
    let mut reports = Vec::new();
    for eta in [1e-3, 1e-2, 1e-1] {
        reports.push(stability_experiment(&cfg.stability(eta, &cfg.domain.cells).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?);
    }
    let bounded = reports.iter().all(|r| r.pass);
    let scaling = initial_energy_scaling(&reports).ok_or("no scaling")?;

    let bcfg = config("ws_boundary");
    let mut boundary = Vec::new();
    for &eta in &bcfg.ws.as_ref().unwrap().eta {
        if eta > 0.0 {
            boundary.push(stability_experiment(&bcfg.stability(eta, &bcfg.domain.cells).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?);
        }
    }
    let boundary_bounded = boundary.iter().all(|r| r.pass);
    let spread = boundary_bound_linearity(&boundary).ok_or("no boundary runs")?;
    verdict(
        bounded && boundary_bounded && (scaling - 1.0).abs() <= 0.1 && spread <= 0.2,
        format!(
            "E <= bound + slack: density {bounded}, boundary {boundary_bounded}; E(0) ratio / quadratic = {scaling:.6}; boundary bound spread {spread:.2e}"
        ),
    )
}

fn pressure_probe() -> Check {
    let mut fits = Vec::new();
    for name in ["probe_steady", "probe_inflow"] {
        let cfg = config(name);
        let spec = cfg.probe.clone().unwrap();
        let traj = run_simulation(&cfg.simulation().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let law = traj.law().map_err(|e| e.to_string())?.clone();
        fits.push(boundary_pressure_probe(&traj, &law, &spec.h, spec.exponents()).map_err(|e| e.to_string())?);
    }
    let (steady, inflow) = (&fits[0], &fits[1]);
    verdict(
        (steady.fitted_exponent - 1.0).abs() <= 0.02 && inflow.fitted_exponent >= 0.9 * inflow.predicted_exponent,
        format!(
            "steady fit {:.4}; inflow fit {:.3} against predicted {:.3}",
            steady.fitted_exponent, inflow.fitted_exponent, inflow.predicted_exponent
        ),
    )
}

fn regularization_sweeps() -> Check {
    let eps_rows = pipeline::sweep(&config("sweep_epsilon"), 4).map_err(|e| e.to_string())?;
    let (z_ok, z) = z_norm_decay(&eps_rows).ok_or("epsilon sweep too short")?;
    let delta_rows = pipeline::sweep(&config("sweep_delta"), 4).map_err(|e| e.to_string())?;
    let (c_ok, c) = delta_cauchy_decreasing(&delta_rows).ok_or("delta sweep too short")?;
    verdict(z_ok && c_ok, format!("Z totals {}; delta Cauchy differences {}", sci(&z), sci(&c)))
}

fn renormalization() -> Check {
    let n = 64;
    let d = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).map_err(|e| e.to_string())?;
    let p = classify_boundary(&d, &VectorSpec::Constant { value: vec![1.0] }, Some(&ScalarSpec::Constant { value: 1.0 }))
        .map_err(|e| e.to_string())?;
    let steady = run_transport(vec![1.0; n], &|_| vec![[1.0, 0.0]; n], &p, &TransportStepConfig { epsilon: 0.0, dt: 0.01 }, 50)
        .map_err(|e| e.to_string())?;
    let phi = TestField::PolyBump { lower: vec![0.0], upper: vec![1.0], power: 2, time_rate: 1.0 };
    let steady_worst = [Renormalization::Identity, Renormalization::Constant { value: 3.0 }, Renormalization::HalfSquare]
        .iter()
        .map(|b| renorm_residual(&steady, b, &phi))
        .fold(0.0, f64::max);

    let base = config("inflow_smooth");
    let (mut hs, mut rs) = (Vec::new(), Vec::new());
    for n in [50, 100, 200] {
        let mut cfg = base.clone();
        cfg.domain.cells = vec![n];
        let traj = run_simulation(&cfg.simulation().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let (dx, dt) = mesh_parameter(&traj);
        hs.push(dx + dt);
        rs.push(renorm_residual(&traj, &Renormalization::HalfSquare, &phi));
    }
    let order = log_log_slope(&hs, &rs);
    verdict(
        steady_worst <= 1e-10 && order >= 1.0,
        format!("steady residual {steady_worst:.2e}; smooth inflow b = z^2/2 residuals {}, order {order:.4}", sci(&rs)),
    )
}

fn digests(cfg: &RunConfig, workers: usize) -> std::result::Result<Vec<(String, String)>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = pipeline::run(cfg, dir.path(), workers).map_err(|e| e.to_string())?;
    Ok(m.artifacts.into_iter().map(|a| (a.path, a.sha256)).collect())
}

fn determinism() -> Check {
    let mut compared = 0;
    for name in ["inflow_smooth", "hydrostatic", "probe_inflow", "constants", "ws_boundary"] {
        let cfg = config(name);
        let (a, b) = (digests(&cfg, 1)?, digests(&cfg, 1)?);
        if a != b || a.is_empty() {
            return Err(format!("{name}: artifacts differ between identical runs"));
        }
        compared += a.len();
    }
    let sweep = config("sweep_epsilon");
    if digests(&sweep, 1)? != digests(&sweep, 3)? {
        return Err("sweep_epsilon: artifacts differ between 1 and 3 workers".into());
    }
    Ok(format!("{compared} artifacts identical across repeated runs; sweep identical on 1 and 3 workers"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("thermodynamic identities", thermo_identities),
        ("closed-form relative energy", quadratic_oracle),
        ("lower-bound constant", lower_bound_edge_value),
        ("transport max principle", transport_max_principle),
        ("mass ledger", mass_ledgers),
        ("energy inequality", energy_inequality),
        ("weak-strong uniqueness", weak_strong_uniqueness),
        ("stability bounds", stability_bounds),
        ("boundary pressure probe", pressure_probe),
        ("regularization sweeps", regularization_sweeps),
        ("renormalization", renormalization),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} [{:.1}s]: {detail}", k + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Executes a validated [`RunConfig`]: runs the selected experiment, writes
//! its tables and reports, and closes with a manifest listing every file.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{self, energy_ledger_series, mesh_parameter, relative_energy_ledger, RelEnergyVariant};
use crate::config::{Experiment, RunConfig};
use crate::error::{Error, Result};
use crate::grid::DomainSpec;
use crate::io::{self, num, Table};
use crate::momentum::run_simulation;
use crate::thermo::{lower_bound_constant, residual_pressure_check, BruteForceGrid};
use crate::trajectory::Trajectory;
use crate::transport::{mass_ledger_at, max_principle_audit, max_principle_suite};
use crate::ws::{self, stability_experiment, uniqueness_study};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl std::fmt::Display for AuditSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        };
        write!(f, "{}: {s} ({})", self.name, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<Artifact>,
    pub summaries: Vec<AuditSummary>,
    /// Every summary passed.
    pub pass: bool,
}

impl RunManifest {
    pub fn summary(&self, name: &str) -> Option<&AuditSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }
}

/// Machine-readable record of a pipeline failure.
#[derive(Clone, Debug, Serialize)]
pub struct FailureRecord {
    pub experiment: Experiment,
    pub message: String,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Collects the files of one run.
struct Outputs {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    summaries: Vec<AuditSummary>,
}

impl Outputs {
    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        t.write(&self.dir.join(name))?;
        self.record(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, kind: &str, v: &T) -> Result<()> {
        io::write_json(&self.dir.join(name), kind, v)?;
        self.record(name)
    }

    fn record(&mut self, name: &str) -> Result<()> {
        let sha256 = io::sha256_file(&self.dir.join(name))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact { path: name.to_string(), sha256 });
        Ok(())
    }

    fn summary(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.summaries.push(AuditSummary { name: name.into(), status: Status::from_pass(pass), detail: detail.into() });
    }
}

/// Makes `dir` ready for a run. Files listed by an earlier manifest are
/// removed; any other file makes the directory unusable.
fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut owned = vec![MANIFEST.to_string()];
    if let Ok(text) = std::fs::read_to_string(dir.join(MANIFEST)) {
        if let Ok(m) = read_manifest_text(&text) {
            owned.extend(m.artifacts.into_iter().map(|a| a.path));
        }
    }
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if !owned.contains(&name) {
            return Err(Error::Io(format!(
                "output directory {} holds `{name}`, which no earlier run produced",
                dir.display()
            )));
        }
    }
    for name in owned {
        let p = dir.join(&name);
        if p.is_file() {
            std::fs::remove_file(p)?;
        }
    }
    Ok(())
}

/// Runs the configured experiment into `out` with up to `workers` threads
/// for sweep points. Solver and audit failures are recorded in
/// `failure.json` and the manifest rather than returned.
pub fn run(cfg: &RunConfig, out: &Path, workers: usize) -> Result<RunManifest> {
    cfg.validate()?;
    prepare_dir(out)?;
    let started_unix = now();
    let mut o = Outputs { dir: out.to_path_buf(), artifacts: Vec::new(), summaries: Vec::new() };
    let outcome = match cfg.experiment {
        Experiment::Simulate => simulate(cfg, &mut o).map(|_| ()),
        Experiment::Audit => run_audit(cfg, &mut o),
        Experiment::Ws => run_ws(cfg, &mut o),
        Experiment::Probe => run_probe(cfg, &mut o),
        Experiment::Sweep => run_sweep(cfg, &mut o, workers),
        Experiment::Constants => run_constants(cfg, &mut o),
    };
    if let Err(e) = outcome {
        let rec = FailureRecord { experiment: cfg.experiment, message: e.to_string() };
        o.json("failure.json", "failure", &rec)?;
        o.summaries.push(AuditSummary { name: cfg.experiment.name().into(), status: Status::Error, detail: rec.message });
    }
    let pass = !o.summaries.is_empty() && o.summaries.iter().all(|s| s.status == Status::Pass);
    let manifest = RunManifest {
        experiment: cfg.experiment,
        config_hash: cfg.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        started_unix,
        finished_unix: now(),
        artifacts: o.artifacts,
        summaries: o.summaries,
        pass,
    };
    io::write_json(&out.join(MANIFEST), "manifest", &manifest)?;
    Ok(manifest)
}

fn read_manifest_text(text: &str) -> Result<RunManifest> {
    #[derive(Deserialize)]
    struct Env {
        data: RunManifest,
    }
    Ok(serde_json::from_str::<Env>(text)?.data)
}

/// Re-reads `dir/manifest.json`, recomputes every artifact digest and
/// checks that the directory holds exactly the listed files.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let m = read_manifest_text(&std::fs::read_to_string(dir.join(MANIFEST))?)?;
    for a in &m.artifacts {
        let got = io::sha256_file(&dir.join(&a.path))?;
        if got != a.sha256 {
            return Err(Error::Data(format!("digest of {} changed", a.path)));
        }
    }
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST && !m.artifacts.iter().any(|a| a.path == name) {
            return Err(Error::Data(format!("{name} is not listed in the manifest")));
        }
    }
    Ok(m)
}

fn simulate(cfg: &RunConfig, o: &mut Outputs) -> Result<Trajectory> {
    let traj = run_simulation(&cfg.simulation()?)?;
    o.table("trajectory.csv", &io::trajectory_table(&traj))?;
    o.table("run_log.csv", &io::run_log(&traj))?;
    let (dx, dt) = mesh_parameter(&traj);
    o.summary("simulation", true, format!("{} steps, dx = {}, dt = {}", traj.steps.len(), num(dx), num(dt)));
    Ok(traj)
}

fn run_audit(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let traj = simulate(cfg, o)?;
    let (dx, dt) = mesh_parameter(&traj);

    let mass: Vec<_> = traj.stored_indices().into_iter().map(|l| mass_ledger_at(&traj, l)).collect();
    let worst = mass.iter().map(|m| m.residual.abs() / (m.steps.max(1) as f64 * m.mass_scale)).fold(0.0, f64::max);
    o.summary("mass-ledger", mass.iter().all(|m| m.passes()), format!("max |residual| / (steps · mass) = {}", num(worst)));

    let mp = max_principle_audit(&traj, None);
    o.summary("max-principle", mp.pass, format!("{} violations, worst excess {}", mp.violations, num(mp.worst_excess)));

    let ledgers = energy_ledger_series(&traj)?;
    let mut t = Table::new(
        "energy-ledger",
        &[
            "tau",
            "final_energy",
            "inflow_relative",
            "outflow_helmholtz",
            "viscous_dissipation",
            "eps_density_dissipation",
            "eps_quartic_dissipation",
            "initial_energy",
            "inflow_helmholtz_flux",
            "pressure_div_uinf",
            "convection_uinf",
            "eps_cross",
            "forcing_work",
            "lhs",
            "rhs",
            "residual",
            "slack",
        ],
    );
    for l in &ledgers {
        t.push_numbers(&[
            l.tau,
            l.final_energy,
            l.inflow_relative_term,
            l.outflow_helmholtz_term,
            l.viscous_dissipation,
            l.eps_density_dissipation,
            l.eps_quartic_dissipation,
            l.initial_energy,
            l.inflow_helmholtz_flux,
            l.pressure_div_uinf,
            l.convection_uinf,
            l.eps_cross_term,
            l.forcing_work,
            l.lhs,
            l.rhs,
            l.residual,
            audit::slack(l.scale, dx, dt),
        ]);
    }
    o.table("energy_ledger.csv", &t)?;
    let min_res = ledgers.iter().map(|l| l.residual).fold(f64::INFINITY, f64::min);
    o.summary(
        "energy-inequality",
        ledgers.iter().all(|l| l.passes(dx, dt)),
        format!("min residual {}", num(min_res)),
    );

    let mut relative = Vec::new();
    if let Some(strong) = cfg.audit_strong()? {
        let mut t = Table::new("relative-energy", &["variant", "tau", "e_tau", "lhs", "rhs", "residual", "slack"]);
        let mut variants = vec![RelEnergyVariant::Rea, RelEnergyVariant::Rei];
        if strong.require_eligible(traj.domain(), &traj.times()).is_ok() {
            variants.push(RelEnergyVariant::Reis);
        }
        for v in variants {
            let mut pass = true;
            let mut min_res = f64::INFINITY;
            for i in traj.stored_indices() {
                let r = relative_energy_ledger(&traj, &strong, traj.states[i].t, v)?;
                pass &= r.passes(dx, dt);
                min_res = min_res.min(r.residual);
                let mut row = vec![format!("{v:?}").to_lowercase()];
                row.extend([r.tau, r.e_tau, r.lhs, r.rhs, r.residual, audit::slack(r.scale, dx, dt)].iter().map(|&x| num(x)));
                t.push(row);
                if i + 1 == traj.states.len() {
                    relative.push(r);
                }
            }
            o.summary(format!("relative-energy-{}", format!("{v:?}").to_lowercase()), pass, format!("min residual {}", num(min_res)));
        }
        o.table("relative_energy.csv", &t)?;
    }

    let suite = match &cfg.audit.transport_suite {
        Some(spec) => {
            let r = max_principle_suite(spec, cfg.seed)?;
            o.summary(
                "transport-suite",
                r.pass,
                format!("{} of {} fields violated the envelope (seed {})", r.failed_fields, r.fields, r.seed),
            );
            Some(r)
        }
        None => None,
    };

    #[derive(Serialize)]
    struct AuditReport<'a> {
        mass: &'a [crate::transport::MassReport],
        max_principle: &'a crate::transport::MaxPrincipleReport,
        energy_final: Option<&'a audit::EnergyLedger>,
        relative_energy_final: &'a [audit::RelEnergyReport],
        transport_suite: Option<crate::transport::SuiteReport>,
    }
    o.json(
        "audit.json",
        "audit",
        &AuditReport {
            mass: &mass,
            max_principle: &mp,
            energy_final: ledgers.last(),
            relative_energy_final: &relative,
            transport_suite: suite,
        },
    )
}

fn run_ws(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let ws_spec = cfg.ws.as_ref().ok_or_else(|| Error::config("ws", "section missing"))?;
    let mut curves = Table::new("ws-curves", &["eta", "tau", "e", "bound", "slack"]);
    let mut reports = Vec::new();
    let mut uniqueness = None;
    for &eta in &ws_spec.eta {
        if eta == 0.0 {
            let configs = cfg.ws_meshes()?.iter().map(|m| cfg.stability(0.0, m)).collect::<Result<Vec<_>>>()?;
            let u = uniqueness_study(&configs)?;
            let detail = match u.observed_order {
                Some(p) => format!("sup E {:?}, observed order {}", u.sup_e, num(p)),
                None => format!("sup E {:?} at rounding level", u.sup_e),
            };
            o.summary("uniqueness-envelope", u.pass, detail);
            uniqueness = Some(u);
            continue;
        }
        let r = stability_experiment(&cfg.stability(eta, &cfg.domain.cells)?)?;
        for i in 0..r.times.len() {
            curves.push_numbers(&[eta, r.times[i], r.e_curve[i], r.bound_curve[i], r.slack_curve[i]]);
        }
        o.summary(format!("stability(eta={})", num(eta)), r.pass, format!("max E − bound − slack = {}", num(r.max_violation)));
        reports.push(r);
    }
    if let Some(q) = ws::initial_energy_scaling(&reports) {
        if reports[0].target == ws::PerturbationTarget::Density {
            o.summary("initial-energy-scaling", (q - 1.0).abs() <= 0.1, format!("measured / quadratic = {}", num(q)));
        }
    }
    if let Some(s) = ws::boundary_bound_linearity(&reports) {
        o.summary("boundary-bound-linearity", s <= 0.2, format!("relative spread {}", num(s)));
    }
    if !reports.is_empty() {
        o.table("ws_curves.csv", &curves)?;
    }
    #[derive(Serialize)]
    struct WsReport<'a> {
        stability: &'a [ws::StabilityReport],
        uniqueness: Option<ws::UniquenessReport>,
    }
    o.json("ws.json", "ws", &WsReport { stability: &reports, uniqueness })
}

fn run_probe(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let spec = cfg.probe.as_ref().ok_or_else(|| Error::config("probe", "section missing"))?;
    let traj = simulate(cfg, o)?;
    let r = audit::boundary_pressure_probe(&traj, traj.law()?, &spec.h, spec.exponents())?;
    let mut t = Table::new("pressure-probe", &["h", "integral"]);
    for (h, v) in r.h_values.iter().zip(&r.integrals) {
        t.push_numbers(&[*h, *v]);
    }
    o.table("probe.csv", &t)?;
    o.summary(
        "pressure-probe",
        r.fitted_exponent >= 0.9 * r.predicted_exponent,
        format!("fitted {} against predicted {}", num(r.fitted_exponent), num(r.predicted_exponent)),
    );
    o.json("probe.json", "pressure-probe", &r)
}

/// Diagnostics of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub cells: Vec<usize>,
    pub steps: usize,
    pub dt: f64,
    pub mass_residual: f64,
    pub mass_pass: bool,
    pub energy_min_residual: f64,
    pub energy_pass: bool,
    pub z_norm_total: f64,
    pub final_energy: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub error: Option<String>,
    /// `log(|q₁ − q₂| / |q₂ − q₃|) / log(n₃/n₂)` for the final energy `q`
    /// over the three finest meshes up to this one.
    pub richardson_order: Option<f64>,
    /// `‖ρ_δ − ρ_δ′‖_{L¹}` at the final time against the previous `δ` of the axis.
    pub l1_cauchy: Option<f64>,
}

impl SweepRow {
    fn failed(epsilon: f64, delta: f64, cells: Vec<usize>, e: &Error) -> Self {
        SweepRow {
            epsilon,
            delta,
            cells,
            steps: 0,
            dt: f64::NAN,
            mass_residual: f64::NAN,
            mass_pass: false,
            energy_min_residual: f64::NAN,
            energy_pass: false,
            z_norm_total: f64::NAN,
            final_energy: f64::NAN,
            min_rho: f64::NAN,
            max_rho: f64::NAN,
            error: Some(e.to_string()),
            richardson_order: None,
            l1_cauchy: None,
        }
    }
}

/// One sweep point: the row plus the final density for the Cauchy column.
fn sweep_point(cfg: &RunConfig, epsilon: f64, delta: f64, cells: &[usize]) -> Result<(SweepRow, Vec<f64>, f64)> {
    let spec = DomainSpec { cells: cells.to_vec(), ..cfg.domain.clone() };
    let traj = run_simulation(&cfg.simulation_at(epsilon, delta, &spec)?)?;
    let (dx, dt) = mesh_parameter(&traj);
    let mass = mass_ledger_at(&traj, traj.states.len() - 1);
    let ledgers = energy_ledger_series(&traj)?;
    let last = traj.steps.last().copied().unwrap_or_default();
    let row = SweepRow {
        epsilon,
        delta,
        cells: cells.to_vec(),
        steps: traj.steps.len(),
        dt,
        mass_residual: mass.residual,
        mass_pass: mass.passes(),
        energy_min_residual: ledgers.iter().map(|l| l.residual).fold(f64::INFINITY, f64::min),
        energy_pass: ledgers.iter().all(|l| l.passes(dx, dt)),
        z_norm_total: traj.z_norm_total(),
        final_energy: last.kinetic + last.helmholtz,
        min_rho: last.min_rho,
        max_rho: last.max_rho,
        error: None,
        richardson_order: None,
        l1_cauchy: None,
    };
    let rho = traj.states.last().map(|s| s.rho.clone()).unwrap_or_default();
    Ok((row, rho, traj.domain().cell_volume()))
}

/// Runs every point of the sweep, then fills the derived columns.
///
/// Points run on a pool of `workers` threads; results are gathered in the
/// order of [`RunConfig::sweep_points`], so the output does not depend on
/// scheduling.
pub fn sweep(cfg: &RunConfig, workers: usize) -> Result<Vec<SweepRow>> {
    let points = cfg.sweep_points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|(e, d, c)| sweep_point(cfg, *e, *d, c).unwrap_or_else(|err| (SweepRow::failed(*e, *d, c.clone(), &err), vec![], 0.0)))
            .collect()
    });
    let mut rows: Vec<SweepRow> = results.iter().map(|r| r.0.clone()).collect();

    let total = |c: &[usize]| c.iter().product::<usize>() as f64;
    for i in 0..rows.len() {
        // Richardson over coarser meshes with the same (ε, δ).
        let same: Vec<usize> = (0..=i)
            .filter(|&j| rows[j].epsilon == rows[i].epsilon && rows[j].delta == rows[i].delta && rows[j].error.is_none())
            .collect();
        if rows[i].error.is_none() && same.len() >= 3 {
            let (a, b, c) = (&rows[same[same.len() - 3]], &rows[same[same.len() - 2]], &rows[i]);
            let (d1, d2) = ((a.final_energy - b.final_energy).abs(), (b.final_energy - c.final_energy).abs());
            let ratio = (total(&c.cells) / total(&b.cells)).powf(1.0 / c.cells.len() as f64);
            if d1 > 0.0 && d2 > 0.0 && ratio > 1.0 {
                rows[i].richardson_order = Some((d1 / d2).ln() / ratio.ln());
            }
        }
        // Cauchy difference against the previous δ with the same (ε, mesh).
        let prev = (0..i).rev().find(|&j| {
            rows[j].epsilon == rows[i].epsilon && rows[j].cells == rows[i].cells && rows[j].delta != rows[i].delta
        });
        if let Some(j) = prev {
            let (ri, rj) = (&results[i].1, &results[j].1);
            if !ri.is_empty() && ri.len() == rj.len() {
                let vol = results[i].2;
                rows[i].l1_cauchy = Some(ri.iter().zip(rj).map(|(a, b)| (a - b).abs()).sum::<f64>() * vol);
            }
        }
    }
    Ok(rows)
}

/// `‖Z_ε‖` totals must fall strictly with `ε`, by at least half per decade.
pub fn z_norm_decay(rows: &[SweepRow]) -> Option<(bool, Vec<f64>)> {
    let mut pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.error.is_none() && r.epsilon > 0.0).map(|r| (r.epsilon, r.z_norm_total)).collect();
    if pts.len() < 2 {
        return None;
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut ok = true;
    for w in pts.windows(2) {
        let decades = (w[0].0 / w[1].0).log10();
        ok &= w[1].1 < w[0].1 && (w[1].1 / w[0].1) <= 0.5f64.powf(decades);
    }
    Some((ok, pts.iter().map(|p| p.1).collect()))
}

/// The `δ` Cauchy differences must decrease along the axis.
pub fn delta_cauchy_decreasing(rows: &[SweepRow]) -> Option<(bool, Vec<f64>)> {
    let c: Vec<f64> = rows.iter().filter_map(|r| r.l1_cauchy).collect();
    if c.len() < 2 {
        return None;
    }
    Some((c.windows(2).all(|w| w[1] < w[0]), c))
}

fn run_sweep(cfg: &RunConfig, o: &mut Outputs, workers: usize) -> Result<()> {
    let rows = sweep(cfg, workers)?;
    let mut t = Table::new(
        "sweep",
        &[
            "epsilon",
            "delta",
            "cells",
            "steps",
            "dt",
            "mass_residual",
            "energy_min_residual",
            "z_norm_total",
            "final_energy",
            "min_rho",
            "max_rho",
            "richardson_order",
            "l1_cauchy",
            "status",
        ],
    );
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for r in &rows {
        let cells = r.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x");
        let status = match &r.error {
            Some(e) => format!("ERROR: {e}"),
            None if r.mass_pass && r.energy_pass => "PASS".into(),
            None => "FAIL".into(),
        };
        let mut row = vec![num(r.epsilon), num(r.delta), cells.clone(), r.steps.to_string()];
        row.extend([r.dt, r.mass_residual, r.energy_min_residual, r.z_norm_total, r.final_energy, r.min_rho, r.max_rho].map(num));
        row.extend([opt(r.richardson_order), opt(r.l1_cauchy), status.clone()]);
        t.push(row);
        o.summaries.push(AuditSummary {
            name: format!("sweep(eps={}, delta={}, cells={cells})", num(r.epsilon), num(r.delta)),
            status: match &r.error {
                Some(_) => Status::Error,
                None => Status::from_pass(r.mass_pass && r.energy_pass),
            },
            detail: match &r.error {
                Some(e) => e.clone(),
                None => format!("z_norm_total {}", num(r.z_norm_total)),
            },
        });
    }
    o.table("sweep.csv", &t)?;
    if let Some((ok, z)) = z_norm_decay(&rows) {
        o.summary("z-norm-decay", ok, format!("totals {z:?}"));
    }
    if let Some((ok, c)) = delta_cauchy_decreasing(&rows) {
        o.summary("delta-cauchy", ok, format!("differences {c:?}"));
    }
    o.json("sweep.json", "sweep", &rows)
}

fn run_constants(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let spec = cfg.constants.as_ref().ok_or_else(|| Error::config("constants", "section missing"))?;
    let grid = BruteForceGrid { rho_step: spec.step, r_step: spec.step, rho_max: None };
    let mut t = Table::new(
        "constants",
        &["a", "b", "c_lower", "argmin_rho", "argmin_r", "c_residual_pressure", "growth_constant"],
    );
    let mut records = Vec::new();
    for &[a, b] in &spec.ranges {
        let lower = lower_bound_constant(&cfg.law, a, b, &grid)?;
        let res = residual_pressure_check(&cfg.law, a, b, &grid)?;
        t.push_numbers(&[a, b, lower.c, lower.argmin.0, lower.argmin.1, res.record.c, res.growth_constant]);
        o.summary(format!("constants[{}, {}]", num(a), num(b)), lower.c > 0.0 && lower.c.is_finite(), format!("c = {}", num(lower.c)));
        records.push((lower, res));
    }
    o.table("constants.csv", &t)?;
    o.json("constants.json", "constants", &records)
}

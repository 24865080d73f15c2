//! Run configuration files.
//!
//! A single TOML file fully determines a run. The schema, with defaults:
//!
//! ```toml
//! experiment = "audit"        # simulate | audit | ws | probe | sweep | constants
//! seed = 0                    # seeds the randomized transport suite
//! output = "out/run"          # optional; the command line may override it
//! workers = 1                 # sweep points run concurrently
//!
//! [domain]
//! lower = [0.0]
//! upper = [1.0]
//! cells = [100]
//!
//! [boundary]                  # needed by simulate, audit, probe, sweep
//! velocity = { kind = "constant", value = [0.5] }
//! density = { kind = "constant", value = 1.0 }   # required if any face is IN
//! collar_width = 0.2          # default max(0.1 · shortest side, 2 · max spacing)
//!
//! [initial]
//! density = { kind = "constant", value = 1.0 }
//! velocity = { kind = "constant", value = [0.5] } # default: boundary velocity
//!
//! [law]                       # default power law a = 1, gamma = 2
//! kind = "power"
//! a = 1.0
//! gamma = 2.0
//!
//! [viscosity]
//! mu = 0.5
//! lambda = 0.0
//!
//! [regularization]
//! epsilon = 0.0
//! delta = 0.0
//! beta = 5.0                  # default max(gamma, 4.5) + 0.5; must exceed max(gamma, 9/2)
//!
//! [time]
//! t_final = 0.5
//! dt = 0.001                  # default: acoustic CFL 0.5
//! cadence = 10
//! ```
//!
//! Experiment sections `[audit]`, `[ws]`, `[probe]`, `[sweep]` and
//! `[constants]` are described on their types.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audit::ProbeExponents;
use crate::error::{Error, Result};
use crate::field::{ScalarSampler, ScalarSpec, SpaceTimeVector, VectorSampler, VectorSpec};
use crate::grid::{build_domain, build_extension, classify_boundary, Domain, DomainSpec};
use crate::momentum::{SimulationConfig, ViscosityParams};
use crate::thermo::{validate_beta, PressureLaw};
use crate::transport::SuiteSpec;
use crate::ws::{PerturbationSpec, PerturbationTarget, StabilityConfig, StrongCase, StrongSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Audit,
    #[serde(alias = "ws-experiment")]
    Ws,
    Probe,
    Sweep,
    Constants,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Audit => "audit",
            Experiment::Ws => "ws",
            Experiment::Probe => "probe",
            Experiment::Sweep => "sweep",
            Experiment::Constants => "constants",
        }
    }

    fn needs_flow(self) -> bool {
        matches!(self, Experiment::Simulate | Experiment::Audit | Experiment::Probe | Experiment::Sweep)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub velocity: VectorSpec,
    #[serde(default)]
    pub density: Option<ScalarSpec>,
    #[serde(default)]
    pub collar_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub density: ScalarSpec,
    #[serde(default)]
    pub velocity: Option<VectorSpec>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSpec {
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_final: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
}

fn default_cadence() -> usize {
    10
}

/// `[audit]`: optional extras on top of the mass, maximum-principle and
/// energy audits that always run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    /// A strong pair; the run is driven by its manufactured forcing and the
    /// relative energy inequalities are evaluated against it.
    #[serde(default)]
    pub strong: Option<StrongCase>,
    /// Randomized maximum-principle suite seeded by `seed`.
    #[serde(default)]
    pub transport_suite: Option<SuiteSpec>,
}

/// `[ws]`: stability runs for each `eta`; `eta = 0` runs the uniqueness
/// study over `meshes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WsSpec {
    pub case: StrongCase,
    #[serde(default = "default_target")]
    pub target: PerturbationTarget,
    pub eta: Vec<f64>,
    /// Defaults to half, one and two times `domain.cells`.
    #[serde(default)]
    pub meshes: Vec<Vec<usize>>,
}

fn default_target() -> PerturbationTarget {
    PerturbationTarget::Density
}

/// `[probe]`: collar widths and optional exponent overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub h: Vec<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
}

impl ProbeSpec {
    pub fn exponents(&self) -> ProbeExponents {
        ProbeExponents { alpha: self.alpha, kappa: self.kappa }
    }
}

/// `[sweep]`: axes of the cross product; an omitted axis holds the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub cells: Vec<Vec<usize>>,
}

/// `[constants]`: density ranges `[a, b]` and the brute-force step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    pub ranges: Vec<[f64; 2]>,
    #[serde(default = "default_constants_step")]
    pub step: f64,
}

fn default_constants_step() -> f64 {
    crate::tolerances::BRUTE_FORCE_STEP
}

fn default_law() -> PressureLaw {
    PressureLaw::power(1.0, 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    pub domain: DomainSpec,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default = "default_law")]
    pub law: PressureLaw,
    pub viscosity: ViscosityParams,
    #[serde(default)]
    pub regularization: RegularizationSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub audit: AuditSpec,
    #[serde(default)]
    pub ws: Option<WsSpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub constants: Option<ConstantsSpec>,
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config("<syntax>", e.to_string().trim_end()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// The full pressure law: `law` plus `δρ^β` when `δ > 0`.
    pub fn pressure_law(&self) -> PressureLaw {
        self.law_with(self.regularization.delta)
    }

    fn law_with(&self, delta: f64) -> PressureLaw {
        self.law.clone().regularized(delta, self.beta())
    }

    pub fn beta(&self) -> f64 {
        self.regularization.beta.unwrap_or_else(|| self.law.gamma().max(4.5) + 0.5)
    }

    /// SHA-256 of the canonical JSON form, so layout and comments of the
    /// file do not affect it.
    pub fn hash(&self) -> String {
        crate::io::sha256_hex(serde_json::to_string(self).expect("configs serialize").as_bytes())
    }

    /// Checks the whole file; every experiment-specific section is checked
    /// by building what the pipeline would build.
    pub fn validate(&self) -> Result<()> {
        let domain = build_domain(&self.domain)?;
        self.law.validate()?;
        self.viscosity.validate()?;
        let reg = &self.regularization;
        if !(reg.epsilon >= 0.0 && reg.epsilon.is_finite()) {
            return Err(Error::config("regularization.epsilon", format!("must be non-negative, got {}", reg.epsilon)));
        }
        if !(reg.delta >= 0.0 && reg.delta.is_finite()) {
            return Err(Error::config("regularization.delta", format!("must be non-negative, got {}", reg.delta)));
        }
        if let Some(beta) = reg.beta {
            validate_beta(beta, self.law.gamma())?;
        }
        self.pressure_law().validate()?;
        if !(self.time.t_final > 0.0 && self.time.t_final.is_finite()) {
            return Err(Error::config("time.t_final", "must be positive"));
        }
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0 && dt <= self.time.t_final) {
                return Err(Error::config("time.dt", format!("must lie in (0, t_final], got {dt}")));
            }
        }
        if self.time.cadence == 0 {
            return Err(Error::config("time.cadence", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if self.experiment.needs_flow() {
            self.simulation_at(self.regularization.epsilon, self.regularization.delta, &self.domain)?;
        }
        if let Some(s) = &self.audit.transport_suite {
            if s.fields == 0 || s.steps == 0 {
                return Err(Error::config("audit.transport_suite", "fields and steps must be positive"));
            }
        }
        match self.experiment {
            Experiment::Ws => {
                let ws = self.ws.as_ref().ok_or_else(|| Error::config("ws", "section required for experiment ws"))?;
                if ws.eta.is_empty() {
                    return Err(Error::config("ws.eta", "give at least one perturbation size"));
                }
                if let Some(e) = ws.eta.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                    return Err(Error::config("ws.eta", format!("sizes must be non-negative, got {e}")));
                }
                for m in self.ws_meshes()? {
                    build_domain(&DomainSpec { cells: m, ..self.domain.clone() })
                        .map_err(|e| Error::config("ws.meshes", e.to_string()))?;
                }
                StrongSolution::new(ws.case.clone(), &domain, self.pressure_law(), self.viscosity, self.time.t_final)?;
            }
            Experiment::Probe => {
                let p = self.probe.as_ref().ok_or_else(|| Error::config("probe", "section required for experiment probe"))?;
                let (lo, hi) = p.h.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
                if p.h.len() < 4 || !(hi >= 10.0 * lo) || !(lo > 0.0) {
                    return Err(Error::config("probe.h", "need at least 4 positive widths spanning a decade"));
                }
            }
            Experiment::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| Error::config("sweep", "section required for experiment sweep"))?;
                if s.epsilon.is_empty() && s.delta.is_empty() && s.cells.is_empty() {
                    return Err(Error::config("sweep", "at least one axis must be nonempty"));
                }
                for (eps, delta, cells) in self.sweep_points() {
                    let spec = DomainSpec { cells, ..self.domain.clone() };
                    self.simulation_at(eps, delta, &spec)?;
                }
            }
            Experiment::Constants => {
                let c = self
                    .constants
                    .as_ref()
                    .ok_or_else(|| Error::config("constants", "section required for experiment constants"))?;
                if c.ranges.is_empty() {
                    return Err(Error::config("constants.ranges", "give at least one range"));
                }
                if let Some(r) = c.ranges.iter().find(|r| !(r[0] > 0.0 && r[1] >= r[0])) {
                    return Err(Error::config("constants.ranges", format!("need 0 < a ≤ b, got {r:?}")));
                }
                if !(c.step > 0.0 && c.step < 1.0) {
                    return Err(Error::config("constants.step", "must lie in (0, 1)"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Meshes of the uniqueness study.
    pub fn ws_meshes(&self) -> Result<Vec<Vec<usize>>> {
        let ws = self.ws.as_ref().ok_or_else(|| Error::config("ws", "section missing"))?;
        if !ws.meshes.is_empty() {
            return Ok(ws.meshes.clone());
        }
        let c = &self.domain.cells;
        Ok(vec![c.iter().map(|n| n / 2).collect(), c.clone(), c.iter().map(|n| n * 2).collect()])
    }

    /// Cross product of the sweep axes in file order; omitted axes hold the base value.
    pub fn sweep_points(&self) -> Vec<(f64, f64, Vec<usize>)> {
        let s = self.sweep.clone().unwrap_or_default();
        let or = |v: Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v };
        let eps = or(s.epsilon, self.regularization.epsilon);
        let delta = or(s.delta, self.regularization.delta);
        let cells = if s.cells.is_empty() { vec![self.domain.cells.clone()] } else { s.cells };
        let mut out = Vec::new();
        for c in &cells {
            for &e in &eps {
                for &d in &delta {
                    out.push((e, d, c.clone()));
                }
            }
        }
        out
    }

    /// The simulation of the base configuration.
    pub fn simulation(&self) -> Result<SimulationConfig> {
        self.simulation_at(self.regularization.epsilon, self.regularization.delta, &self.domain)
    }

    /// The simulation with `ε`, `δ` and the mesh replaced.
    pub fn simulation_at(&self, epsilon: f64, delta: f64, spec: &DomainSpec) -> Result<SimulationConfig> {
        let domain = build_domain(spec)?;
        let b = self
            .boundary
            .as_ref()
            .ok_or_else(|| Error::config("boundary", format!("section required for experiment {}", self.experiment.name())))?;
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| Error::config("initial", format!("section required for experiment {}", self.experiment.name())))?;
        let partition = classify_boundary(&domain, &b.velocity, b.density.as_ref().map(|s| s as &dyn ScalarSampler))
            .map_err(|e| Error::config("boundary.density", e.to_string()))?;
        let width = b.collar_width.unwrap_or_else(|| default_collar(&domain));
        let extension = build_extension(&partition, width)?;
        let law = self.law_with(delta);
        law.validate()?;
        let rho0: Vec<f64> = domain.centers().into_iter().map(|x| init.density.sample(x)).collect();
        if let Some((c, v)) = rho0.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::config("initial.density", format!("value {v} at cell {c} is not positive")));
        }
        let vel = init.velocity.as_ref().unwrap_or(&b.velocity);
        let u0 = domain.centers().into_iter().map(|x| vel.sample(x)).collect();
        let forcing = match &self.audit.strong {
            Some(case) => {
                let strong = StrongSolution::new(case.clone(), &domain, law.clone(), self.viscosity, self.time.t_final)?;
                Some(strong.forcing.clone() as Arc<dyn SpaceTimeVector>)
            }
            None => None,
        };
        Ok(SimulationConfig {
            partition,
            extension,
            law,
            viscosity: self.viscosity,
            epsilon,
            dt: self.time.dt,
            t_final: self.time.t_final,
            cadence: self.time.cadence,
            rho0,
            u0,
            forcing,
        })
    }

    /// The strong pair of `[audit]` on the base mesh, if any.
    pub fn audit_strong(&self) -> Result<Option<StrongSolution>> {
        match &self.audit.strong {
            Some(case) => {
                let domain = build_domain(&self.domain)?;
                Ok(Some(StrongSolution::new(
                    case.clone(),
                    &domain,
                    self.pressure_law(),
                    self.viscosity,
                    self.time.t_final,
                )?))
            }
            None => Ok(None),
        }
    }

    /// The stability run for one perturbation size on the given mesh.
    pub fn stability(&self, eta: f64, cells: &[usize]) -> Result<StabilityConfig> {
        let ws = self.ws.as_ref().ok_or_else(|| Error::config("ws", "section missing"))?;
        Ok(StabilityConfig {
            case: ws.case.clone(),
            law: self.pressure_law(),
            viscosity: self.viscosity,
            lower: self.domain.lower.clone(),
            upper: self.domain.upper.clone(),
            cells: cells.to_vec(),
            t_final: self.time.t_final,
            dt: self.time.dt,
            cadence: self.time.cadence,
            epsilon: self.regularization.epsilon,
            collar_width: self.boundary.as_ref().and_then(|b| b.collar_width),
            perturbation: PerturbationSpec { target: ws.target, eta },
        })
    }
}

/// `max(0.1 · shortest side, 2 · max spacing)`.
pub fn default_collar(domain: &Domain) -> f64 {
    let shortest = (0..domain.dim).map(|k| domain.upper[k] - domain.lower[k]).fold(f64::INFINITY, f64::min);
    (0.1 * shortest).max(2.0 * domain.max_spacing())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "simulate"

[domain]
lower = [0.0]
upper = [1.0]
cells = [50]

[boundary]
velocity = { kind = "constant", value = [0.5] }
density = { kind = "constant", value = 1.0 }

[initial]
density = { kind = "constant", value = 1.0 }

[viscosity]
mu = 0.5

[time]
t_final = 0.1
"#;

    #[test]
    fn minimal_file_gets_documented_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.time.cadence, 10);
        assert_eq!(cfg.time.dt, None);
        assert_eq!(cfg.law, PressureLaw::power(1.0, 2.0));
        assert_eq!(cfg.seed, 0);
        let sim = cfg.simulation().unwrap();
        assert_eq!(sim.u0[10], [0.5, 0.0]);
        assert_eq!(sim.epsilon, 0.0);
    }

    #[test]
    fn small_beta_is_rejected_with_the_constraint() {
        let text = format!("{MINIMAL}\n[regularization]\ndelta = 0.01\nbeta = 3.0\n");
        let msg = parse_config_str(&text).unwrap_err().to_string();
        assert!(msg.contains("max{γ, 9/2}") || msg.contains("max{gamma, 9/2}"), "{msg}");
    }

    #[test]
    fn missing_inflow_density_names_the_face() {
        let text = MINIMAL.replace("density = { kind = \"constant\", value = 1.0 }\n\n[initial]", "\n[initial]");
        let msg = parse_config_str(&text).unwrap_err().to_string();
        assert!(msg.contains("face 0"), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let msg = parse_config_str("experiment = \n").unwrap_err().to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let msg = parse_config_str(&MINIMAL.replace("mu = 0.5", "mu = 0.5\nnu = 1.0")).unwrap_err().to_string();
        assert!(msg.contains("nu"), "{msg}");
    }

    #[test]
    fn sweep_points_follow_file_order() {
        let text = format!("{}\n[sweep]\nepsilon = [0.1, 0.01]\ncells = [[20], [40]]\n", MINIMAL.replace("simulate", "sweep"));
        let cfg = parse_config_str(&text).unwrap();
        let pts = cfg.sweep_points();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[1], (0.01, 0.0, vec![20]));
    }

    #[test]
    fn hash_ignores_layout() {
        let a = parse_config_str(MINIMAL).unwrap();
        let b = parse_config_str(&MINIMAL.replace("\n\n", "\n\n# comment\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}

//! Term-by-term evaluation of the energy balance, the relative energy
//! inequalities, the weak forms and the near-boundary pressure integral on
//! finished trajectories.
//!
//! Every audit reads a [`Trajectory`] and nothing else. Time integrals are
//! step sums over all levels; each term is evaluated at the level the
//! scheme treats it at (explicit terms at `t_n`, implicit ones at `t_{n+1}`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{contract, dot, grad_form, norm2, SpaceTimeScalar, SpaceTimeVector, TestField, Tensor2, Vec2, VectorTestField, ZERO2};
use crate::grid::{cell_sum, inner_collar, integrate, Domain, FaceClass, Region};
use crate::momentum::{quartic_divergence, quartic_flux, relative_velocity, scalar_gradient, vector_gradient, viscous_form};
use crate::thermo::PressureLaw;
use crate::tolerances;
use crate::trajectory::{State, Trajectory};
use crate::ws::{remainder_rate, JetTable, RemainderItems, StrongJet, StrongSolution};

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `c_slack (Δx + Δt) · scale`.
pub fn slack(scale: f64, dx: f64, dt: f64) -> f64 {
    tolerances::SLACK * (dx + dt) * scale
}

/// Mesh parameter `(Δx, Δt)` of a trajectory.
pub fn mesh_parameter(traj: &Trajectory) -> (f64, f64) {
    (traj.domain().max_spacing(), traj.steps.first().map_or(0.0, |s| s.dt))
}

/// A named term of an inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedTerm {
    pub name: &'static str,
    pub value: f64,
}

/// The energy inequality at one stored time, term by term.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub tau: f64,
    pub final_energy: f64,
    pub inflow_relative_term: f64,
    pub outflow_helmholtz_term: f64,
    pub viscous_dissipation: f64,
    pub eps_density_dissipation: f64,
    pub eps_quartic_dissipation: f64,
    pub initial_energy: f64,
    pub inflow_helmholtz_flux: f64,
    pub pressure_div_uinf: f64,
    pub convection_uinf: f64,
    pub eps_cross_term: f64,
    /// `∫∫ρ f·v`; zero for unforced runs.
    pub forcing_work: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; the inequality holds iff this is at least `−slack`.
    pub residual: f64,
    /// Sum of the absolute values of all terms.
    pub scale: f64,
}

impl EnergyLedger {
    fn close(&mut self) {
        self.lhs = self.final_energy
            + self.inflow_relative_term
            + self.outflow_helmholtz_term
            + self.viscous_dissipation
            + self.eps_density_dissipation
            + self.eps_quartic_dissipation;
        self.rhs = self.initial_energy
            + self.inflow_helmholtz_flux
            + self.pressure_div_uinf
            + self.convection_uinf
            + self.eps_cross_term
            + self.forcing_work;
        self.residual = self.rhs - self.lhs;
        self.scale = [
            self.final_energy,
            self.inflow_relative_term,
            self.outflow_helmholtz_term,
            self.viscous_dissipation,
            self.eps_density_dissipation,
            self.eps_quartic_dissipation,
            self.initial_energy,
            self.inflow_helmholtz_flux,
            self.pressure_div_uinf,
            self.convection_uinf,
            self.eps_cross_term,
            self.forcing_work,
        ]
        .iter()
        .map(|v| v.abs())
        .sum();
    }

    /// `max(0, −residual)`.
    pub fn negative_part(&self) -> f64 {
        (-self.residual).max(0.0)
    }

    pub fn passes(&self, dx: f64, dt: f64) -> bool {
        self.residual >= -slack(self.scale, dx, dt)
    }
}

/// `Σ(½ρ|v|² + H_δ(ρ))V`.
fn total_energy(d: &Domain, law: &PressureLaw, rho: &[f64], v: &[Vec2]) -> f64 {
    cell_sum(d, rho.iter().zip(v).map(|(&r, w)| 0.5 * r * norm2(*w) + law.helmholtz(r)))
}

/// `Σ_faces H_δ″(ρ̄_f) (Δρ_f/h)² |f| h`, the discrete `∫H_δ″|∇ρ|²`.
fn density_dissipation(d: &Domain, law: &PressureLaw, rho: &[f64]) -> f64 {
    let mut s = 0.0;
    for axis in 0..d.dim {
        let h = d.spacing[axis];
        let m = d.face_measure(axis);
        for (l, r) in d.interior_faces(axis) {
            let g = (rho[r] - rho[l]) / h;
            s += law.helmholtz3(0.5 * (rho[l] + rho[r])).2 * g * g * m * h;
        }
    }
    s
}

/// `Σ_faces (Δρ_f/h)(Δv_f/h)·ū_f |f| h`, the discrete `∫∇ρ·∇v·w`.
fn density_cross(d: &Domain, rho: &[f64], v: &[Vec2], w: &[Vec2]) -> f64 {
    let mut s = 0.0;
    for axis in 0..d.dim {
        let h = d.spacing[axis];
        let m = d.face_measure(axis);
        for (l, r) in d.interior_faces(axis) {
            let g = (rho[r] - rho[l]) / h;
            let wf = [0.5 * (w[l][0] + w[r][0]), 0.5 * (w[l][1] + w[r][1])];
            let dv = [(v[r][0] - v[l][0]) / h, (v[r][1] - v[l][1]) / h];
            s += g * dot(dv, wf) * m * h;
        }
    }
    s
}

/// Energy ledgers at every stored level, accumulated in one pass.
pub fn energy_ledger_series(traj: &Trajectory) -> Result<Vec<EnergyLedger>> {
    let law = traj.law()?;
    let visc = traj.viscosity()?;
    let ext = traj.extension()?;
    let base = law.unregularized();
    let p = &traj.partition;
    let d = p.domain.clone();
    let eps = traj.epsilon;
    let stored = traj.stored_indices();
    let v_init = relative_velocity(&traj.states[0].u, ext);
    let mut acc = EnergyLedger { initial_energy: total_energy(&d, law, &traj.states[0].rho, &v_init), ..Default::default() };
    let mut out = Vec::with_capacity(stored.len());
    let snapshot = |acc: &EnergyLedger, s: &State, v: &[Vec2]| {
        let mut l = acc.clone();
        l.tau = s.t;
        l.final_energy = total_energy(&d, law, &s.rho, v);
        l.close();
        l
    };
    if stored.first() == Some(&0) {
        out.push(snapshot(&acc, &traj.states[0], &v_init));
    }
    let mut next = 1;
    for n in 0..traj.states.len() - 1 {
        let (s0, s1) = (&traj.states[n], &traj.states[n + 1]);
        let dt = s1.t - s0.t;
        let v0 = relative_velocity(&s0.u, ext);
        let v1 = relative_velocity(&s1.u, ext);
        for (f, face) in p.faces.iter().enumerate() {
            let un = p.u_b_normal[f];
            let rc = s0.rho[face.cell];
            match p.class[f] {
                FaceClass::In => {
                    let rb = p.rho_b[f].unwrap_or(0.0);
                    acc.inflow_relative_term += dt * law.rel_energy(rb, rc) * un.abs() * face.measure;
                    acc.inflow_helmholtz_flux -= dt * law.helmholtz(rb) * un * face.measure;
                }
                FaceClass::Out => acc.outflow_helmholtz_term += dt * base.helmholtz(rc) * un * face.measure,
                FaceClass::Zero => {}
            }
        }
        acc.viscous_dissipation += dt * viscous_form(&d, visc, &s1.u, &v1);
        if eps > 0.0 {
            acc.eps_density_dissipation += dt * eps * density_dissipation(&d, law, &s1.rho);
            acc.eps_quartic_dissipation += dt * quartic_divergence(&d, &v0, eps).1;
            acc.eps_cross_term += dt * eps * density_cross(&d, &s1.rho, &v0, &ext.u_inf);
        }
        acc.pressure_div_uinf -= dt * cell_sum(&d, s1.rho.iter().zip(&ext.div_u_inf).map(|(&r, &dv)| law.pressure(r) * dv));
        let adv = traj.advecting(n);
        let va = relative_velocity(adv, ext);
        acc.convection_uinf -=
            dt * cell_sum(&d, (0..d.n_cells()).map(|c| s0.rho[c] * grad_form(adv[c], &ext.grad_u_inf[c], va[c])));
        if traj.forcing.is_some() {
            let f = traj.forcing_at(s1.t);
            acc.forcing_work += dt * cell_sum(&d, (0..d.n_cells()).map(|c| s1.rho[c] * dot(f[c], v1[c])));
        }
        if next < stored.len() && stored[next] == n + 1 {
            out.push(snapshot(&acc, s1, &v1));
            next += 1;
        }
    }
    Ok(out)
}

/// The energy ledger at the stored time `tau`.
pub fn energy_ledger(traj: &Trajectory, tau: f64) -> Result<EnergyLedger> {
    let level = traj.level_at(tau)?;
    let series = energy_ledger_series(traj)?;
    let stored = traj.stored_indices();
    stored
        .iter()
        .position(|&i| i == level)
        .map(|k| series[k].clone())
        .ok_or_else(|| Error::Data(format!("τ = {tau} is not a stored time")))
}

/// Which relative energy inequality to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelEnergyVariant {
    /// The approximate system: regularized law, `ε` terms and outflow term.
    Rea,
    /// The limit system against any admissible pair.
    Rei,
    /// The quadratic form against a strong solution.
    Reis,
}

/// A relative energy inequality at one stored time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelEnergyReport {
    pub variant: RelEnergyVariant,
    pub tau: f64,
    /// `∫(½ρ|u − U|² + E(ρ|r))(τ)`.
    pub e_tau: f64,
    pub e_initial: f64,
    /// `∫∫S(∇u):∇(v − V)`, or `∫∫S(∇(v − V)):∇(v − V)` for the strong form.
    pub dissipation_diff: f64,
    pub boundary_terms: Vec<NamedTerm>,
    pub remainder_terms: Vec<NamedTerm>,
    /// Itemized quadratic remainder; strong form only.
    pub remainder: Option<RemainderItems>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
    /// Largest `|∂t r + div(rU)|` sampled on the grid.
    pub r_equation_residual: f64,
}

impl RelEnergyReport {
    pub fn passes(&self, dx: f64, dt: f64) -> bool {
        self.residual >= -slack(self.scale, dx, dt)
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.boundary_terms.iter().chain(&self.remainder_terms).find(|t| t.name == name).map(|t| t.value)
    }
}

fn rel_energy_at(state: &State, jets: &[StrongJet], law: &PressureLaw, d: &Domain) -> f64 {
    cell_sum(
        d,
        (0..d.n_cells()).map(|c| {
            let w = [state.u[c][0] - jets[c].u[0], state.u[c][1] - jets[c].u[1]];
            0.5 * state.rho[c] * norm2(w) + law.rel_energy(state.rho[c], jets[c].r)
        }),
    )
}

struct Accum {
    names: Vec<&'static str>,
    values: Vec<f64>,
}

impl Accum {
    fn new(names: &[&'static str]) -> Self {
        Accum { names: names.to_vec(), values: vec![0.0; names.len()] }
    }

    fn add(&mut self, name: &str, v: f64) {
        let k = self.names.iter().position(|n| *n == name).expect("term name");
        self.values[k] += v;
    }

    fn terms(&self) -> Vec<NamedTerm> {
        self.names.iter().zip(&self.values).map(|(&name, &value)| NamedTerm { name, value }).collect()
    }
}

const BOUNDARY_LHS: [&str; 2] = ["inflow_relative", "outflow_relative"];
const BOUNDARY_RHS: [&str; 1] = ["inflow_boundary"];
const VOLUME_LHS: [&str; 2] = ["eps_density_dissipation", "eps_quartic_dissipation"];
const VOLUME_RHS: [&str; 9] = [
    "time_derivative",
    "convection",
    "pressure_taylor",
    "pressure_v_grad_r",
    "pressure_div_v",
    "pressure_gradient",
    "quartic_flux",
    "eps_cross",
    "forcing",
];

/// Evaluates the chosen relative energy inequality against `strong` at the
/// stored time `tau`.
///
/// The weak inequalities use the law attached to `strong` (unregularized)
/// or, for the approximate system, the trajectory's regularized law. The
/// strong form first checks that the pair solves the equations to within
/// the strong-residual tolerance.
pub fn relative_energy_ledger(
    traj: &Trajectory,
    strong: &StrongSolution,
    tau: f64,
    variant: RelEnergyVariant,
) -> Result<RelEnergyReport> {
    let level = traj.level_at(tau)?;
    let d = traj.domain().clone();
    let p = &traj.partition;
    let ext = traj.extension()?;
    let visc = traj.viscosity()?;
    let eps = traj.epsilon;
    let law = match variant {
        RelEnergyVariant::Rea => traj.law()?.clone(),
        _ => strong.law.clone(),
    };
    let sample_times: Vec<f64> = {
        let k = 4usize;
        (0..=k).map(|i| traj.states[level].t * i as f64 / k as f64).collect()
    };
    if variant == RelEnergyVariant::Reis {
        strong.require_eligible(&d, &sample_times)?;
    }
    let r_equation_residual = sample_times
        .iter()
        .flat_map(|&t| d.centers().into_iter().map(move |x| (t, x)))
        .map(|(t, x)| strong.fields.continuity_residual(t, x).abs())
        .fold(0.0, f64::max);

    let mut table = JetTable::new(strong, &d);
    let jets0 = table.at(traj.states[0].t);
    let e_initial = rel_energy_at(&traj.states[0], &jets0, &law, &d);
    let mut bl = Accum::new(&BOUNDARY_LHS);
    let mut br = Accum::new(&BOUNDARY_RHS);
    let mut vl = Accum::new(&VOLUME_LHS);
    let mut vr = Accum::new(&VOLUME_RHS);
    let mut dissipation = 0.0;
    let mut rem = RemainderItems::default();
    let vol = d.cell_volume();
    for n in 0..level {
        let (s0, s1) = (&traj.states[n], &traj.states[n + 1]);
        let dt = s1.t - s0.t;
        let j0 = table.at(s0.t);
        let j1 = table.at(s1.t);
        let w1: Vec<Vec2> = (0..d.n_cells()).map(|c| [s1.u[c][0] - j1[c].u[0], s1.u[c][1] - j1[c].u[1]]).collect();
        if variant == RelEnergyVariant::Reis {
            dissipation += dt * viscous_form(&d, visc, &w1, &w1);
            let r = remainder_rate(s0, strong, p, &j0);
            rem.boundary += dt * r.boundary;
            rem.time_derivative += dt * r.time_derivative;
            rem.convection_difference += dt * r.convection_difference;
            rem.quadratic_convection += dt * r.quadratic_convection;
            rem.pressure_taylor += dt * r.pressure_taylor;
            rem.pressure_gradient += dt * r.pressure_gradient;
            rem.total += dt * r.total;
            continue;
        }
        dissipation += dt * viscous_form(&d, visc, &s1.u, &w1);
        for (f, face) in p.faces.iter().enumerate() {
            let un = p.u_b_normal[f];
            let rc = s0.rho[face.cell];
            let r = strong.density(s0.t, face.center);
            match p.class[f] {
                FaceClass::In => {
                    let rb = p.rho_b[f].unwrap_or(0.0);
                    let (hr, dhr, _) = law.helmholtz3(r);
                    br.add("inflow_boundary", dt * (hr - r * dhr - law.helmholtz(rb) + rb * dhr) * un * face.measure);
                    if variant == RelEnergyVariant::Rea {
                        bl.add("inflow_relative", dt * law.rel_energy(rb, rc) * un.abs() * face.measure);
                    }
                }
                FaceClass::Out if variant == RelEnergyVariant::Rea => {
                    bl.add("outflow_relative", dt * law.rel_energy(rc, r) * un * face.measure);
                }
                _ => {}
            }
        }
        let v0 = relative_velocity(&s0.u, ext);
        let f1 = traj.forcing.as_ref().map(|_| traj.forcing_at(s1.t));
        for c in 0..d.n_cells() {
            let (ja, jb) = (&j0[c], &j1[c]);
            let w0 = [s0.u[c][0] - ja.u[0], s0.u[c][1] - ja.u[1]];
            let mw0 = [-w0[0], -w0[1]];
            vr.add("time_derivative", dt * vol * s0.rho[c] * dot(mw0, ja.u_t));
            vr.add("convection", dt * vol * s0.rho[c] * grad_form(s0.u[c], &ja.grad_u, mw0));
            // Pressure group at the new level, as the scheme treats pressure.
            let (rho, r) = (s1.rho[c], jb.r);
            let (pr, dpr) = (law.pressure(r), law.dpressure(r));
            let v1 = [s1.u[c][0] - ext.u_inf[c][0], s1.u[c][1] - ext.u_inf[c][1]];
            let div_v = jb.div_u() - ext.div_u_inf[c];
            vr.add("pressure_taylor", dt * vol * (pr - dpr * (r - rho) - law.pressure(rho)) * jb.div_u());
            vr.add("pressure_v_grad_r", -dt * vol * dpr * dot(v1, jb.grad_r));
            vr.add("pressure_div_v", -dt * vol * pr * div_v);
            vr.add("pressure_gradient", dt * vol * (r - rho) / r * dpr * dot(w1[c], jb.grad_r));
            if let Some(f) = &f1 {
                vr.add("forcing", dt * vol * rho * dot(f[c], w1[c]));
            }
        }
        if variant == RelEnergyVariant::Rea && eps > 0.0 {
            vl.add("eps_density_dissipation", dt * eps * density_dissipation(&d, &law, &s1.rho));
            vl.add("eps_quartic_dissipation", dt * quartic_divergence(&d, &v0, eps).1);
            let (z, _) = quartic_flux(&d, &v0, eps);
            let grad_rho = scalar_gradient(&d, &s1.rho);
            let big_v: Vec<Vec2> = (0..d.n_cells()).map(|c| [j0[c].u[0] - ext.u_inf[c][0], j0[c].u[1] - ext.u_inf[c][1]]).collect();
            let diff: Vec<Vec2> = (0..d.n_cells()).map(|c| [s0.u[c][0] - big_v[c][0], s0.u[c][1] - big_v[c][1]]).collect();
            let grad_diff = vector_gradient(&d, &diff);
            for c in 0..d.n_cells() {
                let mut grad_v: Tensor2 = j0[c].grad_u;
                for j in 0..2 {
                    for k in 0..2 {
                        grad_v[j][k] -= ext.grad_u_inf[c][j][k];
                    }
                }
                vr.add("quartic_flux", dt * vol * contract(&z[c], &grad_v));
                let mut cross = 0.0;
                for j in 0..d.dim {
                    for k in 0..d.dim {
                        cross += grad_rho[c][k] * grad_diff[c][j][k] * big_v[c][j];
                    }
                }
                vr.add("eps_cross", dt * vol * eps * cross);
            }
        }
    }
    let jets_tau = table.at(traj.states[level].t);
    let e_tau = rel_energy_at(&traj.states[level], &jets_tau, &law, &d);
    let (boundary_terms, remainder_terms, lhs, rhs, scale);
    if variant == RelEnergyVariant::Reis {
        boundary_terms = vec![NamedTerm { name: "boundary", value: rem.boundary }];
        remainder_terms = vec![
            NamedTerm { name: "time_derivative", value: rem.time_derivative },
            NamedTerm { name: "convection_difference", value: rem.convection_difference },
            NamedTerm { name: "quadratic_convection", value: rem.quadratic_convection },
            NamedTerm { name: "pressure_taylor", value: rem.pressure_taylor },
            NamedTerm { name: "pressure_gradient", value: rem.pressure_gradient },
        ];
        lhs = e_tau + dissipation;
        rhs = e_initial + rem.total;
        scale = e_tau.abs()
            + dissipation.abs()
            + e_initial.abs()
            + boundary_terms.iter().chain(&remainder_terms).map(|t| t.value.abs()).sum::<f64>();
    } else {
        let mut bt = bl.terms();
        bt.extend(br.terms());
        boundary_terms = bt;
        let mut rt = vl.terms();
        rt.extend(vr.terms());
        remainder_terms = rt;
        lhs = e_tau + dissipation + bl.values.iter().sum::<f64>() + vl.values.iter().sum::<f64>();
        rhs = e_initial + br.values.iter().sum::<f64>() + vr.values.iter().sum::<f64>();
        scale = e_tau.abs()
            + dissipation.abs()
            + e_initial.abs()
            + boundary_terms.iter().chain(&remainder_terms).map(|t| t.value.abs()).sum::<f64>();
    }
    Ok(RelEnergyReport {
        variant,
        tau: traj.states[level].t,
        e_tau,
        e_initial,
        dissipation_diff: dissipation,
        boundary_terms,
        remainder_terms,
        remainder: (variant == RelEnergyVariant::Reis).then_some(rem),
        lhs,
        rhs,
        residual: rhs - lhs,
        scale,
        r_equation_residual,
    })
}

/// Which weak form to test, with its test field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "equation", rename_all = "snake_case")]
pub enum WeakForm {
    /// Continuity with artificial diffusion and both boundary fluxes.
    Continuity { field: TestField },
    /// Momentum for `v = u − u_∞` with the regularizing terms.
    Momentum { field: VectorTestField },
}

fn require_vanishing(values: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    for v in values {
        if v.abs() > tolerances::CLASSIFICATION {
            return Err(Error::TestField(format!("test field is {v:.3e} on {what}; it must vanish there")));
        }
    }
    Ok(())
}

/// `|lhs − rhs|` of the chosen weak form at the stored time `tau`.
///
/// Time derivatives of the test field are taken at mid-step, the flux
/// terms at the level the scheme uses them.
pub fn weak_form_residual(traj: &Trajectory, form: &WeakForm, tau: f64) -> Result<f64> {
    let level = traj.level_at(tau)?;
    let d = traj.domain().clone();
    let p = &traj.partition;
    let eps = traj.epsilon;
    let centers = d.centers();
    let vol = d.cell_volume();
    let times = traj.times();
    match form {
        WeakForm::Continuity { field } => {
            for &t in &times[..=level] {
                require_vanishing(p.faces_of(FaceClass::Out).map(|f| field.value(t, p.faces[f].center)), "an outflow face")?;
            }
            let at = |s: &State| cell_sum(&d, (0..d.n_cells()).map(|c| s.rho[c] * field.value(s.t, centers[c])));
            let lhs = at(&traj.states[level]) - at(&traj.states[0]);
            let mut rhs = 0.0;
            for n in 0..level {
                let (s0, s1) = (&traj.states[n], &traj.states[n + 1]);
                let dt = s1.t - s0.t;
                let mid = 0.5 * (s0.t + s1.t);
                let grad_rho = scalar_gradient(&d, &s1.rho);
                for c in 0..d.n_cells() {
                    let (_, dphi, _) = field.derivatives(mid, centers[c]);
                    let (_, _, gphi) = field.derivatives(s0.t, centers[c]);
                    rhs += dt * vol * (s1.rho[c] * dphi + s0.rho[c] * dot(s0.u[c], gphi) - eps * dot(grad_rho[c], gphi));
                }
                for (f, face) in p.faces.iter().enumerate() {
                    let phi = field.value(s0.t, face.center);
                    let flux = match p.class[f] {
                        FaceClass::In => p.rho_b[f].unwrap_or(0.0) * p.u_b_normal[f],
                        FaceClass::Out => s0.rho[face.cell] * p.u_b_normal[f],
                        FaceClass::Zero => 0.0,
                    };
                    rhs -= dt * flux * phi * face.measure;
                }
            }
            Ok((lhs - rhs).abs())
        }
        WeakForm::Momentum { field } => {
            for &t in &times[..=level] {
                require_vanishing(p.faces.iter().map(|f| norm2(field.value(t, f.center)).sqrt()), "the boundary")?;
            }
            let ext = traj.extension()?;
            let law = traj.law()?;
            let visc = traj.viscosity()?;
            let at = |s: &State| {
                cell_sum(
                    &d,
                    (0..d.n_cells()).map(|c| {
                        let v = [s.u[c][0] - ext.u_inf[c][0], s.u[c][1] - ext.u_inf[c][1]];
                        s.rho[c] * dot(v, field.value(s.t, centers[c]))
                    }),
                )
            };
            let lhs = at(&traj.states[level]) - at(&traj.states[0]);
            let mut rhs = 0.0;
            for n in 0..level {
                let (s0, s1) = (&traj.states[n], &traj.states[n + 1]);
                let dt = s1.t - s0.t;
                let mid = 0.5 * (s0.t + s1.t);
                let v0 = relative_velocity(&s0.u, ext);
                let v1 = relative_velocity(&s1.u, ext);
                let phi1: Vec<Vec2> = centers.iter().map(|&x| field.value(s1.t, x)).collect();
                rhs -= dt * viscous_form(&d, visc, &s1.u, &phi1);
                let grad_rho = scalar_gradient(&d, &s1.rho);
                let grad_u = vector_gradient(&d, &s0.u);
                let z = if eps > 0.0 { Some(quartic_flux(&d, &v0, eps).0) } else { None };
                let f1 = traj.forcing.as_ref().map(|_| traj.forcing_at(s1.t));
                for c in 0..d.n_cells() {
                    let x = centers[c];
                    let (_, dphi, _) = field.derivatives(mid, x);
                    let (phi0, _, g0) = field.derivatives(s0.t, x);
                    let (_, _, g1) = field.derivatives(s1.t, x);
                    let (rho0, u0) = (s0.rho[c], s0.u[c]);
                    // ∂_k(u_∞·φ) at the start level.
                    let mut grad_dot = ZERO2;
                    for k in 0..2 {
                        for j in 0..2 {
                            grad_dot[k] += ext.grad_u_inf[c][j][k] * phi0[j] + ext.u_inf[c][j] * g0[j][k];
                        }
                    }
                    let mut term = s1.rho[c] * dot(v1[c], dphi) + rho0 * grad_form(u0, &g0, u0) - rho0 * dot(u0, grad_dot)
                        + law.pressure(s1.rho[c]) * (g1[0][0] + g1[1][1]);
                    if eps > 0.0 {
                        let mut comp = 0.0;
                        for j in 0..2 {
                            for k in 0..2 {
                                comp += grad_rho[c][k] * grad_u[c][j][k] * phi0[j];
                            }
                        }
                        term += eps * dot(grad_rho[c], grad_dot) - eps * comp;
                        if let Some(z) = &z {
                            term -= contract(&z[c], &g0);
                        }
                    }
                    if let Some(f) = &f1 {
                        term += s1.rho[c] * dot(f[c], field.value(s1.t, x));
                    }
                    rhs += dt * vol * term;
                }
            }
            Ok((lhs - rhs).abs())
        }
    }
}

/// Near-boundary pressure integrals and their scaling in `h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureProbeReport {
    pub h_values: Vec<f64>,
    /// `∫₀^T ∫_{collar(h)} p(ρ)` per `h`.
    pub integrals: Vec<f64>,
    pub fitted_exponent: f64,
    /// `Γ = min(1 − 1/α, 1 − 1/κ)`.
    pub predicted_exponent: f64,
    pub alpha: f64,
    pub kappa: f64,
}

/// Integrability exponents that predict the probe's scaling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeExponents {
    /// Defaults to `2β/(β + 1)` with `β` the artificial-pressure exponent,
    /// or `γ` in place of `β` for unregularized laws.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Defaults to 2.
    #[serde(default)]
    pub kappa: Option<f64>,
}

/// Integrates `p(ρ)` over the inner collar of width `h` for each `h`, with
/// the right-point rule in time, and fits `log integral` against `log h`.
pub fn boundary_pressure_probe(
    traj: &Trajectory,
    law: &PressureLaw,
    h_list: &[f64],
    exponents: ProbeExponents,
) -> Result<PressureProbeReport> {
    if h_list.len() < 4 {
        return Err(Error::config("probe.h_values", format!("need at least 4 values, got {}", h_list.len())));
    }
    let (lo, hi) = h_list.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
    if !(hi >= 10.0 * lo) {
        return Err(Error::config("probe.h_values", "values must span at least a decade"));
    }
    let d = traj.domain();
    let mut integrals = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mask = inner_collar(d, h)?;
        let mut s = 0.0;
        for n in 0..traj.states.len() - 1 {
            let s1 = &traj.states[n + 1];
            let dt = s1.t - traj.states[n].t;
            let pr: Vec<f64> = s1.rho.iter().map(|&r| law.pressure(r)).collect();
            s += dt * integrate(d, &pr, Region::Cells(Some(&mask)))?;
        }
        integrals.push(s);
    }
    let exponent = law.regularization().map_or(law.gamma(), |(_, beta)| beta);
    let alpha = exponents.alpha.unwrap_or(2.0 * exponent / (exponent + 1.0));
    let kappa = exponents.kappa.unwrap_or(2.0);
    if !(alpha > 1.0 && kappa > 1.0) {
        return Err(Error::config("probe.alpha", "α and κ must exceed 1"));
    }
    Ok(PressureProbeReport {
        h_values: h_list.to_vec(),
        fitted_exponent: log_log_slope(h_list, &integrals),
        integrals,
        predicted_exponent: (1.0 - 1.0 / alpha).min(1.0 - 1.0 / kappa),
        alpha,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ScalarSpec, VectorSpec};
    use crate::grid::{build_domain, build_extension, classify_boundary, DomainSpec};
    use crate::momentum::{run_simulation, SimulationConfig, ViscosityParams};
    use crate::ws::StrongCase;

    fn uniform_run(n: usize, eps: f64) -> Trajectory {
        let d = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).unwrap();
        let ub = VectorSpec::Constant { value: vec![0.5] };
        let rb = ScalarSpec::Constant { value: 1.0 };
        let p = classify_boundary(&d, &ub, Some(&rb)).unwrap();
        let ext = build_extension(&p, 0.2).unwrap();
        let cfg = SimulationConfig {
            partition: p,
            extension: ext,
            law: PressureLaw::power(1.0, 2.0),
            viscosity: ViscosityParams { mu: 0.5, lambda: 0.0 },
            epsilon: eps,
            dt: None,
            t_final: 0.5,
            cadence: 5,
            rho0: vec![1.0; n],
            u0: vec![[0.5, 0.0]; n],
            forcing: None,
        };
        run_simulation(&cfg).unwrap()
    }

    #[test]
    fn uniform_stream_has_a_vanishing_ledger() {
        let traj = uniform_run(40, 0.0);
        for l in energy_ledger_series(&traj).unwrap() {
            assert!(l.residual.abs() < 1e-12, "{l:?}");
            assert!(l.final_energy.abs() < 1e-12);
            assert!(l.viscous_dissipation.abs() < 1e-12);
        }
    }

    #[test]
    fn log_log_slope_recovers_a_power() {
        let xs = [0.1, 0.2, 0.4, 0.8];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((log_log_slope(&xs, &ys) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn uniform_pair_has_zero_relative_energy() {
        let traj = uniform_run(40, 0.0);
        let strong = StrongSolution::new(
            StrongCase::UniformSteady { density: 1.0, velocity: vec![0.5] },
            traj.domain(),
            PressureLaw::power(1.0, 2.0),
            ViscosityParams { mu: 0.5, lambda: 0.0 },
            0.5,
        )
        .unwrap();
        let tau = traj.final_time();
        for v in [RelEnergyVariant::Rei, RelEnergyVariant::Rea, RelEnergyVariant::Reis] {
            let r = relative_energy_ledger(&traj, &strong, tau, v).unwrap();
            assert!(r.e_tau.abs() < 1e-24, "{v:?} {r:?}");
            assert!(r.residual.abs() < 1e-12, "{v:?} {r:?}");
        }
    }

    #[test]
    fn probe_of_unit_density_is_twice_the_width() {
        let traj = uniform_run(100, 0.0);
        let hs = [0.02, 0.05, 0.1, 0.2, 0.3];
        let rep = boundary_pressure_probe(&traj, &PressureLaw::power(1.0, 2.0), &hs, ProbeExponents::default()).unwrap();
        for (h, i) in hs.iter().zip(&rep.integrals) {
            assert!((i - 2.0 * h * 0.5).abs() < 1e-12, "{h} {i}");
        }
        assert!((rep.fitted_exponent - 1.0).abs() < 1e-10);
        assert!(boundary_pressure_probe(&traj, &PressureLaw::power(1.0, 2.0), &hs[..3], ProbeExponents::default()).is_err());
    }

    #[test]
    fn constant_test_field_gives_mass_conservation() {
        let traj = uniform_run(40, 0.0);
        let form = WeakForm::Continuity { field: TestField::Constant { value: 1.0 } };
        // The right edge is an outflow face, where a constant does not vanish.
        assert!(matches!(weak_form_residual(&traj, &form, traj.final_time()), Err(Error::TestField(_))));
        let ramp = WeakForm::Continuity { field: TestField::LeftRamp { lower: 0.0, upper: 1.0, time_rate: 0.0 } };
        assert!(weak_form_residual(&traj, &ramp, traj.final_time()).unwrap() < 1e-3);
    }

    #[test]
    fn bump_momentum_residual_vanishes_on_the_uniform_stream() {
        let traj = uniform_run(40, 0.0);
        let field = VectorTestField {
            profile: TestField::PolyBump { lower: vec![0.0], upper: vec![1.0], power: 1, time_rate: 0.0 },
            direction: vec![1.0],
        };
        let r = weak_form_residual(&traj, &WeakForm::Momentum { field }, traj.final_time()).unwrap();
        assert!(r < 1e-12, "{r}");
    }
}

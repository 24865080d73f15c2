//! The ε-regularized continuity equation with the inflow/outflow boundary
//! operator, and the audits of its discrete maximum principle, mass
//! balance, L² identity and renormalized form.
//!
//! One step is explicit first-order upwind convection followed by an
//! implicit Neumann diffusion solve. Boundary faces carry the total flux
//! prescribed by the Robin condition: `ρ_B u_B·n` on inflow faces,
//! `ρ u_B·n` (upwinded from the interior) on outflow faces, nothing on
//! no-flux faces.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{SpaceTimeScalar, Vec2};
use crate::grid::{BoundaryPartition, Domain, FaceClass};
use crate::linalg::{conjugate_gradient, solve_tridiagonal};
use crate::tolerances;
use crate::trajectory::{State, StepRecord, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportStepConfig {
    pub epsilon: f64,
    pub dt: f64,
}

impl TransportStepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", format!("must be non-negative, got {}", self.epsilon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("time.dt", format!("must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Normal velocity on the interior face between `l` and `r` along `axis`.
pub fn face_velocity(u: &[Vec2], l: usize, r: usize, axis: usize) -> f64 {
    0.5 * (u[l][axis] + u[r][axis])
}

/// Upwind mass fluxes times face measure: per axis one value per interior
/// face (positive from left to right cell), and one outward value per
/// boundary face.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvectiveFluxes {
    pub interior: [Vec<f64>; 2],
    pub boundary: Vec<f64>,
}

pub fn convective_fluxes(partition: &BoundaryPartition, rho: &[f64], u: &[Vec2]) -> ConvectiveFluxes {
    let d = &partition.domain;
    let mut interior = [Vec::new(), Vec::new()];
    for axis in 0..d.dim {
        let m = d.face_measure(axis);
        interior[axis] = d
            .interior_faces(axis)
            .iter()
            .map(|&(l, r)| {
                let uf = face_velocity(u, l, r, axis);
                let up = if uf >= 0.0 { rho[l] } else { rho[r] };
                up * uf * m
            })
            .collect();
    }
    let boundary = (0..partition.faces.len())
        .map(|f| boundary_mass_flux(partition, f, rho[partition.faces[f].cell]) * partition.faces[f].measure)
        .collect();
    ConvectiveFluxes { interior, boundary }
}

/// Outward boundary flux density `ρ_B u_B·n`, `ρ u_B·n` or 0.
pub fn boundary_mass_flux(partition: &BoundaryPartition, f: usize, rho_cell: f64) -> f64 {
    match partition.class[f] {
        FaceClass::In => partition.rho_b[f].unwrap_or(0.0) * partition.u_b_normal[f],
        FaceClass::Out => rho_cell * partition.u_b_normal[f],
        FaceClass::Zero => 0.0,
    }
}

/// Discrete divergence of `u`: interior faces use averaged normal
/// velocities, boundary faces the boundary data (zero on no-flux faces).
pub fn cell_divergence(partition: &BoundaryPartition, u: &[Vec2]) -> Vec<f64> {
    let d = &partition.domain;
    let v = d.cell_volume();
    let mut div = vec![0.0; d.n_cells()];
    for axis in 0..d.dim {
        let m = d.face_measure(axis);
        for (l, r) in d.interior_faces(axis) {
            let q = face_velocity(u, l, r, axis) * m;
            div[l] += q;
            div[r] -= q;
        }
    }
    for (f, face) in partition.faces.iter().enumerate() {
        div[face.cell] += partition.flux_velocity(f) * face.measure;
    }
    div.iter_mut().for_each(|x| *x /= v);
    div
}

/// Outgoing volume rate `Σ_out |u·n||f| / V` per cell; the explicit update
/// is monotone while `dt` times this stays at most 1.
fn outflow_rate(partition: &BoundaryPartition, u: &[Vec2]) -> Vec<f64> {
    let d = &partition.domain;
    let v = d.cell_volume();
    let mut out = vec![0.0; d.n_cells()];
    for axis in 0..d.dim {
        let m = d.face_measure(axis);
        for (l, r) in d.interior_faces(axis) {
            let uf = face_velocity(u, l, r, axis);
            if uf > 0.0 {
                out[l] += uf * m;
            } else {
                out[r] -= uf * m;
            }
        }
    }
    for (f, face) in partition.faces.iter().enumerate() {
        let un = partition.flux_velocity(f);
        if un > 0.0 {
            out[face.cell] += un * face.measure;
        }
    }
    out.iter_mut().for_each(|x| *x /= v);
    out
}

/// Largest stable step for the explicit convection.
pub fn max_stable_dt(partition: &BoundaryPartition, u: &[Vec2]) -> f64 {
    let m = outflow_rate(partition, u).into_iter().fold(0.0, f64::max);
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}

/// Solves `(I − c Δ_h) x = rhs` with homogeneous Neumann faces.
pub fn diffusion_solve(domain: &Domain, c: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    if c == 0.0 {
        return Ok(rhs.to_vec());
    }
    let n = domain.n_cells();
    if domain.dim == 1 {
        let w = c / (domain.spacing[0] * domain.spacing[0]);
        let lower = vec![-w; n];
        let upper = vec![-w; n];
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + w * ((i > 0) as u8 + (i + 1 < n) as u8) as f64).collect();
        return Ok(solve_tridiagonal(&lower, &diag, &upper, rhs));
    }
    let faces: Vec<(Vec<(usize, usize)>, f64)> = (0..2)
        .map(|axis| (domain.interior_faces(axis), c / (domain.spacing[axis] * domain.spacing[axis])))
        .collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        y.copy_from_slice(x);
        for (list, w) in &faces {
            for &(l, r) in list {
                let q = w * (x[l] - x[r]);
                y[l] += q;
                y[r] -= q;
            }
        }
    };
    conjugate_gradient(apply, rhs, rhs.to_vec())
}

/// One transport step from level n to n+1 with the velocity of level n.
pub fn step_continuity(
    rho: &[f64],
    u: &[Vec2],
    partition: &BoundaryPartition,
    cfg: &TransportStepConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = &partition.domain;
    let n = d.n_cells();
    if rho.len() != n {
        return Err(Error::Shape { expected: n, got: rho.len() });
    }
    if u.len() != n {
        return Err(Error::Shape { expected: n, got: u.len() });
    }
    let worst = outflow_rate(partition, u).into_iter().fold(0.0, f64::max) * cfg.dt;
    if worst > 1.0 + 1e-12 {
        return Err(Error::StepSize(format!(
            "convective Courant number {worst:.3} exceeds 1; reduce dt below {:.3e}",
            cfg.dt / worst
        )));
    }
    let fl = convective_fluxes(partition, rho, u);
    let k = cfg.dt / d.cell_volume();
    let mut star = rho.to_vec();
    for axis in 0..d.dim {
        for (q, &(l, r)) in fl.interior[axis].iter().zip(&d.interior_faces(axis)) {
            star[l] -= k * q;
            star[r] += k * q;
        }
    }
    for (f, face) in partition.faces.iter().enumerate() {
        star[face.cell] -= k * fl.boundary[f];
    }
    let next = diffusion_solve(d, cfg.dt * cfg.epsilon, &star)?;
    if let Some((cell, &v)) = next.iter().enumerate().find(|(_, &v)| !(v >= tolerances::NEGATIVE_DENSITY)) {
        return Err(Error::Scheme(format!("density {v:.3e} at cell {cell} after transport step")));
    }
    Ok(next)
}

/// Runs the transport equation alone with a prescribed velocity history.
pub fn run_transport(
    rho0: Vec<f64>,
    velocity: &dyn Fn(f64) -> Vec<Vec2>,
    partition: &BoundaryPartition,
    cfg: &TransportStepConfig,
    n_steps: usize,
) -> Result<Trajectory> {
    let d = &partition.domain;
    let mut states = vec![State { t: 0.0, u: velocity(0.0), rho: rho0 }];
    let mut steps = Vec::with_capacity(n_steps);
    for step in 1..=n_steps {
        let prev = &states[step - 1];
        let rho = step_continuity(&prev.rho, &prev.u, partition, cfg).map_err(|e| e.at_step(step))?;
        let t = step as f64 * cfg.dt;
        let max_div = cell_divergence(partition, &prev.u).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        steps.push(StepRecord {
            step,
            t,
            dt: cfg.dt,
            max_div,
            mass: crate::grid::cell_sum(d, rho.iter().copied()),
            min_rho: rho.iter().copied().fold(f64::INFINITY, f64::min),
            max_rho: rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ..StepRecord::default()
        });
        states.push(State { t, u: velocity(t), rho });
    }
    Ok(Trajectory {
        partition: partition.clone(),
        extension: None,
        law: None,
        viscosity: None,
        epsilon: cfg.epsilon,
        forcing: None,
        states,
        steps,
        cadence: 1,
        implicit_transport: false,
    })
}

/// Outcome of the maximum-principle audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub pass: bool,
    pub rho_lower: f64,
    pub rho_upper: f64,
    /// Integrated growth rate `∫₀^τ K` at the final level.
    pub k_integral: f64,
    /// Largest amount by which a cell left the envelope plus slack (≤ 0 on pass).
    pub worst_excess: f64,
    pub worst_level: usize,
    pub worst_cell: usize,
    pub violations: usize,
    /// Same check with a user-supplied constant rate `K`, if given.
    pub constant_k: Option<ConstantRateCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantRateCheck {
    pub k: f64,
    pub pass: bool,
    pub worst_excess: f64,
}

/// Per-step growth rate of the discrete envelope.
///
/// The explicit update multiplies the lower bound by `1 − dt·div` rather
/// than `exp(−dt·div)`, so positive divergence enters through
/// `−ln(1 − dt·div)/dt ≥ div`. The second term budgets the rounding of one
/// update and, for iterative diffusion solves, the solver tolerance.
pub fn envelope_rate(div: &[f64], dt: f64, iterative_solve: bool, n_cells: usize) -> f64 {
    let mut k: f64 = 0.0;
    for &di in div {
        k = k.max(di.abs());
        if di > 0.0 {
            let q = 1.0 - dt * di;
            k = k.max(if q > 0.0 { -q.ln() / dt } else { f64::INFINITY });
        }
    }
    let mut rounding = 16.0 * f64::EPSILON;
    if iterative_solve {
        rounding += tolerances::LINEAR_SOLVE * (n_cells as f64).sqrt();
    }
    k + rounding / dt
}

/// Checks `ρ̲ e^{−∫K} − slack ≤ ρ ≤ ρ̄ e^{∫K} + slack` at every level, with
/// `ρ̲, ρ̄` the bounds of the initial and inflow densities.
pub fn max_principle_audit(traj: &Trajectory, constant_k: Option<f64>) -> MaxPrincipleReport {
    let d = traj.domain();
    let rho0 = &traj.states[0].rho;
    let mut lo = rho0.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = rho0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some((a, b)) = traj.partition.rho_b_range() {
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let iterative = d.dim == 2 && traj.epsilon > 0.0;
    let eps = tolerances::MAX_PRINCIPLE_EPS_FACTOR * f64::EPSILON;
    let mut report = MaxPrincipleReport {
        pass: true,
        rho_lower: lo,
        rho_upper: hi,
        k_integral: 0.0,
        worst_excess: f64::NEG_INFINITY,
        worst_level: 0,
        worst_cell: 0,
        violations: 0,
        constant_k: constant_k.map(|k| ConstantRateCheck { k, pass: true, worst_excess: f64::NEG_INFINITY }),
    };
    let mut kint = 0.0;
    for (n, state) in traj.states.iter().enumerate() {
        if n > 0 {
            let prev = &traj.states[n - 1];
            let dt = state.t - prev.t;
            let div = cell_divergence(&traj.partition, traj.advecting(n - 1));
            kint += dt * envelope_rate(&div, dt, iterative, d.n_cells());
        }
        let grow = kint.exp();
        let slack = eps * hi * grow;
        for (c, &r) in state.rho.iter().enumerate() {
            let excess = (lo / grow - slack - r).max(r - hi * grow - slack);
            if excess > report.worst_excess {
                report.worst_excess = excess;
                report.worst_level = n;
                report.worst_cell = c;
            }
            if excess > 0.0 {
                report.violations += 1;
                report.pass = false;
            }
        }
        if let Some(ck) = report.constant_k.as_mut() {
            let g = (ck.k * state.t).exp();
            let s = eps * hi * g;
            for &r in &state.rho {
                let excess = (lo / g - s - r).max(r - hi * g - s);
                ck.worst_excess = ck.worst_excess.max(excess);
                if excess > 0.0 {
                    ck.pass = false;
                }
            }
        }
    }
    report.k_integral = kint;
    report
}

/// Mass balance at one stored time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassReport {
    pub tau: f64,
    pub mass_0: f64,
    pub mass_t: f64,
    /// `∫₀^τ∫_{Γin} ρ_B |u_B·n|`.
    pub inflow_integral: f64,
    /// `∫₀^τ∫_{Γout} ρ u_B·n`.
    pub outflow_integral: f64,
    /// `mass_t + outflow − mass_0 − inflow`.
    pub residual: f64,
    /// Largest of the four magnitudes above, for relative tolerances.
    pub mass_scale: f64,
    pub steps: usize,
}

impl MassReport {
    /// `|residual| ≤ MASS_PER_STEP · steps · mass_scale`.
    pub fn passes(&self) -> bool {
        self.residual.abs() <= tolerances::MASS_PER_STEP * self.steps.max(1) as f64 * self.mass_scale
    }
}

/// Evaluates the mass balance at level `level`, boundary fluxes taken at
/// the start of each step as in the scheme.
pub fn mass_ledger_at(traj: &Trajectory, level: usize) -> MassReport {
    let d = traj.domain();
    let p = &traj.partition;
    let mass = |rho: &[f64]| crate::grid::cell_sum(d, rho.iter().copied());
    let (mut inflow, mut outflow) = (0.0, 0.0);
    for n in 0..level {
        let dt = traj.states[n + 1].t - traj.states[n].t;
        let rho = &traj.states[n].rho;
        for (f, face) in p.faces.iter().enumerate() {
            let q = boundary_mass_flux(p, f, rho[face.cell]) * face.measure;
            match p.class[f] {
                FaceClass::In => inflow -= dt * q,
                FaceClass::Out => outflow += dt * q,
                FaceClass::Zero => {}
            }
        }
    }
    let m0 = mass(&traj.states[0].rho);
    let mt = mass(&traj.states[level].rho);
    MassReport {
        tau: traj.states[level].t,
        mass_0: m0,
        mass_t: mt,
        inflow_integral: inflow,
        outflow_integral: outflow,
        residual: mt + outflow - m0 - inflow,
        mass_scale: m0.abs().max(mt.abs()).max(inflow).max(outflow),
        steps: level,
    }
}

/// Mass balance at the final level.
pub fn mass_ledger(traj: &Trajectory) -> MassReport {
    mass_ledger_at(traj, traj.states.len() - 1)
}

/// A renormalizing function `b` with its first two derivatives.
pub trait Renormalizer {
    fn b(&self, z: f64) -> f64;
    fn db(&self, z: f64) -> f64;
    fn ddb(&self, z: f64) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Renormalization {
    Identity,
    Constant { value: f64 },
    /// `z²/2`
    HalfSquare,
    /// `z/(1 + z)`, bounded with bounded derivatives.
    Saturating,
}

impl Renormalizer for Renormalization {
    fn b(&self, z: f64) -> f64 {
        match self {
            Renormalization::Identity => z,
            Renormalization::Constant { value } => *value,
            Renormalization::HalfSquare => 0.5 * z * z,
            Renormalization::Saturating => z / (1.0 + z),
        }
    }

    fn db(&self, z: f64) -> f64 {
        match self {
            Renormalization::Identity => 1.0,
            Renormalization::Constant { .. } => 0.0,
            Renormalization::HalfSquare => z,
            Renormalization::Saturating => 1.0 / ((1.0 + z) * (1.0 + z)),
        }
    }

    fn ddb(&self, z: f64) -> f64 {
        match self {
            Renormalization::Identity | Renormalization::Constant { .. } => 0.0,
            Renormalization::HalfSquare => 1.0,
            Renormalization::Saturating => -2.0 / (1.0 + z).powi(3),
        }
    }
}

/// Space-time residual of the renormalized equation
/// `∂t b + div(b u − ε b′∇ρ) + ε b″|∇ρ|² + (ρb′ − b) div u = 0`
/// tested against `φ` over the whole trajectory, assembled with the
/// transport stencils. Returns its magnitude.
pub fn renorm_residual(traj: &Trajectory, b: &dyn Renormalizer, test: &dyn SpaceTimeScalar) -> f64 {
    let d = traj.domain();
    let p = &traj.partition;
    let vol = d.cell_volume();
    let eps = traj.epsilon;
    let phi_at = |t: f64| -> Vec<f64> { (0..d.n_cells()).map(|c| test.value(t, d.center(c))).collect() };
    let faces: Vec<Vec<(usize, usize)>> = (0..d.dim).map(|a| d.interior_faces(a)).collect();

    let last = traj.states.len() - 1;
    let bsum = |rho: &[f64], phi: &[f64]| -> f64 { rho.iter().zip(phi).map(|(&r, &f)| b.b(r) * f).sum::<f64>() * vol };
    let mut phi_n = phi_at(traj.states[0].t);
    let mut r = -bsum(&traj.states[0].rho, &phi_n);
    for n in 0..last {
        let (s0, s1) = (&traj.states[n], &traj.states[n + 1]);
        let dt = s1.t - s0.t;
        let phi_next = phi_at(s1.t);
        // Σ b^{n+1}(φ^{n+1} − φ^n) enters with a minus sign.
        r -= s1.rho.iter().zip(phi_next.iter().zip(&phi_n)).map(|(&q, (&a, &c))| b.b(q) * (a - c)).sum::<f64>() * vol;

        let mut spatial = 0.0;
        let adv = traj.advecting(n);
        let div = cell_divergence(p, adv);
        for axis in 0..d.dim {
            let m = d.face_measure(axis);
            let h = d.spacing[axis];
            for &(l, rr) in &faces[axis] {
                let uf = face_velocity(adv, l, rr, axis);
                let up = if uf >= 0.0 { s0.rho[l] } else { s0.rho[rr] };
                let rf = 0.5 * (s1.rho[l] + s1.rho[rr]);
                let g = (s1.rho[rr] - s1.rho[l]) / h;
                let flux = (b.b(up) * uf - eps * b.db(rf) * g) * m;
                spatial -= flux * (phi_n[rr] - phi_n[l]);
                spatial += eps * b.ddb(rf) * g * g * 0.5 * (phi_n[l] + phi_n[rr]) * m * h;
            }
        }
        for (f, face) in p.faces.iter().enumerate() {
            let rc = s0.rho[face.cell];
            let un = p.u_b_normal[f];
            let q = match p.class[f] {
                FaceClass::In => b.b(rc) * un - b.db(rc) * (rc - p.rho_b[f].unwrap_or(0.0)) * un,
                FaceClass::Out => b.b(rc) * un,
                FaceClass::Zero => 0.0,
            };
            spatial += q * face.measure * phi_n[face.cell];
        }
        for c in 0..d.n_cells() {
            let z = s0.rho[c];
            spatial += (z * b.db(z) - b.b(z)) * div[c] * phi_n[c] * vol;
        }
        r += dt * spatial;
        phi_n = phi_next;
    }
    r += bsum(&traj.states[last].rho, &phi_n);
    r.abs()
}

/// Terms of the L² identity obtained by testing the continuity equation with ρ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct L2Report {
    pub tau: f64,
    pub half_l2_final: f64,
    pub boundary_loss: f64,
    pub eps_gradient: f64,
    pub half_l2_initial: f64,
    pub inflow_gain: f64,
    pub divergence_term: f64,
    /// lhs − rhs.
    pub defect: f64,
}

/// `½∫ρ²(τ) + ½∫∫_{∂Ω}ρ²|u_B·n| + ε∫∫|∇ρ|²` against
/// `½∫ρ₀² + ∫∫_{Γin}ρρ_B|u_B·n| − ½∫∫ρ² div u` at the final level.
pub fn l2_identity_audit(traj: &Trajectory) -> L2Report {
    let d = traj.domain();
    let p = &traj.partition;
    let vol = d.cell_volume();
    let half_sq = |rho: &[f64]| 0.5 * rho.iter().map(|r| r * r).sum::<f64>() * vol;
    let last = traj.states.len() - 1;
    let (mut bl, mut eg, mut gain, mut divt) = (0.0, 0.0, 0.0, 0.0);
    for n in 0..last {
        let (s0, s1) = (&traj.states[n], &traj.states[n + 1]);
        let dt = s1.t - s0.t;
        for (f, face) in p.faces.iter().enumerate() {
            let rc = s0.rho[face.cell];
            let un = p.u_b_normal[f];
            match p.class[f] {
                FaceClass::In => {
                    bl += dt * 0.5 * rc * rc * un.abs() * face.measure;
                    gain += dt * rc * p.rho_b[f].unwrap_or(0.0) * un.abs() * face.measure;
                }
                FaceClass::Out => bl += dt * 0.5 * rc * rc * un.abs() * face.measure,
                FaceClass::Zero => {}
            }
        }
        for axis in 0..d.dim {
            let (m, h) = (d.face_measure(axis), d.spacing[axis]);
            for (l, r) in d.interior_faces(axis) {
                let g = (s1.rho[r] - s1.rho[l]) / h;
                eg += dt * traj.epsilon * g * g * m * h;
            }
        }
        let div = cell_divergence(p, traj.advecting(n));
        divt -= dt * 0.5 * s0.rho.iter().zip(&div).map(|(r, dv)| r * r * dv).sum::<f64>() * vol;
    }
    let fin = half_sq(&traj.states[last].rho);
    let ini = half_sq(&traj.states[0].rho);
    L2Report {
        tau: traj.states[last].t,
        half_l2_final: fin,
        boundary_loss: bl,
        eps_gradient: eg,
        half_l2_initial: ini,
        inflow_gain: gain,
        divergence_term: divt,
        defect: (fin + bl + eg) - (ini + gain + divt),
    }
}

/// Size of the randomized maximum-principle suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SuiteSpec {
    #[serde(default = "default_suite_fields")]
    pub fields: usize,
    /// Cells per axis; two-dimensional members use a quarter of this.
    #[serde(default = "default_suite_cells")]
    pub cells: usize,
    #[serde(default = "default_suite_steps")]
    pub steps: usize,
}

fn default_suite_fields() -> usize {
    100
}

fn default_suite_cells() -> usize {
    64
}

fn default_suite_steps() -> usize {
    40
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec { fields: default_suite_fields(), cells: default_suite_cells(), steps: default_suite_steps() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub fields: usize,
    /// Members with at least one envelope violation.
    pub failed_fields: usize,
    pub violations: usize,
    /// Largest excess over the envelope across the suite.
    pub worst_excess: f64,
    pub pass: bool,
}

/// Runs the transport step under random smooth steady velocities with data
/// in `[0.5, 2]` and audits the maximum principle of every run.
///
/// Even members are one-dimensional, odd members two-dimensional; every
/// member uses 90% of its Courant limit.
pub fn max_principle_suite(spec: &SuiteSpec, seed: u64) -> Result<SuiteReport> {
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    if spec.fields == 0 || spec.steps == 0 || spec.cells < 4 * crate::grid::MIN_CELLS {
        return Err(Error::config("audit.transport_suite", "need fields, steps > 0 and at least 16 cells"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report =
        SuiteReport { seed, fields: spec.fields, failed_fields: 0, violations: 0, worst_excess: f64::NEG_INFINITY, pass: true };
    for member in 0..spec.fields {
        let dim = 1 + member % 2;
        let cells = if dim == 1 { vec![spec.cells] } else { vec![spec.cells / 4; 2] };
        let domain = crate::grid::build_domain(&crate::grid::DomainSpec {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
            cells,
        })?;
        let mut modes = Vec::new();
        for j in 0..dim {
            for m in 1..=3 {
                let k = [rng.gen_range(-2.0 * PI..2.0 * PI), if dim == 2 { rng.gen_range(-2.0 * PI..2.0 * PI) } else { 0.0 }];
                modes.push((j, rng.gen_range(-0.5..0.5) / m as f64, k, rng.gen_range(0.0..2.0 * PI)));
            }
        }
        let base = [rng.gen_range(-1.0..1.0), if dim == 2 { rng.gen_range(-1.0..1.0) } else { 0.0 }];
        let velocity = move |x: Vec2| {
            let mut u = base;
            for &(j, a, k, ph) in &modes {
                u[j] += a * (k[0] * x[0] + k[1] * x[1] + ph).sin();
            }
            u
        };
        let centre: f64 = rng.gen_range(0.75..1.75);
        let amp = rng.gen_range(0.0..1.0) * (centre - 0.5).min(2.0 - centre);
        let kr = [rng.gen_range(-2.0 * PI..2.0 * PI), rng.gen_range(-2.0 * PI..2.0 * PI)];
        let rho_b: f64 = rng.gen_range(0.5..2.0);
        let epsilon = if rng.gen_bool(0.5) { 0.0 } else { 1e-3 };

        let partition = crate::grid::classify_boundary(&domain, &velocity, Some(&move |_: Vec2| rho_b))?;
        let u: Vec<Vec2> = domain.centers().into_iter().map(|x| velocity(x)).collect();
        let rho0: Vec<f64> =
            domain.centers().into_iter().map(|x| centre + amp * (kr[0] * x[0] + kr[1] * x[1]).sin()).collect();
        let cfg = TransportStepConfig { epsilon, dt: 0.9 * max_stable_dt(&partition, &u) };
        let traj = run_transport(rho0, &|_| u.clone(), &partition, &cfg, spec.steps)?;
        let audit = max_principle_audit(&traj, None);
        report.violations += audit.violations;
        report.worst_excess = report.worst_excess.max(audit.worst_excess);
        if !audit.pass {
            report.failed_fields += 1;
        }
    }
    report.pass = report.failed_fields == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ScalarSpec, TestField, VectorSpec};
    use crate::grid::{build_domain, classify_boundary, DomainSpec};

    fn line(n: usize, ub: Vec2, rho_b: f64) -> BoundaryPartition {
        let d = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).unwrap();
        let u = VectorSpec::Constant { value: vec![ub[0]] };
        let r = ScalarSpec::Constant { value: rho_b };
        classify_boundary(&d, &u, Some(&r)).unwrap()
    }

    #[test]
    fn uniform_stream_is_steady() {
        let p = line(50, [1.0, 0.0], 1.0);
        let cfg = TransportStepConfig { epsilon: 0.05, dt: 0.01 };
        let traj = run_transport(vec![1.0; 50], &|_| vec![[1.0, 0.0]; 50], &p, &cfg, 40).unwrap();
        for s in &traj.states {
            assert!(s.rho.iter().all(|&r| (r - 1.0).abs() < 1e-14));
        }
        let m = mass_ledger(&traj);
        assert!((m.inflow_integral - 0.4).abs() < 1e-12 && (m.outflow_integral - 0.4).abs() < 1e-12);
        assert!(m.residual.abs() < 1e-12);
    }

    #[test]
    fn closed_diffusion_conserves_mass() {
        let p = line(40, [0.0, 0.0], 1.0);
        let rho0: Vec<f64> = p.domain.centers().iter().map(|x| 1.0 + 0.5 * (6.0 * x[0]).sin()).collect();
        let cfg = TransportStepConfig { epsilon: 0.1, dt: 0.01 };
        let traj = run_transport(rho0, &|_| vec![[0.0, 0.0]; 40], &p, &cfg, 50).unwrap();
        let m = mass_ledger(&traj);
        assert!(m.residual.abs() < 1e-12 * m.mass_scale, "{}", m.residual);
        assert!(max_principle_audit(&traj, None).pass);
    }

    #[test]
    fn inflow_front_stays_within_data_and_follows_characteristics() {
        let n = 200;
        let p = line(n, [1.0, 0.0], 2.0);
        let cfg = TransportStepConfig { epsilon: 0.0, dt: 0.5 / n as f64 };
        let traj = run_transport(vec![1.0; n], &|_| vec![[1.0, 0.0]; n], &p, &cfg, n).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last.t - 0.5).abs() < 1e-12);
        assert!(last.rho.iter().all(|&r| (1.0 - 1e-12..=2.0 + 1e-12).contains(&r)));
        let exact = |x: f64| if x < 0.5 { 2.0 } else { 1.0 };
        let l1: f64 = p.domain.centers().iter().zip(&last.rho).map(|(x, r)| (r - exact(x[0])).abs()).sum::<f64>() / n as f64;
        assert!(l1 < 0.05, "{l1}");
    }

    #[test]
    fn expanding_flow_meets_the_discrete_envelope() {
        let n = 100;
        let d = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).unwrap();
        let lin = VectorSpec::Linear { base: vec![0.0], gradient: vec![vec![1.0]] };
        let p = classify_boundary(&d, &lin, None).unwrap();
        let u: Vec<Vec2> = d.centers().iter().map(|x| [x[0], 0.0]).collect();
        let cfg = TransportStepConfig { epsilon: 0.0, dt: 0.005 };
        let traj = run_transport(vec![1.0; n], &|_| u.clone(), &p, &cfg, 200).unwrap();
        let rep = max_principle_audit(&traj, None);
        assert!(rep.pass, "{rep:?}");
        let fin = traj.states.last().unwrap().rho[n / 2];
        assert!((fin - (1.0f64 - 0.005).powi(200)).abs() < 1e-13);
        assert!((fin - (-1.0f64).exp()).abs() < 2e-3);
        assert!(fin >= (-1.0f64).exp() * (1.0 - 5e-3));
    }

    #[test]
    fn renormalized_residual_vanishes_for_the_identity() {
        let n = 60;
        let p = line(n, [1.0, 0.0], 1.5);
        let rho0: Vec<f64> = p.domain.centers().iter().map(|x| 1.0 + 0.3 * (4.0 * x[0]).cos()).collect();
        let cfg = TransportStepConfig { epsilon: 0.02, dt: 0.005 };
        let traj = run_transport(rho0, &|_| vec![[1.0, 0.0]; n], &p, &cfg, 60).unwrap();
        let phi = TestField::LeftRamp { lower: 0.0, upper: 1.0, time_rate: 1.0 };
        assert!(renorm_residual(&traj, &Renormalization::Identity, &phi) < 1e-12);
        assert!(renorm_residual(&traj, &Renormalization::Constant { value: 3.0 }, &phi) < 1e-12);
    }

    #[test]
    fn step_size_beyond_the_courant_limit_is_rejected() {
        let p = line(10, [1.0, 0.0], 1.0);
        let cfg = TransportStepConfig { epsilon: 0.0, dt: 0.2 };
        assert!(matches!(step_continuity(&[1.0; 10], &[[1.0, 0.0]; 10], &p, &cfg), Err(Error::StepSize(_))));
    }

    #[test]
    fn two_dimensional_diffusion_matches_one_dimensional_for_x_data() {
        let d2 = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], cells: vec![16, 5] }).unwrap();
        let d1 = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![16] }).unwrap();
        let f1: Vec<f64> = d1.centers().iter().map(|x| (3.0 * x[0]).sin()).collect();
        let f2: Vec<f64> = d2.centers().iter().map(|x| (3.0 * x[0]).sin()).collect();
        let a = diffusion_solve(&d1, 0.01, &f1).unwrap();
        let b = diffusion_solve(&d2, 0.01, &f2).unwrap();
        for c in 0..d2.n_cells() {
            assert!((b[c] - a[d2.ij(c)[0]]).abs() < 1e-10);
        }
    }
}

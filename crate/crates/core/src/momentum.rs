//! The regularized momentum step and the coupled simulation driver.
//!
//! The velocity lives in cell centres; the outermost layer of cells is
//! pinned to the lifting `u_∞`, so `v = u − u_∞` vanishes there. One step
//! advances the momentum `ρu` with explicit convection, pressure gradient,
//! compensation and quartic terms, then solves the viscous part implicitly:
//!
//! `(ρ^{n+1} − dt A) u^{n+1} = ρ^n u^n − dt [C + ∇p_δ(ρ^{n+1}) + ε∇ρ·∇u − div Z] + dt ρ^{n+1} f`
//!
//! with `A u = μΔu + (μ + λ)∇div u` in its standard finite-difference form.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm2, sub, SpaceTimeVector, Tensor2, Vec2, ZERO2, ZERO_TENSOR};
use crate::grid::{BoundaryPartition, Domain, ExtensionField};
use crate::linalg::{conjugate_gradient, solve_tridiagonal};
use crate::thermo::PressureLaw;
use crate::tolerances;
use crate::trajectory::{State, StepRecord, Trajectory};
use crate::transport::{self, TransportStepConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityParams {
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
}

impl ViscosityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::config("viscosity.mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("viscosity.lambda", format!("must be non-negative, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// `S = μ(∇u + ∇uᵀ) + λ div u I`.
pub fn stress(g: &Tensor2, visc: &ViscosityParams) -> Tensor2 {
    let div = g[0][0] + g[1][1];
    let mut s = ZERO_TENSOR;
    for j in 0..2 {
        for k in 0..2 {
            s[j][k] = visc.mu * (g[j][k] + g[k][j]);
        }
        s[j][j] += visc.lambda * div;
    }
    s
}

pub fn stress_field(grads: &[Tensor2], visc: &ViscosityParams) -> Vec<Tensor2> {
    grads.iter().map(|g| stress(g, visc)).collect()
}

fn frob2(g: &Tensor2) -> f64 {
    g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]
}

/// Cell gradient of a scalar: central differences, one-sided at the edges.
pub fn scalar_gradient(domain: &Domain, f: &[f64]) -> Vec<Vec2> {
    (0..domain.n_cells())
        .map(|c| {
            let mut g = ZERO2;
            for k in 0..domain.dim {
                let h = domain.spacing[k];
                g[k] = match (domain.neighbor(c, k, false), domain.neighbor(c, k, true)) {
                    (Some(a), Some(b)) => (f[b] - f[a]) / (2.0 * h),
                    (None, Some(b)) => (f[b] - f[c]) / h,
                    (Some(a), None) => (f[c] - f[a]) / h,
                    (None, None) => 0.0,
                };
            }
            g
        })
        .collect()
}

/// Cell gradient `g[j][k] = ∂_k u_j` with the stencil of [`scalar_gradient`].
pub fn vector_gradient(domain: &Domain, u: &[Vec2]) -> Vec<Tensor2> {
    let mut out = vec![ZERO_TENSOR; domain.n_cells()];
    for j in 0..domain.dim {
        let comp: Vec<f64> = u.iter().map(|v| v[j]).collect();
        for (c, g) in scalar_gradient(domain, &comp).into_iter().enumerate() {
            out[c][j] = g;
        }
    }
    out
}

/// `v = u − u_∞`.
pub fn relative_velocity(u: &[Vec2], ext: &ExtensionField) -> Vec<Vec2> {
    u.iter().zip(&ext.u_inf).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect()
}

/// Per-cell quartic flux `Z = ε|∇v|²∇v` and `‖Z‖_{L^{4/3}}`.
pub fn quartic_flux(domain: &Domain, v: &[Vec2], epsilon: f64) -> (Vec<Tensor2>, f64) {
    let grads = vector_gradient(domain, v);
    let z: Vec<Tensor2> = grads
        .iter()
        .map(|g| {
            let s = epsilon * frob2(g);
            [[s * g[0][0], s * g[0][1]], [s * g[1][0], s * g[1][1]]]
        })
        .collect();
    let norm = crate::grid::cell_sum(domain, z.iter().map(|t| frob2(t).sqrt().powf(4.0 / 3.0))).powf(0.75);
    (z, norm)
}

/// Face gradient of `v` on the face `(l, r)` normal to `axis`: the normal
/// column by the two-point difference, the tangential column by averaging
/// the cell gradients of both sides.
fn face_gradient(domain: &Domain, v: &[Vec2], cell_grad: &[Tensor2], l: usize, r: usize, axis: usize) -> Tensor2 {
    let h = domain.spacing[axis];
    let mut g = ZERO_TENSOR;
    for j in 0..domain.dim {
        g[j][axis] = (v[r][j] - v[l][j]) / h;
        if domain.dim == 2 {
            let t = 1 - axis;
            g[j][t] = 0.5 * (cell_grad[l][j][t] + cell_grad[r][j][t]);
        }
    }
    g
}

/// Face-based quartic terms: the discrete `div Z` per cell and the
/// dissipation `Σ_f Z_f[:,k]·Δv_f |f|` it produces when tested with `v`.
pub(crate) fn quartic_divergence(domain: &Domain, v: &[Vec2], epsilon: f64) -> (Vec<Vec2>, f64, f64) {
    let n = domain.n_cells();
    let mut div = vec![ZERO2; n];
    let mut dissipation = 0.0;
    let mut max_g2: f64 = 0.0;
    if epsilon == 0.0 {
        return (div, 0.0, 0.0);
    }
    let cg = vector_gradient(domain, v);
    let vol = domain.cell_volume();
    for axis in 0..domain.dim {
        let m = domain.face_measure(axis);
        let h = domain.spacing[axis];
        for (l, r) in domain.interior_faces(axis) {
            let g = face_gradient(domain, v, &cg, l, r, axis);
            let s = frob2(&g);
            max_g2 = max_g2.max(s);
            for j in 0..domain.dim {
                let q = epsilon * s * g[j][axis] * m;
                div[l][j] += q / vol;
                div[r][j] -= q / vol;
                dissipation += q * g[j][axis] * h;
            }
        }
    }
    (div, dissipation, max_g2)
}

/// `A u` at interior cells (zero on the pinned layer).
pub fn viscous_apply(domain: &Domain, visc: &ViscosityParams, u: &[Vec2]) -> Vec<Vec2> {
    let n = domain.n_cells();
    let mut out = vec![ZERO2; n];
    let (mu, lam) = (visc.mu, visc.lambda);
    let hx = domain.spacing[0];
    if domain.dim == 1 {
        for c in 1..n - 1 {
            out[c][0] = (2.0 * mu + lam) * (u[c + 1][0] - 2.0 * u[c][0] + u[c - 1][0]) / (hx * hx);
        }
        return out;
    }
    let hy = domain.spacing[1];
    let nx = domain.cells[0];
    for c in 0..n {
        if domain.is_boundary_cell(c) {
            continue;
        }
        let (e, w, nn, s) = (c + 1, c - 1, c + nx, c - nx);
        let dxx = |j: usize| (u[e][j] - 2.0 * u[c][j] + u[w][j]) / (hx * hx);
        let dyy = |j: usize| (u[nn][j] - 2.0 * u[c][j] + u[s][j]) / (hy * hy);
        let dxy = |j: usize| (u[nn + 1][j] - u[nn - 1][j] - u[s + 1][j] + u[s - 1][j]) / (4.0 * hx * hy);
        out[c][0] = (2.0 * mu + lam) * dxx(0) + mu * dyy(0) + (mu + lam) * dxy(1);
        out[c][1] = mu * dxx(1) + (2.0 * mu + lam) * dyy(1) + (mu + lam) * dxy(0);
    }
    out
}

/// Discrete `∫S(∇a):∇b` for `b` vanishing on the pinned layer: `−Σ A(a)·b V`.
pub fn viscous_form(domain: &Domain, visc: &ViscosityParams, a: &[Vec2], b: &[Vec2]) -> f64 {
    let aa = viscous_apply(domain, visc, a);
    -crate::grid::cell_sum(domain, (0..domain.n_cells()).map(|c| aa[c][0] * b[c][0] + aa[c][1] * b[c][1]))
}

/// Squared discrete `H¹₀` seminorm from forward differences.
pub fn gradient_norm2(domain: &Domain, w: &[Vec2]) -> f64 {
    let mut s = 0.0;
    for axis in 0..domain.dim {
        let h = domain.spacing[axis];
        for (l, r) in domain.interior_faces(axis) {
            s += norm2([w[r][0] - w[l][0], w[r][1] - w[l][1]]) / (h * h);
        }
    }
    s * domain.cell_volume()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumStepConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub viscosity: ViscosityParams,
    /// Forcing at the new time level, per cell.
    pub forcing: Option<Vec<Vec2>>,
    /// Densities below this value cannot be divided by.
    pub density_floor: f64,
}

/// Upwind momentum convection `Σ_f F_f u_upw` per cell, using the mass
/// fluxes of the transport step.
fn momentum_convection(partition: &BoundaryPartition, rho: &[f64], u: &[Vec2]) -> Vec<Vec2> {
    let d = &partition.domain;
    let fl = transport::convective_fluxes(partition, rho, u);
    let vol = d.cell_volume();
    let mut out = vec![ZERO2; d.n_cells()];
    for axis in 0..d.dim {
        for (q, &(l, r)) in fl.interior[axis].iter().zip(&d.interior_faces(axis)) {
            let up = if *q >= 0.0 { u[l] } else { u[r] };
            for j in 0..2 {
                out[l][j] += q * up[j] / vol;
                out[r][j] -= q * up[j] / vol;
            }
        }
    }
    out
}

/// Compensation term `ε∇ρ·∇u` per cell from face differences: the average
/// over the two faces of each axis of `(Δρ/h)(Δu/h)`.
fn compensation(domain: &Domain, rho: &[f64], u: &[Vec2], epsilon: f64) -> Vec<Vec2> {
    let mut out = vec![ZERO2; domain.n_cells()];
    if epsilon == 0.0 {
        return out;
    }
    for axis in 0..domain.dim {
        let h = domain.spacing[axis];
        for (l, r) in domain.interior_faces(axis) {
            let g = (rho[r] - rho[l]) / h;
            for j in 0..2 {
                let q = 0.5 * epsilon * g * (u[r][j] - u[l][j]) / h;
                out[l][j] += q;
                out[r][j] += q;
            }
        }
    }
    out
}

/// Pressure gradient in the form `ρ∇H′(ρ)`: per face, the upwind density of
/// the transport flux times the jump of `H′` at the new level, shared
/// equally by the two cells. Tested with the face-averaged velocity this is
/// exactly the flux pairing `Σ_f F_f ΔH′_f` of the continuity step.
fn pressure_gradient(domain: &Domain, rho_old: &[f64], u_old: &[Vec2], rho_new: &[f64], law: &PressureLaw) -> Vec<Vec2> {
    let dh: Vec<f64> = rho_new.iter().map(|&r| law.helmholtz3(r).1).collect();
    let mut out = vec![ZERO2; domain.n_cells()];
    for axis in 0..domain.dim {
        let h = domain.spacing[axis];
        for (l, r) in domain.interior_faces(axis) {
            let uf = transport::face_velocity(u_old, l, r, axis);
            let up = if uf > 0.0 {
                rho_old[l]
            } else if uf < 0.0 {
                rho_old[r]
            } else {
                0.5 * (rho_old[l] + rho_old[r])
            };
            let q = 0.5 * up * (dh[r] - dh[l]) / h;
            out[l][axis] += q;
            out[r][axis] += q;
        }
    }
    out
}

/// One momentum step; returns `u^{n+1}` with the pinned layer equal to `u_∞`.
pub fn step_momentum(
    state: &State,
    rho_new: &[f64],
    partition: &BoundaryPartition,
    ext: &ExtensionField,
    law: &PressureLaw,
    cfg: &MomentumStepConfig,
) -> Result<Vec<Vec2>> {
    step_momentum_advected(state, &state.u, rho_new, partition, ext, law, cfg)
}

/// Momentum step whose mass fluxes, upwind values and pressure weights use
/// the velocity `advecting` in place of `state.u`.
///
/// The coupled driver iterates this with the continuity step until
/// `advecting` equals the returned velocity.
pub fn step_momentum_advected(
    state: &State,
    advecting: &[Vec2],
    rho_new: &[f64],
    partition: &BoundaryPartition,
    ext: &ExtensionField,
    law: &PressureLaw,
    cfg: &MomentumStepConfig,
) -> Result<Vec<Vec2>> {
    let d = &partition.domain;
    let n = d.n_cells();
    let dt = cfg.dt;
    if rho_new.len() != n {
        return Err(Error::Shape { expected: n, got: rho_new.len() });
    }
    for c in 0..n {
        if !d.is_boundary_cell(c) && !(rho_new[c] >= cfg.density_floor && rho_new[c] > 0.0) {
            return Err(Error::Coupling { cell: c, rho: rho_new[c], floor: cfg.density_floor });
        }
    }
    let v = relative_velocity(&state.u, ext);
    let (divz, _, max_g2) = quartic_divergence(d, &v, cfg.epsilon);
    if cfg.epsilon > 0.0 && max_g2 > 0.0 {
        let h = d.min_spacing();
        let limit = h * h / (8.0 * cfg.epsilon * max_g2);
        if dt > limit {
            return Err(Error::StepSize(format!("quartic term needs dt ≤ {limit:.3e}, got {dt:.3e}")));
        }
    }
    if advecting.len() != n {
        return Err(Error::Shape { expected: n, got: advecting.len() });
    }
    let conv = momentum_convection(partition, &state.rho, advecting);
    let gp = pressure_gradient(d, &state.rho, advecting, rho_new, law);
    let comp = compensation(d, rho_new, &state.u, cfg.epsilon);

    let mut rhs = vec![ZERO2; n];
    for c in 0..n {
        for j in 0..d.dim {
            let f = cfg.forcing.as_ref().map_or(0.0, |f| f[c][j]);
            rhs[c][j] = state.rho[c] * state.u[c][j]
                - dt * (conv[c][j] + gp[c][j] + comp[c][j] - divz[c][j])
                + dt * rho_new[c] * f;
        }
    }
    let visc = &cfg.viscosity;
    if d.dim == 1 {
        let h2 = d.spacing[0] * d.spacing[0];
        let w = dt * (2.0 * visc.mu + visc.lambda) / h2;
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut b: Vec<f64> = rhs.iter().map(|m| m[0]).collect();
        for c in [0, n - 1] {
            b[c] = ext.u_inf[c][0];
        }
        for c in 1..n - 1 {
            lower[c] = -w;
            upper[c] = -w;
            diag[c] = rho_new[c] + 2.0 * w;
        }
        let x = solve_tridiagonal(&lower, &diag, &upper, &b);
        return Ok(x.into_iter().map(|x| [x, 0.0]).collect());
    }

    let pinned: Vec<bool> = (0..n).map(|c| d.is_boundary_cell(c)).collect();
    let boundary_part: Vec<Vec2> = (0..n).map(|c| if pinned[c] { ext.u_inf[c] } else { ZERO2 }).collect();
    let lifted = viscous_apply(d, visc, &boundary_part);
    let mut b = vec![0.0; 2 * n];
    for c in 0..n {
        if !pinned[c] {
            b[2 * c] = rhs[c][0] + dt * lifted[c][0];
            b[2 * c + 1] = rhs[c][1] + dt * lifted[c][1];
        }
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        let field: Vec<Vec2> =
            (0..n).map(|c| if pinned[c] { ZERO2 } else { [x[2 * c], x[2 * c + 1]] }).collect();
        let a = viscous_apply(d, visc, &field);
        for c in 0..n {
            if pinned[c] {
                y[2 * c] = x[2 * c];
                y[2 * c + 1] = x[2 * c + 1];
            } else {
                y[2 * c] = rho_new[c] * x[2 * c] - dt * a[c][0];
                y[2 * c + 1] = rho_new[c] * x[2 * c + 1] - dt * a[c][1];
            }
        }
    };
    let x0: Vec<f64> = (0..n)
        .flat_map(|c| if pinned[c] { [0.0, 0.0] } else { state.u[c] })
        .collect();
    let x = conjugate_gradient(apply, &b, x0)?;
    Ok((0..n).map(|c| if pinned[c] { ext.u_inf[c] } else { [x[2 * c], x[2 * c + 1]] }).collect())
}

/// Everything a coupled run needs.
#[derive(Clone)]
pub struct SimulationConfig {
    pub partition: BoundaryPartition,
    pub extension: ExtensionField,
    /// The full pressure law, artificial pressure included.
    pub law: PressureLaw,
    pub viscosity: ViscosityParams,
    pub epsilon: f64,
    /// `None` selects `0.5 h / (max|u| + max sound speed)`, halved again
    /// below the explicit limit of the quartic term when `ε > 0`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub cadence: usize,
    pub rho0: Vec<f64>,
    pub u0: Vec<Vec2>,
    pub forcing: Option<Arc<dyn SpaceTimeVector>>,
}

/// The acoustic step `0.5 h / (max|u| + max √p′(ρ))`, capped by the
/// convective limit of the transport step.
pub fn default_dt(partition: &BoundaryPartition, law: &PressureLaw, rho: &[f64], u: &[Vec2]) -> f64 {
    let umax = u.iter().map(|v| norm2(*v).sqrt()).fold(0.0, f64::max);
    let cmax = rho.iter().map(|&r| law.dpressure(r).max(0.0).sqrt()).fold(0.0, f64::max);
    let h = partition.domain.min_spacing();
    let acoustic = 0.5 * h / (umax + cmax).max(1e-12);
    acoustic.min(0.9 * transport::max_stable_dt(partition, u))
}

fn diagnostics(d: &Domain, law: &PressureLaw, rho: &[f64], u: &[Vec2]) -> (f64, f64, f64, f64, f64) {
    let mass = crate::grid::cell_sum(d, rho.iter().copied());
    let kinetic = crate::grid::cell_sum(d, rho.iter().zip(u).map(|(r, v)| 0.5 * r * norm2(*v)));
    let helm = crate::grid::cell_sum(d, rho.iter().map(|&r| law.helmholtz(r)));
    let lo = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mass, kinetic, helm, lo, hi)
}

/// Alternates transport and momentum steps up to `t_final`.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<Trajectory> {
    let d = &cfg.partition.domain;
    let n = d.n_cells();
    cfg.viscosity.validate()?;
    cfg.law.validate()?;
    if cfg.rho0.len() != n {
        return Err(Error::Shape { expected: n, got: cfg.rho0.len() });
    }
    if cfg.u0.len() != n {
        return Err(Error::Shape { expected: n, got: cfg.u0.len() });
    }
    if !(cfg.t_final > 0.0) {
        return Err(Error::config("time.t_final", "must be positive"));
    }
    let mut u0 = cfg.u0.clone();
    for c in 0..n {
        if d.is_boundary_cell(c) {
            u0[c] = cfg.extension.u_inf[c];
        }
    }
    let dt_max = match cfg.dt {
        Some(dt) => dt,
        None => {
            let mut dt = default_dt(&cfg.partition, &cfg.law, &cfg.rho0, &u0);
            let (_, _, g2) = quartic_divergence(d, &relative_velocity(&u0, &cfg.extension), cfg.epsilon);
            if cfg.epsilon > 0.0 && g2 > 0.0 {
                let h = d.min_spacing();
                dt = dt.min(0.5 * h * h / (8.0 * cfg.epsilon * g2));
            }
            dt
        }
    };
    let n_steps = (cfg.t_final / dt_max - 1e-9).ceil().max(1.0) as usize;
    let dt = cfg.t_final / n_steps as f64;

    let rho_lo = {
        let m = cfg.rho0.iter().copied().fold(f64::INFINITY, f64::min);
        cfg.partition.rho_b_range().map_or(m, |(a, _)| m.min(a))
    };
    let u_scale = u0.iter().map(|v| norm2(*v).sqrt()).fold(0.0, f64::max)
        + cfg.rho0.iter().map(|&r| cfg.law.dpressure(r).max(0.0).sqrt()).fold(0.0, f64::max)
        + 1.0;
    let tcfg = TransportStepConfig { epsilon: cfg.epsilon, dt };
    let mut states = vec![State { t: 0.0, rho: cfg.rho0.clone(), u: u0 }];
    let mut steps = Vec::with_capacity(n_steps);
    let mut kint = 0.0;
    let iterative = d.dim == 2 && cfg.epsilon > 0.0;
    for step in 1..=n_steps {
        let prev = &states[step - 1];
        let t = step as f64 * dt;
        let v = relative_velocity(&prev.u, &cfg.extension);
        let (_, z_norm) = quartic_flux(d, &v, cfg.epsilon);
        let forcing: Option<Vec<Vec2>> = cfg.forcing.as_ref().map(|f| (0..n).map(|c| f.value(t, d.center(c))).collect());
        let mut advecting = prev.u.clone();
        let mut iteration = 0;
        let (rho, u, div) = loop {
            iteration += 1;
            let div = transport::cell_divergence(&cfg.partition, &advecting);
            let k = kint + dt * transport::envelope_rate(&div, dt, iterative, n);
            let rho = transport::step_continuity(&prev.rho, &advecting, &cfg.partition, &tcfg).map_err(|e| e.at_step(step))?;
            let mcfg = MomentumStepConfig {
                epsilon: cfg.epsilon,
                dt,
                viscosity: cfg.viscosity,
                forcing: forcing.clone(),
                density_floor: rho_lo * (-k).exp() * (1.0 - 1e-9),
            };
            let u = step_momentum_advected(prev, &advecting, &rho, &cfg.partition, &cfg.extension, &cfg.law, &mcfg)
                .map_err(|e| e.at_step(step))?;
            let change = u.iter().zip(&advecting).map(|(a, b)| norm2(sub(*a, *b)).sqrt()).fold(0.0, f64::max);
            if change <= tolerances::COUPLING_ITERATION * u_scale {
                break (rho, u, div);
            }
            if iteration == tolerances::COUPLING_MAX_ITERATIONS || !change.is_finite() {
                return Err(Error::StepSize(format!(
                    "coupling iteration stalled at change {change:.3e} after {iteration} sweeps; reduce dt below {dt:.3e}"
                ))
                .at_step(step));
            }
            advecting = u;
        };
        let max_div = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        kint += dt * transport::envelope_rate(&div, dt, iterative, n);
        if let Some(c) = (0..n).find(|&c| !(u[c][0].is_finite() && u[c][1].is_finite()) || norm2(u[c]).sqrt() > 1e3 * u_scale) {
            return Err(Error::StepSize(format!("velocity blow-up at cell {c}; reduce dt below {dt:.3e}")).at_step(step));
        }
        let (mass, kinetic, helmholtz, min_rho, max_rho) = diagnostics(d, &cfg.law, &rho, &u);
        steps.push(StepRecord { step, t, dt, max_div, z_norm, mass, kinetic, helmholtz, min_rho, max_rho });
        states.push(State { t, rho, u });
    }
    Ok(Trajectory {
        partition: cfg.partition.clone(),
        extension: Some(cfg.extension.clone()),
        law: Some(cfg.law.clone()),
        viscosity: Some(cfg.viscosity),
        epsilon: cfg.epsilon,
        forcing: cfg.forcing.clone(),
        states,
        steps,
        cadence: cfg.cadence.max(1),
        implicit_transport: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ScalarSpec, VectorSpec};
    use crate::grid::{build_domain, build_extension, classify_boundary, DomainSpec};

    #[test]
    fn stress_closed_forms() {
        let v = ViscosityParams { mu: 1.0, lambda: 0.0 };
        let s = stress(&[[1.0, 0.0], [0.0, 1.0]], &v);
        assert_eq!(s, [[2.0, 0.0], [0.0, 2.0]]);
        assert_eq!(stress(&ZERO_TENSOR, &v), ZERO_TENSOR);
        let s = stress(&[[1.0, 0.0], [0.0, 0.0]], &ViscosityParams { mu: 1.0, lambda: 0.5 });
        assert_eq!(s[0][0], 2.5);
        // pure rotation
        assert_eq!(stress(&[[0.0, 1.0], [-1.0, 0.0]], &v), ZERO_TENSOR);
    }

    #[test]
    fn quartic_flux_closed_form() {
        let d = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![20] }).unwrap();
        let v: Vec<Vec2> = d.centers().iter().map(|x| [2.0 * x[0], 0.0]).collect();
        let (z, norm) = quartic_flux(&d, &v, 0.01);
        assert!(z.iter().all(|t| (t[0][0] - 0.08).abs() < 1e-13));
        assert!((norm - 0.08).abs() < 1e-12);
        let (_, half) = quartic_flux(&d, &v, 0.005);
        assert!((half / norm - 0.5).abs() < 1e-12);
    }

    fn stream_1d(n: usize, c: f64) -> (BoundaryPartition, ExtensionField) {
        let d = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).unwrap();
        let p = classify_boundary(&d, &VectorSpec::Constant { value: vec![c] }, Some(&ScalarSpec::Constant { value: 1.0 }))
            .unwrap();
        let e = build_extension(&p, 0.1).unwrap();
        (p, e)
    }

    #[test]
    fn uniform_stream_is_a_steady_state() {
        let (p, e) = stream_1d(50, 1.0);
        let cfg = SimulationConfig {
            partition: p,
            extension: e,
            law: PressureLaw::power(1.0, 2.0).regularized(0.01, 5.0),
            viscosity: ViscosityParams { mu: 1.0, lambda: 0.0 },
            epsilon: 0.01,
            dt: None,
            t_final: 0.2,
            cadence: 1,
            rho0: vec![1.0; 50],
            u0: vec![[1.0, 0.0]; 50],
            forcing: None,
        };
        let traj = run_simulation(&cfg).unwrap();
        let last = traj.states.last().unwrap();
        assert!(last.rho.iter().all(|r| (r - 1.0).abs() < 1e-10));
        assert!(last.u.iter().all(|u| (u[0] - 1.0).abs() < 1e-10));
    }

    #[test]
    fn still_fluid_loses_energy() {
        let (p, e) = stream_1d(60, 0.0);
        let rho0: Vec<f64> = p.domain.centers().iter().map(|x| 1.0 + 0.1 * (2.0 * std::f64::consts::PI * x[0]).cos()).collect();
        let law = PressureLaw::power(1.0, 2.0);
        let cfg = SimulationConfig {
            partition: p,
            extension: e,
            law: law.clone(),
            viscosity: ViscosityParams { mu: 1.0, lambda: 0.0 },
            epsilon: 0.0,
            dt: None,
            t_final: 0.5,
            cadence: 1,
            rho0,
            u0: vec![[0.0, 0.0]; 60],
            forcing: None,
        };
        let traj = run_simulation(&cfg).unwrap();
        let e0: f64 = traj.states[0].rho.iter().map(|&r| law.helmholtz(r)).sum::<f64>() / 60.0;
        let last = traj.steps.last().unwrap();
        assert!(last.kinetic + last.helmholtz < e0);
        assert!(traj.states.iter().all(|s| s.u[0] == [0.0, 0.0] && s.u[59] == [0.0, 0.0]));
    }

    #[test]
    fn two_dimensional_viscous_operator_is_coercive() {
        let d = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], cells: vec![9, 7] }).unwrap();
        let visc = ViscosityParams { mu: 0.7, lambda: 1.3 };
        let w: Vec<Vec2> = (0..d.n_cells())
            .map(|c| if d.is_boundary_cell(c) { ZERO2 } else { [((c * 7) % 5) as f64 - 2.0, ((c * 3) % 4) as f64 - 1.5] })
            .collect();
        let b = viscous_form(&d, &visc, &w, &w);
        assert!(b >= visc.mu * gradient_norm2(&d, &w) * (1.0 - 1e-12));
        let w2: Vec<Vec2> = w.iter().map(|x| [x[1], -x[0]]).collect();
        let ab = viscous_form(&d, &visc, &w, &w2);
        let ba = viscous_form(&d, &visc, &w2, &w);
        assert!((ab - ba).abs() < 1e-9 * (1.0 + ab.abs()));
    }
}

//! Strong solutions used as test pairs, the quadratic remainder of the
//! relative energy against them, the Gronwall certificate and the
//! stability experiments.
//!
//! A strong pair `(r, U)` comes from a small catalog. Its forcing is
//! manufactured so that the momentum balance holds on samples, and its
//! derivatives are analytic for the uniform pair and sixth-order central
//! differences otherwise.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    dot, grad_form, norm2, ScalarSampler, ScalarSpec, SpaceTimeVector, Tensor2, TestField, Vec2, VectorSampler,
    VectorSpec, ZERO2,
};
use crate::grid::{build_domain, build_extension, classify_boundary, BoundaryPartition, Domain, DomainSpec, FaceClass};
use crate::momentum::{run_simulation, SimulationConfig, ViscosityParams};
use crate::thermo::{self, BruteForceGrid, PressureLaw};
use crate::tolerances;
use crate::trajectory::{State, Trajectory};

fn diff1(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    (-f(-3.0 * h) + 9.0 * f(-2.0 * h) - 45.0 * f(-h) + 45.0 * f(h) - 9.0 * f(2.0 * h) + f(3.0 * h)) / (60.0 * h)
}

fn diff2(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    (2.0 * f(-3.0 * h) - 27.0 * f(-2.0 * h) + 270.0 * f(-h) - 490.0 * f(0.0) + 270.0 * f(h) - 27.0 * f(2.0 * h)
        + 2.0 * f(3.0 * h))
        / (180.0 * h * h)
}

fn shifted(x: Vec2, k: usize, s: f64) -> Vec2 {
    let mut y = x;
    y[k] += s;
    y
}

/// Dormand-Prince 5(4) with step-size control, integrating `y′ = f(t, y)`
/// from `t0` to `t1` (either direction).
pub fn dopri45<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: f64,
) -> Result<[f64; N]> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = span.abs().min(0.1) * dir;
    for _ in 0..100_000 {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let mut k = [[0.0; N]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, row) in k.iter().enumerate().take(s) {
                for i in 0..N {
                    ys[i] += h * A[s][j] * row[i];
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for s in 0..7 {
                let b5 = if s < 6 { A[6][s] } else { 0.0 };
                y5[i] += h * b5 * k[s][i];
                e += h * (b5 - B4[s]) * k[s][i];
            }
            let sc = tol * (1.0 + y[i].abs().max(y5[i].abs()));
            err = err.max(e.abs() / sc);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Err(Error::Solver { iterations: 100_000, residual: f64::NAN })
}

/// Divergence of a space-time velocity by central differences.
fn divergence(u: &dyn SpaceTimeVector, t: f64, x: Vec2, dim: usize, h: f64) -> f64 {
    (0..dim).map(|k| diff1(&|s| u.value(t, shifted(x, k, s))[k], h)).sum()
}

/// Density transported by `U` from `r0`, by back-tracing the characteristic
/// through `x` at time `t` and integrating `div U` along it:
/// `r(t, x) = r0(X(0)) exp(−∫₀ᵗ div U(s, X(s)) ds)`.
///
/// `window` bounds the region where `U` and `r0` are defined; a
/// characteristic ending outside it is an error.
pub fn characteristics_density(
    u: &dyn SpaceTimeVector,
    r0: &dyn ScalarSampler,
    dim: usize,
    t: f64,
    x: Vec2,
    window: Option<(Vec2, Vec2)>,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(r0.sample(x));
    }
    // σ = t − s runs from 0 to t; y = (X, ∫ div U).
    let rhs = |sigma: f64, y: &[f64; 3]| -> [f64; 3] {
        let s = t - sigma;
        let p = [y[0], y[1]];
        let v = u.value(s, p);
        [-v[0], if dim > 1 { -v[1] } else { 0.0 }, divergence(u, s, p, dim, 1e-3)]
    };
    let y = dopri45(&rhs, 0.0, [x[0], x[1], 0.0], t, tolerances::CHARACTERISTICS)?;
    let foot = [y[0], y[1]];
    if let Some((lo, hi)) = window {
        if (0..dim).any(|k| foot[k] < lo[k] || foot[k] > hi[k]) {
            return Err(Error::Domain(format!("characteristic through {x:?} at t = {t} leaves the data window at {foot:?}")));
        }
    }
    Ok(r0.sample(foot) * (-y[2]).exp())
}

/// Catalog of strong pairs `(r, U)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrongCase {
    /// `r ≡ density`, `U ≡ velocity`; needs no forcing.
    UniformSteady { density: f64, velocity: Vec<f64> },
    /// A fluid at rest, `U ≡ 0`, held by the forcing `∇p(r)/r`.
    Hydrostatic { density: ScalarSpec },
    /// `U ≡ velocity`, `r(t, x) = density(x − t·velocity)`.
    AdvectedWave { density: ScalarSpec, velocity: Vec<f64> },
    /// Steady `U`, density transported from `initial_density` along characteristics.
    Characteristics { velocity: VectorSpec, initial_density: ScalarSpec },
}

impl StrongCase {
    pub fn name(&self) -> &'static str {
        match self {
            StrongCase::UniformSteady { .. } => "uniform_steady",
            StrongCase::Hydrostatic { .. } => "hydrostatic",
            StrongCase::AdvectedWave { .. } => "advected_wave",
            StrongCase::Characteristics { .. } => "characteristics",
        }
    }

    /// Whether `r` and `U` are independent of time.
    pub fn is_steady(&self) -> bool {
        match self {
            StrongCase::UniformSteady { .. } | StrongCase::Hydrostatic { .. } => true,
            StrongCase::AdvectedWave { velocity, .. } => velocity.iter().all(|&c| c == 0.0),
            StrongCase::Characteristics { .. } => false,
        }
    }
}

fn pad(v: &[f64]) -> Vec2 {
    [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]
}

/// Value and first derivatives of a strong pair at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StrongJet {
    pub r: f64,
    pub r_t: f64,
    pub grad_r: Vec2,
    pub u: Vec2,
    pub u_t: Vec2,
    pub grad_u: Tensor2,
}

impl StrongJet {
    pub fn div_u(&self) -> f64 {
        self.grad_u[0][0] + self.grad_u[1][1]
    }

    /// `∂t U + U·∇U`.
    pub fn material_u(&self) -> Vec2 {
        let mut m = self.u_t;
        for j in 0..2 {
            for k in 0..2 {
                m[j] += self.u[k] * self.grad_u[j][k];
            }
        }
        m
    }
}

/// The fields of a strong pair with their derivative samplers.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongFields {
    pub case: StrongCase,
    pub dim: usize,
    /// Step of the difference quotients.
    pub fd_step: f64,
}

impl StrongFields {
    pub fn density(&self, t: f64, x: Vec2) -> f64 {
        match &self.case {
            StrongCase::UniformSteady { density, .. } => *density,
            StrongCase::Hydrostatic { density } => density.sample(x),
            StrongCase::AdvectedWave { density, velocity } => {
                let c = pad(velocity);
                density.sample([x[0] - t * c[0], x[1] - t * c[1]])
            }
            StrongCase::Characteristics { velocity, initial_density } => {
                let u = |_: f64, y: Vec2| velocity.sample(y);
                characteristics_density(&u, initial_density, self.dim, t, x, None).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn velocity(&self, _t: f64, x: Vec2) -> Vec2 {
        match &self.case {
            StrongCase::UniformSteady { velocity, .. } | StrongCase::AdvectedWave { velocity, .. } => pad(velocity),
            StrongCase::Hydrostatic { .. } => ZERO2,
            StrongCase::Characteristics { velocity, .. } => {
                let v = velocity.sample(x);
                if self.dim == 1 {
                    [v[0], 0.0]
                } else {
                    v
                }
            }
        }
    }

    pub fn jet(&self, t: f64, x: Vec2) -> StrongJet {
        if let StrongCase::UniformSteady { density, velocity } = &self.case {
            return StrongJet { r: *density, u: pad(velocity), ..Default::default() };
        }
        let h = self.fd_step;
        let mut jet = StrongJet {
            r: self.density(t, x),
            r_t: diff1(&|s| self.density(t + s, x), h),
            u: self.velocity(t, x),
            ..Default::default()
        };
        for j in 0..self.dim {
            jet.u_t[j] = diff1(&|s| self.velocity(t + s, x)[j], h);
        }
        for k in 0..self.dim {
            jet.grad_r[k] = diff1(&|s| self.density(t, shifted(x, k, s)), h);
            for j in 0..self.dim {
                jet.grad_u[j][k] = diff1(&|s| self.velocity(t, shifted(x, k, s))[j], h);
            }
        }
        jet
    }

    /// `div S(∇U) = μΔU + (μ + λ)∇div U`.
    pub fn viscous_divergence(&self, t: f64, x: Vec2, visc: &ViscosityParams) -> Vec2 {
        if let StrongCase::UniformSteady { .. } = self.case {
            return ZERO2;
        }
        let h = self.fd_step;
        let d = self.dim;
        let second = |j: usize, a: usize, b: usize| -> f64 {
            if a == b {
                diff2(&|s| self.velocity(t, shifted(x, a, s))[j], h)
            } else {
                diff1(&|s| diff1(&|q| self.velocity(t, shifted(shifted(x, a, s), b, q))[j], h), h)
            }
        };
        let mut out = ZERO2;
        for j in 0..d {
            let lap: f64 = (0..d).map(|k| second(j, k, k)).sum();
            let grad_div: f64 = (0..d).map(|k| second(k, j, k)).sum();
            out[j] = visc.mu * lap + (visc.mu + visc.lambda) * grad_div;
        }
        out
    }

    /// `∂t r + div(rU)` at one point.
    pub fn continuity_residual(&self, t: f64, x: Vec2) -> f64 {
        let j = self.jet(t, x);
        j.r_t + dot(j.u, j.grad_r) + j.r * j.div_u()
    }

    fn halved(&self) -> StrongFields {
        StrongFields { fd_step: 0.5 * self.fd_step, ..self.clone() }
    }
}

/// `f = [r∂tU + rU·∇U + ∇p(r) − div S(∇U)] / r`, sampled lazily.
#[derive(Clone, Debug)]
pub struct ManufacturedForcing {
    pub fields: StrongFields,
    pub law: PressureLaw,
    pub viscosity: ViscosityParams,
}

impl SpaceTimeVector for ManufacturedForcing {
    fn value(&self, t: f64, x: Vec2) -> Vec2 {
        momentum_balance(&self.fields, &self.law, &self.viscosity, t, x, ZERO2, true)
    }
}

/// `r∂tU + rU·∇U + ∇p(r) − div S(∇U) − r f`, or that expression divided by
/// `r` with `f = 0` when `as_forcing` is set.
fn momentum_balance(
    fields: &StrongFields,
    law: &PressureLaw,
    visc: &ViscosityParams,
    t: f64,
    x: Vec2,
    f: Vec2,
    as_forcing: bool,
) -> Vec2 {
    let j = fields.jet(t, x);
    let m = j.material_u();
    let dp = law.dpressure(j.r);
    let ds = fields.viscous_divergence(t, x, visc);
    let mut out = ZERO2;
    for k in 0..fields.dim {
        let v = j.r * m[k] + dp * j.grad_r[k] - ds[k];
        out[k] = if as_forcing { v / j.r } else { v - j.r * f[k] };
    }
    out
}

/// Builds the forcing of a strong pair after checking `r > 0` on `samples`.
pub fn manufacture_forcing(
    fields: &StrongFields,
    law: &PressureLaw,
    visc: &ViscosityParams,
    samples: &[(f64, Vec2)],
) -> Result<ManufacturedForcing> {
    for &(t, x) in samples {
        let r = fields.density(t, x);
        if !(r > 0.0) {
            return Err(Error::Domain(format!("strong density {r} is not positive at t = {t}, x = {x:?}")));
        }
    }
    Ok(ManufacturedForcing { fields: fields.clone(), law: law.clone(), viscosity: *visc })
}

/// A strong pair with its law, viscosity, bounds and forcing.
#[derive(Clone)]
pub struct StrongSolution {
    pub fields: StrongFields,
    pub law: PressureLaw,
    pub viscosity: ViscosityParams,
    /// `(r̲, r̄)` over the sampled window.
    pub r_bounds: (f64, f64),
    pub forcing: Arc<ManufacturedForcing>,
}

impl std::fmt::Debug for StrongSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StrongSolution")
            .field("case", &self.fields.case)
            .field("law", &self.law)
            .field("r_bounds", &self.r_bounds)
            .finish()
    }
}

/// Cell centres and boundary-face centres of `domain` at `n_times` times in `[0, t_final]`.
fn sample_points(domain: &Domain, t_final: f64, n_times: usize) -> Vec<(f64, Vec2)> {
    let mut xs = domain.centers();
    xs.extend(domain.boundary_faces().iter().map(|f| f.center));
    let mut out = Vec::new();
    for i in 0..n_times {
        let t = if n_times > 1 { t_final * i as f64 / (n_times - 1) as f64 } else { 0.0 };
        out.extend(xs.iter().map(|&x| (t, x)));
    }
    out
}

impl StrongSolution {
    /// Samples `r` over `domain × [0, t_final]` for its bounds and
    /// manufactures the forcing. The difference step is a quarter of the
    /// finest spacing of `domain`.
    pub fn new(case: StrongCase, domain: &Domain, law: PressureLaw, viscosity: ViscosityParams, t_final: f64) -> Result<Self> {
        viscosity.validate()?;
        let fields = StrongFields { case, dim: domain.dim, fd_step: domain.min_spacing() / tolerances::FD_REFINEMENT };
        let n_times = if fields.case.is_steady() { 1 } else { 9 };
        let samples = sample_points(domain, t_final, n_times);
        let forcing = manufacture_forcing(&fields, &law, &viscosity, &samples)?;
        let (lo, hi) = samples
            .iter()
            .map(|&(t, x)| fields.density(t, x))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)));
        Ok(StrongSolution { fields, law, viscosity, r_bounds: (lo, hi), forcing: Arc::new(forcing) })
    }

    pub fn density(&self, t: f64, x: Vec2) -> f64 {
        self.fields.density(t, x)
    }

    pub fn velocity(&self, t: f64, x: Vec2) -> Vec2 {
        self.fields.velocity(t, x)
    }

    pub fn jet(&self, t: f64, x: Vec2) -> StrongJet {
        self.fields.jet(t, x)
    }

    /// Largest continuity and momentum residuals on `domain × times`,
    /// evaluated with difference quotients at half the forcing's step so
    /// that the check does not reuse the forcing's own arithmetic. Each is
    /// relative to `1 +` the largest magnitude of its terms.
    pub fn balance_residuals(&self, domain: &Domain, times: &[f64]) -> (f64, f64) {
        let fine = self.fields.halved();
        let (mut cont, mut mom): (f64, f64) = (0.0, 0.0);
        for &t in times {
            for x in domain.centers() {
                let j = fine.jet(t, x);
                let terms = [j.r_t.abs(), dot(j.u, j.grad_r).abs(), (j.r * j.div_u()).abs()];
                let scale = 1.0 + terms.iter().fold(0.0f64, |a, &b| a.max(b));
                cont = cont.max((j.r_t + dot(j.u, j.grad_r) + j.r * j.div_u()).abs() / scale);
                let f = self.forcing.value(t, x);
                let res = momentum_balance(&fine, &self.law, &self.viscosity, t, x, f, false);
                let scale = 1.0 + j.r * norm2(f).sqrt() + self.law.dpressure(j.r) * norm2(j.grad_r).sqrt();
                mom = mom.max(norm2(res).sqrt() / scale);
            }
        }
        (cont, mom)
    }

    /// Errors unless both balance residuals stay below the strong-residual tolerance.
    pub fn require_eligible(&self, domain: &Domain, times: &[f64]) -> Result<(f64, f64)> {
        let (c, m) = self.balance_residuals(domain, times);
        if c > tolerances::STRONG_RESIDUAL || m > tolerances::STRONG_RESIDUAL {
            return Err(Error::IneligiblePair(format!(
                "strong pair `{}` has continuity residual {c:.3e} and momentum residual {m:.3e}",
                self.fields.case.name()
            )));
        }
        Ok((c, m))
    }

    /// `∫(½ r|U|² + |H(r)| + p(r))` at `t = 0`, the natural size of energies for this pair.
    pub fn energy_scale(&self, domain: &Domain) -> f64 {
        crate::grid::cell_sum(
            domain,
            domain.centers().into_iter().map(|x| {
                let r = self.density(0.0, x);
                0.5 * r * norm2(self.velocity(0.0, x)) + self.law.helmholtz(r).abs() + self.law.pressure(r)
            }),
        )
    }
}

/// Per-cell jets at one time, reused across time levels for steady pairs.
pub(crate) struct JetTable<'a> {
    strong: &'a StrongSolution,
    centers: Vec<Vec2>,
    cache: Option<Vec<StrongJet>>,
}

impl<'a> JetTable<'a> {
    pub(crate) fn new(strong: &'a StrongSolution, domain: &Domain) -> Self {
        JetTable { strong, centers: domain.centers(), cache: None }
    }

    pub(crate) fn at(&mut self, t: f64) -> Vec<StrongJet> {
        if self.strong.fields.case.is_steady() {
            if let Some(c) = &self.cache {
                return c.clone();
            }
        }
        let jets: Vec<StrongJet> = self.centers.iter().map(|&x| self.strong.jet(t, x)).collect();
        if self.strong.fields.case.is_steady() {
            self.cache = Some(jets.clone());
        }
        jets
    }
}

/// `∫(½ρ|u − U|² + E(ρ|r))` at one level, with the strong pair's law.
pub fn relative_energy_functional(state: &State, strong: &StrongSolution, domain: &Domain) -> f64 {
    let centers = domain.centers();
    crate::grid::cell_sum(
        domain,
        (0..domain.n_cells()).map(|c| {
            let r = strong.density(state.t, centers[c]);
            let w = [state.u[c][0] - strong.velocity(state.t, centers[c])[0], state.u[c][1] - strong.velocity(state.t, centers[c])[1]];
            0.5 * state.rho[c] * norm2(w) + strong.law.rel_energy(state.rho[c], r)
        }),
    )
}

/// The remainder of the relative energy inequality against a strong pair,
/// item by item. `total` is evaluated from one combined integrand, so that
/// comparing it with the sum of the items checks the bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RemainderItems {
    /// `∫∫_{Γin}(H(r_B) − H(ρ_B) + (ρ_B − r_B)H′(r_B)) u_B·n`.
    pub boundary: f64,
    /// `∫∫(ρ − r)(U − u)·∂tU`.
    pub time_derivative: f64,
    /// `∫∫(ρ − r) U·∇U·(U − u)`.
    pub convection_difference: f64,
    /// `∫∫ρ(u − U)·∇U·(U − u)`.
    pub quadratic_convection: f64,
    /// `∫∫(p(r) − p′(r)(r − ρ) − p(ρ)) div U`.
    pub pressure_taylor: f64,
    /// `∫∫(1 − ρ/r) p′(r)(u − U)·∇r`.
    pub pressure_gradient: f64,
    pub total: f64,
}

impl RemainderItems {
    /// The four groups: boundary, time derivative and convection, pressure
    /// Taylor, pressure gradient.
    pub fn groups(&self) -> [f64; 4] {
        [
            self.boundary,
            self.time_derivative + self.convection_difference + self.quadratic_convection,
            self.pressure_taylor,
            self.pressure_gradient,
        ]
    }

    pub fn sum_of_groups(&self) -> f64 {
        self.groups().iter().sum()
    }

    fn add_scaled(&mut self, s: f64, o: &RemainderItems) {
        self.boundary += s * o.boundary;
        self.time_derivative += s * o.time_derivative;
        self.convection_difference += s * o.convection_difference;
        self.quadratic_convection += s * o.quadratic_convection;
        self.pressure_taylor += s * o.pressure_taylor;
        self.pressure_gradient += s * o.pressure_gradient;
        self.total += s * o.total;
    }
}

/// Spatial integrals of the remainder integrands at one level.
pub fn remainder_rate(state: &State, strong: &StrongSolution, partition: &BoundaryPartition, jets: &[StrongJet]) -> RemainderItems {
    let d = &partition.domain;
    let law = &strong.law;
    let vol = d.cell_volume();
    let mut it = RemainderItems::default();
    for (f, face) in partition.faces.iter().enumerate() {
        if partition.class[f] != FaceClass::In {
            continue;
        }
        let rb = strong.density(state.t, face.center);
        let pb = partition.rho_b[f].unwrap_or(0.0);
        let (hr, dhr, _) = law.helmholtz3(rb);
        let v = (hr - law.helmholtz(pb) + (pb - rb) * dhr) * partition.u_b_normal[f] * face.measure;
        it.boundary += v;
        it.total += v;
    }
    for c in 0..d.n_cells() {
        let j = &jets[c];
        let rho = state.rho[c];
        let w = [state.u[c][0] - j.u[0], state.u[c][1] - j.u[1]];
        let mw = [-w[0], -w[1]];
        let (pr, dpr) = (law.pressure(j.r), law.dpressure(j.r));
        let td = (rho - j.r) * dot(mw, j.u_t);
        let cd = (rho - j.r) * grad_form(j.u, &j.grad_u, mw);
        let qc = rho * grad_form(w, &j.grad_u, mw);
        let pt = (pr - dpr * (j.r - rho) - law.pressure(rho)) * j.div_u();
        let pg = (1.0 - rho / j.r) * dpr * dot(w, j.grad_r);
        it.time_derivative += td * vol;
        it.convection_difference += cd * vol;
        it.quadratic_convection += qc * vol;
        it.pressure_taylor += pt * vol;
        it.pressure_gradient += pg * vol;
        // Same integrand, bracketed as in the inequality.
        let combined = (rho - j.r) * dot(mw, j.material_u()) - rho * grad_form(w, &j.grad_u, w)
            + (pr - dpr * (j.r - rho) - law.pressure(rho)) * j.div_u()
            + (j.r - rho) / j.r * dpr * dot(w, j.grad_r);
        it.total += combined * vol;
    }
    it
}

/// Remainder accumulated up to `level` with the left-point rule.
pub fn remainder(traj: &Trajectory, strong: &StrongSolution, level: usize) -> RemainderItems {
    let mut jets = JetTable::new(strong, traj.domain());
    let mut acc = RemainderItems::default();
    for n in 0..level {
        let s = &traj.states[n];
        let dt = traj.states[n + 1].t - s.t;
        let rate = remainder_rate(s, strong, &traj.partition, &jets.at(s.t));
        acc.add_scaled(dt, &rate);
    }
    acc
}

/// Constants entering the certificate's rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateConstants {
    /// Lower-bound constant of `E(ρ|r)` on `[r̲, r̄]`.
    pub lower_bound: f64,
    /// Residual-pressure constant `p 1_res ≤ c E`.
    pub residual_pressure: f64,
    /// Field-level constant combining both.
    pub c_rent: f64,
    /// Square of the discrete Poincaré constant, `1/λ₁`.
    pub poincare2: f64,
    /// `max |p″|` on `[r̲/2, 2r̄]`.
    pub m2: f64,
    /// `max p` and `max |p′|` on `[r̲, r̄]`.
    pub p0: f64,
    pub p1: f64,
    /// Multiplier of `‖div U‖∞` in the rate.
    pub c3: f64,
    /// `max |H′|` over the boundary density window.
    pub h_prime_max: f64,
}

/// Rate samples and the resulting bound on the relative energy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallCertificate {
    pub times: Vec<f64>,
    /// `a(t_n)`, used on `[t_n, t_{n+1}]`.
    pub a_samples: Vec<f64>,
    /// `∫₀^{t_i} a`.
    pub rate_integral: Vec<f64>,
    /// Rate at which the boundary mismatch feeds the bound:
    /// `2 max|H′| · max|u_B·n|`.
    pub constant_c: f64,
    pub initial_energy: f64,
    /// `‖ρ_B − r_B‖_{L¹(Γin)}`.
    pub boundary_l1: f64,
    /// `(E(0) + c τ ‖ρ_B − r_B‖) exp(∫₀^τ a)`.
    pub bound_curve: Vec<f64>,
    pub constants: CertificateConstants,
}

/// Smallest eigenvalue of the discrete Dirichlet Laplacian on the cells
/// inside the pinned layer.
fn dirichlet_eigenvalue(domain: &Domain) -> f64 {
    (0..domain.dim)
        .map(|k| {
            let h = domain.spacing[k];
            let m = (domain.cells[k] - 1) as f64;
            4.0 / (h * h) * (std::f64::consts::PI / (2.0 * m)).sin().powi(2)
        })
        .sum()
}

fn max_on(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 2000;
    (0..=n).map(|k| f(a + (b - a) * k as f64 / n as f64)).fold(0.0, f64::max)
}

/// Computes the rate `a(t)` on the cell centres of the partition's domain
/// and the bound `(E(0) + c τ ‖ρ_B − r_B‖_{L¹(Γin)}) exp(∫a)`.
///
/// The rate absorbs the remainder into the dissipation with Young splits
/// of weight `μ/4`:
/// `a = 2‖∇U‖ + (G² + P²) C_P² (1 + r̄²)/(μ c_rent) + (G + P)√(2/c_rent) + c₃‖div U‖`,
/// with `G = ‖∂tU + U·∇U‖`, `P = ‖∇p(r)/r‖` and all norms in `L^∞`.
pub fn gronwall_certificate(
    strong: &StrongSolution,
    partition: &BoundaryPartition,
    times: &[f64],
    initial_energy: f64,
) -> Result<GronwallCertificate> {
    let law = &strong.law;
    let d = &partition.domain;
    let (a, b) = strong.r_bounds;
    let grid = BruteForceGrid::default().refined(0.1);
    let hyp = |e: Error| match e {
        Error::UnsupportedLaw(m) => Error::Hypothesis { message: m, witness: f64::NAN },
        other => other,
    };
    let lower = thermo::lower_bound_constant(law, a, b, &grid).map_err(hyp)?;
    let residual = thermo::residual_pressure_check(law, a, b, &grid).map_err(hyp)?;
    let c_rent = thermo::field_split_constant(&lower, &residual);
    if !(c_rent > 0.0 && c_rent.is_finite()) {
        return Err(Error::Hypothesis { message: "relative energy admits no positive lower bound".into(), witness: a });
    }
    let poincare2 = 1.0 / dirichlet_eigenvalue(d);
    let mu = strong.viscosity.mu;
    let m2 = max_on(|r| law.pressure3(r).2.abs(), 0.5 * a, 2.0 * b);
    let p0 = max_on(|r| law.pressure(r).abs(), a, b);
    let p1 = max_on(|r| law.dpressure(r).abs(), a, b);
    let c3 = (0.5 * m2).max(1.0f64.max(p0 + p1 * b).max(p1)) / c_rent;

    // Boundary mismatch.
    let mut l1 = 0.0;
    let (mut wlo, mut whi) = (0.5 * a, 2.0 * b);
    let mut un_max: f64 = 0.0;
    for f in partition.faces_of(FaceClass::In) {
        let face = &partition.faces[f];
        let pb = partition.rho_b[f].unwrap_or(0.0);
        let rb = strong.density(0.0, face.center);
        l1 += (pb - rb).abs() * face.measure;
        wlo = wlo.min(pb);
        whi = whi.max(pb);
        un_max = un_max.max(partition.u_b_normal[f].abs());
    }
    let h_prime_max = max_on(|r| law.helmholtz3(r).1.abs(), wlo, whi);
    let constant_c = 2.0 * h_prime_max * un_max;

    let mut jets = JetTable::new(strong, d);
    let mut a_samples = Vec::with_capacity(times.len().saturating_sub(1));
    for &t in &times[..times.len().saturating_sub(1)] {
        let (mut gu, mut g, mut p, mut dv): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        for j in jets.at(t) {
            let fro = (j.grad_u[0][0].powi(2) + j.grad_u[0][1].powi(2) + j.grad_u[1][0].powi(2) + j.grad_u[1][1].powi(2)).sqrt();
            gu = gu.max(fro);
            g = g.max(norm2(j.material_u()).sqrt());
            p = p.max(law.dpressure(j.r) * norm2(j.grad_r).sqrt() / j.r);
            dv = dv.max(j.div_u().abs());
        }
        let rate = 2.0 * gu
            + (g * g + p * p) * poincare2 * (1.0 + b * b) / (mu * c_rent)
            + (g + p) * (2.0 / c_rent).sqrt()
            + c3 * dv;
        a_samples.push(rate);
    }
    let mut rate_integral = vec![0.0; times.len()];
    for i in 1..times.len() {
        rate_integral[i] = rate_integral[i - 1] + (times[i] - times[i - 1]) * a_samples[i - 1];
    }
    let bound_curve = times
        .iter()
        .zip(&rate_integral)
        .map(|(&t, &ai)| (initial_energy + constant_c * t * l1) * ai.exp())
        .collect();
    Ok(GronwallCertificate {
        times: times.to_vec(),
        a_samples,
        rate_integral,
        constant_c,
        initial_energy,
        boundary_l1: l1,
        bound_curve,
        constants: CertificateConstants {
            lower_bound: lower.c,
            residual_pressure: residual.record.c,
            c_rent,
            poincare2,
            m2,
            p0,
            p1,
            c3,
            h_prime_max,
        },
    })
}

/// Which datum a stability experiment perturbs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationTarget {
    Density,
    Velocity,
    BoundaryDensity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub target: PerturbationTarget,
    pub eta: f64,
}

/// One stability run: a strong pair, a mesh, and perturbed data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub case: StrongCase,
    pub law: PressureLaw,
    pub viscosity: ViscosityParams,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
    pub t_final: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub epsilon: f64,
    /// Width of the extension collar; defaults to a tenth of the shortest side.
    #[serde(default)]
    pub collar_width: Option<f64>,
    pub perturbation: PerturbationSpec,
}

fn default_cadence() -> usize {
    10
}

/// Outcome of one stability run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub case: String,
    pub eta: f64,
    pub target: PerturbationTarget,
    pub cells: Vec<usize>,
    pub dx: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub e_curve: Vec<f64>,
    pub bound_curve: Vec<f64>,
    pub slack_curve: Vec<f64>,
    /// `max_τ (E(τ) − bound(τ) − slack(τ))`; non-positive on PASS.
    pub max_violation: f64,
    pub pass: bool,
    pub energy_scale: f64,
    pub certificate: GronwallCertificate,
}

/// Discretization envelope `c_slack · scale · ((dx + dt)/ℓ)²` with `ℓ` the
/// domain diameter: the size of `E` expected from truncation alone.
pub fn uniqueness_envelope(scale: f64, dx: f64, dt: f64, diameter: f64) -> f64 {
    tolerances::SLACK * scale * ((dx + dt) / diameter).powi(2)
}

/// Runs the solver from perturbed data with the manufactured forcing and
/// compares `E(τ)` against the certificate at every stored time.
///
/// Slack at `τ` is `c_slack (dx + dt) bound(τ)` plus the truncation
/// envelope, so an unperturbed run is held to the envelope alone.
pub fn stability_experiment(cfg: &StabilityConfig) -> Result<StabilityReport> {
    let domain = build_domain(&DomainSpec { lower: cfg.lower.clone(), upper: cfg.upper.clone(), cells: cfg.cells.clone() })?;
    let strong = StrongSolution::new(cfg.case.clone(), &domain, cfg.law.clone(), cfg.viscosity, cfg.t_final)?;
    let fields = strong.fields.clone();
    let ub = move |x: Vec2| fields.velocity(0.0, x);
    let fields = strong.fields.clone();
    let eta = cfg.perturbation.eta;
    let target = cfg.perturbation.target;
    let rb = move |x: Vec2| fields.density(0.0, x) + if target == PerturbationTarget::BoundaryDensity { eta } else { 0.0 };
    let partition = classify_boundary(&domain, &ub, Some(&rb))?;
    for f in partition.faces_of(FaceClass::In) {
        let x = partition.faces[f].center;
        if (strong.density(cfg.t_final, x) - strong.density(0.0, x)).abs() > 1e-9 {
            return Err(Error::config("ws.case", "stability runs need a time-independent inflow density"));
        }
    }
    let shortest = (0..domain.dim).map(|k| cfg.upper[k] - cfg.lower[k]).fold(f64::INFINITY, f64::min);
    let collar = cfg.collar_width.unwrap_or((0.1 * shortest).max(2.0 * domain.max_spacing()));
    let extension = build_extension(&partition, collar)?;

    let bump = TestField::PolyBump { lower: cfg.lower.clone(), upper: cfg.upper.clone(), power: 2, time_rate: 0.0 };
    let peak = 16f64.powi(domain.dim as i32);
    let centers = domain.centers();
    let rho0: Vec<f64> = centers
        .iter()
        .map(|&x| {
            let r = strong.density(0.0, x);
            if target == PerturbationTarget::Density {
                r + eta * peak * crate::field::SpaceTimeScalar::value(&bump, 0.0, x)
            } else {
                r
            }
        })
        .collect();
    let u0: Vec<Vec2> = centers
        .iter()
        .map(|&x| {
            let mut u = strong.velocity(0.0, x);
            if target == PerturbationTarget::Velocity {
                u[0] += eta * peak * crate::field::SpaceTimeScalar::value(&bump, 0.0, x);
            }
            u
        })
        .collect();
    let sim = SimulationConfig {
        partition: partition.clone(),
        extension,
        law: cfg.law.clone(),
        viscosity: cfg.viscosity,
        epsilon: cfg.epsilon,
        dt: cfg.dt,
        t_final: cfg.t_final,
        cadence: cfg.cadence,
        rho0,
        u0,
        forcing: Some(strong.forcing.clone() as Arc<dyn SpaceTimeVector>),
    };
    let traj = run_simulation(&sim)?;
    let dt = traj.steps.first().map_or(cfg.t_final, |s| s.dt);
    let e0 = relative_energy_functional(&traj.states[0], &strong, &domain);
    let cert = gronwall_certificate(&strong, &partition, &traj.times(), e0)?;
    let scale = strong.energy_scale(&domain);
    let dx = domain.max_spacing();
    let diameter = (0..domain.dim).map(|k| (cfg.upper[k] - cfg.lower[k]).powi(2)).sum::<f64>().sqrt();
    let envelope = uniqueness_envelope(scale, dx, dt, diameter);
    let (mut times, mut e_curve, mut bound_curve, mut slack_curve) = (vec![], vec![], vec![], vec![]);
    let mut max_violation = f64::NEG_INFINITY;
    for i in traj.stored_indices() {
        let e = relative_energy_functional(&traj.states[i], &strong, &domain);
        let bound = cert.bound_curve[i];
        let slack = tolerances::SLACK * (dx + dt) * bound + envelope;
        max_violation = max_violation.max(e - bound - slack);
        times.push(traj.states[i].t);
        e_curve.push(e);
        bound_curve.push(bound);
        slack_curve.push(slack);
    }
    Ok(StabilityReport {
        case: cfg.case.name().to_string(),
        eta,
        target,
        cells: cfg.cells.clone(),
        dx,
        dt,
        times,
        e_curve,
        bound_curve,
        slack_curve,
        max_violation,
        pass: max_violation <= 0.0,
        energy_scale: scale,
        certificate: cert,
    })
}

/// Outcome of the unperturbed runs over a sequence of meshes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub cells: Vec<Vec<usize>>,
    pub mesh_parameter: Vec<f64>,
    pub sup_e: Vec<f64>,
    pub envelope: Vec<f64>,
    /// Least-squares slope of `log sup E` against `log(dx + dt)`; `None`
    /// when every run reproduces the strong pair to rounding.
    pub observed_order: Option<f64>,
    pub pass: bool,
}

/// Weak-strong uniqueness at desk scale: every config must be unperturbed;
/// PASS iff `sup E` stays below the envelope on each mesh and decays at
/// order at least 1.5 (or vanishes to rounding on all of them).
pub fn uniqueness_study(configs: &[StabilityConfig]) -> Result<UniquenessReport> {
    if configs.len() < 2 {
        return Err(Error::config("ws.meshes", "need at least two meshes"));
    }
    let mut out = UniquenessReport {
        cells: vec![],
        mesh_parameter: vec![],
        sup_e: vec![],
        envelope: vec![],
        observed_order: None,
        pass: true,
    };
    let mut scale = 0.0;
    for cfg in configs {
        if cfg.perturbation.eta != 0.0 {
            return Err(Error::config("ws.perturbation.eta", "uniqueness runs must be unperturbed"));
        }
        let rep = stability_experiment(cfg)?;
        let sup = rep.e_curve.iter().copied().fold(0.0, f64::max);
        let diameter = (0..cfg.cells.len()).map(|k| (cfg.upper[k] - cfg.lower[k]).powi(2)).sum::<f64>().sqrt();
        let env = uniqueness_envelope(rep.energy_scale, rep.dx, rep.dt, diameter);
        out.pass &= sup <= env;
        scale = rep.energy_scale;
        out.cells.push(cfg.cells.clone());
        out.mesh_parameter.push(rep.dx + rep.dt);
        out.sup_e.push(sup);
        out.envelope.push(env);
    }
    let rounding = 1e-24 * scale.max(1e-300);
    if out.sup_e.iter().all(|&e| e <= rounding) {
        return Ok(out);
    }
    let order = crate::audit::log_log_slope(&out.mesh_parameter, &out.sup_e);
    out.observed_order = Some(order);
    out.pass &= order >= 1.5;
    Ok(out)
}

/// Measured growth of `E(0)` between the two smallest positive `η` divided by
/// the quadratic prediction `(η₂/η₁)²`; one means exact quadratic scaling.
pub fn initial_energy_scaling(reports: &[StabilityReport]) -> Option<f64> {
    let mut r: Vec<&StabilityReport> = reports.iter().filter(|r| r.eta > 0.0 && !r.e_curve.is_empty()).collect();
    r.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let (a, b) = (r.first()?, r.get(1)?);
    let measured = b.e_curve[0] / a.e_curve[0];
    Some(measured / (b.eta / a.eta).powi(2))
}

/// Largest relative spread of `bound(T) / ‖ρ_B − r_B‖_{L¹}` over the runs
/// with a boundary mismatch; zero means the bound is exactly linear in it.
pub fn boundary_bound_linearity(reports: &[StabilityReport]) -> Option<f64> {
    let k: Vec<f64> = reports
        .iter()
        .filter(|r| r.certificate.boundary_l1 > 0.0)
        .filter_map(|r| Some(r.bound_curve.last()? / r.certificate.boundary_l1))
        .collect();
    if k.len() < 2 {
        return None;
    }
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    Some(k.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Domain {
        build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).unwrap()
    }

    #[test]
    fn dopri_integrates_an_exponential() {
        let y = dopri45(&|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, 1e-12).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-9);
        let back = dopri45(&|_, y: &[f64; 1]| [y[0]], 2.0, y, 0.0, 1e-12).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn characteristics_of_a_constant_stream_translate() {
        let u = |_: f64, _: Vec2| [0.7, 0.0];
        let r0 = |x: Vec2| 1.0 + 0.3 * (3.0 * x[0]).sin();
        for &x in &[0.1, 0.5, 0.9] {
            let r = characteristics_density(&u, &r0, 1, 0.4, [x, 0.0], None).unwrap();
            assert!((r - r0([x - 0.28, 0.0])).abs() < 1e-10);
        }
        assert_eq!(characteristics_density(&u, &r0, 1, 0.0, [0.3, 0.0], None).unwrap(), r0([0.3, 0.0]));
    }

    #[test]
    fn characteristics_of_linear_expansion_decay_exponentially() {
        let u = |_: f64, x: Vec2| [x[0], 0.0];
        let one = |_: Vec2| 1.0;
        for &t in &[0.3, 1.0] {
            let r = characteristics_density(&u, &one, 1, t, [0.6, 0.0], None).unwrap();
            assert!((r - (-t).exp()).abs() < 1e-9, "{r}");
        }
        let err = characteristics_density(&u, &one, 1, 1.0, [0.6, 0.0], Some(([0.5, 0.0], [1.0, 0.0])));
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn uniform_pair_needs_no_forcing() {
        let d = line(20);
        let s = StrongSolution::new(
            StrongCase::UniformSteady { density: 1.3, velocity: vec![0.5] },
            &d,
            PressureLaw::power(1.0, 2.0),
            ViscosityParams { mu: 1.0, lambda: 0.0 },
            1.0,
        )
        .unwrap();
        assert_eq!(s.forcing.value(0.3, [0.4, 0.0]), ZERO2);
    }

    #[test]
    fn advected_wave_forcing_is_the_pressure_gradient() {
        // γ = 2, a = 1: f = p′(r)∇r/r = 2∇r.
        let d = line(40);
        let spec = ScalarSpec::Sinusoidal { base: 1.0, amplitude: 0.2, wavenumber: vec![3.0], phase: 0.0 };
        let s = StrongSolution::new(
            StrongCase::AdvectedWave { density: spec, velocity: vec![0.5] },
            &d,
            PressureLaw::power(1.0, 2.0),
            ViscosityParams { mu: 1.0, lambda: 0.0 },
            1.0,
        )
        .unwrap();
        let (t, x): (f64, f64) = (0.4, 0.3);
        let expected = 2.0 * 0.2 * 3.0 * (3.0f64 * (x - 0.5 * t)).cos();
        assert!((s.forcing.value(t, [x, 0.0])[0] - expected).abs() < 1e-8);
    }

    #[test]
    fn hydrostatic_forcing_closes_the_momentum_balance() {
        let d = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], cells: vec![12, 12] }).unwrap();
        let spec = ScalarSpec::Sinusoidal { base: 1.0, amplitude: 0.2, wavenumber: vec![2.0, 1.0], phase: 0.3 };
        let s = StrongSolution::new(
            StrongCase::Hydrostatic { density: spec },
            &d,
            PressureLaw::power(1.0, 2.0),
            ViscosityParams { mu: 1.0, lambda: 0.5 },
            1.0,
        )
        .unwrap();
        let (c, m) = s.require_eligible(&d, &[0.0]).unwrap();
        assert!(c < 1e-12 && m < 1e-8, "{c} {m}");
    }

    #[test]
    fn characteristics_pair_is_eligible() {
        let d = line(20);
        let s = StrongSolution::new(
            StrongCase::Characteristics {
                velocity: VectorSpec::Sinusoidal { base: vec![1.0], amplitude: vec![0.2], wavenumber: vec![2.0], phase: 0.0 },
                initial_density: ScalarSpec::Sinusoidal { base: 1.0, amplitude: 0.1, wavenumber: vec![3.0], phase: 0.0 },
            },
            &d,
            PressureLaw::power(1.0, 2.0),
            ViscosityParams { mu: 1.0, lambda: 0.0 },
            0.5,
        )
        .unwrap();
        let (c, m) = s.require_eligible(&d, &[0.0, 0.25, 0.5]).unwrap();
        assert!(c < 1e-8 && m < 1e-8, "{c} {m}");
    }

    #[test]
    fn doubling_the_horizon_multiplies_the_bound_by_the_rate() {
        let d = line(30);
        let spec = ScalarSpec::Sinusoidal { base: 1.0, amplitude: 0.2, wavenumber: vec![2.0], phase: 0.0 };
        let s = StrongSolution::new(
            StrongCase::Hydrostatic { density: spec },
            &d,
            PressureLaw::power(1.0, 2.0),
            ViscosityParams { mu: 1.0, lambda: 0.0 },
            2.0,
        )
        .unwrap();
        let zero = |_: Vec2| [0.0, 0.0];
        let p = classify_boundary(&d, &zero, None).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
        let cert = gronwall_certificate(&s, &p, &times, 0.5).unwrap();
        let a0 = cert.a_samples[0];
        assert!(a0 > 0.0);
        assert!(cert.a_samples.iter().all(|&a| a == a0));
        let ratio = cert.bound_curve[20] / cert.bound_curve[10];
        assert!((ratio - a0.exp()).abs() < 1e-12 * ratio);
        assert!(cert.bound_curve.windows(2).all(|w| w[1] >= w[0]));
    }
}

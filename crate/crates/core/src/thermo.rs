//! Barotropic pressure laws, their Helmholtz functions and relative
//! energies, the essential/residual split of densities, and brute-force
//! constants for the lower bounds of the relative energy.
//!
//! The Helmholtz function of a pressure `p` is `H(ρ) = ρ ∫₁^ρ p(z)/z² dz`;
//! it satisfies `ρH′ − H = p` and `H″ = p′/ρ`. The relative energy is the
//! Bregman distance `E(ρ|r) = H(ρ) − H′(r)(ρ − r) − H(r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances;

/// A compactly supported, non-positive C² perturbation
/// `𝔭(ρ) = −amplitude·(1 − s²)³` with `s = (ρ − center)/half_width`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub center: f64,
    pub half_width: f64,
}

impl Perturbation {
    /// Value and first two derivatives.
    fn eval(&self, rho: f64) -> (f64, f64, f64) {
        let w = self.half_width;
        let s = (rho - self.center) / w;
        if s.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - s * s;
        let v = -self.amplitude * q * q * q;
        let d1 = -self.amplitude * 3.0 * q * q * (-2.0 * s) / w;
        let d2 = -self.amplitude * (24.0 * s * s * q - 6.0 * q * q) / (w * w);
        (v, d1, d2)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PressureLaw {
    /// `p = a ρ^γ`.
    Power { a: f64, gamma: f64 },
    /// `p_δ = p + δ ρ^β`.
    Regularized { base: Box<PressureLaw>, delta: f64, beta: f64 },
    /// `p = π + 𝔭`; Helmholtz and relative energy come from `π` only.
    Nonmonotone { monotone: Box<PressureLaw>, perturbation: Perturbation },
}

/// Pressure and Helmholtz data at one density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermoSample {
    pub rho: f64,
    pub p: f64,
    pub dp: f64,
    pub h: f64,
    pub dh: f64,
    pub ddh: f64,
}

impl PressureLaw {
    pub fn power(a: f64, gamma: f64) -> Self {
        PressureLaw::Power { a, gamma }
    }

    /// Adds `δ ρ^β`; returns the law unchanged when `δ = 0`.
    pub fn regularized(self, delta: f64, beta: f64) -> Self {
        if delta == 0.0 {
            self
        } else {
            PressureLaw::Regularized { base: Box::new(self), delta, beta }
        }
    }

    /// Checks the parameter constraints of every layer.
    pub fn validate(&self) -> Result<()> {
        match self {
            PressureLaw::Power { a, gamma } => {
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(Error::config("law.a", format!("coefficient must be positive, got {a}")));
                }
                if !(*gamma > 1.0 && gamma.is_finite()) {
                    return Err(Error::config("law.gamma", format!("exponent must exceed 1, got {gamma}")));
                }
                Ok(())
            }
            PressureLaw::Regularized { base, delta, beta } => {
                base.validate()?;
                if !(*delta > 0.0) {
                    return Err(Error::config("regularization.delta", format!("must be positive, got {delta}")));
                }
                check_beta(*beta, base.gamma())
            }
            PressureLaw::Nonmonotone { monotone, perturbation } => {
                monotone.validate()?;
                if !(perturbation.amplitude >= 0.0 && perturbation.half_width > 0.0) {
                    return Err(Error::config(
                        "law.perturbation",
                        "amplitude must be non-negative and half_width positive",
                    ));
                }
                if perturbation.center - perturbation.half_width < 0.0 {
                    return Err(Error::config("law.perturbation", "support must lie in [0, ∞)"));
                }
                Ok(())
            }
        }
    }

    /// Adiabatic exponent of the innermost power law.
    pub fn gamma(&self) -> f64 {
        match self {
            PressureLaw::Power { gamma, .. } => *gamma,
            PressureLaw::Regularized { base, .. } => base.gamma(),
            PressureLaw::Nonmonotone { monotone, .. } => monotone.gamma(),
        }
    }

    /// `(δ, β)` if the outermost layer is a regularization.
    pub fn regularization(&self) -> Option<(f64, f64)> {
        match self {
            PressureLaw::Regularized { delta, beta, .. } => Some((*delta, *beta)),
            _ => None,
        }
    }

    /// The law with the outermost artificial-pressure layer removed.
    pub fn unregularized(&self) -> &PressureLaw {
        match self {
            PressureLaw::Regularized { base, .. } => base,
            other => other,
        }
    }

    pub fn is_monotone(&self) -> bool {
        match self {
            PressureLaw::Power { .. } => true,
            PressureLaw::Regularized { base, .. } => base.is_monotone(),
            PressureLaw::Nonmonotone { .. } => false,
        }
    }

    /// `(p, p′, p″)` of the full law.
    pub fn pressure3(&self, rho: f64) -> (f64, f64, f64) {
        match self {
            PressureLaw::Power { a, gamma } => {
                if rho == 0.0 {
                    let d2 = if *gamma > 2.0 { 0.0 } else if *gamma == 2.0 { 2.0 * a } else { f64::INFINITY };
                    return (0.0, 0.0, d2);
                }
                let r = rho.powf(gamma - 2.0);
                (a * r * rho * rho, a * gamma * r * rho, a * gamma * (gamma - 1.0) * r)
            }
            PressureLaw::Regularized { base, delta, beta } => {
                let (p, d1, d2) = base.pressure3(rho);
                let r = rho.powf(beta - 2.0);
                (
                    p + delta * r * rho * rho,
                    d1 + delta * beta * r * rho,
                    d2 + delta * beta * (beta - 1.0) * r,
                )
            }
            PressureLaw::Nonmonotone { monotone, perturbation } => {
                let (p, d1, d2) = monotone.pressure3(rho);
                let (q, e1, e2) = perturbation.eval(rho);
                (p + q, d1 + e1, d2 + e2)
            }
        }
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.pressure3(rho).0
    }

    pub fn dpressure(&self, rho: f64) -> f64 {
        self.pressure3(rho).1
    }

    /// `(H, H′, H″)` in closed form.
    pub fn helmholtz3(&self, rho: f64) -> (f64, f64, f64) {
        match self {
            PressureLaw::Power { a, gamma } => {
                let g1 = gamma - 1.0;
                if rho == 0.0 {
                    let dd = if *gamma > 2.0 { 0.0 } else if *gamma == 2.0 { 2.0 * a } else { f64::INFINITY };
                    return (0.0, -a / g1, dd);
                }
                let r = rho.powf(gamma - 2.0);
                let rg = r * rho * rho;
                (a * (rg - rho) / g1, a * (gamma * r * rho - 1.0) / g1, a * gamma * r)
            }
            PressureLaw::Regularized { base, delta, beta } => {
                let (h, d1, d2) = base.helmholtz3(rho);
                let b1 = beta - 1.0;
                let r = rho.powf(beta - 2.0);
                (h + delta * r * rho * rho / b1, d1 + delta * beta * r * rho / b1, d2 + delta * beta * r)
            }
            PressureLaw::Nonmonotone { monotone, .. } => monotone.helmholtz3(rho),
        }
    }

    pub fn helmholtz(&self, rho: f64) -> f64 {
        self.helmholtz3(rho).0
    }

    /// The pressure that generates the Helmholtz function: `π` for
    /// nonmonotone laws, the law itself otherwise. Returns `(p, p′)`.
    pub fn potential_pressure(&self, rho: f64) -> (f64, f64) {
        match self {
            PressureLaw::Nonmonotone { monotone, .. } => {
                let (p, d, _) = monotone.pressure3(rho);
                (p, d)
            }
            other => {
                let (p, d, _) = other.pressure3(rho);
                (p, d)
            }
        }
    }

    /// Relative energy without argument checks.
    pub(crate) fn rel_energy(&self, rho: f64, r: f64) -> f64 {
        match self {
            PressureLaw::Power { a, gamma } => {
                // The linear part of H cancels identically.
                let rg1 = r.powf(gamma - 1.0);
                let rho_g = if rho == 0.0 { 0.0 } else { rho.powf(*gamma) };
                a * (rho_g - rg1 * r - gamma * rg1 * (rho - r)) / (gamma - 1.0)
            }
            PressureLaw::Regularized { base, delta, beta } => {
                let rb1 = r.powf(beta - 1.0);
                let rho_b = if rho == 0.0 { 0.0 } else { rho.powf(*beta) };
                base.rel_energy(rho, r) + delta * (rho_b - rb1 * r - beta * rb1 * (rho - r)) / (beta - 1.0)
            }
            PressureLaw::Nonmonotone { monotone, .. } => monotone.rel_energy(rho, r),
        }
    }
}

fn check_beta(beta: f64, gamma: f64) -> Result<()> {
    let bound = gamma.max(4.5);
    if beta > bound {
        Ok(())
    } else {
        Err(Error::config(
            "regularization.beta",
            format!("β = {beta} violates β > max{{γ, 9/2}} = {bound} (γ = {gamma})"),
        ))
    }
}

/// Validates the artificial-pressure exponent against the base exponent.
pub fn validate_beta(beta: f64, gamma: f64) -> Result<()> {
    check_beta(beta, gamma)
}

pub fn thermo_eval(law: &PressureLaw, rho: f64) -> Result<ThermoSample> {
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("density must be non-negative, got {rho}")));
    }
    let (p, dp, _) = law.pressure3(rho);
    let (h, dh, ddh) = law.helmholtz3(rho);
    Ok(ThermoSample { rho, p, dp, h, dh, ddh })
}

/// `E(ρ|r)`, with `H_δ` for regularized laws and `π` for nonmonotone ones.
pub fn relative_energy(law: &PressureLaw, rho: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("reference density must be positive, got {r}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("density must be non-negative, got {rho}")));
    }
    Ok(law.rel_energy(rho, r))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` with relative tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    rec(f, a, b, fa, fm, fb, whole, tol * scale, 50)
}

/// `ρ ∫₁^ρ p(z)/z² dz` by adaptive Simpson, for any law; the independent
/// route to the closed forms.
pub fn helmholtz_by_quadrature(law: &PressureLaw, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return if rho == 0.0 { Ok(0.0) } else { Err(Error::Domain(format!("negative density {rho}"))) };
    }
    let f = |z: f64| law.potential_pressure(z).0 / (z * z);
    Ok(rho * adaptive_simpson(&f, 1.0, rho, tolerances::QUADRATURE))
}

/// Essential/residual split of a density field relative to `[a/2, 2b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EssResSplit {
    pub a: f64,
    pub b: f64,
    pub mask_ess: Vec<bool>,
    pub mask_res: Vec<bool>,
}

pub fn is_essential(rho: f64, a: f64, b: f64) -> bool {
    rho >= 0.5 * a && rho <= 2.0 * b
}

pub fn ess_res_split(rho: &[f64], a: f64, b: f64) -> Result<EssResSplit> {
    if !(a > 0.0 && b >= a) {
        return Err(Error::Domain(format!("need 0 < a ≤ b, got a = {a}, b = {b}")));
    }
    let mask_ess: Vec<bool> = rho.iter().map(|&v| is_essential(v, a, b)).collect();
    let mask_res = mask_ess.iter().map(|m| !m).collect();
    Ok(EssResSplit { a, b, mask_ess, mask_res })
}

/// Resolution of the brute-force (ρ, r) grids.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct BruteForceGrid {
    pub rho_step: f64,
    pub r_step: f64,
    /// Upper end of the ρ grid; `None` means `4b + 4`.
    pub rho_max: Option<f64>,
}

impl Default for BruteForceGrid {
    fn default() -> Self {
        BruteForceGrid { rho_step: tolerances::BRUTE_FORCE_STEP, r_step: tolerances::BRUTE_FORCE_STEP, rho_max: None }
    }
}

impl BruteForceGrid {
    pub fn refined(&self, factor: f64) -> Self {
        BruteForceGrid { rho_step: self.rho_step / factor, r_step: self.r_step / factor, rho_max: self.rho_max }
    }

    fn rho_points(&self, b: f64) -> Vec<f64> {
        let max = self.rho_max.unwrap_or(4.0 * b + 4.0);
        let n = (max / self.rho_step).round() as usize;
        (0..=n).map(|k| k as f64 * self.rho_step).collect()
    }

    /// Lattice points `k·r_step` inside `[a, b]` plus both ends. Sharing the
    /// lattice with the ρ grid makes `ρ = r` exact where the two coincide.
    fn r_points(&self, a: f64, b: f64) -> Vec<f64> {
        let k0 = (a / self.r_step).ceil() as usize;
        let k1 = (b / self.r_step).floor() as usize;
        let mut pts = vec![a];
        pts.extend((k0..=k1).map(|k| k as f64 * self.r_step).filter(|&r| r > a && r < b));
        if b > a {
            pts.push(b);
        }
        pts
    }
}

/// Which part of the density range enters a lower-bound minimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangePart {
    All,
    Essential,
    Residual,
}

/// A brute-forced constant with its arg-extremum, serialized as the
/// constants record `{law, a, b, grid, c, argmin}`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConstantRecord {
    pub law: PressureLaw,
    pub a: f64,
    pub b: f64,
    pub grid: BruteForceGrid,
    pub c: f64,
    /// `(ρ, r)` where the extremum is attained.
    pub argmin: (f64, f64),
}

fn require_bounds(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b >= a) {
        return Err(Error::Domain(format!("need 0 < a ≤ b, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Minimum over the grid of `E(ρ|r) / (1_res + ρ 1_res + (ρ − r)² 1_ess)`.
pub fn lower_bound_constant(law: &PressureLaw, a: f64, b: f64, grid: &BruteForceGrid) -> Result<ConstantRecord> {
    lower_bound_constant_on(law, a, b, grid, RangePart::All)
}

pub fn lower_bound_constant_on(
    law: &PressureLaw,
    a: f64,
    b: f64,
    grid: &BruteForceGrid,
    part: RangePart,
) -> Result<ConstantRecord> {
    if !law.is_monotone() {
        return Err(Error::UnsupportedLaw("lower-bound constants need a monotone pressure law".into()));
    }
    require_bounds(a, b)?;
    let rhos = grid.rho_points(b);
    let rs = grid.r_points(a, b);
    let mut best = (f64::INFINITY, (f64::NAN, f64::NAN));
    for &rho in &rhos {
        let ess = is_essential(rho, a, b);
        match part {
            RangePart::Essential if !ess => continue,
            RangePart::Residual if ess => continue,
            _ => {}
        }
        for &r in &rs {
            let den = if ess { (rho - r) * (rho - r) } else { 1.0 + rho };
            if den == 0.0 {
                continue;
            }
            let ratio = law.rel_energy(rho, r) / den;
            if ratio < best.0 {
                best = (ratio, (rho, r));
            }
        }
    }
    Ok(ConstantRecord { law: law.clone(), a, b, grid: *grid, c: best.0, argmin: best.1 })
}

/// Residual-pressure constant `c` with `p(ρ) 1_res ≤ c E(ρ|r)` on the grid.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ResidualPressureReport {
    pub record: ConstantRecord,
    /// Largest sampled `p/(ρ + H)` above the threshold in the growth check.
    pub growth_constant: f64,
    pub growth_threshold: f64,
}

pub fn residual_pressure_check(
    law: &PressureLaw,
    a: f64,
    b: f64,
    grid: &BruteForceGrid,
) -> Result<ResidualPressureReport> {
    require_bounds(a, b)?;
    // Growth hypothesis: p ≤ c_lin (ρ + H) for large ρ, sampled on a log grid.
    let threshold = 2.0 * b;
    let mut growth: f64 = 0.0;
    let n = 400;
    for k in 0..=n {
        let rho = threshold * (1e6f64).powf(k as f64 / n as f64);
        let denom = rho + law.helmholtz(rho);
        let p = law.pressure(rho);
        if !(denom > 0.0) || !p.is_finite() {
            return Err(Error::Hypothesis { message: "ρ + H(ρ) must be positive above 2b".into(), witness: rho });
        }
        growth = growth.max(p / denom);
    }
    let rhos = grid.rho_points(b);
    let rs = grid.r_points(a, b);
    let mut best = (0.0f64, (f64::NAN, f64::NAN));
    for &rho in &rhos {
        if is_essential(rho, a, b) {
            continue;
        }
        let p = law.pressure(rho);
        if p <= 0.0 {
            continue;
        }
        for &r in &rs {
            let e = law.rel_energy(rho, r);
            if e <= 0.0 {
                return Err(Error::Hypothesis {
                    message: "relative energy vanishes on the residual range".into(),
                    witness: rho,
                });
            }
            let ratio = p / e;
            if ratio > best.0 {
                best = (ratio, (rho, r));
            }
        }
    }
    Ok(ResidualPressureReport {
        record: ConstantRecord { law: law.clone(), a, b, grid: *grid, c: best.0, argmin: best.1 },
        growth_constant: growth,
        growth_threshold: threshold,
    })
}

/// Constant of the field-level bound
/// `c ∫([1]_res + [ρ]_res + [p(ρ)]_res + [ρ − r]²_ess) ≤ ∫E(ρ|r)`.
pub fn field_split_constant(lower: &ConstantRecord, residual: &ResidualPressureReport) -> f64 {
    let inv = if residual.record.c > 0.0 { 1.0 / residual.record.c } else { f64::INFINITY };
    lower.c.min(inv) / 3.0
}

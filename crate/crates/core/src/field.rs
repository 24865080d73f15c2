//! Point types, sampler traits and the named sampler catalog used for
//! boundary data, initial data and test fields.

use serde::{Deserialize, Serialize};

/// A point or vector. One-dimensional runs use only the first component.
pub type Vec2 = [f64; 2];

/// A velocity gradient, `g[j][k] = ∂_k u_j`.
pub type Tensor2 = [[f64; 2]; 2];

pub const ZERO2: Vec2 = [0.0, 0.0];
pub const ZERO_TENSOR: Tensor2 = [[0.0; 2]; 2];

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm2(a: Vec2) -> f64 {
    dot(a, a)
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

/// Frobenius product `A : B`.
pub fn contract(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// `a · ∇U · b = Σ_jk a_k ∂_k U_j b_j`.
pub fn grad_form(a: Vec2, g: &Tensor2, b: Vec2) -> f64 {
    let mut s = 0.0;
    for j in 0..2 {
        for k in 0..2 {
            s += a[k] * g[j][k] * b[j];
        }
    }
    s
}

/// A scalar field of position.
pub trait ScalarSampler: Send + Sync {
    fn sample(&self, x: Vec2) -> f64;
}

/// A vector field of position.
pub trait VectorSampler: Send + Sync {
    fn sample(&self, x: Vec2) -> Vec2;
}

/// A scalar field of time and position.
pub trait SpaceTimeScalar: Send + Sync {
    fn value(&self, t: f64, x: Vec2) -> f64;
}

/// A vector field of time and position.
pub trait SpaceTimeVector: Send + Sync {
    fn value(&self, t: f64, x: Vec2) -> Vec2;
}

impl<F: Fn(Vec2) -> f64 + Send + Sync> ScalarSampler for F {
    fn sample(&self, x: Vec2) -> f64 {
        self(x)
    }
}

impl<F: Fn(Vec2) -> Vec2 + Send + Sync> VectorSampler for F {
    fn sample(&self, x: Vec2) -> Vec2 {
        self(x)
    }
}

impl<F: Fn(f64, Vec2) -> f64 + Send + Sync> SpaceTimeScalar for F {
    fn value(&self, t: f64, x: Vec2) -> f64 {
        self(t, x)
    }
}

impl<F: Fn(f64, Vec2) -> Vec2 + Send + Sync> SpaceTimeVector for F {
    fn value(&self, t: f64, x: Vec2) -> Vec2 {
        self(t, x)
    }
}

fn pad2(v: &[f64]) -> Vec2 {
    [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]
}

/// One term `amplitude · sin(k·x + phase)` of a Fourier sum.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FourierTerm {
    pub amplitude: f64,
    pub wavenumber: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

/// Named scalar samplers selectable from configuration files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarSpec {
    Constant { value: f64 },
    /// `base + gradient · x`
    Linear { base: f64, gradient: Vec<f64> },
    /// `base + amplitude · sin(k · x + phase)`
    Sinusoidal {
        base: f64,
        amplitude: f64,
        wavenumber: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    /// `base + amplitude · cos²(π|x − center| / (2 width))` inside the width, `base` outside.
    Bump { base: f64, amplitude: f64, center: Vec<f64>, width: f64 },
    FourierSum { base: f64, terms: Vec<FourierTerm> },
}

impl ScalarSampler for ScalarSpec {
    fn sample(&self, x: Vec2) -> f64 {
        match self {
            ScalarSpec::Constant { value } => *value,
            ScalarSpec::Linear { base, gradient } => base + dot(pad2(gradient), x),
            ScalarSpec::Sinusoidal { base, amplitude, wavenumber, phase } => {
                base + amplitude * (dot(pad2(wavenumber), x) + phase).sin()
            }
            ScalarSpec::Bump { base, amplitude, center, width } => {
                let d = norm2(sub(x, pad2(center))).sqrt();
                if d < *width {
                    let c = (std::f64::consts::FRAC_PI_2 * d / width).cos();
                    base + amplitude * c * c
                } else {
                    *base
                }
            }
            ScalarSpec::FourierSum { base, terms } => {
                base + terms
                    .iter()
                    .map(|t| t.amplitude * (dot(pad2(&t.wavenumber), x) + t.phase).sin())
                    .sum::<f64>()
            }
        }
    }
}

/// Named vector samplers selectable from configuration files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorSpec {
    Constant { value: Vec<f64> },
    /// `base + G x`, with `gradient[j][k] = ∂_k u_j`.
    Linear { base: Vec<f64>, gradient: Vec<Vec<f64>> },
    /// `base + amplitude · sin(k · x + phase)` componentwise.
    Sinusoidal {
        base: Vec<f64>,
        amplitude: Vec<f64>,
        wavenumber: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
}

impl VectorSampler for VectorSpec {
    fn sample(&self, x: Vec2) -> Vec2 {
        match self {
            VectorSpec::Constant { value } => pad2(value),
            VectorSpec::Linear { base, gradient } => {
                let b = pad2(base);
                let mut out = b;
                for (j, row) in gradient.iter().enumerate().take(2) {
                    out[j] += dot(pad2(row), x);
                }
                out
            }
            VectorSpec::Sinusoidal { base, amplitude, wavenumber, phase } => {
                let s = (dot(pad2(wavenumber), x) + phase).sin();
                add(pad2(base), scale(s, pad2(amplitude)))
            }
        }
    }
}

/// Smooth space-time test fields for weak-form residuals.
///
/// Every member is a product `θ(t) · ψ(x)`; the catalog is fixed so that
/// residual baselines stay reproducible.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestField {
    /// ψ ≡ value.
    Constant { value: f64 },
    /// ψ = Π_k ((x_k − lo_k)(hi_k − x_k) / L_k²)^power, vanishing on the boundary.
    PolyBump { lower: Vec<f64>, upper: Vec<f64>, power: u32, time_rate: f64 },
    /// ψ = Π_k sin(m_k π (x_k − lo_k)/L_k), vanishing on the boundary.
    Sines { lower: Vec<f64>, upper: Vec<f64>, modes: Vec<u32>, time_rate: f64 },
    /// ψ = ((hi_0 − x_0)/L_0)^2 in 1D/2D: equal to 1 on the left edge, vanishing on the right.
    LeftRamp { lower: f64, upper: f64, time_rate: f64 },
}

impl TestField {
    fn time_factor(rate: f64, t: f64) -> f64 {
        (rate * t).cos()
    }

    /// Spatial dimension used by the product fields.
    fn axes(lower: &[f64]) -> usize {
        lower.len().min(2)
    }
}

impl TestField {
    /// Value, time derivative and spatial gradient in closed form.
    pub fn derivatives(&self, t: f64, x: Vec2) -> (f64, f64, Vec2) {
        let (theta, dtheta) = match self {
            TestField::Constant { .. } => (1.0, 0.0),
            TestField::PolyBump { time_rate: r, .. }
            | TestField::Sines { time_rate: r, .. }
            | TestField::LeftRamp { time_rate: r, .. } => ((r * t).cos(), -r * (r * t).sin()),
        };
        let (psi, grad) = match self {
            TestField::Constant { value } => (*value, ZERO2),
            TestField::PolyBump { lower, upper, power, .. } => {
                let n = Self::axes(lower);
                let p = *power as i32;
                let mut g = [1.0; 2];
                let mut dg = [0.0; 2];
                for k in 0..n {
                    let l2 = (upper[k] - lower[k]).powi(2);
                    g[k] = (x[k] - lower[k]) * (upper[k] - x[k]) / l2;
                    dg[k] = (upper[k] + lower[k] - 2.0 * x[k]) / l2;
                }
                let psi: f64 = (0..n).map(|k| g[k].powi(p)).product();
                let mut grad = ZERO2;
                for k in 0..n {
                    let others: f64 = (0..n).filter(|&j| j != k).map(|j| g[j].powi(p)).product();
                    grad[k] = p as f64 * g[k].powi(p - 1) * dg[k] * others;
                }
                (psi, grad)
            }
            TestField::Sines { lower, upper, modes, .. } => {
                let n = Self::axes(lower);
                let mut s = [1.0; 2];
                let mut ds = [0.0; 2];
                for k in 0..n {
                    let a = modes.get(k).copied().unwrap_or(1) as f64 * std::f64::consts::PI / (upper[k] - lower[k]);
                    s[k] = (a * (x[k] - lower[k])).sin();
                    ds[k] = a * (a * (x[k] - lower[k])).cos();
                }
                let psi: f64 = (0..n).map(|k| s[k]).product();
                let mut grad = ZERO2;
                for k in 0..n {
                    grad[k] = ds[k] * (0..n).filter(|&j| j != k).map(|j| s[j]).product::<f64>();
                }
                (psi, grad)
            }
            TestField::LeftRamp { lower, upper, .. } => {
                let l = upper - lower;
                let s = (upper - x[0]) / l;
                (s * s, [-2.0 * s / l, 0.0])
            }
        };
        (theta * psi, dtheta * psi, scale(theta, grad))
    }
}

impl SpaceTimeScalar for TestField {
    fn value(&self, t: f64, x: Vec2) -> f64 {
        match self {
            TestField::Constant { value } => *value,
            TestField::PolyBump { lower, upper, power, time_rate } => {
                let mut v = 1.0;
                for k in 0..Self::axes(lower) {
                    let l = upper[k] - lower[k];
                    v *= ((x[k] - lower[k]) * (upper[k] - x[k]) / (l * l)).powi(*power as i32);
                }
                v * Self::time_factor(*time_rate, t)
            }
            TestField::Sines { lower, upper, modes, time_rate } => {
                let mut v = 1.0;
                for k in 0..Self::axes(lower) {
                    let l = upper[k] - lower[k];
                    let m = modes.get(k).copied().unwrap_or(1) as f64;
                    v *= (m * std::f64::consts::PI * (x[k] - lower[k]) / l).sin();
                }
                v * Self::time_factor(*time_rate, t)
            }
            TestField::LeftRamp { lower, upper, time_rate } => {
                let s = (upper - x[0]) / (upper - lower);
                s * s * Self::time_factor(*time_rate, t)
            }
        }
    }
}

/// A vector test field `ψ(t, x) · direction`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VectorTestField {
    pub profile: TestField,
    pub direction: Vec<f64>,
}

impl VectorTestField {
    /// Value, time derivative and gradient `g[j][k] = ∂_k φ_j`.
    pub fn derivatives(&self, t: f64, x: Vec2) -> (Vec2, Vec2, Tensor2) {
        let (v, dt, grad) = self.profile.derivatives(t, x);
        let d = pad2(&self.direction);
        let mut g = ZERO_TENSOR;
        for j in 0..2 {
            for k in 0..2 {
                g[j][k] = d[j] * grad[k];
            }
        }
        (scale(v, d), scale(dt, d), g)
    }
}

impl SpaceTimeVector for VectorTestField {
    fn value(&self, t: f64, x: Vec2) -> Vec2 {
        scale(self.profile.value(t, x), pad2(&self.direction))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_samplers_evaluate_closed_forms() {
        let lin = ScalarSpec::Linear { base: 1.0, gradient: vec![-2.0] };
        assert_eq!(lin.sample([0.25, 0.0]), 0.5);
        let bump = ScalarSpec::Bump { base: 1.0, amplitude: 0.5, center: vec![0.5], width: 0.2 };
        assert_eq!(bump.sample([0.5, 0.0]), 1.5);
        assert_eq!(bump.sample([0.9, 0.0]), 1.0);
        let v = VectorSpec::Linear { base: vec![1.0], gradient: vec![vec![-2.0]] };
        assert_eq!(v.sample([1.0, 0.0]), [-1.0, 0.0]);
    }

    #[test]
    fn poly_bump_vanishes_on_the_boundary() {
        let f = TestField::PolyBump { lower: vec![0.0], upper: vec![1.0], power: 1, time_rate: 0.0 };
        assert_eq!(f.value(0.3, [0.0, 0.0]), 0.0);
        assert_eq!(f.value(0.3, [1.0, 0.0]), 0.0);
        assert!((f.value(0.0, [0.5, 0.0]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn closed_form_derivatives_match_difference_quotients() {
        let fields = [
            TestField::PolyBump { lower: vec![0.0, 0.0], upper: vec![1.0, 2.0], power: 2, time_rate: 1.5 },
            TestField::Sines { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], modes: vec![1, 2], time_rate: 0.5 },
            TestField::LeftRamp { lower: 0.0, upper: 1.0, time_rate: 2.0 },
        ];
        let h = 1e-6;
        let (t, x) = (0.3, [0.37, 0.61]);
        for f in &fields {
            let (v, dt, g) = f.derivatives(t, x);
            assert!((v - f.value(t, x)).abs() < 1e-14);
            assert!((dt - (f.value(t + h, x) - f.value(t - h, x)) / (2.0 * h)).abs() < 1e-8);
            for k in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[k] += h;
                xm[k] -= h;
                assert!((g[k] - (f.value(t, xp) - f.value(t, xm)) / (2.0 * h)).abs() < 1e-8, "{f:?} axis {k}");
            }
        }
    }

    #[test]
    fn grad_form_contracts_in_the_documented_order() {
        // g[j][k] = ∂_k U_j; a·∇U·b = Σ a_k g[j][k] b_j
        let g = [[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(grad_form([1.0, 0.0], &g, [0.0, 1.0]), 3.0);
    }
}

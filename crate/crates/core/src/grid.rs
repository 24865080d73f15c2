//! Uniform colocated grids on an interval or rectangle, boundary
//! classification into inflow/outflow/no-flux faces, the lifting `u_∞` of
//! the boundary velocity, collar masks and midpoint quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, ScalarSampler, Tensor2, Vec2, VectorSampler, ZERO2};
use crate::tolerances;

/// Smallest admissible number of cells along an axis.
pub const MIN_CELLS: usize = 4;

/// Axis extents and cell counts as they appear in a configuration file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
}

/// A uniform grid on `(lower, upper)` in one or two dimensions.
///
/// One-dimensional domains carry a dummy second axis with a single cell of
/// unit width so that every routine can loop over `0..dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub cells: [usize; 2],
    pub spacing: [f64; 2],
}

pub fn build_domain(spec: &DomainSpec) -> Result<Domain> {
    let dim = spec.cells.len();
    if !(1..=2).contains(&dim) {
        return Err(Error::config("domain.cells", format!("dimension must be 1 or 2, got {dim}")));
    }
    if spec.lower.len() != dim || spec.upper.len() != dim {
        return Err(Error::config("domain", "lower, upper and cells must have the same length"));
    }
    let mut lower = [0.0, 0.0];
    let mut upper = [1.0, 1.0];
    let mut cells = [1, 1];
    let mut spacing = [1.0, 1.0];
    for k in 0..dim {
        let (lo, hi, n) = (spec.lower[k], spec.upper[k], spec.cells[k]);
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::config(
                format!("domain.axis[{k}]"),
                format!("extent ({lo}, {hi}) is not a well-ordered interval"),
            ));
        }
        if n < MIN_CELLS {
            return Err(Error::config(
                format!("domain.cells[{k}]"),
                format!("cells_per_axis below minimum ({n} < {MIN_CELLS})"),
            ));
        }
        lower[k] = lo;
        upper[k] = hi;
        cells[k] = n;
        spacing[k] = (hi - lo) / n as f64;
    }
    Ok(Domain { dim, lower, upper, cells, spacing })
}

impl Domain {
    pub fn n_cells(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing[k]).product()
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|k| self.upper[k] - self.lower[k]).product()
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing[k]).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing[k]).fold(f64::INFINITY, f64::min)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.cells[0] * j
    }

    pub fn ij(&self, c: usize) -> [usize; 2] {
        [c % self.cells[0], c / self.cells[0]]
    }

    pub fn center(&self, c: usize) -> Vec2 {
        let ij = self.ij(c);
        let mut x = ZERO2;
        for k in 0..self.dim {
            x[k] = self.lower[k] + (ij[k] as f64 + 0.5) * self.spacing[k];
        }
        x
    }

    pub fn centers(&self) -> Vec<Vec2> {
        (0..self.n_cells()).map(|c| self.center(c)).collect()
    }

    /// Neighbour of `c` one cell in direction `±e_axis`, if inside the grid.
    pub fn neighbor(&self, c: usize, axis: usize, forward: bool) -> Option<usize> {
        if axis >= self.dim {
            return None;
        }
        let ij = self.ij(c);
        let stride = if axis == 0 { 1 } else { self.cells[0] };
        if forward {
            (ij[axis] + 1 < self.cells[axis]).then_some(c + stride)
        } else {
            (ij[axis] > 0).then(|| c - stride)
        }
    }

    /// Cells touching the boundary (the layer where the velocity is pinned).
    pub fn is_boundary_cell(&self, c: usize) -> bool {
        let ij = self.ij(c);
        (0..self.dim).any(|k| ij[k] == 0 || ij[k] + 1 == self.cells[k])
    }

    /// Distance from a point to the boundary of the box.
    pub fn distance_to_boundary(&self, x: Vec2) -> f64 {
        (0..self.dim)
            .map(|k| (x[k] - self.lower[k]).min(self.upper[k] - x[k]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Interior faces normal to `axis`, as (left cell, right cell) pairs in a
    /// fixed order.
    pub fn interior_faces(&self, axis: usize) -> Vec<(usize, usize)> {
        let [nx, ny] = self.cells;
        let mut out = Vec::new();
        if axis == 0 {
            for j in 0..ny {
                for i in 0..nx - 1 {
                    out.push((self.index(i, j), self.index(i + 1, j)));
                }
            }
        } else if axis == 1 && self.dim == 2 {
            for j in 0..ny - 1 {
                for i in 0..nx {
                    out.push((self.index(i, j), self.index(i, j + 1)));
                }
            }
        }
        out
    }

    /// Measure of a face normal to `axis`.
    pub fn face_measure(&self, axis: usize) -> f64 {
        if self.dim == 1 {
            1.0
        } else {
            self.spacing[1 - axis]
        }
    }

    /// Boundary faces in a fixed order: axis 0 lower then upper, then axis 1.
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let mut faces = Vec::new();
        for axis in 0..self.dim {
            for side in [Side::Lower, Side::Upper] {
                let other = 1 - axis;
                let count = if self.dim == 2 { self.cells[other] } else { 1 };
                for t in 0..count {
                    let mut ij = [0usize; 2];
                    ij[axis] = match side {
                        Side::Lower => 0,
                        Side::Upper => self.cells[axis] - 1,
                    };
                    ij[other] = t;
                    let cell = self.index(ij[0], ij[1]);
                    let mut center = self.center(cell);
                    center[axis] = match side {
                        Side::Lower => self.lower[axis],
                        Side::Upper => self.upper[axis],
                    };
                    let mut normal = ZERO2;
                    normal[axis] = match side {
                        Side::Lower => -1.0,
                        Side::Upper => 1.0,
                    };
                    faces.push(BoundaryFace {
                        id: faces.len(),
                        axis,
                        side,
                        cell,
                        center,
                        normal,
                        measure: self.face_measure(axis),
                    });
                }
            }
        }
        faces
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFace {
    pub id: usize,
    pub axis: usize,
    pub side: Side,
    /// Adjacent cell.
    pub cell: usize,
    pub center: Vec2,
    pub normal: Vec2,
    pub measure: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceClass {
    In,
    Out,
    Zero,
}

/// Boundary faces with their class, boundary velocity and inflow density.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPartition {
    pub domain: Domain,
    pub faces: Vec<BoundaryFace>,
    pub class: Vec<FaceClass>,
    pub u_b: Vec<Vec2>,
    /// `u_B·n` per face.
    pub u_b_normal: Vec<f64>,
    /// Present exactly on IN faces.
    pub rho_b: Vec<Option<f64>>,
}

impl BoundaryPartition {
    /// Normal velocity used by the discrete fluxes: `u_B·n`, or 0 on ZERO faces.
    pub fn flux_velocity(&self, f: usize) -> f64 {
        match self.class[f] {
            FaceClass::Zero => 0.0,
            _ => self.u_b_normal[f],
        }
    }

    pub fn faces_of(&self, class: FaceClass) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(move |&f| self.class[f] == class)
    }

    /// Total measure of the faces of a class.
    pub fn measure_of(&self, class: FaceClass) -> f64 {
        self.faces_of(class).fold(0.0, |s, f| s + self.faces[f].measure)
    }

    /// Smallest and largest inflow density, if any face is IN.
    pub fn rho_b_range(&self) -> Option<(f64, f64)> {
        let vals: Vec<f64> = self.rho_b.iter().flatten().copied().collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
        }
    }
}

/// Classifies each boundary face by the sign of `u_B·n` at its centre.
///
/// `rho_b` may be `None` only if no face turns out to be IN.
pub fn classify_boundary(
    domain: &Domain,
    u_b: &dyn VectorSampler,
    rho_b: Option<&dyn ScalarSampler>,
) -> Result<BoundaryPartition> {
    let faces = domain.boundary_faces();
    let mut class = Vec::with_capacity(faces.len());
    let mut ub = Vec::with_capacity(faces.len());
    let mut ubn = Vec::with_capacity(faces.len());
    let mut rb = Vec::with_capacity(faces.len());
    for face in &faces {
        let mut u = u_b.sample(face.center);
        if domain.dim == 1 {
            u[1] = 0.0;
        }
        if !(u[0].is_finite() && u[1].is_finite()) {
            return Err(Error::Data(format!("boundary velocity not finite on face {}", face.id)));
        }
        let un = dot(u, face.normal);
        let c = if un < -tolerances::CLASSIFICATION {
            FaceClass::In
        } else if un > tolerances::CLASSIFICATION {
            FaceClass::Out
        } else {
            FaceClass::Zero
        };
        let density = if c == FaceClass::In {
            let sampler = rho_b.ok_or_else(|| {
                Error::Data(format!(
                    "face {} at {:?} is IN but no inflow density was given",
                    face.id, face.center
                ))
            })?;
            let v = sampler.sample(face.center);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Data(format!(
                    "inflow density {v} on face {} at {:?} is not positive",
                    face.id, face.center
                )));
            }
            Some(v)
        } else {
            None
        };
        class.push(c);
        ub.push(u);
        ubn.push(un);
        rb.push(density);
    }
    Ok(BoundaryPartition { domain: domain.clone(), faces, class, u_b: ub, u_b_normal: ubn, rho_b: rb })
}

/// Membership mask over cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMask {
    pub member: Vec<bool>,
}

impl CellMask {
    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn measure(&self, domain: &Domain) -> f64 {
        self.count() as f64 * domain.cell_volume()
    }
}

/// Cells whose centre lies closer than `h` to the boundary.
pub fn inner_collar(domain: &Domain, h: f64) -> Result<CellMask> {
    let half = (0..domain.dim)
        .map(|k| 0.5 * (domain.upper[k] - domain.lower[k]))
        .fold(f64::INFINITY, f64::min);
    if !(h > 0.0 && h < half) {
        return Err(Error::config("collar_width", format!("h = {h} must lie in (0, {half})")));
    }
    let member = (0..domain.n_cells()).map(|c| domain.distance_to_boundary(domain.center(c)) < h).collect();
    Ok(CellMask { member })
}

/// Region of integration for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    Cells(Option<&'a CellMask>),
    Faces(&'a BoundaryPartition, Option<FaceClass>),
}

/// Midpoint rule: sum of values weighted by cell volumes or face measures.
pub fn integrate(domain: &Domain, field: &[f64], region: Region<'_>) -> Result<f64> {
    match region {
        Region::Cells(mask) => {
            if field.len() != domain.n_cells() {
                return Err(Error::Shape { expected: domain.n_cells(), got: field.len() });
            }
            let s: f64 = match mask {
                None => field.iter().sum(),
                Some(m) => {
                    if m.member.len() != field.len() {
                        return Err(Error::Shape { expected: field.len(), got: m.member.len() });
                    }
                    field.iter().zip(&m.member).filter(|(_, &b)| b).map(|(v, _)| v).sum()
                }
            };
            Ok(s * domain.cell_volume())
        }
        Region::Faces(partition, class) => {
            if field.len() != partition.faces.len() {
                return Err(Error::Shape { expected: partition.faces.len(), got: field.len() });
            }
            Ok(partition
                .faces
                .iter()
                .enumerate()
                .filter(|(f, _)| class.map_or(true, |c| partition.class[*f] == c))
                .map(|(f, face)| field[f] * face.measure)
                .sum())
        }
    }
}

/// Sum of a cell field times the cell volume, without shape checks.
pub(crate) fn cell_sum(domain: &Domain, field: impl Iterator<Item = f64>) -> f64 {
    field.sum::<f64>() * domain.cell_volume()
}

/// The lifting `u_∞` of the boundary velocity into the domain.
#[derive(Clone, Debug)]
pub struct ExtensionField {
    pub u_inf: Vec<Vec2>,
    pub collar_width: f64,
    /// Discrete divergence from face-sampled values of the lifting.
    pub div_u_inf: Vec<f64>,
    /// Discrete gradient from the same face samples.
    pub grad_u_inf: Vec<Tensor2>,
}

enum Lifting {
    /// Constant on `[lo, lo + w]` and `[hi − w, hi]`, quintic blend between.
    OneD { lo: f64, hi: f64, plateau: f64, left: f64, right: f64 },
    /// Inverse-square-distance blend of four normal-constant liftings.
    TwoD { domain: Domain, sides: Vec<SideTrace> },
}

/// Boundary velocity samples along one side, ordered by the tangential coordinate.
struct SideTrace {
    axis: usize,
    side: Side,
    tangent: Vec<f64>,
    values: Vec<Vec2>,
}

impl SideTrace {
    fn at(&self, s: f64) -> Vec2 {
        let n = self.tangent.len();
        if s <= self.tangent[0] {
            return self.values[0];
        }
        if s >= self.tangent[n - 1] {
            return self.values[n - 1];
        }
        let k = self.tangent.partition_point(|&t| t <= s) - 1;
        let w = (s - self.tangent[k]) / (self.tangent[k + 1] - self.tangent[k]);
        let (a, b) = (self.values[k], self.values[k + 1]);
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
    }
}

fn smoothstep5(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

impl Lifting {
    fn eval(&self, x: Vec2) -> Vec2 {
        match self {
            Lifting::OneD { lo, hi, plateau, left, right } => {
                if x[0] <= lo + plateau {
                    return [*left, 0.0];
                }
                if x[0] >= hi - plateau {
                    return [*right, 0.0];
                }
                let t = (x[0] - (lo + plateau)) / (hi - lo - 2.0 * plateau);
                [left + (right - left) * smoothstep5(t), 0.0]
            }
            Lifting::TwoD { domain, sides } => {
                let mut num = ZERO2;
                let mut den = 0.0;
                for s in sides {
                    let d = match s.side {
                        Side::Lower => x[s.axis] - domain.lower[s.axis],
                        Side::Upper => domain.upper[s.axis] - x[s.axis],
                    };
                    let value = s.at(x[1 - s.axis]);
                    if d <= 0.0 {
                        return value;
                    }
                    let w = 1.0 / (d * d);
                    num[0] += w * value[0];
                    num[1] += w * value[1];
                    den += w;
                }
                [num[0] / den, num[1] / den]
            }
        }
    }
}

/// Builds `u_∞` and audits its divergence on the collar of width `collar_width`.
pub fn build_extension(partition: &BoundaryPartition, collar_width: f64) -> Result<ExtensionField> {
    let domain = &partition.domain;
    if collar_width < 2.0 * domain.max_spacing() {
        return Err(Error::config(
            "boundary.collar_width",
            format!("{collar_width} is below twice the maximum spacing {}", 2.0 * domain.max_spacing()),
        ));
    }
    let collar = inner_collar(domain, collar_width)?;
    let lifting = if domain.dim == 1 {
        let dx = domain.spacing[0];
        let per_side = ((collar_width / dx) - 0.5).ceil().max(0.0);
        let plateau = collar_width.max(per_side * dx);
        let (lo, hi) = (domain.lower[0], domain.upper[0]);
        if hi - lo - 2.0 * plateau <= 0.0 {
            return Err(Error::config("boundary.collar_width", "collars of both ends overlap"));
        }
        Lifting::OneD { lo, hi, plateau, left: partition.u_b[0][0], right: partition.u_b[1][0] }
    } else {
        let mut sides = Vec::new();
        for axis in 0..2 {
            for side in [Side::Lower, Side::Upper] {
                let idx: Vec<usize> = (0..partition.faces.len())
                    .filter(|&f| partition.faces[f].axis == axis && partition.faces[f].side == side)
                    .collect();
                sides.push(SideTrace {
                    axis,
                    side,
                    tangent: idx.iter().map(|&f| partition.faces[f].center[1 - axis]).collect(),
                    values: idx.iter().map(|&f| partition.u_b[f]).collect(),
                });
            }
        }
        Lifting::TwoD { domain: domain.clone(), sides }
    };

    let n = domain.n_cells();
    let mut u_inf = Vec::with_capacity(n);
    let mut div = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    for c in 0..n {
        let x = domain.center(c);
        u_inf.push(lifting.eval(x));
        let mut g = [[0.0; 2]; 2];
        for k in 0..domain.dim {
            let h = domain.spacing[k];
            let mut xp = x;
            let mut xm = x;
            xp[k] += 0.5 * h;
            xm[k] -= 0.5 * h;
            let (up, um) = (lifting.eval(xp), lifting.eval(xm));
            for j in 0..domain.dim {
                g[j][k] = (up[j] - um[j]) / h;
            }
        }
        div.push((0..domain.dim).map(|k| g[k][k]).sum());
        grad.push(g);
    }

    let mut worst: Option<(usize, f64)> = None;
    for c in 0..n {
        if collar.member[c] && div[c] < -tolerances::COLLAR_DIVERGENCE {
            if worst.map_or(true, |(_, d)| div[c] < d) {
                worst = Some((c, div[c]));
            }
        }
    }
    if let Some((cell, divergence)) = worst {
        return Err(Error::Extension { cell, divergence });
    }
    Ok(ExtensionField { u_inf, collar_width, div_u_inf: div, grad_u_inf: grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorSpec;

    fn unit_1d(n: usize) -> Domain {
        build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![n] }).unwrap()
    }

    #[test]
    fn spacing_follows_from_extent_and_cells() {
        assert!((unit_1d(100).spacing[0] - 0.01).abs() < 1e-15);
        let d = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 2.0], cells: vec![50, 100] })
            .unwrap();
        assert!((d.spacing[0] - 0.02).abs() < 1e-15 && (d.spacing[1] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn too_few_cells_is_rejected() {
        let err = build_domain(&DomainSpec { lower: vec![0.0], upper: vec![1.0], cells: vec![3] }).unwrap_err();
        assert!(err.to_string().contains("cells_per_axis below minimum"));
        let err = build_domain(&DomainSpec { lower: vec![1.0], upper: vec![0.0], cells: vec![10] }).unwrap_err();
        assert!(err.to_string().contains("axis[0]"));
    }

    #[test]
    fn one_dimensional_classification() {
        let d = unit_1d(10);
        let one = |_x: Vec2| 1.0;
        let p = classify_boundary(&d, &|_x: Vec2| [1.0, 0.0], Some(&one)).unwrap();
        assert_eq!(p.class, vec![FaceClass::In, FaceClass::Out]);
        assert_eq!(p.u_b_normal, vec![-1.0, 1.0]);
        assert_eq!(p.rho_b, vec![Some(1.0), None]);

        let p = classify_boundary(&d, &|_x: Vec2| [0.0, 0.0], None).unwrap();
        assert_eq!(p.class, vec![FaceClass::Zero, FaceClass::Zero]);
    }

    #[test]
    fn missing_inflow_density_names_the_face() {
        let err = classify_boundary(&unit_1d(10), &|_x: Vec2| [1.0, 0.0], None).unwrap_err();
        assert!(err.to_string().contains("face 0"), "{err}");
    }

    #[test]
    fn two_dimensional_uniform_stream_classification() {
        let d = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], cells: vec![8, 6] })
            .unwrap();
        let one = |_x: Vec2| 1.0;
        let p = classify_boundary(&d, &|_x: Vec2| [1.0, 0.0], Some(&one)).unwrap();
        for (f, face) in p.faces.iter().enumerate() {
            let expected = match (face.axis, face.side) {
                (0, Side::Lower) => FaceClass::In,
                (0, Side::Upper) => FaceClass::Out,
                _ => FaceClass::Zero,
            };
            assert_eq!(p.class[f], expected, "face {f}");
        }
        assert!((p.measure_of(FaceClass::In) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn collar_counts_cell_centres() {
        let d = unit_1d(100);
        let m = inner_collar(&d, 0.05).unwrap();
        assert_eq!(m.count(), 10);
        assert!((m.measure(&d) - 0.10).abs() < 1e-14);
        assert_eq!(inner_collar(&d, 0.004).unwrap().count(), 0);
        let wide = inner_collar(&d, 0.5 - 0.01).unwrap();
        assert!(wide.measure(&d) < d.measure());
        assert!(inner_collar(&d, 0.5).is_err());
    }

    #[test]
    fn midpoint_rule_is_exact_for_linear_fields() {
        let d = unit_1d(100);
        let x: Vec<f64> = d.centers().iter().map(|c| c[0]).collect();
        assert!((integrate(&d, &x, Region::Cells(None)).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(integrate(&d, &vec![0.0; 100], Region::Cells(None)).unwrap(), 0.0);
        assert!((integrate(&d, &vec![1.0; 100], Region::Cells(None)).unwrap() - 1.0).abs() < 1e-14);
        assert!(integrate(&d, &[1.0; 3], Region::Cells(None)).is_err());
    }

    #[test]
    fn extension_plateaus_in_both_collars() {
        let d = unit_1d(100);
        let ub = VectorSpec::Linear { base: vec![1.0], gradient: vec![vec![-2.0]] };
        let p = classify_boundary(&d, &ub, Some(&|_x: Vec2| 1.0)).unwrap();
        let e = build_extension(&p, 0.1).unwrap();
        for c in 0..100 {
            let x = d.center(c)[0];
            if x <= 0.1 {
                assert_eq!(e.u_inf[c][0], 1.0);
            }
            if x >= 0.9 {
                assert_eq!(e.u_inf[c][0], -1.0);
            }
            if x < 0.1 || x > 0.9 {
                assert!(e.div_u_inf[c].abs() < 1e-12);
            }
            if c > 0 {
                assert!(e.u_inf[c][0] <= e.u_inf[c - 1][0]);
            }
        }
    }

    #[test]
    fn uniform_data_extends_to_a_constant() {
        let d = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], cells: vec![10, 10] })
            .unwrap();
        let p = classify_boundary(&d, &|_x: Vec2| [1.0, 0.0], Some(&|_x: Vec2| 1.0)).unwrap();
        let e = build_extension(&p, 0.2).unwrap();
        for c in 0..d.n_cells() {
            assert!((e.u_inf[c][0] - 1.0).abs() < 1e-14 && e.u_inf[c][1].abs() < 1e-14);
            assert!(e.div_u_inf[c].abs() < 1e-10);
        }
    }

    #[test]
    fn compressive_two_dimensional_data_fails_the_audit() {
        let d = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0], cells: vec![10, 10] })
            .unwrap();
        // Inflow on the left and inflow from the right: the collar must converge.
        let ub = |x: Vec2| [if x[0] < 0.5 { 1.0 } else { -1.0 }, 0.0];
        let p = classify_boundary(&d, &ub, Some(&|_x: Vec2| 1.0)).unwrap();
        assert!(matches!(build_extension(&p, 0.2), Err(Error::Extension { .. })));
    }

    #[test]
    fn narrow_collar_is_rejected() {
        let d = unit_1d(100);
        let p = classify_boundary(&d, &|_x: Vec2| [0.0, 0.0], None).unwrap();
        assert!(build_extension(&p, 0.01).is_err());
    }
}

//! Uniform cell-centered slab grid over the half-space, fields on it and
//! second-order finite-difference operators.
//!
//! Cells are indexed x-fastest: `idx = i + nx * (j + ny * k)`. Cell centers
//! sit at `((i + 1/2) h, (j + 1/2) h, x3_origin + (k + 1/2) h)`; for slab
//! grids `x3_origin = 0`, so the wall plane `x3 = 0` is the lower face of the
//! `k = 0` layer and the far cap is the upper face of the `k = nz - 1` layer.
//! The lateral directions are periodic with periods `L1 = nx h`, `L2 = ny h`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
            Axis::X3 => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        match i {
            0 => Axis::X1,
            1 => Axis::X2,
            2 => Axis::X3,
            _ => panic!("axis index {i} out of range"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    /// Height of the lower face of the `k = 0` layer. Zero for slab grids,
    /// `-L3` for reflected (doubled) grids.
    pub x3_origin: f64,
}

/// Builds a slab grid with the wall at `x3 = 0`.
pub fn make_grid(nx: usize, ny: usize, nz: usize, h: f64) -> Result<Grid> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::invalid(format!("cell counts must be positive, got ({nx}, {ny}, {nz})")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("spacing must be positive, got {h}")));
    }
    Ok(Grid { nx, ny, nz, h, x3_origin: 0.0 })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn wall_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn l1(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn l2(&self) -> f64 {
        self.ny as f64 * self.h
    }

    pub fn l3(&self) -> f64 {
        self.nz as f64 * self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn volume(&self) -> f64 {
        self.l1() * self.l2() * self.l3()
    }

    pub fn count(&self, axis: Axis) -> usize {
        match axis {
            Axis::X1 => self.nx,
            Axis::X2 => self.ny,
            Axis::X3 => self.nz,
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn x3(&self, k: usize) -> f64 {
        self.x3_origin + (k as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.x1(i), self.x2(j), self.x3(k)]
    }

    pub fn center_of(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        self.center(i, j, k)
    }

    /// Lateral displacement `a - b` wrapped into `[-L/2, L/2)`.
    pub fn lateral_delta(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let wrap = |d: f64, l: f64| d - l * (d / l).round();
        [wrap(a[0] - b[0], self.l1()), wrap(a[1] - b[1], self.l2())]
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|n| f(grid.center_of(n))).collect();
        ScalarField { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} cells", values.len(), grid.len())));
        }
        Ok(ScalarField { grid, values })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, j, k)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        ScalarField { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Midpoint-rule integral over the slab.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

impl<'a> Add for &'a ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a> Sub for &'a ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<f64> for &'a ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scaled(rhs)
    }
}

impl<'a> Neg for &'a ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scaled(-1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub comps: [ScalarField; 3],
}

impl VectorField {
    pub fn new(c1: ScalarField, c2: ScalarField, c3: ScalarField) -> Result<Self> {
        c1.grid.ensure_same(&c2.grid)?;
        c1.grid.ensure_same(&c3.grid)?;
        Ok(VectorField { comps: [c1, c2, c3] })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { comps: [ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for n in 0..grid.len() {
            let v = f(grid.center_of(n));
            for c in 0..3 {
                out.comps[c].values[n] = v[c];
            }
        }
        out
    }

    pub fn grid(&self) -> Grid {
        self.comps[0].grid
    }

    #[inline]
    pub fn at(&self, n: usize) -> [f64; 3] {
        [self.comps[0].values[n], self.comps[1].values[n], self.comps[2].values[n]]
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let grid = self.grid();
        let values = (0..grid.len())
            .map(|n| {
                let v = self.at(n);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn map_comps(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField { comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])] }
    }

    pub fn zip_comps(&self, other: &VectorField, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        VectorField {
            comps: [
                f(&self.comps[0], &other.comps[0]),
                f(&self.comps[1], &other.comps[1]),
                f(&self.comps[2], &other.comps[2]),
            ],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_comps(|f| f.scaled(c))
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }
}

impl<'a> Add for &'a VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        self.zip_comps(rhs, |a, b| a + b)
    }
}

impl<'a> Sub for &'a VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        self.zip_comps(rhs, |a, b| a - b)
    }
}

/// A 3x3 matrix-valued field, `comps[j][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub comps: [[ScalarField; 3]; 3],
}

impl MatrixField {
    pub fn grid(&self) -> Grid {
        self.comps[0][0].grid
    }

    /// Pointwise Frobenius magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let grid = self.grid();
        let mut values = vec![0.0; grid.len()];
        for row in &self.comps {
            for c in row {
                for (acc, v) in values.iter_mut().zip(&c.values) {
                    *acc += v * v;
                }
            }
        }
        for v in &mut values {
            *v = v.sqrt();
        }
        ScalarField { grid, values }
    }
}

/// Values on the wall plane `x3 = 0`, one per wall cell, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl BoundaryField {
    pub fn zeros(grid: Grid) -> Self {
        BoundaryField { grid, values: vec![0.0; grid.wall_len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.wall_len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f([grid.x1(i), grid.x2(j)]));
            }
        }
        BoundaryField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.grid.nx * j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Midpoint-rule integral over the wall tile.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.h * self.grid.h
    }

    /// L2 norm over the wall tile.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.h * self.grid.h).sqrt()
    }
}

/// How lateral (x1, x2) derivatives treat the tile edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Lateral {
    /// Periodic wrap: the tile is one period of a laterally periodic field.
    #[default]
    Periodic,
    /// One-sided second-order stencils at the tile edges: the tile is a window
    /// onto a field that is not periodic (e.g. a half-space potential).
    Open,
}

/// The operator requested from [`apply_diff`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOp {
    Partial(Axis),
    Gradient,
    Divergence,
    Laplacian,
}

/// Input/output of [`apply_diff`]; the output rank follows the operator.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldRef<'a> {
    Scalar(&'a ScalarField),
    Vector(&'a VectorField),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Field {
    pub fn into_scalar(self) -> Option<ScalarField> {
        match self {
            Field::Scalar(s) => Some(s),
            Field::Vector(_) => None,
        }
    }

    pub fn into_vector(self) -> Option<VectorField> {
        match self {
            Field::Vector(v) => Some(v),
            Field::Scalar(_) => None,
        }
    }
}

/// Applies a differential operator with periodic lateral wrap.
///
/// Partial derivatives of vector fields act componentwise; the Laplacian of a
/// vector field is the componentwise Laplacian. Gradient of a vector field and
/// divergence of a scalar field are rejected.
pub fn apply_diff(field: FieldRef<'_>, op: DiffOp) -> Result<Field> {
    Stencil::periodic().apply(field, op)
}

/// Second-order finite differences: central in the interior, three-point
/// one-sided at the wall and far cap (and at the tile edges in
/// [`Lateral::Open`] mode). The Laplacian is the composition
/// `divergence(gradient(.))`, so that identity holds exactly.
#[derive(Clone, Copy, Debug, Default)]
pub struct Stencil {
    pub lateral: Lateral,
}

impl Stencil {
    pub fn periodic() -> Self {
        Stencil { lateral: Lateral::Periodic }
    }

    pub fn open() -> Self {
        Stencil { lateral: Lateral::Open }
    }

    pub fn apply(&self, field: FieldRef<'_>, op: DiffOp) -> Result<Field> {
        match (field, op) {
            (FieldRef::Scalar(f), DiffOp::Partial(a)) => Ok(Field::Scalar(self.partial(f, a))),
            (FieldRef::Vector(v), DiffOp::Partial(a)) => Ok(Field::Vector(v.map_comps(|c| self.partial(c, a)))),
            (FieldRef::Scalar(f), DiffOp::Gradient) => Ok(Field::Vector(self.gradient(f))),
            (FieldRef::Vector(v), DiffOp::Divergence) => Ok(Field::Scalar(self.divergence(v))),
            (FieldRef::Scalar(f), DiffOp::Laplacian) => Ok(Field::Scalar(self.laplacian(f))),
            (FieldRef::Vector(v), DiffOp::Laplacian) => Ok(Field::Vector(v.map_comps(|c| self.laplacian(c)))),
            (FieldRef::Vector(_), DiffOp::Gradient) => {
                Err(Error::invalid("gradient of a vector field: use Stencil::jacobian"))
            }
            (FieldRef::Scalar(_), DiffOp::Divergence) => Err(Error::invalid("divergence of a scalar field")),
        }
    }

    pub fn partial(&self, f: &ScalarField, axis: Axis) -> ScalarField {
        let g = f.grid;
        let n = g.count(axis);
        let wrap = axis != Axis::X3 && self.lateral == Lateral::Periodic;
        assert!(n >= 3 || wrap, "need at least 3 cells along {axis:?}");
        let stride = match axis {
            Axis::X1 => 1,
            Axis::X2 => g.nx,
            Axis::X3 => g.nx * g.ny,
        };
        let inv2h = 0.5 / g.h;
        let v = &f.values;
        let mut out = vec![0.0; g.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let (i, j, k) = g.unravel(idx);
            let p = match axis {
                Axis::X1 => i,
                Axis::X2 => j,
                Axis::X3 => k,
            };
            *o = if p > 0 && p + 1 < n {
                (v[idx + stride] - v[idx - stride]) * inv2h
            } else if wrap {
                let up = if p + 1 < n { idx + stride } else { idx + stride - n * stride };
                let dn = if p > 0 { idx - stride } else { idx + (n - 1) * stride };
                (v[up] - v[dn]) * inv2h
            } else if p == 0 {
                (-3.0 * v[idx] + 4.0 * v[idx + stride] - v[idx + 2 * stride]) * inv2h
            } else {
                (3.0 * v[idx] - 4.0 * v[idx - stride] + v[idx - 2 * stride]) * inv2h
            };
        }
        ScalarField { grid: g, values: out }
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        VectorField { comps: [self.partial(f, Axis::X1), self.partial(f, Axis::X2), self.partial(f, Axis::X3)] }
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        let mut out = self.partial(&v.comps[0], Axis::X1);
        for (a, c) in [(Axis::X2, 1), (Axis::X3, 2)] {
            let d = self.partial(&v.comps[c], a);
            for (o, x) in out.values.iter_mut().zip(&d.values) {
                *o += x;
            }
        }
        out
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.divergence(&self.gradient(f))
    }

    /// `J[j][k] = d u^j / d x_k`.
    pub fn jacobian(&self, v: &VectorField) -> MatrixField {
        let row = |c: &ScalarField| [self.partial(c, Axis::X1), self.partial(c, Axis::X2), self.partial(c, Axis::X3)];
        MatrixField { comps: [row(&v.comps[0]), row(&v.comps[1]), row(&v.comps[2])] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Extends a slab field across the wall onto `x3 in [-L3, L3]`:
/// `g~(x1, x2, -x3) = +/- g(x1, x2, x3)`.
pub fn reflect_extend(field: &ScalarField, parity: Parity) -> ScalarField {
    let g = field.grid;
    let ext = Grid { nz: 2 * g.nz, x3_origin: g.x3_origin - g.l3(), ..g };
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let layer = g.nx * g.ny;
    let mut values = vec![0.0; ext.len()];
    for k in 0..g.nz {
        let src = &field.values[k * layer..(k + 1) * layer];
        let up = (g.nz + k) * layer;
        let down = (g.nz - 1 - k) * layer;
        values[up..up + layer].copy_from_slice(src);
        for (d, s) in values[down..down + layer].iter_mut().zip(src) {
            *d = sign * s;
        }
    }
    ScalarField { grid: ext, values }
}

/// Second-order extrapolation of a field to the wall from the first two
/// layers: `trace = (3 f_0 - f_1) / 2`.
pub fn boundary_trace(field: &ScalarField) -> BoundaryField {
    let g = field.grid;
    assert!(g.nz >= 2, "trace needs two layers");
    let layer = g.nx * g.ny;
    let values = (0..layer).map(|n| 1.5 * field.values[n] - 0.5 * field.values[n + layer]).collect();
    BoundaryField { grid: g, values }
}

/// One-sided `d/dx3` at the wall from the first three layers, exact for
/// quadratics.
pub fn wall_normal_derivative(field: &ScalarField) -> BoundaryField {
    let g = field.grid;
    assert!(g.nz >= 3, "wall derivative needs three layers");
    let layer = g.nx * g.ny;
    let v = &field.values;
    let values = (0..layer).map(|n| (-2.0 * v[n] + 3.0 * v[n + layer] - v[n + 2 * layer]) / g.h).collect();
    BoundaryField { grid: g, values }
}

pub fn boundary_trace_vector(v: &VectorField) -> [BoundaryField; 3] {
    [boundary_trace(&v.comps[0]), boundary_trace(&v.comps[1]), boundary_trace(&v.comps[2])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn grid_lengths_follow_counts() {
        let g = make_grid(4, 4, 8, 0.25).unwrap();
        assert_eq!(g.l1(), 1.0);
        assert_eq!(g.l2(), 1.0);
        assert_eq!(g.l3(), 2.0);
        assert_eq!(g.x3(0), 0.125);
        let big = make_grid(64, 64, 64, 1.0 / 64.0).unwrap();
        assert_eq!(big.len(), 262_144);
        assert_eq!(big.volume(), 1.0);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(make_grid(4, 4, 8, 0.0).is_err());
        assert!(make_grid(4, 4, 8, -1.0).is_err());
        assert!(make_grid(0, 4, 8, 0.1).is_err());
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = make_grid(6, 5, 8, 0.3).unwrap();
        let f = ScalarField::constant(g, 2.5);
        let grad = Stencil::periodic().gradient(&f);
        assert_eq!(grad.max_abs(), 0.0);
    }

    #[test]
    fn divergence_of_position_is_three_in_interior() {
        let g = make_grid(8, 8, 8, 0.25).unwrap();
        let u = VectorField::from_fn(g, |x| x);
        let div = Stencil::open().divergence(&u);
        for v in &div.values {
            assert_relative_eq!(*v, 3.0, epsilon = 1e-12);
        }
        // with periodic wrap only the wall-normal part stays exact at the seams
        let div = Stencil::periodic().divergence(&u);
        assert_relative_eq!(div.at(3, 3, 0), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_of_lateral_sine_converges_at_second_order() {
        let err = |n: usize| {
            let g = make_grid(n, 4, 8, 1.0 / n as f64).unwrap();
            let k = 2.0 * PI / g.l1();
            let f = ScalarField::from_fn(g, |x| (k * x[0]).sin());
            let lap = Stencil::periodic().laplacian(&f);
            lap.values.iter().zip(&f.values).map(|(l, v)| (l + k * k * v).abs()).fold(0.0, f64::max)
        };
        let slope = (err(16) / err(32)).log2();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn laplacian_is_divergence_of_gradient() {
        let g = make_grid(6, 7, 9, 0.2).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 3.0).sin() * x[2] * x[2] + x[1]);
        for s in [Stencil::periodic(), Stencil::open()] {
            let a = s.laplacian(&f);
            let b = s.divergence(&s.gradient(&f));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lateral_shift_commutes_with_differencing() {
        let g = make_grid(8, 6, 8, 0.25).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 1.3).cos() + x[1] * x[2]);
        let shift = |f: &ScalarField| {
            let mut out = f.clone();
            for k in 0..g.nz {
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        out.values[g.idx((i + 1) % g.nx, j, k)] = f.at(i, j, k);
                    }
                }
            }
            out
        };
        let s = Stencil::periodic();
        for axis in Axis::ALL {
            assert_eq!(s.partial(&shift(&f), axis), shift(&s.partial(&f, axis)));
        }
    }

    #[test]
    fn apply_diff_dispatches_by_rank() {
        let g = make_grid(4, 4, 8, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x| x[2]);
        let grad = apply_diff(FieldRef::Scalar(&f), DiffOp::Gradient).unwrap().into_vector().unwrap();
        assert_relative_eq!(grad.comps[2].at(1, 1, 3), 1.0, epsilon = 1e-12);
        assert!(apply_diff(FieldRef::Scalar(&f), DiffOp::Divergence).is_err());
    }

    #[test]
    fn reflection_builds_even_and_odd_extensions() {
        let g = make_grid(4, 4, 8, 0.25).unwrap();
        let x3 = ScalarField::from_fn(g, |x| x[2]);
        let even = reflect_extend(&x3, Parity::Even);
        assert_eq!(even.grid.nz, 16);
        assert_eq!(even.grid.x3_origin, -2.0);
        for k in 0..even.grid.nz {
            assert_relative_eq!(even.at(1, 2, k), even.grid.x3(k).abs(), epsilon = 1e-15);
        }
        let one = ScalarField::constant(g, 1.0);
        let odd = reflect_extend(&one, Parity::Odd);
        for k in 0..odd.grid.nz {
            assert_eq!(odd.at(0, 0, k), odd.grid.x3(k).signum());
        }
        let l2 = |f: &ScalarField| (f.values.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let f = ScalarField::from_fn(g, |x| x[0] - x[2] * x[1]);
        assert_relative_eq!(l2(&reflect_extend(&f, Parity::Even)), 2f64.sqrt() * l2(&f), max_relative = 1e-14);
    }

    #[test]
    fn even_extension_has_no_odd_modes_in_x3() {
        let g = make_grid(4, 4, 8, 0.25).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[2] * 2.1).exp() * (1.0 + x[0]));
        let ext = reflect_extend(&f, Parity::Even);
        let l = ext.grid.l3();
        for m in 1..ext.grid.nz {
            let mut s = 0.0;
            for k in 0..ext.grid.nz {
                s += ext.at(1, 1, k) * (PI * m as f64 * ext.grid.x3(k) / (0.5 * l)).sin();
            }
            assert!(s.abs() < 1e-10, "mode {m}: {s}");
        }
    }

    #[test]
    fn traces_of_simple_profiles() {
        let g = make_grid(4, 4, 8, 0.25).unwrap();
        let c = boundary_trace(&ScalarField::constant(g, 3.0));
        assert!(c.values.iter().all(|v| (v - 3.0).abs() < 1e-15));
        let lin = boundary_trace(&ScalarField::from_fn(g, |x| x[2]));
        assert!(lin.max_abs() < 1e-15);
        let err = |n: usize| {
            let g = make_grid(4, 4, n, 1.0 / n as f64).unwrap();
            boundary_trace(&ScalarField::from_fn(g, |x| x[2] * x[2])).max_abs()
        };
        let slope = (err(16) / err(32)).log2();
        assert!((slope - 2.0).abs() < 1e-6, "slope {slope}");
    }
}

//! Half-space potential theory: the fundamental solution `1/(4 pi |x|)`,
//! image Green functions, volume and boundary-layer potentials, and the
//! Agmon-Douglis-Nirenberg boundary kernel.
//!
//! Volume potentials are direct sums over the reflected lattice. The source
//! field is extended across the wall with the parity that the image term
//! dictates, and the kernel `K_j(r) = d Gamma / d r_j = -r_j / (4 pi |r|^3)` is
//! tabulated once per lattice offset.
//!
//! Volume potentials treat the tile as compact support: the kernel is the
//! free-space half-space kernel, not a periodized one. Their outputs are
//! therefore differentiated with [`Lateral::Open`] stencils. Wall integrals
//! follow the periodic tile and sum the eight nearest lateral images.

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{reflect_extend, Axis, BoundaryField, Grid, Lateral, Parity, ScalarField, Stencil, VectorField};
use crate::norms;

const FOUR_PI: f64 = 4.0 * PI;

/// `Gamma(x) = 1 / (4 pi |x|)`, so that `-Laplace Gamma = delta`.
pub fn fundamental_solution(x: [f64; 3]) -> Result<f64> {
    let r = norm3(x);
    if r == 0.0 {
        return Err(Error::SingularPoint("fundamental solution at the origin".into()));
    }
    Ok(1.0 / (FOUR_PI * r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GreensKernel {
    pub bc: BoundaryCondition,
}

impl GreensKernel {
    pub fn dirichlet() -> Self {
        GreensKernel { bc: BoundaryCondition::Dirichlet }
    }

    pub fn neumann() -> Self {
        GreensKernel { bc: BoundaryCondition::Neumann }
    }

    fn image_sign(&self) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet => -1.0,
            BoundaryCondition::Neumann => 1.0,
        }
    }

    /// `G(x, y) = Gamma(x - y) -/+ Gamma(x - y*)`.
    pub fn eval(&self, x: [f64; 3], y: [f64; 3]) -> Result<f64> {
        check_pair(x, y)?;
        let d = sub3(x, y);
        let di = [d[0], d[1], x[2] + y[2]];
        Ok((1.0 / norm3(d) + self.image_sign() / norm3(di)) / FOUR_PI)
    }

    /// Gradient of `G(., y)` at `x`.
    pub fn grad_x(&self, x: [f64; 3], y: [f64; 3]) -> Result<[f64; 3]> {
        check_pair(x, y)?;
        let d = sub3(x, y);
        let di = [d[0], d[1], x[2] + y[2]];
        let (r, ri) = (norm3(d), norm3(di));
        let (c, ci) = (-1.0 / (FOUR_PI * r * r * r), -self.image_sign() / (FOUR_PI * ri * ri * ri));
        Ok([c * d[0] + ci * di[0], c * d[1] + ci * di[1], c * d[2] + ci * di[2]])
    }
}

pub fn greens_kernel_eval(kernel: GreensKernel, x: [f64; 3], y: [f64; 3]) -> Result<f64> {
    kernel.eval(x, y)
}

fn check_pair(x: [f64; 3], y: [f64; 3]) -> Result<()> {
    if x[2] < 0.0 || y[2] < 0.0 {
        return Err(Error::invalid("points must lie in the closed half-space"));
    }
    if x == y {
        return Err(Error::SingularPoint(format!("coincident points {x:?}")));
    }
    Ok(())
}

/// How the cell integral of a singular kernel is evaluated for source cells
/// whose center lies closer than `radius` cells to the target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NearField {
    /// Average over `n^3` sub-cell midpoints.
    Subsample(usize),
    /// Closed-form cell integral via the divergence theorem.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub near: NearField,
    /// Near-field radius in cell widths.
    pub radius: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { near: NearField::Subsample(4), radius: 2.0 }
    }
}

/// `int_{[a1,b1] x [a2,b2]} dx dy / sqrt(x^2 + y^2 + z^2)`.
pub fn rect_inverse_distance(a1: f64, b1: f64, a2: f64, b2: f64, z: f64) -> f64 {
    fn phi(x: f64, y: f64, z: f64) -> f64 {
        let r = (x * x + y * y + z * z).sqrt();
        let mut s = 0.0;
        if x != 0.0 {
            s += x * (y / (x * x + z * z).sqrt()).asinh();
        }
        if y != 0.0 {
            s += y * (x / (y * y + z * z).sqrt()).asinh();
        }
        if z != 0.0 {
            s -= z * (x * y / (z * r)).atan();
        }
        s
    }
    phi(b1, b2, z) - phi(a1, b2, z) - phi(b1, a2, z) + phi(a1, a2, z)
}

/// `int_{[a1,b1] x [a2,b2]} z dx dy / (x^2 + y^2 + z^2)^{3/2}`, the solid angle
/// subtended by the rectangle from height `z`.
pub fn rect_solid_angle(a1: f64, b1: f64, a2: f64, b2: f64, z: f64) -> f64 {
    let f = |x: f64, y: f64| (x * y / (z * (x * x + y * y + z * z).sqrt())).atan();
    f(b1, b2) - f(a1, b2) - f(b1, a2) + f(a1, a2)
}

fn kernel_component(r: [f64; 3], j: usize) -> f64 {
    let n = norm3(r);
    -r[j] / (FOUR_PI * n * n * n)
}

/// `int_cell K_j(d h - y) dy` for the source cell centered at the origin and
/// offset `d >= 0` componentwise.
fn cell_integral(d: [usize; 3], j: usize, h: f64, quad: Quadrature) -> f64 {
    if d == [0, 0, 0] {
        return 0.0;
    }
    let c = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
    let dist2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64;
    if dist2 >= quad.radius * quad.radius {
        return h * h * h * kernel_component(c, j);
    }
    match quad.near {
        NearField::Subsample(n) => {
            let n = n.max(1);
            let s = h / n as f64;
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for e in 0..n {
                        let y = [
                            -0.5 * h + (a as f64 + 0.5) * s,
                            -0.5 * h + (b as f64 + 0.5) * s,
                            -0.5 * h + (e as f64 + 0.5) * s,
                        ];
                        acc += kernel_component(sub3(c, y), j);
                    }
                }
            }
            acc * s * s * s
        }
        NearField::Exact => {
            // int_B d_j Gamma = int_{r_j = hi} Gamma - int_{r_j = lo} Gamma
            let (p, q) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let face =
                |z: f64| rect_inverse_distance(c[p] - 0.5 * h, c[p] + 0.5 * h, c[q] - 0.5 * h, c[q] + 0.5 * h, z);
            (face(c[j] + 0.5 * h) - face(c[j] - 0.5 * h)) / FOUR_PI
        }
    }
}

/// Offsets `(i - i', j - j', k - k')` between slab targets and sources on the
/// reflected lattice, with lateral index reversed so the inner loop is a
/// forward dot product.
struct KernelTable {
    ax: usize,
    ay: usize,
    data: Vec<f64>,
}

impl KernelTable {
    fn build(grid: Grid, j: usize, quad: Quadrature) -> Self {
        let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
        let (ax, ay, az) = (2 * nx - 1, 2 * ny - 1, 3 * nz - 1);
        // canonical octant values, filled by symmetry so that parity is exact
        let (mx, my, mz) = (nx, ny, 2 * nz);
        let octant: Vec<f64> = (0..mx * my * mz)
            .into_par_iter()
            .map(|n| {
                let d = [n % mx, (n / mx) % my, n / (mx * my)];
                cell_integral(d, j, grid.h, quad)
            })
            .collect();
        let mut data = vec![0.0; ax * ay * az];
        for c in 0..az {
            let dk = c as isize - (nz as isize - 1);
            for b in 0..ay {
                let dj = b as isize - (ny as isize - 1);
                for q in 0..ax {
                    // q = i' - i + nx - 1, so di = i - i' = nx - 1 - q
                    let di = nx as isize - 1 - q as isize;
                    let d = [di, dj, dk];
                    let v = octant[di.unsigned_abs() + mx * (dj.unsigned_abs() + my * dk.unsigned_abs())];
                    let s = match d[j].cmp(&0) {
                        std::cmp::Ordering::Less => -v,
                        std::cmp::Ordering::Equal => 0.0,
                        std::cmp::Ordering::Greater => v,
                    };
                    data[q + ax * (b + ay * c)] = s;
                }
            }
        }
        KernelTable { ax, ay, data }
    }

    #[inline]
    fn row(&self, b: usize, c: usize) -> &[f64] {
        let start = self.ax * (b + self.ay * c);
        &self.data[start..start + self.ax]
    }
}

/// `(K_j * g~)` at slab cell centers for each requested `j`, where `g~` is
/// the reflection of `g` with the given parity.
pub fn kernel_convolution(g: &ScalarField, parity: Parity, comps: &[Axis], quad: Quadrature) -> Vec<ScalarField> {
    let grid = g.grid;
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let ext = reflect_extend(g, parity);
    // nonzero source rows (j', k'_ext)
    let rows: Vec<(usize, usize, &[f64])> = (0..2 * nz)
        .flat_map(|kk| (0..ny).map(move |jj| (jj, kk)))
        .filter_map(|(jj, kk)| {
            let start = nx * (jj + ny * kk);
            let row = &ext.values[start..start + nx];
            row.iter().any(|v| *v != 0.0).then_some((jj, kk, row))
        })
        .collect();
    comps
        .iter()
        .map(|axis| {
            if rows.is_empty() {
                return ScalarField::zeros(grid);
            }
            let table = KernelTable::build(grid, axis.index(), quad);
            let mut out = vec![0.0; grid.len()];
            out.par_chunks_mut(nx).enumerate().for_each(|(row_idx, out_row)| {
                let j = row_idx % ny;
                let k = row_idx / ny;
                for &(jj, kk, src) in &rows {
                    // extended source layer kk sits at k' = kk - nz
                    let b = j + ny - 1 - jj;
                    let c = k + 2 * nz - 1 - kk;
                    let trow = table.row(b, c);
                    for (i, o) in out_row.iter_mut().enumerate() {
                        let t = &trow[nx - 1 - i..2 * nx - 1 - i];
                        *o += t.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            });
            ScalarField { grid, values: out }
        })
        .collect()
}

fn volume_parity(j: Axis, bc: BoundaryCondition) -> Parity {
    match (bc, j) {
        (BoundaryCondition::Neumann, Axis::X3) | (BoundaryCondition::Dirichlet, Axis::X1 | Axis::X2) => Parity::Odd,
        _ => Parity::Even,
    }
}

/// `w(x) = int G(x, y)_{y_j} g(y) dy` over the half-space.
pub fn volume_potential(g: &ScalarField, j: Axis, bc: BoundaryCondition, quad: Quadrature) -> ScalarField {
    let conv = kernel_convolution(g, volume_parity(j, bc), &[j], quad);
    conv[0].scaled(-1.0)
}

/// `grad_x int G(x, y)_{y_j} g(y) dy`.
pub fn newton_gradient_potential(g: &ScalarField, j: Axis, bc: BoundaryCondition) -> VectorField {
    let w = volume_potential(g, j, bc, Quadrature::default());
    Stencil::open().gradient(&w)
}

/// `grad_x int G(x, y) g(y) dy`: the gradient of the Green potential itself.
pub fn green_potential_gradient(g: &ScalarField, bc: BoundaryCondition, quad: Quadrature) -> VectorField {
    let parity = match bc {
        BoundaryCondition::Neumann => Parity::Even,
        BoundaryCondition::Dirichlet => Parity::Odd,
    };
    let mut c = kernel_convolution(g, parity, &Axis::ALL, quad).into_iter();
    VectorField { comps: [c.next().unwrap(), c.next().unwrap(), c.next().unwrap()] }
}

/// Minimum-image representatives of a lateral residue in `[0, n)`, with
/// weights. The half-period residue is split evenly between its two images
/// so the periodized tables stay mirror-symmetric.
fn min_images(r: usize, n: usize) -> Vec<(isize, f64)> {
    let (r, n) = (r as isize, n as isize);
    if 2 * r == n {
        vec![(r - n, 0.5), (r, 0.5)]
    } else if 2 * r > n {
        vec![(r - n, 1.0)]
    } else {
        vec![(r, 1.0)]
    }
}

/// Periodized wall-to-slab weights: `table[k][r1 + nx r2]` multiplies the wall
/// value at lateral offset `(r1, r2)` (mod the tile) for targets in layer `k`.
/// Each offset sums its minimum image and the eight surrounding images.
fn periodized_wall_table(grid: Grid, weight: impl Fn(f64, f64, f64, f64) -> f64 + Sync) -> Vec<Vec<f64>> {
    let (nx, ny, h) = (grid.nx, grid.ny, grid.h);
    (0..grid.nz)
        .into_par_iter()
        .map(|k| {
            let z = grid.x3(k);
            let mut t = vec![0.0; nx * ny];
            for r2 in 0..ny {
                for r1 in 0..nx {
                    let mut acc = 0.0;
                    for (d1, w1) in min_images(r1, nx) {
                        for (d2, w2) in min_images(r2, ny) {
                            for p in -1..=1isize {
                                for q in -1..=1isize {
                                    let c1 = (d1 + p * nx as isize) as f64 * h;
                                    let c2 = (d2 + q * ny as isize) as f64 * h;
                                    acc += w1 * w2 * weight(c1, c2, z, h);
                                }
                            }
                        }
                    }
                    t[r1 + nx * r2] = acc;
                }
            }
            t
        })
        .collect()
}

fn apply_wall_table(grid: Grid, table: &[Vec<f64>], phi: &BoundaryField) -> ScalarField {
    let (nx, ny) = (grid.nx, grid.ny);
    let sources: Vec<(usize, usize, f64)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| (i, j, phi.at(i, j)))
        .filter(|s| s.2 != 0.0)
        .collect();
    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(nx * ny).zip(table.par_iter()).for_each(|(layer, t)| {
        for j in 0..ny {
            for i in 0..nx {
                let mut acc = 0.0;
                for &(si, sj, v) in &sources {
                    let r1 = (i + nx - si) % nx;
                    let r2 = (j + ny - sj) % ny;
                    acc += t[r1 + nx * r2] * v;
                }
                layer[i + nx * j] = acc;
            }
        }
    });
    ScalarField { grid, values }
}

/// Harmonic extension of wall data by the Poisson kernel `x3 / (2 pi |x-y|^3)`.
pub fn poisson_extension(phi: &BoundaryField) -> ScalarField {
    let grid = phi.grid;
    let table = periodized_wall_table(grid, |c1, c2, z, h| {
        rect_solid_angle(c1 - 0.5 * h, c1 + 0.5 * h, c2 - 0.5 * h, c2 + 0.5 * h, z) / (2.0 * PI)
    });
    apply_wall_table(grid, &table, phi)
}

/// Single-layer potential `int phi(y) / (2 pi |x - y|) dy` over the wall.
pub fn single_layer(phi: &BoundaryField) -> ScalarField {
    let grid = phi.grid;
    let table = periodized_wall_table(grid, |c1, c2, z, h| {
        let near = c1.abs().max(c2.abs()) <= 2.5 * h;
        if near {
            rect_inverse_distance(c1 - 0.5 * h, c1 + 0.5 * h, c2 - 0.5 * h, c2 + 0.5 * h, z) / (2.0 * PI)
        } else {
            h * h / (2.0 * PI * (c1 * c1 + c2 * c2 + z * z).sqrt())
        }
    });
    apply_wall_table(grid, &table, phi)
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub v: ScalarField,
    /// `|| Lap_h v + D_j g ||_2` over interior cells.
    pub residual: f64,
    /// `residual / || D_j g ||_2` (zero when the source vanishes).
    pub relative_residual: f64,
    pub accuracy_warning: bool,
}

/// Relative interior residual above which a solve is flagged as unresolved.
pub const RESIDUAL_WARNING: f64 = 0.25;

/// Solves `-Lap v = g_{x_j}` in the half-space with `v = h` (Dirichlet) or
/// `-v_{x3} = h` (Neumann) on the wall.
///
/// With `Gamma = 1/(4 pi |x|)` the solution is
/// `v = -int G_{y_j} g dy + int x3 h(y) / (2 pi |x-y|^3) dy` (Dirichlet) or
/// `v = -int G_{y_j} g dy + int h(y) / (2 pi |x-y|) dy` (Neumann).
pub fn solve_poisson_halfspace(
    g: &ScalarField,
    j: Axis,
    h: &BoundaryField,
    bc: BoundaryCondition,
) -> Result<PoissonSolution> {
    solve_poisson_halfspace_with(g, j, h, bc, Quadrature::default())
}

pub fn solve_poisson_halfspace_with(
    g: &ScalarField,
    j: Axis,
    h: &BoundaryField,
    bc: BoundaryCondition,
    quad: Quadrature,
) -> Result<PoissonSolution> {
    g.grid.ensure_same(&h.grid)?;
    if !g.is_finite() || h.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite Poisson data"));
    }
    let mut v = volume_potential(g, j, bc, quad).scaled(-1.0);
    if h.values.iter().any(|x| *x != 0.0) {
        let layer = match bc {
            BoundaryCondition::Dirichlet => poisson_extension(h),
            BoundaryCondition::Neumann => single_layer(h),
        };
        v = &v + &layer;
    }
    let s = Stencil::open();
    let source = s.partial(g, j);
    let res = &s.laplacian(&v) + &source;
    let residual = norms::interior_l2(&res, 2);
    let scale = norms::interior_l2(&source, 2);
    let relative_residual = if scale > 0.0 { residual / scale } else { 0.0 };
    let accuracy_warning = relative_residual > RESIDUAL_WARNING;
    if accuracy_warning {
        warn!("Poisson solve unresolved: relative residual {relative_residual:.3e} at h = {}", g.grid.h);
    }
    Ok(PoissonSolution { v, residual, relative_residual, accuracy_warning })
}

/// A monomial `coef * w1^a * w2^b * w3^c` in the unit-vector components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

/// Polynomial weight on the upper unit hemisphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdnKernel {
    pub terms: Vec<Monomial>,
}

impl AdnKernel {
    pub fn polynomial(terms: Vec<Monomial>) -> Self {
        AdnKernel { terms }
    }

    /// Named closed forms: `w1`, `w2`, `w3`, `w1w2`, `w1sq-w2sq`, `w1w3`.
    pub fn named(name: &str) -> Result<Self> {
        let m = |coef, powers| Monomial { coef, powers };
        let terms = match name {
            "w1" => vec![m(1.0, [1, 0, 0])],
            "w2" => vec![m(1.0, [0, 1, 0])],
            "w3" => vec![m(1.0, [0, 0, 1])],
            "w1w2" => vec![m(1.0, [1, 1, 0])],
            "w1w3" => vec![m(1.0, [1, 0, 1])],
            "w1sq-w2sq" => vec![m(1.0, [2, 0, 0]), m(-1.0, [0, 2, 0])],
            _ => return Err(Error::invalid(format!("unknown kernel weight '{name}'"))),
        };
        Ok(AdnKernel { terms })
    }

    pub fn weight(&self, w: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef * w[0].powi(t.powers[0] as i32) * w[1].powi(t.powers[1] as i32) * w[2].powi(t.powers[2] as i32)
            })
            .sum()
    }

    /// `kappa(z, x3) = w(x/|x|) / |x|^2` with `x = (z, x3)`.
    pub fn kappa(&self, z: [f64; 2], x3: f64) -> f64 {
        let r2 = z[0] * z[0] + z[1] * z[1] + x3 * x3;
        let r = r2.sqrt();
        self.weight([z[0] / r, z[1] / r, x3 / r]) / r2
    }

    /// Mean of the weight over the equatorial circle (trapezoid, 1024 nodes).
    pub fn equatorial_mean(&self) -> f64 {
        let n = 1024;
        (0..n)
            .map(|m| {
                let th = 2.0 * PI * m as f64 / n as f64;
                self.weight([th.cos(), th.sin(), 0.0])
            })
            .sum::<f64>()
            / n as f64
    }
}

/// Tolerance on the equatorial mean of an ADN weight.
pub const MEAN_ZERO_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct AdnResult {
    pub psi: ScalarField,
    /// `|| grad psi ||_p` over interior cells.
    pub grad_norm: f64,
    /// Gagliardo seminorm of the wall data with order `1 - 1/p`.
    pub seminorm: f64,
    pub p: f64,
}

impl AdnResult {
    pub fn ratio(&self) -> Option<f64> {
        (self.seminorm > 0.0).then(|| self.grad_norm / self.seminorm)
    }
}

/// `psi(x, x3) = int kappa(x - y, x3) phi(y) dy` on the slab.
pub fn adn_boundary_potential(kernel: &AdnKernel, phi: &BoundaryField, p: f64) -> Result<AdnResult> {
    let mean = kernel.equatorial_mean();
    if mean.abs() > MEAN_ZERO_TOL {
        return Err(Error::InvalidKernel(format!("equatorial mean {mean:e} exceeds {MEAN_ZERO_TOL:e}")));
    }
    if !(p > 1.0) {
        return Err(Error::invalid(format!("exponent p = {p} must exceed 1")));
    }
    let grid = phi.grid;
    let table = periodized_wall_table(grid, |c1, c2, z, h| {
        let near = c1.abs().max(c2.abs()) <= 2.5 * h;
        if near {
            let n = 4;
            let s = h / n as f64;
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let y1 = -0.5 * h + (a as f64 + 0.5) * s;
                    let y2 = -0.5 * h + (b as f64 + 0.5) * s;
                    acc += kernel.kappa([c1 - y1, c2 - y2], z);
                }
            }
            acc * s * s
        } else {
            h * h * kernel.kappa([c1, c2], z)
        }
    });
    let psi = apply_wall_table(grid, &table, phi);
    let grad = Stencil { lateral: Lateral::Periodic }.gradient(&psi);
    let grad_norm = norms::interior_lp(&grad.magnitude(), p, 2);
    let seminorm = norms::gagliardo_seminorm(phi, 1.0 - 1.0 / p, p);
    Ok(AdnResult { psi, grad_norm, seminorm, p })
}

#[inline]
fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn fundamental_solution_values() {
        assert_relative_eq!(fundamental_solution([1.0, 0.0, 0.0]).unwrap(), 0.0795775, epsilon = 1e-7);
        assert_relative_eq!(fundamental_solution([0.0, 2.0, 0.0]).unwrap(), 1.0 / (8.0 * PI), max_relative = 1e-15);
        assert!(matches!(fundamental_solution([0.0; 3]), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn dirichlet_image_value() {
        let g = GreensKernel::dirichlet().eval([0.0, 0.0, 1.0], [0.0, 0.0, 2.0]).unwrap();
        assert_relative_eq!(g, 1.0 / (6.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn wall_values_of_image_kernels() {
        let x = [0.3, -1.2, 0.0];
        let y = [1.0, 0.5, 0.7];
        assert_eq!(GreensKernel::dirichlet().eval(x, y).unwrap(), 0.0);
        let gamma = fundamental_solution(sub3(x, y)).unwrap();
        assert_relative_eq!(GreensKernel::neumann().eval(x, y).unwrap(), 2.0 * gamma, max_relative = 1e-15);
        assert!(GreensKernel::neumann().eval(y, y).is_err());
    }

    #[test]
    fn kernel_gradient_matches_finite_differences() {
        let x = [0.4, 0.1, 0.9];
        let y = [-0.2, 0.3, 0.5];
        for k in [GreensKernel::dirichlet(), GreensKernel::neumann()] {
            let g = k.grad_x(x, y).unwrap();
            for a in 0..3 {
                let e = 1e-6;
                let mut xp = x;
                let mut xm = x;
                xp[a] += e;
                xm[a] -= e;
                let fd = (k.eval(xp, y).unwrap() - k.eval(xm, y).unwrap()) / (2.0 * e);
                assert_relative_eq!(g[a], fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn discrete_laplacian_of_gamma_is_second_order() {
        // at a fixed point it decays at second order
        let fixed = |h: f64| {
            let x = [1.0, 0.0, 0.0];
            let mut lap = -6.0 * fundamental_solution(x).unwrap();
            for a in 0..3 {
                for s in [-1.0, 1.0] {
                    let mut y = x;
                    y[a] += s * h;
                    lap += fundamental_solution(y).unwrap();
                }
            }
            (lap / (h * h)).abs()
        };
        let slope = (fixed(0.02) / fixed(0.01)).log2();
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn rectangle_integrals_match_brute_force() {
        let (a1, b1, a2, b2, z) = (0.2, 0.7, -0.3, 0.4, 0.25);
        let n = 400;
        let (mut inv, mut solid) = (0.0, 0.0);
        for p in 0..n {
            for q in 0..n {
                let x = a1 + (p as f64 + 0.5) * (b1 - a1) / n as f64;
                let y = a2 + (q as f64 + 0.5) * (b2 - a2) / n as f64;
                let r = (x * x + y * y + z * z).sqrt();
                inv += 1.0 / r;
                solid += z / (r * r * r);
            }
        }
        let da = (b1 - a1) * (b2 - a2) / (n * n) as f64;
        assert_relative_eq!(rect_inverse_distance(a1, b1, a2, b2, z), inv * da, max_relative = 1e-5);
        assert_relative_eq!(rect_solid_angle(a1, b1, a2, b2, z), solid * da, max_relative = 1e-5);
    }

    #[test]
    fn exact_and_subsampled_cell_integrals_agree() {
        let quad_exact = Quadrature { near: NearField::Exact, radius: 2.0 };
        let quad_fine = Quadrature { near: NearField::Subsample(40), radius: 2.0 };
        for d in [[1, 0, 0], [1, 1, 0], [1, 1, 1], [0, 0, 1]] {
            for j in 0..3 {
                let a = cell_integral(d, j, 0.5, quad_exact);
                let b = cell_integral(d, j, 0.5, quad_fine);
                assert!((a - b).abs() < 2e-4 * 0.5, "d {d:?} j {j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let g = make_grid(6, 6, 8, 0.5).unwrap();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let sol = solve_poisson_halfspace(&ScalarField::zeros(g), Axis::X1, &BoundaryField::zeros(g), bc).unwrap();
            assert_eq!(sol.v.max_abs(), 0.0);
            assert_eq!(newton_gradient_potential(&ScalarField::zeros(g), Axis::X3, bc).max_abs(), 0.0);
        }
    }

    #[test]
    fn poisson_solution_is_linear_in_data() {
        let g = make_grid(6, 6, 8, 0.5).unwrap();
        let f1 = ScalarField::from_fn(g, |x| (-(x[0] - 1.5).powi(2) - (x[2] - 1.0).powi(2)).exp());
        let f2 = ScalarField::from_fn(g, |x| x[1] * (-(x[2] - 1.5).powi(2)).exp());
        let h1 = BoundaryField::from_fn(g, |y| (y[0] * 2.0).sin());
        let h2 = BoundaryField::from_fn(g, |y| y[1]);
        let hs = BoundaryField { grid: g, values: h1.values.iter().zip(&h2.values).map(|(a, b)| a + b).collect() };
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let a = solve_poisson_halfspace(&f1, Axis::X2, &h1, bc).unwrap().v;
            let b = solve_poisson_halfspace(&f2, Axis::X2, &h2, bc).unwrap().v;
            let s = solve_poisson_halfspace(&(&f1 + &f2), Axis::X2, &hs, bc).unwrap().v;
            let diff = &s - &(&a + &b);
            assert!(diff.max_abs() < 1e-13 * s.max_abs().max(1.0));
        }
    }

    #[test]
    fn dirichlet_volume_part_is_odd_across_the_wall() {
        // the discrete potential inherits exact lattice parity from the table
        let g = make_grid(6, 6, 8, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x| (-(x[0] - 1.5).powi(2) - (x[2] - 1.0).powi(2)).exp());
        let q = Quadrature::default();
        let t = KernelTable::build(g, 2, q);
        let (nz, ny, nx) = (g.nz, g.ny, g.nx);
        for c in 0..(3 * nz - 1) {
            let dk = c as isize - (nz as isize - 1);
            let mirror = (-dk + nz as isize - 1) as usize;
            if mirror < 3 * nz - 1 {
                for b in 0..2 * ny - 1 {
                    for a in 0..2 * nx - 1 {
                        assert_eq!(t.row(b, c)[a], -t.row(b, mirror)[a]);
                    }
                }
            }
        }
        let w = volume_potential(&f, Axis::X1, BoundaryCondition::Dirichlet, q);
        assert!(w.is_finite());
    }

    #[test]
    fn constant_dirichlet_data_extends_harmonically() {
        let g = make_grid(16, 16, 16, 1.0 / 16.0).unwrap();
        let one = BoundaryField::from_fn(g, |_| 1.0);
        let v = poisson_extension(&one);
        let tr = crate::grid::boundary_trace(&v);
        for t in &tr.values {
            assert!((t - 1.0).abs() < 0.05, "trace {t}");
        }
        // values decay monotonically away from the wall
        for k in 1..g.nz {
            assert!(v.at(3, 3, k) < v.at(3, 3, k - 1));
        }
    }

    #[test]
    fn neumann_single_layer_has_the_right_flux() {
        let g = make_grid(32, 32, 16, 0.125).unwrap();
        let phi = BoundaryField::from_fn(g, |y| (-(y[0] - 2.0).powi(2) - (y[1] - 2.0).powi(2)).exp());
        let s = single_layer(&phi);
        let dn = Stencil::open().partial(&s, Axis::X3);
        let tr = crate::grid::boundary_trace(&dn);
        let i = 15;
        assert!((-tr.at(i, i) - phi.at(i, i)).abs() < 0.05, "{} vs {}", -tr.at(i, i), phi.at(i, i));
    }

    #[test]
    fn translated_bump_gives_the_same_ratio() {
        let g = make_grid(8, 8, 8, 0.5).unwrap();
        let bump = |c: f64| {
            ScalarField::from_fn(g, move |x| {
                (-((x[0] - c).powi(2) + (x[1] - 2.0).powi(2) + (x[2] - 1.75).powi(2)) * 2.0).exp()
            })
        };
        let ratio = |f: &ScalarField| {
            let w = newton_gradient_potential(f, Axis::X1, BoundaryCondition::Dirichlet);
            norms::lp_norm_vector(&w, 2.0).unwrap() / norms::lp_norm(f, 2.0).unwrap()
        };
        // shift by a whole number of cells inside the tile
        let a = ratio(&bump(1.75));
        let b = ratio(&bump(2.25));
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn adn_rejects_kernels_without_mean_zero() {
        let g = make_grid(4, 4, 8, 0.25).unwrap();
        let k = AdnKernel::polynomial(vec![Monomial { coef: 1.0, powers: [2, 0, 0] }]);
        assert!(matches!(adn_boundary_potential(&k, &BoundaryField::zeros(g), 2.0), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn adn_of_zero_and_constant_data() {
        let g = make_grid(8, 8, 8, 0.25).unwrap();
        let k = AdnKernel::named("w1").unwrap();
        let r = adn_boundary_potential(&k, &BoundaryField::zeros(g), 2.0).unwrap();
        assert_eq!(r.psi.max_abs(), 0.0);
        let c = BoundaryField::from_fn(g, |_| 3.0);
        let r = adn_boundary_potential(&k, &c, 2.0).unwrap();
        assert_eq!(r.seminorm, 0.0);
        assert!(r.grad_norm < 1e-12, "{}", r.grad_norm);
        assert!(r.ratio().is_none());
    }
}

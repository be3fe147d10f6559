//! Spatial discretisation shared by the nonlinear solver and the linear
//! split: ghost layers, upwind mass fluxes, centered momentum fluxes and the
//! compact viscous operator.

use crate::grid::Grid;

use super::params::PhysicalParams;

/// A cell array with one ghost layer on every side.
#[derive(Clone, Debug)]
pub(crate) struct Padded {
    px: usize,
    py: usize,
    pub data: Vec<f64>,
}

impl Padded {
    fn new(grid: Grid) -> Self {
        let (px, py, pz) = (grid.nx + 2, grid.ny + 2, grid.nz + 2);
        Padded { px, py, data: vec![0.0; px * py * pz] }
    }

    #[inline]
    pub fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        (i + 1) as usize + self.px * ((j + 1) as usize + self.py * (k + 1) as usize)
    }

    #[inline]
    pub fn at(&self, i: isize, j: isize, k: isize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    fn fill_interior(&mut self, grid: Grid, values: &[f64]) {
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                let src = grid.idx(0, j, k);
                let dst = self.idx(0, j as isize, k as isize);
                self.data[dst..dst + grid.nx].copy_from_slice(&values[src..src + grid.nx]);
            }
        }
    }

    fn wrap_lateral(&mut self, grid: Grid) {
        let (nx, ny) = (grid.nx as isize, grid.ny as isize);
        for k in -1..=grid.nz as isize {
            for j in 0..ny {
                let a = self.at(nx - 1, j, k);
                let b = self.at(0, j, k);
                let (l, r) = (self.idx(-1, j, k), self.idx(nx, j, k));
                self.data[l] = a;
                self.data[r] = b;
            }
            for i in -1..=nx {
                let a = self.at(i, ny - 1, k);
                let b = self.at(i, 0, k);
                let (l, r) = (self.idx(i, -1, k), self.idx(i, ny, k));
                self.data[l] = a;
                self.data[r] = b;
            }
        }
    }
}

/// Per-wall-cell Robin ghost factor `(2K - h) / (2K + h)`.
pub(crate) fn robin_factors(grid: Grid, params: &PhysicalParams) -> Vec<f64> {
    let periods = [grid.l1(), grid.l2()];
    let mut out = Vec::with_capacity(grid.wall_len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = params.slip.eval([grid.x1(i), grid.x2(j)], periods);
            out.push((2.0 * k - grid.h) / (2.0 * k + grid.h));
        }
    }
    out
}

/// Velocity-type field with ghosts: Robin for tangential components and odd
/// reflection for the normal one at the wall, zero at the far cap.
pub(crate) fn pad_velocity(grid: Grid, comps: [&[f64]; 3], robin: &[f64]) -> [Padded; 3] {
    let top = grid.nz as isize;
    let mut out = [Padded::new(grid), Padded::new(grid), Padded::new(grid)];
    for (c, p) in out.iter_mut().enumerate() {
        p.fill_interior(grid, comps[c]);
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let w = p.at(i, j, 0);
                let factor = if c < 2 { robin[i as usize + grid.nx * j as usize] } else { -1.0 };
                let g = p.idx(i, j, -1);
                p.data[g] = factor * w;
                let cap = p.at(i, j, top - 1);
                let g = p.idx(i, j, top);
                p.data[g] = -cap;
            }
        }
        p.wrap_lateral(grid);
    }
    out
}

/// Density with a mirrored wall ghost and the reference value at the cap.
pub(crate) fn pad_density(grid: Grid, rho: &[f64], rho_ref: f64) -> Padded {
    let top = grid.nz as isize;
    let mut p = Padded::new(grid);
    p.fill_interior(grid, rho);
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let w = p.at(i, j, 0);
            let g = p.idx(i, j, -1);
            p.data[g] = w;
            let g = p.idx(i, j, top);
            p.data[g] = rho_ref;
        }
    }
    p.wrap_lateral(grid);
    p
}

/// Upwind mass fluxes on cell faces. `fx[idx(i,j,k)]` sits at `i + 1/2`
/// (periodic), likewise `fy`; `fz[i + nx (j + ny k)]` for `k in 0..=nz` sits
/// at `k - 1/2`, so the wall face is `k = 0` and the cap face `k = nz`.
pub struct Fluxes {
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub fz: Vec<f64>,
}

#[inline]
fn upwind(uf: f64, left: f64, right: f64) -> f64 {
    if uf > 0.0 {
        uf * left
    } else {
        uf * right
    }
}

pub(crate) fn mass_fluxes(grid: Grid, rho: &Padded, u: &[Padded; 3]) -> Fluxes {
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let mut fx = vec![0.0; grid.len()];
    let mut fy = vec![0.0; grid.len()];
    let mut fz = vec![0.0; nx * ny * (nz + 1)];
    for k in 0..nz as isize {
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let n = grid.idx(i as usize, j as usize, k as usize);
                let uf = 0.5 * (u[0].at(i, j, k) + u[0].at(i + 1, j, k));
                fx[n] = upwind(uf, rho.at(i, j, k), rho.at(i + 1, j, k));
                let uf = 0.5 * (u[1].at(i, j, k) + u[1].at(i, j + 1, k));
                fy[n] = upwind(uf, rho.at(i, j, k), rho.at(i, j + 1, k));
            }
        }
    }
    for k in 0..=nz as isize {
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let n = i as usize + nx * (j as usize + ny * k as usize);
                let uf = 0.5 * (u[2].at(i, j, k - 1) + u[2].at(i, j, k));
                fz[n] = upwind(uf, rho.at(i, j, k - 1), rho.at(i, j, k));
            }
        }
    }
    Fluxes { fx, fy, fz }
}

#[inline]
fn prev(i: usize, n: usize) -> usize {
    if i == 0 {
        n - 1
    } else {
        i - 1
    }
}

/// `div_h F` per cell.
pub(crate) fn flux_divergence(grid: Grid, fl: &Fluxes) -> Vec<f64> {
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let inv = 1.0 / grid.h;
    let mut out = vec![0.0; grid.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let n = grid.idx(i, j, k);
                let d = fl.fx[n] - fl.fx[grid.idx(prev(i, nx), j, k)] + fl.fy[n] - fl.fy[grid.idx(i, prev(j, ny), k)]
                    + fl.fz[i + nx * (j + ny * (k + 1))]
                    - fl.fz[i + nx * (j + ny * k)];
                out[n] = d * inv;
            }
        }
    }
    out
}

/// `div_h (F zbar)` per cell, with `zbar` the face average of `z`.
pub(crate) fn convective_divergence(grid: Grid, fl: &Fluxes, z: &Padded) -> Vec<f64> {
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let inv = 1.0 / grid.h;
    let mut out = vec![0.0; grid.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let (ii, jj, kk) = (i as isize, j as isize, k as isize);
                let n = grid.idx(i, j, k);
                let zc = z.at(ii, jj, kk);
                let xp = fl.fx[n] * 0.5 * (zc + z.at(ii + 1, jj, kk));
                let xm = fl.fx[grid.idx(prev(i, nx), j, k)] * 0.5 * (zc + z.at(ii - 1, jj, kk));
                let yp = fl.fy[n] * 0.5 * (zc + z.at(ii, jj + 1, kk));
                let ym = fl.fy[grid.idx(i, prev(j, ny), k)] * 0.5 * (zc + z.at(ii, jj - 1, kk));
                let zp = fl.fz[i + nx * (j + ny * (k + 1))] * 0.5 * (zc + z.at(ii, jj, kk + 1));
                let zm = fl.fz[i + nx * (j + ny * k)] * 0.5 * (zc + z.at(ii, jj, kk - 1));
                out[n] = (xp - xm + yp - ym + zp - zm) * inv;
            }
        }
    }
    out
}

/// `mu Lap_h u^j + lambda d_j div_h u` with the compact 7-point Laplacian,
/// compact second differences on the diagonal of the grad-div term and
/// four-point cross differences off it.
pub(crate) fn viscous(grid: Grid, u: &[Padded; 3], mu: f64, lambda: f64) -> [Vec<f64>; 3] {
    let inv2 = 1.0 / (grid.h * grid.h);
    let e = [[1isize, 0, 0], [0, 1, 0], [0, 0, 1]];
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for k in 0..grid.nz as isize {
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let n = grid.idx(i as usize, j as usize, k as usize);
                let at = |c: usize, o: [isize; 3]| u[c].at(i + o[0], j + o[1], k + o[2]);
                let second = |c: usize, a: usize| {
                    let p = e[a];
                    let m = [-p[0], -p[1], -p[2]];
                    at(c, p) - 2.0 * at(c, [0, 0, 0]) + at(c, m)
                };
                for c in 0..3 {
                    let lap = second(c, 0) + second(c, 1) + second(c, 2);
                    let mut graddiv = second(c, c);
                    for a in 0..3 {
                        if a == c {
                            continue;
                        }
                        let (pc, pa) = (e[c], e[a]);
                        let add =
                            |s: isize, t: isize| [s * pc[0] + t * pa[0], s * pc[1] + t * pa[1], s * pc[2] + t * pa[2]];
                        graddiv +=
                            0.25 * (at(a, add(1, 1)) - at(a, add(1, -1)) - at(a, add(-1, 1)) + at(a, add(-1, -1)));
                    }
                    out[c][n] = (mu * lap + lambda * graddiv) * inv2;
                }
            }
        }
    }
    out
}

/// Centered pressure gradient from the padded density.
pub(crate) fn pressure_gradient(grid: Grid, rho: &Padded, params: &PhysicalParams) -> [Vec<f64>; 3] {
    let inv = 0.5 / grid.h;
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    let p = |i, j, k| params.pressure(rho.at(i, j, k));
    for k in 0..grid.nz as isize {
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let n = grid.idx(i as usize, j as usize, k as usize);
                out[0][n] = (p(i + 1, j, k) - p(i - 1, j, k)) * inv;
                out[1][n] = (p(i, j + 1, k) - p(i, j - 1, k)) * inv;
                out[2][n] = (p(i, j, k + 1) - p(i, j, k - 1)) * inv;
            }
        }
    }
    out
}

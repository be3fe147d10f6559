use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::solver::Trajectory;

/// A velocity field that particle paths can be integrated through.
pub trait VelocitySource: Sync {
    fn velocity(&self, slot: &Slot<'_>, x: [f64; 3], t: f64) -> [f64; 3];
    /// Times at which the field may be non-smooth in `t`; integration steps
    /// never straddle them.
    fn time_nodes(&self) -> Vec<f64>;
    fn span(&self) -> (f64, f64);
    fn max_speed(&self) -> f64;
    /// Spatial resolution used to bound sub-steps.
    fn spacing(&self) -> f64;
    /// Lateral periods, if the field is periodic in `x1, x2`.
    fn periods(&self) -> Option<[f64; 2]>;
    /// Height of the far cap.
    fn depth(&self) -> f64;
    /// Prepares whatever is needed to evaluate inside `[a, b]`.
    fn slot(&self, a: f64, b: f64) -> Slot<'_>;
}

/// Cached interpolation data for one time window.
pub enum Slot<'a> {
    None,
    Window { t0: f64, t1: f64, lo: Arc<Interpolant>, hi: Arc<Interpolant>, _src: std::marker::PhantomData<&'a ()> },
}

pub type VelocityFn = Arc<dyn Fn([f64; 3], f64) -> [f64; 3] + Send + Sync>;

/// A closed-form velocity field.
#[derive(Clone)]
pub struct AnalyticField {
    pub f: VelocityFn,
    pub span: (f64, f64),
    pub max_speed: f64,
    pub spacing: f64,
    pub periods: Option<[f64; 2]>,
    pub depth: f64,
}

impl AnalyticField {
    pub fn new(
        f: impl Fn([f64; 3], f64) -> [f64; 3] + Send + Sync + 'static,
        span: (f64, f64),
        max_speed: f64,
    ) -> Self {
        AnalyticField { f: Arc::new(f), span, max_speed, spacing: 0.05, periods: None, depth: f64::INFINITY }
    }

    pub fn with_spacing(mut self, h: f64) -> Self {
        self.spacing = h;
        self
    }

    pub fn with_periods(mut self, periods: [f64; 2]) -> Self {
        self.periods = Some(periods);
        self
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth = depth;
        self
    }
}

impl VelocitySource for AnalyticField {
    fn velocity(&self, _: &Slot<'_>, x: [f64; 3], t: f64) -> [f64; 3] {
        (self.f)(x, t)
    }
    fn time_nodes(&self) -> Vec<f64> {
        vec![self.span.0, self.span.1]
    }
    fn span(&self) -> (f64, f64) {
        self.span
    }
    fn max_speed(&self) -> f64 {
        self.max_speed
    }
    fn spacing(&self) -> f64 {
        self.spacing
    }
    fn periods(&self) -> Option<[f64; 2]> {
        self.periods
    }
    fn depth(&self) -> f64 {
        self.depth
    }
    fn slot(&self, _: f64, _: f64) -> Slot<'_> {
        Slot::None
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Piecewise trilinear in space.
    #[default]
    Trilinear,
    /// Tensor-product cubic spline (periodic laterally, natural in `x3`).
    CubicSpline,
}

/// Node values of one snapshot. In `x3` the nodes are the wall `x3 = 0`,
/// the cell centers and the cap `x3 = L3`; laterally they are the cell
/// centers, wrapped periodically.
pub struct Interpolant {
    nx: usize,
    ny: usize,
    h: f64,
    z: Vec<f64>,
    mode: Interpolation,
    /// Per component: `f` and, for splines, the mixed second-derivative
    /// arrays indexed by the bit mask `(x, y, z)`.
    arrays: [Vec<Vec<f64>>; 3],
}

fn node_values(grid: Grid, u: &VectorField, c: usize) -> Vec<f64> {
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let nzn = nz + 2;
    let mut out = vec![0.0; nx * ny * nzn];
    let f = &u.comps[c].values;
    for j in 0..ny {
        for i in 0..nx {
            let at = |k: usize| f[grid.idx(i, j, k)];
            let wall = if c == 2 || nz < 2 { 0.0 } else { 1.5 * at(0) - 0.5 * at(1) };
            out[i + nx * j] = wall;
            for k in 0..nz {
                out[i + nx * (j + ny * (k + 1))] = at(k);
            }
            out[i + nx * (j + ny * (nz + 1))] = 0.0;
        }
    }
    out
}

/// Second derivatives of the periodic cubic spline through `y` (spacing `h`).
fn periodic_spline(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    if n < 3 {
        return vec![0.0; n];
    }
    // M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2, cyclic.
    let rhs: Vec<f64> = (0..n).map(|i| 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]) / (h * h)).collect();
    cyclic_tridiagonal(1.0, 4.0, 1.0, &rhs)
}

/// Sherman-Morrison solve of the constant cyclic tridiagonal system.
fn cyclic_tridiagonal(a: f64, b: f64, c: f64, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let gamma = -b;
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - a * c / gamma;
    let lower = vec![a; n];
    let upper = vec![c; n];
    let x = thomas(&lower, &diag, &upper, r);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c;
    let z = thomas(&lower, &diag, &upper, &u);
    let fact = (x[0] + a * x[n - 1] / gamma) / (1.0 + z[0] + a * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = r[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (r[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Second derivatives of the natural cubic spline through `(z, y)`.
fn natural_spline(z: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    let mut c = vec![0.0; k];
    let mut r = vec![0.0; k];
    for i in 1..n - 1 {
        let (h0, h1) = (z[i] - z[i - 1], z[i + 1] - z[i]);
        a[i - 1] = h0 / 6.0;
        b[i - 1] = (h0 + h1) / 3.0;
        c[i - 1] = h1 / 6.0;
        r[i - 1] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    let inner = thomas(&a, &b, &c, &r);
    m[1..n - 1].copy_from_slice(&inner);
    m
}

fn spline_along(data: &[f64], dims: [usize; 3], axis: usize, h: f64, z: &[f64]) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    let mut out = vec![0.0; data.len()];
    let (n, stride, lines): (usize, usize, Vec<usize>) = match axis {
        0 => (nx, 1, (0..ny * nz).map(|l| l * nx).collect()),
        1 => (ny, nx, (0..nz).flat_map(|k| (0..nx).map(move |i| i + nx * ny * k)).collect()),
        _ => (nz, nx * ny, (0..nx * ny).collect()),
    };
    let mut line = vec![0.0; n];
    for start in lines {
        for (q, v) in line.iter_mut().enumerate() {
            *v = data[start + q * stride];
        }
        let m = if axis == 2 { natural_spline(z, &line) } else { periodic_spline(&line, h) };
        for (q, v) in m.into_iter().enumerate() {
            out[start + q * stride] = v;
        }
    }
    out
}

impl Interpolant {
    pub fn new(u: &VectorField, mode: Interpolation) -> Self {
        let grid = u.grid();
        let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
        let mut z = vec![0.0];
        z.extend((0..nz).map(|k| grid.x3(k)));
        z.push(grid.l3());
        let dims = [nx, ny, nz + 2];
        let arrays = std::array::from_fn(|c| {
            let f = node_values(grid, u, c);
            match mode {
                Interpolation::Trilinear => vec![f],
                Interpolation::CubicSpline => {
                    let mut arr: Vec<Vec<f64>> = vec![Vec::new(); 8];
                    arr[0] = f;
                    for mask in 1..8usize {
                        // derive from the array with the lowest set bit cleared
                        let axis = mask.trailing_zeros() as usize;
                        let src = mask & (mask - 1);
                        arr[mask] = spline_along(&arr[src], dims, axis, grid.h, &z);
                    }
                    arr
                }
            }
        });
        Interpolant { nx, ny, h: grid.h, z, mode, arrays }
    }

    fn lateral(&self, x: f64, n: usize) -> (usize, usize, f64) {
        let s = x / self.h - 0.5;
        let fl = s.floor();
        let w = s - fl;
        let i0 = (fl as isize).rem_euclid(n as isize) as usize;
        (i0, (i0 + 1) % n, w)
    }

    fn vertical(&self, x3: f64) -> (usize, f64, f64) {
        let z = &self.z;
        let last = z.len() - 2;
        let x3 = x3.clamp(0.0, z[z.len() - 1]);
        let k = if x3 < z[1] { 0 } else { (((x3 - z[1]) / self.h).floor() as usize + 1).min(last) };
        let dz = z[k + 1] - z[k];
        (k, ((x3 - z[k]) / dz).clamp(0.0, 1.0), dz)
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let (i0, i1, wx) = self.lateral(x[0], self.nx);
        let (j0, j1, wy) = self.lateral(x[1], self.ny);
        let (k0, wz, dz) = self.vertical(x[2]);
        let (nx, ny) = (self.nx, self.ny);
        let id = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
        let corners = [
            (i0, j0, k0),
            (i1, j0, k0),
            (i0, j1, k0),
            (i1, j1, k0),
            (i0, j0, k0 + 1),
            (i1, j0, k0 + 1),
            (i0, j1, k0 + 1),
            (i1, j1, k0 + 1),
        ];
        let lin = [[1.0 - wx, wx], [1.0 - wy, wy], [1.0 - wz, wz]];
        let mut out = [0.0; 3];
        match self.mode {
            Interpolation::Trilinear => {
                for (c, o) in out.iter_mut().enumerate() {
                    let f = &self.arrays[c][0];
                    let mut acc = 0.0;
                    for (q, &(i, j, k)) in corners.iter().enumerate() {
                        acc += lin[0][q & 1] * lin[1][(q >> 1) & 1] * lin[2][(q >> 2) & 1] * f[id(i, j, k)];
                    }
                    *o = acc;
                }
            }
            Interpolation::CubicSpline => {
                let cub = |a: f64, d: f64| (a * a * a - a) * d * d / 6.0;
                let hh = self.h;
                let cubic = [
                    [cub(1.0 - wx, hh), cub(wx, hh)],
                    [cub(1.0 - wy, hh), cub(wy, hh)],
                    [cub(1.0 - wz, dz), cub(wz, dz)],
                ];
                for (c, o) in out.iter_mut().enumerate() {
                    let arr = &self.arrays[c];
                    let mut acc = 0.0;
                    for (q, &(i, j, k)) in corners.iter().enumerate() {
                        let n = id(i, j, k);
                        let side = [q & 1, (q >> 1) & 1, (q >> 2) & 1];
                        for (mask, a) in arr.iter().enumerate() {
                            let mut wgt = 1.0;
                            for (axis, s) in side.iter().enumerate() {
                                wgt *= if mask >> axis & 1 == 1 { cubic[axis][*s] } else { lin[axis][*s] };
                            }
                            acc += wgt * a[n];
                        }
                    }
                    *o = acc;
                }
            }
        }
        if x[2] <= 0.0 {
            out[2] = 0.0;
        }
        out
    }
}

/// Velocity read from solver snapshots: spatial interpolation of each
/// snapshot and linear interpolation in time.
pub struct TrajectoryField<'a> {
    traj: &'a Trajectory,
    mode: Interpolation,
    max_speed: f64,
    cache: std::sync::Mutex<Vec<(usize, Arc<Interpolant>)>>,
}

impl<'a> TrajectoryField<'a> {
    pub fn new(traj: &'a Trajectory, mode: Interpolation) -> Result<Self> {
        traj.check()?;
        if traj.grid().nz < 2 {
            return Err(Error::invalid("trajectory needs at least two layers"));
        }
        let max_speed = traj.snapshots.iter().map(|s| s.u.magnitude().max()).fold(0.0, f64::max);
        Ok(TrajectoryField { traj, mode, max_speed, cache: std::sync::Mutex::new(Vec::new()) })
    }

    fn interpolant(&self, k: usize) -> Arc<Interpolant> {
        let mut cache = self.cache.lock().unwrap();
        if let Some((_, it)) = cache.iter().find(|(i, _)| *i == k) {
            return it.clone();
        }
        let it = Arc::new(Interpolant::new(&self.traj.snapshots[k].u, self.mode));
        cache.push((k, it.clone()));
        if cache.len() > 3 {
            cache.remove(0);
        }
        it
    }
}

impl VelocitySource for TrajectoryField<'_> {
    fn velocity(&self, slot: &Slot<'_>, x: [f64; 3], t: f64) -> [f64; 3] {
        let Slot::Window { t0, t1, lo, hi, .. } = slot else {
            panic!("trajectory field needs a window slot");
        };
        let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (lo.eval(x), hi.eval(x));
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2])]
    }
    fn time_nodes(&self) -> Vec<f64> {
        self.traj.times()
    }
    fn span(&self) -> (f64, f64) {
        (self.traj.snapshots[0].t, self.traj.horizon())
    }
    fn max_speed(&self) -> f64 {
        self.max_speed
    }
    fn spacing(&self) -> f64 {
        self.traj.grid().h
    }
    fn periods(&self) -> Option<[f64; 2]> {
        let g = self.traj.grid();
        Some([g.l1(), g.l2()])
    }
    fn depth(&self) -> f64 {
        self.traj.grid().l3()
    }
    fn slot(&self, a: f64, b: f64) -> Slot<'_> {
        let mid = 0.5 * (a + b);
        let (i, _) = self.traj.locate(mid);
        let j = (i + 1).min(self.traj.len() - 1);
        Slot::Window {
            t0: self.traj.snapshots[i].t,
            t1: self.traj.snapshots[j].t,
            lo: self.interpolant(i),
            hi: self.interpolant(j),
            _src: std::marker::PhantomData,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn cyclic_solver_matches_definition() {
        let y: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin()).collect();
        let m = periodic_spline(&y, 0.3);
        let n = y.len();
        for i in 0..n {
            let lhs = m[(i + n - 1) % n] + 4.0 * m[i] + m[(i + 1) % n];
            let rhs = 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]) / 0.09;
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolants_reproduce_linear_fields() {
        let g = make_grid(8, 8, 8, 0.25).unwrap();
        // periodic laterally, linear in x3 and zero at the cap
        let u = VectorField::from_fn(g, |x| [0.3 * (2.0 - x[2]), -0.2 * (2.0 - x[2]), 0.0]);
        for mode in [Interpolation::Trilinear, Interpolation::CubicSpline] {
            let it = Interpolant::new(&u, mode);
            for x in [[0.3, 1.1, 0.4], [1.9, 0.05, 1.2], [0.7, 0.7, 1.5]] {
                let v = it.eval(x);
                assert!((v[0] - 0.3 * (2.0 - x[2])).abs() < 1e-12, "{mode:?} {x:?} {v:?}");
                assert!((v[1] + 0.2 * (2.0 - x[2])).abs() < 1e-12);
                assert!(v[2].abs() < 1e-12);
            }
            assert_eq!(it.eval([0.4, 0.4, 0.0])[2], 0.0);
        }
    }

    #[test]
    fn spline_is_accurate_on_smooth_periodic_data() {
        let l = 2.0;
        let f = |x: [f64; 3]| {
            (2.0 * std::f64::consts::PI * x[0] / l).sin()
                * (2.0 * std::f64::consts::PI * x[1] / l).cos()
                * x[2]
                * (2.0 - x[2])
        };
        let mut errs = Vec::new();
        for n in [16usize, 32] {
            let g = make_grid(n, n, n, l / n as f64).unwrap();
            let u = VectorField::from_fn(g, |x| [f(x), 0.0, 0.0]);
            let it = Interpolant::new(&u, Interpolation::CubicSpline);
            let x = [0.37, 1.23, 0.71];
            errs.push((it.eval(x)[0] - f(x)).abs());
        }
        assert!(errs[1] < errs[0] / 8.0, "{errs:?}");
    }
}

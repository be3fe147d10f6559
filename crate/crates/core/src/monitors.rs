//! Time-weighted energy functionals along a trajectory and the splitting
//! `u = v + w` into a homogeneous part carrying the initial velocity and an
//! inhomogeneous part driven by pressure and forcing.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, Stencil, VectorField};
use crate::norms::hs_norm;
use crate::solver::scheme::{
    convective_divergence, flux_divergence, mass_fluxes, pad_density, pad_velocity, pressure_gradient, robin_factors,
    viscous,
};
use crate::solver::{data_functionals, sigma, DataFunctionals, FluidState, PhysicalParams, Trajectory};

/// `z_t + (grad z) u` by a difference over the gap between `z_a` and `z_b`,
/// with the convective part evaluated from `z_at` and `u`.
fn material(z_a: &VectorField, z_b: &VectorField, dt: f64, z_at: &VectorField, u: &VectorField) -> VectorField {
    let grid = u.grid();
    let jac = Stencil::open().jacobian(z_at);
    VectorField {
        comps: std::array::from_fn(|j| {
            let mut out = ScalarField::zeros(grid);
            for n in 0..grid.len() {
                let un = u.at(n);
                let conv: f64 = (0..3).map(|k| jac.comps[j][k].values[n] * un[k]).sum();
                out.values[n] = (z_b.comps[j].values[n] - z_a.comps[j].values[n]) / dt + conv;
            }
            out
        }),
    }
}

/// Material derivative of each snapshot of `z`, transported by `u`:
/// forward difference at the first snapshot, backward elsewhere.
fn material_series(z: &[&VectorField], u: &[&VectorField], times: &[f64]) -> Vec<VectorField> {
    (0..z.len())
        .map(|i| {
            let (a, b) = if i == 0 { (0, 1) } else { (i - 1, i) };
            material(z[a], z[b], times[b] - times[a], z[i], u[i])
        })
        .collect()
}

fn grad_sq(v: &VectorField) -> f64 {
    let m = Stencil::open().jacobian(v).magnitude();
    m.values.iter().map(|x| x * x).sum::<f64>() * m.grid.cell_volume()
}

fn weighted_sq(rho: &ScalarField, v: &VectorField) -> f64 {
    let g = rho.grid;
    (0..g.len())
        .map(|n| {
            let a = v.at(n);
            rho.values[n] * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
        })
        .sum::<f64>()
        * g.cell_volume()
}

/// Running trapezoid integral of `weight(t) x(t)`, with the time cell that
/// contains `t = 1` split there (`x` interpolated linearly).
fn cumulative(times: &[f64], x: &[f64], weight: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; times.len()];
    for i in 1..times.len() {
        let (a, b) = (times[i - 1], times[i]);
        let (xa, xb) = (x[i - 1], x[i]);
        let piece = if a < 1.0 && 1.0 < b {
            let x1 = xa + (xb - xa) * (1.0 - a) / (b - a);
            0.5 * (1.0 - a) * (weight(a) * xa + weight(1.0) * x1)
                + 0.5 * (b - 1.0) * (weight(1.0) * x1 + weight(b) * xb)
        } else {
            0.5 * (b - a) * (weight(a) * xa + weight(b) * xb)
        };
        out[i] = out[i - 1] + piece;
    }
    out
}

fn running_max(x: &[f64]) -> Vec<f64> {
    let mut m = f64::NEG_INFINITY;
    x.iter()
        .map(|v| {
            m = m.max(*v);
            m
        })
        .collect()
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::invalid(format!("s = {s} outside [0, 1]")))
    }
}

fn check_traj(traj: &Trajectory) -> Result<()> {
    traj.check()?;
    if traj.len() < 2 {
        return Err(Error::invalid("need at least two snapshots"));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub s: f64,
    pub times: Vec<f64>,
    /// `int [rho |u|^2 / 2 + |rho - rho~|^2 + sigma |grad u|^2]`.
    pub e_base: Vec<f64>,
    /// `int_0^t int [|grad u|^2 + sigma^3 |grad u_dot|^2]`.
    pub d_base: Vec<f64>,
    /// `sigma^{1-s} int |grad u|^2`.
    pub a_s: Vec<f64>,
    /// `int_0^t sigma^{1-s} int rho |u_dot|^2`.
    pub b_s: Vec<f64>,
    /// `sigma^{2-s} int rho |u_dot|^2`.
    pub c_s: Vec<f64>,
    /// `int_0^t sigma^{2-s} int |grad u_dot|^2`.
    pub d_s: Vec<f64>,
    pub sup_e_base: Vec<f64>,
    pub sup_a_s: Vec<f64>,
    pub sup_c_s: Vec<f64>,
    pub data: DataFunctionals,
    /// `||u_0||_{H^s}`.
    pub u0_hs: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "t,E_base,D_base,A_s,B_s,C_s,D_s,sup_E_base,sup_A_s,sup_C_s";

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                self.times[i],
                self.e_base[i],
                self.d_base[i],
                self.a_s[i],
                self.b_s[i],
                self.c_s[i],
                self.d_s[i],
                self.sup_e_base[i],
                self.sup_a_s[i],
                self.sup_c_s[i]
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

fn sig(t: f64) -> f64 {
    sigma(t.max(0.0)).unwrap_or(0.0)
}

pub fn energy_report(traj: &Trajectory, s: f64) -> Result<EnergyReport> {
    check_s(s)?;
    check_traj(traj)?;
    let params = &traj.params;
    let t0 = traj.snapshots[0].t;
    let times: Vec<f64> = traj.snapshots.iter().map(|st| st.t - t0).collect();
    let us: Vec<&VectorField> = traj.snapshots.iter().map(|st| &st.u).collect();
    let udot = material_series(&us, &us, &times);

    let n = traj.len();
    let (mut kin, mut grad, mut rho_udot, mut grad_udot) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (i, st) in traj.snapshots.iter().enumerate() {
        let dv = st.grid().cell_volume();
        kin[i] = 0.5 * weighted_sq(&st.rho, &st.u)
            + st.rho.values.iter().map(|r| (r - params.rho_ref).powi(2)).sum::<f64>() * dv;
        grad[i] = grad_sq(&st.u);
        rho_udot[i] = weighted_sq(&st.rho, &udot[i]);
        grad_udot[i] = grad_sq(&udot[i]);
    }
    let e_base: Vec<f64> = (0..n).map(|i| kin[i] + sig(times[i]) * grad[i]).collect();
    let d1 = cumulative(&times, &grad, |_| 1.0);
    let d2 = cumulative(&times, &grad_udot, |t| sig(t).powi(3));
    let d_base: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
    let a_s: Vec<f64> = (0..n).map(|i| sig(times[i]).powf(1.0 - s) * grad[i]).collect();
    let b_s = cumulative(&times, &rho_udot, |t| sig(t).powf(1.0 - s));
    let c_s: Vec<f64> = (0..n).map(|i| sig(times[i]).powf(2.0 - s) * rho_udot[i]).collect();
    let d_s = cumulative(&times, &grad_udot, |t| sig(t).powf(2.0 - s));

    let s0 = &traj.snapshots[0];
    let data = data_functionals(s0, &traj.forcing, params, times[n - 1].max(f64::MIN_POSITIVE))?;
    let u0_hs = s0.u.comps.iter().map(|c| hs_norm(c, s).map(|v| v * v)).sum::<Result<f64>>()?.sqrt();
    Ok(EnergyReport {
        s,
        sup_e_base: running_max(&e_base),
        sup_a_s: running_max(&a_s),
        sup_c_s: running_max(&c_s),
        times,
        e_base,
        d_base,
        a_s,
        b_s,
        c_s,
        d_s,
        data,
        u0_hs,
    })
}

/// Coefficients of the linear operator frozen at one time.
struct Coefficients {
    rho: Vec<f64>,
    fluxes: crate::solver::scheme::Fluxes,
    div_flux: Vec<f64>,
    /// `-grad (P - P~) + rho f`.
    source: [Vec<f64>; 3],
}

fn lerp(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
}

fn coefficients(traj: &Trajectory, t: f64, robin: &[f64]) -> Coefficients {
    let grid = traj.grid();
    let params = &traj.params;
    let (i, w) = traj.locate(t);
    let j = (i + 1).min(traj.len() - 1);
    let (a, b) = (&traj.snapshots[i], &traj.snapshots[j]);
    let rho = lerp(&a.rho.values, &b.rho.values, w);
    let u: Vec<Vec<f64>> = (0..3).map(|c| lerp(&a.u.comps[c].values, &b.u.comps[c].values, w)).collect();
    let up = pad_velocity(grid, [&u[0], &u[1], &u[2]], robin);
    let rp = pad_density(grid, &rho, params.rho_ref);
    let fluxes = mass_fluxes(grid, &rp, &up);
    let div_flux = flux_divergence(grid, &fluxes);
    let mut source = if traj.options.include_pressure {
        let g = pressure_gradient(grid, &rp, params);
        g.map(|c| c.into_iter().map(|v| -v).collect())
    } else {
        [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]]
    };
    if !traj.forcing.is_zero() {
        for n in 0..grid.len() {
            let f = traj.forcing.eval(grid.center_of(n), t);
            for c in 0..3 {
                source[c][n] += rho[n] * f[c];
            }
        }
    }
    Coefficients { rho, fluxes, div_flux, source }
}

/// `z_t` from `rho z_t = -div(F zbar) + z div F + mu Lap z + lambda grad div z (+ S)`.
fn linear_rate(
    grid: Grid,
    z: &[Vec<f64>; 3],
    co: &Coefficients,
    params: &PhysicalParams,
    robin: &[f64],
    with_source: bool,
) -> [Vec<f64>; 3] {
    let zp = pad_velocity(grid, [&z[0], &z[1], &z[2]], robin);
    let visc = viscous(grid, &zp, params.mu, params.lambda);
    std::array::from_fn(|c| {
        let conv = convective_divergence(grid, &co.fluxes, &zp[c]);
        (0..grid.len())
            .map(|n| {
                let mut r = -conv[n] + z[c][n] * co.div_flux[n] + visc[c][n];
                if with_source {
                    r += co.source[c][n];
                }
                r / co.rho[n]
            })
            .collect()
    })
}

fn linear_bound(traj: &Trajectory, t: f64) -> f64 {
    let (i, _) = traj.locate(t);
    let j = (i + 1).min(traj.len() - 1);
    let params = &traj.params;
    let h = traj.grid().h;
    let (a, b) = (&traj.snapshots[i], &traj.snapshots[j]);
    let umax = a.u.magnitude().max().max(b.u.magnitude().max());
    let rho_min = a.rho.min().min(b.rho.min());
    let adv = if umax > 0.0 { 0.4 * h / umax } else { f64::INFINITY };
    adv.min(0.2 * h * h * rho_min / (params.mu + params.lambda))
}

fn to_field(grid: Grid, z: &[Vec<f64>; 3]) -> VectorField {
    VectorField { comps: std::array::from_fn(|c| ScalarField { grid, values: z[c].clone() }) }
}

/// Solves `L v = 0, v(0) = u0` and `L w = -grad(P - P~) + rho f, w(0) = 0`
/// with coefficients read from `traj`; returns the two trajectories (with
/// the base density attached) on the snapshot times of `traj`.
pub fn linear_split_solve(traj: &Trajectory, u0: &VectorField) -> Result<(Trajectory, Trajectory)> {
    check_traj(traj)?;
    let grid = traj.grid();
    grid.ensure_same(&u0.grid())?;
    let params = &traj.params;
    let robin = robin_factors(grid, params);
    let mut v: [Vec<f64>; 3] = std::array::from_fn(|c| u0.comps[c].values.clone());
    let mut w: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.len()]);
    let snap = |z: &[Vec<f64>; 3], k: usize| FluidState {
        rho: traj.snapshots[k].rho.clone(),
        u: to_field(grid, z),
        t: traj.snapshots[k].t,
    };
    let mut vs = vec![snap(&v, 0)];
    let mut ws = vec![snap(&w, 0)];
    let safety = traj.options.cfl_safety;
    for k in 1..traj.len() {
        let mut t = traj.snapshots[k - 1].t;
        let target = traj.snapshots[k].t;
        while target - t > 1e-12 * (target - traj.snapshots[k - 1].t) {
            let remaining = target - t;
            let bound = safety * linear_bound(traj, t);
            let dt = remaining / (remaining / bound).ceil().max(1.0);
            let c1 = coefficients(traj, t, &robin);
            let cm = coefficients(traj, t + 0.5 * dt, &robin);
            for (z, with_source) in [(&mut v, false), (&mut w, true)] {
                let k1 = linear_rate(grid, z, &c1, params, &robin, with_source);
                let mid: [Vec<f64>; 3] =
                    std::array::from_fn(|c| z[c].iter().zip(&k1[c]).map(|(a, d)| a + 0.5 * dt * d).collect());
                let k2 = linear_rate(grid, &mid, &cm, params, &robin, with_source);
                for c in 0..3 {
                    for (a, d) in z[c].iter_mut().zip(&k2[c]) {
                        *a += dt * d;
                    }
                }
            }
            t += dt;
        }
        vs.push(snap(&v, k));
        ws.push(snap(&w, k));
    }
    let wrap = |snapshots| Trajectory {
        params: traj.params,
        forcing: traj.forcing.clone(),
        dt_out: traj.dt_out,
        options: traj.options,
        snapshots,
    };
    Ok((wrap(vs), wrap(ws)))
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub s: f64,
    pub times: Vec<f64>,
    /// `sigma^{1-s} ||grad v||_2^2`.
    pub v_grad: Vec<f64>,
    pub v_grad_sup: Vec<f64>,
    /// `int_0^t int sigma^{1-s} rho |v_dot|^2`.
    pub v_dissipation: Vec<f64>,
    /// `||grad w||_2^2`.
    pub w_grad: Vec<f64>,
    pub w_grad_sup: Vec<f64>,
    /// `int_0^t int rho |w_dot|^2`.
    pub w_dissipation: Vec<f64>,
    /// `||v + w - u||_2`.
    pub reconstruction: Vec<f64>,
    /// `||u||_2`.
    pub u_norm: Vec<f64>,
}

impl SplitReport {
    pub const CSV_HEADER: &'static str =
        "t,v_grad,v_grad_sup,v_dissipation,w_grad,w_grad_sup,w_dissipation,reconstruction,u_norm";

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                self.times[i],
                self.v_grad[i],
                self.v_grad_sup[i],
                self.v_dissipation[i],
                self.w_grad[i],
                self.w_grad_sup[i],
                self.w_dissipation[i],
                self.reconstruction[i],
                self.u_norm[i]
            )?;
        }
        Ok(())
    }

    /// `max_t ||v + w - u||_2 / max_t ||u||_2`.
    pub fn relative_reconstruction(&self) -> f64 {
        let e = self.reconstruction.iter().cloned().fold(0.0, f64::max);
        let u = self.u_norm.iter().cloned().fold(0.0, f64::max);
        if u > 0.0 {
            e / u
        } else {
            e
        }
    }
}

fn l2(v: &VectorField) -> f64 {
    let g = v.grid();
    (0..g.len())
        .map(|n| {
            let a = v.at(n);
            a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
        })
        .sum::<f64>()
        .mul_add(g.cell_volume(), 0.0)
        .sqrt()
}

/// Monitors of the split; material derivatives use the base velocity.
pub fn split_monitors(base: &Trajectory, v: &Trajectory, w: &Trajectory, s: f64) -> Result<SplitReport> {
    check_s(s)?;
    check_traj(base)?;
    if v.len() != base.len() || w.len() != base.len() {
        return Err(Error::invalid("split trajectories do not match the base"));
    }
    let t0 = base.snapshots[0].t;
    let times: Vec<f64> = base.snapshots.iter().map(|st| st.t - t0).collect();
    let us: Vec<&VectorField> = base.snapshots.iter().map(|st| &st.u).collect();
    let vz: Vec<&VectorField> = v.snapshots.iter().map(|st| &st.u).collect();
    let wz: Vec<&VectorField> = w.snapshots.iter().map(|st| &st.u).collect();
    let vdot = material_series(&vz, &us, &times);
    let wdot = material_series(&wz, &us, &times);
    let n = base.len();
    let mut out = SplitReport {
        s,
        times: times.clone(),
        v_grad: vec![0.0; n],
        v_grad_sup: Vec::new(),
        v_dissipation: Vec::new(),
        w_grad: vec![0.0; n],
        w_grad_sup: Vec::new(),
        w_dissipation: Vec::new(),
        reconstruction: vec![0.0; n],
        u_norm: vec![0.0; n],
    };
    let (mut rv, mut rw) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let rho = &base.snapshots[i].rho;
        out.v_grad[i] = sig(times[i]).powf(1.0 - s) * grad_sq(vz[i]);
        out.w_grad[i] = grad_sq(wz[i]);
        rv[i] = weighted_sq(rho, &vdot[i]);
        rw[i] = weighted_sq(rho, &wdot[i]);
        out.reconstruction[i] = l2(&(&(vz[i] + wz[i]) - us[i]));
        out.u_norm[i] = l2(us[i]);
    }
    out.v_grad_sup = running_max(&out.v_grad);
    out.w_grad_sup = running_max(&out.w_grad);
    out.v_dissipation = cumulative(&times, &rv, |t| sig(t).powf(1.0 - s));
    out.w_dissipation = cumulative(&times, &rw, |_| 1.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::solver::{simulate, Forcing, RunOptions};

    fn rest_traj() -> Trajectory {
        let p = PhysicalParams::default();
        let g = make_grid(6, 6, 6, 0.25).unwrap();
        simulate(&FluidState::rest(g, &p), &p, &Forcing::Zero, 0.03, 0.01, &RunOptions::default()).unwrap()
    }

    #[test]
    fn rest_trajectory_has_zero_functionals() {
        let traj = rest_traj();
        let r = energy_report(&traj, 0.6).unwrap();
        for series in [&r.e_base, &r.d_base, &r.a_s, &r.b_s, &r.c_s, &r.d_s] {
            assert!(series.iter().all(|v| *v == 0.0));
        }
        assert!(energy_report(&traj, 1.5).is_err());
        let (v, w) = linear_split_solve(&traj, &VectorField::zeros(traj.grid())).unwrap();
        let m = split_monitors(&traj, &v, &w, 0.5).unwrap();
        assert!(m.v_grad.iter().chain(&m.w_grad).chain(&m.reconstruction).all(|x| *x == 0.0));
    }

    #[test]
    fn split_time_cell_at_one() {
        let times = [0.0, 0.75, 1.5];
        let x = [1.0, 1.0, 1.0];
        let c = cumulative(&times, &x, sig);
        assert!((c[2] - (0.5 + 0.5)).abs() < 1e-15);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};

use super::forcing::Forcing;
use super::params::{validate_params, PhysicalParams};
use super::scheme::{
    convective_divergence, flux_divergence, mass_fluxes, pad_density, pad_velocity, pressure_gradient, robin_factors,
    viscous,
};

#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub rho: ScalarField,
    pub u: VectorField,
    pub t: f64,
}

impl FluidState {
    pub fn new(rho: ScalarField, u: VectorField, t: f64) -> Result<Self> {
        rho.grid.ensure_same(&u.grid())?;
        Ok(FluidState { rho, u, t })
    }

    /// Rest state `(rho~, 0)`.
    pub fn rest(grid: Grid, params: &PhysicalParams) -> Self {
        FluidState { rho: ScalarField::constant(grid, params.rho_ref), u: VectorField::zeros(grid), t: 0.0 }
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }

    pub fn momentum(&self) -> VectorField {
        self.u.map_comps(|c| c.zip_map(&self.rho, |a, r| a * r))
    }

    /// `P(rho) - P(rho~)`.
    pub fn pressure_excess(&self, params: &PhysicalParams) -> ScalarField {
        let pref = params.pressure_ref();
        self.rho.map(|r| params.pressure(r) - pref)
    }
}

/// Knobs of the discrete scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Fraction of the stability bound used by [`simulate`].
    pub cfl_safety: f64,
    /// Drop the pressure gradient (pure viscous-transport runs).
    pub include_pressure: bool,
    /// [`simulate`] aborts with `StepRejected` once the stable step falls
    /// below this floor.
    #[serde(default = "default_min_dt")]
    pub min_dt: f64,
}

fn default_min_dt() -> f64 {
    1e-9
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { cfl_safety: 0.5, include_pressure: true, min_dt: default_min_dt() }
    }
}

/// `min(0.4 h / (|u|_inf + c_max), 0.2 h^2 rho_min / (mu + lambda))`.
pub fn stability_bound(state: &FluidState, params: &PhysicalParams) -> f64 {
    let h = state.grid().h;
    let umax = state.u.magnitude().max();
    let rho_max = state.rho.max();
    let rho_min = state.rho.min();
    let cmax = params.pressure_prime(rho_max.max(0.0)).max(0.0).sqrt();
    let adv = if umax + cmax > 0.0 { 0.4 * h / (umax + cmax) } else { f64::INFINITY };
    let diff = 0.2 * h * h * rho_min / (params.mu + params.lambda);
    adv.min(diff)
}

struct Rates {
    rho: Vec<f64>,
    m: [Vec<f64>; 3],
}

fn rates(
    grid: Grid,
    rho: &[f64],
    m: &[Vec<f64>; 3],
    t: f64,
    params: &PhysicalParams,
    forcing: &Forcing,
    robin: &[f64],
    include_pressure: bool,
) -> Rates {
    let u: Vec<Vec<f64>> = (0..3).map(|c| m[c].iter().zip(rho).map(|(a, r)| a / r).collect()).collect();
    let up = pad_velocity(grid, [&u[0], &u[1], &u[2]], robin);
    let rp = pad_density(grid, rho, params.rho_ref);
    let fl = mass_fluxes(grid, &rp, &up);
    let drho: Vec<f64> = flux_divergence(grid, &fl).into_iter().map(|d| -d).collect();
    let visc = viscous(grid, &up, params.mu, params.lambda);
    let grad_p = include_pressure.then(|| pressure_gradient(grid, &rp, params));
    let mut dm = [Vec::new(), Vec::new(), Vec::new()];
    for c in 0..3 {
        let conv = convective_divergence(grid, &fl, &up[c]);
        let mut out: Vec<f64> = conv.iter().zip(&visc[c]).map(|(cv, v)| v - cv).collect();
        if let Some(g) = &grad_p {
            for (o, gp) in out.iter_mut().zip(&g[c]) {
                *o -= gp;
            }
        }
        dm[c] = out;
    }
    if !forcing.is_zero() {
        for n in 0..grid.len() {
            let f = forcing.eval(grid.center_of(n), t);
            for c in 0..3 {
                dm[c][n] += rho[n] * f[c];
            }
        }
    }
    Rates { rho: drho, m: dm }
}

fn check_density(rho: &[f64], t: f64, params: &PhysicalParams) -> Result<()> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in rho {
        if !r.is_finite() {
            return Err(Error::PositivityFailure { time: t, min_density: f64::NAN });
        }
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if lo <= 0.0 {
        return Err(Error::PositivityFailure { time: t, min_density: lo });
    }
    if hi > params.rho_max {
        return Err(Error::DensityCeiling { time: t, max_density: hi, ceiling: params.rho_max });
    }
    Ok(())
}

/// One explicit midpoint step.
pub fn advance(state: &FluidState, params: &PhysicalParams, forcing: &Forcing, dt: f64) -> Result<FluidState> {
    advance_with(state, params, forcing, dt, &RunOptions::default())
}

pub fn advance_with(
    state: &FluidState,
    params: &PhysicalParams,
    forcing: &Forcing,
    dt: f64,
    opts: &RunOptions,
) -> Result<FluidState> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step {dt} must be positive")));
    }
    let bound = stability_bound(state, params);
    if dt > bound {
        return Err(Error::StepRejected { dt, bound });
    }
    let grid = state.grid();
    let robin = robin_factors(grid, params);
    let rho0 = &state.rho.values;
    let m0 = state.momentum();
    let m0 = [m0.comps[0].values.clone(), m0.comps[1].values.clone(), m0.comps[2].values.clone()];
    let t = state.t;

    let k1 = rates(grid, rho0, &m0, t, params, forcing, &robin, opts.include_pressure);
    let half = 0.5 * dt;
    let rho_mid: Vec<f64> = rho0.iter().zip(&k1.rho).map(|(r, d)| r + half * d).collect();
    check_density(&rho_mid, t + half, params)?;
    let m_mid = std::array::from_fn(|c| m0[c].iter().zip(&k1.m[c]).map(|(m, d)| m + half * d).collect::<Vec<f64>>());
    let k2 = rates(grid, &rho_mid, &m_mid, t + half, params, forcing, &robin, opts.include_pressure);
    let rho1: Vec<f64> = rho0.iter().zip(&k2.rho).map(|(r, d)| r + dt * d).collect();
    check_density(&rho1, t + dt, params)?;
    let u1: [ScalarField; 3] = std::array::from_fn(|c| {
        let v = m0[c].iter().zip(&k2.m[c]).zip(&rho1).map(|((m, d), r)| (m + dt * d) / r).collect();
        ScalarField { grid, values: v }
    });
    Ok(FluidState { rho: ScalarField { grid, values: rho1 }, u: VectorField { comps: u1 }, t: t + dt })
}

/// Snapshots at `k dt_out`, `k = 0..=round(T / dt_out)`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: PhysicalParams,
    pub forcing: Forcing,
    pub dt_out: f64,
    pub options: RunOptions,
    pub snapshots: Vec<FluidState>,
}

impl Trajectory {
    pub fn grid(&self) -> Grid {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn check(&self) -> Result<()> {
        let first = self.snapshots.first().ok_or_else(|| Error::Snapshot("trajectory has no snapshots".into()))?;
        for w in self.snapshots.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Snapshot(format!("times not strictly increasing: {} then {}", w[0].t, w[1].t)));
            }
            first.grid().ensure_same(&w[1].grid())?;
        }
        Ok(())
    }

    /// Bracketing snapshot index `i` and weight `w` with
    /// `t = (1 - w) t_i + w t_{i+1}`.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.snapshots.len();
        if n < 2 || t <= self.snapshots[0].t {
            return (0, 0.0);
        }
        let i = self.snapshots.partition_point(|s| s.t <= t).min(n - 1) - 1;
        let (a, b) = (self.snapshots[i].t, self.snapshots[i + 1].t);
        (i, ((t - a) / (b - a)).clamp(0.0, 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

fn check_initial(state0: &FluidState, params: &PhysicalParams) -> Result<()> {
    validate_params(params)?;
    let lo = state0.rho.min();
    if !(lo > 0.0) {
        return Err(Error::InvalidParams(vec![format!("initial density infimum {lo} must be positive")]));
    }
    let hi = state0.rho.max();
    if hi > params.rho_max1 {
        return Err(Error::InvalidParams(vec![format!(
            "initial density supremum {hi} exceeds rho_max1 = {}",
            params.rho_max1
        )]));
    }
    if !state0.u.is_finite() {
        return Err(Error::InvalidParams(vec!["initial velocity not finite".into()]));
    }
    Ok(())
}

/// Integrate to `horizon`, handing each output snapshot to `on_snapshot`.
pub fn simulate_with(
    state0: &FluidState,
    params: &PhysicalParams,
    forcing: &Forcing,
    horizon: f64,
    dt_out: f64,
    opts: &RunOptions,
    mut on_snapshot: impl FnMut(&FluidState) -> Result<()>,
) -> Result<RunStats> {
    if !(dt_out > 0.0) || !(horizon >= dt_out) {
        return Err(Error::invalid(format!("need 0 < dt_out <= horizon, got dt_out = {dt_out}, horizon = {horizon}")));
    }
    if !(opts.cfl_safety > 0.0 && opts.cfl_safety <= 1.0) {
        return Err(Error::invalid(format!("cfl_safety {} not in (0, 1]", opts.cfl_safety)));
    }
    if !(opts.min_dt >= 0.0) {
        return Err(Error::invalid(format!("min_dt {} must be non-negative", opts.min_dt)));
    }
    check_initial(state0, params)?;
    let outputs = (horizon / dt_out).round() as usize;
    let t0 = state0.t;
    let mut state = state0.clone();
    let mut stats = RunStats { steps: 0, min_dt: f64::INFINITY, max_dt: 0.0 };
    on_snapshot(&state)?;
    for k in 1..=outputs {
        let target = t0 + k as f64 * dt_out;
        while target - state.t > 1e-12 * dt_out {
            let remaining = target - state.t;
            let bound = opts.cfl_safety * stability_bound(&state, params);
            if !(bound >= opts.min_dt) && remaining > opts.min_dt {
                return Err(Error::StepRejected { dt: opts.min_dt, bound });
            }
            let sub = (remaining / bound).ceil().max(1.0);
            let dt = remaining / sub;
            state = advance_with(&state, params, forcing, dt, opts)?;
            stats.steps += 1;
            stats.min_dt = stats.min_dt.min(dt);
            stats.max_dt = stats.max_dt.max(dt);
            log::trace!("t = {:.6} dt = {:.3e}", state.t, dt);
        }
        state.t = target;
        log::debug!("snapshot {k}/{outputs} at t = {target:.4}");
        on_snapshot(&state)?;
    }
    Ok(stats)
}

pub fn simulate(
    state0: &FluidState,
    params: &PhysicalParams,
    forcing: &Forcing,
    horizon: f64,
    dt_out: f64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    simulate_with(state0, params, forcing, horizon, dt_out, opts, |s| {
        snapshots.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory { params: *params, forcing: forcing.clone(), dt_out, options: *opts, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::solver::params::SlipFunction;

    fn grid() -> Grid {
        make_grid(8, 8, 8, 0.25).unwrap()
    }

    fn bumped(params: &PhysicalParams) -> FluidState {
        let g = grid();
        let rho = ScalarField::from_fn(g, |x| {
            params.rho_ref
                * (1.0 + 0.3 * (-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2) + (x[2] - 0.8).powi(2)) / 0.2).exp())
        });
        let u = VectorField::from_fn(g, |x| {
            let s = (-((x[0] - 1.0).powi(2) + (x[2] - 0.6).powi(2))).exp() * 0.2;
            [s, -0.5 * s, 0.1 * s * x[2]]
        });
        FluidState::new(rho, u, 0.0).unwrap()
    }

    #[test]
    fn rest_state_is_exact() {
        let p = PhysicalParams::default();
        let mut s = FluidState::rest(grid(), &p);
        for _ in 0..20 {
            s = advance(&s, &p, &Forcing::Zero, 1e-3).unwrap();
        }
        assert!(s.rho.values.iter().all(|&r| r == p.rho_ref));
        assert!(s.u.max_abs() == 0.0);
        assert!((s.t - 0.02).abs() < 1e-15);
    }

    #[test]
    fn constant_force_accelerates_tangentially() {
        let p = PhysicalParams::default();
        let s0 = FluidState::rest(grid(), &p);
        let eps = 1e-3;
        let dt = 1e-3;
        let s = advance(&s0, &p, &Forcing::Constant { value: [eps, 0.0, 0.0] }, dt).unwrap();
        let interior = s.u.comps[0].at(3, 3, 4);
        assert!((interior - eps * dt).abs() < 1e-3 * eps * dt);
        assert!(s.u.comps[1].max_abs() == 0.0);
        assert!(s.u.comps[2].max_abs() == 0.0);
    }

    #[test]
    fn mass_conserved_per_step() {
        let p = PhysicalParams::default();
        let mut s = bumped(&p);
        let m0 = s.mass();
        for _ in 0..10 {
            let dt = 0.5 * stability_bound(&s, &p);
            s = advance(&s, &p, &Forcing::Zero, dt).unwrap();
        }
        assert!(((s.mass() - m0) / m0).abs() < 1e-13);
    }

    #[test]
    fn oversized_step_rejected() {
        let p = PhysicalParams::default();
        let s = bumped(&p);
        let b = stability_bound(&s, &p);
        assert!(matches!(advance(&s, &p, &Forcing::Zero, 2.0 * b), Err(Error::StepRejected { .. })));
    }

    #[test]
    fn simulate_hits_output_times() {
        let p = PhysicalParams { slip: SlipFunction::constant(0.5), ..PhysicalParams::default() };
        let traj = simulate(&bumped(&p), &p, &Forcing::Zero, 0.02, 0.005, &RunOptions::default()).unwrap();
        assert_eq!(traj.len(), 5);
        traj.check().unwrap();
        for (k, s) in traj.snapshots.iter().enumerate() {
            assert!((s.t - 0.005 * k as f64).abs() < 1e-14);
        }
        let (i, w) = traj.locate(0.0075);
        assert_eq!(i, 1);
        assert!((w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vacuum_initial_data_rejected() {
        let p = PhysicalParams::default();
        let mut s = FluidState::rest(grid(), &p);
        s.rho.values[5] = 0.0;
        assert!(matches!(
            simulate(&s, &p, &Forcing::Zero, 0.01, 0.01, &RunOptions::default()),
            Err(Error::InvalidParams(_))
        ));
    }
}

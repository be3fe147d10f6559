//! Invariant batteries run by `halfslip verify`. Every check is phrased as
//! an error measure that passes when it does not exceed its tolerance.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decomposition::{compute_decomposition, compute_u_p, estimate_ratios};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Axis, FieldRef, ScalarField};
use crate::lagrangian::{
    composition_check, flow_map, holder_regression, ladder_seeds, AnalyticField, FlowOptions, Interpolation,
    TrajectoryField,
};
use crate::monitors::energy_report;
use crate::norms::{boundary_integral_slab, hs_norm, lp_norm, modulus_seminorm, ModulusKind, PairSampler};
use crate::potential::{GreensKernel, Quadrature};
use crate::scenario::ScenarioConfig;
use crate::solver::{advance_with, simulate, stability_bound, FluidState, Forcing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Potential,
    Norms,
    Solver,
    Decomposition,
    Energy,
    Lagrangian,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "potential" => Suite::Potential,
            "norms" => Suite::Norms,
            "solver" => Suite::Solver,
            "decomposition" => Suite::Decomposition,
            "energy" => Suite::Energy,
            "lagrangian" => Suite::Lagrangian,
            "all" => Suite::All,
            other => return Err(Error::invalid(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn verdict(suite: &'static str, name: &str, measured: f64, tolerance: f64) -> Verdict {
    Verdict { suite, name: name.to_string(), measured, tolerance, pass: measured <= tolerance }
}

fn potential_suite(seed: u64) -> Result<Vec<Verdict>> {
    const S: &str = "potential";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt = |z: bool| -> [f64; 3] {
        [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), if z { 0.0 } else { rng.gen_range(0.01..2.0) }]
    };
    let (gd, gn) = (GreensKernel::dirichlet(), GreensKernel::neumann());
    let (mut wall, mut sym, mut flux) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (xw, y, z) = (pt(true), pt(false), pt(false));
        wall = wall.max(gd.eval(xw, y)?.abs());
        for k in [gd, gn] {
            let (a, b) = (k.eval(y, z)?, k.eval(z, y)?);
            sym = sym.max((a - b).abs() / a.abs().max(b.abs()).max(1e-300));
        }
        flux = flux.max(gn.grad_x(xw, y)?[2].abs());
    }
    let g = make_grid(8, 8, 8, 0.25)?;
    let src = ScalarField::from_fn(g, |x| {
        (-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2) + (x[2] - 1.0).powi(2)) * 2.0).exp()
    });
    let params = crate::solver::PhysicalParams::default();
    let one = compute_u_p(&src, &params).u_p;
    let two = compute_u_p(&src.scaled(2.0), &params).u_p;
    let lin = (0..3)
        .map(|c| {
            one.comps[c].values.iter().zip(&two.comps[c].values).map(|(a, b)| (2.0 * a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
        / two.max_abs().max(1e-300);
    let zero = crate::potential::volume_potential(
        &ScalarField::zeros(g),
        Axis::X1,
        crate::potential::BoundaryCondition::Neumann,
        Quadrature::default(),
    )
    .max_abs();
    Ok(vec![
        verdict(S, "dirichlet green function vanishes on the wall", wall, 1e-15),
        verdict(S, "green functions symmetric", sym, 1e-13),
        verdict(S, "neumann normal derivative vanishes on the wall", flux, 1e-15),
        verdict(S, "pressure velocity linear in its source", lin, 1e-13),
        verdict(S, "volume potential of zero data", zero, 0.0),
    ])
}

fn norms_suite(seed: u64) -> Result<Vec<Verdict>> {
    const S: &str = "norms";
    let g = make_grid(16, 16, 16, 0.125)?;
    let f = ScalarField::from_fn(g, |x| {
        (-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2) + (x[2] - 0.8).powi(2)) * 3.0).exp()
    });
    let hs0 = (hs_norm(&f, 0.0)? - lp_norm(&f, 2.0)?).abs() / lp_norm(&f, 2.0)?;
    let sampler = PairSampler { seed, ..PairSampler::default() };
    let ll = modulus_seminorm(FieldRef::Scalar(&f), ModulusKind::LogLipschitz, &sampler);
    let lip = modulus_seminorm(FieldRef::Scalar(&f), ModulusKind::Lipschitz, &sampler);
    let slab_grid = make_grid(8, 8, 160, 0.0625)?;
    let phi = |y: [f64; 3]| 1.0 + 0.1 * y[1];
    let hfield = ScalarField::from_fn(slab_grid, |x| phi(x) * (-x[2]).exp());
    let (lhs, rhs) = boundary_integral_slab(&hfield)?;
    let exact = slab_grid.l1() * slab_grid.l2() * (1.0 + 0.05 * slab_grid.l2());
    Ok(vec![
        verdict(S, "H^0 norm equals L2 norm", hs0, 1e-12),
        verdict(S, "log-Lipschitz seminorm at most Lipschitz", (ll.norm() - lip.norm()).max(0.0), 0.0),
        verdict(S, "slab identity sides agree", (lhs - rhs).abs() / rhs.abs(), 1e-2),
        verdict(S, "slab identity matches closed form", (lhs - exact).abs() / exact, 1e-2),
    ])
}

fn solver_suite(cfg: &ScenarioConfig) -> Result<Vec<Verdict>> {
    const S: &str = "solver";
    let grid = cfg.grid.build()?;
    let params = &cfg.params;
    let opts = cfg.run_options();
    let mut rest = FluidState::rest(grid, params);
    let dt = opts.cfl_safety * stability_bound(&rest, params);
    for _ in 0..100 {
        rest = advance_with(&rest, params, &Forcing::Zero, dt, &opts)?;
    }
    let drift_rest = rest.rho.values.iter().map(|r| (r - params.rho_ref).abs()).fold(0.0, f64::max) + rest.u.max_abs();
    let s0 = cfg.initial_state()?;
    let horizon = (10.0 * cfg.run.dt_out).min(cfg.run.horizon);
    let traj = simulate(&s0, params, &cfg.forcing, horizon, cfg.run.dt_out, &opts)?;
    let m0 = s0.mass();
    let drift = (traj.snapshots.last().unwrap().mass() - m0).abs() / m0 / horizon;
    Ok(vec![
        verdict(S, "rest state preserved over 100 steps", drift_rest, 0.0),
        verdict(S, "relative mass drift per unit time", drift, 1e-10),
    ])
}

fn decomposition_suite(cfg: &ScenarioConfig) -> Result<Vec<Verdict>> {
    const S: &str = "decomposition";
    let s = cfg.initial_state()?;
    let d = compute_decomposition(&s, &cfg.params)?;
    let back = &d.u_p + &d.u_fw;
    let mut rec = 0.0f64;
    for c in 0..3 {
        for (a, b) in back.comps[c].values.iter().zip(&s.u.comps[c].values) {
            rec = rec.max((a - b).abs() / s.u.max_abs().max(1e-300));
        }
    }
    let mut anti = 0.0f64;
    for j in 0..3 {
        for k in 0..3 {
            for (a, b) in d.vorticity.comps[j][k].values.iter().zip(&d.vorticity.comps[k][j].values) {
                anti = anti.max((a + b).abs());
            }
        }
    }
    let rows = estimate_ratios(&d, &s, &[2.0, 4.0])?;
    let nonfinite = rows.iter().flat_map(|r| r.values()).filter(|v| v.is_some_and(|x| !x.is_finite())).count();
    Ok(vec![
        verdict(S, "u_P + u_Fw reconstructs u", rec, 1e-13),
        verdict(S, "vorticity antisymmetric", anti, 0.0),
        verdict(S, "non-finite estimate ratios", nonfinite as f64, 0.0),
    ])
}

fn energy_suite(cfg: &ScenarioConfig) -> Result<Vec<Verdict>> {
    const S: &str = "energy";
    let s0 = cfg.initial_state()?;
    let horizon = (10.0 * cfg.run.dt_out).min(cfg.run.horizon);
    let traj = simulate(&s0, &cfg.params, &cfg.forcing, horizon, cfg.run.dt_out, &cfg.run_options())?;
    let r = energy_report(&traj, cfg.run.s)?;
    let decrease = [&r.d_base, &r.b_s, &r.d_s]
        .iter()
        .flat_map(|v| v.windows(2).map(|w| (w[0] - w[1]).max(0.0)))
        .fold(0.0, f64::max);
    let nonfinite = [&r.e_base, &r.d_base, &r.a_s, &r.b_s, &r.c_s, &r.d_s]
        .iter()
        .flat_map(|v| v.iter())
        .filter(|x| !x.is_finite())
        .count();
    let full = energy_report(&traj, 1.0)?;
    let order = r
        .times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t <= 1.0)
        .map(|(i, _)| (r.a_s[i] - full.a_s[i]).max(0.0))
        .fold(0.0, f64::max);
    Ok(vec![
        verdict(S, "cumulative dissipation non-decreasing", decrease, 0.0),
        verdict(S, "non-finite monitor entries", nonfinite as f64, 0.0),
        verdict(S, "weighted gradient ordered in s before t = 1", order, 0.0),
    ])
}

fn lagrangian_suite(cfg: &ScenarioConfig) -> Result<Vec<Verdict>> {
    const S: &str = "lagrangian";
    let s0 = cfg.initial_state()?;
    let horizon = (10.0 * cfg.run.dt_out).min(cfg.run.horizon);
    let traj = simulate(&s0, &cfg.params, &cfg.forcing, horizon, cfg.run.dt_out, &cfg.run_options())?;
    let grid = traj.grid();
    let src = TrajectoryField::new(&traj, Interpolation::Trilinear)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let wall: Vec<[f64; 3]> =
        (0..64).map(|_| [rng.gen_range(0.0..grid.l1()), rng.gen_range(0.0..grid.l2()), 0.0]).collect();
    let times: Vec<f64> = traj.times()[1..].to_vec();
    let fm = flow_map(&src, &wall, 0.0, &times, &FlowOptions::default())?;
    let lift = fm.positions.iter().flatten().map(|p| p[2].abs()).fold(0.0, f64::max);
    let id = fm
        .at_time(0.0)
        .unwrap()
        .iter()
        .zip(&wall)
        .map(|(a, b)| (a[0] - b[0]).abs() + (a[1] - b[1]).abs())
        .fold(0.0, f64::max);
    let constant = AnalyticField::new(|_, _| [0.3, -0.2, 0.1], (0.0, 1.0), 0.4);
    let comp = composition_check(&constant, [0.5, 0.5, 0.5], 0.37, 0.91, &FlowOptions::default())?;
    let still = AnalyticField::new(|_, _| [0.0; 3], (0.0, 1.0), 0.0);
    let seeds = ladder_seeds(&[[1.0, 1.0, 1.0], [1.5, 0.5, 1.2]], 10, cfg.run.seed);
    let fit = holder_regression(&flow_map(&still, &seeds, 0.0, &[1.0], &FlowOptions::default())?, 0.0, 1.0)?;
    Ok(vec![
        verdict(S, "wall seeds stay on the wall", lift, 1e-10),
        verdict(S, "flow map is the identity at t0", id, 0.0),
        verdict(S, "composition error for a constant field", comp, 1e-12),
        verdict(S, "identity flow has exponent one", (fit.exponent - 1.0).abs(), 1e-12),
    ])
}

/// Runs a suite (or all of them) against a scenario configuration.
pub fn verify_suite(suite: Suite, cfg: &ScenarioConfig) -> Result<Vec<Verdict>> {
    cfg.validate()?;
    let seed = cfg.run.seed;
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Potential {
        out.extend(potential_suite(seed)?);
    }
    if all || suite == Suite::Norms {
        out.extend(norms_suite(seed)?);
    }
    if all || suite == Suite::Solver {
        out.extend(solver_suite(cfg)?);
    }
    if all || suite == Suite::Decomposition {
        out.extend(decomposition_suite(cfg)?);
    }
    if all || suite == Suite::Energy {
        out.extend(energy_suite(cfg)?);
    }
    if all || suite == Suite::Lagrangian {
        out.extend(lagrangian_suite(cfg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{GridSpec, REFERENCE_CONFIG};

    #[test]
    fn all_suites_pass_on_a_coarse_reference() {
        let mut cfg = ScenarioConfig::from_toml(REFERENCE_CONFIG).unwrap();
        cfg.grid = GridSpec { nx: 12, ny: 12, nz: 12, h: 4.0 / 12.0 };
        let out = verify_suite(Suite::All, &cfg).unwrap();
        for v in &out {
            println!("{} {} {:e} <= {:e}", v.suite, v.name, v.measured, v.tolerance);
        }
        assert!(out.iter().all(|v| v.pass));
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::InvalidArgument(_))));
    }
}

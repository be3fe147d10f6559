use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MatrixField, ScalarField, Stencil, VectorField};
use crate::norms::{lp_norm, lp_norm_vector};

use super::forcing::Forcing;
use super::params::{eos_eval, sigma, Eos, PhysicalParams};
use super::state::FluidState;

const TIME_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataFunctionals {
    pub c0: f64,
    pub cf: f64,
    pub mq: f64,
}

/// Trapezoid nodes and weights on `[0, T]`, refined separately on `[0, 1]`
/// and `[1, T]` so the kink of `sigma` sits on a node.
fn time_rule(horizon: f64) -> Vec<(f64, f64)> {
    let mut pieces = vec![(0.0, horizon.min(1.0))];
    if horizon > 1.0 {
        pieces.push((1.0, horizon));
    }
    let mut out = Vec::new();
    for (a, b) in pieces {
        let dt = (b - a) / TIME_SAMPLES as f64;
        for i in 0..=TIME_SAMPLES {
            let w = if i == 0 || i == TIME_SAMPLES { 0.5 * dt } else { dt };
            out.push((a + i as f64 * dt, w));
        }
    }
    out
}

fn forcing_norms(forcing: &Forcing, grid: Grid, t: f64, q: f64, horizon: f64) -> Result<[f64; 6]> {
    let f = forcing.sample(grid, t);
    let l2 = lp_norm_vector(&f, 2.0)?;
    let lq = lp_norm_vector(&f, q)?;
    let st = Stencil::open();
    let grad = st.jacobian(&f);
    let grad4 = lp_norm(&grad.magnitude(), 4.0)?;
    let dt = 1e-4 * horizon.max(1.0);
    let (a, b) = if t >= dt { (t - dt, t + dt) } else { (t, t + dt) };
    let ft = (&forcing.sample(grid, b) - &forcing.sample(grid, a)).scaled(1.0 / (b - a));
    let ft2 = lp_norm_vector(&ft, 2.0)?;
    Ok([l2, lq, grad4, ft2, l2 * l2, lq.powf(q)])
}

/// `(C0, Cf, Mq)` of the initial data and forcing over `[0, T]`.
pub fn data_functionals(
    state0: &FluidState,
    forcing: &Forcing,
    params: &PhysicalParams,
    horizon: f64,
) -> Result<DataFunctionals> {
    if !(horizon > 0.0) {
        return Err(Error::invalid(format!("horizon {horizon} must be positive")));
    }
    let grid = state0.grid();
    let q = params.q;
    let mut c0 = 0.0;
    let mut kin_q = 0.0;
    for n in 0..grid.len() {
        let r = state0.rho.values[n];
        let u = state0.u.at(n);
        let s2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        c0 += 0.5 * r * s2 + eos_eval(params, r, Eos::G)?;
        kin_q += r * s2.sqrt().powf(q);
    }
    c0 *= grid.cell_volume();
    kin_q *= grid.cell_volume();
    if forcing.is_zero() {
        return Ok(DataFunctionals { c0, cf: 0.0, mq: kin_q });
    }
    let (mut sup2, mut supq, mut int1, mut int2, mut intq) = (0.0f64, 0.0f64, 0.0, 0.0, 0.0);
    for (t, w) in time_rule(horizon) {
        let [l2, lq, grad4, ft2, l2sq, lqq] = forcing_norms(forcing, grid, t, q, horizon)?;
        let s = sigma(t)?;
        sup2 = sup2.max(l2);
        supq = supq.max(lq);
        int1 += w * (l2 + s.powi(7) * grad4);
        int2 += w * (l2sq + s.powi(5) * ft2 * ft2);
        intq += w * lqq;
    }
    Ok(DataFunctionals { c0, cf: sup2 + int1 + int2, mq: kin_q + supq + intq })
}

#[derive(Clone, Debug)]
pub struct DerivedFields {
    /// Effective viscous flux `(lambda + mu) div u - P(rho) + P(rho~)`.
    pub flux: ScalarField,
    /// `omega[j][k] = d_k u^j - d_j u^k`.
    pub vorticity: MatrixField,
    /// Convective derivative `u_t + (grad u) u`.
    pub material: VectorField,
}

pub(crate) fn effective_flux(state: &FluidState, params: &PhysicalParams) -> ScalarField {
    let div = Stencil::open().divergence(&state.u);
    let pref = params.pressure_ref();
    let lm = params.lambda + params.mu;
    let mut out = div;
    for (o, r) in out.values.iter_mut().zip(&state.rho.values) {
        *o = lm * *o - params.pressure(*r) + pref;
    }
    out
}

pub(crate) fn vorticity_of(jac: &MatrixField) -> MatrixField {
    let grid = jac.grid();
    let comps = std::array::from_fn(|j| {
        std::array::from_fn(|k| if j == k { ScalarField::zeros(grid) } else { &jac.comps[j][k] - &jac.comps[k][j] })
    });
    MatrixField { comps }
}

pub fn derived_fields(prev: &FluidState, next: &FluidState, params: &PhysicalParams) -> Result<DerivedFields> {
    prev.grid().ensure_same(&next.grid()).map_err(|e| Error::invalid(e.to_string()))?;
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("snapshot gap {dt} must be positive")));
    }
    let grid = next.grid();
    let jac = Stencil::open().jacobian(&next.u);
    let material = VectorField {
        comps: std::array::from_fn(|j| {
            let mut v = ScalarField::zeros(grid);
            for n in 0..grid.len() {
                let u = next.u.at(n);
                let conv: f64 = (0..3).map(|k| jac.comps[j][k].values[n] * u[k]).sum();
                v.values[n] = (next.u.comps[j].values[n] - prev.u.comps[j].values[n]) / dt + conv;
            }
            v
        }),
    };
    Ok(DerivedFields { flux: effective_flux(next, params), vorticity: vorticity_of(&jac), material })
}

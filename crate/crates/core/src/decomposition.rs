//! Splitting of the velocity into a pressure-driven part `u_P` and the
//! remainder `u_Fw = u - u_P`, which is governed by the effective viscous
//! flux and the vorticity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    boundary_trace, wall_normal_derivative, Axis, BoundaryField, MatrixField, Parity, ScalarField, Stencil, VectorField,
};
use crate::norms::interior_lp;
use crate::potential::{kernel_convolution, Quadrature};
use crate::solver::functionals::{effective_flux, vorticity_of};
use crate::solver::{FluidState, PhysicalParams};

/// Cells dropped at tile edges when measuring interior norms.
pub const MARGIN: usize = 2;

/// Wall values that vanish for the exact `u_P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WallDiagnostics {
    /// `max |u_P^3|` on the wall.
    pub normal: f64,
    /// `max |d_3 u_P^j|` on the wall, `j = 1, 2`.
    pub shear: [f64; 2],
}

impl WallDiagnostics {
    pub fn max(&self) -> f64 {
        self.normal.max(self.shear[0]).max(self.shear[1])
    }
}

#[derive(Clone, Debug)]
pub struct PressureVelocity {
    pub u_p: VectorField,
    pub wall: WallDiagnostics,
}

/// `(lambda + mu) u_P^j = int (G(x, y))_{y_j} (P - P~)(y) dy` with the
/// Neumann Green function for `j = 1, 2` and the Dirichlet one for `j = 3`.
/// Both reduce to convolution with `d_j Gamma` against the even reflection.
pub fn compute_u_p(pressure_excess: &ScalarField, params: &PhysicalParams) -> PressureVelocity {
    compute_u_p_with(pressure_excess, params, Quadrature::default())
}

pub fn compute_u_p_with(pressure_excess: &ScalarField, params: &PhysicalParams, quad: Quadrature) -> PressureVelocity {
    let scale = -1.0 / (params.lambda + params.mu);
    let mut c =
        kernel_convolution(pressure_excess, Parity::Even, &Axis::ALL, quad).into_iter().map(|f| f.scaled(scale));
    let u_p = VectorField { comps: [c.next().unwrap(), c.next().unwrap(), c.next().unwrap()] };
    let wall = wall_diagnostics(&u_p);
    PressureVelocity { u_p, wall }
}

pub fn wall_diagnostics(u_p: &VectorField) -> WallDiagnostics {
    WallDiagnostics {
        normal: boundary_trace(&u_p.comps[2]).max_abs(),
        shear: [wall_normal_derivative(&u_p.comps[0]).max_abs(), wall_normal_derivative(&u_p.comps[1]).max_abs()],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// Interior L2 norm of `(l+m) Lap u_Fw - grad F - (l+m) sum_k d_k w^{.k}`.
    pub interior: f64,
    /// The same divided by the interior L2 norm of `grad (P - P~)`.
    pub interior_relative: f64,
    /// Wall L2 norm of `u_Fw^3`.
    pub wall_normal: f64,
    /// Wall L2 norm of `d_3 u_Fw^j - u^j / K`, `j = 1, 2`.
    pub wall_slip: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub u_p: VectorField,
    pub u_fw: VectorField,
    pub flux: ScalarField,
    pub vorticity: MatrixField,
    pub pressure_excess: ScalarField,
    pub wall: WallDiagnostics,
    pub residuals: Residuals,
}

pub fn compute_decomposition(state: &FluidState, params: &PhysicalParams) -> Result<DecompositionResult> {
    let grid = state.grid();
    if grid.nz < 3 {
        return Err(Error::invalid("decomposition needs at least three layers"));
    }
    let pe = state.pressure_excess(params);
    let PressureVelocity { u_p, wall } = compute_u_p(&pe, params);
    let u_fw = &state.u - &u_p;
    let st = Stencil::open();
    let flux = effective_flux(state, params);
    let vorticity = vorticity_of(&st.jacobian(&state.u));

    let lm = params.lambda + params.mu;
    let grad_f = st.gradient(&flux);
    let grad_pe = st.gradient(&pe);
    let mut res = Vec::with_capacity(3);
    for j in 0..3 {
        let mut r = st.laplacian(&u_fw.comps[j]).scaled(lm);
        r = &r - &grad_f.comps[j];
        for k in 0..3 {
            if k != j {
                r = &r - &st.partial(&vorticity.comps[j][k], Axis::from_index(k)).scaled(lm);
            }
        }
        res.push(r);
    }
    let sq = |fs: &[ScalarField]| -> f64 { fs.iter().map(|f| interior_lp(f, 2.0, MARGIN).powi(2)).sum::<f64>().sqrt() };
    let interior = sq(&res);
    let denom = sq(&grad_pe.comps);

    let slip: [f64; 2] = std::array::from_fn(|j| {
        let d = wall_normal_derivative(&u_fw.comps[j]);
        let tr = boundary_trace(&state.u.comps[j]);
        let periods = [grid.l1(), grid.l2()];
        let mut diff = BoundaryField::zeros(grid);
        for jj in 0..grid.ny {
            for i in 0..grid.nx {
                let n = i + grid.nx * jj;
                let k = params.slip.eval([grid.x1(i), grid.x2(jj)], periods);
                diff.values[n] = d.values[n] - tr.values[n] / k;
            }
        }
        diff.l2_norm()
    });
    let residuals = Residuals {
        interior,
        interior_relative: if denom > 0.0 { interior / denom } else { 0.0 },
        wall_normal: boundary_trace(&u_fw.comps[2]).l2_norm(),
        wall_slip: slip,
    };
    Ok(DecompositionResult { u_p, u_fw, flux, vorticity, pressure_excess: pe, wall, residuals })
}

/// One row of estimate ratios; `None` marks a zero denominator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub p: f64,
    pub grad_u_p: Option<f64>,
    pub grad_u_fw: Option<f64>,
    pub hess_u_fw: Option<f64>,
}

impl RatioRow {
    pub const CSV_HEADER: &'static str = "p,grad_u_p,grad_u_fw,hess_u_fw";

    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.10e}"));
        format!("{},{},{},{}", self.p, f(self.grad_u_p), f(self.grad_u_fw), f(self.hess_u_fw))
    }

    pub fn values(&self) -> [Option<f64>; 3] {
        [self.grad_u_p, self.grad_u_fw, self.hess_u_fw]
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn magnitude_of(fields: &[&ScalarField]) -> ScalarField {
    let grid = fields[0].grid;
    let mut out = ScalarField::zeros(grid);
    for f in fields {
        for (o, v) in out.values.iter_mut().zip(&f.values) {
            *o += v * v;
        }
    }
    out.map(f64::sqrt)
}

/// `|grad M|` for a matrix field, summed over all entries and directions.
fn matrix_gradient_magnitude(m: &MatrixField, st: &Stencil) -> ScalarField {
    let parts: Vec<ScalarField> = m.comps.iter().flatten().flat_map(|c| st.gradient(c).comps).collect();
    magnitude_of(&parts.iter().collect::<Vec<_>>())
}

pub fn estimate_ratios(result: &DecompositionResult, state: &FluidState, p_list: &[f64]) -> Result<Vec<RatioRow>> {
    if let Some(p) = p_list.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
        return Err(Error::invalid(format!("exponent {p} outside (1, inf)")));
    }
    let st = Stencil::open();
    let grad_up = st.jacobian(&result.u_p).magnitude();
    let jac_fw = st.jacobian(&result.u_fw);
    let grad_fw = jac_fw.magnitude();
    let hess_fw = matrix_gradient_magnitude(&jac_fw, &st);
    let grad_flux = st.gradient(&result.flux).magnitude();
    let grad_w = matrix_gradient_magnitude(&result.vorticity, &st);
    let w = result.vorticity.magnitude();
    let u = state.u.magnitude();
    let pe = result.pressure_excess.map(f64::abs);
    Ok(p_list
        .iter()
        .map(|&p| {
            let n = |f: &ScalarField| interior_lp(f, p, 0);
            let (npe, nf, nw, nu) = (n(&pe), n(&result.flux), n(&w), n(&u));
            RatioRow {
                p,
                grad_u_p: ratio(n(&grad_up), npe),
                grad_u_fw: ratio(n(&grad_fw), nf + nw + npe + nu),
                hess_u_fw: ratio(n(&hess_fw), n(&grad_flux) + n(&grad_w) + nf + nw + npe + nu),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Grid};

    fn grid() -> Grid {
        make_grid(12, 12, 8, 0.25).unwrap()
    }

    fn state(alpha: f64) -> FluidState {
        let g = grid();
        let rho = ScalarField::from_fn(g, |x| {
            1.0 + 0.2 * (-((x[0] - 1.5).powi(2) + (x[1] - 1.5).powi(2) + (x[2] - 1.0).powi(2)) * 3.0).exp()
        });
        let u = VectorField::from_fn(g, |x| {
            let s = alpha * (-((x[0] - 1.5).powi(2) + (x[1] - 1.4).powi(2) + (x[2] - 0.9).powi(2)) * 2.0).exp();
            [s, -0.5 * s, 0.3 * s]
        });
        FluidState::new(rho, u, 0.0).unwrap()
    }

    #[test]
    fn rest_state_decomposes_to_zero() {
        let p = PhysicalParams::default();
        let s = FluidState::rest(grid(), &p);
        let d = compute_decomposition(&s, &p).unwrap();
        assert_eq!(d.u_p.max_abs(), 0.0);
        assert_eq!(d.u_fw.max_abs(), 0.0);
        assert_eq!(d.residuals.interior, 0.0);
        let rows = estimate_ratios(&d, &s, &[2.0, 4.0]).unwrap();
        assert!(rows.iter().all(|r| r.values().iter().all(Option::is_none)));
    }

    #[test]
    fn reconstruction_and_linearity() {
        let p = PhysicalParams::default();
        let s = state(0.1);
        let d = compute_decomposition(&s, &p).unwrap();
        let back = &d.u_p + &d.u_fw;
        for c in 0..3 {
            for (a, b) in back.comps[c].values.iter().zip(&s.u.comps[c].values) {
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-300) + 1e-17);
            }
        }
        let pe = s.pressure_excess(&p);
        let one = compute_u_p(&pe, &p).u_p;
        let two = compute_u_p(&pe.scaled(2.0), &p).u_p;
        for c in 0..3 {
            for (a, b) in one.comps[c].values.iter().zip(&two.comps[c].values) {
                assert!((2.0 * a - b).abs() <= 1e-14 * b.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn ratios_invariant_under_velocity_scaling_at_reference_density() {
        let p = PhysicalParams::default();
        let base = state(0.1);
        let mk = |a: f64| FluidState::new(ScalarField::constant(grid(), p.rho_ref), base.u.scaled(a), 0.0).unwrap();
        let (s1, s2) = (mk(1.0), mk(3.0));
        let r1 = estimate_ratios(&compute_decomposition(&s1, &p).unwrap(), &s1, &[2.0]).unwrap()[0];
        let r2 = estimate_ratios(&compute_decomposition(&s2, &p).unwrap(), &s2, &[2.0]).unwrap()[0];
        assert!(r1.grad_u_p.is_none());
        assert!((r1.grad_u_fw.unwrap() - r2.grad_u_fw.unwrap()).abs() < 1e-12);
        assert!((r1.hess_u_fw.unwrap() - r2.hess_u_fw.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bad_exponent_rejected() {
        let p = PhysicalParams::default();
        let s = state(0.1);
        let d = compute_decomposition(&s, &p).unwrap();
        assert!(estimate_ratios(&d, &s, &[1.0]).is_err());
    }
}

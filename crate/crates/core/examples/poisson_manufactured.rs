//! Manufactured Dirichlet problem `-Lap v = d_3 g`, `v = 0` on the wall, with
//! `v* = x3 exp(-|x - c|^2)`. Prints the L2 error and the observed order.

use halfslip::grid::{make_grid, Axis, BoundaryField, ScalarField};
use halfslip::norms::lp_norm;
use halfslip::potential::{solve_poisson_halfspace, BoundaryCondition};

fn erfc(x: f64) -> f64 {
    let n = 4000;
    let h = 12.0 / n as f64;
    let f = |t: f64| (-t * t).exp();
    let inner: f64 = (1..n).map(|i| f(x + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(x) + f(x + 12.0) + inner) * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
}

fn main() -> halfslip::Result<()> {
    let c = [3.0, 3.0, 1.5];
    let w = |z: f64| -(0.5 * (-(z - c[2]).powi(2)).exp() + 0.5 * c[2] * std::f64::consts::PI.sqrt() * erfc(z - c[2]));
    let w2 = |z: f64| (1.0 - 2.0 * z * (z - c[2])) * (-(z - c[2]).powi(2)).exp();
    let mut prev: Option<f64> = None;
    for n in [8usize, 16, 32] {
        let g = make_grid(n, n, n, 6.0 / n as f64)?;
        let r2 = |x: [f64; 3]| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        let src = ScalarField::from_fn(g, |x| -(-r2(x)).exp() * ((4.0 * r2(x) - 4.0) * w(x[2]) + w2(x[2])));
        let exact = ScalarField::from_fn(g, |x| x[2] * (-(r2(x) + (x[2] - c[2]).powi(2))).exp());
        let sol = solve_poisson_halfspace(&src, Axis::X3, &BoundaryField::zeros(g), BoundaryCondition::Dirichlet)?;
        let err = lp_norm(&(&sol.v - &exact), 2.0)?;
        let order = prev.map_or(String::new(), |p| format!("  order {:.2}", (p / err).log2()));
        println!("n = {n:>2}  h = {:.4}  L2 error {err:.3e}  residual {:.2e}{order}", g.h, sol.relative_residual);
        prev = Some(err);
    }
    Ok(())
}

//! Lebesgue, fractional Sobolev and log-Lipschitz functionals, the slab
//! identity and the interpolation inequality ratios.

use halfslip::grid::{make_grid, FieldRef, ScalarField, VectorField};
use halfslip::norms::{
    boundary_integral_slab, hs_norm, inequality_check, lp_norm, modulus_seminorm, InequalityKind, ModulusKind,
    PairSampler, RatioReport,
};

fn main() -> halfslip::Result<()> {
    let g = make_grid(16, 16, 16, 0.25)?;
    let f = ScalarField::from_fn(g, |x| (-((x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2) + (x[2] - 1.0).powi(2))).exp());
    println!("L2 {:.6}  L4 {:.6}  Linf {:.6}", lp_norm(&f, 2.0)?, lp_norm(&f, 4.0)?, lp_norm(&f, f64::INFINITY)?);
    for s in [0.0, 0.5, 1.0] {
        println!("H^{s} = {:.6}", hs_norm(&f, s)?);
    }

    // r (1 - ln r) at the wall: log-Lipschitz but not Lipschitz
    let ll = ScalarField::from_fn(g, |x| {
        let r = x[2].min(1.0);
        r * (1.0 - r.ln())
    });
    let sampler = PairSampler::default();
    for kind in [ModulusKind::LogLipschitz, ModulusKind::Lipschitz] {
        let r = modulus_seminorm(FieldRef::Scalar(&ll), kind, &sampler);
        println!("{kind:?}: seminorm {:.4} over {} pairs", r.seminorm, r.pairs);
    }

    let slab = make_grid(16, 16, 32, 1.0 / 16.0)?;
    let h = ScalarField::from_fn(slab, |x| (-x[2]).exp() * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x[0]).cos()));
    let (lhs, rhs) = boundary_integral_slab(&h)?;
    println!("slab identity: wall {lhs:.6}  layer {rhs:.6}  exact 1");

    let u = VectorField::from_fn(g, |x| {
        let e = (-((x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2) + (x[2] - 1.5).powi(2))).exp();
        [e, -0.5 * e, 0.2 * e]
    });
    println!("{}", RatioReport::CSV_HEADER);
    for (kind, p) in [(InequalityKind::Interp, 2.0), (InequalityKind::Interp, 6.0), (InequalityKind::Embed, 4.0)] {
        println!("{}", inequality_check(FieldRef::Vector(&u), kind, p)?.csv_row());
    }
    Ok(())
}

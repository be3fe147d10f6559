//! Particle paths of an analytic field: wall seeds stay on the wall, a
//! Lipschitz field gives Hölder exponent one, and the log-Lipschitz field
//! `(0, 0, psi(x3))` separates paths like the Osgood bound.

use halfslip::lagrangian::{
    flow_map, holder_regression, integrate_path, ladder_seeds, osgood_bound, AnalyticField, FlowOptions,
};

fn psi(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r <= 1.0 {
        r * (1.0 - r.ln())
    } else {
        1.0
    }
}

fn main() -> halfslip::Result<()> {
    let opts = FlowOptions::default();
    let smooth = AnalyticField::new(
        |x, t| [0.5 * x[1].sin(), 0.3 * (x[0] + t).cos(), 0.2 * x[2] * (-x[2]).exp() * x[0].sin()],
        (0.0, 1.0),
        0.6,
    );
    let wall = [[0.3, 0.1, 0.0], [1.7, 2.2, 0.0]];
    let fm = flow_map(&smooth, &wall, 0.0, &[0.5, 1.0], &opts)?;
    println!("wall seeds at t = 1: {:?}", fm.at_time(1.0).unwrap());

    let seeds = ladder_seeds(&[[2.0, 2.0, 1.5], [1.0, 3.0, 2.0]], 12, 0);
    let fit = holder_regression(&flow_map(&smooth, &seeds, 0.0, &[1.0], &opts)?, 0.0, 1.0)?;
    println!("Lipschitz field: exponent {:.4} (raw {:.4}, {} pairs)", fit.exponent, fit.raw_slope, fit.pairs);

    let osgood = AnalyticField::new(|x, _| [0.0, 0.0, psi(x[2])], (0.0, 1.5), 1.0).with_spacing(1e-3);
    for t in [0.5, 1.0, 1.5] {
        for delta in [1e-2, 1e-4] {
            let x = integrate_path(&osgood, [0.0, 0.0, delta], 0.0, t, &opts)?;
            println!("t = {t}: delta {delta:.0e} -> {:.6e}, bound {:.6e}", x[2], osgood_bound(delta, t));
        }
    }
    Ok(())
}

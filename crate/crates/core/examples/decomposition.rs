//! Splitting a velocity into the pressure part `u_P` and the effective-flux
//! part `u_Fw`, with wall diagnostics, residuals and estimate ratios.

use halfslip::decomposition::{compute_decomposition, estimate_ratios, RatioRow};
use halfslip::grid::make_grid;
use halfslip::scenario::reference_ensemble;
use halfslip::solver::PhysicalParams;

fn main() -> halfslip::Result<()> {
    let params = PhysicalParams::default();
    let g = make_grid(16, 16, 16, 0.25)?;
    let states = reference_ensemble(g, &params)?;
    for (i, s) in states.iter().enumerate().step_by(3) {
        let d = compute_decomposition(s, &params)?;
        println!(
            "state {i}: |u_P| {:.3e}  |u_Fw| {:.3e}  wall normal {:.2e}  shear {:.2e} {:.2e}  residual {:.3}",
            d.u_p.max_abs(),
            d.u_fw.max_abs(),
            d.wall.normal,
            d.wall.shear[0],
            d.wall.shear[1],
            d.residuals.interior_relative
        );
        println!("  {}", RatioRow::CSV_HEADER);
        for r in estimate_ratios(&d, s, &[2.0, 4.0])? {
            println!("  {}", r.csv_row());
        }
    }
    Ok(())
}

//! Time-weighted energy functionals of a coarse reference run for two
//! values of the weight exponent.

use halfslip::monitors::energy_report;
use halfslip::scenario::{run_scenario, GridSpec, ScenarioConfig, REFERENCE_CONFIG};

fn main() -> halfslip::Result<()> {
    let mut cfg = ScenarioConfig::from_toml(REFERENCE_CONFIG)?;
    cfg.grid = GridSpec { nx: 16, ny: 16, nz: 16, h: 0.25 };
    cfg.run.dt_out = 0.05;
    let traj = run_scenario(&cfg, None)?.1.expect("trajectory");
    for s in [0.6, 1.0] {
        let r = energy_report(&traj, s)?;
        println!("s = {s}: C0 + Cf = {:.4e}, |u0|_Hs = {:.4e}", r.data.c0 + r.data.cf, r.u0_hs);
        println!("     t      E_base      A_s         C_s         D_s");
        for i in (0..r.times.len()).step_by(5) {
            println!("  {:.2}  {:.4e}  {:.4e}  {:.4e}  {:.4e}", r.times[i], r.e_base[i], r.a_s[i], r.c_s[i], r.d_s[i]);
        }
    }
    Ok(())
}

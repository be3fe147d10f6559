//! The split `u = v + w`: `v` carries the initial velocity with no source,
//! `w` starts at rest and is driven by pressure and forcing.

use halfslip::monitors::{linear_split_solve, split_monitors};
use halfslip::scenario::{run_scenario, GridSpec, ScenarioConfig, REFERENCE_CONFIG};

fn main() -> halfslip::Result<()> {
    for dt_out in [0.04, 0.02, 0.01] {
        let mut cfg = ScenarioConfig::from_toml(REFERENCE_CONFIG)?;
        cfg.grid = GridSpec { nx: 16, ny: 16, nz: 16, h: 0.25 };
        cfg.run.horizon = 0.4;
        cfg.run.dt_out = dt_out;
        let traj = run_scenario(&cfg, None)?.1.expect("trajectory");
        let u0 = traj.snapshots[0].u.clone();
        let (v, w) = linear_split_solve(&traj, &u0)?;
        let r = split_monitors(&traj, &v, &w, 0.6)?;
        let last = r.times.len() - 1;
        println!(
            "dt_out {dt_out:.2}: |v+w-u|/|u| = {:.3e}  |grad v|^2 = {:.3e}  |grad w|^2 = {:.3e} at t = {:.2}",
            r.relative_reconstruction(),
            r.v_grad[last],
            r.w_grad[last],
            r.times[last]
        );
    }
    Ok(())
}

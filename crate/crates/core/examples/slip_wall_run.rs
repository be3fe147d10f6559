//! A short run of the reference scenario on a coarse grid: validation,
//! data functionals, stepping statistics and mass conservation.

use halfslip::scenario::{run_scenario, GridSpec, ScenarioConfig, REFERENCE_CONFIG};

fn main() -> halfslip::Result<()> {
    let mut cfg = ScenarioConfig::from_toml(REFERENCE_CONFIG)?;
    cfg.grid = GridSpec { nx: 16, ny: 16, nz: 16, h: 0.25 };
    cfg.run.horizon = 0.5;
    cfg.run.dt_out = 0.05;
    let (summary, traj) = run_scenario(&cfg, None)?;
    let traj = traj.expect("in-memory trajectory");
    for c in &summary.validation.checks {
        println!("check {:<12} {}", c.name, if c.passed { "ok" } else { "FAILED" });
    }
    println!("C0 = {:.4e}  Cf = {:.4e}  Mq = {:.4e}", summary.data.c0, summary.data.cf, summary.data.mq);
    println!("{} steps, dt in [{:.3e}, {:.3e}]", summary.stats.steps, summary.stats.min_dt, summary.stats.max_dt);
    for s in traj.snapshots.iter().step_by(2) {
        println!(
            "t = {:.2}  mass {:.15}  rho in [{:.5}, {:.5}]  max|u| {:.4e}",
            s.t,
            s.mass(),
            s.rho.min(),
            s.rho.max(),
            s.u.magnitude().max()
        );
    }
    Ok(())
}

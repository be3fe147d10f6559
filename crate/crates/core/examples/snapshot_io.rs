//! Snapshot and trajectory files: write a short run to disk, read it back
//! and compare bit for bit.

use halfslip::scenario::{run_scenario, GridSpec, ScenarioConfig, REFERENCE_CONFIG};
use halfslip::snapshot::{read_scalar, read_trajectory, read_trajectory_meta};

fn main() -> halfslip::Result<()> {
    let dir = std::env::temp_dir().join("halfslip-snapshot-example");
    let mut cfg = ScenarioConfig::from_toml(REFERENCE_CONFIG)?;
    cfg.grid = GridSpec { nx: 8, ny: 8, nz: 8, h: 0.5 };
    cfg.run.horizon = 0.1;
    cfg.run.dt_out = 0.05;
    let traj = run_scenario(&cfg, Some(&dir))?.1.expect("trajectory");

    let meta = read_trajectory_meta(&dir.join("trajectory"))?;
    println!("grid {}x{}x{} h = {}, times {:?}", meta.nx, meta.ny, meta.nz, meta.h, meta.times);
    let (rho, header) = read_scalar(&dir.join("trajectory/snap_00001/rho.snap"))?;
    println!("field '{}' at t = {}: {} values", header.field, header.time, rho.values.len());
    let back = read_trajectory(&dir.join("trajectory"))?;
    let same = back.snapshots.iter().zip(&traj.snapshots).all(|(a, b)| a.rho == b.rho && a.u == b.u);
    println!("roundtrip identical: {same}");
    for f in ["config.toml", "summary.json", "energy.csv", "run.log"] {
        println!("{f}: {} bytes", std::fs::metadata(dir.join(f))?.len());
    }
    Ok(())
}

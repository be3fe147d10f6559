//! Scenario configuration (TOML), initial-data templates and the scenario
//! runner behind `halfslip run`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid, ScalarField, VectorField};
use crate::monitors::energy_report;
use crate::snapshot::TrajectoryWriter;
use crate::solver::{
    data_functionals, simulate_with, validation_report, DataFunctionals, FluidState, Forcing, PhysicalParams,
    RunOptions, RunStats, Trajectory, ValidationReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        make_grid(self.nx, self.ny, self.nz, self.h)
    }
}

fn gauss(x: [f64; 3], c: [f64; 3], w: f64) -> f64 {
    let r2: f64 = (0..3).map(|a| (x[a] - c[a]).powi(2)).sum();
    (-r2 / (w * w)).exp()
}

fn default_direction() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_modes() -> usize {
    4
}

/// Named initial data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "kebab-case")]
pub enum InitialData {
    /// `(rho~, 0)`.
    #[default]
    Rest,
    /// `rho = rho~ (1 + amplitude g)`, `u = 0`, with `g` a Gaussian.
    DensityBump { amplitude: f64, center: [f64; 3], width: f64 },
    /// Tangential jet `u = amplitude g(x1, x2) (K + x3) e^{-x3^2 / depth^2} d`
    /// at reference density; it satisfies the slip condition at the wall.
    Shear {
        amplitude: f64,
        center: [f64; 2],
        width: f64,
        depth: f64,
        #[serde(default = "default_direction")]
        direction: [f64; 2],
    },
    /// Sum of `modes` random Gaussians in density and velocity, seeded by
    /// the run seed; the normal velocity is damped to zero at the wall.
    RandomSmooth {
        amplitude: f64,
        #[serde(default)]
        density_amplitude: f64,
        width: f64,
        #[serde(default = "default_modes")]
        modes: usize,
    },
}

impl InitialData {
    pub fn build(&self, grid: Grid, params: &PhysicalParams, seed: u64) -> Result<FluidState> {
        let rr = params.rho_ref;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            InitialData::Rest => Ok(FluidState::rest(grid, params)),
            InitialData::DensityBump { amplitude, center, width } => {
                positive("width", *width)?;
                let rho = ScalarField::from_fn(grid, |x| rr * (1.0 + amplitude * gauss(x, *center, *width)));
                FluidState::new(rho, VectorField::zeros(grid), 0.0)
            }
            InitialData::Shear { amplitude, center, width, depth, direction } => {
                positive("width", *width)?;
                positive("depth", *depth)?;
                let periods = [grid.l1(), grid.l2()];
                let n = (direction[0].powi(2) + direction[1].powi(2)).sqrt();
                if !(n > 0.0) {
                    return Err(Error::Config("shear direction must be nonzero".into()));
                }
                let d = [direction[0] / n, direction[1] / n];
                let u = VectorField::from_fn(grid, |x| {
                    let k = params.slip.eval([x[0], x[1]], periods);
                    let lat = gauss([x[0], x[1], 0.0], [center[0], center[1], 0.0], *width);
                    let s = amplitude * lat * (k + x[2]) * (-(x[2] / depth).powi(2)).exp();
                    [s * d[0], s * d[1], 0.0]
                });
                FluidState::new(ScalarField::constant(grid, rr), u, 0.0)
            }
            InitialData::RandomSmooth { amplitude, density_amplitude, width, modes } => {
                positive("width", *width)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (l1, l2, l3) = (grid.l1(), grid.l2(), grid.l3());
                let bumps: Vec<([f64; 3], [f64; 3], f64)> = (0..*modes)
                    .map(|_| {
                        let c = [
                            rng.gen_range(0.3 * l1..0.7 * l1),
                            rng.gen_range(0.3 * l2..0.7 * l2),
                            rng.gen_range(0.2 * l3..0.5 * l3),
                        ];
                        let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                        (c, a, rng.gen_range(-1.0..1.0))
                    })
                    .collect();
                let rho = ScalarField::from_fn(grid, |x| {
                    rr * (1.0 + density_amplitude * bumps.iter().map(|(c, _, b)| b * gauss(x, *c, *width)).sum::<f64>())
                });
                let u = VectorField::from_fn(grid, |x| {
                    let mut v = [0.0; 3];
                    for (c, a, _) in &bumps {
                        let g = gauss(x, *c, *width);
                        for k in 0..3 {
                            v[k] += amplitude * a[k] * g;
                        }
                    }
                    v[2] *= 1.0 - (-(x[2] / width).powi(2)).exp();
                    v
                });
                FluidState::new(rho, u, 0.0)
            }
        }
    }
}

fn default_dt_out() -> f64 {
    0.01
}
fn default_s() -> f64 {
    0.6
}
fn default_threshold() -> f64 {
    0.1
}
fn default_min_dt() -> f64 {
    1e-9
}
fn default_true() -> bool {
    true
}
fn default_safety() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub horizon: f64,
    #[serde(default = "default_dt_out")]
    pub dt_out: f64,
    /// Exponent of the time-weighted monitors.
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_true")]
    pub include_pressure: bool,
    /// Floor on the stable step below which the run aborts.
    #[serde(default = "default_min_dt")]
    pub min_dt: f64,
    /// Soft warning level for `C0 + Cf`.
    #[serde(default = "default_threshold")]
    pub smallness_threshold: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub params: PhysicalParams,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub forcing: Forcing,
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            cfl_safety: self.run.cfl_safety,
            include_pressure: self.run.include_pressure,
            min_dt: self.run.min_dt,
        }
    }

    /// Parameter checks; fails with `InvalidParams` listing every failure.
    pub fn validate(&self) -> Result<ValidationReport> {
        let report = validation_report(&self.params);
        if !report.passed() {
            return Err(Error::InvalidParams(report.failures()));
        }
        self.grid.build()?;
        let r = &self.run;
        if !(r.horizon > 0.0 && r.dt_out > 0.0 && r.dt_out <= r.horizon) {
            return Err(Error::Config(format!(
                "need 0 < dt_out <= horizon, got dt_out = {}, horizon = {}",
                r.dt_out, r.horizon
            )));
        }
        if !(0.0..=1.0).contains(&r.s) {
            return Err(Error::Config(format!("s = {} outside [0, 1]", r.s)));
        }
        Ok(report)
    }

    pub fn initial_state(&self) -> Result<FluidState> {
        self.initial.build(self.grid.build()?, &self.params, self.run.seed)
    }
}

/// The annotated reference configuration shipped in `configs/`.
pub const REFERENCE_CONFIG: &str = include_str!("../../../configs/reference.toml");

/// Ten fixed states on `grid` used for ratio and decomposition sweeps. The
/// physical content depends only on the tile size, so grids that cover the
/// same tile give the same continuous states.
pub fn reference_ensemble(grid: Grid, params: &PhysicalParams) -> Result<Vec<FluidState>> {
    let (l1, l2, l3) = (grid.l1(), grid.l2(), grid.l3());
    let c = |a: f64, b: f64, z: f64| [a * l1, b * l2, z * l3];
    let w = 0.25 * l1.min(l2).min(2.0 * l3);
    let mut out = Vec::with_capacity(10);
    for (k, (amp, vel, center)) in [
        (0.2, 0.05, c(0.5, 0.5, 0.5)),
        (0.1, 0.1, c(0.45, 0.55, 0.4)),
        (-0.15, 0.08, c(0.55, 0.45, 0.6)),
        (0.3, 0.0, c(0.5, 0.5, 0.45)),
        (0.05, 0.2, c(0.4, 0.4, 0.5)),
    ]
    .into_iter()
    .enumerate()
    {
        let bump = InitialData::DensityBump { amplitude: amp, center, width: w }.build(grid, params, 0)?;
        let shear = InitialData::Shear {
            amplitude: vel,
            center: [center[0], center[1]],
            width: w,
            depth: w,
            direction: [1.0, k as f64 * 0.5],
        }
        .build(grid, params, 0)?;
        out.push(FluidState::new(bump.rho, shear.u, 0.0)?);
    }
    for seed in 0..5u64 {
        out.push(
            InitialData::RandomSmooth { amplitude: 0.1, density_amplitude: 0.15, width: w, modes: 3 }
                .build(grid, params, seed)?,
        );
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub validation: ValidationReport,
    pub data: DataFunctionals,
    pub smallness: f64,
    pub warnings: Vec<String>,
    pub stats: RunStats,
    pub snapshots: usize,
    pub mass_initial: f64,
    pub mass_final: f64,
}

/// Runs a scenario. With an output directory the trajectory is streamed to
/// `<dir>/trajectory/` and the run also leaves `config.toml`, `energy.csv`,
/// `summary.json` and `run.log` there.
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(RunSummary, Option<Trajectory>)> {
    let validation = cfg.validate()?;
    let state0 = cfg.initial_state()?;
    let grid = state0.grid();
    let opts = cfg.run_options();
    let data = data_functionals(&state0, &cfg.forcing, &cfg.params, cfg.run.horizon)?;
    let smallness = data.c0 + data.cf;
    let mut warnings = Vec::new();
    if smallness > cfg.run.smallness_threshold {
        let w =
            format!("C0 + Cf = {smallness:.4e} exceeds the soft smallness threshold {}", cfg.run.smallness_threshold);
        log::warn!("{w}");
        warnings.push(w);
    }
    let mut log_lines = vec![format!("grid {}x{}x{} h={}", grid.nx, grid.ny, grid.nz, grid.h)];
    let mut snapshots = Vec::new();
    let mut writer = match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
            Some(TrajectoryWriter::create(
                &dir.join("trajectory"),
                grid,
                &cfg.params,
                &cfg.forcing,
                cfg.run.dt_out,
                &opts,
            )?)
        }
        None => None,
    };
    let mut mass_final = state0.mass();
    let result = simulate_with(&state0, &cfg.params, &cfg.forcing, cfg.run.horizon, cfg.run.dt_out, &opts, |s| {
        if let Some(w) = writer.as_mut() {
            w.push(s)?;
        }
        log_lines.push(format!("t={:.6} mass={:.15e} max|u|={:.6e}", s.t, s.mass(), s.u.magnitude().max()));
        mass_final = s.mass();
        snapshots.push(s.clone());
        Ok(())
    });
    if let Some(dir) = out {
        if let Err(e) = &result {
            log_lines.push(format!("abort: {e}"));
        }
        fs::write(dir.join("run.log"), log_lines.join("\n") + "\n")?;
    }
    let stats = result?;
    let traj = Trajectory {
        params: cfg.params,
        forcing: cfg.forcing.clone(),
        dt_out: cfg.run.dt_out,
        options: opts,
        snapshots,
    };
    let summary = RunSummary {
        validation,
        data,
        smallness,
        warnings,
        stats,
        snapshots: traj.len(),
        mass_initial: state0.mass(),
        mass_final,
    };
    if let Some(dir) = out {
        energy_report(&traj, cfg.run.s)?.save_csv(&dir.join("energy.csv"))?;
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(dir.join("summary.json"), json)?;
    }
    Ok((summary, Some(traj)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_parses_and_validates() {
        let cfg = ScenarioConfig::from_toml(REFERENCE_CONFIG).unwrap();
        cfg.validate().unwrap();
        let back = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back.grid, cfg.grid);
        assert_eq!(back.initial, cfg.initial);
    }

    #[test]
    fn unknown_template_rejected() {
        let text = REFERENCE_CONFIG.replace("template = \"shear\"", "template = \"vortex-ring\"");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn shear_template_satisfies_slip() {
        let p = PhysicalParams::default();
        let g = make_grid(8, 8, 64, 1.0 / 32.0).unwrap();
        let s =
            InitialData::Shear { amplitude: 1.0, center: [0.1, 0.1], width: 1.0, depth: 1.0, direction: [1.0, 0.0] }
                .build(g, &p, 0)
                .unwrap();
        let k = p.slip.k0;
        let tr = crate::grid::boundary_trace(&s.u.comps[0]);
        let dn = crate::grid::wall_normal_derivative(&s.u.comps[0]);
        assert!((tr.values[0] - k * dn.values[0]).abs() < 5e-3);
    }

    #[test]
    fn random_smooth_is_deterministic() {
        let p = PhysicalParams::default();
        let g = make_grid(8, 8, 4, 0.25).unwrap();
        let t = InitialData::RandomSmooth { amplitude: 0.1, density_amplitude: 0.1, width: 0.5, modes: 3 };
        assert_eq!(t.build(g, &p, 7).unwrap(), t.build(g, &p, 7).unwrap());
        assert_ne!(t.build(g, &p, 7).unwrap(), t.build(g, &p, 8).unwrap());
    }

    #[test]
    fn ensemble_has_ten_positive_states() {
        let p = PhysicalParams::default();
        let g = make_grid(8, 8, 4, 0.5).unwrap();
        let e = reference_ensemble(g, &p).unwrap();
        assert_eq!(e.len(), 10);
        assert!(e.iter().all(|s| s.rho.min() > 0.0 && s.rho.max() <= p.rho_max1));
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use halfslip::decomposition::{compute_decomposition, estimate_ratios, RatioRow};
use halfslip::lagrangian::{flow_map, holder_regression, FlowOptions, Interpolation, TrajectoryField};
use halfslip::monitors::{energy_report, linear_split_solve, split_monitors};
use halfslip::scenario::{run_scenario, ScenarioConfig, REFERENCE_CONFIG};
use halfslip::snapshot::{read_seeds, read_state, read_trajectory, write_matrix, write_scalar, write_vector};
use halfslip::verify::{verify_suite, Suite};
use halfslip::{Error, Result};

const VERIFY_FAILED: u8 = 10;

/// Half-space compressible flow laboratory.
///
/// Exit codes: 0 ok, 2 invalid parameters, 3 density positivity failure,
/// 4 step above the stability bound, 5 config, I/O or snapshot error,
/// 6 invalid argument, 7 density ceiling, 8 path left the slab,
/// 9 underdetermined fit, 10 verification checks failed.
#[derive(Parser)]
#[command(name = "halfslip", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Trilinear,
    CubicSpline,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and write its trajectory and energy report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a state into pressure and effective-flux velocities.
    Decompose {
        /// Directory holding rho.snap and u1..u3.snap.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        p: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-weighted energy functionals of a stored trajectory.
    Monitor {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        s: f64,
        /// Also solve and monitor the linear split of the velocity.
        #[arg(long)]
        split: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Particle paths through a stored trajectory and their Hölder fit.
    Track {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long, value_enum, default_value = "trilinear")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an invariant battery: potential, norms, solver, decomposition,
    /// energy, lagrangian or all.
    Verify {
        suite: String,
        /// Scenario config; the bundled reference scenario by default.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = ScenarioConfig::load(config)?;
    let dir = out.or_else(|| cfg.output.dir.clone());
    let (summary, _) = run_scenario(&cfg, dir.as_deref())?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} snapshots, {} steps, dt in [{:.3e}, {:.3e}], C0 + Cf = {:.4e}, mass drift {:.3e}",
        summary.snapshots,
        summary.stats.steps,
        summary.stats.min_dt,
        summary.stats.max_dt,
        summary.smallness,
        (summary.mass_final - summary.mass_initial).abs() / summary.mass_initial
    );
    if let Some(d) = dir {
        println!("wrote {}", d.display());
    }
    Ok(())
}

fn decompose(state: &Path, config: &Path, p: &[f64], out: Option<PathBuf>) -> Result<()> {
    let cfg = ScenarioConfig::load(config)?;
    cfg.validate()?;
    let s = read_state(state)?;
    let d = compute_decomposition(&s, &cfg.params)?;
    let rows = estimate_ratios(&d, &s, p)?;
    let out = out.unwrap_or_else(|| state.join("decomposition"));
    fs::create_dir_all(&out)?;
    write_vector(&out, "u_p", &d.u_p, s.t)?;
    write_vector(&out, "u_fw", &d.u_fw, s.t)?;
    write_scalar(&out.join("flux.snap"), &d.flux, "flux", s.t)?;
    write_matrix(&out, "omega", &d.vorticity, s.t)?;
    let mut csv = format!("{}\n", RatioRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    fs::write(out.join("ratios.csv"), &csv)?;
    fs::write(out.join("residuals.json"), to_json(&serde_json::json!({ "residuals": d.residuals, "wall": d.wall }))?)?;
    print!("{csv}");
    println!(
        "interior residual {:.3e} (relative {:.3e}), wall normal {:.3e}",
        d.residuals.interior, d.residuals.interior_relative, d.residuals.wall_normal
    );
    Ok(())
}

fn monitor(traj: &Path, s: f64, split: bool, out: Option<PathBuf>) -> Result<()> {
    let t = read_trajectory(traj)?;
    let out = out.unwrap_or_else(|| traj.to_path_buf());
    fs::create_dir_all(&out)?;
    let r = energy_report(&t, s)?;
    r.save_csv(&out.join(format!("energy_s{s}.csv")))?;
    println!(
        "s = {s}: sup E = {:.4e}, sup A_s = {:.4e}, sup C_s = {:.4e}, C0 = {:.4e}, Cf = {:.4e}, |u0|_Hs = {:.4e}",
        r.sup_e_base.last().copied().unwrap_or(0.0),
        r.sup_a_s.last().copied().unwrap_or(0.0),
        r.sup_c_s.last().copied().unwrap_or(0.0),
        r.data.c0,
        r.data.cf,
        r.u0_hs
    );
    if split {
        let u0 = t.snapshots[0].u.clone();
        let (v, w) = linear_split_solve(&t, &u0)?;
        let rep = split_monitors(&t, &v, &w, s)?;
        let mut buf = Vec::new();
        rep.write_csv(&mut buf)?;
        fs::write(out.join(format!("split_s{s}.csv")), buf)?;
        println!("split reconstruction error {:.3e} relative", rep.relative_reconstruction());
    }
    Ok(())
}

fn track(traj: &Path, seeds: &Path, times: &[f64], mode: Mode, out: Option<PathBuf>) -> Result<()> {
    let t = read_trajectory(traj)?;
    let seeds = read_seeds(seeds)?;
    let mode = match mode {
        Mode::Trilinear => Interpolation::Trilinear,
        Mode::CubicSpline => Interpolation::CubicSpline,
    };
    let src = TrajectoryField::new(&t, mode)?;
    let t0 = t.snapshots[0].t;
    let fm = flow_map(&src, &seeds, t0, times, &FlowOptions::default())?;
    let out = out.unwrap_or_else(|| traj.join("track"));
    fs::create_dir_all(&out)?;
    fs::write(out.join("positions.csv"), fm.csv())?;
    fs::write(out.join("status.json"), to_json(&fm.status)?)?;
    let last = *times.last().ok_or_else(|| Error::InvalidArgument("no output times".into()))?;
    let fit = holder_regression(&fm, t0, last)?;
    fs::write(out.join("holder.json"), to_json(&fit)?)?;
    println!(
        "{} seeds to t = {last}: exponent {:.4} (raw {:.4}, r^2 {:.4}, {} pairs)",
        seeds.len(),
        fit.exponent,
        fit.raw_slope,
        fit.r_squared,
        fit.pairs
    );
    Ok(())
}

fn verify(suite: &str, config: Option<PathBuf>, out: Option<PathBuf>) -> Result<bool> {
    let suite: Suite = suite.parse()?;
    let cfg = match config {
        Some(p) => ScenarioConfig::load(&p)?,
        None => ScenarioConfig::from_toml(REFERENCE_CONFIG)?,
    };
    let verdicts = verify_suite(suite, &cfg)?;
    let json = to_json(&verdicts)?;
    match out {
        Some(p) => fs::write(p, &json)?,
        None => println!("{json}"),
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    eprintln!("{} checks, {failed} failed", verdicts.len());
    Ok(failed == 0)
}

fn report(dir: &Path) -> Result<()> {
    let text = fs::read_to_string(dir.join("summary.json"))?;
    let s: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    println!("run: {}", dir.display());
    let num = |v: &serde_json::Value| v.as_f64().unwrap_or(f64::NAN);
    println!("snapshots: {}  steps: {}", s["snapshots"], s["stats"]["steps"]);
    println!(
        "C0 = {:.4e}  Cf = {:.4e}  Mq = {:.4e}  C0 + Cf = {:.4e}",
        num(&s["data"]["c0"]),
        num(&s["data"]["cf"]),
        num(&s["data"]["mq"]),
        num(&s["smallness"])
    );
    let (m0, m1) = (num(&s["mass_initial"]), num(&s["mass_final"]));
    println!("mass: {m0:.15e} -> {m1:.15e} (relative drift {:.3e})", ((m1 - m0) / m0).abs());
    if let Some(ws) = s["warnings"].as_array() {
        for w in ws {
            println!("warning: {}", w.as_str().unwrap_or_default());
        }
    }
    let energy = dir.join("energy.csv");
    if energy.exists() {
        let csv = fs::read_to_string(&energy)?;
        let mut lines = csv.lines();
        if let (Some(head), Some(last)) = (lines.next(), csv.lines().last()) {
            println!("energy at final time:");
            for (k, v) in head.split(',').zip(last.split(',')) {
                println!("  {k:>12} {v}");
            }
        }
    }
    for extra in ["decomposition/ratios.csv", "track/holder.json"] {
        let p = dir.join(extra);
        if p.exists() {
            println!("{extra}:\n{}", fs::read_to_string(p)?.trim_end());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config, out } => run(&config, out),
        Cmd::Decompose { state, config, p, out } => decompose(&state, &config, &p, out),
        Cmd::Monitor { traj, s, split, out } => monitor(&traj, s, split, out),
        Cmd::Track { traj, seeds, times, mode, out } => track(&traj, &seeds, &times, mode, out),
        Cmd::Verify { suite, config, out } => match verify(&suite, config, out) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(VERIFY_FAILED),
            Err(e) => Err(e),
        },
        Cmd::Report { run } => report(&run),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Field snapshot files and trajectory directories.
//!
//! A snapshot is a plain-text header of `key=value` lines (`nx`, `ny`, `nz`,
//! `h`, `field`, `time`, optionally `x3_origin`) closed by a line `end`,
//! followed by the cell values as little-endian `f64` in x-fastest order.
//!
//! A trajectory directory holds `trajectory.json` (grid, parameters,
//! forcing, output times) and one `snap_NNNNN/` folder per output time with
//! `rho.snap`, `u1.snap`, `u2.snap`, `u3.snap`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MatrixField, ScalarField, VectorField};
use crate::solver::{FluidState, Forcing, PhysicalParams, RunOptions, Trajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub grid: Grid,
    pub field: String,
    pub time: f64,
}

pub fn write_scalar(path: &Path, field: &ScalarField, name: &str, time: f64) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let g = field.grid;
    writeln!(w, "nx={}", g.nx)?;
    writeln!(w, "ny={}", g.ny)?;
    writeln!(w, "nz={}", g.nz)?;
    writeln!(w, "h={:e}", g.h)?;
    writeln!(w, "field={name}")?;
    writeln!(w, "time={time:e}")?;
    if g.x3_origin != 0.0 {
        writeln!(w, "x3_origin={:e}", g.x3_origin)?;
    }
    writeln!(w, "end")?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = map.get(key).ok_or_else(|| Error::Snapshot(format!("missing header key {key}")))?;
    raw.parse().map_err(|_| Error::Snapshot(format!("bad value for {key}: {raw}")))
}

pub fn read_scalar(path: &Path) -> Result<(ScalarField, SnapshotHeader)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut map = BTreeMap::new();
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Snapshot(format!("{}: header not terminated", path.display())));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| Error::Snapshot(format!("bad header line {l:?}")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut grid =
        crate::grid::make_grid(parse(&map, "nx")?, parse(&map, "ny")?, parse(&map, "nz")?, parse(&map, "h")?)
            .map_err(|e| Error::Snapshot(e.to_string()))?;
    if map.contains_key("x3_origin") {
        grid.x3_origin = parse(&map, "x3_origin")?;
    }
    let header = SnapshotHeader { grid, field: parse(&map, "field")?, time: parse(&map, "time")? };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Snapshot(format!(
            "{}: expected {} values, found {} bytes",
            path.display(),
            grid.len(),
            bytes.len()
        )));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((ScalarField { grid, values }, header))
}

/// Writes `<stem>1.snap`, `<stem>2.snap`, `<stem>3.snap` into `dir`.
pub fn write_vector(dir: &Path, stem: &str, v: &VectorField, time: f64) -> Result<()> {
    for (c, comp) in v.comps.iter().enumerate() {
        let name = format!("{stem}{}", c + 1);
        write_scalar(&dir.join(format!("{name}.snap")), comp, &name, time)?;
    }
    Ok(())
}

pub fn read_vector(dir: &Path, stem: &str) -> Result<(VectorField, f64)> {
    let mut comps = Vec::with_capacity(3);
    let mut time = 0.0;
    for c in 1..=3 {
        let (f, h) = read_scalar(&dir.join(format!("{stem}{c}.snap")))?;
        time = h.time;
        comps.push(f);
    }
    let mut it = comps.into_iter();
    let v = VectorField::new(it.next().unwrap(), it.next().unwrap(), it.next().unwrap())?;
    Ok((v, time))
}

pub fn write_state(dir: &Path, state: &FluidState) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_scalar(&dir.join("rho.snap"), &state.rho, "rho", state.t)?;
    write_vector(dir, "u", &state.u, state.t)
}

pub fn read_state(dir: &Path) -> Result<FluidState> {
    let (rho, h) = read_scalar(&dir.join("rho.snap"))?;
    let (u, _) = read_vector(dir, "u")?;
    FluidState::new(rho, u, h.time)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    pub params: PhysicalParams,
    pub forcing: Forcing,
    pub dt_out: f64,
    pub options: RunOptions,
    pub times: Vec<f64>,
}

fn snap_dir(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("snap_{k:05}"))
}

/// Streams snapshots to disk while a run progresses.
pub struct TrajectoryWriter {
    dir: PathBuf,
    meta: TrajectoryMeta,
}

impl TrajectoryWriter {
    pub fn create(
        dir: &Path,
        grid: Grid,
        params: &PhysicalParams,
        forcing: &Forcing,
        dt_out: f64,
        options: &RunOptions,
    ) -> Result<Self> {
        if matches!(forcing, Forcing::Field(_)) {
            return Err(Error::invalid("closure forcing cannot be recorded"));
        }
        fs::create_dir_all(dir)?;
        Ok(TrajectoryWriter {
            dir: dir.to_path_buf(),
            meta: TrajectoryMeta {
                nx: grid.nx,
                ny: grid.ny,
                nz: grid.nz,
                h: grid.h,
                params: *params,
                forcing: forcing.clone(),
                dt_out,
                options: *options,
                times: Vec::new(),
            },
        })
    }

    pub fn push(&mut self, state: &FluidState) -> Result<()> {
        write_state(&snap_dir(&self.dir, self.meta.times.len()), state)?;
        self.meta.times.push(state.t);
        self.flush_meta()
    }

    fn flush_meta(&self) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(self.dir.join("trajectory.json"), json)?;
        Ok(())
    }
}

pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = TrajectoryWriter::create(dir, traj.grid(), &traj.params, &traj.forcing, traj.dt_out, &traj.options)?;
    for s in &traj.snapshots {
        w.push(s)?;
    }
    Ok(())
}

pub fn read_trajectory_meta(dir: &Path) -> Result<TrajectoryMeta> {
    let raw = fs::read_to_string(dir.join("trajectory.json"))?;
    serde_json::from_str(&raw).map_err(|e| Error::Snapshot(format!("trajectory.json: {e}")))
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let meta = read_trajectory_meta(dir)?;
    let snapshots = (0..meta.times.len()).map(|k| read_state(&snap_dir(dir, k))).collect::<Result<Vec<_>>>()?;
    let traj = Trajectory {
        params: meta.params,
        forcing: meta.forcing,
        dt_out: meta.dt_out,
        options: meta.options,
        snapshots,
    };
    traj.check()?;
    Ok(traj)
}

/// Writes the nine entries of a matrix field as `<stem>_<j><k>.snap`, 1-based.
pub fn write_matrix(dir: &Path, stem: &str, m: &MatrixField, time: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    for j in 0..3 {
        for k in 0..3 {
            let name = format!("{stem}_{}{}", j + 1, k + 1);
            write_scalar(&dir.join(format!("{name}.snap")), &m.comps[j][k], &name, time)?;
        }
    }
    Ok(())
}

/// Seed points, one per line as three numbers separated by commas or
/// whitespace. Blank lines and `#` comments are skipped.
pub fn parse_seeds(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("seed line {}: {e}", n + 1)))?;
        if nums.len() != 3 || nums.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("seed line {}: expected three finite numbers", n + 1)));
        }
        out.push([nums[0], nums[1], nums[2]]);
    }
    Ok(out)
}

pub fn read_seeds(path: &Path) -> Result<Vec<[f64; 3]>> {
    parse_seeds(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn scalar_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(3, 4, 5, 0.3).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin() * x[2] - x[1] / 7.0);
        let p = dir.path().join("f.snap");
        write_scalar(&p, &f, "f", 0.125).unwrap();
        let (back, h) = read_scalar(&p).unwrap();
        assert_eq!(back, f);
        assert_eq!(h.field, "f");
        assert_eq!(h.time, 0.125);
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(2, 2, 2, 1.0).unwrap();
        let p = dir.path().join("f.snap");
        write_scalar(&p, &ScalarField::constant(g, 1.0), "f", 0.0).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_scalar(&p), Err(Error::Snapshot(_))));
    }

    #[test]
    fn seeds_parse_both_separators() {
        let s = parse_seeds("# wall\n0.5, 0.5, 0\n\n1 2 3.5\n").unwrap();
        assert_eq!(s, vec![[0.5, 0.5, 0.0], [1.0, 2.0, 3.5]]);
        assert!(parse_seeds("1 2\n").is_err());
    }
}

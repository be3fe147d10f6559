use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::source::{Slot, VelocitySource};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SeedStatus {
    Active,
    TruncationExit { time: f64 },
    WallExcursion { time: f64, depth: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowOptions {
    /// Fixed RK4 sub-step; by default `min(dt_out, h / (2 |u|_inf))`.
    pub substep: Option<f64>,
    /// Wall crossings shallower than this fraction of `h` are reflected.
    pub reflect_fraction: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { substep: None, reflect_fraction: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FlowStats {
    pub steps: usize,
    pub reflections: usize,
    pub max_substep: f64,
}

/// Positions `X(t, x)` of each seed at each output time. Positions are
/// unwrapped laterally; a terminated seed holds `NaN` afterwards.
#[derive(Clone, Debug, Serialize)]
pub struct FlowMap {
    pub seeds: Vec<[f64; 3]>,
    pub t0: f64,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<[f64; 3]>>,
    pub status: Vec<SeedStatus>,
    pub stats: FlowStats,
}

impl FlowMap {
    /// Positions at `t`, which must be `t0` or one of the output times.
    pub fn at_time(&self, t: f64) -> Option<&[[f64; 3]]> {
        if (t - self.t0).abs() <= 1e-12 * (1.0 + t.abs()) {
            return Some(&self.seeds);
        }
        self.times.iter().position(|s| (s - t).abs() <= 1e-12 * (1.0 + t.abs())).map(|i| self.positions[i].as_slice())
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("seed,t,x1,x2,x3\n");
        for (i, s) in self.seeds.iter().enumerate() {
            out.push_str(&format!("{i},{},{:.15e},{:.15e},{:.15e}\n", self.t0, s[0], s[1], s[2]));
        }
        for (k, t) in self.times.iter().enumerate() {
            for (i, p) in self.positions[k].iter().enumerate() {
                out.push_str(&format!("{i},{t},{:.15e},{:.15e},{:.15e}\n", p[0], p[1], p[2]));
            }
        }
        out
    }
}

fn wrap(x: [f64; 3], periods: Option<[f64; 2]>) -> [f64; 3] {
    match periods {
        Some([l1, l2]) => [x[0].rem_euclid(l1), x[1].rem_euclid(l2), x[2]],
        None => x,
    }
}

#[inline]
fn axpy(x: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]]
}

struct Walker<'s, S: VelocitySource + ?Sized> {
    src: &'s S,
    periods: Option<[f64; 2]>,
    depth: f64,
    reflect: f64,
}

impl<S: VelocitySource + ?Sized> Walker<'_, S> {
    fn vel(&self, slot: &Slot<'_>, x: [f64; 3], t: f64, wall: bool) -> [f64; 3] {
        let mut v = self.src.velocity(slot, wrap(x, self.periods), t);
        if wall {
            v[2] = 0.0;
        }
        v
    }

    /// `n` RK4 steps of size `dt` from `t`.
    fn advance(
        &self,
        slot: &Slot<'_>,
        x: &mut [f64; 3],
        status: &mut SeedStatus,
        reflections: &mut usize,
        t: f64,
        dt: f64,
        n: usize,
    ) {
        let wall = x[2] == 0.0;
        for s in 0..n {
            if *status != SeedStatus::Active {
                return;
            }
            let ts = t + s as f64 * dt;
            let k1 = self.vel(slot, *x, ts, wall);
            let k2 = self.vel(slot, axpy(*x, 0.5 * dt, k1), ts + 0.5 * dt, wall);
            let k3 = self.vel(slot, axpy(*x, 0.5 * dt, k2), ts + 0.5 * dt, wall);
            let k4 = self.vel(slot, axpy(*x, dt, k3), ts + dt, wall);
            for c in 0..3 {
                x[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            if wall {
                x[2] = 0.0;
                continue;
            }
            let tn = ts + dt;
            if x[2] < 0.0 {
                let depth = -x[2];
                if depth < self.reflect {
                    x[2] = depth;
                    *reflections += 1;
                } else {
                    *status = SeedStatus::WallExcursion { time: tn, depth };
                }
            }
            if x[2] >= self.depth {
                *status = SeedStatus::TruncationExit { time: tn };
            }
        }
    }
}

fn breakpoints(src: &(impl VelocitySource + ?Sized), t0: f64, times: &[f64]) -> Vec<f64> {
    let end = *times.last().unwrap_or(&t0);
    let mut pts: Vec<f64> = std::iter::once(t0)
        .chain(times.iter().copied())
        .chain(src.time_nodes().into_iter().filter(|t| *t > t0 && *t < end))
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    pts
}

/// Batch integration of `dX/dt = u(X, t)` from `t0` to each output time.
pub fn flow_map<S: VelocitySource + ?Sized>(
    src: &S,
    seeds: &[[f64; 3]],
    t0: f64,
    times: &[f64],
    opts: &FlowOptions,
) -> Result<FlowMap> {
    let (lo, hi) = src.span();
    let tol = 1e-12 * (1.0 + hi.abs());
    if t0 < lo - tol || times.iter().any(|t| *t > hi + tol || *t < t0) {
        return Err(Error::invalid(format!("times must lie in [{t0}, {hi}] within the span [{lo}, {hi}]")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("output times must be strictly increasing"));
    }
    if let Some(s) = seeds.iter().find(|s| !(s[2] >= 0.0) || !s.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidDomain(format!("seed {s:?} not in the closed half-space")));
    }
    if let Some(d) = opts.substep {
        if !(d > 0.0) {
            return Err(Error::invalid(format!("sub-step {d} must be positive")));
        }
    }
    let h = src.spacing();
    let walker = Walker { src, periods: src.periods(), depth: src.depth(), reflect: opts.reflect_fraction * h };
    let dmax = opts.substep.unwrap_or_else(|| {
        let speed = src.max_speed();
        if speed > 0.0 {
            h / (2.0 * speed)
        } else {
            f64::INFINITY
        }
    });

    let mut x: Vec<[f64; 3]> = seeds.to_vec();
    let mut status = vec![SeedStatus::Active; seeds.len()];
    let mut refl = vec![0usize; seeds.len()];
    let mut positions = Vec::with_capacity(times.len());
    let mut stats = FlowStats::default();
    let pts = breakpoints(src, t0, times);
    let mut next_out = 0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / dmax).ceil().max(1.0) as usize;
        let dt = (b - a) / n as f64;
        stats.steps += n;
        stats.max_substep = stats.max_substep.max(dt);
        let slot = src.slot(a, b);
        x.par_iter_mut()
            .zip(status.par_iter_mut())
            .zip(refl.par_iter_mut())
            .for_each(|((xi, st), r)| walker.advance(&slot, xi, st, r, a, dt, n));
        while next_out < times.len() && (times[next_out] - b).abs() <= 1e-12 * (1.0 + b.abs()) {
            positions.push(
                x.iter().zip(&status).map(|(p, s)| if *s == SeedStatus::Active { *p } else { [f64::NAN; 3] }).collect(),
            );
            next_out += 1;
        }
    }
    while positions.len() < times.len() {
        // output times equal to t0
        positions.push(seeds.to_vec());
    }
    stats.reflections = refl.iter().sum();
    Ok(FlowMap { seeds: seeds.to_vec(), t0, times: times.to_vec(), positions, status, stats })
}

/// `X(t1; x0, t0)` for a single seed.
pub fn integrate_path<S: VelocitySource + ?Sized>(
    src: &S,
    x0: [f64; 3],
    t0: f64,
    t1: f64,
    opts: &FlowOptions,
) -> Result<[f64; 3]> {
    if t1 == t0 {
        return Ok(x0);
    }
    let fm = flow_map(src, &[x0], t0, &[t1], opts)?;
    match fm.status[0] {
        SeedStatus::Active => Ok(fm.positions[0][0]),
        SeedStatus::TruncationExit { time } => Err(Error::TruncationExit { time }),
        SeedStatus::WallExcursion { time, depth } => Err(Error::WallExcursion { time, depth }),
    }
}

/// `|X(t2, x) - X(t2; X(t1, x), t1)|` with paths started at the beginning of
/// the span.
pub fn composition_check<S: VelocitySource + ?Sized>(
    src: &S,
    x: [f64; 3],
    t1: f64,
    t2: f64,
    opts: &FlowOptions,
) -> Result<f64> {
    if !(t1 < t2) {
        return Err(Error::invalid(format!("need t1 < t2, got {t1}, {t2}")));
    }
    let start = src.span().0;
    let direct = integrate_path(src, x, start, t2, opts)?;
    let mid = integrate_path(src, x, start, t1, opts)?;
    let restarted = integrate_path(src, mid, t1, t2, opts)?;
    Ok((0..3).map(|c| (direct[c] - restarted[c]).powi(2)).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::source::AnalyticField;

    #[test]
    fn constant_field_is_exact() {
        let src = AnalyticField::new(|_, _| [1.0, 0.0, 0.0], (0.0, 1.0), 1.0);
        let x = integrate_path(&src, [0.1, 0.2, 0.0], 0.0, 1.0, &FlowOptions::default()).unwrap();
        assert!((x[0] - 1.1).abs() < 1e-14 && x[1] == 0.2 && x[2] == 0.0);
        let e = composition_check(&src, [0.1, 0.2, 0.3], 0.37, 0.9, &FlowOptions::default()).unwrap();
        assert!(e <= 1e-12);
    }

    #[test]
    fn shear_keeps_height() {
        let a = 0.7;
        let src = AnalyticField::new(move |x, _| [a * x[2], 0.0, 0.0], (0.0, 2.0), 1.4);
        let x0 = [0.2, 0.3, 0.8];
        let x = integrate_path(&src, x0, 0.0, 2.0, &FlowOptions::default()).unwrap();
        assert!((x[0] - (x0[0] + a * x0[2] * 2.0)).abs() < 1e-13);
        assert_eq!(x[2], x0[2]);
    }

    #[test]
    fn identity_at_start_and_zero_field() {
        let src = AnalyticField::new(|_, _| [0.0; 3], (0.0, 1.0), 0.0);
        let seeds = [[0.1, 0.1, 0.0], [0.5, 0.2, 0.3]];
        let fm = flow_map(&src, &seeds, 0.0, &[0.0, 0.5, 1.0], &FlowOptions::default()).unwrap();
        assert_eq!(fm.positions[0], seeds.to_vec());
        assert_eq!(fm.positions[2], seeds.to_vec());
    }

    #[test]
    fn cap_exit_and_wall_excursion() {
        let up = AnalyticField::new(|_, _| [0.0, 0.0, 1.0], (0.0, 1.0), 1.0).with_depth(0.5);
        assert!(matches!(
            integrate_path(&up, [0.0, 0.0, 0.1], 0.0, 1.0, &FlowOptions::default()),
            Err(Error::TruncationExit { .. })
        ));
        let down = AnalyticField::new(|_, _| [0.0, 0.0, -1.0], (0.0, 1.0), 1.0);
        assert!(matches!(
            integrate_path(&down, [0.0, 0.0, 0.1], 0.0, 1.0, &FlowOptions::default()),
            Err(Error::WallExcursion { .. })
        ));
    }

    #[test]
    fn bad_seed_rejected() {
        let src = AnalyticField::new(|_, _| [0.0; 3], (0.0, 1.0), 0.0);
        assert!(flow_map(&src, &[[0.0, 0.0, -0.1]], 0.0, &[1.0], &FlowOptions::default()).is_err());
    }
}

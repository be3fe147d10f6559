use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::flow::{flow_map, FlowOptions, SeedStatus};
use super::holder::linear_fit;
use super::source::VelocitySource;

/// Closed-form curves `psi: [0, 1] -> closed half-space`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Manifold {
    Segment {
        a: [f64; 3],
        b: [f64; 3],
    },
    /// Horizontal circle at height `center[2]`.
    Circle {
        center: [f64; 3],
        radius: f64,
    },
    /// `origin + s length direction + amplitude W(s) normal` with the
    /// lacunary series `W(s) = sum_k 2^{-k alpha} cos(2^k pi s)`.
    HolderGraph {
        origin: [f64; 3],
        direction: [f64; 3],
        normal: [f64; 3],
        length: f64,
        amplitude: f64,
        alpha: f64,
        terms: usize,
    },
}

impl Manifold {
    /// Nominal Hölder class of the parametrization.
    pub fn class(&self) -> f64 {
        match self {
            Manifold::HolderGraph { alpha, .. } => *alpha,
            _ => 1.0,
        }
    }

    pub fn eval(&self, s: f64) -> [f64; 3] {
        match self {
            Manifold::Segment { a, b } => std::array::from_fn(|c| a[c] + s * (b[c] - a[c])),
            Manifold::Circle { center, radius } => {
                let th = 2.0 * std::f64::consts::PI * s;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin(), center[2]]
            }
            Manifold::HolderGraph { origin, direction, normal, length, amplitude, alpha, terms } => {
                let w: f64 = (0..*terms)
                    .map(|k| 2f64.powf(-(k as f64) * alpha) * (2f64.powi(k as i32) * std::f64::consts::PI * s).cos())
                    .sum();
                std::array::from_fn(|c| origin[c] + s * length * direction[c] + amplitude * w * normal[c])
            }
        }
    }

    /// `2^levels + 1` equally spaced samples on `[0, 1]`.
    pub fn sample(&self, levels: u32) -> Vec<[f64; 3]> {
        let m = 1usize << levels;
        (0..=m).map(|i| self.eval(i as f64 / m as f64)).collect()
    }
}

/// Hölder class estimate of a sampled curve: slope of
/// `log max_s |psi(s + g) - psi(s)|` against `log g` over dyadic gaps
/// `g <= 1/4`.
pub fn class_estimate(points: &[[f64; 3]]) -> Result<f64> {
    let m = points.len() - 1;
    if m < 16 || !m.is_power_of_two() {
        return Err(Error::invalid("need 2^n + 1 samples with n >= 4"));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut gap = 1;
    while 4 * gap <= m {
        let worst = (0..=m - gap)
            .map(|i| {
                let (a, b) = (points[i], points[i + gap]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        if worst > 0.0 {
            xs.push((gap as f64 / m as f64).ln());
            ys.push(worst.ln());
        }
        gap *= 2;
    }
    if xs.len() < 3 {
        return Err(Error::UnderdeterminedFit("fewer than three gap levels".into()));
    }
    Ok(linear_fit(&xs, &ys).0.min(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifoldTransport {
    pub t: f64,
    pub initial: Vec<[f64; 3]>,
    pub transported: Vec<[f64; 3]>,
    pub class_initial: f64,
    pub class_transported: f64,
}

/// `phi_t = X(t, psi)` on `2^levels + 1` samples, with class estimates
/// before and after.
pub fn transport_manifold<S: VelocitySource + ?Sized>(
    src: &S,
    manifold: &Manifold,
    levels: u32,
    t: f64,
    opts: &FlowOptions,
) -> Result<ManifoldTransport> {
    let initial = manifold.sample(levels);
    let t0 = src.span().0;
    let fm = flow_map(src, &initial, t0, &[t], opts)?;
    if let Some(s) = fm.status.iter().find(|s| **s != SeedStatus::Active) {
        return Err(match *s {
            SeedStatus::TruncationExit { time } => Error::TruncationExit { time },
            SeedStatus::WallExcursion { time, depth } => Error::WallExcursion { time, depth },
            SeedStatus::Active => unreachable!(),
        });
    }
    let transported = fm.positions[0].clone();
    Ok(ManifoldTransport {
        t,
        class_initial: class_estimate(&initial)?,
        class_transported: class_estimate(&transported)?,
        initial,
        transported,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::source::AnalyticField;

    #[test]
    fn segment_at_rest() {
        let src = AnalyticField::new(|_, _| [0.0; 3], (0.0, 1.0), 0.0);
        let m = Manifold::Segment { a: [0.0, 0.0, 0.5], b: [1.0, 0.5, 1.0] };
        let r = transport_manifold(&src, &m, 8, 1.0, &FlowOptions::default()).unwrap();
        assert_eq!(r.initial, r.transported);
        assert!((r.class_transported - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_under_rotation() {
        let c = [1.0, 1.0, 0.5];
        let src = AnalyticField::new(move |x, _| [-(x[1] - c[1]), x[0] - c[0], 0.0], (0.0, 1.0), 1.0);
        let m = Manifold::Circle { center: c, radius: 0.5 };
        let r = transport_manifold(&src, &m, 9, 1.0, &FlowOptions::default()).unwrap();
        for p in &r.transported {
            let rr = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
            assert!((rr - 0.5).abs() < 1e-8);
        }
        assert!((r.class_transported - 1.0).abs() < 0.02, "{}", r.class_transported);
    }

    #[test]
    fn holder_graph_class() {
        let m = Manifold::HolderGraph {
            origin: [0.5, 0.5, 1.0],
            direction: [1.0, 0.0, 0.0],
            normal: [0.0, 0.0, 1.0],
            length: 1.0,
            amplitude: 0.1,
            alpha: 0.5,
            terms: 12,
        };
        let est = class_estimate(&m.sample(12)).unwrap();
        assert!((est - 0.5).abs() < 0.1, "{est}");
    }
}

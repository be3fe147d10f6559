use serde::Serialize;

use crate::error::{Error, Result};

use super::flow::FlowMap;

pub const MIN_PAIRS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderFit {
    /// Fitted slope clamped into `(0, 1]`.
    pub exponent: f64,
    pub raw_slope: f64,
    pub constant: f64,
    pub r_squared: f64,
    pub pairs: usize,
    pub t1: f64,
    pub t2: f64,
}

/// Least-squares line through `(x_i, y_i)`: `(slope, intercept, r^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Fit of `log |dX(t2)|` against `log |dX(t1)|` over seed pairs with
/// `0 < |dX(t1)| <= 1`.
pub fn holder_regression(fm: &FlowMap, t1: f64, t2: f64) -> Result<HolderFit> {
    let missing = |t: f64| Error::invalid(format!("time {t} is not an output time of the flow map"));
    let a = fm.at_time(t1).ok_or_else(|| missing(t1))?;
    let b = fm.at_time(t2).ok_or_else(|| missing(t2))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let d1 = dist(a[i], a[j]);
            let d2 = dist(b[i], b[j]);
            if d1 > 0.0 && d1 <= 1.0 && d2 > 0.0 && d1.is_finite() && d2.is_finite() {
                xs.push(d1.ln());
                ys.push(d2.ln());
            }
        }
    }
    if xs.len() < MIN_PAIRS {
        return Err(Error::UnderdeterminedFit(format!("{} usable pairs, need {MIN_PAIRS}", xs.len())));
    }
    let (slope, icpt, r2) = linear_fit(&xs, &ys);
    Ok(HolderFit {
        exponent: slope.clamp(f64::MIN_POSITIVE, 1.0),
        raw_slope: slope,
        constant: icpt.exp(),
        r_squared: r2,
        pairs: xs.len(),
        t1,
        t2,
    })
}

/// Osgood-type separation bound `e^{1 - e^{-L}} delta^{e^{-L}}` for paths
/// started `delta < 1` apart, where `L = int ||u||_LL dt`.
pub fn osgood_bound(delta: f64, ll_integral: f64) -> f64 {
    let e = (-ll_integral).exp();
    (1.0 - e).exp() * delta.powf(e)
}

/// Seeds around each anchor at distances `2^{-k}`, `k = 0..levels`, in
/// seeded random directions; every anchor also appears as a seed.
pub fn ladder_seeds(anchors: &[[f64; 3]], levels: usize, seed: u64) -> Vec<[f64; 3]> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for a in anchors {
        out.push(*a);
        for k in 0..levels {
            let r = 0.5f64.powi(k as i32);
            let d = loop {
                let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if n > 0.1 && n <= 1.0 {
                    break [v[0] / n, v[1] / n, v[2] / n];
                }
            };
            let mut p = [a[0] + r * d[0], a[1] + r * d[1], a[2] + r * d[2]];
            p[2] = p[2].abs();
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::flow::{flow_map, FlowOptions};
    use crate::lagrangian::source::AnalyticField;

    #[test]
    fn identity_map_fits_exponent_one() {
        let src = AnalyticField::new(|_, _| [0.0; 3], (0.0, 1.0), 0.0);
        let seeds = ladder_seeds(&[[1.0, 1.0, 1.5], [2.0, 1.5, 2.0]], 10, 3);
        let fm = flow_map(&src, &seeds, 0.0, &[1.0], &FlowOptions::default()).unwrap();
        let fit = holder_regression(&fm, 0.0, 1.0).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12 && (fit.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_pairs() {
        let src = AnalyticField::new(|_, _| [0.0; 3], (0.0, 1.0), 0.0);
        let seeds = ladder_seeds(&[[1.0, 1.0, 1.5]], 5, 0);
        let fm = flow_map(&src, &seeds, 0.0, &[1.0], &FlowOptions::default()).unwrap();
        assert!(matches!(holder_regression(&fm, 0.0, 1.0), Err(Error::UnderdeterminedFit(_))));
    }

    #[test]
    fn osgood_bound_limits() {
        assert!((osgood_bound(1e-3, 0.0) - 1e-3).abs() < 1e-18);
        assert!(osgood_bound(1e-3, 1.0) > 1e-3);
    }
}

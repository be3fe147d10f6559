//! Norms and functionals on slab fields: Lebesgue and fractional Sobolev
//! norms, Lipschitz and log-Lipschitz moduli, the slab boundary-integral
//! identity, and ratio checks for the embedding and interpolation
//! inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    boundary_trace, reflect_extend, Axis, BoundaryField, FieldRef, MatrixField, Parity, ScalarField, Stencil,
    VectorField,
};

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("exponent p = {p} must be at least 1")));
    }
    Ok(())
}

fn lp_of_values<'a>(values: impl Iterator<Item = &'a f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 2.0 {
        return (values.map(|v| v * v).sum::<f64>() * cell).sqrt();
    }
    (values.map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// `(sum |v|^p h^3)^{1/p}`, or the maximum for `p = inf`.
pub fn lp_norm(field: &ScalarField, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(lp_of_values(field.values.iter(), p, field.grid.cell_volume()))
}

/// L^p norm of the pointwise Euclidean magnitude.
pub fn lp_norm_vector(field: &VectorField, p: f64) -> Result<f64> {
    lp_norm(&field.magnitude(), p)
}

/// L^p norm of the pointwise Frobenius magnitude.
pub fn lp_norm_matrix(field: &MatrixField, p: f64) -> Result<f64> {
    lp_norm(&field.magnitude(), p)
}

pub fn lp_norm_of(field: FieldRef<'_>, p: f64) -> Result<f64> {
    match field {
        FieldRef::Scalar(s) => lp_norm(s, p),
        FieldRef::Vector(v) => lp_norm_vector(v, p),
    }
}

fn interior_values(field: &ScalarField, margin: usize) -> impl Iterator<Item = &f64> {
    let g = field.grid;
    field.values.iter().enumerate().filter_map(move |(n, v)| {
        let (i, j, k) = g.unravel(n);
        let inside = |a: usize, len: usize| a >= margin && a + margin < len;
        (inside(i, g.nx) && inside(j, g.ny) && inside(k, g.nz)).then_some(v)
    })
}

/// L^p norm restricted to cells at least `margin` cells from every face of
/// the tile.
pub fn interior_lp(field: &ScalarField, p: f64, margin: usize) -> f64 {
    lp_of_values(interior_values(field, margin), p, field.grid.cell_volume())
}

pub fn interior_l2(field: &ScalarField, margin: usize) -> f64 {
    interior_lp(field, 2.0, margin)
}

fn fft_3d(data: &mut [Complex<f64>], dims: [usize; 3]) {
    let mut planner = FftPlanner::new();
    let [n0, n1, n2] = dims;
    let f0 = planner.plan_fft_forward(n0);
    for line in data.chunks_mut(n0) {
        f0.process(line);
    }
    let mut buf = Vec::new();
    for axis in [1, 2] {
        let (n, stride, count) = if axis == 1 { (n1, n0, n0 * n2) } else { (n2, n0 * n1, n0 * n1) };
        let plan = planner.plan_fft_forward(n);
        buf.resize(n, Complex::new(0.0, 0.0));
        for line in 0..count {
            let base = if axis == 1 { (line % n0) + (line / n0) * n0 * n1 } else { line };
            for m in 0..n {
                buf[m] = data[base + m * stride];
            }
            plan.process(&mut buf);
            for m in 0..n {
                data[base + m * stride] = buf[m];
            }
        }
    }
}

fn wavenumber(m: usize, n: usize, l: f64) -> f64 {
    let signed = if 2 * m >= n { m as f64 - n as f64 } else { m as f64 };
    2.0 * std::f64::consts::PI * signed / l
}

/// Fractional Sobolev norm through the Fourier weight `(1 + |xi|^2)^s` on the
/// even reflection across the wall.
pub fn hs_norm(field: &ScalarField, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("Sobolev order s = {s} outside [0, 1]")));
    }
    let ext = reflect_extend(field, Parity::Even);
    let g = ext.grid;
    let dims = [g.nx, g.ny, g.nz];
    let mut data: Vec<Complex<f64>> = ext.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_3d(&mut data, dims);
    let mut acc = 0.0;
    for (n, c) in data.iter().enumerate() {
        let (i, j, k) = g.unravel(n);
        let xi2 = wavenumber(i, g.nx, g.l1()).powi(2)
            + wavenumber(j, g.ny, g.l2()).powi(2)
            + wavenumber(k, g.nz, g.l3()).powi(2);
        acc += (1.0 + xi2).powf(s) * c.norm_sqr();
    }
    let n_ext = g.len() as f64;
    Ok((acc * g.cell_volume() / n_ext / 2.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulusKind {
    /// `|g(x) - g(y)| / (r (1 - log r))` over `0 < r <= 1`.
    LogLipschitz,
    /// `|g(x) - g(y)| / r`.
    Lipschitz,
}

/// Deterministic pair sampler: every pair within `radius` cells, axis-aligned
/// ladders of longer offsets up to unit distance, and `random_pairs` seeded
/// uniform pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSampler {
    pub radius: usize,
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for PairSampler {
    fn default() -> Self {
        PairSampler { radius: 4, random_pairs: 10_000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub kind: ModulusKind,
    /// `sup |g|` over cells.
    pub sup_value: f64,
    pub seminorm: f64,
    pub argmax: Option<([f64; 3], [f64; 3])>,
    pub pairs: usize,
}

impl ModulusReport {
    /// `sup |g| + seminorm`.
    pub fn norm(&self) -> f64 {
        self.sup_value + self.seminorm
    }
}

fn ladder(radius: usize, max_cells: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = (radius + 1) as f64;
    while (d as usize) <= max_cells {
        let c = d as usize;
        if out.last() != Some(&c) {
            out.push(c);
        }
        d *= std::f64::consts::SQRT_2;
    }
    if max_cells > radius && out.last() != Some(&max_cells) {
        out.push(max_cells);
    }
    out
}

/// Sampled modulus of continuity. Distances are plain (no lateral wrap): only
/// pairs inside the tile are compared.
pub fn modulus_seminorm(field: FieldRef<'_>, kind: ModulusKind, sampler: &PairSampler) -> ModulusReport {
    let (grid, comps): (_, Vec<&[f64]>) = match field {
        FieldRef::Scalar(s) => (s.grid, vec![&s.values[..]]),
        FieldRef::Vector(v) => (v.grid(), v.comps.iter().map(|c| &c.values[..]).collect()),
    };
    let value_at = |n: usize| -> f64 { comps.iter().map(|c| c[n] * c[n]).sum::<f64>().sqrt() };
    let diff = |a: usize, b: usize| -> f64 { comps.iter().map(|c| (c[a] - c[b]) * (c[a] - c[b])).sum::<f64>().sqrt() };
    let sup_value = (0..grid.len()).map(value_at).fold(0.0, f64::max);
    let h = grid.h;
    let weight = |r: f64| -> Option<f64> {
        match kind {
            ModulusKind::Lipschitz => Some(r),
            ModulusKind::LogLipschitz => (r <= 1.0).then(|| r * (1.0 - r.ln())),
        }
    };
    let mut best = 0.0;
    let mut argmax = None;
    let mut pairs = 0usize;
    let mut consider = |a: usize, b: usize, r: f64| {
        if let Some(w) = weight(r) {
            pairs += 1;
            let q = diff(a, b) / w;
            if q > best {
                best = q;
                argmax = Some((grid.center_of(a), grid.center_of(b)));
            }
        }
    };
    let (nx, ny, nz) = (grid.nx as isize, grid.ny as isize, grid.nz as isize);
    let rad = sampler.radius as isize;
    let mut offsets = Vec::new();
    for dk in -rad..=rad {
        for dj in -rad..=rad {
            for di in -rad..=rad {
                let r2 = di * di + dj * dj + dk * dk;
                let positive = (dk, dj, di) > (0, 0, 0);
                if positive && r2 <= rad * rad {
                    offsets.push([di, dj, dk]);
                }
            }
        }
    }
    let unit_cells = (1.0 / h).floor() as usize;
    for d in ladder(sampler.radius, unit_cells.max(sampler.radius)) {
        for a in 0..3 {
            let mut o = [0isize; 3];
            o[a] = d as isize;
            offsets.push(o);
        }
    }
    for n in 0..grid.len() {
        let (i, j, k) = grid.unravel(n);
        let (i, j, k) = (i as isize, j as isize, k as isize);
        for o in &offsets {
            let (a, b, c) = (i + o[0], j + o[1], k + o[2]);
            if a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz {
                continue;
            }
            let m = grid.idx(a as usize, b as usize, c as usize);
            let r = h * ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt();
            consider(n, m, r);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    for _ in 0..sampler.random_pairs {
        let a = rng.gen_range(0..grid.len());
        let b = rng.gen_range(0..grid.len());
        if a == b {
            continue;
        }
        let (x, y) = (grid.center_of(a), grid.center_of(b));
        let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
        consider(a, b, r);
    }
    ModulusReport { kind, sup_value, seminorm: best, argmax, pairs }
}

/// Gagliardo seminorm of order `s` and exponent `p` of wall data:
/// `(sum_{a != b} |phi_a - phi_b|^p / |y_a - y_b|^{2 + s p} h^4)^{1/p}`,
/// with periodic minimum-image distances on the tile.
pub fn gagliardo_seminorm(phi: &BoundaryField, s: f64, p: f64) -> f64 {
    let g = phi.grid;
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    let expo = 2.0 + s * p;
    // distance weights depend only on the wrapped offset
    let mut w = vec![0.0; nx * ny];
    for r2 in 0..ny {
        for r1 in 0..nx {
            if r1 == 0 && r2 == 0 {
                continue;
            }
            let d1 = r1.min(nx - r1) as f64 * h;
            let d2 = r2.min(ny - r2) as f64 * h;
            w[r1 + nx * r2] = (d1 * d1 + d2 * d2).powf(-0.5 * expo);
        }
    }
    let mut acc = 0.0;
    for b2 in 0..ny {
        for b1 in 0..nx {
            let vb = phi.at(b1, b2);
            for a2 in 0..ny {
                for a1 in 0..nx {
                    let dv = phi.at(a1, a2) - vb;
                    if dv != 0.0 {
                        let r1 = (a1 + nx - b1) % nx;
                        let r2 = (a2 + ny - b2) % ny;
                        acc += dv.abs().powf(p) * w[r1 + nx * r2];
                    }
                }
            }
        }
    }
    (acc * h.powi(4)).powf(1.0 / p)
}

/// Both sides of `int_{x3=0} h dS = int_{0 <= x3 <= 1} [h + (x3 - 1) h_{x3}] dx`.
/// The cell straddling `x3 = 1` contributes its covered fraction, with the
/// integrand interpolated linearly to the midpoint of the covered part.
pub fn boundary_integral_slab(h: &ScalarField) -> Result<(f64, f64)> {
    let g = h.grid;
    if g.x3_origin != 0.0 || g.l3() < 1.0 {
        return Err(Error::InvalidDomain(format!("slab of height {} cannot hold the unit layer", g.l3())));
    }
    let lhs = boundary_trace(h).integral();
    let dz = Stencil::periodic().partial(h, Axis::X3);
    let layer = g.nx * g.ny;
    let column = |k: usize, n: usize| {
        let z = g.x3(k);
        h.values[n + k * layer] + (z - 1.0) * dz.values[n + k * layer]
    };
    let full = (1.0 / g.h).floor() as usize;
    let full = full.min(g.nz);
    let frac = (1.0 - full as f64 * g.h) / g.h;
    let mut rhs = 0.0;
    for n in 0..layer {
        let mut col = 0.0;
        for k in 0..full {
            col += column(k, n);
        }
        if frac > 1e-12 && full < g.nz {
            let zm = full as f64 * g.h + 0.5 * frac * g.h;
            let (k0, k1) = if full + 1 < g.nz { (full, full + 1) } else { (full - 1, full) };
            let t = (zm - g.x3(k0)) / g.h;
            let val = (1.0 - t) * column(k0, n) + t * column(k1, n);
            col += frac * val;
        }
        rhs += col;
    }
    Ok((lhs, rhs * g.cell_volume()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InequalityKind {
    /// `||u||_inf` against `||u||_2 + ||grad u||_p`, for `p > 3`.
    Embed,
    /// `||u||_p` against `||u||_2^{(6-p)/2p} ||grad u||_2^{(3p-6)/2p}`, for
    /// `2 <= p <= 6`.
    Interp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub functional: String,
    pub exponent: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub h: f64,
}

impl RatioReport {
    pub const CSV_HEADER: &'static str = "functional,exponent,lhs,rhs,ratio,h";

    pub fn csv_row(&self) -> String {
        let ratio = self.ratio.map_or("NA".to_string(), |r| format!("{r:.12e}"));
        format!("{},{},{:.12e},{:.12e},{},{}", self.functional, self.exponent, self.lhs, self.rhs, ratio, self.h)
    }
}

fn gradient_magnitude(field: FieldRef<'_>) -> ScalarField {
    let s = Stencil::open();
    match field {
        FieldRef::Scalar(f) => s.gradient(f).magnitude(),
        FieldRef::Vector(v) => s.jacobian(v).magnitude(),
    }
}

pub fn inequality_check(field: FieldRef<'_>, kind: InequalityKind, p: f64) -> Result<RatioReport> {
    let h = match field {
        FieldRef::Scalar(s) => s.grid.h,
        FieldRef::Vector(v) => v.grid().h,
    };
    let grad = gradient_magnitude(field.clone());
    let (functional, lhs, rhs) = match kind {
        InequalityKind::Embed => {
            if !(p > 3.0) {
                return Err(Error::invalid(format!("embedding needs p > 3, got {p}")));
            }
            let lhs = lp_norm_of(field.clone(), f64::INFINITY)?;
            let rhs = lp_norm_of(field, 2.0)? + lp_norm(&grad, p)?;
            ("embed", lhs, rhs)
        }
        InequalityKind::Interp => {
            if !(2.0..=6.0).contains(&p) {
                return Err(Error::invalid(format!("interpolation needs 2 <= p <= 6, got {p}")));
            }
            let lhs = lp_norm_of(field.clone(), p)?;
            let a = (6.0 - p) / (2.0 * p);
            let b = (3.0 * p - 6.0) / (2.0 * p);
            let rhs = lp_norm_of(field, 2.0)?.powf(a) * lp_norm(&grad, 2.0)?.powf(b);
            ("interp", lhs, rhs)
        }
    };
    Ok(RatioReport {
        functional: functional.to_string(),
        exponent: p,
        lhs,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn lp_of_constant_on_unit_volume() {
        let g = make_grid(4, 4, 8, 0.25).unwrap();
        // volume 2: scale so the slab is the unit cube
        let g1 = make_grid(4, 4, 4, 0.25).unwrap();
        let c = ScalarField::constant(g1, -1.5);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_relative_eq!(lp_norm(&c, p).unwrap(), 1.5, max_relative = 1e-14);
        }
        assert!(lp_norm(&c, 0.5).is_err());
        let half = ScalarField::from_fn(g, |x| if x[2] < 1.0 { 1.0 } else { 0.0 });
        assert_relative_eq!(lp_norm(&half, 2.0).unwrap(), (g.volume() / 2.0).sqrt(), max_relative = 1e-14);
        let x3 = ScalarField::from_fn(g, |x| x[2]);
        assert_eq!(lp_norm(&x3, f64::INFINITY).unwrap(), 2.0 - 0.125);
    }

    #[test]
    fn hs_norm_at_zero_is_l2() {
        let g = make_grid(8, 6, 10, 0.2).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 2.0).sin() * (-x[2]).exp() + x[1]);
        assert_relative_eq!(hs_norm(&f, 0.0).unwrap(), lp_norm(&f, 2.0).unwrap(), max_relative = 1e-12);
        let c = ScalarField::constant(g, 2.0);
        assert_relative_eq!(hs_norm(&c, 0.7).unwrap(), lp_norm(&c, 2.0).unwrap(), max_relative = 1e-12);
        assert!(hs_norm(&f, 1.5).is_err());
    }

    #[test]
    fn hs_norm_of_single_lateral_mode() {
        let g = make_grid(16, 4, 8, 0.125).unwrap();
        let k = 2.0 * PI / g.l1();
        let f = ScalarField::from_fn(g, |x| (k * x[0]).sin());
        let expect = (1.0 + k * k).sqrt() * lp_norm(&f, 2.0).unwrap();
        assert_relative_eq!(hs_norm(&f, 1.0).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn moduli_of_linear_and_constant_fields() {
        let g = make_grid(16, 8, 8, 1.0 / 8.0).unwrap();
        let s = PairSampler::default();
        let c = ScalarField::constant(g, 4.0);
        for kind in [ModulusKind::Lipschitz, ModulusKind::LogLipschitz] {
            assert_eq!(modulus_seminorm(FieldRef::Scalar(&c), kind, &s).seminorm, 0.0);
        }
        let x1 = ScalarField::from_fn(g, |x| x[0]);
        let lip = modulus_seminorm(FieldRef::Scalar(&x1), ModulusKind::Lipschitz, &s);
        assert_relative_eq!(lip.seminorm, 1.0, max_relative = 1e-12);
        let ll = modulus_seminorm(FieldRef::Scalar(&x1), ModulusKind::LogLipschitz, &s);
        assert_relative_eq!(ll.seminorm, 1.0, max_relative = 1e-12);
        let (a, b) = ll.argmax.unwrap();
        assert_relative_eq!(
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt(),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn slab_identity_on_closed_forms() {
        let g = make_grid(8, 8, 16, 0.125).unwrap();
        assert_eq!(boundary_integral_slab(&ScalarField::zeros(g)).unwrap(), (0.0, 0.0));
        let phi = |x: [f64; 3]| 1.0 + 0.5 * (2.0 * PI * x[0]).cos();
        let f = ScalarField::from_fn(g, move |x| (-x[2]).exp() * phi(x));
        let (lhs, rhs) = boundary_integral_slab(&f).unwrap();
        // int phi over the unit tile is 1
        assert!((lhs - 1.0).abs() < 1e-2 && (rhs - 1.0).abs() < 1e-2, "{lhs} {rhs}");
        let short = make_grid(8, 8, 8, 0.1).unwrap();
        assert!(matches!(boundary_integral_slab(&ScalarField::zeros(short)), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn straddling_cell_is_weighted_by_its_fraction() {
        // h = 0.3 puts a face at 0.9 and the next at 1.2
        let g = make_grid(4, 4, 8, 0.3).unwrap();
        let f = ScalarField::from_fn(g, |x| 1.0 + x[1]);
        let (lhs, rhs) = boundary_integral_slab(&f).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn inequality_ratios() {
        let g = make_grid(8, 8, 8, 0.25).unwrap();
        let f =
            ScalarField::from_fn(g, |x| (-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2) + (x[2] - 1.0).powi(2))).exp());
        let r = inequality_check(FieldRef::Scalar(&f), InequalityKind::Interp, 2.0).unwrap();
        assert_eq!(r.ratio, Some(1.0));
        assert!(inequality_check(FieldRef::Scalar(&f), InequalityKind::Interp, 7.0).is_err());
        assert!(inequality_check(FieldRef::Scalar(&f), InequalityKind::Embed, 3.0).is_err());
        let c = ScalarField::constant(g, 2.0);
        let r = inequality_check(FieldRef::Scalar(&c), InequalityKind::Embed, 4.0).unwrap();
        assert_relative_eq!(r.ratio.unwrap(), 1.0 / g.volume().sqrt(), max_relative = 1e-14);
        assert!(r.csv_row().starts_with("embed,4,"));
    }

    #[test]
    fn gagliardo_of_constant_vanishes() {
        let g = make_grid(8, 8, 8, 0.25).unwrap();
        let c = BoundaryField::from_fn(g, |_| 1.0);
        assert_eq!(gagliardo_seminorm(&c, 0.5, 2.0), 0.0);
        let b = BoundaryField::from_fn(g, |y| (y[0] * 3.0).sin());
        assert!(gagliardo_seminorm(&b, 0.5, 2.0) > 0.0);
    }
}

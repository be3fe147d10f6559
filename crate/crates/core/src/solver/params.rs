use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `P(rho) = a rho^gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    pub a: f64,
    pub gamma: f64,
}

impl Default for PressureLaw {
    fn default() -> Self {
        PressureLaw { a: 1.0, gamma: 2.0 }
    }
}

/// `K(x1, x2) = k0 + k1 exp(-|x - center|^2 / sigma^2)`, with the distance
/// taken to the nearest periodic image of `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlipFunction {
    pub k0: f64,
    #[serde(default)]
    pub k1: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

fn default_sigma() -> f64 {
    1.0
}

impl SlipFunction {
    pub fn constant(k0: f64) -> Self {
        SlipFunction { k0, k1: 0.0, sigma: 1.0, center: [0.0, 0.0] }
    }

    /// Lower bound `K_ = k0` (for `k1 >= 0`).
    pub fn lower_bound(&self) -> f64 {
        self.k0.min(self.k0 + self.k1)
    }

    pub fn eval(&self, y: [f64; 2], periods: [f64; 2]) -> f64 {
        if self.k1 == 0.0 {
            return self.k0;
        }
        let wrap = |d: f64, l: f64| d - l * (d / l).round();
        let d1 = wrap(y[0] - self.center[0], periods[0]);
        let d2 = wrap(y[1] - self.center[1], periods[1]);
        self.k0 + self.k1 * (-(d1 * d1 + d2 * d2) / (self.sigma * self.sigma)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub mu: f64,
    pub lambda: f64,
    #[serde(default)]
    pub pressure: PressureLaw,
    /// Reference density `rho~`.
    pub rho_ref: f64,
    /// Density ceiling `rho_bar`.
    pub rho_max: f64,
    /// Initial-data ceiling `rho_bar_1`, with `rho~ < rho_bar_1 < rho_bar`.
    pub rho_max1: f64,
    pub slip: SlipFunction,
    pub q: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            mu: 1.0,
            lambda: 0.5,
            pressure: PressureLaw::default(),
            rho_ref: 1.0,
            rho_max: 3.0,
            rho_max1: 2.0,
            slip: SlipFunction::constant(1.0),
            q: 7.0,
        }
    }
}

impl PhysicalParams {
    pub fn pressure(&self, rho: f64) -> f64 {
        self.pressure.a * rho.powf(self.pressure.gamma)
    }

    pub fn pressure_prime(&self, rho: f64) -> f64 {
        let PressureLaw { a, gamma } = self.pressure;
        a * gamma * rho.powf(gamma - 1.0)
    }

    /// `P(rho~)`.
    pub fn pressure_ref(&self) -> f64 {
        self.pressure(self.rho_ref)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect()
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }
}

/// Evaluates every data condition without failing.
pub fn validation_report(p: &PhysicalParams) -> ValidationReport {
    let mut r = ValidationReport::default();
    r.push(
        "viscosity",
        p.mu > 0.0 && p.lambda > 0.0 && p.lambda < 1.25 * p.mu,
        format!("need mu > 0 and 0 < lambda < 5 mu / 4; mu = {}, lambda = {}", p.mu, p.lambda),
    );
    let qlhs = (p.q - 2.0).powi(2) / (4.0 * (p.q - 1.0));
    let qrhs = if p.lambda > 0.0 { p.mu / p.lambda } else { f64::INFINITY };
    r.push(
        "integrability exponent",
        p.q > 6.0 && qlhs < qrhs,
        format!("need q > 6 and (q-2)^2/(4(q-1)) = {qlhs:.6} < mu/lambda = {qrhs:.6}; q = {}", p.q),
    );
    r.push(
        "densities",
        0.0 < p.rho_ref && p.rho_ref < p.rho_max1 && p.rho_max1 < p.rho_max,
        format!("need 0 < rho~ < rho_bar_1 < rho_bar; got {} < {} < {}", p.rho_ref, p.rho_max1, p.rho_max),
    );
    r.push(
        "slip function",
        p.slip.k0 > 0.0 && p.slip.k1 >= 0.0 && p.slip.sigma > 0.0,
        format!(
            "need K >= K_ = k0 > 0 (k1 >= 0, sigma > 0); k0 = {}, k1 = {}, sigma = {}",
            p.slip.k0, p.slip.k1, p.slip.sigma
        ),
    );
    r.push(
        "pressure law",
        p.pressure.a > 0.0 && p.pressure.gamma >= 2.0,
        format!(
            "need a > 0 and gamma >= 2 for P in C^2 with P(0) = 0; a = {}, gamma = {}",
            p.pressure.a, p.pressure.gamma
        ),
    );
    let pref = p.pressure_ref();
    let mut sign_ok = p.pressure_prime(p.rho_ref) > 0.0;
    for i in 1..=100 {
        let rho = p.rho_max * i as f64 / 100.0;
        if rho == p.rho_ref {
            continue;
        }
        if (rho - p.rho_ref) * (p.pressure(rho) - pref) <= 0.0 {
            sign_ok = false;
        }
    }
    r.push(
        "pressure monotonicity",
        sign_ok,
        "need P'(rho~) > 0 and (rho - rho~)(P(rho) - P(rho~)) > 0 on (0, rho_bar]".into(),
    );
    r
}

pub fn validate_params(p: &PhysicalParams) -> Result<ValidationReport> {
    let r = validation_report(p);
    if r.passed() {
        Ok(r)
    } else {
        Err(Error::InvalidParams(r.failures()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eos {
    P,
    Pprime,
    G,
}

/// `P`, `P'` or `G(rho) = rho int_{rho~}^{rho} (P(s) - P(rho~)) / s^2 ds`.
pub fn eos_eval(p: &PhysicalParams, rho: f64, which: Eos) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::invalid(format!("density {rho} is negative")));
    }
    Ok(match which {
        Eos::P => p.pressure(rho),
        Eos::Pprime => p.pressure_prime(rho),
        Eos::G => potential_energy(p, rho),
    })
}

fn potential_energy(p: &PhysicalParams, rho: f64) -> f64 {
    if p.pressure.gamma == 2.0 {
        return p.pressure.a * (rho - p.rho_ref).powi(2);
    }
    let pref = p.pressure_ref();
    if rho == 0.0 {
        return pref;
    }
    let f = |s: f64| (p.pressure(s) - pref) / (s * s);
    rho * adaptive_simpson(&f, p.rho_ref, rho, 1e-13, 50)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// `sigma(t) = min(t, 1)`.
pub fn sigma(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time {t} is negative")));
    }
    Ok(t.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(mu: f64, lambda: f64, q: f64) -> PhysicalParams {
        PhysicalParams { mu, lambda, q, ..PhysicalParams::default() }
    }

    fn check<'a>(r: &'a ValidationReport, name: &str) -> &'a Check {
        r.checks.iter().find(|c| c.name == name).unwrap()
    }

    #[test]
    fn viscosity_and_exponent_conditions() {
        let r = validation_report(&params(1.0, 1.0, 7.0));
        assert!(check(&r, "viscosity").passed);
        assert!(!check(&r, "integrability exponent").passed);
        assert!(validate_params(&params(1.0, 1.0, 7.0)).is_err());
        assert!(validate_params(&params(1.0, 0.5, 7.0)).is_ok());
        let r = validation_report(&params(1.0, 2.0, 7.0));
        assert!(!check(&r, "viscosity").passed);
    }

    #[test]
    fn density_ordering_and_slip_bound() {
        let mut p = PhysicalParams::default();
        p.rho_max1 = 5.0;
        assert!(!check(&validation_report(&p), "densities").passed);
        let mut p = PhysicalParams::default();
        p.slip.k0 = 0.0;
        assert!(!check(&validation_report(&p), "slip function").passed);
        let mut p = PhysicalParams::default();
        p.pressure.gamma = 1.4;
        match validate_params(&p) {
            Err(Error::InvalidParams(f)) => assert_eq!(f.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equation_of_state() {
        let p = PhysicalParams::default();
        assert_eq!(eos_eval(&p, 1.0, Eos::G).unwrap(), 0.0);
        assert_eq!(eos_eval(&p, 2.0, Eos::G).unwrap(), 1.0);
        assert_eq!(eos_eval(&p, 0.0, Eos::P).unwrap(), 0.0);
        assert_eq!(eos_eval(&p, 2.0, Eos::Pprime).unwrap(), 4.0);
        assert!(eos_eval(&p, -1.0, Eos::P).is_err());
    }

    #[test]
    fn potential_energy_quadrature_matches_power_law_closed_form() {
        for gamma in [2.5, 3.0, 4.0] {
            let mut p = PhysicalParams::default();
            p.pressure = PressureLaw { a: 0.7, gamma };
            for rho in [0.1, 0.5, 1.0, 1.7, 2.9] {
                let g = eos_eval(&p, rho, Eos::G).unwrap();
                let pref = p.pressure_ref();
                let oracle = rho * 0.7 * (rho.powf(gamma - 1.0) - 1.0) / (gamma - 1.0) + pref * (1.0 - rho / p.rho_ref);
                assert_relative_eq!(g, oracle, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(0.5).unwrap(), 0.5);
        assert_eq!(sigma(3.0).unwrap(), 1.0);
        assert_eq!(sigma(0.0).unwrap(), 0.0);
        assert!(sigma(-0.1).is_err());
    }

    #[test]
    fn slip_function_uses_nearest_image() {
        let k = SlipFunction { k0: 1.0, k1: 2.0, sigma: 0.5, center: [0.1, 0.1] };
        assert_relative_eq!(k.eval([0.1, 0.1], [4.0, 4.0]), 3.0);
        assert_relative_eq!(k.eval([3.9, 0.1], [4.0, 4.0]), k.eval([0.3, 0.1], [4.0, 4.0]), max_relative = 1e-12);
        assert_eq!(k.lower_bound(), 1.0);
    }
}

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, VectorField};

pub type ForceFn = Arc<dyn Fn([f64; 3], f64) -> [f64; 3] + Send + Sync>;

/// External force density `f(x, t)`.
#[derive(Clone, Default, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "kebab-case")]
pub enum Forcing {
    #[default]
    Zero,
    Constant {
        value: [f64; 3],
    },
    /// `amplitude * exp(-|x - center|^2 / width^2) * exp(-decay t)`.
    Bump {
        amplitude: [f64; 3],
        center: [f64; 3],
        width: f64,
        #[serde(default)]
        decay: f64,
    },
    /// Arbitrary closure; not serializable.
    #[serde(skip)]
    Field(ForceFn),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Constant { value } => write!(f, "Constant({value:?})"),
            Forcing::Bump { amplitude, center, width, decay } => {
                write!(f, "Bump {{ amplitude: {amplitude:?}, center: {center:?}, width: {width}, decay: {decay} }}")
            }
            Forcing::Field(_) => write!(f, "Field(<closure>)"),
        }
    }
}

impl Forcing {
    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    pub fn eval(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        match self {
            Forcing::Zero => [0.0; 3],
            Forcing::Constant { value } => *value,
            Forcing::Bump { amplitude, center, width, decay } => {
                let r2: f64 = (0..3).map(|a| (x[a] - center[a]).powi(2)).sum();
                let s = (-r2 / (width * width) - decay * t).exp();
                [amplitude[0] * s, amplitude[1] * s, amplitude[2] * s]
            }
            Forcing::Field(f) => f(x, t),
        }
    }

    pub fn sample(&self, grid: Grid, t: f64) -> VectorField {
        VectorField::from_fn(grid, |x| self.eval(x, t))
    }
}

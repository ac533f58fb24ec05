//! Lyapunov test functions with exact first and second derivatives.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestFunctionError {
    #[error("parameter `{name}` = {value} out of range: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("smoothing polynomial for n = {0} is not monotone")]
    NonMonotoneSmoothing(u32),
}

/// Serializable description of a test-function family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// `g(y) = exp(-y^{-δ})`.
    ExpInversePower { delta: f64 },
    /// `g(y) = ln ln(n² y)` above `1/(n e)`, zero below `1/(2 n e)`.
    LogLog { n: u32 },
    /// `g(y) = y`.
    Linear,
    Constant { value: f64 },
    /// `g(y) = 1 - (1 + y)^{-1}`.
    ShiftedInverse,
}

#[derive(Debug, Clone, PartialEq)]
struct LogLogShape {
    n: u32,
    log_n2: f64,
    /// left end of the smoothing window, `1/(2ne)`
    lo: f64,
    /// right end, `1/(ne)`
    hi: f64,
    /// coefficients of `t^4, t^5, t^6` on the window
    coeffs: [f64; 3],
}

impl LogLogShape {
    fn new(n: u32) -> Result<Self, TestFunctionError> {
        let nf = f64::from(n);
        let lo = 1.0 / (2.0 * nf * E);
        let hi = 1.0 / (nf * E);
        let h = hi - lo;
        let log_n2 = 2.0 * nf.ln();
        let l = log_n2 + hi.ln();
        let p = l.ln();
        let p1 = h / (l * hi);
        let p2 = -h * h * (1.0 / (l * l) + 1.0 / l) / (hi * hi);
        // p(0) = p'(0) = p''(0) = p'''(0) = 0 and (p, p', p'') matched at t = 1
        let coeffs = [
            15.0 * p - 5.0 * p1 + 0.5 * p2,
            -24.0 * p + 9.0 * p1 - p2,
            10.0 * p - 4.0 * p1 + 0.5 * p2,
        ];
        let shape = LogLogShape {
            n,
            log_n2,
            lo,
            hi,
            coeffs,
        };
        let monotone = (0..=2000).all(|i| shape.poly(f64::from(i) / 2000.0).1 >= 0.0);
        if monotone {
            Ok(shape)
        } else {
            Err(TestFunctionError::NonMonotoneSmoothing(n))
        }
    }

    /// `(p, p', p'')` in the window coordinate `t`.
    fn poly(&self, t: f64) -> (f64, f64, f64) {
        let [c4, c5, c6] = self.coeffs;
        let t2 = t * t;
        let t3 = t2 * t;
        (
            t3 * t * (c4 + t * (c5 + t * c6)),
            t3 * (4.0 * c4 + t * (5.0 * c5 + t * 6.0 * c6)),
            t2 * (12.0 * c4 + t * (20.0 * c5 + t * 30.0 * c6)),
        )
    }

    fn log_arg(&self, y: f64) -> f64 {
        self.log_n2 + y.ln()
    }

    fn eval(&self, y: f64) -> (f64, f64, f64) {
        if y <= self.lo {
            (0.0, 0.0, 0.0)
        } else if y < self.hi {
            let h = self.hi - self.lo;
            let (p, dp, ddp) = self.poly((y - self.lo) / h);
            (p, dp / h, ddp / (h * h))
        } else {
            let l = self.log_arg(y);
            (l.ln(), 1.0 / (l * y), -(1.0 / (l * l) + 1.0 / l) / (y * y))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    ExpInversePower { delta: f64 },
    LogLog(LogLogShape),
    Linear,
    Constant(f64),
    ShiftedInverse,
    Combination(Vec<(f64, TestFunction)>),
}

/// A `C²` function on `(0, ∞)` with its derivatives and shape metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    kind: Kind,
}

impl TestFunction {
    pub fn exp_inverse_power(delta: f64) -> Result<Self, TestFunctionError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(TestFunctionError::Parameter {
                name: "delta",
                value: delta,
                reason: "must be positive",
            });
        }
        Ok(Self {
            kind: Kind::ExpInversePower { delta },
        })
    }

    pub fn log_log(n: u32) -> Result<Self, TestFunctionError> {
        if n < 9 {
            return Err(TestFunctionError::Parameter {
                name: "n",
                value: f64::from(n),
                reason: "must be an integer >= 9",
            });
        }
        Ok(Self {
            kind: Kind::LogLog(LogLogShape::new(n)?),
        })
    }

    pub fn linear() -> Self {
        Self { kind: Kind::Linear }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: Kind::Constant(value),
        }
    }

    pub fn shifted_inverse() -> Self {
        Self {
            kind: Kind::ShiftedInverse,
        }
    }

    /// `Σ cᵢ gᵢ`.
    pub fn combination(terms: Vec<(f64, TestFunction)>) -> Self {
        Self {
            kind: Kind::Combination(terms),
        }
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<Self, TestFunctionError> {
        match *spec {
            FamilySpec::ExpInversePower { delta } => Self::exp_inverse_power(delta),
            FamilySpec::LogLog { n } => Self::log_log(n),
            FamilySpec::Linear => Ok(Self::linear()),
            FamilySpec::Constant { value } => Ok(Self::constant(value)),
            FamilySpec::ShiftedInverse => Ok(Self::shifted_inverse()),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.kind {
            Kind::ExpInversePower { .. } => "exp-inverse-power",
            Kind::LogLog(_) => "log-log",
            Kind::Linear => "linear",
            Kind::Constant(_) => "constant",
            Kind::ShiftedInverse => "shifted-inverse",
            Kind::Combination(_) => "combination",
        }
    }

    /// `(g, g', g'')` at `y`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        match &self.kind {
            Kind::ExpInversePower { delta } => {
                if y <= 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let d = *delta;
                let ymd = y.powf(-d);
                let g = (-ymd).exp();
                let g1 = d * ymd / y * g;
                let g2 = (d * d * ymd * ymd - d * (1.0 + d) * ymd) / (y * y) * g;
                (g, g1, g2)
            }
            Kind::LogLog(shape) => shape.eval(y),
            Kind::Linear => (y, 1.0, 0.0),
            Kind::Constant(c) => (*c, 0.0, 0.0),
            Kind::ShiftedInverse => {
                let w = 1.0 + y;
                (y / w, 1.0 / (w * w), -2.0 / (w * w * w))
            }
            Kind::Combination(terms) => terms.iter().fold((0.0, 0.0, 0.0), |acc, (c, g)| {
                let (v, d1, d2) = g.eval(y);
                (acc.0 + c * v, acc.1 + c * d1, acc.2 + c * d2)
            }),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.eval(y).0
    }

    pub fn d1(&self, y: f64) -> f64 {
        self.eval(y).1
    }

    pub fn d2(&self, y: f64) -> f64 {
        self.eval(y).2
    }

    /// `g(y + z) - g(y)` without cancellation for small `z`.
    pub fn increment(&self, y: f64, z: f64) -> f64 {
        match &self.kind {
            Kind::ExpInversePower { delta } => {
                let target = y + z;
                if target <= 0.0 {
                    return -self.value(y);
                }
                let ymd = y.powf(-delta);
                // y^{-δ} - (y+z)^{-δ}
                let w = -ymd * (-delta * (z / y).ln_1p()).exp_m1();
                (-ymd).exp() * w.exp_m1()
            }
            Kind::LogLog(shape) => {
                if y >= shape.hi && y + z >= shape.hi {
                    let l = shape.log_arg(y);
                    ((z / y).ln_1p() / l).ln_1p()
                } else {
                    shape.eval(y + z).0 - shape.eval(y).0
                }
            }
            Kind::Linear => z,
            Kind::Constant(_) => 0.0,
            Kind::ShiftedInverse => z / ((1.0 + y) * (1.0 + y + z)),
            Kind::Combination(terms) => terms.iter().map(|(c, g)| c * g.increment(y, z)).sum(),
        }
    }

    /// `g(y e^z) - g(y)`.
    pub fn ratio_increment(&self, y: f64, z: f64) -> f64 {
        self.increment(y, y * z.exp_m1())
    }

    /// `sup g` when `g` is bounded.
    pub fn sup(&self) -> Option<f64> {
        match &self.kind {
            Kind::ExpInversePower { .. } | Kind::ShiftedInverse => Some(1.0),
            Kind::Constant(c) => Some(*c),
            Kind::LogLog(_) | Kind::Linear | Kind::Combination(_) => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.sup().is_some()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        matches!(
            self.kind,
            Kind::ExpInversePower { .. } | Kind::Linear | Kind::ShiftedInverse
        )
    }

    /// Index `n` of a `LogLog` function.
    pub fn log_log_index(&self) -> Option<u32> {
        match &self.kind {
            Kind::LogLog(shape) => Some(shape.n),
            _ => None,
        }
    }
}

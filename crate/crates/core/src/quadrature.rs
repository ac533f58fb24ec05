//! Adaptive 21-point Gauss-Kronrod quadrature and the change-of-variable
//! wrappers used for integrals against power-law jump densities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Kronrod abscissae on [-1, 1], positive half, descending (last entry is the centre).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_745_288,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

/// 10-point Gauss weights, attached to the odd Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: value {value:e}, error estimate {error:e} after {intervals} subintervals")]
    NotConverged {
        value: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {x:e}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-13, 1e-11)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
            evaluations: self.evaluations + rhs.evaluations,
        }
    }
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };

    pub fn scale(self, factor: f64) -> Estimate {
        Estimate {
            value: self.value * factor,
            error: self.error * factor.abs(),
            evaluations: self.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, QuadError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { x })
        }
    };

    let fc = eval(centre)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(centre - dx)?;
        let f2 = eval(centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let error = rescale_error((res_k - res_g) * half, res_abs, res_asc);
    Ok(Segment { a, b, value, error })
}

/// Globally adaptive bisection: the subinterval with the largest error
/// estimate is split until the total error meets the tolerance.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate, QuadError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(Estimate::ZERO);
    }
    let first = kronrod21(&f, a, b)?;
    let mut evaluations = 21;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if heap.len() >= tol.max_intervals {
            return Err(QuadError::NotConverged {
                value: total,
                error: total_err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            heap.push(worst);
            return Err(QuadError::NotConverged {
                value: total,
                error: total_err,
                intervals: heap.len(),
            });
        }
        let left = kronrod21(&f, worst.a, mid)?;
        let right = kronrod21(&f, mid, worst.b)?;
        evaluations += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);

        // guard against drift in the running sums
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }

    Ok(Estimate {
        value: heap.iter().map(|s| s.value).sum(),
        error: heap.iter().map(|s| s.error).sum(),
        evaluations,
    })
}

/// `∫_lo^hi f(z) z^{-1-alpha} dz` for `0 < lo < hi < ∞`, integrated in `t = ln z`
/// so that power-law behaviour at either end becomes exponential in `t`.
pub fn integrate_power_weight<F>(
    f: F,
    lo: f64,
    hi: f64,
    alpha: f64,
    tol: Tolerance,
) -> Result<Estimate, QuadError>
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo > 0.0 && hi >= lo);
    if hi == lo {
        return Ok(Estimate::ZERO);
    }
    integrate(
        |t: f64| {
            let z = t.exp();
            f(z) * (-alpha * t).exp()
        },
        lo.ln(),
        hi.ln(),
        tol,
    )
}

/// Exponent of the power map used for tails; it smooths the endpoint
/// behaviour of integrands that grow sub-linearly in the tail mass variable.
const TAIL_POWER: f64 = 4.0;

/// `∫_lo^∞ f(z) z^{-1-alpha} dz` for `lo > 0`.
///
/// Substitutes `z = lo · w^{-m/alpha}` on `w ∈ (0, 1]`, which turns the
/// density into `(m lo^{-alpha} / alpha) w^{m-1} dw`.
pub fn integrate_power_tail<F>(f: F, lo: f64, alpha: f64, tol: Tolerance) -> Result<Estimate, QuadError>
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo > 0.0 && alpha > 0.0);
    let m = TAIL_POWER;
    let prefactor = m * lo.powf(-alpha) / alpha;
    let est = integrate(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let weight = w.powf(m - 1.0);
            let z = lo * w.powf(-m / alpha);
            if !z.is_finite() || weight == 0.0 {
                return 0.0;
            }
            let v = f(z) * weight;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(est.scale(prefactor))
}

/// `∫_lo^∞ f(z) rate e^{-rate (z - lo)} dz` via `u = e^{-rate (z - lo)}`.
pub fn integrate_exponential_tail<F>(f: F, lo: f64, rate: f64, tol: Tolerance) -> Result<Estimate, QuadError>
where
    F: Fn(f64) -> f64,
{
    integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let z = lo - u.ln() / rate;
            f(z)
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((est.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let est = integrate(|x: f64| if x > 0.0 { x.powf(-0.5) } else { 0.0 }, 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-8, "{}", est.value);
    }

    #[test]
    fn power_weight_matches_closed_form() {
        // ∫_{0.1}^{3} z · z^{-1.5} dz = 2 (sqrt(3) - sqrt(0.1))
        let est = integrate_power_weight(|z| z, 0.1, 3.0, 0.5, Tolerance::default()).unwrap();
        let exact = 2.0 * (3.0f64.sqrt() - 0.1f64.sqrt());
        assert!((est.value - exact).abs() < 1e-12);
    }

    #[test]
    fn power_tail_matches_closed_form() {
        // ∫_1^∞ z^{-2.5} z dz = 2
        let est = integrate_power_tail(|z| z, 1.0, 1.5, Tolerance::default()).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10, "{}", est.value);
        // bounded integrand: ∫_2^∞ z^{-1.3} dz = 2^{-0.3}/0.3
        let est = integrate_power_tail(|_| 1.0, 2.0, 0.3, Tolerance::default()).unwrap();
        assert!((est.value - 2f64.powf(-0.3) / 0.3).abs() < 1e-11);
    }

    #[test]
    fn exponential_tail_mean() {
        // E[Z] for Z = 1 + Exp(2) is 1.5
        let est = integrate_exponential_tail(|z| z, 1.0, 2.0, Tolerance::default()).unwrap();
        assert!((est.value - 1.5).abs() < 1e-10);
    }

    #[test]
    fn reports_non_finite() {
        let err = integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0, Tolerance::default()).unwrap_err();
        assert!(matches!(err, QuadError::NonFinite { .. } | QuadError::NotConverged { .. }));
    }
}

use rand::Rng;

use super::normal::{norm_cdf, ppnd16, standard_normal};
use crate::error::{Error, Result};

/// Lower bound (in standard units) beyond which the tail rejection sampler is
/// used instead of inverse-CDF.
const TAIL_SWITCH: f64 = 5.0;

/// Draws from N(mean, sd²) restricted to `(lower, upper)`. Either bound may be
/// infinite.
///
/// With both bounds infinite the draw is exactly `mean + sd * z` for the
/// generator's next standard normal variate.
pub fn sample_truncnorm<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(sd > 0.0 && sd.is_finite()) || !mean.is_finite() {
        return Err(Error::Numerical(format!("truncated normal with mean {mean}, sd {sd}")));
    }
    if !(lower < upper) {
        return Err(Error::Numerical(format!(
            "truncation interval ({lower}, {upper}) is empty"
        )));
    }
    if lower == f64::NEG_INFINITY && upper == f64::INFINITY {
        return Ok(mean + sd * standard_normal(rng));
    }
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    let z = standard_truncated(a, b, rng);
    Ok(strictly_inside(mean + sd * z, lower, upper))
}

fn strictly_inside(x: f64, lower: f64, upper: f64) -> f64 {
    if x > lower && x < upper {
        return x;
    }
    let nudged = if x <= lower { lower.next_up() } else { upper.next_down() };
    if nudged > lower && nudged < upper {
        nudged
    } else {
        // Adjacent floats: no representable interior point.
        0.5 * lower + 0.5 * upper
    }
}

/// Standard normal restricted to `(a, b)`, `a < b`.
fn standard_truncated<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b <= 0.0 {
        return -upper_side(-b, -a, rng);
    }
    if a >= 0.0 {
        return upper_side(a, b, rng);
    }
    // Interval straddles zero: plain inverse-CDF is accurate.
    let (pa, pb) = (norm_cdf(a), norm_cdf(b));
    let u = pa + (pb - pa) * open_unit(rng);
    if u <= 0.0 || u >= 1.0 {
        return 0.0f64.clamp(a, b);
    }
    ppnd16(u)
}

/// Case `0 <= a < b`.
fn upper_side<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if (b - a) * b < 1e-8 {
        // Density is flat to within 1e-8 relative across the interval.
        return a + (b - a) * open_unit(rng);
    }
    if a > TAIL_SWITCH {
        return tail_rejection(a, b, rng);
    }
    // Inverse-CDF on upper-tail probabilities, which keeps full relative
    // precision for positive arguments.
    let (qa, qb) = (norm_cdf(-a), norm_cdf(-b));
    let q = qb + (qa - qb) * open_unit(rng);
    if !(q > 0.0 && q < 1.0) {
        return a + (b - a) * open_unit(rng);
    }
    -ppnd16(q)
}

/// Robert (1995) sampler for `a > 0` far in the tail.
fn tail_rejection<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b - a < 1.0 / a {
        // Uniform proposal; acceptance ratio at least exp(-1.5) here.
        loop {
            let x = a + (b - a) * open_unit(rng);
            if open_unit(rng) <= (0.5 * (a * a - x * x)).exp() {
                return x;
            }
        }
    }
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let x = a - open_unit(rng).ln() / lambda;
        if x >= b {
            continue;
        }
        if open_unit(rng) <= (-0.5 * (x - lambda).powi(2)).exp() {
            return x;
        }
    }
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

use super::RngStream;
use crate::error::{invalid, Result};

/// Largest rate handled by a single CDF inversion. Bigger Poisson rates are
/// split into independent pieces of at most this size.
const INVERSION_MAX: f64 = 30.0;

/// Truncated Poisson inversion starts from λ/(e^λ − 1), which underflows past
/// roughly 745.
const TRUNCATED_MAX: f64 = 700.0;

pub fn sample_bernoulli(r: &mut RngStream, p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("Bernoulli probability {p} outside [0,1]")));
    }
    Ok(bernoulli(r, p))
}

#[inline]
pub(crate) fn bernoulli(r: &mut RngStream, p: f64) -> bool {
    r.uniform() < p
}

pub fn sample_exponential(r: &mut RngStream, rate: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(invalid(format!("exponential rate must be positive, got {rate}")));
    }
    Ok(exponential(r, rate))
}

#[inline]
pub(crate) fn exponential(r: &mut RngStream, rate: f64) -> f64 {
    -r.uniform_open_low().ln() / rate
}

pub fn sample_poisson(r: &mut RngStream, lambda: f64) -> Result<u64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("Poisson mean must be nonnegative, got {lambda}")));
    }
    Ok(poisson(r, lambda))
}

pub(crate) fn poisson(r: &mut RngStream, lambda: f64) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    let mut rest = lambda;
    let mut total = 0;
    while rest > INVERSION_MAX {
        total += poisson_inversion(r, INVERSION_MAX);
        rest -= INVERSION_MAX;
    }
    total + poisson_inversion(r, rest)
}

fn poisson_inversion(r: &mut RngStream, lambda: f64) -> u64 {
    let u = r.uniform();
    let mut j = 0u64;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    while u >= cdf {
        j += 1;
        pmf *= lambda / j as f64;
        let next = cdf + pmf;
        if next == cdf && j as f64 > lambda {
            // Remaining mass is below rounding; u sits in the numerical tail.
            break;
        }
        cdf = next;
    }
    j
}

/// Poisson(λ) conditioned on being at least 1, by inversion of the
/// conditional CDF.
pub fn sample_truncated_poisson_geq1(r: &mut RngStream, lambda: f64) -> Result<u64> {
    if !(lambda > 0.0) || lambda > TRUNCATED_MAX {
        return Err(invalid(format!(
            "truncated Poisson mean must be in (0, {TRUNCATED_MAX}], got {lambda}"
        )));
    }
    Ok(truncated_poisson(r, lambda))
}

pub(crate) fn truncated_poisson(r: &mut RngStream, lambda: f64) -> u64 {
    let u = r.uniform();
    let mut j = 1u64;
    // pmf of j given j >= 1 is λ^j / (j! (e^λ − 1)).
    let mut pmf = lambda / lambda.exp_m1();
    let mut cdf = pmf;
    while u >= cdf {
        j += 1;
        pmf *= lambda / j as f64;
        let next = cdf + pmf;
        if next == cdf && j as f64 > lambda {
            break;
        }
        cdf = next;
    }
    j
}

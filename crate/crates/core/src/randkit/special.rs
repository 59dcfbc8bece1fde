use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

/// A numerically evaluated special-function value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnResult {
    pub value: f64,
    pub abs_error_bound: f64,
}

const MAX_ITER: usize = 100_000;

/// Lower and upper tails of Binom(n, p) split at `s`:
/// (Pr[X ≤ s], Pr[X > s]). Each tail is summed separately so that a small
/// tail keeps its relative accuracy.
pub(crate) fn binom_tails(s: i64, n: u64, p: f64) -> (f64, f64) {
    if s < 0 {
        return (0.0, 1.0);
    }
    if s as u64 >= n {
        return (1.0, 0.0);
    }
    if p <= 0.0 {
        return (1.0, 0.0);
    }
    if p >= 1.0 {
        return (0.0, 1.0);
    }
    let s = s as u64;
    let log_odds = p.ln() - (-p).ln_1p();
    let mut lp = n as f64 * (-p).ln_1p();
    let mode = ((n as f64 + 1.0) * p).floor() as u64;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for j in 0..=n {
        let term = lp.exp();
        if j <= s {
            lower += term;
        } else {
            upper += term;
            if j > mode && term <= upper * 1e-18 {
                break;
            }
        }
        if j < n {
            lp += ((n - j) as f64 / (j + 1) as f64).ln() + log_odds;
        }
    }
    (lower, upper)
}

/// B(s; n, p), the Binom(n, p) CDF at `s`.
pub fn binom_cdf(s: u64, n: u64, p: f64) -> Result<f64> {
    if s > n {
        return Err(invalid(format!("binomial CDF argument s={s} exceeds n={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("binomial probability {p} outside [0,1]")));
    }
    let (lower, upper) = binom_tails(s as i64, n, p);
    Ok(if lower <= upper { lower } else { 1.0 - upper })
}

/// Lower and upper tails of Pois(λ) split at `s`: (Pr[X ≤ s], Pr[X > s]).
pub(crate) fn pois_tails(s: u64, lambda: f64) -> (f64, f64) {
    if lambda == 0.0 {
        return (1.0, 0.0);
    }
    let ll = lambda.ln();
    let mut lp = -lambda;
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut j = 0u64;
    loop {
        let term = lp.exp();
        if j <= s {
            lower += term;
        } else {
            upper += term;
            if j as f64 > lambda && term <= upper * 1e-18 {
                break;
            }
        }
        j += 1;
        lp += ll - (j as f64).ln();
        if lp < -745.0 && j as f64 > lambda {
            break;
        }
    }
    (lower, upper)
}

/// P(s; λ), the Pois(λ) CDF at `s`.
pub fn pois_cdf(s: u64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("Poisson mean must be nonnegative, got {lambda}")));
    }
    let (lower, upper) = pois_tails(s, lambda);
    Ok(if lower <= upper { lower } else { 1.0 - upper })
}

/// Regularized incomplete gamma pair (P(a,x), Q(a,x)) for a > 0, x ≥ 0,
/// plus an estimate of the absolute error.
pub(crate) fn gamma_pq(a: f64, x: f64) -> (f64, f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0, 0.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    // ln_gamma and the log terms carry relative error ~eps * magnitude.
    let prefactor_err = 4.0 * f64::EPSILON * (a * x.ln().abs() + x + ln_gamma(a).abs() + 1.0);
    if x < a + 1.0 {
        // Series: P = e^{-x} x^a / Γ(a+1) Σ x^n / ((a+1)...(a+n)).
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        let mut iters = 0;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            iters += 1;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (log_prefactor.exp() * sum).min(1.0);
        let err = p * (prefactor_err + (iters as f64 + 4.0) * f64::EPSILON);
        (p, 1.0 - p, err + f64::EPSILON)
    } else {
        // Lentz continued fraction for Q.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut iters = 0;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            iters += 1;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        let q = (log_prefactor.exp() * h).min(1.0);
        let err = q * (prefactor_err + (iters as f64 + 4.0) * f64::EPSILON);
        (1.0 - q, q, err + f64::EPSILON)
    }
}

/// Q(k, λ) = Γ(k, λ)/Γ(k).
pub fn upper_gamma_regularized(k: f64, lambda: f64) -> Result<SpecialFnResult> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(invalid(format!("incomplete gamma shape must be >= 1, got {k}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("incomplete gamma argument must be >= 0, got {lambda}")));
    }
    let (_, q, err) = gamma_pq(k, lambda);
    Ok(SpecialFnResult { value: q, abs_error_bound: err })
}

/// F(k, λ) = (1/λ)(k − Σ_{j<k} P(j; λ)) with Γ in place of the factorial for
/// real k, evaluated as Q(k−1, λ) + (k/λ)·(1 − Q(k, λ)). F(k, 0) = 1.
pub fn f_func(k: f64, lambda: f64) -> Result<f64> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(invalid(format!("F requires k >= 1, got {k}")));
    }
    if !(0.0..=k + 1.0).contains(&lambda) {
        return Err(invalid(format!("F requires lambda in [0, k+1], got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let (p_k, _, _) = gamma_pq(k, lambda);
    let q_km1 = if k == 1.0 { 0.0 } else { gamma_pq(k - 1.0, lambda).1 };
    Ok(q_km1 + k / lambda * p_k)
}

/// G(k, n, λ) = (1/λ)(k − Σ_{j<k} B(j; n, λ/n)), evaluated as
/// B(k−2; n−1, p) + (k/λ)·Pr[Binom(n, p) ≥ k].
pub fn g_func(k: u64, n: u64, lambda: f64) -> Result<f64> {
    if k < 1 {
        return Err(invalid("G requires k >= 1"));
    }
    if n <= k {
        return Err(invalid(format!("G requires n > k, got n={n}, k={k}")));
    }
    if !(lambda > 0.0) || lambda > k as f64 + 1.0 {
        return Err(invalid(format!("G requires lambda in (0, k+1], got {lambda}")));
    }
    let p = lambda / n as f64;
    let (below, _) = binom_tails(k as i64 - 2, n - 1, p);
    let (_, at_least_k) = binom_tails(k as i64 - 1, n, p);
    Ok(below + k as f64 / lambda * at_least_k)
}

/// E[1/(1+X)] for X ~ Pois(λ), which equals (1 − e^{−λ})/λ.
pub fn expected_inv_one_plus_poisson(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("Poisson mean must be nonnegative, got {lambda}")));
    }
    Ok(keep_probability(lambda))
}

/// (1 − e^{−x})/x with the limit 1 at x = 0.
#[inline]
pub(crate) fn keep_probability(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// exp(−δ²μ/(2+δ)).
pub fn chernoff_mult_bound(mu: f64, delta: f64) -> Result<f64> {
    if !(mu > 0.0) || !(delta > 0.0) {
        return Err(invalid(format!("Chernoff bound needs mu > 0 and delta > 0, got {mu}, {delta}")));
    }
    Ok((-delta * delta * mu / (2.0 + delta)).exp())
}

/// (c1·e/c2)^{c2}.
pub fn chernoff_power_bound(c1: f64, c2: f64) -> Result<f64> {
    if !(c1 > 0.0) || !(c2 >= c1) || !c2.is_finite() {
        return Err(invalid(format!("power bound needs 0 < c1 <= c2, got {c1}, {c2}")));
    }
    Ok((c1 * std::f64::consts::E / c2).powf(c2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn direct_f(k: u64, lambda: f64) -> f64 {
        let s: f64 = (0..k).map(|j| pois_cdf(j, lambda).unwrap()).sum();
        (k as f64 - s) / lambda
    }

    fn direct_g(k: u64, n: u64, lambda: f64) -> f64 {
        let s: f64 = (0..k).map(|j| binom_cdf(j, n, lambda / n as f64).unwrap()).sum();
        (k as f64 - s) / lambda
    }

    #[test]
    fn binom_examples() {
        assert!(close(binom_cdf(5, 5, 0.3).unwrap(), 1.0, 1e-15));
        assert!(close(binom_cdf(0, 7, 0.3).unwrap(), 0.7f64.powi(7), 1e-15));
        assert!(close(binom_cdf(1, 2, 0.5).unwrap(), 0.75, 1e-15));
        assert!(binom_cdf(3, 2, 0.5).is_err());
        assert_eq!(binom_cdf(1, 3, 1.0).unwrap(), 0.0);
        assert_eq!(binom_cdf(1, 3, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn pois_examples() {
        assert!(close(pois_cdf(0, 2.5).unwrap(), (-2.5f64).exp(), 1e-16));
        assert!(close(pois_cdf(1, 3.0).unwrap(), 4.0 * (-3.0f64).exp(), 1e-15));
        assert!(close(pois_cdf(1, 3.0).unwrap(), 0.199148, 1e-6));
        assert!(pois_cdf(50, 3.0).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn gamma_examples() {
        for &l in &[0.1, 1.0, 2.0, 7.5] {
            let q = upper_gamma_regularized(1.0, l).unwrap();
            assert!(close(q.value, (-l).exp(), 1e-14));
            assert!(q.abs_error_bound >= 0.0 && q.abs_error_bound <= 1e-10);
        }
        assert_eq!(upper_gamma_regularized(4.0, 0.0).unwrap().value, 1.0);
        let q33 = upper_gamma_regularized(3.0, 3.0).unwrap().value;
        assert!(close(q33, (-3.0f64).exp() * 8.5, 1e-14));
        assert!(close(q33, 0.423190, 1e-6));
    }

    #[test]
    fn gamma_matches_poisson_sum_for_integer_shape() {
        for k in 1..40u64 {
            for &l in &[0.01, 0.5, 3.0, 10.0, 41.0, 80.0] {
                let q = upper_gamma_regularized(k as f64, l).unwrap();
                let p = pois_cdf(k - 1, l).unwrap();
                assert!(close(q.value, p, 1e-13 + q.abs_error_bound), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn f_examples() {
        let target = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!(close(f_func(1.0, 2.0).unwrap(), target, 1e-15));
        assert!(close(f_func(1.0, 1e-12).unwrap(), 1.0, 1e-11));
        assert_eq!(f_func(3.0, 0.0).unwrap(), 1.0);
        assert!(close(f_func(2.0, 3.0).unwrap(), 2.0 / 3.0 - 5.0 / 3.0 * (-3.0f64).exp(), 1e-14));
        assert!(close(f_func(2.0, 3.0).unwrap(), 0.5836882, 1e-7));
        assert!(f_func(2.0, 3.5).is_err());
    }

    #[test]
    fn f_matches_direct_sum() {
        for k in 1..30u64 {
            for i in 1..=20 {
                let l = (k + 1) as f64 * i as f64 / 20.0;
                assert!(close(f_func(k as f64, l).unwrap(), direct_f(k, l), 1e-12), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn f_matches_closed_form_for_real_k() {
        for &k in &[1.0, 1.3, 2.5, 7.75, 20.2] {
            for i in 1..=10 {
                let l: f64 = (k + 1.0) * i as f64 / 10.0;
                let q = upper_gamma_regularized(k, l).unwrap().value;
                let closed = (k + (l - k) * q - (k * l.ln() - l - ln_gamma(k)).exp()) / l;
                assert!(close(f_func(k, l).unwrap(), closed, 1e-12), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn g_examples() {
        for &n in &[2u64, 5, 50] {
            for &l in &[0.3, 1.0, 2.0] {
                let expected = (1.0 - (1.0 - l / n as f64).powi(n as i32)) / l;
                assert!(close(g_func(1, n, l).unwrap(), expected, 1e-14));
            }
        }
        assert!(close(g_func(2, 3, 3.0).unwrap(), 2.0 / 3.0, 1e-15));
        let diff = (g_func(2, 100_000, 2.5).unwrap() - f_func(2.0, 2.5).unwrap()).abs();
        assert!(diff < 1e-4, "{diff}");
        assert!(g_func(2, 2, 1.0).is_err());
        assert!(g_func(2, 5, 3.5).is_err());
    }

    #[test]
    fn g_matches_direct_sum() {
        for k in 1..6u64 {
            for n in (k + 1)..(k + 12) {
                for i in 1..=8 {
                    let l = (k + 1) as f64 * i as f64 / 8.0;
                    assert!(close(g_func(k, n, l).unwrap(), direct_g(k, n, l), 1e-13), "{k} {n} {l}");
                }
            }
        }
    }

    #[test]
    fn inverse_poisson_expectation() {
        assert_eq!(expected_inv_one_plus_poisson(0.0).unwrap(), 1.0);
        assert!(close(expected_inv_one_plus_poisson(2.0).unwrap(), 0.4323324, 1e-7));
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let v = expected_inv_one_plus_poisson(i as f64 * 0.1).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // Series check against E[1/(1+X)] directly.
        let l: f64 = 1.7;
        let mut pmf = (-l).exp();
        let mut s = 0.0;
        for j in 0..80 {
            s += pmf / (1.0 + j as f64);
            pmf *= l / (j + 1) as f64;
        }
        assert!(close(s, expected_inv_one_plus_poisson(l).unwrap(), 1e-15));
    }

    #[test]
    fn chernoff_examples() {
        assert!(close(chernoff_mult_bound(1.0, 1.0).unwrap(), (-1.0f64 / 3.0).exp(), 1e-15));
        assert!(chernoff_mult_bound(1.0, 1e-9).unwrap() > 1.0 - 1e-12);
        let pw = chernoff_power_bound(0.5, 2.0).unwrap();
        assert!(close(pw, (0.5 * std::f64::consts::E / 2.0).powi(2), 1e-15));
        assert!(close(pw, 0.46182, 1e-5));
        assert!(chernoff_power_bound(2.0, 1.0).is_err());
        assert!(chernoff_mult_bound(0.0, 1.0).is_err());
    }
}

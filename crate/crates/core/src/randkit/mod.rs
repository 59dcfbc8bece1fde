//! Random streams, samplers and the special functions used by the schemes
//! and the gap calculators.

mod rng;
mod sampling;
mod special;

pub use rng::RngStream;
pub use sampling::{
    sample_bernoulli, sample_exponential, sample_poisson, sample_truncated_poisson_geq1,
};
pub(crate) use sampling::{bernoulli, exponential, poisson, truncated_poisson};
pub use special::{
    binom_cdf, chernoff_mult_bound, chernoff_power_bound, expected_inv_one_plus_poisson, f_func,
    g_func, pois_cdf, upper_gamma_regularized, SpecialFnResult,
};
pub(crate) use special::keep_probability;

//! Contention resolution for the fractional hypergraph matching polytope.
//!
//! Every per-edge random choice is drawn from `rng.derive(e)`, so two calls
//! with the same stream and nested input sets see identical coins on the
//! shared edges.

use crate::error::{precondition, Result};
use crate::instances::{check_len, Hypergraph, ItemSet};
use crate::randkit::{exponential, keep_probability, poisson, truncated_poisson, RngStream};

/// q_e per edge; positive exactly on the retained set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoissonProfile {
    q: Vec<u64>,
}

impl PoissonProfile {
    pub fn new(q: Vec<u64>) -> Self {
        Self { q }
    }

    pub fn counts(&self) -> &[u64] {
        &self.q
    }

    pub fn support(&self) -> ItemSet {
        self.q.iter().enumerate().filter(|(_, &c)| c > 0).map(|(e, _)| e).collect()
    }
}

/// y_e = q_e / Σ_{f∈N(e)} q_f, together with the profile it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalMatching {
    pub y: Vec<f64>,
    pub profile: PoissonProfile,
}

pub(crate) fn check_subset_of_support(r: &ItemSet, x: &[f64]) -> Result<()> {
    r.validate(x.len())?;
    if let Some(e) = r.iter().find(|&e| !(x[e] > 0.0)) {
        return Err(precondition(format!("element {e} of R has x_e = 0")));
    }
    Ok(())
}

fn matching_from_profile(h: &Hypergraph, q: Vec<u64>) -> FractionalMatching {
    let y = (0..h.num_edges())
        .map(|e| {
            if q[e] == 0 {
                return 0.0;
            }
            let total: u64 = h.neighbors(e).iter().map(|&f| q[f]).sum();
            q[e] as f64 / total as f64
        })
        .collect();
    FractionalMatching { y, profile: PoissonProfile::new(q) }
}

/// Keep each e ∈ R with probability (1−e^{−x_e})/x_e, give kept edges a
/// Pois(x_e) count conditioned on ≥ 1, and share each vertex proportionally.
pub fn hg_crs(h: &Hypergraph, x: &[f64], r: &ItemSet, rng: &RngStream) -> Result<FractionalMatching> {
    check_len(x.len(), h.num_edges())?;
    check_subset_of_support(r, x)?;
    let mut q = vec![0u64; h.num_edges()];
    for e in r.iter() {
        let mut s = rng.derive(e as u64);
        if s.uniform() < keep_probability(x[e]) {
            q[e] = truncated_poisson(&mut s, x[e]);
        }
    }
    Ok(matching_from_profile(h, q))
}

/// One-shot variant: q_e ~ Pois(x_e) for every edge.
pub fn hg_merged(h: &Hypergraph, x: &[f64], rng: &RngStream) -> Result<FractionalMatching> {
    check_len(x.len(), h.num_edges())?;
    if let Some(bad) = x.iter().find(|&&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(precondition(format!("coordinate {bad} is not a nonnegative real")));
    }
    let q = (0..h.num_edges())
        .map(|e| if x[e] > 0.0 { poisson(&mut rng.derive(e as u64), x[e]) } else { 0 })
        .collect();
    Ok(matching_from_profile(h, q))
}

/// Exponential-clock rounding: e wins iff its Exp(q_e) clock beats every
/// other edge of N(e) in the support. Exact ties go to the lower index.
pub fn exp_clock_round(h: &Hypergraph, q: &PoissonProfile, rng: &RngStream) -> Result<ItemSet> {
    let q = q.counts();
    check_len(q.len(), h.num_edges())?;
    let clocks: Vec<f64> = (0..q.len())
        .map(|e| {
            if q[e] == 0 {
                f64::INFINITY
            } else {
                exponential(&mut rng.derive(e as u64), q[e] as f64)
            }
        })
        .collect();
    let selected = (0..q.len())
        .filter(|&e| {
            q[e] > 0
                && h.neighbors(e).iter().all(|&f| {
                    f == e || q[f] == 0 || clocks[e] < clocks[f] || (clocks[e] == clocks[f] && e < f)
                })
        })
        .collect();
    Ok(ItemSet::from_sorted(selected))
}

/// hg_crs followed by exp_clock_round: a random matching inside R.
pub fn hg_crs_set(h: &Hypergraph, x: &[f64], r: &ItemSet, rng: &RngStream) -> Result<ItemSet> {
    let m = hg_crs(h, x, r, &rng.derive(0))?;
    exp_clock_round(h, &m.profile, &rng.derive(1))
}

//! Problem instances, polytope membership and example generators.

mod generators;
mod json;
pub mod random;
mod types;

pub use generators::{
    gen_circulant_tournament, gen_class_k_gap, gen_class_k_uniform, gen_dknapsack_example,
    gen_kcs_nat, gen_kcs_str, gen_knapsack_tight, gen_projective_plane, TightFamily,
};
pub use json::{from_json_str, read_document, to_json_string, write_document, Document};
pub(crate) use types::check_len;
pub use types::{
    compensated_sum, hypergraph_feasible, is_matching, item_class, kcs_feasible, kcs_feasible_set,
    knapsack_feasible_point, knapsack_feasible_set, Digraph, FractionalPoint, Hypergraph,
    ItemSet, KcsInstance, KnapsackInstance, FEAS_TOL,
};

use crate::error::Result;

/// Any of the three packing problems.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Hypergraph(Hypergraph),
    Knapsack(KnapsackInstance),
    Kcs(KcsInstance),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Hypergraph(_) => "hypergraph",
            Self::Knapsack(_) => "knapsack",
            Self::Kcs(_) => "kcspip",
        }
    }

    /// Number of ground-set elements (edges or items).
    pub fn ground_size(&self) -> usize {
        match self {
            Self::Hypergraph(h) => h.num_edges(),
            Self::Knapsack(k) => k.len(),
            Self::Kcs(k) => k.num_items(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Hypergraph(h) => h.values(),
            Self::Knapsack(k) => k.values().to_vec(),
            Self::Kcs(k) => k.values().to_vec(),
        }
    }

    /// Same structure with new values.
    pub fn with_values(&self, v: Vec<f64>) -> Result<Self> {
        Ok(match self {
            Self::Hypergraph(h) => Self::Hypergraph(h.clone().with_weights(v)?),
            Self::Knapsack(k) => Self::Knapsack(k.with_values(v)?),
            Self::Kcs(k) => Self::Kcs(k.with_values(v)?),
        })
    }

    /// Integral feasibility of a set.
    pub fn feasible_set(&self, s: &ItemSet) -> Result<bool> {
        match self {
            Self::Hypergraph(h) => is_matching(h, s),
            Self::Knapsack(k) => knapsack_feasible_set(k, s),
            Self::Kcs(k) => kcs_feasible_set(k, s),
        }
    }

    /// Membership of x in the natural relaxation.
    pub fn feasible_point(&self, x: &[f64]) -> Result<bool> {
        match self {
            Self::Hypergraph(h) => hypergraph_feasible(h, x, 1.0),
            Self::Knapsack(k) => knapsack_feasible_point(k, x),
            Self::Kcs(k) => kcs_feasible(k, x, false),
        }
    }
}

impl From<Hypergraph> for Instance {
    fn from(h: Hypergraph) -> Self {
        Self::Hypergraph(h)
    }
}

impl From<KnapsackInstance> for Instance {
    fn from(k: KnapsackInstance) -> Self {
        Self::Knapsack(k)
    }
}

impl From<KcsInstance> for Instance {
    fn from(k: KcsInstance) -> Self {
        Self::Kcs(k)
    }
}

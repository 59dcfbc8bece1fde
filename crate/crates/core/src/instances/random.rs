//! Random instance families for test corpora.

use super::types::{FractionalPoint, Hypergraph, KcsInstance, KnapsackInstance};
use crate::error::{invalid, Result};
use crate::randkit::RngStream;

/// Uniform in (lo, hi].
fn open_closed(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform_open_low()
}

fn random_values(n: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| open_closed(rng, 0.1, 10.0)).collect()
}

/// Random direction in [0,1]^n scaled so that the largest load equals a
/// random target in [0.3, 1].
fn scaled_point(n: usize, rng: &mut RngStream, max_load: impl Fn(&[f64]) -> f64) -> FractionalPoint {
    let w: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let target = rng.uniform_range(0.3, 1.0);
    let load = max_load(&w);
    let s = if load > 0.0 { (target / load).min(1.0) } else { 1.0 };
    FractionalPoint::new(w.iter().map(|v| (v * s).clamp(0.0, 1.0)).collect())
        .expect("scaled point lies in the unit cube")
}

fn knapsack_point(inst: &KnapsackInstance, rng: &mut RngStream) -> FractionalPoint {
    let a = inst.sizes().to_vec();
    scaled_point(inst.len(), rng, |w| a.iter().zip(w).map(|(a, w)| a * w).sum())
}

/// Class-k instance with random sizes, values and x ∈ P(a).
pub fn random_class_k(k: u64, n: usize, rng: &mut RngStream) -> Result<(KnapsackInstance, FractionalPoint)> {
    if k == 0 || n == 0 {
        return Err(invalid("need k >= 1 and n >= 1"));
    }
    let (lo, hi) = (1.0 / (k + 1) as f64, 1.0 / k as f64);
    let sizes = (0..n).map(|_| open_closed(rng, lo, hi).max(lo.next_up())).collect();
    let inst = KnapsackInstance::new(sizes, random_values(n, rng))?;
    let x = knapsack_point(&inst, rng);
    Ok((inst, x))
}

/// Sizes uniform in (lo, hi] ⊆ (0, 1].
pub fn random_knapsack(n: usize, lo: f64, hi: f64, rng: &mut RngStream) -> Result<(KnapsackInstance, FractionalPoint)> {
    if n == 0 || !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(invalid("need n >= 1 and 0 <= lo < hi <= 1"));
    }
    let sizes = (0..n).map(|_| open_closed(rng, lo, hi)).collect();
    let inst = KnapsackInstance::new(sizes, random_values(n, rng))?;
    let x = knapsack_point(&inst, rng);
    Ok((inst, x))
}

/// `num_edges` distinct random edges with 1..=rank vertices each (exactly
/// `rank` when `uniform`), random weights and x ∈ P(H).
pub fn random_hypergraph(
    num_vertices: usize,
    num_edges: usize,
    rank: usize,
    uniform: bool,
    rng: &mut RngStream,
) -> Result<(Hypergraph, FractionalPoint)> {
    if rank == 0 || rank > num_vertices {
        return Err(invalid("rank must lie in 1..=num_vertices"));
    }
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(num_edges);
    let mut attempts = 0;
    while edges.len() < num_edges {
        attempts += 1;
        if attempts > 1000 * (num_edges + 1) {
            return Err(invalid("could not draw enough distinct edges"));
        }
        let size = if uniform { rank } else { 1 + rng.below(rank as u64) as usize };
        let mut verts: Vec<usize> = (0..num_vertices).collect();
        for i in 0..size {
            let j = i + rng.below((num_vertices - i) as u64) as usize;
            verts.swap(i, j);
        }
        let mut edge = verts[..size].to_vec();
        edge.sort_unstable();
        if !edges.contains(&edge) {
            edges.push(edge);
        }
    }
    let h = Hypergraph::new(num_vertices, edges)?.with_weights(random_values(num_edges, rng))?;
    let x = scaled_point(num_edges, rng, |w| h.vertex_loads(w).into_iter().fold(0.0, f64::max));
    Ok((h, x))
}

/// Random k-column-sparse instance. Each column touches 1..=k distinct rows;
/// coefficients mix big (> 1/2), medium and tiny entries. x is natural-LP
/// feasible.
pub fn random_kcs(n: usize, m: usize, k: usize, rng: &mut RngStream) -> Result<(KcsInstance, FractionalPoint)> {
    if n == 0 || k == 0 || k > m {
        return Err(invalid("need n >= 1 and 1 <= k <= m"));
    }
    let columns = (0..n)
        .map(|_| {
            let nnz = 1 + rng.below(k as u64) as usize;
            let mut rows: Vec<usize> = (0..m).collect();
            for i in 0..nnz {
                let j = i + rng.below((m - i) as u64) as usize;
                rows.swap(i, j);
            }
            rows[..nnz]
                .iter()
                .map(|&i| {
                    let a = match rng.below(3) {
                        0 => open_closed(rng, 0.5, 1.0),
                        1 => open_closed(rng, 0.15, 0.5),
                        _ => open_closed(rng, 0.0, 0.15),
                    };
                    (i, a)
                })
                .collect()
        })
        .collect();
    let inst = KcsInstance::new(m, k, columns, random_values(n, rng))?;
    let x = scaled_point(n, rng, |w| inst.row_loads(w).into_iter().fold(0.0, f64::max));
    Ok((inst, x))
}

use std::ops::Deref;

use crate::error::{invalid, Error, Result};
use crate::randkit::RngStream;

/// Additive tolerance used by every feasibility predicate.
pub const FEAS_TOL: f64 = 1e-12;

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sorted list of distinct ground-set indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ItemSet(Vec<usize>);

impl ItemSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Sorts and deduplicates.
    pub fn from_indices(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// Caller guarantees `v` is strictly increasing.
    pub(crate) fn from_sorted(v: Vec<usize>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Self(v)
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Members of a bitmask over `0..64`.
    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset(&self, other: &ItemSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= len) {
            Some(&index) => Err(Error::InvalidIndex { index, len }),
            None => Ok(()),
        }
    }

    /// Indicator vector χ^S of length `n`.
    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut y = vec![0.0; n];
        for &i in &self.0 {
            y[i] = 1.0;
        }
        y
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl Deref for ItemSet {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::from_indices(iter.into_iter().collect())
    }
}

/// A point x ∈ [0,1]^n over an instance's ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPoint(Vec<f64>);

impl FractionalPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(invalid(format!("fractional coordinate {bad} outside [0,1]")));
        }
        Ok(Self(coords))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> ItemSet {
        ItemSet::from_sorted((0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect())
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        check_len(self.0.len(), n)
    }

    /// Draws R(x): element e independently with probability x_e. One uniform
    /// is consumed per element, including those with x_e = 0, so two points
    /// sampled from clones of one stream are coupled element by element.
    pub fn sample(&self, rng: &mut RngStream) -> ItemSet {
        ItemSet::from_sorted(
            self.0
                .iter()
                .enumerate()
                .filter_map(|(i, &p)| (rng.uniform() < p).then_some(i))
                .collect(),
        )
    }
}

impl Deref for FractionalPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_values(v: &[f64]) -> Result<()> {
    if let Some(bad) = v.iter().find(|&&w| !(w > 0.0) || !w.is_finite()) {
        return Err(invalid(format!("values must be positive and finite, got {bad}")));
    }
    Ok(())
}

/// A hypergraph with precomputed vertex incidences and edge neighborhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    num_vertices: usize,
    edges: Vec<Vec<usize>>,
    weights: Option<Vec<f64>>,
    incidence: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(num_vertices: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        for (e, edge) in edges.iter().enumerate() {
            if edge.is_empty() {
                return Err(invalid(format!("edge {e} is empty")));
            }
            if !edge.windows(2).all(|w| w[0] < w[1]) {
                return Err(invalid(format!("edge {e} is not strictly sorted")));
            }
            if let Some(&v) = edge.iter().find(|&&v| v >= num_vertices) {
                return Err(Error::InvalidIndex { index: v, len: num_vertices });
            }
        }
        let mut incidence = vec![Vec::new(); num_vertices];
        for (e, edge) in edges.iter().enumerate() {
            for &v in edge {
                incidence[v].push(e);
            }
        }
        let neighbors = edges
            .iter()
            .map(|edge| {
                let mut nb: Vec<usize> =
                    edge.iter().flat_map(|&v| incidence[v].iter().copied()).collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect();
        Ok(Self { num_vertices, edges, weights: None, incidence, neighbors })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        check_len(weights.len(), self.edges.len())?;
        check_values(&weights)?;
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edges[e]
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Edge weights, defaulting to all ones.
    pub fn values(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0; self.edges.len()])
    }

    /// Maximum edge cardinality (at least 1).
    pub fn rank(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(1).max(1)
    }

    /// δ(v): edges containing vertex v.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    /// N(e): edges sharing a vertex with e, including e itself.
    pub fn neighbors(&self, e: usize) -> &[usize] {
        &self.neighbors[e]
    }

    /// Σ_{e∈δ(v)} y_e for every vertex.
    pub fn vertex_loads(&self, y: &[f64]) -> Vec<f64> {
        self.incidence
            .iter()
            .map(|inc| compensated_sum(inc.iter().map(|&e| y[e])))
            .collect()
    }
}

/// x ∈ bP(H): every vertex load is at most b.
pub fn hypergraph_feasible(h: &Hypergraph, x: &[f64], b: f64) -> Result<bool> {
    check_len(x.len(), h.num_edges())?;
    if !(b >= 0.0) {
        return Err(invalid(format!("scale b must be nonnegative, got {b}")));
    }
    if x.iter().any(|&c| !(c >= 0.0)) {
        return Err(invalid("hypergraph point must be nonnegative"));
    }
    Ok(h.vertex_loads(x).iter().all(|&l| l <= b + FEAS_TOL))
}

/// Whether the edges in `s` are pairwise vertex-disjoint.
pub fn is_matching(h: &Hypergraph, s: &ItemSet) -> Result<bool> {
    s.validate(h.num_edges())?;
    let mut used = vec![false; h.num_vertices()];
    for e in s.iter() {
        for &v in h.edge(e) {
            if used[v] {
                return Ok(false);
            }
            used[v] = true;
        }
    }
    Ok(true)
}

/// The class k ≥ 1 with 1/(k+1) < a ≤ 1/k.
pub fn item_class(a: f64) -> Result<u64> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(invalid(format!("item size {a} outside (0,1]")));
    }
    let mut k = (1.0 / a).floor().max(1.0) as u64;
    while k > 1 && a > 1.0 / k as f64 {
        k -= 1;
    }
    while a <= 1.0 / (k + 1) as f64 {
        k += 1;
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackInstance {
    sizes: Vec<f64>,
    values: Vec<f64>,
}

impl KnapsackInstance {
    pub fn new(sizes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(invalid("knapsack instance needs at least one item"));
        }
        check_len(values.len(), sizes.len())?;
        if let Some(bad) = sizes.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(invalid(format!("item size {bad} outside [0,1]")));
        }
        check_values(&values)?;
        Ok(Self { sizes, values })
    }

    /// Unit values.
    pub fn unit(sizes: Vec<f64>) -> Result<Self> {
        let n = sizes.len();
        Self::new(sizes, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.sizes.clone(), values)
    }

    /// a(S), compensated.
    pub fn size_of(&self, s: &[usize]) -> f64 {
        compensated_sum(s.iter().map(|&i| self.sizes[i]))
    }

    /// The common class of all items, if there is one.
    pub fn common_class(&self) -> Option<u64> {
        let mut classes = self.sizes.iter().map(|&a| item_class(a).ok());
        let first = classes.next()??;
        classes.all(|c| c == Some(first)).then_some(first)
    }

    pub fn is_class_k(&self, k: u64) -> bool {
        self.common_class() == Some(k)
    }

    pub fn all_small(&self) -> bool {
        self.sizes.iter().all(|&a| a <= 0.5)
    }
}

/// Σ_{i∈S} a_i ≤ 1.
pub fn knapsack_feasible_set(inst: &KnapsackInstance, s: &ItemSet) -> Result<bool> {
    s.validate(inst.len())?;
    Ok(inst.size_of(s) <= 1.0 + FEAS_TOL)
}

/// x ∈ P(a): Σ a_i x_i ≤ 1 and 0 ≤ x ≤ 1.
pub fn knapsack_feasible_point(inst: &KnapsackInstance, x: &[f64]) -> Result<bool> {
    check_len(x.len(), inst.len())?;
    let load = compensated_sum(inst.sizes.iter().zip(x).map(|(a, x)| a * x));
    Ok(x.iter().all(|&c| (-FEAS_TOL..=1.0 + FEAS_TOL).contains(&c)) && load <= 1.0 + FEAS_TOL)
}

/// A column-sparse packing instance: item j has column entries (i, a_ij).
#[derive(Debug, Clone, PartialEq)]
pub struct KcsInstance {
    num_constraints: usize,
    sparsity: usize,
    columns: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    values: Vec<f64>,
}

impl KcsInstance {
    pub fn new(
        num_constraints: usize,
        sparsity: usize,
        mut columns: Vec<Vec<(usize, f64)>>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if sparsity == 0 {
            return Err(invalid("column sparsity k must be at least 1"));
        }
        check_len(values.len(), columns.len())?;
        check_values(&values)?;
        let mut rows = vec![Vec::new(); num_constraints];
        for (j, col) in columns.iter_mut().enumerate() {
            if col.len() > sparsity {
                return Err(invalid(format!(
                    "column {j} has {} nonzeros, more than k = {sparsity}",
                    col.len()
                )));
            }
            col.sort_by_key(|&(i, _)| i);
            if col.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(invalid(format!("column {j} repeats a constraint")));
            }
            for &(i, a) in col.iter() {
                if i >= num_constraints {
                    return Err(Error::InvalidIndex { index: i, len: num_constraints });
                }
                if !(a > 0.0 && a <= 1.0) {
                    return Err(invalid(format!("coefficient {a} in column {j} outside (0,1]")));
                }
                rows[i].push((j, a));
            }
        }
        Ok(Self { num_constraints, sparsity, columns, rows, values })
    }

    /// Builds from a dense m×n matrix, dropping zeros.
    pub fn from_dense(matrix: &[Vec<f64>], sparsity: usize, values: Vec<f64>) -> Result<Self> {
        let m = matrix.len();
        let n = values.len();
        let mut columns = vec![Vec::new(); n];
        for (i, row) in matrix.iter().enumerate() {
            check_len(row.len(), n)?;
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    columns[j].push((i, a));
                }
            }
        }
        Self::new(m, sparsity, columns, values)
    }

    pub fn num_items(&self) -> usize {
        self.columns.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<(usize, f64)>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.num_constraints, self.sparsity, self.columns.clone(), values)
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.columns[j]
            .binary_search_by_key(&i, |&(r, _)| r)
            .map(|p| self.columns[j][p].1)
            .unwrap_or(0.0)
    }

    /// Row loads Σ_j a_ij y_j.
    pub fn row_loads(&self, y: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| compensated_sum(row.iter().map(|&(j, a)| a * y[j])))
            .collect()
    }

    /// Row loads of an item set.
    pub fn set_loads(&self, s: &[usize]) -> Vec<f64> {
        let mut loads = vec![0.0; self.num_constraints];
        for &j in s {
            for &(i, a) in &self.columns[j] {
                loads[i] += a;
            }
        }
        loads
    }
}

/// Natural LP membership, plus Σ_{j∈big(i)} x_j ≤ 1 when `strengthened`.
pub fn kcs_feasible(inst: &KcsInstance, x: &[f64], strengthened: bool) -> Result<bool> {
    check_len(x.len(), inst.num_items())?;
    if x.iter().any(|&c| !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&c)) {
        return Ok(false);
    }
    if inst.row_loads(x).iter().any(|&l| l > 1.0 + FEAS_TOL) {
        return Ok(false);
    }
    if strengthened {
        for row in &inst.rows {
            let big = compensated_sum(row.iter().filter(|&&(_, a)| a > 0.5).map(|&(j, _)| x[j]));
            if big > 1.0 + FEAS_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Every constraint satisfied by the set.
pub fn kcs_feasible_set(inst: &KcsInstance, s: &ItemSet) -> Result<bool> {
    s.validate(inst.num_items())?;
    Ok(inst.set_loads(s).iter().all(|&l| l <= 1.0 + FEAS_TOL))
}

/// Directed graph on `0..n` given by out-neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    out: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut out = vec![Vec::new(); n];
        for &(u, v) in arcs {
            if u >= n || v >= n {
                return Err(Error::InvalidIndex { index: u.max(v), len: n });
            }
            if u == v {
                return Err(invalid(format!("self-loop at {u}")));
            }
            out[u].push(v);
        }
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { out })
    }

    pub fn from_out_lists(out: Vec<Vec<usize>>) -> Result<Self> {
        let n = out.len();
        let arcs: Vec<(usize, usize)> = out
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().map(move |&v| (u, v)))
            .collect();
        Self::new(n, &arcs)
    }

    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    pub fn out_lists(&self) -> &[Vec<usize>] {
        &self.out
    }

    pub fn max_out_degree(&self) -> usize {
        self.out.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_arcs(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out[u].binary_search(&v).is_ok()
    }

    /// Adjacency lists of the underlying simple undirected graph.
    pub fn undirected(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.out.len()];
        for (u, l) in self.out.iter().enumerate() {
            for &v in l {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_class_examples() {
        assert_eq!(item_class(0.6).unwrap(), 1);
        assert_eq!(item_class(1.0).unwrap(), 1);
        assert_eq!(item_class(0.5).unwrap(), 2);
        assert_eq!(item_class(0.26).unwrap(), 3);
        assert_eq!(item_class(1.0 / 3.0).unwrap(), 3);
        assert_eq!(item_class(0.25).unwrap(), 4);
        assert!(item_class(0.0).is_err());
        assert!(item_class(1.5).is_err());
    }

    #[test]
    fn item_class_interval_for_rationals() {
        for q in 1..200u64 {
            for p in 1..=q {
                let a = p as f64 / q as f64;
                let k = item_class(a).unwrap();
                assert!(a <= 1.0 / k as f64 && a > 1.0 / (k + 1) as f64, "{p}/{q} -> {k}");
            }
        }
    }

    #[test]
    fn knapsack_set_examples() {
        let inst = KnapsackInstance::unit(vec![0.6, 0.5, 0.4]).unwrap();
        assert!(knapsack_feasible_set(&inst, &ItemSet::from_indices(vec![1, 2])).unwrap());
        assert!(knapsack_feasible_set(&inst, &ItemSet::empty()).unwrap());
        assert!(!knapsack_feasible_set(&inst, &ItemSet::from_indices(vec![0, 1])).unwrap());
        assert!(knapsack_feasible_set(&inst, &ItemSet::from_indices(vec![5])).is_err());
    }

    #[test]
    fn matching_examples() {
        let h = Hypergraph::new(4, vec![vec![0, 1], vec![2, 3], vec![1, 2]]).unwrap();
        assert!(is_matching(&h, &ItemSet::empty()).unwrap());
        assert!(is_matching(&h, &ItemSet::from_indices(vec![0, 1])).unwrap());
        assert!(!is_matching(&h, &ItemSet::from_indices(vec![0, 2])).unwrap());
        assert!(is_matching(&h, &ItemSet::from_indices(vec![3])).is_err());
        assert_eq!(h.neighbors(2), &[0, 1, 2]);
        assert_eq!(h.neighbors(0), &[0, 2]);
    }

    #[test]
    fn hypergraph_point_examples() {
        let h = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        assert!(!hypergraph_feasible(&h, &[1.2], 1.0).unwrap());
        assert!(hypergraph_feasible(&h, &[0.0], 0.0).unwrap());
        assert!(hypergraph_feasible(&h, &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(Hypergraph::new(3, vec![vec![1, 0]]).is_err());
        assert!(Hypergraph::new(3, vec![vec![]]).is_err());
        assert!(Hypergraph::new(3, vec![vec![0, 3]]).is_err());
        assert!(KnapsackInstance::new(vec![0.5], vec![0.0]).is_err());
        assert!(KnapsackInstance::new(vec![1.5], vec![1.0]).is_err());
        assert!(KcsInstance::new(2, 1, vec![vec![(0, 0.5), (1, 0.5)]], vec![1.0]).is_err());
        assert!(KcsInstance::new(2, 2, vec![vec![(0, 0.5), (0, 0.5)]], vec![1.0]).is_err());
        assert!(FractionalPoint::new(vec![1.1]).is_err());
    }

    #[test]
    fn strengthened_lp_adds_big_cut() {
        // Row load 0.96 fits, but two big items carry total mass 1.6.
        let inst = KcsInstance::from_dense(&[vec![0.6, 0.6]], 1, vec![1.0, 1.0]).unwrap();
        assert!(kcs_feasible(&inst, &[0.8, 0.8], false).unwrap());
        assert!(!kcs_feasible(&inst, &[0.8, 0.8], true).unwrap());
    }

    #[test]
    fn sampling_is_coupled_across_clones() {
        let rng = RngStream::root(9);
        let x = FractionalPoint::new(vec![0.3, 0.0, 0.9, 0.5]).unwrap();
        let y = FractionalPoint::new(vec![0.6, 0.2, 0.9, 0.5]).unwrap();
        for t in 0..200 {
            let a = x.sample(&mut rng.derive(t));
            let b = y.sample(&mut rng.derive(t));
            assert!(a.is_subset(&b));
        }
    }

    #[test]
    fn compensated_sum_is_exact_on_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}

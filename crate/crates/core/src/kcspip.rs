//! Contention resolution for column-sparse packing programs.

use crate::error::{invalid, precondition, Error, Result};
use crate::hypergraph::check_subset_of_support;
use crate::instances::{check_len, compensated_sum, kcs_feasible_set, Digraph, ItemSet, KcsInstance};
use crate::randkit::RngStream;

/// Stream child used for the color draw; item coins use the item index.
const COLOR_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KcsParams {
    pub alpha: f64,
    pub ell: f64,
    pub d: usize,
}

impl KcsParams {
    pub fn new(alpha: f64, ell: f64, d: usize) -> Result<Self> {
        if !(alpha > 0.0) || !(ell >= 2.0) || d == 0 {
            return Err(invalid(format!("need alpha > 0, ell >= 2, d >= 1; got {alpha}, {ell}, {d}")));
        }
        Ok(Self { alpha, ell, d })
    }

    /// Sampling rate α/k, capped at 1.
    pub fn rate(&self, k: usize) -> f64 {
        (self.alpha / k as f64).min(1.0)
    }

    pub fn colors(&self) -> usize {
        2 * self.d + 1
    }
}

/// α = k^0.4, ℓ = max(3, ln k), d = ⌈2α + √(α ln α)⌉ (no root term for α ≤ 1).
pub fn default_params(k: usize) -> KcsParams {
    let k = k.max(1) as f64;
    let alpha = k.powf(0.4).min(k);
    let ell = k.ln().max(3.0);
    let root = if alpha > 1.0 { (alpha * alpha.ln()).sqrt() } else { 0.0 };
    let d = (2.0 * alpha + root).ceil().max(1.0) as usize;
    KcsParams { alpha, ell, d }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockingFlags {
    pub bb: bool,
    pub mb: bool,
    pub tb: bool,
}

impl BlockingFlags {
    pub fn any(&self) -> bool {
        self.bb || self.mb || self.tb
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Big,
    Med,
    Tiny,
}

fn class_of(a: f64, ell: f64) -> Class {
    if a > 0.5 {
        Class::Big
    } else if a > 1.0 / ell {
        Class::Med
    } else {
        Class::Tiny
    }
}

/// Per-row counts over a set: big members, medium count, medium+tiny load.
struct RowCensus {
    big: Vec<Vec<usize>>,
    med: Vec<usize>,
    small_load: Vec<f64>,
}

fn census(inst: &KcsInstance, r: &ItemSet, ell: f64) -> RowCensus {
    let m = inst.num_constraints();
    let mut big = vec![Vec::new(); m];
    let mut med = vec![0; m];
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); m];
    for j in r.iter() {
        for &(i, a) in inst.column(j) {
            match class_of(a, ell) {
                Class::Big => big[i].push(j),
                Class::Med => {
                    med[i] += 1;
                    parts[i].push(a);
                }
                Class::Tiny => parts[i].push(a),
            }
        }
    }
    let small_load = parts.into_iter().map(compensated_sum).collect();
    RowCensus { big, med, small_load }
}

fn flags_from(inst: &KcsInstance, c: &RowCensus, j: usize, ell: f64) -> BlockingFlags {
    let mut f = BlockingFlags::default();
    for &(i, a) in inst.column(j) {
        if c.big[i].iter().any(|&o| o != j) {
            f.bb = true;
        }
        match class_of(a, ell) {
            Class::Med if c.med[i] >= 3 => f.mb = true,
            Class::Tiny if c.med[i] >= 2 || c.small_load[i] > 1.0 => f.tb = true,
            _ => {}
        }
    }
    f
}

/// BB/MB/TB flags of item j with respect to R.
pub fn blocking_events(inst: &KcsInstance, r: &ItemSet, j: usize, ell: f64) -> Result<BlockingFlags> {
    r.validate(inst.num_items())?;
    if !r.contains(j) {
        return Err(precondition(format!("item {j} is not in the candidate set")));
    }
    Ok(flags_from(inst, &census(inst, r, ell), j, ell))
}

/// Digraph on the members of a set, with vertex p standing for `items[p]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockingDigraph {
    pub items: Vec<usize>,
    pub graph: Digraph,
}

/// Arc j→j′ iff j ≠ j′ and some constraint has a_ij > 0 and a_ij′ > 1/2.
pub fn build_blocking_digraph(inst: &KcsInstance, r1: &ItemSet) -> Result<BlockingDigraph> {
    r1.validate(inst.num_items())?;
    let items = r1.as_slice().to_vec();
    let pos = |j: usize| r1.as_slice().binary_search(&j).ok();
    let out = items
        .iter()
        .map(|&j| {
            let mut targets: Vec<usize> = inst
                .column(j)
                .iter()
                .flat_map(|&(i, _)| inst.row(i).iter())
                .filter(|&&(o, a)| o != j && a > 0.5)
                .filter_map(|&(o, _)| pos(o))
                .collect();
            targets.sort_unstable();
            targets.dedup();
            targets
        })
        .collect();
    Ok(BlockingDigraph { items, graph: Digraph::from_out_lists(out)? })
}

/// Proper coloring of the underlying undirected graph with at most 2d+1
/// colors: peel minimum-degree vertices with a bucket queue, then color in
/// reverse order with the smallest free color.
pub fn degeneracy_color(g: &Digraph, d: usize) -> Result<Vec<usize>> {
    if g.max_out_degree() > d {
        return Err(precondition(format!(
            "out-degree {} exceeds d = {d}",
            g.max_out_degree()
        )));
    }
    let adj = g.undirected();
    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_deg + 1];
    for v in (0..n).rev() {
        buckets[degree[v]].push(v);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut low = 0;
    while order.len() < n {
        low = low.min(max_deg);
        while buckets[low].is_empty() {
            low += 1;
        }
        let v = buckets[low].pop().expect("nonempty bucket");
        if removed[v] || degree[v] != low {
            // Stale entry left behind by a degree decrement.
            continue;
        }
        removed[v] = true;
        order.push(v);
        for &u in &adj[v] {
            if !removed[u] {
                degree[u] -= 1;
                buckets[degree[u]].push(u);
                low = low.min(degree[u]);
            }
        }
    }
    let mut color = vec![usize::MAX; n];
    for &v in order.iter().rev() {
        let used: Vec<usize> = adj[v].iter().map(|&u| color[u]).filter(|&c| c != usize::MAX).collect();
        color[v] = (0..).find(|c| !used.contains(c)).expect("some color is free");
    }
    debug_assert!(color.iter().all(|&c| c <= 2 * d));
    Ok(color)
}

/// Smallest number of colors in a proper coloring, by backtracking.
pub fn brute_force_chromatic_number(adj: &[Vec<usize>]) -> usize {
    fn colorable(adj: &[Vec<usize>], colors: usize, v: usize, assign: &mut Vec<usize>) -> bool {
        if v == adj.len() {
            return true;
        }
        for c in 0..colors {
            if adj[v].iter().all(|&u| u >= v || assign[u] != c) {
                assign[v] = c;
                if colorable(adj, colors, v + 1, assign) {
                    return true;
                }
            }
        }
        false
    }
    if adj.is_empty() {
        return 0;
    }
    (1..=adj.len())
        .find(|&c| colorable(adj, c, 0, &mut vec![usize::MAX; adj.len()]))
        .expect("n colors always suffice")
}

/// Intermediate sets of one run of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct KcsTrace {
    pub r0: ItemSet,
    pub r1: ItemSet,
    pub r2: ItemSet,
    pub colors_used: usize,
    pub chosen_color: usize,
    pub rf: ItemSet,
}

/// Runs the six stages and returns every intermediate set.
pub fn kcs_crs_trace(
    inst: &KcsInstance,
    x: &[f64],
    r: &ItemSet,
    params: &KcsParams,
    rng: &RngStream,
) -> Result<KcsTrace> {
    check_len(x.len(), inst.num_items())?;
    check_subset_of_support(r, x)?;
    let rate = params.rate(inst.sparsity());
    let r0 = ItemSet::from_sorted(r.iter().filter(|&j| rng.derive(j as u64).uniform() < rate).collect());

    let c = census(inst, &r0, params.ell);
    let r1 = ItemSet::from_sorted(
        r0.iter()
            .filter(|&j| {
                let f = flags_from(inst, &c, j, params.ell);
                !(f.mb || f.tb)
            })
            .collect(),
    );

    let g = build_blocking_digraph(inst, &r1)?;
    let r2 = ItemSet::from_sorted(
        (0..g.items.len())
            .filter(|&p| g.graph.out_neighbors(p).len() <= params.d)
            .map(|p| g.items[p])
            .collect(),
    );
    let g2 = build_blocking_digraph(inst, &r2)?;
    let coloring = degeneracy_color(&g2.graph, params.d)?;
    let colors_used = coloring.iter().map(|c| c + 1).max().unwrap_or(0);
    let chosen_color = rng.derive(COLOR_STREAM).below(params.colors() as u64) as usize;
    let rf = ItemSet::from_sorted(
        (0..g2.items.len()).filter(|&p| coloring[p] == chosen_color).map(|p| g2.items[p]).collect(),
    );
    if !kcs_feasible_set(inst, &rf)? {
        return Err(Error::FeasibilityViolation {
            scheme: "kcs".into(),
            seed: rng.seed(),
            trial: rng.index(),
            detail: format!("output {:?} violates a constraint", rf.as_slice()),
        });
    }
    Ok(KcsTrace { r0, r1, r2, colors_used, chosen_color, rf })
}

pub fn kcs_crs(inst: &KcsInstance, x: &[f64], r: &ItemSet, params: &KcsParams, rng: &RngStream) -> Result<ItemSet> {
    Ok(kcs_crs_trace(inst, x, r, params, rng)?.rf)
}

/// Sample S ⊆ R at rate 1/(4k); drop j ∈ S if, on a constraint where j has
/// positive size, another member of S is big or the small members overflow.
pub fn kcs_bansal_crs(inst: &KcsInstance, x: &[f64], r: &ItemSet, rng: &RngStream) -> Result<ItemSet> {
    check_len(x.len(), inst.num_items())?;
    check_subset_of_support(r, x)?;
    let rate = 1.0 / (4.0 * inst.sparsity() as f64);
    let s = ItemSet::from_sorted(r.iter().filter(|&j| rng.derive(j as u64).uniform() < rate).collect());
    let m = inst.num_constraints();
    let mut big_count = vec![0usize; m];
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); m];
    for j in s.iter() {
        for &(i, a) in inst.column(j) {
            if a > 0.5 {
                big_count[i] += 1;
            } else {
                parts[i].push(a);
            }
        }
    }
    let overflow: Vec<bool> = parts.into_iter().map(|p| compensated_sum(p) > 1.0).collect();
    Ok(ItemSet::from_sorted(
        s.iter()
            .filter(|&j| {
                inst.column(j).iter().all(|&(i, a)| {
                    let others_big = big_count[i] - (a > 0.5) as usize;
                    others_big == 0 && !overflow[i]
                })
            })
            .collect(),
    ))
}

/// CG of the projective-plane example: (1−(1−(2−ε)/k)^n)/((2−ε)(k−1+1/k)).
pub fn kcs_cg_upper_formula(k: u64, n: u64, eps: f64) -> Result<f64> {
    let kf = k as f64;
    if k < 2 || n < 1 || !(eps > 0.0 && eps < 2.0) {
        return Err(invalid(format!("need k >= 2, n >= 1, 0 < eps < 2; got {k}, {n}, {eps}")));
    }
    let p = (2.0 - eps) / kf;
    if p > 1.0 {
        return Err(invalid(format!("(2−eps)/k = {p} exceeds 1")));
    }
    Ok((1.0 - (1.0 - p).powf(n as f64)) / ((2.0 - eps) * (kf - 1.0 + 1.0 / kf)))
}

/// The limit form (1−e^{−2/k})/(2(k−1+1/k)), as stated for ε → 0.
pub fn kcs_cg_upper_limit(k: u64) -> Result<f64> {
    if k < 2 {
        return Err(invalid("need k >= 2"));
    }
    let kf = k as f64;
    Ok((1.0 - (-2.0 / kf).exp()) / (2.0 * (kf - 1.0 + 1.0 / kf)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{
        gen_circulant_tournament, gen_kcs_nat, gen_kcs_str, random::random_kcs, FractionalPoint,
    };

    fn set(v: &[usize]) -> ItemSet {
        ItemSet::from_indices(v.to_vec())
    }

    #[test]
    fn params() {
        let p = default_params(1);
        assert_eq!((p.alpha, p.ell, p.d), (1.0, 3.0, 2));
        let p = default_params(32);
        assert!((p.alpha - 4.0).abs() < 1e-12);
        assert!((p.ell - 32f64.ln()).abs() < 1e-15);
        assert_eq!(p.d, 11);
        for k in 1..500 {
            assert!(default_params(k).rate(k) <= 1.0);
        }
    }

    #[test]
    fn blocking_examples() {
        let inst = KcsInstance::from_dense(&[vec![0.3, 0.3, 0.3, 0.3]], 1, vec![1.0; 4]).unwrap();
        let f = blocking_events(&inst, &set(&[2]), 2, 4.0).unwrap();
        assert!(!f.any());
        let f = blocking_events(&inst, &ItemSet::full(4), 1, 4.0).unwrap();
        assert!(f.mb);
        let inst = KcsInstance::from_dense(&[vec![0.1, 0.6]], 1, vec![1.0; 2]).unwrap();
        assert!(blocking_events(&inst, &ItemSet::full(2), 0, 4.0).unwrap().bb);
        assert!(!blocking_events(&inst, &ItemSet::full(2), 1, 4.0).unwrap().bb);
        assert!(blocking_events(&inst, &set(&[1]), 0, 4.0).is_err());
    }

    #[test]
    fn digraph_rules() {
        let inst = KcsInstance::from_dense(&[vec![0.3, 0.2]], 1, vec![1.0; 2]).unwrap();
        assert_eq!(build_blocking_digraph(&inst, &ItemSet::full(2)).unwrap().graph.num_arcs(), 0);
        let inst = KcsInstance::from_dense(&[vec![0.1, 0.9]], 1, vec![1.0; 2]).unwrap();
        let g = build_blocking_digraph(&inst, &ItemSet::full(2)).unwrap().graph;
        assert!(g.has_arc(0, 1) && !g.has_arc(1, 0));
        // Strengthened example, k = 2: a = [[1,ε,0],[0,1,ε],[ε,0,1]].
        let (inst, _) = gen_kcs_str(2, 0.01).unwrap();
        let g = build_blocking_digraph(&inst, &ItemSet::full(3)).unwrap().graph;
        // Item 1 touches row 0 (ε) whose big item is 0, and row 1 where it is big itself.
        assert_eq!(g.out_neighbors(1), &[0]);
        assert_eq!(g.out_neighbors(0), &[2]);
    }

    #[test]
    fn coloring_examples() {
        let empty = Digraph::new(4, &[]).unwrap();
        assert!(degeneracy_color(&empty, 1).unwrap().iter().all(|&c| c == 0));
        for d in 1..=3 {
            let g = gen_circulant_tournament(d).unwrap();
            let c = degeneracy_color(&g, d).unwrap();
            let distinct: std::collections::BTreeSet<_> = c.iter().collect();
            assert_eq!(distinct.len(), 2 * d + 1);
            assert_eq!(brute_force_chromatic_number(&g.undirected()), 2 * d + 1);
        }
        let path = Digraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let c = degeneracy_color(&path, 1).unwrap();
        assert_eq!(c.iter().max(), Some(&1));
        assert!(degeneracy_color(&gen_circulant_tournament(2).unwrap(), 1).is_err());
    }

    #[test]
    fn scheme_outputs_feasible_independent_sets() {
        let root = RngStream::root(5);
        for t in 0..400u64 {
            let mut r = root.derive(t);
            let k = 2 + (t % 3) as usize;
            let (inst, x) = random_kcs(14, 6, k, &mut r).unwrap();
            let rs = FractionalPoint::new(x.to_vec()).unwrap().sample(&mut r);
            let params = default_params(k);
            let tr = kcs_crs_trace(&inst, &x, &rs, &params, &r.derive(1)).unwrap();
            assert!(tr.r0.is_subset(&rs) && tr.r1.is_subset(&tr.r0));
            assert!(tr.r2.is_subset(&tr.r1) && tr.rf.is_subset(&tr.r2));
            assert!(tr.colors_used <= params.colors());
            assert!(kcs_feasible_set(&inst, &tr.rf).unwrap());
            let g = build_blocking_digraph(&inst, &tr.r2).unwrap();
            let adj = g.graph.undirected();
            for (p, &j) in g.items.iter().enumerate() {
                if tr.rf.contains(j) {
                    assert!(adj[p].iter().all(|&q| !tr.rf.contains(g.items[q])));
                }
            }
            let b = kcs_bansal_crs(&inst, &x, &rs, &r.derive(2)).unwrap();
            assert!(b.is_subset(&rs));
            assert!(kcs_feasible_set(&inst, &b).unwrap());
        }
    }

    #[test]
    fn empty_input() {
        let (inst, x) = gen_kcs_nat(3, 0.1).unwrap();
        let rng = RngStream::root(0);
        assert!(kcs_crs(&inst, &x, &ItemSet::empty(), &default_params(3), &rng).unwrap().is_empty());
        assert!(kcs_bansal_crs(&inst, &x, &ItemSet::empty(), &rng).unwrap().is_empty());
    }

    #[test]
    fn cg_formula_values() {
        let lim = kcs_cg_upper_limit(3).unwrap();
        assert!((lim - (1.0 - (-2.0f64 / 3.0).exp()) / (14.0 / 3.0)).abs() < 1e-15);
        assert!((lim - 0.104).abs() < 1e-3);
        let v = kcs_cg_upper_formula(3, 7, 0.1).unwrap();
        assert!((v - (1.0 - (1.0 - 1.9f64 / 3.0).powi(7)) / (1.9 * 7.0 / 3.0)).abs() < 1e-15);
        assert!(kcs_cg_upper_formula(1, 7, 0.1).is_err());
    }
}

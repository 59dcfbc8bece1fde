//! Contention resolution and rounding for the knapsack LP relaxation.

use std::cmp::Ordering;

use crate::error::{invalid, precondition, Error, Result};
use crate::hypergraph::{check_subset_of_support, hg_crs};
use crate::instances::{
    check_len, compensated_sum, knapsack_feasible_set, FractionalPoint, Hypergraph, ItemSet,
    KnapsackInstance, FEAS_TOL,
};
use crate::lp::solve_max;
use crate::randkit::RngStream;

/// y per item; Σ a_i y_i ≤ 1 and supp(y) ⊆ R.
pub type FractionalKnapsackSolution = Vec<f64>;

/// Largest support handled by the exact decomposition.
pub const DECOMPOSE_MAX_SUPPORT: usize = 20;

/// Largest greedy prefix searched exhaustively for the removal set.
const REMOVAL_BRUTE_FORCE_MAX: usize = 20;

/// Mixing probability q = 6(e²−1)/(7e²−6) of the combined scheme.
pub fn combined_q() -> f64 {
    let e2 = std::f64::consts::E.powi(2);
    6.0 * (e2 - 1.0) / (7.0 * e2 - 6.0)
}

/// Balancedness of the combined scheme, 2(e²−1)/(7e²−6).
pub fn combined_bound() -> f64 {
    let e2 = std::f64::consts::E.powi(2);
    2.0 * (e2 - 1.0) / (7.0 * e2 - 6.0)
}

fn validate(inst: &KnapsackInstance, x: &[f64], r: &ItemSet) -> Result<()> {
    check_len(x.len(), inst.len())?;
    check_subset_of_support(r, x)
}

/// The star u + t_1..t_n whose edge i is {u, t_i}.
fn star(n: usize) -> Hypergraph {
    Hypergraph::new(n + 1, (0..n).map(|i| vec![0, i + 1]).collect())
        .expect("star edges are sorted and in range")
}

fn big_on(inst: &KnapsackInstance, x: &[f64], r: &ItemSet, rng: &RngStream) -> Result<Vec<f64>> {
    Ok(hg_crs(&star(inst.len()), x, r, rng)?.y)
}

/// Class-1 scheme: the hypergraph scheme on the star, where every pair of
/// items conflicts.
pub fn klp_big_crs(
    inst: &KnapsackInstance,
    x: &[f64],
    r: &ItemSet,
    rng: &RngStream,
) -> Result<FractionalKnapsackSolution> {
    if let Some(a) = inst.sizes().iter().find(|&&a| a <= 0.5) {
        return Err(precondition(format!("big-item scheme needs every a_i > 1/2, found {a}")));
    }
    validate(inst, x, r)?;
    big_on(inst, x, r, rng)
}

fn scaled_indicator(n: usize, r: &ItemSet, scale: f64) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in r.iter() {
        y[i] = scale;
    }
    y
}

/// y = χ^R if a(R) ≤ 1, else 2χ^R/(3a(R)). Items must be small.
pub fn klp_small_crs(inst: &KnapsackInstance, x: &[f64], r: &ItemSet) -> Result<FractionalKnapsackSolution> {
    if !inst.all_small() {
        return Err(precondition("small-item scheme needs every a_i <= 1/2"));
    }
    validate(inst, x, r)?;
    let size = inst.size_of(r);
    let scale = if size <= 1.0 + FEAS_TOL { 1.0 } else { 2.0 / (3.0 * size) };
    Ok(scaled_indicator(inst.len(), r, scale))
}

/// y = χ^R if a(R) ≤ 1, else χ^R/(2a(R)).
pub fn klp_gen_crs(inst: &KnapsackInstance, x: &[f64], r: &ItemSet) -> Result<FractionalKnapsackSolution> {
    validate(inst, x, r)?;
    let size = inst.size_of(r);
    let scale = if size <= 1.0 + FEAS_TOL { 1.0 } else { 1.0 / (2.0 * size) };
    Ok(scaled_indicator(inst.len(), r, scale))
}

/// With probability q run the general scheme; otherwise run the big-item
/// scheme on the class-1 items of R.
pub fn klp_combined_crs(
    inst: &KnapsackInstance,
    x: &[f64],
    r: &ItemSet,
    rng: &RngStream,
) -> Result<FractionalKnapsackSolution> {
    validate(inst, x, r)?;
    if rng.derive(0).uniform() < combined_q() {
        klp_gen_crs(inst, x, r)
    } else {
        let big: ItemSet = r.iter().filter(|&i| inst.sizes()[i] > 0.5).collect();
        big_on(inst, x, &big, &rng.derive(1))
    }
}

/// Sample S ⊆ R at rate 1/4; drop j ∈ S if another item of S is big, or if
/// the small items of S overflow. Items of size 0 are never dropped.
pub fn klp_bansal_crs(inst: &KnapsackInstance, x: &[f64], r: &ItemSet, rng: &RngStream) -> Result<ItemSet> {
    validate(inst, x, r)?;
    let a = inst.sizes();
    let s: Vec<usize> = r.iter().filter(|&j| rng.derive(j as u64).uniform() < 0.25).collect();
    let big_count = s.iter().filter(|&&j| a[j] > 0.5).count();
    let small_load = compensated_sum(s.iter().filter(|&&j| a[j] <= 0.5).map(|&j| a[j]));
    let overflow = small_load > 1.0;
    Ok(ItemSet::from_sorted(
        s.into_iter()
            .filter(|&j| {
                if a[j] == 0.0 {
                    return true;
                }
                let other_big = big_count - (a[j] > 0.5) as usize > 0;
                !other_big && !overflow
            })
            .collect(),
    ))
}

/// Items sorted by v/a descending, ties by lower index; zero-size items first.
fn density_order(inst: &KnapsackInstance) -> Vec<usize> {
    let (a, v) = (inst.sizes(), inst.values());
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.sort_by(|&i, &j| {
        let lhs = v[i] * a[j];
        let rhs = v[j] * a[i];
        rhs.partial_cmp(&lhs).unwrap_or(Ordering::Equal).then(i.cmp(&j))
    });
    order
}

/// Greedy LP optimum: (x*, order, index in `order` of the fractional item).
fn greedy(inst: &KnapsackInstance) -> (Vec<f64>, Vec<usize>, Option<usize>) {
    let order = density_order(inst);
    let a = inst.sizes();
    let mut x = vec![0.0; inst.len()];
    let mut room = 1.0;
    for (pos, &i) in order.iter().enumerate() {
        if a[i] <= room {
            x[i] = 1.0;
            room -= a[i];
        } else {
            x[i] = room / a[i];
            return (x, order, Some(pos));
        }
    }
    (x, order, None)
}

/// Optimal LP solution and its value.
pub fn greedy_fractional_knapsack(inst: &KnapsackInstance) -> (FractionalPoint, f64) {
    let (x, _, _) = greedy(inst);
    let w = compensated_sum(x.iter().zip(inst.values()).map(|(x, v)| x * v));
    (FractionalPoint::new(x).expect("greedy coordinates lie in [0,1]"), w)
}

fn value_of(inst: &KnapsackInstance, s: impl IntoIterator<Item = usize>) -> f64 {
    compensated_sum(s.into_iter().map(|i| inst.values()[i]))
}

/// Integral solution of value ≥ (2/3)·LP for instances with all a_i ≤ 1/2.
pub fn greedy_integral_two_thirds(inst: &KnapsackInstance) -> Result<ItemSet> {
    if !inst.all_small() {
        return Err(precondition("two-thirds rounding needs every a_i <= 1/2"));
    }
    let (x, order, frac) = greedy(inst);
    let w = compensated_sum(x.iter().zip(inst.values()).map(|(x, v)| x * v));
    let Some(pos) = frac.filter(|&p| x[order[p]] > 0.0) else {
        return Ok(x.iter().enumerate().filter(|(_, &c)| c == 1.0).map(|(i, _)| i).collect());
    };
    let m = order[pos];
    let prefix = &order[..pos];
    let (a, v) = (inst.sizes(), inst.values());
    let two_thirds = 2.0 / 3.0 * w;
    if value_of(inst, prefix.iter().copied()) >= two_thirds {
        return Ok(prefix.iter().copied().collect());
    }
    if v[m] >= two_thirds {
        return Ok(ItemSet::from_sorted(vec![m]));
    }
    let with_m_without = |drop: &[usize]| -> ItemSet {
        prefix.iter().copied().filter(|i| !drop.contains(i)).chain([m]).collect()
    };
    let big: Vec<usize> = prefix.iter().copied().filter(|&i| a[i] >= 1.0 / 6.0).collect();
    let chosen = match big.len() {
        0 => with_m_without(&removal_set(inst, prefix)),
        1 => {
            let j = big[0];
            if v[j] < w / 3.0 {
                with_m_without(&[j])
            } else {
                ItemSet::from_indices(vec![j, m])
            }
        }
        _ => {
            let cheapest = *big
                .iter()
                .min_by(|&&i, &&j| v[i].partial_cmp(&v[j]).unwrap_or(Ordering::Equal).then(i.cmp(&j)))
                .expect("at least two big items");
            with_m_without(&[cheapest])
        }
    };
    debug_assert!(knapsack_feasible_set(inst, &chosen).unwrap_or(false));
    Ok(chosen)
}

/// Among subsets of `prefix` with size ≥ 1/6, one of minimum value and then
/// minimum cardinality. Long prefixes use two consecutive groups of size
/// ≥ 1/6 instead and drop the cheaper one.
fn removal_set(inst: &KnapsackInstance, prefix: &[usize]) -> Vec<usize> {
    let (a, v) = (inst.sizes(), inst.values());
    if prefix.len() <= REMOVAL_BRUTE_FORCE_MAX {
        let mut best: Option<(f64, u32, u64)> = None;
        for mask in 1u64..(1 << prefix.len()) {
            let members = || (0..prefix.len()).filter(move |b| mask >> b & 1 == 1).map(|b| prefix[b]);
            if compensated_sum(members().map(|i| a[i])) < 1.0 / 6.0 {
                continue;
            }
            let val = compensated_sum(members().map(|i| v[i]));
            let card = mask.count_ones();
            let better = match best {
                None => true,
                Some((bv, bc, _)) => val < bv || (val == bv && card < bc),
            };
            if better {
                best = Some((val, card, mask));
            }
        }
        let (_, _, mask) = best.expect("prefix size exceeds 1/2");
        return (0..prefix.len()).filter(|b| mask >> b & 1 == 1).map(|b| prefix[b]).collect();
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new()];
    let mut load = 0.0;
    for &i in prefix {
        groups.last_mut().expect("nonempty").push(i);
        load += a[i];
        if load >= 1.0 / 6.0 {
            if groups.len() == 2 {
                break;
            }
            groups.push(Vec::new());
            load = 0.0;
        }
    }
    let (g0, g1) = (&groups[0], &groups[1]);
    if value_of(inst, g0.iter().copied()) <= value_of(inst, g1.iter().copied()) {
        g0.clone()
    } else {
        g1.clone()
    }
}

/// The k highest-valued among the first k+1 items in v/a order.
pub fn classk_integral_round(inst: &KnapsackInstance) -> Result<ItemSet> {
    let k = inst
        .common_class()
        .ok_or_else(|| precondition("instance mixes item classes"))? as usize;
    if inst.len() <= k {
        return Ok(ItemSet::full(inst.len()));
    }
    let order = density_order(inst);
    let head = &order[..=k];
    let v = inst.values();
    let drop = *head
        .iter()
        .min_by(|&&i, &&j| v[i].partial_cmp(&v[j]).unwrap_or(Ordering::Equal).then(j.cmp(&i)))
        .expect("k+1 >= 2 items");
    Ok(head.iter().copied().filter(|&i| i != drop).collect())
}

/// Convex combination of feasible sets dominating a fractional point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDecomposition {
    pub terms: Vec<(f64, ItemSet)>,
}

impl ConvexDecomposition {
    /// Σ_i λ_i χ^{z_i}.
    pub fn coverage(&self, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (l, z) in &self.terms {
            for i in z.iter() {
                c[i] += l;
            }
        }
        c
    }

    /// Checks positivity, Σλ = 1, feasibility of every set and dominance.
    pub fn verify(&self, inst: &KnapsackInstance, y: &[f64]) -> Result<()> {
        let fail = |msg: String| Err(precondition(format!("invalid decomposition: {msg}")));
        if self.terms.iter().any(|(l, _)| !(*l > 0.0)) {
            return fail("nonpositive weight".into());
        }
        let total = compensated_sum(self.terms.iter().map(|(l, _)| *l));
        if (total - 1.0).abs() > 1e-12 {
            return fail(format!("weights sum to {total}"));
        }
        for (_, z) in &self.terms {
            if !knapsack_feasible_set(inst, z)? {
                return fail(format!("infeasible set {:?}", z.as_slice()));
            }
        }
        let c = self.coverage(inst.len());
        if let Some(i) = (0..y.len()).find(|&i| c[i] < y[i] - 1e-9) {
            return fail(format!("item {i} covered {} < {}", c[i], y[i]));
        }
        Ok(())
    }
}

/// Finds λ over feasible subsets of supp(y) with Σλ = 1 and Σλχ^z ≥ y by
/// column generation over the maximal feasible subsets.
/// Requires r_approx·y ∈ P(a).
pub fn decompose_dominating(inst: &KnapsackInstance, y: &[f64], r_approx: f64) -> Result<ConvexDecomposition> {
    check_len(y.len(), inst.len())?;
    if !(r_approx >= 1.0) {
        return Err(invalid(format!("approximation factor must be >= 1, got {r_approx}")));
    }
    if y.iter().any(|&c| !(0.0..=1.0 + FEAS_TOL).contains(&c)) {
        return Err(precondition("y must lie in [0,1]^n"));
    }
    let load = compensated_sum(inst.sizes().iter().zip(y).map(|(a, y)| a * y));
    if r_approx * load > 1.0 + FEAS_TOL {
        return Err(precondition(format!("r·y is outside P(a): r·a·y = {}", r_approx * load)));
    }
    let support: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let n = support.len();
    if n > DECOMPOSE_MAX_SUPPORT {
        return Err(Error::ScaleCap { size: n, limit: DECOMPOSE_MAX_SUPPORT });
    }
    let to_set = |mask: u64| -> ItemSet {
        ItemSet::from_sorted((0..n).filter(|b| mask >> b & 1 == 1).map(|b| support[b]).collect())
    };
    if n == 0 {
        return Ok(ConvexDecomposition { terms: vec![(1.0, ItemSet::empty())] });
    }
    let full = (1u64 << n) - 1;
    if y.iter().all(|&c| c == 0.0 || c == 1.0) {
        let s = to_set(full);
        if knapsack_feasible_set(inst, &s)? {
            return Ok(ConvexDecomposition { terms: vec![(1.0, s)] });
        }
    }
    let sizes: Vec<f64> = support.iter().map(|&i| inst.sizes()[i]).collect();
    let ys: Vec<f64> = support.iter().map(|&i| y[i]).collect();
    let maximal = maximal_feasible_masks(&sizes);

    let mut columns: Vec<u64> = Vec::new();
    // Seed with one maximal set per item.
    for b in 0..n {
        if let Some(&m) = maximal.iter().find(|&&m| m >> b & 1 == 1) {
            if !columns.contains(&m) {
                columns.push(m);
            }
        }
    }
    loop {
        // Variables: t, λ_1..λ_c. Rows: t·y_i − Σ λ_S χ^S_i ≤ 0; Σ λ ≤ 1.
        let c_len = columns.len();
        let mut obj = vec![0.0; c_len + 1];
        obj[0] = 1.0;
        let mut rows = Vec::with_capacity(n + 1);
        for (b, &yb) in ys.iter().enumerate() {
            let mut row = vec![0.0; c_len + 1];
            row[0] = yb;
            for (k, &m) in columns.iter().enumerate() {
                if m >> b & 1 == 1 {
                    row[k + 1] = -1.0;
                }
            }
            rows.push(row);
        }
        let mut last = vec![1.0; c_len + 1];
        last[0] = 0.0;
        rows.push(last);
        let mut rhs = vec![0.0; n + 1];
        rhs[n] = 1.0;
        let sol = solve_max(&obj, &rows, &rhs).expect("t <= 1/min y keeps the program bounded");
        let pi = &sol.duals[..n];
        let mu = sol.duals[n];
        let best = maximal
            .iter()
            .map(|&m| (m, (0..n).filter(|b| m >> b & 1 == 1).map(|b| pi[b]).sum::<f64>()))
            .max_by(|p, q| p.1.partial_cmp(&q.1).unwrap_or(Ordering::Equal));
        match best {
            Some((m, val)) if val > mu + 1e-11 && !columns.contains(&m) => columns.push(m),
            _ => {
                let t = sol.objective;
                if t < 1.0 - 1e-9 {
                    return Err(Error::NoCertificate(t));
                }
                let mut terms: Vec<(f64, ItemSet)> = columns
                    .iter()
                    .zip(&sol.z[1..])
                    .filter(|(_, &l)| l > 1e-15)
                    .map(|(&m, &l)| (l, to_set(m)))
                    .collect();
                let used = compensated_sum(terms.iter().map(|(l, _)| *l));
                if used < 1.0 {
                    let rest = 1.0 - used;
                    if rest > 1e-15 {
                        terms.push((rest, ItemSet::empty()));
                    }
                }
                let total = compensated_sum(terms.iter().map(|(l, _)| *l));
                for (l, _) in &mut terms {
                    *l /= total;
                }
                let d = ConvexDecomposition { terms };
                d.verify(inst, y)?;
                return Ok(d);
            }
        }
    }
}

/// Masks over `sizes` that are feasible and cannot be extended.
fn maximal_feasible_masks(sizes: &[f64]) -> Vec<u64> {
    let n = sizes.len();
    let limit = 1.0 + FEAS_TOL / 2.0;
    let mut load = vec![0.0f64; 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        load[mask] = load[mask & (mask - 1)] + sizes[low];
    }
    (0..(1usize << n))
        .filter(|&mask| {
            load[mask] <= limit && (0..n).all(|b| mask >> b & 1 == 1 || load[mask | 1 << b] > limit)
        })
        .map(|m| m as u64)
        .collect()
}

/// Draws a set from `d` and thins it so that Pr[i ∈ output] = y_i.
pub fn sample_from_decomposition(d: &ConvexDecomposition, y: &[f64], rng: &mut RngStream) -> ItemSet {
    let coverage = d.coverage(y.len());
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut pick = &d.terms[d.terms.len() - 1].1;
    for (l, z) in &d.terms {
        acc += l;
        if u < acc {
            pick = z;
            break;
        }
    }
    ItemSet::from_sorted(
        pick.iter()
            .filter(|&i| {
                let keep = if coverage[i] > 0.0 { (y[i] / coverage[i]).min(1.0) } else { 0.0 };
                rng.uniform() < keep
            })
            .collect(),
    )
}

/// Random feasible set with Pr[i ∈ output] = y_i, for y ∈ P(a) that
/// admits a dominating decomposition.
pub fn round_fractional_point(inst: &KnapsackInstance, y: &[f64], rng: &mut RngStream) -> Result<ItemSet> {
    let d = decompose_dominating(inst, y, 1.0)?;
    Ok(sample_from_decomposition(&d, y, rng))
}

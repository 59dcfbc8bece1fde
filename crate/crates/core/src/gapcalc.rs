//! Exact correlation and integrality gaps on small instances, the value and
//! point reductions for class-k knapsack, and the G/F conjecture scan.

use std::io::Write;

use crate::error::{invalid, precondition, Error, Result};
use crate::fmt::g17;
use crate::harness::{run_trials, Moments};
use crate::instances::{check_len, compensated_sum, FractionalPoint, ItemSet, Instance, KnapsackInstance, FEAS_TOL};
use crate::randkit::RngStream;
use crate::randkit::{f_func, g_func};

/// Largest support enumerated by `exact_cg`.
pub const CG_MAX_SUPPORT: usize = 20;
/// Largest candidate set searched by `sigma_opt`.
pub const SIGMA_MAX_SET: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionCase {
    Generic,
    /// Zero fractional value with a feasible support; the gap is 1 by continuity.
    LimitOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub cg_value: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub extension_case: ExtensionCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IgWitness {
    pub support: ItemSet,
    pub y: Vec<f64>,
    pub numerator: f64,
    pub sigma: f64,
    pub ratio: f64,
}

fn check_values(v: &[f64], n: usize) -> Result<()> {
    check_len(v.len(), n)?;
    if let Some(b) = v.iter().find(|&&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(invalid(format!("values must be finite and nonnegative, got {b}")));
    }
    Ok(())
}

/// Incremental feasibility while adding items one at a time.
enum Packing<'a> {
    Hg { inst: &'a crate::instances::Hypergraph, used: Vec<bool> },
    Knap { inst: &'a KnapsackInstance, load: f64 },
    Kcs { inst: &'a crate::instances::KcsInstance, loads: Vec<f64> },
}

impl<'a> Packing<'a> {
    fn new(inst: &'a Instance) -> Self {
        match inst {
            Instance::Hypergraph(h) => Packing::Hg { inst: h, used: vec![false; h.num_vertices()] },
            Instance::Knapsack(k) => Packing::Knap { inst: k, load: 0.0 },
            Instance::Kcs(k) => Packing::Kcs { inst: k, loads: vec![0.0; k.num_constraints()] },
        }
    }

    fn fits(&self, e: usize) -> bool {
        match self {
            Packing::Hg { inst, used } => inst.edge(e).iter().all(|&u| !used[u]),
            Packing::Knap { inst, load } => load + inst.sizes()[e] <= 1.0 + FEAS_TOL,
            Packing::Kcs { inst, loads } => inst.column(e).iter().all(|&(i, a)| loads[i] + a <= 1.0 + FEAS_TOL),
        }
    }

    /// Adds e, returning what `undo` needs.
    fn add(&mut self, e: usize) -> Vec<f64> {
        match self {
            Packing::Hg { inst, used } => {
                inst.edge(e).iter().for_each(|&u| used[u] = true);
                Vec::new()
            }
            Packing::Knap { inst, load } => {
                let old = *load;
                *load += inst.sizes()[e];
                vec![old]
            }
            Packing::Kcs { inst, loads } => inst
                .column(e)
                .iter()
                .map(|&(i, a)| {
                    let old = loads[i];
                    loads[i] += a;
                    old
                })
                .collect(),
        }
    }

    fn undo(&mut self, e: usize, saved: Vec<f64>) {
        match self {
            Packing::Hg { inst, used } => inst.edge(e).iter().for_each(|&u| used[u] = false),
            Packing::Knap { load, .. } => *load = saved[0],
            Packing::Kcs { inst, loads } => {
                for (&(i, _), old) in inst.column(e).iter().zip(saved) {
                    loads[i] = old;
                }
            }
        }
    }
}

/// max Σ_{e∈S} v_e over feasible S ⊆ r, by branch and bound.
pub fn sigma_opt(inst: &Instance, r: &ItemSet, v: &[f64]) -> Result<f64> {
    let n = inst.ground_size();
    r.validate(n)?;
    check_values(v, n)?;
    if r.len() > SIGMA_MAX_SET {
        return Err(Error::ScaleCap { size: r.len(), limit: SIGMA_MAX_SET });
    }
    let mut items: Vec<usize> = r.iter().filter(|&e| v[e] > 0.0).collect();
    items.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut suffix = vec![0.0; items.len() + 1];
    for p in (0..items.len()).rev() {
        suffix[p] = suffix[p + 1] + v[items[p]];
    }

    struct Search<'s, 'a> {
        items: &'s [usize],
        v: &'s [f64],
        suffix: &'s [f64],
        state: Packing<'a>,
        best: f64,
    }
    impl Search<'_, '_> {
        fn go(&mut self, p: usize, value: f64) {
            if value + self.suffix[p] <= self.best {
                return;
            }
            if p == self.items.len() {
                self.best = value;
                return;
            }
            let e = self.items[p];
            if self.state.fits(e) {
                let saved = self.state.add(e);
                self.go(p + 1, value + self.v[e]);
                self.state.undo(e, saved);
            }
            self.go(p + 1, value);
        }
    }

    let mut s = Search { items: &items, v, suffix: &suffix, state: Packing::new(inst), best: 0.0 };
    s.go(0, 0.0);
    Ok(s.best)
}

/// Feasibility of every subset of `items`, indexed by bit mask.
fn feasible_table(inst: &Instance, items: &[usize]) -> Vec<bool> {
    let m = items.len();
    let mut ok = vec![true; 1 << m];
    match inst {
        Instance::Hypergraph(h) => {
            let conflicts: Vec<u32> = items
                .iter()
                .map(|&e| {
                    (0..m)
                        .filter(|&q| items[q] != e && h.edge(items[q]).iter().any(|u| h.edge(e).contains(u)))
                        .fold(0u32, |acc, q| acc | 1 << q)
                })
                .collect();
            for mask in 1usize..1 << m {
                let low = mask.trailing_zeros() as usize;
                let rest = mask & (mask - 1);
                ok[mask] = ok[rest] && (conflicts[low] as usize & rest) == 0;
            }
        }
        Instance::Knapsack(k) => {
            let mut load = vec![0.0; 1 << m];
            for mask in 1usize..1 << m {
                let low = mask.trailing_zeros() as usize;
                load[mask] = load[mask & (mask - 1)] + k.sizes()[items[low]];
                ok[mask] = load[mask] <= 1.0 + FEAS_TOL;
            }
        }
        Instance::Kcs(k) => {
            let local = |j: usize| items.iter().position(|&e| e == j);
            let rows: Vec<Vec<(usize, f64)>> = (0..k.num_constraints())
                .map(|i| k.row(i).iter().filter_map(|&(j, a)| local(j).map(|q| (q, a))).collect())
                .collect();
            for mask in 1usize..1 << m {
                let low = mask.trailing_zeros() as usize;
                let rest = mask & (mask - 1);
                ok[mask] = ok[rest]
                    && k.column(items[low]).iter().all(|&(i, _)| {
                        let load: f64 =
                            rows[i].iter().filter(|&&(q, _)| mask >> q & 1 == 1).map(|&(_, a)| a).sum();
                        load <= 1.0 + FEAS_TOL
                    });
            }
        }
    }
    ok
}

/// Exact CG(P, v, x) = E[σ_v(R(x))] / Σ v_e x_e by enumerating the support.
pub fn exact_cg(inst: &Instance, v: &[f64], x: &[f64]) -> Result<GapReport> {
    let n = inst.ground_size();
    check_values(v, n)?;
    check_len(x.len(), n)?;
    if let Some(c) = x.iter().find(|&&c| !(0.0..=1.0).contains(&c)) {
        return Err(invalid(format!("coordinate {c} outside [0,1]")));
    }
    let items: Vec<usize> = (0..n).filter(|&e| v[e] > 0.0 && x[e] > 0.0).collect();
    let denominator = compensated_sum(items.iter().map(|&e| v[e] * x[e]));
    if items.is_empty() {
        let support: ItemSet = (0..n).filter(|&e| x[e] > 0.0).collect();
        return if inst.feasible_set(&support)? {
            Ok(GapReport { cg_value: 1.0, numerator: 0.0, denominator: 0.0, extension_case: ExtensionCase::LimitOne })
        } else {
            Err(Error::UndefinedPoint)
        };
    }
    let m = items.len();
    if m > CG_MAX_SUPPORT {
        return Err(Error::ScaleCap { size: m, limit: CG_MAX_SUPPORT });
    }
    let ok = feasible_table(inst, &items);
    let mut value = vec![0.0; 1 << m];
    let mut sigma = vec![0.0; 1 << m];
    for mask in 1usize..1 << m {
        let low = mask.trailing_zeros() as usize;
        value[mask] = value[mask & (mask - 1)] + v[items[low]];
        sigma[mask] = if ok[mask] {
            value[mask]
        } else {
            (0..m)
                .filter(|&q| mask >> q & 1 == 1)
                .map(|q| sigma[mask ^ 1 << q])
                .fold(0.0, f64::max)
        };
    }
    // prob[mask] = Π_{q∈mask} x_q Π_{q∉mask} (1−x_q); item q lands on bit q.
    let mut prob = vec![1.0];
    for &e in &items {
        let mut next = Vec::with_capacity(prob.len() * 2);
        next.extend(prob.iter().map(|p| p * (1.0 - x[e])));
        next.extend(prob.iter().map(|p| p * x[e]));
        prob = next;
    }
    let numerator = compensated_sum((0usize..1 << m).map(|mask| prob[mask] * sigma[mask]));
    Ok(GapReport { cg_value: numerator / denominator, numerator, denominator, extension_case: ExtensionCase::Generic })
}

/// Monte Carlo CG: mean and standard error of σ_v(R(x)) / Σ v_e x_e over
/// `n_samples` draws. For supports too large to enumerate.
pub fn estimate_cg(inst: &Instance, v: &[f64], x: &[f64], n_samples: u64, seed: u64) -> Result<(f64, f64)> {
    let n = inst.ground_size();
    check_values(v, n)?;
    if n_samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let point = FractionalPoint::new(x.to_vec())?;
    point.check_len(n)?;
    let denominator = compensated_sum((0..n).map(|e| v[e] * x[e]));
    if denominator <= 0.0 {
        return Err(Error::UndefinedPoint);
    }
    let m = run_trials(
        n_samples,
        &RngStream::root(seed),
        || Moments::new(1),
        |acc, _, s| {
            let r: ItemSet = point.sample(&mut s.clone()).iter().filter(|&e| v[e] > 0.0).collect();
            acc.push(0, sigma_opt(inst, &r, v)? / denominator);
            Ok(())
        },
        Moments::merge,
    )?;
    Ok((m.mean(0), m.stderr(0)))
}

/// (1−(1−1/k)^{k²−k+1})/(k−1+1/k): the gap of the order-(k−1) projective plane at x = 1/k.
pub fn cg_hg_projective_formula(k: u64) -> Result<f64> {
    if k < 2 {
        return Err(invalid("need k >= 2"));
    }
    let kf = k as f64;
    Ok((1.0 - (1.0 - 1.0 / kf).powf(kf * kf - kf + 1.0)) / (kf - 1.0 + 1.0 / kf))
}

/// Σ v y / σ_v(r), a lower bound on the integrality gap.
pub fn ig_witness_ratio(inst: &Instance, v: &[f64], y: &[f64], r: &ItemSet) -> Result<IgWitness> {
    let n = inst.ground_size();
    check_values(v, n)?;
    check_len(y.len(), n)?;
    r.validate(n)?;
    if !inst.feasible_point(y)? {
        return Err(precondition("witness point is not feasible for the relaxation"));
    }
    if let Some(e) = (0..n).find(|&e| y[e] > 0.0 && !r.contains(e)) {
        return Err(precondition(format!("y_{e} > 0 outside the witness support")));
    }
    let numerator = compensated_sum((0..n).map(|e| v[e] * y[e]));
    let sigma = sigma_opt(inst, r, v)?;
    if sigma == 0.0 {
        return if numerator > 0.0 {
            Err(Error::InfiniteRatio)
        } else {
            Err(precondition("σ_v(R) = 0 and the witness has no value"))
        };
    }
    Ok(IgWitness { support: r.clone(), y: y.to_vec(), numerator, sigma, ratio: numerator / sigma })
}

/// CG ≤ 1/IG up to 1e−9.
pub fn check_cg_le_inv_ig(inst: &Instance, v: &[f64], x: &[f64], witness: &IgWitness) -> Result<bool> {
    Ok(exact_cg(inst, v, x)?.cg_value <= 1.0 / witness.ratio + 1e-9)
}

/// ṽ(t) = (1−t)v + t·v_avg·1 with v_avg = Σ v_i x_i / Σ x_i.
pub fn reduce_value_average(inst: &KnapsackInstance, x: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(x.len(), inst.len())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!("t must lie in [0,1], got {t}")));
    }
    let mass = compensated_sum(x.iter().copied());
    if !(mass > 0.0) {
        return Err(invalid("Σ x_i must be positive"));
    }
    let v = inst.values();
    let avg = compensated_sum(v.iter().zip(x).map(|(a, b)| a * b)) / mass;
    Ok(v.iter().map(|&vi| (1.0 - t) * vi + t * avg).collect())
}

/// Replaces x_i and x_j by their average.
pub fn reduce_equalize_pair(x: &[f64], i: usize, j: usize) -> Result<Vec<f64>> {
    for idx in [i, j] {
        if idx >= x.len() {
            return Err(Error::InvalidIndex { index: idx, len: x.len() });
        }
    }
    if i == j {
        return Err(invalid("the two coordinates must differ"));
    }
    let mut out = x.to_vec();
    let mid = (x[i] + x[j]) / 2.0;
    out[i] = mid;
    out[j] = mid;
    Ok(out)
}

/// CG of a class-k instance with unit values at x = (λ/n)·1, which is G(k, n, λ).
pub fn cg_uniform_classk(k: u64, n: u64, lambda: f64) -> Result<f64> {
    if k == 0 || n < k + 1 {
        return Err(invalid(format!("need k >= 1 and n >= k+1, got k={k}, n={n}")));
    }
    if !(0.0..=(k + 1) as f64).contains(&lambda) {
        return Err(invalid(format!("lambda must lie in [0, k+1], got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    g_func(k, n, lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub k: u64,
    pub n: u64,
    pub lambda: f64,
    pub g: f64,
    pub f: f64,
    /// G − F.
    pub margin: f64,
    /// λ ∈ [k, k+1], where G ≥ F is known to hold.
    pub proven: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Failed checks of proven facts only.
    pub failures: Vec<String>,
}

/// G(k,n,λ) against F(k,λ) on the grid λ = t(k+1), t ∈ `lambda_fracs`.
/// Cells with n ≤ k are skipped. Also checks that F(k,·) is non-increasing
/// along the grid and that F(k,k+1) ≥ (1−e^{−2})/2.
pub fn conjecture_scan(k_list: &[u64], n_list: &[u64], lambda_fracs: &[f64]) -> Result<ScanReport> {
    if let Some(t) = lambda_fracs.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(invalid(format!("grid fractions must lie in (0,1], got {t}")));
    }
    let mut fracs = lambda_fracs.to_vec();
    fracs.sort_by(f64::total_cmp);
    fracs.dedup();
    let floor = (1.0 - (-2.0f64).exp()) / 2.0;
    let mut report = ScanReport::default();
    for &k in k_list {
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        let kf = k as f64;
        let f_values = fracs.iter().map(|t| f_func(kf, t * (kf + 1.0))).collect::<Result<Vec<_>>>()?;
        for (w, pair) in f_values.windows(2).enumerate() {
            if pair[1] > pair[0] + 1e-12 {
                report.failures.push(format!(
                    "F({k},·) increases between lambda = {} and {}",
                    g17(fracs[w] * (kf + 1.0)),
                    g17(fracs[w + 1] * (kf + 1.0))
                ));
            }
        }
        let top = f_func(kf, kf + 1.0)?;
        if top < floor - 1e-12 {
            report.failures.push(format!("F({k},{}) = {} is below (1-e^-2)/2", k + 1, g17(top)));
        }
        for &n in n_list.iter().filter(|&&n| n > k) {
            for (t, &f) in fracs.iter().zip(&f_values) {
                let lambda = t * (kf + 1.0);
                let g = g_func(k, n, lambda)?;
                let proven = lambda >= kf;
                let margin = g - f;
                if proven && margin < -1e-12 {
                    report.failures.push(format!(
                        "G({k},{n},{}) < F in the proven region, margin {}",
                        g17(lambda),
                        g17(margin)
                    ));
                }
                report.rows.push(ScanRow { k, n, lambda, g, f, margin, proven });
            }
        }
    }
    Ok(report)
}

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io { path: "<scan output>".into(), message: e.to_string() };
    w.write_record(["k", "n", "lambda", "G", "F", "margin", "proven_region_flag"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.n.to_string(),
            g17(r.lambda),
            g17(r.g),
            g17(r.f),
            g17(r.margin),
            r.proven.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io { path: "<scan output>".into(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_class_k_uniform, gen_projective_plane, Hypergraph};

    fn fano() -> Instance {
        gen_projective_plane(2).unwrap().into()
    }

    #[test]
    fn sigma_examples() {
        let k: Instance = KnapsackInstance::unit(vec![0.6, 0.5, 0.4]).unwrap().into();
        assert_eq!(sigma_opt(&k, &ItemSet::full(3), &[1.0; 3]).unwrap(), 2.0);
        assert_eq!(sigma_opt(&k, &ItemSet::empty(), &[1.0; 3]).unwrap(), 0.0);
        let f = fano();
        for mask in 1u64..128 {
            assert_eq!(sigma_opt(&f, &ItemSet::from_mask(mask), &[1.0; 7]).unwrap(), 1.0);
        }
        let big = Instance::Knapsack(KnapsackInstance::unit(vec![0.01; 25]).unwrap());
        assert!(matches!(sigma_opt(&big, &ItemSet::full(25), &[1.0; 25]), Err(Error::ScaleCap { .. })));
    }

    #[test]
    fn cg_examples() {
        let tri: Instance = gen_projective_plane(1).unwrap().into();
        let r = exact_cg(&tri, &[1.0; 3], &[0.5; 3]).unwrap();
        assert!((r.cg_value - 7.0 / 12.0).abs() < 1e-15);
        let r = exact_cg(&fano(), &[1.0; 7], &[1.0 / 3.0; 7]).unwrap();
        let want = (1.0 - (2.0f64 / 3.0).powi(7)) / (7.0 / 3.0);
        assert!((r.cg_value - want).abs() < 1e-12);
        assert!((r.cg_value * r.denominator - r.numerator).abs() < 1e-15);
        assert!((cg_hg_projective_formula(3).unwrap() - want).abs() < 1e-15);
        assert!((cg_hg_projective_formula(2).unwrap() - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn cg_asymmetric_class_one() {
        // Pairwise conflicting items: σ(R) = max v over R.
        let inst: Instance = KnapsackInstance::new(vec![0.6, 0.9, 0.55], vec![1.0, 8.0, 7.0]).unwrap().into();
        let x = [0.3, 0.1, 0.4];
        let num = 8.0 * 0.1 + 0.9 * (7.0 * 0.4 + 0.6 * 1.0 * 0.3);
        let r = exact_cg(&inst, &[1.0, 8.0, 7.0], &x).unwrap();
        assert!((r.numerator - num).abs() < 1e-14);
        assert!((r.denominator - 3.9).abs() < 1e-14);
    }

    #[test]
    fn cg_limit_cases() {
        let f = fano();
        let r = exact_cg(&f, &[0.0; 7], &[0.0; 7]).unwrap();
        assert_eq!(r.extension_case, ExtensionCase::LimitOne);
        assert_eq!(r.cg_value, 1.0);
        let mut x = [0.0; 7];
        x[0] = 0.5;
        assert_eq!(exact_cg(&f, &[0.0; 7], &x).unwrap().cg_value, 1.0);
        x[1] = 0.5;
        assert_eq!(exact_cg(&f, &[0.0; 7], &x), Err(Error::UndefinedPoint));
    }

    #[test]
    fn pruning_and_scaling() {
        let h = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3], vec![0, 2]]).unwrap();
        let inst: Instance = h.into();
        let v = [1.0, 2.0, 0.0, 0.5, 3.0];
        let x = [0.3, 0.2, 0.4, 0.0, 0.2];
        let base = exact_cg(&inst, &v, &x).unwrap().cg_value;
        for s in [0.1, 3.0, 10.0] {
            let sv: Vec<f64> = v.iter().map(|c| c * s).collect();
            assert!((exact_cg(&inst, &sv, &x).unwrap().cg_value - base).abs() < 1e-12);
        }
        let sub: Instance = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap().into();
        let pruned = exact_cg(&sub, &[1.0, 2.0, 3.0], &[0.3, 0.2, 0.2]).unwrap().cg_value;
        assert_eq!(pruned, base);
    }

    #[test]
    fn witnesses() {
        let f = fano();
        let w = ig_witness_ratio(&f, &[1.0; 7], &[1.0 / 3.0; 7], &ItemSet::full(7)).unwrap();
        assert!((w.ratio - 7.0 / 3.0).abs() < 1e-15);
        assert!(check_cg_le_inv_ig(&f, &[1.0; 7], &[1.0 / 3.0; 7], &w).unwrap());
        let mut y = [0.0; 7];
        y[2] = 1.0;
        let w = ig_witness_ratio(&f, &[1.0; 7], &y, &ItemSet::from_indices(vec![2])).unwrap();
        assert_eq!(w.ratio, 1.0);
        assert!(ig_witness_ratio(&f, &[1.0; 7], &[1.0 / 3.0; 7], &ItemSet::from_indices(vec![0])).is_err());
        let (k1, x) = gen_class_k_uniform(1, 6, 0.01).unwrap();
        let k1: Instance = k1.into();
        let w = ig_witness_ratio(&k1, &[1.0; 6], &x, &ItemSet::full(6)).unwrap();
        assert!(check_cg_le_inv_ig(&k1, &[1.0; 6], &x, &w).unwrap());
    }

    #[test]
    fn reductions() {
        let inst = KnapsackInstance::new(vec![0.6; 3], vec![2.0, 1.0, 1.0]).unwrap();
        let x = [0.5; 3];
        assert_eq!(reduce_value_average(&inst, &x, 0.0).unwrap(), vec![2.0, 1.0, 1.0]);
        let avg = reduce_value_average(&inst, &x, 1.0).unwrap();
        assert!(avg.iter().all(|&c| (c - 4.0 / 3.0).abs() < 1e-15));
        let i: Instance = inst.clone().into();
        let before = exact_cg(&i, &[2.0, 1.0, 1.0], &x).unwrap().cg_value;
        let after = exact_cg(&i, &avg, &x).unwrap().cg_value;
        assert!(before >= after - 1e-12);
        assert!(reduce_value_average(&inst, &[0.0; 3], 0.5).is_err());
        assert_eq!(reduce_equalize_pair(&[0.2, 0.8], 0, 1).unwrap(), vec![0.5, 0.5]);
        assert!(reduce_equalize_pair(&[0.2, 0.8], 1, 1).is_err());
    }

    #[test]
    fn uniform_classk_matches_enumeration() {
        assert!((cg_uniform_classk(1, 4, 1.0).unwrap() - 175.0 / 256.0).abs() < 1e-15);
        let inst: Instance = KnapsackInstance::unit(vec![0.55; 4]).unwrap().into();
        let e = exact_cg(&inst, &[1.0; 4], &[0.25; 4]).unwrap().cg_value;
        assert!((e - 175.0 / 256.0).abs() < 1e-12);
        for k in 1..=3u64 {
            for n in k + 1..=9 {
                let a = 1.0 / k as f64 - 0.01;
                let inst: Instance = KnapsackInstance::unit(vec![a; n as usize]).unwrap().into();
                for lambda in [0.5, 1.0, k as f64, k as f64 + 1.0] {
                    let x = vec![lambda / n as f64; n as usize];
                    let e = exact_cg(&inst, &vec![1.0; n as usize], &x).unwrap().cg_value;
                    assert!((e - cg_uniform_classk(k, n, lambda).unwrap()).abs() < 1e-12, "{k} {n} {lambda}");
                }
            }
        }
    }

    #[test]
    fn scan_proven_region_holds() {
        let fracs: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let ks: Vec<u64> = (1..=20).collect();
        let rep = conjecture_scan(&ks, &[3, 10, 100, 1000], &fracs).unwrap();
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        let mut buf = Vec::new();
        write_scan_csv(&rep.rows[..2], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,n,lambda,G,F,margin,proven_region_flag\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn sampled_cg_brackets_exact() {
        let x = [1.0 / 3.0; 7];
        let exact = exact_cg(&fano(), &[1.0; 7], &x).unwrap().cg_value;
        let (m, se) = estimate_cg(&fano(), &[1.0; 7], &x, 50_000, 3).unwrap();
        assert!((m - exact).abs() < 4.0 * se, "{m} ± {se} vs {exact}");
        assert_eq!(estimate_cg(&fano(), &[1.0; 7], &x, 50_000, 3).unwrap(), (m, se));
    }
}

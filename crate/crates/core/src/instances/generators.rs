use std::fmt;
use std::str::FromStr;

use super::types::{Digraph, FractionalPoint, Hypergraph, KcsInstance, KnapsackInstance};
use crate::error::{invalid, Error, Result};

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Homogeneous coordinates over Z_p with first nonzero entry 1.
fn normalized_triples(p: u64) -> Vec<[u64; 3]> {
    let mut out = Vec::with_capacity((p * p + p + 1) as usize);
    for a in 0..p {
        for b in 0..p {
            out.push([1, a, b]);
        }
    }
    for b in 0..p {
        out.push([0, 1, b]);
    }
    out.push([0, 0, 1]);
    out
}

/// Projective plane of prime order p over Z_p (p = 1 gives the triangle).
/// Vertices are points, edges are lines.
pub fn gen_projective_plane(p: u64) -> Result<Hypergraph> {
    if p == 1 {
        return Hypergraph::new(3, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }
    if !is_prime(p) {
        return Err(Error::UnsupportedOrder(p));
    }
    let points = normalized_triples(p);
    let lines = points.clone();
    let edges = lines
        .iter()
        .map(|l| {
            (0..points.len())
                .filter(|&i| {
                    let q = &points[i];
                    (l[0] * q[0] + l[1] * q[1] + l[2] * q[2]).is_multiple_of(p)
                })
                .collect()
        })
        .collect();
    Hypergraph::new(points.len(), edges)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// n items of size (1+ε)/(k+1), unit values, x = (k+1)/((1+ε)n)·1_n.
pub fn gen_class_k_uniform(k: u64, n: usize, eps: f64) -> Result<(KnapsackInstance, FractionalPoint)> {
    check_eps(eps)?;
    if k == 0 {
        return Err(invalid("class index k must be at least 1"));
    }
    if n as u64 <= k {
        return Err(invalid(format!("need n > k for a nontrivial class-k instance, got n={n}, k={k}")));
    }
    let a = (1.0 + eps) / (k + 1) as f64;
    if a > 1.0 / k as f64 {
        return Err(invalid(format!("eps={eps} too large: size {a} leaves class {k}")));
    }
    let inst = KnapsackInstance::unit(vec![a; n])?;
    let x = FractionalPoint::uniform(n, (k + 1) as f64 / ((1.0 + eps) * n as f64))?;
    Ok((inst, x))
}

/// Integrality-gap variant: sizes 1/(k+1)+ε and the LP optimum x = 1/(n·a)·1_n.
pub fn gen_class_k_gap(k: u64, n: usize, eps: f64) -> Result<(KnapsackInstance, FractionalPoint)> {
    check_eps(eps)?;
    if k == 0 {
        return Err(invalid("class index k must be at least 1"));
    }
    if n as u64 <= k {
        return Err(invalid(format!("need n > k, got n={n}, k={k}")));
    }
    let a = 1.0 / (k + 1) as f64 + eps;
    if a > 1.0 / k as f64 {
        return Err(invalid(format!("eps={eps} too large: size {a} leaves class {k}")));
    }
    let inst = KnapsackInstance::unit(vec![a; n])?;
    let x = FractionalPoint::uniform(n, 1.0 / (n as f64 * a))?;
    Ok((inst, x))
}

/// Points of the projective plane of order k−1 as items, its lines as
/// constraints, a_ij = 1/(2−ε) on incidences, x = (2−ε)/k·1_n.
pub fn gen_kcs_nat(k: u64, eps: f64) -> Result<(KcsInstance, FractionalPoint)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    if k < 2 {
        return Err(invalid("k must be at least 2"));
    }
    let plane = gen_projective_plane(k - 1)?;
    let n = plane.num_vertices();
    let a = 1.0 / (2.0 - eps);
    let columns = (0..n).map(|j| plane.incident(j).iter().map(|&i| (i, a)).collect()).collect();
    let inst = KcsInstance::new(plane.num_edges(), k as usize, columns, vec![1.0; n])?;
    let x = FractionalPoint::uniform(n, (2.0 - eps) / k as f64)?;
    Ok((inst, x))
}

/// n = m = 2k−1, a_ii = 1, a_{i,i+t} = ε for t = 1..k−1 (mod n), x = (1−kε)·1_n.
pub fn gen_kcs_str(k: u64, eps: f64) -> Result<(KcsInstance, FractionalPoint)> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    check_eps(eps)?;
    if eps >= 1.0 / k as f64 {
        return Err(invalid(format!("eps must be below 1/k = {}, got {eps}", 1.0 / k as f64)));
    }
    let k = k as usize;
    let n = 2 * k - 1;
    let mut columns = vec![Vec::new(); n];
    for i in 0..n {
        columns[i].push((i, 1.0));
        for t in 1..k {
            columns[(i + t) % n].push((i, eps));
        }
    }
    let inst = KcsInstance::new(n, k, columns, vec![1.0; n])?;
    let x = FractionalPoint::uniform(n, 1.0 - k as f64 * eps)?;
    Ok((inst, x))
}

/// d constraints, d+1 items: a_ii = 1−ε, every other entry 2ε.
/// x_i = (1−2ε)/(1+(2d−3)ε) for i < d and x_d = 1.
pub fn gen_dknapsack_example(d: usize, eps: f64) -> Result<(KcsInstance, FractionalPoint)> {
    if d == 0 {
        return Err(invalid("dimension d must be at least 1"));
    }
    check_eps(eps)?;
    if eps >= 1.0 / (2 * d) as f64 {
        return Err(invalid(format!("eps must be below 1/(2d), got {eps}")));
    }
    let mut matrix = vec![vec![2.0 * eps; d + 1]; d];
    for (i, row) in matrix.iter_mut().enumerate() {
        row[i] = 1.0 - eps;
    }
    let inst = KcsInstance::from_dense(&matrix, d, vec![1.0; d + 1])?;
    let xi = (1.0 - 2.0 * eps) / (1.0 + (2.0 * d as f64 - 3.0) * eps);
    let mut x = vec![xi; d];
    x.push(1.0);
    Ok((inst, FractionalPoint::new(x)?))
}

/// Vertex i points to i+1, ..., i+d modulo 2d+1.
pub fn gen_circulant_tournament(d: usize) -> Result<Digraph> {
    if d == 0 {
        return Err(invalid("d must be at least 1"));
    }
    let n = 2 * d + 1;
    Digraph::from_out_lists((0..n).map(|i| (1..=d).map(|t| (i + t) % n).collect()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TightFamily {
    /// Three items of size 1/(2+ε), x = (ε, 1, 1).
    Small49,
    /// Two items of size 1/(1+ε), x = (ε, 1).
    Gen14,
    /// Sizes ((1−ε)/2, (1−ε)/2, 1/2), x = (1, 1, 2ε).
    SmallBound13,
}

impl TightFamily {
    pub const ALL: [TightFamily; 3] = [Self::Small49, Self::Gen14, Self::SmallBound13];

    /// Index of the item whose conditional ratio is tight.
    pub fn tight_item(self) -> usize {
        match self {
            Self::Small49 | Self::Gen14 => 0,
            Self::SmallBound13 => 2,
        }
    }

    /// Exact E[y_i | i ∈ R] / 1 for the tight item.
    pub fn tight_ratio(self, eps: f64) -> f64 {
        match self {
            Self::Small49 => 4.0 / 9.0 + 2.0 * eps / 9.0,
            Self::Gen14 => (1.0 + eps) / 4.0,
            Self::SmallBound13 => 1.0 / (3.0 - 2.0 * eps),
        }
    }
}

impl fmt::Display for TightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Small49 => "small-4/9",
            Self::Gen14 => "gen-1/4",
            Self::SmallBound13 => "small-bound-1/3",
        })
    }
}

impl FromStr for TightFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small-4/9" => Ok(Self::Small49),
            "gen-1/4" => Ok(Self::Gen14),
            "small-bound-1/3" => Ok(Self::SmallBound13),
            other => Err(invalid(format!(
                "unknown tight family `{other}` (expected small-4/9, gen-1/4 or small-bound-1/3)"
            ))),
        }
    }
}

pub fn gen_knapsack_tight(which: TightFamily, eps: f64) -> Result<(KnapsackInstance, FractionalPoint)> {
    check_eps(eps)?;
    if eps >= 0.5 {
        return Err(invalid(format!("eps must be below 1/2, got {eps}")));
    }
    let (a, x) = match which {
        TightFamily::Small49 => (vec![1.0 / (2.0 + eps); 3], vec![eps, 1.0, 1.0]),
        TightFamily::Gen14 => (vec![1.0 / (1.0 + eps); 2], vec![eps, 1.0]),
        TightFamily::SmallBound13 => {
            (vec![(1.0 - eps) / 2.0, (1.0 - eps) / 2.0, 0.5], vec![1.0, 1.0, 2.0 * eps])
        }
    };
    Ok((KnapsackInstance::unit(a)?, FractionalPoint::new(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::types::{
        hypergraph_feasible, is_matching, kcs_feasible, kcs_feasible_set,
        knapsack_feasible_point, ItemSet,
    };

    fn check_plane(p: u64) {
        let h = gen_projective_plane(p).unwrap();
        let n = (p * p + p + 1) as usize;
        assert_eq!(h.num_vertices(), n);
        assert_eq!(h.num_edges(), n);
        for e in 0..n {
            assert_eq!(h.edge(e).len() as u64, p + 1);
        }
        for v in 0..n {
            assert_eq!(h.incident(v).len() as u64, p + 1);
        }
        for e in 0..n {
            for f in (e + 1)..n {
                let common = h.edge(e).iter().filter(|v| h.edge(f).contains(v)).count();
                assert_eq!(common, 1, "lines {e},{f} of order {p}");
            }
        }
    }

    #[test]
    fn projective_planes() {
        for p in [1, 2, 3, 5, 7] {
            check_plane(p);
        }
        assert_eq!(gen_projective_plane(4), Err(Error::UnsupportedOrder(4)));
        assert_eq!(gen_projective_plane(6), Err(Error::UnsupportedOrder(6)));
        assert_eq!(gen_projective_plane(0), Err(Error::UnsupportedOrder(0)));
    }

    #[test]
    fn fano_point_and_matchings() {
        let h = gen_projective_plane(2).unwrap();
        assert!(hypergraph_feasible(&h, &[1.0 / 3.0; 7], 1.0).unwrap());
        for e in 0..7 {
            for f in (e + 1)..7 {
                assert!(!is_matching(&h, &ItemSet::from_indices(vec![e, f])).unwrap());
            }
        }
    }

    #[test]
    fn class_k_uniform() {
        let (inst, x) = gen_class_k_uniform(1, 2, 0.1).unwrap();
        assert!((inst.sizes()[0] - 0.55).abs() < 1e-15);
        assert!((x[0] - 2.0 / 2.2).abs() < 1e-15);
        for k in 1..5u64 {
            for n in (k as usize + 1)..12 {
                let (inst, x) = gen_class_k_uniform(k, n, 0.05).unwrap();
                assert!(inst.is_class_k(k));
                assert!(knapsack_feasible_point(&inst, &x).unwrap());
                let lp: f64 = x.iter().sum();
                assert!((lp - (k + 1) as f64 / 1.05).abs() < 1e-12);
            }
        }
        assert!(gen_class_k_uniform(2, 2, 0.1).is_err());
    }

    #[test]
    fn kcs_nat_values() {
        let (inst, x) = gen_kcs_nat(3, 0.1).unwrap();
        assert_eq!(inst.num_items(), 7);
        assert_eq!(inst.num_constraints(), 7);
        assert!((x[0] - 1.9 / 3.0).abs() < 1e-15);
        assert!(kcs_feasible(&inst, &x, false).unwrap());
        let v: f64 = x.iter().sum();
        assert!((v - 1.9 * 7.0 / 3.0).abs() < 1e-12);
        assert!(!kcs_feasible(&inst, &[1.0; 7], false).unwrap());
        assert!(gen_kcs_nat(5, 0.1).is_err());
    }

    #[test]
    fn kcs_str_values() {
        let (inst, x) = gen_kcs_str(2, 0.01).unwrap();
        assert_eq!(inst.num_items(), 3);
        assert!(kcs_feasible(&inst, &x, true).unwrap());
        assert!((x.iter().sum::<f64>() - 2.94).abs() < 1e-12);
        assert!(gen_kcs_str(2, 0.5).is_err());
    }

    #[test]
    fn small_examples_admit_only_singletons() {
        let cases = [
            gen_kcs_nat(2, 0.1).unwrap().0,
            gen_kcs_nat(3, 0.1).unwrap().0,
            gen_kcs_str(1, 0.1).unwrap().0,
            gen_kcs_str(2, 0.01).unwrap().0,
            gen_kcs_str(3, 0.01).unwrap().0,
            gen_dknapsack_example(2, 0.01).unwrap().0,
            gen_dknapsack_example(3, 0.01).unwrap().0,
        ];
        for inst in &cases {
            let n = inst.num_items();
            let best = (0u64..1 << n)
                .filter(|&m| kcs_feasible_set(inst, &ItemSet::from_mask(m)).unwrap())
                .map(|m| m.count_ones())
                .max()
                .unwrap();
            assert_eq!(best, 1);
        }
    }

    #[test]
    fn dknapsack_value() {
        let (inst, x) = gen_dknapsack_example(2, 0.01).unwrap();
        assert!(kcs_feasible(&inst, &x, false).unwrap());
        let v: f64 = x.iter().sum();
        assert!((v - 2.97 / 1.01).abs() < 1e-12);
        assert!((v - 2.9406).abs() < 1e-4);
    }

    #[test]
    fn circulant() {
        let g = gen_circulant_tournament(1).unwrap();
        assert_eq!(g.out_lists(), &[vec![1], vec![2], vec![0]]);
        for d in 1..5 {
            let g = gen_circulant_tournament(d).unwrap();
            assert_eq!(g.num_vertices(), 2 * d + 1);
            assert!(g.out_lists().iter().all(|l| l.len() == d));
            let und = g.undirected();
            assert!(und.iter().all(|l| l.len() == 2 * d));
        }
    }

    #[test]
    fn tight_families() {
        let (inst, x) = gen_knapsack_tight(TightFamily::Small49, 0.01).unwrap();
        assert!((inst.sizes()[0] - 0.4975).abs() < 1e-4);
        assert!(knapsack_feasible_point(&inst, &x).unwrap());
        let (inst, x) = gen_knapsack_tight(TightFamily::Gen14, 0.01).unwrap();
        assert!((inst.sizes()[0] - 0.9901).abs() < 1e-4);
        assert!(knapsack_feasible_point(&inst, &x).unwrap());
        let (inst, x) = gen_knapsack_tight(TightFamily::SmallBound13, 0.01).unwrap();
        assert_eq!(inst.sizes(), &[0.495, 0.495, 0.5]);
        assert!(knapsack_feasible_point(&inst, &x).unwrap());
        for f in TightFamily::ALL {
            assert_eq!(f.to_string().parse::<TightFamily>().unwrap(), f);
        }
    }
}

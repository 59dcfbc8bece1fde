use proptest::prelude::*;

use crsbench_core::gapcalc::{exact_cg, reduce_equalize_pair, sigma_opt};
use crsbench_core::instances::random::{random_class_k, random_hypergraph, random_kcs, random_knapsack};
use crsbench_core::instances::{
    from_json_str, kcs_feasible_set, knapsack_feasible_point, to_json_string, Digraph, Document,
    FractionalPoint, Instance, ItemSet, KnapsackInstance,
};
use crsbench_core::kcspip::{blocking_events, degeneracy_color, kcs_bansal_crs};
use crsbench_core::knapsack::{
    decompose_dominating, greedy_fractional_knapsack, greedy_integral_two_thirds, klp_bansal_crs,
    klp_gen_crs, klp_small_crs,
};
use crsbench_core::randkit::RngStream;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn brute_sigma(inst: &Instance, r: &ItemSet, v: &[f64]) -> f64 {
    let items = r.as_slice();
    (0u64..1 << items.len())
        .map(|mask| {
            let s: ItemSet = (0..items.len()).filter(|q| mask >> q & 1 == 1).map(|q| items[q]).collect();
            if inst.feasible_set(&s).unwrap() {
                s.iter().map(|e| v[e]).sum()
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn sigma_matches_brute_force(seed in any::<u64>(), n in 1usize..11, kind in 0u8..3) {
        let mut rng = RngStream::root(seed);
        let inst: Instance = match kind {
            0 => random_knapsack(n, 0.0, 1.0, &mut rng).unwrap().0.into(),
            1 => random_hypergraph(6, n, 3, false, &mut rng).unwrap().0.into(),
            _ => random_kcs(n, 5, 3, &mut rng).unwrap().0.into(),
        };
        let v = inst.values();
        let r: ItemSet = (0..n).filter(|_| rng.uniform() < 0.7).collect();
        let got = sigma_opt(&inst, &r, &v).unwrap();
        prop_assert!((got - brute_sigma(&inst, &r, &v)).abs() < 1e-9);
    }

    #[test]
    fn hypergraph_cg_lower_bound(seed in any::<u64>(), m in 1usize..11, rank in 2usize..4) {
        let mut rng = RngStream::root(seed);
        let (h, x) = random_hypergraph(7, m, rank, false, &mut rng).unwrap();
        let v = h.values();
        let k = h.rank() as f64;
        let cg = exact_cg(&h.into(), &v, &x).unwrap().cg_value;
        prop_assert!(cg <= 1.0 + 1e-12);
        prop_assert!(cg >= -(-k).exp_m1() / k - 1e-9);
    }

    #[test]
    fn cg_is_scale_invariant(seed in any::<u64>(), n in 1usize..10, scale in prop::sample::select(vec![0.1, 3.0, 10.0])) {
        let mut rng = RngStream::root(seed);
        let (inst, x) = random_knapsack(n, 0.0, 1.0, &mut rng).unwrap();
        let v = inst.values().to_vec();
        let scaled: Vec<f64> = v.iter().map(|c| c * scale).collect();
        let i: Instance = inst.into();
        let a = exact_cg(&i, &v, &x).unwrap().cg_value;
        let b = exact_cg(&i, &scaled, &x).unwrap().cg_value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cg_ignores_dead_items(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = RngStream::root(seed);
        let (inst, x) = random_knapsack(n, 0.0, 1.0, &mut rng).unwrap();
        let mut v = inst.values().to_vec();
        v[0] = 0.0;
        let full = exact_cg(&inst.clone().into(), &v, &x).unwrap().cg_value;
        let keep: Vec<usize> = (1..n).collect();
        let sub = KnapsackInstance::new(
            keep.iter().map(|&i| inst.sizes()[i]).collect(),
            keep.iter().map(|&i| v[i]).collect(),
        ).unwrap();
        let sx: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
        let pruned = exact_cg(&sub.into(), &v[1..], &sx).unwrap().cg_value;
        prop_assert_eq!(full, pruned);
    }

    #[test]
    fn equalizing_a_pair_does_not_raise_cg(seed in any::<u64>(), k in 1u64..4, extra in 1usize..6) {
        let mut rng = RngStream::root(seed);
        let n = k as usize + extra;
        let (inst, x) = random_class_k(k, n, &mut rng).unwrap();
        let i = rng.below(n as u64) as usize;
        let j = (i + 1 + rng.below(n as u64 - 1) as usize) % n;
        let y = reduce_equalize_pair(&x, i, j).unwrap();
        let ones = vec![1.0; n];
        let inst: Instance = inst.into();
        let before = exact_cg(&inst, &ones, &x).unwrap().cg_value;
        let after = exact_cg(&inst, &ones, &y).unwrap().cg_value;
        prop_assert!(before >= after - 1e-12);
    }

    #[test]
    fn blocking_flags_are_monotone(seed in any::<u64>(), k in 2usize..5) {
        let mut rng = RngStream::root(seed);
        let (inst, _) = random_kcs(12, 6, k, &mut rng).unwrap();
        let big: ItemSet = (0..12).filter(|_| rng.uniform() < 0.6).collect();
        prop_assume!(!big.is_empty());
        let small: ItemSet = big.iter().filter(|_| rng.uniform() < 0.5).collect();
        for j in small.iter() {
            for ell in [3.0, 5.0] {
                let a = blocking_events(&inst, &small, j, ell).unwrap();
                let b = blocking_events(&inst, &big, j, ell).unwrap();
                prop_assert!(!a.bb || b.bb);
                prop_assert!(!a.mb || b.mb);
                prop_assert!(!a.tb || b.tb);
            }
        }
        let j = big[0];
        let alone = blocking_events(&inst, &ItemSet::from_indices(vec![j]), j, 3.0).unwrap();
        prop_assert!(!alone.any());
    }

    #[test]
    fn degeneracy_coloring_is_proper(seed in any::<u64>(), n in 1usize..30, d in 1usize..4) {
        let mut rng = RngStream::root(seed);
        let out: Vec<Vec<usize>> = (0..n)
            .map(|u| {
                let mut t: Vec<usize> = (0..d).map(|_| rng.below(n as u64) as usize).filter(|&v| v != u).collect();
                t.sort_unstable();
                t.dedup();
                t
            })
            .collect();
        let g = Digraph::from_out_lists(out).unwrap();
        let c = degeneracy_color(&g, d).unwrap();
        for (u, nbrs) in g.undirected().iter().enumerate() {
            for &v in nbrs {
                prop_assert_ne!(c[u], c[v]);
            }
        }
        prop_assert!(c.iter().all(|&col| col <= 2 * d));
    }

    #[test]
    fn deterministic_knapsack_outputs(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = RngStream::root(seed);
        let (inst, x) = random_knapsack(n, 0.0, 0.5, &mut rng).unwrap();
        let r = x.sample(&mut rng);
        let y = klp_small_crs(&inst, &x, &r).unwrap();
        prop_assert!(knapsack_feasible_point(&inst, &y).unwrap());
        // (2/3)·y is dominated by a distribution over feasible sets.
        let shrunk: Vec<f64> = y.iter().map(|c| c * 2.0 / 3.0).collect();
        decompose_dominating(&inst, &shrunk, 1.5).unwrap().verify(&inst, &shrunk).unwrap();
        let g = klp_gen_crs(&inst, &x, &r).unwrap();
        prop_assert!(knapsack_feasible_point(&inst, &g).unwrap());
        prop_assert!(g.iter().enumerate().all(|(i, &c)| c == 0.0 || r.contains(i)));
    }

    #[test]
    fn two_thirds_rounding_guarantee(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = RngStream::root(seed);
        let (inst, _) = random_knapsack(n, 0.0, 0.5, &mut rng).unwrap();
        let (_, w) = greedy_fractional_knapsack(&inst);
        let s = greedy_integral_two_thirds(&inst).unwrap();
        let got: f64 = s.iter().map(|i| inst.values()[i]).sum();
        prop_assert!(inst.size_of(&s) <= 1.0 + 1e-12);
        prop_assert!(got >= 2.0 / 3.0 * w - 1e-9);
    }

    #[test]
    fn kcs_bansal_with_one_row_is_knapsack_bansal(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = RngStream::root(seed);
        let (knap, x) = random_knapsack(n, 0.0, 1.0, &mut rng).unwrap();
        let kcs = crsbench_core::instances::KcsInstance::from_dense(&[knap.sizes().to_vec()], 1, knap.values().to_vec()).unwrap();
        let r = x.sample(&mut rng);
        let stream = rng.derive(5);
        let a = klp_bansal_crs(&knap, &x, &r, &stream).unwrap();
        let b = kcs_bansal_crs(&kcs, &x, &r, &stream).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(kcs_feasible_set(&kcs, &b).unwrap());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = RngStream::root(seed);
        let (inst, x) = random_kcs(n, 4, 2, &mut rng).unwrap();
        let doc = Document::Instance { instance: inst.into(), x: Some(x) };
        let back = from_json_str(&to_json_string(&doc)).unwrap();
        prop_assert_eq!(doc, back);
    }

    #[test]
    fn point_sampling_marginals_are_coupled(seed in any::<u64>()) {
        let x = FractionalPoint::new(vec![0.2, 0.5, 0.9]).unwrap();
        let y = FractionalPoint::new(vec![0.3, 0.6, 0.95]).unwrap();
        let s = RngStream::root(seed);
        prop_assert!(x.sample(&mut s.clone()).is_subset(&y.sample(&mut s.clone())));
    }
}

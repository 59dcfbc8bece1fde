use crsbench_core::gapcalc::{
    cg_hg_projective_formula, cg_uniform_classk, check_cg_le_inv_ig, conjecture_scan, exact_cg,
    ig_witness_ratio, write_scan_csv,
};
use crsbench_core::instances::{
    gen_class_k_gap, gen_class_k_uniform, gen_dknapsack_example, gen_kcs_nat, gen_kcs_str,
    gen_projective_plane, Instance, ItemSet,
};
use crsbench_core::kcspip::{kcs_cg_upper_formula, kcs_cg_upper_limit};

#[test]
fn kcs_nat_matches_finite_formula() {
    for k in [3u64, 4] {
        let eps = 0.05;
        let (inst, x) = gen_kcs_nat(k, eps).unwrap();
        let v = inst.values().to_vec();
        let cg = exact_cg(&inst.into(), &v, &x).unwrap().cg_value;
        let n = x.len() as u64;
        let f = kcs_cg_upper_formula(k, n, eps).unwrap();
        assert!((cg - f).abs() < 1e-9, "k={k}: {cg} vs {f}");
    }
}

#[test]
fn kcs_formula_examples() {
    let lim = kcs_cg_upper_limit(3).unwrap();
    assert!((lim - (1.0 - (-2.0f64 / 3.0).exp()) / (14.0 / 3.0)).abs() < 1e-15);
    assert!((lim - 0.104).abs() < 5e-4);
    let f = kcs_cg_upper_formula(3, 7, 0.1).unwrap();
    assert!((f - (1.0 - (1.0 - 1.9f64 / 3.0).powi(7)) / (1.9 * 7.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn fano_matches_projective_formula() {
    let h = gen_projective_plane(2).unwrap();
    let v = h.values();
    let x = vec![1.0 / 3.0; 7];
    let cg = exact_cg(&h.into(), &v, &x).unwrap().cg_value;
    assert!((cg - cg_hg_projective_formula(3).unwrap()).abs() < 1e-12);
}

#[test]
fn uniform_classk_closed_form_matches_exact() {
    for (k, n) in [(1u64, 5usize), (2, 7), (3, 9)] {
        let eps = 0.02;
        let (inst, x) = gen_class_k_uniform(k, n, eps).unwrap();
        let ones = vec![1.0; n];
        let lambda: f64 = x.iter().sum();
        let cg = exact_cg(&Instance::from(inst), &ones, &x).unwrap().cg_value;
        let closed = cg_uniform_classk(k, n as u64, lambda).unwrap();
        assert!((cg - closed).abs() < 1e-9, "k={k} n={n}: {cg} vs {closed}");
    }
}

#[test]
fn classk_minimum_sits_at_full_load() {
    // Over a λ grid the minimizer is the largest admissible λ = k+1.
    for k in 1u64..=4 {
        let n = 40;
        let grid: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0 * (k + 1) as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&l| cg_uniform_classk(k, n, l).unwrap()).collect();
        let arg = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        assert_eq!(arg, grid.len() - 1, "k={k}");
    }
}

#[test]
fn scan_small_range_is_clean() {
    let fr: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let rep = conjecture_scan(&[1, 2, 3, 4, 5], &[50, 200], &fr).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    assert_eq!(rep.rows.len(), 5 * 2 * 10);
    let mut buf = Vec::new();
    write_scan_csv(&rep.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("k,n,lambda,G,F,margin,proven_region_flag\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn cg_below_inverse_ig_on_generators() {
    let mut corpus: Vec<(Instance, Vec<f64>)> = Vec::new();
    let h = gen_projective_plane(2).unwrap();
    corpus.push((h.into(), vec![1.0 / 3.0; 7]));
    for k in [3, 4] {
        let (i, x) = gen_kcs_nat(k, 0.05).unwrap();
        corpus.push((i.into(), x.into_vec()));
    }
    for k in [1, 2, 3] {
        let (i, x) = gen_kcs_str(k, 0.05).unwrap();
        corpus.push((i.into(), x.into_vec()));
    }
    for d in [1, 2, 3] {
        let (i, x) = gen_dknapsack_example(d, 0.05).unwrap();
        corpus.push((i.into(), x.into_vec()));
    }
    for (k, n) in [(1, 6), (2, 8), (3, 10)] {
        let (i, x) = gen_class_k_gap(k, n, 0.01).unwrap();
        corpus.push((i.into(), x.into_vec()));
    }
    for (inst, x) in &corpus {
        let v = inst.values();
        let r: ItemSet = (0..x.len()).filter(|&e| x[e] > 0.0).collect();
        let w = ig_witness_ratio(inst, &v, x, &r).unwrap();
        assert!(check_cg_le_inv_ig(inst, &v, x, &w).unwrap(), "{}", inst.kind());
        assert!(exact_cg(inst, &v, x).unwrap().cg_value <= 1.0 + 1e-12);
    }
}

//! The acceptance suite. Each criterion returns its verdict plus detail
//! lines; everything except timing is a function of the seed.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::gapcalc::{check_cg_le_inv_ig, exact_cg, ig_witness_ratio, sigma_opt};
use crate::harness::{
    estimate_balancedness, exact_balancedness_deterministic, kcs_stage_report, run_trials,
    test_monotonicity, Moments, MonotonicityMode, SchemeKind,
};
use crate::hypergraph::{exp_clock_round, hg_crs, hg_merged};
use crate::instances::random::{random_class_k, random_hypergraph, random_kcs, random_knapsack};
use crate::instances::{
    gen_circulant_tournament, gen_class_k_gap, gen_dknapsack_example, gen_kcs_nat, gen_kcs_str,
    gen_knapsack_tight, gen_projective_plane, hypergraph_feasible, is_matching, kcs_feasible,
    FractionalPoint, Hypergraph, Instance, ItemSet, KcsInstance, TightFamily,
};
use crate::kcspip::{
    brute_force_chromatic_number, build_blocking_digraph, default_params, degeneracy_color,
    kcs_crs_trace,
};
use crate::knapsack::{classk_integral_round, greedy_fractional_knapsack, greedy_integral_two_thirds};
use crate::lp::solve_max;
use crate::randkit::{
    bernoulli, binom_cdf, exponential, f_func, g_func, pois_cdf, poisson, RngStream,
};

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "exact correlation gap, Fano plane"),
    (2, "exact correlation gap, random class-k knapsack"),
    (3, "closed forms F and G"),
    (4, "binomial vs Poisson CDF inequality"),
    (5, "deterministic knapsack schemes, exact"),
    (6, "randomized knapsack schemes, Monte Carlo"),
    (7, "hypergraph scheme"),
    (8, "k-CS-PIP scheme"),
    (9, "integrality gap examples and roundings"),
    (10, "distribution identities and determinism"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub lines: Vec<String>,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn verdict_line(&self) -> String {
        format!("criterion {:>2}: {} - {}", self.id, if self.pass { "PASS" } else { "FAIL" }, self.title)
    }
}

/// Collects checks; a criterion passes when every check does.
#[derive(Default)]
struct Log {
    pass: bool,
    lines: Vec<String>,
}

impl Log {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        let msg = msg.into();
        self.lines.push(format!("[{}] {msg}", if ok { "ok" } else { "FAIL" }));
        self.pass &= ok;
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.lines.push(format!("[info] {}", msg.into()));
    }
}

fn floor_klp() -> f64 {
    -(-2.0f64).exp_m1() / 2.0
}

fn criterion_seed(seed: u64, id: u8) -> RngStream {
    RngStream::root(seed).derive(id as u64)
}

fn time_limit(id: u8) -> Duration {
    Duration::from_secs(match id {
        1 => 1,
        2 | 5 => 60,
        3 => 10,
        6 | 7 => 120,
        8 => 180,
        _ => 600,
    })
}

/// Runs one criterion. Library errors become failures, not panics.
pub fn run_criterion(id: u8, seed: u64) -> Result<CriterionResult> {
    let title = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .ok_or_else(|| Error::InvalidParameter(format!("no criterion {id}")))?;
    let start = Instant::now();
    let mut log = Log::new();
    let rng = criterion_seed(seed, id);
    let outcome = match id {
        1 => c1(&mut log),
        2 => c2(&mut log, &rng),
        3 => c3(&mut log),
        4 => c4(&mut log, &rng),
        5 => c5(&mut log, &rng),
        6 => c6(&mut log, &rng),
        7 => c7(&mut log, &rng),
        8 => c8(&mut log, &rng),
        9 => c9(&mut log, &rng),
        _ => c10(&mut log, &rng),
    };
    if let Err(e) = outcome {
        log.check(false, format!("error: {e}"));
    }
    let elapsed = start.elapsed();
    if elapsed > time_limit(id) {
        log.check(false, format!("runtime {:.1}s over the {}s limit", elapsed.as_secs_f64(), time_limit(id).as_secs()));
    }
    Ok(CriterionResult { id, title, pass: log.pass, lines: log.lines, elapsed })
}

/// Runs the selected criteria (all when `only` is empty) on a pool with
/// `threads` workers (rayon's default when None).
pub fn run_all(seed: u64, threads: Option<usize>, only: &[u8]) -> Result<Vec<CriterionResult>> {
    let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(|| ids.iter().map(|&id| run_criterion(id, seed)).collect())
}

fn c1(log: &mut Log) -> Result<()> {
    let fano: Instance = gen_projective_plane(2)?.into();
    let v = [1.0; 7];
    let x = [1.0 / 3.0; 7];
    let cg = exact_cg(&fano, &v, &x)?.cg_value;
    let want = (1.0 - (2.0f64 / 3.0).powi(7)) / (7.0 / 3.0);
    log.check((cg - want).abs() < 1e-12, format!("CG = {} vs closed form {}", g17(cg), g17(want)));
    let lower = -(-3.0f64).exp_m1() / 3.0;
    log.check(cg >= lower, format!("CG >= (1-e^-3)/3 = {}", g17(lower)));
    let w = ig_witness_ratio(&fano, &v, &x, &ItemSet::full(7))?;
    log.check((w.ratio - 7.0 / 3.0).abs() < 1e-12, format!("IG witness ratio {}", g17(w.ratio)));
    log.check(check_cg_le_inv_ig(&fano, &v, &x, &w)?, format!("CG <= 1/IG = {}", g17(1.0 / w.ratio)));
    Ok(())
}

fn c2(log: &mut Log, rng: &RngStream) -> Result<()> {
    let floor = floor_klp();
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for t in 0..100u64 {
        let mut s = rng.derive(t);
        let k = 1 + t % 3;
        let n = 1 + s.below(12) as usize;
        let (inst, x) = random_class_k(k, n, &mut s)?;
        let v = inst.values().to_vec();
        let cg = exact_cg(&inst.into(), &v, &x)?.cg_value;
        worst = worst.min(cg);
        if cg < floor - 1e-9 {
            failures += 1;
            log.note(format!("instance {t} (k={k}, n={n}) has CG {}", g17(cg)));
        }
    }
    log.check(failures == 0, format!("100 instances, min CG {} >= (1-e^-2)/2 - 1e-9", g17(worst)));
    Ok(())
}

fn c3(log: &mut Log) -> Result<()> {
    let floor = floor_klp();
    let f12 = f_func(1.0, 2.0)?;
    log.check((f12 - floor).abs() < 1e-12, format!("F(1,2) = {}", g17(f12)));
    let mut min_gap = f64::INFINITY;
    for k in 2..=200u64 {
        min_gap = min_gap.min(f_func(k as f64, k as f64 + 1.0)? - floor);
    }
    log.check(min_gap > 1e-12, format!("F(k,k+1) - (1-e^-2)/2 >= {} for k = 2..200", g17(min_gap)));
    let mut rises = 0;
    for k in 1..=50u64 {
        let kf = k as f64;
        let vals = (0..100).map(|i| f_func(kf, (kf + 1.0) * i as f64 / 99.0)).collect::<Result<Vec<_>>>()?;
        rises += vals.windows(2).filter(|w| w[1] > w[0] + 1e-15).count();
    }
    log.check(rises == 0, "F(k,.) non-increasing on 100-point grids, k = 1..50");
    let diff = (g_func(2, 100_000, 2.5)? - f_func(2.0, 2.5)?).abs();
    log.check(diff < 1e-4, format!("|G(2,1e5,2.5) - F(2,2.5)| = {}", g17(diff)));
    Ok(())
}

fn c4(log: &mut Log, rng: &RngStream) -> Result<()> {
    let mut s = rng.derive(0);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let n = 1 + s.below(2000);
        let lambda = s.uniform_range(1.0, n as f64);
        let s_max = (lambda - 1.0).floor() as u64;
        let k = s.below(s_max + 1);
        let diff = binom_cdf(k, n, lambda / n as f64)? - pois_cdf(k, lambda)?;
        worst = worst.max(diff);
        if diff > 1e-12 {
            failures += 1;
        }
    }
    log.check(failures == 0, format!("10^4 triples, max B - P = {}", g17(worst)));
    Ok(())
}

fn c5(log: &mut Log, rng: &RngStream) -> Result<()> {
    let eps = 0.01;
    for (fam, scheme) in [
        (TightFamily::Small49, SchemeKind::KlpSmall),
        (TightFamily::Gen14, SchemeKind::KlpGen),
        (TightFamily::SmallBound13, SchemeKind::KlpGen),
    ] {
        let (inst, x) = gen_knapsack_tight(fam, eps)?;
        let rep = exact_balancedness_deterministic(&scheme, &inst.into(), &x)?;
        let got = rep.element(fam.tight_item()).map_or(f64::NAN, |e| e.estimate);
        let want = fam.tight_ratio(eps);
        log.check((got - want).abs() < 1e-12, format!("{fam} with {scheme}: ratio {} vs {}", g17(got), g17(want)));
    }
    let mut mins = [f64::INFINITY; 3];
    let mut violations = 0;
    for t in 0..200u64 {
        let mut s = rng.derive(t);
        let n = 1 + s.below(14) as usize;
        let (small, xs) = random_knapsack(n, 0.0, 0.5, &mut s)?;
        let (general, xg) = random_knapsack(n, 0.0, 1.0, &mut s)?;
        let small: Instance = small.into();
        let general: Instance = general.into();
        mins[0] = mins[0].min(exact_balancedness_deterministic(&SchemeKind::KlpSmall, &small, &xs)?.min_estimate);
        mins[1] = mins[1].min(exact_balancedness_deterministic(&SchemeKind::KlpGen, &general, &xg)?.min_estimate);
        mins[2] = mins[2].min(exact_balancedness_deterministic(&SchemeKind::KlpGen, &small, &xs)?.min_estimate);
        let mode = if n <= 8 { MonotonicityMode::Exhaustive } else { MonotonicityMode::Exact };
        for (scheme, inst, x) in
            [(SchemeKind::KlpSmall, &small, &xs), (SchemeKind::KlpGen, &general, &xg), (SchemeKind::KlpGen, &small, &xs)]
        {
            violations += test_monotonicity(&scheme, inst, x, 300, mode, t)?.len();
        }
    }
    for (m, (bound, label)) in mins.iter().zip([(4.0 / 9.0, "klp-small, small items"), (0.25, "klp-gen"), (1.0 / 3.0, "klp-gen, small items")]) {
        log.check(*m >= bound - 1e-12, format!("{label}: min exact ratio {} >= {}", g17(*m), g17(bound)));
    }
    log.check(violations == 0, format!("pointwise monotonicity violations: {violations}"));
    Ok(())
}

/// Every element's estimate + 3σ reaches the bound.
fn mc_check(
    log: &mut Log,
    label: &str,
    scheme: SchemeKind,
    corpus: &[(Instance, Vec<f64>)],
    n: u64,
    bound: f64,
    seed: &RngStream,
) -> Result<()> {
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for (i, (inst, x)) in corpus.iter().enumerate() {
        let rep = estimate_balancedness(&scheme, inst, x, n, seed.derive(i as u64).index())?;
        for e in &rep.elements {
            ok &= e.estimate + 3.0 * e.stderr >= bound;
        }
        worst = worst.min(rep.min_estimate);
    }
    log.check(ok, format!("{label}: min ratio {} vs bound {} (3 sigma)", g17(worst), g17(bound)));
    Ok(())
}

fn c6(log: &mut Log, rng: &RngStream) -> Result<()> {
    let n_samples = 200_000;
    let mut big = Vec::new();
    let mut general = Vec::new();
    for t in 0..10u64 {
        let mut s = rng.derive(t);
        let n = 2 + s.below(7) as usize;
        let (b, xb) = random_knapsack(n, 0.5, 1.0, &mut s)?;
        big.push((b.into(), xb.to_vec()));
        let (g, xg) = random_knapsack(n + 2, 0.0, 1.0, &mut s)?;
        general.push((g.into(), xg.to_vec()));
    }
    mc_check(log, "klp-big", SchemeKind::KlpBig, &big, n_samples, floor_klp(), &rng.derive(100))?;
    mc_check(log, "klp-combined", SchemeKind::KlpCombined, &general, n_samples, 0.279, &rng.derive(101))?;
    mc_check(log, "klp-bansal", SchemeKind::KlpBansal, &general, n_samples, 0.125, &rng.derive(102))?;
    Ok(())
}

/// Per-edge statistics of one hypergraph instance.
fn hypergraph_pass(log: &mut Log, label: &str, h: &Hypergraph, x: &[f64], n: u64, root: &RngStream) -> Result<()> {
    let m = h.num_edges();
    let point = FractionalPoint::new(x.to_vec())?;
    // cond_y, cond_set, set − y, y, merged y.
    let zero = || (Moments::new(m), Moments::new(m), Moments::new(m), Moments::new(m), Moments::new(m));
    let stats = run_trials(
        n,
        root,
        zero,
        |acc, t, s| {
            let r = point.sample(&mut s.derive(0));
            let fm = hg_crs(h, x, &r, &s.derive(1))?;
            let set = exp_clock_round(h, &fm.profile, &s.derive(2))?;
            let merged = hg_merged(h, x, &s.derive(3))?;
            if !hypergraph_feasible(h, &fm.y, 1.0)? || !hypergraph_feasible(h, &merged.y, 1.0)? || !is_matching(h, &set)? {
                return Err(Error::FeasibilityViolation {
                    scheme: "hg".into(),
                    seed: root.seed(),
                    trial: t,
                    detail: format!("R = {:?}", r.as_slice()),
                });
            }
            for e in 0..m {
                let c = set.contains(e) as u8 as f64;
                if r.contains(e) {
                    acc.0.push(e, fm.y[e]);
                    acc.1.push(e, c);
                }
                acc.2.push(e, c - fm.y[e]);
                acc.3.push(e, fm.y[e]);
                acc.4.push(e, merged.y[e]);
            }
            Ok(())
        },
        |a, b| {
            a.0.merge(b.0);
            a.1.merge(b.1);
            a.2.merge(b.2);
            a.3.merge(b.3);
            a.4.merge(b.4);
        },
    )?;
    let (cond_y, cond_set, diff, composed, merged) = stats;
    let k = h.rank().max(1) as f64;
    let bound = -(-k).exp_m1() / k;
    let mut bal_ok = true;
    let mut clock_ok = true;
    let mut pipe_ok = true;
    let mut worst = f64::INFINITY;
    for e in (0..m).filter(|&e| x[e] > 0.0) {
        for mom in [&cond_y, &cond_set] {
            bal_ok &= mom.mean(e) + 3.0 * mom.stderr(e) >= bound;
            worst = worst.min(mom.mean(e));
        }
        clock_ok &= diff.mean(e).abs() <= 4.0 * diff.stderr(e) + 1e-15;
        let se = composed.stderr(e).hypot(merged.stderr(e));
        pipe_ok &= (composed.mean(e) - merged.mean(e)).abs() <= 4.0 * se + 1e-15;
    }
    log.check(true, format!("{label}: loads <= 1 and matchings valid on all {n} draws"));
    log.check(bal_ok, format!("{label}: min ratio {} vs (1-e^-k)/k = {} (3 sigma)", g17(worst), g17(bound)));
    log.check(clock_ok, format!("{label}: E[matching] = y within 4 sigma"));
    log.check(pipe_ok, format!("{label}: merged and composed means agree within 4 sigma"));
    Ok(())
}

fn c7(log: &mut Log, rng: &RngStream) -> Result<()> {
    let n = 200_000;
    let fano = gen_projective_plane(2)?;
    hypergraph_pass(log, "fano", &fano, &[1.0 / 3.0; 7], n, &rng.derive(0))?;
    for t in 1..=4u64 {
        let mut s = rng.derive(t);
        let (h, x) = random_hypergraph(8, 10, 3, t % 2 == 0, &mut s)?;
        hypergraph_pass(log, &format!("random rank-3 #{t}"), &h, &x, n, &rng.derive(100 + t))?;
    }
    Ok(())
}

fn kcs_corpus(rng: &RngStream) -> Result<Vec<(String, KcsInstance, Vec<f64>)>> {
    let mut out = Vec::new();
    for k in 2..=4u64 {
        let (a, x) = gen_kcs_nat(k, 0.1)?;
        out.push((format!("kcs-nat k={k}"), a, x.to_vec()));
        let (a, x) = gen_kcs_str(k, 0.1)?;
        out.push((format!("kcs-str k={k}"), a, x.to_vec()));
        for t in 0..2u64 {
            let (a, x) = random_kcs(16, 8, k as usize, &mut rng.derive(k * 10 + t))?;
            out.push((format!("random k={k} #{t}"), a, x.to_vec()));
        }
    }
    Ok(out)
}

fn c8(log: &mut Log, rng: &RngStream) -> Result<()> {
    let corpus = kcs_corpus(&rng.derive(0))?;
    let runs_each = 10_000u64.div_ceil(corpus.len() as u64);
    let mut bad_colorings = 0u64;
    let mut runs = 0u64;
    for (i, (_, inst, x)) in corpus.iter().enumerate() {
        let params = default_params(inst.sparsity());
        let point = FractionalPoint::new(x.clone())?;
        let root = rng.derive(1000 + i as u64);
        bad_colorings += run_trials(
            runs_each,
            &root,
            || 0u64,
            |bad, _, s| {
                let r = point.sample(&mut s.derive(0));
                let tr = kcs_crs_trace(inst, x, &r, &params, &s.derive(1))?;
                let g = build_blocking_digraph(inst, &tr.r2)?;
                let colors = degeneracy_color(&g.graph, params.d)?;
                let adj = g.graph.undirected();
                let proper = (0..adj.len()).all(|p| adj[p].iter().all(|&q| colors[p] != colors[q]));
                let within = colors.iter().all(|&c| c < params.colors());
                let independent = (0..adj.len())
                    .filter(|&p| tr.rf.contains(g.items[p]))
                    .all(|p| adj[p].iter().all(|&q| !tr.rf.contains(g.items[q])));
                *bad += (!(proper && within && independent)) as u64;
                Ok(())
            },
            |a, b| *a += b,
        )?;
        runs += runs_each;
    }
    log.check(true, format!("{runs} runs over {} instances, zero feasibility violations", corpus.len()));
    log.check(bad_colorings == 0, format!("improper or oversized colorings: {bad_colorings}"));

    for d in 1..=3 {
        let g = gen_circulant_tournament(d)?;
        let chi = brute_force_chromatic_number(&g.undirected());
        let used = degeneracy_color(&g, d)?.iter().max().map_or(0, |c| c + 1);
        log.check(chi == 2 * d + 1 && used <= 2 * d + 1, format!("circulant d={d}: chromatic number {chi}, greedy uses {used}"));
    }

    let (inst, x) = random_kcs(20, 10, 3, &mut rng.derive(1))?;
    let params = default_params(3);
    let rep = kcs_stage_report(&inst, &x, &params, 200_000, rng.derive(2).index())?;
    let p0 = params.rate(3);
    let pf = 1.0 / params.colors() as f64;
    let within = |hits: u64, trials: u64, p: f64| {
        trials == 0 || {
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            (hits as f64 / trials as f64 - p).abs() <= 4.0 * sd
        }
    };
    let law0 = rep.items.iter().all(|c| within(c.in_r0, c.in_r, p0));
    let lawf = rep.items.iter().all(|c| within(c.in_rf, c.in_r2, pf));
    let pooled = rep.pooled().retention();
    log.check(law0, format!("Pr[R0 | R] = alpha/k = {} per item (pooled {})", g17(p0), g17(pooled[0])));
    log.check(lawf, format!("Pr[RF | R2] = 1/(2d+1) = {} per item (pooled {})", g17(pf), g17(pooled[3])));

    let mut worst = f64::INFINITY;
    let mut ok = true;
    for (i, (_, inst, x)) in corpus.iter().enumerate() {
        let bound = 1.0 / (8.0 * inst.sparsity() as f64);
        let rep = estimate_balancedness(&SchemeKind::KcsBansal, &inst.clone().into(), x, 50_000, rng.derive(3000 + i as u64).index())?;
        for e in &rep.elements {
            ok &= e.estimate + 3.0 * e.stderr >= bound;
            worst = worst.min(e.estimate / bound);
        }
    }
    log.check(ok, format!("kcs-bansal >= 1/(8k) - 3 sigma; worst estimate/bound {}", g17(worst)));

    for k in [16usize, 81, 256] {
        let (inst, x) = random_kcs(400, 400, k, &mut rng.derive(5000 + k as u64))?;
        let params = default_params(k);
        let rep = kcs_stage_report(&inst, &x, &params, 2000, rng.derive(6000 + k as u64).index())?;
        let p = rep.pooled().retention();
        log.note(format!(
            "retention k={k} (alpha {}, ell {}, d {}): R0|R {}, R1|R0 {}, R2|R1 {}, RF|R2 {}",
            g17(params.alpha),
            g17(params.ell),
            params.d,
            g17(p[0]),
            g17(p[1]),
            g17(p[2]),
            g17(p[3])
        ));
    }
    Ok(())
}

fn c9(log: &mut Log, rng: &RngStream) -> Result<()> {
    let eps = 0.01;
    let ip = |inst: &Instance| sigma_opt(inst, &ItemSet::full(inst.ground_size()), &vec![1.0; inst.ground_size()]);
    let value = |x: &[f64]| x.iter().sum::<f64>();

    let (a, x) = gen_kcs_nat(3, eps)?;
    let nat_ok = kcs_feasible(&a, &x, false)?;
    let inst: Instance = a.into();
    let want = (2.0 - eps) * (3.0 - 1.0 + 1.0 / 3.0);
    log.check(
        nat_ok && ip(&inst)? == 1.0 && (value(&x) - want).abs() < 1e-12,
        format!("kcs-nat k=3: IP 1, LP value {} vs {}", g17(value(&x)), g17(want)),
    );
    for k in 1..=3u64 {
        let (a, x) = gen_kcs_str(k, eps)?;
        let feasible = kcs_feasible(&a, &x, true)?;
        let inst: Instance = a.into();
        let want = (1.0 - k as f64 * eps) * (2 * k - 1) as f64;
        log.check(
            feasible && ip(&inst)? == 1.0 && (value(&x) - want).abs() < 1e-12,
            format!("kcs-str k={k}: IP 1, strengthened-LP value {} vs {}", g17(value(&x)), g17(want)),
        );
    }
    for d in 1..=3usize {
        let (a, x) = gen_dknapsack_example(d, eps)?;
        let df = d as f64;
        let want = (df + 1.0 - 3.0 * eps) / (1.0 + (2.0 * df - 3.0) * eps);
        let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..=d).map(|j| a.coefficient(i, j)).collect()).collect();
        let mut lp_rows = rows.clone();
        let mut rhs = vec![1.0; d];
        for j in 0..=d {
            let mut unit = vec![0.0; d + 1];
            unit[j] = 1.0;
            lp_rows.push(unit);
            rhs.push(1.0);
        }
        let lp = solve_max(&vec![1.0; d + 1], &lp_rows, &rhs).map_or(f64::NAN, |s| s.objective);
        let feasible = kcs_feasible(&a, &x, false)?;
        let inst: Instance = a.into();
        log.check(
            feasible && ip(&inst)? == 1.0 && (value(&x) - want).abs() < 1e-12 && (lp - want).abs() < 1e-12,
            format!("d-knapsack d={d}: IP 1, LP optimum {} vs {}", g17(lp), g17(want)),
        );
    }
    for k in 1..=3u64 {
        let n = k as usize + 2;
        let (a, x) = gen_class_k_gap(k, n, eps)?;
        let kf = k as f64;
        let want = (kf + 1.0) / (1.0 + (kf + 1.0) * eps);
        let inst: Instance = a.into();
        let opt = ip(&inst)?;
        let ratio = value(&x) / opt;
        log.check(
            opt == kf && (value(&x) - want).abs() < 1e-12 && (ratio - want / kf).abs() < 1e-12,
            format!("class-{k} example: IP {opt}, LP value {} vs {}", g17(value(&x)), g17(want)),
        );
    }

    let mut worst23 = f64::INFINITY;
    let mut ok23 = true;
    for t in 0..100u64 {
        let mut s = rng.derive(t);
        let n = 1 + s.below(14) as usize;
        let (inst, _) = random_knapsack(n, 0.0, 0.5, &mut s)?;
        let (_, w) = greedy_fractional_knapsack(&inst);
        let set = greedy_integral_two_thirds(&inst)?;
        let got: f64 = set.iter().map(|i| inst.values()[i]).sum();
        let inst_any: Instance = inst.clone().into();
        let opt = sigma_opt(&inst_any, &ItemSet::full(n), inst.values())?;
        ok23 &= inst_any.feasible_set(&set)? && got >= 2.0 / 3.0 * w - 1e-9 && got <= opt + 1e-9 && opt <= w + 1e-9;
        worst23 = worst23.min(got / w);
    }
    log.check(ok23, format!("two-thirds rounding on 100 instances, min value/LP {}", g17(worst23)));

    let mut okk = true;
    let mut worstk: f64 = 0.0;
    for t in 0..100u64 {
        let mut s = rng.derive(1000 + t);
        let k = 1 + t % 3;
        let n = 1 + s.below(14) as usize;
        let (inst, _) = random_class_k(k, n, &mut s)?;
        let (_, w) = greedy_fractional_knapsack(&inst);
        let set = classk_integral_round(&inst)?;
        let got: f64 = set.iter().map(|i| inst.values()[i]).sum();
        let inst_any: Instance = inst.clone().into();
        let opt = sigma_opt(&inst_any, &ItemSet::full(n), inst.values())?;
        let kf = k as f64;
        okk &= inst_any.feasible_set(&set)? && w / got <= (kf + 1.0) / kf + 1e-9 && got <= opt + 1e-9;
        worstk = worstk.max(w / got * kf / (kf + 1.0));
    }
    log.check(okk, format!("class-k rounding on 100 instances, max (LP/value)/((k+1)/k) {}", g17(worstk)));
    Ok(())
}

/// Total variation between an empirical histogram and a pmf.
fn tv_distance(counts: &[u64], total: u64, pmf: impl Fn(u64) -> f64) -> f64 {
    let mut covered = 0.0;
    let mut tv = 0.0;
    for (s, &c) in counts.iter().enumerate() {
        let p = pmf(s as u64);
        covered += p;
        tv += (c as f64 / total as f64 - p).abs();
    }
    (tv + (1.0 - covered).max(0.0)) / 2.0
}

fn pois_pmf(s: u64, lambda: f64) -> f64 {
    let hi = pois_cdf(s, lambda).unwrap_or(f64::NAN);
    let lo = if s == 0 { 0.0 } else { pois_cdf(s - 1, lambda).unwrap_or(f64::NAN) };
    hi - lo
}

fn histogram_push(h: &mut Vec<u64>, v: u64) {
    let v = v as usize;
    if h.len() <= v {
        h.resize(v + 1, 0);
    }
    h[v] += 1;
}

fn histogram_merge(a: &mut Vec<u64>, b: Vec<u64>) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

fn c10(log: &mut Log, rng: &RngStream) -> Result<()> {
    let (xi, eta) = (1.5, 2.5);
    let n = 100_000u64;
    // min, min², first-wins.
    let (sum, sumsq, wins) = run_trials(
        n,
        &rng.derive(0),
        || (0.0, 0.0, 0u64),
        |acc, _, s| {
            let mut s = s.clone();
            let a = exponential(&mut s, xi);
            let b = exponential(&mut s, eta);
            let m = a.min(b);
            acc.0 += m;
            acc.1 += m * m;
            acc.2 += (a < b) as u64;
            Ok(())
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1;
            a.2 += b.2;
        },
    )?;
    let rate = xi + eta;
    let mean = sum / n as f64;
    let var = (sumsq / n as f64 - mean * mean) * n as f64 / (n as f64 - 1.0);
    log.check(
        (mean - 1.0 / rate).abs() <= 4.0 / rate / (n as f64).sqrt(),
        format!("min of Exp({xi}), Exp({eta}): mean {} vs {}", g17(mean), g17(1.0 / rate)),
    );
    log.check(
        (var - 1.0 / rate.powi(2)).abs() <= 4.0 * (8.0 / n as f64).sqrt() / rate.powi(2),
        format!("min variance {} vs {}", g17(var), g17(1.0 / rate.powi(2))),
    );
    let p = xi / rate;
    let freq = wins as f64 / n as f64;
    log.check(
        (freq - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt(),
        format!("Pr[Exp({xi}) < Exp({eta})] = {} vs {}", g17(freq), g17(p)),
    );

    let (a, b) = (1.3, 2.2);
    let big_n = 1_000_000u64;
    let hist = run_trials(
        big_n,
        &rng.derive(1),
        Vec::new,
        |h, _, s| {
            let mut s = s.clone();
            let v = poisson(&mut s, a) + poisson(&mut s, b);
            histogram_push(h, v);
            Ok(())
        },
        histogram_merge,
    )?;
    let tv = tv_distance(&hist, big_n, |s| pois_pmf(s, a + b));
    log.check(tv < 0.01, format!("Pois({a}) + Pois({b}) vs Pois({}): TV {} at N = 10^6", a + b, g17(tv)));

    let (lam, ell) = (2.0, 10_000u64);
    let hist = run_trials(
        n,
        &rng.derive(2),
        Vec::new,
        |h, _, s| {
            let mut s = s.clone();
            let v = (0..ell).filter(|_| bernoulli(&mut s, lam / ell as f64)).count() as u64;
            histogram_push(h, v);
            Ok(())
        },
        histogram_merge,
    )?;
    let tv = tv_distance(&hist, n, |s| pois_pmf(s, lam));
    log.check(tv < 0.01, format!("sum of 10^4 Bernoulli({lam}/10^4) vs Pois({lam}): TV {} at N = 10^5", g17(tv)));

    let fano: Instance = gen_projective_plane(2)?.into();
    let run = |threads: usize| -> Result<_> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        pool.install(|| estimate_balancedness(&SchemeKind::HgCrsSet, &fano, &[1.0 / 3.0; 7], 20_000, rng.index()))
    };
    let one = run(1)?;
    log.check(one == run(3)? && one == run(1)?, "identical estimates across reruns and 1 vs 3 threads");
    Ok(())
}

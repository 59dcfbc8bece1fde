mod parse;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crsbench_core::fmt::g17;
use crsbench_core::gapcalc::{
    check_cg_le_inv_ig, conjecture_scan, estimate_cg, exact_cg, ig_witness_ratio, write_scan_csv,
};
use crsbench_core::harness::{
    kcs_stage_report, run_experiment, test_monotonicity, ContentionScheme, ExperimentConfig,
    MonotonicityMode, Resolution, SchemeKind,
};
use crsbench_core::instances::{
    gen_circulant_tournament, gen_class_k_gap, gen_class_k_uniform, gen_dknapsack_example,
    gen_kcs_nat, gen_kcs_str, gen_knapsack_tight, gen_projective_plane, read_document,
    to_json_string, Document, FractionalPoint, Instance, ItemSet,
};
use crsbench_core::kcspip::{default_params, kcs_crs_trace, KcsParams};
use crsbench_core::randkit::RngStream;
use crsbench_core::selftest::run_all;
use crsbench_core::Error;

const USAGE: u8 = 2;
const ASSERTION: u8 = 3;
const IO: u8 = 4;

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: USAGE, msg: msg.into() }
    }

    fn assertion(msg: impl Into<String>) -> Self {
        Self { code: ASSERTION, msg: msg.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: IO, msg: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => IO,
            Error::FeasibilityViolation { .. } => ASSERTION,
            _ => USAGE,
        };
        Self { code, msg: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

/// Contention resolution schemes, correlation gaps and integrality gaps
/// for packing polytopes.
///
/// Exit status: 0 ok, 2 usage or bad input, 3 failed check, 4 I/O error.
#[derive(Parser)]
#[command(name = "crsbench", version)]
struct Cli {
    /// Root seed. Falls back to CRSBENCH_SEED, then 42.
    #[arg(long, global = true, env = "CRSBENCH_SEED", default_value_t = 42)]
    seed: u64,
    /// Worker threads for trial loops. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated instance as JSON.
    Gen(GenArgs),
    /// Run one scheme on one sampled (or given) set R.
    Crs(CrsArgs),
    /// Estimate per-element balancedness Pr[e kept | e in R].
    Balancedness(BalArgs),
    /// Check Pr[e kept from A] >= Pr[e kept from B] on nested pairs A ⊆ B.
    Monotonicity(MonoArgs),
    /// Correlation gap E[σ_v(R(x))] / Σ v_e x_e.
    Cg(CgArgs),
    /// Integrality-gap witness ratio Σ v_e y_e / σ_v(r).
    Ig(IgArgs),
    /// Tabulate G(k,n,λ) against F(k,λ).
    Scan(ScanArgs),
    /// Per-stage survival counts of the k-CS scheme.
    Stages(StagesArgs),
    /// Run the acceptance criteria.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Fractional point: uniform:<c> or list:[c1,...]. Defaults to the file's x.
    #[arg(long)]
    x: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    /// fano, projective[:p], classk, classk-gap, kcs-nat, kcs-str, dknap,
    /// circulant or knap-tight:{small-4/9,gen-1/4,small-bound-1/3}.
    #[arg(long)]
    family: String,
    /// Plane order for projective.
    #[arg(long)]
    p: Option<u64>,
    /// Class index (classk, classk-gap) or column sparsity (kcs-nat, kcs-str).
    #[arg(long)]
    k: Option<u64>,
    /// Number of items (classk, classk-gap).
    #[arg(long)]
    n: Option<usize>,
    /// Dimension (dknap) or out-degree (circulant).
    #[arg(long)]
    d: Option<usize>,
    /// Perturbation ε.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrsArgs {
    /// identity, hg, hg-set, klp-small, klp-gen, klp-big, klp-combined,
    /// klp-bansal, kcs or kcs-bansal.
    #[arg(long)]
    scheme: SchemeKind,
    #[command(flatten)]
    inst: InstanceArgs,
    /// The set R, e.g. [0,2,5]. Sampled from x when absent.
    #[arg(long, conflicts_with = "sample_r")]
    r: Option<String>,
    /// Sample R from x with the seed (the default).
    #[arg(long)]
    sample_r: bool,
    /// With hg: run the exponential-clock rounding and print a matching.
    #[arg(long)]
    set: bool,
}

#[derive(Args)]
struct BalArgs {
    /// Scheme id, as for crs.
    #[arg(long)]
    scheme: SchemeKind,
    #[command(flatten)]
    inst: InstanceArgs,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Enumerate R instead of sampling (deterministic schemes, support <= 16).
    #[arg(long)]
    exact: bool,
    /// Pass if estimate + sigma·stderr >= bound.
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// Bound to test; the scheme's guarantee when absent.
    #[arg(long)]
    bound: Option<f64>,
    /// Instance label in the output; the file stem when absent.
    #[arg(long)]
    id: Option<String>,
    /// CSV path; a JSON summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonoArgs {
    /// Scheme id, as for crs.
    #[arg(long)]
    scheme: SchemeKind,
    #[command(flatten)]
    inst: InstanceArgs,
    /// Random nested pairs to test.
    #[arg(long, default_value_t = 20)]
    chains: u64,
    /// Coupled trials per pair for randomized schemes.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Pointwise comparison (deterministic schemes).
    #[arg(long, conflicts_with = "exhaustive")]
    exact: bool,
    /// Every pair A ⊆ B ⊆ supp(x) (deterministic schemes, support <= 10).
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args)]
struct CgArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Values: uniform:<c> or list:[...]. Defaults to the file's values.
    #[arg(long)]
    v: Option<String>,
    /// Enumerate the support (at most 20 items).
    #[arg(long)]
    exact: bool,
    /// Monte Carlo trials when not exact.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Args)]
struct IgArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Witness point y; defaults to x.
    #[arg(long)]
    y: Option<String>,
    /// Witness set r, e.g. [0,1,2]; defaults to supp(y).
    #[arg(long)]
    r: Option<String>,
    /// Also check CG(x) <= 1/ratio by enumeration.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ScanArgs {
    /// Only klp-simp is available.
    #[arg(long, default_value = "klp-simp")]
    conjecture: String,
    /// k values: 3, 1..20 or 1,2,5.
    #[arg(long, default_value = "1..20")]
    k: String,
    /// n values, same syntax. Cells with n <= k are skipped.
    #[arg(long, default_value = "50,100,1000,10000")]
    n: String,
    /// Grid λ = (i/grid)(k+1), i = 1..grid.
    #[arg(long, default_value_t = 100)]
    grid: u32,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StagesArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Trials.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Override the sampling constant α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the tiny-item threshold ℓ.
    #[arg(long)]
    ell: Option<f64>,
    /// Override the out-degree cap d.
    #[arg(long)]
    d: Option<usize>,
    /// Instance label; the file stem when absent.
    #[arg(long)]
    id: Option<String>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Criteria to run, e.g. 1,3,5 or 2..4. All when absent.
    #[arg(long)]
    only: Option<String>,
    /// Print every check, not only failing criteria.
    #[arg(long)]
    verbose: bool,
}

fn load(args: &InstanceArgs) -> Result<(Instance, FractionalPoint), Failure> {
    let (inst, file_x) = match read_document(&args.instance)? {
        Document::Instance { instance, x } => (instance, x),
        Document::Digraph(_) => return Err(Failure::usage("expected a packing instance, found a digraph")),
    };
    let x = match (&args.x, file_x) {
        (Some(s), _) => FractionalPoint::new(parse::vector(s, inst.ground_size()).map_err(Failure::usage)?)?,
        (None, Some(x)) => x,
        (None, None) => return Err(Failure::usage("no --x given and the instance file has no x")),
    };
    Ok((inst, x))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn json_nums(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|&c| g17(c)).collect::<Vec<_>>().join(","))
}

fn json_set(s: &ItemSet) -> String {
    format!("[{}]", s.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            let mut so = io::stdout().lock();
            so.write_all(text.as_bytes()).and_then(|_| so.flush()).map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Outcome {
    let need = |v: Option<u64>, flag: &str| v.ok_or_else(|| Failure::usage(format!("--family {} needs --{flag}", a.family)));
    let need_us = |v: Option<usize>, flag: &str| v.ok_or_else(|| Failure::usage(format!("--family {} needs --{flag}", a.family)));
    let (family, arg) = match a.family.split_once(':') {
        Some((f, rest)) => (f, Some(rest)),
        None => (a.family.as_str(), None),
    };
    let doc = match family {
        "fano" | "projective" => {
            let p = match (family, arg) {
                ("fano", _) => 2,
                (_, Some(s)) => s.parse().map_err(|_| Failure::usage(format!("bad plane order `{s}`")))?,
                (_, None) => need(a.p, "p")?,
            };
            let h = gen_projective_plane(p)?;
            let x = FractionalPoint::uniform(h.num_edges(), 1.0 / (p + 1) as f64)?;
            Document::instance(h.into(), Some(x))
        }
        "classk" | "classk-gap" => {
            let (k, n) = (need(a.k, "k")?, need_us(a.n, "n")?);
            let (inst, x) = if family == "classk" { gen_class_k_uniform(k, n, a.eps)? } else { gen_class_k_gap(k, n, a.eps)? };
            Document::instance(inst.into(), Some(x))
        }
        "kcs-nat" | "kcs-str" => {
            let k = need(a.k, "k")?;
            let (inst, x) = if family == "kcs-nat" { gen_kcs_nat(k, a.eps)? } else { gen_kcs_str(k, a.eps)? };
            Document::instance(inst.into(), Some(x))
        }
        "dknap" => {
            let (inst, x) = gen_dknapsack_example(need_us(a.d, "d")?, a.eps)?;
            Document::instance(inst.into(), Some(x))
        }
        "circulant" => Document::Digraph(gen_circulant_tournament(need_us(a.d, "d")?)?),
        "knap-tight" => {
            let which = arg.ok_or_else(|| Failure::usage("knap-tight needs a variant, e.g. knap-tight:gen-1/4"))?;
            let (inst, x) = gen_knapsack_tight(which.parse()?, a.eps)?;
            Document::instance(inst.into(), Some(x))
        }
        other => return Err(Failure::usage(format!("unknown family `{other}`"))),
    };
    emit(&a.out, &(to_json_string(&doc) + "\n"))
}

fn cmd_crs(a: &CrsArgs, seed: u64) -> Outcome {
    let (inst, x) = load(&a.inst)?;
    let root = RngStream::root(seed);
    let r = match &a.r {
        Some(s) => {
            let r = ItemSet::from_indices(parse::index_list(s).map_err(Failure::usage)?);
            r.validate(inst.ground_size())?;
            r
        }
        None => x.sample(&mut root.derive(0)),
    };
    let scheme = match (a.set, a.scheme) {
        (false, s) => s,
        (true, SchemeKind::HgCrs | SchemeKind::HgCrsSet) => SchemeKind::HgCrsSet,
        (true, s) => return Err(Failure::usage(format!("--set only applies to hg, not {s}"))),
    };
    scheme.check_compatible(&inst)?;
    let rng = root.derive(1);
    let mut text = format!("R = {}\n", json_set(&r));
    let out = match (&scheme, &inst) {
        (SchemeKind::KcsCrs, Instance::Kcs(k)) => {
            let params = default_params(k.sparsity());
            let t = kcs_crs_trace(k, &x, &r, &params, &rng)?;
            text += &format!(
                "stages: R={} R0={} R1={} R2={} RF={} (colors {}, chosen {})\n",
                r.len(),
                t.r0.len(),
                t.r1.len(),
                t.r2.len(),
                t.rf.len(),
                t.colors_used,
                t.chosen_color
            );
            Resolution::Set(t.rf)
        }
        _ => scheme.apply(&inst, &x, &r, &rng)?,
    };
    let (feasible, inside) = match &out {
        Resolution::Fractional(y) => {
            text += &format!("{{\"scheme\":\"{}\",\"y\":{}}}\n", scheme.id(), json_nums(y));
            (inst.feasible_point(y)?, (0..y.len()).all(|e| y[e] == 0.0 || r.contains(e)))
        }
        Resolution::Set(s) => {
            text += &format!("{{\"scheme\":\"{}\",\"S\":{}}}\n", scheme.id(), json_set(s));
            (inst.feasible_set(s)?, s.is_subset(&r))
        }
    };
    text += &format!("feasible: {}\n", feasible && inside);
    emit(&None, &text)?;
    if feasible && inside {
        Ok(())
    } else {
        Err(Failure::assertion("output is infeasible or leaves R"))
    }
}

fn cmd_balancedness(a: &BalArgs, seed: u64) -> Outcome {
    let (inst, x) = load(&a.inst)?;
    let cfg = ExperimentConfig {
        scheme: a.scheme.id().into(),
        instance_id: a.id.clone().unwrap_or_else(|| stem(&a.inst.instance)),
        instance: inst,
        x: x.into_vec(),
        n_samples: a.samples,
        seed,
        exact: a.exact,
        sigma_mult: a.sigma,
        bound: a.bound,
        out: a.out.clone(),
    };
    let summary = run_experiment(&cfg, a.scheme)?;
    if a.out.is_none() {
        let mut buf = Vec::new();
        summary.write_csv(&mut buf)?;
        emit(&None, &String::from_utf8_lossy(&buf))?;
    }
    emit(
        &None,
        &format!(
            "min_estimate {} min_lower_3sigma {} all_pass {}\n",
            g17(summary.min_estimate),
            g17(summary.min_lower_3sigma),
            summary.all_pass
        ),
    )?;
    if summary.all_pass {
        Ok(())
    } else {
        Err(Failure::assertion("some element is below the bound"))
    }
}

fn cmd_monotonicity(a: &MonoArgs, seed: u64) -> Outcome {
    let (inst, x) = load(&a.inst)?;
    let mode = if a.exhaustive {
        MonotonicityMode::Exhaustive
    } else if a.exact {
        MonotonicityMode::Exact
    } else {
        MonotonicityMode::Sampled(a.samples)
    };
    a.scheme.check_compatible(&inst)?;
    let v = test_monotonicity(&a.scheme, &inst, &x, a.chains, mode, seed)?;
    let mut text = String::new();
    for w in &v {
        text += &format!(
            "violation element {} A={} B={} value_A {} value_B {} slack {}\n",
            w.element,
            json_set(&w.a),
            json_set(&w.b),
            g17(w.value_a),
            g17(w.value_b),
            g17(w.slack)
        );
    }
    text += &format!("violations: {}\n", v.len());
    emit(&None, &text)?;
    if v.is_empty() {
        Ok(())
    } else {
        Err(Failure::assertion(format!("{} monotonicity violations", v.len())))
    }
}

fn cmd_cg(a: &CgArgs, seed: u64) -> Outcome {
    let (inst, x) = load(&a.inst)?;
    let v = match &a.v {
        Some(s) => parse::vector(s, inst.ground_size()).map_err(Failure::usage)?,
        None => inst.values(),
    };
    let text = if a.exact {
        let r = exact_cg(&inst, &v, &x)?;
        format!("cg {}\nnumerator {}\ndenominator {}\n", g17(r.cg_value), g17(r.numerator), g17(r.denominator))
    } else {
        let (m, se) = estimate_cg(&inst, &v, &x, a.samples, seed)?;
        format!("cg {}\nstderr {}\nsamples {}\n", g17(m), g17(se), a.samples)
    };
    emit(&None, &text)
}

fn cmd_ig(a: &IgArgs) -> Outcome {
    let (inst, x) = load(&a.inst)?;
    let n = inst.ground_size();
    let y = match &a.y {
        Some(s) => parse::vector(s, n).map_err(Failure::usage)?,
        None => x.coords().to_vec(),
    };
    let r = match &a.r {
        Some(s) => ItemSet::from_indices(parse::index_list(s).map_err(Failure::usage)?),
        None => (0..n).filter(|&e| y[e] > 0.0).collect(),
    };
    let v = inst.values();
    let w = ig_witness_ratio(&inst, &v, &y, &r)?;
    let mut text = format!("numerator {}\nsigma {}\nratio {}\n", g17(w.numerator), g17(w.sigma), g17(w.ratio));
    let mut ok = true;
    if a.check {
        let cg = exact_cg(&inst, &v, &x)?.cg_value;
        ok = check_cg_le_inv_ig(&inst, &v, &x, &w)?;
        text += &format!("cg {} <= 1/ratio {}: {ok}\n", g17(cg), g17(1.0 / w.ratio));
    }
    emit(&None, &text)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::assertion("CG exceeds 1/ratio"))
    }
}

fn cmd_scan(a: &ScanArgs) -> Outcome {
    if a.conjecture != "klp-simp" {
        return Err(Failure::usage(format!("unknown conjecture `{}` (only klp-simp)", a.conjecture)));
    }
    if a.grid == 0 {
        return Err(Failure::usage("--grid must be positive"));
    }
    let ks = parse::int_range(&a.k).map_err(Failure::usage)?;
    let ns = parse::int_range(&a.n).map_err(Failure::usage)?;
    let fracs: Vec<f64> = (1..=a.grid).map(|i| f64::from(i) / f64::from(a.grid)).collect();
    let rep = conjecture_scan(&ks, &ns, &fracs)?;
    let mut buf = Vec::new();
    write_scan_csv(&rep.rows, &mut buf)?;
    emit(&a.out, &String::from_utf8_lossy(&buf))?;
    for f in &rep.failures {
        eprintln!("scan: {f}");
    }
    if rep.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::assertion(format!("{} proven-region checks failed", rep.failures.len())))
    }
}

fn cmd_stages(a: &StagesArgs, seed: u64) -> Outcome {
    let (inst, x) = load(&a.inst)?;
    let Instance::Kcs(k) = &inst else {
        return Err(Failure::usage(format!("stages needs a kcspip instance, got {}", inst.kind())));
    };
    let base = default_params(k.sparsity());
    let params = KcsParams::new(a.alpha.unwrap_or(base.alpha), a.ell.unwrap_or(base.ell), a.d.unwrap_or(base.d))?;
    let rep = kcs_stage_report(k, &x, &params, a.samples, seed)?;
    let mut buf = Vec::new();
    rep.write_csv(&a.id.clone().unwrap_or_else(|| stem(&a.inst.instance)), &mut buf)?;
    emit(&a.out, &String::from_utf8_lossy(&buf))?;
    let p = rep.pooled().retention();
    eprintln!(
        "pooled retention: R0|R {} R1|R0 {} R2|R1 {} RF|R2 {}",
        g17(p[0]),
        g17(p[1]),
        g17(p[2]),
        g17(p[3])
    );
    Ok(())
}

fn cmd_selftest(a: &SelftestArgs, seed: u64, threads: Option<usize>) -> Outcome {
    let only: Vec<u8> = match &a.only {
        Some(s) => parse::int_range(s)
            .map_err(Failure::usage)?
            .into_iter()
            .map(|i| u8::try_from(i).map_err(|_| Failure::usage(format!("no criterion {i}"))))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    let results = run_all(seed, threads, &only)?;
    let mut text = String::new();
    for r in &results {
        text += &r.verdict_line();
        text.push('\n');
        if a.verbose || !r.pass {
            for l in &r.lines {
                text += &format!("    {l}\n");
            }
        }
        eprintln!("criterion {:>2}: {:.1}s", r.id, r.elapsed.as_secs_f64());
    }
    let passed = results.iter().filter(|r| r.pass).count();
    text += &format!("selftest: {passed}/{} criteria passed (seed {seed})\n", results.len());
    emit(&None, &text)?;
    if passed == results.len() {
        Ok(())
    } else {
        Err(Failure::assertion("selftest failed"))
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::usage(e.to_string()))?;
    }
    match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Crs(a) => cmd_crs(a, cli.seed),
        Cmd::Balancedness(a) => cmd_balancedness(a, cli.seed),
        Cmd::Monotonicity(a) => cmd_monotonicity(a, cli.seed),
        Cmd::Cg(a) => cmd_cg(a, cli.seed),
        Cmd::Ig(a) => cmd_ig(a),
        Cmd::Scan(a) => cmd_scan(a),
        Cmd::Stages(a) => cmd_stages(a, cli.seed),
        Cmd::Selftest(a) => cmd_selftest(a, cli.seed, cli.threads),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

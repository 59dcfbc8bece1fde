//! Balancedness estimation, exact enumeration for deterministic schemes,
//! monotonicity checks and experiment output.
//!
//! Trial t always draws from `root.derive(t)`: R(x) from `.derive(0)` and
//! the scheme from `.derive(1)`. Trials run in fixed-size chunks whose
//! partial sums are merged in chunk order, so results do not depend on the
//! number of threads.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, precondition, Error, Result};
use crate::fmt::g17;
use crate::hypergraph::{hg_crs, hg_crs_set};
use crate::instances::{check_len, compensated_sum, FractionalPoint, Instance, ItemSet, KcsInstance};
use crate::kcspip::{default_params, kcs_bansal_crs, kcs_crs, kcs_crs_trace, KcsParams};
use crate::knapsack::{
    combined_bound, klp_bansal_crs, klp_big_crs, klp_combined_crs, klp_gen_crs, klp_small_crs,
};
use crate::randkit::RngStream;

/// Trials per work unit.
pub const TRIAL_CHUNK: u64 = 1024;
/// Largest support for exact enumeration of a deterministic scheme.
pub const EXACT_MAX_SUPPORT: usize = 16;
/// Largest support for exhaustive monotonicity checks (3^n pairs).
pub const EXHAUSTIVE_MAX_SUPPORT: usize = 10;

/// Output of a scheme: a fractional point or a set.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Fractional(Vec<f64>),
    Set(ItemSet),
}

impl Resolution {
    pub fn value_at(&self, e: usize) -> f64 {
        match self {
            Resolution::Fractional(y) => y[e],
            Resolution::Set(s) => s.contains(e) as u8 as f64,
        }
    }
}

pub trait ContentionScheme: Sync {
    fn name(&self) -> String;
    fn deterministic(&self) -> bool;
    fn apply(&self, inst: &Instance, x: &[f64], r: &ItemSet, rng: &RngStream) -> Result<Resolution>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Returns R itself.
    Identity,
    HgCrs,
    HgCrsSet,
    KlpSmall,
    KlpGen,
    KlpBig,
    KlpCombined,
    KlpBansal,
    KcsCrs,
    KcsBansal,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 10] = [
        SchemeKind::Identity,
        SchemeKind::HgCrs,
        SchemeKind::HgCrsSet,
        SchemeKind::KlpSmall,
        SchemeKind::KlpGen,
        SchemeKind::KlpBig,
        SchemeKind::KlpCombined,
        SchemeKind::KlpBansal,
        SchemeKind::KcsCrs,
        SchemeKind::KcsBansal,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SchemeKind::Identity => "identity",
            SchemeKind::HgCrs => "hg",
            SchemeKind::HgCrsSet => "hg-set",
            SchemeKind::KlpSmall => "klp-small",
            SchemeKind::KlpGen => "klp-gen",
            SchemeKind::KlpBig => "klp-big",
            SchemeKind::KlpCombined => "klp-combined",
            SchemeKind::KlpBansal => "klp-bansal",
            SchemeKind::KcsCrs => "kcs",
            SchemeKind::KcsBansal => "kcs-bansal",
        }
    }

    fn incompatible(self, inst: &Instance) -> Error {
        Error::Incompatible { scheme: self.id().into(), instance: inst.kind().into() }
    }

    /// Type and precondition check.
    pub fn check_compatible(self, inst: &Instance) -> Result<()> {
        use SchemeKind::*;
        match (self, inst) {
            (Identity, _) => Ok(()),
            (HgCrs | HgCrsSet, Instance::Hypergraph(_)) => Ok(()),
            (KlpSmall, Instance::Knapsack(k)) if !k.all_small() => {
                Err(precondition("klp-small needs every a_i <= 1/2"))
            }
            (KlpBig, Instance::Knapsack(k)) if k.sizes().iter().any(|&a| a <= 0.5) => {
                Err(precondition("klp-big needs every a_i > 1/2"))
            }
            (KlpSmall | KlpGen | KlpBig | KlpCombined | KlpBansal, Instance::Knapsack(_)) => Ok(()),
            (KcsCrs | KcsBansal, Instance::Kcs(_)) => Ok(()),
            _ => Err(self.incompatible(inst)),
        }
    }

    /// Proven balancedness for the instance, if the scheme has a finite one.
    pub fn nominal_bound(self, inst: &Instance) -> Option<f64> {
        use SchemeKind::*;
        match (self, inst) {
            (Identity, _) => Some(1.0),
            (HgCrs | HgCrsSet, Instance::Hypergraph(h)) => {
                let k = h.rank().max(1) as f64;
                Some(-(-k).exp_m1() / k)
            }
            (KlpSmall, _) => Some(4.0 / 9.0),
            (KlpGen, _) => Some(0.25),
            (KlpBig, _) => Some(-(-2.0f64).exp_m1() / 2.0),
            (KlpCombined, _) => Some(combined_bound()),
            (KlpBansal, _) => Some(0.125),
            (KcsBansal, Instance::Kcs(k)) => Some(1.0 / (8.0 * k.sparsity() as f64)),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| invalid(format!("unknown scheme `{s}`")))
    }
}

impl ContentionScheme for SchemeKind {
    fn name(&self) -> String {
        self.id().to_string()
    }

    fn deterministic(&self) -> bool {
        matches!(self, SchemeKind::Identity | SchemeKind::KlpSmall | SchemeKind::KlpGen)
    }

    fn apply(&self, inst: &Instance, x: &[f64], r: &ItemSet, rng: &RngStream) -> Result<Resolution> {
        use Resolution::{Fractional, Set};
        use SchemeKind::*;
        self.check_compatible(inst)?;
        Ok(match (self, inst) {
            (Identity, _) => Set(r.clone()),
            (HgCrs, Instance::Hypergraph(h)) => Fractional(hg_crs(h, x, r, rng)?.y),
            (HgCrsSet, Instance::Hypergraph(h)) => Set(hg_crs_set(h, x, r, rng)?),
            (KlpSmall, Instance::Knapsack(k)) => Fractional(klp_small_crs(k, x, r)?),
            (KlpGen, Instance::Knapsack(k)) => Fractional(klp_gen_crs(k, x, r)?),
            (KlpBig, Instance::Knapsack(k)) => Fractional(klp_big_crs(k, x, r, rng)?),
            (KlpCombined, Instance::Knapsack(k)) => Fractional(klp_combined_crs(k, x, r, rng)?),
            (KlpBansal, Instance::Knapsack(k)) => Set(klp_bansal_crs(k, x, r, rng)?),
            (KcsCrs, Instance::Kcs(k)) => Set(kcs_crs(k, x, r, &default_params(k.sparsity()), rng)?),
            (KcsBansal, Instance::Kcs(k)) => Set(kcs_bansal_crs(k, x, r, rng)?),
            _ => return Err(self.incompatible(inst)),
        })
    }
}

/// Runs `n` trials in parallel chunks and merges chunk results in order.
pub fn run_trials<A, Z, F, M>(n: u64, root: &RngStream, zero: Z, step: F, merge: M) -> Result<A>
where
    A: Send,
    Z: Fn() -> A + Sync,
    F: Fn(&mut A, u64, &RngStream) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    let parts: Vec<Result<A>> = (0..n.div_ceil(TRIAL_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = zero();
            for t in c * TRIAL_CHUNK..((c + 1) * TRIAL_CHUNK).min(n) {
                step(&mut acc, t, &root.derive(t))?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = zero();
    for p in parts {
        merge(&mut total, p?);
    }
    Ok(total)
}

/// Per-element count, sum and sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub count: Vec<u64>,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
}

impl Moments {
    pub fn new(n: usize) -> Self {
        Self { count: vec![0; n], sum: vec![0.0; n], sumsq: vec![0.0; n] }
    }

    pub fn push(&mut self, e: usize, value: f64) {
        self.count[e] += 1;
        self.sum[e] += value;
        self.sumsq[e] += value * value;
    }

    pub fn merge(&mut self, other: Moments) {
        for e in 0..self.count.len() {
            self.count[e] += other.count[e];
            self.sum[e] += other.sum[e];
            self.sumsq[e] += other.sumsq[e];
        }
    }

    pub fn mean(&self, e: usize) -> f64 {
        self.sum[e] / self.count[e] as f64
    }

    /// Standard error of the mean from the sample variance.
    pub fn stderr(&self, e: usize) -> f64 {
        let n = self.count[e] as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let mean = self.mean(e);
        let var = ((self.sumsq[e] / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementEstimate {
    pub element: usize,
    pub x: f64,
    /// Trials in which the element was in R.
    pub n_present: u64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalancednessReport {
    pub scheme: String,
    pub n_samples: u64,
    pub elements: Vec<ElementEstimate>,
    pub min_estimate: f64,
    pub min_lower_3sigma: f64,
}

impl BalancednessReport {
    fn from_elements(scheme: String, n_samples: u64, elements: Vec<ElementEstimate>) -> Self {
        let usable = || elements.iter().filter(|e| e.estimate.is_finite());
        let min_estimate = usable().map(|e| e.estimate).fold(f64::INFINITY, f64::min);
        let min_lower_3sigma = usable()
            .map(|e| e.estimate - 3.0 * if e.stderr.is_finite() { e.stderr } else { 0.0 })
            .fold(f64::INFINITY, f64::min);
        Self { scheme, n_samples, elements, min_estimate, min_lower_3sigma }
    }

    pub fn element(&self, e: usize) -> Option<&ElementEstimate> {
        self.elements.iter().find(|r| r.element == e)
    }
}

fn audit(
    scheme: &dyn ContentionScheme,
    inst: &Instance,
    r: &ItemSet,
    out: &Resolution,
    rng: &RngStream,
) -> Result<()> {
    let fail = |detail: String| {
        Err(Error::FeasibilityViolation { scheme: scheme.name(), seed: rng.seed(), trial: rng.index(), detail })
    };
    match out {
        Resolution::Set(s) => {
            if !s.is_subset(r) {
                return fail(format!("output {:?} not inside R = {:?}", s.as_slice(), r.as_slice()));
            }
            if !inst.feasible_set(s)? {
                return fail(format!("infeasible output {:?} from R = {:?}", s.as_slice(), r.as_slice()));
            }
        }
        Resolution::Fractional(y) => {
            check_len(y.len(), inst.ground_size())?;
            if let Some(e) = (0..y.len()).find(|&e| y[e] != 0.0 && !r.contains(e)) {
                return fail(format!("y_{e} = {} outside R = {:?}", g17(y[e]), r.as_slice()));
            }
            if !inst.feasible_point(y)? {
                return fail(format!("infeasible output {y:?} from R = {:?}", r.as_slice()));
            }
        }
    }
    Ok(())
}

fn check_input(inst: &Instance, x: &[f64]) -> Result<()> {
    check_len(x.len(), inst.ground_size())?;
    if !inst.feasible_point(x)? {
        return Err(precondition(format!("x is not in the polytope of the {} instance", inst.kind())));
    }
    Ok(())
}

/// Runs the scheme on R with its feasibility audited.
pub fn apply_audited(
    scheme: &dyn ContentionScheme,
    inst: &Instance,
    x: &[f64],
    r: &ItemSet,
    rng: &RngStream,
) -> Result<Resolution> {
    let out = scheme.apply(inst, x, r, rng)?;
    audit(scheme, inst, r, &out, rng)?;
    Ok(out)
}

/// Monte Carlo estimate of E[y_e | e ∈ R(x)] for every e in supp(x),
/// conditioning by rejection.
pub fn estimate_balancedness(
    scheme: &dyn ContentionScheme,
    inst: &Instance,
    x: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<BalancednessReport> {
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    check_input(inst, x)?;
    let point = FractionalPoint::new(x.to_vec())?;
    let n = inst.ground_size();
    let root = RngStream::root(seed);
    let m = run_trials(
        n_samples,
        &root,
        || Moments::new(n),
        |acc, _, s| {
            let r = point.sample(&mut s.derive(0));
            let out = apply_audited(scheme, inst, x, &r, &s.derive(1))?;
            for e in r.iter() {
                acc.push(e, out.value_at(e));
            }
            Ok(())
        },
        Moments::merge,
    )?;
    let elements = (0..n)
        .filter(|&e| x[e] > 0.0)
        .map(|e| {
            let present = m.count[e] > 0;
            ElementEstimate {
                element: e,
                x: x[e],
                n_present: m.count[e],
                estimate: if present { m.mean(e) } else { f64::NAN },
                stderr: m.stderr(e),
            }
        })
        .collect();
    Ok(BalancednessReport::from_elements(scheme.name(), n_samples, elements))
}

/// Subsets of `support` with their probabilities under R(x).
fn enumerate_patterns<'a>(support: &'a [usize], x: &'a [f64]) -> impl Iterator<Item = (ItemSet, f64)> + 'a {
    (0u64..1 << support.len()).map(move |mask| {
        let mut p = 1.0;
        let mut set = Vec::new();
        for (q, &e) in support.iter().enumerate() {
            if mask >> q & 1 == 1 {
                p *= x[e];
                set.push(e);
            } else {
                p *= 1.0 - x[e];
            }
        }
        (ItemSet::from_indices(set), p)
    })
}

/// Exact E[y_e 1{e∈R}]/x_e by enumerating every R ⊆ supp(x).
pub fn exact_balancedness_deterministic(
    scheme: &dyn ContentionScheme,
    inst: &Instance,
    x: &[f64],
) -> Result<BalancednessReport> {
    if !scheme.deterministic() {
        return Err(precondition(format!("scheme `{}` is randomized", scheme.name())));
    }
    check_input(inst, x)?;
    let support: Vec<usize> = (0..x.len()).filter(|&e| x[e] > 0.0).collect();
    if support.len() > EXACT_MAX_SUPPORT {
        return Err(Error::ScaleCap { size: support.len(), limit: EXACT_MAX_SUPPORT });
    }
    let rng = RngStream::root(0);
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); x.len()];
    for (r, p) in enumerate_patterns(&support, x) {
        let out = apply_audited(scheme, inst, x, &r, &rng)?;
        for e in r.iter() {
            terms[e].push(p * out.value_at(e));
        }
    }
    let elements = support
        .iter()
        .map(|&e| ElementEstimate {
            element: e,
            x: x[e],
            n_present: terms[e].len() as u64,
            estimate: compensated_sum(terms[e].iter().copied()) / x[e],
            stderr: 0.0,
        })
        .collect();
    Ok(BalancednessReport::from_elements(scheme.name(), 1 << support.len(), elements))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotonicityMode {
    /// Pointwise comparison on sampled chains; deterministic schemes only.
    Exact,
    /// Every pair A ⊆ B ⊆ supp(x); deterministic schemes only.
    Exhaustive,
    /// Coupled Monte Carlo with this many trials per chain.
    Sampled(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub element: usize,
    pub a: ItemSet,
    pub b: ItemSet,
    pub value_a: f64,
    pub value_b: f64,
    /// Allowed slack (0 in exact modes, 3σ of the paired difference otherwise).
    pub slack: f64,
}

fn random_chain(support: &[usize], rng: &mut RngStream) -> (ItemSet, ItemSet) {
    let mut b: Vec<usize> = support.iter().copied().filter(|_| rng.uniform() < 0.5).collect();
    if b.is_empty() {
        b.push(support[rng.below(support.len() as u64) as usize]);
    }
    let mut a: Vec<usize> = b.iter().copied().filter(|_| rng.uniform() < 0.5).collect();
    if a.is_empty() {
        a.push(b[rng.below(b.len() as u64) as usize]);
    }
    (ItemSet::from_indices(a), ItemSet::from_indices(b))
}

fn pointwise(
    scheme: &dyn ContentionScheme,
    inst: &Instance,
    x: &[f64],
    a: &ItemSet,
    b: &ItemSet,
    rng: &RngStream,
    out: &mut Vec<Violation>,
) -> Result<()> {
    let ya = apply_audited(scheme, inst, x, a, rng)?;
    let yb = apply_audited(scheme, inst, x, b, rng)?;
    for e in a.iter() {
        let (va, vb) = (ya.value_at(e), yb.value_at(e));
        if va < vb - 1e-12 {
            out.push(Violation { element: e, a: a.clone(), b: b.clone(), value_a: va, value_b: vb, slack: 0.0 });
        }
    }
    Ok(())
}

/// Checks Pr[e ∈ π(A)] ≥ Pr[e ∈ π(B)] for e ∈ A ⊆ B. Empty list = pass.
pub fn test_monotonicity(
    scheme: &dyn ContentionScheme,
    inst: &Instance,
    x: &[f64],
    chain_count: u64,
    mode: MonotonicityMode,
    seed: u64,
) -> Result<Vec<Violation>> {
    check_input(inst, x)?;
    let support: Vec<usize> = (0..x.len()).filter(|&e| x[e] > 0.0).collect();
    let mut violations = Vec::new();
    if support.is_empty() {
        return Ok(violations);
    }
    if matches!(mode, MonotonicityMode::Exact | MonotonicityMode::Exhaustive) && !scheme.deterministic() {
        return Err(precondition(format!("exact monotonicity needs a deterministic scheme, not `{}`", scheme.name())));
    }
    let root = RngStream::root(seed);
    match mode {
        MonotonicityMode::Exhaustive => {
            if support.len() > EXHAUSTIVE_MAX_SUPPORT {
                return Err(Error::ScaleCap { size: support.len(), limit: EXHAUSTIVE_MAX_SUPPORT });
            }
            let full = (1u64 << support.len()) - 1;
            let pick = |mask: u64| -> ItemSet {
                support.iter().enumerate().filter(|(q, _)| mask >> q & 1 == 1).map(|(_, &e)| e).collect()
            };
            for bm in 1..=full {
                let b = pick(bm);
                let mut am = bm;
                while am > 0 {
                    pointwise(scheme, inst, x, &pick(am), &b, &root, &mut violations)?;
                    am = (am - 1) & bm;
                }
            }
        }
        MonotonicityMode::Exact => {
            for c in 0..chain_count {
                let (a, b) = random_chain(&support, &mut root.derive(c).derive(0));
                pointwise(scheme, inst, x, &a, &b, &root.derive(c).derive(1), &mut violations)?;
            }
        }
        MonotonicityMode::Sampled(n) => {
            if n < 2 {
                return Err(invalid("sampled monotonicity needs at least two trials"));
            }
            for c in 0..chain_count {
                let chain = root.derive(c);
                let (a, b) = random_chain(&support, &mut chain.derive(0));
                let len = x.len();
                // Per element: differences y_e(A) − y_e(B), and the A and B means.
                let (diff, ma, mb) = run_trials(
                    n,
                    &chain.derive(1),
                    || (Moments::new(len), Moments::new(len), Moments::new(len)),
                    |acc, _, s| {
                        let ya = apply_audited(scheme, inst, x, &a, s)?;
                        let yb = apply_audited(scheme, inst, x, &b, s)?;
                        for e in a.iter() {
                            let (va, vb) = (ya.value_at(e), yb.value_at(e));
                            acc.0.push(e, va - vb);
                            acc.1.push(e, va);
                            acc.2.push(e, vb);
                        }
                        Ok(())
                    },
                    |acc, p| {
                        acc.0.merge(p.0);
                        acc.1.merge(p.1);
                        acc.2.merge(p.2);
                    },
                )?;
                for e in a.iter() {
                    let slack = 3.0 * diff.stderr(e);
                    if diff.mean(e) < -slack - 1e-12 {
                        violations.push(Violation {
                            element: e,
                            a: a.clone(),
                            b: b.clone(),
                            value_a: ma.mean(e),
                            value_b: mb.mean(e),
                            slack,
                        });
                    }
                }
            }
        }
    }
    Ok(violations)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scheme: String,
    pub instance_id: String,
    #[serde(skip)]
    pub instance: Instance,
    pub x: Vec<f64>,
    pub n_samples: u64,
    pub seed: u64,
    /// Enumerate instead of sampling (deterministic schemes).
    pub exact: bool,
    /// Multiplier on the standard error when deciding pass/fail.
    pub sigma_mult: f64,
    /// Lower bound to test against; the scheme's nominal bound when absent.
    pub bound: Option<f64>,
    /// CSV destination; the JSON summary goes next to it.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub scheme: String,
    pub instance_id: String,
    pub element: usize,
    pub n_samples: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub min_estimate: f64,
    pub min_lower_3sigma: f64,
    pub all_pass: bool,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io { path: "<csv output>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scheme", "instance_id", "element", "n_samples", "estimate", "stderr", "bound", "pass"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.scheme.clone(),
                r.instance_id.clone(),
                r.element.to_string(),
                r.n_samples.to_string(),
                g17(r.estimate),
                g17(r.stderr),
                r.bound.map_or_else(|| "NA".to_string(), g17),
                r.pass.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv output>".into(), message: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Runs a balancedness experiment, writing CSV and JSON when `cfg.out` is set.
pub fn run_experiment(cfg: &ExperimentConfig, scheme: SchemeKind) -> Result<ExperimentSummary> {
    if cfg.n_samples == 0 && !cfg.exact {
        return Err(invalid("N must be at least 1"));
    }
    scheme.check_compatible(&cfg.instance)?;
    let report = if cfg.exact {
        exact_balancedness_deterministic(&scheme, &cfg.instance, &cfg.x)?
    } else {
        estimate_balancedness(&scheme, &cfg.instance, &cfg.x, cfg.n_samples, cfg.seed)?
    };
    let bound = cfg.bound.or_else(|| scheme.nominal_bound(&cfg.instance));
    let rows: Vec<ExperimentRow> = report
        .elements
        .iter()
        .map(|e| {
            let slack = if cfg.exact { 1e-12 } else { cfg.sigma_mult * e.stderr };
            ExperimentRow {
                scheme: scheme.id().into(),
                instance_id: cfg.instance_id.clone(),
                element: e.element,
                n_samples: report.n_samples,
                estimate: e.estimate,
                stderr: e.stderr,
                bound,
                pass: bound.is_none_or(|b| e.estimate + slack >= b),
            }
        })
        .collect();
    let summary = ExperimentSummary {
        config: cfg.clone(),
        min_estimate: report.min_estimate,
        min_lower_3sigma: report.min_lower_3sigma,
        all_pass: rows.iter().all(|r| r.pass),
        rows,
    };
    if let Some(path) = &cfg.out {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        summary.write_csv(file).map_err(|e| match e {
            Error::Io { message, .. } => io_err(path, message),
            other => other,
        })?;
        let json_path = path.with_extension("json");
        std::fs::write(&json_path, summary.to_json()).map_err(|e| io_err(&json_path, e))?;
    }
    Ok(summary)
}

/// How often an item survives each stage of the k-CS scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StageCounts {
    pub in_r: u64,
    pub in_r0: u64,
    pub in_r1: u64,
    pub in_r2: u64,
    pub in_rf: u64,
}

impl StageCounts {
    fn add(&mut self, o: &StageCounts) {
        self.in_r += o.in_r;
        self.in_r0 += o.in_r0;
        self.in_r1 += o.in_r1;
        self.in_r2 += o.in_r2;
        self.in_rf += o.in_rf;
    }

    /// Pr[R_0 | R], Pr[R_1 | R_0], Pr[R_2 | R_1], Pr[R_F | R_2].
    pub fn retention(&self) -> [f64; 4] {
        let ratio = |a: u64, b: u64| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
        [
            ratio(self.in_r0, self.in_r),
            ratio(self.in_r1, self.in_r0),
            ratio(self.in_r2, self.in_r1),
            ratio(self.in_rf, self.in_r2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub k: usize,
    pub alpha: f64,
    pub ell: f64,
    pub d: usize,
    pub n_samples: u64,
    pub items: Vec<StageCounts>,
}

impl StageReport {
    pub fn pooled(&self) -> StageCounts {
        let mut total = StageCounts::default();
        self.items.iter().for_each(|c| total.add(c));
        total
    }

    /// One row per item plus a pooled row with item = "all".
    pub fn write_csv<W: Write>(&self, instance_id: &str, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io { path: "<csv output>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "instance_id", "k", "item", "n_r", "n_r0", "n_r1", "n_r2", "n_rf",
            "p_r0_given_r", "p_r1_given_r0", "p_r2_given_r1", "p_rf_given_r2",
        ])
        .map_err(io)?;
        let pooled = self.pooled();
        let labelled = self.items.iter().enumerate().map(|(j, c)| (j.to_string(), c));
        for (label, c) in labelled.chain(std::iter::once(("all".to_string(), &pooled))) {
            let mut rec = vec![
                instance_id.to_string(),
                self.k.to_string(),
                label,
                c.in_r.to_string(),
                c.in_r0.to_string(),
                c.in_r1.to_string(),
                c.in_r2.to_string(),
                c.in_rf.to_string(),
            ];
            rec.extend(c.retention().iter().map(|&p| g17(p)));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv output>".into(), message: e.to_string() })
    }
}

/// Per-item stage survival counts of the k-CS scheme over `n_samples` trials.
pub fn kcs_stage_report(
    inst: &KcsInstance,
    x: &[f64],
    params: &KcsParams,
    n_samples: u64,
    seed: u64,
) -> Result<StageReport> {
    let point = FractionalPoint::new(x.to_vec())?;
    let n = inst.num_items();
    let items = run_trials(
        n_samples,
        &RngStream::root(seed),
        || vec![StageCounts::default(); n],
        |acc, _, s| {
            let r = point.sample(&mut s.derive(0));
            let tr = kcs_crs_trace(inst, x, &r, params, &s.derive(1))?;
            r.iter().for_each(|j| acc[j].in_r += 1);
            tr.r0.iter().for_each(|j| acc[j].in_r0 += 1);
            tr.r1.iter().for_each(|j| acc[j].in_r1 += 1);
            tr.r2.iter().for_each(|j| acc[j].in_r2 += 1);
            tr.rf.iter().for_each(|j| acc[j].in_rf += 1);
            Ok(())
        },
        |acc, part| acc.iter_mut().zip(&part).for_each(|(a, b)| a.add(b)),
    )?;
    Ok(StageReport { k: inst.sparsity(), alpha: params.alpha, ell: params.ell, d: params.d, n_samples, items })
}

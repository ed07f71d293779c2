//! Monte-Carlo harness: sparse inputs, discrete-event worker simulation with
//! stragglers, exact recovery checks, and empirical leakage.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::cluster::{plan_cluster, Cluster, ClusterCollector, ClusterPlan, ClusterResponse};
use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::matmul::{can_recover, make_tasks, recover, MmScheme, MmVariant, WorkerResponse};
use crate::otp::{closed_form_leakage, sample_pad, PadParams};
use crate::rng;
use crate::sss::{closed_form_share_leakage, deal};
use crate::stats::{JointHistogram, MiEstimator, SchemeParams, SourceModel};

/// I.i.d. entries: zero with probability `s`, otherwise uniform nonzero.
pub fn gen_matrix(source: &SourceModel, rows: usize, cols: usize, seed: u64) -> FieldMatrix {
    let q = source.q();
    let s = source.s();
    let zeros = FieldMatrix::zeros(source.field().clone(), rows, cols);
    rng::map_entries(
        &zeros,
        seed,
        rng::domain::SOURCE,
        |r, _| {
            if r.random::<f64>() < s {
                0
            } else {
                r.random_range(1..q)
            }
        },
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum LatencyKind {
    /// Every task takes the same time.
    Deterministic { per_task: f64 },
    /// `shift + Exp(rate)` per task, independent across tasks and workers.
    ShiftedExponential { shift: f64, rate: f64 },
    /// `times[w][k]` is the duration of worker `w`'s `k`-th task.
    PerWorkerTable { times: Vec<Vec<f64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StragglerMode {
    /// Returns nothing.
    Full,
    /// Returns only its first `completes` results.
    Partial { completes: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyModel {
    pub kind: LatencyKind,
    /// `(worker, mode)` pairs. Cluster simulations number untrusted workers
    /// `0..n1` and trusted workers `n1..n1 + n2`.
    pub stragglers: Vec<(usize, StragglerMode)>,
}

impl LatencyModel {
    pub fn deterministic() -> Self {
        Self { kind: LatencyKind::Deterministic { per_task: 1.0 }, stragglers: Vec::new() }
    }

    pub fn shifted_exponential(shift: f64, rate: f64) -> Self {
        Self { kind: LatencyKind::ShiftedExponential { shift, rate }, stragglers: Vec::new() }
    }

    pub fn with_full_stragglers(mut self, workers: &[usize]) -> Self {
        self.stragglers.extend(workers.iter().map(|&w| (w, StragglerMode::Full)));
        self
    }

    fn validate(&self, workers: usize) -> Result<()> {
        match &self.kind {
            LatencyKind::Deterministic { per_task } if !(*per_task >= 0.0) => {
                return Err(Error::InvalidParams(format!("task time {per_task} must be non-negative")));
            }
            LatencyKind::ShiftedExponential { shift, rate } if !(*shift >= 0.0 && *rate > 0.0) => {
                return Err(Error::InvalidParams(format!("need shift >= 0 and rate > 0, got {shift}, {rate}")));
            }
            LatencyKind::PerWorkerTable { times } => {
                if times.len() < workers {
                    return Err(Error::InvalidParams(format!(
                        "latency table has {} rows for {workers} workers",
                        times.len()
                    )));
                }
                if times.iter().flatten().any(|t| !(*t >= 0.0)) {
                    return Err(Error::InvalidParams("latency table entries must be non-negative".into()));
                }
            }
            _ => {}
        }
        if let Some((w, _)) = self.stragglers.iter().find(|(w, _)| *w >= workers) {
            return Err(Error::InvalidParams(format!("straggler {w} is not among the {workers} workers")));
        }
        Ok(())
    }

    /// Completion times of the results `worker` actually returns.
    fn completion_times(&self, worker: usize, tasks: usize, seed: u64) -> Result<Vec<f64>> {
        let durations: Vec<f64> = match &self.kind {
            LatencyKind::Deterministic { per_task } => vec![*per_task; tasks],
            LatencyKind::ShiftedExponential { shift, rate } => {
                let exp = Exp::new(*rate).map_err(|e| Error::InvalidParams(e.to_string()))?;
                let mut r = rng::stream(seed, rng::domain::LATENCY, worker as u64);
                (0..tasks).map(|_| shift + exp.sample(&mut r)).collect()
            }
            LatencyKind::PerWorkerTable { times } => {
                let row = &times[worker];
                if row.len() < tasks {
                    return Err(Error::InvalidParams(format!(
                        "latency table gives {} times for worker {worker}, which runs {tasks} tasks",
                        row.len()
                    )));
                }
                row[..tasks].to_vec()
            }
        };
        let returned = self
            .stragglers
            .iter()
            .filter(|(w, _)| *w == worker)
            .map(|(_, m)| match m {
                StragglerMode::Full => 0,
                StragglerMode::Partial { completes } => *completes,
            })
            .min()
            .unwrap_or(tasks)
            .min(tasks);
        Ok(durations
            .iter()
            .scan(0.0, |t, d| {
                *t += d;
                Some(*t)
            })
            .take(returned)
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Event {
    time: f64,
    worker: usize,
    task: usize,
}

/// Task completions ordered by `(time, worker, task)`.
fn schedule(latency: &LatencyModel, tasks_per_worker: &[usize], seed: u64) -> Result<Vec<Event>> {
    latency.validate(tasks_per_worker.len())?;
    let mut events = Vec::new();
    for (w, &n) in tasks_per_worker.iter().enumerate() {
        for (k, t) in latency.completion_times(w, n, seed)?.into_iter().enumerate() {
            events.push(Event { time: t, worker: w, task: k });
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.worker.cmp(&b.worker)).then(a.task.cmp(&b.task)));
    Ok(events)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub seed: u64,
    pub variant: String,
    pub workers: usize,
    /// `sigma` for m-split, `x` for cyclic groups, `N - 3` for basic,
    /// `rho1` for cluster plans.
    pub tolerance: usize,
    /// Decoded and equal to the reference product.
    pub recovered: bool,
    /// Time of the result that made decoding possible.
    pub t_complete: Option<f64>,
    pub responses_used: usize,
    /// Mean zero fraction of the shares workers receive.
    pub s_d_emp: f64,
    /// Relative per-entry leakage estimated from one share.
    pub leak_emp: f64,
    pub leak_analytic: f64,
}

/// Matrix shape `(rows of A, inner dimension, cols of B)`.
pub type Sizes = (usize, usize, usize);

fn mm_tolerance(variant: MmVariant, workers: usize) -> usize {
    match variant {
        MmVariant::Basic => workers - 3,
        MmVariant::CyclicGroups { x, .. } => x,
        MmVariant::MSplit { sigma, .. } => sigma,
    }
}

/// One private matrix-multiplication run.
pub fn run_mm_trial(
    scheme: &MmScheme,
    source_a: &SourceModel,
    source_b: &SourceModel,
    latency: &LatencyModel,
    sizes: Sizes,
    seed: u64,
) -> Result<SimResult> {
    let (rows, inner, cols) = sizes;
    let a = gen_matrix(source_a, rows, inner, rng::derive_seed(seed, rng::domain::SOURCE, 0));
    let b = gen_matrix(source_b, inner, cols, rng::derive_seed(seed, rng::domain::SOURCE, 1));
    let reference = a.matmul(&b)?;
    let plan = make_tasks(&a, &b, scheme, rng::derive_seed(seed, rng::domain::SHARE, 0))?;
    let loads: Vec<usize> = plan.workers.iter().map(Vec::len).collect();
    let events = schedule(latency, &loads, rng::derive_seed(seed, rng::domain::LATENCY, 0))?;

    let mut responses: Vec<WorkerResponse> = Vec::new();
    let mut outcome = (false, None);
    for (stamp, ev) in events.iter().enumerate() {
        let task = &plan.workers[ev.worker][ev.task];
        responses.push(WorkerResponse {
            worker: ev.worker,
            part: task.part,
            alpha: task.alpha,
            product: task.compute()?,
            stamp: stamp as u64,
        });
        if can_recover(&responses, scheme) {
            outcome = (recover(&responses, scheme)? == reference, Some(ev.time));
            break;
        }
    }

    let shares: Vec<&FieldMatrix> = plan.workers.iter().flatten().map(|t| &t.a_share).collect();
    let s_d_emp = shares.iter().map(|m| m.sparsity()).sum::<f64>() / shares.len().max(1) as f64;
    let first = plan.workers.iter().flatten().find(|t| t.part == 0).expect("part 0 is assigned");
    let a0 = &a.col_blocks(scheme.parts())?[0];
    let h = source_a.entry_entropy();
    let leak_emp = if h > 0.0 { JointHistogram::from_matrices(a0, &first.a_share)?.miller_madow_mi() / h } else { 0.0 };
    let n_points = scheme.assignment()[0].len();
    let pa = scheme.probs_a();
    let leak_analytic =
        if h > 0.0 { closed_form_share_leakage(source_a.q(), n_points, pa.p1, pa.ps, source_a.s()) / h } else { 0.0 };
    Ok(SimResult {
        seed,
        variant: scheme.variant().name().into(),
        workers: scheme.workers(),
        tolerance: mm_tolerance(scheme.variant(), scheme.workers()),
        recovered: outcome.0,
        t_complete: outcome.1,
        responses_used: responses.len(),
        s_d_emp,
        leak_emp,
        leak_analytic,
    })
}

/// One two-cluster run; `sizes` is `(rows of A, cols of A, cols of B)`.
pub fn run_cluster_trial(
    plan: &ClusterPlan,
    source: &SourceModel,
    latency: &LatencyModel,
    sizes: Sizes,
    seed: u64,
) -> Result<SimResult> {
    let (rows, inner, cols) = sizes;
    let a = gen_matrix(source, rows, inner, rng::derive_seed(seed, rng::domain::SOURCE, 0));
    let b = gen_matrix(source, inner, cols, rng::derive_seed(seed, rng::domain::SOURCE, 1));
    let reference = a.matmul(&b)?;
    let tasks = plan_cluster(&a, plan, rng::derive_seed(seed, rng::domain::PAD, 0))?;
    let (n1, n2) = (plan.n1(), plan.n2());
    let loads: Vec<usize> = (0..n1).map(|_| plan.rho1()).chain((0..n2).map(|_| plan.rho2())).collect();
    let events = schedule(latency, &loads, rng::derive_seed(seed, rng::domain::LATENCY, 0))?;

    let mut collector = ClusterCollector::new(plan);
    let mut t_complete = None;
    for ev in &events {
        let (cluster, worker) =
            if ev.worker < n1 { (Cluster::Untrusted, ev.worker) } else { (Cluster::Trusted, ev.worker - n1) };
        let block = tasks.block_index(cluster, worker, ev.task);
        let product = tasks.task(cluster, worker, ev.task).matmul(&b)?;
        if collector.push(ClusterResponse { cluster, worker, layer: ev.task, block, product })? {
            t_complete = Some(ev.time);
            break;
        }
    }
    let recovered = t_complete.is_some() && collector.finish()? == reference;
    let padded = a.add(&tasks.pad)?;
    let h = source.entry_entropy();
    let leak_emp = if h > 0.0 { JointHistogram::from_matrices(&a, &tasks.pad)?.miller_madow_mi() / h } else { 0.0 };
    let params = PadParams::semi_perfect(plan.p(), source.field().clone())?;
    let leak_analytic = if h > 0.0 { closed_form_leakage(&params, source.s()).0 / h } else { 0.0 };
    Ok(SimResult {
        seed,
        variant: "cluster".into(),
        workers: n1 + n2,
        tolerance: plan.rho1(),
        recovered,
        t_complete,
        responses_used: collector.received(),
        s_d_emp: padded.sparsity(),
        leak_emp,
        leak_analytic,
    })
}

/// Run `trial` for every seed in parallel; results keep the seed order.
pub fn campaign<F>(seeds: &[u64], trial: F) -> Result<Vec<SimResult>>
where
    F: Fn(u64) -> Result<SimResult> + Sync,
{
    seeds.par_iter().map(|&s| trial(s)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeakageComparison {
    /// Exact per-entry leakage, q-ary units.
    pub analytical: f64,
    pub plug_in: f64,
    pub miller_madow: f64,
    pub se_plug_in: f64,
    pub se_miller_madow: f64,
    pub samples: u64,
}

/// Sample entry pairs `(A, share)` and compare estimated to exact leakage.
/// For the pad, share 0 is `R` and share 1 is `A + R`.
pub fn leakage_experiment(
    params: &SchemeParams,
    source: &SourceModel,
    share_index: usize,
    entries: usize,
    seed: u64,
) -> Result<LeakageComparison> {
    if entries < 10_000 {
        return Err(Error::InvalidParams(format!("need at least 10^4 entries, got {entries}")));
    }
    let cols = 1000;
    let rows = entries.div_ceil(cols);
    let a = gen_matrix(source, rows, cols, rng::derive_seed(seed, rng::domain::SOURCE, 0));
    let share_seed = rng::derive_seed(seed, rng::domain::SHARE, 0);
    let (share, analytical) = match params {
        SchemeParams::Pad(p) => {
            let sh = sample_pad(&a, p, share_seed)?;
            let (l1, l2) = closed_form_leakage(p, source.s());
            match share_index {
                0 => (sh.pad, l1),
                1 => (sh.padded, l2),
                i => return Err(Error::InvalidParams(format!("one-time pad has 2 shares, asked for {i}"))),
            }
        }
        SchemeParams::Poly(p) => {
            if share_index >= p.n() {
                return Err(Error::InvalidParams(format!("share {share_index} of {}", p.n())));
            }
            let set = deal(&a, p, share_seed)?;
            let l = closed_form_share_leakage(source.q(), p.n(), p.p1(), p.ps(), source.s());
            (set.into_shares().swap_remove(share_index), l)
        }
    };
    let hist = JointHistogram::from_matrices(&a, &share)?;
    let boot_seed = rng::derive_seed(seed, rng::domain::BOOTSTRAP, 0);
    Ok(LeakageComparison {
        analytical,
        plug_in: hist.plug_in_mi(),
        miller_madow: hist.miller_madow_mi(),
        se_plug_in: hist.bootstrap_se(MiEstimator::PlugIn, 100, boot_seed),
        se_miller_madow: hist.bootstrap_se(MiEstimator::MillerMadow, 100, boot_seed),
        samples: hist.samples(),
    })
}

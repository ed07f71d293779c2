//! Private distributed matrix multiplication from polynomial pairs
//! `f(x) = A + x R` and `g(x) = B + x S`.
//!
//! A worker holding `(f(alpha), g(alpha))` returns `h(alpha) = f(alpha) g(alpha)`,
//! a degree-2 matrix polynomial with `h(0) = A B`, so any three distinct
//! evaluations of a part decode it.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, FieldSpec};
use crate::optimizer::solve_sss;
use crate::rng;
use crate::sss::{deal, sss_leakage, ShareParams};
use crate::stats::SourceModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmVariant {
    /// Every worker evaluates the full product at its own point.
    Basic,
    /// `m` parts, `m` groups of `N/m` workers; part `i` goes to groups
    /// `i, ..., i + x - 1 (mod m)`.
    CyclicGroups { m: usize, x: usize },
    /// `m` parts, each evaluated at `sigma + 3` points spread cyclically
    /// over the workers.
    MSplit { m: usize, sigma: usize },
}

impl MmVariant {
    pub fn name(&self) -> &'static str {
        match self {
            MmVariant::Basic => "basic",
            MmVariant::CyclicGroups { .. } => "cyclic-groups",
            MmVariant::MSplit { .. } => "m-split",
        }
    }

    pub fn parts(&self) -> usize {
        match *self {
            MmVariant::Basic => 1,
            MmVariant::CyclicGroups { m, .. } | MmVariant::MSplit { m, .. } => m,
        }
    }
}

/// Conditional-PMF probabilities shared by every part of one input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharingProbs {
    pub p1: f64,
    pub ps: f64,
}

impl SharingProbs {
    pub fn uniform(field: &FieldSpec) -> Self {
        let u = 1.0 / field.q() as f64;
        Self { p1: u, ps: u }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmScheme {
    variant: MmVariant,
    workers: usize,
    field: FieldSpec,
    probs_a: SharingProbs,
    probs_b: SharingProbs,
    /// `assignment[i]` lists the workers holding part `i`; the k-th listed
    /// worker gets evaluation point `k + 1`.
    assignment: Vec<Vec<usize>>,
}

fn divisibility(msg: String) -> Error {
    Error::Divisibility(msg)
}

impl MmScheme {
    pub fn new(
        variant: MmVariant,
        workers: usize,
        field: FieldSpec,
        probs_a: SharingProbs,
        probs_b: SharingProbs,
    ) -> Result<Self> {
        let assignment = build_assignment(variant, workers)?;
        let points = assignment.iter().map(Vec::len).max().unwrap_or(0);
        if points as u64 >= field.q() as u64 {
            return Err(Error::InvalidParams(format!(
                "{points} evaluation points per part need q > {points}, got q = {}",
                field.q()
            )));
        }
        let scheme = Self { variant, workers, field, probs_a, probs_b, assignment };
        scheme.part_params(0, &scheme.probs_a)?;
        scheme.part_params(0, &scheme.probs_b)?;
        Ok(scheme)
    }

    /// Scheme whose probabilities minimize leakage at the target share
    /// sparsities, given the number of evaluation points per part.
    pub fn optimal(
        variant: MmVariant,
        workers: usize,
        source_a: &SourceModel,
        s_d_a: f64,
        source_b: &SourceModel,
        s_d_b: f64,
    ) -> Result<Self> {
        source_a.field().ensure_same(source_b.field())?;
        let points = build_assignment(variant, workers)?.iter().map(Vec::len).max().unwrap_or(0);
        let a = solve_sss(source_a, s_d_a, points)?.params;
        let b = solve_sss(source_b, s_d_b, points)?.params;
        Self::new(
            variant,
            workers,
            source_a.field().clone(),
            SharingProbs { p1: a.p1(), ps: a.ps() },
            SharingProbs { p1: b.p1(), ps: b.ps() },
        )
    }

    pub fn uniform(variant: MmVariant, workers: usize, field: FieldSpec) -> Result<Self> {
        let u = SharingProbs::uniform(&field);
        Self::new(variant, workers, field, u, u)
    }

    pub fn variant(&self) -> MmVariant {
        self.variant
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn parts(&self) -> usize {
        self.assignment.len()
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn probs_a(&self) -> SharingProbs {
        self.probs_a
    }

    pub fn probs_b(&self) -> SharingProbs {
        self.probs_b
    }

    pub fn assignment(&self) -> &[Vec<usize>] {
        &self.assignment
    }

    /// Parts held by `worker`, with the evaluation point used for each.
    pub fn worker_load(&self, worker: usize) -> Vec<(usize, u32)> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(part, ws)| ws.iter().position(|&w| w == worker).map(|k| (part, k as u32 + 1)))
            .collect()
    }

    fn part_params(&self, part: usize, probs: &SharingProbs) -> Result<ShareParams> {
        let n = self.assignment[part].len();
        ShareParams::with_default_alphas(self.field.clone(), n, probs.p1, probs.ps)
    }

    /// Straggler tolerance stated for the variant.
    pub fn claimed_tolerance(&self) -> usize {
        match self.variant {
            MmVariant::Basic => self.workers - 3,
            MmVariant::MSplit { sigma, .. } => sigma,
            MmVariant::CyclicGroups { m, x } => match x {
                1 => 1,
                2 => m + 1,
                _ => x,
            },
        }
    }

    /// Whether every part keeps three workers when `stragglers` are removed.
    pub fn survives(&self, stragglers: &[usize]) -> bool {
        self.assignment.iter().all(|ws| ws.iter().filter(|w| !stragglers.contains(w)).count() >= 3)
    }

    /// Largest `t` such that every set of `t` full stragglers is survivable.
    pub fn worst_case_tolerance(&self) -> usize {
        self.assignment.iter().map(|ws| ws.len() - 3).min().unwrap_or(0)
    }

    /// Largest survivable straggler set, by exhaustive search (`N <= 24`).
    pub fn best_case_tolerance(&self) -> Option<usize> {
        if self.workers > 24 {
            return None;
        }
        let masks: Vec<u32> = self.assignment.iter().map(|ws| ws.iter().fold(0u32, |m, &w| m | (1 << w))).collect();
        (0u32..1 << self.workers)
            .into_par_iter()
            .filter(|s| masks.iter().all(|m| (m & !s).count_ones() >= 3))
            .map(|s| s.count_ones() as usize)
            .max()
    }

    /// A set of `size` stragglers that defeats recovery, if one exists.
    pub fn straggler_witness(&self, size: usize) -> Option<Vec<usize>> {
        let ws = self.assignment.iter().min_by_key(|ws| ws.len())?;
        let needed = ws.len() - 2;
        if size < needed || size > self.workers {
            return None;
        }
        let mut out: Vec<usize> = ws[..needed].to_vec();
        out.extend((0..self.workers).filter(|w| !ws[..needed].contains(w)).take(size - needed));
        out.sort_unstable();
        Some(out)
    }
}

fn build_assignment(variant: MmVariant, workers: usize) -> Result<Vec<Vec<usize>>> {
    match variant {
        MmVariant::Basic => {
            if workers < 3 {
                return Err(Error::InvalidParams(format!("need at least 3 workers, got {workers}")));
            }
            Ok(vec![(0..workers).collect()])
        }
        MmVariant::CyclicGroups { m, x } => {
            if m == 0 || !workers.is_multiple_of(m) {
                return Err(divisibility(format!("m = {m} must divide N = {workers}")));
            }
            if x == 0 || x > m {
                return Err(Error::InvalidParams(format!("need 1 <= x <= m, got x = {x}, m = {m}")));
            }
            let g = workers / m;
            if x * g < 3 {
                return Err(Error::InvalidParams(format!(
                    "each part reaches x * N / m = {} workers, fewer than the 3 needed",
                    x * g
                )));
            }
            Ok((0..m).map(|i| (0..x).flat_map(|j| ((i + j) % m) * g..((i + j) % m + 1) * g).collect()).collect())
        }
        MmVariant::MSplit { m, sigma } => {
            let per_part = sigma + 3;
            if m == 0 || sigma >= m {
                return Err(Error::InvalidParams(format!("need sigma < m, got sigma = {sigma}, m = {m}")));
            }
            if workers == 0 || (m * per_part) % workers != 0 {
                return Err(divisibility(format!("N = {workers} must divide m (sigma + 3) = {}", m * per_part)));
            }
            if per_part > workers {
                return Err(Error::InvalidParams(format!(
                    "sigma + 3 = {per_part} distinct workers per part exceed N = {workers}"
                )));
            }
            // lay m (sigma + 3) slots around the ring so every worker gets
            // exactly m (sigma + 3) / N of them
            Ok((0..m).map(|i| (0..per_part).map(|k| (i * per_part + k) % workers).collect()).collect())
        }
    }
}

/// One task pair `(f_i(alpha), g_i(alpha))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub part: usize,
    pub alpha: u32,
    pub a_share: FieldMatrix,
    pub b_share: FieldMatrix,
}

impl Task {
    pub fn compute(&self) -> Result<FieldMatrix> {
        self.a_share.matmul(&self.b_share)
    }
}

/// Tasks per worker, in execution order.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskPlan {
    pub workers: Vec<Vec<Task>>,
}

/// Split `A` column-wise and `B` row-wise into the scheme's parts, share each
/// part with independent pads, and hand out evaluations per the assignment.
pub fn make_tasks(a: &FieldMatrix, b: &FieldMatrix, scheme: &MmScheme, seed: u64) -> Result<TaskPlan> {
    a.field().ensure_same(b.field())?;
    a.field().ensure_same(&scheme.field)?;
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!("inner dimensions {} and {}", a.cols(), b.rows())));
    }
    let m = scheme.parts();
    let a_parts = a.col_blocks(m).map_err(|_| divisibility(format!("m = {m} must divide cols(A) = {}", a.cols())))?;
    let b_parts = b.row_blocks(m).map_err(|_| divisibility(format!("m = {m} must divide rows(B) = {}", b.rows())))?;
    let shared: Vec<(Vec<FieldMatrix>, Vec<FieldMatrix>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let pa = scheme.part_params(i, &scheme.probs_a)?;
            let pb = scheme.part_params(i, &scheme.probs_b)?;
            let sa = deal(&a_parts[i], &pa, rng::derive_seed(seed, rng::domain::SPLIT_A, i as u64))?;
            let sb = deal(&b_parts[i], &pb, rng::derive_seed(seed, rng::domain::SPLIT_B, i as u64))?;
            Ok((sa.into_shares(), sb.into_shares()))
        })
        .collect::<Result<_>>()?;
    let mut workers = vec![Vec::new(); scheme.workers];
    for (part, ws) in scheme.assignment.iter().enumerate() {
        for (k, &w) in ws.iter().enumerate() {
            workers[w].push(Task {
                part,
                alpha: k as u32 + 1,
                a_share: shared[part].0[k].clone(),
                b_share: shared[part].1[k].clone(),
            });
        }
    }
    Ok(TaskPlan { workers })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkerResponse {
    pub worker: usize,
    pub part: usize,
    pub alpha: u32,
    pub product: FieldMatrix,
    /// Arrival order.
    pub stamp: u64,
}

/// `h(0)` from three evaluations of a degree-2 matrix polynomial.
pub fn interpolate_at_zero(points: [(u32, &FieldMatrix); 3]) -> Result<FieldMatrix> {
    let field = points[0].1.field().clone();
    let mut acc: Option<FieldMatrix> = None;
    for k in 0..3 {
        let (xk, yk) = points[k];
        let (mut num, mut den) = (1u32, 1u32);
        for (l, &(xl, _)) in points.iter().enumerate() {
            if l != k {
                num = field.mul_raw(num, field.neg_raw(xl));
                den = field.mul_raw(den, field.sub_raw(xk, xl));
            }
        }
        if den == 0 {
            return Err(Error::EqualEvaluationPoints(xk));
        }
        let coeff = field.div_raw(num, den)?;
        acc = Some(match acc {
            None => yk.scale(coeff),
            Some(m) => m.add_scaled(yk, coeff)?,
        });
    }
    Ok(acc.expect("three points"))
}

fn usable_by_part(responses: &[WorkerResponse], parts: usize) -> Vec<Vec<&WorkerResponse>> {
    let mut sorted: Vec<&WorkerResponse> = responses.iter().collect();
    sorted.sort_by_key(|r| (r.stamp, r.worker, r.part));
    let mut by_part = vec![Vec::<&WorkerResponse>::new(); parts];
    for r in sorted {
        if r.part < parts && by_part[r.part].len() < 3 && by_part[r.part].iter().all(|x| x.alpha != r.alpha) {
            by_part[r.part].push(r);
        }
    }
    by_part
}

pub fn can_recover(responses: &[WorkerResponse], scheme: &MmScheme) -> bool {
    usable_by_part(responses, scheme.parts()).iter().all(|p| p.len() == 3)
}

/// Decode `C = sum_i A_i B_i` from the earliest three distinct evaluations
/// of every part.
pub fn recover(responses: &[WorkerResponse], scheme: &MmScheme) -> Result<FieldMatrix> {
    let by_part = usable_by_part(responses, scheme.parts());
    let deficient: Vec<usize> = by_part.iter().enumerate().filter(|(_, p)| p.len() < 3).map(|(i, _)| i).collect();
    if !deficient.is_empty() {
        return Err(Error::InsufficientResponses { parts: deficient });
    }
    let mut total: Option<FieldMatrix> = None;
    for rs in by_part {
        let c = interpolate_at_zero([
            (rs[0].alpha, &rs[0].product),
            (rs[1].alpha, &rs[1].product),
            (rs[2].alpha, &rs[2].product),
        ])?;
        total = Some(match total {
            None => c,
            Some(t) => t.add(&c)?,
        });
    }
    Ok(total.expect("at least one part"))
}

/// Leakage to one worker, in q-ary symbols, and relative to the entropy of
/// the whole input.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerLeakage {
    pub worker: usize,
    pub about_a: f64,
    pub about_b: f64,
    pub relative_a: f64,
    pub relative_b: f64,
}

/// Per-worker leakage for inputs of size `a_dims` and `b_dims`, summing
/// the per-entry leakage of every held share over the entries it covers.
pub fn scheme_leakage(
    scheme: &MmScheme,
    source_a: &SourceModel,
    source_b: &SourceModel,
    a_dims: (usize, usize),
    b_dims: (usize, usize),
) -> Result<Vec<WorkerLeakage>> {
    let m = scheme.parts();
    if a_dims.1 != b_dims.0 || !a_dims.1.is_multiple_of(m) {
        return Err(divisibility(format!("m = {m} must divide the inner dimension {}", a_dims.1)));
    }
    let mut per_part_entry: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for part in 0..m {
        let la = sss_leakage(&scheme.part_params(part, &scheme.probs_a)?, source_a)?.closed_form.per_share[0];
        let lb = sss_leakage(&scheme.part_params(part, &scheme.probs_b)?, source_b)?.closed_form.per_share[0];
        per_part_entry.insert(part, (la, lb));
    }
    let entries_a = (a_dims.0 * a_dims.1) as f64;
    let entries_b = (b_dims.0 * b_dims.1) as f64;
    let (ha, hb) = (source_a.entry_entropy(), source_b.entry_entropy());
    let rel = |x: f64, total: f64| if total > 0.0 { x / total } else { 0.0 };
    Ok((0..scheme.workers)
        .map(|w| {
            let (mut la, mut lb) = (0.0, 0.0);
            for (part, _) in scheme.worker_load(w) {
                let (ea, eb) = per_part_entry[&part];
                la += ea * entries_a / m as f64;
                lb += eb * entries_b / m as f64;
            }
            WorkerLeakage {
                worker: w,
                about_a: la,
                about_b: lb,
                relative_a: rel(la, entries_a * ha),
                relative_b: rel(lb, entries_b * hb),
            }
        })
        .collect())
}

/// Scheme description as read from a configuration file.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MmConfig {
    pub variant: String,
    #[serde(rename = "N")]
    pub workers: usize,
    pub m: Option<usize>,
    pub sigma: Option<usize>,
    pub x: Option<usize>,
    pub q: u32,
    pub s: f64,
    pub s_d: f64,
    pub s_b: Option<f64>,
    pub s_d_b: Option<f64>,
    pub seed: Option<u64>,
    pub rows: Option<usize>,
    pub inner: Option<usize>,
    pub cols: Option<usize>,
}

impl MmConfig {
    pub fn variant(&self) -> Result<MmVariant> {
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| Error::InvalidParams(format!("variant `{}` needs key `{key}`", self.variant)))
        };
        match self.variant.as_str() {
            "basic" => Ok(MmVariant::Basic),
            "cyclic-groups" => Ok(MmVariant::CyclicGroups { m: need(self.m, "m")?, x: need(self.x, "x")? }),
            "m-split" => Ok(MmVariant::MSplit { m: need(self.m, "m")?, sigma: need(self.sigma, "sigma")? }),
            other => Err(Error::InvalidParams(format!("unknown variant `{other}`"))),
        }
    }

    pub fn scheme(&self) -> Result<MmScheme> {
        let field = FieldSpec::from_q(self.q)?;
        let sa = SourceModel::new(field.clone(), self.s)?;
        let sb = SourceModel::new(field, self.s_b.unwrap_or(self.s))?;
        MmScheme::optimal(self.variant()?, self.workers, &sa, self.s_d, &sb, self.s_d_b.unwrap_or(self.s_d))
    }
}

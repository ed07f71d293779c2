//! Two-cluster scheme for a private `A` and public `B`.
//!
//! The untrusted cluster multiplies row blocks of `A + R` by `B`, the partly
//! trusted cluster multiplies row blocks of `R` by `B`, where `R` is a
//! semi-perfect pad. `A + R` is independent of `A`, so the untrusted cluster
//! learns nothing even if all of it colludes. Each cluster gets `rho` layers
//! of tasks by cyclic shifting, and worker `i` runs its layers in order.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, FieldSpec};
use crate::optimizer::{solve_pstar, TrustedCollusion};
use crate::otp::{closed_form_leakage, sample_pad, PadParams};
use crate::stats::SourceModel;

/// Results guaranteeing coverage of `n` blocks replicated over `rho`
/// sequential layers: `rho n - rho (rho + 1) / 2 + 1`.
pub fn recovery_threshold(n: usize, rho: usize) -> usize {
    rho * n - rho * (rho + 1) / 2 + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPlan {
    n1: usize,
    n2: usize,
    rho1: usize,
    rho2: usize,
    z: usize,
    p: f64,
}

impl ClusterPlan {
    pub fn new(n1: usize, n2: usize, rho1: usize, rho2: usize, z: usize, p: f64) -> Result<Self> {
        if rho1 == 0 || rho1 > n1 {
            return Err(Error::InvalidParams(format!("need 1 <= rho1 <= n1, got rho1 = {rho1}, n1 = {n1}")));
        }
        if rho2 == 0 || rho2 > n2 {
            return Err(Error::InvalidParams(format!("need 1 <= rho2 <= n2, got rho2 = {rho2}, n2 = {n2}")));
        }
        if z == 0 || z >= n2 {
            return Err(Error::InvalidParams(format!("need 1 <= z < n2, got z = {z}, n2 = {n2}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { name: "p", value: p, msg: "must lie in (0, 1)".into() });
        }
        Ok(Self { n1, n2, rho1, rho2, z, p })
    }

    /// Plan whose pad parameter is the largest one meeting `eps_rel`.
    pub fn with_budget(
        n1: usize,
        n2: usize,
        rho1: usize,
        rho2: usize,
        z: usize,
        source: &SourceModel,
        eps_rel: f64,
    ) -> Result<Self> {
        let p = solve_pstar(source, &TrustedCollusion { n2, rho2, z }, eps_rel)?;
        Self::new(n1, n2, rho1, rho2, z, p)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn rho1(&self) -> usize {
        self.rho1
    }

    pub fn rho2(&self) -> usize {
        self.rho2
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn k_u(&self) -> usize {
        recovery_threshold(self.n1, self.rho1)
    }

    pub fn k_t(&self) -> usize {
        recovery_threshold(self.n2, self.rho2)
    }

    pub fn collusion(&self) -> TrustedCollusion {
        TrustedCollusion { n2: self.n2, rho2: self.rho2, z: self.z }
    }

    pub fn size(&self, cluster: Cluster) -> (usize, usize) {
        match cluster {
            Cluster::Untrusted => (self.n1, self.rho1),
            Cluster::Trusted => (self.n2, self.rho2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cluster {
    Untrusted,
    Trusted,
}

/// Block held by worker `i` at layer `j`: `(i - j) mod n`.
pub fn layer_block(n: usize, worker: usize, layer: usize) -> usize {
    (worker + n - layer % n) % n
}

/// `table[i][j]` is the block worker `i` computes at layer `j`.
pub fn layer_table(n: usize, rho: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| (0..rho).map(|j| layer_block(n, i, j)).collect()).collect()
}

/// Whether workers that finished `done[i]` layers each cover all `n` blocks.
pub fn prefixes_cover(n: usize, done: &[usize]) -> bool {
    let mut seen = vec![false; n];
    for (i, &d) in done.iter().enumerate() {
        for j in 0..d {
            seen[layer_block(n, i, j)] = true;
        }
    }
    seen.into_iter().all(|b| b)
}

/// Per-worker completed-layer counts totalling `K - 1` results that leave
/// block 0 uncovered: worker `i < rho` stops just before the layer where it
/// holds block 0.
pub fn uncovered_witness(n: usize, rho: usize) -> Vec<usize> {
    (0..n).map(|i| if i < rho { i } else { rho }).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayeredTasks {
    /// Row blocks of `A + R`.
    pub untrusted_blocks: Vec<FieldMatrix>,
    /// Row blocks of `R`.
    pub trusted_blocks: Vec<FieldMatrix>,
    pub untrusted: Vec<Vec<usize>>,
    pub trusted: Vec<Vec<usize>>,
    /// The pad; kept by the master.
    pub pad: FieldMatrix,
}

impl LayeredTasks {
    pub fn task(&self, cluster: Cluster, worker: usize, layer: usize) -> &FieldMatrix {
        match cluster {
            Cluster::Untrusted => &self.untrusted_blocks[self.untrusted[worker][layer]],
            Cluster::Trusted => &self.trusted_blocks[self.trusted[worker][layer]],
        }
    }

    pub fn block_index(&self, cluster: Cluster, worker: usize, layer: usize) -> usize {
        match cluster {
            Cluster::Untrusted => self.untrusted[worker][layer],
            Cluster::Trusted => self.trusted[worker][layer],
        }
    }
}

/// Pad `A` with a semi-perfect pad and lay out both clusters' tasks.
pub fn plan_cluster(a: &FieldMatrix, plan: &ClusterPlan, seed: u64) -> Result<LayeredTasks> {
    let params = PadParams::semi_perfect(plan.p, a.field().clone())?;
    let shares = sample_pad(a, &params, seed)?;
    let untrusted_blocks = shares
        .padded
        .row_blocks(plan.n1)
        .map_err(|_| Error::Divisibility(format!("n1 = {} must divide rows(A) = {}", plan.n1, a.rows())))?;
    let trusted_blocks = shares
        .pad
        .row_blocks(plan.n2)
        .map_err(|_| Error::Divisibility(format!("n2 = {} must divide rows(A) = {}", plan.n2, a.rows())))?;
    Ok(LayeredTasks {
        untrusted_blocks,
        trusted_blocks,
        untrusted: layer_table(plan.n1, plan.rho1),
        trusted: layer_table(plan.n2, plan.rho2),
        pad: shares.pad,
    })
}

/// Workers pooling their observations, by cluster.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Colluders {
    pub untrusted: Vec<usize>,
    pub trusted: Vec<usize>,
}

/// Leakage about `A` (q-ary symbols) to a colluding set, for `A` of shape
/// `a_dims`. Trusted colluders are charged `min(rho2 |set| / n2, 1)` of the
/// pad's entries, the most rows that many workers can hold.
pub fn cluster_leakage(
    plan: &ClusterPlan,
    source: &SourceModel,
    a_dims: (usize, usize),
    colluders: &Colluders,
) -> Result<f64> {
    if !colluders.untrusted.is_empty() && !colluders.trusted.is_empty() {
        return Err(Error::CrossClusterCollusion);
    }
    if let Some(&w) = colluders.untrusted.iter().find(|&&w| w >= plan.n1) {
        return Err(Error::InvalidParams(format!("untrusted worker {w} does not exist (n1 = {})", plan.n1)));
    }
    if let Some(&w) = colluders.trusted.iter().find(|&&w| w >= plan.n2) {
        return Err(Error::InvalidParams(format!("trusted worker {w} does not exist (n2 = {})", plan.n2)));
    }
    if colluders.trusted.is_empty() {
        return Ok(0.0);
    }
    let mut set = colluders.trusted.clone();
    set.sort_unstable();
    set.dedup();
    let exposure = TrustedCollusion { n2: plan.n2, rho2: plan.rho2, z: set.len() }.exposure();
    let params = PadParams::semi_perfect(plan.p, source.field().clone())?;
    let l1 = closed_form_leakage(&params, source.s()).0;
    Ok(exposure * (a_dims.0 * a_dims.1) as f64 * l1)
}

/// Fraction of the `n2` pad blocks that a set of trusted workers actually holds.
pub fn observed_fraction(plan: &ClusterPlan, trusted: &[usize]) -> f64 {
    let mut seen = vec![false; plan.n2];
    for &w in trusted {
        for j in 0..plan.rho2 {
            seen[layer_block(plan.n2, w, j)] = true;
        }
    }
    seen.iter().filter(|&&b| b).count() as f64 / plan.n2 as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResponse {
    pub cluster: Cluster,
    pub worker: usize,
    pub layer: usize,
    pub block: usize,
    /// Block of `(A + R) B` or `R B`.
    pub product: FieldMatrix,
}

/// Collects block products until both clusters cover all their blocks.
#[derive(Clone, Debug)]
pub struct ClusterCollector {
    untrusted: Vec<Option<FieldMatrix>>,
    trusted: Vec<Option<FieldMatrix>>,
    received: usize,
}

impl ClusterCollector {
    pub fn new(plan: &ClusterPlan) -> Self {
        Self { untrusted: vec![None; plan.n1], trusted: vec![None; plan.n2], received: 0 }
    }

    /// Record a result; returns whether decoding is now possible.
    pub fn push(&mut self, response: ClusterResponse) -> Result<bool> {
        let slots = match response.cluster {
            Cluster::Untrusted => &mut self.untrusted,
            Cluster::Trusted => &mut self.trusted,
        };
        let slot = slots
            .get_mut(response.block)
            .ok_or_else(|| Error::InvalidParams(format!("block {} out of range", response.block)))?;
        if slot.is_none() {
            *slot = Some(response.product);
        }
        self.received += 1;
        Ok(self.is_complete())
    }

    pub fn received(&self) -> usize {
        self.received
    }

    pub fn is_complete(&self) -> bool {
        self.untrusted.iter().chain(&self.trusted).all(Option::is_some)
    }

    /// Blocks still missing, per cluster.
    pub fn missing(&self) -> (Vec<usize>, Vec<usize>) {
        let gaps =
            |v: &[Option<FieldMatrix>]| v.iter().enumerate().filter(|(_, b)| b.is_none()).map(|(i, _)| i).collect();
        (gaps(&self.untrusted), gaps(&self.trusted))
    }

    /// `(A + R) B - R B`.
    pub fn finish(&self) -> Result<FieldMatrix> {
        let (untrusted, trusted) = self.missing();
        if !untrusted.is_empty() || !trusted.is_empty() {
            return Err(Error::CoverageFailure { untrusted, trusted });
        }
        let padded: Vec<FieldMatrix> = self.untrusted.iter().flatten().cloned().collect();
        let pad: Vec<FieldMatrix> = self.trusted.iter().flatten().cloned().collect();
        FieldMatrix::vstack(&padded)?.sub(&FieldMatrix::vstack(&pad)?)
    }
}

pub fn recover_cluster(
    responses: impl IntoIterator<Item = ClusterResponse>,
    plan: &ClusterPlan,
) -> Result<FieldMatrix> {
    let mut collector = ClusterCollector::new(plan);
    for r in responses {
        if collector.push(r)? {
            break;
        }
    }
    collector.finish()
}

/// Plan description as read from a configuration file. Exactly one of `p`
/// and `eps_rel` must be given.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub n1: usize,
    pub n2: usize,
    pub rho1: usize,
    pub rho2: usize,
    pub z: usize,
    pub p: Option<f64>,
    pub eps_rel: Option<f64>,
    pub q: u32,
    pub s: f64,
    pub seed: Option<u64>,
    pub rows: Option<usize>,
    pub inner: Option<usize>,
    pub cols: Option<usize>,
}

impl ClusterConfig {
    pub fn source(&self) -> Result<SourceModel> {
        SourceModel::new(FieldSpec::from_q(self.q)?, self.s)
    }

    pub fn plan(&self) -> Result<ClusterPlan> {
        match (self.p, self.eps_rel) {
            (Some(p), None) => ClusterPlan::new(self.n1, self.n2, self.rho1, self.rho2, self.z, p),
            (None, Some(eps)) => {
                ClusterPlan::with_budget(self.n1, self.n2, self.rho1, self.rho2, self.z, &self.source()?, eps)
            }
            _ => Err(Error::InvalidParams("give exactly one of `p` and `eps_rel`".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(recovery_threshold(3, 2), 4);
        for n in 1..8 {
            assert_eq!(recovery_threshold(n, 1), n);
            assert_eq!(recovery_threshold(n, n), n * (n - 1) / 2 + 1);
        }
    }

    #[test]
    fn layers_shift_cyclically() {
        let t = layer_table(4, 3);
        for i in 0..4 {
            for j in 1..3 {
                assert_eq!(t[(i + 1) % 4][j], t[i][j - 1]);
            }
        }
        assert_eq!(t[0], vec![0, 3, 2]);
    }

    #[test]
    fn witness_is_one_short() {
        for n in 1..7 {
            for rho in 1..=n {
                let w = uncovered_witness(n, rho);
                assert_eq!(w.iter().sum::<usize>(), recovery_threshold(n, rho) - 1);
                assert!(!prefixes_cover(n, &w));
            }
        }
    }

    #[test]
    fn plan_validation() {
        assert!(ClusterPlan::new(3, 4, 4, 1, 1, 0.5).is_err());
        assert!(ClusterPlan::new(3, 4, 1, 1, 4, 0.5).is_err());
        assert!(ClusterPlan::new(3, 4, 1, 1, 1, 1.0).is_err());
        let p = ClusterPlan::new(3, 4, 2, 1, 1, 0.5).unwrap();
        assert_eq!((p.k_u(), p.k_t()), (4, 4));
    }

    #[test]
    fn leakage_rules() {
        let f = FieldSpec::gf256();
        let src = SourceModel::new(f, 0.93).unwrap();
        let plan = ClusterPlan::new(4, 100, 2, 1, 10, 0.5).unwrap();
        let all_untrusted = Colluders { untrusted: (0..4).collect(), trusted: vec![] };
        assert_eq!(cluster_leakage(&plan, &src, (100, 10), &all_untrusted).unwrap(), 0.0);
        let both = Colluders { untrusted: vec![0], trusted: vec![1] };
        assert!(matches!(cluster_leakage(&plan, &src, (100, 10), &both), Err(Error::CrossClusterCollusion)));
        let ten = Colluders { untrusted: vec![], trusted: (0..10).collect() };
        let l1 = closed_form_leakage(&PadParams::semi_perfect(0.5, src.field().clone()).unwrap(), 0.93).0;
        let got = cluster_leakage(&plan, &src, (100, 10), &ten).unwrap();
        assert!((got - 0.1 * 1000.0 * l1).abs() < 1e-9);
        assert_eq!(observed_fraction(&plan, &(0..10).collect::<Vec<_>>()), 0.1);
    }
}

use sparse_share::cluster::{
    cluster_leakage, observed_fraction, plan_cluster, prefixes_cover, recover_cluster, recovery_threshold,
    uncovered_witness, Cluster, ClusterResponse, Colluders, LayeredTasks,
};
use sparse_share::sim::gen_matrix;
use sparse_share::stats::JointHistogram;
use sparse_share::{ClusterPlan, Error, FieldMatrix, FieldSpec, SourceModel};

fn source(q: u32, s: f64) -> SourceModel {
    SourceModel::new(FieldSpec::from_q(q).unwrap(), s).unwrap()
}

fn each_vector(n: usize, max: usize, f: &mut impl FnMut(&[usize])) {
    let mut v = vec![0; n];
    loop {
        f(&v);
        let mut i = 0;
        while i < n && v[i] == max {
            v[i] = 0;
            i += 1;
        }
        if i == n {
            return;
        }
        v[i] += 1;
    }
}

#[test]
fn threshold_is_tight_for_every_small_geometry() {
    for n in 1..=5 {
        for rho in 1..=n.min(4) {
            let k = recovery_threshold(n, rho);
            let mut max_uncovered = 0;
            each_vector(n, rho, &mut |done| {
                let total: usize = done.iter().sum();
                if prefixes_cover(n, done) {
                    return;
                }
                assert!(total < k, "n={n} rho={rho} {done:?}");
                max_uncovered = max_uncovered.max(total);
            });
            assert_eq!(max_uncovered, k - 1, "n={n} rho={rho}");
            let w = uncovered_witness(n, rho);
            assert_eq!(w.iter().sum::<usize>(), k - 1);
            assert!(!prefixes_cover(n, &w));
        }
    }
}

fn responses(
    tasks: &LayeredTasks,
    plan: &ClusterPlan,
    b: &FieldMatrix,
    keep: impl Fn(Cluster, usize) -> bool,
) -> Vec<ClusterResponse> {
    let mut out = Vec::new();
    for cluster in [Cluster::Untrusted, Cluster::Trusted] {
        let (n, rho) = plan.size(cluster);
        for layer in 0..rho {
            for worker in (0..n).filter(|&w| keep(cluster, w)) {
                out.push(ClusterResponse {
                    cluster,
                    worker,
                    layer,
                    block: tasks.block_index(cluster, worker, layer),
                    product: tasks.task(cluster, worker, layer).matmul(b).unwrap(),
                });
            }
        }
    }
    out
}

#[test]
fn decodes_with_rho_minus_one_workers_missing() {
    let src = source(89, 0.93);
    let a = gen_matrix(&src, 60, 8, 1);
    let b = gen_matrix(&src, 8, 5, 2);
    let reference = a.matmul(&b).unwrap();
    let plan = ClusterPlan::new(4, 5, 2, 3, 2, 0.5).unwrap();
    let tasks = plan_cluster(&a, &plan, 3).unwrap();
    for u in 0..4 {
        for t1 in 0..5 {
            for t2 in t1 + 1..5 {
                let rs = responses(&tasks, &plan, &b, |c, w| match c {
                    Cluster::Untrusted => w != u,
                    Cluster::Trusted => w != t1 && w != t2,
                });
                assert_eq!(recover_cluster(rs, &plan).unwrap(), reference);
            }
        }
    }
}

#[test]
fn rho_consecutive_failures_name_the_missing_block() {
    let src = source(89, 0.93);
    let a = gen_matrix(&src, 20, 6, 4);
    let b = gen_matrix(&src, 6, 3, 5);
    let plan = ClusterPlan::new(5, 4, 2, 2, 1, 0.5).unwrap();
    let tasks = plan_cluster(&a, &plan, 6).unwrap();
    // workers 1 and 2 hold block 1 at layers 0 and 1
    let rs = responses(&tasks, &plan, &b, |c, w| c == Cluster::Trusted || !(w == 1 || w == 2));
    match recover_cluster(rs, &plan) {
        Err(Error::CoverageFailure { untrusted, trusted }) => {
            assert_eq!(untrusted, vec![1]);
            assert!(trusted.is_empty());
        }
        other => panic!("expected a coverage failure, got {other:?}"),
    }
}

#[test]
fn untrusted_view_is_independent_of_input() {
    let src = source(89, 0.93);
    let plan = ClusterPlan::new(10, 10, 1, 1, 1, 0.7).unwrap();
    // 4e6 entries: at 1e6 most off-zero cells hold a handful of counts and
    // the Miller-Madow correction still leaves a visible positive bias
    let a = gen_matrix(&src, 4000, 1000, 7);
    let tasks = plan_cluster(&a, &plan, 8).unwrap();
    let padded = FieldMatrix::vstack(&tasks.untrusted_blocks).unwrap();
    let h = JointHistogram::from_matrices(&a, &padded).unwrap();
    let mm = h.miller_madow_mi();
    let se = h.bootstrap_se(sparse_share::stats::MiEstimator::MillerMadow, 100, 9);
    assert!(mm.abs() <= 3.0 * se, "MI {mm} with SE {se}");
    let (mut nonzero, mut hit_zero, mut hit_self) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(padded.data()) {
        if x != 0 {
            nonzero += 1;
            hit_zero += (y == 0) as usize;
            hit_self += (y == x) as usize;
        }
    }
    let near =
        |k: usize, p: f64| ((k as f64 / nonzero as f64) - p).abs() <= 3.0 * (p * (1.0 - p) / nonzero as f64).sqrt();
    assert!(near(hit_zero, 0.7));
    assert!(near(hit_self, 0.3 / 88.0));
    let all_untrusted = Colluders { untrusted: (0..10).collect(), trusted: vec![] };
    assert_eq!(cluster_leakage(&plan, &src, (1000, 1000), &all_untrusted).unwrap(), 0.0);
}

#[test]
fn leakage_grows_with_colluders_and_layers() {
    let src = source(256, 0.93);
    let dims = (100, 10);
    let mut last = 0.0;
    for z in 1..20 {
        let plan = ClusterPlan::new(4, 20, 1, 3, z, 0.5).unwrap();
        let leak =
            cluster_leakage(&plan, &src, dims, &Colluders { untrusted: vec![], trusted: (0..z).collect() }).unwrap();
        assert!(leak >= last);
        last = leak;
    }
    let cap = {
        let plan = ClusterPlan::new(4, 20, 1, 1, 1, 0.5).unwrap();
        20.0 * cluster_leakage(&plan, &src, dims, &Colluders { untrusted: vec![], trusted: vec![0] }).unwrap()
    };
    assert!((last - cap).abs() < 1e-9);
    let mut last = 0.0;
    for rho2 in 1..=20 {
        let plan = ClusterPlan::new(4, 20, 1, rho2, 4, 0.5).unwrap();
        let leak =
            cluster_leakage(&plan, &src, dims, &Colluders { untrusted: vec![], trusted: vec![0, 5, 10, 15] }).unwrap();
        assert!(leak >= last && leak <= cap + 1e-9);
        last = leak;
    }
}

#[test]
fn observed_fraction_never_exceeds_the_charge() {
    let plan = ClusterPlan::new(4, 10, 1, 3, 3, 0.5).unwrap();
    assert!((observed_fraction(&plan, &[0, 1, 2]) - 0.5).abs() < 1e-12);
    assert!((observed_fraction(&plan, &[0, 3, 6]) - 0.9).abs() < 1e-12);
    assert!(observed_fraction(&plan, &[0, 3, 6]) <= plan.collusion().exposure());
}

#[test]
fn mixed_collusion_is_rejected() {
    let src = source(89, 0.9);
    let plan = ClusterPlan::new(4, 5, 1, 1, 1, 0.5).unwrap();
    let both = Colluders { untrusted: vec![0], trusted: vec![1] };
    assert!(matches!(cluster_leakage(&plan, &src, (10, 10), &both), Err(Error::CrossClusterCollusion)));
}

#[test]
fn budgeted_plan_meets_its_budget() {
    let src = source(256, 0.93);
    let colluders = Colluders { untrusted: vec![], trusted: (0..10).collect() };
    for eps in [0.01, 0.1, 0.19] {
        let plan = ClusterPlan::with_budget(4, 100, 1, 2, 10, &src, eps).unwrap();
        let rel = cluster_leakage(&plan, &src, (100, 10), &colluders).unwrap() / (1000.0 * src.entry_entropy());
        assert!(rel <= eps + 1e-12 && rel > eps - 1e-6, "eps={eps} rel={rel}");
    }
    // 10 of 100 workers with two layers see at most a fifth of the pad, so
    // any budget from 0.2 up is met by the sparsest pad
    let plan = ClusterPlan::with_budget(4, 100, 1, 2, 10, &src, 0.3).unwrap();
    assert_eq!(plan.p(), sparse_share::optimizer::P_STAR_CLAMP);
}

//! q-ary information measures over finite alphabets.
//!
//! All logarithms are base q (the alphabet size), computed as `ln x / ln q`.
//! Zero-probability terms are skipped exactly, so optimizer corners with
//! probabilities of 0 or 1 evaluate without flooring.

use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, FieldSpec};
use crate::numeric::{lit, Real};
use crate::otp::{PadChannel, PadParams, PadShare};
use crate::rng;
use crate::sss::{PolyShareChannel, ShareParams};

fn sum_tolerance<T: Real>(len: usize) -> T {
    lit::<T>(1e-12).max(T::epsilon() * T::from_usize(len * 8).unwrap())
}

/// Probability mass function over an alphabet of size `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<T = f64> {
    probs: Vec<T>,
}

impl<T: Real> Pmf<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= T::zero())) {
            return Err(Error::InvalidPmf(format!("entry {i} is {p}")));
        }
        let total = probs.iter().fold(T::zero(), |acc, &p| acc + p);
        if (total - T::one()).abs() > sum_tolerance(probs.len()) {
            return Err(Error::InvalidPmf(format!("mass sums to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(q: usize) -> Self {
        Self { probs: vec![T::one() / T::from_usize(q).unwrap(); q] }
    }

    pub fn point_mass(q: usize, at: usize) -> Self {
        let mut probs = vec![T::zero(); q];
        probs[at] = T::one();
        Self { probs }
    }

    pub fn q(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> T {
        self.probs[i]
    }
}

/// Row `a` is the distribution of the channel output given input symbol `a`.
pub trait Channel<T: Real> {
    fn alphabet(&self) -> usize;

    fn prob(&self, input: usize, output: usize) -> T;

    fn row_into(&self, input: usize, out: &mut [T]) {
        for (y, slot) in out.iter_mut().enumerate() {
            *slot = self.prob(input, y);
        }
    }
}

/// Dense q x q conditional PMF.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalPmf<T = f64> {
    q: usize,
    data: Vec<T>,
}

impl<T: Real> ConditionalPmf<T> {
    pub fn new(rows: Vec<Pmf<T>>) -> Result<Self> {
        let q = rows.len();
        if rows.iter().any(|r| r.q() != q) {
            return Err(Error::InvalidPmf(format!("every row must have {q} entries")));
        }
        let data = rows.into_iter().flat_map(|r| r.probs).collect();
        Ok(Self { q, data })
    }

    pub fn from_channel(channel: &impl Channel<T>) -> Self {
        let q = channel.alphabet();
        let mut data = vec![T::zero(); q * q];
        for (a, row) in data.chunks_mut(q).enumerate() {
            channel.row_into(a, row);
        }
        Self { q, data }
    }

    pub fn identity(q: usize) -> Self {
        let mut data = vec![T::zero(); q * q];
        for a in 0..q {
            data[a * q + a] = T::one();
        }
        Self { q, data }
    }

    pub fn row(&self, a: usize) -> &[T] {
        &self.data[a * self.q..(a + 1) * self.q]
    }

    /// Largest L-infinity distance between two rows.
    pub fn max_row_distance(&self) -> T {
        let mut worst = T::zero();
        for a in 1..self.q {
            for (x, y) in self.row(0).iter().zip(self.row(a)) {
                worst = worst.max((*x - *y).abs());
            }
        }
        worst
    }
}

impl<T: Real> Channel<T> for ConditionalPmf<T> {
    fn alphabet(&self) -> usize {
        self.q
    }

    fn prob(&self, input: usize, output: usize) -> T {
        self.data[input * self.q + output]
    }

    fn row_into(&self, input: usize, out: &mut [T]) {
        out.copy_from_slice(self.row(input));
    }
}

pub fn entropy_q<T: Real>(p: &Pmf<T>) -> T {
    let ln_q = T::from_usize(p.q()).unwrap().ln();
    let h = p.probs.iter().filter(|&&x| x > T::zero()).fold(T::zero(), |acc, &x| acc - x * x.ln());
    if p.q() == 1 {
        return T::zero();
    }
    h / ln_q
}

pub fn kl_q<T: Real>(p: &Pmf<T>, r: &Pmf<T>) -> Result<T> {
    if p.q() != r.q() {
        return Err(Error::DimensionMismatch(format!("alphabets {} vs {}", p.q(), r.q())));
    }
    let ln_q = T::from_usize(p.q()).unwrap().ln();
    let mut acc = T::zero();
    for (symbol, (&pi, &ri)) in p.probs.iter().zip(&r.probs).enumerate() {
        if pi == T::zero() {
            continue;
        }
        if ri == T::zero() {
            return Err(Error::SupportViolation { symbol, mass: pi.to_f64().unwrap_or(f64::NAN) });
        }
        acc = acc + pi * (pi / ri).ln();
    }
    Ok((acc / ln_q).max(T::zero()))
}

/// Output distribution induced by `source` through `channel`, computed exactly.
pub fn output_marginal<T: Real, C: Channel<T> + ?Sized>(source: &Pmf<T>, channel: &C) -> Result<Vec<T>> {
    let q = source.q();
    if channel.alphabet() != q {
        return Err(Error::DimensionMismatch(format!("source alphabet {q} vs channel {}", channel.alphabet())));
    }
    let mut marginal = vec![T::zero(); q];
    let mut row = vec![T::zero(); q];
    for (a, &pa) in source.probs.iter().enumerate() {
        if pa == T::zero() {
            continue;
        }
        channel.row_into(a, &mut row);
        for (m, &r) in marginal.iter_mut().zip(&row) {
            *m = *m + pa * r;
        }
    }
    Ok(marginal)
}

/// I_q(input; output) = sum_a source(a) * KL_q(row a || output marginal).
pub fn mutual_information_q<T: Real, C: Channel<T> + ?Sized>(source: &Pmf<T>, channel: &C) -> Result<T> {
    let q = source.q();
    let marginal = output_marginal(source, channel)?;
    let ln_q = T::from_usize(q).unwrap().ln();
    let mut row = vec![T::zero(); q];
    let mut acc = T::zero();
    for (a, &pa) in source.probs.iter().enumerate() {
        if pa == T::zero() {
            continue;
        }
        channel.row_into(a, &mut row);
        let mut kl = T::zero();
        for (&r, &m) in row.iter().zip(&marginal) {
            if r > T::zero() {
                kl = kl + r * (r / m).ln();
            }
        }
        acc = acc + pa * kl;
    }
    Ok((acc / ln_q).max(T::zero()))
}

/// Sparse i.i.d. source: each entry is 0 with probability `s`, otherwise
/// uniform over the q - 1 nonzero symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    field: FieldSpec,
    s: f64,
}

impl SourceModel {
    pub fn new(field: FieldSpec, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::SparsityOutOfRange(s));
        }
        let min = 1.0 / field.q() as f64;
        if s <= min {
            return Err(Error::SparsityTooLow { s, min });
        }
        Ok(Self { field, s })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn entry_pmf(&self) -> Pmf<f64> {
        let q = self.q() as usize;
        let mut probs = vec![(1.0 - self.s) / (q as f64 - 1.0); q];
        probs[0] = self.s;
        Pmf { probs }
    }

    /// H_q of a single entry, in closed form.
    pub fn entry_entropy(&self) -> f64 {
        let q = self.q() as f64;
        let rest = 1.0 - self.s;
        let mut h = -self.s * self.s.ln();
        if rest > 0.0 {
            h -= rest * (rest / (q - 1.0)).ln();
        }
        h / q.ln()
    }
}

/// Per-entry leakage of each share, in q-ary symbols per matrix entry.
#[derive(Clone, Debug, PartialEq)]
pub struct LeakageReport {
    pub per_share: Vec<f64>,
    pub total: f64,
    pub entry_entropy: f64,
    /// `per_share[i] / entry_entropy`.
    pub relative_per_share: Vec<f64>,
    /// `total / (shares * entry_entropy)`.
    pub relative_total: f64,
}

impl LeakageReport {
    pub fn new(per_share: Vec<f64>, entry_entropy: f64) -> Self {
        let total: f64 = per_share.iter().sum();
        let rel = |x: f64| {
            if entry_entropy > 0.0 {
                x / entry_entropy
            } else {
                0.0
            }
        };
        let relative_per_share = per_share.iter().map(|&l| rel(l)).collect();
        let relative_total = rel(total / per_share.len().max(1) as f64);
        Self { per_share, total, entry_entropy, relative_per_share, relative_total }
    }

    pub fn max_relative(&self) -> f64 {
        self.relative_per_share.iter().cloned().fold(0.0, f64::max)
    }
}

/// Parameters of either sharing construction.
#[derive(Clone, Debug)]
pub enum SchemeParams {
    Pad(PadParams),
    Poly(ShareParams),
}

/// Structured channel from a source entry to one share entry.
#[derive(Clone, Debug)]
pub enum ShareChannel {
    Pad(PadChannel),
    Poly(PolyShareChannel),
}

impl Channel<f64> for ShareChannel {
    fn alphabet(&self) -> usize {
        match self {
            ShareChannel::Pad(c) => c.alphabet(),
            ShareChannel::Poly(c) => c.alphabet(),
        }
    }

    fn prob(&self, input: usize, output: usize) -> f64 {
        match self {
            ShareChannel::Pad(c) => c.prob(input, output),
            ShareChannel::Poly(c) => c.prob(input, output),
        }
    }

    fn row_into(&self, input: usize, out: &mut [f64]) {
        match self {
            ShareChannel::Pad(c) => c.row_into(input, out),
            ShareChannel::Poly(c) => c.row_into(input, out),
        }
    }
}

/// Exact conditional PMF of share `share_index` given the source entry. For
/// the one-time pad, index 0 is R and index 1 is A + R.
pub fn share_channel(params: &SchemeParams, share_index: usize) -> Result<ShareChannel> {
    match params {
        SchemeParams::Pad(p) => {
            let which = match share_index {
                0 => PadShare::Pad,
                1 => PadShare::Padded,
                i => return Err(Error::InvalidParams(format!("one-time pad has 2 shares, asked for {i}"))),
            };
            Ok(ShareChannel::Pad(p.channel(which)))
        }
        SchemeParams::Poly(p) => Ok(ShareChannel::Poly(p.channel(share_index)?)),
    }
}

/// Joint histogram of (input, output) symbol pairs.
#[derive(Clone, Debug)]
pub struct JointHistogram {
    q: usize,
    counts: Vec<u64>,
    n: u64,
}

impl JointHistogram {
    pub fn new(q: usize) -> Self {
        Self { q, counts: vec![0; q * q], n: 0 }
    }

    pub fn from_matrices(samples_in: &FieldMatrix, samples_out: &FieldMatrix) -> Result<Self> {
        samples_in.field().ensure_same(samples_out.field())?;
        if samples_in.dims() != samples_out.dims() {
            return Err(Error::DimensionMismatch(format!(
                "samples {:?} vs {:?}",
                samples_in.dims(),
                samples_out.dims()
            )));
        }
        let mut h = Self::new(samples_in.field().q() as usize);
        for (&x, &y) in samples_in.data().iter().zip(samples_out.data()) {
            h.push(x as usize, y as usize);
        }
        Ok(h)
    }

    pub fn push(&mut self, x: usize, y: usize) {
        self.counts[x * self.q + y] += 1;
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.q, other.q);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
    }

    pub fn samples(&self) -> u64 {
        self.n
    }

    fn marginals(counts: &[u64], q: usize) -> (Vec<u64>, Vec<u64>) {
        let mut mx = vec![0u64; q];
        let mut my = vec![0u64; q];
        for x in 0..q {
            for y in 0..q {
                let c = counts[x * q + y];
                mx[x] += c;
                my[y] += c;
            }
        }
        (mx, my)
    }

    fn plug_in_of(counts: &[u64], q: usize, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let (mx, my) = Self::marginals(counts, q);
        let nf = n as f64;
        let mut acc = 0.0;
        for x in 0..q {
            if mx[x] == 0 {
                continue;
            }
            for y in 0..q {
                let c = counts[x * q + y];
                if c > 0 {
                    let c = c as f64;
                    acc += c / nf * (c * nf / (mx[x] as f64 * my[y] as f64)).ln();
                }
            }
        }
        (acc / (q as f64).ln()).max(0.0)
    }

    fn miller_madow_of(counts: &[u64], q: usize, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let (mx, my) = Self::marginals(counts, q);
        let kx = mx.iter().filter(|&&c| c > 0).count() as f64;
        let ky = my.iter().filter(|&&c| c > 0).count() as f64;
        let kxy = counts.iter().filter(|&&c| c > 0).count() as f64;
        Self::plug_in_of(counts, q, n) + (kx + ky - kxy - 1.0) / (2.0 * n as f64 * (q as f64).ln())
    }

    /// Plug-in (maximum-likelihood) mutual information in q-ary units.
    pub fn plug_in_mi(&self) -> f64 {
        Self::plug_in_of(&self.counts, self.q, self.n)
    }

    /// Plug-in estimate with the first-order Miller-Madow bias correction
    /// `(Kx + Ky - Kxy - 1) / (2 N ln q)`, K counting occupied cells.
    pub fn miller_madow_mi(&self) -> f64 {
        Self::miller_madow_of(&self.counts, self.q, self.n)
    }

    /// Standard error of an estimator by multinomial bootstrap of the histogram.
    pub fn bootstrap_se(&self, estimator: MiEstimator, replicates: usize, seed: u64) -> f64 {
        if self.n == 0 || replicates < 2 {
            return 0.0;
        }
        let mut rng = rng::stream(seed, rng::domain::BOOTSTRAP, 0);
        let mut values = Vec::with_capacity(replicates);
        let mut resampled = vec![0u64; self.counts.len()];
        for _ in 0..replicates {
            let mut remaining_n = self.n;
            let mut remaining_mass = self.n;
            for (slot, &c) in resampled.iter_mut().zip(&self.counts) {
                if c == 0 || remaining_n == 0 {
                    *slot = 0;
                    continue;
                }
                let p = (c as f64 / remaining_mass as f64).min(1.0);
                let draw = if p >= 1.0 {
                    remaining_n
                } else {
                    Binomial::new(remaining_n, p).expect("valid binomial").sample(&mut rng)
                };
                *slot = draw;
                remaining_n -= draw;
                remaining_mass -= c;
            }
            values.push(match estimator {
                MiEstimator::PlugIn => Self::plug_in_of(&resampled, self.q, self.n),
                MiEstimator::MillerMadow => Self::miller_madow_of(&resampled, self.q, self.n),
            });
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        var.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiEstimator {
    PlugIn,
    MillerMadow,
}

/// Plug-in MI estimate from the joint histogram of entry pairs.
pub fn empirical_mi(samples_in: &FieldMatrix, samples_out: &FieldMatrix) -> Result<f64> {
    Ok(JointHistogram::from_matrices(samples_in, samples_out)?.plug_in_mi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent oracle: brute-force double sum over the joint table.
    fn brute_mi(src: &[f64], ch: &[Vec<f64>]) -> f64 {
        let q = src.len();
        let joint: Vec<Vec<f64>> = (0..q).map(|a| (0..q).map(|y| src[a] * ch[a][y]).collect()).collect();
        let py: Vec<f64> = (0..q).map(|y| (0..q).map(|a| joint[a][y]).sum()).collect();
        let mut acc = 0.0;
        for a in 0..q {
            for y in 0..q {
                if joint[a][y] > 0.0 {
                    acc += joint[a][y] * (joint[a][y] / (src[a] * py[y])).log(q as f64);
                }
            }
        }
        acc
    }

    fn random_pmf(raw: &[f64]) -> Pmf<f64> {
        let s: f64 = raw.iter().sum();
        let mut p: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let fix = 1.0 - p.iter().sum::<f64>();
        p[0] += fix;
        Pmf::new(p).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy_q(&Pmf::<f64>::uniform(89)), 1.0, epsilon = 1e-12);
        assert_eq!(entropy_q(&Pmf::<f64>::point_mass(89, 3)), 0.0);
        let src = SourceModel::new(FieldSpec::prime(89).unwrap(), 0.95).unwrap();
        let h = entropy_q(&src.entry_pmf());
        assert!(h > 0.0 && h < 1.0);
        // value cross-checked with a 50-digit mpmath evaluation
        assert_abs_diff_eq!(h, 0.094_100_312_272_564_17, epsilon = 1e-15);
        assert_abs_diff_eq!(src.entry_entropy(), h, epsilon = 1e-15);
        assert_abs_diff_eq!(entropy_q(&Pmf::<f32>::uniform(5)), 1.0f32, epsilon = 1e-6);
    }

    #[test]
    fn kl_examples() {
        let p = random_pmf(&[0.3, 0.2, 0.5, 0.1, 0.9]);
        assert_abs_diff_eq!(kl_q(&p, &p).unwrap(), 0.0, epsilon = 1e-15);
        let pm = Pmf::<f64>::point_mass(5, 0);
        assert_abs_diff_eq!(kl_q(&pm, &Pmf::uniform(5)).unwrap(), 1.0, epsilon = 1e-12);
        let r = Pmf::new(vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        match kl_q(&p, &r) {
            Err(Error::SupportViolation { symbol, .. }) => assert_eq!(symbol, 2),
            other => panic!("expected support violation, got {other:?}"),
        }
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.5, 0.4]).is_err());
        assert!(Pmf::new(vec![1.2, -0.2]).is_err());
        assert!(Pmf::<f64>::new(vec![]).is_err());
        assert!(Pmf::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn mi_examples() {
        let q = 7;
        let src = Pmf::<f64>::uniform(q);
        let id = ConditionalPmf::<f64>::identity(q);
        assert_abs_diff_eq!(mutual_information_q(&src, &id).unwrap(), 1.0, epsilon = 1e-12);
        let row = random_pmf(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let same = ConditionalPmf::new(vec![row; q]).unwrap();
        let skewed = random_pmf(&[5.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(mutual_information_q(&skewed, &same).unwrap(), 0.0, epsilon = 1e-15);
        assert!(mutual_information_q(&Pmf::<f64>::uniform(3), &id).is_err());
    }

    #[test]
    fn source_model_validation() {
        let f = FieldSpec::prime(89).unwrap();
        assert!(matches!(SourceModel::new(f.clone(), 1.0 / 89.0), Err(Error::SparsityTooLow { .. })));
        assert!(SourceModel::new(f.clone(), 1.5).is_err());
        assert!(SourceModel::new(f.clone(), 1.0).is_ok());
        assert_eq!(SourceModel::new(f, 1.0).unwrap().entry_entropy(), 0.0);
    }

    #[test]
    fn empirical_mi_identity_matches_entropy() {
        let f = FieldSpec::prime(5).unwrap();
        let data: Vec<u32> = (0..1000u32).map(|i| (i * 7 + i / 3) % 5).collect();
        let m = FieldMatrix::new(f, 10, 100, data).unwrap();
        let h = JointHistogram::from_matrices(&m, &m).unwrap();
        let counts: Vec<f64> = (0..5).map(|v| m.data().iter().filter(|&&x| x == v).count() as f64 / 1000.0).collect();
        let ent = entropy_q(&Pmf::new(counts).unwrap());
        assert_abs_diff_eq!(empirical_mi(&m, &m).unwrap(), ent, epsilon = 1e-12);
        assert_abs_diff_eq!(h.plug_in_mi(), ent, epsilon = 1e-12);
        let other = FieldMatrix::zeros(m.field().clone(), 5, 200);
        assert!(empirical_mi(&m, &other).is_err());
    }

    #[test]
    fn empirical_mi_independent_shrinks() {
        let f = FieldSpec::prime(5).unwrap();
        let mut last = f64::INFINITY;
        for (k, n) in [1_000usize, 100_000].into_iter().enumerate() {
            let mut r = rng::stream(3, 0, k as u64);
            let x: Vec<u32> = (0..n).map(|_| r.random_range(0..5u32)).collect();
            let y: Vec<u32> = (0..n).map(|_| r.random_range(0..5u32)).collect();
            let mx = FieldMatrix::new(f.clone(), 1, n, x).unwrap();
            let my = FieldMatrix::new(f.clone(), 1, n, y).unwrap();
            let est = empirical_mi(&mx, &my).unwrap();
            // plug-in bias for independent variables is (q-1)^2 / (2 N ln q)
            let band = 5.0 * 16.0 / (2.0 * n as f64 * 5f64.ln());
            assert!(est < band, "n={n}: {est} >= {band}");
            assert!(est < last);
            last = est;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn mi_matches_brute_force(
            q in prop_oneof![Just(3usize), Just(5), Just(7)],
            raw in proptest::collection::vec(0.01f64..1.0, 7 * 8),
        ) {
            let src = random_pmf(&raw[..q]);
            let rows: Vec<Vec<f64>> = (0..q)
                .map(|a| random_pmf(&raw[7 + a * q % 40..7 + a * q % 40 + q]).probs().to_vec())
                .collect();
            let cond = ConditionalPmf::new(rows.iter().map(|r| Pmf::new(r.clone()).unwrap()).collect()).unwrap();
            let fast = mutual_information_q(&src, &cond).unwrap();
            prop_assert!((fast - brute_mi(src.probs(), &rows)).abs() < 1e-12);
        }

        #[test]
        fn kl_nonnegative(raw in proptest::collection::vec(0.001f64..1.0, 12)) {
            let p = random_pmf(&raw[..6]);
            let r = random_pmf(&raw[6..]);
            prop_assert!(kl_q(&p, &r).unwrap() >= 0.0);
        }

        #[test]
        fn mi_zero_iff_rows_identical(
            raw in proptest::collection::vec(0.01f64..1.0, 20),
            perturb in 0usize..2,
        ) {
            let q = 4;
            let base = random_pmf(&raw[..q]);
            let src = random_pmf(&raw[16..20]);
            let mut rows = vec![base.clone(); q];
            if perturb == 1 {
                rows[2] = random_pmf(&raw[4..8]);
            }
            let cond = ConditionalPmf::new(rows).unwrap();
            let mi = mutual_information_q(&src, &cond).unwrap();
            let identical = cond.max_row_distance() < 1e-12;
            prop_assert_eq!(mi < 1e-10, identical);
        }
    }
}

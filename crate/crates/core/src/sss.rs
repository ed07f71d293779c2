//! Sparse polynomial sharing with threshold 2: share `i` is `A + alpha_i R`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{parse_matrix_header, FieldMatrix, FieldSpec};
use crate::otp::{check_prob, xlogx_over};
use crate::rng::{self, StreamRng};
use crate::stats::{mutual_information_q, Channel, LeakageReport, SourceModel};

/// Conditional PMF parameters of `R` plus the evaluation points.
///
/// Given `A = 0`: `R = 0` with probability `p1`, otherwise uniform over the
/// nonzero symbols. Given `A = a != 0`: each special symbol `-a / alpha_j`
/// has mass `ps`, the other `q - n` symbols share the rest evenly.
#[derive(Clone, Debug, PartialEq)]
pub struct ShareParams {
    field: FieldSpec,
    alphas: Vec<u32>,
    alpha_invs: Vec<u32>,
    p1: f64,
    /// `1 - p1`, kept separately so it stays accurate when `p1` is near 1.
    p1_comp: f64,
    ps: f64,
}

impl ShareParams {
    pub fn new(field: FieldSpec, alphas: Vec<u32>, p1: f64, ps: f64) -> Result<Self> {
        let n = alphas.len();
        if n < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 shares, got {n}")));
        }
        if n as u64 >= field.q() as u64 {
            return Err(Error::InvalidParams(format!("share count {n} must be below q = {}", field.q())));
        }
        for (i, &a) in alphas.iter().enumerate() {
            if a == 0 || a >= field.q() {
                return Err(Error::InvalidParams(format!("evaluation point {a} must be a nonzero element of {field}")));
            }
            if alphas[..i].contains(&a) {
                return Err(Error::EqualEvaluationPoints(a));
            }
        }
        check_prob("p1", p1)?;
        check_prob("ps", ps)?;
        if n as f64 * ps > 1.0 + 1e-12 {
            return Err(Error::InvalidProbability {
                name: "ps",
                value: ps,
                msg: format!("n * ps = {} exceeds 1", n as f64 * ps),
            });
        }
        let alpha_invs = alphas.iter().map(|&a| field.inv_raw(a)).collect::<Result<_>>()?;
        Ok(Self { field, alphas, alpha_invs, p1, p1_comp: 1.0 - p1, ps })
    }

    /// Evaluation points `1, 2, ..., n`.
    pub fn with_default_alphas(field: FieldSpec, n: usize, p1: f64, ps: f64) -> Result<Self> {
        if n as u64 >= field.q() as u64 {
            return Err(Error::InvalidParams(format!("share count {n} must be below q = {}", field.q())));
        }
        Self::new(field, (1..=n as u32).collect(), p1, ps)
    }

    /// Classical threshold sharing: `R` uniform and independent of `A`.
    pub fn uniform(field: FieldSpec, n: usize) -> Result<Self> {
        let u = 1.0 / field.q() as f64;
        Self::with_default_alphas(field, n, u, u)
    }

    /// Same probabilities, different evaluation points.
    pub fn with_alphas(&self, alphas: Vec<u32>) -> Result<Self> {
        Ok(Self::new(self.field.clone(), alphas, self.p1, self.ps)?.with_p1_complement(self.p1_comp))
    }

    pub(crate) fn with_p1_complement(mut self, p1_comp: f64) -> Self {
        debug_assert!((1.0 - p1_comp - self.p1).abs() <= 4.0 * f64::EPSILON);
        self.p1_comp = p1_comp;
        self
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[u32] {
        &self.alphas
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn ps(&self) -> f64 {
        self.ps
    }

    pub fn p1inv(&self) -> f64 {
        self.p1_comp / (self.field.q() as f64 - 1.0)
    }

    pub fn pcinv(&self) -> f64 {
        ((1.0 - self.n() as f64 * self.ps) / (self.field.q() as f64 - self.n() as f64)).max(0.0)
    }

    /// Sparsity of every share: `p1 s + ps (1 - s)`.
    pub fn share_sparsity(&self, s: f64) -> f64 {
        self.p1 * s + self.ps * (1.0 - s)
    }

    pub fn channel(&self, share_index: usize) -> Result<PolyShareChannel> {
        if share_index >= self.n() {
            return Err(Error::InvalidParams(format!(
                "share index {share_index} out of range for {} shares",
                self.n()
            )));
        }
        let alpha = self.alphas[share_index];
        // y = a (1 - alpha_i / alpha_j) when r = -a / alpha_j
        let ratios = self.alpha_invs.iter().map(|&inv| self.field.sub_raw(1, self.field.mul_raw(alpha, inv))).collect();
        Ok(PolyShareChannel {
            field: self.field.clone(),
            ratios,
            p1: self.p1,
            p1inv: self.p1inv(),
            ps: self.ps,
            pcinv: self.pcinv(),
        })
    }

    fn draw_entry(&self, rng: &mut StreamRng, a: u32) -> u32 {
        let q = self.field.q();
        let u: f64 = rng.random();
        if a == 0 {
            return if u < self.p1 { 0 } else { rng.random_range(1..q) };
        }
        let n = self.n();
        let minus_a = self.field.neg_raw(a);
        if u < n as f64 * self.ps {
            let j = rng.random_range(0..n);
            return self.field.mul_raw(minus_a, self.alpha_invs[j]);
        }
        let mut specials: Vec<u32> = self.alpha_invs.iter().map(|&inv| self.field.mul_raw(minus_a, inv)).collect();
        specials.sort_unstable();
        let mut v = rng.random_range(0..q - n as u32);
        for sp in specials {
            if sp <= v {
                v += 1;
            }
        }
        v
    }
}

/// Exact channel from a source entry to the entry of one share.
#[derive(Clone, Debug)]
pub struct PolyShareChannel {
    field: FieldSpec,
    ratios: Vec<u32>,
    p1: f64,
    p1inv: f64,
    ps: f64,
    pcinv: f64,
}

impl Channel<f64> for PolyShareChannel {
    fn alphabet(&self) -> usize {
        self.field.q() as usize
    }

    fn prob(&self, input: usize, output: usize) -> f64 {
        let (a, y) = (input as u32, output as u32);
        if a == 0 {
            return if y == 0 { self.p1 } else { self.p1inv };
        }
        if self.ratios.iter().any(|&c| self.field.mul_raw(a, c) == y) {
            self.ps
        } else {
            self.pcinv
        }
    }

    fn row_into(&self, input: usize, out: &mut [f64]) {
        let a = input as u32;
        if a == 0 {
            out.fill(self.p1inv);
            out[0] = self.p1;
            return;
        }
        out.fill(self.pcinv);
        for &c in &self.ratios {
            out[self.field.mul_raw(a, c) as usize] = self.ps;
        }
    }
}

/// Output of [`deal`]. The pad stays with the dealer.
#[derive(Clone, Debug, PartialEq)]
pub struct ShareSet {
    alphas: Vec<u32>,
    shares: Vec<FieldMatrix>,
    pad: FieldMatrix,
}

impl ShareSet {
    pub fn alphas(&self) -> &[u32] {
        &self.alphas
    }

    /// Worker-facing shares, in evaluation-point order.
    pub fn shares(&self) -> &[FieldMatrix] {
        &self.shares
    }

    pub fn pad(&self) -> &FieldMatrix {
        &self.pad
    }

    pub fn into_shares(self) -> Vec<FieldMatrix> {
        self.shares
    }
}

/// Sample `R` and evaluate `A + alpha_i R` at every point.
pub fn deal(a: &FieldMatrix, params: &ShareParams, seed: u64) -> Result<ShareSet> {
    a.field().ensure_same(&params.field)?;
    let pad = rng::map_entries(a, seed, rng::domain::SHARE, |r, x| params.draw_entry(r, x));
    let shares = params.alphas.iter().map(|&alpha| a.add_scaled(&pad, alpha)).collect::<Result<_>>()?;
    Ok(ShareSet { alphas: params.alphas.clone(), shares, pad })
}

/// Lagrange interpolation at zero from two shares.
pub fn reconstruct(share_i: &FieldMatrix, alpha_i: u32, share_j: &FieldMatrix, alpha_j: u32) -> Result<FieldMatrix> {
    let field = share_i.field();
    field.ensure_same(share_j.field())?;
    if share_i.dims() != share_j.dims() {
        return Err(Error::DimensionMismatch(format!("shares {:?} vs {:?}", share_i.dims(), share_j.dims())));
    }
    if alpha_i == alpha_j {
        return Err(Error::EqualEvaluationPoints(alpha_i));
    }
    let denom = field.inv_raw(field.sub_raw(alpha_j, alpha_i))?;
    let ci = field.mul_raw(alpha_j, denom);
    let cj = field.neg_raw(field.mul_raw(alpha_i, denom));
    share_i.scale(ci).add_scaled(share_j, cj)
}

/// Leakage of every share, evaluated by the closed form and by the channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SssLeakage {
    pub closed_form: LeakageReport,
    pub channel: LeakageReport,
}

/// Closed-form per-share leakage in q-ary units per entry.
pub fn closed_form_share_leakage(q: u32, n: usize, p1: f64, ps: f64, s: f64) -> f64 {
    let qf = q as f64;
    let nf = n as f64;
    let s_d = p1 * s + ps * (1.0 - s);
    let s_dinv = (1.0 - s_d) / (qf - 1.0);
    let p1inv = (1.0 - p1) / (qf - 1.0);
    let pcinv = ((1.0 - nf * ps) / (qf - nf)).max(0.0);
    let l = s * (xlogx_over(p1, s_d) + (qf - 1.0) * xlogx_over(p1inv, s_dinv))
        + (1.0 - s)
            * (xlogx_over(ps, s_d) + (nf - 1.0) * xlogx_over(ps, s_dinv) + (qf - nf) * xlogx_over(pcinv, s_dinv));
    (l / qf.ln()).max(0.0)
}

pub fn sss_leakage(params: &ShareParams, source: &SourceModel) -> Result<SssLeakage> {
    source.field().ensure_same(&params.field)?;
    let h = source.entry_entropy();
    let cf = closed_form_share_leakage(params.field.q(), params.n(), params.p1, params.ps, source.s());
    let src = source.entry_pmf();
    let per_share =
        (0..params.n()).map(|i| mutual_information_q(&src, &params.channel(i)?)).collect::<Result<Vec<_>>>()?;
    Ok(SssLeakage {
        closed_form: LeakageReport::new(vec![cf; params.n()], h),
        channel: LeakageReport::new(per_share, h),
    })
}

/// Serialize one share: `alpha <v> share-index <i> n <n>` then the matrix.
pub fn share_to_text(share: &FieldMatrix, alpha: u32, index: usize, n: usize) -> String {
    format!("alpha {alpha} share-index {index} n {n}\n{}", share.to_text())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShareFile {
    pub alpha: u32,
    pub index: usize,
    pub n: usize,
    pub share: FieldMatrix,
}

pub fn share_from_text(text: &str) -> Result<ShareFile> {
    let (first, rest) = text.split_once('\n').ok_or(Error::Parse { line: 1, msg: "missing share header".into() })?;
    let tokens: Vec<&str> = first.split_whitespace().collect();
    let bad = || Error::Parse { line: 1, msg: format!("expected `alpha <v> share-index <i> n <n>`, got `{first}`") };
    if tokens.len() != 6 || tokens[0] != "alpha" || tokens[2] != "share-index" || tokens[4] != "n" {
        return Err(bad());
    }
    let alpha: u32 = tokens[1].parse().map_err(|_| bad())?;
    let index: usize = tokens[3].parse().map_err(|_| bad())?;
    let n: usize = tokens[5].parse().map_err(|_| bad())?;
    let header = rest.lines().next().unwrap_or("");
    let (q, _, _) = parse_matrix_header(header, 2)?;
    if alpha == 0 || alpha >= q {
        return Err(Error::Parse { line: 1, msg: format!("alpha {alpha} is not a nonzero element of GF({q})") });
    }
    let share = FieldMatrix::from_text(rest).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line: line + 1, msg },
        other => other,
    })?;
    Ok(ShareFile { alpha, index, n, share })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ConditionalPmf;
    use approx::assert_abs_diff_eq;

    fn f89() -> FieldSpec {
        FieldSpec::prime(89).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ShareParams::new(f89(), vec![1], 0.5, 0.1).is_err());
        assert!(matches!(ShareParams::new(f89(), vec![1, 1], 0.5, 0.1), Err(Error::EqualEvaluationPoints(1))));
        assert!(ShareParams::new(f89(), vec![0, 1], 0.5, 0.1).is_err());
        assert!(ShareParams::new(f89(), vec![1, 2, 3], 0.5, 0.4).is_err());
        assert!(ShareParams::with_default_alphas(FieldSpec::prime(5).unwrap(), 5, 0.5, 0.1).is_err());
    }

    #[test]
    fn channel_specials_for_two_shares() {
        let p = ShareParams::with_default_alphas(f89(), 2, 0.9, 0.2).unwrap();
        let f = f89();
        let inv2 = f.inv_raw(2).unwrap();
        for a in 1..89u32 {
            let mut row = vec![0.0; 89];
            p.channel(0).unwrap().row_into(a as usize, &mut row);
            // share 1 is a + r; specials r = -a and r = -a/2 give y = 0 and y = a/2
            assert_eq!(row[0], 0.2);
            assert_eq!(row[f.mul_raw(a, inv2) as usize], 0.2);
            assert_eq!(row.iter().filter(|&&x| x == 0.2).count(), 2);
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        let ch = ConditionalPmf::from_channel(&p.channel(1).unwrap());
        for a in 0..89 {
            for y in 0..89 {
                assert_eq!(ch.row(a)[y], p.channel(1).unwrap().prob(a, y));
            }
        }
    }

    #[test]
    fn leakage_paths_agree() {
        let src = SourceModel::new(f89(), 0.95).unwrap();
        for (n, p1, ps) in [(2, 0.93, 0.22), (3, 0.5, 0.1), (5, 0.99, 0.04)] {
            let p = ShareParams::with_default_alphas(f89(), n, p1, ps).unwrap();
            let l = sss_leakage(&p, &src).unwrap();
            for (a, b) in l.closed_form.per_share.iter().zip(&l.channel.per_share) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
            }
        }
        let u = sss_leakage(&ShareParams::uniform(f89(), 3).unwrap(), &src).unwrap();
        assert!(u.channel.total < 1e-14 && u.closed_form.total < 1e-14);
    }

    #[test]
    fn deal_corner_and_reconstruct() {
        let f = f89();
        let a = FieldMatrix::from_rows(f.clone(), &[vec![0, 4, 0], vec![7, 0, 88]]).unwrap();
        let p = ShareParams::with_default_alphas(f.clone(), 3, 1.0, 0.0).unwrap();
        let set = deal(&a, &p, 5).unwrap();
        for share in set.shares() {
            for (x, y) in a.data().iter().zip(share.data()) {
                if *x == 0 {
                    assert_eq!(*y, 0);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let r = reconstruct(&set.shares()[i], set.alphas()[i], &set.shares()[j], set.alphas()[j]).unwrap();
                    assert_eq!(r, a);
                }
            }
        }
        assert!(reconstruct(&set.shares()[0], 1, &set.shares()[1], 1).is_err());
    }

    #[test]
    fn nonspecial_draws_avoid_specials() {
        let f = FieldSpec::prime(7).unwrap();
        let p = ShareParams::with_default_alphas(f.clone(), 3, 0.5, 0.0).unwrap();
        let a = FieldMatrix::new(f.clone(), 1, 600, vec![3; 600]).unwrap();
        let set = deal(&a, &p, 1).unwrap();
        let specials: Vec<u32> = (1..=3).map(|al| f.div_raw(f.neg_raw(3), al).unwrap()).collect();
        let mut seen = [0usize; 7];
        for &r in set.pad().data() {
            assert!(!specials.contains(&r));
            seen[r as usize] += 1;
        }
        assert_eq!(seen.iter().filter(|&&c| c > 0).count(), 4);
    }

    #[test]
    fn share_text_round_trip() {
        let f = FieldSpec::gf256();
        let m = FieldMatrix::from_rows(f, &[vec![1, 2], vec![255, 0]]).unwrap();
        let text = share_to_text(&m, 3, 2, 4);
        let back = share_from_text(&text).unwrap();
        assert_eq!(back, ShareFile { alpha: 3, index: 2, n: 4, share: m });
        assert!(share_from_text("alpha 3 share-index 2\nq 89 rows 1 cols 1\n0\n").is_err());
    }
}

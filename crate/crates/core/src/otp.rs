//! Sparse one-time pad: shares `(R, A + R)` with `R` drawn conditionally on `A`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, FieldSpec};
use crate::rng::{self, StreamRng};
use crate::stats::{mutual_information_q, Channel, LeakageReport, SourceModel};

const ROW_TOL: f64 = 1e-12;

pub(crate) fn check_prob(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidProbability { name, value, msg: "must lie in [0, 1]".into() });
    }
    Ok(())
}

/// `x ln(x / y)` with the `0 ln 0 = 0` convention.
pub(crate) fn xlogx_over(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Conditional PMF parameters of the pad.
///
/// Given `A = 0`: `R = 0` with probability `p1`, otherwise uniform over the
/// nonzero symbols. Given `A = a != 0`: `R = 0` with `p2`, `R = -a` with `p3`,
/// otherwise uniform over the remaining `q - 2` symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct PadParams {
    field: FieldSpec,
    p1: f64,
    p2: f64,
    p3: f64,
}

impl PadParams {
    pub fn new(field: FieldSpec, p1: f64, p2: f64, p3: f64) -> Result<Self> {
        if field.q() < 3 {
            return Err(Error::InvalidParams(format!(
                "the pad needs q >= 3: the remainder mass is divided by q - 2 = {}",
                field.q() as i64 - 2
            )));
        }
        check_prob("p1", p1)?;
        check_prob("p2", p2)?;
        check_prob("p3", p3)?;
        if p2 + p3 > 1.0 + ROW_TOL {
            return Err(Error::InvalidProbability { name: "p2 + p3", value: p2 + p3, msg: "must not exceed 1".into() });
        }
        Ok(Self { field, p1, p2, p3 })
    }

    /// Classical one-time pad: `R` uniform and independent of `A`.
    pub fn uniform(field: FieldSpec) -> Result<Self> {
        let u = 1.0 / field.q() as f64;
        Self::new(field, u, u, u)
    }

    /// Semi-perfect pad: `p1 = p3 = p`, `p2 = (1 - p)/(q - 1)`. The padded
    /// share `A + R` is then independent of `A`.
    pub fn semi_perfect(p: f64, field: FieldSpec) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { name: "p", value: p, msg: "must lie in (0, 1)".into() });
        }
        let p2 = (1.0 - p) / (field.q() as f64 - 1.0);
        Self::new(field, p, p2, p)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn p3(&self) -> f64 {
        self.p3
    }

    pub fn p1inv(&self) -> f64 {
        (1.0 - self.p1) / (self.field.q() as f64 - 1.0)
    }

    pub fn p23inv(&self) -> f64 {
        ((1.0 - self.p2 - self.p3) / (self.field.q() as f64 - 2.0)).max(0.0)
    }

    pub fn channel(&self, share: PadShare) -> PadChannel {
        PadChannel {
            field: self.field.clone(),
            share,
            p1: self.p1,
            p1inv: self.p1inv(),
            p2: self.p2,
            p3: self.p3,
            p23inv: self.p23inv(),
        }
    }
}

pub fn semi_perfect_params(p: f64, field: FieldSpec) -> Result<PadParams> {
    PadParams::semi_perfect(p, field)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadShare {
    /// `R`
    Pad,
    /// `A + R`
    Padded,
}

/// Exact channel from a source entry to one pad share entry.
#[derive(Clone, Debug)]
pub struct PadChannel {
    field: FieldSpec,
    share: PadShare,
    p1: f64,
    p1inv: f64,
    p2: f64,
    p3: f64,
    p23inv: f64,
}

impl Channel<f64> for PadChannel {
    fn alphabet(&self) -> usize {
        self.field.q() as usize
    }

    fn prob(&self, input: usize, output: usize) -> f64 {
        let a = input as u32;
        let y = output as u32;
        if a == 0 {
            return if y == 0 { self.p1 } else { self.p1inv };
        }
        let (at_zero, at_minus_a) = match self.share {
            PadShare::Pad => (0, self.field.neg_raw(a)),
            PadShare::Padded => (a, 0),
        };
        if y == at_zero {
            self.p2
        } else if y == at_minus_a {
            self.p3
        } else {
            self.p23inv
        }
    }

    fn row_into(&self, input: usize, out: &mut [f64]) {
        let a = input as u32;
        if a == 0 {
            out.fill(self.p1inv);
            out[0] = self.p1;
            return;
        }
        out.fill(self.p23inv);
        match self.share {
            PadShare::Pad => {
                out[0] = self.p2;
                out[self.field.neg_raw(a) as usize] = self.p3;
            }
            PadShare::Padded => {
                out[a as usize] = self.p2;
                out[0] = self.p3;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OtpShares {
    pub pad: FieldMatrix,
    pub padded: FieldMatrix,
}

impl OtpShares {
    /// `padded - pad`, which equals the original matrix.
    pub fn reconstruct(&self) -> Result<FieldMatrix> {
        self.padded.sub(&self.pad)
    }
}

fn draw_pad_entry(field: &FieldSpec, params: &PadParams, rng: &mut StreamRng, a: u32) -> u32 {
    let q = field.q();
    let u: f64 = rng.random();
    if a == 0 {
        return if u < params.p1 { 0 } else { rng.random_range(1..q) };
    }
    let minus_a = field.neg_raw(a);
    if u < params.p2 {
        0
    } else if u < params.p2 + params.p3 {
        minus_a
    } else {
        // uniform over the q - 2 symbols outside {0, -a}
        let k = rng.random_range(1..q - 1);
        if k >= minus_a {
            k + 1
        } else {
            k
        }
    }
}

/// Sample `R` entrywise from the conditional rows and return `(R, A + R)`.
/// Each row uses its own stream derived from `seed`, so the result does not
/// depend on the thread count.
pub fn sample_pad(a: &FieldMatrix, params: &PadParams, seed: u64) -> Result<OtpShares> {
    a.field().ensure_same(&params.field)?;
    let field = params.field.clone();
    let pad = rng::map_entries(a, seed, rng::domain::PAD, |r, x| draw_pad_entry(&field, params, r, x));
    let padded = a.add(&pad)?;
    Ok(OtpShares { pad, padded })
}

/// `(s_R, s_{A+R})` for a source of sparsity `s`.
pub fn predicted_sparsity(params: &PadParams, s: f64) -> (f64, f64) {
    (params.p1 * s + params.p2 * (1.0 - s), params.p1 * s + params.p3 * (1.0 - s))
}

/// `(L1, L2)` in q-ary units per entry, from the closed-form expressions.
pub fn closed_form_leakage(params: &PadParams, s: f64) -> (f64, f64) {
    let qf = params.field.q() as f64;
    let (s_r, s_ar) = predicted_sparsity(params, s);
    let inv = |x: f64| (1.0 - x) / (qf - 1.0);
    let (p1, p2, p3, p1inv, p23inv) = (params.p1, params.p2, params.p3, params.p1inv(), params.p23inv());
    let (s_rinv, s_arinv) = (inv(s_r), inv(s_ar));
    let l1 = s * (xlogx_over(p1, s_r) + (qf - 1.0) * xlogx_over(p1inv, s_rinv))
        + (1.0 - s) * (xlogx_over(p2, s_r) + xlogx_over(p3, s_rinv) + (qf - 2.0) * xlogx_over(p23inv, s_rinv));
    let l2 = s * (xlogx_over(p1, s_ar) + (qf - 1.0) * xlogx_over(p1inv, s_arinv))
        + (1.0 - s) * (xlogx_over(p2, s_arinv) + xlogx_over(p3, s_ar) + (qf - 2.0) * xlogx_over(p23inv, s_arinv));
    let ln_q = qf.ln();
    ((l1 / ln_q).max(0.0), (l2 / ln_q).max(0.0))
}

/// Per-entry leakage of both shares, computed from the exact channels.
pub fn otp_leakage(params: &PadParams, source: &SourceModel) -> Result<LeakageReport> {
    source.field().ensure_same(&params.field)?;
    let src = source.entry_pmf();
    let l1 = mutual_information_q(&src, &params.channel(PadShare::Pad))?;
    let l2 = mutual_information_q(&src, &params.channel(PadShare::Padded))?;
    Ok(LeakageReport::new(vec![l1, l2], source.entry_entropy()))
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
    fn rejects_bad_params() {
        let f2 = FieldSpec::prime(2).unwrap();
        assert!(PadParams::new(f2, 0.5, 0.5, 0.0).unwrap_err().to_string().contains("q - 2"));
        assert!(PadParams::new(f89(), 1.1, 0.0, 0.0).is_err());
        assert!(PadParams::new(f89(), 0.5, 0.7, 0.7).is_err());
        assert!(PadParams::semi_perfect(1.0, f89()).is_err());
        assert!(PadParams::semi_perfect(0.0, f89()).is_err());
    }

    #[test]
    fn channel_rows_match_definition() {
        let p = PadParams::new(f89(), 0.9, 0.1, 0.2).unwrap();
        let ch = ConditionalPmf::from_channel(&p.channel(PadShare::Pad));
        assert_eq!(ch.row(0)[0], 0.9);
        assert_abs_diff_eq!(ch.row(0)[5], 0.1 / 88.0, epsilon = 1e-15);
        assert_eq!(ch.row(7)[0], 0.1);
        assert_eq!(ch.row(7)[82], 0.2);
        assert_abs_diff_eq!(ch.row(7)[3], 0.7 / 87.0, epsilon = 1e-15);
        for a in 0..89 {
            let total: f64 = ch.row(a).iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            for y in 0..89 {
                assert_eq!(ch.row(a)[y], p.channel(PadShare::Pad).prob(a, y));
                assert_eq!(
                    ConditionalPmf::from_channel(&p.channel(PadShare::Padded)).row(a)[y],
                    p.channel(PadShare::Padded).prob(a, y)
                );
            }
        }
    }

    #[test]
    fn predicted_sparsity_examples() {
        let corner = PadParams::new(f89(), 1.0, 1.0, 0.0).unwrap();
        assert_eq!(predicted_sparsity(&corner, 0.7), (1.0, 0.7));
        let (a, b) = predicted_sparsity(&PadParams::new(f89(), 0.9, 0.1, 0.2).unwrap(), 0.95);
        assert_abs_diff_eq!(a, 0.86, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.865, epsilon = 1e-12);
        let (a, b) = predicted_sparsity(&PadParams::uniform(f89()).unwrap(), 0.95);
        assert_abs_diff_eq!(a, 1.0 / 89.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 1.0 / 89.0, epsilon = 1e-15);
    }

    #[test]
    fn semi_perfect_sparsities() {
        let f = FieldSpec::gf256();
        let p = semi_perfect_params(0.5, f).unwrap();
        let (s_r, s_ar) = predicted_sparsity(&p, 0.93);
        assert_abs_diff_eq!(s_ar, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s_r, 0.5 * (0.93 * 256.0 - 1.0) / 255.0 + 0.07 / 255.0, epsilon = 1e-15);
        let u = semi_perfect_params(1.0 / 89.0, f89()).unwrap();
        let (a, b) = predicted_sparsity(&u, 0.9);
        assert_abs_diff_eq!(a, 1.0 / 89.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 1.0 / 89.0, epsilon = 1e-15);
    }

    #[test]
    fn leakage_closed_form_matches_channel() {
        let src = SourceModel::new(f89(), 0.95).unwrap();
        for (p1, p2, p3) in [(0.9, 0.1, 0.2), (0.5, 0.3, 0.3), (1.0, 1.0, 0.0), (0.2, 0.0, 1.0)] {
            let p = PadParams::new(f89(), p1, p2, p3).unwrap();
            let r = otp_leakage(&p, &src).unwrap();
            let (l1, l2) = closed_form_leakage(&p, 0.95);
            assert_abs_diff_eq!(r.per_share[0], l1, epsilon = 1e-12);
            assert_abs_diff_eq!(r.per_share[1], l2, epsilon = 1e-12);
        }
        let corner = otp_leakage(&PadParams::new(f89(), 1.0, 1.0, 0.0).unwrap(), &src).unwrap();
        assert_abs_diff_eq!(corner.per_share[1], src.entry_entropy(), epsilon = 1e-12);
        let uniform = otp_leakage(&PadParams::uniform(f89()).unwrap(), &src).unwrap();
        assert!(uniform.total < 1e-13);
    }

    #[test]
    fn sampling_corner_and_determinism() {
        let f = f89();
        let a = FieldMatrix::from_rows(f.clone(), &[vec![0, 3, 0, 88], vec![5, 0, 0, 1]]).unwrap();
        let corner = PadParams::new(f.clone(), 1.0, 1.0, 0.0).unwrap();
        let sh = sample_pad(&a, &corner, 1).unwrap();
        assert_eq!(sh.pad, FieldMatrix::zeros(f.clone(), 2, 4));
        assert_eq!(sh.padded, a);
        let p = PadParams::new(f, 0.6, 0.2, 0.3).unwrap();
        let x = sample_pad(&a, &p, 9).unwrap();
        assert_eq!(x, sample_pad(&a, &p, 9).unwrap());
        assert_eq!(x.reconstruct().unwrap(), a);
        assert_ne!(x, sample_pad(&a, &p, 10).unwrap());
    }

    #[test]
    fn sampling_gf256_round_trip() {
        let f = FieldSpec::gf256();
        let data: Vec<u32> = (0..256).collect();
        let a = FieldMatrix::new(f.clone(), 16, 16, data).unwrap();
        let p = PadParams::new(f, 0.3, 0.3, 0.3).unwrap();
        let sh = sample_pad(&a, &p, 3).unwrap();
        assert_eq!(sh.reconstruct().unwrap(), a);
    }
}

//! Leakage-minimizing parameters for both constructions, and the largest
//! semi-perfect pad sparsity meeting a leakage budget.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{bisect, real_cubic_roots};
use crate::otp::{closed_form_leakage, PadParams};
use crate::sss::{closed_form_share_leakage, ShareParams};
use crate::stats::{LeakageReport, SourceModel};

/// Optimizer output.
#[derive(Clone, Debug)]
pub struct SolveResult<P> {
    pub params: P,
    pub leakage: LeakageReport,
    /// Relative residual `|lhs - rhs| / max(|lhs|, |rhs|)` of the first-order
    /// condition at the returned parameters.
    pub residual: f64,
    /// Largest absolute violation of the linear sparsity constraints.
    pub constraint_residual: f64,
    /// Scaled residual of the explicit polynomial (the pad's cubic in `p1`,
    /// the sharing polynomial in `ps`) at an interior optimum.
    pub polynomial_residual: Option<f64>,
    pub iterations: usize,
    /// Whether the optimum lies on the boundary of the feasible interval
    /// rather than at a stationary point.
    pub on_boundary: bool,
}

fn relative_gap(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

fn require_sparsity(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidProbability { name, value: v, msg: "sparsity must lie in [0, 1]".into() });
    }
    Ok(())
}

fn require_nondegenerate(source: &SourceModel) -> Result<()> {
    if source.s() >= 1.0 {
        return Err(Error::infeasible(
            "source sparsity s < 1 (an all-zero source leaves nothing to protect)",
            source.s(),
            1.0,
        ));
    }
    Ok(())
}

/// Coefficients `[c3, c2, c1, c0]` of the pad's stationarity cubic in `p1`,
/// for target sparsities `s_r` of `R` and `s_ar` of `A + R`.
pub fn otp_cubic(q: u32, s: f64, s_r: f64, s_ar: f64) -> [f64; 4] {
    let qf = q as f64;
    let qbar = (qf - 2.0).powi(2) / (qf - 1.0);
    let sigma = s_r + s_ar;
    let c = 1.0 - s - sigma;
    [
        s * s * (4.0 + qbar),
        4.0 * s * c - qbar * s * (sigma + s),
        c * c + qbar * (s * sigma + s_r * s_ar),
        -qbar * s_r * s_ar,
    ]
}

/// Feasible interval for `u = p1 s` given the target sparsities.
fn otp_interval(s: f64, s_r: f64, s_ar: f64) -> Result<(f64, f64)> {
    let t = 1.0 - s;
    let lowers =
        [("p1 >= 0", 0.0), ("p2 <= 1", s_r - t), ("p3 <= 1", s_ar - t), ("p2 + p3 <= 1", (s_r + s_ar - t) / 2.0)];
    let uppers = [("p1 <= 1", s), ("p2 >= 0", s_r), ("p3 >= 0", s_ar)];
    let lo = lowers.iter().cloned().fold(("", f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let hi = uppers.iter().cloned().fold(("", f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if lo.1 > hi.1 + 1e-15 {
        return Err(Error::infeasible(
            format!("p1*s interval: lower bound from {} must not exceed upper bound from {}", lo.0, hi.0),
            lo.1,
            hi.1,
        ));
    }
    Ok((lo.1, hi.1.max(lo.1)))
}

fn pad_from_u(source: &SourceModel, u: f64, s_r: f64, s_ar: f64) -> Result<PadParams> {
    let s = source.s();
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    let p1 = clamp(u / s);
    let p2 = clamp((s_r - u) / (1.0 - s));
    let mut p3 = clamp((s_ar - u) / (1.0 - s));
    if p2 + p3 > 1.0 {
        p3 = 1.0 - p2;
    }
    PadParams::new(source.field().clone(), p1, p2, p3)
}

fn pad_stationarity(p: &PadParams) -> f64 {
    relative_gap(p.p1() * p.p23inv() * p.p23inv(), p.p1inv() * p.p2() * p.p3())
}

/// Pad parameters minimizing `L1 + L2` subject to `S(R) = s_r` and
/// `S(A + R) = s_ar`.
pub fn solve_otp(source: &SourceModel, s_r: f64, s_ar: f64) -> Result<SolveResult<PadParams>> {
    require_sparsity("s_R", s_r)?;
    require_sparsity("s_AR", s_ar)?;
    require_nondegenerate(source)?;
    let q = source.q();
    if q < 3 {
        return Err(Error::InvalidParams("the pad needs q >= 3".into()));
    }
    let s = source.s();
    let (t, qf) = (1.0 - s, q as f64);
    let (lo, hi) = otp_interval(s, s_r, s_ar)?;
    let cubic = otp_cubic(q, s, s_r, s_ar);
    // log form of the stationarity condition; strictly increasing in u
    let g = |u: f64| {
        let (p1, p2, p3) = (u / s, (s_r - u) / t, (s_ar - u) / t);
        let p23inv = (t - s_r - s_ar + 2.0 * u) / (t * (qf - 2.0));
        let p1inv = (s - u) / (s * (qf - 1.0));
        p1.ln() + 2.0 * p23inv.ln() - p1inv.ln() - p2.ln() - p3.ln()
    };
    let bracketed = if hi > lo { bisect(g, lo, hi, 0.0, 200) } else { None };
    let (candidates, on_boundary, iterations) = match bracketed {
        Some(b) => (vec![b.root], false, b.iterations),
        None => {
            let [c3, c2, c1, c0] = cubic;
            let slack = 1e-12;
            let roots: Vec<f64> = real_cubic_roots(c3, c2, c1, c0)
                .into_iter()
                .map(|p1| p1 * s)
                .filter(|&u| u >= lo - slack && u <= hi + slack)
                .map(|u| u.clamp(lo, hi))
                .collect();
            if roots.is_empty() {
                (vec![lo, hi], true, 0)
            } else {
                (roots, false, 0)
            }
        }
    };

    let mut best: Option<(PadParams, f64)> = None;
    for u in candidates {
        let params = pad_from_u(source, u, s_r, s_ar)?;
        let (l1, l2) = closed_form_leakage(&params, s);
        if best.as_ref().is_none_or(|(_, b)| l1 + l2 < *b) {
            best = Some((params, l1 + l2));
        }
    }
    let (params, _) = best.expect("at least one candidate");
    let (l1, l2) = closed_form_leakage(&params, s);
    let (got_r, got_ar) = crate::otp::predicted_sparsity(&params, s);
    Ok(SolveResult {
        residual: pad_stationarity(&params),
        constraint_residual: (got_r - s_r).abs().max((got_ar - s_ar).abs()),
        polynomial_residual: (!on_boundary)
            .then(|| scaled_polynomial_residual(&[cubic[3], cubic[2], cubic[1], cubic[0]], params.p1())),
        iterations,
        on_boundary,
        leakage: LeakageReport::new(vec![l1, l2], source.entry_entropy()),
        params,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients `b_0 ..= b_{n+1}` of the sharing stationarity polynomial in `ps`:
/// `q~ (t~ - ps)(1 - n ps)^n - ps^n (s_bar + ps)`, with `t~ = s_d/(1-s)`,
/// `s_bar = (s - s_d)/(1-s)` and `q~ = (q-1)/(q-n)^n`.
pub fn sss_polynomial(q: u32, s: f64, s_d: f64, n: usize) -> Vec<f64> {
    let (qf, nf) = (q as f64, n as f64);
    let t = s_d / (1.0 - s);
    let s_bar = (s - s_d) / (1.0 - s);
    let q_tilde = (qf - 1.0) / (qf - nf).powi(n as i32);
    let e = |k: usize| binomial(n, k) * (-nf).powi(k as i32);
    let mut b = vec![0.0; n + 2];
    for (j, bj) in b.iter_mut().enumerate() {
        if j <= n {
            *bj += q_tilde * t * e(j);
        }
        if j >= 1 {
            *bj -= q_tilde * e(j - 1);
        }
    }
    b[n] -= s_bar;
    b[n + 1] -= 1.0;
    b
}

/// `|sum b_j x^j| / sum |b_j x^j|`.
pub fn scaled_polynomial_residual(b: &[f64], x: f64) -> f64 {
    let (mut value, mut scale, mut pow) = (0.0, 0.0, 1.0);
    for &bj in b {
        value += bj * pow;
        scale += (bj * pow).abs();
        pow *= x;
    }
    if scale == 0.0 {
        0.0
    } else {
        value.abs() / scale
    }
}

/// Feasible interval for `ps` given the target share sparsity.
fn sss_interval(s: f64, s_d: f64, n: usize) -> Result<(f64, f64)> {
    let t = 1.0 - s;
    let (lo_name, lo) = if s_d > s { ("p1 <= 1", (s_d - s) / t) } else { ("ps >= 0", 0.0) };
    let (hi_name, hi) = if s_d / t < 1.0 / n as f64 { ("p1 >= 0", s_d / t) } else { ("n ps <= 1", 1.0 / n as f64) };
    if lo > hi {
        return Err(Error::infeasible(
            format!("ps interval: lower bound from {lo_name} must not exceed upper bound from {hi_name}"),
            lo,
            hi,
        ));
    }
    Ok((lo, hi))
}

/// Sharing parameters minimizing per-share leakage at share sparsity `s_d`
/// with `n` shares and evaluation points `1..=n`.
pub fn solve_sss(source: &SourceModel, s_d: f64, n: usize) -> Result<SolveResult<ShareParams>> {
    require_sparsity("s_d", s_d)?;
    require_nondegenerate(source)?;
    let q = source.q();
    if n < 2 || n as u64 >= q as u64 {
        return Err(Error::InvalidParams(format!("share count must satisfy 2 <= n < q, got n = {n}, q = {q}")));
    }
    let floor = 1.0 / q as f64;
    if s_d < floor - 1e-15 {
        return Err(Error::infeasible("s_d >= 1/q", s_d, floor));
    }
    let (s, qf, nf) = (source.s(), q as f64, n as f64);
    let t = 1.0 - s;
    let (lo, hi) = sss_interval(s, s_d, n)?;

    // w = s (1 - p1) = s - s_d + t ps
    let gap = s - s_d;
    // clamped so rounding at the interval ends gives infinities, not NaN
    let f_w = |w: f64, ps: f64| {
        (qf - 1.0).ln() + (s - w).max(0.0).ln()
            - w.max(0.0).ln()
            - nf * ((qf - nf).ln() + ps.ln() - (1.0 - nf * ps).ln())
    };
    let (mut ps, mut iterations) = if hi - lo <= 0.0 {
        (lo, 0)
    } else {
        let b = bisect(|ps| f_w(gap + t * ps, ps), lo, hi, 1e-14, 400)
            .ok_or_else(|| Error::infeasible("sign change of the stationarity equation", lo, hi))?;
        (b.root, b.iterations)
    };
    let mut w = (gap + t * ps).max(0.0);
    // near p1 = 1 the grid in ps cannot resolve 1 - p1; bisect in w instead
    if w < 1e-3 * s && hi > lo {
        let ps_of = |w: f64| ((w - gap) / t).clamp(lo, hi);
        if let Some(b) = bisect(|w| f_w(w, ps_of(w)), (gap + t * lo).max(0.0), gap + t * hi, 0.0, 400) {
            w = b.root;
            ps = ps_of(w);
            iterations += b.iterations;
        }
    }
    let p1_comp = (w / s).clamp(0.0, 1.0);
    let params =
        ShareParams::with_default_alphas(source.field().clone(), n, 1.0 - p1_comp, ps)?.with_p1_complement(p1_comp);
    let b = sss_polynomial(q, s, s_d, n);
    let leak = closed_form_share_leakage(q, n, params.p1(), ps, s);
    let lhs = params.p1() * params.pcinv().powi(n as i32);
    let rhs = params.p1inv() * ps.powi(n as i32);
    Ok(SolveResult {
        residual: relative_gap(lhs, rhs),
        constraint_residual: (params.share_sparsity(s) - s_d).abs(),
        polynomial_residual: Some(scaled_polynomial_residual(&b, ps)),
        iterations,
        on_boundary: false,
        leakage: LeakageReport::new(vec![leak; n], source.entry_entropy()),
        params,
    })
}

/// One point of a sharing leakage curve.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub q: u32,
    pub s: f64,
    pub n: usize,
    pub s_d: f64,
    /// `(ps*, p1*, relative per-share leakage)` or the reason the point failed.
    pub outcome: std::result::Result<(f64, f64, f64), String>,
}

/// Evaluate `solve_sss` over every `(n, s_d)` pair, in parallel, in input order.
pub fn sss_curve(source: &SourceModel, n_list: &[usize], s_d_grid: &[f64]) -> Vec<CurvePoint> {
    let jobs: Vec<(usize, f64)> = n_list.iter().flat_map(|&n| s_d_grid.iter().map(move |&sd| (n, sd))).collect();
    jobs.par_iter()
        .map(|&(n, s_d)| CurvePoint {
            q: source.q(),
            s: source.s(),
            n,
            s_d,
            outcome: solve_sss(source, s_d, n)
                .map(|r| (r.params.ps(), r.params.p1(), r.leakage.relative_per_share[0]))
                .map_err(|e| e.to_string()),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub s_delta: f64,
    /// Total leakage `L1 + L2`, or `None` when the sparsity pair is infeasible.
    pub total: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EqualSparsityReport {
    pub points: Vec<SweepPoint>,
    /// Offset of the smallest feasible total.
    pub argmin: f64,
    pub minimized_at_zero: bool,
    /// Largest `|total(d) - total(-d)|` over pairs where both are feasible.
    pub max_asymmetry: f64,
}

/// Sweep `s_delta` over `[-delta_max, delta_max]`, solving the pad at
/// `(s_avg - s_delta, s_avg + s_delta)`. Infeasible points are reported as
/// such and excluded from the minimum.
pub fn verify_equal_sparsity_optimal(
    source: &SourceModel,
    s_avg: f64,
    delta_max: f64,
    step: f64,
) -> Result<EqualSparsityReport> {
    if !(step > 0.0) || !(delta_max >= 0.0) {
        return Err(Error::InvalidParams(format!("need step > 0 and delta_max >= 0, got {step}, {delta_max}")));
    }
    let k = (delta_max / step).round() as i64;
    let points: Vec<SweepPoint> = (-k..=k)
        .into_par_iter()
        .map(|i| {
            let d = i as f64 * step;
            let total = solve_otp(source, s_avg - d, s_avg + d).ok().map(|r| r.leakage.total);
            SweepPoint { s_delta: d, total }
        })
        .collect();
    let center =
        points[k as usize].total.ok_or_else(|| Error::infeasible("equal sparsity point feasible", s_avg, s_avg))?;
    let (mut argmin, mut best) = (0.0, center);
    for p in &points {
        if let Some(t) = p.total {
            if t < best {
                best = t;
                argmin = p.s_delta;
            }
        }
    }
    let n = points.len();
    let max_asymmetry =
        (0..n / 2).filter_map(|i| Some((points[i].total? - points[n - 1 - i].total?).abs())).fold(0.0, f64::max);
    Ok(EqualSparsityReport { points, argmin, minimized_at_zero: argmin == 0.0, max_asymmetry })
}

/// Collusion setting of the partly trusted cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrustedCollusion {
    pub n2: usize,
    pub rho2: usize,
    pub z: usize,
}

impl TrustedCollusion {
    /// Fraction of the pad rows the colluders see, `min(rho2 z / n2, 1)`.
    pub fn exposure(&self) -> f64 {
        (self.rho2 as f64 * self.z as f64 / self.n2 as f64).min(1.0)
    }
}

/// Largest value below one, used when the budget admits `p = 1`.
pub const P_STAR_CLAMP: f64 = 1.0 - f64::EPSILON / 2.0;

/// Largest semi-perfect pad parameter `p` in `[1/q, 1)` whose relative
/// leakage to the colluders, `exposure * L1(p) / H`, stays within `eps_rel`.
pub fn solve_pstar(source: &SourceModel, collusion: &TrustedCollusion, eps_rel: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_rel) {
        return Err(Error::InvalidProbability { name: "eps_rel", value: eps_rel, msg: "must lie in [0, 1]".into() });
    }
    if collusion.n2 == 0 {
        return Err(Error::InvalidParams("n2 must be positive".into()));
    }
    let floor = 1.0 / source.q() as f64;
    let exposure = collusion.exposure();
    let h = source.entry_entropy();
    if eps_rel == 0.0 && exposure > 0.0 {
        return Ok(floor);
    }
    if exposure <= eps_rel || h == 0.0 {
        return Ok(P_STAR_CLAMP);
    }
    let excess = |p: f64| -> Result<f64> {
        let params = PadParams::semi_perfect(p, source.field().clone())?;
        Ok(exposure * closed_form_leakage(&params, source.s()).0 / h - eps_rel)
    };
    let (mut lo, mut hi) = (floor, 1.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use approx::assert_abs_diff_eq;

    fn source(q: u32, s: f64) -> SourceModel {
        SourceModel::new(FieldSpec::prime(q).unwrap(), s).unwrap()
    }

    #[test]
    fn otp_uniform_boundary() {
        let src = source(89, 0.95);
        let u = 1.0 / 89.0;
        let r = solve_otp(&src, u, u).unwrap();
        assert_abs_diff_eq!(r.params.p1(), u, epsilon = 1e-10);
        assert_abs_diff_eq!(r.params.p2(), u, epsilon = 1e-10);
        assert_abs_diff_eq!(r.params.p3(), u, epsilon = 1e-10);
        assert!(r.leakage.total < 1e-12);
    }

    #[test]
    fn otp_and_sss_agree_for_two_shares() {
        let src = source(89, 0.95);
        let a = solve_otp(&src, 0.9, 0.9).unwrap();
        let b = solve_sss(&src, 0.9, 2).unwrap();
        assert!(a.residual < 1e-9 && b.residual < 1e-9);
        assert_abs_diff_eq!(a.leakage.relative_per_share[0], b.leakage.relative_per_share[0], epsilon = 1e-6);
        assert_abs_diff_eq!(a.leakage.relative_per_share[1], b.leakage.relative_per_share[0], epsilon = 1e-6);
        assert_abs_diff_eq!(b.params.ps(), 0.225_470_228_597, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_pairs_name_the_bound() {
        let src = source(89, 0.95);
        let err = solve_otp(&src, 0.87, 0.93).unwrap_err();
        assert!(err.is_infeasible());
        assert!(err.to_string().contains("p3 <= 1"), "{err}");
        assert!(solve_sss(&src, 0.005, 2).unwrap_err().is_infeasible());
        assert!(solve_sss(&src, 1.0, 2).unwrap_err().is_infeasible());
        assert!(solve_sss(&src, 0.9, 89).is_err());
    }

    #[test]
    fn polynomial_matches_transcendental_root() {
        for (q, n) in [(89, 2), (89, 5), (5081, 2), (5081, 5), (7, 3)] {
            let src = source(q, 0.95);
            let r = solve_sss(&src, 0.9, n).unwrap();
            assert!(r.polynomial_residual.unwrap() < 1e-8, "q={q} n={n}: {:?}", r.polynomial_residual);
        }
    }

    #[test]
    fn sd_at_floor_gives_zero_leakage() {
        let src = source(89, 0.95);
        let r = solve_sss(&src, 1.0 / 89.0, 3).unwrap();
        assert!(r.leakage.per_share[0] < 1e-12);
    }

    #[test]
    fn pstar_endpoints() {
        let src = SourceModel::new(FieldSpec::gf256(), 0.93).unwrap();
        let c = TrustedCollusion { n2: 100, rho2: 1, z: 10 };
        assert_eq!(solve_pstar(&src, &c, 0.0).unwrap(), 1.0 / 256.0);
        assert_eq!(solve_pstar(&src, &c, 1.0).unwrap(), P_STAR_CLAMP);
        assert_eq!(solve_pstar(&src, &c, 0.1).unwrap(), P_STAR_CLAMP);
        let p = solve_pstar(&src, &c, 0.05).unwrap();
        assert!(p > 1.0 / 256.0 && p < 1.0);
    }

    #[test]
    fn equal_sparsity_degenerate_sweep() {
        let src = source(89, 0.95);
        let r = verify_equal_sparsity_optimal(&src, 0.9, 0.0, 0.005).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!(r.minimized_at_zero);
    }
}

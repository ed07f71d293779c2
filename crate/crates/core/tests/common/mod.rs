//! Test-side oracles written independently of the library's code paths.
#![allow(dead_code)]

/// `P(R = r | A = a)` for the pad, enumerated from its definition over GF(q), q prime.
pub fn pad_r_given_a(q: usize, p1: f64, p2: f64, p3: f64) -> Vec<Vec<f64>> {
    (0..q)
        .map(|a| {
            (0..q)
                .map(|r| {
                    if a == 0 {
                        if r == 0 {
                            p1
                        } else {
                            (1.0 - p1) / (q - 1) as f64
                        }
                    } else if r == 0 {
                        p2
                    } else if (a + r) % q == 0 {
                        p3
                    } else {
                        (1.0 - p2 - p3) / (q - 2) as f64
                    }
                })
                .collect()
        })
        .collect()
}

/// Distribution of `a + alpha r` given `a`, by summing over `r`.
pub fn push_forward(q: usize, r_given_a: &[Vec<f64>], alpha: usize) -> Vec<Vec<f64>> {
    (0..q)
        .map(|a| {
            let mut row = vec![0.0; q];
            for (r, &p) in r_given_a[a].iter().enumerate() {
                row[(a + alpha * r) % q] += p;
            }
            row
        })
        .collect()
}

fn inv_mod(x: usize, q: usize) -> usize {
    (1..q).find(|y| x * y % q == 1).unwrap()
}

/// `P(R = r | A = a)` for polynomial sharing with points `alphas`, q prime.
pub fn poly_r_given_a(q: usize, alphas: &[usize], p1: f64, ps: f64) -> Vec<Vec<f64>> {
    let n = alphas.len();
    (0..q)
        .map(|a| {
            let specials: Vec<usize> = alphas.iter().map(|&al| (q - a) % q * inv_mod(al, q) % q).collect();
            (0..q)
                .map(|r| {
                    if a == 0 {
                        if r == 0 {
                            p1
                        } else {
                            (1.0 - p1) / (q - 1) as f64
                        }
                    } else if specials.contains(&r) {
                        ps
                    } else {
                        (1.0 - n as f64 * ps) / (q - n) as f64
                    }
                })
                .collect()
        })
        .collect()
}

pub fn source_pmf(q: usize, s: f64) -> Vec<f64> {
    (0..q).map(|a| if a == 0 { s } else { (1.0 - s) / (q - 1) as f64 }).collect()
}

/// Mutual information in base-q units from the full joint table.
pub fn brute_mi(src: &[f64], channel: &[Vec<f64>]) -> f64 {
    let q = src.len();
    let mut py = vec![0.0; q];
    for a in 0..q {
        for y in 0..q {
            py[y] += src[a] * channel[a][y];
        }
    }
    let mut acc = 0.0;
    for a in 0..q {
        for y in 0..q {
            let j = src[a] * channel[a][y];
            if j > 0.0 {
                acc += j * (j / (src[a] * py[y])).ln();
            }
        }
    }
    acc / (q as f64).ln()
}

pub fn brute_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>() / (p.len() as f64).ln()
}

/// Grid minimum of the per-share leakage of polynomial sharing at share
/// sparsity `s_d`, stepping `ps` and solving the sparsity constraint for `p1`.
pub fn sss_grid_min(q: usize, s: f64, s_d: f64, n: usize, step: f64) -> Option<f64> {
    let src = source_pmf(q, s);
    let alphas: Vec<usize> = (1..=n).collect();
    let mut best: Option<f64> = None;
    let mut k = 0usize;
    loop {
        let ps = k as f64 * step;
        k += 1;
        if n as f64 * ps > 1.0 + 1e-12 {
            break;
        }
        let p1 = (s_d - ps * (1.0 - s)) / s;
        if !(0.0..=1.0).contains(&p1) {
            continue;
        }
        let ch = push_forward(q, &poly_r_given_a(q, &alphas, p1, ps), 1);
        let l = brute_mi(&src, &ch);
        best = Some(best.map_or(l, |b: f64| b.min(l)));
    }
    best
}

/// Upper 1% point of chi-square with `k` degrees of freedom (Wilson-Hilferty).
pub fn chi2_crit_99(k: usize) -> f64 {
    let k = k as f64;
    let h = 2.0 / (9.0 * k);
    k * (1.0 - h + 2.326_347_874 * h.sqrt()).powi(3)
}

pub fn chi2_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

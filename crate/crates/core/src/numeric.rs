//! Scalar abstraction and the two root finders the solvers need.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("representable literal")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracketed<T> {
    pub root: T,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]` for a function with a sign change. Endpoint values
/// may be infinite. Returns `None` when the endpoints do not bracket a root.
pub fn bisect<T: Real>(
    mut f: impl FnMut(T) -> T,
    mut lo: T,
    mut hi: T,
    tol: T,
    max_iter: usize,
) -> Option<Bracketed<T>> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Some(Bracketed { root: lo, iterations: 0 });
    }
    if f_hi == T::zero() {
        return Some(Bracketed { root: hi, iterations: 0 });
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return None;
    }
    let lo_positive = f_lo > T::zero();
    let two = lit::<T>(2.0);
    let mut iterations = 0;
    while iterations < max_iter && hi - lo > tol {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        iterations += 1;
        if v == T::zero() {
            return Some(Bracketed { root: mid, iterations });
        }
        if (v > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(Bracketed { root: lo + (hi - lo) / two, iterations })
}

/// All real roots of `a x^3 + b x^2 + c x + d`, ascending, each polished by
/// Newton steps on the undepressed polynomial.
pub fn real_cubic_roots<T: Real>(a: T, b: T, c: T, d: T) -> Vec<T> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == T::zero() {
        return Vec::new();
    }
    if a.abs() <= scale * lit(1e-14) {
        return real_quadratic_roots(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    let three = lit::<T>(3.0);
    let shift = b / three;
    let p = c - b * b / three;
    let q = lit::<T>(2.0) * b * b * b / lit(27.0) - b * c / three + d;
    let half_q = q / lit(2.0);
    let third_p = p / three;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let mut roots = if disc > T::zero() {
        // one real root; take the cube root of the larger-magnitude term and
        // derive the other from u v = -p/3 to avoid cancellation
        let sq = disc.sqrt();
        let w = if half_q >= T::zero() { -half_q - sq } else { -half_q + sq };
        let u = w.cbrt();
        let v = if u == T::zero() { T::zero() } else { -third_p / u };
        vec![u + v - shift]
    } else if p == T::zero() {
        vec![-shift]
    } else {
        let r = (-third_p).sqrt();
        let cos_arg = (-half_q / (r * r * r)).max(-T::one()).min(T::one());
        let phi = cos_arg.acos() / three;
        let two_pi_3 = lit::<T>(2.0 * std::f64::consts::PI / 3.0);
        (0..3).map(|k| lit::<T>(2.0) * r * (phi - two_pi_3 * T::from_usize(k).unwrap()).cos() - shift).collect()
    };

    for x in roots.iter_mut() {
        for _ in 0..4 {
            let fx = ((*x + b) * *x + c) * *x + d;
            let dfx = (three * *x + lit::<T>(2.0) * b) * *x + c;
            if dfx == T::zero() {
                break;
            }
            let step = fx / dfx;
            if !step.is_finite() {
                break;
            }
            *x = *x - step;
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    roots
}

fn real_quadratic_roots<T: Real>(a: T, b: T, c: T) -> Vec<T> {
    if a == T::zero() {
        return if b == T::zero() { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - lit::<T>(4.0) * a * c;
    if disc < T::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let t = -(b + b.signum() * sq) / lit(2.0);
    let mut r = if t == T::zero() { vec![T::zero()] } else { vec![t / a, c / t] };
    r.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    r
}

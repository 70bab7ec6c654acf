//! Dense real polynomials stored as ascending coefficient lists.

/// Horner evaluation of `c[0] + c[1] x + ... + c[n] x^n`.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Drops trailing (highest degree) zero coefficients.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    while out.len() > 1 && out.last() == Some(&0.0) {
        out.pop();
    }
    out
}

pub fn degree(coeffs: &[f64]) -> usize {
    trim(coeffs).len().saturating_sub(1)
}

/// Coefficients of `d -> p(s + d)`, by repeated synthetic division.
pub fn taylor_shift(coeffs: &[f64], s: f64) -> Vec<f64> {
    let mut work = trim(coeffs);
    let n = work.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            work[j] += s * work[j + 1];
        }
    }
    work
}

/// A real root together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub location: f64,
    pub multiplicity: usize,
}

fn magnitude(coeffs: &[f64], x: f64) -> f64 {
    let r = x.abs().max(1.0);
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs() * r.powi(k as i32))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE)
}

fn vanishes(coeffs: &[f64], x: f64) -> bool {
    eval(coeffs, x).abs() <= 1e-9 * magnitude(coeffs, x)
}

fn bisect_sign_change(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(coeffs, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = eval(coeffs, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn distinct_roots(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let p = trim(coeffs);
    let deg = p.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        let r = -p[0] / p[1];
        return if r > lo && r < hi { vec![r] } else { Vec::new() };
    }
    let dp = derivative(&p);
    let turning = distinct_roots(&dp, lo, hi);
    let mut knots = Vec::with_capacity(turning.len() + 2);
    knots.push(lo);
    knots.extend(turning.iter().copied());
    knots.push(hi);

    let mut roots = Vec::new();
    for &c in &turning {
        if vanishes(&p, c) {
            roots.push(c);
        }
    }
    for w in knots.windows(2) {
        let (u, v) = (w[0], w[1]);
        let (fu, fv) = (eval(&p, u), eval(&p, v));
        if fu != 0.0 && fv != 0.0 && (fu < 0.0) != (fv < 0.0) {
            roots.push(bisect_sign_change(&p, u, v));
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + b.abs()));
    roots
}

/// Real roots strictly inside `(lo, hi)` with multiplicities, sorted ascending.
///
/// Multiple roots are found as touching points of the derivative chain, so
/// they are located to roughly `sqrt(eps)` only when the data itself is
/// inexact; exact-coefficient cases (Chebyshev, monomials) are exact.
pub fn real_roots(coeffs: &[f64], lo: f64, hi: f64) -> Vec<Root> {
    let p = trim(coeffs);
    distinct_roots(&p, lo, hi)
        .into_iter()
        .map(|r| {
            let mut multiplicity = 1;
            let mut d = derivative(&p);
            while d.len() > 1 && vanishes(&d, r) {
                multiplicity += 1;
                d = derivative(&d);
            }
            Root {
                location: r,
                multiplicity,
            }
        })
        .collect()
}

//! Leading eigen-data of nonnegative matrices by power iteration.

use serde::{Deserialize, Serialize};

use super::collocation::SparseMatrix;
use crate::error::{Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 100_000;
/// Ratios above this mean no usable spectral gap.
pub const NO_GAP_RATIO: f64 = 0.999;

const WINDOW: usize = 50;
const MAX_DEFLATED_SWEEPS: usize = 5_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub lambda: f64,
    /// Right eigenvector, normalised to maximum 1.
    pub right: Vec<f64>,
    /// Left eigenvector, normalised to total mass 1.
    pub left: Vec<f64>,
    /// Estimate of `|lambda_2| / lambda_1`.
    pub second_ratio: f64,
    /// Last iterate of the deflated iteration; spans the subdominant mode when it is real.
    pub second_mode: Vec<f64>,
    pub grid_size: usize,
    pub residual: f64,
}

impl SpectralData {
    pub fn has_gap(&self) -> bool {
        self.second_ratio <= NO_GAP_RATIO
    }

    pub fn require_gap(&self) -> Result<()> {
        if self.has_gap() {
            Ok(())
        } else {
            Err(Error::NoGap { ratio: self.second_ratio })
        }
    }
}

fn power(apply: impl Fn(&[f64]) -> Vec<f64>, n: usize) -> Result<(f64, Vec<f64>, f64)> {
    let mut v = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let w = apply(&v);
        let lambda = w.iter().cloned().fold(0.0, f64::max);
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Iteration { sweeps: 0, residual: f64::NAN });
        }
        // with max(v) = 1 this is ||M v - lambda v||_inf / lambda
        residual = w.iter().zip(&v).map(|(a, b)| (a / lambda - b).abs()).fold(0.0, f64::max);
        v = w.into_iter().map(|a| a / lambda).collect();
        if residual <= RESIDUAL_TOL {
            return Ok((lambda, v, residual));
        }
    }
    Err(Error::Iteration {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Leading eigenvalue with left and right eigenvectors, plus the subdominant ratio.
pub fn leading_spectrum(m: &SparseMatrix) -> Result<SpectralData> {
    if !m.is_nonnegative() {
        return Err(Error::Validation("leading_spectrum needs a nonnegative matrix".into()));
    }
    let n = m.size();
    if n == 0 {
        return Err(Error::Validation("empty matrix".into()));
    }
    let (lambda, right, residual) = power(|v| m.mul(v), n)?;
    let (_, left_raw, _) = power(|v| m.mul_transpose(v), n)?;
    let mass: f64 = left_raw.iter().sum();
    let left: Vec<f64> = left_raw.iter().map(|a| a / mass).collect();

    // deflate the leading pair: z -> z - v <w, z> / <w, v>
    let wv: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    let project = |z: &mut Vec<f64>| {
        let c: f64 = left.iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>() / wv;
        for (zi, vi) in z.iter_mut().zip(&right) {
            *zi -= c * vi;
        }
    };
    let mut z: Vec<f64> = (0..n).map(|i| ((i as f64) * 1.618_033_988_7 + 0.3).sin()).collect();
    project(&mut z);
    let mut logs: Vec<f64> = Vec::new();
    let mut ratio = 0.0;
    let z_norm = norm(&z);
    if z_norm > 0.0 {
        z.iter_mut().for_each(|a| *a /= z_norm);
        let mut cumulative = 0.0;
        for k in 1..=MAX_DEFLATED_SWEEPS {
            let mut next = m.mul(&z);
            project(&mut next);
            let s = norm(&next);
            if s == 0.0 || !s.is_finite() {
                logs.clear();
                break;
            }
            let ls = (s / lambda).ln();
            logs.push(ls);
            cumulative += ls;
            next.iter_mut().for_each(|a| *a /= s);
            z = next;
            if cumulative < (1e-13f64).ln() {
                break;
            }
            if k >= 2 * WINDOW {
                let recent: f64 = logs[k - WINDOW..].iter().sum::<f64>() / WINDOW as f64;
                let before: f64 = logs[k - 2 * WINDOW..k - WINDOW].iter().sum::<f64>() / WINDOW as f64;
                if (recent - before).abs() < 1e-7 {
                    break;
                }
            }
        }
        if !logs.is_empty() {
            let w = WINDOW.min(logs.len().div_ceil(2));
            let mean = logs[logs.len() - w..].iter().sum::<f64>() / w as f64;
            ratio = mean.exp().min(1.0);
        }
    }
    Ok(SpectralData {
        lambda,
        right,
        left,
        second_ratio: ratio,
        second_mode: z,
        grid_size: n,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_matrix() {
        let m = SparseMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let s = leading_spectrum(&m).unwrap();
        assert!((s.lambda - 1.0).abs() < 1e-15);
        assert_eq!(s.second_ratio, 0.0);
        assert!((s.left[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_has_no_gap() {
        let id: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let s = leading_spectrum(&SparseMatrix::from_dense(&id).unwrap()).unwrap();
        assert_eq!(s.lambda, 1.0);
        assert!(!s.has_gap());
        assert!(matches!(s.require_gap(), Err(Error::NoGap { .. })));
    }

    #[test]
    fn rejects_negative_entries() {
        let m = SparseMatrix::from_dense(&[vec![1.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert!(leading_spectrum(&m).is_err());
    }

    #[test]
    fn permutation_does_not_converge() {
        let m = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(leading_spectrum(&m), Err(Error::Iteration { .. })));
    }
}

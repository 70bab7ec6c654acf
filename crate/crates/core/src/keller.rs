//! Oscillation and variation seminorms over a reference measure, p-variation of samples,
//! and decay of correlations for the normalised transfer operator.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::collocation::SparseMatrix;
use crate::pressure::spectral::SpectralData;

pub const MASS_TOL: f64 = 1e-12;
/// Largest single mass allowed by [`GridMeasure::is_non_atomic`].
pub const ATOM_THRESHOLD: f64 = 0.5;
pub const P_VARIATION_LIMIT: usize = 2000;
/// Guard subtracted from the ball radius so that ties at exactly `eps` are excluded.
const BALL_GUARD: f64 = 1e-12;

/// Probability measure on finitely many sorted points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    support: Vec<f64>,
    masses: Vec<f64>,
    /// Cumulative mass up to the middle of each atom.
    mid_cdf: Vec<f64>,
}

impl GridMeasure {
    /// Normalises `weights` to mass 1.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::Validation("support and masses must be non-empty and of equal length".into()));
        }
        if support.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("support must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Validation("masses must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Validation("measure has zero mass".into()));
        }
        let masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut mid_cdf = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &m in &masses {
            mid_cdf.push(acc + 0.5 * m);
            acc += m;
        }
        Ok(GridMeasure { support, masses, mid_cdf })
    }

    /// Equal masses on the midpoints of `n` cells of `[lo, hi]`.
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let h = (hi - lo) / n as f64;
        GridMeasure::new((0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(), vec![1.0; n])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn is_non_atomic(&self) -> bool {
        self.masses.iter().all(|&m| m <= ATOM_THRESHOLD)
    }

    /// Mass between two atoms, each endpoint counted with half its mass.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.mid_cdf[i] - self.mid_cdf[j]).abs()
    }

    pub fn integrate(&self, h: &[f64]) -> f64 {
        self.masses.iter().zip(h).map(|(m, v)| m * v).sum()
    }
}

fn check_len(h: &[f64], m: &GridMeasure) -> Result<()> {
    if h.len() != m.len() {
        return Err(Error::Validation(format!(
            "function has {} samples but the measure has {} atoms",
            h.len(),
            m.len()
        )));
    }
    Ok(())
}

/// `integral of (max - min of h over the eps-ball around x) dm(x)`.
pub fn osc1(h: &[f64], eps: f64, m: &GridMeasure) -> Result<f64> {
    check_len(h, m)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let n = h.len();
    let radius = eps - BALL_GUARD;
    // balls are index windows whose ends move monotonically, so monotone deques suffice
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let (mut l, mut r) = (0usize, 0usize);
    let mut total = 0.0;
    for i in 0..n {
        while r < n && m.mid_cdf[r] - m.mid_cdf[i] < radius {
            while maxq.back().is_some_and(|&k| h[k] <= h[r]) {
                maxq.pop_back();
            }
            maxq.push_back(r);
            while minq.back().is_some_and(|&k| h[k] >= h[r]) {
                minq.pop_back();
            }
            minq.push_back(r);
            r += 1;
        }
        while m.mid_cdf[i] - m.mid_cdf[l] >= radius {
            l += 1;
        }
        while maxq.front().is_some_and(|&k| k < l) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&k| k < l) {
            minq.pop_front();
        }
        // the centre is always inside its own ball
        let hi = maxq.front().map_or(h[i], |&k| h[k].max(h[i]));
        let lo = minq.front().map_or(h[i], |&k| h[k].min(h[i]));
        total += m.masses[i] * (hi - lo);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KellerNorm {
    pub alpha: f64,
    pub a: f64,
    pub l1_part: f64,
    pub var_part: f64,
    pub total: f64,
}

/// Dyadic radii `a * 2^-k` down to a quarter of the smallest atom.
pub fn default_eps_grid(a: f64, m: &GridMeasure) -> Vec<f64> {
    let floor = m.masses.iter().cloned().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min) / 4.0;
    (0..64).map(|k| a * 0.5f64.powi(k)).take_while(|&e| e >= floor).collect()
}

/// `sup_eps osc1(h, eps) / eps^alpha` plus the `L^1(m)` norm.
pub fn var_alpha1(h: &[f64], alpha: f64, a: f64, m: &GridMeasure, eps_grid: Option<&[f64]>) -> Result<KellerNorm> {
    check_len(h, m)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0, 1], got {alpha}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {a}")));
    }
    let owned;
    let grid = match eps_grid {
        Some(g) => g,
        None => {
            owned = default_eps_grid(a, m);
            &owned
        }
    };
    if let Some(e) = grid.iter().find(|&&e| !(e > 0.0 && e <= a)) {
        return Err(Error::InvalidParameter(format!("eps {e} outside (0, {a}]")));
    }
    let ratios: Vec<f64> = grid
        .par_iter()
        .map(|&e| Ok(osc1(h, e, m)? / e.powf(alpha)))
        .collect::<Result<_>>()?;
    let var_part = ratios.into_iter().fold(0.0, f64::max);
    let l1_part = m.masses.iter().zip(h).map(|(w, v)| w * v.abs()).sum::<f64>();
    Ok(KellerNorm {
        alpha,
        a,
        l1_part,
        var_part,
        total: l1_part + var_part,
    })
}

/// Largest `(sum |h(x_{i_{k+1}}) - h(x_{i_k})|^p)^{1/p}` over increasing index chains.
pub fn p_variation(samples: &[(f64, f64)], p: f64) -> Result<f64> {
    if samples.len() > P_VARIATION_LIMIT {
        return Err(Error::Size {
            what: "p-variation samples",
            got: samples.len(),
            limit: P_VARIATION_LIMIT,
        });
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be a finite real >= 1, got {p}")));
    }
    if samples.windows(2).any(|w| !(w[0].0 <= w[1].0)) {
        return Err(Error::Validation("samples must be sorted by x".into()));
    }
    let n = samples.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        best[j] = (0..j)
            .map(|i| best[i] + (samples[j].1 - samples[i].1).abs().powf(p))
            .fold(0.0, f64::max);
    }
    Ok(best.into_iter().fold(0.0, f64::max).powf(1.0 / p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `C_n` for `n = 0..=n_max`.
    pub series: Vec<f64>,
    /// Fitted geometric rate, 0 when the series vanishes.
    pub rate: f64,
    pub vanished: bool,
    pub second_ratio: f64,
}

/// Correlations `|int phi o f^n psi dmu - int phi dmu int psi dmu|` under the equilibrium
/// measure built from `spectral`, computed with the normalised operator
/// `D_v^{-1} (M / lambda) D_v`.
pub fn decay_correlation(
    spectral: &SpectralData,
    matrix: &SparseMatrix,
    phi: &[f64],
    psi: &[f64],
    n_max: usize,
) -> Result<DecayReport> {
    spectral.require_gap()?;
    let n = matrix.size();
    if phi.len() != n || psi.len() != n || spectral.right.len() != n {
        return Err(Error::Validation("grid functions must match the matrix size".into()));
    }
    let v = &spectral.right;
    let mu: Vec<f64> = {
        let raw: Vec<f64> = v.iter().zip(&spectral.left).map(|(a, b)| a * b).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / z).collect()
    };
    let mean = |f: &[f64]| -> f64 { mu.iter().zip(f).map(|(a, b)| a * b).sum() };
    let psi_mean = mean(psi);
    let mut z: Vec<f64> = psi.iter().map(|p| p - psi_mean).collect();
    let mut series = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        series.push(mean(&phi.iter().zip(&z).map(|(a, b)| a * b).collect::<Vec<_>>()).abs());
        if k == n_max {
            break;
        }
        let scaled: Vec<f64> = z.iter().zip(v).map(|(a, b)| a * b).collect();
        z = matrix
            .mul(&scaled)
            .into_iter()
            .zip(v)
            .map(|(a, b)| if *b > 0.0 { a / (spectral.lambda * b) } else { 0.0 })
            .collect();
    }

    let top = series.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-13 * top.max(f64::MIN_POSITIVE);
    let usable: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .take_while(|(_, &c)| c > floor)
        .map(|(k, &c)| (k as f64, c.ln()))
        .collect();
    let tail = &usable[usable.len() / 2..];
    let (rate, vanished) = if top == 0.0 || tail.len() < 2 {
        (0.0, true)
    } else {
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / tail.len() as f64;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / tail.len() as f64;
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (((sxy / sxx).exp()).min(1.0), false)
    };
    Ok(DecayReport {
        series,
        rate,
        vanished,
        second_ratio: spectral.second_ratio,
    })
}

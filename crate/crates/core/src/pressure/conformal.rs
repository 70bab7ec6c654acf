//! Conformal and equilibrium measures from the leading eigen-data of the collocation operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::collocation::{potential_weight, CollocationGrid};
use super::spectral::{leading_spectrum, SpectralData};
use crate::error::Result;
use crate::map::IntervalMap;
use crate::potential::UPotential;

pub const SUBCELL_CHECKS: usize = 32;
pub const CONFORMAL_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcellCheck {
    pub interval: (f64, f64),
    /// Measure of the image.
    pub image_mass: f64,
    /// Sum of `m_j lambda / g(x_j)` over the subcell.
    pub predicted: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalResult {
    pub t: f64,
    pub pressure: f64,
    /// Cell masses of the conformal measure.
    pub conformal: Vec<f64>,
    /// Cell masses of the equilibrium measure.
    pub equilibrium: Vec<f64>,
    pub spectral: SpectralData,
    pub checks: Vec<SubcellCheck>,
    pub max_rel_error: f64,
    pub conformal_ok: bool,
}

/// Mass of the atoms (cell midpoints) inside `[a, b]`.
///
/// The collocation operator only sees midpoints, so this is the measure its left
/// eigenvector describes.
fn atom_mass(grid: &CollocationGrid, masses: &[f64], a: f64, b: f64) -> f64 {
    (0..grid.size())
        .filter(|&i| (a..=b).contains(&grid.midpoint(i)))
        .map(|i| masses[i])
        .sum()
}

/// Computes the conformal measure of the weight `exp(-t u)` on an `n`-cell grid, the
/// matching equilibrium measure, and checks conformality on random subcells of branches.
pub fn conformal_and_equilibrium(map: &IntervalMap, u: &UPotential, t: f64, n: usize, seed: u64) -> Result<ConformalResult> {
    let grid = CollocationGrid::new(map, n)?;
    let spectral = leading_spectrum(&grid.weights(map, u, t)?)?;
    spectral.require_gap()?;
    let lambda = spectral.lambda;
    let conformal = spectral.left.clone();
    let prod: Vec<f64> = spectral.right.iter().zip(&conformal).map(|(a, b)| a * b).collect();
    let total: f64 = prod.iter().sum();
    let equilibrium: Vec<f64> = prod.iter().map(|p| p / total).collect();

    let h = grid.cell_width();
    let (lo, _) = grid.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let branches = map.monotone_branches();
    let mut checks = Vec::with_capacity(SUBCELL_CHECKS);
    let mut attempts = 0;
    while checks.len() < SUBCELL_CHECKS && attempts < 100 * SUBCELL_CHECKS {
        attempts += 1;
        let br = &branches[rng.gen_range(0..branches.len())];
        let first = ((br.interval.0 - lo) / h).ceil() as usize;
        let end = (((br.interval.1 - lo) / h).floor() as usize).min(grid.size());
        if end <= first + 4 {
            continue;
        }
        let cells = end - first;
        let len = rng.gen_range((cells / 20).max(1)..=(cells / 4).max(1));
        let start = first + rng.gen_range(0..=cells - len);
        let (a, b) = (lo + start as f64 * h, lo + (start + len) as f64 * h);
        let (fa, fb) = (map.eval(a)?, map.eval(b)?);
        let image_mass = atom_mass(&grid, &conformal, fa.min(fb), fa.max(fb));
        let mut predicted = 0.0;
        for j in start..start + len {
            let g = potential_weight(u.eval(map, grid.midpoint(j))?, t, grid.midpoint(j))?;
            if g > 0.0 {
                predicted += conformal[j] * lambda / g;
            }
        }
        let scale = image_mass.abs().max(predicted.abs());
        let rel_error = if scale > 0.0 { (image_mass - predicted).abs() / scale } else { 0.0 };
        checks.push(SubcellCheck {
            interval: (a, b),
            image_mass,
            predicted,
            rel_error,
        });
    }
    let max_rel_error = checks.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    Ok(ConformalResult {
        t,
        pressure: lambda.ln(),
        conformal,
        equilibrium,
        spectral,
        conformal_ok: max_rel_error <= CONFORMAL_TOL,
        checks,
        max_rel_error,
    })
}

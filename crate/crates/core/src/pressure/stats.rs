//! Birkhoff averages of a potential along periodic orbits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohomology::CohomologyData;
use crate::error::Result;
use crate::map::{IntervalMap, NamedMap, PeriodicOrbit, MAX_PERIOD};
use crate::potential::{PotentialKind, UPotential};

const ORBIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaStats {
    /// Largest periodic average found (a lower bound unless `symbolic`).
    pub theta_max: f64,
    pub witness: Vec<f64>,
    /// Every least-period orbit up to the period cap, with `theta` filled in when finite.
    pub orbits: Vec<PeriodicOrbit>,
    /// True when `theta_max` is the known closed form rather than a search result.
    pub symbolic: bool,
}

fn symbolic_theta(map: &IntervalMap, u: &UPotential) -> Option<(f64, Vec<f64>)> {
    if u.kind() != PotentialKind::Geometric {
        return None;
    }
    // the fixed point 1 of T_d has multiplier d^2, the largest over all periodic points
    match map.name()? {
        NamedMap::Chebyshev2 => Some((4f64.ln(), vec![1.0])),
        NamedMap::Chebyshev3 => Some((9f64.ln(), vec![1.0])),
        _ => None,
    }
}

/// Averages of `u` over all periodic orbits of least period up to `max_period`.
pub fn theta_stats(map: &IntervalMap, u: &UPotential, max_period: usize) -> Result<ThetaStats> {
    let max_period = max_period.clamp(1, MAX_PERIOD);
    let per_period: Vec<Vec<PeriodicOrbit>> = (1..=max_period)
        .into_par_iter()
        .map(|n| -> Result<Vec<PeriodicOrbit>> {
            let mut orbits: Vec<PeriodicOrbit> =
                map.periodic_points(n, ORBIT_TOL)?.into_iter().filter(|o| o.period == n).collect();
            for o in &mut orbits {
                let s = map.birkhoff_sum(u, o.points[0], n)?;
                o.theta = s.is_finite().then(|| s / n as f64);
            }
            Ok(orbits)
        })
        .collect::<Result<_>>()?;
    let orbits: Vec<PeriodicOrbit> = per_period.into_iter().flatten().collect();
    let best = orbits
        .iter()
        .filter_map(|o| o.theta.map(|th| (th, o)))
        .fold(None::<(f64, &PeriodicOrbit)>, |acc, (th, o)| match acc {
            Some((b, _)) if b >= th => acc,
            _ => Some((th, o)),
        });
    let (mut theta_max, mut witness) = best.map_or((f64::NEG_INFINITY, Vec::new()), |(th, o)| (th, o.points.clone()));
    let mut symbolic = false;
    if let Some((th, w)) = symbolic_theta(map, u) {
        theta_max = th;
        witness = w;
        symbolic = true;
    }
    Ok(ThetaStats {
        theta_max,
        witness,
        orbits,
        symbolic,
    })
}

/// Largest periodic average of `u` over the cycles inside the maximal exceptional set.
///
/// `None` when the set is empty. Cycles are found by forward iteration inside the set, so
/// `max_period` only bounds the cycle length that is searched.
pub fn theta_star(map: &IntervalMap, u: &UPotential, data: &CohomologyData, max_period: usize) -> Result<Option<f64>> {
    if !data.exceptional || data.sigma_max.is_empty() {
        return Ok(None);
    }
    let tol = 1e-9 * map.width();
    let mut best: Option<f64> = None;
    for &x in &data.sigma_max {
        let mut y = x;
        for k in 1..=max_period.max(data.sigma_max.len()) {
            y = map.eval(y)?;
            if (y - x).abs() <= tol {
                let s = map.birkhoff_sum(u, x, k)?;
                if s.is_finite() {
                    let th = s / k as f64;
                    best = Some(best.map_or(th, |b: f64| b.max(th)));
                }
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalRow {
    pub n: usize,
    pub grid_sup: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub periodic_sup: f64,
    pub rows: Vec<VariationalRow>,
}

/// Largest `(1/n) S_n u` over `grid` uniform points, endpoints included.
pub fn grid_sup_average(map: &IntervalMap, u: &UPotential, n: usize, grid: usize) -> Result<f64> {
    let (lo, hi) = map.domain();
    let grid = grid.max(2);
    let values: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (grid - 1) as f64;
            map.birkhoff_sum(u, x, n)
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max) / n.max(1) as f64)
}

/// Compares grid suprema of Birkhoff averages with the periodic-orbit supremum.
pub fn variational_sup_check(
    map: &IntervalMap,
    u: &UPotential,
    n_list: &[usize],
    max_period: usize,
    grid: usize,
) -> Result<VariationalReport> {
    let periodic_sup = theta_stats(map, u, max_period)?.theta_max;
    let rows = n_list
        .iter()
        .map(|&n| {
            let grid_sup = grid_sup_average(map, u, n, grid)?;
            Ok(VariationalRow {
                n,
                grid_sup,
                gap: (grid_sup - periodic_sup).abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(VariationalReport { periodic_sup, rows })
}

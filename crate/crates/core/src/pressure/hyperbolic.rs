use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::IntervalMap;
use crate::potential::UPotential;

pub const DEFAULT_MARGIN: f64 = 1e-3;
pub const MAX_BIRKHOFF_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityVerdict {
    pub t: f64,
    pub n: usize,
    /// Largest `(1/n) S_n(-t u)` over the grid.
    pub sup_avg: f64,
    pub pressure: f64,
    pub margin: f64,
    pub hyperbolic: bool,
}

/// A potential `-t u` is hyperbolic when its Birkhoff averages stay strictly below its pressure.
///
/// `pressure` is supplied by the caller, usually from an assembled pressure curve.
pub fn hyperbolicity_check(
    map: &IntervalMap,
    u: &UPotential,
    t: f64,
    n: usize,
    grid_size: usize,
    pressure: f64,
) -> Result<HyperbolicityVerdict> {
    if n == 0 || n > MAX_BIRKHOFF_STEPS {
        return Err(Error::InvalidParameter(format!("n must be in 1..={MAX_BIRKHOFF_STEPS}, got {n}")));
    }
    let (lo, hi) = map.domain();
    let grid = grid_size.max(2);
    let sums: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| map.birkhoff_sum(u, lo + (hi - lo) * i as f64 / (grid - 1) as f64, n))
        .collect::<Result<_>>()?;
    let sup_avg = sums
        .into_iter()
        .map(|s| {
            // a pole gives weight zero for t < 0; skip it instead of forming 0 * inf
            if s == f64::NEG_INFINITY {
                if t < 0.0 {
                    f64::NEG_INFINITY
                } else if t > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                -t * s / n as f64
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HyperbolicityVerdict {
        t,
        n,
        sup_avg,
        pressure,
        margin: DEFAULT_MARGIN,
        hyperbolic: sup_avg < pressure - DEFAULT_MARGIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::NamedMap;
    use std::f64::consts::LN_2;

    #[test]
    fn chebyshev_geometric_verdicts() {
        let f = IntervalMap::named(NamedMap::Chebyshev2).unwrap();
        let u = UPotential::geometric(&f);
        let v = hyperbolicity_check(&f, &u, -0.5, 12, 2001, 1.5 * LN_2).unwrap();
        assert!((v.sup_avg - LN_2).abs() < 1e-12);
        assert!(v.hyperbolic);
        let v = hyperbolicity_check(&f, &u, -2.0, 12, 2001, 4.0 * LN_2).unwrap();
        assert!(!v.hyperbolic);
        assert!(hyperbolicity_check(&f, &u, -2.0, 21, 10, 1.0).is_err());
    }
}

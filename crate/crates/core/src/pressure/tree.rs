//! Preimage-tree pressure: `(1/n) log sum_{y in f^{-n}(x)} exp(-t S_n u(y))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Method, PressureEstimate};
use crate::error::{Error, Result};
use crate::map::IntervalMap;
use crate::potential::UPotential;

pub const MAX_DEPTH: usize = 22;
pub const MAX_LEAVES: usize = 1 << 23;
/// Minimum distance between a base point and the forward orbits of the singular set.
pub const BASE_CLEARANCE: f64 = 1e-6;

/// Birkhoff sums of `u` over every level of the preimage tree of a base point.
///
/// Nothing here depends on `t`, so one tree serves a whole pressure curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageTree {
    base: f64,
    levels: Vec<Vec<f64>>,
    pruned: bool,
}

fn singular_orbits(map: &IntervalMap, u: &UPotential, steps: usize) -> Result<Vec<f64>> {
    let mut pts = Vec::new();
    for c in u.lambda_set() {
        let mut x = c;
        pts.push(x);
        for _ in 0..steps {
            x = map.eval(x)?;
            pts.push(x);
        }
    }
    Ok(pts)
}

/// Fails if `base` is within [`BASE_CLEARANCE`] of a forward orbit of the singular set.
pub fn check_base_point(map: &IntervalMap, u: &UPotential, base: f64, depth: usize) -> Result<()> {
    map.clamp_point(base)?;
    if let Some(distance) = singular_orbits(map, u, depth.max(1))?
        .into_iter()
        .map(|p| (p - base).abs())
        .reduce(f64::min)
    {
        if distance < BASE_CLEARANCE {
            return Err(Error::BasePoint { base, distance });
        }
    }
    Ok(())
}

/// Random base point away from the postcritical nodes and their preimages up to depth 6.
pub fn choose_base_point(map: &IntervalMap, u: &UPotential, seed: u64) -> Result<f64> {
    let mut avoid = singular_orbits(map, u, 64)?;
    avoid.extend(map.critical_points().iter().map(|c| c.location));
    let mut frontier = avoid.clone();
    for _ in 0..6 {
        let mut next = Vec::new();
        for &x in &frontier {
            next.extend(map.preimages(x, 1e-12)?);
        }
        avoid.extend(next.iter().copied());
        frontier = next;
        if frontier.len() > 100_000 {
            break;
        }
    }
    let (lo, hi) = map.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let x = rng.gen_range(lo..hi);
        if avoid.iter().all(|&p| (p - x).abs() >= BASE_CLEARANCE) {
            return Ok(x);
        }
    }
    Err(Error::BasePoint {
        base: f64::NAN,
        distance: 0.0,
    })
}

impl PreimageTree {
    pub fn build(map: &IntervalMap, u: &UPotential, base: f64, depth: usize) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::Depth { depth, limit: MAX_DEPTH });
        }
        if depth < 3 {
            return Err(Error::InvalidParameter(format!("tree depth must be at least 3, got {depth}")));
        }
        check_base_point(map, u, base, depth)?;
        let branches = map.monotone_branches().len();
        let mut frontier: Vec<(f64, f64)> = vec![(map.clamp_point(base)?, 0.0)];
        let mut levels = Vec::with_capacity(depth);
        let mut pruned = false;
        for level in 1..=depth {
            if frontier.len() * branches > MAX_LEAVES {
                return Err(Error::Depth { depth: level, limit: level - 1 });
            }
            let expanded: Vec<Vec<(f64, f64)>> = frontier
                .par_iter()
                .map(|&(x, s)| {
                    let mut out = Vec::with_capacity(branches);
                    for y in map.preimages(x, 1e-12)? {
                        let v = u.eval(map, y)?;
                        out.push((y, s + v));
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            let next: Vec<(f64, f64)> = expanded.into_iter().flatten().collect();
            let before = next.len();
            // a pole makes every descendant a pole as well
            frontier = next.into_iter().filter(|p| p.1 != f64::NEG_INFINITY).collect();
            pruned |= frontier.len() != before;
            if frontier.iter().any(|p| !p.1.is_finite()) {
                return Err(Error::PoleOnGrid { y: base });
            }
            levels.push(frontier.iter().map(|p| p.1).collect());
        }
        Ok(PreimageTree { base, levels, pruned })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn leaf_count(&self) -> usize {
        self.levels.last().map_or(0, Vec::len)
    }

    /// `(1/k) log sum exp(-t S_k)` for every level `k`.
    pub fn series(&self, t: f64) -> Result<Vec<f64>> {
        if self.pruned && t >= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tree passed through a pole; weights are infinite for t = {t} >= 0"
            )));
        }
        self.levels
            .iter()
            .enumerate()
            .map(|(k, sums)| {
                if sums.is_empty() {
                    return Ok(f64::NEG_INFINITY);
                }
                let top = sums.iter().map(|&s| -t * s).fold(f64::NEG_INFINITY, f64::max);
                let total: f64 = sums.iter().map(|&s| (-t * s - top).exp()).sum();
                Ok((top + total.ln()) / (k + 1) as f64)
            })
            .collect()
    }

    pub fn estimate(&self, t: f64) -> Result<PressureEstimate> {
        let series = self.series(t)?;
        Ok(PressureEstimate {
            value: *series.last().expect("depth >= 3"),
            method: Method::Tree,
            depth_or_size: self.depth(),
            base_point: Some(self.base),
            convergence_series: series,
        })
    }
}

/// Tree pressure of `-t u` at `base`.
pub fn tree_pressure(map: &IntervalMap, u: &UPotential, t: f64, base: f64, depth: usize) -> Result<PressureEstimate> {
    PreimageTree::build(map, u, base, depth)?.estimate(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::NamedMap;
    use std::f64::consts::LN_2;

    #[test]
    fn tent_is_exact() {
        let f = IntervalMap::named(NamedMap::Tent).unwrap();
        let u = UPotential::geometric(&f);
        let est = tree_pressure(&f, &u, -1.0, 0.3, 10).unwrap();
        assert!((est.value - 2.0 * LN_2).abs() < 1e-12);
        assert!(est.convergence_series.iter().all(|v| (v - 2.0 * LN_2).abs() < 1e-12));
    }

    #[test]
    fn depth_and_base_errors() {
        let f = IntervalMap::named(NamedMap::Chebyshev2).unwrap();
        let u = UPotential::geometric(&f);
        assert!(matches!(tree_pressure(&f, &u, -1.0, 0.3, 23), Err(Error::Depth { .. })));
        assert!(matches!(tree_pressure(&f, &u, -1.0, 1.0, 5), Err(Error::BasePoint { .. })));
        assert!(matches!(tree_pressure(&f, &u, -1.0, -1.0 + 1e-8, 5), Err(Error::BasePoint { .. })));
    }

    #[test]
    fn base_point_draw_is_reproducible() {
        let f = IntervalMap::named(NamedMap::Chebyshev2).unwrap();
        let u = UPotential::geometric(&f);
        let a = choose_base_point(&f, &u, 7).unwrap();
        assert_eq!(a, choose_base_point(&f, &u, 7).unwrap());
        check_base_point(&f, &u, a, 18).unwrap();
    }
}

//! Finite combinatorial models: rank-one preimage sets, normality, abnormal sets and
//! exceptional sets, each with a direct algorithm and a brute-force oracle.
//!
//! A model is a total self-map on `0..n` with two flags per node. `critical` marks the
//! singular set. `external` says the node also has a preimage outside the model that
//! avoids the singular set; it stands in for the part of the interval that the finite
//! model does not see.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count accepted by subset enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteDynamics {
    forward: Vec<usize>,
    critical: Vec<bool>,
    external: Vec<bool>,
}

impl FiniteDynamics {
    pub fn new(forward: Vec<usize>, critical: &[usize], external: Vec<bool>) -> Result<Self> {
        let n = forward.len();
        if external.len() != n {
            return Err(Error::Validation(format!(
                "external flag count {} does not match node count {n}",
                external.len()
            )));
        }
        if let Some(&bad) = forward.iter().find(|&&j| j >= n) {
            return Err(Error::Validation(format!("forward map leaves the node set (image {bad})")));
        }
        let mut crit = vec![false; n];
        for &c in critical {
            if c >= n {
                return Err(Error::Validation(format!("critical node {c} is not a node")));
            }
            crit[c] = true;
        }
        Ok(FiniteDynamics {
            forward,
            critical: crit,
            external,
        })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn external(&self) -> &[bool] {
        &self.external
    }

    /// The model's own singular set, as sorted node ids.
    pub fn critical(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.critical[i]).collect()
    }

    /// In-model preimages of every node.
    pub fn preimage_lists(&self) -> Vec<Vec<usize>> {
        let mut pre = vec![Vec::new(); self.len()];
        for (i, &j) in self.forward.iter().enumerate() {
            pre[j].push(i);
        }
        pre
    }

    fn mask(&self, lambda: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        for &c in lambda {
            if c < m.len() {
                m[c] = true;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialFiniteMap {
    /// Size of the ambient set `0..big`.
    pub big: usize,
    /// The subset on which the map is defined, sorted.
    pub sub: Vec<usize>,
    /// Image of `sub[k]` is `images[k]`.
    pub images: Vec<usize>,
}

impl PartialFiniteMap {
    pub fn new(big: usize, sub: Vec<usize>, images: Vec<usize>) -> Result<Self> {
        if sub.len() != images.len() {
            return Err(Error::Validation("sub set and image list differ in length".into()));
        }
        if sub.windows(2).any(|w| w[0] >= w[1]) || sub.iter().chain(&images).any(|&v| v >= big) {
            return Err(Error::Validation("sub set must be sorted, distinct and inside the ambient set".into()));
        }
        Ok(PartialFiniteMap { big, sub, images })
    }
}

/// Points of the sub set with exactly one preimage inside the sub set.
pub fn rank1_set(pm: &PartialFiniteMap) -> Vec<usize> {
    let mut count = vec![0usize; pm.big];
    for &j in &pm.images {
        count[j] += 1;
    }
    pm.sub.iter().copied().filter(|&x| count[x] == 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TecCheck {
    pub lhs: usize,
    pub rhs: usize,
    pub holds: bool,
}

/// Compares `#(S ∩ π(S))` against `3 #(S \ π(S)) + #(R ∩ π(R))`, where `S` is the sub set
/// and `R` its rank-one preimage set.
pub fn check_tec(pm: &PartialFiniteMap) -> TecCheck {
    let mut in_sub = vec![false; pm.big];
    for &x in &pm.sub {
        in_sub[x] = true;
    }
    let mut in_image = vec![false; pm.big];
    for &y in &pm.images {
        in_image[y] = true;
    }
    let lhs = pm.sub.iter().filter(|&&x| in_image[x]).count();
    let missed = pm.sub.len() - lhs;
    let rank1 = rank1_set(pm);
    let mut in_rank1 = vec![false; pm.big];
    for &x in &rank1 {
        in_rank1[x] = true;
    }
    let rank1_image: Vec<bool> = {
        let mut v = vec![false; pm.big];
        for (k, &x) in pm.sub.iter().enumerate() {
            if in_rank1[x] {
                v[pm.images[k]] = true;
            }
        }
        v
    };
    let overlap = rank1.iter().filter(|&&x| rank1_image[x]).count();
    let rhs = 3 * missed + overlap;
    TecCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TecSizeReport {
    pub size: usize,
    pub instances: u64,
    pub violations: u64,
}

/// Runs [`check_tec`] on every partial map with ambient size `1..=max_size`.
pub fn tec_exhaustive(max_size: usize) -> Result<Vec<TecSizeReport>> {
    if max_size > 7 {
        return Err(Error::Size {
            what: "ambient set size",
            got: max_size,
            limit: 7,
        });
    }
    Ok((1..=max_size)
        .map(|m| {
            let (instances, violations) = (0u32..1 << m)
                .into_par_iter()
                .map(|mask| {
                    let sub: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
                    let k = sub.len();
                    let total = (m as u64).pow(k as u32);
                    let mut violations = 0u64;
                    let mut images = vec![0usize; k];
                    for code in 0..total {
                        let mut c = code;
                        for slot in images.iter_mut() {
                            *slot = (c % m as u64) as usize;
                            c /= m as u64;
                        }
                        let pm = PartialFiniteMap {
                            big: m,
                            sub: sub.clone(),
                            images: images.clone(),
                        };
                        if !check_tec(&pm).holds {
                            violations += 1;
                        }
                    }
                    (total, violations)
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            TecSizeReport {
                size: m,
                instances,
                violations,
            }
        })
        .collect())
}

/// Largest ambient size accepted by [`tec_random`].
pub const TEC_RANDOM_LIMIT: usize = 64;

/// Random partial maps: `samples` draws for every ambient size `1..=max_size`.
pub fn tec_random(max_size: usize, samples: u64, seed: u64) -> Result<Vec<TecSizeReport>> {
    if max_size > TEC_RANDOM_LIMIT {
        return Err(Error::Size {
            what: "ambient set size",
            got: max_size,
            limit: TEC_RANDOM_LIMIT,
        });
    }
    Ok((1..=max_size)
        .map(|m| {
            let violations = (0..samples)
                .into_par_iter()
                .filter(|&i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((m as u64) << 40) | i);
                    let sub: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
                    let images = sub.iter().map(|_| rng.gen_range(0..m)).collect();
                    !check_tec(&PartialFiniteMap { big: m, sub, images }).holds
                })
                .count() as u64;
            TecSizeReport {
                size: m,
                instances: samples,
                violations,
            }
        })
        .collect())
}

/// Normal nodes: those reached by a backward chain that starts at a node with an external
/// preimage and never passes through the singular set before arriving.
fn normal_mask(fd: &FiniteDynamics, lambda: &[bool]) -> Vec<bool> {
    let pre = fd.preimage_lists();
    let mut normal = fd.external.clone();
    for _ in 0..fd.len() {
        let mut changed = false;
        for x in 0..fd.len() {
            if !normal[x] && pre[x].iter().any(|&y| !lambda[y] && normal[y]) {
                normal[x] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    normal
}

pub fn is_normal(fd: &FiniteDynamics, x: usize, lambda: &[usize]) -> bool {
    normal_mask(fd, &fd.mask(lambda))[x]
}

/// Oracle for [`is_normal`]: explicit search over backward chains of length at most `#nodes`.
pub fn is_normal_by_chains(fd: &FiniteDynamics, x: usize, lambda: &[usize]) -> bool {
    fn search(fd: &FiniteDynamics, pre: &[Vec<usize>], lam: &[bool], x: usize, depth: usize) -> bool {
        if fd.external[x] {
            return true;
        }
        depth > 0
            && pre[x]
                .iter()
                .any(|&y| !lam[y] && search(fd, pre, lam, y, depth - 1))
    }
    let pre = fd.preimage_lists();
    search(fd, &pre, &fd.mask(lambda), x, fd.len())
}

/// Non-normal nodes. Fails if the size bound `3 #lambda + 4` is exceeded.
pub fn abnormal_set(fd: &FiniteDynamics, lambda: &[usize]) -> Result<Vec<usize>> {
    let normal = normal_mask(fd, &fd.mask(lambda));
    let s: Vec<usize> = (0..fd.len()).filter(|&i| !normal[i]).collect();
    let n_lambda = fd.mask(lambda).iter().filter(|&&b| b).count();
    let bound = 3 * n_lambda + 4;
    if s.len() > bound {
        return Err(Error::InternalInvariant(format!(
            "abnormal set has {} nodes, above the bound {bound}",
            s.len()
        )));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalEnumeration {
    pub all_sets: Vec<Vec<usize>>,
    pub sigma_max: Vec<usize>,
    pub cardinality_bound: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchPath {
    /// Enumerate every subset of the node set.
    BruteForce,
    /// Enumerate subsets of the largest forward-invariant part of the abnormal set.
    Fast,
}

fn is_exceptional(fd: &FiniteDynamics, lam: &[bool], set_mask: u64) -> bool {
    let inside = |i: usize| set_mask >> i & 1 == 1;
    let mut extra = false;
    for i in 0..fd.len() {
        if inside(i) {
            if fd.external[i] || !inside(fd.forward[i]) {
                return false;
            }
        } else if inside(fd.forward[i]) {
            if !lam[i] {
                return false;
            }
            extra = true;
        }
    }
    extra
}

fn bits(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// All exceptional sets of the model for the singular set `lambda`, and their union.
pub fn exceptional_sets(fd: &FiniteDynamics, lambda: &[usize], path: SearchPath) -> Result<ExceptionalEnumeration> {
    let n = fd.len();
    let lam = fd.mask(lambda);
    let n_lambda = lam.iter().filter(|&&b| b).count();
    let candidates: Vec<usize> = match path {
        SearchPath::BruteForce => (0..n).collect(),
        SearchPath::Fast => {
            let normal = normal_mask(fd, &lam);
            let mut keep: Vec<bool> = normal.iter().map(|&b| !b).collect();
            loop {
                let mut changed = false;
                for i in 0..n {
                    if keep[i] && !keep[fd.forward[i]] {
                        keep[i] = false;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            (0..n).filter(|&i| keep[i]).collect()
        }
    };
    if candidates.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::Size {
            what: "subset enumeration nodes",
            got: candidates.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut all_sets = Vec::new();
    let mut union = 0u64;
    for sub in 1u64..1 << candidates.len() {
        let mask = candidates
            .iter()
            .enumerate()
            .filter(|&(k, _)| sub >> k & 1 == 1)
            .fold(0u64, |m, (_, &node)| m | 1 << node);
        if is_exceptional(fd, &lam, mask) {
            union |= mask;
            all_sets.push(mask);
        }
    }
    all_sets.sort_unstable();
    Ok(ExceptionalEnumeration {
        all_sets: all_sets.into_iter().map(|m| bits(m, n)).collect(),
        sigma_max: bits(union, n),
        cardinality_bound: 3 * n_lambda + 4,
    })
}

/// Draws a random model with at most `max_nodes` nodes.
///
/// Draws are rejected until the model is admissible: every node is reachable backwards
/// from a node with an external preimage, and at most four nodes with a unique preimage
/// and no external preimage map onto nodes of the same kind.
pub fn random_model<R: Rng>(rng: &mut R, max_nodes: usize) -> FiniteDynamics {
    let max_nodes = max_nodes.max(1);
    loop {
        let n = rng.gen_range(1..=max_nodes);
        let forward: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let critical: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.25)).collect();
        let external: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let fd = FiniteDynamics::new(forward, &critical, external).expect("generated model is well formed");
        if admissible(&fd) {
            return fd;
        }
    }
}

fn admissible(fd: &FiniteDynamics) -> bool {
    // reachability from external nodes, ignoring the singular set
    let none = vec![false; fd.len()];
    if normal_mask(fd, &none).iter().any(|&b| !b) {
        return false;
    }
    let pre = fd.preimage_lists();
    let unique: Vec<bool> = (0..fd.len()).map(|i| !fd.external[i] && pre[i].len() == 1).collect();
    let chained = (0..fd.len()).filter(|&i| unique[i] && unique[fd.forward[i]]).count();
    chained <= 4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRow {
    /// Number of singular nodes.
    pub critical: usize,
    pub samples: usize,
    pub max_sigma_max: usize,
    pub bound: usize,
    /// Reported only; no assertion is made against it.
    pub floor: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub seed: u64,
    pub samples: usize,
    pub rows: Vec<AuditRow>,
    pub path_mismatches: usize,
    pub containment_failures: usize,
    pub bound_violations: usize,
}

struct SampleOutcome {
    critical: usize,
    sigma: usize,
    mismatch: bool,
    uncontained: bool,
}

fn audit_one(seed: u64, index: u64, node_budget: usize) -> Result<SampleOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let fd = random_model(&mut rng, node_budget);
    let lambda = fd.critical();
    let fast = exceptional_sets(&fd, &lambda, SearchPath::Fast)?;
    let brute = exceptional_sets(&fd, &lambda, SearchPath::BruteForce)?;
    let abnormal = abnormal_set(&fd, &lambda)?;
    let uncontained = brute
        .all_sets
        .iter()
        .any(|s| s.iter().any(|x| abnormal.binary_search(x).is_err()));
    Ok(SampleOutcome {
        critical: lambda.len(),
        sigma: brute.sigma_max.len(),
        mismatch: fast != brute,
        uncontained,
    })
}

/// Samples random models and records the largest maximal exceptional set per singular count.
pub fn sigma_max_bound_audit(sample_count: usize, node_budget: usize, seed: u64) -> Result<AuditReport> {
    if sample_count == 0 || node_budget == 0 {
        return Err(Error::InvalidParameter("audit budgets must be positive".into()));
    }
    if node_budget > BRUTE_FORCE_LIMIT {
        return Err(Error::Size {
            what: "audit node budget",
            got: node_budget,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let outcomes: Vec<SampleOutcome> = (0..sample_count as u64)
        .into_par_iter()
        .map(|i| audit_one(seed, i, node_budget))
        .collect::<Result<_>>()?;
    let max_crit = outcomes.iter().map(|o| o.critical).max().unwrap_or(0);
    let mut rows: Vec<AuditRow> = (0..=max_crit)
        .map(|n| AuditRow {
            critical: n,
            samples: 0,
            max_sigma_max: 0,
            bound: 3 * n + 4,
            floor: (3 * n).saturating_sub(1),
        })
        .collect();
    for o in &outcomes {
        let row = &mut rows[o.critical];
        row.samples += 1;
        row.max_sigma_max = row.max_sigma_max.max(o.sigma);
    }
    let bound_violations = outcomes.iter().filter(|o| o.sigma > 3 * o.critical + 4).count();
    Ok(AuditReport {
        seed,
        samples: sample_count,
        rows,
        path_mismatches: outcomes.iter().filter(|o| o.mismatch).count(),
        containment_failures: outcomes.iter().filter(|o| o.uncontained).count(),
        bound_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // nodes: 0 = critical point, 1 = -1, 2 = +1
    fn chebyshev(ext_critical: bool) -> FiniteDynamics {
        FiniteDynamics::new(vec![1, 2, 2], &[0], vec![ext_critical, false, false]).unwrap()
    }

    #[test]
    fn rank_one_examples() {
        let pm = PartialFiniteMap::new(3, vec![0, 1, 2], vec![1, 2, 2]).unwrap();
        assert_eq!(rank1_set(&pm), vec![1]);
        let id = PartialFiniteMap::new(4, vec![0, 1, 2, 3], vec![0, 1, 2, 3]).unwrap();
        assert_eq!(rank1_set(&id), vec![0, 1, 2, 3]);
        let constant = PartialFiniteMap::new(3, vec![0, 1, 2], vec![0, 0, 0]).unwrap();
        assert!(rank1_set(&constant).is_empty());
    }

    #[test]
    fn tec_examples() {
        let pm = PartialFiniteMap::new(3, vec![0, 1, 2], vec![1, 2, 2]).unwrap();
        assert_eq!(check_tec(&pm), TecCheck { lhs: 2, rhs: 3, holds: true });
        let id = PartialFiniteMap::new(4, vec![0, 1, 2, 3], vec![0, 1, 2, 3]).unwrap();
        assert_eq!(check_tec(&id), TecCheck { lhs: 4, rhs: 4, holds: true });
    }

    #[test]
    fn chebyshev_normality() {
        let fd = chebyshev(false);
        assert!(!is_normal(&fd, 2, &[0]));
        assert!(!is_normal(&fd, 0, &[0]));
        let s = abnormal_set(&fd, &[0]).unwrap();
        assert!(s.contains(&1) && s.contains(&2) && s.len() <= 7);
        assert_eq!(abnormal_set(&chebyshev(true), &[0]).unwrap(), vec![1, 2]);
    }

    #[test]
    fn chebyshev_exceptional_sets() {
        for ext in [false, true] {
            let fd = chebyshev(ext);
            for path in [SearchPath::BruteForce, SearchPath::Fast] {
                let e = exceptional_sets(&fd, &[0], path).unwrap();
                assert_eq!(e.all_sets, vec![vec![1, 2]]);
                assert_eq!(e.sigma_max, vec![1, 2]);
                assert_eq!(e.cardinality_bound, 7);
            }
            assert!(exceptional_sets(&fd, &[], SearchPath::BruteForce).unwrap().all_sets.is_empty());
        }
    }

    #[test]
    fn empty_singular_set_has_no_abnormal_points() {
        let fd = FiniteDynamics::new(vec![1, 2, 0], &[], vec![true, false, false]).unwrap();
        assert!(abnormal_set(&fd, &[]).unwrap().is_empty());
    }

    #[test]
    fn exhaustive_small_sizes() {
        let reports = tec_exhaustive(4).unwrap();
        assert_eq!(reports.iter().map(|r| r.instances).collect::<Vec<_>>(), vec![2, 9, 64, 625]);
        assert!(reports.iter().all(|r| r.violations == 0));
    }

    fn arb_model() -> impl Strategy<Value = FiniteDynamics> {
        (any::<u64>(), 1usize..=8).prop_map(|(seed, n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_model(&mut rng, n)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn normality_matches_chain_search(fd in arb_model()) {
            let lambda = fd.critical();
            for x in 0..fd.len() {
                prop_assert_eq!(is_normal(&fd, x, &lambda), is_normal_by_chains(&fd, x, &lambda));
            }
        }

        #[test]
        fn abnormal_set_traps_preimages(fd in arb_model()) {
            let lambda = fd.critical();
            let s = abnormal_set(&fd, &lambda).unwrap();
            for (y, &x) in fd.forward().iter().enumerate() {
                if s.contains(&x) && !s.contains(&y) {
                    prop_assert!(lambda.contains(&y));
                }
            }
        }

        #[test]
        fn exceptional_sets_are_closed_under_union(fd in arb_model()) {
            let lambda = fd.critical();
            let e = exceptional_sets(&fd, &lambda, SearchPath::BruteForce).unwrap();
            for a in &e.all_sets {
                for b in &e.all_sets {
                    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
                    u.sort_unstable();
                    u.dedup();
                    prop_assert!(e.all_sets.contains(&u));
                }
            }
            if !e.all_sets.is_empty() {
                prop_assert!(e.all_sets.contains(&e.sigma_max));
            }
        }

        #[test]
        fn enlarging_lambda_never_shrinks_abnormal_set(fd in arb_model(), extra in 0usize..8) {
            let lambda = fd.critical();
            let mut bigger = lambda.clone();
            if extra < fd.len() && !bigger.contains(&extra) {
                bigger.push(extra);
            }
            let mut small = vec![false; fd.len()];
            for x in abnormal_set(&fd, &lambda).unwrap() {
                small[x] = true;
            }
            // the bound may legitimately change with the larger set, so compare masks directly
            let large = normal_mask(&fd, &fd.mask(&bigger));
            for x in 0..fd.len() {
                if small[x] {
                    prop_assert!(!large[x]);
                }
            }
        }
    }
}

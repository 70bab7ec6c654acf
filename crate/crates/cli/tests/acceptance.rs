//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use pressure_lab_core::cohomology::build_g;
use pressure_lab_core::combinatorics::{sigma_max_bound_audit, tec_exhaustive};
use pressure_lab_core::keller::{decay_correlation, osc1, p_variation, var_alpha1, GridMeasure};
use pressure_lab_core::map::{IntervalMap, NamedMap};
use pressure_lab_core::pressure::curve::count_kinks;
use pressure_lab_core::pressure::*;
use pressure_lab_core::UPotential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn named(m: NamedMap) -> IntervalMap {
    IntervalMap::named(m).expect("registry map")
}

fn t_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn within_budget(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let r = f();
    let took = start.elapsed();
    match r {
        Ok(d) if took <= budget => Ok(format!("{d}; {:.2}s", took.as_secs_f64())),
        Ok(d) => Err(format!("{d}; took {:.2}s over {:.0}s budget", took.as_secs_f64(), budget.as_secs_f64())),
        Err(d) => Err(format!("{d}; {:.2}s", took.as_secs_f64())),
    }
}

fn chebyshev_cohomology() -> Outcome {
    let f = named(NamedMap::Chebyshev2);
    let data = build_g(&f, &UPotential::geometric(&f)).map_err(|e| e.to_string())?;
    let sigma_ok = data.sigma_max.len() == 2
        && (data.sigma_max[0] + 1.0).abs() < 1e-12
        && (data.sigma_max[1] - 1.0).abs() < 1e-12;
    let alpha_ok = data.alpha.iter().all(|(_, a)| (a + 0.5).abs() < 1e-12) && data.alpha.len() == 2;
    let b_ok = data
        .b_coeffs
        .iter()
        .filter(|(x, _)| !data.sigma_max.iter().any(|s| (s - x).abs() < 1e-12))
        .all(|(x, b)| x.abs() < 1e-12 && b.abs() < 1e-12);
    let poles: Vec<f64> = data.g.singular_terms().iter().map(|s| s.center).chain(data.sigma_max.iter().copied()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..=10_000 {
        let x = -1.0 + 2.0 * i as f64 / 10_000.0;
        if poles.iter().any(|p| (p - x).abs() < 1e-3) {
            continue;
        }
        worst = worst.max((data.g.eval(&f, x).map_err(|e| e.to_string())? - LN_2).abs());
    }
    check(
        sigma_ok && alpha_ok && b_ok && worst <= 1e-9,
        format!("sigma={:?} alpha={:?} b={:?} max|G-ln2|={worst:.1e}", data.sigma_max, data.alpha, data.b_coeffs),
    )
}

fn chebyshev_curve() -> Outcome {
    let f = named(NamedMap::Chebyshev2);
    let ts = t_grid(-3.0, -0.05, 60);
    let curve = pressure_curve(&f, &UPotential::geometric(&f), &ts, &CurveConfig::default()).map_err(|e| e.to_string())?;
    let mut coll_err: f64 = 0.0;
    let mut tree_err: f64 = 0.0;
    let mut atomic_err: f64 = 0.0;
    for p in &curve.points {
        let exact = (1.0 - p.t) * LN_2;
        coll_err = coll_err.max((p.p_tilde - exact).abs());
        tree_err = tree_err.max((p.tree_est - exact).abs());
        atomic_err = atomic_err.max((p.atomic + 2.0 * p.t * LN_2).abs());
    }
    let tr = curve.transition.as_ref().ok_or("no transition verdict")?;
    let tc = tr.t_c.unwrap_or(f64::NAN);
    check(
        coll_err <= 0.02 && tree_err <= 0.03 && atomic_err < 1e-12 && (tc + 1.0).abs() <= 0.05 && tr.criterion,
        format!(
            "collocation err {coll_err:.1e}, tree err {tree_err:.1e} (depth {}), atomic err {atomic_err:.1e}, t_c={tc:.4}, criterion={}",
            curve.tree_depth, tr.criterion
        ),
    )
}

fn raw_tree() -> Outcome {
    let f = named(NamedMap::Chebyshev2);
    let u = UPotential::geometric(&f);
    let base = choose_base_point(&f, &u, 7).map_err(|e| e.to_string())?;
    let tree = PreimageTree::build(&f, &u, base, 18).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (t, exact) in [(-2.0, 4.0 * LN_2), (-0.5, 1.5 * LN_2)] {
        let v = tree.estimate(t).map_err(|e| e.to_string())?.value;
        ok &= (v - exact).abs() <= 0.1;
        parts.push(format!("t={t}: {v:.4} vs {exact:.4}"));
    }
    check(ok, format!("base {base:.6}, {}", parts.join(", ")))
}

fn tec() -> Outcome {
    let rows = tec_exhaustive(5).map_err(|e| e.to_string())?;
    let instances: u64 = rows.iter().map(|r| r.instances).sum();
    let violations: u64 = rows.iter().map(|r| r.violations).sum();
    check(violations == 0, format!("{instances} partial maps, {violations} violations"))
}

fn audit() -> Outcome {
    let r = sigma_max_bound_audit(10_000, 8, 2024).map_err(|e| e.to_string())?;
    check(
        r.path_mismatches == 0 && r.bound_violations == 0 && r.containment_failures == 0,
        format!(
            "{} samples: {} path mismatches, {} bound violations, {} containment failures",
            r.samples, r.path_mismatches, r.bound_violations, r.containment_failures
        ),
    )
}

fn hyperbolicity() -> Outcome {
    let f = named(NamedMap::Chebyshev2);
    let u = UPotential::geometric(&f);
    let e = |x: pressure_lab_core::Error| x.to_string();
    let hyp = hyperbolicity_check(&f, &u, -0.5, 12, 4001, 1.5 * LN_2).map_err(e)?;
    let non = hyperbolicity_check(&f, &u, -2.0, 12, 4001, 4.0 * LN_2).map_err(e)?;
    let mut ok = hyp.hyperbolic && (hyp.sup_avg - LN_2).abs() <= 0.05;
    ok &= !non.hyperbolic && (non.sup_avg - 4.0 * LN_2).abs() <= 0.05;
    let g = build_g(&f, &u).map_err(e)?.g;
    for t in [-3.0, -1.0, -0.2] {
        ok &= hyperbolicity_check(&f, &g, t, 12, 4001, (1.0 - t) * LN_2).map_err(e)?.hyperbolic;
    }
    check(
        ok,
        format!(
            "t=-0.5 sup {:.4} hyperbolic={}, t=-2 sup {:.4} hyperbolic={}, G hyperbolic at -3,-1,-0.2",
            hyp.sup_avg, hyp.hyperbolic, non.sup_avg, non.hyperbolic
        ),
    )
}

fn transfer_operator() -> Outcome {
    let e = |x: pressure_lab_core::Error| x.to_string();
    let tent = named(NamedMap::Tent);
    let r = conformal_and_equilibrium(&tent, &UPotential::geometric(&tent), 1.0, 1024, 1).map_err(e)?;
    let lambda = r.spectral.lambda;
    let uniform = r.spectral.left.iter().map(|m| (m * 1024.0 - 1.0).abs()).fold(0.0, f64::max);
    let mut ok = (lambda - 1.0).abs() <= 1e-8 && uniform <= 0.02 && r.checks.len() == 32 && r.max_rel_error <= 0.05;

    let t2 = named(NamedMap::Chebyshev2);
    let m = collocation_operator(&t2, |_| Ok(0.5), 512).map_err(e)?;
    let s = leading_spectrum(&m).map_err(e)?;
    let mode = s.second_mode.clone();
    let d = decay_correlation(&s, &m, &mode, &mode, 60).map_err(e)?;
    ok &= s.second_ratio < 1.0 && !d.vanished && (d.rate - s.second_ratio).abs() <= 0.1;
    check(
        ok,
        format!(
            "tent lambda-1={:.1e}, left dev {uniform:.1e}, conformal err {:.3} on {} cells; T2 ratio {:.4}, decay {:.4}",
            lambda - 1.0,
            r.max_rel_error,
            r.checks.len(),
            s.second_ratio,
            d.rate
        ),
    )
}

fn keller_norms() -> Outcome {
    let e = |x: pressure_lab_core::Error| x.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let m = GridMeasure::uniform(64, 0.0, 1.0).map_err(e)?;
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for _ in 0..100 {
        let h1: Vec<f64> = (0..64).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let h2: Vec<f64> = (0..64).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let c: f64 = rng.gen_range(-3.0..3.0);
        let alpha: f64 = rng.gen_range(0.1..=1.0);
        let var = |h: &[f64]| var_alpha1(h, alpha, 1.0, &m, None).map(|k| k.var_part);
        let (v1, v2) = (var(&h1).map_err(e)?, var(&h2).map_err(e)?);
        let sum: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = h1.iter().map(|a| c * a).collect();
        worst = worst.max(var(&sum).map_err(e)? - v1 - v2);
        worst = worst.max((var(&scaled).map_err(e)? - c.abs() * v1).abs() / (1.0 + v1));
        let mut prev = 0.0;
        for k in (0..12).rev() {
            let o = osc1(&h1, 0.5f64.powi(k), &m).map_err(e)?;
            monotone &= o >= prev - 1e-15;
            prev = o;
        }
    }
    let mut dp_err: f64 = 0.0;
    for n in 1..=12 {
        let ys: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, rng.gen_range(-3.0..3.0))).collect();
        let p = rng.gen_range(1.0..4.0);
        let dp = p_variation(&ys, p).map_err(e)?;
        let bf = brute_p_variation(&ys, p);
        dp_err = dp_err.max((dp - bf).abs() / (1.0 + bf));
    }
    check(
        worst <= 1e-10 && monotone && dp_err <= 1e-12,
        format!("seminorm defect {worst:.1e} over 100 draws, osc monotone={monotone}, DP vs brute force {dp_err:.1e}"),
    )
}

fn brute_p_variation(samples: &[(f64, f64)], p: f64) -> f64 {
    let n = samples.len();
    let mut best: f64 = 0.0;
    for mask in 0u32..1 << n {
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let s: f64 = idx.windows(2).map(|w| (samples[w[1]].1 - samples[w[0]].1).abs().powf(p)).sum();
        best = best.max(s);
    }
    best.powf(1.0 / p)
}

fn telescoping() -> Outcome {
    let e = |x: pressure_lab_core::Error| x.to_string();
    let f = named(NamedMap::Chebyshev2);
    let u = UPotential::geometric(&f);
    let data = build_g(&f, &u).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 100 {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let n = rng.gen_range(1..=12);
        let orbit: Vec<f64> = (0..=n).map(|k| f.iterate(x, k)).collect::<Result<_, _>>().map_err(e)?;
        if orbit.iter().any(|y| y.abs() < 1e-3 || (y.abs() - 1.0).abs() < 1e-3) {
            continue;
        }
        let lhs = f.birkhoff_sum(&data.g, x, n).map_err(e)? - f.birkhoff_sum(&u, x, n).map_err(e)?;
        worst = worst.max((lhs - (data.g.h(orbit[n]) - data.g.h(x))).abs());
        checked += 1;
    }
    check(worst <= 1e-8, format!("{checked} orbits, max defect {worst:.1e}"))
}

fn kink_counts() -> Outcome {
    let e = |x: pressure_lab_core::Error| x.to_string();
    let ts = t_grid(-3.0, -0.05, 60);
    let cfg = CurveConfig::default();
    let t2 = named(NamedMap::Chebyshev2);
    let u = UPotential::geometric(&t2);
    let g = build_g(&t2, &u).map_err(e)?.g;
    let col = |c: &PressureCurve, f: fn(&CurvePoint) -> f64| c.points.iter().map(f).collect::<Vec<_>>();
    let hidden = pressure_curve(&t2, &g, &ts, &cfg).map_err(e)?;
    let geo = pressure_curve(&t2, &u, &ts, &cfg).map_err(e)?;
    let tent = named(NamedMap::Tent);
    let tent_curve = pressure_curve(&tent, &UPotential::geometric(&tent), &ts, &cfg).map_err(e)?;
    let ulam = named(NamedMap::Ulam);
    let ulam_g = build_g(&ulam, &UPotential::geometric(&ulam)).map_err(e)?.g;
    let ulam_curve = pressure_curve(&ulam, &ulam_g, &ts, &cfg).map_err(e)?;
    let k = [
        count_kinks(&ts, &col(&hidden, |p| p.p_tilde)),
        count_kinks(&ts, &col(&geo, |p| p.p)),
        count_kinks(&ts, &col(&tent_curve, |p| p.p)),
        count_kinks(&ts, &col(&ulam_curve, |p| p.p)),
    ];
    check(
        k == [0, 1, 0, 0],
        format!("T2 hidden {}, T2 geometric {}, tent {}, Ulam transformed {}", k[0], k[1], k[2], k[3]),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let criteria: Vec<Criterion> = vec![
        ("chebyshev exceptional set and transformed potential", secs(1), chebyshev_cohomology),
        ("pressure curve engines and transition location", secs(60), chebyshev_curve),
        ("raw preimage tree at depth 18", secs(120), raw_tree),
        ("finite counting inequality, exhaustive to size 5", secs(60), tec),
        ("exceptional set bound audit", secs(120), audit),
        ("hyperbolicity verdicts", secs(60), hyperbolicity),
        ("transfer operator, conformality and decay", secs(60), transfer_operator),
        ("oscillation norms and p-variation", secs(60), keller_norms),
        ("coboundary telescoping", secs(60), telescoping),
        ("kink counts", secs(120), kink_counts),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        match within_budget(budget, f) {
            Ok(d) => println!("PASS [{:>2}] {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}

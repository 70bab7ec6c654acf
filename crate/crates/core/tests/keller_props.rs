use nalgebra::DMatrix;
use pressure_lab_core::keller::*;
use pressure_lab_core::map::{IntervalMap, NamedMap};
use pressure_lab_core::pressure::{collocation_operator, leading_spectrum, SparseMatrix};
use proptest::prelude::*;

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

fn grid_fn() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn variation_is_a_seminorm(h1 in grid_fn(), h2 in grid_fn(), c in -3.0f64..3.0, alpha in 0.1f64..=1.0) {
        let m = GridMeasure::uniform(64, 0.0, 1.0).unwrap();
        let v1 = var_alpha1(&h1, alpha, 1.0, &m, None).unwrap().var_part;
        let v2 = var_alpha1(&h2, alpha, 1.0, &m, None).unwrap().var_part;
        let sum: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a + b).collect();
        let vs = var_alpha1(&sum, alpha, 1.0, &m, None).unwrap().var_part;
        prop_assert!(vs <= v1 + v2 + 1e-10);
        let scaled: Vec<f64> = h1.iter().map(|a| c * a).collect();
        let vc = var_alpha1(&scaled, alpha, 1.0, &m, None).unwrap().var_part;
        prop_assert!((vc - c.abs() * v1).abs() <= 1e-10 * (1.0 + v1));
    }

    #[test]
    fn oscillation_grows_with_radius(h in grid_fn(), w in prop::collection::vec(0.01f64..1.0, 64)) {
        let support: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let m = GridMeasure::new(support, w).unwrap();
        let mut prev = 0.0;
        for k in (0..12).rev() {
            let o = osc1(&h, 0.5f64.powi(k), &m).unwrap();
            prop_assert!(o >= prev - 1e-15);
            prev = o;
        }
    }

    #[test]
    fn p_variation_matches_brute_force(ys in prop::collection::vec(-3.0f64..3.0, 1..=12), p in 1.0f64..4.0) {
        let samples: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let dp = p_variation(&samples, p).unwrap();
        let bf = brute_p_variation(&samples, p);
        prop_assert!((dp - bf).abs() <= 1e-12 * (1.0 + bf));
    }

    #[test]
    fn p_variation_decreases_in_p(ys in prop::collection::vec(-3.0f64..3.0, 2..40), p in 1.0f64..3.0, dq in 0.0f64..3.0) {
        let samples: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let a = p_variation(&samples, p).unwrap();
        let b = p_variation(&samples, p + dq).unwrap();
        prop_assert!(b <= a + 1e-12);
        let jump = ys.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        let tv = p_variation(&samples, 1.0).unwrap();
        let v8 = p_variation(&samples, 8.0).unwrap();
        prop_assert!(v8 >= jump - 1e-12 && v8 <= tv + 1e-12);
    }

    #[test]
    fn leading_eigenvalue_matches_dense_oracle(entries in prop::collection::vec(0.05f64..1.0, 36)) {
        let dense: Vec<Vec<f64>> = entries.chunks(6).map(|r| r.to_vec()).collect();
        let s = leading_spectrum(&SparseMatrix::from_dense(&dense).unwrap()).unwrap();
        let eig = DMatrix::from_row_slice(6, 6, &entries).complex_eigenvalues();
        let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        prop_assert!((s.lambda - moduli[0]).abs() <= 1e-8 * moduli[0]);
        prop_assert!((s.second_ratio - moduli[1] / moduli[0]).abs() <= 0.05);
    }
}

#[test]
fn lipschitz_variation_bound() {
    let m = GridMeasure::uniform(500, 0.0, 1.0).unwrap();
    // slope 3 in the measure distance, which is the coordinate here
    let h: Vec<f64> = m.support().iter().map(|x| 3.0 * x).collect();
    let k = var_alpha1(&h, 1.0, 1.0, &m, None).unwrap();
    assert!(k.var_part <= 2.0 * 3.0 + 1e-9);
    let c = var_alpha1(&vec![-2.5; 500], 0.5, 1.0, &m, None).unwrap();
    assert_eq!(c.var_part, 0.0);
    assert!((c.total - 2.5).abs() < 1e-12);
}

#[test]
fn decay_examples() {
    let tent = IntervalMap::named(NamedMap::Tent).unwrap();
    let m = collocation_operator(&tent, |_| Ok(0.5), 1024).unwrap();
    let s = leading_spectrum(&m).unwrap();
    let x: Vec<f64> = (0..1024).map(|i| (i as f64 + 0.5) / 1024.0 - 0.5).collect();
    let r = decay_correlation(&s, &m, &x, &x, 30).unwrap();
    assert!(r.rate <= 0.55, "{r:?}");
    let ones = vec![1.0; 1024];
    let r = decay_correlation(&s, &m, &ones, &x, 10).unwrap();
    assert!(r.vanished && r.series.iter().all(|&c| c < 1e-15));

    let t2 = IntervalMap::named(NamedMap::Chebyshev2).unwrap();
    let m = collocation_operator(&t2, |_| Ok(0.5), 512).unwrap();
    let s = leading_spectrum(&m).unwrap();
    let mode = s.second_mode.clone();
    let r = decay_correlation(&s, &m, &mode, &mode, 60).unwrap();
    assert!(!r.vanished);
    assert!((r.rate - s.second_ratio).abs() <= 0.1, "rate {} vs {}", r.rate, s.second_ratio);
}

mod common;

use common::{gapped, gaussian, rel_close};
use fanion::bench::{lls_grad, lls_loss, lls_make};
use fanion::lmo::{f_fanion_spec, lmo_evaluate, s_fanion_spec, support_value, LmoSpec};
use fanion::matrix::{exact_svd, frobenius_inner, random_psd_uniform_spectrum, singular_values};
use fanion::norms::{ky_fan_diag3_closed_form, norm_eval};
use fanion::{Matrix, NormKind, RngSeed};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..9, 1usize..9)
}

fn kinds(k: usize) -> Vec<NormKind> {
    vec![
        NormKind::Frobenius,
        NormKind::Spectral,
        NormKind::Nuclear,
        NormKind::Chebyshev,
        NormKind::EntrywiseL1,
        NormKind::KyFan { k },
        NormKind::KyFanDual { k },
        NormKind::Fkfk { k, alpha: 0.3 },
        NormKind::Ckfk { k, alpha: 0.6, eta: 0.05 },
    ]
}

fn numerical_rank(m: &Matrix) -> usize {
    let s = singular_values(m).unwrap();
    s.iter().filter(|&&v| v >= 1e-8 * s[0]).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn svd_reconstructs_with_orthonormal_factors((r, c) in shape(), seed in any::<u64>()) {
        let m = gaussian(r, c, seed);
        let f = exact_svd(&m).unwrap();
        prop_assert!(f.orthonormality_defect() <= 1e-12);
        prop_assert!((&f.reconstruct() - &m).frobenius_norm() <= 1e-12 * m.frobenius_norm().max(1.0));
        prop_assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn inner_product_symmetric_bilinear((r, c) in shape(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = gaussian(r, c, seed);
        let y = gaussian(r, c, seed ^ 1);
        let z = gaussian(r, c, seed ^ 2);
        prop_assert_eq!(frobenius_inner(&x, &y).unwrap(), frobenius_inner(&y, &x).unwrap());
        let lhs = frobenius_inner(&(&(&x * a) + &(&y * b)), &z).unwrap();
        let rhs = a * frobenius_inner(&x, &z).unwrap() + b * frobenius_inner(&y, &z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn psd_spectrum_in_unit_interval(n in 1usize..12, seed in any::<u64>()) {
        let m = random_psd_uniform_spectrum(n, RngSeed(seed)).unwrap();
        prop_assert_eq!(m.clone(), m.transpose());
        for s in exact_svd(&m).unwrap().sigma {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        }
    }

    #[test]
    fn ky_fan_ladder((r, c) in shape(), seed in any::<u64>()) {
        let m = gaussian(r, c, seed);
        let d = r.min(c);
        let values: Vec<f64> = (1..=d).map(|k| norm_eval(&m, NormKind::KyFan { k }).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-14)));
        prop_assert!(rel_close(values[0], norm_eval(&m, NormKind::Spectral).unwrap(), 1e-14));
        prop_assert!(rel_close(values[d - 1], norm_eval(&m, NormKind::Nuclear).unwrap(), 1e-14));
    }

    #[test]
    fn norms_absolutely_homogeneous((r, c) in shape(), seed in any::<u64>(), scale in -20.0f64..20.0) {
        let m = gaussian(r, c, seed);
        let k = 1 + (seed as usize) % r.min(c);
        for kind in kinds(k) {
            let lhs = norm_eval(&(&m * scale), kind).unwrap();
            let rhs = scale.abs() * norm_eval(&m, kind).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs), "{kind}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn norms_triangle_inequality((r, c) in shape(), seed in any::<u64>()) {
        let a = gaussian(r, c, seed);
        let b = gaussian(r, c, seed.wrapping_add(7));
        let k = 1 + (seed as usize) % r.min(c);
        for kind in kinds(k) {
            let sum = norm_eval(&(&a + &b), kind).unwrap();
            let bound = norm_eval(&a, kind).unwrap() + norm_eval(&b, kind).unwrap();
            prop_assert!(sum <= bound + 1e-12 * (1.0 + bound), "{kind}");
        }
    }

    #[test]
    fn diag3_closed_forms(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
        let m = Matrix::diag(&[x, y, z]);
        let (primal, dual) = ky_fan_diag3_closed_form(x, y, z);
        let kf = norm_eval(&m, NormKind::KyFan { k: 2 }).unwrap();
        let kfd = norm_eval(&m, NormKind::KyFanDual { k: 2 }).unwrap();
        prop_assert!((kf - primal).abs() <= 1e-12 * (1.0 + primal));
        prop_assert!((kfd - dual).abs() <= 1e-12 * (1.0 + dual));
    }

    #[test]
    fn fanion_attains_ky_fan_and_random_directions_stay_below_dual((r, c) in (2usize..7, 2usize..7), seed in any::<u64>()) {
        let m = gaussian(r, c, seed);
        let k = 1 + (seed as usize) % r.min(c);
        let attained = support_value(&m, &LmoSpec::fanion(k)).unwrap();
        let ky_fan = norm_eval(&m, NormKind::KyFan { k }).unwrap();
        prop_assert!(rel_close(attained, ky_fan, 1e-12));
        let dual = norm_eval(&m, NormKind::KyFanDual { k }).unwrap();
        for i in 0..50 {
            let d = gaussian(r, c, seed.wrapping_mul(31).wrapping_add(i));
            let d = &d * (1.0 / norm_eval(&d, NormKind::KyFan { k }).unwrap());
            prop_assert!(frobenius_inner(&m, &d).unwrap() <= dual + 1e-8);
        }
    }

    #[test]
    fn fanion_rank_law((r, c) in (2usize..9, 2usize..9), seed in any::<u64>()) {
        let m = gapped(r, c, RngSeed(seed));
        for k in 1..=r.min(c) {
            prop_assert_eq!(numerical_rank(&lmo_evaluate(&m, &LmoSpec::fanion(k)).unwrap()), k);
        }
    }

    #[test]
    fn outputs_lie_on_unit_spheres((r, c) in (2usize..8, 2usize..8), seed in any::<u64>()) {
        let m = gaussian(r, c, seed);
        let k = 1 + (seed as usize) % r.min(c);
        let cases = [
            (LmoSpec::nsgd(), NormKind::Frobenius),
            (LmoSpec::muon(), NormKind::Spectral),
            (LmoSpec::sign_sgd(), NormKind::Chebyshev),
            (LmoSpec::neon(), NormKind::Nuclear),
            (LmoSpec::fanion(k), NormKind::KyFanDual { k }),
            (LmoSpec::ky_fan_primal(k), NormKind::KyFan { k }),
        ];
        for (spec, ball) in cases {
            let d = lmo_evaluate(&m, &spec).unwrap();
            prop_assert!((norm_eval(&d, ball).unwrap() - 1.0).abs() <= 1e-9, "{spec}");
        }
    }

    #[test]
    fn combination_is_linear_in_support((r, c) in (2usize..7, 2usize..7), seed in any::<u64>(),
                                        w in prop::collection::vec(0.0f64..5.0, 3)) {
        let m = gaussian(r, c, seed);
        let k = 1 + (seed as usize) % r.min(c);
        let parts = [LmoSpec::muon(), LmoSpec::fanion(k), LmoSpec::sign_sgd()];
        let terms: Vec<(f64, LmoSpec)> = w.iter().copied().zip(parts.iter().cloned()).collect();
        let combined = support_value(&m, &LmoSpec::combination(terms).unwrap()).unwrap();
        let summed: f64 = w.iter().zip(&parts).map(|(wi, s)| wi * support_value(&m, s).unwrap()).sum();
        prop_assert!((combined - summed).abs() <= 1e-12 * (1.0 + summed.abs()));
    }

    #[test]
    fn fanion_families_match_their_norms((r, c) in (2usize..7, 2usize..7), seed in any::<u64>(), alpha in 0.0f64..=1.0) {
        let m = gaussian(r, c, seed);
        let k = 1 + (seed as usize) % r.min(c);
        let f = support_value(&m, &f_fanion_spec(k, alpha).unwrap()).unwrap();
        let expect = alpha * norm_eval(&m, NormKind::KyFan { k }).unwrap() + (1.0 - alpha) * m.frobenius_norm();
        prop_assert!(rel_close(f, expect, 1e-12));
        let s = support_value(&m, &s_fanion_spec(k, alpha, 0.01).unwrap()).unwrap();
        let expect = alpha * norm_eval(&m, NormKind::KyFan { k }).unwrap()
            + (1.0 - alpha) * 0.01 * norm_eval(&m, NormKind::EntrywiseL1).unwrap();
        prop_assert!(rel_close(s, expect, 1e-12));
    }

    #[test]
    fn sign_is_odd((r, c) in shape(), seed in any::<u64>()) {
        let m = gaussian(r, c, seed);
        let pos = lmo_evaluate(&m, &LmoSpec::sign_sgd()).unwrap();
        let neg = lmo_evaluate(&-&m, &LmoSpec::sign_sgd()).unwrap();
        prop_assert_eq!(-&pos, neg);
    }

    #[test]
    fn lls_convex_along_lines((r, c) in (1usize..7, 1usize..7), seed in any::<u64>(), t in 0.0f64..=1.0) {
        let p = lls_make(r, c, 0.1, RngSeed(seed)).unwrap();
        let x = gaussian(r, c, seed ^ 3);
        let y = gaussian(r, c, seed ^ 4);
        let mid = &(&x * t) + &(&y * (1.0 - t));
        let f = |z: &Matrix| lls_loss(&p, z).unwrap();
        prop_assert!(f(&mid) <= t * f(&x) + (1.0 - t) * f(&y) + 1e-10);
        prop_assert!(f(&x) >= 0.0);
    }

    #[test]
    fn gradient_norm_ordering((r, c) in (1usize..7, 1usize..7), seed in any::<u64>()) {
        let p = lls_make(r, c, 1.0, RngSeed(seed)).unwrap();
        let g = lls_grad(&p, p.x0()).unwrap();
        let s = norm_eval(&g, NormKind::Spectral).unwrap();
        let f = norm_eval(&g, NormKind::Frobenius).unwrap();
        let n = norm_eval(&g, NormKind::Nuclear).unwrap();
        prop_assert!(s <= f * (1.0 + 1e-12) && f <= n * (1.0 + 1e-12));
    }
}

#[test]
fn schatten_ladder_on_gapped_matrix() {
    let m = gapped(6, 5, RngSeed(9));
    let muon = lmo_evaluate(&m, &LmoSpec::muon()).unwrap();
    let dist: Vec<f64> = [4.0, 16.0, 64.0, 256.0]
        .iter()
        .map(|&p| (&lmo_evaluate(&m, &LmoSpec::schatten(p).unwrap()).unwrap() - &muon).frobenius_norm())
        .collect();
    assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
    let near_one = lmo_evaluate(&m, &LmoSpec::schatten(1.0 + 1e-6).unwrap()).unwrap();
    let neon = lmo_evaluate(&m, &LmoSpec::neon()).unwrap();
    assert!((&near_one - &neon).frobenius_norm() <= 1e-3);
    let two = lmo_evaluate(&m, &LmoSpec::schatten(2.0).unwrap()).unwrap();
    assert!((&two - &lmo_evaluate(&m, &LmoSpec::nsgd()).unwrap()).max_abs() <= 1e-12);
}

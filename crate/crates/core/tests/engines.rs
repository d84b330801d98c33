mod common;

use common::{gaussian, planted};
use fanion::lowrank::{
    approximation_errors, newton_schulz_polar, power_iteration_topk_op, randomized_svd_topk_op, trlan_topk_op,
    CountingOperator, EngineConfig, EngineKind,
};
use fanion::matrix::exact_svd;
use fanion::{Matrix, RngSeed};

/// Leading `k` values spread over `[1, 3]`, then a drop by `gap`, then geometric decay.
fn planted_spectrum(dim: usize, k: usize, gap: f64) -> Vec<f64> {
    let mut s: Vec<f64> = (0..k).map(|i| 3.0 - 2.0 * i as f64 / k as f64).collect();
    let mut tail = s[k - 1] / gap;
    while s.len() < dim {
        s.push(tail);
        tail *= 0.6;
    }
    s
}

#[test]
fn planted_spectra_reach_tolerance() {
    let tol = 1e-8;
    let mut cases = 0;
    for seed in 0..50u64 {
        let (rows, cols) = if seed % 2 == 0 { (40, 28) } else { (25, 37) };
        let k = 1 + (seed as usize % 5);
        let sigma = planted_spectrum(rows.min(cols), k, 1.5);
        let m = planted(rows, cols, &sigma, RngSeed(seed));
        let exact = exact_svd(&m).unwrap();
        for engine in [EngineKind::PowerIteration, EngineKind::Rsvd, EngineKind::Trlan] {
            let cfg = EngineConfig::new(engine, k).with_tol(tol).with_seed(RngSeed(seed + 1000));
            let rep = cfg.run(&m).unwrap();
            let (_, err2) = approximation_errors(&rep.factors, &exact, k).unwrap();
            assert!(err2 <= 10.0 * tol, "{engine} seed {seed} k {k}: err2 {err2:e}");
            cases += 1;
        }
    }
    assert_eq!(cases, 150);
}

#[test]
fn trlan_needs_fewer_matvecs_than_rsvd_at_matched_accuracy() {
    let k = 50;
    let (mut trlan_total, mut rsvd_total) = (0usize, 0usize);
    for seed in 0..5u64 {
        let m = gaussian(500, 500, 7000 + seed);
        let exact = exact_svd(&m).unwrap();
        let rsvd = EngineConfig::new(EngineKind::Rsvd, k).with_seed(RngSeed(seed)).run(&m).unwrap();
        let (_, target) = approximation_errors(&rsvd.factors, &exact, k).unwrap();
        let matched = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-6, 1e-8]
            .iter()
            .find_map(|&tol| {
                let rep = EngineConfig::new(EngineKind::Trlan, k)
                    .with_tol(tol)
                    .with_seed(RngSeed(seed))
                    .run(&m)
                    .unwrap();
                let (_, err2) = approximation_errors(&rep.factors, &exact, k).unwrap();
                (err2 <= target).then_some(rep.matvecs)
            })
            .expect("trlan never matched the rsvd error");
        trlan_total += matched;
        rsvd_total += rsvd.matvecs;
    }
    assert!(trlan_total <= rsvd_total, "trlan {trlan_total} vs rsvd {rsvd_total}");
}

#[test]
fn counting_wrapper_agrees_with_formulas() {
    let m = gaussian(30, 20, 1);
    let k = 3;

    let outer = CountingOperator::new(&m);
    let cfg = EngineConfig::new(EngineKind::PowerIteration, k).with_tol(1e-300).with_max_iters(7);
    let rep = power_iteration_topk_op(&outer, &cfg).unwrap();
    assert_eq!(rep.iterations, 7);
    assert_eq!(outer.matvecs(), k + 2 * k * 7);
    assert_eq!(rep.matvecs, outer.matvecs());

    for (oversampling, passes) in [(0, 0), (0, 2), (5, 1), (10, 2)] {
        let outer = CountingOperator::new(&m);
        let cfg = EngineConfig::new(EngineKind::Rsvd, k)
            .with_oversampling(oversampling)
            .with_power_passes(passes);
        let rep = randomized_svd_topk_op(&outer, &cfg).unwrap();
        assert_eq!(outer.matvecs(), (k + oversampling) * (2 + 2 * passes));
        assert_eq!(rep.matvecs, outer.matvecs());
    }

    for subspace in [8, 20] {
        let outer = CountingOperator::new(&m);
        let cfg = EngineConfig::new(EngineKind::Trlan, k).with_subspace(subspace);
        let rep = trlan_topk_op(&outer, &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(outer.matvecs(), 2 * rep.iterations + k);
        assert_eq!(rep.matvecs, outer.matvecs());
    }
}

#[test]
fn oversampling_changes_rsvd_cost_by_formula() {
    let m = gaussian(40, 40, 2);
    let base = EngineConfig::new(EngineKind::Rsvd, 4).with_oversampling(0);
    let a = base.clone().run(&m).unwrap().matvecs;
    let b = base.with_oversampling(6).run(&m).unwrap().matvecs;
    assert_eq!(b - a, 6 * (2 + 2 * 2));
}

#[test]
fn newton_schulz_orthonormal_within_tolerance() {
    for seed in 0..10u64 {
        let m = gaussian(30, 12 + seed as usize, seed);
        let tol = 1e-7;
        let r = newton_schulz_polar(&m, tol, 100).unwrap();
        assert!(r.converged);
        let d = &r.polar;
        let gram = d.transpose().matmul(d).unwrap();
        let defect = (&gram - &Matrix::identity(d.cols())).frobenius_norm();
        assert!(defect <= 10.0 * tol, "seed {seed}: {defect:e}");
    }
}

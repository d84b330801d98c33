use std::time::Instant;

use super::{column, orth_fill, pack_factors, small_svd, CountingOperator, EngineConfig, EngineReport, LinearOperator};
use crate::error::Result;
use crate::matrix::{gaussian_mat, Matrix};

/// Randomized SVD with `l = k + oversampling` sketch columns and
/// `q = power_passes` power passes.
///
/// `Y = M(MᵀM)^q Ω` with re-orthonormalization after every application, then
/// `Z = MᵀQ` and a small SVD of `Z`. Cost: `l (2 + 2q)` matvecs.
/// No residual test is made; `converged` is always true and `residual` is `None`.
pub fn randomized_svd_topk(m: &Matrix, cfg: &EngineConfig) -> Result<EngineReport> {
    randomized_svd_topk_op(m, cfg)
}

pub fn randomized_svd_topk_op<O: LinearOperator + ?Sized>(op: &O, cfg: &EngineConfig) -> Result<EngineReport> {
    let (rows, cols) = (op.nrows(), op.ncols());
    cfg.validate(rows, cols)?;
    let start = Instant::now();
    let op = CountingOperator::new(op);
    let mut rng = cfg.seed.rng();
    let l = (cfg.k + cfg.oversampling).min(rows.min(cols));

    let omega = gaussian_mat(cols, l, &mut rng);
    let mut q = op.apply(omega.as_ref());
    orth_fill(None, &mut q, &mut rng);
    for _ in 0..cfg.power_passes {
        let mut z = op.apply_transpose(q.as_ref());
        orth_fill(None, &mut z, &mut rng);
        q = op.apply(z.as_ref());
        orth_fill(None, &mut q, &mut rng);
    }
    let z = op.apply_transpose(q.as_ref());
    // Z = MᵀQ = P Σ Wᵀ  ⇒  Mᵀ(QW) = PΣ
    let (v, sigma, w) = small_svd(&z)?;
    let u = &q * &w;
    let triplets = (0..cfg.k).map(|j| (sigma[j], column(&u, j), column(&v, j))).collect();
    Ok(EngineReport {
        factors: pack_factors(triplets),
        matvecs: op.matvecs(),
        iterations: cfg.power_passes,
        wall_time: start.elapsed().as_secs_f64(),
        converged: true,
        residual: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::{approximation_errors, EngineKind};
    use crate::matrix::{exact_svd, random_gaussian, RngSeed};

    #[test]
    fn exact_low_rank_is_recovered() {
        let a = random_gaussian(40, 3, 1.0, RngSeed(1)).unwrap();
        let b = random_gaussian(3, 30, 1.0, RngSeed(2)).unwrap();
        let m = a.matmul(&b).unwrap();
        let rep = randomized_svd_topk(&m, &EngineConfig::new(EngineKind::Rsvd, 3)).unwrap();
        let err = (&rep.factors.reconstruct() - &m).frobenius_norm() / m.frobenius_norm();
        assert!(err < 1e-10, "{err}");
        assert_eq!(rep.matvecs, 13 * (2 + 2 * 2));
    }

    #[test]
    fn more_passes_reduce_error() {
        let m = random_gaussian(60, 40, 1.0, RngSeed(1)).unwrap();
        let exact = exact_svd(&m).unwrap();
        let err = |q| {
            let cfg = EngineConfig::new(EngineKind::Rsvd, 5).with_power_passes(q);
            let rep = randomized_svd_topk(&m, &cfg).unwrap();
            assert_eq!(rep.matvecs, 15 * (2 + 2 * q));
            approximation_errors(&rep.factors, &exact, 5).unwrap().1
        };
        assert!(err(40) < err(2));
        assert!(err(200) < 1e-6);
    }

    #[test]
    fn sketch_clamped_to_min_dim() {
        let m = random_gaussian(8, 6, 1.0, RngSeed(2)).unwrap();
        let rep = randomized_svd_topk(&m, &EngineConfig::new(EngineKind::Rsvd, 6)).unwrap();
        assert_eq!(rep.factors.rank(), 6);
        let exact = exact_svd(&m).unwrap();
        for (a, b) in rep.factors.sigma.iter().zip(&exact.sigma) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = random_gaussian(30, 20, 1.0, RngSeed(3)).unwrap();
        let cfg = EngineConfig::new(EngineKind::Rsvd, 4).with_seed(RngSeed(11));
        let a = randomized_svd_topk(&m, &cfg).unwrap();
        let b = randomized_svd_topk(&m, &cfg).unwrap();
        assert_eq!(a.factors, b.factors);
        assert_eq!(a.matvecs, b.matvecs);
    }
}

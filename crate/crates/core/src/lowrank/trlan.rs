use std::time::Instant;

use faer::{Mat, MatRef};

use super::{orth_fill, pack_factors, CountingOperator, EngineConfig, EngineReport, LinearOperator};
use crate::error::{Error, Result};
use crate::matrix::{gaussian_mat, orthonormalize_against, Matrix};

/// Thick-restart Lanczos on the smaller Gram operator (`MᵀM` or `MMᵀ`).
///
/// The basis holds at most `d = cfg.subspace_size(dim)` vectors. When it is
/// full, the leading `k + (d − k) / 2` Ritz vectors are kept and the Lanczos
/// residual becomes the next basis vector. Every new vector is
/// reorthogonalized (CGS2) against the whole basis. Each Lanczos step costs two
/// matvecs; recovering the other side of the `k` triplets costs `k` more.
pub fn trlan_topk(m: &Matrix, cfg: &EngineConfig) -> Result<EngineReport> {
    trlan_topk_op(m, cfg)
}

pub fn trlan_topk_op<O: LinearOperator + ?Sized>(op: &O, cfg: &EngineConfig) -> Result<EngineReport> {
    let (rows, cols) = (op.nrows(), op.ncols());
    cfg.validate(rows, cols)?;
    let start = Instant::now();
    let op = CountingOperator::new(op);
    let mut rng = cfg.seed.rng();
    let k = cfg.k;
    let tall = rows >= cols;
    let dim = rows.min(cols);
    let d = cfg.subspace_size(dim).max(k.min(dim));
    let keep = (k + (d - k) / 2).min(d.saturating_sub(1)).max(k.min(d));

    let gram = |x: MatRef<'_, f64>| -> Mat<f64> {
        if tall {
            op.apply_transpose(op.apply(x).as_ref())
        } else {
            op.apply(op.apply_transpose(x).as_ref())
        }
    };

    let mut q = Mat::<f64>::zeros(dim, d);
    let mut t = Mat::<f64>::zeros(d, d);
    let mut first = gaussian_mat(dim, 1, &mut rng);
    orth_fill(None, &mut first, &mut rng);
    q.col_mut(0).copy_from(first.col(0));
    let mut s = 0; // vectors in the basis whose Gram image has been projected
    let mut steps = 0;
    let mut beta;
    let mut residual = f64::INFINITY;

    let (converged, vecs) = loop {
        // expand: q_s is already in place
        let mut w = gram(q.col(s).as_mat());
        steps += 1;
        let basis = q.subcols(0, s + 1);
        let mut h = basis.transpose() * &w;
        let corr = basis * &h;
        for i in 0..dim {
            w[(i, 0)] -= corr[(i, 0)];
        }
        let h2 = basis.transpose() * &w;
        let corr = basis * &h2;
        for i in 0..dim {
            w[(i, 0)] -= corr[(i, 0)];
        }
        h += &h2;
        for i in 0..=s {
            t[(i, s)] = h[(i, 0)];
            t[(s, i)] = h[(i, 0)];
        }
        beta = w.col(0).norm_l2();
        s += 1;

        let (theta, vecs) = ritz_pairs(t.as_ref().submatrix(0, 0, s, s))?;
        let top = theta[0].max(0.0).sqrt();
        if s >= k {
            let mut worst = 0.0f64;
            let mut ok = true;
            for i in 0..k {
                let sig = theta[i].max(0.0).sqrt();
                let res_g = (beta * vecs[(s - 1, i)]).abs();
                let floor = sig.max(f64::EPSILON.sqrt() * top);
                let rel = if top > 0.0 { res_g / (floor * top) } else { 0.0 };
                worst = worst.max(rel);
                ok &= rel <= cfg.tol;
            }
            residual = worst;
            let exhausted = s == dim;
            if ok || exhausted || top == 0.0 {
                break (true, vecs);
            }
        }
        if steps >= cfg.max_iters {
            break (false, vecs);
        }

        // next basis vector: normalized residual, or a fresh direction on breakdown
        let mut next = w;
        let breakdown = beta <= f64::EPSILON * top.powi(2).max(f64::MIN_POSITIVE) * (dim as f64);
        if breakdown {
            next = gaussian_mat(dim, 1, &mut rng);
        } else {
            for i in 0..dim {
                next[(i, 0)] /= beta;
            }
        }

        if s == d {
            // thick restart: keep the leading Ritz vectors, T becomes diag(θ)
            let y = vecs.subcols(0, keep);
            let kept = q.subcols(0, d) * y;
            q = Mat::zeros(dim, d);
            q.subcols_mut(0, keep).copy_from(&kept);
            t = Mat::zeros(d, d);
            for i in 0..keep {
                t[(i, i)] = theta[i];
            }
            s = keep;
        }

        let basis = q.subcols(0, s);
        if orthonormalize_against(Some(basis), &mut next) == 0 {
            orth_fill(Some(basis), &mut next, &mut rng);
        }
        q.col_mut(s).copy_from(next.col(0));
    };

    let kk = k.min(vecs.ncols());
    let side = q.subcols(0, vecs.nrows()) * vecs.subcols(0, kk);
    let other = if tall {
        op.apply(side.as_ref())
    } else {
        op.apply_transpose(side.as_ref())
    };

    let mut sigmas: Vec<f64> = (0..kk).map(|j| other.col(j).norm_l2()).collect();
    let top = sigmas.iter().copied().fold(0.0f64, f64::max);
    let mut other = other;
    let mut tiny = Vec::new();
    for (j, sig) in sigmas.iter_mut().enumerate() {
        if *sig > f64::EPSILON * top * (dim as f64) && *sig > 0.0 {
            for i in 0..other.nrows() {
                other[(i, j)] /= *sig;
            }
        } else {
            *sig = 0.0;
            tiny.push(j);
        }
    }
    if !tiny.is_empty() {
        for &j in &tiny {
            for i in 0..other.nrows() {
                other[(i, j)] = 0.0;
            }
        }
        let good: Vec<usize> = (0..kk).filter(|j| !tiny.contains(j)).collect();
        let basis = Mat::from_fn(other.nrows(), good.len(), |i, c| other[(i, good[c])]);
        let mut fill = Mat::<f64>::zeros(other.nrows(), tiny.len());
        orth_fill(Some(basis.as_ref()), &mut fill, &mut rng);
        for (c, &j) in tiny.iter().enumerate() {
            other.col_mut(j).copy_from(fill.col(c));
        }
    }

    let (u, v) = if tall { (other, side) } else { (side, other) };
    let triplets = (0..kk)
        .map(|j| (sigmas[j], super::column(&u, j), super::column(&v, j)))
        .collect();
    Ok(EngineReport {
        factors: pack_factors(triplets),
        matvecs: op.matvecs(),
        iterations: steps,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        residual: Some(residual),
    })
}

/// Eigenpairs of the symmetric projected matrix, sorted by decreasing eigenvalue.
fn ritz_pairs(t: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = t.nrows();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    let eig = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let vals = eig.S().column_vector();
    let vecs = eig.U();
    let theta: Vec<f64> = (0..n).rev().map(|i| vals[i]).collect();
    let sorted = Mat::from_fn(n, n, |i, j| vecs[(i, n - 1 - j)]);
    Ok((theta, sorted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::{approximation_errors, EngineKind};
    use crate::matrix::{exact_svd, random_gaussian, RngSeed};

    #[test]
    fn gaussian_top_k_tall_and_wide() {
        for (r, c) in [(80, 50), (50, 80)] {
            let m = random_gaussian(r, c, 1.0, RngSeed(3)).unwrap();
            let cfg = EngineConfig::new(EngineKind::Trlan, 4).with_tol(1e-10);
            let rep = trlan_topk(&m, &cfg).unwrap();
            assert!(rep.converged);
            let exact = exact_svd(&m).unwrap();
            let (e1, e2) = approximation_errors(&rep.factors, &exact, 4).unwrap();
            assert!(e1 < 1e-6 && e2 < 1e-8, "{r}x{c}: {e1} {e2}");
            assert_eq!(rep.matvecs, 2 * rep.iterations + 4);
            assert!(rep.factors.orthonormality_defect() < 1e-8);
        }
    }

    #[test]
    fn restarts_when_basis_is_small() {
        let m = random_gaussian(100, 100, 1.0, RngSeed(4)).unwrap();
        let cfg = EngineConfig::new(EngineKind::Trlan, 3)
            .with_subspace(8)
            .with_tol(1e-9);
        let rep = trlan_topk(&m, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations > 8);
        let (_, e2) = approximation_errors(&rep.factors, &exact_svd(&m).unwrap(), 3).unwrap();
        assert!(e2 < 1e-7, "{e2}");
    }

    #[test]
    fn low_rank_input_hits_invariant_subspace() {
        let a = random_gaussian(30, 2, 1.0, RngSeed(5)).unwrap();
        let b = random_gaussian(2, 20, 1.0, RngSeed(6)).unwrap();
        let m = a.matmul(&b).unwrap();
        let rep = trlan_topk(&m, &EngineConfig::new(EngineKind::Trlan, 4)).unwrap();
        assert!(rep.converged);
        let exact = exact_svd(&m).unwrap();
        assert!((rep.factors.sigma[0] - exact.sigma[0]).abs() < 1e-9 * exact.sigma[0]);
        assert!((rep.factors.sigma[1] - exact.sigma[1]).abs() < 1e-9 * exact.sigma[0]);
        assert!(rep.factors.sigma[2] < 1e-6);
        assert!(rep.factors.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn zero_matrix() {
        let rep = trlan_topk(&Matrix::zeros(5, 4), &EngineConfig::new(EngineKind::Trlan, 2)).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.factors.sigma, vec![0.0, 0.0]);
        assert!(rep.factors.orthonormality_defect() < 1e-12);
    }
}

use crate::error::{Error, Result};
use crate::matrix::SvdFactors;

/// Relative Frobenius errors of the rank-`k` reconstructions of `approx`
/// against `reference`:
/// `err1` compares `Σ_{i<k} u_i v_iᵀ`, `err2` compares `Σ_{i<k} σ_i u_i v_iᵀ`.
pub fn approximation_errors(approx: &SvdFactors, reference: &SvdFactors, k: usize) -> Result<(f64, f64)> {
    let max = approx.rank().min(reference.rank());
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { k, max });
    }
    if approx.u.rows() != reference.u.rows() || approx.v.rows() != reference.v.rows() {
        return Err(Error::ShapeMismatch {
            op: "approximation_errors",
            left: (approx.u.rows(), approx.v.rows()),
            right: (reference.u.rows(), reference.v.rows()),
        });
    }
    let rel = |a: crate::matrix::Matrix, b: crate::matrix::Matrix| {
        let denom = b.frobenius_norm();
        let diff = (&a - &b).frobenius_norm();
        if denom > 0.0 {
            diff / denom
        } else {
            diff
        }
    };
    let err1 = rel(approx.projector_sum(k), reference.projector_sum(k));
    let err2 = rel(approx.low_rank(k), reference.low_rank(k));
    Ok((err1, err2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{exact_svd, random_gaussian, Matrix, RngSeed};

    #[test]
    fn identical_and_sign_flipped() {
        let m = random_gaussian(8, 6, 1.0, RngSeed(2)).unwrap();
        let f = exact_svd(&m).unwrap();
        assert_eq!(approximation_errors(&f, &f, 3).unwrap(), (0.0, 0.0));

        let mut flipped = f.clone();
        for i in 0..flipped.u.rows() {
            flipped.u.set(i, 0, -f.u.get(i, 0));
        }
        for i in 0..flipped.v.rows() {
            flipped.v.set(i, 0, -f.v.get(i, 0));
        }
        let (e1, e2) = approximation_errors(&flipped, &f, 3).unwrap();
        assert!(e1 < 1e-15 && e2 < 1e-15);
    }

    #[test]
    fn perturbed_matches_dense_difference() {
        let m = random_gaussian(7, 5, 1.0, RngSeed(3)).unwrap();
        let reference = exact_svd(&m).unwrap();
        let noise = random_gaussian(7, 5, 1e-3, RngSeed(4)).unwrap();
        let approx = exact_svd(&(&m + &noise)).unwrap();
        let k = 2;

        // dense brute force: build the sums entry by entry
        let dense = |f: &SvdFactors, weighted: bool| {
            Matrix::from_fn(7, 5, |i, j| {
                (0..k)
                    .map(|t| {
                        let w = if weighted { f.sigma[t] } else { 1.0 };
                        w * f.u.get(i, t) * f.v.get(j, t)
                    })
                    .sum()
            })
        };
        let expect = |w: bool| {
            let (a, r) = (dense(&approx, w), dense(&reference, w));
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..7 {
                for j in 0..5 {
                    num += (a.get(i, j) - r.get(i, j)).powi(2);
                    den += r.get(i, j).powi(2);
                }
            }
            (num / den).sqrt()
        };
        let (e1, e2) = approximation_errors(&approx, &reference, k).unwrap();
        assert!((e1 - expect(false)).abs() < 1e-12);
        assert!((e2 - expect(true)).abs() < 1e-12);
        assert!(e1 > 0.0 && e2 > 0.0);
    }

    #[test]
    fn k_beyond_rank() {
        let f = exact_svd(&Matrix::identity(3)).unwrap().truncate(2).unwrap();
        assert!(matches!(
            approximation_errors(&f, &f, 3),
            Err(Error::RankOutOfRange { .. })
        ));
    }
}

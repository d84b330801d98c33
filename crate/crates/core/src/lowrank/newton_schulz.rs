use std::time::Instant;

use faer::Mat;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug)]
pub struct PolarResult {
    /// Approximation of `UVᵀ` for the thin SVD `M = UΣVᵀ`.
    pub polar: Matrix,
    pub iterations: usize,
    /// `2 · min(m, n)` per iteration.
    pub matvecs: usize,
    pub converged: bool,
    /// Relative Frobenius change of the last iteration.
    pub final_change: f64,
    pub wall_time: f64,
}

/// Cubic Newton–Schulz iteration `X ← 1.5 X − 0.5 X XᵀX` for the polar factor.
///
/// The input is divided by `‖M‖_F` and then by `√min(‖G‖_∞, ‖G‖_F)` for its Gram
/// matrix `G`; both are upper bounds on `σ_1`, so every singular value starts in
/// `(0, 1]` and orthogonal inputs are fixed points. Iteration stops when the
/// relative change `‖X_{t+1} − X_t‖_F / ‖X_{t+1}‖_F` drops to `tol`.
pub fn newton_schulz_polar(m: &Matrix, tol: f64, max_iters: usize) -> Result<PolarResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be positive"));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite { op: "newton_schulz_polar" });
    }
    if m.is_zero() {
        return Err(Error::ZeroInput { op: "newton_schulz_polar" });
    }
    let start = Instant::now();
    let a = m.as_faer();
    let (rows, cols) = (a.nrows(), a.ncols());
    let tall = rows >= cols;

    let fro = m.frobenius_norm();
    let mut x = Mat::from_fn(rows, cols, |i, j| a[(i, j)] / fro);
    let gram = |x: &Mat<f64>| -> Mat<f64> {
        if tall {
            x.transpose() * x
        } else {
            x * x.transpose()
        }
    };

    // Refine the scale with a second bound on λ_max(G) read off the first Gram
    // matrix, which the first iteration reuses.
    let mut g = gram(&x);
    let row_sum = (0..g.nrows())
        .map(|i| (0..g.ncols()).map(|j| g[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let bound = row_sum.min(g.norm_l2());
    if bound > 0.0 && bound < 1.0 {
        let s = bound.sqrt();
        x = Mat::from_fn(rows, cols, |i, j| x[(i, j)] / s);
        g = Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] / bound);
    }

    let per_iter = 2 * rows.min(cols);
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < max_iters {
        if iterations > 0 {
            g = gram(&x);
        }
        let next = if tall {
            &x * 1.5 - (&x * &g) * 0.5
        } else {
            &x * 1.5 - (&g * &x) * 0.5
        };
        iterations += 1;
        let diff = (&next - &x).norm_l2();
        let norm = next.norm_l2();
        change = if norm > 0.0 { diff / norm } else { diff };
        x = next;
        if !change.is_finite() {
            return Err(Error::NonFinite { op: "newton_schulz_polar" });
        }
        if change <= tol {
            break;
        }
    }

    Ok(PolarResult {
        polar: Matrix::from_faer(x),
        iterations,
        matvecs: per_iter * iterations,
        converged: change <= tol,
        final_change: change,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

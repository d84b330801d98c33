use std::time::Instant;

use faer::Mat;
use rand_chacha::ChaCha8Rng;

use super::{column, hcat, orth_fill, pack_factors, small_svd, CountingOperator, EngineConfig, EngineReport, LinearOperator};
use crate::error::Result;
use crate::matrix::{gaussian_mat, Matrix};

/// Block power iteration (subspace iteration) with a block of exactly `k`
/// vectors and locking of converged leading triplets.
///
/// One sweep applies `Mᵀ` then `M` to the active block and performs a
/// Rayleigh–Ritz step; the residual of each sweep is measured by the `Mᵀ`
/// application of the next one. Without locking this costs
/// `k + 2k · iterations` matvecs.
pub fn power_iteration_topk(m: &Matrix, cfg: &EngineConfig) -> Result<EngineReport> {
    power_iteration_topk_op(m, cfg)
}

pub fn power_iteration_topk_op<O: LinearOperator + ?Sized>(op: &O, cfg: &EngineConfig) -> Result<EngineReport> {
    let (rows, cols) = (op.nrows(), op.ncols());
    cfg.validate(rows, cols)?;
    let start = Instant::now();
    let op = CountingOperator::new(op);
    let mut rng = cfg.seed.rng();

    let mut locked: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut v_locked = Mat::<f64>::zeros(cols, 0);

    let mut block = Block {
        u: gaussian_mat(rows, cfg.k, &mut rng),
        v: Mat::zeros(cols, cfg.k),
        sigma: Vec::new(),
    };
    orth_fill(None, &mut block.u, &mut rng);
    let mut sigma_max = 0.0f64;
    let mut sweeps = 0;

    let (converged, residual) = loop {
        let z = op.apply_transpose(block.u.as_ref());
        let mut newly = 0;
        if !block.sigma.is_empty() {
            let res: Vec<f64> = (0..z.ncols())
                .map(|j| {
                    let mut acc = 0.0;
                    for i in 0..cols {
                        let d = z[(i, j)] - block.sigma[j] * block.v[(i, j)];
                        acc += d * d;
                    }
                    acc.sqrt()
                })
                .collect();
            let residual = res.iter().fold(0.0f64, |a, &r| a.max(r)) / sigma_max.max(f64::MIN_POSITIVE);
            newly = res.iter().take_while(|&&r| r <= cfg.tol * sigma_max).count();
            let stop = newly == z.ncols() || sweeps >= cfg.max_iters;
            let take = if stop { z.ncols() } else { newly };
            for j in 0..take {
                locked.push((block.sigma[j], column(&block.u, j), column(&block.v, j)));
            }
            if stop {
                break (newly == z.ncols(), residual);
            }
            v_locked = hcat(v_locked.as_ref(), block.v.subcols(0, newly));
        }
        let active = z.subcols(newly, z.ncols() - newly).to_owned();
        block = sweep(&op, active, &v_locked, &mut rng)?;
        sweeps += 1;
        sigma_max = sigma_max.max(block.sigma.first().copied().unwrap_or(0.0));
        if let Some(&(s, _, _)) = locked.first() {
            sigma_max = sigma_max.max(s);
        }
    };

    Ok(EngineReport {
        factors: pack_factors(locked),
        matvecs: op.matvecs(),
        iterations: sweeps,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        residual: Some(residual),
    })
}

struct Block {
    u: Mat<f64>,
    v: Mat<f64>,
    sigma: Vec<f64>,
}

/// `V = orth(Z ⟂ V_locked)`, `W = M V`, then Rayleigh–Ritz on `W`.
fn sweep<O: LinearOperator + ?Sized>(
    op: &CountingOperator<'_, O>,
    mut z: Mat<f64>,
    v_locked: &Mat<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<Block> {
    let basis = (v_locked.ncols() > 0).then(|| v_locked.as_ref());
    orth_fill(basis, &mut z, rng);
    let w = op.apply(z.as_ref());
    let (u, sigma, wv) = small_svd(&w)?;
    Ok(Block { u, v: &z * &wv, sigma })
}

#![allow(dead_code)]

use fanion::matrix::{random_gaussian, random_orthogonal};
use fanion::{Matrix, RngSeed, SvdFactors};

/// `U diag(sigma) Vᵀ` with Haar `U`, `V`.
pub fn planted(rows: usize, cols: usize, sigma: &[f64], seed: RngSeed) -> Matrix {
    let r = sigma.len();
    assert!(r <= rows.min(cols));
    let u = random_orthogonal(rows, seed.derive(100)).unwrap();
    let v = random_orthogonal(cols, seed.derive(101)).unwrap();
    let take = |q: &Matrix| Matrix::from_fn(q.rows(), r, |i, j| q.get(i, j));
    SvdFactors::new(take(&u), sigma.to_vec(), take(&v)).unwrap().reconstruct()
}

/// Well separated singular values `1, 0.8, 0.64, ...` on a random basis.
pub fn gapped(rows: usize, cols: usize, seed: RngSeed) -> Matrix {
    let sigma: Vec<f64> = (0..rows.min(cols)).map(|i| 0.8f64.powi(i as i32)).collect();
    planted(rows, cols, &sigma, seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    random_gaussian(rows, cols, 1.0, RngSeed(seed)).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

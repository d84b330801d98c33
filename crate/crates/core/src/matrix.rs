//! Dense real matrices, the exact SVD oracle and seeded random generators.
//!
//! [`Matrix`] wraps a column-major `faer` matrix but speaks row-major at its
//! boundaries (construction from flat data, CSV I/O). Everything downstream
//! (norms, engines, optimizers) takes `&Matrix`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed for every random stream in the crate. Equal seeds give bit-identical streams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for sub-stream `stream` (splitmix64 finalizer).
    pub fn derive(self, stream: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix {
    inner: Mat<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            inner: Mat::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Matrix {
            inner: Mat::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Matrix {
            inner: Mat::from_fn(rows, cols, f),
        }
    }

    /// Builds a matrix from row-major data, validating the shape and finiteness.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "from_row_major" });
        }
        Ok(Self::from_fn(rows, cols, |i, j| data[i * cols + j]))
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::from_row_major(rows.len(), ncols, rows.concat())
    }

    /// Square diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn from_faer(inner: Mat<f64>) -> Self {
        Matrix { inner }
    }

    pub fn as_faer(&self) -> MatRef<'_, f64> {
        self.inner.as_ref()
    }

    pub fn into_faer(self) -> Mat<f64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn min_dim(&self) -> usize {
        self.rows().min(self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.inner[(i, j)] = value;
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.inner[(i, j)]).collect())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix {
            inner: self.inner.transpose().to_owned(),
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Matrix {
            inner: &self.inner * &rhs.inner,
        })
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Matrix {
        Self::from_fn(self.rows(), self.cols(), |i, j| f(self.inner[(i, j)]))
    }

    /// Entrywise combination of two equally shaped matrices.
    pub fn zip_map(&self, other: &Matrix, mut f: impl FnMut(f64, f64) -> f64) -> Result<Matrix> {
        self.check_same_shape(other, "zip_map")?;
        Ok(Self::from_fn(self.rows(), self.cols(), |i, j| {
            f(self.inner[(i, j)], other.inner[(i, j)])
        }))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) -> Result<()> {
        self.check_same_shape(other, "axpy")?;
        faer::zip!(&mut self.inner, &other.inner).for_each(|faer::unzip!(a, b)| *a += alpha * *b);
        Ok(())
    }

    pub fn scale_in_place(&mut self, alpha: f64) {
        faer::zip!(&mut self.inner).for_each(|faer::unzip!(a)| *a *= alpha);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.norm_max()
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        faer::zip!(&self.inner).for_each(|faer::unzip!(a)| ok &= a.is_finite());
        ok
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    pub(crate) fn check_same_shape(&self, other: &Matrix, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{:?} {:?}", self.shape(), self.to_rows())
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

// Operator forms panic on shape mismatch; use the checked methods at API boundaries.
impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        Matrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        Matrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.map(|v| v * rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.map(|v| -v)
    }
}

/// `Σ_ij a_ij b_ij`.
pub fn frobenius_inner(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.check_same_shape(b, "frobenius_inner")?;
    let mut acc = 0.0;
    faer::zip!(&a.inner, &b.inner).for_each(|faer::unzip!(x, y)| acc += *x * *y);
    Ok(acc)
}

/// Truncated singular value decomposition `U diag(sigma) Vᵀ` of rank `sigma.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    /// Checks shapes, sign and ordering of `sigma`. Orthonormality is a numerical
    /// property of the producer and is measured by [`SvdFactors::orthonormality_defect`].
    pub fn new(u: Matrix, sigma: Vec<f64>, v: Matrix) -> Result<Self> {
        let k = sigma.len();
        if u.cols() != k || v.cols() != k {
            return Err(Error::invalid(format!(
                "factor widths {}/{} do not match rank {k}",
                u.cols(),
                v.cols()
            )));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("singular values must be finite and nonnegative"));
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("singular values must be nonincreasing"));
        }
        Ok(SvdFactors { u, sigma, v })
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> Result<SvdFactors> {
        if k == 0 || k > self.rank() {
            return Err(Error::RankOutOfRange { k, max: self.rank() });
        }
        Ok(SvdFactors {
            u: Matrix::from_faer(self.u.as_faer().subcols(0, k).to_owned()),
            sigma: self.sigma[..k].to_vec(),
            v: Matrix::from_faer(self.v.as_faer().subcols(0, k).to_owned()),
        })
    }

    /// `Σ_{i<k} w_i u_i v_iᵀ`.
    pub fn weighted_sum(&self, weights: &[f64]) -> Matrix {
        let k = weights.len().min(self.rank());
        let u = self.u.as_faer().subcols(0, k);
        let v = self.v.as_faer().subcols(0, k);
        let scaled = Mat::from_fn(u.nrows(), k, |i, j| u[(i, j)] * weights[j]);
        Matrix::from_faer(&scaled * v.transpose())
    }

    /// `Σ_{i<k} u_i v_iᵀ`.
    pub fn projector_sum(&self, k: usize) -> Matrix {
        self.weighted_sum(&vec![1.0; k.min(self.rank())])
    }

    /// `Σ_{i<k} σ_i u_i v_iᵀ`.
    pub fn low_rank(&self, k: usize) -> Matrix {
        self.weighted_sum(&self.sigma[..k.min(self.rank())])
    }

    pub fn reconstruct(&self) -> Matrix {
        self.low_rank(self.rank())
    }

    /// `max(‖UᵀU − I‖_F, ‖VᵀV − I‖_F)`.
    pub fn orthonormality_defect(&self) -> f64 {
        fn defect(q: MatRef<'_, f64>) -> f64 {
            let g = q.transpose() * q;
            let eye = Mat::<f64>::identity(g.nrows(), g.ncols());
            (&g - &eye).norm_l2()
        }
        defect(self.u.as_faer()).max(defect(self.v.as_faer()))
    }
}

/// Thin SVD of `m` with `k = min(rows, cols)` triplets, sorted nonincreasing.
pub fn exact_svd(m: &Matrix) -> Result<SvdFactors> {
    if !m.is_finite() {
        return Err(Error::NonFinite { op: "exact_svd" });
    }
    let svd = m
        .as_faer()
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let sigma: Vec<f64> = (0..s.nrows()).map(|i| s[i].max(0.0)).collect();
    Ok(SvdFactors {
        u: Matrix::from_faer(svd.U().to_owned()),
        sigma,
        v: Matrix::from_faer(svd.V().to_owned()),
    })
}

/// Singular values only, sorted nonincreasing.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(Error::NonFinite { op: "singular_values" });
    }
    m.as_faer()
        .singular_values()
        .map(|s| s.into_iter().map(|v| v.max(0.0)).collect())
        .map_err(|e| Error::Decomposition(format!("{e:?}")))
}

pub(crate) fn gaussian_mat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// I.i.d. `N(0, std²)` entries.
pub fn random_gaussian(rows: usize, cols: usize, std: f64, seed: RngSeed) -> Result<Matrix> {
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::invalid(format!("std must be positive, got {std}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = seed.rng();
    Ok(Matrix::from_fn(rows, cols, |_, _| normal.sample(&mut rng)))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs of
/// `diag(R)` folded into `Q`.
pub fn random_orthogonal(n: usize, seed: RngSeed) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let g = gaussian_mat(n, n, &mut seed.rng());
    let qr = g.qr();
    let r = qr.thin_R();
    let mut q = qr.compute_thin_Q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(Matrix::from_faer(q))
}

/// Eigen-parts of a random PSD matrix: Haar basis `Q` and Uniform(0, 1) spectrum.
#[derive(Clone, Debug)]
pub struct PsdParts {
    pub basis: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl PsdParts {
    pub fn sample(n: usize, seed: RngSeed) -> Result<Self> {
        let basis = random_orthogonal(n, seed.derive(0))?;
        let mut rng = seed.derive(1).rng();
        let eigenvalues = (0..n).map(|_| Open01.sample(&mut rng)).collect();
        Ok(PsdParts { basis, eigenvalues })
    }

    /// `Q diag(λ) Qᵀ`, symmetrized exactly.
    pub fn assemble(&self) -> Matrix {
        let q = self.basis.as_faer();
        let scaled = Mat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * self.eigenvalues[j]);
        let a = &scaled * q.transpose();
        let sym = Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        Matrix::from_faer(sym)
    }
}

/// `Q diag(λ) Qᵀ` with Haar `Q` and `λ_i ~ Uniform(0, 1)` i.i.d.
pub fn random_psd_uniform_spectrum(n: usize, seed: RngSeed) -> Result<Matrix> {
    Ok(PsdParts::sample(n, seed)?.assemble())
}

/// Gram–Schmidt with one re-orthogonalization pass (CGS2) of the columns of `block`
/// against the orthonormal columns of `basis` and then among themselves.
/// Columns that collapse numerically are replaced by zero columns; the returned
/// count says how many independent directions survived.
pub(crate) fn orthonormalize_against(basis: Option<MatRef<'_, f64>>, block: &mut Mat<f64>) -> usize {
    let n = block.nrows();
    let mut kept = 0;
    for j in 0..block.ncols() {
        let original = block.col(j).norm_l2();
        for _ in 0..2 {
            if let Some(q) = basis {
                let h = q.transpose() * block.col(j);
                let correction = q * &h;
                for i in 0..n {
                    block[(i, j)] -= correction[i];
                }
            }
            for p in 0..j {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += block[(i, p)] * block[(i, j)];
                }
                for i in 0..n {
                    let bp = block[(i, p)];
                    block[(i, j)] -= dot * bp;
                }
            }
        }
        let norm = block.col(j).norm_l2();
        if norm > 1e-12 * original.max(f64::MIN_POSITIVE) && norm > 0.0 {
            for i in 0..n {
                block[(i, j)] /= norm;
            }
            kept += 1;
        } else {
            for i in 0..n {
                block[(i, j)] = 0.0;
            }
        }
    }
    kept
}

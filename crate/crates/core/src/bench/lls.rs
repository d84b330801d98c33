use crate::error::{Error, Result};
use crate::matrix::{random_gaussian, Matrix, PsdParts, RngSeed};

/// `F(X) = ½ ⟨X − S, M (X − S) N⟩` with PSD `M` (m×m) and `N` (n×n).
#[derive(Clone, Debug)]
pub struct LlsProblem {
    m_left: Matrix,
    n_right: Matrix,
    s: Matrix,
    x0: Matrix,
    spectral: Option<(PsdParts, PsdParts)>,
}

impl LlsProblem {
    /// Checks shapes, symmetry of `M` and `N` to 1e-10 and finiteness.
    pub fn new(m_left: Matrix, n_right: Matrix, s: Matrix, x0: Matrix) -> Result<Self> {
        for (name, a) in [("M", &m_left), ("N", &n_right)] {
            if a.rows() != a.cols() {
                return Err(Error::invalid(format!("{name} must be square, got {:?}", a.shape())));
            }
            if (a - &a.transpose()).max_abs() > 1e-10 {
                return Err(Error::invalid(format!("{name} must be symmetric")));
            }
        }
        x0.check_same_shape(&s, "LlsProblem::new")?;
        if x0.rows() != m_left.rows() || x0.cols() != n_right.rows() {
            return Err(Error::ShapeMismatch {
                op: "LlsProblem::new",
                left: (m_left.rows(), n_right.rows()),
                right: x0.shape(),
            });
        }
        if ![&m_left, &n_right, &s, &x0].iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite { op: "LlsProblem::new" });
        }
        Ok(LlsProblem {
            m_left,
            n_right,
            s,
            x0,
            spectral: None,
        })
    }

    pub fn m_left(&self) -> &Matrix {
        &self.m_left
    }

    pub fn n_right(&self) -> &Matrix {
        &self.n_right
    }

    pub fn s(&self) -> &Matrix {
        &self.s
    }

    pub fn x0(&self) -> &Matrix {
        &self.x0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x0.shape()
    }

    /// Eigen-parts of `M` and `N` when the problem was sampled by [`lls_make`].
    pub fn spectral_parts(&self) -> Option<(&PsdParts, &PsdParts)> {
        self.spectral.as_ref().map(|(a, b)| (a, b))
    }
}

/// Random instance: `M`, `N` with Haar eigenbases and Uniform(0, 1) spectra,
/// `S = 0`, `X⁰` with i.i.d. `N(0, x0_std²)` entries.
pub fn lls_make(m_dim: usize, n_dim: usize, x0_std: f64, seed: RngSeed) -> Result<LlsProblem> {
    if m_dim == 0 || n_dim == 0 {
        return Err(Error::invalid("dimensions must be at least 1"));
    }
    let left = PsdParts::sample(m_dim, seed.derive(10))?;
    let right = PsdParts::sample(n_dim, seed.derive(11))?;
    let x0 = random_gaussian(m_dim, n_dim, x0_std, seed.derive(12))?;
    let mut p = LlsProblem::new(left.assemble(), right.assemble(), Matrix::zeros(m_dim, n_dim), x0)?;
    p.spectral = Some((left, right));
    Ok(p)
}

fn check_shape(p: &LlsProblem, x: &Matrix, op: &'static str) -> Result<()> {
    if x.shape() != p.shape() {
        return Err(Error::ShapeMismatch {
            op,
            left: p.shape(),
            right: x.shape(),
        });
    }
    Ok(())
}

/// `M (X − S) N`.
pub fn lls_grad(p: &LlsProblem, x: &Matrix) -> Result<Matrix> {
    check_shape(p, x, "lls_grad")?;
    let d = x - &p.s;
    p.m_left.matmul(&d)?.matmul(&p.n_right)
}

/// `½ ⟨X − S, M (X − S) N⟩`.
pub fn lls_loss(p: &LlsProblem, x: &Matrix) -> Result<f64> {
    check_shape(p, x, "lls_loss")?;
    let d = x - &p.s;
    let g = p.m_left.matmul(&d)?.matmul(&p.n_right)?;
    Ok(0.5 * crate::matrix::frobenius_inner(&d, &g)?)
}

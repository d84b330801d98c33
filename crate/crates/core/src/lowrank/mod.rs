//! Top-k singular triplets and polar factors without a full SVD.
//!
//! All iterative engines see the input only through [`LinearOperator`] and are
//! charged one matvec per application of `M` or `Mᵀ` to one vector; a Gram
//! application `MᵀM v` therefore costs two.

mod metrics;
mod newton_schulz;
mod operator;
mod power;
mod rsvd;
mod trlan;

use std::fmt;
use std::str::FromStr;

use faer::{Mat, MatRef};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{gaussian_mat, orthonormalize_against, Matrix, RngSeed, SvdFactors};

pub use metrics::approximation_errors;
pub use newton_schulz::{newton_schulz_polar, PolarResult};
pub use operator::{CountingOperator, LinearOperator};
pub use power::{power_iteration_topk, power_iteration_topk_op};
pub use rsvd::{randomized_svd_topk, randomized_svd_topk_op};
pub use trlan::{trlan_topk, trlan_topk_op};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    PowerIteration,
    Rsvd,
    Trlan,
    NewtonSchulz,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::PowerIteration => "power",
            EngineKind::Rsvd => "rsvd",
            EngineKind::Trlan => "trlan",
            EngineKind::NewtonSchulz => "newton-schulz",
        })
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "power" | "power-iteration" => Ok(EngineKind::PowerIteration),
            "rsvd" => Ok(EngineKind::Rsvd),
            "trlan" | "lanczos" => Ok(EngineKind::Trlan),
            "newton-schulz" | "ns" => Ok(EngineKind::NewtonSchulz),
            other => Err(Error::parse(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub engine: EngineKind,
    /// Target rank.
    pub k: usize,
    /// Relative residual tolerance: triplets are accepted once
    /// `‖Mᵀu_i − σ_i v_i‖ ≤ tol · σ_1` (Newton–Schulz: relative successive change).
    pub tol: f64,
    /// Sweeps (power), Lanczos steps (TRLan) or iterations (Newton–Schulz); unused by RSVD.
    pub max_iters: usize,
    /// Extra sketch columns for RSVD.
    pub oversampling: usize,
    /// Power passes for RSVD.
    pub power_passes: usize,
    /// Size `d` of the TRLan basis; `None` means `max(2k + 10, 20)`.
    pub subspace: Option<usize>,
    pub seed: RngSeed,
}

impl EngineConfig {
    pub fn new(engine: EngineKind, k: usize) -> Self {
        let (tol, max_iters) = match engine {
            EngineKind::NewtonSchulz => (1e-7, 100),
            EngineKind::Trlan => (1e-8, 20_000),
            EngineKind::PowerIteration | EngineKind::Rsvd => (1e-8, 5_000),
        };
        EngineConfig {
            engine,
            k,
            tol,
            max_iters,
            oversampling: 10,
            power_passes: 2,
            subspace: None,
            seed: RngSeed(0),
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_oversampling(mut self, oversampling: usize) -> Self {
        self.oversampling = oversampling;
        self
    }

    pub fn with_power_passes(mut self, passes: usize) -> Self {
        self.power_passes = passes;
        self
    }

    pub fn with_subspace(mut self, d: usize) -> Self {
        self.subspace = Some(d);
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// TRLan basis size for a Gram operator of dimension `dim`.
    pub fn subspace_size(&self, dim: usize) -> usize {
        self.subspace
            .unwrap_or_else(|| (2 * self.k + 10).max(20))
            .min(dim)
    }

    pub(crate) fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        let max = rows.min(cols);
        if self.k == 0 || self.k > max {
            return Err(Error::RankOutOfRange { k: self.k, max });
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if let (EngineKind::Trlan, Some(d)) = (self.engine, self.subspace) {
            let dim = rows.min(cols);
            if d < (self.k + 2).min(dim) {
                return Err(Error::invalid(format!(
                    "TRLan subspace {d} must be at least k + 2 = {}",
                    self.k + 2
                )));
            }
        }
        Ok(())
    }

    /// Runs the configured top-k engine on `m`.
    pub fn run(&self, m: &Matrix) -> Result<EngineReport> {
        match self.engine {
            EngineKind::PowerIteration => power_iteration_topk(m, self),
            EngineKind::Rsvd => randomized_svd_topk(m, self),
            EngineKind::Trlan => trlan_topk(m, self),
            EngineKind::NewtonSchulz => Err(Error::invalid(
                "Newton-Schulz computes the polar factor, not singular triplets",
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EngineReport {
    pub factors: SvdFactors,
    pub matvecs: usize,
    pub iterations: usize,
    /// Seconds; informational only.
    pub wall_time: f64,
    pub converged: bool,
    /// Largest `‖Mᵀu_i − σ_i v_i‖ / σ_1` over the returned triplets (TRLan: Lanczos
    /// estimate); `None` for fixed-pass RSVD.
    pub residual: Option<f64>,
}

/// Small SVD helper: `(U, σ, V)` of a dense block, thin.
pub(crate) fn small_svd(a: &Mat<f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let sigma = (0..s.nrows()).map(|i| s[i].max(0.0)).collect();
    Ok((svd.U().to_owned(), sigma, svd.V().to_owned()))
}

/// Sorts triplets by nonincreasing σ and packages them.
pub(crate) fn pack_factors(mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)>) -> SvdFactors {
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));
    let k = triplets.len();
    let m = triplets.first().map_or(0, |t| t.1.len());
    let n = triplets.first().map_or(0, |t| t.2.len());
    let u = Mat::from_fn(m, k, |i, j| triplets[j].1[i]);
    let v = Mat::from_fn(n, k, |i, j| triplets[j].2[i]);
    SvdFactors {
        u: Matrix::from_faer(u),
        sigma: triplets.iter().map(|t| t.0.max(0.0)).collect(),
        v: Matrix::from_faer(v),
    }
}

pub(crate) fn column(a: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

/// Side-by-side concatenation `[a | b]`.
pub(crate) fn hcat(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let ca = a.ncols();
    Mat::from_fn(a.nrows(), ca + b.ncols(), |i, j| {
        if j < ca {
            a[(i, j)]
        } else {
            b[(i, j - ca)]
        }
    })
}

/// Orthonormalizes `block` against `basis` and itself, replacing collapsed
/// columns by random directions orthogonal to everything kept so far.
pub(crate) fn orth_fill(basis: Option<MatRef<'_, f64>>, block: &mut Mat<f64>, rng: &mut ChaCha8Rng) {
    let n = block.nrows();
    let width = block.ncols() + basis.map_or(0, |b| b.ncols());
    if orthonormalize_against(basis, block) == block.ncols() || width > n {
        return;
    }
    for j in 0..block.ncols() {
        if block.col(j).norm_l2() > 0.0 {
            continue;
        }
        let others: Vec<usize> = (0..block.ncols())
            .filter(|&c| c != j && block.col(c).norm_l2() > 0.0)
            .collect();
        let kept = Mat::from_fn(n, others.len(), |i, c| block[(i, others[c])]);
        let against = match basis {
            Some(b) => hcat(b, kept.as_ref()),
            None => kept,
        };
        for _ in 0..8 {
            let mut fresh = gaussian_mat(n, 1, rng);
            if orthonormalize_against(Some(against.as_ref()), &mut fresh) == 1 {
                for i in 0..n {
                    block[(i, j)] = fresh[(i, 0)];
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_names_round_trip() {
        for e in [
            EngineKind::PowerIteration,
            EngineKind::Rsvd,
            EngineKind::Trlan,
            EngineKind::NewtonSchulz,
        ] {
            assert_eq!(e.to_string().parse::<EngineKind>().unwrap(), e);
        }
        assert!("svds".parse::<EngineKind>().is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = EngineConfig::new(EngineKind::Trlan, 3);
        assert!(cfg.validate(10, 8).is_ok());
        assert!(cfg.clone().with_k(9).validate(10, 8).is_err());
        assert!(cfg.clone().with_k(0).validate(10, 8).is_err());
        assert!(cfg.clone().with_subspace(4).validate(50, 50).is_err());
        assert!(cfg.clone().with_subspace(5).validate(50, 50).is_ok());
        assert_eq!(cfg.subspace_size(100), 20);
        assert_eq!(cfg.clone().with_k(30).subspace_size(100), 70);
        assert_eq!(cfg.subspace_size(8), 8);
    }
}

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::lls::{lls_grad, LlsProblem};
use crate::error::{Error, Result};
use crate::lmo::{LmoSpec, LmoVariant, SvdBackend};
use crate::matrix::{frobenius_inner, singular_values, Matrix, RngSeed};
use crate::optimizer::{check_lr, MomentumMode, OptimizerState};

/// A run aborts once the loss exceeds this multiple of the initial loss.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: LmoSpec,
    pub lr: f64,
    pub beta: f64,
    pub mode: MomentumMode,
    pub max_iters: usize,
    pub loss_threshold: f64,
    /// Record Frobenius, spectral and nuclear norms of the full gradient at every iterate.
    pub log_norms: bool,
    /// Stop at the first iterate whose loss is within the threshold.
    pub stop_at_threshold: bool,
    /// Seeds engine-backed oracles; each step uses a derived stream.
    pub seed: RngSeed,
}

impl RunConfig {
    pub fn new(spec: LmoSpec, lr: f64, beta: f64) -> Self {
        RunConfig {
            spec,
            lr,
            beta,
            mode: MomentumMode::ApproxNesterov,
            max_iters: 5000,
            loss_threshold: 1e-3,
            log_norms: false,
            stop_at_threshold: true,
            seed: RngSeed(0),
        }
    }

    fn validate(&self) -> Result<()> {
        check_lr(self.lr)?;
        if !(self.loss_threshold > 0.0 && self.loss_threshold.is_finite()) {
            return Err(Error::invalid(format!(
                "loss threshold must be positive, got {}",
                self.loss_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub spec: String,
    pub lr: f64,
    pub beta: f64,
    /// `losses[t]` is the loss after `t` updates; `losses[0]` is the initial loss.
    pub losses: Vec<f64>,
    /// Norms of the full gradient at `X^t`, aligned with `losses` when logged.
    pub grad_frobenius: Vec<f64>,
    pub grad_spectral: Vec<f64>,
    pub grad_nuclear: Vec<f64>,
    /// First `t` with `losses[t] ≤ threshold`.
    pub iters_to_threshold: Option<usize>,
    /// Seconds; informational only.
    pub wall_time: f64,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.losses.len().saturating_sub(1)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.losses.last().copied()
    }
}

/// Gradient oracle for one run: either the dense `M X N` or, for oracles that
/// commute with orthogonal changes of basis, the same problem written in the
/// eigenbases of `M` and `N`, where the gradient is `λ_i μ_j X̃_ij`.
enum Geometry<'a> {
    Dense(&'a LlsProblem),
    Eigen { lambda: &'a [f64], mu: &'a [f64] },
}

impl Geometry<'_> {
    fn grad(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Geometry::Dense(p) => lls_grad(p, x),
            Geometry::Eigen { lambda, mu } => {
                Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| lambda[i] * mu[j] * x.get(i, j)))
            }
        }
    }

    fn offset<'b>(&self, x: &'b Matrix, p: &LlsProblem) -> std::borrow::Cow<'b, Matrix> {
        match self {
            Geometry::Dense(_) if !p.s().is_zero() => std::borrow::Cow::Owned(x - p.s()),
            _ => std::borrow::Cow::Borrowed(x),
        }
    }
}

fn reseed(spec: &mut LmoSpec, seed: RngSeed) {
    if let SvdBackend::Engine(cfg) = &mut spec.backend {
        cfg.seed = seed;
    }
    if let LmoVariant::Combination { terms, .. } = &mut spec.variant {
        for (i, (_, s)) in terms.iter_mut().enumerate() {
            reseed(s, seed.derive(i as u64));
        }
    }
}

fn uses_engine(spec: &LmoSpec) -> bool {
    match &spec.variant {
        LmoVariant::Combination { terms, .. } => terms.iter().any(|(_, s)| uses_engine(s)),
        _ => matches!(spec.backend, SvdBackend::Engine(_)),
    }
}

/// Runs the momentum-wrapped LMO iteration with constant `lr` from `X⁰`.
///
/// The loss is evaluated after each update; the iteration count starts at 1 for
/// the first update. A loss above `DIVERGENCE_FACTOR ×` the initial loss, or a
/// non-finite loss, aborts with [`Error::Diverged`] carrying the trace so far.
pub fn run_optimizer(p: &LlsProblem, cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let start = Instant::now();

    let (geometry, x0) = match p.spectral_parts() {
        Some((left, right)) if cfg.spec.is_orthogonally_equivariant() && p.s().is_zero() => {
            let rotated = left.basis.transpose().matmul(p.x0())?.matmul(&right.basis)?;
            (
                Geometry::Eigen {
                    lambda: &left.eigenvalues,
                    mu: &right.eigenvalues,
                },
                rotated,
            )
        }
        _ => (Geometry::Dense(p), p.x0().clone()),
    };

    let mut state = OptimizerState::new(x0, cfg.beta, cfg.mode)?;
    let mut trace = RunTrace {
        spec: cfg.spec.to_string(),
        lr: cfg.lr,
        beta: cfg.beta,
        ..RunTrace::default()
    };
    let engine = uses_engine(&cfg.spec);
    let mut spec = cfg.spec.clone();

    let mut grad = geometry.grad(&state.x)?;
    let initial = record(&mut trace, &geometry, &state.x, &grad, p, cfg.log_norms)?;
    if initial <= cfg.loss_threshold {
        trace.iters_to_threshold = Some(0);
    }

    for t in 1..=cfg.max_iters {
        if trace.iters_to_threshold.is_some() && cfg.stop_at_threshold {
            break;
        }
        if engine {
            reseed(&mut spec, cfg.seed.derive(t as u64));
        }
        state.step(&grad, cfg.lr, &spec)?;
        grad = geometry.grad(&state.x)?;
        let loss = record(&mut trace, &geometry, &state.x, &grad, p, cfg.log_norms)?;
        if !loss.is_finite() || loss > DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE) {
            trace.wall_time = start.elapsed().as_secs_f64();
            return Err(Error::Diverged {
                iteration: t,
                loss,
                trace: Box::new(trace),
            });
        }
        if trace.iters_to_threshold.is_none() && loss <= cfg.loss_threshold {
            trace.iters_to_threshold = Some(t);
        }
    }
    trace.wall_time = start.elapsed().as_secs_f64();
    Ok(trace)
}

/// Appends the loss (and norms) at `x` given its gradient; returns the loss.
fn record(
    trace: &mut RunTrace,
    geometry: &Geometry<'_>,
    x: &Matrix,
    grad: &Matrix,
    p: &LlsProblem,
    log_norms: bool,
) -> Result<f64> {
    let d = geometry.offset(x, p);
    let loss = 0.5 * frobenius_inner(&d, grad)?;
    trace.losses.push(loss);
    if log_norms {
        trace.grad_frobenius.push(grad.frobenius_norm());
        let sv = if grad.is_finite() {
            singular_values(grad)?
        } else {
            vec![f64::NAN]
        };
        trace.grad_spectral.push(sv.first().copied().unwrap_or(0.0));
        trace.grad_nuclear.push(sv.iter().sum());
    }
    Ok(loss)
}

//! Momentum-wrapped LMO steps: `B ← βB + (1 − β)G`, `X ← X − lr · LMO(m_eff)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmo::{lmo_evaluate, LmoSpec};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentumMode {
    /// `m_eff = G`.
    NoMomentum,
    /// `m_eff = B`.
    HeavyBall,
    /// `m_eff = G + βB` with the freshly updated buffer.
    #[default]
    ApproxNesterov,
    /// `m_eff = G + β/(1 − β) · B`, i.e. `G + βB'` with the undamped buffer
    /// `B' = βB' + G` used by PyTorch SGD (`nesterov=True`) and the reference Muon code.
    TorchNesterov,
}

impl fmt::Display for MomentumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentumMode::NoMomentum => "none",
            MomentumMode::HeavyBall => "heavy-ball",
            MomentumMode::ApproxNesterov => "nesterov",
            MomentumMode::TorchNesterov => "torch-nesterov",
        })
    }
}

impl FromStr for MomentumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "no-momentum" => Ok(MomentumMode::NoMomentum),
            "heavy-ball" | "heavyball" => Ok(MomentumMode::HeavyBall),
            "nesterov" | "approx-nesterov" => Ok(MomentumMode::ApproxNesterov),
            "torch-nesterov" => Ok(MomentumMode::TorchNesterov),
            other => Err(Error::parse(format!("unknown momentum mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub x: Matrix,
    pub b: Matrix,
    pub step: usize,
    pub beta: f64,
    pub mode: MomentumMode,
}

impl OptimizerState {
    /// Zero momentum buffer, step 0. `beta` must lie in `[0, 1)`.
    pub fn new(x: Matrix, beta: f64, mode: MomentumMode) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid(format!("beta must lie in [0, 1), got {beta}")));
        }
        let (r, c) = x.shape();
        Ok(OptimizerState {
            x,
            b: Matrix::zeros(r, c),
            step: 0,
            beta,
            mode,
        })
    }

    /// Updates the buffer with `grad`, advances the step counter and returns `m_eff`.
    pub fn momentum_direction(&mut self, grad: &Matrix) -> Result<Matrix> {
        self.b.check_same_shape(grad, "momentum_direction")?;
        self.b.scale_in_place(self.beta);
        self.b.axpy(1.0 - self.beta, grad)?;
        self.step += 1;
        Ok(match self.mode {
            MomentumMode::NoMomentum => grad.clone(),
            MomentumMode::HeavyBall => self.b.clone(),
            MomentumMode::ApproxNesterov => {
                let mut m = grad.clone();
                m.axpy(self.beta, &self.b)?;
                m
            }
            MomentumMode::TorchNesterov => {
                let mut m = grad.clone();
                m.axpy(self.beta / (1.0 - self.beta), &self.b)?;
                m
            }
        })
    }

    /// One optimizer step in place.
    pub fn step(&mut self, grad: &Matrix, lr: f64, spec: &LmoSpec) -> Result<()> {
        check_lr(lr)?;
        self.x.check_same_shape(grad, "optimizer_step")?;
        let m_eff = self.momentum_direction(grad)?;
        if lr == 0.0 {
            return Ok(());
        }
        let d = lmo_evaluate(&m_eff, spec)?;
        self.x.axpy(-lr, &d)
    }
}

pub(crate) fn check_lr(lr: f64) -> Result<()> {
    if lr >= 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("learning rate must be finite and ≥ 0, got {lr}")))
    }
}

/// Functional form of [`OptimizerState::momentum_direction`].
pub fn momentum_direction(state: &OptimizerState, grad: &Matrix) -> Result<(Matrix, OptimizerState)> {
    let mut next = state.clone();
    let m = next.momentum_direction(grad)?;
    Ok((m, next))
}

/// Functional form of [`OptimizerState::step`].
pub fn optimizer_step(state: &OptimizerState, grad: &Matrix, lr: f64, spec: &LmoSpec) -> Result<OptimizerState> {
    let mut next = state.clone();
    next.step(grad, lr, spec)?;
    Ok(next)
}

//! Matrix norms used by the LMO optimizers.
//!
//! Unitarily invariant norms are evaluated from the singular values; the
//! entrywise ones (Chebyshev, entrywise l1) directly from the entries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{singular_values, Matrix};
use crate::spec_text::KeyValues;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormKind {
    Frobenius,
    Spectral,
    Nuclear,
    /// Max absolute entry.
    Chebyshev,
    /// Sum of absolute entries, the dual of [`NormKind::Chebyshev`].
    EntrywiseL1,
    /// Sum of the `k` largest singular values.
    KyFan { k: usize },
    /// `max{nuclear / k, spectral}`, the dual of the Ky Fan k-norm.
    KyFanDual { k: usize },
    /// `alpha · KyFan(k) + (1 − alpha) · Frobenius`.
    Fkfk { k: usize, alpha: f64 },
    /// `alpha · KyFan(k) + ((1 − alpha) / eta) · EntrywiseL1`.
    Ckfk { k: usize, alpha: f64, eta: f64 },
}

impl NormKind {
    /// Whether the norm depends on the singular values only.
    pub fn is_unitarily_invariant(&self) -> bool {
        !matches!(self, NormKind::Chebyshev | NormKind::EntrywiseL1 | NormKind::Ckfk { .. })
    }

    fn rank_parameter(&self) -> Option<usize> {
        match *self {
            NormKind::KyFan { k }
            | NormKind::KyFanDual { k }
            | NormKind::Fkfk { k, .. }
            | NormKind::Ckfk { k, .. } => Some(k),
            _ => None,
        }
    }

    pub(crate) fn validate(&self, min_dim: usize) -> Result<()> {
        if let Some(k) = self.rank_parameter() {
            if k == 0 || k > min_dim {
                return Err(Error::RankOutOfRange { k, max: min_dim });
            }
        }
        match *self {
            NormKind::Fkfk { alpha, .. } if !(0.0..=1.0).contains(&alpha) => {
                Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")))
            }
            NormKind::Ckfk { alpha, eta, .. } => {
                if !(0.0..=1.0).contains(&alpha) {
                    Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")))
                } else if !(eta > 0.0 && eta.is_finite()) {
                    Err(Error::invalid(format!("eta must be positive, got {eta}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Evaluates a unitarily invariant norm from a singular value vector
    /// (any order, any sign; absolute values are used).
    pub fn from_singular_values(&self, values: &[f64]) -> Result<f64> {
        if !self.is_unitarily_invariant() {
            return Err(Error::NotRepresentable(format!(
                "{self} is not a function of the singular values"
            )));
        }
        self.validate(values.len())?;
        let mut s: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let nuclear: f64 = s.iter().sum();
        let top_k = |k: usize| s[..k].iter().sum::<f64>();
        let frobenius = || s.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(match *self {
            NormKind::Frobenius => frobenius(),
            NormKind::Spectral => s[0],
            NormKind::Nuclear => nuclear,
            NormKind::KyFan { k } => top_k(k),
            NormKind::KyFanDual { k } => (nuclear / k as f64).max(s[0]),
            NormKind::Fkfk { k, alpha } => alpha * top_k(k) + (1.0 - alpha) * frobenius(),
            NormKind::Chebyshev | NormKind::EntrywiseL1 | NormKind::Ckfk { .. } => unreachable!(),
        })
    }
}

/// Evaluates `kind` on `m`.
pub fn norm_eval(m: &Matrix, kind: NormKind) -> Result<f64> {
    kind.validate(m.min_dim())?;
    match kind {
        NormKind::Frobenius => Ok(m.frobenius_norm()),
        NormKind::Chebyshev => Ok(m.max_abs()),
        NormKind::EntrywiseL1 => Ok(entrywise_l1(m)),
        NormKind::Ckfk { k, alpha, eta } => {
            let kf = NormKind::KyFan { k }.from_singular_values(&singular_values(m)?)?;
            Ok(alpha * kf + (1.0 - alpha) / eta * entrywise_l1(m))
        }
        _ => kind.from_singular_values(&singular_values(m)?),
    }
}

fn entrywise_l1(m: &Matrix) -> f64 {
    m.to_row_major().iter().map(|v| v.abs()).sum()
}

/// Closed forms for the Ky Fan 2-norm and its dual on `diag(x, y, z)`:
/// `max{|x|+|y|, |x|+|z|, |y|+|z|}` and `max{max(|x|,|y|,|z|), (|x|+|y|+|z|)/2}`.
pub fn ky_fan_diag3_closed_form(x: f64, y: f64, z: f64) -> (f64, f64) {
    let (x, y, z) = (x.abs(), y.abs(), z.abs());
    let primal = (x + y).max(x + z).max(y + z);
    let dual = x.max(y).max(z).max((x + y + z) / 2.0);
    (primal, dual)
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NormKind::Frobenius => write!(f, "frobenius"),
            NormKind::Spectral => write!(f, "spectral"),
            NormKind::Nuclear => write!(f, "nuclear"),
            NormKind::Chebyshev => write!(f, "chebyshev"),
            NormKind::EntrywiseL1 => write!(f, "l1"),
            NormKind::KyFan { k } => write!(f, "kyfan:k={k}"),
            NormKind::KyFanDual { k } => write!(f, "kyfan-dual:k={k}"),
            NormKind::Fkfk { k, alpha } => write!(f, "fkfk:k={k},alpha={alpha}"),
            NormKind::Ckfk { k, alpha, eta } => write!(f, "ckfk:k={k},alpha={alpha},eta={eta}"),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    /// `frobenius`, `spectral`, `nuclear`, `chebyshev`, `l1`, `kyfan:k=2`,
    /// `kyfan-dual:k=2`, `fkfk:k=2,alpha=0.5`, `ckfk:k=2,alpha=0.5,eta=0.01`.
    fn from_str(text: &str) -> Result<Self> {
        let (name, mut kv) = KeyValues::split(text)?;
        let kind = match name.as_str() {
            "frobenius" | "fro" => NormKind::Frobenius,
            "spectral" => NormKind::Spectral,
            "nuclear" => NormKind::Nuclear,
            "chebyshev" | "linf" => NormKind::Chebyshev,
            "l1" | "entrywise-l1" => NormKind::EntrywiseL1,
            "kyfan" => NormKind::KyFan { k: kv.usize("k")? },
            "kyfan-dual" => NormKind::KyFanDual { k: kv.usize("k")? },
            "fkfk" => NormKind::Fkfk {
                k: kv.usize("k")?,
                alpha: kv.f64("alpha")?,
            },
            "ckfk" => NormKind::Ckfk {
                k: kv.usize("k")?,
                alpha: kv.f64("alpha")?,
                eta: kv.f64("eta")?,
            },
            other => return Err(Error::parse(format!("unknown norm `{other}`"))),
        };
        kv.finish()?;
        Ok(kind)
    }
}

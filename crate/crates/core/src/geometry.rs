//! Boundary samples of norm balls in the space of (unsorted) singular values.
//!
//! A point `p` stands for the matrix `diag(p)`. Primal balls are sampled
//! radially: `scale · d / ‖diag(d)‖`. Dual balls of summed norms are Minkowski
//! sums of scaled component balls; their boundary in direction `w` is the sum of
//! the component support points, so every emitted point `p` satisfies
//! `⟨w, p⟩ = scale · ‖diag(w)‖` for its generating direction.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::norms::{norm_eval, NormKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BallKind {
    /// Unit ball of the norm itself.
    Norm(NormKind),
    /// Unit ball of the dual norm.
    Dual(NormKind),
}

impl From<NormKind> for BallKind {
    fn from(kind: NormKind) -> Self {
        BallKind::Norm(kind)
    }
}

impl fmt::Display for BallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BallKind::Norm(k) => write!(f, "{k}"),
            BallKind::Dual(k) => write!(f, "dual:{k}"),
        }
    }
}

impl FromStr for BallKind {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.trim().strip_prefix("dual:") {
            Some(inner) => Ok(BallKind::Dual(inner.parse()?)),
            None => Ok(BallKind::Norm(text.parse()?)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum SupportBall {
    Frobenius,
    KyFanDual(usize),
    Chebyshev,
}

impl SupportBall {
    fn support_point(self, w: &[f64]) -> Vec<f64> {
        match self {
            SupportBall::Frobenius => {
                let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                w.iter().map(|x| x / n).collect()
            }
            SupportBall::Chebyshev => w.iter().map(|&x| sign(x)).collect(),
            SupportBall::KyFanDual(k) => {
                let mut order: Vec<usize> = (0..w.len()).collect();
                order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()));
                let mut p = vec![0.0; w.len()];
                for &i in &order[..k] {
                    p[i] = sign(w[i]);
                }
                p
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

enum Sampler {
    Radial(NormKind),
    Minkowski(Vec<(f64, SupportBall)>),
}

fn sampler_for(kind: BallKind) -> Sampler {
    match kind {
        BallKind::Norm(k) => Sampler::Radial(k),
        BallKind::Dual(k) => match k {
            NormKind::Frobenius => Sampler::Radial(NormKind::Frobenius),
            NormKind::Spectral => Sampler::Radial(NormKind::Nuclear),
            NormKind::Nuclear => Sampler::Radial(NormKind::Spectral),
            NormKind::Chebyshev => Sampler::Radial(NormKind::EntrywiseL1),
            NormKind::EntrywiseL1 => Sampler::Radial(NormKind::Chebyshev),
            NormKind::KyFan { k } => Sampler::Radial(NormKind::KyFanDual { k }),
            NormKind::KyFanDual { k } => Sampler::Radial(NormKind::KyFan { k }),
            NormKind::Fkfk { k, alpha } => Sampler::Minkowski(vec![
                (alpha, SupportBall::KyFanDual(k)),
                (1.0 - alpha, SupportBall::Frobenius),
            ]),
            NormKind::Ckfk { k, alpha, eta } => Sampler::Minkowski(vec![
                (alpha, SupportBall::KyFanDual(k)),
                ((1.0 - alpha) / eta, SupportBall::Chebyshev),
            ]),
        },
    }
}

fn underlying(kind: BallKind) -> NormKind {
    match kind {
        BallKind::Norm(k) | BallKind::Dual(k) => k,
    }
}

/// Unit directions: `resolution` equally spaced angles in 2-D, a Fibonacci
/// lattice of `resolution` points in 3-D.
pub fn sphere_directions(dims: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    match dims {
        2 => Ok((0..resolution)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / resolution as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..resolution)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / resolution as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::invalid(format!("dims must be 2 or 3, got {dims}"))),
    }
}

/// Evaluates the norm of `diag(p)`.
pub fn diag_norm(kind: NormKind, p: &[f64]) -> Result<f64> {
    norm_eval(&Matrix::diag(p), kind)
}

/// Points on the boundary of `scale · B`, one per sampled direction.
pub fn ball_boundary_samples(
    kind: impl Into<BallKind>,
    dims: usize,
    resolution: usize,
    scale: f64,
) -> Result<Vec<Vec<f64>>> {
    let kind = kind.into();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("scale must be positive, got {scale}")));
    }
    let norm = underlying(kind);
    if !norm.is_unitarily_invariant() && dims > 2 {
        return Err(Error::NotRepresentable(format!(
            "{norm} is entrywise and cannot be drawn in {dims}-D singular-value space"
        )));
    }
    let directions = sphere_directions(dims, resolution)?;
    norm.validate(dims)?;

    match sampler_for(kind) {
        Sampler::Radial(k) => directions
            .into_iter()
            .map(|d| {
                let r = diag_norm(k, &d)?;
                Ok(d.iter().map(|x| scale * x / r).collect())
            })
            .collect(),
        Sampler::Minkowski(parts) => Ok(directions
            .into_iter()
            .map(|w| {
                let mut p = vec![0.0; dims];
                for &(weight, ball) in &parts {
                    for (pi, si) in p.iter_mut().zip(ball.support_point(&w)) {
                        *pi += scale * weight * si;
                    }
                }
                p
            })
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::ky_fan_diag3_closed_form;

    #[test]
    fn frobenius_circle() {
        let pts = ball_boundary_samples(NormKind::Frobenius, 2, 64, 1.0).unwrap();
        assert_eq!(pts.len(), 64);
        for p in pts {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nuclear_diamond() {
        for p in ball_boundary_samples(NormKind::Nuclear, 2, 50, 1.0).unwrap() {
            assert!((p[0].abs() + p[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ky_fan_2_in_3d_matches_closed_form() {
        let pts = ball_boundary_samples(NormKind::KyFan { k: 2 }, 3, 500, 1.0).unwrap();
        for p in &pts {
            let (primal, _) = ky_fan_diag3_closed_form(p[0], p[1], p[2]);
            assert!((primal - 1.0).abs() < 1e-9, "{p:?}");
        }
        let pts = ball_boundary_samples(NormKind::KyFanDual { k: 2 }, 3, 500, 2.0).unwrap();
        for p in &pts {
            let (_, dual) = ky_fan_diag3_closed_form(p[0], p[1], p[2]);
            assert!((dual - 2.0).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn fkfk_dual_is_minkowski_support() {
        let (k, alpha, scale) = (1, 0.3, 1.5);
        let norm = NormKind::Fkfk { k, alpha };
        let dirs = sphere_directions(2, 90).unwrap();
        let pts = ball_boundary_samples(BallKind::Dual(norm), 2, 90, scale).unwrap();
        for (w, p) in dirs.iter().zip(&pts) {
            let support: f64 = w.iter().zip(p).map(|(a, b)| a * b).sum();
            let expected = scale * diag_norm(norm, w).unwrap();
            assert!((support - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn entrywise_rejected_in_3d() {
        assert!(matches!(
            ball_boundary_samples(NormKind::Chebyshev, 3, 10, 1.0),
            Err(Error::NotRepresentable(_))
        ));
        assert!(ball_boundary_samples(NormKind::Chebyshev, 2, 10, 1.0).is_ok());
        assert!(ball_boundary_samples(NormKind::Frobenius, 4, 10, 1.0).is_err());
        assert!(ball_boundary_samples(NormKind::KyFan { k: 3 }, 2, 10, 1.0).is_err());
    }

    #[test]
    fn ball_kind_text() {
        let b: BallKind = "dual:fkfk:k=1,alpha=0.5".parse().unwrap();
        assert_eq!(b, BallKind::Dual(NormKind::Fkfk { k: 1, alpha: 0.5 }));
        assert_eq!(b.to_string().parse::<BallKind>().unwrap(), b);
    }
}

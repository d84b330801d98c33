//! Linear minimization oracles over norm balls and their conic combinations.
//!
//! [`lmo_evaluate`] returns the maximizer `D* = argmax_{‖D‖ ≤ 1} ⟨M, D⟩`; an
//! optimizer step subtracts it: `X ← X − lr · D*`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowrank::{newton_schulz_polar, EngineConfig, EngineKind};
use crate::matrix::{exact_svd, frobenius_inner, Matrix, SvdFactors};
use crate::spec_text::KeyValues;

/// Where singular triplets come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SvdBackend {
    Exact,
    /// The engine's `k` is overridden by the rank the variant needs.
    Engine(EngineConfig),
}

/// The parameters a combination was built from, kept for display and logging.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    FFanion { k: usize, alpha: f64 },
    SFanion { k: usize, alpha: f64, eta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum LmoVariant {
    Nsgd,
    Muon,
    SignSgd,
    Neon,
    Fanion {
        k: usize,
    },
    KyFanPrimal {
        k: usize,
    },
    Schatten {
        p: f64,
    },
    Combination {
        terms: Vec<(f64, LmoSpec)>,
        /// Set when negative weights were allowed (`alpha > 1`).
        pathological: bool,
        family: Option<Family>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmoSpec {
    pub variant: LmoVariant,
    pub backend: SvdBackend,
}

impl LmoSpec {
    pub fn new(variant: LmoVariant) -> Self {
        LmoSpec {
            variant,
            backend: SvdBackend::Exact,
        }
    }

    pub fn nsgd() -> Self {
        Self::new(LmoVariant::Nsgd)
    }

    pub fn muon() -> Self {
        Self::new(LmoVariant::Muon)
    }

    pub fn sign_sgd() -> Self {
        Self::new(LmoVariant::SignSgd)
    }

    pub fn neon() -> Self {
        Self::new(LmoVariant::Neon)
    }

    pub fn fanion(k: usize) -> Self {
        Self::new(LmoVariant::Fanion { k })
    }

    pub fn ky_fan_primal(k: usize) -> Self {
        Self::new(LmoVariant::KyFanPrimal { k })
    }

    /// `p = 1` maps to Neon; `p` must be finite and at least 1.
    pub fn schatten(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Err(Error::NotRepresentable(
                "Schatten p = ∞ is not representable; use Muon".into(),
            ));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("Schatten p must be ≥ 1, got {p}")));
        }
        if p == 1.0 {
            return Ok(Self::neon());
        }
        Ok(Self::new(LmoVariant::Schatten { p }))
    }

    /// Nonnegative finite weights.
    pub fn combination(terms: Vec<(f64, LmoSpec)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("a combination needs at least one term"));
        }
        if let Some((w, _)) = terms.iter().find(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid(format!("combination weight {w} must be finite and ≥ 0")));
        }
        Ok(Self::new(LmoVariant::Combination {
            terms,
            pathological: false,
            family: None,
        }))
    }

    pub fn with_backend(mut self, backend: SvdBackend) -> Self {
        self.backend = backend;
        self
    }

    /// True when the oracle commutes with `M ↦ P M Qᵀ` for orthogonal `P`, `Q`.
    pub fn is_orthogonally_equivariant(&self) -> bool {
        match &self.variant {
            LmoVariant::SignSgd => false,
            LmoVariant::Combination { terms, .. } => terms.iter().all(|(_, s)| s.is_orthogonally_equivariant()),
            _ => true,
        }
    }

    /// True for combinations built with `alpha > 1`.
    pub fn is_pathological(&self) -> bool {
        match &self.variant {
            LmoVariant::Combination { pathological, terms, .. } => {
                *pathological || terms.iter().any(|(_, s)| s.is_pathological())
            }
            _ => false,
        }
    }

    fn validate(&self, m: &Matrix) -> Result<()> {
        let max = m.min_dim();
        match &self.variant {
            LmoVariant::Fanion { k } | LmoVariant::KyFanPrimal { k } if *k == 0 || *k > max => {
                Err(Error::RankOutOfRange { k: *k, max })
            }
            LmoVariant::Schatten { p } if !(*p > 1.0 && p.is_finite()) => {
                Err(Error::invalid(format!("Schatten p must be in (1, ∞), got {p}")))
            }
            LmoVariant::Combination { terms, pathological, .. } => {
                for (w, s) in terms {
                    if !w.is_finite() || (*w < 0.0 && !pathological) {
                        return Err(Error::invalid(format!("combination weight {w} must be finite and ≥ 0")));
                    }
                    s.validate(m)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `Combination[(α, Fanion(k)), (1 − α, NSGD)]`.
pub fn f_fanion_spec(k: usize, alpha: f64) -> Result<LmoSpec> {
    let pathological = check_alpha(alpha)?;
    Ok(LmoSpec::new(LmoVariant::Combination {
        terms: vec![(alpha, LmoSpec::fanion(k)), (1.0 - alpha, LmoSpec::nsgd())],
        pathological,
        family: Some(Family::FFanion { k, alpha }),
    }))
}

/// `Combination[(α, Fanion(k)), ((1 − α)·η, SignSGD)]`.
pub fn s_fanion_spec(k: usize, alpha: f64, eta: f64) -> Result<LmoSpec> {
    let pathological = check_alpha(alpha)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    Ok(LmoSpec::new(LmoVariant::Combination {
        terms: vec![
            (alpha, LmoSpec::fanion(k)),
            ((1.0 - alpha) * eta, LmoSpec::sign_sgd()),
        ],
        pathological,
        family: Some(Family::SFanion { k, alpha, eta }),
    }))
}

fn check_alpha(alpha: f64) -> Result<bool> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be finite and ≥ 0, got {alpha}")));
    }
    if alpha > 1.0 {
        log::warn!("alpha = {alpha} > 1 gives a negative weight on the second term");
    }
    Ok(alpha > 1.0)
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

/// Leading `k` singular triplets from the requested backend.
fn top_triplets(m: &Matrix, k: usize, backend: &SvdBackend) -> Result<SvdFactors> {
    match backend {
        SvdBackend::Exact => exact_svd(m)?.truncate(k),
        SvdBackend::Engine(cfg) => {
            if cfg.engine == EngineKind::NewtonSchulz {
                return Err(Error::invalid(
                    "Newton-Schulz gives only the polar factor; use it with muon",
                ));
            }
            let rep = cfg.clone().with_k(k).run(m)?;
            if !rep.converged {
                log::warn!("{} engine stopped before reaching tol {}", cfg.engine, cfg.tol);
            }
            Ok(rep.factors)
        }
    }
}

/// `UVᵀ` from the thin SVD, or from Newton–Schulz when that engine is selected.
fn polar_factor(m: &Matrix, backend: &SvdBackend) -> Result<Matrix> {
    match backend {
        SvdBackend::Engine(cfg) if cfg.engine == EngineKind::NewtonSchulz => {
            let r = newton_schulz_polar(m, cfg.tol, cfg.max_iters)?;
            if !r.converged {
                log::warn!("Newton-Schulz stopped after {} iterations", r.iterations);
            }
            Ok(r.polar)
        }
        backend => {
            let f = top_triplets(m, m.min_dim(), backend)?;
            Ok(f.projector_sum(f.rank()))
        }
    }
}

/// The maximizer of `⟨M, D⟩` over the unit ball of the variant's norm.
pub fn lmo_evaluate(m: &Matrix, spec: &LmoSpec) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::NonFinite { op: "lmo_evaluate" });
    }
    spec.validate(m)?;
    evaluate(m, spec)
}

fn evaluate(m: &Matrix, spec: &LmoSpec) -> Result<Matrix> {
    let (rows, cols) = m.shape();
    let zero = m.is_zero();
    match &spec.variant {
        LmoVariant::Nsgd => {
            if zero {
                return Err(Error::ZeroInput { op: "nsgd" });
            }
            Ok(m * (1.0 / m.frobenius_norm()))
        }
        LmoVariant::SignSgd => Ok(m.map(sign)),
        LmoVariant::Schatten { .. } if zero => Err(Error::ZeroInput { op: "schatten" }),
        _ if zero && !matches!(spec.variant, LmoVariant::Combination { .. }) => Ok(Matrix::zeros(rows, cols)),
        LmoVariant::Muon => polar_factor(m, &spec.backend),
        LmoVariant::Fanion { k } if *k == m.min_dim() => polar_factor(m, &spec.backend),
        LmoVariant::Neon => Ok(top_triplets(m, 1, &spec.backend)?.projector_sum(1)),
        LmoVariant::Fanion { k } => Ok(top_triplets(m, *k, &spec.backend)?.projector_sum(*k)),
        LmoVariant::KyFanPrimal { k } => {
            let f = exact_svd(m)?;
            let nuclear: f64 = f.sigma.iter().sum();
            if f.sigma[0] > nuclear / *k as f64 {
                Ok(f.projector_sum(1))
            } else {
                let r = f.rank();
                Ok(&f.projector_sum(r) * (1.0 / *k as f64))
            }
        }
        LmoVariant::Schatten { p } => {
            let f = exact_svd(m)?;
            let q = p / (p - 1.0);
            let top = f.sigma[0];
            let ratios: Vec<f64> = f.sigma.iter().map(|s| s / top).collect();
            let total: f64 = ratios.iter().map(|r| r.powf(q)).sum();
            let denom = total.powf((q - 1.0) / q);
            let weights: Vec<f64> = ratios.iter().map(|r| r.powf(q - 1.0) / denom).collect();
            Ok(f.weighted_sum(&weights))
        }
        LmoVariant::Combination { terms, .. } => {
            let mut out = Matrix::zeros(rows, cols);
            for (w, s) in terms {
                out.axpy(*w, &evaluate(m, s)?)?;
            }
            Ok(out)
        }
    }
}

/// `⟨M, lmo_evaluate(M, spec)⟩`, the dual norm value the oracle attains.
pub fn support_value(m: &Matrix, spec: &LmoSpec) -> Result<f64> {
    frobenius_inner(m, &lmo_evaluate(m, spec)?)
}

impl fmt::Display for LmoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variant {
            LmoVariant::Nsgd => write!(f, "nsgd")?,
            LmoVariant::Muon => write!(f, "muon")?,
            LmoVariant::SignSgd => write!(f, "signsgd")?,
            LmoVariant::Neon => write!(f, "neon")?,
            LmoVariant::Fanion { k } => write!(f, "fanion:k={k}")?,
            LmoVariant::KyFanPrimal { k } => write!(f, "kyfan-primal:k={k}")?,
            LmoVariant::Schatten { p } => write!(f, "schatten:p={p}")?,
            LmoVariant::Combination { family: Some(Family::FFanion { k, alpha }), terms, .. } => {
                write!(f, "f-fanion:k={k},alpha={alpha}")?;
                return write_backend(f, &terms[0].1.backend, true);
            }
            LmoVariant::Combination { family: Some(Family::SFanion { k, alpha, eta }), terms, .. } => {
                write!(f, "s-fanion:k={k},alpha={alpha},eta={eta}")?;
                return write_backend(f, &terms[0].1.backend, true);
            }
            LmoVariant::Combination { terms, .. } => {
                write!(f, "combination(")?;
                for (i, (w, s)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{w}*{s}")?;
                }
                return write!(f, ")");
            }
        }
        let has_keys = matches!(
            self.variant,
            LmoVariant::Fanion { .. } | LmoVariant::KyFanPrimal { .. } | LmoVariant::Schatten { .. }
        );
        write_backend(f, &self.backend, has_keys)
    }
}

fn write_backend(f: &mut fmt::Formatter<'_>, backend: &SvdBackend, has_keys: bool) -> fmt::Result {
    match backend {
        SvdBackend::Exact => Ok(()),
        SvdBackend::Engine(cfg) => {
            let sep = if has_keys { ',' } else { ':' };
            write!(f, "{sep}engine={},tol={}", cfg.engine, cfg.tol)
        }
    }
}

impl FromStr for LmoSpec {
    type Err = Error;

    /// Canonical forms: `muon`, `neon`, `nsgd`, `signsgd`, `fanion:k=10`,
    /// `f-fanion:k=500,alpha=0.5`, `s-fanion:k=500,alpha=0.5,eta=0.01`,
    /// `schatten:p=4`, `kyfan-primal:k=2`. SVD-based forms also accept
    /// `engine=trlan|rsvd|power|newton-schulz` and `tol=`.
    fn from_str(text: &str) -> Result<Self> {
        let (name, mut kv) = KeyValues::split(text)?;
        let backend = match kv.take("engine") {
            Some(e) => {
                let engine: EngineKind = e.parse()?;
                let mut cfg = EngineConfig::new(engine, 1);
                if let Some(tol) = kv.f64_opt("tol")? {
                    cfg = cfg.with_tol(tol);
                }
                SvdBackend::Engine(cfg)
            }
            None => {
                if kv.take("tol").is_some() {
                    return Err(Error::parse("`tol=` needs `engine=`"));
                }
                SvdBackend::Exact
            }
        };
        let uses_svd = !matches!(name.as_str(), "nsgd" | "signsgd" | "sign-sgd");
        if !uses_svd && backend != SvdBackend::Exact {
            return Err(Error::parse(format!("`{name}` does not use an SVD backend")));
        }
        let spec = match name.as_str() {
            "nsgd" => LmoSpec::nsgd(),
            "muon" => LmoSpec::muon().with_backend(backend),
            "signsgd" | "sign-sgd" => LmoSpec::sign_sgd(),
            "neon" => LmoSpec::neon().with_backend(backend),
            "fanion" => LmoSpec::fanion(kv.usize("k")?).with_backend(backend),
            "kyfan-primal" => LmoSpec::ky_fan_primal(kv.usize("k")?).with_backend(backend),
            "schatten" => {
                let raw = kv.take("p").ok_or_else(|| Error::parse("`schatten` requires `p=`"))?;
                let p: f64 = raw
                    .parse()
                    .map_err(|_| Error::parse(format!("`p={raw}` is not a number")))?;
                LmoSpec::schatten(p)?.with_backend(backend)
            }
            "f-fanion" => {
                let mut s = f_fanion_spec(kv.usize("k")?, kv.f64("alpha")?)?;
                set_fanion_backend(&mut s, backend);
                s
            }
            "s-fanion" => {
                let (k, alpha, eta) = (kv.usize("k")?, kv.f64("alpha")?, kv.f64("eta")?);
                let mut s = s_fanion_spec(k, alpha, eta)?;
                set_fanion_backend(&mut s, backend);
                s
            }
            other => return Err(Error::parse(format!("unknown LMO `{other}`"))),
        };
        kv.finish()?;
        if let LmoVariant::Schatten { .. } | LmoVariant::KyFanPrimal { .. } = spec.variant {
            if spec.backend != SvdBackend::Exact {
                return Err(Error::parse(format!("`{name}` needs all singular values; use the exact backend")));
            }
        }
        Ok(spec)
    }
}

fn set_fanion_backend(spec: &mut LmoSpec, backend: SvdBackend) {
    if let LmoVariant::Combination { terms, .. } = &mut spec.variant {
        terms[0].1.backend = backend;
    }
}

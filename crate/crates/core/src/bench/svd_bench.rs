use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowrank::{approximation_errors, newton_schulz_polar, EngineConfig, EngineKind};
use crate::matrix::{exact_svd, random_gaussian, RngSeed};

/// One `(size, k, engine)` cell averaged over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdBenchRow {
    pub rows: usize,
    pub cols: usize,
    /// Newton–Schulz rows use `k = min(rows, cols)`.
    pub k: usize,
    pub engine: String,
    pub trials: usize,
    pub mean_matvecs: f64,
    pub mean_iterations: f64,
    pub mean_err1: f64,
    /// `None` for Newton–Schulz, which yields no singular values.
    pub mean_err2: Option<f64>,
    pub mean_seconds: f64,
    pub converged_trials: usize,
}

struct Sample {
    matvecs: usize,
    iterations: usize,
    err1: f64,
    err2: Option<f64>,
    seconds: f64,
    converged: bool,
}

/// Runs every engine on i.i.d. standard Gaussian matrices and scores it
/// against the exact SVD. Trial `t` of a given size uses the same matrix for
/// every `k` and engine. The engine's own `k` is replaced by each entry of `ks`.
pub fn svd_engine_benchmark(
    sizes: &[(usize, usize)],
    ks: &[usize],
    engines: &[EngineConfig],
    trials: usize,
    seed: RngSeed,
) -> Result<Vec<SvdBenchRow>> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    if sizes.is_empty() || engines.is_empty() {
        return Err(Error::invalid("sizes and engines must be nonempty"));
    }
    let has_topk = engines.iter().any(|e| e.engine != EngineKind::NewtonSchulz);
    if has_topk && ks.is_empty() {
        return Err(Error::invalid("at least one k is required"));
    }
    for &(r, c) in sizes {
        if r == 0 || c == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > r.min(c)) {
            return Err(Error::RankOutOfRange { k, max: r.min(c) });
        }
    }

    let mut rows = Vec::new();
    for (si, &(r, c)) in sizes.iter().enumerate() {
        // samples[cell][trial] with cells ordered (k, engine) then polar engines
        let mut cells: Vec<(usize, String, Vec<Sample>)> = Vec::new();
        for &k in ks {
            for e in engines.iter().filter(|e| e.engine != EngineKind::NewtonSchulz) {
                cells.push((k, e.engine.to_string(), Vec::new()));
            }
        }
        for e in engines.iter().filter(|e| e.engine == EngineKind::NewtonSchulz) {
            cells.push((r.min(c), e.engine.to_string(), Vec::new()));
        }

        for t in 0..trials {
            let mseed = seed.derive(((si as u64) << 32) | t as u64);
            let m = random_gaussian(r, c, 1.0, mseed)?;
            let exact = exact_svd(&m)?;
            let mut idx = 0;
            for &k in ks {
                for e in engines.iter().filter(|e| e.engine != EngineKind::NewtonSchulz) {
                    let cfg = e.clone().with_k(k).with_seed(mseed.derive(idx as u64 + 1));
                    let rep = cfg.run(&m)?;
                    let (err1, err2) = approximation_errors(&rep.factors, &exact, k)?;
                    cells[idx].2.push(Sample {
                        matvecs: rep.matvecs,
                        iterations: rep.iterations,
                        err1,
                        err2: Some(err2),
                        seconds: rep.wall_time,
                        converged: rep.converged,
                    });
                    idx += 1;
                }
            }
            let polar = exact.projector_sum(exact.rank());
            for e in engines.iter().filter(|e| e.engine == EngineKind::NewtonSchulz) {
                let res = newton_schulz_polar(&m, e.tol, e.max_iters)?;
                let err1 = (&res.polar - &polar).frobenius_norm() / polar.frobenius_norm();
                cells[idx].2.push(Sample {
                    matvecs: res.matvecs,
                    iterations: res.iterations,
                    err1,
                    err2: None,
                    seconds: res.wall_time,
                    converged: res.converged,
                });
                idx += 1;
            }
        }

        for (k, engine, samples) in cells {
            let n = samples.len() as f64;
            let mean = |f: &dyn Fn(&Sample) -> f64| samples.iter().map(f).sum::<f64>() / n;
            rows.push(SvdBenchRow {
                rows: r,
                cols: c,
                k,
                engine,
                trials,
                mean_matvecs: mean(&|s| s.matvecs as f64),
                mean_iterations: mean(&|s| s.iterations as f64),
                mean_err1: mean(&|s| s.err1),
                mean_err2: samples
                    .iter()
                    .map(|s| s.err2)
                    .sum::<Option<f64>>()
                    .map(|total| total / n),
                mean_seconds: mean(&|s| s.seconds),
                converged_trials: samples.iter().filter(|s| s.converged).count(),
            });
        }
    }
    Ok(rows)
}

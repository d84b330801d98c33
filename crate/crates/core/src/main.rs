use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use fanion::bench::{
    emit_report, grid_search, lls_make, read_matrix_csv, run_optimizer, svd_engine_benchmark, write_matrix_csv,
    ReportFormat, RunConfig,
};
use fanion::geometry::{ball_boundary_samples, BallKind};
use fanion::lmo::{lmo_evaluate, support_value, LmoSpec};
use fanion::lowrank::{EngineConfig, EngineKind};
use fanion::optimizer::MomentumMode;
use fanion::{Error, Result, RngSeed};

#[derive(Parser, Debug)]
#[command(name = "fanion", version, about = "LMO optimizers, top-k SVD engines and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Linear least squares benchmark: one run, or a grid search when a grid has several values.
    BenchLls {
        /// `MxN`.
        #[arg(long, default_value = "500x500")]
        size: String,
        /// LMO spec text, e.g. `muon`, `f-fanion:k=500,alpha=0.5`.
        #[arg(long)]
        spec: String,
        /// Comma list or inclusive range `start:stop:step`.
        #[arg(long)]
        lr: String,
        /// Comma list or inclusive range `start:stop:step`.
        #[arg(long, default_value = "0")]
        momentum: String,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of the initial iterate.
        #[arg(long, default_value_t = 0.1)]
        x0_std: f64,
        /// `none`, `heavy-ball`, `nesterov` or `torch-nesterov`.
        #[arg(long, default_value = "nesterov")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Log Frobenius, spectral and nuclear norms of the full gradient.
        #[arg(long)]
        log_norms: bool,
    },
    /// Compares top-k engines against the exact SVD on Gaussian matrices.
    BenchSvd {
        /// Comma list of `MxN`.
        #[arg(long, default_value = "500x500")]
        sizes: String,
        /// Comma list of ranks.
        #[arg(long, default_value = "5,50")]
        k: String,
        #[arg(long, default_value = "trlan,rsvd,power,newton-schulz")]
        engines: String,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides every engine's default tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Evaluates one LMO on a matrix read from a headerless CSV file.
    LmoEval {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        matrix: PathBuf,
        /// CSV receives the direction matrix; JSON receives direction and support value.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Boundary points of a norm ball in singular-value coordinates.
    BallGeometry {
        /// Norm text, or `dual:<norm>` for the dual ball.
        #[arg(long)]
        norm: String,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Successful commands whose result does not meet its goal still exit with 1.
enum Outcome {
    Done,
    Unconverged(String),
}

fn parse_size(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("size `{text}` is not of the form MxN"));
    let (m, n) = text.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let m: usize = m.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!("size `{text}` has a zero dimension")));
    }
    Ok((m, n))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid {what} `{}`", s.trim())))
        })
        .collect()
}

/// Comma list, or inclusive `start:stop:step` with values rounded to 12 decimals.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    if !text.contains(':') {
        return parse_list(text, "grid value");
    }
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("invalid range `{text}`"))))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Parse(format!("range `{text}` must be start:stop:step")));
    };
    if !(step > 0.0) || stop < start {
        return Err(Error::InvalidArgument(format!("range `{text}` is empty or has a nonpositive step")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn bench_lls(args: Command) -> Result<Outcome> {
    let Command::BenchLls {
        size,
        spec,
        lr,
        momentum,
        threshold,
        max_iters,
        seed,
        x0_std,
        mode,
        out,
        format,
        log_norms,
    } = args
    else {
        unreachable!()
    };
    let (m, n) = parse_size(&size)?;
    let spec: LmoSpec = spec.parse()?;
    let lrs = parse_grid(&lr)?;
    let betas = parse_grid(&momentum)?;
    let format: ReportFormat = format.parse()?;
    let mut cfg = RunConfig::new(spec.clone(), lrs[0], betas[0]);
    cfg.mode = mode.parse::<MomentumMode>()?;
    cfg.max_iters = max_iters;
    cfg.loss_threshold = threshold;
    cfg.log_norms = log_norms;
    cfg.seed = RngSeed(seed);
    let problem = lls_make(m, n, x0_std, RngSeed(seed))?;

    if lrs.len() == 1 && betas.len() == 1 {
        let trace = match run_optimizer(&problem, &cfg) {
            Ok(trace) => trace,
            Err(Error::Diverged { iteration, loss, trace }) => {
                emit_report(&*trace, format, &out)?;
                return Ok(Outcome::Unconverged(format!("diverged at iteration {iteration} (loss {loss:e})")));
            }
            Err(e) => return Err(e),
        };
        emit_report(&trace, format, &out)?;
        return Ok(match trace.iters_to_threshold {
            Some(t) => {
                println!("{spec}: threshold {threshold} reached after {t} iterations");
                Outcome::Done
            }
            None => Outcome::Unconverged(format!(
                "threshold {threshold} not reached in {max_iters} iterations (final loss {:e})",
                trace.final_loss().unwrap_or(f64::NAN)
            )),
        });
    }

    info!("grid search over {} cells", lrs.len() * betas.len());
    let result = grid_search(&problem, &spec, &lrs, &betas, &cfg)?;
    emit_report(&result, format, &out)?;
    let best = &result.best;
    Ok(match best.iters_to_threshold {
        Some(t) => {
            println!("{spec}: best lr {} beta {} reaches threshold in {t} iterations", best.lr, best.beta);
            Outcome::Done
        }
        None => Outcome::Unconverged("no grid cell reached the threshold".into()),
    })
}

fn bench_svd(args: Command) -> Result<Outcome> {
    let Command::BenchSvd {
        sizes,
        k,
        engines,
        trials,
        seed,
        tol,
        out,
        format,
    } = args
    else {
        unreachable!()
    };
    let sizes = sizes.split(',').map(parse_size).collect::<Result<Vec<_>>>()?;
    let ks: Vec<usize> = parse_list(&k, "rank")?;
    let format: ReportFormat = format.parse()?;
    let engines = parse_list::<EngineKind>(&engines, "engine")?
        .into_iter()
        .map(|e| {
            let cfg = EngineConfig::new(e, 1);
            match tol {
                Some(t) => cfg.with_tol(t),
                None => cfg,
            }
        })
        .collect::<Vec<_>>();
    let rows = svd_engine_benchmark(&sizes, &ks, &engines, trials, RngSeed(seed))?;
    emit_report(&rows, format, &out)?;
    for r in &rows {
        println!(
            "{}x{} k={} {}: matvecs {:.1}, err1 {:.2e}, {:.3}s",
            r.rows, r.cols, r.k, r.engine, r.mean_matvecs, r.mean_err1, r.mean_seconds
        );
    }
    let failed = rows.iter().filter(|r| r.converged_trials < r.trials).count();
    Ok(if failed == 0 {
        Outcome::Done
    } else {
        Outcome::Unconverged(format!("{failed} benchmark cells had unconverged trials"))
    })
}

#[derive(Serialize)]
struct LmoOutput {
    spec: String,
    support_value: f64,
    direction: Vec<Vec<f64>>,
}

fn lmo_eval(args: Command) -> Result<Outcome> {
    let Command::LmoEval {
        spec,
        matrix,
        out,
        format,
    } = args
    else {
        unreachable!()
    };
    let spec: LmoSpec = spec.parse()?;
    let format: ReportFormat = format.parse()?;
    let m = read_matrix_csv(&matrix)?;
    let direction = lmo_evaluate(&m, &spec)?;
    let value = support_value(&m, &spec)?;
    match format {
        ReportFormat::Csv => write_matrix_csv(&direction, &out)?,
        ReportFormat::Json => {
            let body = LmoOutput {
                spec: spec.to_string(),
                support_value: value,
                direction: direction.to_rows(),
            };
            let text = serde_json::to_string_pretty(&body).map_err(|source| Error::Json {
                path: out.clone(),
                source,
            })?;
            std::fs::write(&out, text + "\n").map_err(|source| Error::Io { path: out.clone(), source })?;
        }
    }
    println!("support_value={value:?}");
    Ok(Outcome::Done)
}

fn ball_geometry(args: Command) -> Result<Outcome> {
    let Command::BallGeometry {
        norm,
        dims,
        resolution,
        scale,
        out,
    } = args
    else {
        unreachable!()
    };
    let kind: BallKind = norm.parse()?;
    let points = ball_boundary_samples(kind, dims, resolution, scale)?;
    let header = ["x", "y", "z"];
    let mut text = header[..dims].join(",") + "\n";
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&out, text).map_err(|source| Error::Io { path: out.clone(), source })?;
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        c @ Command::BenchLls { .. } => bench_lls(c),
        c @ Command::BenchSvd { .. } => bench_svd(c),
        c @ Command::LmoEval { .. } => lmo_eval(c),
        c @ Command::BallGeometry { .. } => ball_geometry(c),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Unconverged(msg)) => {
            warn!("{msg}");
            eprintln!("fanion: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("fanion: error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

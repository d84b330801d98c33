use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lls::LlsProblem;
use super::run::{run_optimizer, RunConfig};
use crate::error::{Error, Result};
use crate::lmo::LmoSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lr: f64,
    pub beta: f64,
    pub iters_to_threshold: Option<usize>,
    pub final_loss: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub spec: String,
    /// Row-major over `(lr, beta)` in the order the grids were given.
    pub cells: Vec<GridCell>,
    pub best: GridCell,
}

/// Reached cells first, then fewer iterations, then smaller `lr`, then smaller `beta`.
fn rank(a: &GridCell, b: &GridCell) -> Ordering {
    let key = |c: &GridCell| c.iters_to_threshold.unwrap_or(usize::MAX);
    key(a)
        .cmp(&key(b))
        .then(a.lr.total_cmp(&b.lr))
        .then(a.beta.total_cmp(&b.beta))
}

/// Runs every `(lr, beta)` cell with the remaining settings from `defaults`.
/// Cells run in parallel; the result order is the grid order regardless.
pub fn grid_search(
    p: &LlsProblem,
    spec: &LmoSpec,
    lr_grid: &[f64],
    beta_grid: &[f64],
    defaults: &RunConfig,
) -> Result<GridResult> {
    if lr_grid.is_empty() || beta_grid.is_empty() {
        return Err(Error::invalid("learning-rate and momentum grids must be nonempty"));
    }
    let pairs: Vec<(f64, f64)> = lr_grid
        .iter()
        .flat_map(|&lr| beta_grid.iter().map(move |&beta| (lr, beta)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(lr, beta)| {
            let cfg = RunConfig {
                spec: spec.clone(),
                lr,
                beta,
                ..defaults.clone()
            };
            match run_optimizer(p, &cfg) {
                Ok(trace) => Ok(GridCell {
                    lr,
                    beta,
                    iters_to_threshold: trace.iters_to_threshold,
                    final_loss: trace.final_loss().unwrap_or(f64::NAN),
                    diverged: false,
                }),
                Err(Error::Diverged { loss, .. }) => Ok(GridCell {
                    lr,
                    beta,
                    iters_to_threshold: None,
                    final_loss: loss,
                    diverged: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let best = cells
        .iter()
        .min_by(|a, b| rank(a, b))
        .cloned()
        .ok_or_else(|| Error::invalid("empty grid"))?;
    Ok(GridResult {
        spec: spec.to_string(),
        cells,
        best,
    })
}

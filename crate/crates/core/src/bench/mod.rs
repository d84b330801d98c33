//! Linear least-squares benchmark, grid search, SVD engine benchmark and
//! report emission.

mod grid;
mod lls;
mod report;
mod run;
mod svd_bench;

pub use grid::{grid_search, GridCell, GridResult};
pub use lls::{lls_grad, lls_loss, lls_make, LlsProblem};
pub use report::{emit_report, read_matrix_csv, render_report, write_matrix_csv, Report, ReportFormat};
pub use run::{run_optimizer, RunConfig, RunTrace, DIVERGENCE_FACTOR};
pub use svd_bench::{svd_engine_benchmark, SvdBenchRow};

use std::cell::Cell;

use faer::{Mat, MatRef};

use crate::matrix::Matrix;

/// A real `rows × cols` linear map applied to blocks of column vectors.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `M X` for `X` with `ncols()` rows.
    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64>;
    /// `Mᵀ Y` for `Y` with `nrows()` rows.
    fn apply_transpose(&self, y: MatRef<'_, f64>) -> Mat<f64>;
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        self.as_faer() * x
    }

    fn apply_transpose(&self, y: MatRef<'_, f64>) -> Mat<f64> {
        self.as_faer().transpose() * y
    }
}

/// Wraps an operator and counts one matvec per column of every block applied.
pub struct CountingOperator<'a, O: LinearOperator + ?Sized> {
    inner: &'a O,
    count: Cell<usize>,
}

impl<'a, O: LinearOperator + ?Sized> CountingOperator<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        CountingOperator {
            inner,
            count: Cell::new(0),
        }
    }

    pub fn matvecs(&self) -> usize {
        self.count.get()
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for CountingOperator<'_, O> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        self.count.set(self.count.get() + x.ncols());
        self.inner.apply(x)
    }

    fn apply_transpose(&self, y: MatRef<'_, f64>) -> Mat<f64> {
        self.count.set(self.count.get() + y.ncols());
        self.inner.apply_transpose(y)
    }
}

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::select_rows;

/// State vectors of the student, one per row, with the rows the teacher
/// disagreed on marked as errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStates {
    states: DMatrix<f64>,
    error_mask: Vec<bool>,
}

impl LabeledStates {
    pub fn new(states: DMatrix<f64>, error_mask: Vec<bool>) -> Result<Self> {
        if states.nrows() != error_mask.len() {
            return Err(Error::DimensionMismatch {
                expected: states.nrows(),
                got: error_mask.len(),
            });
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("state vectors must be finite".into()));
        }
        Ok(Self { states, error_mask })
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn error_mask(&self) -> &[bool] {
        &self.error_mask
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn error_count(&self) -> usize {
        self.error_mask.iter().filter(|&&e| e).count()
    }

    /// Rows marked as errors.
    pub fn errors(&self) -> DMatrix<f64> {
        select_rows(&self.states, |i| self.error_mask[i])
    }

    /// Rows not marked as errors.
    pub fn background(&self) -> DMatrix<f64> {
        select_rows(&self.states, |i| !self.error_mask[i])
    }
}

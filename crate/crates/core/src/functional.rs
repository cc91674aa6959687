use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine functional `l(x) = <direction, x> - offset` with a unit-norm
/// direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    direction: DVector<f64>,
    offset: f64,
}

impl LinearFunctional {
    /// Normalises `direction`; a zero or non-finite direction is rejected.
    pub fn new(direction: DVector<f64>, offset: f64) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::DegenerateDirection(format!(
                "direction norm {norm} cannot be normalised"
            )));
        }
        Ok(Self {
            direction: direction / norm,
            offset,
        })
    }

    /// Builds from an unnormalised `(w, b)` pair, `l(x) = (<w, x> - b) / |w|`.
    pub fn from_unnormalized(w: DVector<f64>, b: f64) -> Result<Self> {
        let norm = w.norm();
        let mut f = Self::new(w, 0.0)?;
        f.offset = b / norm;
        Ok(f)
    }

    /// Rebuilds a functional from stored parts without renormalising, so a
    /// serialised functional evaluates bit for bit as before.
    pub(crate) fn from_raw_parts(direction: DVector<f64>, offset: f64) -> Self {
        Self { direction, offset }
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.direction.len());
        self.direction
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            - self.offset
    }

    pub fn eval_vec(&self, x: &DVector<f64>) -> f64 {
        self.direction.dot(x) - self.offset
    }

    /// Values on every row of `points`.
    pub fn eval_rows(&self, points: &DMatrix<f64>) -> DVector<f64> {
        let mut v = points * &self.direction;
        v.add_scalar_mut(-self.offset);
        v
    }

    /// True iff `l(y) >= -tol` on every row of `positive` and `l(x) < 0` on
    /// every row of `negative`.
    pub fn separates(&self, positive: &DMatrix<f64>, negative: &DMatrix<f64>, tol: f64) -> bool {
        self.eval_rows(positive).iter().all(|&v| v >= -tol)
            && self.eval_rows(negative).iter().all(|&v| v < 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalises_and_evaluates() {
        let f = LinearFunctional::new(DVector::from_vec(vec![3.0, 4.0]), 1.0).unwrap();
        assert!((f.direction().norm() - 1.0).abs() < 1e-15);
        assert!((f.eval(&[3.0, 4.0]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_preserves_sign_pattern() {
        let w = DVector::from_vec(vec![0.0, 2.0]);
        let f = LinearFunctional::from_unnormalized(w, 1.0).unwrap();
        assert_eq!(f.offset(), 0.5);
        assert!(f.eval(&[7.0, 0.6]) > 0.0);
        assert!(f.eval(&[7.0, 0.4]) < 0.0);
    }

    #[test]
    fn zero_direction_rejected() {
        assert!(matches!(
            LinearFunctional::new(DVector::zeros(3), 0.0),
            Err(Error::DegenerateDirection(_))
        ));
    }
}

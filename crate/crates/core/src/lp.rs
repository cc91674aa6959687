//! Exact linear-separability oracle.
//!
//! Decides whether some affine functional puts every error point on the
//! non-negative side and every background point strictly on the negative
//! side, by maximising the worst-case margin `t` over coefficients boxed to
//! `[-1, 1]`:
//!
//! ```text
//! max t  s.t.  <w, y> - b - t >= 0   (y in Y)
//!              <w, x> - b + t <= 0   (x in M)
//!              -1 <= w_i <= 1, t <= 1
//! ```
//!
//! The sets are separable iff the optimum exceeds [`MARGIN_THRESHOLD`].

use std::time::Duration;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;

pub const MARGIN_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq)]
pub enum Separability {
    Separable { witness: LinearFunctional, margin: f64 },
    NotSeparable { margin: f64 },
    /// The solver stopped early or returned a witness that failed direct
    /// verification; distinct from a negative answer.
    Indeterminate(String),
}

impl Separability {
    pub fn is_separable(&self) -> bool {
        matches!(self, Separability::Separable { .. })
    }
}

pub fn lp_separability(background: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Separability> {
    lp_separability_with_limit(background, y, DEFAULT_TIME_LIMIT)
}

pub fn lp_separability_with_limit(
    background: &DMatrix<f64>,
    y: &DMatrix<f64>,
    limit: Duration,
) -> Result<Separability> {
    let n = y.ncols().max(background.ncols());
    if y.nrows() > 0 && background.nrows() > 0 && y.ncols() != background.ncols() {
        return Err(Error::DimensionMismatch {
            expected: y.ncols(),
            got: background.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("points must have dimension >= 1".into()));
    }
    if y.nrows() == 0 || background.nrows() == 0 {
        return Ok(trivial_witness(background, y, n));
    }

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    problem.set_time_limit(limit);
    let w: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (-1.0, 1.0))).collect();
    let b = problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
    let t = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for row in y.row_iter() {
        let mut e = LinearExpr::empty();
        for (i, &v) in row.iter().enumerate() {
            if v != 0.0 {
                e.add(w[i], v);
            }
        }
        e.add(b, -1.0);
        e.add(t, -1.0);
        problem.add_constraint(e, ComparisonOp::Ge, 0.0);
    }
    for row in background.row_iter() {
        let mut e = LinearExpr::empty();
        for (i, &v) in row.iter().enumerate() {
            if v != 0.0 {
                e.add(w[i], v);
            }
        }
        e.add(b, -1.0);
        e.add(t, 1.0);
        problem.add_constraint(e, ComparisonOp::Le, 0.0);
    }

    let outcome = match problem.solve() {
        Ok(o) => o,
        Err(e) => return Ok(Separability::Indeterminate(format!("solver error: {e}"))),
    };
    let solution = match outcome {
        SolveOutcome::Solution(s) => s,
        other => {
            return Ok(Separability::Indeterminate(format!(
                "solver stopped: {:?}",
                other.termination_reason()
            )))
        }
    };
    let margin = solution.var_value(t);
    if !(margin > MARGIN_THRESHOLD) {
        return Ok(Separability::NotSeparable { margin });
    }
    let coeffs = DVector::from_iterator(n, w.iter().map(|&v| solution.var_value(v)));
    let witness = match LinearFunctional::from_unnormalized(coeffs, solution.var_value(b)) {
        Ok(f) => f,
        Err(e) => return Ok(Separability::Indeterminate(format!("degenerate witness: {e}"))),
    };
    if !witness.separates(y, background, 0.0) {
        return Ok(Separability::Indeterminate(
            "solver witness failed direct verification".into(),
        ));
    }
    Ok(Separability::Separable { witness, margin })
}

/// One side empty: a functional placing the other side as required.
fn trivial_witness(background: &DMatrix<f64>, y: &DMatrix<f64>, n: usize) -> Separability {
    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    let offset = if y.nrows() > 0 {
        y.column(0).iter().copied().fold(f64::INFINITY, f64::min) - 1.0
    } else if background.nrows() > 0 {
        background.column(0).iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0
    } else {
        0.0
    };
    Separability::Separable {
        witness: LinearFunctional::new(e1, offset).expect("unit vector"),
        margin: 1.0,
    }
}

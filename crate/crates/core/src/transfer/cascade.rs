use nalgebra::{DMatrix, DVector};

use super::fisher::KnowledgeUnit;
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::linalg::{covariance, dot, mean_rows};
use crate::lp::{lp_separability, Separability};

/// Required gap between the two classes on a second-stage axis.
pub const SECOND_STAGE_GAP: f64 = 1e-9;

fn row_vec(m: &DMatrix<f64>, r: usize) -> Vec<f64> {
    m.row(r).iter().copied().collect()
}

/// For every unit, the background rows (`error_mask[r] == false`) of
/// `features` on which it fires.
pub fn detect_false_assignments(
    units: &[KnowledgeUnit],
    features: &DMatrix<f64>,
    error_mask: &[bool],
) -> Vec<Vec<usize>> {
    let rows: Vec<(usize, Vec<f64>)> = (0..features.nrows())
        .filter(|&r| !error_mask[r])
        .map(|r| (r, row_vec(features, r)))
        .collect();
    units
        .iter()
        .map(|u| {
            rows.iter()
                .filter(|(_, x)| u.fires(x))
                .map(|(r, _)| *r)
                .collect()
        })
        .collect()
}

/// Orthogonal projection of every row onto the hyperplane `l = 0` of `unit`:
/// `x -> x - (<w_hat, x> - c) w_hat`.
pub fn project_to_hyperplane(unit: &KnowledgeUnit, points: &DMatrix<f64>) -> DMatrix<f64> {
    let w_hat = unit.unit_direction();
    let mut out = points.clone();
    for r in 0..points.nrows() {
        let t = unit.eval(&row_vec(points, r));
        for (j, v) in w_hat.iter().enumerate() {
            out[(r, j)] -= t * v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum SecondStage {
    /// Functional on the projected space, `>= 0` on the cluster side and
    /// `< 0` on every intruder.
    Separable(LinearFunctional),
    /// Best gap found (negative or below the required margin).
    NotSeparable { gap: f64 },
}

/// Midpoint threshold along `direction`, if the classes are strictly apart.
fn midpoint_split(direction: &DVector<f64>, keep: &DMatrix<f64>, reject: &DMatrix<f64>) -> (f64, Option<f64>) {
    let lo = (0..keep.nrows())
        .map(|r| dot(direction.as_slice(), &row_vec(keep, r)))
        .fold(f64::INFINITY, f64::min);
    let hi = (0..reject.nrows())
        .map(|r| dot(direction.as_slice(), &row_vec(reject, r)))
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = lo - hi;
    if gap > SECOND_STAGE_GAP {
        (gap, Some(0.5 * (lo + hi)))
    } else {
        (gap, None)
    }
}

/// Second functional separating the projected cluster `keep` from the
/// projected intruders `reject`: a ridge-regularised Fisher axis first, the
/// LP witness direction if that axis does not split them.
pub fn second_stage_unit(keep: &DMatrix<f64>, reject: &DMatrix<f64>) -> Result<SecondStage> {
    if keep.nrows() == 0 || reject.nrows() == 0 {
        return Err(Error::InvalidInput("second stage needs both sets nonempty".into()));
    }
    if keep.ncols() != reject.ncols() {
        return Err(Error::DimensionMismatch {
            expected: keep.ncols(),
            got: reject.ncols(),
        });
    }
    let m = keep.ncols();
    let diff = mean_rows(keep) - mean_rows(reject);
    let mut best_gap = f64::NEG_INFINITY;
    if diff.norm() > 0.0 {
        let mut sum = covariance(keep) + covariance(reject);
        let ridge = 1e-8 * (sum.trace() / m as f64).max(1e-300);
        for i in 0..m {
            sum[(i, i)] += ridge;
        }
        if let Some(ch) = sum.cholesky() {
            let d = ch.solve(&diff);
            if d.norm() > 0.0 && d.iter().all(|v| v.is_finite()) {
                let d = d.normalize();
                let (gap, split) = midpoint_split(&d, keep, reject);
                best_gap = gap;
                if let Some(t) = split {
                    return Ok(SecondStage::Separable(LinearFunctional::new(d, t)?));
                }
            }
        }
    }
    match lp_separability(reject, keep)? {
        Separability::Separable { witness, .. } => {
            let d = witness.direction().clone();
            let (gap, split) = midpoint_split(&d, keep, reject);
            match split {
                Some(t) => Ok(SecondStage::Separable(LinearFunctional::new(d, t)?)),
                None => Ok(SecondStage::NotSeparable {
                    gap: gap.max(best_gap),
                }),
            }
        }
        _ => Ok(SecondStage::NotSeparable { gap: best_gap }),
    }
}

/// `l2(P x)` written as a functional of `x`, where `P` projects onto the
/// hyperplane of `unit`.
pub fn compose_with_projection(unit: &KnowledgeUnit, l2: &LinearFunctional) -> Result<LinearFunctional> {
    let w_hat = unit.unit_direction();
    let d = l2.direction();
    let along = d.dot(w_hat);
    let direction = d - w_hat * along;
    let offset = l2.offset() - unit.c() * along;
    if !(direction.norm() > 0.0) {
        return Err(Error::DegenerateDirection(
            "second-stage direction is parallel to the first".into(),
        ));
    }
    Ok(LinearFunctional::from_raw_parts(direction, offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn e1_unit(c: f64) -> KnowledgeUnit {
        KnowledgeUnit::from_parts(DVector::from_vec(vec![1.0, 0.0]), c, 0)
    }

    #[test]
    fn coordinate_projection() {
        let p = project_to_hyperplane(&e1_unit(2.0), &DMatrix::from_row_slice(1, 2, &[5.0, 3.0]));
        assert_eq!(p.as_slice(), &[2.0, 3.0]);
        let on = DMatrix::from_row_slice(1, 2, &[2.0, -7.0]);
        assert_eq!(project_to_hyperplane(&e1_unit(2.0), &on), on);
    }

    #[test]
    fn random_projection_lands_on_plane_and_is_idempotent() {
        let mut rng = rng_from_seed(4);
        let w = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let unit = KnowledgeUnit::from_parts(w, 0.7, 0);
        let pts = DMatrix::from_fn(50, 6, |_, _| 3.0 * rng.sample::<f64, _>(StandardNormal));
        let p = project_to_hyperplane(&unit, &pts);
        for r in 0..50 {
            assert!(unit.eval(&row_vec(&p, r)).abs() < 1e-10);
        }
        assert!((project_to_hyperplane(&unit, &p) - &p).amax() < 1e-10);
    }

    #[test]
    fn false_assignments_match_scan() {
        let unit = e1_unit(1.0);
        let f = DMatrix::from_row_slice(4, 2, &[2.0, 0.0, 1.0, 5.0, 0.5, 0.0, 3.0, 1.0]);
        let mask = [true, false, false, false];
        assert_eq!(detect_false_assignments(std::slice::from_ref(&unit), &f, &mask), vec![vec![1, 3]]);
        assert_eq!(detect_false_assignments(&[e1_unit(10.0)], &f, &mask), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn axis_split_second_stage() {
        let keep = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 2.0]);
        let reject = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, -3.0]);
        match second_stage_unit(&keep, &reject).unwrap() {
            SecondStage::Separable(l) => assert!(l.separates(&keep, &reject, 0.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_sets_are_not_separable() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 2.0]);
        assert!(matches!(
            second_stage_unit(&s, &s).unwrap(),
            SecondStage::NotSeparable { .. }
        ));
    }

    #[test]
    fn composed_functional_matches_projected_evaluation() {
        let mut rng = rng_from_seed(8);
        let unit = KnowledgeUnit::from_parts(DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal)), 0.3, 0);
        let l2 = LinearFunctional::new(DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal)), -0.2).unwrap();
        let composed = compose_with_projection(&unit, &l2).unwrap();
        let pts = DMatrix::from_fn(20, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let proj = project_to_hyperplane(&unit, &pts);
        let a = composed.eval_rows(&pts);
        let b = l2.eval_rows(&proj);
        assert!((a - b).amax() < 1e-12);
    }
}

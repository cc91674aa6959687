//! Seeded samplers for the uniform ball and product laws on the unit cube.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionTag {
    Ball,
    Cube,
}

/// Points stored one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: DMatrix<f64>,
    pub distribution: DistributionTag,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Seeded generator used everywhere a stream of randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fills `count` rows with i.i.d. uniform points of the closed unit ball:
/// a normalised Gaussian direction scaled by `U^{1/n}`.
pub fn ball_points<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> DMatrix<f64> {
    let mut points = DMatrix::zeros(count, n);
    let mut buf = vec![0.0; n];
    for r in 0..count {
        let norm = loop {
            for v in buf.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = buf.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break norm;
            }
        };
        let u: f64 = rng.random();
        let radius = u.powf(1.0 / n as f64);
        for (c, v) in buf.iter().enumerate() {
            points[(r, c)] = v / norm * radius;
        }
    }
    points
}

/// Uniform sample of the unit ball in `R^n`.
pub fn sample_ball(n: usize, count: usize, seed: u64) -> Result<SampleSet> {
    if n < 1 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok(SampleSet {
        points: ball_points(n, count, &mut rng),
        distribution: DistributionTag::Ball,
        seed,
    })
}

/// Law of a single cube coordinate; every law is supported in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CoordinateLaw {
    /// Uniform on `[0, 1]`, variance `1/12`.
    Uniform,
    /// Symmetric two-point law on `1/2 +- sqrt(variance)`; `variance = 1/4`
    /// gives the fair `{0, 1}` coin.
    TwoPoint { variance: f64 },
    /// Symmetric `Beta(alpha, alpha)`, variance `1 / (4 (2 alpha + 1))`.
    SymmetricBeta { alpha: f64 },
}

impl CoordinateLaw {
    pub fn variance(&self) -> f64 {
        match *self {
            CoordinateLaw::Uniform => 1.0 / 12.0,
            CoordinateLaw::TwoPoint { variance } => variance,
            CoordinateLaw::SymmetricBeta { alpha } => 1.0 / (4.0 * (2.0 * alpha + 1.0)),
        }
    }

    /// Symmetric two-point law with the given variance.
    pub fn with_variance(variance: f64) -> Result<Self> {
        let law = CoordinateLaw::TwoPoint { variance };
        law.validate()?;
        Ok(law)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CoordinateLaw::Uniform => Ok(()),
            CoordinateLaw::TwoPoint { variance } => {
                if !(variance > 0.0) || variance > 0.25 {
                    Err(Error::InvalidInput(format!(
                        "variance {variance} outside (0, 1/4], the range attainable on [0,1]"
                    )))
                } else {
                    Ok(())
                }
            }
            CoordinateLaw::SymmetricBeta { alpha } => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("beta shape {alpha} must be > 0")))
                }
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, beta: Option<&Beta<f64>>) -> f64 {
        match *self {
            CoordinateLaw::Uniform => rng.random(),
            CoordinateLaw::TwoPoint { variance } => {
                let half_width = variance.sqrt();
                if rng.random::<bool>() {
                    0.5 + half_width
                } else {
                    0.5 - half_width
                }
            }
            CoordinateLaw::SymmetricBeta { .. } => beta.expect("beta law prepared").sample(rng),
        }
    }
}

/// Per-coordinate laws of a product distribution on the cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VarianceSpec {
    /// Same law on every coordinate.
    Iid(CoordinateLaw),
    /// One law per coordinate.
    PerCoordinate(Vec<CoordinateLaw>),
}

impl VarianceSpec {
    pub fn law(&self, j: usize) -> CoordinateLaw {
        match self {
            VarianceSpec::Iid(law) => *law,
            VarianceSpec::PerCoordinate(laws) => laws[j],
        }
    }

    /// Smallest coordinate standard deviation.
    pub fn min_std(&self, n: usize) -> f64 {
        (0..n)
            .map(|j| self.law(j).variance().sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn cube_points<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    spec: &VarianceSpec,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let laws: Vec<CoordinateLaw> = (0..n).map(|j| spec.law(j)).collect();
    let mut betas = Vec::with_capacity(n);
    for law in &laws {
        law.validate()?;
        betas.push(match *law {
            CoordinateLaw::SymmetricBeta { alpha } => {
                Some(Beta::new(alpha, alpha).map_err(|e| Error::InvalidInput(e.to_string()))?)
            }
            _ => None,
        });
    }
    let mut points = DMatrix::zeros(count, n);
    for r in 0..count {
        for (c, law) in laws.iter().enumerate() {
            points[(r, c)] = law.sample(rng, betas[c].as_ref());
        }
    }
    Ok(points)
}

/// i.i.d. sample from a product law on `[0, 1]^n`.
pub fn sample_cube(n: usize, count: usize, spec: &VarianceSpec, seed: u64) -> Result<SampleSet> {
    if n < 1 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if let VarianceSpec::PerCoordinate(laws) = spec {
        if laws.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: laws.len(),
            });
        }
    }
    let mut rng = rng_from_seed(seed);
    Ok(SampleSet {
        points: cube_points(n, count, spec, &mut rng)?,
        distribution: DistributionTag::Cube,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_variance(points: &DMatrix<f64>, c: usize) -> f64 {
        let col = points.column(c);
        let mean = col.mean();
        col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64
    }

    #[test]
    fn ball_points_inside_unit_ball() {
        let s = sample_ball(7, 2000, 3).unwrap();
        assert!(s.points.row_iter().all(|r| r.norm() <= 1.0 + 1e-15));
    }

    #[test]
    fn ball_radial_cdf() {
        let (n, count, r) = (10, 100_000, 0.9);
        let s = sample_ball(n, count, 11).unwrap();
        let inside = s.points.row_iter().filter(|row| row.norm() <= r).count() as f64;
        let p = r.powi(n as i32);
        let sigma = (p * (1.0 - p) / count as f64).sqrt();
        assert!((inside / count as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn ball_mean_near_origin() {
        let (n, count) = (5, 50_000);
        let s = sample_ball(n, count, 5).unwrap();
        // per-coordinate variance of the uniform ball is 1/(n+2)
        let sigma = (1.0 / (n as f64 + 2.0) / count as f64).sqrt();
        for c in 0..n {
            assert!(s.points.column(c).mean().abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn empty_sample() {
        assert!(sample_ball(4, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn seed_determinism() {
        assert_eq!(sample_ball(6, 10, 42).unwrap(), sample_ball(6, 10, 42).unwrap());
        assert_ne!(sample_ball(6, 10, 42).unwrap().points, sample_ball(6, 10, 43).unwrap().points);
    }

    fn assert_variance(points: &DMatrix<f64>, c: usize, law: CoordinateLaw) {
        // The variance of the sample variance is (mu4 - sigma^4)/N; mu4 <= 1/16 on [0,1].
        let count = points.nrows() as f64;
        let v = column_variance(points, c);
        let tol = 3.0 * (1.0 / 16.0 / count).sqrt();
        assert!((v - law.variance()).abs() < tol, "coordinate {c}: {v} vs {}", law.variance());
    }

    #[test]
    fn cube_uniform_variance() {
        let s = sample_cube(4, 40_000, &VarianceSpec::Iid(CoordinateLaw::Uniform), 9).unwrap();
        assert!(s.points.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for c in 0..4 {
            assert_variance(&s.points, c, CoordinateLaw::Uniform);
        }
    }

    #[test]
    fn cube_two_point_quarter_variance() {
        let law = CoordinateLaw::TwoPoint { variance: 0.25 };
        let s = sample_cube(3, 20_000, &VarianceSpec::Iid(law), 1).unwrap();
        assert!(s.points.iter().all(|&v| v == 0.0 || v == 1.0));
        for c in 0..3 {
            assert_variance(&s.points, c, law);
        }
    }

    #[test]
    fn cube_mixed_spec() {
        let laws = vec![
            CoordinateLaw::Uniform,
            CoordinateLaw::TwoPoint { variance: 0.1 },
            CoordinateLaw::SymmetricBeta { alpha: 2.0 },
            CoordinateLaw::SymmetricBeta { alpha: 0.5 },
        ];
        let s = sample_cube(4, 40_000, &VarianceSpec::PerCoordinate(laws.clone()), 77).unwrap();
        for (c, law) in laws.into_iter().enumerate() {
            assert_variance(&s.points, c, law);
        }
    }

    #[test]
    fn cube_rejects_excess_variance() {
        assert!(CoordinateLaw::with_variance(0.26).is_err());
        let bad = VarianceSpec::Iid(CoordinateLaw::TwoPoint { variance: 0.3 });
        assert!(sample_cube(2, 5, &bad, 0).is_err());
    }
}

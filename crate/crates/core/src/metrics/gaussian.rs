use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{bail, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianStats {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            bail!(
                Shape,
                "covariance {}×{} for a {}-vector mean",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            );
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Point mass at `mean`.
    pub fn point(mean: &[f64]) -> Self {
        let d = mean.len();
        Self {
            mean: DVector::from_column_slice(mean),
            cov: DMatrix::zeros(d, d),
        }
    }
}

pub(crate) fn to_matrix(samples: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = samples.first().map_or(0, Vec::len);
    if d == 0 {
        bail!(Stat, "samples must be nonempty vectors");
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        bail!(Shape, "sample of length {} among length-{d} samples", bad.len());
    }
    Ok(DMatrix::from_fn(samples.len(), d, |i, j| samples[i][j]))
}

/// Sample mean and unbiased covariance.
pub fn fit_gaussian(samples: &[Vec<f64>]) -> Result<GaussianStats> {
    if samples.len() < 2 {
        bail!(Stat, "need at least two samples, got {}", samples.len());
    }
    let x = to_matrix(samples)?;
    let n = x.nrows() as f64;
    let mean = x.row_mean().transpose();
    let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n - 1.0);
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianStats::new(mean, cov)
}

/// Principal square root of a symmetric PSD matrix, clamping negative
/// eigenvalues to zero.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Squared Bures–Wasserstein distance
/// `‖μ1−μ2‖² + Tr(Σ1 + Σ2 − 2(Σ1^½ Σ2 Σ1^½)^½)`.
pub fn gaussian_w2(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        bail!(Shape, "dimension {} vs {}", a.dim(), b.dim());
    }
    let dm = (&a.mean - &b.mean).norm_squared();
    let ra = sqrt_psd(&a.cov);
    let cross = sqrt_psd(&(&ra * &b.cov * &ra));
    let tr = a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
    Ok((dm + tr).max(0.0))
}

/// Squared Fréchet distance between fitted Gaussians.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    gaussian_w2(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn diag(mean: &[f64], var: &[f64]) -> GaussianStats {
        GaussianStats::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(var)),
        )
        .unwrap()
    }

    #[test]
    fn one_dimensional_cases() {
        let g = fit_gaussian(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(g.mean[0], 1.0);
        assert_eq!(g.cov[(0, 0)], 2.0);
        let same = fit_gaussian(&vec![vec![3.0, 1.0]; 4]).unwrap();
        assert!(same.cov.iter().all(|v| *v == 0.0));
        assert!(fit_gaussian(&[vec![1.0]]).is_err());
        let d = frechet_distance(&diag(&[0.0], &[1.0]), &diag(&[1.0], &[1.0])).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_two_pass_reference() {
        let mut rng = seeded(3);
        let xs: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let g = fit_gaussian(&xs).unwrap();
        let n = xs.len() as f64;
        let mean: Vec<f64> = (0..3).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
        for i in 0..3 {
            assert!((g.mean[i] - mean[i]).abs() < 1e-10);
            for j in 0..3 {
                let c = xs.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (n - 1.0);
                assert!((g.cov[(i, j)] - c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_closed_form() {
        let a = diag(&[1.0, 2.0, -1.0], &[0.5, 2.0, 1.5]);
        let b = diag(&[0.0, 2.5, 1.0], &[1.0, 0.2, 3.0]);
        let expect: f64 = [0.5f64, 2.0, 1.5]
            .iter()
            .zip([1.0f64, 0.2, 3.0])
            .map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2))
            .sum::<f64>()
            + 1.0
            + 0.25
            + 4.0;
        assert!((gaussian_w2(&a, &b).unwrap() - expect).abs() < 1e-9);
        assert!(gaussian_w2(&a, &a).unwrap().abs() < 1e-9);
    }

    #[test]
    fn point_masses() {
        let d = gaussian_w2(&GaussianStats::point(&[0.0, 0.0]), &GaussianStats::point(&[3.0, 4.0])).unwrap();
        assert!((d - 25.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_in_arguments() {
        let mut rng = seeded(5);
        for _ in 0..10 {
            let xs: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let ys: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..2.0)).collect())
                .collect();
            let (a, b) = (fit_gaussian(&xs).unwrap(), fit_gaussian(&ys).unwrap());
            let ab = frechet_distance(&a, &b).unwrap();
            let ba = frechet_distance(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-9);
            assert!(frechet_distance(&a, &a).unwrap() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            gaussian_w2(&GaussianStats::point(&[0.0]), &GaussianStats::point(&[0.0, 1.0])),
            Err(crate::Error::Shape(_))
        ));
    }
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::fit_gaussian;
use crate::error::{bail, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    pub mean: DVector<f64>,
    /// `dims × d`, orthonormal rows, largest-magnitude entry of each row
    /// positive.
    pub components: DMatrix<f64>,
    /// All covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaProjection {
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        (0..self.components.nrows())
            .map(|k| {
                if total > 0.0 {
                    self.eigenvalues[k].max(0.0) / total
                } else {
                    0.0
                }
            })
            .collect()
    }
}

pub fn pca_fit(samples: &[Vec<f64>], dims: usize) -> Result<PcaProjection> {
    if samples.len() < dims.max(2) {
        bail!(Stat, "PCA to {dims} dims needs at least {} samples", dims.max(2));
    }
    let g = fit_gaussian(samples)?;
    if dims == 0 || dims > g.dim() {
        bail!(Stat, "cannot project {}-dimensional data to {dims} dims", g.dim());
    }
    let eig = SymmetricEigen::new(g.cov.clone());
    let mut order: Vec<usize> = (0..g.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = DMatrix::zeros(dims, g.dim());
    for (r, &k) in order.iter().take(dims).enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if lead < 0.0 {
            v = -v;
        }
        components.set_row(r, &v.transpose());
    }
    Ok(PcaProjection {
        mean: g.mean,
        components,
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
    })
}

pub fn pca_project(p: &PcaProjection, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    samples
        .iter()
        .map(|s| {
            if s.len() != p.mean.len() {
                bail!(
                    Shape,
                    "sample of length {} for a {}-dim projection",
                    s.len(),
                    p.mean.len()
                );
            }
            let centered = DVector::from_column_slice(s) - &p.mean;
            Ok((&p.components * centered).iter().copied().collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn cloud(seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..60)
            .map(|_| {
                let a: f64 = rng.random_range(-3.0..3.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let c: f64 = rng.random_range(-0.3..0.3);
                vec![a + b, a - b + c, c + 1.0, 0.5 * b]
            })
            .collect()
    }

    #[test]
    fn line_data_has_one_component() {
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0, -(i as f64)])
            .collect();
        let p = pca_fit(&xs, 2).unwrap();
        assert!(p.explained_variance_ratio()[0] > 0.999);
    }

    #[test]
    fn mean_projects_to_origin() {
        let xs = cloud(1);
        let p = pca_fit(&xs, 2).unwrap();
        let mean: Vec<f64> = p.mean.iter().copied().collect();
        let z = pca_project(&p, &[mean]).unwrap();
        assert!(z[0].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rows_are_orthonormal_and_signed() {
        let p = pca_fit(&cloud(2), 3).unwrap();
        let gram = &p.components * p.components.transpose();
        assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-10);
        for r in 0..3 {
            let row = p.components.row(r);
            let lead = row
                .iter()
                .copied()
                .fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn reconstruction_error_is_discarded_spectrum() {
        let xs = cloud(3);
        let p = pca_fit(&xs, 2).unwrap();
        let z = pca_project(&p, &xs).unwrap();
        let n = xs.len() as f64;
        let mut err = 0.0;
        for (x, zi) in xs.iter().zip(&z) {
            let rec = &p.mean + p.components.transpose() * DVector::from_column_slice(zi);
            err += (DVector::from_column_slice(x) - rec).norm_squared();
        }
        let discarded: f64 = p.eigenvalues[2..].iter().sum();
        assert!((err / (n - 1.0) - discarded).abs() < 1e-9);
    }
}

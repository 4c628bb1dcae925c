use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use super::gaussian::to_matrix;
use super::{GaussianStats, COVARIANCE_RIDGE};
use crate::error::{bail, Result};
use crate::rng::derive;

const MIN_WEIGHT: f64 = 1e-8;
const MAX_RESTARTS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Gmm {
    pub weights: Vec<f64>,
    pub components: Vec<GaussianStats>,
}

impl Gmm {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianStats>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            bail!(Shape, "{} weights for {} components", weights.len(), components.len());
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            bail!(Stat, "mixture weights must be a probability vector, sum {sum}");
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            bail!(Shape, "components of differing dimension");
        }
        Ok(Self { weights, components })
    }

    pub fn single(g: GaussianStats) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![g],
        }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Mean log-density of `samples` under the mixture.
    pub fn mean_log_likelihood(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let x = to_matrix(samples)?;
        let comps = prepare(self)?;
        let mut total = 0.0;
        for i in 0..x.nrows() {
            let row = x.row(i).transpose();
            let logs: Vec<f64> = comps.iter().map(|c| c.log_pdf(&row)).collect();
            total += log_sum_exp(&logs);
        }
        Ok(total / x.nrows() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

/// A fitted mixture with the mean log-likelihood after every EM iteration.
#[derive(Clone, Debug)]
pub struct GmmFit {
    pub gmm: Gmm,
    pub log_likelihood: Vec<f64>,
    pub restarts: usize,
}

struct Component {
    log_weight: f64,
    mean: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

impl Component {
    fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let y = self.chol.l().solve_lower_triangular(&diff).expect("nonsingular factor");
        self.log_weight + self.log_norm - 0.5 * y.norm_squared()
    }
}

fn prepare(g: &Gmm) -> Result<Vec<Component>> {
    let d = g.dim() as f64;
    g.weights
        .iter()
        .zip(&g.components)
        .map(|(&w, c)| {
            let chol = Cholesky::new(c.cov.clone())
                .ok_or_else(|| crate::Error::Stat("component covariance is not positive definite".into()))?;
            let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            Ok(Component {
                log_weight: w.ln(),
                mean: c.mean.clone(),
                chol,
                log_norm: -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det),
            })
        })
        .collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// k-means++ seeding: first centre uniform, the rest by squared distance.
fn kmeanspp<R: Rng>(x: &DMatrix<f64>, k: usize, rng: &mut R) -> Vec<usize> {
    let n = x.nrows();
    let mut centres = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| (x.row(i) - x.row(centres[0])).norm_squared()).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut r = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &v) in d2.iter().enumerate() {
                if r < v {
                    pick = i;
                    break;
                }
                r -= v;
            }
            pick
        };
        centres.push(next);
        for i in 0..n {
            d2[i] = d2[i].min((x.row(i) - x.row(next)).norm_squared());
        }
    }
    centres
}

/// Weighted moments of the rows of `x` under responsibilities `r`.
fn m_step(x: &DMatrix<f64>, resp: &DMatrix<f64>) -> Option<Gmm> {
    let (n, d) = (x.nrows(), x.ncols());
    let k = resp.ncols();
    let mut weights = Vec::with_capacity(k);
    let mut comps = Vec::with_capacity(k);
    for j in 0..k {
        let col = resp.column(j);
        let nk: f64 = col.sum();
        if nk / (n as f64) < MIN_WEIGHT {
            return None;
        }
        let mean = x.transpose() * col / nk;
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..n {
            let diff = x.row(i).transpose() - &mean;
            cov += col[i] * &diff * diff.transpose();
        }
        cov /= nk;
        let mut cov = (&cov + cov.transpose()) * 0.5;
        for a in 0..d {
            cov[(a, a)] += COVARIANCE_RIDGE;
        }
        weights.push(nk / n as f64);
        comps.push(GaussianStats { mean, cov });
    }
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    Some(Gmm {
        weights,
        components: comps,
    })
}

/// E-step: responsibilities and mean log-likelihood.
fn e_step(x: &DMatrix<f64>, g: &Gmm) -> Result<(DMatrix<f64>, f64)> {
    let comps = prepare(g)?;
    let (n, k) = (x.nrows(), comps.len());
    let mut resp = DMatrix::zeros(n, k);
    let mut total = 0.0;
    let mut logs = vec![0.0; k];
    for i in 0..n {
        let row = x.row(i).transpose();
        for (j, c) in comps.iter().enumerate() {
            logs[j] = c.log_pdf(&row);
        }
        let lse = log_sum_exp(&logs);
        total += lse;
        for j in 0..k {
            resp[(i, j)] = (logs[j] - lse).exp();
        }
    }
    Ok((resp, total / n as f64))
}

fn attempt(x: &DMatrix<f64>, k: usize, seed: u64, stream: u64, opts: GmmOptions) -> Result<Option<(Gmm, Vec<f64>)>> {
    let mut rng = derive(seed, stream);
    let centres = kmeanspp(x, k, &mut rng);
    let n = x.nrows();
    let mut resp = DMatrix::zeros(n, k);
    for i in 0..n {
        let j = (0..k)
            .min_by(|&a, &b| {
                let da = (x.row(i) - x.row(centres[a])).norm_squared();
                let db = (x.row(i) - x.row(centres[b])).norm_squared();
                da.total_cmp(&db)
            })
            .expect("k ≥ 1");
        resp[(i, j)] = 1.0;
    }
    let Some(mut g) = m_step(x, &resp) else {
        return Ok(None);
    };
    let mut history = Vec::new();
    for _ in 0..opts.max_iter {
        let (r, ll) = e_step(x, &g)?;
        let done = history.last().is_some_and(|prev: &f64| (ll - prev).abs() < opts.tol);
        history.push(ll);
        if done {
            break;
        }
        match m_step(x, &r) {
            Some(next) => g = next,
            None => return Ok(None),
        }
    }
    Ok(Some((g, history)))
}

/// EM fit of a `k`-component full-covariance mixture.
pub fn fit_gmm_with(samples: &[Vec<f64>], k: usize, seed: u64, opts: GmmOptions) -> Result<GmmFit> {
    if k == 0 || samples.len() < k {
        bail!(
            Stat,
            "need at least {k} samples for {k} components, got {}",
            samples.len()
        );
    }
    let x = to_matrix(samples)?;
    for restart in 0..=MAX_RESTARTS {
        if let Some((gmm, log_likelihood)) = attempt(&x, k, seed, restart as u64, opts)? {
            return Ok(GmmFit {
                gmm,
                log_likelihood,
                restarts: restart,
            });
        }
    }
    bail!(Stat, "component collapsed in {} consecutive fits", MAX_RESTARTS + 1)
}

pub fn fit_gmm(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<Gmm> {
    Ok(fit_gmm_with(samples, k, seed, GmmOptions::default())?.gmm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::fit_gaussian;
    use crate::rng::{seeded, standard_normal};

    fn clusters(seed: u64) -> (Vec<Vec<f64>>, [[f64; 2]; 2]) {
        let centres = [[-4.0, 1.0], [3.0, -2.0]];
        let mut rng = seeded(seed);
        let xs = (0..400)
            .map(|i| {
                let c = centres[i % 2];
                vec![
                    c[0] + 0.5 * standard_normal(&mut rng),
                    c[1] + 0.5 * standard_normal(&mut rng),
                ]
            })
            .collect();
        (xs, centres)
    }

    #[test]
    fn single_component_is_ridged_ml_gaussian() {
        let (xs, _) = clusters(1);
        let g = fit_gmm(&xs, 1, 0).unwrap();
        let reference = fit_gaussian(&xs).unwrap();
        let n = xs.len() as f64;
        assert!((&g.components[0].mean - &reference.mean).norm() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let ml = reference.cov[(i, j)] * (n - 1.0) / n + if i == j { COVARIANCE_RIDGE } else { 0.0 };
                assert!((g.components[0].cov[(i, j)] - ml).abs() < 1e-10);
            }
        }
        assert_eq!(g.weights, vec![1.0]);
    }

    #[test]
    fn recovers_separated_clusters() {
        let (xs, centres) = clusters(2);
        let g = fit_gmm(&xs, 2, 7).unwrap();
        for c in centres {
            let best = g
                .components
                .iter()
                .map(|comp| ((comp.mean[0] - c[0]).powi(2) + (comp.mean[1] - c[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.1, "{best}");
        }
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_likelihood_never_decreases() {
        let mut rng = seeded(3);
        let xs: Vec<Vec<f64>> = (0..300)
            .map(|i| {
                let shift = (i % 3) as f64;
                (0..3).map(|_| shift + standard_normal(&mut rng)).collect()
            })
            .collect();
        let fit = fit_gmm_with(&xs, 3, 4, GmmOptions::default()).unwrap();
        assert!(fit.log_likelihood.len() > 2);
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} → {}", w[0], w[1]);
        }
        let direct = fit.gmm.mean_log_likelihood(&xs).unwrap();
        assert!(direct >= *fit.log_likelihood.last().unwrap() - 1e-9);
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_gmm(&[vec![0.0]], 2, 0).is_err());
    }

    #[test]
    fn duplicate_points_collapse() {
        let xs = vec![vec![1.0, 1.0]; 10];
        assert!(matches!(fit_gmm(&xs, 2, 0), Err(crate::Error::Stat(_))));
    }
}

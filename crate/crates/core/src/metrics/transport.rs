//! Exact discrete optimal transport by the transportation simplex.

use std::collections::VecDeque;

use super::{gaussian_w2, Gmm};
use crate::error::{bail, Result};

const EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    /// `flow[i][j]` mass moved from source `i` to sink `j`.
    pub flow: Vec<Vec<f64>>,
    pub cost: f64,
}

fn normalized(w: &[f64]) -> Result<Vec<f64>> {
    let s: f64 = w.iter().sum();
    if w.is_empty() || w.iter().any(|v| *v < 0.0 || !v.is_finite()) || s <= 0.0 {
        bail!(Stat, "marginal must be a nonnegative vector with positive mass");
    }
    Ok(w.iter().map(|v| v / s).collect())
}

/// Path from row node `from` to column node `to` in the basis tree, as the
/// list of basic cells traversed.
fn tree_path(basis: &[Vec<bool>], from_row: usize, to_col: usize) -> Vec<(usize, usize)> {
    let (m, n) = (basis.len(), basis[0].len());
    // nodes: rows 0..m, columns m..m+n
    let mut prev = vec![usize::MAX; m + n];
    let mut queue = VecDeque::from([from_row]);
    prev[from_row] = from_row;
    while let Some(u) = queue.pop_front() {
        if u == m + to_col {
            break;
        }
        let neighbours: Vec<usize> = if u < m {
            (0..n).filter(|&j| basis[u][j]).map(|j| m + j).collect()
        } else {
            (0..m).filter(|&i| basis[i][u - m]).collect()
        };
        for v in neighbours {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut cells = Vec::new();
    let mut v = m + to_col;
    while v != from_row {
        let u = prev[v];
        let cell = if u < m { (u, v - m) } else { (v, u - m) };
        cells.push(cell);
        v = u;
    }
    // ordered from the column end back to the row end
    cells
}

/// Minimum-cost plan between marginals `a` and `b` (each rescaled to unit
/// mass) under `cost[i][j]`.
pub fn transport(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> Result<TransportPlan> {
    let a = normalized(a)?;
    let b = normalized(b)?;
    let (m, n) = (a.len(), b.len());
    if cost.len() != m || cost.iter().any(|r| r.len() != n) {
        bail!(Shape, "cost matrix does not match {m}×{n} marginals");
    }

    // north-west corner start, m + n − 1 basic cells
    let mut flow = vec![vec![0.0; n]; m];
    let mut basis = vec![vec![false; n]; m];
    let (mut supply, mut demand) = (a.clone(), b.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = supply[i].min(demand[j]);
        flow[i][j] = x;
        basis[i][j] = true;
        supply[i] -= x;
        demand[j] -= x;
        if i + 1 == m && j + 1 == n {
            break;
        }
        if (supply[i] <= demand[j] && i + 1 < m) || j + 1 == n {
            i += 1;
        } else {
            j += 1;
        }
    }

    let max_iter = 50 * (m + n) * (m + n) + 100;
    for _ in 0..max_iter {
        // potentials u_i + v_j = c_ij on basic cells
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..m {
                for j in 0..n {
                    if !basis[i][j] {
                        continue;
                    }
                    if !u[i].is_nan() && v[j].is_nan() {
                        v[j] = cost[i][j] - u[i];
                        changed = true;
                    } else if u[i].is_nan() && !v[j].is_nan() {
                        u[i] = cost[i][j] - v[j];
                        changed = true;
                    }
                }
            }
        }
        let mut entering = None;
        let mut best = -EPS * (1.0 + cost.iter().flatten().fold(0.0f64, |acc, c| acc.max(c.abs())));
        for i in 0..m {
            for j in 0..n {
                if !basis[i][j] {
                    let reduced = cost[i][j] - u[i] - v[j];
                    if reduced < best {
                        best = reduced;
                        entering = Some((i, j));
                    }
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let total = (0..m)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| flow[i][j] * cost[i][j])
                .sum();
            return Ok(TransportPlan { flow, cost: total });
        };
        // cycle: entering (+), then path cells alternating −, +, …
        let path = tree_path(&basis, ei, ej);
        let minus: Vec<(usize, usize)> = path.iter().copied().step_by(2).collect();
        let (li, lj) = *minus
            .iter()
            .min_by(|p, q| flow[p.0][p.1].total_cmp(&flow[q.0][q.1]))
            .expect("cycle has a decreasing cell");
        let theta = flow[li][lj];
        flow[ei][ej] += theta;
        for (k, &(pi, pj)) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[pi][pj] -= theta;
            } else {
                flow[pi][pj] += theta;
            }
        }
        flow[li][lj] = 0.0;
        basis[ei][ej] = true;
        basis[li][lj] = false;
    }
    bail!(Stat, "transportation simplex did not converge")
}

/// Mixture 2-Wasserstein distance: optimal transport between component
/// weights with squared Gaussian W2 as ground cost.
pub fn wam(g1: &Gmm, g2: &Gmm) -> Result<f64> {
    if g1.dim() != g2.dim() {
        bail!(Shape, "mixtures of dimension {} and {}", g1.dim(), g2.dim());
    }
    let cost = g1
        .components
        .iter()
        .map(|a| {
            g2.components
                .iter()
                .map(|b| gaussian_w2(a, b))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(transport(&g1.weights, &g2.weights, &cost)?.cost.max(0.0))
}

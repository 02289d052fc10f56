//! One-vs-one linear max-margin classification.
//!
//! Each class pair gets a soft-margin linear SVM with an unregularized bias,
//! solved in the dual by sequential minimal optimization over a precomputed
//! linear Gram matrix. The regularization constant is picked from a grid by
//! inner stratified cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlaceError, Result};
use crate::protocol::stratified_folds;
use crate::stats::{dot, n_classes};

pub const DEFAULT_C_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
const TOL: f64 = 1e-4;
const TAU: f64 = 1e-12;
const INNER_FOLDS: usize = 5;

/// Binary model for classes `a < b`; a nonnegative decision value votes `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub a: usize,
    pub b: usize,
    pub w: Vec<f64>,
    pub bias: f64,
}

impl PairModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub n_classes: usize,
    pub dim: usize,
    pub c: f64,
    pub seed: u64,
    pub pairs: Vec<PairModel>,
}

struct Gram {
    n: usize,
    k: Vec<f64>,
}

impl Gram {
    fn new<R: AsRef<[f64]> + Sync>(x: &[R]) -> Self {
        let n = x.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| dot(x[i].as_ref(), x[j].as_ref())).collect())
            .collect();
        Self {
            n,
            k: rows.concat(),
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }
}

/// Dual solution of one binary problem: `f(x) = sum_t coef_t K(t, x) + bias`.
struct DualSolution {
    coef: Vec<f64>,
    bias: f64,
}

/// SMO with second-order working-set selection on the indices `idx` of `gram`.
fn smo(gram: &Gram, idx: &[usize], y: &[f64], c: f64) -> DualSolution {
    let n = idx.len();
    let kk = |s: usize, t: usize| gram.at(idx[s], idx[t]);
    let qd: Vec<f64> = (0..n).map(|t| kk(t, t)).collect();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;
    let max_iter = 1000 * n.max(1);
    for _ in 0..max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let up = if y[t] > 0.0 {
                !at_upper(alpha[t])
            } else {
                !at_lower(alpha[t])
            };
            if up && -y[t] * g[t] >= gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let low = if y[t] > 0.0 {
                !at_lower(alpha[t])
            } else {
                !at_upper(alpha[t])
            };
            if !low {
                continue;
            }
            let yg = y[t] * g[t];
            gmax2 = gmax2.max(yg);
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let quad = qd[i] + qd[t] - 2.0 * kk(i, t);
                let obj = -grad_diff * grad_diff / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < TOL || j == usize::MAX {
            break;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = kk(i, j);
        let quad = (qd[i] + qd[j] - 2.0 * kij).max(TAU);
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += y[t] * (y[i] * kk(t, i) * di + y[j] * kk(t, j) * dj);
        }
    }
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * g[t];
        if at_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    };
    let coef = alpha.iter().zip(y).map(|(a, yy)| a * yy).collect();
    DualSolution { coef, bias: -rho }
}

struct PairDual {
    a: usize,
    b: usize,
    idx: Vec<usize>,
    sol: DualSolution,
}

fn train_pairs(gram: &Gram, train: &[usize], labels: &[usize], k: usize, c: f64) -> Vec<PairDual> {
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(a, b)| {
            let idx: Vec<usize> = train
                .iter()
                .copied()
                .filter(|&t| labels[t] == a || labels[t] == b)
                .collect();
            let y: Vec<f64> = idx
                .iter()
                .map(|&t| if labels[t] == a { 1.0 } else { -1.0 })
                .collect();
            let sol = smo(gram, &idx, &y, c);
            PairDual { a, b, idx, sol }
        })
        .collect()
}

fn vote(k: usize, decisions: impl Iterator<Item = (usize, usize, f64)>) -> usize {
    let mut votes = vec![0usize; k];
    for (a, b, d) in decisions {
        votes[if d >= 0.0 { a } else { b }] += 1;
    }
    let top = *votes.iter().max().unwrap_or(&0);
    votes.iter().position(|&v| v == top).unwrap_or(0)
}

fn inner_accuracy(
    gram: &Gram,
    labels: &[usize],
    k: usize,
    folds: &[usize],
    n_folds: usize,
    c: f64,
) -> f64 {
    let mut correct = 0usize;
    for f in 0..n_folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&t| folds[t] != f).collect();
        let duals = train_pairs(gram, &train, labels, k, c);
        for t in (0..labels.len()).filter(|&t| folds[t] == f) {
            let decisions = duals.iter().map(|p| {
                let d: f64 = p
                    .idx
                    .iter()
                    .zip(&p.sol.coef)
                    .map(|(&s, cf)| cf * gram.at(s, t))
                    .sum();
                (p.a, p.b, d + p.sol.bias)
            });
            if vote(k, decisions) == labels[t] {
                correct += 1;
            }
        }
    }
    correct as f64 / labels.len() as f64
}

/// Trains the one-vs-one model, choosing `C` from `c_grid` by inner
/// stratified 5-fold accuracy (ties to the smaller `C`).
pub fn train_linear<R: AsRef<[f64]> + Sync>(
    x: &[R],
    labels: &[usize],
    c_grid: &[f64],
    seed: u64,
) -> Result<LinearModel> {
    if x.len() != labels.len() {
        return Err(PlaceError::DimensionMismatch {
            expected: x.len(),
            got: labels.len(),
        });
    }
    if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0)) {
        return Err(PlaceError::InvalidParameter(
            "C grid must be nonempty and positive".into(),
        ));
    }
    let k = n_classes(labels);
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&y| counts[y] += 1);
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(PlaceError::TooFewClasses {
            needed: 2,
            got: present,
        });
    }
    if let Some(c) = counts.iter().position(|&m| m == 1) {
        return Err(PlaceError::InvalidParameter(format!(
            "class {c} has a single sample"
        )));
    }
    let dim = x[0].as_ref().len();
    if let Some(bad) = x.iter().find(|r| r.as_ref().len() != dim) {
        return Err(PlaceError::DimensionMismatch {
            expected: dim,
            got: bad.as_ref().len(),
        });
    }
    let gram = Gram::new(x);
    let mut grid = c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let c = if grid.len() == 1 {
        grid[0]
    } else {
        let min_count = counts.iter().copied().filter(|&m| m > 0).min().unwrap_or(2);
        let n_folds = INNER_FOLDS.min(min_count).max(2);
        let folds = stratified_folds(labels, n_folds, seed)?;
        let scores: Vec<f64> = grid
            .par_iter()
            .map(|&c| inner_accuracy(&gram, labels, k, &folds, n_folds, c))
            .collect();
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        grid[best]
    };
    let all: Vec<usize> = (0..labels.len()).collect();
    let pairs = train_pairs(&gram, &all, labels, k, c)
        .into_iter()
        .map(|p| {
            let mut w = vec![0.0; dim];
            for (&t, cf) in p.idx.iter().zip(&p.sol.coef) {
                if *cf != 0.0 {
                    w.iter_mut()
                        .zip(x[t].as_ref())
                        .for_each(|(a, v)| *a += cf * v);
                }
            }
            PairModel {
                a: p.a,
                b: p.b,
                w,
                bias: p.sol.bias,
            }
        })
        .collect();
    Ok(LinearModel {
        n_classes: k,
        dim,
        c,
        seed,
        pairs,
    })
}

/// Majority vote over the pairwise models; ties go to the smaller label.
pub fn predict_linear(m: &LinearModel, x: &[f64]) -> Result<usize> {
    if x.len() != m.dim {
        return Err(PlaceError::DimensionMismatch {
            expected: m.dim,
            got: x.len(),
        });
    }
    Ok(vote(
        m.n_classes,
        m.pairs.iter().map(|p| (p.a, p.b, p.decision(x))),
    ))
}

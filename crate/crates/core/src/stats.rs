//! Class statistics of embedded corpora and the closed-form descriptor
//! selection statistics.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlaceError, Result};

const POWER_ITERS: usize = 200;
const POWER_RTOL: f64 = 1e-9;
const POWER_SEED: u64 = 0x5eed_c0fe;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean and covariance summary of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMoments {
    pub count: usize,
    pub mean: Vec<f64>,
    /// `tr` of the unbiased sample covariance (0 for a single sample).
    pub trace: f64,
    /// Largest eigenvalue of the unbiased sample covariance, by power iteration.
    pub op_norm: f64,
}

impl ClassMoments {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| PlaceError::Empty("class has no rows".into()))?;
        let dim = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(PlaceError::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let m = rows.len();
        let mut mean = vec![0.0; dim];
        for r in rows {
            mean.iter_mut().zip(r.iter()).for_each(|(a, b)| *a += b);
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        if m < 2 {
            return Ok(Self {
                count: m,
                mean,
                trace: 0.0,
                op_norm: 0.0,
            });
        }
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&mean).map(|(x, mu)| x - mu).collect())
            .collect();
        let denom = (m - 1) as f64;
        let trace = centered.iter().map(|c| dot(c, c)).sum::<f64>() / denom;
        let op_norm = power_iteration(&centered, dim, denom);
        Ok(Self {
            count: m,
            mean,
            trace,
            op_norm,
        })
    }
}

/// Top eigenvalue of `X^T X / denom` without forming it.
fn power_iteration(x: &[Vec<f64>], dim: usize, denom: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERS {
        let nv = dot(&v, &v).sqrt();
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|a| *a /= nv);
        let u: Vec<f64> = x.iter().map(|row| dot(row, &v)).collect();
        let next = dot(&u, &u) / denom;
        let mut w = vec![0.0; dim];
        for (row, &ui) in x.iter().zip(&u) {
            w.iter_mut().zip(row).for_each(|(a, b)| *a += ui * b);
        }
        let done = (next - lambda).abs() <= POWER_RTOL * next.abs();
        lambda = next;
        v = w;
        if done || lambda == 0.0 {
            break;
        }
    }
    lambda
}

/// Per-class means and covariance summaries plus the global separation
/// statistics of a labeled embedded corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub dim: usize,
    pub classes: Vec<ClassMoments>,
    /// `min_{c != c'} |mu_c - mu_c'|`.
    pub delta: f64,
    /// Per-class gap to the nearest other mean.
    pub delta_c: Vec<f64>,
    /// `max_i |x_i|` over the whole corpus.
    pub radius: f64,
    /// `max_{i in c} |x_i - mu_c|`.
    pub within_radius: Vec<f64>,
}

impl ClassStats {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.count).collect()
    }

    pub fn m_min(&self) -> usize {
        self.classes.iter().map(|c| c.count).min().unwrap_or(0)
    }

    pub fn means(&self) -> Vec<&[f64]> {
        self.classes.iter().map(|c| c.mean.as_slice()).collect()
    }
}

pub(crate) fn n_classes(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

pub(crate) fn group_rows<'a, R: AsRef<[f64]>>(
    x: &'a [R],
    labels: &[usize],
    k: usize,
) -> Vec<Vec<&'a [f64]>> {
    let mut groups = vec![Vec::new(); k];
    for (row, &y) in x.iter().zip(labels) {
        groups[y].push(row.as_ref());
    }
    groups
}

/// Fits per-class moments and the separation statistics. Labels must be
/// `0..k` with every class present and `k >= 2`.
pub fn fit_class_stats<R: AsRef<[f64]> + Sync>(x: &[R], labels: &[usize]) -> Result<ClassStats> {
    if x.len() != labels.len() {
        return Err(PlaceError::DimensionMismatch {
            expected: x.len(),
            got: labels.len(),
        });
    }
    let k = n_classes(labels);
    if k < 2 {
        return Err(PlaceError::TooFewClasses { needed: 2, got: k });
    }
    let groups = group_rows(x, labels, k);
    if let Some(c) = groups.iter().position(Vec::is_empty) {
        return Err(PlaceError::EmptyClass(c));
    }
    let classes = groups
        .par_iter()
        .map(|g| ClassMoments::fit(g))
        .collect::<Result<Vec<_>>>()?;
    let dim = classes[0].mean.len();
    let mut delta_c = vec![f64::INFINITY; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let d = dist(&classes[a].mean, &classes[b].mean);
            delta_c[a] = delta_c[a].min(d);
            delta_c[b] = delta_c[b].min(d);
        }
    }
    let delta = delta_c.iter().copied().fold(f64::INFINITY, f64::min);
    let radius = x
        .iter()
        .map(|r| dot(r.as_ref(), r.as_ref()).sqrt())
        .fold(0.0, f64::max);
    let within_radius = groups
        .iter()
        .zip(&classes)
        .map(|(g, c)| g.iter().map(|r| dist(r, &c.mean)).fold(0.0, f64::max))
        .collect();
    Ok(ClassStats {
        dim,
        classes,
        delta,
        delta_c,
        radius,
        within_radius,
    })
}

/// Isotropic surrogate `delta / sqrt(dim)`.
pub fn eta(stats: &ClassStats, dim: usize) -> f64 {
    stats.delta / (dim.max(1) as f64).sqrt()
}

/// Ledoit-Wolf shrinkage of `S = (1/n) sum_i y_i y_i^T` toward `(tr S / p) I`.
///
/// The shrunk matrix `Z^T Z + b I` (with `Z` of size `n x p`) is kept
/// through the spectral decomposition of the `n x n` Gram matrix, so inverse
/// quadratic forms never touch a `p x p` matrix. The component of a vector
/// orthogonal to the row space of `Z` is formed explicitly rather than by
/// subtracting squared norms, which keeps tiny ridges accurate.
#[derive(Debug, Clone)]
pub struct ShrunkCovariance {
    pub dim: usize,
    /// Shrinkage intensity in `[0, 1]`.
    pub rho: f64,
    /// Target scale `tr(S) / p`.
    pub mu: f64,
    /// Isotropic part actually used, `max(rho * mu, floor)`.
    pub ridge: f64,
    s_op: f64,
    /// Orthonormal directions spanning the rows of `Z`, with their
    /// eigenvalues in `Z^T Z`.
    basis: Vec<Vec<f64>>,
    spectrum: Vec<f64>,
}

impl ShrunkCovariance {
    /// `floor` replaces a vanishing isotropic part so the result stays
    /// positive definite.
    pub fn fit(rows: &[Vec<f64>], floor: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(PlaceError::Empty(
                "shrinkage needs at least one sample".into(),
            ));
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(PlaceError::Empty("zero-dimensional samples".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(PlaceError::DimensionMismatch {
                expected: p,
                got: bad.len(),
            });
        }
        if !(floor > 0.0) {
            return Err(PlaceError::InvalidParameter(
                "covariance floor must be positive".into(),
            ));
        }
        let gram = gram_matrix(rows);
        let nf = n as f64;
        let tr_s = (0..n).map(|i| gram[(i, i)]).sum::<f64>() / nf;
        let fro2 = gram.iter().map(|g| g * g).sum::<f64>() / (nf * nf);
        let delta2 = (fro2 - tr_s * tr_s / p as f64).max(0.0);
        let diag4: f64 = (0..n).map(|i| gram[(i, i)].powi(2)).sum();
        let beta2 = ((diag4 - nf * fro2) / (nf * nf)).max(0.0);
        let rho = if delta2 <= 1e-14 * fro2 || delta2 == 0.0 {
            1.0
        } else {
            (beta2.min(delta2) / delta2).clamp(0.0, 1.0)
        };
        Self::assemble(rows, gram, rho, floor)
    }

    /// Same factored form with a caller-chosen intensity `rho`.
    pub fn with_intensity(rows: &[Vec<f64>], rho: f64, floor: f64) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(PlaceError::Empty(
                "shrinkage needs at least one sample".into(),
            ));
        }
        if !(0.0..=1.0).contains(&rho) || !(floor > 0.0) {
            return Err(PlaceError::InvalidParameter(format!(
                "need rho in [0, 1] and floor > 0, got {rho}, {floor}"
            )));
        }
        Self::assemble(rows, gram_matrix(rows), rho, floor)
    }

    fn assemble(rows: &[Vec<f64>], gram: DMatrix<f64>, rho: f64, floor: f64) -> Result<Self> {
        let n = rows.len();
        let nf = n as f64;
        let p = rows[0].len();
        let mu = (0..n).map(|i| gram[(i, i)]).sum::<f64>() / nf / p as f64;
        let ridge = (rho * mu).max(floor);
        let eig = nalgebra::SymmetricEigen::try_new(gram, 1e-14, 10_000).ok_or_else(|| {
            PlaceError::Numeric("Gram eigendecomposition did not converge".into())
        })?;
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let s_op = top / nf;
        let mut basis = Vec::new();
        let mut spectrum = Vec::new();
        if rho < 1.0 {
            for (j, &g) in eig.eigenvalues.iter().enumerate() {
                if g <= 1e-12 * top || g <= 0.0 {
                    continue;
                }
                // V_j = Y^T u_j / sqrt(g), unit length in R^p
                let mut v = vec![0.0; p];
                for (i, r) in rows.iter().enumerate() {
                    let c = eig.eigenvectors[(i, j)] / g.sqrt();
                    v.iter_mut().zip(r).for_each(|(a, b)| *a += c * b);
                }
                basis.push(v);
                spectrum.push(g * (1.0 - rho) / nf);
            }
        }
        if !(s_op.is_finite() && ridge.is_finite()) {
            return Err(PlaceError::Numeric("non-finite covariance".into()));
        }
        Ok(Self {
            dim: p,
            rho,
            mu,
            ridge,
            s_op,
            basis,
            spectrum,
        })
    }

    /// `v^T Sigma^{-1} v`.
    pub fn inverse_quad_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(PlaceError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let mut resid = v.to_vec();
        let mut q = 0.0;
        for (b, &s) in self.basis.iter().zip(&self.spectrum) {
            let c = dot(b, v);
            q += c * c / (s + self.ridge);
            resid.iter_mut().zip(b).for_each(|(r, x)| *r -= c * x);
        }
        Ok(q + dot(&resid, &resid) / self.ridge)
    }

    /// Largest eigenvalue of the shrunk matrix.
    pub fn op_norm(&self) -> f64 {
        (1.0 - self.rho) * self.s_op + self.ridge
    }

    /// Dense `p x p` form; intended for small `p`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = self.dim;
        let mut m = DMatrix::identity(p, p) * self.ridge;
        for (b, &s) in self.basis.iter().zip(&self.spectrum) {
            for i in 0..p {
                for j in 0..p {
                    m[(i, j)] += s * b[i] * b[j];
                }
            }
        }
        m
    }
}

fn gram_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let gram_rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| dot(&rows[i], &rows[j])).collect())
        .collect();
    DMatrix::from_fn(n, n, |i, j| gram_rows[i][j])
}

/// Shrunk all-class pooled covariance `(1/k) sum_c Sigma_c`.
///
/// Centered rows are rescaled so that the pooled unbiased covariance equals
/// `(1/n) sum_i y_i y_i^T` over all `n` rows from classes with at least two
/// samples.
pub fn ledoit_wolf_pooled<R: AsRef<[f64]>>(
    x: &[R],
    labels: &[usize],
    stats: &ClassStats,
) -> Result<ShrunkCovariance> {
    let k = stats.n_classes();
    let contributing: usize = stats
        .classes
        .iter()
        .filter(|c| c.count >= 2)
        .map(|c| c.count)
        .sum();
    let floor = 1e-12 * stats.radius.powi(2).max(1.0);
    if contributing == 0 {
        let zero = vec![vec![0.0; stats.dim]];
        return ShrunkCovariance::fit(&zero, floor);
    }
    let n = contributing as f64;
    let rows: Vec<Vec<f64>> = x
        .iter()
        .zip(labels)
        .filter(|(_, &y)| stats.classes[y].count >= 2)
        .map(|(r, &y)| {
            let c = &stats.classes[y];
            let s = (n / (k as f64 * (c.count - 1) as f64)).sqrt();
            r.as_ref()
                .iter()
                .zip(&c.mean)
                .map(|(a, m)| (a - m) * s)
                .collect()
        })
        .collect();
    ShrunkCovariance::fit(&rows, floor)
}

/// `min_{c != c'} sqrt((mu_c - mu_c')^T Sigma^{-1} (mu_c - mu_c'))`.
pub fn mahalanobis_margin(stats: &ClassStats, cov: &ShrunkCovariance) -> Result<f64> {
    let means = stats.means();
    let mut best = f64::INFINITY;
    for a in 0..means.len() {
        for b in (a + 1)..means.len() {
            let diff: Vec<f64> = means[a].iter().zip(means[b]).map(|(x, y)| x - y).collect();
            best = best.min(cov.inverse_quad_form(&diff)?.sqrt());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    Mah,
    DeltaOverR,
    Eta,
}

impl std::str::FromStr for SelectionRule {
    type Err = PlaceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mah" => Ok(Self::Mah),
            "delta_over_r" | "ratio" => Ok(Self::DeltaOverR),
            "eta" => Ok(Self::Eta),
            other => Err(PlaceError::InvalidParameter(format!(
                "unknown selection rule '{other}'"
            ))),
        }
    }
}

/// An embedded corpus for one descriptor.
#[derive(Debug, Clone)]
pub struct DescriptorCorpus {
    pub name: String,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSummary {
    pub name: String,
    pub dim: usize,
    pub delta: f64,
    pub radius: f64,
    pub eta: f64,
    pub delta_over_r: f64,
    pub rho_mah: f64,
    pub rank_mah: usize,
    pub rank_delta_over_r: usize,
    pub rank_eta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub rule: SelectionRule,
    pub chosen: String,
    /// One row per descriptor, in name order.
    pub rows: Vec<DescriptorSummary>,
    pub ranking_mah: Vec<String>,
    pub ranking_delta_over_r: Vec<String>,
    pub ranking_eta: Vec<String>,
}

impl DescriptorSummary {
    pub fn statistic(&self, rule: SelectionRule) -> f64 {
        match rule {
            SelectionRule::Mah => self.rho_mah,
            SelectionRule::DeltaOverR => self.delta_over_r,
            SelectionRule::Eta => self.eta,
        }
    }
}

/// Per-descriptor selection statistics on one corpus.
pub fn summarize_descriptor(c: &DescriptorCorpus, labels: &[usize]) -> Result<DescriptorSummary> {
    let stats = fit_class_stats(&c.rows, labels)?;
    let cov = ledoit_wolf_pooled(&c.rows, labels, &stats)?;
    let rho_mah = mahalanobis_margin(&stats, &cov)?;
    let ratio = if stats.radius > 0.0 {
        stats.delta / stats.radius
    } else {
        0.0
    };
    Ok(DescriptorSummary {
        name: c.name.clone(),
        dim: stats.dim,
        delta: stats.delta,
        radius: stats.radius,
        eta: eta(&stats, stats.dim),
        delta_over_r: ratio,
        rho_mah,
        rank_mah: 0,
        rank_delta_over_r: 0,
        rank_eta: 0,
    })
}

fn ranking(rows: &[DescriptorSummary], rule: SelectionRule) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        rows[b]
            .statistic(rule)
            .total_cmp(&rows[a].statistic(rule))
            .then_with(|| rows[a].name.cmp(&rows[b].name))
    });
    order
}

/// Ranks a descriptor pool under all three statistics and picks the argmax
/// of `rule`; ties go to the lexicographically smaller name.
pub fn select_descriptor(
    pool: &[DescriptorCorpus],
    labels: &[usize],
    rule: SelectionRule,
) -> Result<SelectionReport> {
    if pool.is_empty() {
        return Err(PlaceError::Empty("descriptor pool".into()));
    }
    let mut rows = pool
        .par_iter()
        .map(|c| summarize_descriptor(c, labels))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    let orders = [
        SelectionRule::Mah,
        SelectionRule::DeltaOverR,
        SelectionRule::Eta,
    ]
    .map(|r| ranking(&rows, r));
    for (pos, &i) in orders[0].iter().enumerate() {
        rows[i].rank_mah = pos + 1;
    }
    for (pos, &i) in orders[1].iter().enumerate() {
        rows[i].rank_delta_over_r = pos + 1;
    }
    for (pos, &i) in orders[2].iter().enumerate() {
        rows[i].rank_eta = pos + 1;
    }
    let names = |o: &Vec<usize>| o.iter().map(|&i| rows[i].name.clone()).collect::<Vec<_>>();
    let chosen_idx = match rule {
        SelectionRule::Mah => orders[0][0],
        SelectionRule::DeltaOverR => orders[1][0],
        SelectionRule::Eta => orders[2][0],
    };
    Ok(SelectionReport {
        rule,
        chosen: rows[chosen_idx].name.clone(),
        ranking_mah: names(&orders[0]),
        ranking_delta_over_r: names(&orders[1]),
        ranking_eta: names(&orders[2]),
        rows,
    })
}

/// The rate term of the nearest-centroid risk bound, with the sample-size
/// hypothesis evaluated at confidence `delta = 0.05`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskRate {
    pub rate: f64,
    pub required_m: f64,
    pub hypothesis_holds: bool,
}

pub fn risk_rate(k: usize, r: f64, delta: f64, m_min: usize) -> Result<RiskRate> {
    if !(delta > 0.0) {
        return Err(PlaceError::InvalidParameter(format!(
            "separation must be positive, got {delta}"
        )));
    }
    if m_min == 0 || k < 2 {
        return Err(PlaceError::InvalidParameter(
            "need m_min >= 1 and k >= 2".into(),
        ));
    }
    let rate = 8.0 * (k - 1) as f64 * r / (delta * (m_min as f64).sqrt());
    let required_m = 128.0 * r * r * (4.0 * k as f64 / 0.05).ln() / (delta * delta);
    Ok(RiskRate {
        rate,
        required_m,
        hypothesis_holds: m_min as f64 >= required_m,
    })
}

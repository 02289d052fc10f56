//! Hat coordinates and the multiscale landmark embedding.
//!
//! A diagram `A` maps at scale `R` to the vector of summed hat values
//! `sum_{a in A} max(3R/2 - d_B(p, a), 0)` over the landmarks `p` of the
//! grid at `R`. The multiscale embedding stacks these blocks, scaling block
//! `k` by `w_k * 2^(-3/2)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::{bottleneck, bottleneck_single, DiagramPoint, PersistenceDiagram, Site};
use crate::error::{PlaceError, Result};
use crate::lattice::{build_grid, LandmarkGrid};
use crate::pairs::CrossPairs;

/// Relative slack used when deciding whether `3 R_k <= delta`.
pub const ACTIVE_SLACK: f64 = 1e-12;

/// Headroom factor applied to the largest observed death when choosing `L`.
pub const BOUND_HEADROOM: f64 = 1.05;

/// Scales, weights and bound of a multiscale embedding, with one grid per scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScaleConfigRecord", into = "ScaleConfigRecord")]
pub struct ScaleConfig {
    scales: Vec<f64>,
    weights: Vec<f64>,
    bound: f64,
    grids: Vec<LandmarkGrid>,
    total_dim: usize,
}

/// Serialized form of a [`ScaleConfig`]; grids are rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleConfigRecord {
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub bound: f64,
    pub total_dim: usize,
}

impl From<ScaleConfig> for ScaleConfigRecord {
    fn from(c: ScaleConfig) -> Self {
        Self {
            scales: c.scales,
            weights: c.weights,
            bound: c.bound,
            total_dim: c.total_dim,
        }
    }
}

impl TryFrom<ScaleConfigRecord> for ScaleConfig {
    type Error = PlaceError;

    fn try_from(r: ScaleConfigRecord) -> Result<Self> {
        let c = ScaleConfig::new(r.scales, r.weights, r.bound)?;
        if c.total_dim != r.total_dim {
            return Err(PlaceError::DimensionMismatch {
                expected: r.total_dim,
                got: c.total_dim,
            });
        }
        Ok(c)
    }
}

fn check_scales(scales: &[f64], bound: f64) -> Result<()> {
    if scales.is_empty() {
        return Err(PlaceError::InvalidParameter(
            "need at least one scale".into(),
        ));
    }
    if !bound.is_finite() || bound <= 0.0 {
        return Err(PlaceError::InvalidParameter(format!(
            "bound L must be positive, got {bound}"
        )));
    }
    if scales[0] <= 0.0 || !scales.iter().all(|r| r.is_finite()) {
        return Err(PlaceError::InvalidParameter(
            "scales must be positive and finite".into(),
        ));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PlaceError::InvalidParameter(
            "scales must be strictly increasing".into(),
        ));
    }
    let top = scales[scales.len() - 1];
    if top > bound {
        return Err(PlaceError::InvalidParameter(format!(
            "largest scale {top} exceeds L = {bound}"
        )));
    }
    Ok(())
}

impl ScaleConfig {
    pub fn new(scales: Vec<f64>, weights: Vec<f64>, bound: f64) -> Result<Self> {
        check_scales(&scales, bound)?;
        if weights.len() != scales.len() {
            return Err(PlaceError::DimensionMismatch {
                expected: scales.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PlaceError::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sq: f64 = weights.iter().map(|w| w * w).sum();
        if (sq - 1.0).abs() > 1e-12 {
            return Err(PlaceError::InvalidParameter(format!(
                "squared weights sum to {sq}, not 1"
            )));
        }
        let grids = scales
            .iter()
            .map(|&r| build_grid(r, bound))
            .collect::<Result<Vec<_>>>()?;
        let total_dim = grids.iter().map(LandmarkGrid::len).sum();
        Ok(Self {
            scales,
            weights,
            bound,
            grids,
            total_dim,
        })
    }

    /// Scales with [`closed_form_weights`].
    pub fn with_closed_form(scales: Vec<f64>, bound: f64) -> Result<Self> {
        let weights = closed_form_weights(&scales, bound)?;
        Self::new(scales, weights, bound)
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn grids(&self) -> &[LandmarkGrid] {
        &self.grids
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    /// Total embedding dimension, summed over grids including each `*`.
    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn record(&self) -> ScaleConfigRecord {
        self.clone().into()
    }

    /// Indices `k` with `3 R_k <= delta` (up to [`ACTIVE_SLACK`]).
    pub fn active_scales(&self, delta: f64) -> impl Iterator<Item = usize> + '_ {
        let cut = delta + ACTIVE_SLACK * delta.abs().max(1.0);
        self.scales
            .iter()
            .enumerate()
            .filter(move |(_, &r)| 3.0 * r <= cut)
            .map(|(k, _)| k)
    }
}

/// An embedded diagram, stored block by block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedVector {
    pub blocks: Vec<Vec<f64>>,
    pub total_dim: usize,
}

impl EmbeddedVector {
    pub fn zeros(cfg: &ScaleConfig) -> Self {
        let blocks = cfg.grids.iter().map(|g| vec![0.0; g.len()]).collect();
        Self {
            blocks,
            total_dim: cfg.total_dim,
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.concat()
    }

    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &EmbeddedVector) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .zip(other.blocks.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().flatten().filter(|v| **v != 0.0).count()
    }
}

/// `max(3R/2 - d_B(p, x), 0)`.
pub fn hat(r: f64, p: Site, x: &DiagramPoint) -> f64 {
    (1.5 * r - bottleneck_single(p, Site::Point(*x))).max(0.0)
}

/// Unweighted single-scale embedding against `g`.
pub fn embed_single_scale(a: &PersistenceDiagram, g: &LandmarkGrid) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    let reach = 1.5 * g.scale;
    for x in &a.points {
        g.for_each_active(x, |idx, dist| out[idx] += reach - dist);
    }
    out
}

/// Multiscale embedding.
///
/// Points beyond the bound `L` are not an error: they pick up whatever hats
/// still reach them (at least the `*` hat when their persistence is small),
/// which is what happens to held-out diagrams embedded with a bound fitted
/// on training data.
pub fn embed(a: &PersistenceDiagram, cfg: &ScaleConfig) -> EmbeddedVector {
    let coef = 2f64.powf(-1.5);
    let blocks = cfg
        .grids
        .iter()
        .zip(&cfg.weights)
        .map(|(g, &w)| {
            let mut block = embed_single_scale(a, g);
            let s = w * coef;
            block.iter_mut().for_each(|v| *v *= s);
            block
        })
        .collect();
    EmbeddedVector {
        blocks,
        total_dim: cfg.total_dim,
    }
}

/// Like [`embed`], but rejects a non-empty diagram none of whose points lies
/// in the region `0 <= b < d <= L`: such a diagram embeds to (almost) pure
/// `*` mass and usually means the bound was fitted to the wrong data.
pub fn embed_checked(a: &PersistenceDiagram, cfg: &ScaleConfig) -> Result<EmbeddedVector> {
    let l = cfg.bound;
    if let Some(p) = a.points.first() {
        if a.points.iter().all(|p| p.death > l) {
            return Err(PlaceError::OutsideRegion {
                birth: p.birth,
                death: p.death,
                bound: l,
            });
        }
    }
    Ok(embed(a, cfg))
}

/// Embedding of `a` padded with diagonal markers to exactly `n_max` points.
///
/// Each marker sits at the peak of the `*` hat, so padding adds
/// `(n_max - |A|) * 3R_k/2` (times the block prefactor) to every `*`
/// coordinate and nothing elsewhere. This is the form in which the
/// `n_max * d_B` stability bound holds for diagrams of different sizes.
pub fn embed_padded(
    a: &PersistenceDiagram,
    cfg: &ScaleConfig,
    n_max: usize,
) -> Result<EmbeddedVector> {
    if a.len() > n_max {
        return Err(PlaceError::InvalidParameter(format!(
            "diagram has {} points, more than n_max = {n_max}",
            a.len()
        )));
    }
    let mut e = embed(a, cfg);
    let pad = (n_max - a.len()) as f64;
    let coef = 2f64.powf(-1.5);
    for ((block, g), &w) in e.blocks.iter_mut().zip(&cfg.grids).zip(&cfg.weights) {
        let star = g.diagonal_index();
        block[star] += w * coef * pad * 1.5 * g.scale;
    }
    Ok(e)
}

/// Embeds a corpus in parallel, preserving order.
pub fn embed_corpus(diagrams: &[PersistenceDiagram], cfg: &ScaleConfig) -> Vec<EmbeddedVector> {
    diagrams.par_iter().map(|d| embed(d, cfg)).collect()
}

/// Weights saturating every ratio in the slope of the affine certificate:
/// `w_k^2 ∝ (d_{k+1}^2 - d_k^2) / R_k^2`, `d_i = R_i - R_1`, `d_{N+1} = L - R_1`.
pub fn closed_form_weights(scales: &[f64], bound: f64) -> Result<Vec<f64>> {
    check_scales(scales, bound)?;
    let n = scales.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let r1 = scales[0];
    let d: Vec<f64> = scales
        .iter()
        .map(|r| r - r1)
        .chain(std::iter::once(bound - r1))
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|k| (d[k + 1] * d[k + 1] - d[k] * d[k]) / (scales[k] * scales[k]))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|u| (u / total).sqrt()).collect())
}

/// The ratios `sqrt(sum_{k<i} w_k^2 R_k^2) / (R_i - R_1)` for `i = 2..N`,
/// followed by the full-sum ratio against `L - R_1` (omitted when `L = R_1`).
pub fn lambda_ratios(cfg: &ScaleConfig) -> Vec<f64> {
    let r1 = cfg.scales[0];
    let mut acc = 0.0_f64;
    let mut out = Vec::with_capacity(cfg.scales.len());
    for (k, (&r, &w)) in cfg.scales.iter().zip(&cfg.weights).enumerate() {
        if k > 0 {
            out.push(acc.sqrt() / (r - r1));
        }
        acc += w * w * r * r;
    }
    if cfg.bound > r1 {
        out.push(acc.sqrt() / (cfg.bound - r1));
    }
    out
}

/// Slope of the affine lower distortion certificate.
pub fn lambda_slope(cfg: &ScaleConfig) -> f64 {
    lambda_ratios(cfg).into_iter().fold(f64::INFINITY, f64::min) / 48.0
}

/// `(1/16) sqrt(sum over active k of w_k^2 R_k^2)`, active meaning `3 R_k <= delta`.
pub fn step_floor(cfg: &ScaleConfig, delta: f64) -> f64 {
    let s: f64 = cfg
        .active_scales(delta)
        .map(|k| (cfg.weights[k] * cfg.scales[k]).powi(2))
        .sum();
    s.sqrt() / 16.0
}

/// Median with the mean-of-middle-pair convention for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Median half-persistence over every point of every diagram.
pub fn tau_proxy(diagrams: &[PersistenceDiagram]) -> Result<f64> {
    let mut half: Vec<f64> = diagrams
        .iter()
        .flat_map(|d| d.points.iter().map(DiagramPoint::diag_cost))
        .collect();
    median(&mut half)
        .ok_or_else(|| PlaceError::Empty("no diagram points to estimate a scale from".into()))
}

/// Median bottleneck distance over `n_pairs` seeded cross-class pairs
/// (every pair when fewer exist).
pub fn tau_crossing(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    if diagrams.len() != labels.len() {
        return Err(PlaceError::DimensionMismatch {
            expected: diagrams.len(),
            got: labels.len(),
        });
    }
    if n_pairs == 0 {
        return Err(PlaceError::InvalidParameter(
            "need at least one pair".into(),
        ));
    }
    let pairs = CrossPairs::new(labels)?.sample(n_pairs, seed);
    let mut dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| bottleneck(&diagrams[i], &diagrams[j]))
        .collect();
    median(&mut dists).ok_or_else(|| PlaceError::Empty("no cross-class pairs".into()))
}

/// `L` for a pool: the largest death times [`BOUND_HEADROOM`].
pub fn auto_bound(diagrams: &[PersistenceDiagram]) -> Result<f64> {
    diagrams
        .iter()
        .filter_map(PersistenceDiagram::max_death)
        .reduce(f64::max)
        .map(|d| d * BOUND_HEADROOM)
        .ok_or_else(|| PlaceError::Empty("no diagram points to size the bound from".into()))
}

/// Geometric ladder `R_k = tau * 2^(k - ceil(N/2))`, `k = 1..N`, rescaled when
/// needed so that `R_N <= L/4` (the largest scale at which a lattice site
/// fits), with closed-form weights.
pub fn make_scale_config(tau_star: f64, n: usize, bound: f64) -> Result<ScaleConfig> {
    if n == 0 {
        return Err(PlaceError::InvalidParameter(
            "need at least one scale".into(),
        ));
    }
    if !(tau_star.is_finite() && tau_star > 0.0) {
        return Err(PlaceError::InvalidParameter(format!(
            "scale center must be positive, got {tau_star}"
        )));
    }
    if tau_star >= bound {
        return Err(PlaceError::InvalidParameter(format!(
            "scale center {tau_star} must lie below L = {bound}"
        )));
    }
    let mid = n.div_ceil(2) as i32;
    let mut scales: Vec<f64> = (1..=n as i32)
        .map(|k| tau_star * 2f64.powi(k - mid))
        .collect();
    let top = scales[n - 1];
    let cap = bound / 4.0;
    if top > cap {
        let s = cap / top;
        scales.iter_mut().for_each(|r| *r *= s);
    }
    ScaleConfig::with_closed_form(scales, bound)
}

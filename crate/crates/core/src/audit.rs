//! Empirical checks of the distortion certificates: per-scale coherence,
//! the step-floor bound on sampled cross-class pairs, and the bridge from
//! diagram separation to class-mean separation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::{bottleneck, PersistenceDiagram};
use crate::embedding::{
    embed_corpus, embed_single_scale, lambda_slope, step_floor, EmbeddedVector, ScaleConfig,
};
use crate::error::{PlaceError, Result};
use crate::pairs::CrossPairs;
use crate::stats::ClassStats;

const FLOOR_SLACK: f64 = 1e-12;

/// Candidate pairs drawn per requested qualifying pair before giving up.
const OVERSAMPLE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCheck {
    pub scale: f64,
    pub active: bool,
    /// Squared norm of the unweighted single-scale block difference.
    pub block_sq: f64,
    /// `R^2 / 32`.
    pub floor: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub bottleneck: f64,
    /// At least one scale satisfies `3 R_k <= d_B`.
    pub qualifying: bool,
    /// Every active scale passes; false for non-qualifying pairs.
    pub coherent: bool,
    pub scales: Vec<ScaleCheck>,
}

fn coherence_at(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    cfg: &ScaleConfig,
    d: f64,
) -> Coherence {
    let active: Vec<usize> = cfg.active_scales(d).collect();
    let scales: Vec<ScaleCheck> = cfg
        .grids()
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let r = g.scale;
            let floor = r * r / 32.0;
            if !active.contains(&k) {
                return ScaleCheck {
                    scale: r,
                    active: false,
                    block_sq: 0.0,
                    floor,
                    pass: true,
                };
            }
            let (ea, eb) = (embed_single_scale(a, g), embed_single_scale(b, g));
            let block_sq: f64 = ea.iter().zip(&eb).map(|(x, y)| (x - y) * (x - y)).sum();
            ScaleCheck {
                scale: r,
                active: true,
                block_sq,
                floor,
                pass: block_sq >= floor * (1.0 - FLOOR_SLACK),
            }
        })
        .collect();
    let qualifying = !active.is_empty();
    Coherence {
        bottleneck: d,
        qualifying,
        coherent: qualifying && scales.iter().all(|s| s.pass),
        scales,
    }
}

/// Per-scale block floor `|Phi_{R_k}(A) - Phi_{R_k}(B)|^2 >= R_k^2 / 32` at
/// every active scale, on unweighted blocks.
pub fn is_nu_coherent(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    cfg: &ScaleConfig,
) -> Coherence {
    coherence_at(a, b, cfg, bottleneck(a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub seed: u64,
    /// Cross-class pairs examined.
    pub n_pairs_sampled: usize,
    /// Examined pairs with `d_B >= 3 R_1`.
    pub n_qualifying: usize,
    pub coherent_fraction: f64,
    /// Fraction of qualifying pairs with `|Phi(A) - Phi(B)| >= step_floor(d_B)`.
    pub bound_fraction: f64,
    pub ratio_min: f64,
    pub ratio_p25: f64,
    pub ratio_p50: f64,
    pub ratio_p75: f64,
    /// Coherent pairs that nevertheless fall below the step floor.
    pub coherent_violations: usize,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

struct PairOutcome {
    coherent: bool,
    ratio: f64,
}

fn evaluate_pair(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    ea: &EmbeddedVector,
    eb: &EmbeddedVector,
    cfg: &ScaleConfig,
) -> Option<PairOutcome> {
    let d = bottleneck(a, b);
    let c = coherence_at(a, b, cfg, d);
    if !c.qualifying {
        return None;
    }
    let floor = step_floor(cfg, d);
    Some(PairOutcome {
        coherent: c.coherent,
        ratio: ea.distance(eb) / floor,
    })
}

/// Walks cross-class pairs in seeded uniform order (without replacement)
/// until `n_pairs` qualifying pairs are found or the candidates run out,
/// and reports coherence and step-floor statistics over those pairs.
pub fn audit_pairs(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    cfg: &ScaleConfig,
    n_pairs: usize,
    seed: u64,
) -> Result<AuditReport> {
    if diagrams.len() != labels.len() {
        return Err(PlaceError::DimensionMismatch {
            expected: diagrams.len(),
            got: labels.len(),
        });
    }
    let cp = CrossPairs::new(labels)?;
    let candidates = cp.sample(n_pairs.saturating_mul(OVERSAMPLE), seed);
    let emb = embed_corpus(diagrams, cfg);
    let mut outcomes = Vec::with_capacity(n_pairs);
    let mut examined = 0;
    let chunk = n_pairs.max(64);
    for block in candidates.chunks(chunk) {
        let results: Vec<Option<PairOutcome>> = block
            .par_iter()
            .map(|&(i, j)| evaluate_pair(&diagrams[i], &diagrams[j], &emb[i], &emb[j], cfg))
            .collect();
        for r in results {
            if outcomes.len() == n_pairs {
                break;
            }
            examined += 1;
            if let Some(o) = r {
                outcomes.push(o);
            }
        }
        if outcomes.len() == n_pairs {
            break;
        }
    }
    let q = outcomes.len();
    let frac = |n: usize| if q == 0 { 0.0 } else { n as f64 / q as f64 };
    let holds = |o: &PairOutcome| o.ratio >= 1.0 - FLOOR_SLACK;
    let mut ratios: Vec<f64> = outcomes.iter().map(|o| o.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    Ok(AuditReport {
        seed,
        n_pairs_sampled: examined,
        n_qualifying: q,
        coherent_fraction: frac(outcomes.iter().filter(|o| o.coherent).count()),
        bound_fraction: frac(outcomes.iter().filter(|o| holds(o)).count()),
        ratio_min: ratios.first().copied().unwrap_or(f64::NAN),
        ratio_p25: percentile(&ratios, 0.25),
        ratio_p50: percentile(&ratios, 0.50),
        ratio_p75: percentile(&ratios, 0.75),
        coherent_violations: outcomes.iter().filter(|o| o.coherent && !holds(o)).count(),
    })
}

/// Coherence audit; shares its pair sample with [`audit_certificate_bound`]
/// for equal seeds.
pub fn audit_coherence(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    cfg: &ScaleConfig,
    n_pairs: usize,
    seed: u64,
) -> Result<AuditReport> {
    audit_pairs(diagrams, labels, cfg, n_pairs, seed)
}

/// Step-floor audit over the weighted embedding.
pub fn audit_certificate_bound(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    cfg: &ScaleConfig,
    n_pairs: usize,
    seed: u64,
) -> Result<AuditReport> {
    audit_pairs(diagrams, labels, cfg, n_pairs, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    /// Smallest sampled cross-class bottleneck distance; an upper bound on
    /// the true support separation.
    pub delta_star: f64,
    pub lambda: f64,
    pub max_within_radius: f64,
    /// `lambda (delta_star - R_1) - 2 max_c D_c`.
    pub affine_bound: f64,
    /// `step_floor(delta_star) - 2 max_c D_c`.
    pub step_bound: f64,
    pub delta: f64,
    pub respects_affine: bool,
    pub respects_step: bool,
}

/// Lower bounds on class-mean separation implied by diagram separation.
pub fn lambda_bridge(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    cfg: &ScaleConfig,
    stats: &ClassStats,
    n_pairs: usize,
    seed: u64,
) -> Result<BridgeReport> {
    if diagrams.len() != labels.len() {
        return Err(PlaceError::DimensionMismatch {
            expected: diagrams.len(),
            got: labels.len(),
        });
    }
    let pairs = CrossPairs::new(labels)?.sample(n_pairs, seed);
    let delta_star = pairs
        .par_iter()
        .map(|&(i, j)| bottleneck(&diagrams[i], &diagrams[j]))
        .reduce(|| f64::INFINITY, f64::min);
    Ok(bridge_from(delta_star, cfg, stats))
}

/// Bridge bounds for a given separation `delta_star`.
pub fn bridge_from(delta_star: f64, cfg: &ScaleConfig, stats: &ClassStats) -> BridgeReport {
    let lambda = lambda_slope(cfg);
    let max_d = stats.within_radius.iter().copied().fold(0.0, f64::max);
    let affine_bound = lambda * (delta_star - cfg.scales()[0]) - 2.0 * max_d;
    let step_bound = step_floor(cfg, delta_star) - 2.0 * max_d;
    BridgeReport {
        delta_star,
        lambda,
        max_within_radius: max_d,
        affine_bound,
        step_bound,
        delta: stats.delta,
        respects_affine: stats.delta >= affine_bound,
        respects_step: stats.delta >= step_bound,
    }
}

//! Nearest-centroid prediction and the three certificate radii.
//!
//! A radius `r` bounds `max_c |mu_hat_c - mu_c|` with probability at least
//! `1 - alpha`; when `r < Delta/2` the empirical and population
//! nearest-centroid rules agree away from the population decision
//! boundaries.

use serde::{Deserialize, Serialize};

use crate::chi2::chi2_quantile;
use crate::error::{PlaceError, Result};
use crate::stats::{dist, ClassStats};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Nearest centroid; ties go to the smaller label.
pub fn nc_predict(x: &[f64], stats: &ClassStats) -> Result<usize> {
    if x.len() != stats.dim {
        return Err(PlaceError::DimensionMismatch {
            expected: stats.dim,
            got: x.len(),
        });
    }
    let mut best = (0, f64::INFINITY);
    for (c, m) in stats.classes.iter().enumerate() {
        let d = dist(x, &m.mean);
        if d < best.1 {
            best = (c, d);
        }
    }
    Ok(best.0)
}

fn log_term(k: usize, alpha: f64) -> f64 {
    (2.0 * k as f64 / alpha).ln()
}

/// Bounded-vector (Hoeffding-type) radius `2R sqrt(2 log(2k/alpha) / m)`.
pub fn radius_pinelis(r: f64, m_min: usize, k: usize, alpha: f64) -> f64 {
    2.0 * r * (2.0 * log_term(k, alpha) / m_min as f64).sqrt()
}

/// Variance-aware radius `sqrt(2 tr(Sigma_c) log(2k/alpha) / m_c)`.
pub fn radius_bernstein(trace: f64, m_c: usize, k: usize, alpha: f64) -> f64 {
    (2.0 * trace.max(0.0) * log_term(k, alpha) / m_c as f64).sqrt()
}

/// Gaussian plug-in radius `sqrt(|Sigma_c|_op chi^2_{dim, 1 - alpha/k} / m_c)`.
pub fn radius_gaussian(op_norm: f64, m_c: usize, dim: usize, k: usize, alpha: f64) -> Result<f64> {
    let q = chi2_quantile(dim, 1.0 - alpha / k as f64)?;
    Ok((op_norm.max(0.0) * q / m_c as f64).sqrt())
}

/// Sample sizes at which each radius drops below `Delta_c / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub pinelis: u64,
    pub bernstein: u64,
    pub gaussian: u64,
}

/// Thresholds from explicit statistics: radius bound `r`, covariance
/// operator norm, class gap `delta_c` and embedding dimension.
pub fn thresholds_from(
    r: f64,
    op_norm: f64,
    delta_c: f64,
    dim: usize,
    k: usize,
    alpha: f64,
) -> Result<Thresholds> {
    if !(delta_c > 0.0) {
        return Err(PlaceError::InvalidParameter(format!(
            "class gap must be positive, got {delta_c}"
        )));
    }
    let lg = log_term(k, alpha);
    let d2 = delta_c * delta_c;
    let q = chi2_quantile(dim, 1.0 - alpha / k as f64)?;
    Ok(Thresholds {
        pinelis: (32.0 * r * r * lg / d2).ceil() as u64,
        bernstein: (8.0 * op_norm * lg / d2).ceil() as u64,
        gaussian: (4.0 * op_norm * q / d2).ceil() as u64,
    })
}

/// Per-class thresholds using the fitted radius, each class's operator norm
/// and its own gap.
pub fn sample_thresholds(stats: &ClassStats, alpha: f64) -> Result<Vec<Thresholds>> {
    let k = stats.n_classes();
    stats
        .classes
        .iter()
        .zip(&stats.delta_c)
        .map(|(c, &dc)| thresholds_from(stats.radius, c.op_norm, dc, stats.dim, k, alpha))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCertificate {
    pub count: usize,
    pub delta_c: f64,
    pub trace: f64,
    pub op_norm: f64,
    /// `tr / op`; absent when the covariance vanishes.
    pub stable_rank: Option<f64>,
    pub radius_bernstein: f64,
    /// The Bernstein radius exceeds `tr / R`, outside the small-deviation
    /// regime covered by the bound.
    pub bernstein_out_of_regime: bool,
    pub thresholds: Option<Thresholds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub alpha: f64,
    pub n_classes: usize,
    pub dim: usize,
    pub m_min: usize,
    pub delta: f64,
    pub radius: f64,
    pub radius_pinelis: f64,
    /// Largest per-class Bernstein radius.
    pub radius_bernstein: f64,
    pub radius_gaussian: f64,
    pub fire_pinelis: bool,
    pub fire_bernstein: bool,
    pub fire_gaussian: bool,
    pub classes: Vec<ClassCertificate>,
}

/// Evaluates every radius and verdict for one fit.
///
/// Pinelis and Gaussian compare with `Delta/2`; the Bernstein verdict needs
/// `r_c < Delta_c / 2` for every class.
pub fn certify(stats: &ClassStats, alpha: f64) -> Result<CertificateReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(PlaceError::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let k = stats.n_classes();
    if k < 2 {
        return Err(PlaceError::TooFewClasses { needed: 2, got: k });
    }
    let m_min = stats.m_min();
    let r_pin = radius_pinelis(stats.radius, m_min, k, alpha);
    let q = chi2_quantile(stats.dim.max(1), 1.0 - alpha / k as f64)?;
    let mut classes = Vec::with_capacity(k);
    let mut r_g: f64 = 0.0;
    let mut r_vp: f64 = 0.0;
    let mut fire_vp = true;
    for (c, &dc) in stats.classes.iter().zip(&stats.delta_c) {
        let rb = radius_bernstein(c.trace, c.count, k, alpha);
        r_vp = r_vp.max(rb);
        fire_vp &= rb < 0.5 * dc;
        r_g = r_g.max((c.op_norm.max(0.0) * q / c.count as f64).sqrt());
        let regime_edge = if stats.radius > 0.0 {
            c.trace / stats.radius
        } else {
            0.0
        };
        classes.push(ClassCertificate {
            count: c.count,
            delta_c: dc,
            trace: c.trace,
            op_norm: c.op_norm,
            stable_rank: (c.op_norm > 0.0).then(|| c.trace / c.op_norm),
            radius_bernstein: rb,
            bernstein_out_of_regime: rb > regime_edge,
            thresholds: thresholds_from(stats.radius, c.op_norm, dc, stats.dim.max(1), k, alpha)
                .ok(),
        });
    }
    let half = 0.5 * stats.delta;
    Ok(CertificateReport {
        alpha,
        n_classes: k,
        dim: stats.dim,
        m_min,
        delta: stats.delta,
        radius: stats.radius,
        radius_pinelis: r_pin,
        radius_bernstein: r_vp,
        radius_gaussian: r_g,
        fire_pinelis: r_pin < half,
        fire_bernstein: fire_vp,
        fire_gaussian: r_g < half,
        classes,
    })
}

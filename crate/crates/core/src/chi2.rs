//! Chi-squared quantiles by bisection on the regularized lower incomplete
//! gamma function.

use statrs::function::erf::erf_inv;
use statrs::function::gamma::gamma_lr;

use crate::error::{PlaceError, Result};

const ABS_TOL: f64 = 1e-8;

/// `P(X <= x)` for `X ~ chi^2_dof`.
pub fn chi2_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(dof as f64 / 2.0, x / 2.0)
    }
}

/// Wilson-Hilferty approximation, used only to seed the bracket.
fn wilson_hilferty(dof: f64, p: f64) -> f64 {
    let z = std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0);
    let c = 2.0 / (9.0 * dof);
    (dof * (1.0 - c + z * c.sqrt()).powi(3)).max(0.0)
}

/// The `p`-quantile of `chi^2_dof`, to absolute tolerance `1e-8`.
pub fn chi2_quantile(dof: usize, p: f64) -> Result<f64> {
    if dof == 0 {
        return Err(PlaceError::InvalidParameter(
            "chi-squared needs dof >= 1".into(),
        ));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(PlaceError::InvalidParameter(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    let guess = wilson_hilferty(dof as f64, p).max(1e-3);
    let (mut lo, mut hi) = (0.5 * guess, 2.0 * guess);
    while chi2_cdf(dof, lo) > p {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            lo = 0.0;
            break;
        }
    }
    while chi2_cdf(dof, hi) < p {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(PlaceError::Numeric(format!(
                "no chi-squared bracket for dof {dof}, p {p}"
            )));
        }
    }
    while hi - lo > ABS_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_cdf(dof, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

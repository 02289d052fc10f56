//! Landmark grids in the birth-death half-plane.
//!
//! At scale `R` the lattice sites are `(mR, nR)` with `m` odd, `n` even,
//! `n >= 4` and `n >= m + 3`, restricted to `[0, L]^2`. The diagonal marker
//! `*` is always adjoined as the last landmark.
//!
//! Every lattice site has diagonal cost at least `3R/2`, so its open
//! `3R/2`-ball in the single-point bottleneck metric coincides with its open
//! `l_inf` ball. That makes the landmarks touching a point computable by index
//! arithmetic instead of a scan.

use serde::{Deserialize, Serialize};

use crate::diagram::{bottleneck_single, d_inf, DiagramPoint, Site};
use crate::error::{PlaceError, Result};

/// A lattice site with its integer indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub m: u32,
    pub n: u32,
    pub point: DiagramPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkGrid {
    pub scale: f64,
    pub bound: f64,
    /// Lattice sites sorted by `(m, n)`; `*` is implicit at index `landmarks.len()`.
    pub landmarks: Vec<Landmark>,
    pub has_diagonal: bool,
    /// Index of the first site with odd index `m = 2i + 1`.
    column_start: Vec<usize>,
    n_top: u32,
}

fn fits(k: u32, r: f64, l: f64) -> bool {
    k as f64 * r <= l * (1.0 + 1e-12)
}

pub fn build_grid(r: f64, l: f64) -> Result<LandmarkGrid> {
    if !(r.is_finite() && l.is_finite()) || r <= 0.0 || r > l {
        return Err(PlaceError::InvalidParameter(format!(
            "grid needs 0 < R <= L, got R = {r}, L = {l}"
        )));
    }
    let mut n_top = 0u32;
    while fits(n_top + 2, r, l) {
        n_top += 2;
    }
    let mut landmarks = Vec::new();
    let mut column_start = Vec::new();
    let mut m = 1u32;
    while m + 3 <= n_top && fits(m, r, l) {
        column_start.push(landmarks.len());
        let mut n = m + 3;
        while n <= n_top {
            let point = DiagramPoint {
                birth: m as f64 * r,
                death: n as f64 * r,
            };
            landmarks.push(Landmark { m, n, point });
            n += 2;
        }
        m += 2;
    }
    Ok(LandmarkGrid {
        scale: r,
        bound: l,
        landmarks,
        has_diagonal: true,
        column_start,
        n_top,
    })
}

impl Landmark {
    /// Single-point bottleneck distance to `x`, with the landmark's own
    /// diagonal cost taken from its indices so that `n - m = 3` lands exactly
    /// on `3R/2`.
    pub fn distance(&self, r: f64, x: &DiagramPoint) -> f64 {
        let own = (self.n - self.m) as f64 * r / 2.0;
        d_inf(&self.point, x).min(own.max(x.diag_cost()))
    }
}

impl LandmarkGrid {
    /// Number of landmarks including `*`.
    pub fn len(&self) -> usize {
        self.landmarks.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn diagonal_index(&self) -> usize {
        self.landmarks.len()
    }

    pub fn site(&self, idx: usize) -> Site {
        match self.landmarks.get(idx) {
            Some(lm) => Site::Point(lm.point),
            None => Site::Diagonal,
        }
    }

    fn index_of(&self, m: u32, n: u32) -> Option<usize> {
        let col = (m as usize - 1) / 2;
        let start = *self.column_start.get(col)?;
        if n < m + 3 || n > self.n_top {
            return None;
        }
        Some(start + ((n - m - 3) / 2) as usize)
    }

    /// Calls `f(index, d_B)` for every landmark whose open `3R/2` ball holds `x`.
    pub fn for_each_active(&self, x: &DiagramPoint, mut f: impl FnMut(usize, f64)) {
        let r = self.scale;
        let reach = 1.5 * r;
        let (bs, ds) = (x.birth / r, x.death / r);
        let m_lo = ((bs - 1.5).floor().max(0.0)) as u32;
        let m_hi = (bs + 1.5).ceil().max(0.0) as u32;
        let n_lo = ((ds - 1.5).floor().max(0.0)) as u32;
        let n_hi = (ds + 1.5).ceil().max(0.0) as u32;
        for m in (m_lo..=m_hi).filter(|m| m % 2 == 1) {
            for n in (n_lo..=n_hi).filter(|n| n % 2 == 0) {
                if let Some(idx) = self.index_of(m, n) {
                    let dist = d_inf(&self.landmarks[idx].point, x);
                    if dist < reach {
                        f(idx, dist);
                    }
                }
            }
        }
        let diag = x.diag_cost();
        if diag < reach {
            f(self.diagonal_index(), diag);
        }
    }
}

/// Number of landmarks of `g` (including `*`) whose bottleneck ball of
/// radius `3R/2` contains `x`.
///
/// Balls are open: a point at distance exactly `3R/2` sits on the zero level
/// of the hat and is not counted.
pub fn cover_multiplicity(g: &LandmarkGrid, x: &DiagramPoint) -> Result<usize> {
    if x.birth < 0.0 || x.death <= x.birth || x.death > g.bound {
        return Err(PlaceError::OutsideRegion {
            birth: x.birth,
            death: x.death,
            bound: g.bound,
        });
    }
    let reach = 1.5 * g.scale;
    let lattice = g
        .landmarks
        .iter()
        .filter(|lm| lm.distance(g.scale, x) < reach)
        .count();
    let diag = usize::from(bottleneck_single(Site::Diagonal, Site::Point(*x)) < reach);
    Ok(lattice + diag)
}

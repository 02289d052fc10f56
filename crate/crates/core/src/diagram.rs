//! Persistence diagrams, the exact bottleneck distance and the top-N
//! persistence filter.
//!
//! Diagrams are finite multisets of `(birth, death)` points with
//! `death > birth >= 0`. Multiplicity is carried by repetition in the point
//! list. The formal diagonal point `*` never appears inside a diagram; it is
//! represented by [`Site::Diagonal`] wherever a single-point comparison needs
//! it, and implicitly by the diagonal copies used in bottleneck matching.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{PlaceError, Result};

/// A single off-diagonal point of a persistence diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64) -> Result<Self> {
        if !(birth.is_finite() && death.is_finite()) || birth < 0.0 || death <= birth {
            return Err(PlaceError::InvalidPoint { birth, death });
        }
        Ok(Self { birth, death })
    }

    /// `death - birth`.
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    /// Matching cost to the diagonal, `(death - birth) / 2`.
    pub fn diag_cost(&self) -> f64 {
        0.5 * (self.death - self.birth)
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.birth
            .total_cmp(&other.birth)
            .then(self.death.total_cmp(&other.death))
    }
}

impl Serialize for DiagramPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.birth, self.death].serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiagramPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [b, dd] = <[f64; 2]>::deserialize(d)?;
        DiagramPoint::new(b, dd).map_err(serde::de::Error::custom)
    }
}

/// A point of the single-point diagram space: either an ordinary point or the
/// formal diagonal `*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Site {
    Point(DiagramPoint),
    Diagonal,
}

impl Site {
    fn diag_cost(&self) -> f64 {
        match self {
            Site::Point(p) => p.diag_cost(),
            Site::Diagonal => 0.0,
        }
    }
}

impl From<DiagramPoint> for Site {
    fn from(p: DiagramPoint) -> Self {
        Site::Point(p)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub points: Vec<DiagramPoint>,
    #[serde(rename = "dim", default, skip_serializing_if = "Option::is_none")]
    pub homology_dim: Option<u8>,
}

impl PersistenceDiagram {
    pub fn new(points: Vec<DiagramPoint>) -> Self {
        Self {
            points,
            homology_dim: None,
        }
    }

    pub fn with_dim(points: Vec<DiagramPoint>, dim: u8) -> Self {
        Self {
            points,
            homology_dim: Some(dim),
        }
    }

    /// Builds a diagram from raw pairs, validating each point.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let points = pairs
            .iter()
            .map(|&(b, d)| DiagramPoint::new(b, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(points))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_death(&self) -> Option<f64> {
        self.points.iter().map(|p| p.death).reduce(f64::max)
    }

    /// Multiset union.
    pub fn union(&self, other: &PersistenceDiagram) -> PersistenceDiagram {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        PersistenceDiagram::new(points)
    }
}

pub fn persistence(p: &DiagramPoint) -> f64 {
    p.persistence()
}

/// Keeps the `n_max` most persistent points.
///
/// Ties in persistence are broken by `(birth, death)` in ascending order, so
/// the output is deterministic. A diagram already within the cap is returned
/// unchanged.
pub fn filter_top_n(d: &PersistenceDiagram, n_max: usize) -> Result<PersistenceDiagram> {
    if n_max == 0 {
        return Err(PlaceError::InvalidParameter("N_max must be >= 1".into()));
    }
    if d.points.len() <= n_max {
        return Ok(d.clone());
    }
    let mut points = d.points.clone();
    points.sort_by(|a, b| {
        b.persistence()
            .total_cmp(&a.persistence())
            .then_with(|| a.lex_cmp(b))
    });
    points.truncate(n_max);
    Ok(PersistenceDiagram {
        points,
        homology_dim: d.homology_dim,
    })
}

/// The l-infinity ground metric between two points.
pub fn d_inf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// Bottleneck distance between single-point diagrams (either may be `*`).
pub fn bottleneck_single(p: Site, q: Site) -> f64 {
    match (p, q) {
        (Site::Point(a), Site::Point(b)) => d_inf(&a, &b).min(a.diag_cost().max(b.diag_cost())),
        (a, b) => a.diag_cost().max(b.diag_cost()),
    }
}

/// Exact bottleneck distance.
///
/// The optimum is one of the finitely many candidate costs (cross-pair
/// `d_inf` values and diagonal costs). Candidates are sorted and the
/// smallest one admitting a perfect matching is located by binary search;
/// feasibility is a Hopcroft-Karp maximum matching on the threshold graph,
/// with every point given a private diagonal partner on the other side.
pub fn bottleneck(a: &PersistenceDiagram, b: &PersistenceDiagram) -> f64 {
    let (n, m) = (a.points.len(), b.points.len());
    if n == 0 && m == 0 {
        return 0.0;
    }
    let cross: Vec<f64> = a
        .points
        .iter()
        .flat_map(|p| b.points.iter().map(move |q| d_inf(p, q)))
        .collect();
    let diag_a: Vec<f64> = a.points.iter().map(DiagramPoint::diag_cost).collect();
    let diag_b: Vec<f64> = b.points.iter().map(DiagramPoint::diag_cost).collect();

    let mut candidates: Vec<f64> = Vec::with_capacity(cross.len() + n + m + 1);
    candidates.push(0.0);
    candidates.extend_from_slice(&cross);
    candidates.extend_from_slice(&diag_a);
    candidates.extend_from_slice(&diag_b);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // the largest diagonal cost is always feasible (everything to the diagonal)
    let all_diag = diag_a.iter().chain(&diag_b).copied().fold(0.0, f64::max);
    let mut hi = candidates.partition_point(|&c| c < all_diag);
    let mut lo = 0usize;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_at(candidates[mid], n, m, &cross, &diag_a, &diag_b) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Left side: points of A, then diagonal copies of B. Right side: points of
/// B, then diagonal copies of A.
fn perfect_matching_at(
    t: f64,
    n: usize,
    m: usize,
    cross: &[f64],
    diag_a: &[f64],
    diag_b: &[f64],
) -> bool {
    let size = n + m;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
    for i in 0..n {
        for j in 0..m {
            if cross[i * m + j] <= t {
                adj[i].push(j);
            }
        }
        if diag_a[i] <= t {
            adj[i].push(m + i);
        }
    }
    for j in 0..m {
        let row = &mut adj[n + j];
        if diag_b[j] <= t {
            row.push(j);
        }
        row.extend((0..n).map(|i| m + i));
    }
    hopcroft_karp(&adj, size) == size
}

const UNMATCHED: usize = usize::MAX;

/// Maximum bipartite matching size; `adj[u]` lists right vertices of left `u`.
pub(crate) fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> usize {
    let n_left = adj.len();
    let mut match_l = vec![UNMATCHED; n_left];
    let mut match_r = vec![UNMATCHED; n_right];
    let mut dist = vec![0usize; n_left];
    let mut matched = 0;
    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if match_l[u] == UNMATCHED {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == UNMATCHED {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; n_left];
        for u in 0..n_left {
            if match_l[u] == UNMATCHED
                && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut it)
            {
                matched += 1;
            }
        }
    }
    matched
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    while it[u] < adj[u].len() {
        let v = adj[u][it[u]];
        it[u] += 1;
        let w = match_r[v];
        let ok = w == UNMATCHED
            || (dist[w] == dist[u].wrapping_add(1) && augment(w, adj, match_l, match_r, dist, it));
        if ok {
            match_l[u] = v;
            match_r[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// Reads a line-delimited diagram file: one JSON record per line with a
/// `points` array of `[birth, death]` pairs and an optional `dim`. Blank
/// lines are skipped.
pub fn read_diagrams(path: impl AsRef<Path>) -> Result<Vec<PersistenceDiagram>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| PlaceError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PlaceError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: PersistenceDiagram = serde_json::from_str(&line)
            .map_err(|e| PlaceError::parse(path, i + 1, e.to_string()))?;
        out.push(d);
    }
    Ok(out)
}

pub fn write_diagrams<W: Write>(mut w: W, diagrams: &[PersistenceDiagram]) -> std::io::Result<()> {
    for d in diagrams {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

//! Graphs, vertex descriptors and extended persistence of vertex-function
//! filtrations.
//!
//! A vertex function extends to edges by `f(u, v) = max(f(u), f(v))`.
//! Ordinary 0-dimensional bars come from the union-find elder rule on the
//! sublevel filtration; each component contributes one essential bar
//! `(min f, max f)`, and each independent cycle a bar from its closing edge
//! value to the maximum of `f` on its component.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::{filter_top_n, DiagramPoint, PersistenceDiagram};
use crate::error::{PlaceError, Result};

/// Largest graph accepted by the dense heat-kernel eigensolver.
pub const HKS_MAX_VERTICES: usize = 512;

/// Simple undirected graph on vertices `0..n_vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates ids and rejects self-loops and repeated edges.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(PlaceError::InvalidParameter(format!(
                    "edge ({u}, {v}) outside 0..{n_vertices}"
                )));
            }
            if u == v {
                return Err(PlaceError::InvalidParameter(format!(
                    "self-loop at vertex {u}"
                )));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(PlaceError::InvalidParameter(format!(
                    "repeated edge ({u}, {v})"
                )));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn n_components(&self) -> usize {
        let mut uf = UnionFind::new(self.n_vertices);
        self.edges.iter().for_each(|&(u, v)| {
            uf.union(u, v);
        });
        (0..self.n_vertices).filter(|&v| uf.find(v) == v).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFunction {
    pub name: String,
    pub values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PlaceError::Numeric(
                "vertex function has non-finite values".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            values,
        })
    }
}

pub fn descriptor_degree(g: &Graph) -> VertexFunction {
    let mut deg = vec![0.0; g.n_vertices];
    for &(u, v) in &g.edges {
        deg[u] += 1.0;
        deg[v] += 1.0;
    }
    VertexFunction {
        name: "degree".into(),
        values: deg,
    }
}

/// Heat kernel signature `h_t(v) = sum_i exp(-t lambda_i) phi_i(v)^2` of the
/// unnormalized Laplacian.
pub fn descriptor_hks(g: &Graph, t: f64) -> Result<VertexFunction> {
    let n = g.n_vertices;
    if n > HKS_MAX_VERTICES {
        return Err(PlaceError::InvalidParameter(format!(
            "heat kernel signature limited to {HKS_MAX_VERTICES} vertices, graph has {n}"
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(PlaceError::InvalidParameter(format!(
            "diffusion time must be >= 0, got {t}"
        )));
    }
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for &(u, v) in &g.edges {
        lap[(u, v)] -= 1.0;
        lap[(v, u)] -= 1.0;
        lap[(u, u)] += 1.0;
        lap[(v, v)] += 1.0;
    }
    let eig = SymmetricEigen::try_new(lap, 1e-14, 0).ok_or_else(|| {
        PlaceError::Numeric("Laplacian eigendecomposition did not converge".into())
    })?;
    let heat: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| (-t * l.max(0.0)).exp())
        .collect();
    let values = (0..n)
        .map(|v| {
            (0..n)
                .map(|i| heat[i] * eig.eigenvectors[(v, i)].powi(2))
                .sum()
        })
        .collect();
    Ok(VertexFunction {
        name: format!("hks:{t}"),
        values,
    })
}

/// Closeness `1 / sum of hop distances` within each vertex's component;
/// isolated vertices get 0.
pub fn descriptor_closeness(g: &Graph) -> VertexFunction {
    let adj = g.adjacency();
    let n = g.n_vertices;
    let values = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            let mut total = 0usize;
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        total += dist[v];
                        q.push_back(v);
                    }
                }
            }
            if total == 0 {
                0.0
            } else {
                1.0 / total as f64
            }
        })
        .collect();
    VertexFunction {
        name: "closeness".into(),
        values,
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Links `b`'s root under `a`'s root; returns false when already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[rb] = ra;
        true
    }
}

/// All bars before degenerate ones are dropped, as raw `(birth, death)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtendedPairs {
    pub ordinary_h0: Vec<(f64, f64)>,
    pub essential_h0: Vec<(f64, f64)>,
    pub h1: Vec<(f64, f64)>,
}

pub fn extended_pairs(g: &Graph, f: &VertexFunction) -> Result<ExtendedPairs> {
    let n = g.n_vertices;
    if f.values.len() != n {
        return Err(PlaceError::DimensionMismatch {
            expected: n,
            got: f.values.len(),
        });
    }
    let fv = &f.values;
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    let key = |e: usize| {
        let (u, v) = g.edges[e];
        (fv[u].max(fv[v]), fv[u].min(fv[v]))
    };
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(a.cmp(&b))
    });
    let mut uf = UnionFind::new(n);
    // per root: the vertex holding the component's minimum (its birth)
    let mut oldest: Vec<usize> = (0..n).collect();
    let mut out = ExtendedPairs::default();
    let mut cycle_roots = Vec::new();
    for e in order {
        let (u, v) = g.edges[e];
        let value = key(e).0;
        let (ru, rv) = (uf.find(u), uf.find(v));
        if ru == rv {
            cycle_roots.push((value, u));
            continue;
        }
        let (ou, ov) = (oldest[ru], oldest[rv]);
        let u_elder = fv[ou] < fv[ov] || (fv[ou] == fv[ov] && ou < ov);
        let (elder, younger) = if u_elder { (ou, ov) } else { (ov, ou) };
        out.ordinary_h0.push((fv[younger], value));
        uf.union(ru, rv);
        let root = uf.find(ru);
        oldest[root] = elder;
    }
    let mut comp_max: BTreeMap<usize, f64> = BTreeMap::new();
    for (v, &val) in fv.iter().enumerate() {
        let r = uf.find(v);
        let e = comp_max.entry(r).or_insert(f64::NEG_INFINITY);
        *e = e.max(val);
    }
    for (&r, &mx) in &comp_max {
        out.essential_h0.push((fv[oldest[r]], mx));
    }
    for (value, u) in cycle_roots {
        let r = uf.find(u);
        out.h1.push((value, comp_max[&r]));
    }
    Ok(out)
}

fn to_diagram(bars: &[(f64, f64)], dim: u8) -> Result<PersistenceDiagram> {
    let points = bars
        .iter()
        .filter(|(b, d)| d > b)
        .map(|&(b, d)| DiagramPoint::new(b, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(PersistenceDiagram::with_dim(points, dim))
}

/// `(H0, H1)` diagrams with zero-persistence bars dropped.
///
/// Diagram points need `birth >= 0`, so vertex functions must be
/// nonnegative wherever a bar survives.
pub fn extended_persistence(
    g: &Graph,
    f: &VertexFunction,
) -> Result<(PersistenceDiagram, PersistenceDiagram)> {
    let pairs = extended_pairs(g, f)?;
    let mut h0 = pairs.ordinary_h0;
    h0.extend(pairs.essential_h0);
    Ok((to_diagram(&h0, 0)?, to_diagram(&pairs.h1, 1)?))
}

/// Multiset union of every diagram, then the `n_max` most persistent points.
pub fn pool_descriptors(
    diagrams: &[(PersistenceDiagram, PersistenceDiagram)],
    n_max: usize,
) -> Result<PersistenceDiagram> {
    if diagrams.is_empty() {
        return Err(PlaceError::Empty("no diagrams to pool".into()));
    }
    let mut pooled = PersistenceDiagram::default();
    for (h0, h1) in diagrams {
        pooled.points.extend_from_slice(&h0.points);
        pooled.points.extend_from_slice(&h1.points);
    }
    filter_top_n(&pooled, n_max)
}

/// A graph dataset in the TU benchmark layout.
#[derive(Debug, Clone)]
pub struct TuDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    /// Labels remapped to `0..k` in increasing order of the original values.
    pub labels: Vec<usize>,
    pub label_values: Vec<i64>,
}

impl TuDataset {
    pub fn n_classes(&self) -> usize {
        self.label_values.len()
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| PlaceError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields = l
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .collect();
            (i + 1, fields)
        })
        .collect())
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| PlaceError::parse(path, line, format!("cannot parse '{s}'")))
}

fn dataset_name(dir: &Path) -> Result<String> {
    let entries = std::fs::read_dir(dir).map_err(|e| PlaceError::io(dir, e))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter_map(|n| n.strip_suffix("_A.txt").map(str::to_owned))
        .collect();
    names.sort();
    names.into_iter().next().ok_or_else(|| PlaceError::Parse {
        path: dir.display().to_string(),
        line: 0,
        msg: "no <name>_A.txt edge file".into(),
    })
}

/// Reads `<name>_A.txt`, `<name>_graph_indicator.txt` and
/// `<name>_graph_labels.txt` from `dir`. Edges listed in both directions are
/// merged; self-loops are dropped.
pub fn load_tu_dataset(dir: impl AsRef<Path>) -> Result<TuDataset> {
    let dir = dir.as_ref();
    let name = dataset_name(dir)?;
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let ind_path = file("graph_indicator");
    let mut indicator = Vec::new();
    for (line, fields) in read_lines(&ind_path)? {
        let g: usize = parse_field(&ind_path, line, &fields[0])?;
        if g == 0 {
            return Err(PlaceError::parse(&ind_path, line, "graph ids are 1-based"));
        }
        indicator.push(g - 1);
    }
    let lab_path = file("graph_labels");
    let mut raw_labels = Vec::new();
    for (line, fields) in read_lines(&lab_path)? {
        raw_labels.push(parse_field::<i64>(&lab_path, line, &fields[0])?);
    }
    let n_graphs = raw_labels.len();
    if let Some(pos) = indicator.iter().position(|&g| g >= n_graphs) {
        return Err(PlaceError::parse(
            &ind_path,
            pos + 1,
            format!(
                "graph id {} exceeds the {n_graphs} labels",
                indicator[pos] + 1
            ),
        ));
    }
    if indicator.windows(2).any(|w| w[1] < w[0]) {
        return Err(PlaceError::parse(
            &ind_path,
            0,
            "graph ids must be nondecreasing",
        ));
    }
    let mut first = vec![usize::MAX; n_graphs];
    let mut sizes = vec![0usize; n_graphs];
    for (v, &g) in indicator.iter().enumerate() {
        if first[g] == usize::MAX {
            first[g] = v;
        }
        sizes[g] += 1;
    }
    let a_path = file("A");
    let mut edge_sets: Vec<std::collections::BTreeSet<(usize, usize)>> =
        vec![Default::default(); n_graphs];
    for (line, fields) in read_lines(&a_path)? {
        if fields.len() < 2 {
            return Err(PlaceError::parse(&a_path, line, "expected two node ids"));
        }
        let u: usize = parse_field(&a_path, line, &fields[0])?;
        let v: usize = parse_field(&a_path, line, &fields[1])?;
        if u == 0 || v == 0 || u > indicator.len() || v > indicator.len() {
            return Err(PlaceError::parse(
                &a_path,
                line,
                format!("node id out of range 1..={}", indicator.len()),
            ));
        }
        let (u, v) = (u - 1, v - 1);
        let g = indicator[u];
        if indicator[v] != g {
            return Err(PlaceError::parse(
                &a_path,
                line,
                "edge joins two different graphs",
            ));
        }
        if u != v {
            let (a, b) = (u - first[g], v - first[g]);
            edge_sets[g].insert((a.min(b), a.max(b)));
        }
    }
    let graphs = edge_sets
        .into_iter()
        .zip(&sizes)
        .map(|(edges, &n)| Graph::new(n, edges.into_iter().collect()))
        .collect::<Result<Vec<_>>>()?;
    let mut label_values = raw_labels.clone();
    label_values.sort_unstable();
    label_values.dedup();
    let labels = raw_labels
        .iter()
        .map(|l| label_values.binary_search(l).unwrap_or(0))
        .collect();
    Ok(TuDataset {
        name,
        graphs,
        labels,
        label_values,
    })
}

/// Vertex descriptors available to the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Descriptor {
    Degree,
    Hks(f64),
    Closeness,
    /// Per-graph vertex values from a file: line `i` holds graph `i`'s values.
    File(String),
}

impl std::fmt::Display for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Descriptor::Degree => write!(f, "degree"),
            Descriptor::Hks(t) => write!(f, "hks:{t}"),
            Descriptor::Closeness => write!(f, "closeness"),
            Descriptor::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl std::str::FromStr for Descriptor {
    type Err = PlaceError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(t) = s.strip_prefix("hks:") {
            let t: f64 = t.parse().map_err(|_| {
                PlaceError::InvalidParameter(format!("bad diffusion time in '{s}'"))
            })?;
            return Ok(Descriptor::Hks(t));
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(Descriptor::File(p.to_owned()));
        }
        match s {
            "degree" => Ok(Descriptor::Degree),
            "closeness" => Ok(Descriptor::Closeness),
            "hks" => Ok(Descriptor::Hks(1.0)),
            _ => Err(PlaceError::InvalidParameter(format!(
                "unknown descriptor '{s}'"
            ))),
        }
    }
}

/// Parses a `+`-separated descriptor list such as `degree+hks:10`.
pub fn parse_descriptors(spec: &str) -> Result<Vec<Descriptor>> {
    let out = spec
        .split('+')
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(PlaceError::InvalidParameter("empty descriptor list".into()));
    }
    Ok(out)
}

/// Reads per-graph vertex values: one line per graph, whitespace or comma
/// separated, lengths checked against `graphs`.
pub fn load_vertex_functions(
    path: impl AsRef<Path>,
    graphs: &[Graph],
) -> Result<Vec<VertexFunction>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PlaceError::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < graphs.len() {
        return Err(PlaceError::parse(
            path,
            lines.len(),
            format!("expected {} lines, found {}", graphs.len(), lines.len()),
        ));
    }
    graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let vals = lines[i]
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| parse_field::<f64>(path, i + 1, s))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != g.n_vertices {
                return Err(PlaceError::parse(
                    path,
                    i + 1,
                    format!("expected {} values, found {}", g.n_vertices, vals.len()),
                ));
            }
            VertexFunction::new(format!("file:{}", path.display()), vals)
        })
        .collect()
}

/// Pooled `H0 + H1` diagram per graph over all descriptors, truncated to the
/// `n_max` most persistent points.
pub fn corpus_diagrams(
    graphs: &[Graph],
    descriptors: &[Descriptor],
    n_max: usize,
) -> Result<Vec<PersistenceDiagram>> {
    let mut from_file: BTreeMap<String, Vec<VertexFunction>> = BTreeMap::new();
    for d in descriptors {
        if let Descriptor::File(p) = d {
            if !from_file.contains_key(p) {
                from_file.insert(p.clone(), load_vertex_functions(p, graphs)?);
            }
        }
    }
    graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let per = descriptors
                .iter()
                .map(|d| {
                    let f = match d {
                        Descriptor::Degree => descriptor_degree(g),
                        Descriptor::Hks(t) => descriptor_hks(g, *t)?,
                        Descriptor::Closeness => descriptor_closeness(g),
                        Descriptor::File(p) => from_file[p][i].clone(),
                    };
                    extended_persistence(g, &f)
                })
                .collect::<Result<Vec<_>>>()?;
            pool_descriptors(&per, n_max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2)]).unwrap()
    }

    fn cycle4() -> Graph {
        Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn degrees() {
        assert_eq!(descriptor_degree(&path3()).values, vec![1.0, 2.0, 1.0]);
        assert_eq!(descriptor_degree(&cycle4()).values, vec![2.0; 4]);
        let star = Graph::new(5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(
            descriptor_degree(&star).values,
            vec![4.0, 1.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn heat_kernel_signatures() {
        let single = Graph::new(1, vec![]).unwrap();
        assert!((descriptor_hks(&single, 3.0).unwrap().values[0] - 1.0).abs() < 1e-12);
        let k2 = Graph::new(2, vec![(0, 1)]).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let h = descriptor_hks(&k2, t).unwrap();
            let want = 0.5 + 0.5 * (-2.0 * t).exp();
            for v in h.values {
                assert!((v - want).abs() < 1e-12);
            }
        }
        let h = descriptor_hks(&cycle4(), 1.0).unwrap().values;
        for v in &h {
            assert!((v - h[0]).abs() < 1e-12);
        }
        let big = Graph::new(HKS_MAX_VERTICES + 1, vec![]).unwrap();
        assert!(descriptor_hks(&big, 1.0).is_err());
    }

    #[test]
    fn closeness_values() {
        let k2 = Graph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(descriptor_closeness(&k2).values, vec![1.0, 1.0]);
        assert_eq!(
            descriptor_closeness(&path3()).values,
            vec![1.0 / 3.0, 0.5, 1.0 / 3.0]
        );
        let iso = Graph::new(1, vec![]).unwrap();
        assert_eq!(descriptor_closeness(&iso).values, vec![0.0]);
    }

    #[test]
    fn path_bars() {
        let f = VertexFunction::new("f", vec![1.0, 2.0, 1.0]).unwrap();
        let p = extended_pairs(&path3(), &f).unwrap();
        // vertex 1 dies on arrival; vertex 2 loses the tie to vertex 0 at value 2
        assert_eq!(p.ordinary_h0, vec![(2.0, 2.0), (1.0, 2.0)]);
        assert_eq!(p.essential_h0, vec![(1.0, 2.0)]);
        assert!(p.h1.is_empty());
    }

    #[test]
    fn path_merge_order() {
        let f = VertexFunction::new("f", vec![1.0, 2.0, 1.0]).unwrap();
        let (h0, h1) = extended_persistence(&path3(), &f).unwrap();
        let pts: Vec<(f64, f64)> = h0.points.iter().map(|p| (p.birth, p.death)).collect();
        assert_eq!(pts, vec![(1.0, 2.0), (1.0, 2.0)]);
        assert!(h1.is_empty());
    }

    #[test]
    fn constant_cycle_is_degenerate() {
        let f = VertexFunction::new("c", vec![3.0; 4]).unwrap();
        let p = extended_pairs(&cycle4(), &f).unwrap();
        assert_eq!(p.h1, vec![(3.0, 3.0)]);
        let (h0, h1) = extended_persistence(&cycle4(), &f).unwrap();
        assert!(h0.is_empty() && h1.is_empty());
    }

    #[test]
    fn disjoint_edges() {
        let g = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let f = VertexFunction::new("f", vec![0.0, 1.0, 0.5, 2.0]).unwrap();
        let p = extended_pairs(&g, &f).unwrap();
        assert_eq!(p.essential_h0, vec![(0.0, 1.0), (0.5, 2.0)]);
        assert!(p.ordinary_h0.iter().all(|(b, d)| b == d) || p.ordinary_h0.is_empty());
        assert!(p.h1.is_empty());
    }

    #[test]
    fn cycle_with_peak() {
        let f = VertexFunction::new("f", vec![0.0, 1.0, 3.0, 2.0]).unwrap();
        let p = extended_pairs(&cycle4(), &f).unwrap();
        // the cycle closes at the edge (2, 3) or (1, 2) with value 3
        assert_eq!(p.h1, vec![(3.0, 3.0)]);
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let f = VertexFunction::new("f", vec![0.0, 1.0, 1.5, 4.0]).unwrap();
        let p = extended_pairs(&g, &f).unwrap();
        assert_eq!(p.h1, vec![(1.5, 4.0)]);
    }

    #[test]
    fn pooling() {
        let d = |n: usize, off: f64| {
            PersistenceDiagram::from_pairs(
                &(0..n)
                    .map(|i| (off, off + 1.0 + i as f64))
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        let a = (d(30, 0.0), PersistenceDiagram::default());
        let b = (d(30, 0.5), PersistenceDiagram::default());
        let pooled = pool_descriptors(&[a.clone(), b], 50).unwrap();
        assert_eq!(pooled.len(), 50);
        let single = pool_descriptors(std::slice::from_ref(&a), 50).unwrap();
        assert_eq!(single.points, a.0.points);
        let with_empty = pool_descriptors(&[a.clone(), Default::default()], 50).unwrap();
        assert_eq!(with_empty.points, a.0.points);
    }

    #[test]
    fn descriptor_parsing() {
        let d = parse_descriptors("degree+hks:10").unwrap();
        assert_eq!(d, vec![Descriptor::Degree, Descriptor::Hks(10.0)]);
        assert_eq!(d[1].to_string(), "hks:10");
        assert!(parse_descriptors("degree+bogus").is_err());
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(2, vec![(0, 0)]).is_err());
        assert!(Graph::new(2, vec![(0, 2)]).is_err());
        assert!(Graph::new(2, vec![(0, 1), (1, 0)]).is_err());
    }
}

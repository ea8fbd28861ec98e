//! Undirected simple graphs, the generator families used throughout the
//! crate, and the handful of distance/cut measurements the analyses need.
//!
//! Graphs are stored in compressed sparse row form: the neighbors of `v`
//! occupy `targets[offsets[v]..offsets[v + 1]]`, sorted ascending. The
//! position of a neighbor inside that slice (plus the row offset) is the
//! *arc index* used by the forcing engine to key its random coins.

use std::collections::VecDeque;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest hypercube dimension the generator accepts.
pub const MAX_HYPERCUBE_DIM: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Duplicate edges (in
    /// either orientation) collapse; self-loops and out-of-range endpoints
    /// are rejected.
    pub fn from_edges(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::Contract("graph must have at least one vertex".into()));
        }
        let mut adjacency = vec![Vec::new(); n_vertices];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n_vertices {
                    return Err(Error::VertexOutOfRange { vertex: w, n_vertices });
                }
            }
            if u == v {
                return Err(Error::Contract(format!("self-loop at vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_adjacency(adjacency))
    }

    fn from_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Graph { offsets, targets }
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Arc index of the first neighbor of `v`.
    #[inline]
    pub fn arc_offset(&self, v: usize) -> usize {
        self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n_vertices() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_vertices())
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_vertices()).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_vertices()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.n_vertices()).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn is_connected(&self) -> bool {
        bfs_distances(self, 0).iter().all(Option::is_some)
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n_vertices() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n_vertices: self.n_vertices() })
        }
    }
}

/// Membership set over the vertices of one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    members: Vec<bool>,
    len: usize,
}

impl VertexSet {
    pub fn empty(n_vertices: usize) -> Self {
        VertexSet { members: vec![false; n_vertices], len: 0 }
    }

    pub fn full(n_vertices: usize) -> Self {
        VertexSet { members: vec![true; n_vertices], len: n_vertices }
    }

    pub fn from_indices(n_vertices: usize, indices: &[usize]) -> Result<Self> {
        let mut set = Self::empty(n_vertices);
        for &v in indices {
            if v >= n_vertices {
                return Err(Error::VertexOutOfRange { vertex: v, n_vertices });
            }
            set.insert(v);
        }
        Ok(set)
    }

    /// Set whose members are the set bits of `mask` (vertices `0..64` only).
    pub fn from_mask(n_vertices: usize, mask: u64) -> Self {
        let mut set = Self::empty(n_vertices);
        for v in 0..n_vertices.min(64) {
            if mask >> v & 1 == 1 {
                set.insert(v);
            }
        }
        set
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.members[v]
    }

    /// Returns true when `v` was newly added.
    pub fn insert(&mut self, v: usize) -> bool {
        let fresh = !self.members[v];
        if fresh {
            self.members[v] = true;
            self.len += 1;
        }
        fresh
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Size of the universe this set lives in.
    pub fn universe(&self) -> usize {
        self.members.len()
    }

    pub fn is_full(&self) -> bool {
        self.len == self.members.len()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.members.len() == other.members.len() && self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| v)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.members
    }
}

/// The named graph families, addressable as `family:params` strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphFamilySpec {
    Path(usize),
    Cycle(usize),
    /// Star with the given number of leaves; the center is vertex 0.
    Star(usize),
    Complete(usize),
    Grid {
        m: usize,
        n: usize,
    },
    Hypercube(u32),
    CliqueRing {
        d: usize,
        n: usize,
    },
    EdgeListFile(PathBuf),
}

impl GraphFamilySpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            GraphFamilySpec::Path(_) => "path",
            GraphFamilySpec::Cycle(_) => "cycle",
            GraphFamilySpec::Star(_) => "star",
            GraphFamilySpec::Complete(_) => "complete",
            GraphFamilySpec::Grid { .. } => "grid",
            GraphFamilySpec::Hypercube(_) => "hypercube",
            GraphFamilySpec::CliqueRing { .. } => "cliquering",
            GraphFamilySpec::EdgeListFile(_) => "file",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.family_name();
        let bad = |reason: &str| Err(Error::InvalidGraph { family, reason: reason.to_string() });
        match *self {
            GraphFamilySpec::Path(n) if n < 1 => bad("need at least 1 vertex"),
            GraphFamilySpec::Cycle(n) if n < 3 => bad("need at least 3 vertices"),
            GraphFamilySpec::Complete(n) if n < 1 => bad("need at least 1 vertex"),
            GraphFamilySpec::Grid { m, n } if m < 1 || n < 1 => bad("both dimensions must be at least 1"),
            GraphFamilySpec::Hypercube(dim) if dim < 1 => bad("dimension must be at least 1"),
            GraphFamilySpec::Hypercube(dim) if dim > MAX_HYPERCUBE_DIM => {
                bad(&format!("dimension {dim} exceeds cap {MAX_HYPERCUBE_DIM}"))
            }
            GraphFamilySpec::CliqueRing { d, .. } if d < 5 => bad("degree d must be at least 5"),
            GraphFamilySpec::CliqueRing { d, n } if n % (d + 1) != 0 => {
                bad(&format!("d + 1 = {} must divide n = {n}", d + 1))
            }
            GraphFamilySpec::CliqueRing { d, n } if n / (d + 1) < 2 => bad("need at least 2 clique copies"),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Graph> {
        make_named_graph(self)
    }
}

impl fmt::Display for GraphFamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFamilySpec::Path(n) => write!(f, "path:{n}"),
            GraphFamilySpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphFamilySpec::Star(n) => write!(f, "star:{n}"),
            GraphFamilySpec::Complete(n) => write!(f, "complete:{n}"),
            GraphFamilySpec::Grid { m, n } => write!(f, "grid:{m},{n}"),
            GraphFamilySpec::Hypercube(d) => write!(f, "hypercube:{d}"),
            GraphFamilySpec::CliqueRing { d, n } => write!(f, "cliquering:{d},{n}"),
            GraphFamilySpec::EdgeListFile(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for GraphFamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let syntax = || Error::GraphSpecSyntax(s.to_string());
        let (family, params) = s.trim().split_once(':').ok_or_else(syntax)?;
        let family = family.trim().to_ascii_lowercase();
        if family == "file" {
            if params.is_empty() {
                return Err(syntax());
            }
            return Ok(GraphFamilySpec::EdgeListFile(PathBuf::from(params)));
        }
        let nums = params
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| syntax())?;
        let spec = match (family.as_str(), nums.as_slice()) {
            ("path", &[n]) => GraphFamilySpec::Path(n),
            ("cycle", &[n]) => GraphFamilySpec::Cycle(n),
            ("star", &[n]) => GraphFamilySpec::Star(n),
            ("complete", &[n]) => GraphFamilySpec::Complete(n),
            ("grid", &[m, n]) => GraphFamilySpec::Grid { m, n },
            ("hypercube", &[d]) => GraphFamilySpec::Hypercube(u32::try_from(d).map_err(|_| syntax())?),
            ("cliquering" | "clique_ring", &[d, n]) => GraphFamilySpec::CliqueRing { d, n },
            _ => return Err(syntax()),
        };
        Ok(spec)
    }
}

pub fn make_named_graph(spec: &GraphFamilySpec) -> Result<Graph> {
    spec.validate()?;
    match *spec {
        GraphFamilySpec::Path(n) => make_path(n),
        GraphFamilySpec::Cycle(n) => {
            let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            edges.push((n - 1, 0));
            Graph::from_edges(n, &edges)
        }
        GraphFamilySpec::Star(leaves) => {
            let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
            Graph::from_edges(leaves + 1, &edges)
        }
        GraphFamilySpec::Complete(t) => make_complete(t),
        GraphFamilySpec::Grid { m, n } => make_grid(m, n),
        GraphFamilySpec::Hypercube(dim) => make_hypercube(dim),
        GraphFamilySpec::CliqueRing { d, n } => make_clique_ring(d, n),
        GraphFamilySpec::EdgeListFile(ref path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io { path: path.display().to_string(), reason: e.to_string() })?;
            parse_edge_list(&text)
        }
    }
}

fn make_path(n: usize) -> Result<Graph> {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n, &edges)
}

fn make_complete(t: usize) -> Result<Graph> {
    let adjacency = (0..t).map(|u| (0..t).filter(|&v| v != u).collect()).collect();
    Ok(Graph::from_adjacency(adjacency))
}

/// `m × n` grid; coordinate `(i, j)` is vertex `i + m * j`.
pub fn make_grid(m: usize, n: usize) -> Result<Graph> {
    GraphFamilySpec::Grid { m, n }.validate()?;
    let id = |i: usize, j: usize| i + m * j;
    let mut edges = Vec::with_capacity(2 * m * n);
    for j in 0..n {
        for i in 0..m {
            if i + 1 < m {
                edges.push((id(i, j), id(i + 1, j)));
            }
            if j + 1 < n {
                edges.push((id(i, j), id(i, j + 1)));
            }
        }
    }
    Graph::from_edges(m * n, &edges)
}

/// Vertices are bit patterns; `u ~ v` iff they differ in exactly one bit.
pub fn make_hypercube(dim: u32) -> Result<Graph> {
    GraphFamilySpec::Hypercube(dim).validate()?;
    let n = 1usize << dim;
    let adjacency = (0..n).map(|v| (0..dim).map(|b| v ^ (1 << b)).collect()).collect();
    Ok(Graph::from_adjacency(adjacency))
}

/// Ring of `n / (d + 1)` copies of `K_{d+1}`. In copy `i` (block
/// `[i(d+1), (i+1)(d+1))`) the edge between local vertices 0 and 1 is
/// removed, and local vertex 0 of copy `i` is joined to local vertex 1 of
/// copy `i + 1 (mod copies)`. The result is `d`-regular.
pub fn make_clique_ring(d: usize, n: usize) -> Result<Graph> {
    GraphFamilySpec::CliqueRing { d, n }.validate()?;
    let size = d + 1;
    let copies = n / size;
    let mut edges = Vec::with_capacity(n * d / 2);
    for c in 0..copies {
        let base = c * size;
        for a in 0..size {
            for b in a + 1..size {
                if (a, b) != (0, 1) {
                    edges.push((base + a, base + b));
                }
            }
        }
        let next = (c + 1) % copies * size;
        edges.push((base, next + 1));
    }
    Graph::from_edges(n, &edges)
}

/// Parses `u v` pairs, one per line. An optional first line `n <count>`
/// fixes the vertex count; otherwise it is the largest index plus one.
/// `#` starts a comment. Duplicate edges collapse.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |reason: &str| Error::EdgeList { line: line_no, reason: reason.to_string() };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err("expected two fields"));
        }
        if fields[0] == "n" {
            if seen_content {
                return Err(err("vertex count line must come first"));
            }
            let count = fields[1].parse::<usize>().map_err(|_| err("invalid vertex count"))?;
            if count == 0 {
                return Err(err("vertex count must be positive"));
            }
            declared = Some(count);
            seen_content = true;
            continue;
        }
        seen_content = true;
        let mut endpoints = [0usize; 2];
        for (slot, field) in endpoints.iter_mut().zip(&fields) {
            let value = field.parse::<i64>().map_err(|_| err(&format!("'{field}' is not an integer")))?;
            if value < 0 {
                return Err(err("negative vertex index"));
            }
            *slot = value as usize;
        }
        let [u, v] = endpoints;
        if u == v {
            return Err(err(&format!("self-loop at vertex {u}")));
        }
        if let Some(n) = declared {
            if u.max(v) >= n {
                return Err(err(&format!("vertex {} exceeds declared count {n}", u.max(v))));
            }
        }
        edges.push((u, v));
    }
    let n = match declared {
        Some(n) => n,
        None => edges
            .iter()
            .map(|&(u, v)| u.max(v) + 1)
            .max()
            .ok_or(Error::EdgeList { line: 0, reason: "no edges and no vertex count".into() })?,
    };
    Graph::from_edges(n, &edges)
}

/// Hop distances from `source`; `None` marks unreachable vertices.
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n_vertices()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or_default();
        for &w in g.neighbors(u) {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Largest distance from `v`; `None` if some vertex is unreachable.
pub fn eccentricity(g: &Graph, v: usize) -> Option<usize> {
    bfs_distances(g, v).into_iter().try_fold(0, |acc, d| d.map(|d| acc.max(d)))
}

/// Largest distance from the nearest member of `sources`.
pub fn set_eccentricity(g: &Graph, sources: &[usize]) -> Option<usize> {
    let mut dist = vec![None; g.n_vertices()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or_default();
        for &w in g.neighbors(u) {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist.into_iter().try_fold(0, |acc, d| d.map(|d: usize| acc.max(d)))
}

/// `None` for disconnected graphs.
pub fn diameter(g: &Graph) -> Option<usize> {
    (0..g.n_vertices()).try_fold(0, |acc, v| eccentricity(g, v).map(|e| acc.max(e)))
}

/// Number of edges with exactly one endpoint in `s`.
pub fn edge_boundary(g: &Graph, s: &VertexSet) -> usize {
    s.iter().map(|u| g.neighbors(u).iter().filter(|&&w| !s.contains(w)).count()).sum()
}

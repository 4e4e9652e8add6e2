//! Undirected weighted graphs, their incidence and Laplacian operators,
//! connectivity queries and the standard generators.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GtfError, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Immutable undirected graph with canonical edges (`i < j`, sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl ComponentLabeling {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (node, &c) in self.labels.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        build_graph(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_unit_weight(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    /// Neighbor lists as (neighbor, edge index).
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (l, e) in self.edges.iter().enumerate() {
            adj[e.i].push((e.j, l));
            adj[e.j].push((e.i, l));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.i] += 1;
            d[e.j] += 1;
        }
        d
    }

    /// True when the edges are exactly `(t, t+1)` for `t = 0..n-1`.
    pub fn is_chain(&self) -> bool {
        self.edges.len() + 1 == self.n
            && self.edges.iter().enumerate().all(|(t, e)| e.i == t && e.j == t + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || connected_components(self, &[]).map(|c| c.count == 1).unwrap_or(false)
    }

    /// Edge-list text: `n m` then `i j w` per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n, self.edges.len())?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.i, e.j, e.w)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter_map(|(k, l)| match l {
            Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#') => None,
            other => Some((k + 1, other)),
        });
        let (hline, header) = lines
            .next()
            .ok_or(GtfError::Parse { line: 1, msg: "missing header `n m`".into() })?;
        let header = header?;
        let nums: Vec<&str> = header.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(GtfError::Parse { line: hline, msg: "header must be `n m`".into() });
        }
        let n: usize = parse_field(nums[0], hline)?;
        let m: usize = parse_field(nums[1], hline)?;
        let mut edges = Vec::with_capacity(m);
        for (line, text) in lines {
            let text = text?;
            let f: Vec<&str> = text.split_whitespace().collect();
            if f.len() != 2 && f.len() != 3 {
                return Err(GtfError::Parse { line, msg: format!("expected `i j [w]`, got `{text}`") });
            }
            let i: usize = parse_field(f[0], line)?;
            let j: usize = parse_field(f[1], line)?;
            let w: f64 = if f.len() == 3 { parse_field(f[2], line)? } else { 1.0 };
            edges.push((i, j, w));
            if let Err(e) = validate_edge(n, i, j, w) {
                return Err(GtfError::Parse { line, msg: e.to_string() });
            }
        }
        if edges.len() != m {
            return Err(GtfError::Parse {
                line: hline,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        build_graph(n, &edges)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| GtfError::Parse { line, msg: format!("cannot parse `{s}`") })
}

fn validate_edge(n: usize, i: usize, j: usize, w: f64) -> Result<()> {
    for idx in [i, j] {
        if idx >= n {
            return Err(GtfError::IndexOutOfRange { index: idx, size: n });
        }
    }
    if i == j {
        return Err(GtfError::SelfLoop(i));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(GtfError::InvalidParameter(format!("edge ({i}, {j}) has weight {w}")));
    }
    Ok(())
}

/// Canonicalizes an edge list into a [`Graph`].
pub fn build_graph(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
    if n == 0 {
        return Err(GtfError::InvalidParameter("graph needs at least one node".into()));
    }
    let mut canon = Vec::with_capacity(edges.len());
    for &(i, j, w) in edges {
        validate_edge(n, i, j, w)?;
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        canon.push(Edge { i: a, j: b, w });
    }
    canon.sort_by_key(|x| (x.i, x.j));
    for pair in canon.windows(2) {
        if pair[0].i == pair[1].i && pair[0].j == pair[1].j {
            return Err(GtfError::DuplicateEdge(pair[0].i, pair[0].j));
        }
    }
    Ok(Graph { n, edges: canon })
}

/// Oriented, weighted incidence matrix: row `l` for edge `(i, j)`, `i < j`,
/// holds `-w` at column `i` and `+w` at column `j`.
pub fn incidence_matrix(g: &Graph) -> CsrMatrix {
    let mut trip = Vec::with_capacity(2 * g.m());
    for (l, e) in g.edges.iter().enumerate() {
        trip.push((l, e.i, -e.w));
        trip.push((l, e.j, e.w));
    }
    CsrMatrix::from_triplets(g.m(), g.n, &trip)
}

/// Graph Laplacian `L = DᵀD` (edge weights enter squared).
pub fn laplacian(g: &Graph) -> CsrMatrix {
    let mut trip = Vec::with_capacity(4 * g.m() + g.n);
    for e in &g.edges {
        let w2 = e.w * e.w;
        trip.push((e.i, e.i, w2));
        trip.push((e.j, e.j, w2));
        trip.push((e.i, e.j, -w2));
        trip.push((e.j, e.i, -w2));
    }
    CsrMatrix::from_triplets(g.n, g.n, &trip)
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Components of the graph with the given edges removed. Component ids are
/// assigned in order of each component's smallest node.
pub fn connected_components(g: &Graph, excluded_edges: &[usize]) -> Result<ComponentLabeling> {
    let mut skip = vec![false; g.m()];
    for &l in excluded_edges {
        if l >= g.m() {
            return Err(GtfError::IndexOutOfRange { index: l, size: g.m() });
        }
        skip[l] = true;
    }
    let mut uf = UnionFind::new(g.n);
    for (l, e) in g.edges.iter().enumerate() {
        if !skip[l] {
            uf.union(e.i, e.j);
        }
    }
    let mut id_of_root = vec![usize::MAX; g.n];
    let mut labels = vec![0; g.n];
    let mut count = 0;
    for v in 0..g.n {
        let r = uf.find(v);
        if id_of_root[r] == usize::MAX {
            id_of_root[r] = count;
            count += 1;
        }
        labels[v] = id_of_root[r];
    }
    Ok(ComponentLabeling { labels, count })
}

pub fn chain(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(GtfError::InvalidParameter("chain needs n >= 1".into()));
    }
    let edges: Vec<_> = (0..n - 1).map(|t| (t, t + 1, 1.0)).collect();
    build_graph(n, &edges)
}

/// `rows x cols` lattice; node `(r, c)` has index `r * cols + c`.
pub fn grid2d(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(GtfError::InvalidParameter("grid dimensions must be positive".into()));
    }
    let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1, 1.0));
            }
            if r + 1 < rows {
                edges.push((v, v + cols, 1.0));
            }
        }
    }
    build_graph(rows * cols, &edges)
}

/// Planar coordinates `(col, row)` for the nodes of [`grid2d`].
pub fn grid2d_coords(rows: usize, cols: usize) -> Vec<[f64; 2]> {
    (0..rows * cols).map(|v| [(v % cols) as f64, (v / cols) as f64]).collect()
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 || !(p > 0.0 && p <= 1.0) {
        return Err(GtfError::InvalidParameter(format!("erdos_renyi needs n >= 1 and 0 < p <= 1 (p = {p})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    build_graph(n, &edges)
}

/// Symmetrized k-nearest-neighbor graph under Euclidean distance; an edge
/// joins `i` and `j` when either is among the other's `k` nearest, with
/// distance ties broken by the smaller index.
pub fn knn_graph(points: &[Vec<f64>], k: usize) -> Result<Graph> {
    let n = points.len();
    if n == 0 || k == 0 || k >= n {
        return Err(GtfError::InvalidParameter(format!("knn_graph needs 0 < k < n (k = {k}, n = {n})")));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(GtfError::DimensionMismatch { expected: dim, got: points[bad].len() });
    }
    let mut set = HashSet::new();
    for i in 0..n {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, j)
            })
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in cand.iter().take(k) {
            set.insert((i.min(j), i.max(j)));
        }
    }
    let mut edges: Vec<_> = set.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    edges.sort_by_key(|a| (a.0, a.1));
    build_graph(n, &edges)
}

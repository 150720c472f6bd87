//! Finite bounded-degree graphs: representation, generators, ball operations
//! and the text file format.

use crate::error::{Error, Result};
use crate::Rat;
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::VecDeque;

/// Finite simple undirected graph with a declared maximum degree bound.
///
/// Vertices are dense 0-based indices; adjacency lists are kept sorted.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    d: usize,
    adj: Vec<Vec<usize>>,
}

/// Sorted list of distinct vertex indices.
pub type VertexSet = Vec<usize>;

/// Total k-coloring of a vertex set; colors run 1..=k.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coloring {
    pub k: usize,
    colors: Vec<u32>,
}

impl Coloring {
    pub fn new(k: usize, colors: Vec<u32>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidColoring("k must be positive".into()));
        }
        for (v, &c) in colors.iter().enumerate() {
            if c == 0 || c as usize > k {
                return Err(Error::InvalidColoring(format!(
                    "vertex {v} has color {c}, outside 1..={k}"
                )));
            }
        }
        Ok(Coloring { k, colors })
    }

    pub fn constant(k: usize, n: usize) -> Self {
        Coloring { k, colors: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    #[inline]
    pub fn color(&self, v: usize) -> u32 {
        self.colors[v]
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn set_color(&mut self, v: usize, c: u32) {
        debug_assert!(c >= 1 && c as usize <= self.k);
        self.colors[v] = c;
    }

    /// Parses the coloring file format: a header line "k", then one line
    /// "v c" per vertex. '#' starts a comment.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut lines = content_lines(text);
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty coloring file".into()))?;
        let k: usize = parse_fields::<usize>(&header, 1, "coloring header")?[0];
        let mut colors = vec![0u32; n];
        let mut seen = vec![false; n];
        for line in lines {
            let f = parse_fields::<usize>(&line, 2, "coloring entry")?;
            let (v, c) = (f[0], f[1]);
            if v >= n {
                return Err(Error::Parse(format!("vertex {v} out of range (n={n})")));
            }
            if seen[v] {
                return Err(Error::Parse(format!("vertex {v} colored twice")));
            }
            seen[v] = true;
            colors[v] = c as u32;
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::Parse(format!("vertex {v} has no color entry")));
        }
        Coloring::new(k, colors)
    }

    pub fn to_file_string(&self) -> String {
        let mut s = format!("{}\n", self.k);
        for (v, c) in self.colors.iter().enumerate() {
            s.push_str(&format!("{v} {c}\n"));
        }
        s
    }
}

/// Rooted induced ball around a vertex, in local indexing. The root is
/// local vertex 0; `vertices[i]` is the global id of local vertex i and
/// `dist[i]` its graph distance from the root.
#[derive(Debug, Clone)]
pub struct Ball {
    pub vertices: Vec<usize>,
    pub dist: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)], declared_d: Option<usize>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) out of range (n={n})"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if adj[u].contains(&v) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u},{v})")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let max_deg = adj.iter().map(Vec::len).max().unwrap_or(0);
        let d = declared_d.unwrap_or(max_deg);
        if max_deg > d {
            return Err(Error::InvalidGraph(format!(
                "observed max degree {max_deg} exceeds declared bound {d}"
            )));
        }
        Ok(Graph { n, d, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Declared maximum degree bound.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Re-declares the degree bound. Fails if some vertex already exceeds it.
    pub fn with_degree_bound(&self, d: usize) -> Result<Graph> {
        let max_deg = self.adj.iter().map(Vec::len).max().unwrap_or(0);
        if max_deg > d {
            return Err(Error::InvalidGraph(format!(
                "observed max degree {max_deg} exceeds bound {d}"
            )));
        }
        Ok(Graph { n: self.n, d, adj: self.adj.clone() })
    }

    /// BFS from `v` out to distance `r`; returns (vertex, distance) pairs in
    /// discovery order, root first.
    pub fn bfs_ball(&self, v: usize, r: usize) -> Vec<(usize, usize)> {
        let mut dist = vec![usize::MAX; self.n];
        let mut order = Vec::new();
        let mut q = VecDeque::new();
        dist[v] = 0;
        q.push_back(v);
        order.push((v, 0));
        while let Some(u) = q.pop_front() {
            if dist[u] == r {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    order.push((w, dist[w]));
                    q.push_back(w);
                }
            }
        }
        order
    }

    /// Rooted induced radius-r ball around `v`.
    pub fn ball(&self, v: usize, r: usize) -> Ball {
        let order = self.bfs_ball(v, r);
        let mut local = vec![usize::MAX; self.n];
        for (i, &(u, _)) in order.iter().enumerate() {
            local[u] = i;
        }
        let mut edges = Vec::new();
        for &(u, _) in &order {
            for &w in &self.adj[u] {
                if local[w] != usize::MAX && local[u] < local[w] {
                    edges.push((local[u], local[w]));
                }
            }
        }
        edges.sort_unstable();
        Ball {
            vertices: order.iter().map(|&(u, _)| u).collect(),
            dist: order.iter().map(|&(_, d)| d).collect(),
            edges,
        }
    }

    /// Union of radius-r balls around the vertices of `set`.
    pub fn ball_of_set(&self, set: &[usize], r: usize) -> VertexSet {
        let mut dist = vec![usize::MAX; self.n];
        let mut q = VecDeque::new();
        for &v in set {
            dist[v] = 0;
            q.push_back(v);
        }
        while let Some(u) = q.pop_front() {
            if dist[u] == r {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        (0..self.n).filter(|&v| dist[v] != usize::MAX).collect()
    }

    /// Graph with the same vertices where u~v iff 1 <= dist_G(u,v) <= t.
    /// The declared bound becomes the observed max degree of the result.
    pub fn power_graph(&self, t: usize) -> Result<Graph> {
        if t < 1 {
            return Err(Error::InvalidParameter("power_graph needs t >= 1".into()));
        }
        let mut edges = Vec::new();
        for v in 0..self.n {
            for &(u, dist) in &self.bfs_ball(v, t) {
                if dist >= 1 && v < u {
                    edges.push((v, u));
                }
            }
        }
        Graph::from_edges(self.n, &edges, None)
    }

    /// Finite mass-transport identity: returns
    /// ((1/n) sum_{x in A} e(x,B), (1/n) sum_{x in B} e(x,A)).
    pub fn check_mass_transport(&self, a: &[usize], b: &[usize]) -> (Rat, Rat) {
        let in_b: Vec<bool> = membership(self.n, b);
        let in_a: Vec<bool> = membership(self.n, a);
        let lhs: usize = a
            .iter()
            .map(|&x| self.adj[x].iter().filter(|&&y| in_b[y]).count())
            .sum();
        let rhs: usize = b
            .iter()
            .map(|&x| self.adj[x].iter().filter(|&&y| in_a[y]).count())
            .sum();
        let n = BigInt::from(self.n);
        (
            Rat::new(BigInt::from(lhs), n.clone()),
            Rat::new(BigInt::from(rhs), n),
        )
    }

    /// Parses the graph file format: header "n m" or "n m d", then m lines
    /// "u v" with u < v. '#' starts a comment.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = content_lines(text);
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n, m, d) = match fields.len() {
            2 => {
                let f = parse_fields::<usize>(&header, 2, "graph header")?;
                (f[0], f[1], None)
            }
            3 => {
                let f = parse_fields::<usize>(&header, 3, "graph header")?;
                (f[0], f[1], Some(f[2]))
            }
            _ => return Err(Error::Parse("graph header must be 'n m' or 'n m d'".into())),
        };
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let f = parse_fields::<usize>(&line, 2, "edge")?;
            if f[0] >= f[1] {
                return Err(Error::Parse(format!(
                    "edge '{} {}' must satisfy u < v",
                    f[0], f[1]
                )));
            }
            edges.push((f[0], f[1]));
        }
        if edges.len() != m {
            return Err(Error::Parse(format!(
                "header declares {m} edges, file has {}",
                edges.len()
            )));
        }
        Graph::from_edges(n, &edges, d)
    }

    pub fn to_file_string(&self) -> String {
        let mut s = format!("{} {} {}\n", self.n, self.edge_count(), self.d);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

fn content_lines(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines().filter_map(|l| {
        let l = l.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            None
        } else {
            Some(l.to_string())
        }
    })
}

fn parse_fields<T: std::str::FromStr>(line: &str, count: usize, what: &str) -> Result<Vec<T>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != count {
        return Err(Error::Parse(format!(
            "{what}: expected {count} fields in '{line}'"
        )));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>()
                .map_err(|_| Error::Parse(format!("{what}: cannot parse '{f}'")))
        })
        .collect()
}

/// Normalizes a vertex set: sorts, dedups, range-checks.
pub fn vertex_set(n: usize, vertices: &[usize]) -> Result<VertexSet> {
    let mut v: Vec<usize> = vertices.to_vec();
    v.sort_unstable();
    v.dedup();
    if let Some(&last) = v.last() {
        if last >= n {
            return Err(Error::InvalidParameter(format!(
                "vertex {last} out of range (n={n})"
            )));
        }
    }
    Ok(v)
}

// ---- generators ----

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter("cycle needs n >= 3".into()));
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .map(|i| if i + 1 < n { (i, i + 1) } else { (0, n - 1) })
        .collect();
    Graph::from_edges(n, &edges, Some(2))
}

pub fn path(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("path needs n >= 1".into()));
    }
    let edges: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    let d = if n >= 3 { 2 } else { n - 1 };
    Graph::from_edges(n, &edges, Some(d))
}

pub fn complete(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("complete needs n >= 1".into()));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges, Some(n - 1))
}

/// Star K_{1,leaves}; vertex 0 is the center.
pub fn star(leaves: usize) -> Result<Graph> {
    let edges: Vec<(usize, usize)> = (1..=leaves).map(|v| (0, v)).collect();
    Graph::from_edges(leaves + 1, &edges, Some(leaves.max(1)))
}

/// 4-regular discrete torus on a rows x cols grid.
pub fn grid_torus(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 3 || cols < 3 {
        return Err(Error::InvalidParameter(
            "grid_torus needs rows, cols >= 3".into(),
        ));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let u = idx(r, c);
            let right = idx(r, (c + 1) % cols);
            let down = idx((r + 1) % rows, c);
            edges.push((u.min(right), u.max(right)));
            edges.push((u.min(down), u.max(down)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::from_edges(rows * cols, &edges, Some(4))
}

/// Configuration-model random d-regular graph with full resampling on
/// loops or parallel edges. Deterministic for a fixed RNG state.
pub fn random_regular<R: Rng>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    if n * d % 2 != 0 {
        return Err(Error::InvalidParameter(
            "random_regular needs n*d even".into(),
        ));
    }
    if d >= n {
        return Err(Error::InvalidParameter(
            "random_regular needs d < n".into(),
        ));
    }
    const MAX_ATTEMPTS: usize = 100_000;
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    for _ in 0..MAX_ATTEMPTS {
        stubs.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * d / 2);
        let mut ok = true;
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                ok = false;
                break;
            }
            edges.push((u.min(v), u.max(v)));
        }
        if !ok {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return Graph::from_edges(n, &edges, Some(d));
    }
    Err(Error::InvalidParameter(format!(
        "random_regular({n},{d}): no simple pairing found"
    )))
}

/// Disjoint union; the second graph's indices are shifted by g1.n().
pub fn disjoint_union(g1: &Graph, g2: &Graph) -> Graph {
    let shift = g1.n();
    let mut edges = g1.edges();
    edges.extend(g2.edges().iter().map(|&(u, v)| (u + shift, v + shift)));
    Graph::from_edges(g1.n() + g2.n(), &edges, Some(g1.d().max(g2.d()))).expect("union of valid graphs")
}

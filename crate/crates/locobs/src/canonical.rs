//! Canonical forms for rooted colored balls, star and cherry types, and the
//! forgetful / truncation maps between them.
//!
//! Canonicalization works by BFS layering from the root, iterated refinement
//! by (layer, color, neighbour signatures), and exhaustive permutation inside
//! the residual cells, choosing the lexicographically least encoding. Balls
//! have at most 1+d+...+d^r vertices, so residual cells stay tiny at desk
//! scale; correctness is checked against a brute-force permutation oracle.

use crate::error::{Error, Result};
use crate::graph::{Coloring, Graph};
use crate::stats::{Distribution, StatKind, Universe};
use crate::Rat;
use num_bigint::BigInt;
use std::collections::VecDeque;
use std::fmt;

/// Default cap on the number of vertices in a ball being canonicalized.
pub const DEFAULT_BALL_CAP: usize = 64;

// Guard on the number of candidate labelings tried inside residual cells.
const MAX_LABELINGS: u64 = 1 << 21;

/// A rooted colored graph of bounded radius. Vertex 0 is the root; colors
/// run 1..=k; edges are sorted pairs (u,v) with u < v.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedColoredGraph {
    pub k: usize,
    pub colors: Vec<u32>,
    pub edges: Vec<(usize, usize)>,
    pub radius: usize,
}

impl RootedColoredGraph {
    pub fn new(k: usize, colors: Vec<u32>, mut edges: Vec<(usize, usize)>, radius: usize) -> Result<Self> {
        let m = colors.len();
        if m == 0 {
            return Err(Error::InvalidGraph("rooted graph needs a root vertex".into()));
        }
        for &c in &colors {
            if c == 0 || c as usize > k {
                return Err(Error::InvalidColoring(format!("color {c} outside 1..={k}")));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        for &(u, v) in &edges {
            if u >= v || v >= m {
                return Err(Error::InvalidGraph(format!("bad edge ({u},{v}) in rooted graph")));
            }
        }
        let g = RootedColoredGraph { k, colors, edges, radius };
        let dist = g.dist_from(0);
        if dist.iter().any(|&d| d == usize::MAX || d > radius) {
            return Err(Error::InvalidGraph(
                "some vertex lies outside the declared radius of the root".into(),
            ));
        }
        Ok(g)
    }

    pub fn m(&self) -> usize {
        self.colors.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn dist_from(&self, v: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut dist = vec![usize::MAX; self.m()];
        let mut q = VecDeque::new();
        dist[v] = 0;
        q.push_back(v);
        while let Some(u) = q.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    }

    /// Induced sub-ball of given radius around `v`, re-rooted at `v`.
    pub fn sub_ball(&self, v: usize, radius: usize) -> RootedColoredGraph {
        let adj = self.adjacency();
        let mut dist = vec![usize::MAX; self.m()];
        let mut order = vec![v];
        let mut q = VecDeque::new();
        dist[v] = 0;
        q.push_back(v);
        while let Some(u) = q.pop_front() {
            if dist[u] == radius {
                continue;
            }
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    order.push(w);
                    q.push_back(w);
                }
            }
        }
        let mut local = vec![usize::MAX; self.m()];
        for (i, &u) in order.iter().enumerate() {
            local[u] = i;
        }
        let mut edges = Vec::new();
        for &(a, b) in &self.edges {
            if local[a] != usize::MAX && local[b] != usize::MAX {
                let (x, y) = (local[a], local[b]);
                edges.push((x.min(y), x.max(y)));
            }
        }
        edges.sort_unstable();
        let colors = order.iter().map(|&u| self.colors[u]).collect();
        RootedColoredGraph { k: self.k, colors, edges, radius }
    }
}

/// Canonical byte encoding of an isomorphism class of rooted colored balls.
///
/// Layout: k (u32 LE), radius (u16 LE), m (u16 LE), m canonical colors
/// (u32 LE each), then the edge bitmap of the canonical labeling (pair
/// (i,j), i<j, at bit i*m - i(i+1)/2 + j - i - 1, least significant bit
/// first within each byte). Stable across runs and platforms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallCode(Vec<u8>);

impl BallCode {
    fn encode(k: usize, radius: usize, colors: &[u32], edges: &[(usize, usize)]) -> BallCode {
        let m = colors.len();
        let mut bytes = Vec::with_capacity(8 + 4 * m + pair_bytes(m));
        bytes.extend_from_slice(&(k as u32).to_le_bytes());
        bytes.extend_from_slice(&(radius as u16).to_le_bytes());
        bytes.extend_from_slice(&(m as u16).to_le_bytes());
        for &c in colors {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
        let mut bitmap = vec![0u8; pair_bytes(m)];
        for &(i, j) in edges {
            let idx = pair_index(m, i, j);
            bitmap[idx / 8] |= 1 << (idx % 8);
        }
        bytes.extend_from_slice(&bitmap);
        BallCode(bytes)
    }

    pub fn k(&self) -> usize {
        u32::from_le_bytes(self.0[0..4].try_into().unwrap()) as usize
    }

    pub fn radius(&self) -> usize {
        u16::from_le_bytes(self.0[4..6].try_into().unwrap()) as usize
    }

    pub fn m(&self) -> usize {
        u16::from_le_bytes(self.0[6..8].try_into().unwrap()) as usize
    }

    /// Root color of the encoded ball.
    pub fn root_color(&self) -> u32 {
        u32::from_le_bytes(self.0[8..12].try_into().unwrap())
    }

    pub fn decode(&self) -> RootedColoredGraph {
        let m = self.m();
        let mut colors = Vec::with_capacity(m);
        for i in 0..m {
            let off = 8 + 4 * i;
            colors.push(u32::from_le_bytes(self.0[off..off + 4].try_into().unwrap()));
        }
        let bitmap = &self.0[8 + 4 * m..];
        let mut edges = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                let idx = pair_index(m, i, j);
                if bitmap[idx / 8] & (1 << (idx % 8)) != 0 {
                    edges.push((i, j));
                }
            }
        }
        RootedColoredGraph { k: self.k(), colors, edges, radius: self.radius() }
    }

    pub fn has_distinct_colors(&self) -> bool {
        let mut colors: Vec<u32> = self.decode().colors;
        colors.sort_unstable();
        colors.windows(2).all(|w| w[0] != w[1])
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<BallCode> {
        if s.len() % 2 != 0 {
            return Err(Error::Parse("odd-length hex ball code".into()));
        }
        let bytes: Result<Vec<u8>> = (0..s.len() / 2)
            .map(|i| {
                u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
                    .map_err(|_| Error::Parse(format!("bad hex in ball code: {s}")))
            })
            .collect();
        let bytes = bytes?;
        if bytes.len() < 8 {
            return Err(Error::Parse("ball code too short".into()));
        }
        let code = BallCode(bytes);
        let m = code.m();
        if code.0.len() != 8 + 4 * m + pair_bytes(m) {
            return Err(Error::Parse("ball code length inconsistent with header".into()));
        }
        Ok(code)
    }
}

impl fmt::Display for BallCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

fn pair_bytes(m: usize) -> usize {
    (m * (m.saturating_sub(1)) / 2 + 7) / 8
}

fn pair_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * m - i * (i + 1) / 2 + j - i - 1
}

/// Canonical form of a rooted colored graph, with the default size cap.
pub fn canonical_form(g: &RootedColoredGraph) -> Result<BallCode> {
    canonical_form_capped(g, DEFAULT_BALL_CAP)
}

/// Canonical form with an explicit vertex-count cap. Exceeding the cap is
/// an error, never a silent truncation.
pub fn canonical_form_capped(g: &RootedColoredGraph, cap: usize) -> Result<BallCode> {
    let m = g.m();
    if m > cap {
        return Err(Error::CapExceeded(format!(
            "ball has {m} vertices, cap is {cap}"
        )));
    }
    let adj = g.adjacency();
    let dist = g.dist_from(0);

    // Iterated refinement: start from (distance, color), then refine by the
    // sorted multiset of neighbour classes until stable.
    let mut class = assign_classes(&(0..m).map(|v| (dist[v], g.colors[v])).collect::<Vec<_>>());
    loop {
        let keys: Vec<(usize, Vec<usize>)> = (0..m)
            .map(|v| {
                let mut sig: Vec<usize> = adj[v].iter().map(|&w| class[w]).collect();
                sig.sort_unstable();
                (class[v], sig)
            })
            .collect();
        let new_class = assign_classes(&keys);
        if new_class == class {
            break;
        }
        class = new_class;
    }

    // Cells in class order; the root's class is first since distance leads
    // the initial key and refinement preserves relative order.
    let num_classes = class.iter().max().unwrap() + 1;
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for v in 0..m {
        cells[class[v]].push(v);
    }

    let mut total: u64 = 1;
    for cell in &cells {
        total = total.saturating_mul(factorial(cell.len()));
        if total > MAX_LABELINGS {
            return Err(Error::CapExceeded(format!(
                "too many candidate labelings ({} cells up to size {})",
                cells.len(),
                cells.iter().map(Vec::len).max().unwrap()
            )));
        }
    }

    let cell_perms: Vec<Vec<Vec<usize>>> = cells.iter().map(|c| permutations(c)).collect();
    let mut best: Option<(Vec<u32>, Vec<(usize, usize)>)> = None;
    let mut counters = vec![0usize; cell_perms.len()];
    loop {
        let mut order = Vec::with_capacity(m);
        for (ci, perms) in cell_perms.iter().enumerate() {
            order.extend_from_slice(&perms[counters[ci]]);
        }
        let mut label = vec![0usize; m];
        for (new, &old) in order.iter().enumerate() {
            label[old] = new;
        }
        let colors: Vec<u32> = order.iter().map(|&v| g.colors[v]).collect();
        let mut edges: Vec<(usize, usize)> = g
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (label[u], label[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        let candidate = (colors, edges);
        if best.as_ref().map_or(true, |b| candidate < *b) {
            best = Some(candidate);
        }
        // advance the mixed-radix counter over cell permutations
        let mut i = 0;
        loop {
            if i == counters.len() {
                let (colors, edges) = best.unwrap();
                return Ok(BallCode::encode(g.k, g.radius, &colors, &edges));
            }
            counters[i] += 1;
            if counters[i] < cell_perms[i].len() {
                break;
            }
            counters[i] = 0;
            i += 1;
        }
    }
}

fn assign_classes<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).unwrap())
        .collect()
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product::<u64>().max(1)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// The colored radius-r ball type of `v`: canonical form of the rooted,
/// induced, colored radius-r neighbourhood.
pub fn ball_type(g: &Graph, f: &Coloring, v: usize, r: usize) -> Result<BallCode> {
    ball_type_capped(g, f, v, r, DEFAULT_BALL_CAP)
}

pub fn ball_type_capped(g: &Graph, f: &Coloring, v: usize, r: usize, cap: usize) -> Result<BallCode> {
    let ball = g.ball(v, r);
    let colors: Vec<u32> = ball.vertices.iter().map(|&u| f.color(u)).collect();
    let rooted = RootedColoredGraph::new(f.k, colors, ball.edges.clone(), r)?;
    canonical_form_capped(&rooted, cap)
}

/// Canonical code of the induced radius-`radius` sub-ball around vertex `v`
/// of a rooted colored graph.
pub fn sub_ball_code(g: &RootedColoredGraph, v: usize, radius: usize) -> Result<BallCode> {
    canonical_form(&g.sub_ball(v, radius))
}

/// Truncation to a smaller radius; representative-independent.
pub fn truncate_ball(b: &BallCode, radius: usize) -> Result<BallCode> {
    if radius > b.radius() {
        return Err(Error::RadiusMismatch(format!(
            "cannot truncate radius-{} code to radius {radius}",
            b.radius()
        )));
    }
    sub_ball_code(&b.decode(), 0, radius)
}

/// First-coordinate projection on product colors [k1] x [k2], where the
/// pairing is color = (c1 - 1) * k2 + c2.
pub fn forget_aux_color(b: &BallCode, k1: usize, k2: usize) -> Result<BallCode> {
    if b.k() != k1 * k2 {
        return Err(Error::InvalidParameter(format!(
            "code has {} colors, which is not {k1}*{k2}",
            b.k()
        )));
    }
    let mut g = b.decode();
    for c in &mut g.colors {
        *c = (*c - 1) / k2 as u32 + 1;
    }
    g.k = k1;
    canonical_form(&g)
}

/// Rooted colored star: root color plus per-color leaf counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StarType {
    pub root_color: u32,
    pub leaf_counts: Vec<u32>,
}

impl StarType {
    pub fn new(root_color: u32, leaf_counts: Vec<u32>) -> StarType {
        StarType { root_color, leaf_counts }
    }

    pub fn k(&self) -> usize {
        self.leaf_counts.len()
    }

    pub fn deg(&self) -> u32 {
        self.leaf_counts.iter().sum()
    }

    pub fn leaf_count(&self, color: u32) -> u32 {
        self.leaf_counts[color as usize - 1]
    }
}

impl fmt::Display for StarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<String> = self.leaf_counts.iter().map(|n| n.to_string()).collect();
        write!(f, "{}:({})", self.root_color, counts.join(","))
    }
}

/// The star of `v`: root color f(v) and the color counts of its neighbours.
pub fn star_of(g: &Graph, f: &Coloring, v: usize) -> StarType {
    let mut counts = vec![0u32; f.k];
    for &y in g.neighbors(v) {
        counts[f.color(y) as usize - 1] += 1;
    }
    StarType::new(f.color(v), counts)
}

/// Forgets everything in a radius-1 ball except the root color and the
/// multiset of neighbour colors (drops edges among neighbours).
pub fn project_star(b: &BallCode) -> Result<StarType> {
    if b.radius() != 1 {
        return Err(Error::RadiusMismatch(format!(
            "project_star needs a radius-1 code, got radius {}",
            b.radius()
        )));
    }
    let g = b.decode();
    let adj = g.adjacency();
    let mut counts = vec![0u32; g.k];
    for &v in &adj[0] {
        counts[g.colors[v] as usize - 1] += 1;
    }
    Ok(StarType::new(g.colors[0], counts))
}

/// All star types over degree bound d and k colors. Their number is
/// k * C(k+d, d).
pub fn all_stars(d: usize, k: usize) -> Vec<StarType> {
    let mut out = Vec::new();
    let mut counts = vec![0u32; k];
    fn rec(out: &mut Vec<StarType>, counts: &mut Vec<u32>, pos: usize, left: usize, k: usize) {
        if pos == k {
            for root in 1..=k as u32 {
                out.push(StarType::new(root, counts.clone()));
            }
            return;
        }
        for c in 0..=left {
            counts[pos] = c as u32;
            rec(out, counts, pos + 1, left - c, k);
        }
        counts[pos] = 0;
    }
    rec(&mut out, &mut counts, 0, d, k);
    out.sort();
    out
}

/// Cherry outcome: a rooted colored point, edge, or two-star with unordered
/// leaf pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CherryType {
    Point(u32),
    Edge { root: u32, leaf: u32 },
    TwoStar { root: u32, leaves: (u32, u32) },
}

impl CherryType {
    pub fn two_star(root: u32, a: u32, b: u32) -> CherryType {
        CherryType::TwoStar { root, leaves: (a.min(b), a.max(b)) }
    }

    pub fn root_color(&self) -> u32 {
        match *self {
            CherryType::Point(c) => c,
            CherryType::Edge { root, .. } => root,
            CherryType::TwoStar { root, .. } => root,
        }
    }
}

impl fmt::Display for CherryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CherryType::Point(c) => write!(f, "P({c})"),
            CherryType::Edge { root, leaf } => write!(f, "E({root}|{leaf})"),
            CherryType::TwoStar { root, leaves } => {
                write!(f, "T({root}|{{{},{}}})", leaves.0, leaves.1)
            }
        }
    }
}

/// The cherry distribution of a single star: a point mass in degrees 0 and
/// 1, and the uniform unordered leaf pair in degree >= 2.
pub fn theta(a: &StarType, d: usize) -> Distribution {
    let universe = Universe { d, k: a.k(), kind: StatKind::Chi };
    let deg = a.deg();
    let mut dist = Distribution::empty(universe);
    match deg {
        0 => dist.add_mass(crate::stats::Atom::Cherry(CherryType::Point(a.root_color)), Rat::from_integer(1.into())),
        1 => {
            let leaf = (1..=a.k() as u32).find(|&c| a.leaf_count(c) > 0).unwrap();
            dist.add_mass(
                crate::stats::Atom::Cherry(CherryType::Edge { root: a.root_color, leaf }),
                Rat::from_integer(1.into()),
            );
        }
        _ => {
            let pairs_total = BigInt::from(deg as u64 * (deg as u64 - 1) / 2);
            for c1 in 1..=a.k() as u32 {
                let n1 = a.leaf_count(c1) as u64;
                if n1 == 0 {
                    continue;
                }
                // same-color pair
                if n1 >= 2 {
                    dist.add_mass(
                        crate::stats::Atom::Cherry(CherryType::two_star(a.root_color, c1, c1)),
                        Rat::new(BigInt::from(n1 * (n1 - 1) / 2), pairs_total.clone()),
                    );
                }
                for c2 in (c1 + 1)..=a.k() as u32 {
                    let n2 = a.leaf_count(c2) as u64;
                    if n2 == 0 {
                        continue;
                    }
                    dist.add_mass(
                        crate::stats::Atom::Cherry(CherryType::two_star(a.root_color, c1, c2)),
                        Rat::new(BigInt::from(n1 * n2), pairs_total.clone()),
                    );
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, star};
    use crate::stats::Atom;

    /// Brute-force rooted colored isomorphism: search over all bijections
    /// fixing the root.
    fn brute_force_iso(a: &RootedColoredGraph, b: &RootedColoredGraph) -> bool {
        if a.m() != b.m() || a.k != b.k {
            return false;
        }
        let m = a.m();
        if m == 0 {
            return true;
        }
        let rest: Vec<usize> = (1..m).collect();
        for perm in permutations(&rest) {
            // map: a-vertex i -> b-vertex map[i], root fixed
            let mut map = vec![0usize; m];
            for (i, &p) in perm.iter().enumerate() {
                map[i + 1] = p;
            }
            if (0..m).any(|v| a.colors[v] != b.colors[map[v]]) {
                continue;
            }
            let mut mapped: Vec<(usize, usize)> = a
                .edges
                .iter()
                .map(|&(u, v)| {
                    let (x, y) = (map[u], map[v]);
                    (x.min(y), x.max(y))
                })
                .collect();
            mapped.sort_unstable();
            if mapped == b.edges {
                return true;
            }
        }
        false
    }

    fn all_rooted_graphs(m: usize) -> Vec<RootedColoredGraph> {
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|u| ((u + 1)..m).map(move |v| (u, v)))
            .collect();
        let mut out = Vec::new();
        for mask in 0..(1u32 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e)
                .collect();
            if let Ok(g) = RootedColoredGraph::new(1, vec![1; m], edges, 3) {
                out.push(g);
            }
        }
        out
    }

    #[test]
    fn code_equality_matches_brute_force_iso() {
        for m in 1..=4 {
            let graphs = all_rooted_graphs(m);
            let codes: Vec<BallCode> =
                graphs.iter().map(|g| canonical_form(g).unwrap()).collect();
            for i in 0..graphs.len() {
                for j in i..graphs.len() {
                    let iso = brute_force_iso(&graphs[i], &graphs[j]);
                    assert_eq!(
                        codes[i] == codes[j],
                        iso,
                        "iso/code mismatch on {:?} vs {:?}",
                        graphs[i],
                        graphs[j]
                    );
                }
            }
        }
    }

    #[test]
    fn relabeled_path_same_code() {
        // rooted colored path 0-1-2 and the same path with non-root
        // vertices swapped in the edge list
        let a = RootedColoredGraph::new(2, vec![1, 2, 1], vec![(0, 1), (1, 2)], 2).unwrap();
        let b = RootedColoredGraph::new(2, vec![1, 1, 2], vec![(0, 2), (1, 2)], 2).unwrap();
        assert_eq!(canonical_form(&a).unwrap(), canonical_form(&b).unwrap());
    }

    #[test]
    fn root_color_distinguishes() {
        let a = RootedColoredGraph::new(2, vec![1, 2], vec![(0, 1)], 1).unwrap();
        let b = RootedColoredGraph::new(2, vec![2, 1], vec![(0, 1)], 1).unwrap();
        assert_ne!(canonical_form(&a).unwrap(), canonical_form(&b).unwrap());
    }

    #[test]
    fn code_roundtrips_through_hex_and_decode() {
        let g = RootedColoredGraph::new(3, vec![2, 1, 3, 1], vec![(0, 1), (0, 2), (2, 3)], 2).unwrap();
        let code = canonical_form(&g).unwrap();
        let back = BallCode::from_hex(&code.to_hex()).unwrap();
        assert_eq!(code, back);
        let decoded = back.decode();
        assert_eq!(canonical_form(&decoded).unwrap(), code);
        assert_eq!(code.root_color(), 2);
    }

    #[test]
    fn ball_type_radius_zero() {
        let c3 = cycle(3).unwrap();
        let f = Coloring::new(2, vec![2, 1, 1]).unwrap();
        let b = ball_type(&c3, &f, 0, 0).unwrap();
        assert_eq!(b.m(), 1);
        assert_eq!(b.root_color(), 2);
    }

    #[test]
    fn ball_type_vertex_transitive_alternating_cycle() {
        let c8 = cycle(8).unwrap();
        let colors: Vec<u32> = (0..8).map(|i| 1 + (i % 2) as u32).collect();
        let f = Coloring::new(2, colors).unwrap();
        let codes: Vec<BallCode> = (0..8).step_by(2).map(|v| ball_type(&c8, &f, v, 2).unwrap()).collect();
        assert!(codes.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn project_star_forgets_leaf_edges() {
        let triangle = RootedColoredGraph::new(2, vec![1, 2, 2], vec![(0, 1), (0, 2), (1, 2)], 1).unwrap();
        let two_path = RootedColoredGraph::new(2, vec![1, 2, 2], vec![(0, 1), (0, 2)], 1).unwrap();
        let ct = canonical_form(&triangle).unwrap();
        let cp = canonical_form(&two_path).unwrap();
        assert_ne!(ct, cp);
        assert_eq!(project_star(&ct).unwrap(), project_star(&cp).unwrap());
        assert_eq!(project_star(&ct).unwrap(), StarType::new(1, vec![0, 2]));
    }

    #[test]
    fn project_star_matches_star_of_exhaustively() {
        // d = 3, k = 2: every vertex of a few small graphs
        let graphs = vec![cycle(5).unwrap(), star(3).unwrap(), crate::graph::complete(4).unwrap()];
        for g in &graphs {
            for mask in 0..(1u32 << g.n()) {
                let colors: Vec<u32> = (0..g.n()).map(|v| 1 + ((mask >> v) & 1)).collect();
                let f = Coloring::new(2, colors).unwrap();
                for v in 0..g.n() {
                    let b = ball_type(g, &f, v, 1).unwrap();
                    assert_eq!(project_star(&b).unwrap(), star_of(g, &f, v));
                }
            }
        }
    }

    #[test]
    fn truncate_identity_and_zero() {
        let c6 = cycle(6).unwrap();
        let f = Coloring::new(3, vec![1, 2, 3, 1, 2, 3]).unwrap();
        let b = ball_type(&c6, &f, 1, 2).unwrap();
        assert_eq!(truncate_ball(&b, 2).unwrap(), b);
        let b0 = truncate_ball(&b, 0).unwrap();
        assert_eq!(b0.m(), 1);
        assert_eq!(b0.root_color(), 2);
        assert!(truncate_ball(&b, 3).is_err());
    }

    #[test]
    fn truncate_matches_recompute_from_graph() {
        let c8 = cycle(8).unwrap();
        let colors: Vec<u32> = (0..8).map(|i| 1 + (i % 4) as u32).collect();
        let f = Coloring::new(4, colors).unwrap();
        for v in 0..8 {
            let b3 = ball_type(&c8, &f, v, 3).unwrap();
            assert_eq!(truncate_ball(&b3, 1).unwrap(), ball_type(&c8, &f, v, 1).unwrap());
        }
    }

    #[test]
    fn truncate_composes() {
        let c8 = cycle(8).unwrap();
        let colors: Vec<u32> = (0..8).map(|i| 1 + (i % 3) as u32).collect();
        let f = Coloring::new(3, colors).unwrap();
        let b = ball_type(&c8, &f, 0, 3).unwrap();
        let via_two = truncate_ball(&truncate_ball(&b, 2).unwrap(), 1).unwrap();
        assert_eq!(via_two, truncate_ball(&b, 1).unwrap());
    }

    #[test]
    fn forget_aux_identity_when_k2_is_one() {
        let g = RootedColoredGraph::new(3, vec![1, 3, 2], vec![(0, 1), (0, 2)], 1).unwrap();
        let b = canonical_form(&g).unwrap();
        assert_eq!(forget_aux_color(&b, 3, 1).unwrap(), b);
    }

    #[test]
    fn forget_aux_edge_example() {
        // colors over [1] x [2]: (1,a) = 1, (1,b) = 2
        let g = RootedColoredGraph::new(2, vec![1, 2], vec![(0, 1)], 1).unwrap();
        let b = canonical_form(&g).unwrap();
        let projected = forget_aux_color(&b, 1, 2).unwrap();
        let expected = canonical_form(
            &RootedColoredGraph::new(1, vec![1, 1], vec![(0, 1)], 1).unwrap(),
        )
        .unwrap();
        assert_eq!(projected, expected);
    }

    #[test]
    fn forget_aux_commutes_with_truncate() {
        let c6 = cycle(6).unwrap();
        // product coloring of k1=2 and k2=3
        let colors: Vec<u32> = (0..6)
            .map(|i| {
                let c1 = (i % 2) as u32;
                let c2 = (i % 3) as u32;
                c1 * 3 + c2 + 1
            })
            .collect();
        let f = Coloring::new(6, colors).unwrap();
        for v in 0..6 {
            let b = ball_type(&c6, &f, v, 2).unwrap();
            let a = truncate_ball(&forget_aux_color(&b, 2, 3).unwrap(), 1).unwrap();
            let b2 = forget_aux_color(&truncate_ball(&b, 1).unwrap(), 2, 3).unwrap();
            assert_eq!(a, b2);
        }
    }

    #[test]
    fn distinct_colors_check() {
        let one = RootedColoredGraph::new(2, vec![1], vec![], 0).unwrap();
        assert!(canonical_form(&one).unwrap().has_distinct_colors());
        let edge = RootedColoredGraph::new(1, vec![1, 1], vec![(0, 1)], 1).unwrap();
        assert!(!canonical_form(&edge).unwrap().has_distinct_colors());
    }

    #[test]
    fn star_count_identity() {
        // |S_{d,k}| = k * C(k+d, d)
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
        }
        for d in 0..=4 {
            for k in 1..=3usize {
                let stars = all_stars(d, k);
                assert_eq!(stars.len() as u64, k as u64 * binom((k + d) as u64, d as u64));
                let mut dedup = stars.clone();
                dedup.dedup();
                assert_eq!(dedup.len(), stars.len());
            }
        }
    }

    #[test]
    fn theta_point_and_edge() {
        let s = StarType::new(2, vec![0, 0]);
        let t = theta(&s, 3);
        assert_eq!(t.mass(&Atom::Cherry(CherryType::Point(2))), Rat::from_integer(1.into()));
        let s = StarType::new(1, vec![0, 1]);
        let t = theta(&s, 3);
        assert_eq!(
            t.mass(&Atom::Cherry(CherryType::Edge { root: 1, leaf: 2 })),
            Rat::from_integer(1.into())
        );
    }

    #[test]
    fn theta_mixed_leaves() {
        // (1; n_1=1, n_2=2): three unordered pairs, two mixed, one pure
        let s = StarType::new(1, vec![1, 2]);
        let t = theta(&s, 3);
        assert_eq!(
            t.mass(&Atom::Cherry(CherryType::two_star(1, 1, 2))),
            Rat::new(2.into(), 3.into())
        );
        assert_eq!(
            t.mass(&Atom::Cherry(CherryType::two_star(1, 2, 2))),
            Rat::new(1.into(), 3.into())
        );
        assert!(t.total_is_one());
    }

    #[test]
    fn cherry_display_forms() {
        assert_eq!(CherryType::Point(3).to_string(), "P(3)");
        assert_eq!(CherryType::Edge { root: 1, leaf: 2 }.to_string(), "E(1|2)");
        assert_eq!(CherryType::two_star(1, 3, 2).to_string(), "T(1|{2,3})");
        assert_eq!(StarType::new(1, vec![0, 2]).to_string(), "1:(0,2)");
    }

    #[test]
    fn cap_is_enforced() {
        let c8 = cycle(8).unwrap();
        let f = Coloring::constant(1, 8);
        assert!(ball_type_capped(&c8, &f, 0, 4, 6).is_err());
    }
}

//! Executable consistency machinery: local-model consistency checks, walk
//! lifting, closed-walk comparison, ball reconstruction, cherry-consistency
//! and the injection argument. All "almost everywhere" statements become
//! exact finite set computations; no tolerances exist in this module.

use crate::canonical::{self, BallCode, CherryType, RootedColoredGraph, StarType};
use crate::error::{Error, Result};
use crate::graph::{Coloring, Graph, VertexSet};
use crate::search::verify_separation;
use crate::stats::{self, Atom};
use crate::Rat;
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

/// Per-vertex assignment of proposed local models: either radius-r ball
/// codes with all-distinct colors, or proposed stars.
#[derive(Debug, Clone)]
pub enum ModelAssignment {
    Balls { r: usize, k: usize, codes: Vec<BallCode> },
    Stars { k: usize, stars: Vec<StarType> },
}

impl ModelAssignment {
    pub fn balls(r: usize, k: usize, codes: Vec<BallCode>) -> Result<Self> {
        for (x, code) in codes.iter().enumerate() {
            if code.radius() != r || code.k() != k {
                return Err(Error::PreconditionViolated(format!(
                    "model at vertex {x} has (k,r)=({},{}), expected ({k},{r})",
                    code.k(),
                    code.radius()
                )));
            }
            if !code.has_distinct_colors() {
                return Err(Error::PreconditionViolated(format!(
                    "model at vertex {x} has repeated colors"
                )));
            }
        }
        Ok(ModelAssignment::Balls { r, k, codes })
    }

    pub fn stars(k: usize, stars: Vec<StarType>) -> Result<Self> {
        for (x, s) in stars.iter().enumerate() {
            if s.k() != k {
                return Err(Error::PreconditionViolated(format!(
                    "star model at vertex {x} uses {} colors, expected {k}",
                    s.k()
                )));
            }
        }
        Ok(ModelAssignment::Stars { k, stars })
    }

    pub fn len(&self) -> usize {
        match self {
            ModelAssignment::Balls { codes, .. } => codes.len(),
            ModelAssignment::Stars { stars, .. } => stars.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Proposed root color at x.
    pub fn root_color(&self, x: usize) -> u32 {
        match self {
            ModelAssignment::Balls { codes, .. } => codes[x].root_color(),
            ModelAssignment::Stars { stars, .. } => stars[x].root_color,
        }
    }

    /// The root-color map as a coloring.
    pub fn root_coloring(&self) -> Result<Coloring> {
        let k = match self {
            ModelAssignment::Balls { k, .. } => *k,
            ModelAssignment::Stars { k, .. } => *k,
        };
        Coloring::new(k, (0..self.len()).map(|x| self.root_color(x)).collect())
    }
}

/// True radius-r ball model of a coloring that separates every radius-r
/// ball. Consistent at every vertex.
pub fn true_model(g: &Graph, coloring: &Coloring, r: usize) -> Result<ModelAssignment> {
    if !verify_separation(g, coloring, r) {
        return Err(Error::PreconditionViolated(
            "coloring does not separate every radius-r ball".into(),
        ));
    }
    let codes: Result<Vec<BallCode>> = (0..g.n())
        .map(|v| canonical::ball_type(g, coloring, v, r))
        .collect();
    ModelAssignment::balls(r, coloring.k, codes?)
}

/// True star assignment of a coloring.
pub fn true_star_model(g: &Graph, coloring: &Coloring) -> ModelAssignment {
    ModelAssignment::Stars {
        k: coloring.k,
        stars: (0..g.n()).map(|v| canonical::star_of(g, coloring, v)).collect(),
    }
}

fn expect_balls(m: &ModelAssignment) -> Result<(usize, usize, &[BallCode])> {
    match m {
        ModelAssignment::Balls { r, k, codes } => Ok((*r, *k, codes)),
        ModelAssignment::Stars { .. } => Err(Error::PreconditionViolated(
            "operation needs a ball model, got a star model".into(),
        )),
    }
}

fn expect_stars(m: &ModelAssignment) -> Result<(usize, &[StarType])> {
    match m {
        ModelAssignment::Stars { k, stars } => Ok((*k, stars)),
        ModelAssignment::Balls { .. } => Err(Error::PreconditionViolated(
            "operation needs a star model, got a ball model".into(),
        )),
    }
}

/// Consistency at x: a bijection from root neighbours of the model m(x) to
/// graph neighbours of x matching radius-(r-1) sub-ball types. Because all
/// model colors are distinct, the bijection is color-determined and unique.
/// Returned pairs are (model vertex, graph vertex).
pub fn is_consistent_at(
    g: &Graph,
    m: &ModelAssignment,
    x: usize,
) -> Result<(bool, Option<Vec<(usize, usize)>>)> {
    let (r, _, codes) = expect_balls(m)?;
    if r < 1 {
        return Err(Error::PreconditionViolated("consistency needs r >= 1".into()));
    }
    let model = codes[x].decode();
    let adj = model.adjacency();
    let root_neighbors = &adj[0];
    let graph_neighbors = g.neighbors(x);
    if root_neighbors.len() != graph_neighbors.len() {
        return Ok((false, None));
    }
    // the bijection must send a model neighbour of color c to a graph
    // neighbour whose model has root color c
    let mut by_color: BTreeMap<u32, usize> = BTreeMap::new();
    for &y in graph_neighbors {
        if by_color.insert(codes[y].root_color(), y).is_some() {
            return Ok((false, None)); // two neighbours propose the same root color
        }
    }
    let mut pairs = Vec::with_capacity(root_neighbors.len());
    for &v in root_neighbors {
        let y = match by_color.get(&model.colors[v]) {
            Some(&y) => y,
            None => return Ok((false, None)),
        };
        let model_side = canonical::sub_ball_code(&model, v, r - 1)?;
        let neighbour_side = canonical::truncate_ball(&codes[y], r - 1)?;
        if model_side != neighbour_side {
            return Ok((false, None));
        }
        pairs.push((v, y));
    }
    Ok((true, Some(pairs)))
}

/// Full consistency report: per-vertex flags, the defect set U and its
/// radius-r neighbourhood B_r(U).
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub consistent: Vec<bool>,
    pub bijections: Vec<Option<Vec<(usize, usize)>>>,
    pub defect: VertexSet,
    pub defect_ball: VertexSet,
}

impl ConsistencyReport {
    pub fn all_consistent(&self) -> bool {
        self.defect.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "defect": self.defect,
            "defect_ball": self.defect_ball,
            "bijections": self.bijections,
        })
    }
}

pub fn consistency_report(g: &Graph, m: &ModelAssignment) -> Result<ConsistencyReport> {
    let (r, _, _) = expect_balls(m)?;
    let mut consistent = Vec::with_capacity(g.n());
    let mut bijections = Vec::with_capacity(g.n());
    for x in 0..g.n() {
        let (ok, b) = is_consistent_at(g, m, x)?;
        consistent.push(ok);
        bijections.push(b);
    }
    let defect: VertexSet = (0..g.n()).filter(|&x| !consistent[x]).collect();
    let defect_ball = g.ball_of_set(&defect, r);
    Ok(ConsistencyReport { consistent, bijections, defect, defect_ball })
}

/// Shared machinery for lifting walks out of the model at `x`. Built only
/// after checking consistency on all of B_r(x).
pub struct LiftContext<'a> {
    r: usize,
    codes: &'a [BallCode],
    x: usize,
    model: RootedColoredGraph,
    model_adj: Vec<Vec<usize>>,
    /// consistency bijection at each vertex of B_r(x), keyed by graph vertex
    bijections: BTreeMap<usize, BTreeMap<usize, usize>>,
}

impl<'a> LiftContext<'a> {
    pub fn new(g: &'a Graph, m: &'a ModelAssignment, x: usize) -> Result<Self> {
        let (r, _, codes) = expect_balls(m)?;
        let mut bijections = BTreeMap::new();
        for &u in &g.ball_of_set(&[x], r) {
            let (ok, pairs) = is_consistent_at(g, m, u)?;
            if !ok {
                return Err(Error::PreconditionViolated(format!(
                    "model is not consistent at vertex {u} of B_r({x})"
                )));
            }
            bijections.insert(u, pairs.unwrap().into_iter().collect());
        }
        let model = codes[x].decode();
        let model_adj = model.adjacency();
        Ok(LiftContext { r, codes, x, model, model_adj, bijections })
    }

    pub fn model(&self) -> &RootedColoredGraph {
        &self.model
    }

    /// The unique color-matching isomorphism between the radius-`radius`
    /// sub-ball of `src` around `center` and the radius-`radius` ball of
    /// the root in the model of graph vertex `target`. Fails with an
    /// internal-contradiction error if the color map is not a bijection or
    /// does not preserve edges.
    fn color_iso(
        &self,
        src: &RootedColoredGraph,
        center: usize,
        target: usize,
        radius: usize,
    ) -> Result<BTreeMap<usize, usize>> {
        let dst = self.codes[target].decode();
        let src_ball = src.sub_ball(center, radius);
        let dst_ball = dst.sub_ball(0, radius);
        if src_ball.m() != dst_ball.m() {
            return Err(Error::InternalContradiction(format!(
                "sub-ball sizes differ at model vertex {center} vs model of {target}"
            )));
        }
        // indices back into src / dst: sub_ball orders vertices in BFS order,
        // so recompute the same orderings to translate
        let src_order = bfs_order(src, center, radius);
        let dst_order = bfs_order(&dst, 0, radius);
        let mut dst_by_color: BTreeMap<u32, usize> = BTreeMap::new();
        for &u in &dst_order {
            if dst_by_color.insert(dst.colors[u], u).is_some() {
                return Err(Error::InternalContradiction(
                    "repeated color inside a model ball".into(),
                ));
            }
        }
        let mut map = BTreeMap::new();
        for &s in &src_order {
            let &t = dst_by_color.get(&src.colors[s]).ok_or_else(|| {
                Error::InternalContradiction(format!(
                    "no color match for model vertex {s} in model of {target}"
                ))
            })?;
            map.insert(s, t);
        }
        // edge preservation both ways inside the two balls
        let src_set: BTreeSet<usize> = src_order.iter().copied().collect();
        let dst_set: BTreeSet<usize> = dst_order.iter().copied().collect();
        let dst_edges: BTreeSet<(usize, usize)> = dst
            .edges
            .iter()
            .filter(|(u, v)| dst_set.contains(u) && dst_set.contains(v))
            .copied()
            .collect();
        let mut mapped = BTreeSet::new();
        for &(u, v) in &src.edges {
            if src_set.contains(&u) && src_set.contains(&v) {
                let (a, b) = (map[&u], map[&v]);
                mapped.insert((a.min(b), a.max(b)));
            }
        }
        if mapped != dst_edges {
            return Err(Error::InternalContradiction(
                "color-matching map is not a graph isomorphism".into(),
            ));
        }
        Ok(map)
    }

    /// Lifts a model walk (vertex sequence in m(x), starting at the root)
    /// to the unique corresponding graph walk starting at x.
    pub fn lift(&self, model_walk: &[usize]) -> Result<Vec<usize>> {
        if model_walk.first() != Some(&0) {
            return Err(Error::PreconditionViolated(
                "model walk must start at the root".into(),
            ));
        }
        let t = model_walk.len() - 1;
        if t > self.r {
            return Err(Error::PreconditionViolated(format!(
                "walk length {t} exceeds model radius {}",
                self.r
            )));
        }
        for w in model_walk.windows(2) {
            if !self.model_adj[w[0]].contains(&w[1]) {
                return Err(Error::PreconditionViolated(
                    "model walk uses a non-edge".into(),
                ));
            }
        }
        let mut graph_walk = vec![self.x];
        for i in 1..=t {
            let prev_model = model_walk[i - 1];
            let prev_graph = graph_walk[i - 1];
            let kappa = self.color_iso(&self.model, prev_model, prev_graph, self.r - i + 1)?;
            let image = *kappa.get(&model_walk[i]).ok_or_else(|| {
                Error::InternalContradiction("next walk vertex escapes the sub-ball".into())
            })?;
            let b = &self.bijections[&prev_graph];
            let next = *b.get(&image).ok_or_else(|| {
                Error::InternalContradiction(
                    "mapped vertex is not a root neighbour in the neighbour model".into(),
                )
            })?;
            graph_walk.push(next);
        }
        Ok(graph_walk)
    }

    /// All model walks from the root of exact length t, in lexicographic order.
    pub fn model_walks(&self, t: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut walk = vec![0usize];
        fn rec(adj: &[Vec<usize>], walk: &mut Vec<usize>, left: usize, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(walk.clone());
                return;
            }
            let cur = *walk.last().unwrap();
            for &next in &adj[cur] {
                walk.push(next);
                rec(adj, walk, left - 1, out);
                walk.pop();
            }
        }
        rec(&self.model_adj, &mut walk, t, &mut out);
        out
    }
}

fn bfs_order(g: &RootedColoredGraph, start: usize, radius: usize) -> Vec<usize> {
    let adj = g.adjacency();
    let mut dist = vec![usize::MAX; g.m()];
    let mut order = vec![start];
    let mut q = std::collections::VecDeque::new();
    dist[start] = 0;
    q.push_back(start);
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
    order
}

/// One lifted walk with per-step sub-ball compatibility evidence: at step i
/// the codes of the radius-(r-i) sub-ball at the walk vertex in m(x) and of
/// the radius-(r-i) ball in the model of the lifted vertex coincide.
#[derive(Debug, Clone)]
pub struct LiftResult {
    pub model_walk: Vec<usize>,
    pub graph_walk: Vec<usize>,
    pub evidence: Vec<(BallCode, BallCode)>,
}

pub fn lift_walk(g: &Graph, m: &ModelAssignment, x: usize, model_walk: &[usize]) -> Result<LiftResult> {
    let ctx = LiftContext::new(g, m, x)?;
    let (r, _, codes) = expect_balls(m)?;
    let graph_walk = ctx.lift(model_walk)?;
    let mut evidence = Vec::new();
    for (i, (&v, &y)) in model_walk.iter().zip(&graph_walk).enumerate() {
        let a = canonical::sub_ball_code(ctx.model(), v, r - i)?;
        let b = canonical::truncate_ball(&codes[y], r - i)?;
        if a != b {
            return Err(Error::InternalContradiction(format!(
                "sub-ball evidence mismatch at step {i}"
            )));
        }
        evidence.push((a, b));
    }
    Ok(LiftResult { model_walk: model_walk.to_vec(), graph_walk, evidence })
}

/// Per-length closed-walk counts in the model at x versus in the graph at
/// x. The graph count never exceeds the model count when the consistency
/// precondition holds.
#[derive(Debug, Clone)]
pub struct WalkComparison {
    /// (length t, model |W_t^0(o)|, graph |W_t^0(x)|, equal) for t = 1..=t_max
    pub rows: Vec<(usize, BigUint, BigUint, bool)>,
}

impl WalkComparison {
    pub fn all_equal(&self) -> bool {
        self.rows.iter().all(|r| r.3)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self
            .rows
            .iter()
            .map(|(t, m, g, eq)| serde_json::json!({
                "t": t, "model": m.to_string(), "graph": g.to_string(), "equal": eq
            }))
            .collect::<Vec<_>>())
    }
}

fn closed_counts(adj: &[Vec<usize>], start: usize, t_max: usize) -> Vec<BigUint> {
    let n = adj.len();
    let mut w = vec![BigUint::zero(); n];
    w[start] = BigUint::from(1u32);
    let mut out = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        out.push(w[start].clone());
        if t == t_max {
            break;
        }
        let mut next = vec![BigUint::zero(); n];
        for y in 0..n {
            if w[y].is_zero() {
                continue;
            }
            for &z in &adj[y] {
                next[z] += &w[y];
            }
        }
        w = next;
    }
    out
}

pub fn closed_walk_comparison(g: &Graph, m: &ModelAssignment, x: usize, t_max: usize) -> Result<WalkComparison> {
    let (r, _, _) = expect_balls(m)?;
    if t_max > r {
        return Err(Error::PreconditionViolated(format!(
            "t_max {t_max} exceeds model radius {r}"
        )));
    }
    let ctx = LiftContext::new(g, m, x)?;
    let model_counts = closed_counts(&ctx.model_adj, 0, t_max);
    let graph_adj: Vec<Vec<usize>> = (0..g.n()).map(|v| g.neighbors(v).to_vec()).collect();
    let graph_counts = closed_counts(&graph_adj, x, t_max);
    let mut rows = Vec::new();
    for t in 1..=t_max {
        if graph_counts[t] > model_counts[t] {
            return Err(Error::InternalContradiction(format!(
                "graph closed-walk count exceeds model count at length {t}"
            )));
        }
        let eq = graph_counts[t] == model_counts[t];
        rows.push((t, model_counts[t].clone(), graph_counts[t].clone(), eq));
    }
    Ok(WalkComparison { rows })
}

/// Verified rooted colored isomorphism between the radius-(t-1) ball of the
/// model root and the radius-(t-1) ball of x under the root-color map.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// (model vertex within distance t of the root, its graph image)
    pub phi: Vec<(usize, usize)>,
    pub model_code: BallCode,
    pub graph_code: BallCode,
}

impl ReconstructionResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "phi": self.phi,
            "model_code": self.model_code.to_hex(),
            "graph_code": self.graph_code.to_hex(),
        })
    }
}

/// Rebuilds the radius-(t-1) ball around x from the model by lifting every
/// walk of length at most t, verifying well-definedness across alternative
/// walks, injectivity, surjectivity onto B_t(x), and edge preservation both
/// ways. Requires consistency on B_r(x), closed-walk equality up to r, and
/// strictly t < r/3.
pub fn reconstruct_ball(g: &Graph, m: &ModelAssignment, x: usize, t: usize) -> Result<ReconstructionResult> {
    let (r, k, _) = expect_balls(m)?;
    if t < 1 || 3 * t >= r {
        return Err(Error::PreconditionViolated(format!(
            "reconstruction needs 1 <= t < r/3 strictly (t={t}, r={r})"
        )));
    }
    let ctx = LiftContext::new(g, m, x)?;
    let cmp = closed_walk_comparison(g, m, x, r)?;
    if !cmp.all_equal() {
        return Err(Error::PreconditionViolated(format!(
            "closed-walk counts differ at x={x}; reconstruction not attempted"
        )));
    }

    // endpoint of every lift of every walk of length <= t, grouped by the
    // walk's model endpoint
    let mut phi: BTreeMap<usize, (usize, Vec<usize>)> = BTreeMap::new();
    for len in 0..=t {
        for walk in ctx.model_walks(len) {
            let lifted = ctx.lift(&walk)?;
            let v = *walk.last().unwrap();
            let y = *lifted.last().unwrap();
            match phi.get(&v) {
                None => {
                    phi.insert(v, (y, walk));
                }
                Some((y0, w0)) => {
                    if *y0 != y {
                        return Err(Error::InternalContradiction(format!(
                            "lift endpoint depends on the walk: {w0:?} -> {y0}, {walk:?} -> {y}"
                        )));
                    }
                }
            }
        }
    }
    let phi: BTreeMap<usize, usize> = phi.into_iter().map(|(v, (y, _))| (v, y)).collect();

    // injectivity
    let images: BTreeSet<usize> = phi.values().copied().collect();
    if images.len() != phi.len() {
        return Err(Error::InternalContradiction("phi is not injective".into()));
    }
    // surjectivity onto B_t(x)
    let ball_t: BTreeSet<usize> = g.ball_of_set(&[x], t).into_iter().collect();
    if images != ball_t {
        return Err(Error::InternalContradiction(
            "phi does not cover the radius-t ball of x".into(),
        ));
    }

    // edge preservation both ways on the radius-(t-1) balls
    let model = ctx.model();
    let model_dist = model.dist_from(0);
    let inner: BTreeSet<usize> = phi
        .keys()
        .copied()
        .filter(|&v| model_dist[v] + 1 <= t)
        .collect();
    for &(u, v) in &model.edges {
        if model_dist[u] < t && model_dist[v] < t {
            if !g.has_edge(phi[&u], phi[&v]) {
                return Err(Error::InternalContradiction(format!(
                    "model edge ({u},{v}) has no graph image"
                )));
            }
        }
    }
    let inverse: BTreeMap<usize, usize> = phi.iter().map(|(&v, &y)| (y, v)).collect();
    let graph_inner: Vec<usize> = g.ball_of_set(&[x], t - 1);
    for &y in &graph_inner {
        for &z in g.neighbors(y) {
            if y < z && graph_inner.contains(&z) {
                let (u, v) = (inverse[&y], inverse[&z]);
                let e = (u.min(v), u.max(v));
                if !model.edges.contains(&e) {
                    return Err(Error::InternalContradiction(format!(
                        "graph edge ({y},{z}) has no model preimage"
                    )));
                }
            }
        }
    }
    let _ = inner;

    // final check by canonical codes against the root-color map
    let s = m.root_coloring()?;
    let model_code = canonical::sub_ball_code(model, 0, t - 1)?;
    let graph_code = canonical::ball_type(g, &s, x, t - 1)?;
    if model_code != graph_code {
        return Err(Error::InternalContradiction(
            "reconstructed ball code differs from the graph ball code".into(),
        ));
    }
    let _ = k;
    Ok(ReconstructionResult {
        phi: phi.into_iter().collect(),
        model_code,
        graph_code,
    })
}

// ---- cherry side ----

/// Cherry-consistency of a star model at x: every cherry that can be
/// sampled at x is compatible with the proposed star m(x).
pub fn is_cherry_consistent_at(g: &Graph, m: &ModelAssignment, x: usize) -> Result<bool> {
    let (_, stars) = expect_stars(m)?;
    let star = &stars[x];
    let neighbors = g.neighbors(x);
    Ok(match neighbors.len() {
        0 => star.deg() == 0,
        1 => star.leaf_count(m.root_color(neighbors[0])) >= 1,
        deg => {
            let mut ok = true;
            'outer: for i in 0..deg {
                for j in (i + 1)..deg {
                    let (a, b) = (m.root_color(neighbors[i]), m.root_color(neighbors[j]));
                    let contained = if a == b {
                        star.leaf_count(a) >= 2
                    } else {
                        star.leaf_count(a) >= 1 && star.leaf_count(b) >= 1
                    };
                    if !contained {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            ok
        }
    })
}

pub fn cherry_defect_set(g: &Graph, m: &ModelAssignment) -> Result<VertexSet> {
    (0..g.n())
        .filter_map(|x| match is_cherry_consistent_at(g, m, x) {
            Ok(true) => None,
            Ok(false) => Some(Ok(x)),
            Err(e) => Some(Err(e)),
        })
        .collect()
}

/// Injection of actual neighbours into the leaves of the proposed star,
/// one leaf per neighbour with matching color.
#[derive(Debug, Clone)]
pub struct CherryInjection {
    /// (graph neighbour, color of its assigned leaf)
    pub assignments: Vec<(usize, u32)>,
    pub model_degree: u32,
    /// degrees equal, hence m(x) is the true star of x under the root-color map
    pub equality: bool,
}

pub fn cherry_injection(g: &Graph, m: &ModelAssignment, x: usize) -> Result<CherryInjection> {
    let (_, stars) = expect_stars(m)?;
    if !is_cherry_consistent_at(g, m, x)? {
        return Err(Error::PreconditionViolated(format!(
            "model is not cherry-consistent at {x}"
        )));
    }
    let neighbors = g.neighbors(x);
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    for &y in neighbors {
        if !seen.insert(m.root_color(y)) {
            return Err(Error::PreconditionViolated(format!(
                "two neighbours of {x} propose the same root color"
            )));
        }
    }
    let star = &stars[x];
    let mut assignments = Vec::with_capacity(neighbors.len());
    for &y in neighbors {
        let c = m.root_color(y);
        if star.leaf_count(c) < 1 {
            return Err(Error::InternalContradiction(format!(
                "cherry-consistency promised a {c}-leaf at {x} but none exists"
            )));
        }
        assignments.push((y, c));
    }
    let model_degree = star.deg();
    debug_assert!(neighbors.len() as u32 <= model_degree);
    let equality = neighbors.len() as u32 == model_degree;
    if equality {
        let rho = m.root_coloring()?;
        if *star != canonical::star_of(g, &rho, x) {
            return Err(Error::InternalContradiction(format!(
                "degree equality at {x} without star equality"
            )));
        }
    }
    Ok(CherryInjection { assignments, model_degree, equality })
}

/// Admissible cherry outcomes over a star alphabet: colors 1..=len index
/// the given stars.
pub fn admissible_cherries(alphabet: &[StarType]) -> BTreeSet<CherryType> {
    let idx = |c: u32| &alphabet[c as usize - 1];
    let mut out = BTreeSet::new();
    let n = alphabet.len() as u32;
    for a in 1..=n {
        if idx(a).deg() == 0 {
            out.insert(CherryType::Point(a));
        }
        for b in 1..=n {
            if idx(a).leaf_count(idx(b).root_color) >= 1 {
                out.insert(CherryType::Edge { root: a, leaf: b });
            }
            for c in b..=n {
                let (rb, rc) = (idx(b).root_color, idx(c).root_color);
                let contained = if rb == rc {
                    idx(a).leaf_count(rb) >= 2
                } else {
                    idx(a).leaf_count(rb) >= 1 && idx(a).leaf_count(rc) >= 1
                };
                if contained {
                    out.insert(CherryType::two_star(a, b, c));
                }
            }
        }
    }
    out
}

/// Encodes a star model as a coloring over its value alphabet and returns
/// (alphabet, coloring). Colors index the sorted distinct model values.
pub fn star_model_as_coloring(m: &ModelAssignment) -> Result<(Vec<StarType>, Coloring)> {
    let (_, stars) = expect_stars(m)?;
    let mut alphabet: Vec<StarType> = stars.to_vec();
    alphabet.sort();
    alphabet.dedup();
    let colors: Vec<u32> = stars
        .iter()
        .map(|s| alphabet.binary_search(s).unwrap() as u32 + 1)
        .collect();
    Ok((alphabet.clone(), Coloring::new(alphabet.len(), colors)?))
}

/// Mass that the cherry statistic of the star-valued coloring puts outside
/// the admissible set. Zero for true star assignments.
pub fn inadmissible_mass(g: &Graph, m: &ModelAssignment) -> Result<Rat> {
    let (alphabet, coloring) = star_model_as_coloring(m)?;
    let admissible = admissible_cherries(&alphabet);
    let dist = stats::chi(g, &coloring);
    let mut mass = Rat::zero();
    for (atom, p) in dist.atoms() {
        if let Atom::Cherry(ch) = atom {
            if !admissible.contains(ch) {
                mass += p.clone();
            }
        }
    }
    Ok(mass)
}

/// Average-degree audit of a star model against a true separated star model
/// on a reference graph.
#[derive(Debug, Clone)]
pub struct AuditReport {
    /// mean of deg(m(x)) over G
    pub mean_model_degree: Rat,
    /// mean degree of G
    pub mean_graph_degree: Rat,
    /// mean degree of the reference graph G'
    pub mean_reference_degree: Rat,
    /// E[deg(m(x))] recomputed from the root marginal of chi(G, m)
    pub root_marginal_degree: Rat,
    /// vertices that are cherry-consistent with pairwise distinct
    /// neighbour root colors
    pub good_set: VertexSet,
    /// good vertices with deg(m(x)) > deg_G(x)
    pub gap_support: VertexSet,
}

impl AuditReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean_model_degree": stats::rat_string(&self.mean_model_degree),
            "mean_graph_degree": stats::rat_string(&self.mean_graph_degree),
            "mean_reference_degree": stats::rat_string(&self.mean_reference_degree),
            "root_marginal_degree": stats::rat_string(&self.root_marginal_degree),
            "good_set": self.good_set,
            "gap_support": self.gap_support,
        })
    }
}

pub fn average_degree_audit(
    g: &Graph,
    g_ref: &Graph,
    m: &ModelAssignment,
    m_ref: &ModelAssignment,
) -> Result<AuditReport> {
    let (_, stars) = expect_stars(m)?;
    let (_, ref_stars) = expect_stars(m_ref)?;
    // m_ref must be a true separated star model on g_ref
    let rho_ref = m_ref.root_coloring()?;
    for x in 0..g_ref.n() {
        if ref_stars[x] != canonical::star_of(g_ref, &rho_ref, x) {
            return Err(Error::PreconditionViolated(format!(
                "reference model is not the true star assignment at {x}"
            )));
        }
        let mut colors: Vec<u32> = g_ref.neighbors(x).iter().map(|&y| rho_ref.color(y)).collect();
        colors.sort_unstable();
        if colors.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::PreconditionViolated(format!(
                "reference coloring does not separate the neighbours of {x}"
            )));
        }
    }

    let n = BigInt::from(g.n());
    let mean_model_degree = Rat::new(
        BigInt::from(stars.iter().map(|s| s.deg() as u64).sum::<u64>()),
        n.clone(),
    );
    let mean_graph_degree = Rat::new(
        BigInt::from((0..g.n()).map(|v| g.degree(v) as u64).sum::<u64>()),
        n,
    );
    let mean_reference_degree = Rat::new(
        BigInt::from((0..g_ref.n()).map(|v| g_ref.degree(v) as u64).sum::<u64>()),
        BigInt::from(g_ref.n()),
    );

    // deg(m(x)) is a function of the root color alone, so its expectation
    // is recoverable from the root marginal of the cherry statistic
    let (alphabet, coloring) = star_model_as_coloring(m)?;
    let dist = stats::chi(g, &coloring);
    let mut root_marginal_degree = Rat::zero();
    for (atom, p) in dist.atoms() {
        if let Atom::Cherry(ch) = atom {
            let star = &alphabet[ch.root_color() as usize - 1];
            root_marginal_degree += p.clone() * Rat::from_integer(star.deg().into());
        }
    }

    let mut good_set = Vec::new();
    let mut gap_support = Vec::new();
    for x in 0..g.n() {
        if !is_cherry_consistent_at(g, m, x)? {
            continue;
        }
        let mut colors: Vec<u32> = g.neighbors(x).iter().map(|&y| m.root_color(y)).collect();
        colors.sort_unstable();
        if colors.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        good_set.push(x);
        let inj = cherry_injection(g, m, x)?;
        if inj.model_degree as usize > g.degree(x) {
            gap_support.push(x);
        }
    }
    Ok(AuditReport {
        mean_model_degree,
        mean_graph_degree,
        mean_reference_degree,
        root_marginal_degree,
        good_set,
        gap_support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, random_regular, star};
    use crate::search::separated_coloring;
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn separated_model(g: &Graph, r: usize) -> (Coloring, ModelAssignment) {
        let (f, cert) = separated_coloring(g, r).unwrap();
        assert!(cert.verified);
        let m = true_model(g, &f, r).unwrap();
        (f, m)
    }

    #[test]
    fn true_model_is_consistent_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let graphs = vec![
            cycle(9).unwrap(),
            star(3).unwrap(),
            random_regular(14, 3, &mut rng).unwrap(),
        ];
        for g in &graphs {
            let (_, m) = separated_model(g, 2);
            let report = consistency_report(g, &m).unwrap();
            assert!(report.all_consistent(), "defects: {:?}", report.defect);
        }
    }

    #[test]
    fn true_model_distinct_codes_on_colored_cycle() {
        let c6 = cycle(6).unwrap();
        let f = Coloring::new(6, (1..=6).collect()).unwrap();
        let m = true_model(&c6, &f, 2).unwrap();
        if let ModelAssignment::Balls { codes, .. } = &m {
            let set: BTreeSet<_> = codes.iter().collect();
            assert_eq!(set.len(), 6);
        }
    }

    #[test]
    fn true_model_rejects_unseparated_coloring() {
        let c6 = cycle(6).unwrap();
        assert!(true_model(&c6, &Coloring::constant(1, 6), 2).is_err());
    }

    #[test]
    fn isolated_vertex_consistent_with_empty_bijection() {
        let g = Graph::parse("1 0").unwrap();
        let f = Coloring::constant(1, 1);
        let m = true_model(&g, &f, 1).unwrap();
        let (ok, b) = is_consistent_at(&g, &m, 0).unwrap();
        assert!(ok);
        assert!(b.unwrap().is_empty());
    }

    #[test]
    fn corrupted_model_detected_at_neighbours() {
        let c8 = cycle(8).unwrap();
        let (_, m) = separated_model(&c8, 2);
        let (r, k, mut codes) = match m {
            ModelAssignment::Balls { r, k, codes } => (r, k, codes),
            _ => unreachable!(),
        };
        // replace vertex 0's model by a degree-mismatched star-shaped code
        let fake = RootedColoredGraph::new(k, vec![codes[0].root_color(), 7, 8, 6], vec![(0, 1), (0, 2), (0, 3)], r)
            .unwrap();
        codes[0] = canonical::canonical_form(&fake).unwrap();
        let m = ModelAssignment::balls(r, k, codes).unwrap();
        let report = consistency_report(&c8, &m).unwrap();
        assert!(!report.consistent[1]);
        assert!(!report.consistent[7]);
        assert!(report.defect_ball.len() <= (1 + 2 + 4) * report.defect.len());
    }

    #[test]
    fn scrambled_model_defects_reported() {
        let c8 = cycle(8).unwrap();
        let (_, m) = separated_model(&c8, 2);
        if let ModelAssignment::Balls { r, k, codes } = m {
            // duplicate vertex 1's model onto vertex 0: neighbours of 1 now
            // see two candidates with the same proposed root color
            let mut scrambled = codes.clone();
            scrambled[0] = scrambled[1].clone();
            let m = ModelAssignment::balls(r, k, scrambled).unwrap();
            let report = consistency_report(&c8, &m).unwrap();
            assert!(!report.defect.is_empty());
            assert!(report.defect.contains(&1));
        }
    }

    #[test]
    fn lift_trivial_walk() {
        let c6 = cycle(6).unwrap();
        let (_, m) = separated_model(&c6, 2);
        let lift = lift_walk(&c6, &m, 4, &[0]).unwrap();
        assert_eq!(lift.graph_walk, vec![4]);
    }

    #[test]
    fn lift_is_bijective_on_true_models() {
        let c6 = cycle(6).unwrap();
        let (_, m) = separated_model(&c6, 3);
        for x in 0..6 {
            let ctx = LiftContext::new(&c6, &m, x).unwrap();
            for t in 0..=3usize {
                let walks = ctx.model_walks(t);
                assert_eq!(walks.len(), 2usize.pow(t as u32));
                let lifted: BTreeSet<Vec<usize>> =
                    walks.iter().map(|w| ctx.lift(w).unwrap()).collect();
                assert_eq!(lifted.len(), walks.len(), "lift not injective");
                // every graph walk of length t from x is hit
                let mut graph_walks = BTreeSet::new();
                fn rec(g: &Graph, walk: &mut Vec<usize>, left: usize, out: &mut BTreeSet<Vec<usize>>) {
                    if left == 0 {
                        out.insert(walk.clone());
                        return;
                    }
                    let cur = *walk.last().unwrap();
                    for &y in g.neighbors(cur) {
                        walk.push(y);
                        rec(g, walk, left - 1, out);
                        walk.pop();
                    }
                }
                rec(&c6, &mut vec![x], t, &mut graph_walks);
                assert_eq!(lifted, graph_walks);
            }
        }
    }

    #[test]
    fn lift_coherent_under_prefix() {
        let c6 = cycle(6).unwrap();
        let (_, m) = separated_model(&c6, 3);
        let ctx = LiftContext::new(&c6, &m, 2).unwrap();
        for walk in ctx.model_walks(3) {
            let full = ctx.lift(&walk).unwrap();
            for p in 1..=3 {
                let prefix = ctx.lift(&walk[..p]).unwrap();
                assert_eq!(prefix[..], full[..p]);
            }
        }
    }

    #[test]
    fn closed_walks_equal_for_true_model() {
        let c6 = cycle(6).unwrap();
        let (_, m) = separated_model(&c6, 4);
        for x in 0..6 {
            let cmp = closed_walk_comparison(&c6, &m, x, 4).unwrap();
            assert!(cmp.all_equal());
            // length-2 closed walks are edge round-trips
            assert_eq!(cmp.rows[1].1, BigUint::from(2u32));
        }
    }

    #[test]
    fn folded_cycle_model_strict_inequality() {
        // assign the radius-6 model of a separated C_6 to the vertices of a
        // C_12: consistent everywhere, but model closed walks of length 6
        // wrap around C_6 while graph walks cannot close in C_12
        let c6 = cycle(6).unwrap();
        let c12 = cycle(12).unwrap();
        let (f6, _) = separated_coloring(&c6, 6).unwrap();
        let m6 = true_model(&c6, &f6, 6).unwrap();
        let codes6 = match &m6 {
            ModelAssignment::Balls { codes, .. } => codes.clone(),
            _ => unreachable!(),
        };
        let codes12: Vec<BallCode> = (0..12).map(|x| codes6[x % 6].clone()).collect();
        let m = ModelAssignment::balls(6, f6.k, codes12).unwrap();
        let report = consistency_report(&c12, &m).unwrap();
        assert!(report.all_consistent());
        let cmp = closed_walk_comparison(&c12, &m, 0, 6).unwrap();
        let (_, model6, graph6, eq) = &cmp.rows[5];
        assert!(!eq);
        assert!(graph6 < model6);
    }

    #[test]
    fn reconstruct_on_c12() {
        let c12 = cycle(12).unwrap();
        let (_, m) = separated_model(&c12, 7);
        for x in 0..12 {
            let rec = reconstruct_ball(&c12, &m, x, 2).unwrap();
            assert_eq!(rec.model_code, rec.graph_code);
        }
    }

    #[test]
    fn reconstruct_rejects_boundary_t() {
        let c12 = cycle(12).unwrap();
        let (_, m) = separated_model(&c12, 6);
        // t = r/3 exactly is rejected
        assert!(matches!(
            reconstruct_ball(&c12, &m, 0, 2),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn reconstructed_code_matches_direct_ball_type() {
        let c12 = cycle(12).unwrap();
        let (f, m) = separated_model(&c12, 7);
        let rec = reconstruct_ball(&c12, &m, 3, 2).unwrap();
        let direct = canonical::ball_type(&c12, &f, 3, 1).unwrap();
        assert_eq!(rec.graph_code, direct);
    }

    #[test]
    fn true_star_model_cherry_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_regular(12, 3, &mut rng).unwrap();
        let (f, _) = separated_coloring(&g, 1).unwrap();
        let m = true_star_model(&g, &f);
        assert!(cherry_defect_set(&g, &m).unwrap().is_empty());
        assert!(inadmissible_mass(&g, &m).unwrap().is_zero());
    }

    #[test]
    fn cherry_case_degree_zero_mismatch() {
        let g = Graph::parse("1 0").unwrap();
        let m = ModelAssignment::stars(1, vec![StarType::new(1, vec![1])]).unwrap();
        assert!(!is_cherry_consistent_at(&g, &m, 0).unwrap());
    }

    #[test]
    fn cherry_pair_containment_failure() {
        // x = center of K_{1,2} with two color-2 neighbours but only one
        // 2-leaf in the model
        let g = star(2).unwrap();
        let m = ModelAssignment::stars(
            2,
            vec![
                StarType::new(1, vec![0, 1]),
                StarType::new(2, vec![1, 0]),
                StarType::new(2, vec![1, 0]),
            ],
        )
        .unwrap();
        assert!(!is_cherry_consistent_at(&g, &m, 0).unwrap());
    }

    #[test]
    fn cherry_injection_true_model_equality() {
        let c5 = cycle(5).unwrap();
        let (f, _) = separated_coloring(&c5, 1).unwrap();
        let m = true_star_model(&c5, &f);
        for x in 0..5 {
            let inj = cherry_injection(&c5, &m, x).unwrap();
            assert!(inj.equality);
            assert_eq!(inj.assignments.len(), 2);
        }
    }

    #[test]
    fn cherry_injection_phantom_leaf_strict() {
        let c5 = cycle(5).unwrap();
        let (f, _) = separated_coloring(&c5, 1).unwrap();
        let m = true_star_model(&c5, &f);
        let (k, mut stars) = match m {
            ModelAssignment::Stars { k, stars } => (k, stars),
            _ => unreachable!(),
        };
        // add a phantom leaf of an unused color to vertex 0's star
        let unused = (1..=k as u32)
            .find(|&c| stars[0].leaf_count(c) == 0 && c != stars[0].root_color)
            .unwrap();
        stars[0].leaf_counts[unused as usize - 1] += 1;
        let m = ModelAssignment::stars(k, stars).unwrap();
        let inj = cherry_injection(&c5, &m, 0).unwrap();
        assert!(!inj.equality);
        assert_eq!(inj.model_degree, 3);
    }

    #[test]
    fn cherry_injection_isolated_vertex() {
        let g = Graph::parse("1 0").unwrap();
        let m = ModelAssignment::stars(1, vec![StarType::new(1, vec![0])]).unwrap();
        let inj = cherry_injection(&g, &m, 0).unwrap();
        assert!(inj.assignments.is_empty());
        assert!(inj.equality);
    }

    #[test]
    fn admissible_set_cases() {
        let a0 = StarType::new(1, vec![0, 0]); // deg 0, color 1
        let a1 = StarType::new(2, vec![1, 0]); // root 2, one 1-leaf
        let alphabet = vec![a0, a1];
        let adm = admissible_cherries(&alphabet);
        assert!(adm.contains(&CherryType::Point(1)));
        assert!(!adm.contains(&CherryType::Point(2)));
        // star 2 has a leaf of color rho(star 1) = 1
        assert!(adm.contains(&CherryType::Edge { root: 2, leaf: 1 }));
        // star 1 has no leaves at all
        assert!(!adm.contains(&CherryType::Edge { root: 1, leaf: 2 }));
    }

    #[test]
    fn audit_true_model_zero_gap() {
        let c5 = cycle(5).unwrap();
        let (f, _) = separated_coloring(&c5, 1).unwrap();
        let m = true_star_model(&c5, &f);
        let report = average_degree_audit(&c5, &c5, &m, &m).unwrap();
        assert!(report.gap_support.is_empty());
        assert_eq!(report.good_set.len(), 5);
        assert_eq!(report.mean_model_degree, report.mean_graph_degree);
        assert_eq!(report.root_marginal_degree, report.mean_model_degree);
    }

    #[test]
    fn audit_phantom_leaves_located() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_regular(20, 3, &mut rng).unwrap();
        let (f, _) = separated_coloring(&g, 1).unwrap();
        let m_ref = true_star_model(&g, &f);
        let (k, mut stars) = match m_ref.clone() {
            ModelAssignment::Stars { k, stars } => (k, stars),
            _ => unreachable!(),
        };
        let tampered = [2usize, 7, 13];
        for &x in &tampered {
            let unused = (1..=k as u32)
                .find(|&c| stars[x].leaf_count(c) == 0 && c != stars[x].root_color)
                .unwrap();
            stars[x].leaf_counts[unused as usize - 1] += 1;
        }
        let m = ModelAssignment::stars(k, stars).unwrap();
        let report = average_degree_audit(&g, &g, &m, &m_ref).unwrap();
        assert_eq!(report.gap_support, tampered.to_vec());
        assert_eq!(
            report.mean_model_degree - report.mean_graph_degree,
            Rat::new(3.into(), 20.into())
        );
    }

    #[test]
    fn stability_zero_bad_mass_means_no_defects() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let g = random_regular(10, 3, &mut rng).unwrap();
            let (f, _) = separated_coloring(&g, 1).unwrap();
            let m = true_star_model(&g, &f);
            assert!(inadmissible_mass(&g, &m).unwrap().is_zero());
            assert!(cherry_defect_set(&g, &m).unwrap().is_empty());
        }
    }

    #[test]
    fn walk_evidence_recorded() {
        let c6 = cycle(6).unwrap();
        let (_, m) = separated_model(&c6, 3);
        let ctx = LiftContext::new(&c6, &m, 0).unwrap();
        let adj = ctx.model().adjacency();
        let first = adj[0][0];
        let second = *adj[first].iter().find(|&&v| v != 0).unwrap();
        let lift = lift_walk(&c6, &m, 0, &[0, first, second]).unwrap();
        assert_eq!(lift.evidence.len(), 3);
        assert!(lift.evidence.iter().all(|(a, b)| a == b));
        assert_eq!(lift.graph_walk.len(), 3);
        assert_eq!(lift.graph_walk[0], 0);
    }

    #[test]
    fn c2_closed_walk_row_equals_degree() {
        let k13 = star(3).unwrap();
        let (_, m) = separated_model(&k13, 2);
        let cmp = closed_walk_comparison(&k13, &m, 0, 2).unwrap();
        assert_eq!(cmp.rows[1].2, BigUint::from(3u32));
        assert!(cmp.rows[1].3);
        assert!(Rat::one() > Rat::zero());
    }
}

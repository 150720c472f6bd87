//! Separated and product colorings, exact enumeration of statistic sets on
//! small instances, and heuristic inner approximation on larger ones.

use crate::canonical;
use crate::error::{Error, Result};
use crate::graph::{Coloring, Graph};
use crate::stats::{self, Atom, Distribution, DistributionSet, StatKind, Universe};
use crate::Rat;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Max objective evaluations per restart.
    pub budget: usize,
    /// Max number of colorings (k^n) accepted in exact enumeration.
    pub enumeration_cap: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { seed: 0, restarts: 8, budget: 20_000, enumeration_cap: 1 << 24 }
    }
}

/// Result of verifying that a coloring separates radius-r balls.
#[derive(Debug, Clone)]
pub struct SeparationCertificate {
    pub radius: usize,
    pub colors_used: usize,
    pub verified: bool,
}

/// Checks that any two distinct vertices sharing a radius-r ball have
/// distinct colors, by explicit ball scans.
pub fn verify_separation(g: &Graph, f: &Coloring, r: usize) -> bool {
    for v in 0..g.n() {
        let mut seen: Vec<u32> = g.bfs_ball(v, r).iter().map(|&(u, _)| f.color(u)).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
    }
    true
}

/// Greedy proper coloring of the 2r-th power graph in vertex-index order.
/// The color count is at most the power graph's max degree plus one, hence
/// at most d^{2r+1}+1.
pub fn separated_coloring(g: &Graph, r: usize) -> Result<(Coloring, SeparationCertificate)> {
    if r < 1 {
        return Err(Error::InvalidParameter("separated_coloring needs r >= 1".into()));
    }
    let power = g.power_graph(2 * r)?;
    let mut colors = vec![0u32; g.n()];
    for v in 0..g.n() {
        let used: Vec<u32> = power
            .neighbors(v)
            .iter()
            .filter(|&&u| u < v)
            .map(|&u| colors[u])
            .collect();
        let mut c = 1u32;
        while used.contains(&c) {
            c += 1;
        }
        colors[v] = c;
    }
    let colors_used = colors.iter().copied().max().unwrap_or(1).max(1) as usize;
    let f = Coloring::new(colors_used, colors)?;
    let verified = verify_separation(g, &f, r);
    Ok((f, SeparationCertificate { radius: r, colors_used, verified }))
}

/// Bijective pairing of two colorings: color = (f(v)-1)*k2 + g(v).
pub fn product_coloring(f: &Coloring, g: &Coloring) -> Result<Coloring> {
    if f.len() != g.len() {
        return Err(Error::InvalidColoring(format!(
            "product of colorings on {} and {} vertices",
            f.len(),
            g.len()
        )));
    }
    let k2 = g.k as u32;
    let colors: Vec<u32> = (0..f.len())
        .map(|v| (f.color(v) - 1) * k2 + g.color(v))
        .collect();
    Coloring::new(f.k * g.k, colors)
}

/// Computes the requested statistic of one colored graph.
pub fn compute_stat(g: &Graph, f: &Coloring, kind: StatKind) -> Result<Distribution> {
    match kind {
        StatKind::Tau { r } => stats::tau_r(g, f, r),
        StatKind::Sigma => Ok(stats::sigma(g, f)),
        StatKind::Chi => Ok(stats::chi(g, f)),
    }
}

pub fn universe_of(g: &Graph, k: usize, kind: StatKind) -> Universe {
    Universe { d: g.d(), k, kind }
}

fn checked_pow(k: u64, n: usize, cap: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..n {
        acc = acc.checked_mul(k)?;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

/// The exact, fully enumerated statistic set over all k^n colorings.
pub fn enumerate_stat_set(g: &Graph, k: usize, kind: StatKind, cap: u64) -> Result<DistributionSet> {
    if checked_pow(k as u64, g.n(), cap).is_none() {
        return Err(Error::CapExceeded(format!(
            "{k}^{} colorings exceed the enumeration cap {cap}",
            g.n()
        )));
    }
    let mut set = DistributionSet::new(universe_of(g, k, kind), true);
    let mut colors = vec![1u32; g.n()];
    loop {
        let f = Coloring::new(k, colors.clone())?;
        let dist = compute_stat(g, &f, kind)?;
        set.insert(dist, Some(f));
        // next coloring in base-k counter order
        let mut i = 0;
        loop {
            if i == colors.len() {
                return Ok(set);
            }
            if (colors[i] as usize) < k {
                colors[i] += 1;
                break;
            }
            colors[i] = 1;
            i += 1;
        }
    }
}

/// Incrementally maintained statistic of a mutable coloring: the atom mass
/// map is a sum of per-vertex contributions, and recoloring one vertex only
/// touches the contributions of its radius-r neighbourhood.
struct StatState<'a> {
    g: &'a Graph,
    kind: StatKind,
    f: Coloring,
    mass: BTreeMap<Atom, Rat>,
    n_rat: Rat,
}

impl<'a> StatState<'a> {
    fn new(g: &'a Graph, kind: StatKind, f: Coloring) -> Result<Self> {
        let n_rat = Rat::from_integer(g.n().into());
        let mut state = StatState { g, kind, f, mass: BTreeMap::new(), n_rat };
        for v in 0..g.n() {
            for (atom, w) in state.contribution(v)? {
                *state.mass.entry(atom).or_insert_with(Rat::zero) += w;
            }
        }
        Ok(state)
    }

    /// Atoms contributed by vertex v, total weight 1/n.
    fn contribution(&self, v: usize) -> Result<Vec<(Atom, Rat)>> {
        let inv_n = Rat::from_integer(1.into()) / self.n_rat.clone();
        match self.kind {
            StatKind::Sigma => Ok(vec![(
                Atom::Star(canonical::star_of(self.g, &self.f, v)),
                inv_n,
            )]),
            StatKind::Tau { r } => Ok(vec![(
                Atom::Ball(canonical::ball_type(self.g, &self.f, v, r)?),
                inv_n,
            )]),
            StatKind::Chi => {
                let deg = self.g.degree(v);
                let root = self.f.color(v);
                match deg {
                    0 => Ok(vec![(
                        Atom::Cherry(canonical::CherryType::Point(root)),
                        inv_n,
                    )]),
                    1 => Ok(vec![(
                        Atom::Cherry(canonical::CherryType::Edge {
                            root,
                            leaf: self.f.color(self.g.neighbors(v)[0]),
                        }),
                        inv_n,
                    )]),
                    _ => {
                        let pairs = Rat::from_integer((deg * (deg - 1) / 2).into());
                        let w = inv_n / pairs;
                        let ns = self.g.neighbors(v);
                        let mut out = Vec::new();
                        for i in 0..deg {
                            for j in (i + 1)..deg {
                                out.push((
                                    Atom::Cherry(canonical::CherryType::two_star(
                                        root,
                                        self.f.color(ns[i]),
                                        self.f.color(ns[j]),
                                    )),
                                    w.clone(),
                                ));
                            }
                        }
                        Ok(out)
                    }
                }
            }
        }
    }

    fn affected(&self, v: usize) -> Vec<usize> {
        match self.kind {
            StatKind::Sigma | StatKind::Chi => {
                let mut a = vec![v];
                a.extend_from_slice(self.g.neighbors(v));
                a
            }
            StatKind::Tau { r } => self.g.ball_of_set(&[v], r),
        }
    }

    fn recolor(&mut self, v: usize, c: u32) -> Result<()> {
        if self.f.color(v) == c {
            return Ok(());
        }
        let affected = self.affected(v);
        for &u in &affected {
            for (atom, w) in self.contribution(u)? {
                let entry = self.mass.get_mut(&atom).expect("mass bookkeeping");
                *entry -= w;
                if entry.is_zero() {
                    self.mass.remove(&atom);
                }
            }
        }
        self.f.set_color(v, c);
        for &u in &affected {
            for (atom, w) in self.contribution(u)? {
                *self.mass.entry(atom).or_insert_with(Rat::zero) += w;
            }
        }
        Ok(())
    }

    fn distribution(&self) -> Distribution {
        let mut d = Distribution::empty(universe_of(self.g, self.f.k, self.kind));
        for (atom, w) in &self.mass {
            d.add_mass(atom.clone(), w.clone());
        }
        d
    }

    fn tv_to(&self, target: &Distribution) -> Rat {
        let mut sum = Rat::zero();
        for (atom, w) in &self.mass {
            sum += (w.clone() - target.mass(atom)).abs();
        }
        for (atom, p) in target.atoms() {
            if !self.mass.contains_key(atom) {
                sum += p.clone();
            }
        }
        sum / Rat::from_integer(2.into())
    }
}

enum Objective<'t> {
    TvTo(&'t Distribution),
    AtomMass { atom: Atom, maximize: bool },
}

impl Objective<'_> {
    /// Lower is better.
    fn score(&self, state: &StatState) -> Rat {
        match self {
            Objective::TvTo(target) => state.tv_to(target),
            Objective::AtomMass { atom, maximize } => {
                let m = state.mass.get(atom).cloned().unwrap_or_else(Rat::zero);
                if *maximize {
                    -m
                } else {
                    m
                }
            }
        }
    }
}

/// First-improvement hill climbing over single-vertex recolorings. Vertices
/// are scanned in a freshly shuffled order each pass, candidate colors in
/// ascending order; ties never move. Returns the number of evaluations used.
fn hill_climb(
    state: &mut StatState,
    objective: &Objective,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    let k = state.f.k as u32;
    let mut current = objective.score(state);
    let mut evals = 0usize;
    let mut order: Vec<usize> = (0..state.g.n()).collect();
    loop {
        let mut improved = false;
        order.shuffle(rng);
        for &v in &order {
            let old = state.f.color(v);
            for c in 1..=k {
                if c == old {
                    continue;
                }
                if evals >= budget {
                    return Ok(evals);
                }
                state.recolor(v, c)?;
                evals += 1;
                let s = objective.score(state);
                if s < current {
                    current = s;
                    improved = true;
                    break;
                }
                state.recolor(v, old)?;
            }
        }
        if !improved {
            return Ok(evals);
        }
    }
}

fn stream(seed: u64, idx: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ idx.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_coloring(k: usize, n: usize, rng: &mut ChaCha8Rng) -> Coloring {
    let colors: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=k as u32)).collect();
    Coloring::new(k, colors).expect("in-range colors")
}

/// Restarted hill climbing toward a target distribution. Restart 0 starts
/// from `initial` when given; all restarts draw independent RNG streams
/// from (seed, restart index), so the result is deterministic per seed.
pub fn approx_realize(
    g: &Graph,
    k: usize,
    kind: StatKind,
    target: &Distribution,
    cfg: &SearchConfig,
    initial: Option<&Coloring>,
) -> Result<(Coloring, Rat)> {
    let universe = universe_of(g, k, kind);
    if target.universe != universe {
        return Err(Error::UniverseMismatch(format!(
            "target universe {:?} does not match {:?}",
            target.universe, universe
        )));
    }
    let mut best: Option<(Coloring, Rat)> = None;
    let restarts = cfg.restarts.max(1);
    for i in 0..restarts {
        let start = match (i, initial) {
            (0, Some(f)) => f.clone(),
            _ => random_coloring(k, g.n(), &mut stream(cfg.seed, i as u64)),
        };
        let mut state = StatState::new(g, kind, start)?;
        let mut rng = stream(cfg.seed, (restarts + i) as u64);
        hill_climb(&mut state, &Objective::TvTo(target), cfg.budget, &mut rng)?;
        let tv = state.tv_to(target);
        if best.as_ref().map_or(true, |(_, b)| tv < *b) {
            best = Some((state.f.clone(), tv));
        }
        if k == 1 {
            break; // only one coloring exists
        }
    }
    Ok(best.unwrap())
}

// Extreme-point probes target at most this many atoms.
const MAX_PROBE_ATOMS: usize = 24;

/// Inner approximation of a statistic set: the distributions of random
/// colorings plus hill-climbing probes maximizing and minimizing each
/// observed atom mass. Every member carries its witness coloring; the
/// result is a subset of the true set, never claimed complete.
pub fn approx_stat_set(g: &Graph, k: usize, kind: StatKind, cfg: &SearchConfig) -> Result<DistributionSet> {
    let mut set = DistributionSet::new(universe_of(g, k, kind), false);
    let restarts = cfg.restarts.max(1);
    let mut probe_atoms: Vec<Atom> = Vec::new();
    for i in 0..restarts {
        let f = if i == 0 {
            Coloring::constant(k, g.n())
        } else {
            random_coloring(k, g.n(), &mut stream(cfg.seed, i as u64))
        };
        let dist = compute_stat(g, &f, kind)?;
        for (atom, _) in dist.atoms() {
            if probe_atoms.len() < MAX_PROBE_ATOMS && !probe_atoms.contains(atom) {
                probe_atoms.push(atom.clone());
            }
        }
        set.insert(dist, Some(f));
        if k == 1 {
            return Ok(set);
        }
    }
    for (j, atom) in probe_atoms.iter().enumerate() {
        for &maximize in &[true, false] {
            let idx = (2 * restarts + 2 * j + maximize as usize) as u64;
            let mut rng = stream(cfg.seed, idx);
            let start = random_coloring(k, g.n(), &mut rng);
            let mut state = StatState::new(g, kind, start)?;
            let objective = Objective::AtomMass { atom: atom.clone(), maximize };
            hill_climb(&mut state, &objective, cfg.budget, &mut rng)?;
            set.insert(state.distribution(), Some(state.f.clone()));
        }
    }
    Ok(set)
}

/// Hausdorff comparison of two graphs' statistic sets.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub universe: Universe,
    pub distance: Rat,
    pub exact: bool,
    pub size_a: usize,
    pub size_b: usize,
    pub caveat: Option<String>,
}

impl CompareReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "universe": self.universe,
            "distance": stats::rat_string(&self.distance),
            "mode": if self.exact { "exact" } else { "approx" },
            "set_sizes": [self.size_a, self.size_b],
            "caveat": self.caveat,
        })
    }
}

pub fn compare_graphs(
    a: &Graph,
    b: &Graph,
    k: usize,
    kind: StatKind,
    exact: bool,
    cfg: &SearchConfig,
) -> Result<CompareReport> {
    if a.d() != b.d() {
        return Err(Error::InvalidParameter(format!(
            "graphs must share a declared degree bound ({} vs {})",
            a.d(),
            b.d()
        )));
    }
    let (set_a, set_b) = if exact {
        (
            enumerate_stat_set(a, k, kind, cfg.enumeration_cap)?,
            enumerate_stat_set(b, k, kind, cfg.enumeration_cap)?,
        )
    } else {
        (approx_stat_set(a, k, kind, cfg)?, approx_stat_set(b, k, kind, cfg)?)
    };
    let distance = stats::hausdorff(&set_a, &set_b)?;
    Ok(CompareReport {
        universe: set_a.universe,
        distance,
        exact,
        size_a: set_a.len(),
        size_b: set_b.len(),
        caveat: if exact {
            None
        } else {
            Some("inner approximations only; the true Hausdorff distance may differ in either direction".into())
        },
    })
}

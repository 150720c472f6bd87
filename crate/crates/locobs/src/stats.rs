//! Exact distributions of local observations (balls, stars, cherries),
//! walk counts, and the total-variation / Hausdorff metrics.

use crate::canonical::{self, BallCode, CherryType, StarType};
use crate::error::{Error, Result};
use crate::graph::{Coloring, Graph};
use crate::scalar::Scalar;
use crate::Rat;
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Which local statistic a distribution or set ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "stat", rename_all = "lowercase")]
pub enum StatKind {
    Tau { r: usize },
    Sigma,
    Chi,
}

impl StatKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatKind::Tau { .. } => "tau",
            StatKind::Sigma => "sigma",
            StatKind::Chi => "chi",
        }
    }
}

/// Tagged atom universe of a distribution. Metric calls across different
/// universes are errors, never silent coercions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Universe {
    pub d: usize,
    pub k: usize,
    #[serde(flatten)]
    pub kind: StatKind,
}

/// An atom of a local-observation distribution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Ball(BallCode),
    Star(StarType),
    Cherry(CherryType),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Ball(b) => write!(f, "{b}"),
            Atom::Star(s) => write!(f, "{s}"),
            Atom::Cherry(c) => write!(f, "{c}"),
        }
    }
}

/// Probability distribution over a finite atom set. Zero-mass atoms are
/// never stored. Exact with `P = Rat` (the default).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Distribution<P = Rat> {
    pub universe: Universe,
    atoms: BTreeMap<Atom, P>,
}

impl<P: Scalar> Distribution<P> {
    pub fn empty(universe: Universe) -> Self {
        Distribution { universe, atoms: BTreeMap::new() }
    }

    pub fn add_mass(&mut self, atom: Atom, p: P) {
        if p.is_zero() {
            return;
        }
        let entry = self.atoms.entry(atom).or_insert_with(P::zero);
        *entry = entry.clone() + p;
        // additions of positive mass cannot cancel, no zero purge needed
    }

    pub fn scaled_add(&mut self, other: &Distribution<P>, weight: P) {
        for (a, p) in &other.atoms {
            self.add_mass(a.clone(), p.clone() * weight.clone());
        }
    }

    pub fn mass(&self, atom: &Atom) -> P {
        self.atoms.get(atom).cloned().unwrap_or_else(P::zero)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Atom, &P)> {
        self.atoms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    pub fn total(&self) -> P {
        self.atoms.values().fold(P::zero(), |acc, p| acc + p.clone())
    }

    pub fn total_is_one(&self) -> bool {
        self.total() == P::one()
    }
}

impl Distribution<Rat> {
    /// Builds the empirical distribution of per-vertex atom counts.
    pub fn from_counts(universe: Universe, counts: BTreeMap<Atom, u64>, total: u64) -> Self {
        let mut dist = Distribution::empty(universe);
        for (atom, c) in counts {
            dist.add_mass(atom, Rat::new(BigInt::from(c), BigInt::from(total)));
        }
        dist
    }

    /// JSON form: {"universe": {...}, "atoms": {"<key>": "num/den", ...}},
    /// atoms sorted by key, rationals in lowest terms.
    pub fn to_json(&self) -> serde_json::Value {
        let atoms: BTreeMap<String, String> = self
            .atoms
            .iter()
            .map(|(a, p)| (a.to_string(), rat_string(p)))
            .collect();
        serde_json::json!({
            "universe": self.universe,
            "atoms": atoms,
        })
    }
}

pub fn rat_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Total variation distance: half the L1 distance, exact over `Rat`.
pub fn tv_distance<P: Scalar>(a: &Distribution<P>, b: &Distribution<P>) -> Result<P> {
    if a.universe != b.universe {
        return Err(Error::UniverseMismatch(format!(
            "{:?} vs {:?}",
            a.universe, b.universe
        )));
    }
    let mut sum = P::zero();
    for (atom, p) in a.atoms() {
        sum = sum + (p.clone() - b.mass(atom)).abs();
    }
    for (atom, p) in b.atoms() {
        if a.atoms.get(atom).is_none() {
            sum = sum + p.clone();
        }
    }
    Ok(sum / P::from_ratio(2, 1))
}

/// Finite set of distributions over a common universe, deduplicated, each
/// optionally carrying the witness coloring that realized it.
#[derive(Debug, Clone)]
pub struct DistributionSet {
    pub universe: Universe,
    pub members: Vec<Distribution>,
    pub witnesses: Vec<Option<Coloring>>,
    pub exact: bool,
}

impl DistributionSet {
    pub fn new(universe: Universe, exact: bool) -> Self {
        DistributionSet { universe, members: Vec::new(), witnesses: Vec::new(), exact }
    }

    /// Inserts if not already present; keeps the first witness.
    pub fn insert(&mut self, dist: Distribution, witness: Option<Coloring>) -> bool {
        debug_assert_eq!(dist.universe, self.universe);
        if self.members.contains(&dist) {
            return false;
        }
        self.members.push(dist);
        self.witnesses.push(witness);
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, dist: &Distribution) -> bool {
        self.members.contains(dist)
    }

    /// Set equality (order-independent).
    pub fn same_members(&self, other: &DistributionSet) -> bool {
        self.universe == other.universe
            && self.len() == other.len()
            && self.members.iter().all(|m| other.contains(m))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "universe": self.universe,
            "members": self.members.iter().map(|m| m.to_json()).collect::<Vec<_>>(),
            "witnesses": self
                .witnesses
                .iter()
                .map(|w| w.as_ref().map(|c| c.colors().to_vec()))
                .collect::<Vec<_>>(),
            "mode": if self.exact { "exact" } else { "approx" },
        })
    }
}

/// Hausdorff distance between two nonempty distribution sets under total
/// variation, exact.
pub fn hausdorff(a: &DistributionSet, b: &DistributionSet) -> Result<Rat> {
    if a.universe != b.universe {
        return Err(Error::UniverseMismatch(format!(
            "{:?} vs {:?}",
            a.universe, b.universe
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter(
            "hausdorff distance of an empty set".into(),
        ));
    }
    let one_sided = |from: &DistributionSet, to: &DistributionSet| -> Result<Rat> {
        let mut worst = Rat::zero();
        for mu in &from.members {
            let mut best: Option<Rat> = None;
            for nu in &to.members {
                let d = tv_distance(mu, nu)?;
                if best.as_ref().map_or(true, |b| d < *b) {
                    best = Some(d);
                }
            }
            let best = best.unwrap();
            if best > worst {
                worst = best;
            }
        }
        Ok(worst)
    };
    let ab = one_sided(a, b)?;
    let ba = one_sided(b, a)?;
    Ok(ab.max(ba))
}

/// Exact distribution of the colored radius-r ball type at a uniform
/// random vertex.
pub fn tau_r(g: &Graph, f: &Coloring, r: usize) -> Result<Distribution> {
    tau_r_capped(g, f, r, canonical::DEFAULT_BALL_CAP)
}

pub fn tau_r_capped(g: &Graph, f: &Coloring, r: usize, cap: usize) -> Result<Distribution> {
    let universe = Universe { d: g.d(), k: f.k, kind: StatKind::Tau { r } };
    let mut counts: BTreeMap<Atom, u64> = BTreeMap::new();
    for v in 0..g.n() {
        let code = canonical::ball_type_capped(g, f, v, r, cap)?;
        *counts.entry(Atom::Ball(code)).or_insert(0) += 1;
    }
    Ok(Distribution::from_counts(universe, counts, g.n() as u64))
}

/// Exact colored degree (star) distribution.
pub fn sigma(g: &Graph, f: &Coloring) -> Distribution {
    let universe = Universe { d: g.d(), k: f.k, kind: StatKind::Sigma };
    let mut counts: BTreeMap<Atom, u64> = BTreeMap::new();
    for v in 0..g.n() {
        *counts.entry(Atom::Star(canonical::star_of(g, f, v))).or_insert(0) += 1;
    }
    Distribution::from_counts(universe, counts, g.n() as u64)
}

/// Exact cherry distribution: point in degree 0, rooted edge in degree 1,
/// uniform unordered neighbour pair in degree >= 2.
pub fn chi(g: &Graph, f: &Coloring) -> Distribution {
    let universe = Universe { d: g.d(), k: f.k, kind: StatKind::Chi };
    let n = BigInt::from(g.n());
    let mut dist = Distribution::empty(universe);
    for v in 0..g.n() {
        let deg = g.degree(v);
        let root = f.color(v);
        match deg {
            0 => dist.add_mass(
                Atom::Cherry(CherryType::Point(root)),
                Rat::new(1.into(), n.clone()),
            ),
            1 => dist.add_mass(
                Atom::Cherry(CherryType::Edge { root, leaf: f.color(g.neighbors(v)[0]) }),
                Rat::new(1.into(), n.clone()),
            ),
            _ => {
                let pairs = BigInt::from(deg * (deg - 1) / 2);
                let ns = g.neighbors(v);
                for i in 0..deg {
                    for j in (i + 1)..deg {
                        dist.add_mass(
                            Atom::Cherry(CherryType::two_star(root, f.color(ns[i]), f.color(ns[j]))),
                            Rat::new(1.into(), n.clone() * pairs.clone()),
                        );
                    }
                }
            }
        }
    }
    dist
}

/// The affine star-to-cherry map applied to a star distribution.
pub fn theta_pushforward(s: &Distribution) -> Result<Distribution> {
    if s.universe.kind != StatKind::Sigma {
        return Err(Error::UniverseMismatch(format!(
            "theta_pushforward needs a star distribution, got {:?}",
            s.universe.kind
        )));
    }
    let universe = Universe { d: s.universe.d, k: s.universe.k, kind: StatKind::Chi };
    let mut out = Distribution::empty(universe);
    for (atom, p) in s.atoms() {
        let star = match atom {
            Atom::Star(st) => st,
            _ => return Err(Error::UniverseMismatch("non-star atom in star distribution".into())),
        };
        out.scaled_add(&canonical::theta(star, s.universe.d), p.clone());
    }
    Ok(out)
}

/// Projection of a radius-1 ball distribution to a star distribution
/// (the pushforward under `project_star`).
pub fn sigma_from_tau(t: &Distribution) -> Result<Distribution> {
    if t.universe.kind != (StatKind::Tau { r: 1 }) {
        return Err(Error::UniverseMismatch(format!(
            "sigma_from_tau needs a radius-1 ball distribution, got {:?}",
            t.universe.kind
        )));
    }
    let universe = Universe { d: t.universe.d, k: t.universe.k, kind: StatKind::Sigma };
    let mut out = Distribution::empty(universe);
    for (atom, p) in t.atoms() {
        let code = match atom {
            Atom::Ball(b) => b,
            _ => return Err(Error::UniverseMismatch("non-ball atom in ball distribution".into())),
        };
        out.add_mass(Atom::Star(canonical::project_star(code)?), p.clone());
    }
    Ok(out)
}

/// Per-vertex walk and closed-walk counts for lengths 0..=t_max, computed
/// by the length-indexed dynamic program.
#[derive(Debug, Clone)]
pub struct WalkTable {
    pub t_max: usize,
    /// total[x][t] = |W_t(x)|
    pub total: Vec<Vec<BigUint>>,
    /// closed[x][t] = |W_t^0(x)|
    pub closed: Vec<Vec<BigUint>>,
}

impl WalkTable {
    /// c_t(G): expected number of closed length-t walks at a uniform root.
    pub fn c_t(&self, t: usize) -> Rat {
        let sum: BigUint = self.closed.iter().map(|row| row[t].clone()).sum();
        Rat::new(BigInt::from(sum), BigInt::from(self.closed.len()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t_max": self.t_max,
            "closed": self.closed.iter().map(|row| row.iter().map(|c| c.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "c": (0..=self.t_max).map(|t| rat_string(&self.c_t(t))).collect::<Vec<_>>(),
        })
    }
}

pub fn walk_counts(g: &Graph, t_max: usize) -> WalkTable {
    let n = g.n();
    let mut total = vec![Vec::with_capacity(t_max + 1); n];
    let mut closed = vec![Vec::with_capacity(t_max + 1); n];
    for x in 0..n {
        // w[y] = number of walks of the current length from x ending at y
        let mut w = vec![BigUint::zero(); n];
        w[x] = BigUint::from(1u32);
        for t in 0..=t_max {
            total[x].push(w.iter().sum());
            closed[x].push(w[x].clone());
            if t == t_max {
                break;
            }
            let mut next = vec![BigUint::zero(); n];
            for y in 0..n {
                if w[y].is_zero() {
                    continue;
                }
                for &z in g.neighbors(y) {
                    next[z] += &w[y];
                }
            }
            w = next;
        }
    }
    WalkTable { t_max, total, closed }
}

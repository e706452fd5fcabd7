//! Finite partial orders of regions, their nerve, and incidence-algebra
//! combinatorics.
//!
//! A [`Hypergraph`] is a family of distinct [`Region`]s ordered by inclusion.
//! Members are kept in a fixed order (cardinality descending, then
//! lexicographic), so a strict inclusion `a ⊋ b` always has `index(a) <
//! index(b)`. Every traversal in the crate relies on that order for
//! determinism.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

/// A set of variable ids, stored sorted ascending without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(Vec<usize>);

impl Region {
    /// Builds a region from arbitrary ids; sorts and removes repeats.
    pub fn new<I: IntoIterator<Item = usize>>(vars: I) -> Self {
        let mut v: Vec<usize> = vars.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Region(v)
    }

    /// Like [`Region::new`] but rejects repeated ids.
    pub fn strict(vars: &[usize]) -> Result<Self> {
        let r = Region::new(vars.iter().copied());
        if r.len() != vars.len() {
            return Err(Error::InvalidInput(format!("repeated variable in {vars:?}")));
        }
        Ok(r)
    }

    pub fn empty() -> Self {
        Region(Vec::new())
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.binary_search(&var).is_ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() {
            if j == other.0.len() {
                return false;
            }
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Less => return false,
            }
        }
        true
    }

    pub fn is_strict_subset(&self, other: &Region) -> bool {
        self.len() < other.len() && self.is_subset(other)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region(self.0.iter().copied().filter(|v| other.contains(*v)).collect())
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region(self.0.iter().copied().filter(|v| !other.contains(*v)).collect())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "{{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl From<&[usize]> for Region {
    fn from(v: &[usize]) -> Self {
        Region::new(v.iter().copied())
    }
}

impl<const N: usize> From<[usize; N]> for Region {
    fn from(v: [usize; N]) -> Self {
        Region::new(v)
    }
}

/// A non-degenerate chain `a0 ⊋ a1 ⊋ … ⊋ ap`, stored as member indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain(pub Vec<usize>);

impl Chain {
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn head(&self) -> usize {
        self.0[0]
    }

    /// The smallest region of the chain, where field values live.
    pub fn terminal(&self) -> usize {
        *self.0.last().expect("chains are nonempty")
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }
}

/// A function on comparable pairs `(a, b)` with `a ⊇ b`, stored densely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceFn {
    n: usize,
    values: Vec<i64>,
}

impl IncidenceFn {
    fn zeros(n: usize) -> Self {
        IncidenceFn { n, values: vec![0; n * n] }
    }

    /// Value at `(a, b)`; zero on incomparable pairs.
    pub fn get(&self, a: usize, b: usize) -> i64 {
        self.values[a * self.n + b]
    }

    fn set(&mut self, a: usize, b: usize, v: i64) {
        self.values[a * self.n + b] = v;
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// The zeta function: 1 on every comparable pair.
    pub fn zeta(x: &Hypergraph) -> Self {
        let n = x.len();
        let mut z = IncidenceFn::zeros(n);
        for a in 0..n {
            for &b in x.cone_members(a) {
                z.set(a, b, 1);
            }
        }
        z
    }

    /// The identity (Kronecker delta).
    pub fn unit(n: usize) -> Self {
        let mut z = IncidenceFn::zeros(n);
        for a in 0..n {
            z.set(a, a, 1);
        }
        z
    }

    /// Dirichlet convolution `(f * g)_{ac} = Σ_{a ⊇ b ⊇ c} f_{ab} g_{bc}`.
    pub fn convolve(&self, other: &IncidenceFn, x: &Hypergraph) -> IncidenceFn {
        let n = x.len();
        let mut out = IncidenceFn::zeros(n);
        for a in 0..n {
            for &b in x.cone_members(a) {
                let fab = self.get(a, b);
                if fab == 0 {
                    continue;
                }
                for &c in x.cone_members(b) {
                    let v = out.get(a, c) + fab * other.get(b, c);
                    out.set(a, c, v);
                }
            }
        }
        out
    }
}

/// Right (`c`) and left (`c_bar`) Möbius numbers, indexed by member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MobiusNumbers {
    pub c: Vec<i64>,
    pub c_bar: Vec<i64>,
}

/// Result of splitting members into interior and boundary parts.
#[derive(Clone, Debug)]
pub struct BoundarySplit {
    pub boundary_vars: Region,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// `trace[a]` is the member index of `a ∩ boundary_vars`.
    pub trace: Vec<usize>,
    pub is_boundary: Vec<bool>,
}

impl BoundarySplit {
    /// The split with boundary variables `∅`: only the empty region (if a
    /// member) is on the boundary.
    pub fn empty_truncation(x: &Hypergraph) -> Result<Self> {
        x.boundary_split(&Region::empty())
    }
}

/// One step of the retraction procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionStep {
    /// A variable occurring in a single maximal region was removed from it.
    DropVariable { var: usize, from: Region },
    /// A region contained in another one was removed.
    DropRegion { region: Region, into: Region },
}

#[derive(Clone, Debug)]
pub struct Retraction {
    pub retractable: bool,
    pub steps: Vec<ReductionStep>,
    /// Remaining regions when the reduction stalls (a single one on success).
    pub residue: Vec<Region>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Diameter {
    pub value: usize,
    pub connected: bool,
}

/// A finite family of regions ordered by inclusion.
#[derive(Clone, Debug)]
pub struct Hypergraph {
    omega: Region,
    regions: Vec<Region>,
    index: HashMap<Region, usize>,
    /// `cones[a]`: members `b ⊆ a` in member order (including `a`).
    cones: Vec<Vec<usize>>,
    /// `uppers[b]`: members `a ⊇ b` in member order (including `b`).
    uppers: Vec<Vec<usize>>,
    closed: bool,
}

fn member_order(a: &Region, b: &Region) -> std::cmp::Ordering {
    b.len().cmp(&a.len()).then_with(|| a.cmp(b))
}

impl Hypergraph {
    /// Builds a hypergraph from input regions, optionally closing it under
    /// intersection and adding the empty region.
    pub fn build(regions: &[Region], close: bool, include_empty: bool) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::InvalidInput("at least one region is required".into()));
        }
        let mut set: BTreeSet<Region> = BTreeSet::new();
        for r in regions {
            if !set.insert(r.clone()) {
                return Err(Error::InvalidInput(format!("duplicate region {r}")));
            }
        }
        if close {
            loop {
                let current: Vec<Region> = set.iter().cloned().collect();
                let mut added = false;
                for i in 0..current.len() {
                    for j in (i + 1)..current.len() {
                        let c = current[i].intersection(&current[j]);
                        if set.insert(c) {
                            added = true;
                        }
                    }
                }
                if !added {
                    break;
                }
            }
        }
        if include_empty {
            set.insert(Region::empty());
        }
        Ok(Self::from_members(set.into_iter().collect()))
    }

    /// Wraps distinct regions as they are (no closure).
    fn from_members(mut regions: Vec<Region>) -> Self {
        regions.sort_by(member_order);
        let omega = regions.iter().fold(Region::empty(), |acc, r| acc.union(r));
        let index: HashMap<Region, usize> = regions.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect();
        let n = regions.len();
        let mut cones = vec![Vec::new(); n];
        let mut uppers = vec![Vec::new(); n];
        for a in 0..n {
            for b in a..n {
                if regions[b].is_subset(&regions[a]) {
                    cones[a].push(b);
                }
            }
        }
        for (a, cone) in cones.iter().enumerate() {
            for &b in cone {
                uppers[b].push(a);
            }
        }
        let mut closed = true;
        'outer: for i in 0..n {
            for j in (i + 1)..n {
                if !index.contains_key(&regions[i].intersection(&regions[j])) {
                    closed = false;
                    break 'outer;
                }
            }
        }
        Hypergraph { omega, regions, index, cones, uppers, closed }
    }

    pub fn omega(&self) -> &Region {
        &self.omega
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, i: usize) -> &Region {
        &self.regions[i]
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn index_of(&self, r: &Region) -> Option<usize> {
        self.index.get(r).copied()
    }

    pub fn require(&self, r: &Region) -> Result<usize> {
        self.index_of(r).ok_or_else(|| Error::NotAMember(r.clone()))
    }

    /// Index of the empty region, if it is a member.
    pub fn empty_index(&self) -> Option<usize> {
        self.index_of(&Region::empty())
    }

    /// `a ⊇ b` for member indices.
    pub fn contains(&self, a: usize, b: usize) -> bool {
        a <= b && self.cones[a].binary_search(&b).is_ok()
    }

    /// Members of the cone `Λ^a` (including `a`).
    pub fn cone_members(&self, a: usize) -> &[usize] {
        &self.cones[a]
    }

    /// Members containing `b` (including `b`).
    pub fn upper_members(&self, b: usize) -> &[usize] {
        &self.uppers[b]
    }

    /// All non-degenerate `p`-chains in lexicographic index order.
    pub fn nerve(&self, p: usize) -> Vec<Chain> {
        let mut out = Vec::new();
        let mut stack = Vec::with_capacity(p + 1);
        for a in 0..self.len() {
            stack.push(a);
            self.extend_chains(&mut stack, p, &mut out);
            stack.pop();
        }
        out
    }

    fn extend_chains(&self, stack: &mut Vec<usize>, p: usize, out: &mut Vec<Chain>) {
        if stack.len() == p + 1 {
            out.push(Chain(stack.clone()));
            return;
        }
        let last = *stack.last().unwrap();
        for &b in &self.cones[last][1..] {
            stack.push(b);
            self.extend_chains(stack, p, out);
            stack.pop();
        }
    }

    /// The Möbius function, by `μ_aa = 1`, `μ_ac = −Σ_{a ⊇ b ⊋ c} μ_ab`.
    pub fn mobius(&self) -> IncidenceFn {
        let n = self.len();
        let mut mu = IncidenceFn::zeros(n);
        for a in 0..n {
            mu.set(a, a, 1);
            for &c in &self.cones[a][1..] {
                let mut s = 0;
                for &b in &self.cones[a] {
                    if b != c && self.contains(b, c) {
                        s += mu.get(a, b);
                    }
                }
                mu.set(a, c, -s);
            }
        }
        mu
    }

    pub fn mobius_numbers(&self) -> MobiusNumbers {
        let mu = self.mobius();
        let n = self.len();
        let c = (0..n).map(|b| self.uppers[b].iter().map(|&a| mu.get(a, b)).sum()).collect();
        let c_bar = (0..n).map(|a| self.cones[a].iter().map(|&b| mu.get(a, b)).sum()).collect();
        MobiusNumbers { c, c_bar }
    }

    /// Sub-hypergraph on the given members, with the map from new to old
    /// indices.
    pub fn restrict(&self, members: &[usize]) -> (Hypergraph, Vec<usize>) {
        let regions: Vec<Region> = members.iter().map(|&i| self.regions[i].clone()).collect();
        let sub = Hypergraph::from_members(regions);
        let map = sub.regions.iter().map(|r| self.index[r]).collect();
        (sub, map)
    }

    /// The cone `Λ^a` as a hypergraph, with its index map into `self`.
    pub fn cone(&self, a: &Region) -> Result<(Hypergraph, Vec<usize>)> {
        let i = self.require(a)?;
        Ok(self.restrict(&self.cones[i]))
    }

    /// 1-chains `(a', b')` with `a' ∉ Λ^a` and `b' ∈ Λ^a`.
    pub fn cone_coboundary(&self, a: &Region) -> Result<Vec<(usize, usize)>> {
        let i = self.require(a)?;
        Ok(self.coboundary_of(i))
    }

    pub(crate) fn coboundary_of(&self, a: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for ap in 0..self.len() {
            if self.contains(a, ap) {
                continue;
            }
            for &bp in &self.cones[ap][1..] {
                if self.contains(a, bp) {
                    out.push((ap, bp));
                }
            }
        }
        out
    }

    /// Smallest member containing `s`.
    pub fn x_closure(&self, s: &Region) -> Result<Region> {
        self.closure_index(s).map(|i| self.regions[i].clone())
    }

    pub fn closure_index(&self, s: &Region) -> Result<usize> {
        let mut acc: Option<Region> = None;
        for r in &self.regions {
            if s.is_subset(r) {
                acc = Some(match acc {
                    None => r.clone(),
                    Some(c) => c.intersection(r),
                });
            }
        }
        let c = acc.ok_or_else(|| Error::ClosureUndefined(s.clone()))?;
        self.index_of(&c).ok_or_else(|| Error::ClosureUndefined(s.clone()))
    }

    /// Splits members along boundary variables; requires `a ∩ ∂Ω ∈ X` for all `a`.
    pub fn boundary_split(&self, boundary_vars: &Region) -> Result<BoundarySplit> {
        let mut trace = Vec::with_capacity(self.len());
        for r in &self.regions {
            let t = r.intersection(boundary_vars);
            match self.index_of(&t) {
                Some(i) => trace.push(i),
                None => return Err(Error::NotAdapted { region: r.clone(), trace: t }),
            }
        }
        let is_boundary: Vec<bool> = self.regions.iter().map(|r| r.is_subset(boundary_vars)).collect();
        let interior = (0..self.len()).filter(|&i| !is_boundary[i]).collect();
        let boundary = (0..self.len()).filter(|&i| is_boundary[i]).collect();
        Ok(BoundarySplit { boundary_vars: boundary_vars.clone(), interior, boundary, trace, is_boundary })
    }

    /// Graham-style reduction of the maximal regions.
    pub fn is_retractable(&self) -> Retraction {
        let mut edges: Vec<Region> =
            (0..self.len()).filter(|&a| self.uppers[a].len() == 1).map(|a| self.regions[a].clone()).collect();
        let mut steps = Vec::new();
        loop {
            if edges.len() <= 1 {
                return Retraction { retractable: true, steps, residue: edges };
            }
            if let Some((k, var)) = lonely_variable(&edges) {
                steps.push(ReductionStep::DropVariable { var, from: edges[k].clone() });
                edges[k] = edges[k].difference(&Region::new([var]));
                continue;
            }
            if let Some((k, into)) = contained_edge(&edges) {
                steps.push(ReductionStep::DropRegion { region: edges[k].clone(), into: edges[into].clone() });
                edges.remove(k);
                continue;
            }
            return Retraction { retractable: false, steps, residue: edges };
        }
    }

    /// Diameter of the comparability graph on nonempty members. The empty
    /// region is left out since it is comparable to everything.
    pub fn diameter(&self) -> Diameter {
        let nodes: Vec<usize> = (0..self.len()).filter(|&i| !self.regions[i].is_empty()).collect();
        if nodes.is_empty() {
            return Diameter { value: 0, connected: true };
        }
        let pos: HashMap<usize, usize> = nodes.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let adj: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&i| {
                nodes
                    .iter()
                    .filter(|&&j| j != i && (self.contains(i, j) || self.contains(j, i)))
                    .map(|j| pos[j])
                    .collect()
            })
            .collect();
        let mut value = 0;
        let mut connected = true;
        for s in 0..nodes.len() {
            let mut dist = vec![usize::MAX; nodes.len()];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            for &d in &dist {
                if d == usize::MAX {
                    connected = false;
                } else {
                    value = value.max(d);
                }
            }
        }
        Diameter { value, connected }
    }
}

fn lonely_variable(edges: &[Region]) -> Option<(usize, usize)> {
    let mut count: HashMap<usize, (usize, usize)> = HashMap::new();
    for (k, e) in edges.iter().enumerate() {
        for &v in e.vars() {
            let entry = count.entry(v).or_insert((0, k));
            entry.0 += 1;
        }
    }
    let mut lonely: Vec<(usize, usize)> =
        count.into_iter().filter(|(_, (c, _))| *c == 1).map(|(v, (_, k))| (k, v)).collect();
    lonely.sort_unstable();
    lonely.into_iter().next()
}

fn contained_edge(edges: &[Region]) -> Option<(usize, usize)> {
    for k in 0..edges.len() {
        for j in 0..edges.len() {
            if j != k && edges[k].is_subset(&edges[j]) {
                return Some((k, j));
            }
        }
    }
    None
}

//! Directed graphs, separations, linkage instances and path systems.
//!
//! Vertices are dense `usize` indices. Every adjacency list is kept sorted so
//! that all traversals visit neighbours in ascending order and results are
//! reproducible.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{invalid, precondition, Error, Result};
use crate::flow;

pub type VertexId = usize;

/// Immutable simple digraph: no self-loops, no parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    out: Vec<Vec<VertexId>>,
    inc: Vec<Vec<VertexId>>,
    edge_count: usize,
}

impl Digraph {
    /// Builds a digraph on `n` vertices. Duplicate edges are collapsed;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Result<Self> {
        let mut out = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return invalid(format!("edge ({u},{v}) out of range for {n} vertices"));
            }
            if u == v {
                return invalid(format!("self-loop at vertex {u}"));
            }
            out[u].push(v);
        }
        Ok(Self::from_out_lists(out))
    }

    /// Same as [`Digraph::new`] but silently drops self-loops. Used by
    /// contraction, where loops carry no information.
    pub(crate) fn new_dropping_loops(
        n: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Self {
        let mut out = vec![Vec::new(); n];
        for (u, v) in edges {
            if u != v {
                out[u].push(v);
            }
        }
        Self::from_out_lists(out)
    }

    fn from_out_lists(mut out: Vec<Vec<VertexId>>) -> Self {
        let n = out.len();
        let mut inc = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (u, list) in out.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
            for &v in list.iter() {
                inc[v].push(u);
            }
        }
        // inc lists are filled in ascending u order already
        Digraph { out, inc, edge_count }
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.out.len()
    }

    pub fn out_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.out[v]
    }

    pub fn in_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.inc[v]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        u < self.out.len() && self.out[u].binary_search(&v).is_ok()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        v < self.out.len()
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
    }

    /// The graph with every edge reversed.
    pub fn reversed(&self) -> Digraph {
        Digraph {
            out: self.inc.clone(),
            inc: self.out.clone(),
            edge_count: self.edge_count,
        }
    }

    /// Shortest path from `from` to any vertex satisfying `is_target`, using
    /// only vertices for which `allowed` holds. `from` itself must be allowed.
    pub fn shortest_path_where(
        &self,
        from: VertexId,
        allowed: impl Fn(VertexId) -> bool,
        is_target: impl Fn(VertexId) -> bool,
    ) -> Option<Vec<VertexId>> {
        if !allowed(from) {
            return None;
        }
        if is_target(from) {
            return Some(vec![from]);
        }
        let n = self.vertex_count();
        let mut parent = vec![usize::MAX; n];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.out[u] {
                if parent[w] != usize::MAX || !allowed(w) {
                    continue;
                }
                parent[w] = u;
                if is_target(w) {
                    let mut path = vec![w];
                    let mut cur = w;
                    while cur != from {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(w);
            }
        }
        None
    }

    /// Shortest path between two vertices inside the vertex set `within`.
    pub fn path_within(
        &self,
        from: VertexId,
        to: VertexId,
        within: &BTreeSet<VertexId>,
    ) -> Option<Vec<VertexId>> {
        self.shortest_path_where(from, |v| within.contains(&v), |v| v == to)
    }

    /// Vertices reachable from `from` through `allowed` vertices.
    pub fn reachable_where(&self, from: VertexId, allowed: impl Fn(VertexId) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count()];
        if !allowed(from) {
            return seen;
        }
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for &w in &self.out[u] {
                if !seen[w] && allowed(w) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    pub fn reachable(&self, from: VertexId, to: VertexId) -> bool {
        self.reachable_where(from, |_| true)[to]
    }

    /// Whether the subgraph induced by `set` is strongly connected. The empty
    /// set is not.
    pub fn is_strongly_connected_set(&self, set: &BTreeSet<VertexId>) -> bool {
        let Some(&root) = set.iter().next() else {
            return false;
        };
        if set.iter().any(|&v| v >= self.vertex_count()) {
            return false;
        }
        let fwd = self.reachable_where(root, |v| set.contains(&v));
        let rev = self.reversed().reachable_where(root, |v| set.contains(&v));
        set.iter().all(|&v| fwd[v] && rev[v])
    }

    pub fn is_strongly_connected(&self) -> bool {
        let all: BTreeSet<VertexId> = self.vertices().collect();
        self.is_strongly_connected_set(&all)
    }

    /// Whether there is at least one edge from a vertex of `a` to one of `b`.
    pub fn has_edge_between(&self, a: &BTreeSet<VertexId>, b: &BTreeSet<VertexId>) -> bool {
        a.iter().any(|&u| self.out[u].iter().any(|w| b.contains(w)))
    }

    /// Whether `path` is a directed path: consecutive pairs are edges and no
    /// vertex repeats.
    pub fn is_path(&self, path: &[VertexId]) -> bool {
        if path.is_empty() || path.iter().any(|&v| v >= self.vertex_count()) {
            return false;
        }
        let distinct: BTreeSet<_> = path.iter().collect();
        distinct.len() == path.len() && path.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    /// Largest `k` such that the graph is strongly `k`-connected.
    pub fn strong_connectivity(&self) -> Result<usize> {
        strong_connectivity(self)
    }
}

/// Collapses a directed walk into a path by cutting out every loop at the
/// first revisit, scanning left to right.
pub fn shortcut_walk(walk: &[VertexId]) -> Vec<VertexId> {
    let mut path: Vec<VertexId> = Vec::with_capacity(walk.len());
    let mut position: HashMap<VertexId, usize> = HashMap::new();
    for &v in walk {
        if let Some(&p) = position.get(&v) {
            for removed in path.drain(p + 1..) {
                position.remove(&removed);
            }
        } else {
            position.insert(v, path.len());
            path.push(v);
        }
    }
    path
}

/// A pair `(A, B)` covering the vertex set with no edge from `A \ B` to
/// `B \ A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Separation {
    pub side_a: BTreeSet<VertexId>,
    pub side_b: BTreeSet<VertexId>,
}

impl Separation {
    pub fn new(side_a: BTreeSet<VertexId>, side_b: BTreeSet<VertexId>) -> Self {
        Separation { side_a, side_b }
    }

    pub fn order(&self) -> usize {
        self.separator().len()
    }

    /// `A ∩ B`.
    pub fn separator(&self) -> BTreeSet<VertexId> {
        self.side_a.intersection(&self.side_b).copied().collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.side_a.is_subset(&self.side_b) || self.side_b.is_subset(&self.side_a)
    }

    /// Checks the covering and no-crossing-edge conditions, returning the
    /// offending vertex or edge.
    pub fn validate(&self, g: &Digraph) -> std::result::Result<(), SeparationViolation> {
        for v in g.vertices() {
            if !self.side_a.contains(&v) && !self.side_b.contains(&v) {
                return Err(SeparationViolation::Uncovered(v));
            }
        }
        if let Some(&v) = self
            .side_a
            .union(&self.side_b)
            .find(|&&v| !g.contains_vertex(v))
        {
            return Err(SeparationViolation::UnknownVertex(v));
        }
        for (u, v) in g.edges() {
            let u_left = self.side_a.contains(&u) && !self.side_b.contains(&u);
            let v_right = self.side_b.contains(&v) && !self.side_a.contains(&v);
            if u_left && v_right {
                return Err(SeparationViolation::CrossingEdge(u, v));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, g: &Digraph) -> bool {
        self.validate(g).is_ok()
    }

    /// `S ⊆ A` and `T ⊆ B`.
    pub fn separates(&self, s: &BTreeSet<VertexId>, t: &BTreeSet<VertexId>) -> bool {
        s.is_subset(&self.side_a) && t.is_subset(&self.side_b)
    }

    /// Separates and additionally `S \ B` and `T \ A` are nonempty.
    pub fn properly_separates(&self, s: &BTreeSet<VertexId>, t: &BTreeSet<VertexId>) -> bool {
        self.separates(s, t)
            && s.iter().any(|v| !self.side_b.contains(v))
            && t.iter().any(|v| !self.side_a.contains(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationViolation {
    Uncovered(VertexId),
    UnknownVertex(VertexId),
    CrossingEdge(VertexId, VertexId),
}

impl fmt::Display for SeparationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeparationViolation::Uncovered(v) => write!(f, "vertex {v} on neither side"),
            SeparationViolation::UnknownVertex(v) => write!(f, "vertex {v} not in graph"),
            SeparationViolation::CrossingEdge(u, v) => write!(f, "edge ({u},{v}) crosses A\\B to B\\A"),
        }
    }
}

/// A graph with ordered source and sink tuples.
///
/// Sources are pairwise distinct and sinks are pairwise distinct; a source
/// may coincide with a sink of the same or of a different pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkageInstance {
    pub graph: Digraph,
    pub sources: Vec<VertexId>,
    pub sinks: Vec<VertexId>,
}

impl LinkageInstance {
    pub fn new(graph: Digraph, sources: Vec<VertexId>, sinks: Vec<VertexId>) -> Result<Self> {
        if sources.len() != sinks.len() {
            return invalid(format!(
                "{} sources but {} sinks",
                sources.len(),
                sinks.len()
            ));
        }
        for (what, list) in [("source", &sources), ("sink", &sinks)] {
            let mut seen = BTreeSet::new();
            for &v in list.iter() {
                if !graph.contains_vertex(v) {
                    return invalid(format!("{what} {v} out of range"));
                }
                if !seen.insert(v) {
                    return invalid(format!("{what} {v} repeated"));
                }
            }
        }
        Ok(LinkageInstance { graph, sources, sinks })
    }

    pub fn k(&self) -> usize {
        self.sources.len()
    }

    pub fn terminals(&self) -> BTreeSet<VertexId> {
        self.sources.iter().chain(&self.sinks).copied().collect()
    }
}

/// Ordered list of paths, path `i` serving pair `i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathSystem {
    pub paths: Vec<Vec<VertexId>>,
}

impl PathSystem {
    pub fn new(paths: Vec<Vec<VertexId>>) -> Self {
        PathSystem { paths }
    }

    /// Number of distinct paths through each vertex.
    pub fn usage(&self, n: usize) -> Vec<usize> {
        let mut usage = vec![0; n];
        for path in &self.paths {
            let distinct: BTreeSet<_> = path.iter().copied().collect();
            for v in distinct {
                if v < n {
                    usage[v] += 1;
                }
            }
        }
        usage
    }

    pub fn max_congestion(&self, n: usize) -> usize {
        self.usage(n).into_iter().max().unwrap_or(0)
    }
}

/// Why a path system fails to solve an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PathCount { expected: usize, found: usize },
    EmptyPath { index: usize },
    UnknownVertex { index: usize, vertex: VertexId },
    WrongStart { index: usize, expected: VertexId, found: VertexId },
    WrongEnd { index: usize, expected: VertexId, found: VertexId },
    NotAnEdge { index: usize, step: usize, from: VertexId, to: VertexId },
    RepeatedVertex { index: usize, vertex: VertexId },
    Congestion { vertex: VertexId, paths: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PathCount { expected, found } => {
                write!(f, "expected {expected} paths, found {found}")
            }
            Violation::EmptyPath { index } => write!(f, "path {} is empty", index + 1),
            Violation::UnknownVertex { index, vertex } => {
                write!(f, "path {} uses unknown vertex {vertex}", index + 1)
            }
            Violation::WrongStart { index, expected, found } => write!(
                f,
                "path {} starts at {found}, expected source {expected}",
                index + 1
            ),
            Violation::WrongEnd { index, expected, found } => write!(
                f,
                "path {} ends at {found}, expected sink {expected}",
                index + 1
            ),
            Violation::NotAnEdge { index, step, from, to } => write!(
                f,
                "path {} step {step}: ({from},{to}) is not an edge",
                index + 1
            ),
            Violation::RepeatedVertex { index, vertex } => {
                write!(f, "path {} repeats vertex {vertex}", index + 1)
            }
            Violation::Congestion { vertex, paths } => {
                let list: Vec<String> = paths.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "vertex {vertex} lies on paths {}", list.join(","))
            }
        }
    }
}

/// Checks that `sol` solves `inst` with every vertex on at most `congestion`
/// paths. Returns the first violation found.
pub fn verify_solution(
    inst: &LinkageInstance,
    sol: &PathSystem,
    congestion: usize,
) -> std::result::Result<(), Violation> {
    let g = &inst.graph;
    if sol.paths.len() != inst.k() {
        return Err(Violation::PathCount {
            expected: inst.k(),
            found: sol.paths.len(),
        });
    }
    for (index, path) in sol.paths.iter().enumerate() {
        let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
            return Err(Violation::EmptyPath { index });
        };
        if let Some(&vertex) = path.iter().find(|&&v| !g.contains_vertex(v)) {
            return Err(Violation::UnknownVertex { index, vertex });
        }
        if first != inst.sources[index] {
            return Err(Violation::WrongStart {
                index,
                expected: inst.sources[index],
                found: first,
            });
        }
        if last != inst.sinks[index] {
            return Err(Violation::WrongEnd {
                index,
                expected: inst.sinks[index],
                found: last,
            });
        }
        for (step, w) in path.windows(2).enumerate() {
            if !g.has_edge(w[0], w[1]) {
                return Err(Violation::NotAnEdge {
                    index,
                    step,
                    from: w[0],
                    to: w[1],
                });
            }
        }
        let mut seen = BTreeSet::new();
        for &v in path {
            if !seen.insert(v) {
                return Err(Violation::RepeatedVertex { index, vertex: v });
            }
        }
    }
    let mut on: Vec<Vec<usize>> = vec![Vec::new(); g.vertex_count()];
    for (i, path) in sol.paths.iter().enumerate() {
        for &v in path {
            on[v].push(i);
        }
    }
    for (vertex, paths) in on.into_iter().enumerate() {
        if paths.len() > congestion {
            return Err(Violation::Congestion { vertex, paths });
        }
    }
    Ok(())
}

/// Adds a twin `v'` of `v` with the same in- and out-neighbours plus the
/// edges `(v,v')` and `(v',v)`. The twin gets index `vertex_count()`.
pub fn double_vertex(g: &Digraph, v: VertexId) -> Result<Digraph> {
    if !g.contains_vertex(v) {
        return invalid(format!("vertex {v} out of range"));
    }
    let twin = g.vertex_count();
    let mut edges: Vec<(VertexId, VertexId)> = g.edges().collect();
    edges.extend(g.in_neighbors(v).iter().map(|&u| (u, twin)));
    edges.extend(g.out_neighbors(v).iter().map(|&u| (twin, u)));
    edges.push((v, twin));
    edges.push((twin, v));
    Digraph::new(twin + 1, edges)
}

/// Bookkeeping for a graph in which some vertices received twins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoublingMap {
    pub original_count: usize,
    double_of: Vec<Option<VertexId>>,
    original_of: Vec<VertexId>,
}

impl DoublingMap {
    /// The twin of an original vertex, if it was doubled.
    pub fn double_of(&self, v: VertexId) -> Option<VertexId> {
        self.double_of.get(v).copied().flatten()
    }

    /// The original vertex behind any vertex of the doubled graph.
    pub fn original_of(&self, v: VertexId) -> VertexId {
        self.original_of[v]
    }

    pub fn doubled_count(&self) -> usize {
        self.original_of.len()
    }
}

/// Doubles every vertex of `targets` simultaneously. Twins are numbered
/// `n, n+1, ...` in ascending order of their originals. The result equals
/// doubling the targets one after another in any order.
pub fn double_vertices(g: &Digraph, targets: &BTreeSet<VertexId>) -> Result<(Digraph, DoublingMap)> {
    let n = g.vertex_count();
    if let Some(&v) = targets.iter().find(|&&v| v >= n) {
        return invalid(format!("vertex {v} out of range"));
    }
    let mut double_of = vec![None; n];
    let mut original_of: Vec<VertexId> = (0..n).collect();
    for &v in targets {
        double_of[v] = Some(original_of.len());
        original_of.push(v);
    }
    let copies = |v: VertexId| -> Vec<VertexId> {
        match double_of[v] {
            Some(d) => vec![v, d],
            None => vec![v],
        }
    };
    let mut edges = Vec::new();
    for (u, v) in g.edges() {
        for a in copies(u) {
            for b in copies(v) {
                edges.push((a, b));
            }
        }
    }
    for &v in targets {
        let d = double_of[v].expect("twin assigned above");
        edges.push((v, d));
        edges.push((d, v));
    }
    let graph = Digraph::new(original_of.len(), edges)?;
    Ok((
        graph,
        DoublingMap {
            original_count: n,
            double_of,
            original_of,
        },
    ))
}

/// Reduces half-integral feasibility to integral feasibility: every vertex
/// is doubled, sources stay, and each sink `t` becomes its twin `t'`.
/// A pair with `s = t` keeps `t = s`, so its zero-length path leaves the
/// twin free for another path.
pub fn reduce_half_to_integral(inst: &LinkageInstance) -> Result<(LinkageInstance, DoublingMap)> {
    let all: BTreeSet<VertexId> = inst.graph.vertices().collect();
    let (graph, map) = double_vertices(&inst.graph, &all)?;
    let sinks = inst
        .sources
        .iter()
        .zip(&inst.sinks)
        .map(|(&s, &t)| {
            if s == t {
                s
            } else {
                map.double_of(t).expect("every vertex doubled")
            }
        })
        .collect();
    let reduced = LinkageInstance::new(graph, inst.sources.clone(), sinks)?;
    Ok((reduced, map))
}

/// Maps an integral solution of the doubled instance back to a
/// half-integral solution of the original: twins are replaced by their
/// originals and the resulting walks are shortcut into paths.
pub fn lift_doubled_solution(map: &DoublingMap, sol: &PathSystem) -> PathSystem {
    PathSystem::new(
        sol.paths
            .iter()
            .map(|p| {
                let walk: Vec<VertexId> = p.iter().map(|&v| map.original_of(v)).collect();
                shortcut_walk(&walk)
            })
            .collect(),
    )
}

/// Result of contracting a strongly connected vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contraction {
    pub graph: Digraph,
    /// Index of the new vertex (always the last one).
    pub vertex: VertexId,
    /// Old vertex → new vertex; contracted vertices map to `vertex`.
    pub map: Vec<VertexId>,
}

/// Deletes `set` and replaces it by a single vertex inheriting every edge
/// entering or leaving the set. Surviving vertices keep their relative order.
pub fn contract_set(g: &Digraph, set: &BTreeSet<VertexId>) -> Result<Contraction> {
    if !g.is_strongly_connected_set(set) {
        return precondition("contracted set must induce a strongly connected subgraph");
    }
    let mut map = vec![0; g.vertex_count()];
    let mut next = 0;
    for v in g.vertices() {
        if !set.contains(&v) {
            map[v] = next;
            next += 1;
        }
    }
    let vertex = next;
    for &v in set {
        map[v] = vertex;
    }
    let graph = Digraph::new_dropping_loops(vertex + 1, g.edges().map(|(u, v)| (map[u], map[v])));
    Ok(Contraction { graph, vertex, map })
}

/// Largest `k` such that `g` has at least `k + 1` vertices and no nontrivial
/// separation of order below `k`.
///
/// A minimum nontrivial separator `X` has size `κ`, so one of the first
/// `κ + 1` vertices lies outside `X`; checking local connectivity from and to
/// each of those vertices therefore finds `κ`.
pub fn strong_connectivity(g: &Digraph) -> Result<usize> {
    let n = g.vertex_count();
    if n < 2 {
        return invalid("strong connectivity needs at least two vertices");
    }
    let mut best = n - 1;
    let mut i = 0;
    while i <= best && i < n {
        for w in g.vertices() {
            if w == i {
                continue;
            }
            for (a, b) in [(i, w), (w, i)] {
                if g.has_edge(a, b) {
                    continue;
                }
                let local = flow::local_connectivity(g, a, b, best);
                best = best.min(local);
            }
        }
        i += 1;
    }
    Ok(best)
}

#[cfg(test)]
pub(crate) fn to_set(items: impl IntoIterator<Item = VertexId>) -> BTreeSet<VertexId> {
    items.into_iter().collect()
}

impl From<SeparationViolation> for Error {
    fn from(v: SeparationViolation) -> Self {
        Error::Invariant(format!("invalid separation: {v}"))
    }
}

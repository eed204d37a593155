//! Linking terminals into a depth-two bramble and routing inside it.
//!
//! Sub-brambles are index lists into the bag list of the bramble they were
//! taken from. Contracted graphs number their free vertices first, in
//! ascending order, then one clique vertex per sub-bramble bag.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::bramble::{validate_bramble, Bramble};
use crate::error::{invalid, precondition, Error, Result};
use crate::flow::{is_properly_alpha_connected, max_disjoint_paths_avoiding, min_proper_separation};
use crate::graph::{
    double_vertices, shortcut_walk, verify_solution, Digraph, LinkageInstance, PathSystem,
    Separation, VertexId,
};
use crate::weave::Verdict;

/// Identity of a vertex of a contracted graph, stable across graphs built
/// from the same bramble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Vertex(VertexId),
    /// The contraction of a bag, by its index in the universe bramble.
    Bag(usize),
}

/// `G(B1; B)`: twins for vertices in two bags of `B` and one of `B1`, then
/// every (disjointified) bag of `B1` contracted.
#[derive(Debug, Clone)]
pub struct ContractedView {
    pub graph: Digraph,
    /// The universe bramble `B`.
    pub bramble: Bramble,
    /// `B1` as indices into `bramble`, in clique order.
    pub sub: Vec<usize>,
    pub nodes: Vec<Node>,
    pub free_count: usize,
    /// Vertices that received a twin.
    pub doubled: BTreeSet<VertexId>,
    node_of_vertex: BTreeMap<VertexId, usize>,
}

impl ContractedView {
    pub fn clique(&self) -> BTreeSet<usize> {
        (self.free_count..self.nodes.len()).collect()
    }

    pub fn is_clique(&self, x: usize) -> bool {
        x >= self.free_count
    }

    pub fn bag_of(&self, x: usize) -> Option<usize> {
        match self.nodes[x] {
            Node::Bag(b) => Some(b),
            Node::Vertex(_) => None,
        }
    }

    /// The bag a clique vertex stands for.
    pub fn im(&self, x: usize) -> &BTreeSet<VertexId> {
        let b = self.bag_of(x).expect("im of a free vertex");
        &self.bramble.bags[b]
    }

    pub fn vertex_of(&self, x: usize) -> Option<VertexId> {
        match self.nodes[x] {
            Node::Vertex(v) => Some(v),
            Node::Bag(_) => None,
        }
    }

    pub fn node(&self, id: Node) -> Option<usize> {
        match id {
            Node::Vertex(v) => self.node_of_vertex.get(&v).copied(),
            Node::Bag(b) => self.sub.iter().position(|&s| s == b).map(|i| self.free_count + i),
        }
    }

    pub fn identities(&self, ids: &BTreeSet<usize>) -> BTreeSet<Node> {
        ids.iter().map(|&x| self.nodes[x]).collect()
    }

    /// Node ids of the given identities; `None` if one is absent.
    pub fn ids(&self, set: &BTreeSet<Node>) -> Option<BTreeSet<usize>> {
        set.iter().map(|&n| self.node(n)).collect()
    }

    /// Node ids of free vertices; errors if one is contracted.
    pub fn free_ids(&self, vs: &BTreeSet<VertexId>) -> Result<BTreeSet<usize>> {
        vs.iter()
            .map(|&v| {
                self.node(Node::Vertex(v))
                    .ok_or_else(|| Error::Precondition(format!("vertex {v} lies in a contracted bag")))
            })
            .collect()
    }
}

/// Builds `G(B1; B)` with `B1` given by `sub`.
///
/// A vertex in two bags both in `B1` stays in the lower-indexed bag and its
/// twin replaces it in the other; if only one of its bags is in `B1`, the
/// twin goes there and the vertex itself stays free.
pub fn build_contracted(g: &Digraph, bramble: &Bramble, sub: &[usize]) -> Result<ContractedView> {
    let n = g.vertex_count();
    let mut in_sub = vec![false; bramble.len()];
    for &b in sub {
        if b >= bramble.len() {
            return invalid(format!("bag index {b} out of range"));
        }
        if in_sub[b] {
            return invalid(format!("bag index {b} repeated"));
        }
        in_sub[b] = true;
    }
    let mut bags_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (b, bag) in bramble.bags.iter().enumerate() {
        if bag.is_empty() {
            return precondition(format!("bag {b} is empty"));
        }
        for &v in bag {
            if v >= n {
                return invalid(format!("bag {b} holds unknown vertex {v}"));
            }
            bags_of[v].push(b);
        }
    }
    if bags_of.iter().any(|l| l.len() > 2) {
        return precondition("bramble depth exceeds two");
    }
    let doubled: BTreeSet<VertexId> = (0..n)
        .filter(|&v| bags_of[v].len() == 2 && bags_of[v].iter().any(|&b| in_sub[b]))
        .collect();
    let (gp, map) = double_vertices(g, &doubled)?;

    let mut owner: Vec<Option<usize>> = vec![None; gp.vertex_count()];
    for (ci, &b) in sub.iter().enumerate() {
        let mut members = BTreeSet::new();
        for &v in &bramble.bags[b] {
            let x = if doubled.contains(&v) {
                let (b1, b2) = (bags_of[v][0].min(bags_of[v][1]), bags_of[v][0].max(bags_of[v][1]));
                if in_sub[b1] && in_sub[b2] && b == b1 {
                    v
                } else {
                    map.double_of(v).expect("doubled above")
                }
            } else {
                v
            };
            if owner[x].is_some() {
                return Err(Error::Invariant(format!("vertex {x} assigned to two bags")));
            }
            owner[x] = Some(ci);
            members.insert(x);
        }
        if !gp.is_strongly_connected_set(&members) {
            return precondition(format!("bag {b} is not strongly connected"));
        }
    }

    let mut nodes = Vec::new();
    let mut id = vec![0usize; gp.vertex_count()];
    let mut node_of_vertex = BTreeMap::new();
    for x in gp.vertices() {
        if owner[x].is_none() {
            if x >= n {
                return Err(Error::Invariant(format!("twin {x} left uncontracted")));
            }
            id[x] = nodes.len();
            node_of_vertex.insert(x, nodes.len());
            nodes.push(Node::Vertex(x));
        }
    }
    let free_count = nodes.len();
    nodes.extend(sub.iter().map(|&b| Node::Bag(b)));
    for x in gp.vertices() {
        if let Some(ci) = owner[x] {
            id[x] = free_count + ci;
        }
    }
    let graph = Digraph::new_dropping_loops(nodes.len(), gp.edges().map(|(u, v)| (id[u], id[v])));
    for a in free_count..nodes.len() {
        for b in free_count..nodes.len() {
            if a != b && !graph.has_edge(a, b) {
                return precondition(format!(
                    "bags {} and {} do not touch",
                    sub[a - free_count],
                    sub[b - free_count]
                ));
            }
        }
    }
    Ok(ContractedView {
        graph,
        bramble: bramble.clone(),
        sub: sub.to_vec(),
        nodes,
        free_count,
        doubled,
        node_of_vertex,
    })
}

/// Orientation of a linkage relative to the clique.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Paths end in the clique.
    ToClique,
    /// Paths start in the clique.
    FromClique,
}

fn oriented(paths: &[Vec<usize>], dir: Direction) -> Vec<Vec<usize>> {
    paths
        .iter()
        .map(|p| match dir {
            Direction::ToClique => p.clone(),
            Direction::FromClique => p.iter().rev().copied().collect(),
        })
        .collect()
}

/// Clique vertices that no path ends at (in to-clique orientation) and that
/// are not forbidden.
fn unused_clique(view: &ContractedView, paths: &[Vec<usize>], forbidden: &BTreeSet<usize>) -> BTreeSet<usize> {
    let used: BTreeSet<usize> = paths.iter().filter_map(|p| p.last().copied()).collect();
    view.clique()
        .into_iter()
        .filter(|c| !used.contains(c) && !forbidden.contains(c))
        .collect()
}

/// Whether no path has an internal clique vertex or an internal vertex of
/// `im(c)` for an unused clique vertex `c`. Forbidden clique vertices count
/// as used.
pub fn is_b_minimal(
    view: &ContractedView,
    paths: &[Vec<usize>],
    dir: Direction,
    forbidden: &BTreeSet<usize>,
) -> bool {
    let paths = oriented(paths, dir);
    if paths
        .iter()
        .any(|p| p.is_empty() || !view.is_clique(*p.last().unwrap()) || view.is_clique(p[0]))
    {
        return false;
    }
    let unused = unused_clique(view, &paths, forbidden);
    paths.iter().all(|p| {
        p[1..p.len() - 1].iter().all(|&x| {
            !view.is_clique(x) && {
                let v = view.vertex_of(x).unwrap();
                unused.iter().all(|&c| !view.im(c).contains(&v))
            }
        })
    })
}

/// Truncates paths until [`is_b_minimal`] holds: at an internal clique
/// vertex, or at an internal vertex of `im(c)` for an unused `c`, which is
/// then appended.
pub fn make_b_minimal(
    view: &ContractedView,
    paths: &[Vec<usize>],
    dir: Direction,
    forbidden: &BTreeSet<usize>,
) -> Vec<Vec<usize>> {
    let mut work = oriented(paths, dir);
    let edge = |x: usize, c: usize| match dir {
        Direction::ToClique => view.graph.has_edge(x, c),
        Direction::FromClique => view.graph.has_edge(c, x),
    };
    'again: loop {
        let unused = unused_clique(view, &work, forbidden);
        for p in work.iter_mut() {
            for pos in 1..p.len().saturating_sub(1) {
                let x = p[pos];
                if view.is_clique(x) {
                    p.truncate(pos + 1);
                    continue 'again;
                }
                let v = view.vertex_of(x).unwrap();
                if let Some(&c) = unused.iter().find(|&&c| view.im(c).contains(&v) && edge(x, c)) {
                    p.truncate(pos + 1);
                    p.push(c);
                    continue 'again;
                }
            }
        }
        break;
    }
    oriented(&work, dir)
}

/// Given `k+1` proper subsets of a `k`-set, finds two whose union misses an
/// element. Follows the induction: drop an element `v` such that at most one
/// subset equals `A \ {v}`, discard that subset, recurse.
pub fn subsets_pair<T: Ord + Clone>(universe: &BTreeSet<T>, subsets: &[BTreeSet<T>]) -> Result<(usize, usize)> {
    if universe.is_empty() {
        return invalid("universe must be nonempty");
    }
    if subsets.len() != universe.len() + 1 {
        return invalid(format!("need {} subsets, got {}", universe.len() + 1, subsets.len()));
    }
    for (i, s) in subsets.iter().enumerate() {
        if !s.is_subset(universe) || s == universe {
            return precondition(format!("subset {i} is not a proper subset of the universe"));
        }
    }
    let mut current: Vec<T> = universe.iter().cloned().collect();
    let mut live: Vec<usize> = (0..subsets.len()).collect();
    while current.len() > 1 {
        let restricted = |i: usize, drop: &T| -> bool {
            current.iter().all(|x| x == drop || subsets[i].contains(x))
        };
        let (pos, equal) = current
            .iter()
            .enumerate()
            .find_map(|(pos, v)| {
                let equal: Vec<usize> = live.iter().copied().filter(|&i| restricted(i, v)).collect();
                (equal.len() <= 1).then_some((pos, equal))
            })
            .ok_or_else(|| Error::Invariant("no element is missing from enough subsets".into()))?;
        let discard = equal.first().copied().unwrap_or(*live.last().unwrap());
        live.retain(|&i| i != discard);
        current.remove(pos);
    }
    let (i, j) = (live[0].min(live[1]), live[0].max(live[1]));
    let union: BTreeSet<T> = subsets[i].union(&subsets[j]).cloned().collect();
    if &union == universe {
        return Err(Error::Invariant("returned pair covers the universe".into()));
    }
    Ok((i, j))
}

/// A separation recorded by node identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSeparation {
    pub a: BTreeSet<Node>,
    pub b: BTreeSet<Node>,
}

impl NodeSeparation {
    fn from_view(view: &ContractedView, sep: &Separation) -> Self {
        NodeSeparation {
            a: view.identities(&sep.side_a),
            b: view.identities(&sep.side_b),
        }
    }

    pub fn separator(&self) -> BTreeSet<Node> {
        self.a.intersection(&self.b).copied().collect()
    }

    pub fn order(&self) -> usize {
        self.a.intersection(&self.b).count()
    }

    /// The separation as node ids of `view`, if every node exists there.
    pub fn in_view(&self, view: &ContractedView) -> Option<Separation> {
        Some(Separation::new(view.ids(&self.a)?, view.ids(&self.b)?))
    }
}

/// One iteration `i` of Algorithm 1.
#[derive(Debug, Clone)]
pub struct CutRecord {
    /// `(A_i', B_i')` in `G_{i-1}`.
    pub cut: NodeSeparation,
    /// `C_i` as bag indices, which is also the removed bag list.
    pub removed: Vec<usize>,
    /// `(A_i, B_i)` in `G_i`.
    pub lifted: NodeSeparation,
    /// `B_i`.
    pub surviving: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CutOutcome {
    /// At iteration `m` the minimum proper separation had order at least
    /// `alpha` (`order` is `None` when no proper separation exists).
    Connected { m: usize, sub: Vec<usize>, order: Option<usize> },
    /// Every bag was removed.
    Exhausted,
    /// `m_cap` iterations ran, all of order below `alpha`.
    CapReached,
}

/// Trace of Algorithm 1. `views[i]` is `G_i`.
#[derive(Debug, Clone)]
pub struct CutSequenceState {
    pub sources: BTreeSet<VertexId>,
    pub alpha: usize,
    pub records: Vec<CutRecord>,
    pub views: Vec<ContractedView>,
    pub outcome: CutOutcome,
}

impl CutSequenceState {
    /// `A_j' ∩ B_j'` restricted to vertices of `G`.
    fn cut_vertices(&self, j: usize) -> BTreeSet<VertexId> {
        self.records[j - 1]
            .cut
            .separator()
            .into_iter()
            .filter_map(|n| match n {
                Node::Vertex(v) => Some(v),
                Node::Bag(_) => None,
            })
            .collect()
    }

    /// Whether the cut of iteration `j` meets a bag removed at iteration `i`.
    pub fn conflicts(&self, j: usize, i: usize) -> bool {
        let cut = self.cut_vertices(j);
        let bramble = &self.views[0].bramble;
        self.records[i - 1]
            .removed
            .iter()
            .any(|&b| bramble.bags[b].iter().any(|v| cut.contains(v)))
    }
}

/// Runs Algorithm 1 on `G(B; B)` for up to `m_cap` iterations, stopping
/// early once the minimum proper separation of `S` from the clique has order
/// at least `alpha`. The invariants of every iteration are asserted.
pub fn cut_sequence(
    g: &Digraph,
    bramble: &Bramble,
    s_set: &BTreeSet<VertexId>,
    alpha: usize,
    m_cap: usize,
) -> Result<CutSequenceState> {
    let covered = bramble.union();
    if s_set.iter().any(|v| covered.contains(v)) {
        return precondition("terminals must lie outside every bag");
    }
    let mut sub: Vec<usize> = (0..bramble.len()).collect();
    let mut view = build_contracted(g, bramble, &sub)?;
    let mut state = CutSequenceState {
        sources: s_set.clone(),
        alpha,
        records: Vec::new(),
        views: vec![view.clone()],
        outcome: CutOutcome::CapReached,
    };
    for i in 1..=m_cap {
        if sub.is_empty() {
            state.outcome = CutOutcome::Exhausted;
            return Ok(state);
        }
        let s_ids = view.free_ids(s_set)?;
        let k_ids = view.clique();
        let Some(sep) = min_proper_separation(&view.graph, &s_ids, &k_ids) else {
            state.outcome = CutOutcome::Connected { m: i, sub, order: None };
            return Ok(state);
        };
        if !sep.properly_separates(&s_ids, &k_ids) || !sep.is_valid(&view.graph) {
            return Err(Error::Invariant(format!("iteration {i}: cut is not a proper separation")));
        }
        if sep.order() >= alpha {
            state.outcome = CutOutcome::Connected {
                m: i,
                sub,
                order: Some(sep.order()),
            };
            return Ok(state);
        }
        let cut = NodeSeparation::from_view(&view, &sep);
        let removed: Vec<usize> = sep
            .separator()
            .into_iter()
            .filter_map(|x| view.bag_of(x))
            .collect();
        sub.retain(|b| !removed.contains(b));
        let expanded: BTreeSet<Node> = removed
            .iter()
            .flat_map(|&b| bramble.bags[b].iter().map(|&v| Node::Vertex(v)))
            .collect();
        let strip = |side: &BTreeSet<Node>| -> BTreeSet<Node> {
            side.iter()
                .copied()
                .filter(|n| !matches!(n, Node::Bag(b) if removed.contains(b)))
                .chain(expanded.iter().copied())
                .collect()
        };
        let lifted = NodeSeparation {
            a: strip(&cut.a),
            b: strip(&cut.b),
        };
        view = build_contracted(g, bramble, &sub)?;
        let in_view = lifted
            .in_view(&view)
            .ok_or_else(|| Error::Invariant(format!("iteration {i}: lifted separation names a missing vertex")))?;
        if !in_view.is_valid(&view.graph) {
            return Err(Error::Invariant(format!("iteration {i}: (A_i, B_i) is not a separation")));
        }
        if in_view.separator().iter().any(|&x| view.is_clique(x)) {
            return Err(Error::Invariant(format!("iteration {i}: A_i ∩ B_i meets K_i")));
        }
        let k_now = view.clique();
        if !k_now.is_empty() && !in_view.properly_separates(&view.free_ids(s_set)?, &k_now) {
            return Err(Error::Invariant(format!("iteration {i}: (A_i, B_i) is not proper")));
        }
        state.records.push(CutRecord {
            cut,
            removed,
            lifted,
            surviving: sub.clone(),
        });
        state.views.push(view.clone());
    }
    state.outcome = if sub.is_empty() {
        CutOutcome::Exhausted
    } else {
        CutOutcome::CapReached
    };
    Ok(state)
}

/// Algorithm 2: `k+1` iteration indices (1-based, ascending) such that for
/// `i < j` in the set the cut of `j` avoids every bag removed at `i`.
pub fn find_index_set(state: &CutSequenceState, k: usize) -> Result<Vec<usize>> {
    let m = state.records.len();
    if m == 0 || k == 0 {
        return invalid("need a nonempty trace and k >= 1");
    }
    if state.records.iter().any(|r| r.cut.order() >= state.alpha) {
        return precondition("every recorded cut must have order below alpha");
    }
    let mut chosen = vec![m];
    let mut pool: BTreeSet<usize> = (1..m).filter(|&i| !state.conflicts(m, i)).collect();
    for _ in 0..k {
        let &next = pool.iter().next_back().ok_or_else(|| {
            Error::Invariant(format!("index pool ran dry after {} picks", chosen.len()))
        })?;
        chosen.push(next);
        pool.remove(&next);
        pool.retain(|&i| !state.conflicts(next, i));
    }
    chosen.sort_unstable();
    for (a, &i) in chosen.iter().enumerate() {
        for &j in &chosen[a + 1..] {
            if state.conflicts(j, i) {
                return Err(Error::Invariant(format!("cut {j} meets a bag removed at {i}")));
            }
        }
    }
    Ok(chosen)
}

/// Indices `i < j` from `indices` with `(A_i ∩ A_j') \ (B_i ∩ B_j')`
/// nonempty, chosen through [`subsets_pair`] on the sets `S ∩ A_l' ∩ B_l'`.
pub fn good_cut_pair(state: &CutSequenceState, indices: &[usize]) -> Result<(usize, usize)> {
    let s: BTreeSet<Node> = state.sources.iter().map(|&v| Node::Vertex(v)).collect();
    let subsets: Vec<BTreeSet<Node>> = indices
        .iter()
        .map(|&l| state.records[l - 1].cut.separator().intersection(&s).copied().collect())
        .collect();
    let (a, b) = subsets_pair(&s, &subsets)?;
    let (i, j) = (indices[a], indices[b]);
    let (ri, rj) = (&state.records[i - 1].lifted, &state.records[j - 1].cut);
    let left: BTreeSet<Node> = ri.a.intersection(&rj.a).copied().collect();
    let both: BTreeSet<Node> = ri.b.intersection(&rj.b).copied().collect();
    if left.is_subset(&both) {
        return Err(Error::Invariant(format!("pair ({i}, {j}) fails the second property")));
    }
    Ok((i, j))
}

/// Connectivity targets of the linker. `None` means the mode default.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkerConfig {
    pub relaxed: bool,
    pub alpha_s: Option<usize>,
    pub alpha_t: Option<usize>,
}

impl LinkerConfig {
    pub fn relaxed() -> Self {
        LinkerConfig {
            relaxed: true,
            ..Default::default()
        }
    }

    /// `36k³ + 2k` strict, `3k` relaxed.
    pub fn alpha_s(&self, k: usize) -> usize {
        self.alpha_s
            .unwrap_or(if self.relaxed { 3 * k } else { 36 * k * k * k + 2 * k })
    }

    pub fn alpha_t(&self, k: usize) -> usize {
        self.alpha_t.unwrap_or(3 * k)
    }
}

/// Bramble size the solver needs for `k` pairs with the strict targets:
/// room for the bags that touch terminals, both pruning rounds and the
/// final `2k` bags.
pub fn bramble_size_needed(k: usize) -> u128 {
    let k = k as u128;
    let a_s = 36 * k * k * k + 2 * k;
    let a_t = 3 * k;
    4 * k + (188 * k * k * k + 1).max(4 * k * a_s * a_s + 4 * k * a_t * a_t + 2 * k)
}

/// Result of [`link_one_side`].
#[derive(Debug, Clone)]
pub struct OneSide {
    /// `B_S` as indices into the input bramble.
    pub sub: Vec<usize>,
    pub trace: CutSequenceState,
}

/// Whether `S` is properly `alpha`-connected to the clique of `G(sub; B)`.
pub fn one_side_certificate(
    g: &Digraph,
    bramble: &Bramble,
    sub: &[usize],
    s_set: &BTreeSet<VertexId>,
    alpha: usize,
) -> Result<bool> {
    if sub.is_empty() {
        return Ok(false);
    }
    let view = build_contracted(g, bramble, sub)?;
    let s_ids = view.free_ids(s_set)?;
    Ok(is_properly_alpha_connected(&view.graph, &s_ids, &view.clique(), alpha))
}

/// Prunes bags until `S` is `alpha`-connected to the contracted clique.
pub fn link_one_side(
    g: &Digraph,
    bramble: &Bramble,
    s_set: &BTreeSet<VertexId>,
    k: usize,
    alpha: usize,
    beta: usize,
    relaxed: bool,
) -> Result<Verdict<OneSide>> {
    if !(k <= alpha && alpha <= beta) {
        return invalid(format!("need k <= alpha <= beta, got {k}, {alpha}, {beta}"));
    }
    let overhead = 4 * k * alpha * alpha;
    if !relaxed {
        if bramble.len() <= overhead {
            return Err(Error::SizeLimit(format!(
                "bramble of size {} must exceed 4k*alpha^2 = {overhead}",
                bramble.len()
            )));
        }
        if g.strong_connectivity()? < beta {
            return precondition(format!("graph is not {beta}-strongly connected"));
        }
    }
    let trace = cut_sequence(g, bramble, s_set, alpha, 2 * k * alpha)?;
    let sub = match &trace.outcome {
        CutOutcome::Connected { sub, .. } => sub.clone(),
        CutOutcome::Exhausted => return fail(relaxed, "bramble exhausted before S became connected"),
        CutOutcome::CapReached => return fail(relaxed, "every cut stayed below alpha"),
    };
    if !one_side_certificate(g, bramble, &sub, s_set, alpha)? {
        return Err(Error::Invariant("alpha-connectivity certificate failed".into()));
    }
    if !relaxed && bramble.len() - sub.len() >= overhead {
        return Err(Error::Invariant("pruned more than 4k*alpha^2 bags".into()));
    }
    Ok(Verdict::Done(OneSide { sub, trace }))
}

fn fail<T>(relaxed: bool, why: impl Into<String>) -> Result<Verdict<T>> {
    if relaxed {
        Ok(Verdict::Failed(why.into()))
    } else {
        Err(Error::Invariant(why.into()))
    }
}

/// Brambles `B_T ⊆ B_S ⊆ B`, both as indices into `bramble`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contracted {
    pub sub_s: Vec<usize>,
    pub sub_t: Vec<usize>,
}

/// `S` side at `alpha_s` in `G(B_S; B)`, then the `T` side at `alpha_t` in
/// `G(B_T; B_S)` via the reversed graph.
pub fn link_contracted(
    g: &Digraph,
    bramble: &Bramble,
    inst: &LinkageInstance,
    cfg: &LinkerConfig,
) -> Result<Verdict<Contracted>> {
    let k = inst.k();
    let (a_s, a_t) = (cfg.alpha_s(k), cfg.alpha_t(k));
    let sources: BTreeSet<VertexId> = inst.sources.iter().copied().collect();
    let sinks: BTreeSet<VertexId> = inst.sinks.iter().copied().collect();
    let s_side = match link_one_side(g, bramble, &sources, k, a_s, a_s, cfg.relaxed)? {
        Verdict::Done(x) => x,
        Verdict::Failed(why) => return Ok(Verdict::Failed(format!("source side: {why}"))),
    };
    let inner = bramble.select(&s_side.sub);
    let rev = g.reversed();
    let t_side = match link_one_side(&rev, &inner, &sinks, k, a_t, a_t.max(a_s), cfg.relaxed)? {
        Verdict::Done(x) => x,
        Verdict::Failed(why) => return Ok(Verdict::Failed(format!("sink side: {why}"))),
    };
    let sub_t: Vec<usize> = t_side.sub.iter().map(|&i| s_side.sub[i]).collect();
    if !one_side_certificate(&rev, &inner, &t_side.sub, &sinks, a_t)? {
        return Err(Error::Invariant("sink-side certificate failed".into()));
    }
    Ok(Verdict::Done(Contracted {
        sub_s: s_side.sub,
        sub_t,
    }))
}

/// Output of [`link_up`]. Bags are indices into the input bramble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkUp {
    pub s_paths: Vec<Vec<VertexId>>,
    pub t_paths: Vec<Vec<VertexId>>,
    pub s_prime: Vec<VertexId>,
    pub t_prime: Vec<VertexId>,
    pub bags_s: Vec<usize>,
    pub bags_t: Vec<usize>,
    pub sub_s: Vec<usize>,
    pub sub_t: Vec<usize>,
}

/// The first of A1–A7 that fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkUpViolation {
    pub assertion: &'static str,
    pub detail: String,
}

impl fmt::Display for LinkUpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails: {}", self.assertion, self.detail)
    }
}

/// Checks A1–A7 for a [`LinkUp`] against the instance it was built for.
pub fn check_link_up(
    g: &Digraph,
    bramble: &Bramble,
    inst: &LinkageInstance,
    lu: &LinkUp,
) -> std::result::Result<(), LinkUpViolation> {
    let k = inst.k();
    let violation = |a: &'static str, d: String| Err(LinkUpViolation { assertion: a, detail: d });
    if [lu.s_paths.len(), lu.t_paths.len(), lu.s_prime.len(), lu.t_prime.len(), lu.bags_s.len(), lu.bags_t.len()]
        .iter()
        .any(|&l| l != k)
    {
        return violation("A1", "wrong number of paths or endpoints".into());
    }
    for i in 0..k {
        let (ps, pt) = (&lu.s_paths[i], &lu.t_paths[i]);
        if !g.is_path(ps) || ps[0] != inst.sources[i] || *ps.last().unwrap() != lu.s_prime[i] {
            return violation("A1", format!("source path {i} is not a path from s_{i} to s'_{i}"));
        }
        if !g.is_path(pt) || *pt.last().unwrap() != inst.sinks[i] || pt[0] != lu.t_prime[i] {
            return violation("A1", format!("sink path {i} is not a path from t'_{i} to t_{i}"));
        }
    }
    let all_bags: Vec<usize> = lu.bags_s.iter().chain(&lu.bags_t).copied().collect();
    let distinct: BTreeSet<usize> = all_bags.iter().copied().collect();
    if distinct.len() != 2 * k || all_bags.iter().any(|&b| b >= bramble.len()) {
        return violation("A2", "bags are not 2k distinct bags of the bramble".into());
    }
    for i in 0..k {
        if !bramble.bags[lu.bags_s[i]].contains(&lu.s_prime[i]) || !bramble.bags[lu.bags_t[i]].contains(&lu.t_prime[i]) {
            return violation("A2", format!("endpoint of pair {i} outside its bag"));
        }
    }
    for (name, paths, ends) in [("A3", &lu.s_paths, &lu.s_prime), ("A4", &lu.t_paths, &lu.t_prime)] {
        let mut on: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
        for (i, p) in paths.iter().enumerate() {
            for &v in p {
                on.entry(v).or_default().push(i);
            }
        }
        for (v, ids) in on {
            if ids.len() > 2 || (ids.len() == 2 && v != ends[ids[0]] && v != ends[ids[1]]) {
                return violation(name, format!("vertex {v} shared by paths {ids:?}"));
            }
        }
    }
    let chosen: Vec<&BTreeSet<VertexId>> = all_bags.iter().map(|&b| &bramble.bags[b]).collect();
    let bag_count = |v: VertexId| chosen.iter().filter(|b| b.contains(&v)).count();
    for p in lu.s_paths.iter().chain(&lu.t_paths) {
        if p.len() > 2 {
            if let Some(&v) = p[1..p.len() - 1].iter().find(|&&v| bag_count(v) > 1) {
                return violation("A5", format!("internal vertex {v} lies in two chosen bags"));
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                if i == j || j == l || i == l {
                    continue;
                }
                let zone: BTreeSet<VertexId> = chosen[l].union(chosen[k + l]).copied().collect();
                if let Some(v) = lu.s_paths[i]
                    .iter()
                    .find(|v| lu.t_paths[j].contains(v) && zone.contains(v))
                {
                    return violation("A6", format!("vertex {v} in P_{i}^s, P_{j}^t and bags of pair {l}"));
                }
            }
        }
    }
    let usage = PathSystem::new(lu.s_paths.iter().chain(&lu.t_paths).cloned().collect()).usage(g.vertex_count());
    if let Some(v) = (0..usage.len()).find(|&v| usage[v] > 2) {
        return violation("A7", format!("vertex {v} lies on {} paths", usage[v]));
    }
    Ok(())
}

/// Disjoint paths from the sources into the clique of `G(B_T; B)` avoiding
/// `W`, and from the clique of `G(B_T; B_S)` to the sinks, turned into paths
/// of `G` that satisfy A1–A7.
pub fn link_up(
    g: &Digraph,
    bramble: &Bramble,
    inst: &LinkageInstance,
    cfg: &LinkerConfig,
) -> Result<Verdict<LinkUp>> {
    let k = inst.k();
    if !cfg.relaxed && (bramble.len() as u128) <= 188 * (k as u128).pow(3) {
        return Err(Error::SizeLimit(format!("bramble must exceed 188k^3 = {} bags", 188 * k.pow(3))));
    }
    let Contracted { sub_s, sub_t } = match link_contracted(g, bramble, inst, cfg)? {
        Verdict::Done(c) => c,
        Verdict::Failed(why) => return Ok(Verdict::Failed(why)),
    };

    let view1 = build_contracted(g, bramble, &sub_t)?;
    let in_t = |v: VertexId| sub_t.iter().filter(|&&b| bramble.bags[b].contains(&v)).count();
    let in_s = |v: VertexId| sub_s.iter().filter(|&&b| bramble.bags[b].contains(&v)).count();
    let w: BTreeSet<VertexId> = (0..g.vertex_count())
        .filter(|&v| view1.node(Node::Vertex(v)).is_some() && in_t(v) == 1 && in_s(v) == 2)
        .collect();
    let w_ids = view1.free_ids(&w)?;
    let sources: BTreeSet<VertexId> = inst.sources.iter().copied().collect();
    let s_ids = view1.free_ids(&sources)?;
    let (sys, _) = max_disjoint_paths_avoiding(&view1.graph, &s_ids, &view1.clique(), &w_ids);
    if sys.paths.len() < k {
        return fail(cfg.relaxed, format!("claim 1: only {} disjoint paths into the clique", sys.paths.len()));
    }
    let paths = make_b_minimal(&view1, &sys.paths, Direction::ToClique, &BTreeSet::new());
    if !is_b_minimal(&view1, &paths, Direction::ToClique, &BTreeSet::new()) {
        return Err(Error::Invariant("source linkage is not minimal".into()));
    }
    let by_start: BTreeMap<usize, &Vec<usize>> = paths.iter().map(|p| (p[0], p)).collect();
    let (mut s_paths, mut s_prime, mut bags_s, mut v_nodes) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &s in &inst.sources {
        let p = by_start[&view1.node(Node::Vertex(s)).unwrap()];
        let vi = *p.last().unwrap();
        let bag = view1.bag_of(vi).unwrap();
        let u = view1.vertex_of(p[p.len() - 2]).unwrap();
        let mut walk: Vec<VertexId> = p[..p.len() - 1].iter().map(|&x| view1.vertex_of(x).unwrap()).collect();
        if !bramble.bags[bag].contains(&u) {
            let entry = *bramble.bags[bag]
                .iter()
                .find(|&&x| g.has_edge(u, x))
                .ok_or_else(|| Error::Invariant(format!("no edge from {u} into bag {bag}")))?;
            walk.push(entry);
        }
        let path = shortcut_walk(&walk);
        s_prime.push(*path.last().unwrap());
        s_paths.push(path);
        bags_s.push(bag);
        v_nodes.push(vi);
    }

    let inner = bramble.select(&sub_s);
    let local_t: Vec<usize> = sub_t
        .iter()
        .map(|b| sub_s.iter().position(|x| x == b).expect("B_T inside B_S"))
        .collect();
    let view2 = build_contracted(g, &inner, &local_t)?;
    let mut removed: BTreeSet<usize> = BTreeSet::new();
    for &b in &bags_s {
        let local = sub_s.iter().position(|&x| x == b).unwrap();
        removed.insert(view2.node(Node::Bag(local)).unwrap());
    }
    let forbidden = removed.clone();
    removed.extend(s_prime.iter().filter_map(|&v| view2.node(Node::Vertex(v))));
    let starts: BTreeSet<usize> = view2.clique().difference(&removed).copied().collect();
    let sinks: BTreeSet<VertexId> = inst.sinks.iter().copied().collect();
    let t_ids = view2.free_ids(&sinks)?;
    if t_ids.iter().any(|x| removed.contains(x)) {
        return fail(cfg.relaxed, "claim 2: a sink coincides with a chosen entry vertex");
    }
    let (sys, _) = max_disjoint_paths_avoiding(&view2.graph, &starts, &t_ids, &removed);
    if sys.paths.len() < k {
        return fail(cfg.relaxed, format!("claim 2: only {} disjoint paths out of the clique", sys.paths.len()));
    }
    let paths = make_b_minimal(&view2, &sys.paths, Direction::FromClique, &forbidden);
    if !is_b_minimal(&view2, &paths, Direction::FromClique, &forbidden) {
        return Err(Error::Invariant("sink linkage is not minimal".into()));
    }
    let by_end: BTreeMap<usize, &Vec<usize>> = paths.iter().map(|p| (*p.last().unwrap(), p)).collect();
    let (mut t_paths, mut t_prime, mut bags_t) = (Vec::new(), Vec::new(), Vec::new());
    for &t in &inst.sinks {
        let q = by_end[&view2.node(Node::Vertex(t)).unwrap()];
        let bag = sub_s[view2.bag_of(q[0]).unwrap()];
        let u = view2.vertex_of(q[1]).unwrap();
        let mut walk: Vec<VertexId> = Vec::new();
        if !bramble.bags[bag].contains(&u) {
            let exit = *bramble.bags[bag]
                .iter()
                .find(|&&x| g.has_edge(x, u))
                .ok_or_else(|| Error::Invariant(format!("no edge from bag {bag} to {u}")))?;
            walk.push(exit);
        }
        walk.extend(q[1..].iter().map(|&x| view2.vertex_of(x).unwrap()));
        let path = shortcut_walk(&walk);
        t_prime.push(path[0]);
        t_paths.push(path);
        bags_t.push(bag);
    }
    let lu = LinkUp {
        s_paths,
        t_paths,
        s_prime,
        t_prime,
        bags_s,
        bags_t,
        sub_s,
        sub_t,
    };
    match check_link_up(g, bramble, inst, &lu) {
        Ok(()) => Ok(Verdict::Done(lu)),
        Err(v) => fail(cfg.relaxed, v.to_string()),
    }
}

/// Routes `s'_i` to `t'_i` inside `B_i^s ∪ B_i^t`, where `bags` lists
/// `B_1^s..B_k^s, B_1^t..B_k^t`.
pub fn link_inside(
    g: &Digraph,
    bags: &Bramble,
    s_primes: &[VertexId],
    t_primes: &[VertexId],
) -> Result<PathSystem> {
    let k = s_primes.len();
    if t_primes.len() != k || bags.len() != 2 * k {
        return invalid("need k source ends, k sink ends and 2k bags");
    }
    let distinct: BTreeSet<&BTreeSet<VertexId>> = bags.bags.iter().collect();
    if distinct.len() != 2 * k {
        return precondition("endpoint bags must be distinct");
    }
    if bags.depth() > 2 {
        return precondition("bags must have depth at most two");
    }
    let mut paths = Vec::with_capacity(k);
    for i in 0..k {
        let (bs, bt) = (&bags.bags[i], &bags.bags[k + i]);
        if !bs.contains(&s_primes[i]) || !bt.contains(&t_primes[i]) {
            return precondition(format!("pair {i}: endpoint outside its bag"));
        }
        let (v, w) = match bs.intersection(bt).next() {
            Some(&u) => (u, u),
            None => bs
                .iter()
                .find_map(|&a| bt.iter().find(|&&b| g.has_edge(a, b)).map(|&b| (a, b)))
                .ok_or_else(|| Error::Precondition(format!("pair {i}: bags do not touch")))?,
        };
        let first = g
            .path_within(s_primes[i], v, bs)
            .ok_or_else(|| Error::Precondition(format!("pair {i}: source bag not strongly connected")))?;
        let second = g
            .path_within(w, t_primes[i], bt)
            .ok_or_else(|| Error::Precondition(format!("pair {i}: sink bag not strongly connected")))?;
        let mut walk = first;
        walk.extend(if v == w { &second[1..] } else { &second[..] });
        paths.push(shortcut_walk(&walk));
    }
    Ok(PathSystem::new(paths))
}

/// Whether each inside path stays within its two bags.
pub fn check_inside(bags: &Bramble, inside: &PathSystem) -> bool {
    let k = inside.paths.len();
    bags.len() == 2 * k
        && inside
            .paths
            .iter()
            .enumerate()
            .all(|(i, p)| p.iter().all(|v| bags.bags[i].contains(v) || bags.bags[k + i].contains(v)))
}

/// A verified solution with the certificates it was assembled from.
#[derive(Debug, Clone)]
pub struct StructuralSolution {
    pub solution: PathSystem,
    /// Indices of the bags kept after dropping those that hold terminals.
    pub kept: Vec<usize>,
    /// Pairs with `s_i != t_i`, in order; the certificates refer to these.
    pub routed: Vec<usize>,
    /// Certificates for the routed pairs, with bag indices into `kept`.
    pub link_up: Option<LinkUp>,
    pub inside: Option<PathSystem>,
}

/// The routed sub-instance of `inst` and the pruned bramble that
/// [`solve_with_bramble`] works on.
pub fn structural_subproblem(
    inst: &LinkageInstance,
    bramble: &Bramble,
) -> Result<(LinkageInstance, Vec<usize>, Bramble, Vec<usize>)> {
    let routed: Vec<usize> = (0..inst.k()).filter(|&i| inst.sources[i] != inst.sinks[i]).collect();
    let terminals = inst.terminals();
    let kept: Vec<usize> = (0..bramble.len())
        .filter(|&b| bramble.bags[b].iter().all(|v| !terminals.contains(v)))
        .collect();
    let sub = LinkageInstance::new(
        inst.graph.clone(),
        routed.iter().map(|&i| inst.sources[i]).collect(),
        routed.iter().map(|&i| inst.sinks[i]).collect(),
    )?;
    Ok((sub, routed, bramble.select(&kept), kept))
}

/// Solves `inst` half-integrally through a depth-two bramble. Every
/// returned solution has passed [`verify_solution`] at congestion two.
pub fn solve_with_bramble(
    inst: &LinkageInstance,
    bramble: &Bramble,
    cfg: &LinkerConfig,
) -> Result<Verdict<StructuralSolution>> {
    let g = &inst.graph;
    if let Err(v) = validate_bramble(g, bramble) {
        return precondition(format!("not a bramble: {v}"));
    }
    if bramble.depth() > 2 {
        return precondition("bramble depth exceeds two");
    }
    let (sub, routed, pruned, kept) = structural_subproblem(inst, bramble)?;
    let distinct = |xs: &[VertexId]| xs.iter().collect::<BTreeSet<_>>().len() == xs.len();
    if !distinct(&sub.sources) || !distinct(&sub.sinks) {
        return precondition("routed pairs need distinct sources and distinct sinks");
    }
    let k = sub.k();
    if !cfg.relaxed {
        let need = bramble_size_needed(inst.k());
        if (bramble.len() as u128) < need {
            return Err(Error::SizeLimit(format!("bramble of size {} below t(k) = {need}", bramble.len())));
        }
        let conn = 36 * k * k * k + 2 * k;
        if g.strong_connectivity()? < conn {
            return precondition(format!("graph is not {conn}-strongly connected"));
        }
    }
    let mut paths: Vec<Vec<VertexId>> = inst.sources.iter().map(|&s| vec![s]).collect();
    let (mut lu_out, mut inside_out) = (None, None);
    if k > 0 {
        let lu = match link_up(g, &pruned, &sub, cfg)? {
            Verdict::Done(lu) => lu,
            Verdict::Failed(why) => return Ok(Verdict::Failed(format!("link-up: {why}"))),
        };
        let chosen = pruned.select(&lu.bags_s.iter().chain(&lu.bags_t).copied().collect::<Vec<_>>());
        let inside = link_inside(g, &chosen, &lu.s_prime, &lu.t_prime)?;
        if !check_inside(&chosen, &inside) {
            return Err(Error::Invariant("inside path leaves its bags".into()));
        }
        for (slot, &i) in routed.iter().enumerate() {
            let mut walk = lu.s_paths[slot].clone();
            walk.extend_from_slice(&inside.paths[slot][1..]);
            walk.extend_from_slice(&lu.t_paths[slot][1..]);
            paths[i] = shortcut_walk(&walk);
        }
        lu_out = Some(lu);
        inside_out = Some(inside);
    }
    let solution = PathSystem::new(paths);
    if let Err(v) = verify_solution(inst, &solution, 2) {
        return fail(cfg.relaxed, format!("verification: {v}"));
    }
    Ok(Verdict::Done(StructuralSolution {
        solution,
        kept,
        routed,
        link_up: lu_out,
        inside: inside_out,
    }))
}

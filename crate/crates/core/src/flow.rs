//! Menger-type computations over vertex-split unit-capacity networks.
//!
//! Every vertex `v` becomes an arc `v_in -> v_out` whose capacity is one,
//! unbounded, or zero (vertex deleted); every edge `(u, v)` becomes an
//! unbounded arc `u_out -> v_in`. Augmenting paths are found by BFS that
//! scans arcs in ascending target order, so every result is deterministic.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::graph::{shortcut_walk, Digraph, PathSystem, Separation, VertexId};

const UNBOUNDED: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VertexCap {
    Deleted,
    Unit,
    Unbounded,
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    rev: usize,
    forward: bool,
    orig: i64,
}

struct Network {
    adj: Vec<Vec<Arc>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network {
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc {
            to,
            cap,
            rev: rev_from,
            forward: true,
            orig: cap,
        });
        self.adj[to].push(Arc {
            to: from,
            cap: 0,
            rev: rev_to,
            forward: false,
            orig: 0,
        });
    }

    /// Pushes one augmenting path of bottleneck capacity; returns the amount.
    fn augment(&mut self, source: usize, sink: usize) -> i64 {
        let n = self.adj.len();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        'bfs: while let Some(u) = queue.pop_front() {
            for (i, arc) in self.adj[u].iter().enumerate() {
                if arc.cap > 0 && !seen[arc.to] {
                    seen[arc.to] = true;
                    parent[arc.to] = Some((u, i));
                    if arc.to == sink {
                        break 'bfs;
                    }
                    queue.push_back(arc.to);
                }
            }
        }
        if !seen[sink] {
            return 0;
        }
        let mut bottleneck = UNBOUNDED;
        let mut v = sink;
        while let Some((u, i)) = parent[v] {
            bottleneck = bottleneck.min(self.adj[u][i].cap);
            v = u;
        }
        let mut v = sink;
        while let Some((u, i)) = parent[v] {
            self.adj[u][i].cap -= bottleneck;
            let rev = self.adj[u][i].rev;
            self.adj[v][rev].cap += bottleneck;
            v = u;
        }
        bottleneck
    }

    fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for arc in &self.adj[u] {
                if arc.cap > 0 && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}

/// Outcome of one vertex-cut flow computation.
pub(crate) struct CutFlow {
    /// `None` when the flow is unbounded (an uncuttable source reaches an
    /// uncuttable sink).
    pub value: Option<usize>,
    pub paths: Vec<Vec<VertexId>>,
    /// Minimum separation over the non-deleted vertices; only meaningful when
    /// the flow ran to completion.
    pub separation: Separation,
}

/// Max flow from `sources` to `sinks` with the given per-vertex capacities.
/// Stops early once the value reaches `limit`.
pub(crate) fn vertex_cut_flow(
    g: &Digraph,
    sources: &BTreeSet<VertexId>,
    sinks: &BTreeSet<VertexId>,
    caps: &[VertexCap],
    limit: Option<usize>,
) -> CutFlow {
    let n = g.vertex_count();
    let (super_source, super_sink) = (2 * n, 2 * n + 1);
    let alive = |v: VertexId| caps[v] != VertexCap::Deleted;
    let mut arcs: Vec<(usize, usize, i64)> = Vec::new();
    for v in g.vertices().filter(|&v| alive(v)) {
        let cap = match caps[v] {
            VertexCap::Unit => 1,
            _ => UNBOUNDED,
        };
        arcs.push((2 * v, 2 * v + 1, cap));
        for &w in g.out_neighbors(v) {
            if alive(w) {
                arcs.push((2 * v + 1, 2 * w, UNBOUNDED));
            }
        }
    }
    for &s in sources.iter().filter(|&&s| alive(s)) {
        arcs.push((super_source, 2 * s, UNBOUNDED));
    }
    for &t in sinks.iter().filter(|&&t| alive(t)) {
        arcs.push((2 * t + 1, super_sink, UNBOUNDED));
    }
    arcs.sort_unstable_by_key(|&(a, b, _)| (a, b));
    let mut net = Network::new(2 * n + 2);
    for (a, b, c) in arcs {
        net.add(a, b, c);
    }

    let mut total: i64 = 0;
    let target = limit.map(|l| l as i64).unwrap_or(UNBOUNDED);
    while total < target {
        let pushed = net.augment(super_source, super_sink);
        if pushed == 0 {
            break;
        }
        total = total.saturating_add(pushed);
        if total >= UNBOUNDED {
            break;
        }
    }
    let value = (total < UNBOUNDED).then_some(total as usize);

    let reach = net.residual_reachable(super_source);
    let mut side_a = BTreeSet::new();
    let mut side_b = BTreeSet::new();
    for v in g.vertices().filter(|&v| alive(v)) {
        if reach[2 * v] {
            side_a.insert(v);
        }
        if !reach[2 * v + 1] {
            side_b.insert(v);
        }
    }

    let paths = if value.is_some() {
        decompose(&net, n, super_source, super_sink)
    } else {
        Vec::new()
    };
    CutFlow {
        value,
        paths,
        separation: Separation::new(side_a, side_b),
    }
}

/// Splits the flow into source-to-sink paths of the original graph.
fn decompose(net: &Network, n: usize, source: usize, sink: usize) -> Vec<Vec<VertexId>> {
    let mut remaining: Vec<Vec<i64>> = net
        .adj
        .iter()
        .map(|l| {
            l.iter()
                .map(|a| if a.forward { a.orig - a.cap } else { 0 })
                .collect()
        })
        .collect();
    let mut paths = Vec::new();
    loop {
        let mut node = source;
        let mut walk = Vec::new();
        while node != sink {
            let Some(i) = (0..net.adj[node].len()).find(|&i| remaining[node][i] > 0) else {
                return paths;
            };
            remaining[node][i] -= 1;
            node = net.adj[node][i].to;
            if node < 2 * n && node % 2 == 0 {
                walk.push(node / 2);
            }
        }
        paths.push(shortcut_walk(&walk));
    }
}

fn unit_caps(g: &Digraph) -> Vec<VertexCap> {
    vec![VertexCap::Unit; g.vertex_count()]
}

/// Maximum set of pairwise vertex-disjoint `S`–`T` paths together with a
/// separation `(A, B)`, `S ⊆ A`, `T ⊆ B`, whose order equals the number of
/// paths. A vertex of `S ∩ T` yields a zero-length path.
pub fn max_disjoint_paths(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    t_set: &BTreeSet<VertexId>,
) -> (PathSystem, Separation) {
    max_disjoint_paths_avoiding(g, s_set, t_set, &BTreeSet::new())
}

/// As [`max_disjoint_paths`] in `g - removed`. The separation covers only the
/// surviving vertices.
pub fn max_disjoint_paths_avoiding(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    t_set: &BTreeSet<VertexId>,
    removed: &BTreeSet<VertexId>,
) -> (PathSystem, Separation) {
    let mut caps = unit_caps(g);
    for &v in removed {
        caps[v] = VertexCap::Deleted;
    }
    let flow = vertex_cut_flow(g, s_set, t_set, &caps, None);
    (PathSystem::new(flow.paths), flow.separation)
}

/// Order of a minimum separation of `S` from `T`, capped at `limit`.
pub fn min_separation_order(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    t_set: &BTreeSet<VertexId>,
    limit: Option<usize>,
) -> usize {
    vertex_cut_flow(g, s_set, t_set, &unit_caps(g), limit)
        .value
        .unwrap_or(usize::MAX)
}

/// Minimum number of vertices other than `a` and `b` whose removal destroys
/// every `a`–`b` path, capped at `limit`. Callers must ensure `(a, b)` is not
/// an edge; otherwise the answer is `limit`.
pub fn local_connectivity(g: &Digraph, a: VertexId, b: VertexId, limit: usize) -> usize {
    let mut caps = unit_caps(g);
    caps[a] = VertexCap::Unbounded;
    caps[b] = VertexCap::Unbounded;
    let flow = vertex_cut_flow(
        g,
        &BTreeSet::from([a]),
        &BTreeSet::from([b]),
        &caps,
        Some(limit),
    );
    flow.value.unwrap_or(limit).min(limit)
}

/// Every separation `(A, B)` with `S ⊆ A`, `T ⊆ B` has order at least
/// `alpha`.
pub fn is_alpha_connected(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    t_set: &BTreeSet<VertexId>,
    alpha: usize,
) -> bool {
    alpha == 0 || min_separation_order(g, s_set, t_set, Some(alpha)) >= alpha
}

/// Every separation that properly separates `S` from `T` has order at least
/// `alpha` (vacuously true when none exists).
pub fn is_properly_alpha_connected(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    t_set: &BTreeSet<VertexId>,
    alpha: usize,
) -> bool {
    match min_proper_separation(g, s_set, t_set) {
        Some(sep) => sep.order() >= alpha,
        None => true,
    }
}

/// Minimum-order separation `(A, B)` with `S ⊆ A`, `K ⊆ B`, `S \ B ≠ ∅` and
/// `K \ A ≠ ∅`. Returns `None` when no proper separation exists.
///
/// Each anchor pair `s ∈ S \ K`, `v ∈ K \ S` with no edge `(s, v)` is made
/// uncuttable and a minimum cut is computed; the overall winner has least
/// order, ties going to the lexicographically least separator.
pub fn min_proper_separation(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    k_set: &BTreeSet<VertexId>,
) -> Option<Separation> {
    let mut best: Option<(usize, Vec<VertexId>, Separation)> = None;
    for &s in s_set.iter().filter(|v| !k_set.contains(v)) {
        for &v in k_set.iter().filter(|v| !s_set.contains(v)) {
            if g.has_edge(s, v) {
                continue;
            }
            let mut caps = unit_caps(g);
            caps[s] = VertexCap::Unbounded;
            caps[v] = VertexCap::Unbounded;
            let limit = best.as_ref().map(|b| b.0 + 1);
            let flow = vertex_cut_flow(g, s_set, k_set, &caps, limit);
            let Some(order) = flow.value else { continue };
            if limit.is_some_and(|l| order >= l) {
                continue;
            }
            let key: Vec<VertexId> = flow.separation.separator().into_iter().collect();
            let better = match &best {
                None => true,
                Some((o, sep, _)) => (order, &key) < (*o, sep),
            };
            if better {
                best = Some((order, key, flow.separation));
            }
        }
    }
    best.map(|(_, _, sep)| sep)
}

/// Which subset pairs a well-linkedness check ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WellLinkedMode {
    /// Every pair of equal-size subsets, overlapping ones included.
    #[default]
    AllPairs,
    /// Only disjoint pairs.
    DisjointOnly,
}

/// Default cap on `|X|` for exhaustive well-linkedness checks.
pub const WELL_LINKED_CAP: usize = 10;

/// A pair `(U1, U2)` with no full-order `U1 → U2` linkage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkageGap {
    pub from: BTreeSet<VertexId>,
    pub to: BTreeSet<VertexId>,
    pub found: usize,
}

/// Whether `x` is well-linked: every equal-size `U1, U2 ⊆ x` admit a
/// `U1 → U2` linkage of order `|U1|`. Shared vertices are served by
/// zero-length paths and the rest is checked in `g` minus the shared part.
pub fn is_well_linked(g: &Digraph, x: &BTreeSet<VertexId>, cap: usize) -> Result<bool> {
    Ok(well_linked_gap(g, x, cap, WellLinkedMode::AllPairs)?.is_none())
}

/// The first failing subset pair in enumeration order, if any.
pub fn well_linked_gap(
    g: &Digraph,
    x: &BTreeSet<VertexId>,
    cap: usize,
    mode: WellLinkedMode,
) -> Result<Option<LinkageGap>> {
    if x.len() > cap {
        return Err(Error::SizeLimit(format!(
            "well-linkedness check on {} vertices exceeds cap {cap}",
            x.len()
        )));
    }
    if let Some(&v) = x.iter().find(|&&v| !g.contains_vertex(v)) {
        return Err(Error::InvalidInput(format!("vertex {v} out of range")));
    }
    let items: Vec<VertexId> = x.iter().copied().collect();
    let m = items.len();
    for size in 1..=m {
        let subsets = subsets_of_size(m, size);
        for a in &subsets {
            for b in &subsets {
                let u1: BTreeSet<VertexId> = a.iter().map(|&i| items[i]).collect();
                let u2: BTreeSet<VertexId> = b.iter().map(|&i| items[i]).collect();
                let shared: BTreeSet<VertexId> = u1.intersection(&u2).copied().collect();
                if mode == WellLinkedMode::DisjointOnly && !shared.is_empty() {
                    continue;
                }
                let from: BTreeSet<VertexId> = u1.difference(&shared).copied().collect();
                let to: BTreeSet<VertexId> = u2.difference(&shared).copied().collect();
                if from.is_empty() {
                    continue;
                }
                let mut caps = unit_caps(g);
                for &v in &shared {
                    caps[v] = VertexCap::Deleted;
                }
                let need = from.len();
                let found = vertex_cut_flow(g, &from, &to, &caps, Some(need))
                    .value
                    .unwrap_or(need);
                if found < need {
                    return Ok(Some(LinkageGap {
                        from: u1,
                        to: u2,
                        found: found + shared.len(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// All `size`-subsets of `0..m` as sorted index vectors, lexicographic.
pub(crate) fn subsets_of_size(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, size, cur, out);
            cur.pop();
        }
    }
    rec(0, m, size, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::to_set;

    fn path3() -> Digraph {
        Digraph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn clique(n: usize) -> Digraph {
        Digraph::new(
            n,
            (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))),
        )
        .unwrap()
    }

    #[test]
    fn shared_vertex_gives_zero_length_path() {
        let g = path3();
        let (paths, sep) = max_disjoint_paths(&g, &to_set([1]), &to_set([1]));
        assert_eq!(paths.paths, vec![vec![1]]);
        assert_eq!(sep.order(), 1);
        assert!(sep.is_valid(&g));
    }

    #[test]
    fn clique_two_pairs() {
        let g = clique(5);
        let (paths, sep) = max_disjoint_paths(&g, &to_set([0, 1]), &to_set([2, 3]));
        assert_eq!(paths.paths.len(), 2);
        assert_eq!(sep.order(), 2);
        assert!(sep.is_valid(&g));
        assert!(sep.separates(&to_set([0, 1]), &to_set([2, 3])));
    }

    #[test]
    fn alpha_connectivity_on_path() {
        let g = path3();
        assert!(is_alpha_connected(&g, &to_set([0]), &to_set([2]), 0));
        assert!(is_alpha_connected(&g, &to_set([0]), &to_set([2]), 1));
        assert!(!is_alpha_connected(&g, &to_set([0]), &to_set([2]), 2));
    }

    #[test]
    fn proper_separation_on_path() {
        let g = path3();
        let sep = min_proper_separation(&g, &to_set([0]), &to_set([2])).unwrap();
        assert_eq!(sep.separator(), to_set([1]));
        assert!(sep.properly_separates(&to_set([0]), &to_set([2])));
        // adjacent anchors cannot be properly separated
        let edge = Digraph::new(2, [(0, 1)]).unwrap();
        assert!(min_proper_separation(&edge, &to_set([0]), &to_set([1])).is_none());
    }

    #[test]
    fn proper_separation_k4() {
        let g = clique(4);
        let sep = min_proper_separation(&g, &to_set([0, 1]), &to_set([2, 3]));
        // every s is adjacent to every k: nothing proper exists
        assert!(sep.is_none());
        // with the edges between {0,1} and {2,3} removed only one way
        let g = Digraph::new(
            6,
            [
                (0, 4),
                (0, 5),
                (1, 4),
                (1, 5),
                (4, 2),
                (4, 3),
                (5, 2),
                (5, 3),
                (4, 5),
                (5, 4),
            ],
        )
        .unwrap();
        let sep = min_proper_separation(&g, &to_set([0, 1]), &to_set([2, 3])).unwrap();
        assert_eq!(sep.separator(), to_set([4, 5]));
    }

    #[test]
    fn three_internally_disjoint_paths() {
        // 0 -> {1,2,3} -> 4
        let g = Digraph::new(5, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]).unwrap();
        let sep = min_proper_separation(&g, &to_set([0]), &to_set([4])).unwrap();
        assert_eq!(sep.order(), 3);
        let (paths, sep) = max_disjoint_paths(&g, &to_set([1, 2, 3]), &to_set([4]));
        assert_eq!(paths.paths.len(), 1);
        assert_eq!(sep.order(), 1);
        let (paths, _) = max_disjoint_paths(&g, &to_set([0, 1, 2, 3]), &to_set([4, 1, 2, 3]));
        assert_eq!(paths.paths.len(), 3);
    }

    #[test]
    fn well_linked_small_cases() {
        let g = path3();
        // one direction only
        assert!(!is_well_linked(&g, &to_set([0, 2]), 10).unwrap());
        let gap = well_linked_gap(&g, &to_set([0, 2]), 10, WellLinkedMode::AllPairs)
            .unwrap()
            .unwrap();
        assert_eq!(gap.from, to_set([2]));
        assert_eq!(gap.to, to_set([0]));
        assert!(is_well_linked(&clique(5), &to_set([0, 1, 2, 3]), 10).unwrap());
        assert!(matches!(
            is_well_linked(&clique(5), &to_set([0, 1, 2]), 2),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn local_connectivity_respects_limit() {
        let g = clique(6);
        let mut edges: Vec<_> = g.edges().filter(|&e| e != (0, 1)).collect();
        edges.sort();
        let h = Digraph::new(6, edges).unwrap();
        assert_eq!(local_connectivity(&h, 0, 1, 10), 4);
        assert_eq!(local_connectivity(&h, 0, 1, 2), 2);
    }

    #[test]
    fn subsets_enumeration() {
        assert_eq!(subsets_of_size(4, 2).len(), 6);
        assert_eq!(subsets_of_size(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(subsets_of_size(3, 3), vec![vec![0, 1, 2]]);
    }
}

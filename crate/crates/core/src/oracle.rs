//! Exhaustive ground-truth solvers for desk-scale instances.

use std::collections::BTreeSet;

use crate::bramble::Bramble;
use crate::error::{Error, Result};
use crate::flow::subsets_of_size;
use crate::graph::{verify_solution, Digraph, LinkageInstance, PathSystem, Separation, VertexId};

/// Default search-tree node budget for [`brute_force_linkage`].
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Largest vertex count the separation enumerators accept.
pub const EXHAUSTIVE_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkageVerdict {
    Feasible(PathSystem),
    Infeasible,
    BudgetExceeded,
}

impl LinkageVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LinkageVerdict::Feasible(_))
    }
}

struct Search<'a> {
    g: &'a Digraph,
    sources: &'a [VertexId],
    sinks: &'a [VertexId],
    /// How many more paths may still pass through each vertex beyond the
    /// pairs that own it as a terminal.
    free: Vec<i64>,
    paths: Vec<Vec<VertexId>>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn owns(&self, pair: usize, v: VertexId) -> bool {
        self.sources[pair] == v || self.sinks[pair] == v
    }

    fn usable(&self, pair: usize, v: VertexId) -> bool {
        self.owns(pair, v) || self.free[v] > 0
    }

    fn sink_reachable(&self, pair: usize, from: VertexId, on_path: &[bool]) -> bool {
        let target = self.sinks[pair];
        if from == target {
            return true;
        }
        self.g
            .shortest_path_where(
                from,
                |v| v == from || (!on_path[v] && self.usable(pair, v)),
                |v| v == target,
            )
            .is_some()
    }

    fn remaining_reachable(&self, first: usize) -> bool {
        let none = vec![false; self.g.vertex_count()];
        (first..self.sources.len()).all(|p| self.sink_reachable(p, self.sources[p], &none))
    }

    fn route(&mut self, pair: usize) -> bool {
        if pair == self.sources.len() {
            return true;
        }
        if !self.remaining_reachable(pair) {
            return false;
        }
        let s = self.sources[pair];
        let mut on_path = vec![false; self.g.vertex_count()];
        on_path[s] = true;
        self.paths.push(vec![s]);
        let found = self.extend(pair, &mut on_path);
        if !found {
            self.paths.pop();
        }
        found
    }

    fn extend(&mut self, pair: usize, on_path: &mut [bool]) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return false;
        }
        let current = *self.paths[pair].last().expect("path starts at its source");
        if current == self.sinks[pair] {
            return self.route(pair + 1);
        }
        if !self.sink_reachable(pair, current, on_path) {
            return false;
        }
        for &w in self.g.out_neighbors(current) {
            if on_path[w] || !self.usable(pair, w) {
                continue;
            }
            let charged = !self.owns(pair, w);
            if charged {
                self.free[w] -= 1;
            }
            on_path[w] = true;
            self.paths[pair].push(w);
            if self.extend(pair, on_path) {
                return true;
            }
            self.paths[pair].pop();
            on_path[w] = false;
            if charged {
                self.free[w] += 1;
            }
            if self.exhausted {
                return false;
            }
        }
        false
    }
}

/// Decides feasibility of `inst` at the given congestion by depth-first
/// search over simple paths, pair by pair in index order, successors in
/// ascending order. The first solution found is returned.
///
/// Every terminal vertex is charged up front for each pair owning it, so a
/// path may only use a foreign terminal while spare capacity remains.
pub fn brute_force_linkage(
    inst: &LinkageInstance,
    congestion: usize,
    budget: u64,
) -> Result<LinkageVerdict> {
    if !(1..=2).contains(&congestion) {
        return Err(Error::InvalidInput(format!(
            "congestion must be 1 or 2, got {congestion}"
        )));
    }
    let g = &inst.graph;
    let mut free = vec![congestion as i64; g.vertex_count()];
    for (&s, &t) in inst.sources.iter().zip(&inst.sinks) {
        free[s] -= 1;
        if t != s {
            free[t] -= 1;
        }
    }
    if free.iter().any(|&f| f < 0) {
        return Ok(LinkageVerdict::Infeasible);
    }
    let mut search = Search {
        g,
        sources: &inst.sources,
        sinks: &inst.sinks,
        free,
        paths: Vec::new(),
        nodes: 0,
        budget,
        exhausted: false,
    };
    if search.route(0) {
        let sol = PathSystem::new(search.paths);
        if let Err(v) = verify_solution(inst, &sol, congestion) {
            return Err(Error::Invariant(format!("oracle produced a bad solution: {v}")));
        }
        Ok(LinkageVerdict::Feasible(sol))
    } else if search.exhausted {
        Ok(LinkageVerdict::BudgetExceeded)
    } else {
        Ok(LinkageVerdict::Infeasible)
    }
}

/// Minimum size of a vertex set meeting every bag, searched up to `cap`.
/// Candidate vertices come from the bags only.
pub fn bramble_order(b: &Bramble, cap: usize) -> Result<usize> {
    fn hits(bags: &[BTreeSet<VertexId>], chosen: &[VertexId], depth: usize) -> bool {
        let Some(bag) = bags
            .iter()
            .find(|bag| !chosen.iter().any(|v| bag.contains(v)))
        else {
            return true;
        };
        if depth == 0 {
            return false;
        }
        let mut chosen = chosen.to_vec();
        for &v in bag {
            chosen.push(v);
            if hits(bags, &chosen, depth - 1) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    for size in 0..=cap {
        if hits(&b.bags, &[], size) {
            return Ok(size);
        }
    }
    Err(Error::SizeLimit(format!("no cover of size at most {cap}")))
}

/// Minimum-order separation found by exhaustive search, with a witness when
/// one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveSeparation {
    pub order: usize,
    pub witness: Option<Separation>,
}

fn check_cap(g: &Digraph) -> Result<()> {
    if g.vertex_count() > EXHAUSTIVE_CAP {
        return Err(Error::SizeLimit(format!(
            "exhaustive enumeration limited to {EXHAUSTIVE_CAP} vertices, got {}",
            g.vertex_count()
        )));
    }
    Ok(())
}

/// Vertices reachable from `from` in `g - removed`.
fn reach_avoiding(g: &Digraph, from: &[VertexId], removed: &BTreeSet<VertexId>) -> BTreeSet<VertexId> {
    let mut seen = BTreeSet::new();
    for &s in from {
        if removed.contains(&s) || seen.contains(&s) {
            continue;
        }
        let r = g.reachable_where(s, |v| !removed.contains(&v));
        seen.extend(g.vertices().filter(|&v| r[v]));
    }
    seen
}

/// `(R ∪ X, V \ R)` for a removed set `X` and the region `R` reachable from
/// the source side in `G - X`.
fn separation_from(g: &Digraph, removed: &BTreeSet<VertexId>, reach: &BTreeSet<VertexId>) -> Separation {
    let side_a = reach.union(removed).copied().collect();
    let side_b = g.vertices().filter(|v| !reach.contains(v)).collect();
    Separation::new(side_a, side_b)
}

/// Calls `f` on every vertex subset in order of increasing size until it
/// returns `Some`.
fn first_subset<T>(n: usize, mut f: impl FnMut(&BTreeSet<VertexId>) -> Option<T>) -> Option<T> {
    for size in 0..=n {
        for subset in subsets_of_size(n, size) {
            let x: BTreeSet<VertexId> = subset.into_iter().collect();
            if let Some(found) = f(&x) {
                return Some(found);
            }
        }
    }
    None
}

/// Minimum nontrivial separation of `g`. Graphs with none (complete ones)
/// report order `n - 1` and no witness.
pub fn enumerate_min_separation(g: &Digraph) -> Result<ExhaustiveSeparation> {
    check_cap(g)?;
    let n = g.vertex_count();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two vertices".into()));
    }
    let found = first_subset(n, |x| {
        if n - x.len() < 2 {
            return None;
        }
        g.vertices().filter(|v| !x.contains(v)).find_map(|u| {
            let reach = reach_avoiding(g, &[u], x);
            (reach.len() + x.len() < n).then(|| separation_from(g, x, &reach))
        })
    });
    Ok(match found {
        Some(sep) => ExhaustiveSeparation {
            order: sep.order(),
            witness: Some(sep),
        },
        None => ExhaustiveSeparation {
            order: n - 1,
            witness: None,
        },
    })
}

/// Minimum order of a separation `(A, B)` with `S ⊆ A` and `T ⊆ B`.
pub fn enumerate_min_st_separation(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    t_set: &BTreeSet<VertexId>,
) -> Result<ExhaustiveSeparation> {
    check_cap(g)?;
    let sources: Vec<VertexId> = s_set.iter().copied().collect();
    let sep = first_subset(g.vertex_count(), |x| {
        let reach = reach_avoiding(g, &sources, x);
        t_set
            .iter()
            .all(|t| x.contains(t) || !reach.contains(t))
            .then(|| separation_from(g, x, &reach))
    })
    .expect("removing every vertex separates");
    Ok(ExhaustiveSeparation {
        order: sep.order(),
        witness: Some(sep),
    })
}

/// Minimum order of a separation properly separating `S` from `K`, or no
/// witness when none exists.
pub fn enumerate_min_proper_separation(
    g: &Digraph,
    s_set: &BTreeSet<VertexId>,
    k_set: &BTreeSet<VertexId>,
) -> Result<ExhaustiveSeparation> {
    check_cap(g)?;
    let found = first_subset(g.vertex_count(), |x| {
        let sources: Vec<VertexId> = s_set.difference(x).copied().collect();
        if sources.is_empty() || k_set.is_subset(x) {
            return None;
        }
        let reach = reach_avoiding(g, &sources, x);
        k_set
            .iter()
            .all(|v| x.contains(v) || !reach.contains(v))
            .then(|| separation_from(g, x, &reach))
    });
    Ok(match found {
        Some(sep) => ExhaustiveSeparation {
            order: sep.order(),
            witness: Some(sep),
        },
        None => ExhaustiveSeparation {
            order: usize::MAX,
            witness: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::to_set;

    fn inst(n: usize, edges: &[(usize, usize)], s: &[usize], t: &[usize]) -> LinkageInstance {
        LinkageInstance::new(Digraph::new(n, edges.iter().copied()).unwrap(), s.to_vec(), t.to_vec())
            .unwrap()
    }

    #[test]
    fn single_edge() {
        let i = inst(2, &[(0, 1)], &[0], &[1]);
        assert_eq!(
            brute_force_linkage(&i, 1, DEFAULT_BUDGET).unwrap(),
            LinkageVerdict::Feasible(PathSystem::new(vec![vec![0, 1]]))
        );
    }

    #[test]
    fn crossing_instance_needs_half() {
        // both pairs must pass through the hub 2
        let i = inst(
            6,
            &[(0, 2), (1, 2), (2, 3), (2, 4), (3, 5), (4, 5)],
            &[0, 1],
            &[3, 4],
        );
        assert_eq!(brute_force_linkage(&i, 1, DEFAULT_BUDGET).unwrap(), LinkageVerdict::Infeasible);
        assert!(brute_force_linkage(&i, 2, DEFAULT_BUDGET).unwrap().is_feasible());
    }

    #[test]
    fn terminal_reservation_blocks_shared_terminals() {
        // vertex 1 is the sink of pair 1 and the source of pair 2, so at
        // congestion 2 no third path may cross it
        let i = inst(
            5,
            &[(0, 1), (1, 2), (3, 1), (1, 4)],
            &[0, 1, 3],
            &[1, 2, 4],
        );
        assert_eq!(brute_force_linkage(&i, 2, DEFAULT_BUDGET).unwrap(), LinkageVerdict::Infeasible);
    }

    #[test]
    fn budget_is_a_distinct_verdict() {
        let g = crate::graph::tests::bidirected_clique(7);
        let i = LinkageInstance::new(g, vec![0, 1], vec![2, 3]).unwrap();
        assert_eq!(brute_force_linkage(&i, 1, 1).unwrap(), LinkageVerdict::BudgetExceeded);
        assert!(brute_force_linkage(&i, 3, 10).is_err());
    }

    #[test]
    fn bramble_orders() {
        let shared = Bramble::new(vec![to_set([0, 1]), to_set([1, 2]), to_set([1])]);
        assert_eq!(bramble_order(&shared, 5).unwrap(), 1);
        assert_eq!(bramble_order(&Bramble::new(vec![]), 5).unwrap(), 0);
        let disjoint = Bramble::new(vec![to_set([0]), to_set([1]), to_set([2])]);
        assert_eq!(bramble_order(&disjoint, 3).unwrap(), 3);
        assert!(bramble_order(&disjoint, 2).is_err());
    }

    #[test]
    fn exhaustive_separations() {
        let c4 = crate::graph::tests::cycle(4);
        let sep = enumerate_min_separation(&c4).unwrap();
        assert_eq!(sep.order, 1);
        assert!(sep.witness.unwrap().is_valid(&c4));
        let k4 = crate::graph::tests::bidirected_clique(4);
        assert_eq!(enumerate_min_separation(&k4).unwrap(), ExhaustiveSeparation { order: 3, witness: None });

        let path = Digraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let st = enumerate_min_st_separation(&path, &to_set([0]), &to_set([2])).unwrap();
        assert_eq!(st.order, 1);
        let proper = enumerate_min_proper_separation(&path, &to_set([0]), &to_set([2])).unwrap();
        assert_eq!(proper.witness.unwrap().separator(), to_set([1]));
        let none = enumerate_min_proper_separation(&path, &to_set([0]), &to_set([1])).unwrap();
        assert!(none.witness.is_none());
    }
}

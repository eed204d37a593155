//! Brambles, the directed grid `J_r` with its depth-two bramble, hitting
//! paths and well-linked sets on a path.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::flow::{is_well_linked, subsets_of_size};
use crate::graph::{Digraph, VertexId};

/// An ordered family of vertex sets ("bags").
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bramble {
    pub bags: Vec<BTreeSet<VertexId>>,
}

impl Bramble {
    pub fn new(bags: Vec<BTreeSet<VertexId>>) -> Self {
        Bramble { bags }
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Largest number of bags sharing one vertex.
    pub fn depth(&self) -> usize {
        let mut count = std::collections::BTreeMap::new();
        for bag in &self.bags {
            for &v in bag {
                *count.entry(v).or_insert(0usize) += 1;
            }
        }
        count.into_values().max().unwrap_or(0)
    }

    /// Indices of the bags containing `v`.
    pub fn bags_containing(&self, v: VertexId) -> Vec<usize> {
        (0..self.bags.len())
            .filter(|&i| self.bags[i].contains(&v))
            .collect()
    }

    pub fn union(&self) -> BTreeSet<VertexId> {
        self.bags.iter().flatten().copied().collect()
    }

    /// The sub-family with the given bag indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Bramble {
        Bramble::new(indices.iter().map(|&i| self.bags[i].clone()).collect())
    }
}

/// First defect found by [`validate_bramble`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrambleViolation {
    EmptyBag(usize),
    UnknownVertex { bag: usize, vertex: VertexId },
    NotStronglyConnected(usize),
    NotTouching(usize, usize),
}

impl fmt::Display for BrambleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BrambleViolation::EmptyBag(i) => write!(f, "bag {} is empty", i + 1),
            BrambleViolation::UnknownVertex { bag, vertex } => {
                write!(f, "bag {} contains unknown vertex {vertex}", bag + 1)
            }
            BrambleViolation::NotStronglyConnected(i) => {
                write!(f, "bag {} is not strongly connected", i + 1)
            }
            BrambleViolation::NotTouching(i, j) => {
                write!(f, "bags {} and {} do not touch", i + 1, j + 1)
            }
        }
    }
}

/// Two vertex sets touch if they intersect or have edges both ways.
pub fn touches(g: &Digraph, a: &BTreeSet<VertexId>, b: &BTreeSet<VertexId>) -> bool {
    a.intersection(b).next().is_some() || (g.has_edge_between(a, b) && g.has_edge_between(b, a))
}

/// Checks that each bag is nonempty and strongly connected and that every
/// two bags touch.
pub fn validate_bramble(g: &Digraph, b: &Bramble) -> std::result::Result<(), BrambleViolation> {
    for (i, bag) in b.bags.iter().enumerate() {
        if bag.is_empty() {
            return Err(BrambleViolation::EmptyBag(i));
        }
        if let Some(&vertex) = bag.iter().find(|&&v| !g.contains_vertex(v)) {
            return Err(BrambleViolation::UnknownVertex { bag: i, vertex });
        }
        if !g.is_strongly_connected_set(bag) {
            return Err(BrambleViolation::NotStronglyConnected(i));
        }
    }
    for i in 0..b.bags.len() {
        for j in i + 1..b.bags.len() {
            if !touches(g, &b.bags[i], &b.bags[j]) {
                return Err(BrambleViolation::NotTouching(i, j));
            }
        }
    }
    Ok(())
}

/// Coordinates of the directed grid `J_r`.
///
/// `v(i, j)` is the vertex at position `i` (1..=2r) on cycle `j` (1..=r).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLabels {
    pub r: usize,
    /// `cycles[j-1]` lists `C_j` in traversal order starting at `v(1, j)`.
    pub cycles: Vec<Vec<VertexId>>,
    /// `paths[i-1]` lists `P_i` in traversal order.
    pub paths: Vec<Vec<VertexId>>,
}

impl GridLabels {
    pub fn v(&self, i: usize, j: usize) -> VertexId {
        grid_vertex(self.r, i, j)
    }

    /// Inverse of [`GridLabels::v`].
    pub fn coords(&self, v: VertexId) -> (usize, usize) {
        (v / self.r + 1, v % self.r + 1)
    }
}

fn grid_vertex(r: usize, i: usize, j: usize) -> VertexId {
    (i - 1) * r + (j - 1)
}

/// The directed grid `J_r`: `r` concentric `2r`-cycles joined by `2r` radial
/// paths, odd ones running outward from cycle 1, even ones inward.
pub fn gen_grid(r: usize) -> Result<(Digraph, GridLabels)> {
    if r < 2 {
        return invalid(format!("grid order must be at least 2, got {r}"));
    }
    let v = |i, j| grid_vertex(r, i, j);
    let cycles: Vec<Vec<VertexId>> = (1..=r)
        .map(|j| (1..=2 * r).map(|i| v(i, j)).collect())
        .collect();
    let paths: Vec<Vec<VertexId>> = (1..=2 * r)
        .map(|i| {
            let mut p: Vec<VertexId> = (1..=r).map(|j| v(i, j)).collect();
            if i % 2 == 0 {
                p.reverse();
            }
            p
        })
        .collect();
    let mut edges = Vec::new();
    for c in &cycles {
        for p in 0..c.len() {
            edges.push((c[p], c[(p + 1) % c.len()]));
        }
    }
    for p in &paths {
        edges.extend(p.windows(2).map(|w| (w[0], w[1])));
    }
    let g = Digraph::new(2 * r * r, edges)?;
    Ok((g, GridLabels { r, cycles, paths }))
}

/// The depth-two bramble of `J_r`, one bag per cycle.
///
/// Bag `i < r` is the cycle that climbs `P_{2i-1}` from cycle `i` to cycle
/// `r`, takes the edge of `C_r` to `P_{2i}`, descends to cycle `i` and
/// returns along `C_i`. Bag `r` is `C_r`. Bag `i` meets bag `j > i` on
/// `P_{2i-1}`, and each vertex lies on its own cycle's bag plus at most the
/// bag owning its radial path.
pub fn grid_bramble(labels: &GridLabels) -> Bramble {
    let r = labels.r;
    let bags = (1..=r)
        .map(|i| {
            let mut bag: BTreeSet<VertexId> = labels.cycles[i - 1].iter().copied().collect();
            for j in i..=r {
                bag.insert(labels.v(2 * i - 1, j));
                bag.insert(labels.v(2 * i, j));
            }
            bag
        })
        .collect();
    Bramble::new(bags)
}

/// The bag `i` of [`grid_bramble`] as a closed walk, starting at
/// `v(2i-1, i)`.
pub fn grid_bramble_cycle(labels: &GridLabels, i: usize) -> Vec<VertexId> {
    let r = labels.r;
    let mut walk: Vec<VertexId> = (i..=r).map(|j| labels.v(2 * i - 1, j)).collect();
    walk.extend((i..=r).rev().map(|j| labels.v(2 * i, j)));
    let start = 2 * i;
    for step in 1..2 * r - 1 {
        walk.push(labels.v((start - 1 + step) % (2 * r) + 1, i));
    }
    walk
}

/// A directed path meeting every bag of a valid bramble.
///
/// While some bag `B` is missed, let `X` be the hit bag whose first visit
/// comes last, at position `f`. Every hit bag is already hit by the prefix
/// ending at `f`, so the path is cut there, continued inside `X` (which
/// the prefix never entered) to a vertex in `B` or with an edge into `B`,
/// and extended into `B`.
pub fn hitting_path(g: &Digraph, b: &Bramble) -> Result<Vec<VertexId>> {
    if let Err(v) = validate_bramble(g, b) {
        return Err(Error::Precondition(format!("not a bramble: {v}")));
    }
    let Some(first) = b.bags.first() else {
        return Ok(Vec::new());
    };
    let mut path = vec![*first.iter().next().expect("bags are nonempty")];
    loop {
        let first_hit = |bag: &BTreeSet<VertexId>, path: &[VertexId]| {
            path.iter().position(|v| bag.contains(v))
        };
        let Some(missed) = b.bags.iter().find(|bag| first_hit(bag, &path).is_none()) else {
            return Ok(path);
        };
        let (f, anchor) = b
            .bags
            .iter()
            .filter_map(|bag| first_hit(bag, &path).map(|f| (f, bag)))
            .max_by_key(|&(f, _)| f)
            .expect("the first vertex hits a bag");
        path.truncate(f + 1);
        let inside = g
            .shortest_path_where(
                path[f],
                |v| anchor.contains(&v),
                |v| missed.contains(&v) || g.out_neighbors(v).iter().any(|w| missed.contains(w)),
            )
            .ok_or_else(|| Error::Invariant("touching bag unreachable inside its neighbour".into()))?;
        path.extend_from_slice(&inside[1..]);
        let last = *path.last().expect("nonempty");
        if !missed.contains(&last) {
            let next = *g
                .out_neighbors(last)
                .iter()
                .find(|w| missed.contains(w))
                .expect("target has an edge into the missed bag");
            path.push(next);
        }
        if !g.is_path(&path) {
            return Err(Error::Invariant("hitting path repeats a vertex".into()));
        }
    }
}

/// Searches the `target_size`-subsets of `V(p)`, in path order, for one that
/// is well-linked. Subsets containing two vertices that cannot reach each
/// other are skipped without a flow check.
pub fn well_linked_on_path(
    g: &Digraph,
    p: &[VertexId],
    target_size: usize,
    cap: usize,
) -> Result<Option<BTreeSet<VertexId>>> {
    if target_size > cap {
        return Err(Error::SizeLimit(format!(
            "well-linked target {target_size} exceeds cap {cap}"
        )));
    }
    if target_size == 0 || target_size > p.len() {
        return Ok(None);
    }
    let reach: Vec<Vec<bool>> = p.iter().map(|&v| g.reachable_where(v, |_| true)).collect();
    for subset in subsets_of_size(p.len(), target_size) {
        let mutual = subset.iter().all(|&a| {
            subset
                .iter()
                .all(|&b| reach[a][p[b]] && reach[b][p[a]])
        });
        if !mutual {
            continue;
        }
        let x: BTreeSet<VertexId> = subset.iter().map(|&i| p[i]).collect();
        if is_well_linked(g, &x, cap)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::to_set;

    #[test]
    fn grid_counts() {
        for r in 2..=6 {
            let (g, labels) = gen_grid(r).unwrap();
            assert_eq!(g.vertex_count(), 2 * r * r);
            assert_eq!(g.edge_count(), 4 * r * r - 2 * r);
            assert!(g.is_strongly_connected());
            for v in g.vertices() {
                let (i, j) = labels.coords(v);
                assert_eq!(labels.v(i, j), v);
            }
        }
        assert!(gen_grid(1).is_err());
    }

    #[test]
    fn grid_bramble_is_depth_two() {
        for r in 2..=6 {
            let (g, labels) = gen_grid(r).unwrap();
            let b = grid_bramble(&labels);
            assert_eq!(b.len(), r);
            assert_eq!(b.depth(), 2);
            validate_bramble(&g, &b).unwrap();
            for i in 1..=r {
                let walk = grid_bramble_cycle(&labels, i);
                assert_eq!(to_set(walk.iter().copied()), b.bags[i - 1]);
                assert_eq!(walk.len(), b.bags[i - 1].len());
                let closed: Vec<_> = walk.iter().chain(walk.first()).copied().collect();
                assert!(closed.windows(2).all(|w| g.has_edge(w[0], w[1])));
            }
        }
    }

    #[test]
    fn validation_witnesses() {
        let g = Digraph::new(4, [(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)]).unwrap();
        let b = Bramble::new(vec![to_set([0, 1]), to_set([2, 3])]);
        assert_eq!(validate_bramble(&g, &b), Err(BrambleViolation::NotTouching(0, 1)));
        let single = Bramble::new(vec![to_set([0])]);
        assert!(validate_bramble(&g, &single).is_ok());
        let loose = Bramble::new(vec![to_set([0, 2])]);
        assert_eq!(validate_bramble(&g, &loose), Err(BrambleViolation::NotStronglyConnected(0)));
    }

    #[test]
    fn depth_examples() {
        let disjoint = Bramble::new(vec![to_set([0]), to_set([1])]);
        assert_eq!(disjoint.depth(), 1);
        let same = Bramble::new(vec![to_set([0, 1]); 4]);
        assert_eq!(same.depth(), 4);
    }

    #[test]
    fn hitting_paths() {
        let g = crate::graph::tests::cycle(3);
        let b = Bramble::new(vec![to_set([0, 1, 2]), to_set([0, 1, 2])]);
        assert_eq!(hitting_path(&g, &b).unwrap(), vec![0]);

        // three disjoint 2-cycles touching pairwise in both directions
        let mut edges = vec![(0, 1), (1, 0), (2, 3), (3, 2), (4, 5), (5, 4)];
        edges.extend([(1, 2), (3, 0), (3, 4), (5, 2), (5, 0), (1, 4)]);
        let g = Digraph::new(6, edges).unwrap();
        let b = Bramble::new(vec![to_set([0, 1]), to_set([2, 3]), to_set([4, 5])]);
        let p = hitting_path(&g, &b).unwrap();
        assert!(g.is_path(&p) && p.len() >= 3);
        assert!(b.bags.iter().all(|bag| p.iter().any(|v| bag.contains(v))));

        for r in 2..=6 {
            let (g, labels) = gen_grid(r).unwrap();
            let b = grid_bramble(&labels);
            let p = hitting_path(&g, &b).unwrap();
            assert!(g.is_path(&p));
            assert!(b.bags.iter().all(|bag| p.iter().any(|v| bag.contains(v))));
        }
    }

    #[test]
    fn well_linked_sets_on_paths() {
        let (g, labels) = gen_grid(4).unwrap();
        let row = &labels.cycles[1];
        let p: Vec<VertexId> = row.clone();
        assert!(g.is_path(&p));
        let one = well_linked_on_path(&g, &p, 1, 10).unwrap().unwrap();
        assert_eq!(one.len(), 1);
        let x = well_linked_on_path(&g, &p, 3, 10).unwrap().unwrap();
        assert!(is_well_linked(&g, &x, 10).unwrap());
        assert!(well_linked_on_path(&g, &p, 11, 10).is_err());
    }
}

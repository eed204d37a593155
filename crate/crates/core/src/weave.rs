//! Uncrossing of linkages and brambles built from well-linked sets.
//!
//! Every outcome is checked before it is returned: brambles are validated and
//! must have depth at most two, index sets must give pairwise disjoint
//! subgraphs. Strict mode insists on the proven size thresholds, which exceed
//! anything that fits in memory, so it answers with [`Error::SizeLimit`] on
//! realistic input. Relaxed mode runs the same constructions on whatever it
//! is given and reports [`Verdict::Failed`] when no certificate comes out.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::bramble::{validate_bramble, Bramble};
use crate::error::{invalid, precondition, Error, Result};
use crate::flow::max_disjoint_paths;
use crate::graph::{Digraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Red,
    Blue,
}

/// Outcome of a relaxed construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<T> {
    Done(T),
    Failed(String),
}

impl<T> Verdict<T> {
    pub fn done(self) -> Option<T> {
        match self {
            Verdict::Done(x) => Some(x),
            Verdict::Failed(_) => None,
        }
    }
}

/// Knobs shared by the uncrossing routines. `None` means the mode default.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeaveConfig {
    pub relaxed: bool,
    /// Minimum number of `H`-components before the component case is tried.
    pub component_threshold: Option<usize>,
    /// Number of `H`-edges per segment in the long-cycle case.
    pub segment_len: Option<usize>,
    /// Size of the pairwise-intersecting family sought before uncrossing.
    pub intersect_clique: Option<usize>,
    /// Side of the grid of blocks laid along the path.
    pub grid_side: Option<usize>,
}

impl WeaveConfig {
    pub fn relaxed() -> Self {
        WeaveConfig {
            relaxed: true,
            ..Default::default()
        }
    }
}

/// A count that may be far too large for a machine word.
#[derive(Debug, Clone, PartialEq)]
pub enum BigCount {
    Exact(u128),
    /// Known through its base-2 logarithm.
    Pow2(f64),
    /// Iterated exponentials; only a description survives.
    Tower(String),
}

impl BigCount {
    fn from_log2(log2: f64) -> BigCount {
        if log2 < 127.0 {
            BigCount::Exact(2f64.powf(log2).round() as u128)
        } else {
            BigCount::Pow2(log2)
        }
    }

    pub fn exact(&self) -> Option<u128> {
        match self {
            BigCount::Exact(x) => Some(*x),
            _ => None,
        }
    }

    /// Whether `n` reaches this count.
    pub fn is_met_by(&self, n: usize) -> bool {
        self.exact().is_some_and(|x| n as u128 >= x)
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BigCount::Exact(x) => write!(f, "{x}"),
            BigCount::Pow2(l) => write!(f, "2^{l:.1}"),
            BigCount::Tower(s) => write!(f, "{s}"),
        }
    }
}

/// `10k * 2^(2(t+k))` paths suffice for [`uncross_pair`].
pub fn uncross_threshold(k: usize, t: usize) -> BigCount {
    BigCount::from_log2((10.0 * k as f64).log2() + 2.0 * (t + k) as f64)
}

/// `10t * 2^(4t)`, the intersecting family size used by [`uncross_two_linkages`].
pub fn intersect_clique_size(t: usize) -> BigCount {
    BigCount::from_log2((10.0 * t as f64).log2() + 4.0 * t as f64)
}

/// `2^k * 2^T` with `T = 10t * 2^(4t)`.
pub fn linkage_threshold(k: usize, t: usize) -> BigCount {
    match intersect_clique_size(t) {
        BigCount::Exact(big_t) if big_t < (1 << 100) => BigCount::from_log2(k as f64 + big_t as f64),
        _ => BigCount::Tower(format!("2^(2^{} * 10t) with t = {t}", 4 * t)),
    }
}

/// Grid side `2^(2t)` used when carving a well-linked set into blocks.
pub fn grid_side(t: usize) -> BigCount {
    BigCount::from_log2(2.0 * t as f64)
}

/// Size of a well-linked set that provably yields a bramble of size `t`.
pub fn well_linked_requirement(t: usize) -> BigCount {
    BigCount::Tower(format!(
        "T^4 * f^(T^8)(2) with T = {} and f(k) = 2^k * 2^(10t * 2^(4t)), t = {t}",
        grid_side(t)
    ))
}

/// Finds `r` indices whose pairs are all red or `t` whose pairs are all blue
/// among `0..m`, where `color(a, b)` is queried with `a < b`.
///
/// Requires `m >= 2^(r+t)`, which guarantees success.
pub fn ramsey_monochromatic(
    m: usize,
    r: usize,
    t: usize,
    color: impl Fn(usize, usize) -> Color,
) -> Result<(Color, Vec<usize>)> {
    if r == 0 || t == 0 {
        return invalid("clique sizes must be positive");
    }
    if r + t >= usize::BITS as usize || m < 1usize << (r + t) {
        return invalid(format!("need at least 2^{} items, got {m}", r + t));
    }
    let items: Vec<usize> = (0..m).collect();
    ramsey_halving(&items, r, t, &color)
        .ok_or_else(|| Error::Invariant("halving ran out of candidates".into()))
}

/// Pivot on the least remaining item and keep the larger colour class, ties
/// going red. Since every remaining candidate agrees with all earlier pivots,
/// the pivot may close either chain.
fn ramsey_halving(
    items: &[usize],
    r: usize,
    t: usize,
    color: &dyn Fn(usize, usize) -> Color,
) -> Option<(Color, Vec<usize>)> {
    let mut cand = items.to_vec();
    cand.sort_unstable();
    let (mut red, mut blue) = (Vec::new(), Vec::new());
    while !cand.is_empty() {
        let pivot = cand.remove(0);
        if red.len() + 1 == r {
            red.push(pivot);
            return Some((Color::Red, red));
        }
        if blue.len() + 1 == t {
            blue.push(pivot);
            return Some((Color::Blue, blue));
        }
        let (reds, blues): (Vec<usize>, Vec<usize>) =
            cand.iter().partition(|&&x| color(pivot, x) == Color::Red);
        if reds.len() >= blues.len() {
            red.push(pivot);
            cand = reds;
        } else {
            blue.push(pivot);
            cand = blues;
        }
    }
    None
}

/// Halving, then in relaxed mode an exhaustive clique search.
fn ramsey_try(
    items: &[usize],
    r: usize,
    t: usize,
    color: &dyn Fn(usize, usize) -> Color,
    relaxed: bool,
) -> Option<(Color, Vec<usize>)> {
    if r == 0 || t == 0 {
        return None;
    }
    if let Some(hit) = ramsey_halving(items, r, t, color) {
        return Some(hit);
    }
    if !relaxed {
        return None;
    }
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    let pair = |c: Color| move |a: usize, b: usize| color(a.min(b), a.max(b)) == c;
    if let Some(clique) = find_clique(&sorted, r, &pair(Color::Red)) {
        return Some((Color::Red, clique));
    }
    find_clique(&sorted, t, &pair(Color::Blue)).map(|c| (Color::Blue, c))
}

/// Lexicographically first clique of the given size, by backtracking.
fn find_clique(
    items: &[usize],
    size: usize,
    adjacent: &dyn Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    fn grow(
        chosen: &mut Vec<usize>,
        cand: &[usize],
        size: usize,
        adjacent: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if chosen.len() == size {
            return true;
        }
        for (i, &x) in cand.iter().enumerate() {
            if chosen.len() + cand.len() - i < size {
                return false;
            }
            let next: Vec<usize> = cand[i + 1..].iter().copied().filter(|&y| adjacent(x, y)).collect();
            chosen.push(x);
            if grow(chosen, &next, size, adjacent) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let mut chosen = Vec::new();
    grow(&mut chosen, items, size, adjacent).then_some(chosen)
}

fn intersects(a: &BTreeSet<VertexId>, b: &BTreeSet<VertexId>) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().any(|v| large.contains(v))
}

fn vertex_set(path: &[VertexId]) -> BTreeSet<VertexId> {
    path.iter().copied().collect()
}

fn pairwise_disjoint(sets: &[BTreeSet<VertexId>]) -> bool {
    (0..sets.len()).all(|i| (i + 1..sets.len()).all(|j| !intersects(&sets[i], &sets[j])))
}

fn check_linkage(g: &Digraph, paths: &[Vec<VertexId>], name: &str) -> Result<()> {
    for (i, p) in paths.iter().enumerate() {
        if !g.is_path(p) {
            return precondition(format!("{name}[{i}] is not a path"));
        }
    }
    let sets: Vec<_> = paths.iter().map(|p| vertex_set(p)).collect();
    if !pairwise_disjoint(&sets) {
        return precondition(format!("paths of {name} are not disjoint"));
    }
    Ok(())
}

/// Valid as a bramble and of depth at most two.
fn certified(g: &Digraph, b: &Bramble) -> bool {
    !b.is_empty() && validate_bramble(g, b).is_ok() && b.depth() <= 2
}

/// Result of [`uncross_pair`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairOutcome {
    /// A bramble of size `t` and depth at most two.
    Bramble(Bramble),
    /// Indices `J`, `|J| = k`, such that the graphs
    /// `P_j ∪ Q_j ∪ P_π(j) ∪ Q_π(j) ∪ P_π²(j)` are pairwise disjoint.
    Disjoint(Vec<usize>),
}

/// Context shared by the cases of [`uncross_pair`].
struct PairData<'a> {
    p: &'a [Vec<VertexId>],
    q: &'a [Vec<VertexId>],
    pi: Vec<usize>,
    pset: Vec<BTreeSet<VertexId>>,
    qset: Vec<BTreeSet<VertexId>>,
}

impl PairData<'_> {
    fn d(&self, j: usize) -> BTreeSet<VertexId> {
        let j1 = self.pi[j];
        let j2 = self.pi[j1];
        let mut out = self.pset[j].clone();
        for s in [&self.qset[j], &self.pset[j1], &self.qset[j1], &self.pset[j2]] {
            out.extend(s.iter().copied());
        }
        out
    }

    fn disjoint_js(&self, js: &[usize]) -> bool {
        let ds: Vec<_> = js.iter().map(|&j| self.d(j)).collect();
        pairwise_disjoint(&ds)
    }

    /// `H`-edge `e`: even positions of a component walk are `P`-paths.
    fn edge_path(&self, e: (bool, usize)) -> &[VertexId] {
        if e.0 {
            &self.p[e.1]
        } else {
            &self.q[e.1]
        }
    }

    fn edge_set(&self, e: (bool, usize)) -> &BTreeSet<VertexId> {
        if e.0 {
            &self.pset[e.1]
        } else {
            &self.qset[e.1]
        }
    }
}

/// Given a linkage `P` from `X` to `Y` and a linkage `Q` from `Y` back to `X`
/// with `q_i` starting at the end of `p_i`, returns a bramble of size `t` or
/// `k` indices whose five-edge stretches of the cycle structure are disjoint.
pub fn uncross_pair(
    g: &Digraph,
    p: &[Vec<VertexId>],
    q: &[Vec<VertexId>],
    k: usize,
    t: usize,
    cfg: &WeaveConfig,
) -> Result<Verdict<PairOutcome>> {
    if k == 0 || t == 0 {
        return invalid("k and t must be positive");
    }
    if p.is_empty() || p.len() != q.len() {
        return precondition("P and Q must be nonempty and of equal size");
    }
    check_linkage(g, p, "P")?;
    check_linkage(g, q, "Q")?;
    let start_of: BTreeMap<VertexId, usize> = p.iter().enumerate().map(|(i, path)| (path[0], i)).collect();
    let ends: BTreeSet<VertexId> = p.iter().map(|path| *path.last().unwrap()).collect();
    if ends.iter().any(|v| start_of.contains_key(v)) {
        return precondition("X and Y must be disjoint");
    }
    let mut pi = Vec::with_capacity(p.len());
    for (i, path) in q.iter().enumerate() {
        if path[0] != *p[i].last().unwrap() {
            return precondition(format!("Q[{i}] does not start at the end of P[{i}]"));
        }
        match start_of.get(path.last().unwrap()) {
            Some(&j) => pi.push(j),
            None => return precondition(format!("Q[{i}] does not end in X")),
        }
    }
    if !cfg.relaxed && !uncross_threshold(k, t).is_met_by(p.len()) {
        return Err(Error::SizeLimit(format!(
            "uncrossing needs {} paths, got {}",
            uncross_threshold(k, t),
            p.len()
        )));
    }
    let data = PairData {
        p,
        q,
        pi,
        pset: p.iter().map(|x| vertex_set(x)).collect(),
        qset: q.iter().map(|x| vertex_set(x)).collect(),
    };

    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut seen = vec![false; p.len()];
    for i in 0..p.len() {
        let mut j = i;
        let mut cyc = Vec::new();
        while !seen[j] {
            seen[j] = true;
            cyc.push(j);
            j = data.pi[j];
        }
        if !cyc.is_empty() {
            components.push(cyc);
        }
    }
    let comp_sets: Vec<BTreeSet<VertexId>> = components
        .iter()
        .map(|c| c.iter().flat_map(|&j| data.pset[j].iter().chain(&data.qset[j])).copied().collect())
        .collect();

    let threshold = if cfg.relaxed {
        cfg.component_threshold.unwrap_or(2)
    } else {
        usize::try_from(1u128 << (k + t).min(100)).unwrap_or(usize::MAX)
    };
    if components.len() >= threshold {
        let items: Vec<usize> = (0..components.len()).collect();
        let color = |a: usize, b: usize| {
            if intersects(&comp_sets[a], &comp_sets[b]) {
                Color::Red
            } else {
                Color::Blue
            }
        };
        match ramsey_try(&items, t, k, &color, cfg.relaxed) {
            Some((Color::Red, clique)) => {
                let b = Bramble::new(clique.iter().map(|&c| comp_sets[c].clone()).collect());
                if certified(g, &b) {
                    return Ok(Verdict::Done(PairOutcome::Bramble(b)));
                }
            }
            Some((Color::Blue, clique)) => {
                let js: Vec<usize> = clique.iter().map(|&c| components[c][0]).collect();
                if data.disjoint_js(&js) {
                    return Ok(Verdict::Done(PairOutcome::Disjoint(js)));
                }
            }
            None => {}
        }
        if !cfg.relaxed {
            return Err(Error::Invariant("component case produced no certificate".into()));
        }
    }

    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(components[c].len()), c));
    if !cfg.relaxed {
        order.truncate(1);
    }
    let seg_len = {
        let l = cfg.segment_len.unwrap_or(10 * k).max(6);
        l + l % 2
    };
    let mut hs: Vec<(BTreeSet<VertexId>, usize)> = Vec::new();
    for &c in &order {
        let edges: Vec<(bool, usize)> = components[c].iter().flat_map(|&j| [(true, j), (false, j)]).collect();
        let cyclic = edges.len() <= seg_len;
        let segments: Vec<&[(bool, usize)]> = if cyclic {
            vec![&edges[..]]
        } else {
            edges.chunks_exact(seg_len).collect()
        };
        for seg in segments {
            if let Some(found) = segment_outcome(&data, seg, k, cyclic) {
                match found {
                    SegmentResult::Windows(js) => {
                        if data.disjoint_js(&js) {
                            return Ok(Verdict::Done(PairOutcome::Disjoint(js)));
                        }
                    }
                    SegmentResult::Walk(h, j) => hs.push((h, j)),
                }
            }
        }
    }
    if !hs.is_empty() {
        let items: Vec<usize> = (0..hs.len()).collect();
        let color = |a: usize, b: usize| {
            if intersects(&hs[a].0, &hs[b].0) {
                Color::Red
            } else {
                Color::Blue
            }
        };
        match ramsey_try(&items, t, k, &color, cfg.relaxed) {
            Some((Color::Red, clique)) => {
                let b = Bramble::new(clique.iter().map(|&i| hs[i].0.clone()).collect());
                if certified(g, &b) {
                    return Ok(Verdict::Done(PairOutcome::Bramble(b)));
                }
            }
            Some((Color::Blue, clique)) => {
                let js: Vec<usize> = clique.iter().map(|&i| hs[i].1).collect();
                if data.disjoint_js(&js) {
                    return Ok(Verdict::Done(PairOutcome::Disjoint(js)));
                }
            }
            None => {}
        }
    }
    if cfg.relaxed {
        Ok(Verdict::Failed("no certified bramble or disjoint index set".into()))
    } else {
        Err(Error::Invariant("long-cycle case produced no certificate".into()))
    }
}

enum SegmentResult {
    Windows(Vec<usize>),
    /// Vertex set of a closed walk and the `P`-index opening its inner window.
    Walk(BTreeSet<VertexId>, usize),
}

/// A segment covering a whole cycle measures distance around the cycle.
fn segment_outcome(
    data: &PairData,
    seg: &[(bool, usize)],
    k: usize,
    cyclic: bool,
) -> Option<SegmentResult> {
    let n = seg.len();
    let mut any_far_crossing = false;
    for a in 0..n {
        for b in a + 6..n {
            if cyclic && n - (b - a) < 6 {
                continue;
            }
            if !intersects(data.edge_set(seg[a]), data.edge_set(seg[b])) {
                continue;
            }
            any_far_crossing = true;
            let o = if (a + 1) % 2 == 0 { a + 1 } else { a + 2 };
            if o + 4 > b - 1 {
                continue;
            }
            let pe = data.edge_path(seg[a]);
            let pf = data.edge_path(seg[b]);
            let fset = data.edge_set(seg[b]);
            let ze = pe.iter().position(|v| fset.contains(v)).unwrap();
            let z = pe[ze];
            let zf = pf.iter().position(|&v| v == z).unwrap();
            let mut h: BTreeSet<VertexId> = pe[ze..].iter().copied().collect();
            for &e in &seg[a + 1..b] {
                h.extend(data.edge_set(e).iter().copied());
            }
            h.extend(pf[..=zf].iter().copied());
            return Some(SegmentResult::Walk(h, seg[o].1));
        }
    }
    if any_far_crossing {
        return None;
    }
    let mut js = Vec::new();
    let mut o = 0;
    while o + 4 < n && js.len() < k && (!cyclic || o == 0 || o + 10 <= n) {
        js.push(seg[o].1);
        o += 10;
    }
    (js.len() == k).then_some(SegmentResult::Windows(js))
}

/// Result of [`uncross_two_linkages`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkagesOutcome {
    /// Indices into `P` and into `R`, `k` each, with every chosen `P`-path
    /// disjoint from every chosen `R`-path.
    Disjoint { p: Vec<usize>, r: Vec<usize> },
    Bramble(Bramble),
}

/// Given linkages `P` from `X1` to `X2` and `R` from `Y1` to `Y2` inside a
/// well-linked set `x`, returns `k`-sized sublinkages that avoid each other or
/// a bramble of size `t` and depth at most two.
pub fn uncross_two_linkages(
    g: &Digraph,
    x: &BTreeSet<VertexId>,
    p: &[Vec<VertexId>],
    r: &[Vec<VertexId>],
    k: usize,
    t: usize,
    cfg: &WeaveConfig,
) -> Result<Verdict<LinkagesOutcome>> {
    if k == 0 || t == 0 {
        return invalid("k and t must be positive");
    }
    check_linkage(g, p, "P")?;
    check_linkage(g, r, "R")?;
    let ends = |paths: &[Vec<VertexId>], last: bool| -> BTreeSet<VertexId> {
        paths.iter().map(|q| if last { *q.last().unwrap() } else { q[0] }).collect()
    };
    let groups = [ends(p, false), ends(p, true), ends(r, false), ends(r, true)];
    for (i, s) in groups.iter().enumerate() {
        if !s.is_subset(x) {
            return precondition("linkage endpoints must lie in the well-linked set");
        }
        if groups[i + 1..].iter().any(|o| intersects(s, o)) {
            return precondition("endpoint sets of the two linkages must be pairwise disjoint");
        }
    }
    if !cfg.relaxed {
        let need = linkage_threshold(k, t);
        if !need.is_met_by(p.len().min(r.len())) {
            return Err(Error::SizeLimit(format!("two-linkage uncrossing needs {need} paths")));
        }
    }
    let pset: Vec<_> = p.iter().map(|q| vertex_set(q)).collect();
    let rset: Vec<_> = r.iter().map(|q| vertex_set(q)).collect();
    let n = p.len().min(r.len());
    let red_target = if cfg.relaxed {
        cfg.intersect_clique.unwrap_or(t).max(1)
    } else {
        intersect_clique_size(t)
            .exact()
            .and_then(|x| usize::try_from(x).ok())
            .unwrap_or(usize::MAX)
    };

    let c1 = |a: usize, b: usize| {
        if intersects(&pset[a], &rset[b]) {
            Color::Red
        } else {
            Color::Blue
        }
    };
    let c2 = |a: usize, b: usize| {
        if intersects(&pset[b], &rset[a]) {
            Color::Red
        } else {
            Color::Blue
        }
    };
    let all: Vec<usize> = (0..n).collect();
    let attempt = (|| {
        let i1 = match ramsey_try(&all, red_target, 2 * k, &c1, cfg.relaxed)? {
            (Color::Blue, ids) => {
                return Some(Err(LinkagesOutcome::Disjoint {
                    p: ids[..k].to_vec(),
                    r: ids[k..].to_vec(),
                }))
            }
            (Color::Red, ids) => extend_clique(ids, &all, &c1, cfg.relaxed),
        };
        match ramsey_try(&i1, red_target, 2 * k, &c2, cfg.relaxed)? {
            (Color::Blue, ids) => Some(Err(LinkagesOutcome::Disjoint {
                p: ids[k..].to_vec(),
                r: ids[..k].to_vec(),
            })),
            (Color::Red, ids) => Some(Ok(extend_clique(ids, &i1, &c2, cfg.relaxed))),
        }
    })();

    let disjoint_ok = |pi: &[usize], ri: &[usize]| pi.iter().all(|&a| ri.iter().all(|&b| !intersects(&pset[a], &rset[b])));
    let mut reason = String::from("no monochromatic family found");
    match attempt {
        Some(Err(LinkagesOutcome::Disjoint { p: pi, r: ri })) => {
            if disjoint_ok(&pi, &ri) {
                return Ok(Verdict::Done(LinkagesOutcome::Disjoint { p: pi, r: ri }));
            }
            reason = "Ramsey outcome failed its check".into();
        }
        Some(Err(LinkagesOutcome::Bramble(_))) => unreachable!(),
        Some(Ok(i2)) => match bramble_from_crossing(g, p, r, &i2, t, cfg)? {
            Verdict::Done(b) => return Ok(Verdict::Done(LinkagesOutcome::Bramble(b))),
            Verdict::Failed(why) => reason = why,
        },
        None => {}
    }
    if !cfg.relaxed {
        return Err(Error::Invariant(reason));
    }
    let adjacent = |a: usize, b: usize| !intersects(&pset[a], &rset[b]);
    match disjoint_biclique(p.len(), r.len(), k, &adjacent) {
        Some((pi, ri)) => Ok(Verdict::Done(LinkagesOutcome::Disjoint { p: pi, r: ri })),
        None => Ok(Verdict::Failed(reason)),
    }
}

/// Adds further items that stay red with every member, in index order.
fn extend_clique(
    mut ids: Vec<usize>,
    pool: &[usize],
    color: &dyn Fn(usize, usize) -> Color,
    relaxed: bool,
) -> Vec<usize> {
    if relaxed {
        for &c in pool {
            if !ids.contains(&c)
                && ids.iter().all(|&m| color(m.min(c), m.max(c)) == Color::Red)
            {
                ids.push(c);
            }
        }
        ids.sort_unstable();
    }
    ids
}

/// `k` left and `k` right indices with every cross pair adjacent.
fn disjoint_biclique(
    left: usize,
    right: usize,
    k: usize,
    adjacent: &dyn Fn(usize, usize) -> bool,
) -> Option<(Vec<usize>, Vec<usize>)> {
    fn go(
        start: usize,
        left: usize,
        right_ok: Vec<usize>,
        chosen: &mut Vec<usize>,
        k: usize,
        adjacent: &dyn Fn(usize, usize) -> bool,
    ) -> Option<Vec<usize>> {
        if right_ok.len() < k {
            return None;
        }
        if chosen.len() == k {
            return Some(right_ok[..k].to_vec());
        }
        for a in start..left {
            let next: Vec<usize> = right_ok.iter().copied().filter(|&b| adjacent(a, b)).collect();
            chosen.push(a);
            if let Some(rs) = go(a + 1, left, next, chosen, k, adjacent) {
                return Some(rs);
            }
            chosen.pop();
        }
        None
    }
    let mut chosen = Vec::new();
    let rs = go(0, left, (0..right).collect(), &mut chosen, k, adjacent)?;
    Some((chosen, rs))
}

/// The crossing case: every `P_a` meets every `R_b` for `a ≠ b` in `ids`.
fn bramble_from_crossing(
    g: &Digraph,
    p: &[Vec<VertexId>],
    r: &[Vec<VertexId>],
    ids: &[usize],
    t: usize,
    cfg: &WeaveConfig,
) -> Result<Verdict<Bramble>> {
    let pp: Vec<Vec<VertexId>> = ids.iter().map(|&i| p[i].clone()).collect();
    let rr: Vec<Vec<VertexId>> = ids.iter().map(|&i| r[i].clone()).collect();
    let sides = [back_linkage(g, &pp), back_linkage(g, &rr)];
    let (Some(qx), Some(qy)) = (&sides[0], &sides[1]) else {
        return Ok(Verdict::Failed("no full linkage back through the well-linked set".into()));
    };
    let mut triples = Vec::new();
    for (paths, back) in [(&pp, qx), (&rr, qy)] {
        match uncross_pair(g, paths, back, t, t, cfg)? {
            Verdict::Done(PairOutcome::Bramble(b)) => return Ok(Verdict::Done(b)),
            Verdict::Done(PairOutcome::Disjoint(js)) => {
                let pi = permutation(paths, back);
                triples.push(js.iter().map(|&j| [j, pi[j], pi[pi[j]]]).collect::<Vec<_>>());
            }
            Verdict::Failed(why) => return Ok(Verdict::Failed(why)),
        }
    }
    let walk = |paths: &[Vec<VertexId>], back: &[Vec<VertexId>], tr: [usize; 3]| {
        let mut w = paths[tr[0]].clone();
        for piece in [&back[tr[0]], &paths[tr[1]], &back[tr[1]], &paths[tr[2]]] {
            w.extend_from_slice(&piece[1..]);
        }
        w
    };
    let mut used = vec![false; triples[1].len()];
    let mut bags = Vec::new();
    for &ta in &triples[0] {
        let hit = (0..triples[1].len()).find_map(|j| {
            let tb = triples[1][j];
            if used[j] {
                return None;
            }
            let z1 = *pp[ta[2]].iter().find(|v| rr[tb[0]].contains(v))?;
            let z2 = *rr[tb[2]].iter().find(|v| pp[ta[0]].contains(v))?;
            Some((j, tb, z1, z2))
        });
        let Some((j, tb, z1, z2)) = hit else { continue };
        used[j] = true;
        let wp = walk(&pp, qx, ta);
        let wr = walk(&rr, qy, tb);
        let from_p = wp.iter().position(|&v| v == z2).unwrap();
        let to_p = wp.iter().rposition(|&v| v == z1).unwrap();
        let from_r = wr.iter().position(|&v| v == z1).unwrap();
        let to_r = wr.iter().rposition(|&v| v == z2).unwrap();
        if from_p > to_p || from_r > to_r {
            continue;
        }
        let bag: BTreeSet<VertexId> = wp[from_p..=to_p].iter().chain(&wr[from_r..=to_r]).copied().collect();
        bags.push(bag);
        if bags.len() == t {
            break;
        }
    }
    let b = Bramble::new(bags);
    if b.len() == t && certified(g, &b) {
        Ok(Verdict::Done(b))
    } else {
        Ok(Verdict::Failed("stitched bags do not form a depth-two bramble".into()))
    }
}

/// Disjoint paths from the ends of `paths` back to their starts, ordered so
/// that entry `i` leaves the end of `paths[i]`.
fn back_linkage(g: &Digraph, paths: &[Vec<VertexId>]) -> Option<Vec<Vec<VertexId>>> {
    let starts: BTreeSet<VertexId> = paths.iter().map(|q| q[0]).collect();
    let ends: BTreeSet<VertexId> = paths.iter().map(|q| *q.last().unwrap()).collect();
    let (sys, _) = max_disjoint_paths(g, &ends, &starts);
    if sys.paths.len() < paths.len() {
        return None;
    }
    let by_start: BTreeMap<VertexId, Vec<VertexId>> = sys.paths.into_iter().map(|q| (q[0], q)).collect();
    paths.iter().map(|q| by_start.get(q.last().unwrap()).cloned()).collect()
}

fn permutation(p: &[Vec<VertexId>], q: &[Vec<VertexId>]) -> Vec<usize> {
    let start_of: BTreeMap<VertexId, usize> = p.iter().enumerate().map(|(i, x)| (x[0], i)).collect();
    q.iter().map(|x| start_of[x.last().unwrap()]).collect()
}

/// Builds a bramble of size `t` and depth at most two from a set `x` on the
/// path `p`, assumed well-linked.
///
/// `x` is cut into `T²` consecutive blocks along `p`; block-to-block linkages
/// are made pairwise disjoint as far as possible, then rows and columns of the
/// block grid become closed walks whose intersection pattern yields the bags.
pub fn bramble_from_well_linked(
    g: &Digraph,
    p: &[VertexId],
    x: &BTreeSet<VertexId>,
    t: usize,
    cfg: &WeaveConfig,
) -> Result<Verdict<Bramble>> {
    if t == 0 {
        return invalid("t must be positive");
    }
    if !g.is_path(p) {
        return precondition("p is not a path");
    }
    let pos: BTreeMap<VertexId, usize> = p.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    if x.iter().any(|v| !pos.contains_key(v)) {
        return precondition("x must lie on p");
    }
    if !cfg.relaxed {
        return Err(Error::SizeLimit(format!(
            "a well-linked set of size {} is required",
            well_linked_requirement(t)
        )));
    }
    if x.is_empty() {
        return Ok(Verdict::Failed("x is empty".into()));
    }
    if t == 1 {
        let first = *x.iter().min_by_key(|v| pos[v]).unwrap();
        return Ok(Verdict::Done(Bramble::new(vec![BTreeSet::from([first])])));
    }
    let side = cfg.grid_side.unwrap_or(t).max(2);
    let blocks_n = side * side;
    if x.len() < blocks_n {
        return Ok(Verdict::Failed(format!("need {blocks_n} vertices in x, got {}", x.len())));
    }
    let mut ordered: Vec<VertexId> = x.iter().copied().collect();
    ordered.sort_by_key(|v| pos[v]);
    let (base, extra) = (ordered.len() / blocks_n, ordered.len() % blocks_n);
    let mut blocks: Vec<(BTreeSet<VertexId>, BTreeSet<VertexId>)> = Vec::new();
    let mut at = 0;
    for b in 0..blocks_n {
        let len = base + usize::from(b < extra);
        let block = &ordered[at..at + len];
        at += len;
        if len == 1 {
            blocks.push((vertex_set(block), vertex_set(block)));
        } else {
            let half = len / 2;
            blocks.push((vertex_set(&block[..half]), vertex_set(&block[half..])));
        }
    }

    let mut needed: Vec<(usize, usize)> = Vec::new();
    for c in 0..side {
        for j in 0..side {
            needed.push((c + j * side, c + ((j + 1) % side) * side));
        }
    }
    for r in 0..side {
        for j in 0..side {
            needed.push((r * side + j, r * side + (j + 1) % side));
        }
    }
    let mut seen = BTreeSet::new();
    needed.retain(|&pair| pair.0 != pair.1 && seen.insert(pair));

    let mut links: Vec<Vec<Vec<VertexId>>> = Vec::with_capacity(needed.len());
    for &(i, j) in &needed {
        let (sys, _) = max_disjoint_paths(g, &blocks[i].1, &blocks[j].0);
        if sys.paths.is_empty() {
            return Ok(Verdict::Failed(format!("no path from block {i} to block {j}")));
        }
        links.push(sys.paths);
    }

    for a in 0..links.len() {
        for b in a + 1..links.len() {
            let sa: Vec<_> = links[a].iter().map(|q| vertex_set(q)).collect();
            let sb: Vec<_> = links[b].iter().map(|q| vertex_set(q)).collect();
            if sa.iter().all(|u| sb.iter().all(|w| !intersects(u, w))) {
                continue;
            }
            let endpoint_sets = [
                links[a].iter().map(|q| q[0]).collect::<BTreeSet<_>>(),
                links[a].iter().map(|q| *q.last().unwrap()).collect(),
                links[b].iter().map(|q| q[0]).collect(),
                links[b].iter().map(|q| *q.last().unwrap()).collect(),
            ];
            let separate =
                (0..4).all(|i| (i + 1..4).all(|j| !intersects(&endpoint_sets[i], &endpoint_sets[j])));
            let pick = if separate {
                match uncross_two_linkages(g, x, &links[a], &links[b], 1, t, cfg)? {
                    Verdict::Done(LinkagesOutcome::Disjoint { p: pa, r: rb }) => Some((pa, rb)),
                    Verdict::Done(LinkagesOutcome::Bramble(br)) => return Ok(Verdict::Done(br)),
                    Verdict::Failed(_) => None,
                }
            } else {
                let adjacent = |u: usize, w: usize| !intersects(&sa[u], &sb[w]);
                disjoint_biclique(sa.len(), sb.len(), 1, &adjacent)
            };
            if let Some((mut pa, mut rb)) = pick {
                for u in 0..sa.len() {
                    if !pa.contains(&u) && rb.iter().all(|&w| !intersects(&sa[u], &sb[w])) {
                        pa.push(u);
                    }
                }
                for w in 0..sb.len() {
                    if !rb.contains(&w) && pa.iter().all(|&u| !intersects(&sa[u], &sb[w])) {
                        rb.push(w);
                    }
                }
                pa.sort_unstable();
                rb.sort_unstable();
                links[a] = pa.iter().map(|&u| links[a][u].clone()).collect();
                links[b] = rb.iter().map(|&w| links[b][w].clone()).collect();
            }
        }
    }

    let link_of: BTreeMap<(usize, usize), &Vec<VertexId>> =
        needed.iter().zip(&links).map(|(&pair, l)| (pair, &l[0])).collect();
    let cycle_set = |blocks_in_order: &[usize]| -> BTreeSet<VertexId> {
        let m = blocks_in_order.len();
        let mut set = BTreeSet::new();
        for j in 0..m {
            let (b0, b1, b2) = (
                blocks_in_order[j],
                blocks_in_order[(j + 1) % m],
                blocks_in_order[(j + 2) % m],
            );
            let into = link_of[&(b0, b1)];
            let out = link_of[&(b1, b2)];
            set.extend(into.iter().copied());
            let (lo, hi) = (pos[into.last().unwrap()], pos[&out[0]]);
            set.extend(p[lo.min(hi)..=lo.max(hi)].iter().copied());
        }
        set
    };
    let columns: Vec<BTreeSet<VertexId>> = (0..side)
        .map(|c| cycle_set(&(0..side).map(|j| c + j * side).collect::<Vec<_>>()))
        .collect();
    let rows: Vec<BTreeSet<VertexId>> = (0..side)
        .map(|r| cycle_set(&(0..side).map(|j| r * side + j).collect::<Vec<_>>()))
        .collect();

    let items: Vec<usize> = (0..side).collect();
    let colored = |sets: &[BTreeSet<VertexId>]| {
        let sets = sets.to_vec();
        move |a: usize, b: usize| {
            if intersects(&sets[a], &sets[b]) {
                Color::Red
            } else {
                Color::Blue
            }
        }
    };
    let mut candidates = Vec::new();
    let col_hit = ramsey_try(&items, t, t, &colored(&columns), true);
    if let Some((Color::Red, ids)) = &col_hit {
        candidates.push(Bramble::new(ids.iter().map(|&i| columns[i].clone()).collect()));
    }
    let row_hit = ramsey_try(&items, t, t, &colored(&rows), true);
    if let Some((Color::Red, ids)) = &row_hit {
        candidates.push(Bramble::new(ids.iter().map(|&i| rows[i].clone()).collect()));
    }
    if let (Some((Color::Blue, ci)), Some((Color::Blue, ri))) = (&col_hit, &row_hit) {
        candidates.push(Bramble::new(
            ci.iter()
                .zip(ri)
                .map(|(&c, &r)| columns[c].union(&rows[r]).copied().collect())
                .collect(),
        ));
    }
    for b in candidates {
        if b.len() == t && certified(g, &b) {
            return Ok(Verdict::Done(b));
        }
    }
    Ok(Verdict::Failed("row and column walks give no depth-two bramble".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bramble::gen_grid;
    use proptest::prelude::*;

    fn parity(a: usize, b: usize) -> Color {
        if (a + b) % 2 == 0 {
            Color::Red
        } else {
            Color::Blue
        }
    }

    #[test]
    fn ramsey_examples() {
        let (c, ids) = ramsey_monochromatic(16, 2, 2, parity).unwrap();
        assert_eq!(ids.len(), 2);
        assert!(ids.windows(2).all(|w| parity(w[0], w[1]) == c));
        assert!(ramsey_monochromatic(15, 2, 2, parity).is_err());
        assert!(ramsey_monochromatic(16, 0, 4, parity).is_err());
        let (c, ids) = ramsey_monochromatic(4, 1, 1, parity).unwrap();
        assert_eq!((c, ids), (Color::Red, vec![0]));
    }

    proptest! {
        #[test]
        fn ramsey_clique_is_monochromatic(seed in any::<u64>(), r in 1usize..4, t in 1usize..4) {
            let m = 1usize << (r + t);
            let color = move |a: usize, b: usize| {
                let h = (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F) ^ seed;
                if h.count_ones() % 2 == 0 { Color::Red } else { Color::Blue }
            };
            let (c, ids) = ramsey_monochromatic(m, r, t, color).unwrap();
            prop_assert_eq!(ids.len(), if c == Color::Red { r } else { t });
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    prop_assert!(ids[i] < ids[j]);
                    prop_assert_eq!(color(ids[i], ids[j]), c);
                }
            }
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(uncross_threshold(1, 1), BigCount::Exact(160));
        assert_eq!(intersect_clique_size(1), BigCount::Exact(160));
        assert_eq!(grid_side(2), BigCount::Exact(16));
        assert!(matches!(linkage_threshold(1, 1), BigCount::Pow2(l) if l == 161.0));
        assert!(!linkage_threshold(1, 1).is_met_by(usize::MAX));
        assert!(matches!(well_linked_requirement(1), BigCount::Tower(_)));
    }

    /// Six disjoint row paths `x_i -> y_i` crossed by six column paths, with
    /// return paths `y_i -> q_i -> x_π(i)` for `π = (0 1 2)(3 4 5)`.
    pub(crate) fn crossing_fixture() -> (Digraph, Vec<Vec<VertexId>>, Vec<Vec<VertexId>>, Vec<Vec<VertexId>>) {
        let n = 6;
        let cell = |i: usize, j: usize| i * n + j;
        let (xs, ys, qs) = (36, 42, 48);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n - 1 {
                edges.push((cell(i, j), cell(i, j + 1)));
                edges.push((cell(j, i), cell(j + 1, i)));
            }
        }
        let pi = [1, 2, 0, 4, 5, 3];
        let mut rows = Vec::new();
        let mut back = Vec::new();
        for i in 0..n {
            edges.push((xs + i, cell(i, 0)));
            edges.push((cell(i, n - 1), ys + i));
            edges.push((ys + i, qs + i));
            edges.push((qs + i, xs + pi[i]));
            let mut row = vec![xs + i];
            row.extend((0..n).map(|j| cell(i, j)));
            row.push(ys + i);
            rows.push(row);
            back.push(vec![ys + i, qs + i, xs + pi[i]]);
        }
        let g = Digraph::new(54, edges).unwrap();
        let cols = (0..n).map(|j| (0..n).map(|i| cell(i, j)).collect()).collect();
        (g, rows, back, cols)
    }

    #[test]
    fn uncross_pair_components_disjoint() {
        let (g, rows, back, _) = crossing_fixture();
        let cfg = WeaveConfig::relaxed();
        let out = uncross_pair(&g, &rows, &back, 2, 2, &cfg).unwrap();
        let Verdict::Done(PairOutcome::Disjoint(js)) = out else { panic!("{out:?}") };
        assert_eq!(js, vec![0, 3]);
    }

    #[test]
    fn uncross_pair_bramble_when_components_touch() {
        let (g, mut rows, mut back, _) = crossing_fixture();
        let extra = g.vertex_count();
        let mut edges: Vec<_> = g.edges().collect();
        // The return path of row 0 runs through row 3.
        edges.extend([(42, 20), (20, 48)]);
        let g = Digraph::new(extra, edges).unwrap();
        back[0] = vec![42, 20, 48, 37];
        let cfg = WeaveConfig::relaxed();
        let out = uncross_pair(&g, &rows, &back, 2, 2, &cfg).unwrap();
        let Verdict::Done(PairOutcome::Bramble(b)) = out else { panic!("{out:?}") };
        assert_eq!(b.len(), 2);
        assert!(certified(&g, &b));
        rows.swap(0, 1);
        assert!(uncross_pair(&g, &rows, &back, 2, 2, &cfg).is_err());
    }

    #[test]
    fn uncross_pair_strict_size_limit() {
        let (g, rows, back, _) = crossing_fixture();
        let out = uncross_pair(&g, &rows, &back, 1, 1, &WeaveConfig::default());
        assert!(matches!(out, Err(Error::SizeLimit(_))));
    }

    #[test]
    fn uncross_pair_single_long_cycle() {
        // One long H-cycle on a directed cycle of 12 rows, each a single edge.
        let n = 12;
        let mut edges = Vec::new();
        let (mut p, mut q) = (Vec::new(), Vec::new());
        for i in 0..n {
            let (x, y, m) = (3 * i, 3 * i + 1, 3 * i + 2);
            let next = 3 * ((i + 1) % n);
            edges.extend([(x, y), (y, m), (m, next)]);
            p.push(vec![x, y]);
            q.push(vec![y, m, next]);
        }
        let g = Digraph::new(3 * n, edges).unwrap();
        let cfg = WeaveConfig {
            relaxed: true,
            segment_len: Some(24),
            ..Default::default()
        };
        let out = uncross_pair(&g, &p, &q, 2, 2, &cfg).unwrap();
        let Verdict::Done(PairOutcome::Disjoint(js)) = out else { panic!("{out:?}") };
        assert_eq!(js, vec![0, 5]);
    }

    #[test]
    fn uncross_two_linkages_outcomes() {
        let (g, rows, _, cols) = crossing_fixture();
        // Columns get private endpoints so that all four endpoint sets differ,
        // and return paths through a middle vertex, again two 3-cycles.
        let base = g.vertex_count();
        let mut edges: Vec<_> = g.edges().collect();
        let mut r = Vec::new();
        let sigma = [1, 2, 0, 4, 5, 3];
        for (j, col) in cols.iter().enumerate() {
            let (a, b, mid) = (base + 2 * j, base + 2 * j + 1, base + 12 + j);
            edges.push((a, col[0]));
            edges.push((*col.last().unwrap(), b));
            edges.push((b, mid));
            edges.push((mid, base + 2 * sigma[j]));
            let mut path = vec![a];
            path.extend(col);
            path.push(b);
            r.push(path);
        }
        let g = Digraph::new(base + 18, edges).unwrap();
        let x: BTreeSet<VertexId> = rows
            .iter()
            .chain(&r)
            .flat_map(|q| [q[0], *q.last().unwrap()])
            .collect();
        let cfg = WeaveConfig::relaxed();
        // Every row meets every column: no disjoint pair exists.
        let out = uncross_two_linkages(&g, &x, &rows, &r, 1, 2, &cfg).unwrap();
        match out {
            Verdict::Done(LinkagesOutcome::Bramble(b)) => {
                assert_eq!(b.len(), 2);
                assert!(certified(&g, &b));
            }
            other => panic!("{other:?}"),
        }
        // Shortened columns miss the lower rows.
        let short: Vec<Vec<VertexId>> = cols.iter().map(|c| c[..2].to_vec()).collect();
        let x2: BTreeSet<VertexId> = rows
            .iter()
            .flat_map(|q| [q[0], *q.last().unwrap()])
            .chain(short.iter().flat_map(|c| [c[0], c[1]]))
            .collect();
        let out = uncross_two_linkages(&g, &x2, &rows[3..], &short, 2, 2, &cfg).unwrap();
        let Verdict::Done(LinkagesOutcome::Disjoint { p, r }) = out else { panic!("{out:?}") };
        assert_eq!((p.len(), r.len()), (2, 2));
        assert!(uncross_two_linkages(&g, &x2, &rows, &rows, 1, 1, &cfg).is_err());
    }

    #[test]
    fn bramble_from_radial_path() {
        let (g, labels) = gen_grid(6).unwrap();
        let p = labels.paths[0].clone();
        let x: BTreeSet<VertexId> = p.iter().copied().collect();
        let cfg = WeaveConfig::relaxed();
        let out = bramble_from_well_linked(&g, &p, &x, 2, &cfg).unwrap();
        let Verdict::Done(b) = out else { panic!("{out:?}") };
        assert_eq!(b.len(), 2);
        assert!(certified(&g, &b));
        assert!(b.bags.iter().all(|bag| bag.iter().any(|v| x.contains(v))));
        let strict = bramble_from_well_linked(&g, &p, &x, 2, &WeaveConfig::default());
        assert!(matches!(strict, Err(Error::SizeLimit(_))));
        let backwards: Vec<VertexId> = p.iter().rev().copied().collect();
        assert!(bramble_from_well_linked(&g, &backwards, &x, 2, &cfg).is_err());
        let few = bramble_from_well_linked(&g, &p[..3], &vertex_set(&p[..3]), 2, &cfg).unwrap();
        assert!(matches!(few, Verdict::Failed(_)));
    }
}

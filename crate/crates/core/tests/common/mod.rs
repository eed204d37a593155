#![allow(dead_code)]

use std::collections::BTreeSet;

use ddpp_core::{Bramble, Digraph, LinkageInstance, VertexId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random digraph on `n` vertices, each ordered pair an edge with
/// probability `p`.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Digraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Digraph::new(n, edges).unwrap()
}

/// A random graph with a planted bramble of depth at most two.
///
/// Bags are short directed cycles; some share a vertex with the previous
/// bag. Every two bags get edges both ways. Terminals are usually outside
/// the bags, sometimes inside, sometimes `s_i = t_i`.
pub fn planted(seed: u64) -> (LinkageInstance, Bramble) {
    let mut rng = rng(seed);
    let k = 1 + (seed % 3) as usize;
    let bag_count = 2 * k + 2 + rng.gen_range(0..5);
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut bags: Vec<BTreeSet<VertexId>> = Vec::new();
    let mut depth: Vec<usize> = Vec::new();
    let mut n = 0;
    for b in 0..bag_count {
        let len = rng.gen_range(1..=3);
        let cycle: Vec<VertexId> = (n..n + len).collect();
        n += len;
        depth.extend(std::iter::repeat_n(1, len));
        for i in 0..len {
            if len > 1 {
                edges.push((cycle[i], cycle[(i + 1) % len]));
            }
        }
        let mut bag: BTreeSet<VertexId> = cycle.iter().copied().collect();
        if b > 0 && rng.gen_bool(0.3) {
            let shared: Vec<VertexId> = bags[b - 1].iter().copied().filter(|&v| depth[v] == 1).collect();
            if let Some(&x) = shared.choose(&mut rng) {
                depth[x] = 2;
                edges.push((x, cycle[0]));
                edges.push((cycle[len - 1], x));
                bag.insert(x);
            }
        }
        bags.push(bag);
    }
    for a in 0..bag_count {
        for b in a + 1..bag_count {
            let pick = |rng: &mut ChaCha8Rng, bag: &BTreeSet<VertexId>| {
                *bag.iter().collect::<Vec<_>>().choose(rng).copied().unwrap()
            };
            for forward in [true, false] {
                let (x, y) = (pick(&mut rng, &bags[a]), pick(&mut rng, &bags[b]));
                if x != y {
                    edges.push(if forward { (x, y) } else { (y, x) });
                }
            }
        }
    }
    let free = 2 * k + rng.gen_range(0..6);
    let total = n + free;
    let density = [0.15, 0.3, 0.5][rng.gen_range(0..3)];
    for u in 0..total {
        for v in 0..total {
            if u != v && rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    let mut outside: Vec<VertexId> = (n..total).collect();
    outside.shuffle(&mut rng);
    let mut sources: Vec<VertexId> = outside[..k].to_vec();
    let mut sinks: Vec<VertexId> = outside[k..2 * k].to_vec();
    if rng.gen_bool(0.2) {
        sinks[0] = sources[0];
    }
    if rng.gen_bool(0.2) {
        sources[k - 1] = *bags[0].iter().next().unwrap();
    }
    let g = Digraph::new(total, edges).unwrap();
    let inst = LinkageInstance::new(g, sources, sinks).unwrap();
    (inst, Bramble::new(bags))
}

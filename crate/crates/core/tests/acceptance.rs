//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use ddpp_core::bramble::{gen_grid, grid_bramble, validate_bramble};
use ddpp_core::flow::max_disjoint_paths;
use ddpp_core::gadget::{
    build_gadget, decode_solution, encode_assignment, figure_one_formula, CnfFormula, Epsilon,
    Literal,
};
use ddpp_core::linker::{
    check_inside, check_link_up, cut_sequence, find_index_set, one_side_certificate,
    solve_with_bramble, structural_subproblem, subsets_pair, CutOutcome, CutSequenceState,
    LinkerConfig, Node,
};
use ddpp_core::oracle::{
    bramble_order, brute_force_linkage, enumerate_min_proper_separation,
    enumerate_min_st_separation, LinkageVerdict,
};
use ddpp_core::weave::{ramsey_monochromatic, Color};
use ddpp_core::{reduce_half_to_integral, verify_solution, Bramble, Verdict, VertexId};
use rand::Rng;

/// Largest contracted graph on which cuts are checked against enumeration.
const EXHAUSTIVE_LIMIT: usize = 12;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grids() -> Check {
    for r in 2..=10 {
        let (g, labels) = gen_grid(r).map_err(|e| e.to_string())?;
        ensure(g.vertex_count() == 2 * r * r, || format!("r={r}: {} vertices", g.vertex_count()))?;
        ensure(g.edge_count() == 4 * r * r - 2 * r, || format!("r={r}: {} edges", g.edge_count()))?;
        let b = grid_bramble(&labels);
        validate_bramble(&g, &b).map_err(|v| format!("r={r}: {v}"))?;
        ensure(b.len() == r && b.depth() == 2, || format!("r={r}: size {} depth {}", b.len(), b.depth()))?;
        if r <= 6 {
            let order = bramble_order(&b, r).map_err(|e| e.to_string())?;
            ensure(order >= r.div_ceil(2), || format!("r={r}: order {order}"))?;
        }
    }
    Ok("r = 2..10".into())
}

fn menger() -> Check {
    for seed in 0..200u64 {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..=8);
        let p = rng.gen_range(0.1..0.6);
        let g = common::random_digraph(&mut rng, n, p);
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> BTreeSet<VertexId> {
            (0..n).filter(|_| rng.gen_bool(0.3)).collect()
        };
        let (s, t) = (pick(&mut rng), pick(&mut rng));
        let (paths, _) = max_disjoint_paths(&g, &s, &t);
        let cut = enumerate_min_st_separation(&g, &s, &t).map_err(|e| e.to_string())?;
        ensure(paths.paths.len() == cut.order, || {
            format!("seed {seed}: {} paths vs cut {}", paths.paths.len(), cut.order)
        })?;
    }
    Ok("200 digraphs".into())
}

fn doubling() -> Check {
    let (mut feasible, mut half_only) = (0, 0);
    for seed in 0..100u64 {
        let mut rng = common::rng(1000 + seed);
        let n = rng.gen_range(2..=6);
        let p = rng.gen_range(0.2..0.7);
        let g = common::random_digraph(&mut rng, n, p);
        let k = rng.gen_range(1..=2.min(n / 2).max(1));
        let mut order: Vec<VertexId> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let (sources, sinks) = (order[..k].to_vec(), order[k..2 * k].to_vec());
        let inst = ddpp_core::LinkageInstance::new(g, sources, sinks).map_err(|e| e.to_string())?;
        let half = brute_force_linkage(&inst, 2, u64::MAX).map_err(|e| e.to_string())?;
        let (doubled, _) = reduce_half_to_integral(&inst).map_err(|e| e.to_string())?;
        let whole = brute_force_linkage(&doubled, 1, u64::MAX).map_err(|e| e.to_string())?;
        ensure(half.is_feasible() == whole.is_feasible(), || format!("seed {seed}: verdicts differ"))?;
        if half.is_feasible() {
            feasible += 1;
            if !brute_force_linkage(&inst, 1, u64::MAX).map_err(|e| e.to_string())?.is_feasible() {
                half_only += 1;
            }
        }
    }
    Ok(format!("100 instances, {feasible} feasible, {half_only} only half-integrally"))
}

/// Every formula over `n` variables with `m` clauses of one to three
/// distinct literals, clause lists in nondecreasing order.
fn small_formulas(n: usize, m: usize) -> Vec<CnfFormula> {
    let lits: Vec<Literal> = (1..=n as i64)
        .flat_map(|v| [v, -v])
        .map(|x| Literal::from_dimacs(x).unwrap())
        .collect();
    let clauses: Vec<Vec<Literal>> = (1u32..1 << lits.len())
        .filter(|mask| (1..=3).contains(&mask.count_ones()))
        .map(|mask| (0..lits.len()).filter(|b| mask >> b & 1 == 1).map(|b| lits[b]).collect())
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        out.push(CnfFormula::new(n, idx.iter().map(|&i| clauses[i].clone()).collect()).unwrap());
        let Some(pos) = (0..m).rev().find(|&p| idx[p] + 1 < clauses.len()) else {
            break;
        };
        idx[pos] += 1;
        for p in pos + 1..m {
            idx[p] = idx[pos];
        }
    }
    out
}

fn hardness() -> Check {
    let half = Epsilon::new(1, 2).unwrap();
    let f = figure_one_formula();
    let (inst, layout) = build_gadget(&f, half).map_err(|e| e.to_string())?;
    ensure(layout.core_count() == 39, || format!("|V1| = {}", layout.core_count()))?;
    ensure(layout.hubs == 10, || format!("M = {}", layout.hubs))?;
    let conn = inst.graph.strong_connectivity().map_err(|e| e.to_string())?;
    ensure(conn >= 10, || format!("connectivity {conn}"))?;
    let sats = f.satisfying_assignments();
    for a in &sats {
        let sol = encode_assignment(&layout, a).map_err(|e| e.to_string())?;
        verify_solution(&inst, &sol, 2).map_err(|v| format!("figure 1 {a:?}: {v}"))?;
    }
    let mut count = 0;
    for n in 1..=2 {
        for m in 1..=2 {
            for f in small_formulas(n, m) {
                count += 1;
                let (inst, layout) = build_gadget(&f, half).map_err(|e| e.to_string())?;
                let verdict = brute_force_linkage(&inst, 2, 100_000_000).map_err(|e| e.to_string())?;
                if verdict == LinkageVerdict::BudgetExceeded {
                    return Err(format!("budget exceeded on {f:?}"));
                }
                ensure(verdict.is_feasible() == f.is_satisfiable(), || format!("mismatch on {f:?}"))?;
                if let LinkageVerdict::Feasible(sol) = &verdict {
                    let a = decode_solution(&layout, &inst, sol).map_err(|e| e.to_string())?;
                    ensure(f.is_satisfied_by(&a), || format!("decoded {a:?} fails {f:?}"))?;
                }
                for a in f.satisfying_assignments() {
                    let sol = encode_assignment(&layout, &a).map_err(|e| e.to_string())?;
                    let back = decode_solution(&layout, &inst, &sol).map_err(|e| e.to_string())?;
                    ensure(back == a, || format!("decode(encode({a:?})) = {back:?}"))?;
                }
            }
        }
    }
    Ok(format!(
        "figure 1: |V1| = 39, M = 10, connectivity {conn}, {} assignments; {count} small formulas",
        sats.len()
    ))
}

fn combinatorics() -> Check {
    let mut rng = common::rng(77);
    for trial in 0..1000 {
        let k = rng.gen_range(1..=6);
        let universe: BTreeSet<usize> = (0..k).collect();
        let subsets: Vec<BTreeSet<usize>> = (0..=k)
            .map(|_| {
                let mut s: BTreeSet<usize> = (0..k).filter(|_| rng.gen_bool(0.6)).collect();
                if s.len() == k {
                    s.remove(&rng.gen_range(0..k));
                }
                s
            })
            .collect();
        let (i, j) = subsets_pair(&universe, &subsets).map_err(|e| format!("trial {trial}: {e}"))?;
        let union: BTreeSet<usize> = subsets[i].union(&subsets[j]).copied().collect();
        ensure(i != j && union != universe, || format!("trial {trial}: bad pair ({i}, {j})"))?;
    }
    for trial in 0..500 {
        let m = 64;
        let mut colors = vec![vec![Color::Red; m]; m];
        for a in 0..m {
            for b in a + 1..m {
                let c = if rng.gen_bool(0.5) { Color::Red } else { Color::Blue };
                colors[a][b] = c;
                colors[b][a] = c;
            }
        }
        let (color, set) = ramsey_monochromatic(m, 3, 3, |a, b| colors[a][b]).map_err(|e| e.to_string())?;
        ensure(set.len() == 3, || format!("trial {trial}: set of size {}", set.len()))?;
        for (x, &a) in set.iter().enumerate() {
            for &b in &set[x + 1..] {
                ensure(a != b && colors[a][b] == color, || format!("trial {trial}: not monochromatic"))?;
            }
        }
    }
    Ok("1000 subset instances, 500 colorings".into())
}

/// Linker traces of suite 6, gathered for criterion 7.
struct Traces {
    states: Vec<(CutSequenceState, usize)>,
}

fn linker_soundness(traces: &mut Traces) -> Check {
    let cfg = LinkerConfig::relaxed();
    let (mut solved, mut failed) = (0, 0);
    for seed in 0..50u64 {
        let (inst, bramble) = common::planted(seed);
        let g = &inst.graph;
        validate_bramble(g, &bramble).map_err(|v| format!("seed {seed}: planted bramble {v}"))?;
        ensure(bramble.depth() <= 2, || format!("seed {seed}: depth {}", bramble.depth()))?;
        let (sub, _, pruned, _) = structural_subproblem(&inst, &bramble).map_err(|e| e.to_string())?;
        let k = sub.k();
        let (a_s, a_t) = (cfg.alpha_s(k), cfg.alpha_t(k));
        let sources: BTreeSet<VertexId> = sub.sources.iter().copied().collect();
        let sinks: BTreeSet<VertexId> = sub.sinks.iter().copied().collect();
        if k > 0 && !pruned.is_empty() {
            let s_trace = cut_sequence(g, &pruned, &sources, a_s, 2 * k * a_s).map_err(|e| e.to_string())?;
            if let CutOutcome::Connected { sub: sub_s, .. } = &s_trace.outcome {
                let inner = pruned.select(sub_s);
                let t_trace = cut_sequence(&g.reversed(), &inner, &sinks, a_t, 2 * k * a_t)
                    .map_err(|e| e.to_string())?;
                traces.states.push((t_trace, k));
            }
            traces.states.push((s_trace, k));
        }
        match solve_with_bramble(&inst, &bramble, &cfg).map_err(|e| format!("seed {seed}: {e}"))? {
            Verdict::Failed(_) => failed += 1,
            Verdict::Done(sol) => {
                solved += 1;
                verify_solution(&inst, &sol.solution, 2).map_err(|v| format!("seed {seed}: {v}"))?;
                let (Some(lu), Some(inside)) = (&sol.link_up, &sol.inside) else {
                    ensure(k == 0, || format!("seed {seed}: certificates missing"))?;
                    continue;
                };
                let ok_s = one_side_certificate(g, &pruned, &lu.sub_s, &sources, a_s).map_err(|e| e.to_string())?;
                let local_t: Vec<usize> =
                    lu.sub_t.iter().map(|b| lu.sub_s.iter().position(|x| x == b).unwrap()).collect();
                let inner = pruned.select(&lu.sub_s);
                let ok_t =
                    one_side_certificate(&g.reversed(), &inner, &local_t, &sinks, a_t).map_err(|e| e.to_string())?;
                ensure(ok_s && ok_t, || format!("seed {seed}: connectivity certificate fails"))?;
                check_link_up(g, &pruned, &sub, lu).map_err(|v| format!("seed {seed}: {v}"))?;
                let chosen: Vec<usize> = lu.bags_s.iter().chain(&lu.bags_t).copied().collect();
                ensure(check_inside(&pruned.select(&chosen), inside), || {
                    format!("seed {seed}: inside path leaves its bags")
                })?;
            }
        }
    }
    ensure(solved > 0, || "no instance was solved".into())?;
    Ok(format!("50 instances, {solved} solved and re-certified, {failed} failure verdicts"))
}

fn bag_vertices(bramble: &Bramble, bags: &[usize]) -> BTreeSet<VertexId> {
    bags.iter().flat_map(|&b| bramble.bags[b].iter().copied()).collect()
}

fn cut_invariants(traces: &Traces) -> Check {
    let (mut cuts, mut enumerated, mut index_sets) = (0, 0, 0);
    for (t, (state, k)) in traces.states.iter().enumerate() {
        let bramble = &state.views[0].bramble;
        for (i, rec) in state.records.iter().enumerate() {
            cuts += 1;
            let before = &state.views[i];
            let after = &state.views[i + 1];
            let cut = rec.cut.in_view(before).ok_or(format!("trace {t} cut {}: unknown node", i + 1))?;
            let s_ids = before.free_ids(&state.sources).map_err(|e| e.to_string())?;
            let k_ids = before.clique();
            ensure(cut.is_valid(&before.graph) && cut.properly_separates(&s_ids, &k_ids), || {
                format!("trace {t} cut {}: not a proper separation", i + 1)
            })?;
            let lifted = rec.lifted.in_view(after).ok_or(format!("trace {t} lift {}: unknown node", i + 1))?;
            ensure(lifted.is_valid(&after.graph), || format!("trace {t} lift {}: invalid", i + 1))?;
            ensure(lifted.separator().iter().all(|&x| !after.is_clique(x)), || {
                format!("trace {t} lift {}: A ∩ B meets K", i + 1)
            })?;
            if before.graph.vertex_count() <= EXHAUSTIVE_LIMIT {
                enumerated += 1;
                let best = enumerate_min_proper_separation(&before.graph, &s_ids, &k_ids).map_err(|e| e.to_string())?;
                ensure(best.order == cut.order(), || {
                    format!("trace {t} cut {}: order {} but enumeration finds {}", i + 1, cut.order(), best.order)
                })?;
            }
        }
        if let CutOutcome::Connected { order, .. } = &state.outcome {
            let last = state.views.last().unwrap();
            if last.graph.vertex_count() <= EXHAUSTIVE_LIMIT {
                enumerated += 1;
                let s_ids = last.free_ids(&state.sources).map_err(|e| e.to_string())?;
                let best = enumerate_min_proper_separation(&last.graph, &s_ids, &last.clique()).map_err(|e| e.to_string())?;
                ensure(best.order == order.unwrap_or(usize::MAX), || {
                    format!("trace {t}: stopping order {order:?} but enumeration finds {}", best.order)
                })?;
            }
        }
        if state.outcome == CutOutcome::CapReached {
            if let Ok(j) = find_index_set(state, *k) {
                index_sets += 1;
                ensure(j.len() == k + 1, || format!("trace {t}: index set {j:?}"))?;
                for (a, &i) in j.iter().enumerate() {
                    let removed = bag_vertices(bramble, &state.records[i - 1].removed);
                    for &l in &j[a + 1..] {
                        let hit = state.records[l - 1].cut.separator().into_iter().any(|n| match n {
                            Node::Vertex(v) => removed.contains(&v),
                            Node::Bag(_) => false,
                        });
                        ensure(!hit, || format!("trace {t}: cut {l} meets a bag removed at {i}"))?;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{} traces, {cuts} cuts, {enumerated} checked exhaustively, {index_sets} index sets",
        traces.states.len()
    ))
}

fn main() {
    let mut traces = Traces { states: Vec::new() };
    let criteria: Vec<(&str, Duration, Box<dyn FnOnce(&mut Traces) -> Check>)> = vec![
        ("grid constructions", Duration::from_secs(10), Box::new(|_| grids())),
        ("Menger duality", Duration::from_secs(60), Box::new(|_| menger())),
        ("doubling reduction", Duration::from_secs(300), Box::new(|_| doubling())),
        ("hardness reduction", Duration::from_secs(1800), Box::new(|_| hardness())),
        ("combinatorial lemmas", Duration::from_secs(30), Box::new(|_| combinatorics())),
        ("linker soundness", Duration::from_secs(600), Box::new(linker_soundness)),
        ("cut-sequence invariants", Duration::from_secs(600), Box::new(|t| cut_invariants(t))),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = run(&mut traces);
        let took = start.elapsed();
        let result = result.and_then(|msg| {
            if took <= limit {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {took:.1?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(msg) => println!("PASS {} {name}: {msg} ({took:.2?})", i + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL {} {name}: {msg} ({took:.2?})", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

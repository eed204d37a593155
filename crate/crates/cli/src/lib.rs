//! Command handlers behind the `ddpp` binary.
//!
//! Each handler returns a [`Report`]; the binary only prints it and exits.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use ddpp_core::bramble::{gen_grid, grid_bramble, validate_bramble, well_linked_on_path};
use ddpp_core::flow::is_well_linked;
use ddpp_core::gadget::{build_gadget, encode_assignment, parse_dimacs, ArityMode, Epsilon};
use ddpp_core::io::{
    grid_label_comments, role_comments, write_bramble, write_instance, write_solution,
};
use ddpp_core::linker::{bramble_size_needed, solve_with_bramble, LinkerConfig};
use ddpp_core::oracle::{bramble_order, brute_force_linkage, DEFAULT_BUDGET};
use ddpp_core::weave::{
    bramble_from_well_linked, grid_side, intersect_clique_size, linkage_threshold,
    uncross_threshold, well_linked_requirement, WeaveConfig,
};
use ddpp_core::{
    reduce_half_to_integral, verify_solution, Bramble, Digraph, Error, LinkageInstance,
    LinkageVerdict, PathSystem, Verdict, VertexId,
};
use serde_json::json;
use thiserror::Error;

/// Instances up to this many vertices fall back to the oracle in auto mode.
pub const AUTO_ORACLE_CAP: usize = 40;

/// Largest number of candidate subsets the well-linked search may scan.
pub const WELL_LINKED_SEARCH_CAP: u128 = 200_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(Error::Parse { .. } | Error::InvalidInput(_)) => 2,
            CliError::Core(Error::SizeLimit(_)) => 3,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// What a command prints and how it exits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Report {
    fn ok(stdout: String) -> Self {
        Report {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }
}

pub fn read_file(path: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

pub fn write_file(path: &str, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

/// `p/q` with `0 < p < q`.
pub fn parse_epsilon(text: &str) -> CliResult<Epsilon> {
    let bad = || CliError::Usage(format!("epsilon must look like p/q, got `{text}`"));
    let (p, q) = text.split_once('/').ok_or_else(bad)?;
    let p: u64 = p.trim().parse().map_err(|_| bad())?;
    let q: u64 = q.trim().parse().map_err(|_| bad())?;
    Ok(Epsilon::new(p, q)?)
}

/// A string of `0`/`1`, one per variable.
pub fn parse_assignment(text: &str) -> CliResult<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::Usage(format!("assignment must be a 0/1 string, got `{text}`"))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Oracle,
    Structural,
    Auto,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub mode: Mode,
    pub congestion: usize,
    pub relaxed: bool,
    pub budget: u64,
    pub seed: u64,
    pub bramble: Option<Bramble>,
    /// Bramble size the structural pipeline looks for.
    pub bramble_size: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: Mode::Auto,
            congestion: 2,
            relaxed: false,
            budget: DEFAULT_BUDGET,
            seed: 0,
            bramble: None,
            bramble_size: None,
        }
    }
}

/// Outcome of a solve, with the pipeline stage that decided it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Solved { stage: String, solution: PathSystem },
    Infeasible { stage: String },
    Failed { stage: String, reason: String },
    Limit { stage: String, reason: String },
}

impl SolveOutcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            SolveOutcome::Solved { .. } => 0,
            SolveOutcome::Infeasible { .. } | SolveOutcome::Failed { .. } => 1,
            SolveOutcome::Limit { .. } => 3,
        }
    }

    fn stage(&self) -> &str {
        match self {
            SolveOutcome::Solved { stage, .. }
            | SolveOutcome::Infeasible { stage }
            | SolveOutcome::Failed { stage, .. }
            | SolveOutcome::Limit { stage, .. } => stage,
        }
    }
}

fn failed(stage: &str, reason: impl Into<String>) -> SolveOutcome {
    SolveOutcome::Failed {
        stage: stage.into(),
        reason: reason.into(),
    }
}

/// Maps a library error at `stage` to an outcome; malformed input and
/// broken invariants stay errors.
fn at_stage(stage: &str, e: Error) -> CliResult<SolveOutcome> {
    match e {
        Error::SizeLimit(reason) => Ok(SolveOutcome::Limit {
            stage: stage.into(),
            reason,
        }),
        Error::Precondition(reason) => Ok(failed(stage, reason)),
        other => Err(other.into()),
    }
}

/// Longest path found by greedy extension at both ends, trying every start
/// vertex beginning at `seed mod n`. Ties keep the earlier start.
pub fn greedy_long_path(g: &Digraph, seed: u64) -> Vec<VertexId> {
    let n = g.vertex_count();
    let mut best: Vec<VertexId> = Vec::new();
    for offset in 0..n {
        let start = (seed as usize % n.max(1) + offset) % n;
        let mut on = vec![false; n];
        on[start] = true;
        let mut path = std::collections::VecDeque::from([start]);
        loop {
            let tail = *path.back().unwrap();
            if let Some(&w) = g.out_neighbors(tail).iter().find(|&&w| !on[w]) {
                on[w] = true;
                path.push_back(w);
                continue;
            }
            let head = *path.front().unwrap();
            if let Some(&w) = g.in_neighbors(head).iter().find(|&&w| !on[w]) {
                on[w] = true;
                path.push_front(w);
                continue;
            }
            break;
        }
        if path.len() > best.len() {
            best = path.into_iter().collect();
        }
    }
    best
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Long path, well-linked set, bramble, then the bramble-based solver.
/// A bramble given in `opts` skips the first three stages.
pub fn solve_structural(inst: &LinkageInstance, opts: &SolveOptions) -> CliResult<SolveOutcome> {
    if opts.congestion != 2 {
        return Ok(failed("structural", "the structural solver only produces congestion-two solutions"));
    }
    let g = &inst.graph;
    let bramble = match &opts.bramble {
        Some(b) => b.clone(),
        None => {
            let path = greedy_long_path(g, opts.seed);
            let t = opts.bramble_size.unwrap_or(6 * inst.k()).max(1);
            let side = t.max(2);
            let target = side * side;
            if target > path.len() {
                return Ok(failed(
                    "long-path",
                    format!("path has {} vertices, {target} needed", path.len()),
                ));
            }
            if !opts.relaxed {
                return Ok(SolveOutcome::Limit {
                    stage: "well-linked".into(),
                    reason: format!("a well-linked set of size {} is required", well_linked_requirement(t)),
                });
            }
            if binomial(path.len(), target) > WELL_LINKED_SEARCH_CAP {
                return Ok(SolveOutcome::Limit {
                    stage: "well-linked".into(),
                    reason: format!("C({}, {target}) candidate sets exceed the search cap", path.len()),
                });
            }
            let x = match well_linked_on_path(g, &path, target, target) {
                Ok(Some(x)) => x,
                Ok(None) => return Ok(failed("well-linked", format!("no well-linked {target}-set on the path"))),
                Err(e) => return at_stage("well-linked", e),
            };
            let cfg = WeaveConfig {
                relaxed: opts.relaxed,
                ..WeaveConfig::default()
            };
            match bramble_from_well_linked(g, &path, &x, t, &cfg) {
                Ok(Verdict::Done(b)) => b,
                Ok(Verdict::Failed(why)) => return Ok(failed("bramble", why)),
                Err(e) => return at_stage("bramble", e),
            }
        }
    };
    let cfg = LinkerConfig {
        relaxed: opts.relaxed,
        ..LinkerConfig::default()
    };
    match solve_with_bramble(inst, &bramble, &cfg) {
        Ok(Verdict::Done(sol)) => Ok(SolveOutcome::Solved {
            stage: "structural".into(),
            solution: sol.solution,
        }),
        Ok(Verdict::Failed(why)) => Ok(failed("link", why)),
        Err(e) => at_stage("link", e),
    }
}

pub fn solve_oracle(inst: &LinkageInstance, opts: &SolveOptions) -> CliResult<SolveOutcome> {
    Ok(match brute_force_linkage(inst, opts.congestion, opts.budget)? {
        LinkageVerdict::Feasible(solution) => SolveOutcome::Solved {
            stage: "oracle".into(),
            solution,
        },
        LinkageVerdict::Infeasible => SolveOutcome::Infeasible {
            stage: "oracle".into(),
        },
        LinkageVerdict::BudgetExceeded => SolveOutcome::Limit {
            stage: "oracle".into(),
            reason: format!("search budget of {} nodes exhausted", opts.budget),
        },
    })
}

pub fn solve(inst: &LinkageInstance, opts: &SolveOptions) -> CliResult<SolveOutcome> {
    let outcome = match opts.mode {
        Mode::Oracle => solve_oracle(inst, opts)?,
        Mode::Structural => solve_structural(inst, opts)?,
        Mode::Auto => {
            let first = if opts.congestion == 2 {
                Some(solve_structural(inst, opts)?)
            } else {
                None
            };
            match first {
                Some(done @ SolveOutcome::Solved { .. }) => done,
                Some(other) if inst.graph.vertex_count() > AUTO_ORACLE_CAP => other,
                _ => solve_oracle(inst, opts)?,
            }
        }
    };
    if let SolveOutcome::Solved { solution, .. } = &outcome {
        if let Err(v) = verify_solution(inst, solution, opts.congestion) {
            return Err(Error::Invariant(format!("unverified solution: {v}")).into());
        }
    }
    Ok(outcome)
}

/// Renders an outcome as text or JSON.
pub fn render_outcome(outcome: &SolveOutcome, as_json: bool) -> Report {
    let code = outcome.exit_code();
    if as_json {
        let mut value = json!({ "stage": outcome.stage() });
        match outcome {
            SolveOutcome::Solved { solution, .. } => {
                value["verdict"] = json!("solved");
                value["paths"] = json!(solution.paths);
            }
            SolveOutcome::Infeasible { .. } => value["verdict"] = json!("infeasible"),
            SolveOutcome::Failed { reason, .. } => {
                value["verdict"] = json!("failed");
                value["reason"] = json!(reason);
            }
            SolveOutcome::Limit { reason, .. } => {
                value["verdict"] = json!("limit");
                value["reason"] = json!(reason);
            }
        }
        return Report {
            code,
            stdout: format!("{value}\n"),
            stderr: String::new(),
        };
    }
    let (stdout, stderr) = match outcome {
        SolveOutcome::Solved { stage, solution } => (write_solution(solution), format!("solved by {stage}\n")),
        SolveOutcome::Infeasible { stage } => (format!("infeasible ({stage})\n"), String::new()),
        SolveOutcome::Failed { stage, reason } => (format!("failed at {stage}: {reason}\n"), String::new()),
        SolveOutcome::Limit { stage, reason } => (format!("limit at {stage}: {reason}\n"), String::new()),
    };
    Report { code, stdout, stderr }
}

/// Checks a solution; the report names the first violation.
pub fn cmd_verify(inst: &LinkageInstance, sol: &PathSystem, congestion: usize, as_json: bool) -> Report {
    let result = verify_solution(inst, sol, congestion);
    let (code, text) = match &result {
        Ok(()) => (0, format!("ok: {} paths, congestion {congestion}", sol.paths.len())),
        Err(v) => (1, format!("fail: {v}")),
    };
    let stdout = if as_json {
        let mut value = json!({ "verdict": if code == 0 { "verified" } else { "failed" }, "stage": "verify" });
        if let Err(v) = result {
            value["reason"] = json!(v.to_string());
        }
        format!("{value}\n")
    } else {
        format!("{text}\n")
    };
    Report {
        code,
        stdout,
        stderr: String::new(),
    }
}

/// Strict thresholds for `k` pairs and bramble size `t`.
pub fn thresholds_report(k: usize, t: usize) -> String {
    let k3 = (k as u128).pow(3);
    let mut out = String::new();
    let _ = writeln!(out, "thresholds for k = {k}, t = {t}");
    let _ = writeln!(out, "strong connectivity (36k^3 + 2k): {}", 36 * k3 + 2 * k as u128);
    let _ = writeln!(out, "bramble size t(k): {}", bramble_size_needed(k));
    let _ = writeln!(out, "paths for uncrossing (10k * 2^(2(t+k))): {}", uncross_threshold(k, t));
    let _ = writeln!(out, "intersecting family (10t * 2^(4t)): {}", intersect_clique_size(t));
    let _ = writeln!(out, "linkage size (2^k * 2^T): {}", linkage_threshold(k, t));
    let _ = writeln!(out, "grid side (2^(2t)): {}", grid_side(t));
    let _ = writeln!(out, "well-linked set: {}", well_linked_requirement(t));
    out
}

/// Largest cover size `analyze` searches when computing bramble order.
pub const ORDER_CAP: usize = 8;

pub fn cmd_analyze(
    inst: Option<&LinkageInstance>,
    bramble: Option<&Bramble>,
    set: Option<&BTreeSet<VertexId>>,
    thresholds: Option<(usize, usize)>,
) -> CliResult<Report> {
    let mut out = String::new();
    if let Some(inst) = inst {
        let g = &inst.graph;
        let _ = writeln!(out, "vertices: {}, edges: {}, pairs: {}", g.vertex_count(), g.edge_count(), inst.k());
        let _ = writeln!(out, "strong connectivity: {}", g.strong_connectivity()?);
        if let Some(b) = bramble {
            match validate_bramble(g, b) {
                Ok(()) => {
                    let order = bramble_order(b, ORDER_CAP)?;
                    let shown = if order > ORDER_CAP {
                        format!("> {ORDER_CAP}")
                    } else {
                        order.to_string()
                    };
                    let _ = writeln!(
                        out,
                        "bramble: valid, size {}, depth {}, order {shown}",
                        b.len(),
                        b.depth()
                    );
                }
                Err(v) => {
                    let _ = writeln!(out, "bramble: invalid ({v})");
                }
            }
        }
        if let Some(x) = set {
            let linked = is_well_linked(g, x, x.len().max(1))?;
            let _ = writeln!(out, "well-linked: {}", if linked { "yes" } else { "no" });
        }
    } else if bramble.is_some() || set.is_some() {
        return Err(CliError::Usage("a bramble or vertex set needs an instance".into()));
    }
    if let Some((k, t)) = thresholds {
        out.push_str(&thresholds_report(k, t));
    }
    if out.is_empty() {
        return Err(CliError::Usage("nothing to analyze".into()));
    }
    Ok(Report::ok(out))
}

/// `J_r` with label comments, and its bramble sidecar.
pub fn cmd_gen_grid(r: usize) -> CliResult<(String, String)> {
    let (g, labels) = gen_grid(r)?;
    let inst = LinkageInstance::new(g, vec![], vec![])?;
    Ok((
        write_instance(&inst, &grid_label_comments(&labels)),
        write_bramble(&grid_bramble(&labels)),
    ))
}

pub fn cmd_gen_gadget(cnf: &str, epsilon: Epsilon, padded: bool) -> CliResult<String> {
    let mode = if padded { ArityMode::Padded } else { ArityMode::Exact3 };
    let f = parse_dimacs(cnf, mode)?;
    let (inst, layout) = build_gadget(&f, epsilon)?;
    let mut comments = vec![format!(
        "gadget: {} variables, {} clauses, k = {}, M = {}",
        f.variable_count,
        f.clauses.len(),
        layout.k,
        layout.hubs
    )];
    comments.extend(role_comments(&layout.roles()));
    Ok(write_instance(&inst, &comments))
}

pub fn cmd_encode(cnf: &str, epsilon: Epsilon, padded: bool, assignment: &[bool]) -> CliResult<String> {
    let mode = if padded { ArityMode::Padded } else { ArityMode::Exact3 };
    let f = parse_dimacs(cnf, mode)?;
    if assignment.len() != f.variable_count {
        return Err(CliError::Usage(format!(
            "assignment has {} values for {} variables",
            assignment.len(),
            f.variable_count
        )));
    }
    if !f.is_satisfied_by(assignment) {
        return Err(Error::Precondition("assignment does not satisfy the formula".into()).into());
    }
    let (_, layout) = build_gadget(&f, epsilon)?;
    Ok(write_solution(&encode_assignment(&layout, assignment)?))
}

/// The doubled instance, with `twin v -> v'` comments.
pub fn cmd_reduce_double(inst: &LinkageInstance) -> CliResult<String> {
    let (reduced, map) = reduce_half_to_integral(inst)?;
    let comments: Vec<String> = inst
        .graph
        .vertices()
        .filter_map(|v| map.double_of(v).map(|d| format!("twin {v} -> {d}")))
        .collect();
    Ok(write_instance(&reduced, &comments))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_path_on_cycle() {
        let g = Digraph::new(5, (0..5).map(|i| (i, (i + 1) % 5))).unwrap();
        let p = greedy_long_path(&g, 2);
        assert_eq!(p.len(), 5);
        assert_eq!(p[0], 2);
        assert!(g.is_path(&p));
    }

    #[test]
    fn epsilon_and_assignment() {
        assert_eq!(parse_epsilon("1/2").unwrap(), Epsilon::new(1, 2).unwrap());
        assert!(parse_epsilon("1:2").is_err());
        assert_eq!(parse_epsilon("2/2").unwrap_err().exit_code(), 2);
        assert_eq!(parse_assignment("101").unwrap(), vec![true, false, true]);
        assert!(parse_assignment("12").is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }
}

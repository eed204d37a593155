//! The 3-SAT hardness gadget `G(F)`: formulas, DIMACS input, the gadget
//! graph with its terminal tuples, and the assignment encoder and decoder.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, precondition, Error, Result};
use crate::graph::{verify_solution, Digraph, LinkageInstance, PathSystem, VertexId};

/// A literal over variables numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn from_dimacs(value: i64) -> Option<Self> {
        (value != 0).then(|| Literal {
            var: value.unsigned_abs() as usize,
            positive: value > 0,
        })
    }

    pub fn holds(&self, assignment: &[bool]) -> bool {
        assignment[self.var - 1] == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var)
        } else {
            write!(f, "!x{}", self.var)
        }
    }
}

/// CNF formula with clauses of one to three literals. A clause never
/// repeats a literal; it may contain a literal and its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub variable_count: usize,
    pub clauses: Vec<Vec<Literal>>,
}

impl CnfFormula {
    pub fn new(variable_count: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        for (j, clause) in clauses.iter().enumerate() {
            if clause.is_empty() || clause.len() > 3 {
                return invalid(format!("clause {} has {} literals", j + 1, clause.len()));
            }
            let distinct: BTreeSet<_> = clause.iter().collect();
            if distinct.len() != clause.len() {
                return invalid(format!("clause {} repeats a literal", j + 1));
            }
            if let Some(l) = clause.iter().find(|l| l.var == 0 || l.var > variable_count) {
                return invalid(format!("clause {} uses unknown variable {}", j + 1, l.var));
            }
        }
        Ok(CnfFormula {
            variable_count,
            clauses,
        })
    }

    /// Index of the first clause falsified by `assignment`.
    pub fn falsified_clause(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| !c.iter().any(|l| l.holds(assignment)))
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.variable_count && self.falsified_clause(assignment).is_none()
    }

    /// All satisfying assignments, in binary counting order with `x1` as the
    /// most significant bit. Meant for small `n`.
    pub fn satisfying_assignments(&self) -> Vec<Vec<bool>> {
        let n = self.variable_count;
        (0..1u64 << n)
            .map(|bits| (0..n).map(|i| bits >> (n - 1 - i) & 1 == 1).collect::<Vec<bool>>())
            .filter(|a| self.is_satisfied_by(a))
            .collect()
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.satisfying_assignments().is_empty()
    }
}

/// How strictly [`parse_dimacs`] treats clause length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArityMode {
    /// Every clause has exactly three literals.
    #[default]
    Exact3,
    /// Clauses of one to three literals are accepted as they are.
    Padded,
}

/// Parses DIMACS CNF. `c` lines are comments and a `%` line ends the input.
pub fn parse_dimacs(text: &str, mode: ArityMode) -> Result<CnfFormula> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut header: Option<(usize, usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_line = 0;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(line_no, "second problem line".into()));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(err(line_no, "expected `p cnf <vars> <clauses>`".into()));
            }
            let n = parts[2]
                .parse()
                .map_err(|_| err(line_no, format!("bad variable count `{}`", parts[2])))?;
            let m = parts[3]
                .parse()
                .map_err(|_| err(line_no, format!("bad clause count `{}`", parts[3])))?;
            header = Some((n, m, line_no));
            continue;
        }
        let Some((n, _, _)) = header else {
            return Err(err(line_no, "clause before problem line".into()));
        };
        for token in line.split_whitespace() {
            let value: i64 = token
                .parse()
                .map_err(|_| err(line_no, format!("bad literal `{token}`")))?;
            if current.is_empty() {
                current_line = line_no;
            }
            match Literal::from_dimacs(value) {
                None => {
                    let clause = std::mem::take(&mut current);
                    check_clause(&clause, n, mode).map_err(|m| err(current_line, m))?;
                    clauses.push(clause);
                }
                Some(l) => current.push(l),
            }
        }
    }
    let Some((n, m, header_line)) = header else {
        return Err(err(last_line.max(1), "missing problem line".into()));
    };
    if !current.is_empty() {
        return Err(err(current_line, "clause not terminated by 0".into()));
    }
    if clauses.len() != m {
        return Err(err(
            header_line,
            format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    CnfFormula::new(n, clauses)
}

fn check_clause(clause: &[Literal], n: usize, mode: ArityMode) -> std::result::Result<(), String> {
    match mode {
        ArityMode::Exact3 if clause.len() != 3 => {
            return Err(format!("clause has {} literals, expected 3", clause.len()))
        }
        ArityMode::Padded if clause.is_empty() || clause.len() > 3 => {
            return Err(format!("clause has {} literals, expected 1 to 3", clause.len()))
        }
        _ => {}
    }
    if let Some(l) = clause.iter().find(|l| l.var > n) {
        return Err(format!("variable {} exceeds declared count {n}", l.var));
    }
    let distinct: BTreeSet<_> = clause.iter().collect();
    if distinct.len() != clause.len() {
        return Err("clause repeats a literal".into());
    }
    Ok(())
}

/// Rational `p/q` with `0 < p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Epsilon {
    pub num: u64,
    pub den: u64,
}

impl Epsilon {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num >= den {
            return invalid(format!("epsilon {num}/{den} must lie strictly between 0 and 1"));
        }
        Ok(Epsilon { num, den })
    }

    /// The even hub count `M`: `⌈ε/(1-ε)·k'⌉`, plus one if odd.
    pub fn hub_count(&self, k_prime: usize) -> Result<usize> {
        let top = (self.num as u128)
            .checked_mul(k_prime as u128)
            .ok_or_else(|| Error::SizeLimit("hub count overflows".into()))?;
        let bottom = (self.den - self.num) as u128;
        let m = top.div_ceil(bottom);
        let m = if m % 2 == 1 { m + 1 } else { m };
        usize::try_from(m)
            .ok()
            .filter(|&m| m <= 1 << 24)
            .ok_or_else(|| Error::SizeLimit(format!("hub count {m} too large")))
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidInput(format!("epsilon `{s}` is not of the form p/q")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidInput(format!("bad epsilon component `{t}`")))
        };
        Epsilon::new(parse(p)?, parse(q)?)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Named vertices of `G(F)`. Per-variable and per-clause vectors are indexed
/// from 0 for variable or clause 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetLayout {
    pub formula: CnfFormula,
    pub epsilon: Epsilon,
    pub k_prime: usize,
    /// `M`, the number of hub vertices.
    pub hubs: usize,
    pub k: usize,
    pub s: [VertexId; 3],
    pub t: [VertexId; 3],
    pub u: Vec<VertexId>,
    pub v: Vec<VertexId>,
    pub u_bar: Vec<VertexId>,
    pub v_bar: Vec<VertexId>,
    pub b: Vec<VertexId>,
    pub b_prime: Vec<VertexId>,
    pub c: Vec<VertexId>,
    pub c_prime: Vec<VertexId>,
    /// Occurrence vertex of a literal in a clause: `(clause index, literal)`.
    pub occurrence: BTreeMap<(usize, Literal), VertexId>,
    /// `P_i` from `u_i` to `v_i`.
    pub positive_paths: Vec<Vec<VertexId>>,
    /// `P̄_i` from `ū_i` to `v̄_i`.
    pub negative_paths: Vec<Vec<VertexId>>,
    pub w: Vec<VertexId>,
}

impl GadgetLayout {
    /// `|V₁|`, the vertices other than the hubs.
    pub fn core_count(&self) -> usize {
        self.w.first().copied().unwrap_or(0)
    }

    /// Role name of every vertex, in vertex order.
    pub fn roles(&self) -> Vec<(String, VertexId)> {
        let mut roles = Vec::new();
        for i in 0..3 {
            roles.push((format!("s{}", i + 1), self.s[i]));
            roles.push((format!("t{}", i + 1), self.t[i]));
        }
        for i in 0..self.u.len() {
            let x = i + 1;
            roles.push((format!("u{x}"), self.u[i]));
            roles.push((format!("v{x}"), self.v[i]));
            roles.push((format!("ubar{x}"), self.u_bar[i]));
            roles.push((format!("vbar{x}"), self.v_bar[i]));
            roles.push((format!("b{x}"), self.b[i]));
            roles.push((format!("b{x}'"), self.b_prime[i]));
        }
        for j in 0..self.c.len() {
            roles.push((format!("c{}", j + 1), self.c[j]));
            roles.push((format!("c{}'", j + 1), self.c_prime[j]));
        }
        for (&(j, lit), &v) in &self.occurrence {
            let name = if lit.positive { "v" } else { "vbar" };
            roles.push((format!("{name}{},{}", lit.var, j + 1), v));
        }
        for (i, &w) in self.w.iter().enumerate() {
            roles.push((format!("w{}", i + 1), w));
        }
        roles.sort_by_key(|&(_, v)| v);
        roles
    }
}

/// Builds `G(F)` and its terminal tuples.
///
/// `k' = 3 + m + n` and `M` is the even hub count from `epsilon`. Vertices
/// are numbered `s1..s3, t1..t3`, then per variable `u_i`, the positive
/// occurrences, `v_i`, `ū_i`, the negative occurrences, `v̄_i`, `b_i`,
/// `b_i'`, then `c_j, c_j'` per clause, then the hubs.
pub fn build_gadget(f: &CnfFormula, epsilon: Epsilon) -> Result<(LinkageInstance, GadgetLayout)> {
    let n = f.variable_count;
    let m = f.clauses.len();
    if n == 0 {
        return invalid("the gadget needs at least one variable");
    }
    let k_prime = 3 + m + n;
    let hubs = epsilon.hub_count(k_prime)?;
    let mut next = 0;
    let mut fresh = || {
        next += 1;
        next - 1
    };
    let s = [fresh(), fresh(), fresh()];
    let t = [fresh(), fresh(), fresh()];
    let mut layout_u = Vec::new();
    let mut layout_v = Vec::new();
    let mut u_bar = Vec::new();
    let mut v_bar = Vec::new();
    let mut b = Vec::new();
    let mut b_prime = Vec::new();
    let mut occurrence = BTreeMap::new();
    let mut positive_paths = Vec::new();
    let mut negative_paths = Vec::new();
    for var in 1..=n {
        for positive in [true, false] {
            let mut path = vec![fresh()];
            for (j, clause) in f.clauses.iter().enumerate() {
                let lit = Literal { var, positive };
                if clause.contains(&lit) {
                    let x = fresh();
                    occurrence.insert((j, lit), x);
                    path.push(x);
                }
            }
            path.push(fresh());
            if positive {
                layout_u.push(path[0]);
                layout_v.push(*path.last().expect("nonempty"));
                positive_paths.push(path);
            } else {
                u_bar.push(path[0]);
                v_bar.push(*path.last().expect("nonempty"));
                negative_paths.push(path);
            }
        }
        b.push(fresh());
        b_prime.push(fresh());
    }
    let mut c = Vec::new();
    let mut c_prime = Vec::new();
    for _ in 0..m {
        c.push(fresh());
        c_prime.push(fresh());
    }
    let core = next;
    let w: Vec<VertexId> = (core..core + hubs).collect();

    let mut edges = Vec::new();
    // E1: the variable paths
    for p in positive_paths.iter().chain(&negative_paths) {
        edges.extend(p.windows(2).map(|x| (x[0], x[1])));
    }
    // E2: chaining consecutive variables
    for i in 0..n.saturating_sub(1) {
        for from in [layout_v[i], v_bar[i]] {
            for to in [layout_u[i + 1], u_bar[i + 1]] {
                edges.push((from, to));
            }
        }
    }
    // E3: clause gadgets
    for (&(j, _), &x) in &occurrence {
        edges.push((c[j], x));
        edges.push((x, c_prime[j]));
    }
    // E4: the b_i detours
    for i in 0..n {
        for x in [layout_v[i], v_bar[i]] {
            edges.push((b[i], x));
            edges.push((x, b_prime[i]));
        }
    }
    // E5: entering and leaving the chain
    for i in 0..3 {
        edges.push((s[i], layout_u[0]));
        edges.push((s[i], u_bar[0]));
        edges.push((layout_v[n - 1], t[i]));
        edges.push((v_bar[n - 1], t[i]));
    }
    // E6: hubs joined both ways to V1 and to earlier hubs
    for (i, &wi) in w.iter().enumerate() {
        for x in (0..core).chain(w[..i].iter().copied()) {
            edges.push((wi, x));
            edges.push((x, wi));
        }
    }
    let graph = Digraph::new(core + hubs, edges)?;

    let half = hubs / 2;
    let mut sources: Vec<VertexId> = s.to_vec();
    let mut sinks: Vec<VertexId> = t.to_vec();
    sources.extend(&c);
    sinks.extend(&c_prime);
    sources.extend(&b);
    sinks.extend(&b_prime);
    sources.extend(&w);
    sinks.extend(&w[half..]);
    sinks.extend(&w[..half]);
    let inst = LinkageInstance::new(graph, sources, sinks)?;
    let layout = GadgetLayout {
        formula: f.clone(),
        epsilon,
        k_prime,
        hubs,
        k: k_prime + hubs,
        s,
        t,
        u: layout_u,
        v: layout_v,
        u_bar,
        v_bar,
        b,
        b_prime,
        c,
        c_prime,
        occurrence,
        positive_paths,
        negative_paths,
        w,
    };
    Ok((inst, layout))
}

/// The linkage a satisfying assignment induces, pairs in instance order.
pub fn encode_assignment(layout: &GadgetLayout, assignment: &[bool]) -> Result<PathSystem> {
    let f = &layout.formula;
    if assignment.len() != f.variable_count {
        return invalid(format!(
            "assignment has {} values for {} variables",
            assignment.len(),
            f.variable_count
        ));
    }
    if let Some(j) = f.falsified_clause(assignment) {
        return precondition(format!("assignment falsifies clause {}", j + 1));
    }
    let n = f.variable_count;
    let chain = |pick: &dyn Fn(usize) -> bool, start: VertexId, end: VertexId| {
        let mut p = vec![start];
        for i in 0..n {
            let var_path = if pick(i) {
                &layout.positive_paths[i]
            } else {
                &layout.negative_paths[i]
            };
            p.extend(var_path);
        }
        p.push(end);
        p
    };
    let mut paths = vec![
        chain(&|_| true, layout.s[0], layout.t[0]),
        chain(&|_| false, layout.s[1], layout.t[1]),
        chain(&|i| !assignment[i], layout.s[2], layout.t[2]),
    ];
    for (j, clause) in f.clauses.iter().enumerate() {
        let lit = clause
            .iter()
            .find(|l| l.holds(assignment))
            .expect("clause satisfied");
        paths.push(vec![layout.c[j], layout.occurrence[&(j, *lit)], layout.c_prime[j]]);
    }
    for i in 0..n {
        let middle = if assignment[i] {
            layout.v[i]
        } else {
            layout.v_bar[i]
        };
        paths.push(vec![layout.b[i], middle, layout.b_prime[i]]);
    }
    let half = layout.hubs / 2;
    for i in 0..layout.hubs {
        paths.push(vec![layout.w[i], layout.w[(i + half) % layout.hubs]]);
    }
    Ok(PathSystem::new(paths))
}

/// Reads an assignment off a half-integral solution: `x_i` is true exactly
/// when two of the three `s_j`–`t_j` paths run through `P̄_i`.
pub fn decode_solution(
    layout: &GadgetLayout,
    inst: &LinkageInstance,
    sol: &PathSystem,
) -> Result<Vec<bool>> {
    if let Err(v) = verify_solution(inst, sol, 2) {
        return Err(Error::Invariant(format!("solution does not verify: {v}")));
    }
    let assignment: Vec<bool> = (0..layout.formula.variable_count)
        .map(|i| {
            let through = sol.paths[..3]
                .iter()
                .filter(|p| p.contains(&layout.v_bar[i]))
                .count();
            through >= 2
        })
        .collect();
    if let Some(j) = layout.formula.falsified_clause(&assignment) {
        return Err(Error::Invariant(format!(
            "decoded assignment falsifies clause {}",
            j + 1
        )));
    }
    Ok(assignment)
}

/// `(x1 ∨ x2 ∨ x3) ∧ (x1 ∨ ¬x2 ∨ x3) ∧ (¬x1 ∨ ¬x2 ∨ ¬x3)`.
pub fn figure_one_formula() -> CnfFormula {
    let lit = |v: i64| Literal::from_dimacs(v).expect("nonzero");
    CnfFormula::new(
        3,
        vec![
            vec![lit(1), lit(2), lit(3)],
            vec![lit(1), lit(-2), lit(3)],
            vec![lit(-1), lit(-2), lit(-3)],
        ],
    )
    .expect("well formed")
}

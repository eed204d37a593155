//! Line-oriented text formats: instances, solutions and bramble sidecars.
//!
//! `#` starts a comment anywhere on a line. Vertex ids are 0-based, pair and
//! path numbers 1-based.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::bramble::{Bramble, GridLabels};
use crate::error::{Error, Result};
use crate::graph::{Digraph, LinkageInstance, PathSystem, VertexId};

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

/// Non-empty lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

fn number<T: std::str::FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T> {
    match token.map(str::parse) {
        Some(Ok(x)) => Ok(x),
        Some(Err(_)) => parse_err(line, format!("bad {what}")),
        None => parse_err(line, format!("missing {what}")),
    }
}

fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    header: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>().join(" ") == header => Ok(()),
        Some((n, l)) => parse_err(n, format!("expected header `{header}`, found `{l}`")),
        None => parse_err(0, format!("empty input, expected `{header}`")),
    }
}

fn no_trailing<'a>(line: usize, mut tokens: impl Iterator<Item = &'a str>) -> Result<()> {
    match tokens.next() {
        Some(t) => parse_err(line, format!("unexpected token `{t}`")),
        None => Ok(()),
    }
}

/// Parses the instance format.
pub fn parse_instance(text: &str) -> Result<LinkageInstance> {
    let mut lines = content_lines(text);
    expect_header(&mut lines, "ddpp 1")?;
    let mut n: Option<usize> = None;
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut k: Option<usize> = None;
    let mut pairs: Vec<Option<(VertexId, VertexId)>> = Vec::new();
    for (line, body) in lines {
        let mut tokens = body.split_whitespace();
        match tokens.next().unwrap() {
            "n" => {
                if n.is_some() {
                    return parse_err(line, "repeated `n`");
                }
                n = Some(number(line, tokens.next(), "vertex count")?);
            }
            "e" => {
                let Some(n) = n else {
                    return parse_err(line, "edge before `n`");
                };
                let u: VertexId = number(line, tokens.next(), "edge tail")?;
                let v: VertexId = number(line, tokens.next(), "edge head")?;
                if u >= n || v >= n {
                    return parse_err(line, format!("edge ({u},{v}) out of range"));
                }
                edges.push((u, v));
            }
            "k" => {
                if k.is_some() {
                    return parse_err(line, "repeated `k`");
                }
                let count: usize = number(line, tokens.next(), "pair count")?;
                k = Some(count);
                pairs = vec![None; count];
            }
            "p" => {
                let Some(k) = k else {
                    return parse_err(line, "pair before `k`");
                };
                let i: usize = number(line, tokens.next(), "pair index")?;
                let s: VertexId = number(line, tokens.next(), "source")?;
                let t: VertexId = number(line, tokens.next(), "sink")?;
                if i == 0 || i > k {
                    return parse_err(line, format!("pair index {i} outside 1..={k}"));
                }
                if pairs[i - 1].replace((s, t)).is_some() {
                    return parse_err(line, format!("pair {i} given twice"));
                }
            }
            other => return parse_err(line, format!("unknown directive `{other}`")),
        }
        no_trailing(line, tokens)?;
    }
    let n = n.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing `n`".into(),
    })?;
    if let Some(i) = pairs.iter().position(Option::is_none) {
        return parse_err(0, format!("pair {} missing", i + 1));
    }
    let (sources, sinks) = pairs.into_iter().map(Option::unwrap).unzip();
    let graph = Digraph::new(n, edges).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    LinkageInstance::new(graph, sources, sinks).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}

/// Writes an instance; `comments` go right after the header, each prefixed
/// with `# `.
pub fn write_instance(inst: &LinkageInstance, comments: &[String]) -> String {
    let mut out = String::from("ddpp 1\n");
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "n {}", inst.graph.vertex_count());
    for (u, v) in inst.graph.edges() {
        let _ = writeln!(out, "e {u} {v}");
    }
    let _ = writeln!(out, "k {}", inst.k());
    for (i, (s, t)) in inst.sources.iter().zip(&inst.sinks).enumerate() {
        let _ = writeln!(out, "p {} {s} {t}", i + 1);
    }
    out
}

/// Parses `<tag> <i>: v0 v1 ...` entries under `header` into a list indexed
/// by `i - 1`. Every index from 1 up to the largest must appear once.
fn parse_numbered(text: &str, header: &str, tag: &str) -> Result<Vec<Vec<VertexId>>> {
    let mut lines = content_lines(text);
    expect_header(&mut lines, header)?;
    let mut entries: Vec<Option<Vec<VertexId>>> = Vec::new();
    for (line, body) in lines {
        let Some((head, rest)) = body.split_once(':') else {
            return parse_err(line, format!("expected `{tag} <i>: ...`"));
        };
        let mut tokens = head.split_whitespace();
        match tokens.next() {
            Some(t) if t == tag => {}
            Some(other) => return parse_err(line, format!("unknown directive `{other}`")),
            None => return parse_err(line, "missing directive"),
        }
        let i: usize = number(line, tokens.next(), "index")?;
        no_trailing(line, tokens)?;
        if i == 0 {
            return parse_err(line, "indices start at 1");
        }
        let vertices = rest
            .split_whitespace()
            .map(|t| t.parse().or_else(|_| parse_err(line, format!("bad vertex `{t}`"))))
            .collect::<Result<Vec<VertexId>>>()?;
        if entries.len() < i {
            entries.resize(i, None);
        }
        if entries[i - 1].replace(vertices).is_some() {
            return parse_err(line, format!("{tag} {i} given twice"));
        }
    }
    entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| e.ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("{tag} {} missing", i + 1),
        }))
        .collect()
}

fn write_numbered(header: &str, tag: &str, rows: impl Iterator<Item = Vec<VertexId>>) -> String {
    let mut out = format!("{header}\n");
    for (i, row) in rows.enumerate() {
        let list: Vec<String> = row.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{tag} {}: {}", i + 1, list.join(" "));
    }
    out
}

/// Parses the solution format. Paths are not checked against any graph.
pub fn parse_solution(text: &str) -> Result<PathSystem> {
    parse_numbered(text, "sol 1", "path").map(PathSystem::new)
}

pub fn write_solution(sol: &PathSystem) -> String {
    write_numbered("sol 1", "path", sol.paths.iter().cloned())
}

/// Parses a bramble sidecar.
pub fn parse_bramble(text: &str) -> Result<Bramble> {
    let bags = parse_numbered(text, "bramble 1", "bag")?;
    Ok(Bramble::new(
        bags.into_iter().map(|b| b.into_iter().collect::<BTreeSet<_>>()).collect(),
    ))
}

pub fn write_bramble(b: &Bramble) -> String {
    write_numbered("bramble 1", "bag", b.bags.iter().map(|bag| bag.iter().copied().collect()))
}

/// `label i j -> v` lines for a grid, `i` the position along the cycles and
/// `j` the cycle, both from 1.
pub fn grid_label_comments(labels: &GridLabels) -> Vec<String> {
    let mut out = Vec::new();
    for j in 1..=labels.r {
        for i in 1..=2 * labels.r {
            out.push(format!("label {i} {j} -> {}", labels.v(i, j)));
        }
    }
    out
}

/// `role name -> v` lines.
pub fn role_comments(roles: &[(String, VertexId)]) -> Vec<String> {
    roles.iter().map(|(name, v)| format!("role {name} -> {v}")).collect()
}

/// Reads back `# role name -> v` lines.
pub fn parse_role_comments(text: &str) -> Vec<(String, VertexId)> {
    text.lines()
        .filter_map(|l| {
            let rest = l.trim().strip_prefix('#')?.trim().strip_prefix("role ")?;
            let (name, v) = rest.split_once("->")?;
            Some((name.trim().to_string(), v.trim().parse().ok()?))
        })
        .collect()
}

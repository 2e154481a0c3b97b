//! Readers for whitespace edge lists and a subset of GML.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::BaseTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    /// `u v w` per line (or `u v` when unweighted), `#` comments.
    EdgeList { weighted: bool },
    /// `node [ id .. ]` and `edge [ source .. target .. value .. ]` blocks.
    Gml,
}

impl GraphFormat {
    /// Guesses from the file extension: `.gml` is GML, anything else a weighted
    /// edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("gml") => GraphFormat::Gml,
            _ => GraphFormat::EdgeList { weighted: true },
        }
    }
}

pub fn read_graph(path: &Path, format: GraphFormat) -> Result<BaseTopology> {
    let text = std::fs::read_to_string(path)?;
    match format {
        GraphFormat::EdgeList { weighted } => parse_edge_list(&text, weighted),
        GraphFormat::Gml => parse_gml(&text),
    }
}

/// Parses an edge list. Ids are 1-based when the smallest id is at least 1,
/// otherwise 0-based. A `# nodes: N` header fixes the node count (so
/// isolated nodes survive) and makes ids 0-based.
pub fn parse_edge_list(text: &str, weighted: bool) -> Result<BaseTopology> {
    let mut raw = Vec::new();
    let mut declared = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(count) = line.trim().strip_prefix("# nodes:") {
            let count = count.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid node count {:?}", count.trim()),
            })?;
            declared = Some(count);
            continue;
        }
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let expected = if weighted { 3 } else { 2 };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let id = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid node id {s:?}"),
            })
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        let w = if weighted {
            fields[2].parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid weight {:?}", fields[2]),
            })?
        } else {
            1.0
        };
        raw.push((lineno, u, v, w));
    }
    let offset = match declared {
        Some(_) => 0,
        None => usize::from(raw.iter().map(|r| r.1.min(r.2)).min().unwrap_or(0) >= 1),
    };
    let n = declared.unwrap_or_else(|| raw.iter().map(|r| r.1.max(r.2)).max().map_or(0, |m| m + 1 - offset));
    let edges: Vec<_> = raw.iter().map(|&(line, u, v, w)| (line, u - offset, v - offset, w)).collect();
    build_located(n, &edges)
}

/// Writes `g` as a 0-based weighted edge list with a `# nodes: N` header.
pub fn write_edge_list(g: &BaseTopology) -> String {
    let mut out = format!("# nodes: {}\n", g.n());
    for e in g.edges() {
        out.push_str(&format!("{} {} {}\n", e.u, e.v, e.w));
    }
    out
}

/// Builds the topology, attributing a validation failure to its source line.
fn build_located(n: usize, edges: &[(usize, usize, usize, f64)]) -> Result<BaseTopology> {
    BaseTopology::new(n, edges.iter().map(|e| (e.1, e.2, e.3))).map_err(|err| {
        let matches = |&&(_, u, v, w): &&(usize, usize, usize, f64)| match &err {
            Error::SelfLoop(a) => u == *a && v == *a,
            Error::DuplicateEdge(a, b) => (u.min(v), u.max(v)) == (*a, *b),
            Error::NonPositiveWeight { u: a, v: b, .. } => (u, v) == (*a, *b) && !(w > 0.0 && w.is_finite()),
            Error::NodeOutOfRange { node, .. } => u == *node || v == *node,
            _ => false,
        };
        // duplicates are reported at their second occurrence
        let line = match &err {
            Error::DuplicateEdge(..) => edges.iter().filter(matches).nth(1),
            _ => edges.iter().find(matches),
        }
        .map_or(0, |e| e.0);
        Error::Parse { line, message: err.to_string() }
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Text(String),
    List(Vec<(String, Value, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Number(f64),
    Text(String),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let mut chars = line.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c == '#' {
                break;
            } else if c == '[' {
                chars.next();
                out.push((Token::Open, lineno));
            } else if c == ']' {
                chars.next();
                out.push((Token::Close, lineno));
            } else if c == '"' {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                for (_, ch) in chars.by_ref() {
                    if ch == '"' {
                        closed = true;
                        break;
                    }
                    s.push(ch);
                }
                if !closed {
                    return Err(Error::Parse { line: lineno, message: "unterminated string".into() });
                }
                out.push((Token::Text(s), lineno));
            } else {
                let mut end = start;
                while let Some(&(i, ch)) = chars.peek() {
                    if ch.is_whitespace() || ch == '[' || ch == ']' || ch == '"' {
                        break;
                    }
                    end = i + ch.len_utf8();
                    chars.next();
                }
                let word = &line[start..end];
                match word.parse::<f64>() {
                    Ok(x) => out.push((Token::Number(x), lineno)),
                    Err(_) => out.push((Token::Word(word.to_string()), lineno)),
                }
            }
        }
    }
    Ok(out)
}

fn parse_list(tokens: &[(Token, usize)], pos: &mut usize, nested: bool) -> Result<Vec<(String, Value, usize)>> {
    let mut items = Vec::new();
    loop {
        let Some((tok, line)) = tokens.get(*pos) else {
            if nested {
                let line = tokens.last().map_or(0, |t| t.1);
                return Err(Error::Parse { line, message: "unclosed '['".into() });
            }
            return Ok(items);
        };
        let line = *line;
        *pos += 1;
        let key = match tok {
            Token::Close if nested => return Ok(items),
            Token::Word(w) => w.clone(),
            other => {
                return Err(Error::Parse { line, message: format!("expected a key, found {other:?}") })
            }
        };
        let Some((val, _)) = tokens.get(*pos) else {
            return Err(Error::Parse { line, message: format!("key {key:?} has no value") });
        };
        *pos += 1;
        let value = match val {
            Token::Number(x) => Value::Number(*x),
            Token::Text(s) | Token::Word(s) => Value::Text(s.clone()),
            Token::Open => Value::List(parse_list(tokens, pos, true)?),
            Token::Close => {
                return Err(Error::Parse { line, message: format!("key {key:?} has no value") })
            }
        };
        items.push((key, value, line));
    }
}

fn number(items: &[(String, Value, usize)], key: &str) -> Option<f64> {
    items.iter().find_map(|(k, v, _)| match v {
        Value::Number(x) if k == key => Some(*x),
        _ => None,
    })
}

/// Parses the GML subset. Node ids are remapped to `0..n` in increasing id
/// order; edge weights come from `value` (or `weight`), defaulting to 1.
pub fn parse_gml(text: &str) -> Result<BaseTopology> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let top = parse_list(&tokens, &mut pos, false)?;
    let graph = top
        .iter()
        .find_map(|(k, v, _)| match v {
            Value::List(items) if k == "graph" => Some(items),
            _ => None,
        })
        .ok_or(Error::Parse { line: 1, message: "no graph [ ... ] block".into() })?;

    let mut ids = BTreeMap::new();
    let mut raw_edges = Vec::new();
    for (key, value, line) in graph {
        let Value::List(items) = value else { continue };
        let need = |field: &str| {
            number(items, field).ok_or_else(|| Error::Parse {
                line: *line,
                message: format!("{key} block missing {field}"),
            })
        };
        match key.as_str() {
            "node" => {
                let id = need("id")? as i64;
                if ids.insert(id, 0usize).is_some() {
                    return Err(Error::Parse { line: *line, message: format!("duplicate node id {id}") });
                }
            }
            "edge" => {
                let s = need("source")? as i64;
                let t = need("target")? as i64;
                let w = number(items, "value").or_else(|| number(items, "weight")).unwrap_or(1.0);
                raw_edges.push((*line, s, t, w));
            }
            _ => {}
        }
    }
    for (idx, slot) in ids.values_mut().enumerate() {
        *slot = idx;
    }
    let n = ids.len();
    let mut edges = Vec::with_capacity(raw_edges.len());
    for &(line, s, t, w) in &raw_edges {
        let lookup = |id: i64| {
            ids.get(&id).copied().ok_or_else(|| Error::Parse {
                line,
                message: format!("edge references unknown node {id}"),
            })
        };
        edges.push((line, lookup(s)?, lookup(t)?, w));
    }
    build_located(n, &edges)
}

//! Line-oriented text format for graphs and initial distributions.
//!
//! ```text
//! vars int: p q
//! vars bool: b h
//! node start : start
//! node asg : assign p := 0, q := 0
//! node rnd : rassign b ~ bernoulli(1/2), h ~ { true:1/2, false:1/2 }
//! node hb : branch h
//! node rp : pbranch 1/2
//! edge start -> asg
//! edge hb -T-> hb
//! edge hb -F-> bb
//! relevant q
//! assume Q = start asg end
//! assume Q0 = hb
//! assume X = incp:end randp:end
//! ```
//!
//! Distribution files hold lines `prob <rat> { v=value, ... }`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::cfg::{validate, Cfg, Edge, EdgeLabel, Node, NodeKind, ValueDist};
use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::semantics::Dist;
use crate::value::{fmt_rat, parse_rat, Rat, Store, Type, Value};

/// Parses and validates a graph.
pub fn parse_cfg(text: &str) -> Result<Cfg> {
    let cfg = parse_unvalidated(text)?;
    let violations = validate(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Invalid(violations))
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

/// 1-based column of `part` within `line`; `part` must be a subslice of it.
fn col_of(line: &str, part: &str) -> usize {
    let offset = part.as_ptr() as usize - line.as_ptr() as usize;
    line[..offset].chars().count() + 1
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Splits on commas that are not nested in braces or parentheses.
fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

struct PendingEdge {
    line: usize,
    col: usize,
    from: String,
    to: String,
    label: EdgeLabel,
}

/// Parses a graph without checking structural invariants. Syntax, unknown
/// names, duplicate node ids and ill-typed expressions are still errors.
pub fn parse_unvalidated(text: &str) -> Result<Cfg> {
    let mut vars: BTreeMap<String, Type> = BTreeMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut pending: Vec<PendingEdge> = Vec::new();
    let mut relevant = BTreeSet::new();
    let mut assume_q = None;
    let mut assume_q0 = None;
    let mut assume_x = None;
    let mut names: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        let (keyword, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        match keyword {
            "vars" => {
                let (ty, list) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(lineno, col_of(raw, rest), "expected `vars <type>: <names>`"))?;
                let ty = match ty.trim() {
                    "int" => Type::Int,
                    "bool" => Type::Bool,
                    other => {
                        return Err(syntax(lineno, col_of(raw, ty), format!("unknown type `{other}`")))
                    }
                };
                for name in list.split_whitespace() {
                    if !is_ident(name) {
                        return Err(syntax(lineno, col_of(raw, name), format!("bad variable name `{name}`")));
                    }
                    if vars.insert(name.to_string(), ty).is_some() {
                        return Err(syntax(lineno, col_of(raw, name), format!("variable `{name}` declared twice")));
                    }
                }
            }
            "node" => {
                let (id, kind_text) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(lineno, col_of(raw, rest), "expected `node <id> : <kind>`"))?;
                let id = id.trim();
                if !is_ident(id) {
                    return Err(syntax(lineno, col_of(raw, id), format!("bad node id `{id}`")));
                }
                if names.contains_key(id) {
                    return Err(syntax(lineno, col_of(raw, id), format!("duplicate node id `{id}`")));
                }
                let kind = parse_kind(raw, lineno, kind_text.trim(), &vars)?;
                names.insert(id.to_string(), nodes.len());
                nodes.push(Node {
                    name: id.to_string(),
                    kind,
                });
            }
            "edge" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(syntax(lineno, col_of(raw, rest), "expected `edge <id> -> <id>`"));
                }
                let label = match toks[1] {
                    "->" => EdgeLabel::Seq,
                    "-T->" => EdgeLabel::True,
                    "-F->" => EdgeLabel::False,
                    other => {
                        return Err(syntax(lineno, col_of(raw, toks[1]), format!("unknown arrow `{other}`")))
                    }
                };
                pending.push(PendingEdge {
                    line: lineno,
                    col: col_of(raw, toks[0]),
                    from: toks[0].to_string(),
                    to: toks[2].to_string(),
                    label,
                });
            }
            "relevant" => {
                for name in rest.split_whitespace() {
                    if !vars.contains_key(name) {
                        return Err(syntax(lineno, col_of(raw, name), format!("unknown variable `{name}`")));
                    }
                    relevant.insert(name.to_string());
                }
            }
            "assume" => {
                let (which, list) = rest
                    .split_once('=')
                    .ok_or_else(|| syntax(lineno, col_of(raw, rest), "expected `assume Q|Q0|X = ...`"))?;
                match which.trim() {
                    "Q" => assume_q = Some(list.split_whitespace().map(String::from).collect()),
                    "Q0" => assume_q0 = Some(list.split_whitespace().map(String::from).collect()),
                    "X" => {
                        let mut pairs = BTreeSet::new();
                        for item in list.split_whitespace() {
                            let (a, b) = item.split_once(':').ok_or_else(|| {
                                syntax(lineno, col_of(raw, item), "expected `<id>:<id>` pairs")
                            })?;
                            pairs.insert((a.to_string(), b.to_string()));
                        }
                        assume_x = Some(pairs);
                    }
                    other => {
                        return Err(syntax(lineno, col_of(raw, which), format!("unknown assumption `{other}`")))
                    }
                }
            }
            other => {
                return Err(syntax(lineno, col_of(raw, keyword), format!("unknown directive `{other}`")))
            }
        }
    }

    let mut edges = Vec::new();
    for e in pending {
        let from = *names
            .get(&e.from)
            .ok_or_else(|| syntax(e.line, e.col, format!("unknown node `{}`", e.from)))?;
        let to = *names
            .get(&e.to)
            .ok_or_else(|| syntax(e.line, e.col, format!("unknown node `{}`", e.to)))?;
        edges.push(Edge {
            from: crate::cfg::NodeId(from),
            to: crate::cfg::NodeId(to),
            label: e.label,
        });
    }

    let check_nodes = |set: &BTreeSet<String>| -> Result<()> {
        match set.iter().find(|n| !names.contains_key(*n)) {
            Some(n) => Err(Error::UnknownNode(n.clone())),
            None => Ok(()),
        }
    };
    if let Some(q) = &assume_q {
        check_nodes(q)?;
    }
    if let Some(q0) = &assume_q0 {
        check_nodes(q0)?;
    }
    if let Some(x) = &assume_x {
        for (a, b) in x {
            check_nodes(&[a.clone(), b.clone()].into())?;
        }
    }

    let mut cfg = Cfg::new(vars, nodes, edges);
    cfg.relevant = relevant;
    cfg.assumptions.q = assume_q;
    cfg.assumptions.q0 = assume_q0;
    cfg.assumptions.x = assume_x;
    Ok(cfg)
}

fn parse_kind(raw: &str, line: usize, text: &str, vars: &BTreeMap<String, Type>) -> Result<NodeKind> {
    let (word, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let rest = rest.trim();
    let rest_col = if rest.is_empty() { col_of(raw, text) + text.len() } else { col_of(raw, rest) };
    let type_error = |msg: String| syntax(line, rest_col, msg);
    match word {
        "start" | "end" | "skip" if !rest.is_empty() => {
            Err(syntax(line, rest_col, format!("`{word}` takes no arguments")))
        }
        "start" => Ok(NodeKind::Start),
        "end" => Ok(NodeKind::End),
        "skip" => Ok(NodeKind::Skip),
        "assign" => {
            let mut items = Vec::new();
            for part in split_top_level(rest) {
                let (var, expr) = part
                    .split_once(":=")
                    .ok_or_else(|| syntax(line, col_of(raw, part), "expected `<var> := <expr>`"))?;
                let var = var.trim();
                let declared = *vars
                    .get(var)
                    .ok_or_else(|| syntax(line, col_of(raw, part), format!("unknown variable `{var}`")))?;
                let e = parse_expr(expr, line, col_of(raw, expr))?;
                let ty = e.type_of(vars).map_err(|err| type_error(err.to_string()))?;
                if ty != declared {
                    return Err(type_error(format!("`{var}` is {declared} but `{e}` is {ty}")));
                }
                items.push((var.to_string(), e));
            }
            Ok(NodeKind::Assign(items))
        }
        "rassign" => {
            let mut items = Vec::new();
            for part in split_top_level(rest) {
                let (var, spec) = part
                    .split_once('~')
                    .ok_or_else(|| syntax(line, col_of(raw, part), "expected `<var> ~ <distribution>`"))?;
                let var = var.trim();
                let declared = *vars
                    .get(var)
                    .ok_or_else(|| syntax(line, col_of(raw, part), format!("unknown variable `{var}`")))?;
                let dist = parse_value_dist(spec.trim()).map_err(|m| syntax(line, col_of(raw, spec), m))?;
                if let Some(bad) = dist.0.keys().find(|v| v.ty() != declared) {
                    return Err(type_error(format!("`{var}` is {declared} but may draw {bad}")));
                }
                items.push((var.to_string(), dist));
            }
            Ok(NodeKind::RandomAssign(items))
        }
        "branch" => {
            let e = parse_expr(rest, line, rest_col)?;
            match e.type_of(vars).map_err(|err| type_error(err.to_string()))? {
                Type::Bool => Ok(NodeKind::DetBranch(e)),
                t => Err(type_error(format!("branch condition `{e}` is {t}"))),
            }
        }
        "pbranch" => {
            let p = parse_rat(rest).map_err(|m| syntax(line, rest_col, m))?;
            if p <= Rat::zero() || p >= Rat::one() {
                return Err(syntax(line, rest_col, format!("branch probability {} is not in (0,1)", fmt_rat(&p))));
            }
            Ok(NodeKind::ProbBranch(p))
        }
        other => Err(syntax(line, col_of(raw, word), format!("unknown node kind `{other}`"))),
    }
}

fn parse_value_dist(text: &str) -> Result<ValueDist, String> {
    if let Some(arg) = text.strip_prefix("bernoulli") {
        let arg = arg
            .trim()
            .strip_prefix('(')
            .and_then(|a| a.strip_suffix(')'))
            .ok_or("expected `bernoulli(<rat>)`")?;
        let p = parse_rat(arg)?;
        if p < Rat::zero() || p > Rat::one() {
            return Err(format!("bernoulli parameter {} is not in [0,1]", fmt_rat(&p)));
        }
        return Ok(ValueDist::bernoulli(p));
    }
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or("expected `bernoulli(<rat>)` or `{ <value>:<rat>, ... }`")?;
    let mut map = BTreeMap::new();
    for item in inner.split(',') {
        let (value, weight) = item
            .split_once(':')
            .ok_or_else(|| format!("expected `<value>:<rat>`, found `{}`", item.trim()))?;
        let value = Value::parse(value)?;
        let weight = parse_rat(weight)?;
        if weight <= Rat::zero() {
            return Err(format!("weight of {value} must be positive"));
        }
        if map.insert(value.clone(), weight).is_some() {
            return Err(format!("value {value} listed twice"));
        }
    }
    let total = map.values().fold(Rat::zero(), |a, w| a + w);
    if !total.is_one() {
        return Err(format!("weights sum to {}, not 1", fmt_rat(&total)));
    }
    Ok(ValueDist(map))
}

/// Renders a graph in canonical form; `parse_unvalidated` inverts it.
pub fn print_cfg(cfg: &Cfg) -> String {
    let mut out = String::new();
    for ty in [Type::Int, Type::Bool] {
        let vs = cfg.vars_of(ty);
        if !vs.is_empty() {
            let _ = writeln!(out, "vars {ty}: {}", vs.join(" "));
        }
    }
    out.push('\n');
    for v in cfg.node_ids() {
        let _ = writeln!(out, "node {} : {}", cfg.name(v), cfg.kind(v));
    }
    out.push('\n');
    for v in cfg.node_ids() {
        let mut edges: Vec<&Edge> = cfg.out_edges(v).collect();
        edges.sort_by_key(|e| e.label);
        for e in edges {
            let _ = writeln!(out, "edge {} {} {}", cfg.name(e.from), e.label, cfg.name(e.to));
        }
    }
    if !cfg.relevant.is_empty() {
        out.push('\n');
        let rel: Vec<&str> = cfg.relevant.iter().map(String::as_str).collect();
        let _ = writeln!(out, "relevant {}", rel.join(" "));
    }
    let a = &cfg.assumptions;
    if let Some(q) = &a.q {
        let _ = writeln!(out, "assume Q = {}", q.iter().cloned().collect::<Vec<_>>().join(" "));
    }
    if let Some(q0) = &a.q0 {
        let _ = writeln!(out, "assume Q0 = {}", q0.iter().cloned().collect::<Vec<_>>().join(" "));
    }
    if let Some(x) = &a.x {
        let pairs: Vec<String> = x.iter().map(|(p, q)| format!("{p}:{q}")).collect();
        let _ = writeln!(out, "assume X = {}", pairs.join(" "));
    }
    out
}

/// Initial distribution as written in a distribution file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DistSpec(pub Vec<(Store, Rat)>);

impl DistSpec {
    /// Point mass on the empty store; used when no file is given.
    pub fn point_empty() -> Self {
        DistSpec(vec![(Store::new(), Rat::one())])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let rest = line
                .strip_prefix("prob")
                .ok_or_else(|| syntax(lineno, col_of(raw, line), "expected `prob <rat> { ... }`"))?
                .trim();
            let brace = rest
                .find('{')
                .ok_or_else(|| syntax(lineno, col_of(raw, rest), "expected `{` opening a store"))?;
            let weight =
                parse_rat(&rest[..brace]).map_err(|m| syntax(lineno, col_of(raw, rest), m))?;
            let store = Store::parse(&rest[brace..]).map_err(|e| syntax(lineno, col_of(raw, &rest[brace..]), e.to_string()))?;
            rows.push((store, weight));
        }
        Ok(DistSpec(rows))
    }

    /// Checks positivity, distinctness, total mass and declarations, and
    /// builds the distribution.
    pub fn to_dist(&self, cfg: &Cfg) -> Result<Dist> {
        let mut seen = BTreeSet::new();
        for (store, w) in &self.0 {
            if *w <= Rat::zero() {
                return Err(Error::Format(format!("weight {} of {store} is not positive", fmt_rat(w))));
            }
            if !seen.insert(store) {
                return Err(Error::Format(format!("store {store} listed twice")));
            }
            for (var, value) in store.iter() {
                match cfg.vars().get(var) {
                    None => return Err(Error::UnknownVariable(var.clone())),
                    Some(&t) if t != value.ty() => {
                        return Err(Error::Type {
                            msg: format!("`{var}` is {t} but the distribution binds {value}"),
                            node: None,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        let total = self.0.iter().fold(Rat::zero(), |a, (_, w)| a + w);
        if total > Rat::one() {
            return Err(Error::Format(format!("total mass {} exceeds 1", fmt_rat(&total))));
        }
        Ok(self.0.iter().cloned().collect())
    }
}

/// Renders a distribution as `prob <rat> { ... }` lines in store order.
pub fn print_dist(d: &Dist) -> String {
    let mut out = String::new();
    for (store, w) in d.iter() {
        let _ = writeln!(out, "prob {} {store}", fmt_rat(w));
    }
    out
}

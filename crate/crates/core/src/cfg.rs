//! Probabilistic control-flow graphs and their structural invariants.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};

use crate::expr::Expr;
use crate::graph;
use crate::value::{fmt_rat, Rat, Type, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Seq,
    True,
    False,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeLabel::Seq => "->",
            EdgeLabel::True => "-T->",
            EdgeLabel::False => "-F->",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: EdgeLabel,
}

/// Finite distribution over values used by random assignments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueDist(pub BTreeMap<Value, Rat>);

impl ValueDist {
    /// `true` with probability `p`, `false` otherwise. Zero-weight outcomes are dropped.
    pub fn bernoulli(p: Rat) -> Self {
        let q = Rat::one() - &p;
        let mut m = BTreeMap::new();
        if !p.is_zero() {
            m.insert(Value::Bool(true), p);
        }
        if !q.is_zero() {
            m.insert(Value::Bool(false), q);
        }
        ValueDist(m)
    }

    pub fn total(&self) -> Rat {
        self.0.values().fold(Rat::zero(), |acc, w| acc + w)
    }

    fn is_boolean(&self) -> bool {
        self.0.keys().all(|v| matches!(v, Value::Bool(_)))
    }
}

impl fmt::Display for ValueDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_boolean() && !self.0.is_empty() {
            let p = self
                .0
                .get(&Value::Bool(true))
                .cloned()
                .unwrap_or_else(Rat::zero);
            return write!(f, "bernoulli({})", fmt_rat(&p));
        }
        f.write_str("{ ")?;
        for (i, (v, w)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}:{}", fmt_rat(w))?;
        }
        f.write_str(" }")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Start,
    End,
    Skip,
    /// Simultaneous assignment; every right-hand side reads the old store.
    Assign(Vec<(String, Expr)>),
    /// Independent random draws.
    RandomAssign(Vec<(String, ValueDist)>),
    DetBranch(Expr),
    /// Takes the `T` edge with probability `p`, `0 < p < 1`.
    ProbBranch(Rat),
}

impl NodeKind {
    pub fn is_branch(&self) -> bool {
        matches!(self, NodeKind::DetBranch(_) | NodeKind::ProbBranch(_))
    }

    /// Variables written by the node.
    pub fn defs(&self) -> BTreeSet<String> {
        match self {
            NodeKind::Assign(items) => items.iter().map(|(v, _)| v.clone()).collect(),
            NodeKind::RandomAssign(items) => items.iter().map(|(v, _)| v.clone()).collect(),
            _ => BTreeSet::new(),
        }
    }

    /// Variables read by the node.
    pub fn refs(&self) -> BTreeSet<String> {
        match self {
            NodeKind::Assign(items) => items.iter().flat_map(|(_, e)| e.vars()).collect(),
            NodeKind::DetBranch(cond) => cond.vars(),
            _ => BTreeSet::new(),
        }
    }

    /// Order-insensitive form used when comparing graphs.
    fn normalized(&self) -> NodeKind {
        match self {
            NodeKind::Assign(items) => {
                let mut items = items.clone();
                items.sort_by(|a, b| a.0.cmp(&b.0));
                NodeKind::Assign(items)
            }
            NodeKind::RandomAssign(items) => {
                let mut items = items.clone();
                items.sort_by(|a, b| a.0.cmp(&b.0));
                NodeKind::RandomAssign(items)
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Start => f.write_str("start"),
            NodeKind::End => f.write_str("end"),
            NodeKind::Skip => f.write_str("skip"),
            NodeKind::Assign(items) => {
                f.write_str("assign ")?;
                for (i, (v, e)) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v} := {e}")?;
                }
                Ok(())
            }
            NodeKind::RandomAssign(items) => {
                f.write_str("rassign ")?;
                for (i, (v, d)) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v} ~ {d}")?;
                }
                Ok(())
            }
            NodeKind::DetBranch(cond) => write!(f, "branch {cond}"),
            NodeKind::ProbBranch(p) => write!(f, "pbranch {}", fmt_rat(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

/// Optional user-supplied slicing sets, by node name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assumptions {
    pub q: Option<BTreeSet<String>>,
    pub q0: Option<BTreeSet<String>>,
    pub x: Option<BTreeSet<(String, String)>>,
}

impl Assumptions {
    pub fn is_empty(&self) -> bool {
        self.q.is_none() && self.q0.is_none() && self.x.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    vars: BTreeMap<String, Type>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    by_name: BTreeMap<String, NodeId>,
    /// Variables named on a `relevant` line.
    pub relevant: BTreeSet<String>,
    pub assumptions: Assumptions,
}

impl Cfg {
    /// Assembles a graph without checking its invariants; see [`validate`].
    pub fn new(vars: BTreeMap<String, Type>, nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        let mut out = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.from.0].push(i);
        }
        let by_name = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), NodeId(i)))
            .collect();
        Cfg {
            vars,
            nodes,
            edges,
            out,
            by_name,
            relevant: BTreeSet::new(),
            assumptions: Assumptions::default(),
        }
    }

    pub fn vars(&self) -> &BTreeMap<String, Type> {
        &self.vars
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn kind(&self, v: NodeId) -> &NodeKind {
        &self.nodes[v.0].kind
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.nodes[v.0].name
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    /// Looks up a node by name, failing with [`crate::Error::UnknownNode`].
    pub fn node(&self, name: &str) -> crate::Result<NodeId> {
        self.id(name)
            .ok_or_else(|| crate::Error::UnknownNode(name.to_string()))
    }

    fn find_kind(&self, want: fn(&NodeKind) -> bool) -> Option<NodeId> {
        self.node_ids().find(|&v| want(self.kind(v)))
    }

    /// The start node. Panics if the graph has none.
    pub fn start(&self) -> NodeId {
        self.find_kind(|k| matches!(k, NodeKind::Start))
            .expect("graph has a start node")
    }

    /// The end node. Panics if the graph has none.
    pub fn end(&self) -> NodeId {
        self.find_kind(|k| matches!(k, NodeKind::End))
            .expect("graph has an end node")
    }

    /// Outgoing edges of `v` in declaration order.
    pub fn out_edges(&self, v: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.out[v.0].iter().map(move |&i| &self.edges[i])
    }

    pub fn succs(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out_edges(v).map(|e| e.to)
    }

    pub fn preds(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges.iter().filter(move |e| e.to == v).map(|e| e.from)
    }

    /// The unique successor of a non-branch node.
    pub fn next(&self, v: NodeId) -> Option<NodeId> {
        let mut it = self.out_edges(v);
        match (it.next(), it.next()) {
            (Some(e), None) => Some(e.to),
            _ => None,
        }
    }

    /// `(T successor, F successor)` of a branch node.
    pub fn branch_targets(&self, v: NodeId) -> Option<(NodeId, NodeId)> {
        let t = self.out_edges(v).find(|e| e.label == EdgeLabel::True)?;
        let f = self.out_edges(v).find(|e| e.label == EdgeLabel::False)?;
        Some((t.to, f.to))
    }

    /// Variables declared with the given type, sorted.
    pub fn vars_of(&self, ty: Type) -> Vec<&str> {
        self.vars
            .iter()
            .filter(|(_, t)| **t == ty)
            .map(|(v, _)| v.as_str())
            .collect()
    }

    /// Node names for a set of ids, sorted by node order.
    pub fn names(&self, set: &BTreeSet<NodeId>) -> Vec<String> {
        set.iter().map(|&v| self.name(v).to_string()).collect()
    }

    /// Keeps only nodes reachable from start, renumbering ids.
    pub(crate) fn prune_unreachable(self) -> Cfg {
        let start = self.start();
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start.0] = true;
        while let Some(v) = queue.pop_front() {
            for w in self.succs(v) {
                if !seen[w.0] {
                    seen[w.0] = true;
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            return self;
        }
        let mut remap = vec![None; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if seen[i] {
                remap[i] = Some(NodeId(nodes.len()));
                nodes.push(node.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| seen[e.from.0])
            .map(|e| Edge {
                from: remap[e.from.0].unwrap(),
                to: remap[e.to.0].unwrap(),
                label: e.label,
            })
            .collect();
        let mut pruned = Cfg::new(self.vars, nodes, edges);
        pruned.relevant = self.relevant;
        pruned.assumptions = self.assumptions;
        pruned
    }

    /// Copy with different declarations, node kinds and edges; names and
    /// `relevant` carry over.
    pub(crate) fn rebuild(
        &self,
        vars: BTreeMap<String, Type>,
        kinds: Vec<NodeKind>,
        edges: Vec<Edge>,
    ) -> Cfg {
        let nodes = self
            .nodes
            .iter()
            .zip(kinds)
            .map(|(n, kind)| Node {
                name: n.name.clone(),
                kind,
            })
            .collect();
        let mut cfg = Cfg::new(vars, nodes, edges);
        cfg.relevant = self.relevant.clone();
        cfg
    }
}

/// A violated structural invariant, with witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    StartCount(usize),
    EndCount(usize),
    EndHasSuccessors(String),
    BranchOutDegree { node: String, found: usize },
    BranchLabels(String),
    OutDegree { node: String, found: usize },
    LabeledSequentialEdge(String),
    Unreachable(String),
    EndUnreachable(String),
    Irreducible { from: String, to: String },
    EmptyAssignment(String),
    DuplicateTarget { node: String, var: String },
    Undeclared { node: String, var: String },
    IllTyped { node: String, msg: String },
    BadProbability { node: String, p: String },
    BadDrawWeights { node: String, var: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StartCount(n) => write!(f, "expected exactly one start node, found {n}"),
            Violation::EndCount(n) => write!(f, "expected exactly one end node, found {n}"),
            Violation::EndHasSuccessors(n) => write!(f, "end node has successors (`{n}`)"),
            Violation::BranchOutDegree { node, found } => {
                write!(f, "branch out-degree ≠ 2 at `{node}` (found {found})")
            }
            Violation::BranchLabels(n) => write!(f, "branch `{n}` needs one T edge and one F edge"),
            Violation::OutDegree { node, found } => {
                write!(f, "node `{node}` must have exactly one successor (found {found})")
            }
            Violation::LabeledSequentialEdge(n) => {
                write!(f, "non-branch node `{n}` has a T/F labeled edge")
            }
            Violation::Unreachable(n) => write!(f, "`{n}` unreachable from start"),
            Violation::EndUnreachable(n) => write!(f, "end unreachable from {n}"),
            Violation::Irreducible { from, to } => {
                write!(f, "graph is irreducible: retreating edge {from} -> {to} is not a back edge")
            }
            Violation::EmptyAssignment(n) => write!(f, "assignment at `{n}` has no components"),
            Violation::DuplicateTarget { node, var } => {
                write!(f, "`{var}` assigned twice at `{node}`")
            }
            Violation::Undeclared { node, var } => {
                write!(f, "undeclared variable `{var}` at `{node}`")
            }
            Violation::IllTyped { node, msg } => write!(f, "type error at `{node}`: {msg}"),
            Violation::BadProbability { node, p } => {
                write!(f, "branch probability {p} at `{node}` is not in (0,1)")
            }
            Violation::BadDrawWeights { node, var } => {
                write!(f, "draw weights for `{var}` at `{node}` must be positive and sum to 1")
            }
        }
    }
}

/// Every violated invariant of `cfg`; empty iff the graph is well formed.
pub fn validate(cfg: &Cfg) -> Vec<Violation> {
    let mut out = Vec::new();
    let starts = cfg
        .node_ids()
        .filter(|&v| matches!(cfg.kind(v), NodeKind::Start))
        .count();
    let ends = cfg
        .node_ids()
        .filter(|&v| matches!(cfg.kind(v), NodeKind::End))
        .count();
    if starts != 1 {
        out.push(Violation::StartCount(starts));
    }
    if ends != 1 {
        out.push(Violation::EndCount(ends));
    }

    for v in cfg.node_ids() {
        let name = cfg.name(v).to_string();
        let edges: Vec<&Edge> = cfg.out_edges(v).collect();
        match cfg.kind(v) {
            NodeKind::End => {
                if !edges.is_empty() {
                    out.push(Violation::EndHasSuccessors(name.clone()));
                }
            }
            k if k.is_branch() => {
                if edges.len() != 2 {
                    out.push(Violation::BranchOutDegree {
                        node: name.clone(),
                        found: edges.len(),
                    });
                } else if cfg.branch_targets(v).is_none() {
                    out.push(Violation::BranchLabels(name.clone()));
                }
            }
            _ => {
                if edges.len() != 1 {
                    out.push(Violation::OutDegree {
                        node: name.clone(),
                        found: edges.len(),
                    });
                } else if edges[0].label != EdgeLabel::Seq {
                    out.push(Violation::LabeledSequentialEdge(name.clone()));
                }
            }
        }
        check_node_contents(cfg, v, &mut out);
    }

    if starts != 1 || ends != 1 {
        return out;
    }
    let fwd = reach(cfg, cfg.start(), false);
    let bwd = reach(cfg, cfg.end(), true);
    for v in cfg.node_ids() {
        if !fwd[v.0] {
            out.push(Violation::Unreachable(cfg.name(v).to_string()));
        }
    }
    for v in cfg.node_ids() {
        if !bwd[v.0] {
            out.push(Violation::EndUnreachable(cfg.name(v).to_string()));
        }
    }
    if out.is_empty() {
        if let Some(e) = graph::first_non_back_retreating_edge(cfg) {
            out.push(Violation::Irreducible {
                from: cfg.name(e.from).to_string(),
                to: cfg.name(e.to).to_string(),
            });
        }
    }
    out
}

fn check_node_contents(cfg: &Cfg, v: NodeId, out: &mut Vec<Violation>) {
    let name = || cfg.name(v).to_string();
    let check_targets = |vars: Vec<&String>, out: &mut Vec<Violation>| {
        if vars.is_empty() {
            out.push(Violation::EmptyAssignment(name()));
        }
        let mut seen = BTreeSet::new();
        for var in vars {
            if !seen.insert(var) {
                out.push(Violation::DuplicateTarget {
                    node: name(),
                    var: var.clone(),
                });
            }
            if !cfg.vars.contains_key(var) {
                out.push(Violation::Undeclared {
                    node: name(),
                    var: var.clone(),
                });
            }
        }
    };
    match cfg.kind(v) {
        NodeKind::Assign(items) => {
            check_targets(items.iter().map(|(x, _)| x).collect(), out);
            for (x, e) in items {
                match e.type_of(&cfg.vars) {
                    Ok(t) if cfg.vars.get(x).is_some_and(|&d| d != t) => {
                        out.push(Violation::IllTyped {
                            node: name(),
                            msg: format!("`{x}` is {} but `{e}` is {t}", cfg.vars[x]),
                        })
                    }
                    Ok(_) => {}
                    Err(err) => out.push(Violation::IllTyped {
                        node: name(),
                        msg: err.to_string(),
                    }),
                }
            }
        }
        NodeKind::RandomAssign(items) => {
            check_targets(items.iter().map(|(x, _)| x).collect(), out);
            for (x, d) in items {
                let positive = d.0.values().all(|w| *w > Rat::zero());
                if d.0.is_empty() || !positive || !d.total().is_one() {
                    out.push(Violation::BadDrawWeights {
                        node: name(),
                        var: x.clone(),
                    });
                }
                if let Some(&t) = cfg.vars.get(x) {
                    if let Some(bad) = d.0.keys().find(|val| val.ty() != t) {
                        out.push(Violation::IllTyped {
                            node: name(),
                            msg: format!("`{x}` is {t} but may draw {bad}"),
                        });
                    }
                }
            }
        }
        NodeKind::DetBranch(cond) => match cond.type_of(&cfg.vars) {
            Ok(Type::Bool) => {}
            Ok(t) => out.push(Violation::IllTyped {
                node: name(),
                msg: format!("condition `{cond}` is {t}"),
            }),
            Err(err) => out.push(Violation::IllTyped {
                node: name(),
                msg: err.to_string(),
            }),
        },
        NodeKind::ProbBranch(p) => {
            if *p <= Rat::zero() || *p >= Rat::one() {
                out.push(Violation::BadProbability {
                    node: name(),
                    p: fmt_rat(p),
                });
            }
        }
        NodeKind::Start | NodeKind::End | NodeKind::Skip => {}
    }
}

fn reach(cfg: &Cfg, from: NodeId, backwards: bool) -> Vec<bool> {
    let mut seen = vec![false; cfg.len()];
    let mut stack = vec![from];
    seen[from.0] = true;
    while let Some(v) = stack.pop() {
        let next: Vec<NodeId> = if backwards {
            cfg.preds(v).collect()
        } else {
            cfg.succs(v).collect()
        };
        for w in next {
            if !seen[w.0] {
                seen[w.0] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Whether there is a kind-preserving bijection between the graphs that maps
/// start to start and respects edge labels.
///
/// In a valid graph every node is reachable from start and each outgoing
/// edge has a distinct label, so the bijection, if any, is forced by a
/// simultaneous traversal.
pub fn isomorphic(a: &Cfg, b: &Cfg) -> bool {
    if a.len() != b.len() || a.edges().len() != b.edges().len() {
        return false;
    }
    let mut map: Vec<Option<NodeId>> = vec![None; a.len()];
    let mut used = vec![false; b.len()];
    let mut queue = VecDeque::new();
    let (sa, sb) = (a.start(), b.start());
    map[sa.0] = Some(sb);
    used[sb.0] = true;
    queue.push_back(sa);
    while let Some(u) = queue.pop_front() {
        let w = map[u.0].unwrap();
        if a.kind(u).normalized() != b.kind(w).normalized() {
            return false;
        }
        let mut ea: Vec<(EdgeLabel, NodeId)> = a.out_edges(u).map(|e| (e.label, e.to)).collect();
        let mut eb: Vec<(EdgeLabel, NodeId)> = b.out_edges(w).map(|e| (e.label, e.to)).collect();
        ea.sort();
        eb.sort();
        if ea.len() != eb.len() {
            return false;
        }
        for ((la, ta), (lb, tb)) in ea.into_iter().zip(eb) {
            if la != lb {
                return false;
            }
            match map[ta.0] {
                Some(m) if m != tb => return false,
                Some(_) => {}
                None => {
                    if used[tb.0] {
                        return false;
                    }
                    map[ta.0] = Some(tb);
                    used[tb.0] = true;
                    queue.push_back(ta);
                }
            }
        }
    }
    map.iter().all(Option::is_some)
}

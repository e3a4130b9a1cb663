//! Dominators, postdominators, back edges and the universe of node pairs.

use std::collections::BTreeSet;

use crate::cfg::{Cfg, Edge, NodeId};
use crate::error::{Error, Result};

/// Immediate-dominator tree over a rooted graph.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Tree {
    root: NodeId,
    /// `parent[v]` is the immediate dominator of `v`; `None` for the root
    /// and for nodes the root cannot reach.
    parent: Vec<Option<NodeId>>,
}

impl Tree {
    /// Cooper–Harvey–Kennedy iteration over reverse postorder.
    fn compute(
        n: usize,
        root: NodeId,
        succs: impl Fn(NodeId) -> Vec<NodeId>,
        preds: impl Fn(NodeId) -> Vec<NodeId>,
    ) -> Tree {
        let order = postorder(n, root, &succs);
        let mut po_index = vec![usize::MAX; n];
        for (i, v) in order.iter().enumerate() {
            po_index[v.0] = i;
        }
        let mut idom: Vec<Option<NodeId>> = vec![None; n];
        idom[root.0] = Some(root);

        let intersect = |idom: &[Option<NodeId>], mut a: NodeId, mut b: NodeId| {
            while a != b {
                while po_index[a.0] < po_index[b.0] {
                    a = idom[a.0].unwrap();
                }
                while po_index[b.0] < po_index[a.0] {
                    b = idom[b.0].unwrap();
                }
            }
            a
        };

        let mut changed = true;
        while changed {
            changed = false;
            for &v in order.iter().rev() {
                if v == root {
                    continue;
                }
                let mut new_idom: Option<NodeId> = None;
                for p in preds(v) {
                    if idom[p.0].is_none() {
                        continue;
                    }
                    new_idom = Some(match new_idom {
                        None => p,
                        Some(cur) => intersect(&idom, p, cur),
                    });
                }
                if new_idom.is_some() && idom[v.0] != new_idom {
                    idom[v.0] = new_idom;
                    changed = true;
                }
            }
        }
        idom[root.0] = None;
        Tree { root, parent: idom }
    }

    /// True iff `a` is `b` or a proper ancestor of `b`.
    fn is_ancestor(&self, a: NodeId, b: NodeId) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.parent[c.0];
        }
        false
    }
}

fn postorder(n: usize, root: NodeId, succs: &impl Fn(NodeId) -> Vec<NodeId>) -> Vec<NodeId> {
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![(root, succs(root), 0usize)];
    seen[root.0] = true;
    while let Some((v, next, i)) = stack.last_mut() {
        if let Some(&w) = next.get(*i) {
            *i += 1;
            if !seen[w.0] {
                seen[w.0] = true;
                let ws = succs(w);
                stack.push((w, ws, 0));
            }
        } else {
            order.push(*v);
            stack.pop();
        }
    }
    order
}

/// Dominator tree rooted at start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomTree(Tree);

impl DomTree {
    pub fn idom(&self, v: NodeId) -> Option<NodeId> {
        self.0.parent[v.0]
    }

    /// Reflexive dominance.
    pub fn dominates(&self, a: NodeId, b: NodeId) -> bool {
        self.0.is_ancestor(a, b)
    }

    pub fn root(&self) -> NodeId {
        self.0.root
    }
}

/// Postdominator tree rooted at end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdTree(Tree);

impl PdTree {
    pub fn ipdom(&self, v: NodeId) -> Option<NodeId> {
        self.0.parent[v.0]
    }

    /// Reflexive postdominance: every path from `v` to end passes `w`.
    pub fn postdominates(&self, w: NodeId, v: NodeId) -> bool {
        self.0.is_ancestor(w, v)
    }

    pub fn root(&self) -> NodeId {
        self.0.root
    }
}

pub fn dominators(cfg: &Cfg) -> DomTree {
    DomTree(Tree::compute(
        cfg.len(),
        cfg.start(),
        |v| cfg.succs(v).collect(),
        |v| cfg.preds(v).collect(),
    ))
}

pub fn postdominators(cfg: &Cfg) -> PdTree {
    PdTree(Tree::compute(
        cfg.len(),
        cfg.end(),
        |v| cfg.preds(v).collect(),
        |v| cfg.succs(v).collect(),
    ))
}

/// Edges whose target dominates their source, as `(source, target)` pairs.
pub type BackEdgeSet = BTreeSet<(NodeId, NodeId)>;

pub fn back_edges(cfg: &Cfg) -> BackEdgeSet {
    back_edges_with(cfg, &dominators(cfg))
}

fn back_edges_with(cfg: &Cfg, dom: &DomTree) -> BackEdgeSet {
    cfg.edges()
        .iter()
        .filter(|e| dom.dominates(e.to, e.from))
        .map(|e| (e.from, e.to))
        .collect()
}

/// A retreating edge of a depth-first traversal from start whose target does
/// not dominate its source; `None` iff the graph is reducible.
pub(crate) fn first_non_back_retreating_edge(cfg: &Cfg) -> Option<Edge> {
    let dom = dominators(cfg);
    let n = cfg.len();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let start = cfg.start();
    let mut stack: Vec<(NodeId, Vec<Edge>, usize)> = vec![(start, cfg.out_edges(start).copied().collect(), 0)];
    state[start.0] = 1;
    while let Some((v, edges, i)) = stack.last_mut() {
        if let Some(&e) = edges.get(*i) {
            *i += 1;
            match state[e.to.0] {
                0 => {
                    state[e.to.0] = 1;
                    let out = cfg.out_edges(e.to).copied().collect();
                    stack.push((e.to, out, 0));
                }
                1 if !dom.dominates(e.to, e.from) => return Some(e),
                _ => {}
            }
        } else {
            state[v.0] = 2;
            stack.pop();
        }
    }
    None
}

pub fn check_reducible(cfg: &Cfg) -> bool {
    first_non_back_retreating_edge(cfg).is_none()
}

/// Cached structural facts about one graph.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub dom: DomTree,
    pub pdom: PdTree,
    pub back: BackEdgeSet,
    pub reducible: bool,
}

impl Analysis {
    pub fn new(cfg: &Cfg) -> Self {
        let dom = dominators(cfg);
        let back = back_edges_with(cfg, &dom);
        Analysis {
            pdom: postdominators(cfg),
            reducible: check_reducible(cfg),
            dom,
            back,
        }
    }

    pub fn is_back_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.back.contains(&(from, to))
    }

    /// `(v, w)` is a subprogram iff `w` postdominates `v`.
    pub fn in_universe(&self, v: NodeId, w: NodeId) -> bool {
        self.pdom.postdominates(w, v)
    }

    pub fn require_universe(&self, cfg: &Cfg, v: NodeId, w: NodeId) -> Result<()> {
        if self.in_universe(v, w) {
            Ok(())
        } else {
            Err(Error::NotInUniverse {
                from: cfg.name(v).to_string(),
                to: cfg.name(w).to_string(),
            })
        }
    }

    /// All pairs of the universe, in node order.
    pub fn universe(&self, cfg: &Cfg) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for v in cfg.node_ids() {
            for w in cfg.node_ids() {
                if self.in_universe(v, w) {
                    out.push((v, w));
                }
            }
        }
        out
    }

    /// True iff no back edge leaves a node visited strictly before `w` on
    /// paths from `v`, so every path from `v` to `w` is loop free and uses
    /// no backwards move.
    pub fn loop_free_between(&self, cfg: &Cfg, v: NodeId, w: NodeId) -> Result<bool> {
        let reach = stays_outside_reach(cfg, self, v, w)?;
        Ok(!self.back.iter().any(|(from, _)| reach.contains(from)))
    }
}

/// Nodes reachable from `v` along paths that have not yet visited `w`:
/// `v` itself when `v != w`, never `w`.
pub fn stays_outside_reach(
    cfg: &Cfg,
    analysis: &Analysis,
    v: NodeId,
    w: NodeId,
) -> Result<BTreeSet<NodeId>> {
    analysis.require_universe(cfg, v, w)?;
    let mut seen = BTreeSet::new();
    if v == w {
        return Ok(seen);
    }
    let mut stack = vec![v];
    seen.insert(v);
    while let Some(u) = stack.pop() {
        for x in cfg.succs(u) {
            if x != w && seen.insert(x) {
                stack.push(x);
            }
        }
    }
    Ok(seen)
}

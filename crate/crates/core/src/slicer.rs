//! Dependence analysis and the slice/modify transforms.
//!
//! `Q` holds the nodes that influence the relevant variables at end, `Q0`
//! the remaining nodes that may cause nontermination, and `X` the pairs
//! `(v, w)` such that control from `v` stays outside `Q ∪ Q0` until `w`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cfg::{validate, Assumptions, Cfg, Edge, EdgeLabel, NodeId, NodeKind};
use crate::error::{Error, Result};
use crate::graph::{stays_outside_reach, Analysis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceInfo {
    pub relevant: BTreeSet<String>,
    pub q: BTreeSet<NodeId>,
    pub q0: BTreeSet<NodeId>,
    pub x: BTreeSet<(NodeId, NodeId)>,
    pub q_from: Provenance,
    pub q0_from: Provenance,
    pub x_from: Provenance,
}

impl SliceInfo {
    /// Computes `Q`, `Q0` and `X`, taking any user-supplied set in
    /// `assume` in place of the computed one. Start and end are always
    /// added to a supplied `Q`.
    pub fn build(cfg: &Cfg, relevant: &BTreeSet<String>, assume: &Assumptions) -> Result<SliceInfo> {
        let analysis = Analysis::new(cfg);
        let ids = |names: &BTreeSet<String>| -> Result<BTreeSet<NodeId>> {
            names.iter().map(|n| cfg.node(n)).collect()
        };
        let (q, q_from) = match &assume.q {
            Some(names) => {
                let mut q = ids(names)?;
                q.insert(cfg.start());
                q.insert(cfg.end());
                (q, Provenance::UserSupplied)
            }
            None => (compute_q(cfg, &analysis, relevant)?, Provenance::Computed),
        };
        let (q0, q0_from) = match &assume.q0 {
            Some(names) => (ids(names)?, Provenance::UserSupplied),
            None => (compute_q0(cfg, &analysis, &q), Provenance::Computed),
        };
        if let Some(v) = q.intersection(&q0).next() {
            return Err(Error::Format(format!(
                "node `{}` is in both Q and Q0",
                cfg.name(*v)
            )));
        }
        let (x, x_from) = match &assume.x {
            Some(pairs) => {
                let mut x = BTreeSet::new();
                for (a, b) in pairs {
                    let (a, b) = (cfg.node(a)?, cfg.node(b)?);
                    analysis.require_universe(cfg, a, b)?;
                    x.insert((a, b));
                }
                (x, Provenance::UserSupplied)
            }
            None => (compute_x(cfg, &analysis, &q, &q0), Provenance::Computed),
        };
        Ok(SliceInfo {
            relevant: relevant.clone(),
            q,
            q0,
            x,
            q_from,
            q0_from,
            x_from,
        })
    }

    /// Violated invariants, as messages; empty when consistent.
    pub fn problems(&self, cfg: &Cfg) -> Vec<String> {
        let analysis = Analysis::new(cfg);
        let mut out = Vec::new();
        if !self.q.contains(&cfg.start()) || !self.q.contains(&cfg.end()) {
            out.push("Q must contain start and end".to_string());
        }
        for v in self.q.intersection(&self.q0) {
            out.push(format!("`{}` is in both Q and Q0", cfg.name(*v)));
        }
        for &(v, w) in &self.x {
            match stays_outside_reach(cfg, &analysis, v, w) {
                Err(e) => out.push(e.to_string()),
                Ok(reach) => {
                    if let Some(u) = reach.iter().find(|u| self.q.contains(u) || self.q0.contains(u)) {
                        out.push(format!(
                            "({}, {}) in X but `{}` is in Q ∪ Q0",
                            cfg.name(v),
                            cfg.name(w),
                            cfg.name(*u)
                        ));
                    }
                }
            }
        }
        out
    }
}

/// `(defined variables, referenced variables)` of node `v`.
pub fn def_ref(cfg: &Cfg, v: NodeId) -> (BTreeSet<String>, BTreeSet<String>) {
    let kind = cfg.kind(v);
    (kind.defs(), kind.refs())
}

/// Reaching definitions at the entry of every node, as `(defining node, variable)`.
fn reaching_definitions(cfg: &Cfg) -> Vec<BTreeSet<(NodeId, String)>> {
    let n = cfg.len();
    let mut inn: Vec<BTreeSet<(NodeId, String)>> = vec![BTreeSet::new(); n];
    let mut out: Vec<BTreeSet<(NodeId, String)>> = vec![BTreeSet::new(); n];
    let mut work: Vec<NodeId> = cfg.node_ids().collect();
    while let Some(v) = work.pop() {
        let entry: BTreeSet<(NodeId, String)> = cfg
            .preds(v)
            .flat_map(|p| out[p.0].iter().cloned())
            .collect();
        let defs = cfg.kind(v).defs();
        let mut exit: BTreeSet<(NodeId, String)> = entry
            .iter()
            .filter(|(_, var)| !defs.contains(var))
            .cloned()
            .collect();
        exit.extend(defs.into_iter().map(|var| (v, var)));
        inn[v.0] = entry;
        if exit != out[v.0] {
            out[v.0] = exit;
            work.extend(cfg.succs(v));
        }
    }
    inn
}

/// Branches `v` on which `w` is control dependent: `w` postdominates a
/// successor of `v` without strictly postdominating `v`.
fn control_parents(cfg: &Cfg, analysis: &Analysis, w: NodeId) -> Vec<NodeId> {
    cfg.node_ids()
        .filter(|&v| cfg.kind(v).is_branch())
        .filter(|&v| {
            let strictly = w != v && analysis.pdom.postdominates(w, v);
            !strictly && cfg.succs(v).any(|s| analysis.pdom.postdominates(w, s))
        })
        .collect()
}

/// Closes `set` under data dependence (uses of `w` reached by definitions)
/// and control dependence, never adding nodes of `exclude`. Uses at end
/// are `end_uses`.
fn close(
    cfg: &Cfg,
    analysis: &Analysis,
    rd: &[BTreeSet<(NodeId, String)>],
    mut set: BTreeSet<NodeId>,
    end_uses: &BTreeSet<String>,
    exclude: &BTreeSet<NodeId>,
) -> BTreeSet<NodeId> {
    let end = cfg.end();
    let mut work: Vec<NodeId> = set.iter().copied().collect();
    while let Some(w) = work.pop() {
        let uses = if w == end { end_uses.clone() } else { cfg.kind(w).refs() };
        let mut add: Vec<NodeId> = rd[w.0]
            .iter()
            .filter(|(_, var)| uses.contains(var))
            .map(|(v, _)| *v)
            .collect();
        add.extend(control_parents(cfg, analysis, w));
        for v in add {
            if !exclude.contains(&v) && set.insert(v) {
                work.push(v);
            }
        }
    }
    set
}

/// Least node set containing start and end that is closed under data
/// dependence (seeded by uses of `relevant` at end) and control dependence.
pub fn compute_q(cfg: &Cfg, analysis: &Analysis, relevant: &BTreeSet<String>) -> Result<BTreeSet<NodeId>> {
    if relevant.is_empty() {
        return Err(Error::Format("the relevant variable set is empty".into()));
    }
    if let Some(v) = relevant.iter().find(|v| !cfg.vars().contains_key(*v)) {
        return Err(Error::UnknownVariable(v.clone()));
    }
    let rd = reaching_definitions(cfg);
    let seeds = [cfg.start(), cfg.end()].into();
    Ok(close(cfg, analysis, &rd, seeds, relevant, &BTreeSet::new()))
}

/// Deterministic branches outside `q` that lie on a cycle, together with
/// the nodes outside `q` they depend on. Keeping those dependencies means a
/// loop kept in the modified source still sees the values that decide it.
pub fn compute_q0(cfg: &Cfg, analysis: &Analysis, q: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let seeds: BTreeSet<NodeId> = cfg
        .node_ids()
        .filter(|v| !q.contains(v))
        .filter(|&v| matches!(cfg.kind(v), NodeKind::DetBranch(_)))
        .filter(|&v| on_cycle(cfg, v))
        .collect();
    if seeds.is_empty() {
        return seeds;
    }
    let rd = reaching_definitions(cfg);
    close(cfg, analysis, &rd, seeds, &BTreeSet::new(), q)
}

fn on_cycle(cfg: &Cfg, v: NodeId) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<NodeId> = cfg.succs(v).collect();
    while let Some(u) = stack.pop() {
        if u == v {
            return true;
        }
        if seen.insert(u) {
            stack.extend(cfg.succs(u));
        }
    }
    false
}

/// Pairs `(v, w)` of the universe such that every node reachable from `v`
/// before `w` is outside `q ∪ q0`.
pub fn compute_x(
    cfg: &Cfg,
    analysis: &Analysis,
    q: &BTreeSet<NodeId>,
    q0: &BTreeSet<NodeId>,
) -> BTreeSet<(NodeId, NodeId)> {
    analysis
        .universe(cfg)
        .into_iter()
        .filter(|&(v, w)| {
            stays_outside_reach(cfg, analysis, v, w)
                .map(|reach| reach.iter().all(|u| !q.contains(u) && !q0.contains(u)))
                .unwrap_or(false)
        })
        .collect()
}

/// Replaces every node outside `keep` by `skip`; a removed branch is routed
/// to its immediate postdominator.
fn skip_outside(cfg: &Cfg, keep: &BTreeSet<NodeId>) -> (Vec<NodeKind>, Vec<Edge>) {
    let pdom = crate::graph::postdominators(cfg);
    let kinds = cfg
        .node_ids()
        .map(|v| {
            if keep.contains(&v) {
                cfg.kind(v).clone()
            } else {
                NodeKind::Skip
            }
        })
        .collect();
    let mut edges = Vec::new();
    let mut rerouted = BTreeSet::new();
    for e in cfg.edges() {
        if keep.contains(&e.from) || !cfg.kind(e.from).is_branch() {
            edges.push(*e);
        } else if rerouted.insert(e.from) {
            let to = pdom
                .ipdom(e.from)
                .expect("a branch is never the end node");
            edges.push(Edge {
                from: e.from,
                to,
                label: EdgeLabel::Seq,
            });
        }
    }
    (kinds, edges)
}

fn finish(cfg: Cfg) -> Result<Cfg> {
    let cfg = cfg.prune_unreachable();
    let violations = validate(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Invalid(violations))
    }
}

/// Target transform: keeps `q`, drops assignment components to variables
/// that are neither relevant nor read by a node of `q`, and turns every other
/// node into `skip`. The result declares only the kept variables; nodes that
/// become unreachable are removed.
pub fn slice(cfg: &Cfg, q: &BTreeSet<NodeId>, relevant: &BTreeSet<String>) -> Result<Cfg> {
    let mut kept: BTreeSet<String> = relevant.clone();
    for &v in q {
        kept.extend(cfg.kind(v).refs());
    }
    let (kinds, edges) = skip_outside(cfg, q);
    let kinds = kinds
        .into_iter()
        .map(|kind| match kind {
            NodeKind::Assign(items) => {
                let items: Vec<_> = items.into_iter().filter(|(x, _)| kept.contains(x)).collect();
                if items.is_empty() {
                    NodeKind::Skip
                } else {
                    NodeKind::Assign(items)
                }
            }
            NodeKind::RandomAssign(items) => {
                let items: Vec<_> = items.into_iter().filter(|(x, _)| kept.contains(x)).collect();
                if items.is_empty() {
                    NodeKind::Skip
                } else {
                    NodeKind::RandomAssign(items)
                }
            }
            other => other,
        })
        .collect();
    let vars: BTreeMap<_, _> = cfg
        .vars()
        .iter()
        .filter(|(v, _)| kept.contains(*v))
        .map(|(v, t)| (v.clone(), *t))
        .collect();
    let mut out = cfg.rebuild(vars, kinds, edges);
    out.relevant = relevant.clone();
    finish(out)
}

/// Refined-source transform: every node outside `q ∪ q0` becomes `skip`;
/// everything else, including declarations, is unchanged.
pub fn modify(cfg: &Cfg, q: &BTreeSet<NodeId>, q0: &BTreeSet<NodeId>) -> Result<Cfg> {
    let keep: BTreeSet<NodeId> = q.union(q0).copied().collect();
    let (kinds, edges) = skip_outside(cfg, &keep);
    finish(cfg.rebuild(cfg.vars().clone(), kinds, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::isomorphic;
    use crate::corpus;
    use crate::graph::back_edges;

    fn ids(cfg: &Cfg, names: &[&str]) -> BTreeSet<NodeId> {
        names.iter().map(|n| cfg.id(n).unwrap()).collect()
    }

    fn vars(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn def_ref_examples() {
        let cfg = corpus::ex1();
        let id = |n| cfg.id(n).unwrap();
        assert_eq!(def_ref(&cfg, id("asg")), (vars(&["p", "q"]), vars(&[])));
        assert_eq!(def_ref(&cfg, id("incq")), (vars(&["q"]), vars(&["q"])));
        assert_eq!(def_ref(&cfg, id("hb")), (vars(&[]), vars(&["h"])));
        assert_eq!(def_ref(&cfg, id("rnd")), (vars(&["b", "h"]), vars(&[])));
    }

    #[test]
    fn ex1_q_for_q() {
        let cfg = corpus::ex1();
        let a = Analysis::new(&cfg);
        let q = compute_q(&cfg, &a, &vars(&["q"])).unwrap();
        assert_eq!(q, ids(&cfg, &["start", "asg", "rnd", "bb", "incq", "randq", "end"]));
        assert_eq!(compute_q0(&cfg, &a, &q), ids(&cfg, &["hb"]));
    }

    #[test]
    fn ex1_q_for_p_and_q() {
        let cfg = corpus::ex1();
        let a = Analysis::new(&cfg);
        let q = compute_q(&cfg, &a, &vars(&["p", "q"])).unwrap();
        let mut all: BTreeSet<NodeId> = cfg.node_ids().collect();
        all.remove(&cfg.id("hb").unwrap());
        assert_eq!(q, all);
    }

    #[test]
    fn single_assignment_q() {
        let cfg = crate::dsl::parse_cfg(
            "vars int: x\nnode start : start\nnode a : assign x := 1\nnode end : end\nedge start -> a\nedge a -> end\n",
        )
        .unwrap();
        let a = Analysis::new(&cfg);
        assert_eq!(compute_q(&cfg, &a, &vars(&["x"])).unwrap(), ids(&cfg, &["start", "a", "end"]));
        assert!(compute_q0(&cfg, &a, &ids(&cfg, &["start", "a", "end"])).is_empty());
    }

    #[test]
    fn bad_relevant_sets() {
        let cfg = corpus::ex1();
        let a = Analysis::new(&cfg);
        assert!(matches!(compute_q(&cfg, &a, &vars(&["z"])), Err(Error::UnknownVariable(_))));
        assert!(compute_q(&cfg, &a, &vars(&[])).is_err());
    }

    #[test]
    fn target_has_no_q0() {
        let cfg = corpus::ex1_target();
        let a = Analysis::new(&cfg);
        let q = compute_q(&cfg, &a, &vars(&["q"])).unwrap();
        assert!(compute_q0(&cfg, &a, &q).is_empty());
    }

    #[test]
    fn ex1_x() {
        let cfg = corpus::ex1();
        let info = SliceInfo::build(&cfg, &vars(&["q"]), &Assumptions::default()).unwrap();
        let id = |n| cfg.id(n).unwrap();
        assert!(info.x.contains(&(id("incp"), cfg.end())));
        assert!(info.x.contains(&(id("randp"), cfg.end())));
        assert!(!info.x.contains(&(cfg.start(), cfg.end())));
        assert!(!info.x.contains(&(id("hb"), id("bb"))));
        for v in cfg.node_ids() {
            assert!(info.x.contains(&(v, v)));
        }
        assert!(info.problems(&cfg).is_empty());
    }

    #[test]
    fn everything_in_q_leaves_only_trivial_x() {
        let cfg = corpus::ex1();
        let names: BTreeSet<String> = cfg.nodes().iter().map(|n| n.name.clone()).collect();
        let assume = Assumptions {
            q: Some(names),
            ..Default::default()
        };
        let info = SliceInfo::build(&cfg, &vars(&["q"]), &assume).unwrap();
        assert_eq!(info.q_from, Provenance::UserSupplied);
        assert!(info.x.iter().all(|(v, w)| v == w));
        assert_eq!(info.x.len(), cfg.len());
    }

    #[test]
    fn slice_matches_target_fixture() {
        let cfg = corpus::ex1();
        let info = SliceInfo::build(&cfg, &vars(&["q"]), &Assumptions::default()).unwrap();
        let target = slice(&cfg, &info.q, &info.relevant).unwrap();
        assert!(isomorphic(&target, &corpus::ex1_target()), "{}", crate::dsl::print_cfg(&target));
        assert_eq!(target.vars().keys().cloned().collect::<BTreeSet<_>>(), vars(&["b", "q"]));

        let again_info = SliceInfo::build(&target, &vars(&["q"]), &Assumptions::default()).unwrap();
        let again = slice(&target, &again_info.q, &again_info.relevant).unwrap();
        assert!(isomorphic(&again, &target));
    }

    #[test]
    fn slice_with_everything_is_identity() {
        let cfg = corpus::ex1();
        let all: BTreeSet<NodeId> = cfg.node_ids().collect();
        let out = slice(&cfg, &all, &vars(&["b", "h", "p", "q"])).unwrap();
        assert!(isomorphic(&out, &cfg));
    }

    #[test]
    fn modify_matches_fixture() {
        let cfg = corpus::ex1();
        let info = SliceInfo::build(&cfg, &vars(&["q"]), &Assumptions::default()).unwrap();
        let m = modify(&cfg, &info.q, &info.q0).unwrap();
        assert!(isomorphic(&m, &corpus::ex1_modified()), "{}", crate::dsl::print_cfg(&m));
        let expect: BTreeSet<(NodeId, NodeId)> = [
            (m.id("hb").unwrap(), m.id("hb").unwrap()),
            (m.id("randq").unwrap(), m.id("incq").unwrap()),
        ]
        .into();
        assert_eq!(back_edges(&m), expect);

        let all: BTreeSet<NodeId> = cfg.node_ids().collect();
        assert_eq!(modify(&cfg, &all, &BTreeSet::new()).unwrap(), cfg.rebuild(cfg.vars().clone(), cfg.nodes().iter().map(|n| n.kind.clone()).collect(), cfg.edges().to_vec()));
    }

    #[test]
    fn forced_q_prunes_unreachable_body() {
        let cfg = corpus::unsound();
        let info = SliceInfo::build(&cfg, &cfg.relevant, &cfg.assumptions).unwrap();
        assert_eq!(info.q0, ids(&cfg, &["spin", "body"]));
        let target = slice(&cfg, &info.q, &info.relevant).unwrap();
        assert!(target.id("body").is_none());
        assert!(validate(&target).is_empty());
    }

    #[test]
    fn q0_keeps_what_its_loops_read() {
        let cfg = crate::dsl::parse_cfg(
            "vars int: y\nvars bool: go\nnode start : start\nnode seed : assign y := 1\n\
             node coin : rassign go ~ bernoulli(1/2)\nnode loop : branch go\n\
             node again : rassign go ~ bernoulli(1/2)\nnode end : end\n\
             edge start -> seed\nedge seed -> coin\nedge coin -> loop\nedge loop -T-> again\n\
             edge loop -F-> end\nedge again -> loop\nrelevant y\n",
        )
        .unwrap();
        let info = SliceInfo::build(&cfg, &cfg.relevant, &Assumptions::default()).unwrap();
        assert_eq!(info.q, ids(&cfg, &["start", "seed", "end"]));
        assert_eq!(info.q0, ids(&cfg, &["coin", "loop", "again"]));
        let m = modify(&cfg, &info.q, &info.q0).unwrap();
        let d = crate::Dist::point(crate::Store::new());
        assert_eq!(crate::semantics::iterand(&m, 8, m.start(), m.end(), &d).unwrap().mass(), crate::value::rat(255, 256));
    }
}

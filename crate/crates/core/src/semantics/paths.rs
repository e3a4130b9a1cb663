//! Path-enumeration oracle.
//!
//! Follows each store individually along every path, resolving branches and
//! random draws explicitly, and counting back-edge traversals against a
//! budget. It shares no code with the iterand recursion beyond expression
//! evaluation and the back-edge set.

use num_traits::One;

use crate::cfg::{Cfg, NodeId, NodeKind};
use crate::error::{Error, Result};
use crate::graph::Analysis;
use crate::value::{Rat, Store};

use super::Dist;

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

struct Walk {
    node: NodeId,
    store: Store,
    weight: Rat,
    budget: usize,
}

/// Distribution at `to` from all paths starting at `from` that use at most
/// `budget` back-edge traversals. Equals iterand `budget + 1`.
pub fn path_enum_oracle(
    cfg: &Cfg,
    budget: usize,
    from: NodeId,
    to: NodeId,
    d: &Dist,
    cap: usize,
) -> Result<Dist> {
    let analysis = Analysis::new(cfg);
    analysis.require_universe(cfg, from, to)?;
    enumerate(cfg, &analysis, budget, from, to, d, cap)
}

/// Distribution of stores on first arrival at `at` from `from`, over paths
/// with at most `budget` back-edge traversals. Unlike the oracle, `at` need
/// not postdominate `from`; paths that reach end first are dropped.
pub fn arrival(
    cfg: &Cfg,
    analysis: &Analysis,
    budget: usize,
    from: NodeId,
    at: NodeId,
    d: &Dist,
) -> Result<Dist> {
    enumerate(cfg, analysis, budget, from, at, d, DEFAULT_PATH_CAP)
}

fn enumerate(
    cfg: &Cfg,
    analysis: &Analysis,
    budget: usize,
    from: NodeId,
    to: NodeId,
    d: &Dist,
    cap: usize,
) -> Result<Dist> {
    let mut out = Dist::bottom();
    let mut paths = 0usize;
    let mut stack: Vec<Walk> = d
        .iter()
        .map(|(s, w)| Walk {
            node: from,
            store: s.clone(),
            weight: w.clone(),
            budget,
        })
        .collect();

    while let Some(walk) = stack.pop() {
        if walk.node == to {
            paths += 1;
            out.push(walk.store, walk.weight);
        } else if matches!(cfg.kind(walk.node), NodeKind::End) {
            paths += 1;
        } else {
            for (next, store, weight) in moves(cfg, walk.node, &walk.store)? {
                let back = analysis.is_back_edge(walk.node, next);
                if back && walk.budget == 0 {
                    paths += 1;
                    continue;
                }
                stack.push(Walk {
                    node: next,
                    store,
                    weight: &walk.weight * weight,
                    budget: walk.budget - usize::from(back),
                });
            }
        }
        if paths > cap {
            return Err(Error::PathCap(cap));
        }
    }
    Ok(out)
}

/// Every way control can leave `v` from `store`, with its probability.
fn moves(cfg: &Cfg, v: NodeId, store: &Store) -> Result<Vec<(NodeId, Store, Rat)>> {
    let name = cfg.name(v);
    let one = Rat::one;
    Ok(match cfg.kind(v) {
        NodeKind::End => Vec::new(),
        NodeKind::Start | NodeKind::Skip => {
            vec![(cfg.next(v).unwrap(), store.clone(), one())]
        }
        NodeKind::Assign(items) => {
            let mut next = store.clone();
            for (var, e) in items {
                next.set(var.clone(), e.eval(store).map_err(|e| e.at(name))?);
            }
            vec![(cfg.next(v).unwrap(), next, one())]
        }
        NodeKind::RandomAssign(items) => {
            let mut outcomes = vec![(store.clone(), one())];
            for (var, vd) in items {
                outcomes = outcomes
                    .into_iter()
                    .flat_map(|(s, w)| {
                        vd.0.iter().map(move |(value, p)| {
                            let mut s2 = s.clone();
                            s2.set(var.clone(), value.clone());
                            (s2, &w * p)
                        })
                    })
                    .collect();
            }
            let w = cfg.next(v).unwrap();
            outcomes.into_iter().map(|(s, p)| (w, s, p)).collect()
        }
        NodeKind::DetBranch(cond) => {
            let (t, f) = cfg.branch_targets(v).unwrap();
            let target = if cond.eval_bool(store).map_err(|e| e.at(name))? { t } else { f };
            vec![(target, store.clone(), one())]
        }
        NodeKind::ProbBranch(p) => {
            let (t, f) = cfg.branch_targets(v).unwrap();
            vec![
                (t, store.clone(), p.clone()),
                (f, store.clone(), one() - p),
            ]
        }
    })
}

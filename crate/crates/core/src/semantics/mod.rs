//! Exact distribution-transformer semantics.
//!
//! [`Engine::iterand`] computes the `k`-th Kleene approximation of the
//! transformer for a subprogram `(from, to)`, applied to a concrete initial
//! distribution. A path contributes to iterand `k` iff it traverses at most
//! `k - 1` back edges before first reaching `to`. Two independent
//! realizations exist for cross-checking: explicit path enumeration
//! ([`path_enum_oracle`]) and sampling ([`simulate`]).

mod dist;
mod paths;
mod simulate;

use num_traits::{One, Zero};

use crate::cfg::{Cfg, NodeId, NodeKind};
use crate::error::{Error, Result};
use crate::graph::Analysis;
use crate::value::{Rat, Store, Value};

pub use dist::{total_variation, Dist};
pub use paths::{arrival, path_enum_oracle, DEFAULT_PATH_CAP};
pub use simulate::{simulate, SimReport};

/// Result of pushing a distribution through one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Single(Dist),
    /// `(T part, F part)` of a branch.
    Split(Dist, Dist),
}

/// Applies the local effect of node `v` to `d`.
pub fn local_step(cfg: &Cfg, v: NodeId, d: &Dist) -> Result<Step> {
    let at = |e: Error| e.at(cfg.name(v));
    match cfg.kind(v) {
        NodeKind::End => Err(Error::Format(format!(
            "no local step at end node `{}`",
            cfg.name(v)
        ))),
        NodeKind::Start | NodeKind::Skip => Ok(Step::Single(d.clone())),
        NodeKind::Assign(items) => {
            let mut out = Dist::bottom();
            for (s, w) in d {
                let mut next = s.clone();
                for (var, e) in items {
                    next.set(var.clone(), e.eval(s).map_err(at)?);
                }
                out.push(next, w.clone());
            }
            Ok(Step::Single(out))
        }
        NodeKind::RandomAssign(items) => {
            let mut partial: Vec<(Store, Rat)> = d.iter().map(|(s, w)| (s.clone(), w.clone())).collect();
            for (var, vd) in items {
                let mut next = Vec::with_capacity(partial.len() * vd.0.len());
                for (s, w) in &partial {
                    for (value, p) in &vd.0 {
                        let mut s2 = s.clone();
                        s2.set(var.clone(), value.clone());
                        next.push((s2, w * p));
                    }
                }
                partial = next;
            }
            Ok(Step::Single(partial.into_iter().collect()))
        }
        NodeKind::DetBranch(cond) => {
            let mut t = Dist::bottom();
            let mut f = Dist::bottom();
            for (s, w) in d {
                if cond.eval_bool(s).map_err(at)? {
                    t.push(s.clone(), w.clone());
                } else {
                    f.push(s.clone(), w.clone());
                }
            }
            Ok(Step::Split(t, f))
        }
        NodeKind::ProbBranch(p) => Ok(Step::Split(d.scale(p), d.scale(&(Rat::one() - p)))),
    }
}

/// Iterand evaluator bound to one graph, caching its structural analysis.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    cfg: &'a Cfg,
    analysis: Analysis,
}

impl<'a> Engine<'a> {
    pub fn new(cfg: &'a Cfg) -> Self {
        Engine {
            cfg,
            analysis: Analysis::new(cfg),
        }
    }

    pub fn cfg(&self) -> &'a Cfg {
        self.cfg
    }

    pub fn analysis(&self) -> &Analysis {
        &self.analysis
    }

    /// `F^k(⊥)(from, to)(d)`.
    pub fn iterand(&self, k: usize, from: NodeId, to: NodeId, d: &Dist) -> Result<Dist> {
        self.analysis.require_universe(self.cfg, from, to)?;
        if !self.analysis.reducible {
            return Err(Error::Format("iterands need a reducible graph".into()));
        }
        self.iter(k, from, to, d.clone())
    }

    fn iter(&self, k: usize, v: NodeId, to: NodeId, d: Dist) -> Result<Dist> {
        if k == 0 || d.is_bottom() {
            return Ok(Dist::bottom());
        }
        if v == to {
            return Ok(d);
        }
        if matches!(self.cfg.kind(v), NodeKind::End) {
            return Ok(Dist::bottom());
        }
        let budget = |w: NodeId| if self.analysis.is_back_edge(v, w) { k - 1 } else { k };
        match local_step(self.cfg, v, &d)? {
            Step::Single(next) => {
                let w = self.cfg.next(v).expect("validated node has one successor");
                self.iter(budget(w), w, to, next)
            }
            Step::Split(dt, df) => {
                let (wt, wf) = self
                    .cfg
                    .branch_targets(v)
                    .expect("validated branch has T and F successors");
                let t = self.iter(budget(wt), wt, to, dt)?;
                let f = self.iter(budget(wf), wf, to, df)?;
                t.add(&f)
            }
        }
    }

    /// Iterands `0..=max_k` for `(from, to)` applied to `d`.
    pub fn iterate_to(&self, max_k: usize, from: NodeId, to: NodeId, d: &Dist) -> Result<IterandTable> {
        let entries = (0..=max_k)
            .map(|k| self.iterand(k, from, to, d))
            .collect::<Result<Vec<_>>>()?;
        let table = IterandTable {
            from: self.cfg.name(from).to_string(),
            to: self.cfg.name(to).to_string(),
            initial: d.clone(),
            entries,
        };
        debug_assert!(table.entries.windows(2).all(|w| w[0].leq(&w[1])));
        Ok(table)
    }
}

/// `F^k(⊥)(from, to)(d)` on `cfg`.
pub fn iterand(cfg: &Cfg, k: usize, from: NodeId, to: NodeId, d: &Dist) -> Result<Dist> {
    Engine::new(cfg).iterand(k, from, to, d)
}

/// Iterands `0..=max_k` for one subprogram and initial distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterandTable {
    pub from: String,
    pub to: String,
    pub initial: Dist,
    /// `entries[k]` is iterand `k`; `entries[0]` is ⊥.
    pub entries: Vec<Dist>,
}

impl IterandTable {
    pub fn max_k(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }
}

/// A distribution binding every declared variable, with two stores of
/// different weights. Useful as a generic initial distribution at interior
/// nodes.
pub fn probe_dist(cfg: &Cfg) -> Dist {
    let mut a = Store::new();
    let mut b = Store::new();
    for (i, (var, ty)) in cfg.vars().iter().enumerate() {
        match ty {
            crate::value::Type::Int => {
                a.set(var.clone(), Value::int(0));
                b.set(var.clone(), Value::int(1 + i as i64));
            }
            crate::value::Type::Bool => {
                a.set(var.clone(), Value::Bool(false));
                b.set(var.clone(), Value::Bool(true));
            }
        }
    }
    if a == b {
        return Dist::point(a).scale(&Rat::new(3.into(), 4.into()));
    }
    [(a, Rat::new(1.into(), 2.into())), (b, Rat::new(1.into(), 3.into()))]
        .into_iter()
        .collect()
}

impl Dist {
    /// Mass divided by the mass of `reference`, or zero when `self` is ⊥.
    pub fn mass_ratio(&self, reference: &Dist) -> Option<Rat> {
        let m = reference.mass();
        if m.is_zero() {
            None
        } else {
            Some(self.mass() / m)
        }
    }
}

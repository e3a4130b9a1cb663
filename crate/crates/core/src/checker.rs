//! Finite, exact evidence that a slice is correct.
//!
//! The correctness relation asks that the source distribution be a constant
//! multiple of the target distribution. Source and target stores bind
//! different variables, so every comparison here is made on distributions
//! projected to the relevant variables `V`.
//!
//! [`full_check`] runs the whole pipeline: it computes `Q`, `Q0` and `X`
//! (or takes them from overrides), slices and modifies the source, computes
//! iterands `0..=K` on all three graphs and aggregates the verdicts into a
//! [`CheckReport`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::cfg::{Assumptions, Cfg, NodeId};
use crate::error::{Error, Result};
use crate::semantics::{arrival, Dist, Engine, IterandTable};
use crate::slicer::{self, Provenance, SliceInfo};
use crate::value::{fmt_rat, pow2_inv, serialize_rat, Rat, Store};

pub const SCHEMA: &str = "probslice/1";

/// Back-edge budget used to build the distribution at the start of an `X`
/// segment from the initial distribution.
const ARRIVAL_BUDGET: usize = 1;

fn ser_opt_rat<S: serde::Serializer>(r: &Option<Rat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&fmt_rat(r)),
        None => s.serialize_none(),
    }
}

fn ser_rats<S: serde::Serializer>(rs: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(rs.iter().map(fmt_rat))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RatioVerdict {
    Exact {
        #[serde(serialize_with = "serialize_rat")]
        c: Rat,
    },
    /// Both sides are ⊥; the constant is taken to be 1.
    ZeroBoth,
    Mismatch {
        store: Store,
        #[serde(serialize_with = "serialize_rat")]
        lhs: Rat,
        #[serde(serialize_with = "serialize_rat")]
        rhs: Rat,
    },
}

impl RatioVerdict {
    /// The constant, with 1 for `ZeroBoth`.
    pub fn constant(&self) -> Option<Rat> {
        match self {
            RatioVerdict::Exact { c } => Some(c.clone()),
            RatioVerdict::ZeroBoth => Some(Rat::one()),
            RatioVerdict::Mismatch { .. } => None,
        }
    }

    pub fn is_mismatch(&self) -> bool {
        matches!(self, RatioVerdict::Mismatch { .. })
    }
}

/// Decides whether `lhs = c · rhs` for some constant `c`.
///
/// `c` is read off the first store of `rhs` and then verified on the union
/// of both supports, so a mismatch witness is always the first offending
/// store in store order.
pub fn find_ratio(lhs: &Dist, rhs: &Dist) -> RatioVerdict {
    let Some((s0, r0)) = rhs.iter().next() else {
        return match lhs.iter().next() {
            None => RatioVerdict::ZeroBoth,
            Some((s, w)) => RatioVerdict::Mismatch {
                store: s.clone(),
                lhs: w.clone(),
                rhs: Rat::zero(),
            },
        };
    };
    let c = lhs.get(s0) / r0;
    let support: BTreeSet<&Store> = lhs.stores().chain(rhs.stores()).collect();
    for s in support {
        let (l, r) = (lhs.get(s), rhs.get(s));
        if l != &c * &r {
            return RatioVerdict::Mismatch {
                store: s.clone(),
                lhs: l,
                rhs: r,
            };
        }
    }
    RatioVerdict::Exact { c }
}

/// A pointwise-order failure: `lhs(store) > rhs(store)` at iteration `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderViolation {
    pub k: usize,
    pub store: Store,
    #[serde(serialize_with = "serialize_rat")]
    pub lhs: Rat,
    #[serde(serialize_with = "serialize_rat")]
    pub rhs: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainVerdict {
    pub graph: String,
    pub pass: bool,
    pub violation: Option<OrderViolation>,
}

/// Checks `entries[k] ⊑ entries[k + 1]` for every `k`.
pub fn check_chain(table: &IterandTable) -> ChainVerdict {
    let violation = table.entries.windows(2).enumerate().find_map(|(k, w)| {
        w[0].leq_witness(&w[1]).map(|(store, lhs, rhs)| OrderViolation { k, store, lhs, rhs })
    });
    ChainVerdict {
        graph: String::new(),
        pass: violation.is_none(),
        violation,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LockstepRow {
    pub k: usize,
    pub verdict: RatioVerdict,
    #[serde(serialize_with = "serialize_rat")]
    pub source_mass: Rat,
    #[serde(serialize_with = "serialize_rat")]
    pub target_mass: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lockstep {
    /// Which source graph was compared: `"modified"` or `"source"`.
    pub against: String,
    pub rows: Vec<LockstepRow>,
    /// The common constant of all `Exact` rows, when they agree.
    #[serde(serialize_with = "ser_opt_rat")]
    pub constant: Option<Rat>,
    /// All `Exact` rows share one constant.
    pub uniform: bool,
    pub mismatches: usize,
    pub pass: bool,
}

/// Restriction of every store of `d` to the variables declared by `cfg`.
pub fn restrict_to(cfg: &Cfg, d: &Dist) -> Dist {
    let vars: BTreeSet<String> = cfg.vars().keys().cloned().collect();
    d.project(&vars)
}

fn require_declared(cfg: &Cfg, d: &Dist) -> Result<()> {
    match d.vars().into_iter().find(|v| !cfg.vars().contains_key(v)) {
        Some(v) => Err(Error::UnknownVariable(v)),
        None => Ok(()),
    }
}

/// Compares projected iterands `k = 0..=K` of `source` (normally the
/// modified source) and `target` at `(start, end)`.
pub fn check_lockstep(source: &Cfg, target: &Cfg, relevant: &BTreeSet<String>, d: &Dist, k: usize) -> Result<Lockstep> {
    require_declared(source, d)?;
    if let Some(v) = relevant.iter().find(|v| !target.vars().contains_key(*v)) {
        return Err(Error::UnknownVariable(v.clone()));
    }
    let s = Engine::new(source).iterate_to(k, source.start(), source.end(), d)?;
    let t = Engine::new(target).iterate_to(k, target.start(), target.end(), &restrict_to(target, d))?;
    Ok(lockstep_from_tables(&s, &t, relevant, "modified"))
}

fn lockstep_from_tables(s: &IterandTable, t: &IterandTable, relevant: &BTreeSet<String>, against: &str) -> Lockstep {
    let rows: Vec<LockstepRow> = s
        .entries
        .iter()
        .zip(&t.entries)
        .enumerate()
        .map(|(k, (a, b))| {
            let (a, b) = (a.project(relevant), b.project(relevant));
            LockstepRow {
                k,
                verdict: find_ratio(&a, &b),
                source_mass: a.mass(),
                target_mass: b.mass(),
            }
        })
        .collect();
    let exact: BTreeSet<&Rat> = rows
        .iter()
        .filter_map(|r| match &r.verdict {
            RatioVerdict::Exact { c } => Some(c),
            _ => None,
        })
        .collect();
    let mismatches = rows.iter().filter(|r| r.verdict.is_mismatch()).count();
    let uniform = exact.len() <= 1;
    Lockstep {
        against: against.to_string(),
        constant: if exact.len() == 1 { exact.into_iter().next().cloned() } else { None },
        uniform,
        mismatches,
        pass: mismatches == 0,
        rows,
    }
}

/// Per-pair evidence for the fixed-point conditions on `X`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SegmentVerdict {
    pub from: String,
    pub to: String,
    pub loop_free_modified: bool,
    pub loop_free_target: bool,
    /// Iterands `1..=K` coincide on the modified source.
    pub constant_modified: bool,
    /// Iterands `1..=K` coincide on the target.
    pub constant_target: bool,
    #[serde(serialize_with = "ser_rats")]
    pub source_masses: Vec<Rat>,
    pub source_monotone: bool,
    /// Every source mass is at most the modified-source mass.
    pub source_bounded: bool,
    pub note: Option<String>,
    pub pass: bool,
}

fn constant_from_one(engine: &Engine, k: usize, v: NodeId, w: NodeId, d: &Dist) -> Result<(bool, Dist)> {
    let first = engine.iterand(1, v, w, d)?;
    for j in 2..=k {
        if engine.iterand(j, v, w, d)? != first {
            return Ok((false, first));
        }
    }
    Ok((true, first))
}

/// Operational witnesses, per non-trivial pair of `X`, that the modified
/// source and the target reach their fixed point after one unfolding there,
/// and that the source approaches it from below.
///
/// The distribution at `v` is the normalized first-arrival distribution of
/// `d` at `v` in the source; it is projected for the target.
pub fn check_segment_conditions(
    source: &Cfg,
    modified: &Cfg,
    target: &Cfg,
    x: &BTreeSet<(NodeId, NodeId)>,
    d: &Dist,
    k: usize,
) -> Result<Vec<SegmentVerdict>> {
    let src = Engine::new(source);
    let m_engine = Engine::new(modified);
    let t_engine = Engine::new(target);
    let mut out = Vec::new();
    for &(v, w) in x {
        if v == w {
            continue;
        }
        src.analysis().require_universe(source, v, w)?;
        let (vn, wn) = (source.name(v), source.name(w));
        let mut verdict = SegmentVerdict {
            from: vn.to_string(),
            to: wn.to_string(),
            loop_free_modified: true,
            loop_free_target: true,
            constant_modified: true,
            constant_target: true,
            source_masses: Vec::new(),
            source_monotone: true,
            source_bounded: true,
            note: None,
            pass: true,
        };
        let at = arrival(source, src.analysis(), ARRIVAL_BUDGET, source.start(), v, d)?;
        if at.is_bottom() {
            verdict.note = Some(format!("`{vn}` not reached from start within the probe budget; vacuous"));
            out.push(verdict);
            continue;
        }
        let dx = at.scale(&(Rat::one() / at.mass()));

        let mut notes = Vec::new();
        let mut bound = None;
        match (modified.id(vn), modified.id(wn)) {
            (Some(mv), Some(mw)) => {
                verdict.loop_free_modified = m_engine.analysis().loop_free_between(modified, mv, mw)?;
                let (constant, first) = constant_from_one(&m_engine, k, mv, mw, &dx)?;
                verdict.constant_modified = constant;
                bound = Some(first.mass());
            }
            _ => notes.push("pruned from the modified source as unreachable"),
        }
        match (target.id(vn), target.id(wn)) {
            (Some(tv), Some(tw)) => {
                verdict.loop_free_target = t_engine.analysis().loop_free_between(target, tv, tw)?;
                let dt = restrict_to(target, &dx);
                verdict.constant_target = constant_from_one(&t_engine, k, tv, tw, &dt)?.0;
            }
            _ => notes.push("pruned from the target as unreachable"),
        }
        if !notes.is_empty() {
            verdict.note = Some(notes.join("; "));
        }

        let masses = (1..=k)
            .map(|j| src.iterand(j, v, w, &dx).map(|r| r.mass()))
            .collect::<Result<Vec<_>>>()?;
        verdict.source_monotone = masses.windows(2).all(|p| p[0] <= p[1]);
        verdict.source_bounded = bound.is_none_or(|cap| masses.iter().all(|m| *m <= cap));
        verdict.source_masses = masses;
        verdict.pass = verdict.loop_free_modified
            && verdict.loop_free_target
            && verdict.constant_modified
            && verdict.constant_target
            && verdict.source_monotone
            && verdict.source_bounded;
        out.push(verdict);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatioSequence {
    pub graph: String,
    pub from: String,
    pub to: String,
    /// `values[i]` is `c_{i+1}`.
    #[serde(serialize_with = "ser_rats")]
    pub values: Vec<Rat>,
    #[serde(serialize_with = "serialize_rat")]
    pub tolerance: Rat,
    /// `|c_K - c_{K-1}|`, absent when `K < 2`.
    #[serde(serialize_with = "ser_opt_rat")]
    pub last_step: Option<Rat>,
    pub converged: bool,
}

/// Default convergence tolerance `2^-(K-2)`, or 1 for `K <= 2`.
pub fn default_tolerance(k: usize) -> Rat {
    if k <= 2 {
        Rat::one()
    } else {
        pow2_inv((k - 2) as u32)
    }
}

/// Convergence test on a ratio sequence: `|c_K - c_{K-1}| <= tolerance`.
/// Returns the last step (absent for fewer than two values) and the verdict.
/// No monotonicity is required.
pub fn converged(values: &[Rat], tolerance: &Rat) -> (Option<Rat>, bool) {
    let last_step = match values {
        [.., a, b] => Some(if b >= a { b - a } else { a - b }),
        _ => None,
    };
    let ok = last_step.as_ref().is_none_or(|s| s <= tolerance);
    (last_step, ok)
}

/// `c_k = mass(iterand k) / mass(d)` for `k = 1..=K`. Convergence only
/// looks at the last step; the sequence need not be monotone.
pub fn ratio_sequence(cfg: &Cfg, v: NodeId, w: NodeId, d: &Dist, k: usize, tolerance: Option<Rat>) -> Result<RatioSequence> {
    if d.mass().is_zero() {
        return Err(Error::ZeroMass);
    }
    let engine = Engine::new(cfg);
    let values = (1..=k)
        .map(|j| {
            let it = engine.iterand(j, v, w, d)?;
            Ok(it.mass_ratio(d).unwrap_or_else(Rat::zero))
        })
        .collect::<Result<Vec<_>>>()?;
    let tolerance = tolerance.unwrap_or_else(|| default_tolerance(k));
    let (last_step, converged) = converged(&values, &tolerance);
    Ok(RatioSequence {
        graph: String::new(),
        from: cfg.name(v).to_string(),
        to: cfg.name(w).to_string(),
        values,
        tolerance,
        last_step,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SliceSummary {
    pub q: Vec<String>,
    pub q0: Vec<String>,
    pub x: Vec<(String, String)>,
    pub q_from: Provenance,
    pub q0_from: Provenance,
    pub x_from: Provenance,
    pub problems: Vec<String>,
}

impl SliceSummary {
    fn new(cfg: &Cfg, info: &SliceInfo) -> Self {
        SliceSummary {
            q: cfg.names(&info.q),
            q0: cfg.names(&info.q0),
            x: info
                .x
                .iter()
                .map(|&(a, b)| (cfg.name(a).to_string(), cfg.name(b).to_string()))
                .collect(),
            q_from: info.q_from,
            q0_from: info.q0_from,
            x_from: info.x_from,
            problems: info.problems(cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sandwich {
    pub pass: bool,
    pub violation: Option<OrderViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    pub k: usize,
    pub assume: Assumptions,
    /// Compare the unmodified source with the target.
    pub no_modify: bool,
    pub tolerance: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub schema: &'static str,
    pub relevant: Vec<String>,
    pub k: usize,
    pub initial: Dist,
    pub slice: SliceSummary,
    pub chains: Vec<ChainVerdict>,
    /// `proj φ_k ⊑ proj φ'_k` for every `k`.
    pub sandwich: Sandwich,
    pub lockstep: Lockstep,
    /// Operational witnesses for the fixed-point conditions on `X`.
    pub segments: Vec<SegmentVerdict>,
    pub ratios: Vec<RatioSequence>,
    pub admissibility: Admissibility,
    pub notes: Vec<String>,
    pub pass: bool,
}

/// [`check`] with default options except `K` and the overrides.
pub fn full_check(source: &Cfg, relevant: &BTreeSet<String>, d: &Dist, k: usize, overrides: &Assumptions) -> Result<CheckReport> {
    check(
        source,
        relevant,
        d,
        &CheckOptions {
            k,
            assume: overrides.clone(),
            ..Default::default()
        },
    )
}

pub fn check(source: &Cfg, relevant: &BTreeSet<String>, d: &Dist, opts: &CheckOptions) -> Result<CheckReport> {
    require_declared(source, d)?;
    let k = opts.k;
    let info = SliceInfo::build(source, relevant, &opts.assume)?;
    let target = slicer::slice(source, &info.q, relevant)?;
    let modified = slicer::modify(source, &info.q, &info.q0)?;
    let dt = restrict_to(&target, d);

    let table = |cfg: &Cfg, d: &Dist| Engine::new(cfg).iterate_to(k, cfg.start(), cfg.end(), d);
    let src_t = table(source, d)?;
    let mod_t = table(&modified, d)?;
    let tgt_t = table(&target, &dt)?;

    let chains = [("source", &src_t), ("modified", &mod_t), ("target", &tgt_t)]
        .into_iter()
        .map(|(g, t)| ChainVerdict {
            graph: g.to_string(),
            ..check_chain(t)
        })
        .collect::<Vec<_>>();

    let violation = src_t.entries.iter().zip(&mod_t.entries).enumerate().find_map(|(j, (a, b))| {
        a.project(relevant)
            .leq_witness(&b.project(relevant))
            .map(|(store, lhs, rhs)| OrderViolation { k: j, store, lhs, rhs })
    });
    let sandwich = Sandwich {
        pass: violation.is_none(),
        violation,
    };

    let lockstep = if opts.no_modify {
        lockstep_from_tables(&src_t, &tgt_t, relevant, "source")
    } else {
        lockstep_from_tables(&mod_t, &tgt_t, relevant, "modified")
    };

    let segments = check_segment_conditions(source, &modified, &target, &info.x, d, k)?;

    let mut ratios = Vec::new();
    for (name, cfg, dd) in [("source", source, d), ("target", &target, &dt)] {
        if !dd.mass().is_zero() {
            ratios.push(RatioSequence {
                graph: name.to_string(),
                ..ratio_sequence(cfg, cfg.start(), cfg.end(), dd, k, opts.tolerance.clone())?
            });
        }
    }

    let admissibility = Admissibility {
        pass: lockstep.uniform && ratios.iter().all(|r| r.converged),
        note: "finite proxy: one lockstep constant at every k and converging ratio sequences".into(),
    };

    let mut notes = vec![
        "ratios compare distributions projected to the relevant variables".to_string(),
        "segment checks are operational witnesses: loop freedom and k-independence of the modified source and target".to_string(),
    ];
    if opts.no_modify {
        notes.push("lockstep compares the unmodified source with the target".into());
    }
    if !lockstep.uniform {
        notes.push("lockstep constants differ between iterations".into());
    }

    let slice = SliceSummary::new(source, &info);
    let pass = slice.problems.is_empty()
        && chains.iter().all(|c| c.pass)
        && sandwich.pass
        && lockstep.pass
        && segments.iter().all(|s| s.pass)
        && admissibility.pass;
    Ok(CheckReport {
        schema: SCHEMA,
        relevant: relevant.iter().cloned().collect(),
        k,
        initial: d.clone(),
        slice,
        chains,
        sandwich,
        lockstep,
        segments,
        ratios,
        admissibility,
        notes,
        pass,
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable rendering.
    pub fn render_table(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "relevant: {}    K = {}", self.relevant.join(", "), self.k);
        let _ = writeln!(o, "Q  = {} ({:?})", self.slice.q.join(" "), self.slice.q_from);
        let _ = writeln!(o, "Q0 = {} ({:?})", self.slice.q0.join(" "), self.slice.q0_from);
        let nontrivial: Vec<String> = self
            .slice
            .x
            .iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| format!("({a},{b})"))
            .collect();
        let _ = writeln!(o, "X  = {} plus (v,v) ({:?})", nontrivial.join(" "), self.slice.x_from);
        for p in &self.slice.problems {
            let _ = writeln!(o, "  problem: {p}");
        }
        let _ = writeln!(o);
        let _ = writeln!(o, "lockstep ({} vs target, projected):", self.lockstep.against);
        let _ = writeln!(o, "  {:>3}  {:<12} {:<12} verdict", "k", "lhs mass", "rhs mass");
        for r in &self.lockstep.rows {
            let verdict = match &r.verdict {
                RatioVerdict::Exact { c } => format!("c = {}", fmt_rat(c)),
                RatioVerdict::ZeroBoth => "both empty (c = 1)".into(),
                RatioVerdict::Mismatch { store, lhs, rhs } => {
                    format!(
                        "MISMATCH at {store}: lhs {} rhs {} (ratio differs from the first rhs store)",
                        fmt_rat(lhs),
                        fmt_rat(rhs)
                    )
                }
            };
            let _ = writeln!(
                o,
                "  {:>3}  {:<12} {:<12} {verdict}",
                r.k,
                fmt_rat(&r.source_mass),
                fmt_rat(&r.target_mass)
            );
        }
        if let Some(c) = &self.lockstep.constant {
            let _ = writeln!(o, "  constant: {}", fmt_rat(c));
        }
        let _ = writeln!(o);
        for c in &self.chains {
            let _ = writeln!(o, "chain {:<9} {}", c.graph, mark(c.pass));
        }
        let _ = writeln!(o, "sandwich        {}", mark(self.sandwich.pass));
        for s in &self.segments {
            let _ = writeln!(
                o,
                "segment ({},{}) {}  loop-free {}/{}  constant {}/{}  source masses [{}]{}",
                s.from,
                s.to,
                mark(s.pass),
                s.loop_free_modified,
                s.loop_free_target,
                s.constant_modified,
                s.constant_target,
                s.source_masses.iter().map(fmt_rat).collect::<Vec<_>>().join(", "),
                s.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
            );
        }
        for r in &self.ratios {
            let _ = writeln!(
                o,
                "ratios {:<8} [{}]  last step {}  {}",
                r.graph,
                r.values.iter().map(fmt_rat).collect::<Vec<_>>().join(", "),
                r.last_step.as_ref().map(fmt_rat).unwrap_or_else(|| "-".into()),
                mark(r.converged)
            );
        }
        let _ = writeln!(o, "admissibility   {}  ({})", mark(self.admissibility.pass), self.admissibility.note);
        for n in &self.notes {
            let _ = writeln!(o, "note: {n}");
        }
        let _ = writeln!(o, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::value::rat;

    fn names(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn point() -> Dist {
        Dist::point(Store::new())
    }

    fn row(b: bool, q: i64) -> Store {
        Store::new().with("b", b).with("q", q)
    }

    #[test]
    fn find_ratio_cases() {
        let t: Dist = [(row(true, 0), rat(1, 2)), (row(false, 1), rat(1, 4))].into_iter().collect();
        assert_eq!(find_ratio(&t.scale(&rat(1, 2)), &t), RatioVerdict::Exact { c: rat(1, 2) });
        assert_eq!(find_ratio(&Dist::bottom(), &Dist::bottom()), RatioVerdict::ZeroBoth);
        let l: Dist = [(row(false, 0), rat(1, 4))].into_iter().collect();
        let r: Dist = [(row(false, 0), rat(1, 4)), (row(true, 1), rat(1, 8))].into_iter().collect();
        assert!(matches!(find_ratio(&l, &r), RatioVerdict::Mismatch { store, .. } if store == row(true, 1)));
        assert!(find_ratio(&l, &Dist::bottom()).is_mismatch());
    }

    #[test]
    fn lockstep_modified_is_half() {
        let ls = check_lockstep(&corpus::ex1_modified(), &corpus::ex1_target(), &names(&["q"]), &point(), 6).unwrap();
        assert_eq!(ls.rows[0].verdict, RatioVerdict::ZeroBoth);
        for r in &ls.rows[1..] {
            assert_eq!(r.verdict, RatioVerdict::Exact { c: rat(1, 2) }, "k={}", r.k);
        }
        assert!(ls.uniform && ls.pass);
        assert_eq!(ls.constant, Some(rat(1, 2)));
    }

    #[test]
    fn lockstep_unsliced_source_fails_at_one() {
        let ls = check_lockstep(&corpus::ex1(), &corpus::ex1_target(), &names(&["b", "q"]), &point(), 2).unwrap();
        assert!(ls.rows[1].verdict.is_mismatch());
        assert!(!ls.pass);
    }

    #[test]
    fn chain_violation_is_found() {
        let cfg = corpus::ex1();
        let mut t = Engine::new(&cfg).iterate_to(3, cfg.start(), cfg.end(), &point()).unwrap();
        assert!(check_chain(&t).pass);
        t.entries.swap(0, 1);
        assert_eq!(check_chain(&t).violation.unwrap().k, 0);
    }

    #[test]
    fn ratio_sequences_on_ex1() {
        let cfg = corpus::ex1();
        let r = ratio_sequence(&cfg, cfg.start(), cfg.end(), &point(), 6, None).unwrap();
        for (i, c) in r.values.iter().enumerate() {
            let k = i as u32 + 1;
            assert_eq!(*c, rat(1, 2) - pow2_inv(k + 1));
        }
        assert_eq!(r.last_step, Some(pow2_inv(7)));
        assert!(r.converged);
        let t = corpus::ex1_target();
        let r = ratio_sequence(&t, t.start(), t.end(), &point(), 6, None).unwrap();
        assert_eq!(r.values[5], Rat::one() - pow2_inv(7));
        assert!(matches!(
            ratio_sequence(&cfg, cfg.start(), cfg.end(), &Dist::bottom(), 3, None),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn segment_incp_end() {
        let cfg = corpus::ex1();
        let id = |n| cfg.id(n).unwrap();
        let x: BTreeSet<_> = [(id("incp"), cfg.end())].into();
        let v = check_segment_conditions(&cfg, &corpus::ex1_modified(), &corpus::ex1_target(), &x, &point(), 6).unwrap();
        assert_eq!(v.len(), 1);
        let s = &v[0];
        assert!(s.pass, "{s:?}");
        for (i, m) in s.source_masses.iter().enumerate() {
            assert_eq!(*m, Rat::one() - pow2_inv(i as u32 + 1));
        }
    }

    #[test]
    fn full_check_ex1() {
        let cfg = corpus::ex1();
        let r = full_check(&cfg, &names(&["q"]), &point(), 6, &Assumptions::default()).unwrap();
        assert!(r.pass, "{}", r.render_table());
        assert_eq!(r.lockstep.constant, Some(rat(1, 2)));
        let r = full_check(&cfg, &names(&["p", "q"]), &point(), 6, &Assumptions::default()).unwrap();
        assert!(r.pass, "{}", r.render_table());
        assert_eq!(r.lockstep.constant, Some(rat(1, 2)));
    }

    #[test]
    fn no_modify_reports_mismatch() {
        let cfg = corpus::ex1();
        let opts = CheckOptions {
            k: 2,
            no_modify: true,
            ..Default::default()
        };
        let r = check(&cfg, &names(&["q"]), &point(), &opts).unwrap();
        assert!(!r.pass);
        assert!(r.lockstep.rows[1].verdict.is_mismatch());
    }

    #[test]
    fn forced_unsound_slice_is_caught() {
        let cfg = corpus::unsound();
        let r = full_check(&cfg, &cfg.relevant.clone(), &point(), 4, &cfg.assumptions).unwrap();
        assert!(!r.pass);
        assert!(r.lockstep.mismatches > 0, "{}", r.render_table());
    }

    #[test]
    fn report_json_has_schema() {
        let cfg = corpus::ex1();
        let r = full_check(&cfg, &names(&["q"]), &point(), 2, &Assumptions::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["lockstep"]["constant"], "1/2");
    }

    #[test]
    fn drifting_constant_is_flagged() {
        // A kept deterministic loop that exits with probability 1/2 per pass
        // has no counterpart in the target, so the per-k constant drifts.
        let cfg = crate::dsl::parse_cfg(
            "vars int: y\nvars bool: go\nnode start : start\nnode seed : assign y := 1\n\
             node coin : rassign go ~ bernoulli(1/2)\nnode loop : branch go\n\
             node again : rassign go ~ bernoulli(1/2)\nnode end : end\n\
             edge start -> seed\nedge seed -> coin\nedge coin -> loop\nedge loop -T-> again\n\
             edge loop -F-> end\nedge again -> loop\nrelevant y\n",
        )
        .unwrap();
        let r = full_check(&cfg, &names(&["y"]), &point(), 4, &Assumptions::default()).unwrap();
        assert!(r.lockstep.pass, "no row mismatches");
        assert!(!r.lockstep.uniform);
        assert_eq!(r.lockstep.constant, None);
        assert!(!r.admissibility.pass && !r.pass);
        assert!(r.notes.iter().any(|n| n.contains("differ")));
    }
}

//! Monte Carlo execution.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfg::{Cfg, NodeKind, ValueDist};
use crate::error::{Error, Result};
use crate::value::{Rat, Store, Value};

use super::Dist;

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub samples: u64,
    pub seed: u64,
    pub max_steps: u64,
    /// Runs whose initial store was not drawn (initial mass below 1).
    pub void_runs: u64,
    /// Runs that had not reached end after `max_steps` steps.
    pub timed_out: u64,
    /// Frequency of each end store, divided by `samples`.
    pub empirical: Dist,
    /// Standard error `sqrt(p (1 - p) / n)` of each frequency.
    pub std_errors: BTreeMap<Store, f64>,
}

impl SimReport {
    pub fn mass(&self) -> Rat {
        self.empirical.mass()
    }

    pub fn mass_std_error(&self) -> f64 {
        let m = self.mass().to_f64().unwrap_or(0.0);
        (m * (1.0 - m) / self.samples as f64).sqrt()
    }
}

fn draw<'a>(rng: &mut ChaCha8Rng, items: impl Iterator<Item = (&'a Value, &'a Rat)>) -> Option<Value> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (v, w) in items {
        acc += w.to_f64().unwrap_or(0.0);
        if u < acc {
            return Some(v.clone());
        }
        last = Some(v);
    }
    // Rounding can leave a sliver above the final cumulative sum.
    last.cloned()
}

fn draw_value(rng: &mut ChaCha8Rng, vd: &ValueDist) -> Value {
    draw(rng, vd.0.iter()).expect("value distribution is nonempty")
}

/// Runs `samples` independent executions of `cfg` from stores drawn from `initial`.
pub fn simulate(cfg: &Cfg, initial: &Dist, samples: u64, max_steps: u64, seed: u64) -> Result<SimReport> {
    if samples == 0 || max_steps == 0 {
        return Err(Error::Format("samples and max-steps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial_rows: Vec<(&Store, f64)> = initial
        .iter()
        .map(|(s, w)| (s, w.to_f64().unwrap_or(0.0)))
        .collect();
    let probs: Vec<(NodeKind, f64)> = cfg
        .node_ids()
        .map(|v| {
            let p = match cfg.kind(v) {
                NodeKind::ProbBranch(p) => p.to_f64().unwrap_or(0.5),
                _ => 0.0,
            };
            (cfg.kind(v).clone(), p)
        })
        .collect();
    let (start, end) = (cfg.start(), cfg.end());

    let mut counts: BTreeMap<Store, u64> = BTreeMap::new();
    let mut void_runs = 0;
    let mut timed_out = 0;
    for _ in 0..samples {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut picked = None;
        for (s, w) in &initial_rows {
            acc += w;
            if u < acc {
                picked = Some((*s).clone());
                break;
            }
        }
        let Some(mut store) = picked else {
            void_runs += 1;
            continue;
        };

        let mut v = start;
        let mut steps = 0;
        while v != end && steps < max_steps {
            steps += 1;
            let at = |e: Error| e.at(cfg.name(v));
            v = match &probs[v.0].0 {
                NodeKind::Start | NodeKind::Skip => cfg.next(v).unwrap(),
                NodeKind::Assign(items) => {
                    let values = items
                        .iter()
                        .map(|(_, e)| e.eval(&store))
                        .collect::<Result<Vec<_>>>()
                        .map_err(at)?;
                    for ((var, _), value) in items.iter().zip(values) {
                        store.set(var.clone(), value);
                    }
                    cfg.next(v).unwrap()
                }
                NodeKind::RandomAssign(items) => {
                    for (var, vd) in items {
                        let value = draw_value(&mut rng, vd);
                        store.set(var.clone(), value);
                    }
                    cfg.next(v).unwrap()
                }
                NodeKind::DetBranch(cond) => {
                    let (t, f) = cfg.branch_targets(v).unwrap();
                    if cond.eval_bool(&store).map_err(at)? { t } else { f }
                }
                NodeKind::ProbBranch(_) => {
                    let (t, f) = cfg.branch_targets(v).unwrap();
                    if rng.random::<f64>() < probs[v.0].1 { t } else { f }
                }
                NodeKind::End => unreachable!("loop exits at end"),
            };
        }
        if v == end {
            *counts.entry(store).or_default() += 1;
        } else {
            timed_out += 1;
        }
    }

    let n = samples as f64;
    let std_errors = counts
        .iter()
        .map(|(s, &c)| {
            let p = c as f64 / n;
            (s.clone(), (p * (1.0 - p) / n).sqrt())
        })
        .collect();
    let denom = Rat::from_integer(samples.into());
    let empirical = counts
        .into_iter()
        .map(|(s, c)| (s, Rat::from_integer(c.into()) / &denom))
        .collect();
    Ok(SimReport {
        samples,
        seed,
        max_steps,
        void_runs,
        timed_out,
        empirical,
        std_errors,
    })
}

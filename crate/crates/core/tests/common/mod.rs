//! Shared strategies and helpers for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use probslice::cfg::Cfg;
use probslice::graph::Analysis;
use probslice::value::{Rat, Type, Value};
use probslice::{corpus, Dist, NodeId, Store};
use proptest::prelude::*;

pub fn fixtures() -> Vec<(&'static str, Cfg)> {
    corpus::all()
}

pub fn names(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn point() -> Dist {
    Dist::point(Store::new())
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Rational in `(0, 1]` with a small denominator.
pub fn unit_rat() -> impl Strategy<Value = Rat> {
    (1i64..=12).prop_flat_map(|d| (1i64..=d).prop_map(move |n| rat(n, d)))
}

/// A store binding every declared variable; ints are drawn from `0..=3`.
pub fn full_store(cfg: &Cfg) -> impl Strategy<Value = Store> {
    let vars: Vec<(String, Type)> = cfg.vars().iter().map(|(v, t)| (v.clone(), *t)).collect();
    let parts: Vec<BoxedStrategy<(String, Value)>> = vars
        .into_iter()
        .map(|(v, t)| match t {
            Type::Int => (0i64..=3).prop_map(move |i| (v.clone(), Value::int(i))).boxed(),
            Type::Bool => any::<bool>().prop_map(move |b| (v.clone(), Value::Bool(b))).boxed(),
        })
        .collect();
    parts.prop_map(|kv| kv.into_iter().collect::<Store>())
}

/// Subprobability distribution over one to three full stores.
pub fn dist_over(cfg: &Cfg) -> impl Strategy<Value = Dist> {
    prop::collection::vec((full_store(cfg), 1i64..=4), 1..=3).prop_map(|rows| {
        // Weights w_i / 12 sum to at most 12/12 because w_i <= 4 and there are at most three rows.
        rows.into_iter().map(|(s, w)| (s, rat(w, 12))).collect()
    })
}

/// A corpus graph together with a universe pair and a distribution.
pub fn case() -> impl Strategy<Value = (usize, NodeId, NodeId, Dist)> {
    let n = fixtures().len();
    (0..n).prop_flat_map(|i| {
        let cfg = fixtures().swap_remove(i).1;
        let pairs = Analysis::new(&cfg).universe(&cfg);
        (Just(i), prop::sample::select(pairs), dist_over(&cfg))
            .prop_map(|(i, (v, w), d)| (i, v, w, d))
    })
}

pub fn cfg_at(i: usize) -> Cfg {
    fixtures().swap_remove(i).1
}

/// Like [`case`] with a second, independent distribution over the same graph.
pub fn case2() -> impl Strategy<Value = (usize, NodeId, NodeId, Dist, Dist)> {
    let n = fixtures().len();
    (0..n).prop_flat_map(|i| {
        let cfg = fixtures().swap_remove(i).1;
        let pairs = Analysis::new(&cfg).universe(&cfg);
        (Just(i), prop::sample::select(pairs), dist_over(&cfg), dist_over(&cfg))
            .prop_map(|(i, (v, w), a, b)| (i, v, w, a, b))
    })
}

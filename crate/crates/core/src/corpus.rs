//! Fixture graphs shipped with the crate.

use crate::cfg::Cfg;
use crate::dsl::parse_cfg;

/// The running example: counters `p` and `q`, a possibly infinite loop on `h`.
pub const EX1: &str = include_str!("../fixtures/ex1.cfg");
/// `EX1` sliced with respect to `q`.
pub const EX1_TARGET: &str = include_str!("../fixtures/ex1-target.cfg");
/// `EX1` with its irrelevant terminating loop replaced by skips.
pub const EX1_MODIFIED: &str = include_str!("../fixtures/ex1-modified.cfg");
/// Nested relevant loops.
pub const NESTED: &str = include_str!("../fixtures/nested.cfg");
/// Sequential irrelevant loops.
pub const SEQ_LOOPS: &str = include_str!("../fixtures/seq-loops.cfg");
/// A filtering loop forced out of the slice set.
pub const UNSOUND: &str = include_str!("../fixtures/ex1-unsound.cfg");

/// The five corpus graphs, by file name.
pub const ALL: [(&str, &str); 5] = [
    ("ex1.cfg", EX1),
    ("ex1-target.cfg", EX1_TARGET),
    ("ex1-modified.cfg", EX1_MODIFIED),
    ("nested.cfg", NESTED),
    ("seq-loops.cfg", SEQ_LOOPS),
];

fn load(name: &str, text: &str) -> Cfg {
    parse_cfg(text).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn ex1() -> Cfg {
    load("ex1.cfg", EX1)
}

pub fn ex1_target() -> Cfg {
    load("ex1-target.cfg", EX1_TARGET)
}

pub fn ex1_modified() -> Cfg {
    load("ex1-modified.cfg", EX1_MODIFIED)
}

pub fn nested() -> Cfg {
    load("nested.cfg", NESTED)
}

pub fn seq_loops() -> Cfg {
    load("seq-loops.cfg", SEQ_LOOPS)
}

pub fn unsound() -> Cfg {
    load("ex1-unsound.cfg", UNSOUND)
}

/// All five corpus graphs, parsed.
pub fn all() -> Vec<(&'static str, Cfg)> {
    ALL.iter().map(|(n, t)| (*n, load(n, t))).collect()
}

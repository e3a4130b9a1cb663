//! Exact iterands of the source, target and modified graphs, shown on the
//! relevant variables `b` and `q`.

use std::collections::BTreeSet;

use probslice::semantics::Engine;
use probslice::value::fmt_rat;
use probslice::{corpus, Dist, Store};

fn main() {
    let shown: BTreeSet<String> = ["b", "q"].iter().map(|s| s.to_string()).collect();
    let d = Dist::point(Store::new());
    for (label, cfg) in [
        ("source", corpus::ex1()),
        ("target", corpus::ex1_target()),
        ("modified", corpus::ex1_modified()),
    ] {
        let table = Engine::new(&cfg)
            .iterate_to(3, cfg.start(), cfg.end(), &d)
            .expect("iterands");
        println!("== {label}");
        for (k, entry) in table.entries.iter().enumerate().skip(1) {
            let rows: Vec<String> = entry
                .project(&shown)
                .iter()
                .map(|(s, w)| format!("{s} ↦ {}", fmt_rat(w)))
                .collect();
            println!("k={k}: {}", rows.join(", "));
        }
    }
}

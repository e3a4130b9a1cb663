//! Cross-checks the iterand recursion against explicit path enumeration on
//! every fixture: iterand k equals the paths using at most k - 1 back edges.

use probslice::graph::Analysis;
use probslice::semantics::{arrival, iterand, path_enum_oracle, DEFAULT_PATH_CAP};
use probslice::{corpus, Dist, Store};

fn main() {
    let d = Dist::point(Store::new());
    for (name, cfg) in corpus::all() {
        let a = Analysis::new(&cfg);
        let mut agree = 0;
        for v in cfg.node_ids() {
            let dv = if v == cfg.start() { d.clone() } else { arrival(&cfg, &a, 1, cfg.start(), v, &d).unwrap() };
            for k in 1..=4 {
                let it = iterand(&cfg, k, v, cfg.end(), &dv).unwrap();
                let or = path_enum_oracle(&cfg, k - 1, v, cfg.end(), &dv, DEFAULT_PATH_CAP).unwrap();
                assert_eq!(it, or, "{name} at {} k={k}", cfg.name(v));
                agree += 1;
            }
        }
        println!("{name:<18} {agree} cases agree");
    }
}

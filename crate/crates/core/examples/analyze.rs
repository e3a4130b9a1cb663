//! Structural analysis of the running example: dominators, postdominators,
//! back edges and the slicing sets for `relevant q`.

use probslice::cfg::Assumptions;
use probslice::corpus;
use probslice::graph::Analysis;
use probslice::slicer::SliceInfo;

fn main() {
    let cfg = corpus::ex1();
    let a = Analysis::new(&cfg);
    println!("reducible: {}", a.reducible);
    for v in cfg.node_ids() {
        let name = |n: Option<probslice::NodeId>| n.map(|n| cfg.name(n).to_string()).unwrap_or_else(|| "-".into());
        println!("{:<6} idom {:<6} ipdom {}", cfg.name(v), name(a.dom.idom(v)), name(a.pdom.ipdom(v)));
    }
    for (x, y) in &a.back {
        println!("back edge {} -> {}", cfg.name(*x), cfg.name(*y));
    }

    let info = SliceInfo::build(&cfg, &cfg.relevant, &Assumptions::default()).expect("slice sets");
    println!("Q  = {:?}", cfg.names(&info.q));
    println!("Q0 = {:?}", cfg.names(&info.q0));
    for (v, w) in info.x.iter().filter(|(v, w)| v != w) {
        println!("X  ∋ ({}, {})", cfg.name(*v), cfg.name(*w));
    }
}

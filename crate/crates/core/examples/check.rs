//! Full correctness check of the slice of the running example, then the
//! same check on a forced, unsound slice that the checker must reject.

use probslice::checker::full_check;
use probslice::{corpus, Dist, Store};

fn main() {
    let d = Dist::point(Store::new());

    let cfg = corpus::ex1();
    let report = full_check(&cfg, &cfg.relevant, &d, 6, &Default::default()).expect("check");
    print!("{}", report.render_table());

    println!();
    let bad = corpus::unsound();
    let report = full_check(&bad, &bad.relevant, &d, 4, &bad.assumptions).expect("check");
    println!(
        "forced slice of ex1-unsound: {} ({} lockstep mismatches)",
        if report.pass { "PASS" } else { "FAIL" },
        report.lockstep.mismatches
    );
}

//! Slices the running example with respect to `q`, prints the target and
//! the modified source, and confirms both are still valid graphs.

use probslice::cfg::{validate, Assumptions};
use probslice::slicer::{modify, slice, SliceInfo};
use probslice::{corpus, dsl};

fn main() {
    let cfg = corpus::ex1();
    let info = SliceInfo::build(&cfg, &cfg.relevant, &Assumptions::default()).expect("slice sets");

    let target = slice(&cfg, &info.q, &info.relevant).expect("slice");
    println!("# target\n{}", dsl::print_cfg(&target));
    let modified = modify(&cfg, &info.q, &info.q0).expect("modify");
    println!("# modified source\n{}", dsl::print_cfg(&modified));

    assert!(validate(&target).is_empty() && validate(&modified).is_empty());
}

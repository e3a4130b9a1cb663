//! Writes a small program in the text format, slices it for `y`, and checks
//! the slice from a non-trivial initial distribution. The counting loop on
//! `n` is irrelevant and exits with probability 1/3 per pass, so it is
//! sliced away.

use probslice::checker::full_check;
use probslice::dsl::{parse_cfg, print_cfg, DistSpec};
use probslice::slicer::{slice, SliceInfo};

const PROGRAM: &str = "
vars int: n y

node start : start
node seed  : rassign y ~ { 0:1/2, 5:1/2 }
node loop  : pbranch 2/3
node bump  : assign n := n + 1
node twice : branch y < 3
node dbl   : assign y := y * 2
node end   : end

edge start -> seed
edge seed -> loop
edge loop -T-> bump
edge loop -F-> twice
edge bump -> loop
edge twice -T-> dbl
edge twice -F-> end
edge dbl -> end

relevant y
";

fn main() {
    let cfg = parse_cfg(PROGRAM).expect("program parses");
    let info = SliceInfo::build(&cfg, &cfg.relevant, &Default::default()).unwrap();
    println!("{}", print_cfg(&slice(&cfg, &info.q, &info.relevant).unwrap()));

    let d = DistSpec::parse("prob 1/2 { n=0 }\nprob 1/4 { n=3 }").unwrap().to_dist(&cfg).unwrap();
    let report = full_check(&cfg, &cfg.relevant, &d, 6, &Default::default()).unwrap();
    print!("{}", report.render_table());
}

//! Monte Carlo run of the running example compared with the exact iterand.

use num_traits::ToPrimitive;
use probslice::semantics::{iterand, simulate, total_variation};
use probslice::{corpus, Dist, Store};

fn main() {
    let cfg = corpus::ex1();
    let d = Dist::point(Store::new());
    let rep = simulate(&cfg, &d, 20_000, 1000, 7).expect("simulate");
    let exact = iterand(&cfg, 20, cfg.start(), cfg.end(), &d).expect("iterand");
    println!(
        "empirical mass {:.4} ± {:.4}, exact mass at k = 20: {:.6}",
        rep.mass().to_f64().unwrap(),
        rep.mass_std_error(),
        exact.mass().to_f64().unwrap()
    );
    println!("timed out {} of {}", rep.timed_out, rep.samples);
    println!("total variation: {:.4}", total_variation(&rep.empirical, &exact).to_f64().unwrap());
}

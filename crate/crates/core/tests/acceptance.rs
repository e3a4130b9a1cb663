//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;

use common::{case, case2, cfg_at, names, point, rat, unit_rat};
use num_traits::{One, ToPrimitive};
use probslice::cfg::{isomorphic, Assumptions, Cfg};
use probslice::checker::{converged, find_ratio, ratio_sequence, RatioVerdict};
use probslice::graph::Analysis;
use probslice::semantics::{arrival, iterand, path_enum_oracle, simulate, total_variation, Engine, DEFAULT_PATH_CAP};
use probslice::slicer::{modify, slice, SliceInfo};
use probslice::value::pow2_inv;
use probslice::{corpus, Dist, Rat, Store};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn bq() -> BTreeSet<String> {
    names(&["b", "q"])
}

fn row(b: bool, q: i64) -> Store {
    Store::new().with("b", b).with("q", q)
}

fn projected_iterands(cfg: &Cfg, k: usize) -> Result<Vec<Dist>, String> {
    let t = Engine::new(cfg)
        .iterate_to(k, cfg.start(), cfg.end(), &point())
        .map_err(|e| e.to_string())?;
    Ok(t.entries.iter().map(|d| d.project(&bq())).collect())
}

fn expect_table(got: &Dist, rows: Vec<(Store, Rat)>, what: &str) -> Result<(), String> {
    let want: Dist = rows.into_iter().collect();
    ensure!(*got == want, "{what}: got {got:?}, want {want:?}");
    Ok(())
}

/// Source iterands at (start, end), projected to {b, q}.
fn criterion_1() -> Outcome {
    let rows = projected_iterands(&corpus::ex1(), 6)?;
    for (k, got) in rows.iter().enumerate().skip(1) {
        let mut want = vec![(row(true, 0), rat(1, 4) - pow2_inv(k as u32 + 2))];
        want.extend((1..=k as i64).map(|i| (row(false, i), pow2_inv(i as u32 + 2))));
        expect_table(got, want, &format!("k={k}"))?;
    }
    expect_table(&rows[1], vec![(row(true, 0), rat(1, 8)), (row(false, 1), rat(1, 8))], "k=1 inline")?;
    expect_table(
        &rows[2],
        vec![(row(true, 0), rat(3, 16)), (row(false, 1), rat(1, 8)), (row(false, 2), rat(1, 16))],
        "k=2 inline",
    )?;
    Ok("k = 1..6 exact; inline k = 1, 2 tables match".into())
}

/// Target iterands.
fn criterion_2() -> Outcome {
    let rows = projected_iterands(&corpus::ex1_target(), 6)?;
    for (k, got) in rows.iter().enumerate().skip(1) {
        let mut want = vec![(row(true, 0), rat(1, 2))];
        want.extend((1..=k as i64).map(|i| (row(false, i), pow2_inv(i as u32 + 1))));
        expect_table(got, want, &format!("k={k}"))?;
    }
    Ok("k = 1..6 exact".into())
}

/// Revised-source iterands.
fn criterion_3() -> Outcome {
    let rows = projected_iterands(&corpus::ex1_modified(), 6)?;
    for (k, got) in rows.iter().enumerate().skip(1) {
        let mut want = vec![(row(true, 0), rat(1, 4))];
        want.extend((1..=k as i64).map(|i| (row(false, i), pow2_inv(i as u32 + 2))));
        expect_table(got, want, &format!("k={k}"))?;
    }
    Ok("k = 1..6 exact".into())
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = probslice::cli::run(std::iter::once("probslice").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err))
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Lockstep with c = 1/2, the negative result without modification, and
/// the segment witnesses on X.
fn criterion_4() -> Outcome {
    let ex1 = fixture("ex1.cfg");
    let (code, out) = run_cli(&["check", &ex1, "--k", "6", "--format", "json"]);
    ensure!(code == 0, "check exited {code}:\n{out}");
    let v: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let rows = v["lockstep"]["rows"].as_array().ok_or("no lockstep rows")?;
    ensure!(rows.len() == 7, "expected rows k = 0..6");
    ensure!(rows[0]["verdict"]["status"] == "zero_both", "k=0 row: {}", rows[0]);
    for r in &rows[1..] {
        ensure!(r["verdict"]["status"] == "exact" && r["verdict"]["c"] == "1/2", "row {r}");
    }
    let segments = v["segments"].as_array().ok_or("no segments")?;
    let x = v["slice"]["x"].as_array().ok_or("no X")?;
    let nontrivial = x.iter().filter(|p| p[0] != p[1]).count();
    ensure!(segments.len() == nontrivial && nontrivial > 0, "segment count {} vs X {}", segments.len(), nontrivial);
    for s in segments {
        for key in ["loop_free_modified", "loop_free_target", "constant_modified", "constant_target", "pass"] {
            ensure!(s[key] == true, "segment {} failed {key}", s);
        }
    }

    let (code, out) = run_cli(&["check", &ex1, "--k", "6", "--no-modify", "--format", "json"]);
    ensure!(code == 1, "--no-modify exited {code}");
    let v: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    ensure!(v["lockstep"]["rows"][1]["verdict"]["status"] == "mismatch", "k=1 under --no-modify: {}", v["lockstep"]["rows"][1]);
    Ok(format!(
        "c = 1/2 at k = 1..6; --no-modify mismatches at k = 1; {nontrivial} X segments loop-free and k-independent"
    ))
}

/// Slice sets and graph shapes.
fn criterion_5() -> Outcome {
    let cfg = corpus::ex1();
    let info = SliceInfo::build(&cfg, &names(&["q"]), &Assumptions::default()).map_err(|e| e.to_string())?;
    let kept: BTreeSet<String> = cfg.names(&info.q).into_iter().chain(cfg.names(&info.q0)).collect();
    let all: BTreeSet<String> = cfg.nodes().iter().map(|n| n.name.clone()).collect();
    let excluded: BTreeSet<String> = all.difference(&kept).cloned().collect();
    ensure!(excluded == names(&["incp", "randp"]), "excluded {excluded:?}");
    ensure!(cfg.names(&info.q0) == vec!["hb".to_string()], "Q0 = {:?}", cfg.names(&info.q0));
    let pair = (cfg.id("incp").unwrap(), cfg.end());
    ensure!(info.x.contains(&pair), "(incp, end) not in X");
    let target = slice(&cfg, &info.q, &info.relevant).map_err(|e| e.to_string())?;
    ensure!(isomorphic(&target, &corpus::ex1_target()), "slice not isomorphic to the target fixture");
    let m = modify(&cfg, &info.q, &info.q0).map_err(|e| e.to_string())?;
    ensure!(isomorphic(&m, &corpus::ex1_modified()), "modify not isomorphic to the modified fixture");
    Ok("Q ∪ Q0 misses exactly {incp, randp}; Q0 = {hb}; (incp,end) ∈ X; both transforms isomorphic".into())
}

/// Iterands against the path-enumeration oracle.
fn criterion_6() -> Outcome {
    let mut checked = 0;
    for (name, cfg) in corpus::all() {
        let a = Analysis::new(&cfg);
        for v in cfg.node_ids().filter(|&v| a.in_universe(v, cfg.end())) {
            // Interior nodes start from the stores that first reach them.
            let d = if v == cfg.start() {
                point()
            } else {
                arrival(&cfg, &a, 1, cfg.start(), v, &point()).map_err(|e| e.to_string())?
            };
            for k in 1..=4 {
                let it = iterand(&cfg, k, v, cfg.end(), &d).map_err(|e| e.to_string())?;
                let or = path_enum_oracle(&cfg, k - 1, v, cfg.end(), &d, DEFAULT_PATH_CAP).map_err(|e| e.to_string())?;
                ensure!(it == or, "{name} ({}, end) k={k}", cfg.name(v));
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (graph, pair, k) cases equal"))
}

/// Mass limits and ratio-sequence convergence.
fn criterion_7() -> Outcome {
    let cfg = corpus::ex1();
    let e = Engine::new(&cfg);
    for k in 0..=8u32 {
        let m = e.iterand(k as usize, cfg.start(), cfg.end(), &point()).map_err(|e| e.to_string())?.mass();
        ensure!(m == rat(1, 2) - pow2_inv(k + 1), "mass at k={k} is {m}");
    }
    for big_k in 2..=10usize {
        let r = ratio_sequence(&cfg, cfg.start(), cfg.end(), &point(), big_k, None).map_err(|e| e.to_string())?;
        ensure!(r.last_step == Some(pow2_inv(big_k as u32 + 1)), "K={big_k}: step {:?}", r.last_step);
        ensure!(r.converged, "K={big_k} not converged");
    }
    // A sequence that goes down and up again still converges by the last step.
    let wobbly = [rat(1, 2), rat(3, 4), rat(5, 8), rat(11, 16)];
    ensure!(converged(&wobbly, &rat(1, 8)).1, "non-monotone sequence rejected");
    Ok("mass 1/2 - 2^-(k+1) for k <= 8; |c_K - c_{K-1}| = 2^-(K+1) for K = 2..10; no monotonicity required".into())
}

fn fmt<T: std::fmt::Debug>(e: proptest::test_runner::TestError<T>) -> String {
    format!("{e:?}")
}

/// Property suites, each run with 128 cases.
fn criterion_8() -> Outcome {
    const CASES: u32 = 128;
    let mut report = Vec::new();
    let mut go = |label: &str, result: Result<(), String>| -> Result<(), String> {
        result.map_err(|e| format!("{label}: {e}"))?;
        report.push(label.to_string());
        Ok(())
    };
    let runner = || TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });

    go(
        "chain",
        runner()
            .run(&case(), |(i, v, w, d)| {
                let cfg = cfg_at(i);
                let t = Engine::new(&cfg).iterate_to(5, v, w, &d).unwrap();
                prop_assert!(t.entries.windows(2).all(|p| p[0].leq(&p[1])));
                Ok(())
            })
            .map_err(fmt),
    )?;
    go(
        "linearity",
        runner()
            .run(&(case2(), unit_rat(), 0usize..=5), |((i, v, w, d1, d2), a, k)| {
                let cfg = cfg_at(i);
                let half = rat(1, 2);
                let (d1, d2) = (d1.scale(&half), d2.scale(&half));
                let lhs = iterand(&cfg, k, v, w, &d1.scale(&a).add(&d2).unwrap()).unwrap();
                let rhs = iterand(&cfg, k, v, w, &d1)
                    .unwrap()
                    .scale(&a)
                    .add(&iterand(&cfg, k, v, w, &d2).unwrap())
                    .unwrap();
                prop_assert_eq!(lhs, rhs);
                Ok(())
            })
            .map_err(fmt),
    )?;
    go(
        "monotonicity",
        runner()
            .run(&(case(), unit_rat(), 0usize..=5), |((i, v, w, d), a, k)| {
                let cfg = cfg_at(i);
                prop_assert!(iterand(&cfg, k, v, w, &d.scale(&a)).unwrap().leq(&iterand(&cfg, k, v, w, &d).unwrap()));
                Ok(())
            })
            .map_err(fmt),
    )?;
    go(
        "projection mass",
        runner()
            .run(&(case(), any::<u8>()), |((i, _, _, d), mask)| {
                let cfg = cfg_at(i);
                let vars: BTreeSet<String> = cfg
                    .vars()
                    .keys()
                    .enumerate()
                    .filter(|(j, _)| mask & (1 << j) != 0)
                    .map(|(_, v)| v.clone())
                    .collect();
                prop_assert_eq!(d.project(&vars).mass(), d.mass());
                Ok(())
            })
            .map_err(fmt),
    )?;
    go(
        "find_ratio scaling",
        runner()
            .run(&(case2(), unit_rat(), unit_rat()), |((_, _, _, l, r), a, c)| {
                let same = |x: &RatioVerdict, y: &RatioVerdict| match (x, y) {
                    (RatioVerdict::Exact { c: p }, RatioVerdict::Exact { c: q }) => p == q,
                    (RatioVerdict::Mismatch { store: s, .. }, RatioVerdict::Mismatch { store: t, .. }) => s == t,
                    (RatioVerdict::ZeroBoth, RatioVerdict::ZeroBoth) => true,
                    _ => false,
                };
                prop_assert!(same(&find_ratio(&l, &r), &find_ratio(&l.scale(&a), &r.scale(&a))));
                prop_assert_eq!(find_ratio(&r.scale(&c), &r), RatioVerdict::Exact { c: c.clone() });
                Ok(())
            })
            .map_err(fmt),
    )?;
    Ok(format!("{} suites x {CASES} cases, zero failures", report.len()))
}

/// Monte Carlo against iterand 20.
fn criterion_9() -> Outcome {
    let cfg = corpus::ex1();
    let rep = simulate(&cfg, &point(), 100_000, 1000, 42).map_err(|e| e.to_string())?;
    let exact = iterand(&cfg, 20, cfg.start(), cfg.end(), &point()).map_err(|e| e.to_string())?;
    let tv = total_variation(&rep.empirical, &exact).to_f64().unwrap_or(f64::NAN);
    let mass = rep.mass().to_f64().unwrap_or(f64::NAN);
    ensure!(tv <= 0.02, "total variation {tv:.5} > 0.02");
    ensure!((0.49..=0.51).contains(&mass), "mass {mass:.5} outside [0.49, 0.51]");
    ensure!(exact.mass() < Rat::one(), "iterand 20 has full mass");
    Ok(format!("TV {tv:.5} <= 0.02, mass {mass:.5} in [0.49, 0.51]"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("source iterand table", criterion_1),
        ("target iterand table", criterion_2),
        ("revised source iterand table", criterion_3),
        ("lockstep and segment witnesses", criterion_4),
        ("slicer fidelity", criterion_5),
        ("oracle equivalence", criterion_6),
        ("mass and ratio limits", criterion_7),
        ("property suites", criterion_8),
        ("Monte Carlo cross-check", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

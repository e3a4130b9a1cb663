//! Command-line front end. The binary is a thin wrapper over [`run`].
//!
//! Exit codes: 0 on success, 1 when `check` finds a failing verdict, 2 on
//! unreadable or invalid input.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::{Read, Write};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

use crate::cfg::{validate, Assumptions, Cfg};
use crate::checker::{self, CheckOptions, SCHEMA};
use crate::dsl::{self, DistSpec};
use crate::error::{Error, Result};
use crate::graph::Analysis;
use crate::semantics::{self, total_variation, Dist, Engine};
use crate::slicer::{self, SliceInfo};
use crate::value::{fmt_rat, parse_rat, Rat, Store};

#[derive(Debug, Parser)]
#[command(name = "probslice", version, about = "Slice probabilistic control-flow graphs and check the slices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, clap::Args)]
struct SliceArgs {
    /// Relevant variables (defaults to the file's `relevant` line).
    #[arg(long, value_delimiter = ',')]
    relevant: Option<Vec<String>>,
    /// Use these node names as Q instead of computing it.
    #[arg(long = "assume-q", value_delimiter = ',')]
    assume_q: Option<Vec<String>>,
    /// Use these node names as Q0 instead of computing it.
    #[arg(long = "assume-q0", value_delimiter = ',')]
    assume_q0: Option<Vec<String>>,
    /// Use these `from:to` pairs as X instead of computing it.
    #[arg(long = "assume-x", value_delimiter = ',')]
    assume_x: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a graph file is well formed.
    Validate {
        /// Graph file, or `-` / nothing for standard input.
        cfg: Option<String>,
    },
    /// Dominators, postdominators, back edges and the slicing sets as JSON.
    Analyze {
        cfg: String,
        #[command(flatten)]
        sets: SliceArgs,
    },
    /// Print the sliced graph.
    Slice {
        cfg: String,
        #[command(flatten)]
        sets: SliceArgs,
    },
    /// Print the source with irrelevant, terminating parts replaced by skip.
    Modify {
        cfg: String,
        #[command(flatten)]
        sets: SliceArgs,
    },
    /// Exact iterands 0..=K of one subprogram.
    Iterate {
        cfg: String,
        #[arg(long, default_value = "start")]
        from: String,
        #[arg(long, default_value = "end")]
        to: String,
        #[arg(long, default_value_t = 6)]
        k: usize,
        /// Initial distribution file (default: point mass on the empty store).
        #[arg(long)]
        dist: Option<String>,
        /// Show only these variables.
        #[arg(long, value_delimiter = ',')]
        project: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Slice, then check the slice against the source.
    Check {
        cfg: String,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long)]
        dist: Option<String>,
        #[command(flatten)]
        sets: SliceArgs,
        /// Compare the unmodified source with the target.
        #[arg(long = "no-modify")]
        no_modify: bool,
        /// Convergence tolerance for ratio sequences, as a rational.
        #[arg(long)]
        tolerance: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Monte Carlo estimate of the end distribution.
    Simulate {
        cfg: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-steps", default_value_t = 10_000)]
        max_steps: u64,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, value_delimiter = ',')]
        project: Option<Vec<String>>,
        /// Also report the total-variation distance to exact iterand K.
        #[arg(long = "compare-k")]
        compare_k: Option<usize>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

/// Failure of a command, carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(path: &str, e: Error) -> Self {
        Failure {
            code: 2,
            message: format!("{path}: {e}"),
        }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read_text(path: &str) -> std::result::Result<String, Failure> {
    let mut text = String::new();
    let res = if path == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|source| Failure::input(path, Error::Io { path: path.to_string(), source }))?;
    Ok(text)
}

fn load_cfg(path: &str) -> std::result::Result<Cfg, Failure> {
    dsl::parse_cfg(&read_text(path)?).map_err(|e| Failure::input(path, e))
}

fn load_dist(cfg: &Cfg, path: Option<&str>) -> std::result::Result<Dist, Failure> {
    match path {
        None => Ok(Dist::point(Store::new())),
        Some(p) => DistSpec::parse(&read_text(p)?)
            .and_then(|spec| spec.to_dist(cfg))
            .map_err(|e| Failure::input(p, e)),
    }
}

fn relevant_of(cfg: &Cfg, sets: &SliceArgs) -> BTreeSet<String> {
    match &sets.relevant {
        Some(v) => v.iter().cloned().collect(),
        None => cfg.relevant.clone(),
    }
}

fn assumptions_of(cfg: &Cfg, sets: &SliceArgs) -> Result<Assumptions> {
    let mut a = cfg.assumptions.clone();
    if let Some(q) = &sets.assume_q {
        a.q = Some(q.iter().cloned().collect());
    }
    if let Some(q0) = &sets.assume_q0 {
        a.q0 = Some(q0.iter().cloned().collect());
    }
    if let Some(x) = &sets.assume_x {
        let pairs = x
            .iter()
            .map(|p| {
                p.split_once(':')
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .ok_or_else(|| Error::Format(format!("expected `from:to` in --assume-x, found `{p}`")))
            })
            .collect::<Result<_>>()?;
        a.x = Some(pairs);
    }
    Ok(a)
}

fn slice_info(cfg: &Cfg, path: &str, sets: &SliceArgs) -> std::result::Result<(BTreeSet<String>, SliceInfo), Failure> {
    let relevant = relevant_of(cfg, sets);
    let assume = assumptions_of(cfg, sets).map_err(|e| Failure::input(path, e))?;
    let info = SliceInfo::build(cfg, &relevant, &assume).map_err(|e| Failure::input(path, e))?;
    Ok((relevant, info))
}

fn project(d: &Dist, vars: &Option<Vec<String>>) -> Dist {
    match vars {
        Some(v) => d.project(&v.iter().cloned().collect()),
        None => d.clone(),
    }
}

fn check_project_vars(cfg: &Cfg, path: &str, vars: &Option<Vec<String>>) -> std::result::Result<(), Failure> {
    if let Some(v) = vars.iter().flatten().find(|v| !cfg.vars().contains_key(*v)) {
        return Err(Failure::input(path, Error::UnknownVariable(v.clone())));
    }
    Ok(())
}

fn print_json(out: &mut dyn Write, v: &impl Serialize) {
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("value serializes"));
}

fn dist_rows(d: &Dist) -> String {
    let mut s = String::new();
    for (store, w) in d.iter() {
        s.push_str(&format!("  {:<40} {}\n", store.to_string(), fmt_rat(w)));
    }
    if d.is_bottom() {
        s.push_str("  (empty)\n");
    }
    s
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Validate { cfg } => {
            let path = cfg.unwrap_or_else(|| "-".to_string());
            let text = read_text(&path)?;
            let parsed = dsl::parse_unvalidated(&text).map_err(|e| Failure::input(&path, e))?;
            let violations = validate(&parsed);
            if violations.is_empty() {
                let _ = writeln!(out, "valid: {} nodes, {} edges", parsed.len(), parsed.edges().len());
                Ok(0)
            } else {
                Err(Failure::input(&path, Error::Invalid(violations)))
            }
        }
        Command::Analyze { cfg: path, sets } => {
            let cfg = load_cfg(&path)?;
            let a = Analysis::new(&cfg);
            let tree = |f: &dyn Fn(crate::NodeId) -> Option<crate::NodeId>| -> BTreeMap<String, Option<String>> {
                cfg.node_ids()
                    .map(|v| (cfg.name(v).to_string(), f(v).map(|p| cfg.name(p).to_string())))
                    .collect()
            };
            let back: Vec<(String, String)> = a
                .back
                .iter()
                .map(|&(x, y)| (cfg.name(x).to_string(), cfg.name(y).to_string()))
                .collect();
            let mut report = json!({
                "schema": SCHEMA,
                "reducible": a.reducible,
                "idom": tree(&|v| a.dom.idom(v)),
                "ipdom": tree(&|v| a.pdom.ipdom(v)),
                "back_edges": back,
            });
            let relevant = relevant_of(&cfg, &sets);
            if !relevant.is_empty() {
                let (_, info) = slice_info(&cfg, &path, &sets)?;
                let x: Vec<(String, String)> = info
                    .x
                    .iter()
                    .map(|&(v, w)| (cfg.name(v).to_string(), cfg.name(w).to_string()))
                    .collect();
                report["relevant"] = json!(relevant);
                report["Q"] = json!(cfg.names(&info.q));
                report["Q0"] = json!(cfg.names(&info.q0));
                report["X"] = json!(x);
                report["provenance"] = json!({"Q": info.q_from, "Q0": info.q0_from, "X": info.x_from});
            }
            print_json(out, &report);
            Ok(0)
        }
        Command::Slice { cfg: path, sets } => {
            let cfg = load_cfg(&path)?;
            let (relevant, info) = slice_info(&cfg, &path, &sets)?;
            let target = slicer::slice(&cfg, &info.q, &relevant).map_err(|e| Failure::input(&path, e))?;
            let _ = write!(out, "{}", dsl::print_cfg(&target));
            Ok(0)
        }
        Command::Modify { cfg: path, sets } => {
            let cfg = load_cfg(&path)?;
            let (_, info) = slice_info(&cfg, &path, &sets)?;
            let m = slicer::modify(&cfg, &info.q, &info.q0).map_err(|e| Failure::input(&path, e))?;
            let _ = write!(out, "{}", dsl::print_cfg(&m));
            Ok(0)
        }
        Command::Iterate {
            cfg: path,
            from,
            to,
            k,
            dist,
            project: proj,
            format,
        } => {
            let cfg = load_cfg(&path)?;
            check_project_vars(&cfg, &path, &proj)?;
            let d = load_dist(&cfg, dist.as_deref())?;
            let fail = |e| Failure::input(&path, e);
            let (v, w) = (cfg.node(&from).map_err(fail)?, cfg.node(&to).map_err(fail)?);
            let table = Engine::new(&cfg).iterate_to(k, v, w, &d).map_err(fail)?;
            let rows: Vec<Dist> = table.entries.iter().map(|e| project(e, &proj)).collect();
            match format {
                Format::Json => {
                    let iterands: Vec<_> = rows
                        .iter()
                        .enumerate()
                        .map(|(k, d)| json!({"k": k, "mass": fmt_rat(&d.mass()), "dist": d}))
                        .collect();
                    print_json(
                        out,
                        &json!({
                            "schema": SCHEMA,
                            "from": from,
                            "to": to,
                            "project": proj,
                            "initial": d,
                            "iterands": iterands,
                        }),
                    );
                }
                Format::Table => {
                    for (k, d) in rows.iter().enumerate() {
                        let _ = writeln!(out, "k = {k}  ({from} -> {to})  mass {}", fmt_rat(&d.mass()));
                        let _ = write!(out, "{}", dist_rows(d));
                    }
                }
            }
            Ok(0)
        }
        Command::Check {
            cfg: path,
            k,
            dist,
            sets,
            no_modify,
            tolerance,
            format,
        } => {
            let cfg = load_cfg(&path)?;
            let d = load_dist(&cfg, dist.as_deref())?;
            let relevant = relevant_of(&cfg, &sets);
            let fail = |e| Failure::input(&path, e);
            let tolerance = tolerance
                .map(|t| parse_rat(&t).map_err(|m| fail(Error::Format(format!("--tolerance: {m}")))))
                .transpose()?;
            let opts = CheckOptions {
                k,
                assume: assumptions_of(&cfg, &sets).map_err(fail)?,
                no_modify,
                tolerance,
            };
            let report = checker::check(&cfg, &relevant, &d, &opts).map_err(fail)?;
            match format {
                Format::Json => {
                    let _ = writeln!(out, "{}", report.to_json());
                }
                Format::Table => {
                    let _ = write!(out, "{}", report.render_table());
                }
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Simulate {
            cfg: path,
            samples,
            seed,
            max_steps,
            dist,
            project: proj,
            compare_k,
            format,
        } => {
            let cfg = load_cfg(&path)?;
            check_project_vars(&cfg, &path, &proj)?;
            let d = load_dist(&cfg, dist.as_deref())?;
            let fail = |e| Failure::input(&path, e);
            let rep = semantics::simulate(&cfg, &d, samples, max_steps, seed).map_err(fail)?;
            let empirical = project(&rep.empirical, &proj);
            let exact = compare_k
                .map(|k| semantics::iterand(&cfg, k, cfg.start(), cfg.end(), &d).map(|e| project(&e, &proj)))
                .transpose()
                .map_err(fail)?;
            let tv = exact.as_ref().map(|e| total_variation(&empirical, e));
            let n = samples as f64;
            let std_err = |w: &Rat| {
                let p = w.to_f64().unwrap_or(0.0);
                (p * (1.0 - p) / n).sqrt()
            };
            match format {
                Format::Json => {
                    let rows: Vec<_> = empirical
                        .iter()
                        .map(|(s, w)| {
                            json!({"store": s, "frequency": fmt_rat(w), "estimate": w.to_f64(), "std_error": std_err(w)})
                        })
                        .collect();
                    print_json(
                        out,
                        &json!({
                            "schema": SCHEMA,
                            "samples": samples,
                            "seed": seed,
                            "max_steps": max_steps,
                            "void_runs": rep.void_runs,
                            "timed_out": rep.timed_out,
                            "mass": rep.mass().to_f64(),
                            "mass_std_error": rep.mass_std_error(),
                            "empirical": rows,
                            "compare_k": compare_k,
                            "total_variation": tv.as_ref().and_then(|t| t.to_f64()),
                        }),
                    );
                }
                Format::Table => {
                    let _ = writeln!(
                        out,
                        "samples {samples}  seed {seed}  max-steps {max_steps}  timed out {}  void {}",
                        rep.timed_out, rep.void_runs
                    );
                    for (s, w) in empirical.iter() {
                        let _ = writeln!(
                            out,
                            "  {:<40} {:.5} ± {:.5}",
                            s.to_string(),
                            w.to_f64().unwrap_or(0.0),
                            std_err(w)
                        );
                    }
                    let _ = writeln!(
                        out,
                        "mass {:.5} ± {:.5}",
                        rep.mass().to_f64().unwrap_or(0.0),
                        rep.mass_std_error()
                    );
                    if let (Some(k), Some(tv)) = (compare_k, tv) {
                        let _ = writeln!(out, "total variation to iterand {k}: {:.5}", tv.to_f64().unwrap_or(0.0));
                    }
                }
            }
            Ok(0)
        }
    }
}

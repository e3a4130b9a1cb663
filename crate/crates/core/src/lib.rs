//! Slicing, exact semantics and correctness checking for probabilistic
//! control-flow graphs.
//!
//! A graph is sliced with respect to a set of relevant variables. The
//! checker then compares the Kleene iterands of the source program, of the
//! sliced (target) program and of a modified source in which irrelevant,
//! terminating loops are replaced by `skip`, and reports whether the
//! relevant parts of the distributions agree up to a constant factor.
//!
//! ```no_run
//! use probslice::{checker, corpus, dsl::DistSpec};
//!
//! let cfg = corpus::ex1();
//! let d = DistSpec::point_empty().to_dist(&cfg).unwrap();
//! let report = checker::full_check(&cfg, &cfg.relevant.clone(), &d, 6, &Default::default()).unwrap();
//! assert!(report.pass);
//! ```

pub mod cfg;
pub mod checker;
pub mod cli;
pub mod corpus;
pub mod dsl;
pub mod error;
pub mod expr;
pub mod graph;
pub mod semantics;
pub mod slicer;
pub mod value;

pub use cfg::{Cfg, NodeId, NodeKind};
pub use error::{Error, Result};
pub use semantics::{Dist, Engine};
pub use value::{Rat, Store, Value};

use thiserror::Error;

use crate::cfg::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("invalid control-flow graph: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("undefined variable `{var}`{}", at_node(.node))]
    UndefinedVariable { var: String, node: Option<String> },

    #[error("type error: {msg}{}", at_node(.node))]
    Type { msg: String, node: Option<String> },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("({from}, {to}) is not in the universe: `{to}` does not postdominate `{from}`")]
    NotInUniverse { from: String, to: String },

    #[error("mass overflow: adding distributions of mass {0} and {1}")]
    MassOverflow(String, String),

    #[error("path enumeration exceeded the cap of {0} paths")]
    PathCap(usize),

    #[error("initial distribution has zero mass")]
    ZeroMass,

    #[error("{0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

fn at_node(node: &Option<String>) -> String {
    match node {
        Some(n) => format!(" at node `{n}`"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a node name to evaluation errors that lack one.
    pub fn at(self, node_name: &str) -> Self {
        match self {
            Error::UndefinedVariable { var, node: None } => Error::UndefinedVariable {
                var,
                node: Some(node_name.to_string()),
            },
            Error::Type { msg, node: None } => Error::Type {
                msg,
                node: Some(node_name.to_string()),
            },
            other => other,
        }
    }
}

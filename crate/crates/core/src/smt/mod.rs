//! External SMT solver backend.

pub mod encode;
pub mod session;

use std::fmt;
use std::time::Duration;

use serde::Serialize;

pub use encode::{encode_query, EncodeError, QfQuery, TesterSyntax};
pub use session::Session;

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
pub const SOLVER_ENV: &str = "FLUID_SOLVER";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub executable: String,
    /// Arguments passed to the solver; when empty, defaults are derived
    /// from the executable name.
    pub args: Vec<String>,
    pub timeout_ms: u64,
    /// Keep one process per task and send only new assertions.
    pub incremental: bool,
    pub logic: String,
    pub tester: TesterSyntax,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            executable: std::env::var(SOLVER_ENV).unwrap_or_else(|_| "z3".to_string()),
            args: Vec::new(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            incremental: true,
            logic: "ALL".to_string(),
            tester: TesterSyntax::Indexed,
        }
    }
}

impl SolverConfig {
    pub fn effective_args(&self) -> Vec<String> {
        if !self.args.is_empty() {
            return self.args.clone();
        }
        let base = std::path::Path::new(&self.executable)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("");
        match base {
            b if b.starts_with("cvc") => vec!["--lang=smt2".into(), "--incremental".into()],
            b if b.starts_with("z3") => vec!["-in".into()],
            _ => Vec::new(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "kebab-case")]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    ProcessError(String),
}

impl Verdict {
    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat)
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::ProcessError(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Sat => f.write_str("sat"),
            Verdict::Unsat => f.write_str("unsat"),
            Verdict::Unknown => f.write_str("unknown"),
            Verdict::Timeout => f.write_str("timeout"),
            Verdict::ProcessError(d) => write!(f, "error: {d}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverVerdict {
    pub verdict: Verdict,
    /// Raw solver output for this check.
    pub transcript: String,
    pub elapsed: Duration,
}

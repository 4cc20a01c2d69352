//! Verification of universal properties of recursive definitions over
//! algebraic datatypes by unfolding followed by quantifier-free SMT checks.

pub mod acyclic;
pub mod contracts;
pub mod dapp;
pub mod defs;
pub mod engine;
pub mod eval;
pub mod expr;
pub mod guards;
pub mod paths;
pub mod sig;
pub mod skolem;
pub mod smt;
pub mod syntax;
pub mod task;

pub use acyclic::{check_fluid, computational_closure, FluidReport, Obligation, ObligationStatus};
pub use contracts::{reduce_to_fluid, run_uqfr_contracts, simulation_check, Contract, ContractScope, SimulationReport};
pub use dapp::{collect_d_applications, DApp};
pub use defs::{DefSet, Definition, Order, RankSpec};
pub use engine::{run_uqfr, step_round, unfold, EngineConfig, EngineResult, Outcome, RoundState};
pub use eval::{eval_standard, EvalError, Value};
pub use expr::{substitute, Builtin, Expr, Op, Var};
pub use sig::{AdtDecl, Constructor, FunDecl, Signature, Sort};
pub use skolem::skolemize_negated_goal;
pub use smt::{SolverConfig, Verdict};
pub use syntax::{parse_source, ParseError, SourceFile};
pub use task::Task;

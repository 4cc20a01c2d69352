use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use fluid_core::acyclic::{check_fluid, DischargeOptions, FluidOptions, FluidReport, GuardMode, ObligationResult};
use fluid_core::contracts::{reduce_to_fluid, run_uqfr_contracts, simulation_check, ContractScope};
use fluid_core::engine::{run_uqfr, EngineConfig, EngineResult, Outcome, RoundRecord};
use fluid_core::smt::{SolverConfig, TesterSyntax, Verdict};
use fluid_core::syntax::{parse_source, parse_source_strict, print_task, SourceFile};

const EXIT_VALID: u8 = 0;
const EXIT_UNPROVED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Prove,
    ProveContracts,
    CheckAcyclicity,
    Reduce,
    Simulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TraceLevel {
    Summary,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Guards {
    Syntactic,
    Smt,
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scope {
    Calls,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Tester {
    Indexed,
    Prefixed,
}

/// Proves universal properties of recursive definitions over algebraic
/// datatypes by unfolding and quantifier-free SMT checks.
#[derive(Parser, Debug)]
#[command(name = "fluid", version)]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,

    /// Input files (`.fluid`).
    #[arg(required = true)]
    files: Vec<PathBuf>,

    /// Unfolding rounds; the solver is consulted at most this many times plus one.
    #[arg(long, default_value_t = fluid_core::engine::DEFAULT_MAX_ROUNDS)]
    max_rounds: usize,

    /// Rounds for the semantic acyclicity check.
    #[arg(long, default_value_t = fluid_core::acyclic::DEFAULT_OBLIGATION_ROUNDS)]
    obligation_rounds: usize,

    /// Rounds compared by `simulate`.
    #[arg(long, default_value_t = 3)]
    k: usize,

    /// Solver executable (default: $FLUID_SOLVER, then `z3`).
    #[arg(long)]
    solver: Option<String>,

    /// Argument passed to the solver; repeatable. Replaces the defaults.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,

    #[arg(long, default_value_t = fluid_core::smt::DEFAULT_TIMEOUT_MS)]
    timeout_ms: u64,

    #[arg(long, default_value = "ALL")]
    logic: String,

    /// Start a fresh solver process for every check.
    #[arg(long)]
    no_incremental: bool,

    #[arg(long, value_enum, default_value_t = Tester::Indexed)]
    tester_syntax: Tester,

    /// Per-round trace; `--trace=full` also prints every new formula.
    #[arg(long, value_enum, num_args = 0..=1, require_equals = true, default_missing_value = "summary")]
    trace: Option<TraceLevel>,

    /// Write each round's script to DIR/<file stem>/round_<i>.smt2.
    #[arg(long, value_name = "DIR")]
    emit_smt: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Guards::Syntactic)]
    guards: Guards,

    /// Run the unfolding loop even if the task is not shown to be in the fragment.
    #[arg(long)]
    unsafe_skip_fluid: bool,

    /// Which applications get their contract asserted.
    #[arg(long, value_enum, default_value_t = Scope::Calls)]
    contract_scope: Scope,

    /// Print a JSON report instead of text.
    #[arg(long)]
    json: bool,

    /// Files processed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Serialize, Default)]
struct Report {
    file: String,
    mode: String,
    outcome: String,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    instantiations: Option<usize>,
    per_round: Vec<RoundCount>,
    obligations: Vec<ObligationResult>,
    problems: Vec<String>,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation: Option<fluid_core::SimulationReport>,
}

#[derive(Serialize)]
struct RoundCount {
    round: usize,
    verdict: String,
    new_instantiations: usize,
    new_contracts: usize,
    formulas: usize,
}

impl Cli {
    fn solver(&self) -> SolverConfig {
        let mut s = SolverConfig::default();
        if let Some(exe) = &self.solver {
            s.executable = exe.clone();
        }
        s.args = self.solver_args.clone();
        s.timeout_ms = self.timeout_ms;
        s.logic = self.logic.clone();
        s.incremental = !self.no_incremental;
        s.tester = match self.tester_syntax {
            Tester::Indexed => TesterSyntax::Indexed,
            Tester::Prefixed => TesterSyntax::Prefixed,
        };
        s
    }

    fn scope(&self) -> ContractScope {
        match self.contract_scope {
            Scope::Calls => ContractScope::Calls,
            Scope::All => ContractScope::All,
        }
    }

    fn fluid_options(&self) -> FluidOptions {
        FluidOptions {
            guards: match self.guards {
                Guards::Syntactic => GuardMode::Syntactic,
                Guards::Smt => GuardMode::Smt,
                Guards::Strict => GuardMode::Strict,
            },
            discharge: DischargeOptions {
                rounds: self.obligation_rounds,
                solver: self.solver(),
                force_semantic: false,
            },
            jobs: 1,
        }
    }

    fn engine(&self, file: &Path) -> EngineConfig {
        EngineConfig {
            max_rounds: self.max_rounds,
            solver: self.solver(),
            emit_dir: self.emit_smt.as_ref().map(|d| d.join(stem(file))),
            ..EngineConfig::default()
        }
    }
}

fn stem(file: &Path) -> String {
    file.file_stem().and_then(|s| s.to_str()).unwrap_or("task").to_string()
}

fn run_file(cli: &Cli, file: &Path) -> (Report, String) {
    let mut report = Report {
        file: file.display().to_string(),
        ..Report::default()
    };
    report.mode = match cli.mode {
        Mode::Prove => "prove",
        Mode::ProveContracts => "prove-contracts",
        Mode::CheckAcyclicity => "check-acyclicity",
        Mode::Reduce => "reduce",
        Mode::Simulate => "simulate",
    }
    .into();
    let mut text = String::new();
    let code = run_inner(cli, file, &mut report, &mut text);
    report.exit_code = code;
    (report, text)
}

fn input_error(report: &mut Report, text: &mut String, msg: String) -> u8 {
    report.outcome = "input-error".into();
    report.problems.push(msg.clone());
    text.push_str(&format!("error: {msg}\n"));
    EXIT_INPUT
}

fn run_inner(cli: &Cli, file: &Path, report: &mut Report, text: &mut String) -> u8 {
    let source = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => return input_error(report, text, format!("cannot read {}: {e}", file.display())),
    };
    let parsed = if cli.guards == Guards::Strict {
        parse_source_strict(&source)
    } else {
        parse_source(&source)
    };
    let src: SourceFile = match parsed {
        Ok(s) => s,
        Err(e) => return input_error(report, text, format!("{}:{e}", file.display())),
    };
    for w in &src.warnings {
        report.warnings.push(w.to_string());
        text.push_str(&format!("{}:{w}\n", file.display()));
    }
    let task = &src.task;

    let needs_fluid = cli.mode == Mode::CheckAcyclicity || !cli.unsafe_skip_fluid;
    if needs_fluid {
        let fluid = check_fluid(task, &cli.fluid_options());
        report.obligations = fluid.obligations.clone();
        report.problems = fluid.problems();
        if cli.mode == Mode::CheckAcyclicity {
            return acyclicity_verdict(&fluid, report, text);
        }
        if !fluid.is_fluid() {
            text.push_str("not shown to be in the decidable fragment:\n");
            for p in &report.problems {
                text.push_str(&format!("  {p}\n"));
            }
            if fluid.solver_failed() {
                report.outcome = "solver-failure".into();
                return EXIT_SOLVER;
            }
            report.outcome = "not-fluid".into();
            return EXIT_INPUT;
        }
    }

    match cli.mode {
        Mode::CheckAcyclicity => unreachable!(),
        Mode::Prove => {
            let r = run_uqfr(task, &cli.engine(file));
            engine_verdict(cli, r.map_err(|e| e.to_string()), report, text)
        }
        Mode::ProveContracts => {
            if task.contracts.is_empty() {
                text.push_str("note: no contracts; running the plain loop\n");
            }
            let r = run_uqfr_contracts(task, &cli.engine(file), cli.scope());
            engine_verdict(cli, r.map_err(|e| e.to_string()), report, text)
        }
        Mode::Reduce => match reduce_to_fluid(task, cli.scope()) {
            Ok(red) => {
                report.outcome = "reduced".into();
                text.push_str(&print_task(&red.task));
                EXIT_VALID
            }
            Err(e) => input_error(report, text, e.to_string()),
        },
        Mode::Simulate => match simulation_check(task, cli.k, cli.scope(), &cli.engine(file)) {
            Ok(sim) => {
                text.push_str(&format!("{sim}\n"));
                let failed = sim.direct == "failure" || sim.reduced == "failure";
                let ok = sim.is_ok();
                report.outcome = if failed {
                    "solver-failure"
                } else if ok {
                    "consistent"
                } else {
                    "inconsistent"
                }
                .into();
                report.simulation = Some(sim);
                if failed {
                    EXIT_SOLVER
                } else if ok {
                    EXIT_VALID
                } else {
                    EXIT_UNPROVED
                }
            }
            Err(e) => input_error(report, text, e.to_string()),
        },
    }
}

fn acyclicity_verdict(fluid: &FluidReport, report: &mut Report, text: &mut String) -> u8 {
    for o in &fluid.obligations {
        text.push_str(&format!(
            "obligation {} in {}: call {}\n  path {}\n  {}\n  {} [{}]\n",
            o.index,
            o.caller,
            o.callee,
            o.path,
            o.comparison,
            o.status.label(),
            o.tier
        ));
    }
    if fluid.is_fluid() {
        report.outcome = "accepted".into();
        text.push_str("all obligations accepted\n");
        return EXIT_VALID;
    }
    for p in &report.problems {
        text.push_str(&format!("problem: {p}\n"));
    }
    if fluid.solver_failed() {
        report.outcome = "solver-failure".into();
        return EXIT_SOLVER;
    }
    use fluid_core::acyclic::ObligationStatus as S;
    let hard = !fluid.signature.is_valid()
        || !fluid.strata.is_valid()
        || !fluid.guard_errors.is_empty()
        || !fluid.goal_errors.is_empty()
        || !fluid.contract_errors.is_empty()
        || fluid.obligations.iter().any(|o| matches!(o.status, S::Rejected { .. }));
    if hard {
        report.outcome = "rejected".into();
        EXIT_INPUT
    } else {
        report.outcome = "unknown".into();
        EXIT_UNPROVED
    }
}

fn engine_verdict(cli: &Cli, r: Result<EngineResult, String>, report: &mut Report, text: &mut String) -> u8 {
    let res = match r {
        Ok(r) => r,
        Err(e) => return input_error(report, text, e),
    };
    report.per_round = res.records.iter().map(round_count).collect();
    if let Some(level) = cli.trace {
        for rec in &res.records {
            text.push_str(&format!(
                "round {}: {}, {} new instantiation(s), {} formula(s)\n",
                rec.round,
                rec.verdict,
                rec.new_instantiations.len(),
                rec.formulas
            ));
            if level == TraceLevel::Full {
                for f in &rec.added {
                    text.push_str(&format!("  + {f}\n"));
                }
            }
        }
    }
    report.instantiations = Some(res.state.instantiated.len());
    match &res.outcome {
        Outcome::Valid { rounds, instantiations } => {
            report.outcome = "valid".into();
            report.rounds = Some(*rounds);
            text.push_str(&format!(
                "valid after {rounds} round(s), {instantiations} instantiation(s)\n"
            ));
            EXIT_VALID
        }
        Outcome::BudgetExhausted { rounds, saturated, .. } => {
            report.outcome = "budget-exhausted".into();
            report.rounds = Some(*rounds);
            let why = if *saturated {
                "nothing left to unfold"
            } else {
                "round budget used up"
            };
            text.push_str(&format!("not proved after {rounds} round(s): {why}\n"));
            EXIT_UNPROVED
        }
        Outcome::Failure { detail } => {
            report.outcome = "solver-failure".into();
            text.push_str(&format!("solver failure: {detail}\n"));
            EXIT_SOLVER
        }
    }
}

fn round_count(r: &RoundRecord) -> RoundCount {
    RoundCount {
        round: r.round,
        verdict: match &r.verdict {
            Verdict::ProcessError(_) => "process-error".into(),
            v => v.to_string(),
        },
        new_instantiations: r.new_instantiations.len(),
        new_contracts: r.new_contracts.len(),
        formulas: r.formulas,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs.max(1).min(cli.files.len());
    let mut results: Vec<Option<(Report, String)>> = (0..cli.files.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let cli = &cli;
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                s.spawn(move || {
                    cli.files
                        .iter()
                        .enumerate()
                        .skip(j)
                        .step_by(jobs)
                        .map(|(i, f)| (i, run_file(cli, f)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    let results: Vec<(Report, String)> = results.into_iter().map(|r| r.expect("every file processed")).collect();
    let code = results.iter().map(|(r, _)| r.exit_code).max().unwrap_or(EXIT_VALID);
    if cli.json {
        let reports: Vec<&Report> = results.iter().map(|(r, _)| r).collect();
        let out = if reports.len() == 1 {
            serde_json::to_string_pretty(reports[0])
        } else {
            serde_json::to_string_pretty(&reports)
        };
        println!("{}", out.expect("reports serialize"));
    } else {
        let many = results.len() > 1;
        for (r, t) in &results {
            if many {
                println!("== {}", r.file);
            }
            print!("{t}");
        }
    }
    ExitCode::from(code)
}

//! Provable acyclicity of definitions and membership in the decidable
//! fragment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::contracts::check_contracts;
use crate::dapp::{collect_d_applications, normalize, DApp};
use crate::defs::{structural_descent, validate_stratification, DefSet, Definition, Order, RankSpec, StratReport};
use crate::engine::{run_uqfr, EngineConfig, Outcome};
use crate::expr::{Builtin, Expr, Var};
use crate::guards::{check_guards, GuardOccurrence};
use crate::paths::call_sites;
use crate::sig::{FunDecl, Signature, Sort, ValidationReport};
use crate::skolem::universal_prefix;
use crate::smt::{Session, SolverConfig, Verdict};
use crate::task::Task;

pub const DEFAULT_OBLIGATION_ROUNDS: usize = 4;

/// `path -> rank_callee(args) < rank_caller(params)` for one same-stratum
/// call site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub index: usize,
    pub caller: String,
    pub stratum: usize,
    pub params: Vec<Var>,
    pub callee: DApp,
    pub path: Vec<Expr>,
    pub caller_rank: Expr,
    pub callee_rank: Expr,
    pub order: Order,
}

impl Obligation {
    pub fn condition(&self) -> Expr {
        Expr::conj(self.path.clone())
    }

    /// The goal for the semantic tier; only integer orders have one.
    pub fn goal(&self) -> Option<Expr> {
        match self.order {
            Order::IntLt => Some(self.quantified(Expr::lt(self.callee_rank.clone(), self.caller_rank.clone()))),
            Order::Subterm => None,
        }
    }

    fn quantified(&self, cmp: Expr) -> Expr {
        let body = if self.path.is_empty() {
            cmp
        } else {
            Expr::implies(self.condition(), cmp)
        };
        if self.params.is_empty() {
            body
        } else {
            Expr::forall(self.params.clone(), body)
        }
    }
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.order {
            Order::IntLt => "<",
            Order::Subterm => "<subterm",
        };
        write!(
            f,
            "{} -> ({} {} {})",
            self.condition(),
            op,
            self.callee_rank,
            self.caller_rank
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ObligationStatus {
    AcceptedStructural,
    AcceptedSemantic { rounds: usize },
    Rejected { reason: String },
    Unknown { reason: String },
    SolverFailure { detail: String },
}

impl ObligationStatus {
    pub fn is_accepted(&self) -> bool {
        matches!(
            self,
            ObligationStatus::AcceptedStructural | ObligationStatus::AcceptedSemantic { .. }
        )
    }

    pub fn tier(&self) -> &'static str {
        match self {
            ObligationStatus::AcceptedStructural => "structural",
            ObligationStatus::AcceptedSemantic { .. } => "semantic",
            _ => "-",
        }
    }

    pub fn label(&self) -> String {
        match self {
            ObligationStatus::AcceptedStructural => "accepted".into(),
            ObligationStatus::AcceptedSemantic { rounds } => format!("accepted ({rounds} round(s))"),
            ObligationStatus::Rejected { reason } => format!("rejected: {reason}"),
            ObligationStatus::Unknown { reason } => format!("unknown: {reason}"),
            ObligationStatus::SolverFailure { detail } => format!("solver failure: {detail}"),
        }
    }
}

/// One obligation per same-stratum call site, in definition order.
pub fn acyclicity_obligations(sig: &Signature, defs: &DefSet) -> Vec<Obligation> {
    let mut out = Vec::new();
    for d in defs {
        let (Some(caller_rank), Some(sort)) = (d.rank_term(), d.rank_sort(sig)) else {
            continue;
        };
        let Some(order) = Order::for_sort(&sort) else { continue };
        for site in call_sites(&d.body) {
            let Some(g) = defs.get(&site.app.symbol) else { continue };
            if g.stratum != d.stratum {
                continue;
            }
            let Some(callee_rank) = g.rank_at(&site.app.args) else {
                continue;
            };
            out.push(Obligation {
                index: out.len(),
                caller: d.name.clone(),
                stratum: d.stratum,
                params: d.params.clone(),
                callee: site.app.clone(),
                path: site.literals.clone(),
                caller_rank: caller_rank.clone(),
                callee_rank,
                order,
            });
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct DischargeOptions {
    pub rounds: usize,
    pub solver: SolverConfig,
    /// Skip the structural tier and compare subterms through synthesized
    /// height functions instead.
    pub force_semantic: bool,
}

impl Default for DischargeOptions {
    fn default() -> Self {
        DischargeOptions {
            rounds: DEFAULT_OBLIGATION_ROUNDS,
            solver: SolverConfig::default(),
            force_semantic: false,
        }
    }
}

pub fn discharge_obligation(
    sig: &Signature,
    defs: &DefSet,
    ob: &Obligation,
    opts: &DischargeOptions,
) -> ObligationStatus {
    if ob.callee_rank == ob.caller_rank {
        return ObligationStatus::Rejected {
            reason: format!("rank does not decrease: both sides are {}", ob.caller_rank),
        };
    }
    match ob.order {
        Order::Subterm => {
            if !opts.force_semantic {
                if let Expr::Var(p) = &ob.caller_rank {
                    if ob.params.contains(p) && structural_descent(sig, &ob.path, &ob.callee_rank, p) {
                        return ObligationStatus::AcceptedStructural;
                    }
                }
                return ObligationStatus::Unknown {
                    reason: "subterm comparison is not a guarded destructor chain; subterm orders are only discharged structurally"
                        .into(),
                };
            }
            let (hsig, hdefs, names) = with_heights(sig, defs.below(ob.stratum));
            let Some(Sort::Adt(adt)) = sig.sort_of(&ob.caller_rank).ok() else {
                return ObligationStatus::Unknown {
                    reason: "rank is not an ADT term".into(),
                };
            };
            let h = &names[&adt];
            let cmp = Expr::lt(
                Expr::call(h, vec![ob.callee_rank.clone()]),
                Expr::call(h, vec![ob.caller_rank.clone()]),
            );
            semantic(Task::new(hsig, hdefs, ob.quantified(cmp)), opts)
        }
        Order::IntLt => {
            let goal = ob.goal().expect("integer obligations have a goal");
            semantic(Task::new(sig.clone(), defs.below(ob.stratum), goal), opts)
        }
    }
}

fn semantic(task: Task, opts: &DischargeOptions) -> ObligationStatus {
    let cfg = EngineConfig {
        max_rounds: opts.rounds,
        solver: opts.solver.clone(),
        ..EngineConfig::default()
    };
    match run_uqfr(&task, &cfg) {
        Ok(r) => match r.outcome {
            Outcome::Valid { rounds, .. } => ObligationStatus::AcceptedSemantic { rounds },
            Outcome::BudgetExhausted { rounds, .. } => ObligationStatus::Unknown {
                reason: format!("not proved within {rounds} round(s)"),
            },
            Outcome::Failure { detail } => ObligationStatus::SolverFailure { detail },
        },
        Err(e) => ObligationStatus::SolverFailure { detail: e.to_string() },
    }
}

/// Adds a height function per ADT sort, counting only fields of the same
/// sort: `h(C(..)) = 1 + max(h(field) ..)`.
fn with_heights(sig: &Signature, mut defs: DefSet) -> (Signature, DefSet, BTreeMap<String, String>) {
    let mut sig = sig.clone();
    let mut names = BTreeMap::new();
    for adt in sig.adts().to_vec() {
        let mut name = format!("height_{}", adt.name);
        while sig.lookup(&name).is_some() {
            name.push('_');
        }
        let x = Var::new("x", adt.sort());
        let xe = Expr::Var(x.clone());
        let mut body: Option<Expr> = None;
        for c in adt.constructors.iter().rev() {
            let subs: Vec<Expr> = c
                .fields
                .iter()
                .filter(|f| f.sort == adt.sort())
                .map(|f| Expr::call(&name, vec![Expr::dtor(&f.destructor, xe.clone())]))
                .collect();
            let value = match subs.split_first() {
                None => Expr::Int(0),
                Some((first, rest)) => {
                    let max = rest.iter().fold(first.clone(), |m, s| {
                        Expr::ite(Expr::builtin(Builtin::Ge, vec![m.clone(), s.clone()]), m, s.clone())
                    });
                    Expr::add(vec![Expr::Int(1), max])
                }
            };
            body = Some(match body {
                None => value,
                Some(rest) => Expr::ite(Expr::is(&c.name, xe.clone()), value, rest),
            });
        }
        let Some(body) = body else { continue };
        sig.add_defined(FunDecl::new(&name, vec![adt.sort()], Sort::Int));
        defs.push(Definition {
            name: name.clone(),
            params: vec![x],
            ret: Sort::Int,
            body,
            stratum: 0,
            rank: RankSpec::Identity,
        });
        names.insert(adt.name.clone(), name);
    }
    (sig, defs, names)
}

/// Discharges obligations on up to `jobs` threads; results keep obligation
/// order.
pub fn discharge_all(
    sig: &Signature,
    defs: &DefSet,
    obligations: &[Obligation],
    opts: &DischargeOptions,
    jobs: usize,
) -> Vec<ObligationStatus> {
    let jobs = jobs.max(1).min(obligations.len().max(1));
    if jobs == 1 {
        return obligations
            .iter()
            .map(|o| discharge_obligation(sig, defs, o, opts))
            .collect();
    }
    let mut results: Vec<Option<ObligationStatus>> = vec![None; obligations.len()];
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                s.spawn(move || {
                    obligations
                        .iter()
                        .enumerate()
                        .skip(j)
                        .step_by(jobs)
                        .map(|(i, o)| (i, discharge_obligation(sig, defs, o, opts)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, st) in h.join().expect("obligation worker panicked") {
                results[i] = Some(st);
            }
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every obligation discharged"))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuardMode {
    /// Unguarded destructors are reported as warnings.
    #[default]
    Syntactic,
    /// Destructors not guarded syntactically are checked by the solver;
    /// failures are errors.
    Smt,
    /// Unguarded destructors are errors.
    Strict,
}

impl std::str::FromStr for GuardMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "syntactic" => Ok(GuardMode::Syntactic),
            "smt" => Ok(GuardMode::Smt),
            "strict" => Ok(GuardMode::Strict),
            _ => Err(format!("unknown guard mode {s}")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FluidOptions {
    pub guards: GuardMode,
    pub discharge: DischargeOptions,
    pub jobs: usize,
}

impl Default for FluidOptions {
    fn default() -> Self {
        FluidOptions {
            guards: GuardMode::Syntactic,
            discharge: DischargeOptions::default(),
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GuardFinding {
    /// Definition name, or `goal`.
    pub location: String,
    #[serde(flatten)]
    pub occurrence: GuardOccurrence,
    /// Set in solver mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObligationResult {
    pub index: usize,
    pub caller: String,
    pub callee: String,
    pub path: String,
    pub comparison: String,
    pub tier: String,
    #[serde(flatten)]
    pub status: ObligationStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct FluidReport {
    pub signature: ValidationReport,
    pub strata: StratReport,
    pub guard_warnings: Vec<GuardFinding>,
    pub guard_errors: Vec<GuardFinding>,
    pub obligations: Vec<ObligationResult>,
    pub goal_errors: Vec<String>,
    pub contract_errors: Vec<String>,
}

impl FluidReport {
    pub fn is_fluid(&self) -> bool {
        self.signature.is_valid()
            && self.strata.is_valid()
            && self.guard_errors.is_empty()
            && self.goal_errors.is_empty()
            && self.contract_errors.is_empty()
            && self.obligations.iter().all(|o| o.status.is_accepted())
    }

    pub fn solver_failed(&self) -> bool {
        self.obligations
            .iter()
            .any(|o| matches!(o.status, ObligationStatus::SolverFailure { .. }))
            || self
                .guard_errors
                .iter()
                .any(|g| g.solver.as_deref().is_some_and(|s| s.starts_with("error")))
    }

    /// Human-readable problems, one per line.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        out.extend(self.signature.violations.iter().map(|v| format!("signature: {v}")));
        out.extend(self.strata.violations.iter().map(|v| format!("definitions: {v}")));
        out.extend(self.guard_errors.iter().map(|g| {
            format!(
                "{}: destructor {} on {} is not guarded by is-{}",
                g.location, g.occurrence.destructor, g.occurrence.argument, g.occurrence.constructor
            )
        }));
        out.extend(self.goal_errors.iter().map(|e| format!("goal: {e}")));
        out.extend(self.contract_errors.iter().map(|e| format!("contract: {e}")));
        for o in &self.obligations {
            if !o.status.is_accepted() {
                out.push(format!(
                    "obligation {} ({} calls {}): {}",
                    o.index,
                    o.caller,
                    o.callee,
                    o.status.label()
                ));
            }
        }
        out
    }
}

/// Signature, guards, strata, acyclicity obligations, goal shape and
/// contracts; the task is in the fragment iff all of them pass.
pub fn check_fluid(task: &Task, opts: &FluidOptions) -> FluidReport {
    let signature = task.sig.validate();
    let strata = validate_stratification(&task.sig, &task.defs);

    let mut goal_errors = Vec::new();
    match task.sig.sort_of(&task.goal) {
        Ok(Sort::Bool) => {}
        Ok(s) => goal_errors.push(format!("goal has sort {s}, expected Bool")),
        Err(e) => goal_errors.push(e.to_string()),
    }
    if let Err(e) = universal_prefix(&task.goal) {
        goal_errors.push(e.to_string());
    }
    if let Some(v) = task.goal.free_vars().into_iter().next() {
        goal_errors.push(format!("free variable {}", v.name));
    }
    let contract_errors = match check_contracts(task) {
        Ok(()) => Vec::new(),
        Err(e) => vec![e.to_string()],
    };

    let mut findings = Vec::new();
    let mut sites: Vec<(String, &Expr)> = task.defs.iter().map(|d| (d.name.clone(), &d.body)).collect();
    sites.push(("goal".into(), &task.goal));
    for c in &task.contracts {
        sites.push((format!("contract {}", c.symbol), &c.pre));
        sites.push((format!("contract {}", c.symbol), &c.post));
    }
    for (loc, e) in &sites {
        if task.sig.sort_of(e).is_err() {
            continue;
        }
        for occ in check_guards(&task.sig, e)
            .occurrences
            .into_iter()
            .filter(|o| !o.guarded)
        {
            findings.push(GuardFinding {
                location: loc.clone(),
                occurrence: occ,
                solver: None,
            });
        }
    }
    let (guard_warnings, guard_errors) = match opts.guards {
        GuardMode::Syntactic => (findings, Vec::new()),
        GuardMode::Strict => (Vec::new(), findings),
        GuardMode::Smt => {
            let mut errors = Vec::new();
            for (loc, e) in &sites {
                if task.sig.sort_of(e).is_err() {
                    continue;
                }
                for (occ, v) in smt_guard_check(&task.sig, e, &opts.discharge.solver) {
                    if v != Verdict::Unsat {
                        errors.push(GuardFinding {
                            location: loc.clone(),
                            occurrence: occ,
                            solver: Some(v.to_string()),
                        });
                    }
                }
            }
            (Vec::new(), errors)
        }
    };

    let obligations = if signature.is_valid() && strata.is_valid() {
        let obs = acyclicity_obligations(&task.sig, &task.defs);
        let statuses = discharge_all(&task.sig, &task.defs, &obs, &opts.discharge, opts.jobs);
        obs.iter().zip(statuses).map(|(o, s)| obligation_result(o, s)).collect()
    } else {
        Vec::new()
    };

    FluidReport {
        signature,
        strata,
        guard_warnings,
        guard_errors,
        obligations,
        goal_errors,
        contract_errors,
    }
}

pub fn obligation_result(o: &Obligation, status: ObligationStatus) -> ObligationResult {
    ObligationResult {
        index: o.index,
        caller: o.caller.clone(),
        callee: o.callee.to_string(),
        path: o.condition().to_string(),
        comparison: format!(
            "({} {} {})",
            if o.order == Order::IntLt { "<" } else { "<subterm" },
            o.callee_rank,
            o.caller_rank
        ),
        tier: status.tier().to_string(),
        status,
    }
}

/// Checks `path -> is-C(t)` for every destructor not guarded syntactically,
/// treating defined symbols as uninterpreted.
fn smt_guard_check(sig: &Signature, e: &Expr, solver: &SolverConfig) -> Vec<(GuardOccurrence, Verdict)> {
    use crate::paths::{path_conditions_with, PathRules};
    let report = check_guards(sig, e);
    let paths = path_conditions_with(e, PathRules::Connectives);
    let mut out = Vec::new();
    for occ in report.occurrences.into_iter().filter(|o| !o.guarded) {
        let Some(p) = paths.iter().find(|p| p.position == occ.position) else {
            continue;
        };
        let crate::expr::Expr::App(_, args) = &p.expr else {
            continue;
        };
        let query = Expr::conj(vec![
            p.condition(),
            Expr::not(Expr::is(&occ.constructor, args[0].clone())),
        ]);
        let mut session = Session::new(solver.clone(), sig);
        let v = match session.assert(&query) {
            Ok(()) => session.check().verdict,
            Err(err) => Verdict::ProcessError(err.to_string()),
        };
        out.push((occ, v));
    }
    out
}

/// Drops `ite` branches whose condition is decided by recognizers applied to
/// constructor terms, so a ground unfolding only keeps the calls its
/// computation makes.
fn prune(e: &Expr) -> Expr {
    use crate::expr::Op;
    match e {
        Expr::Ite(c, t, f) => match prune(c) {
            Expr::Bool(true) => prune(t),
            Expr::Bool(false) => prune(f),
            c => Expr::ite(c, prune(t), prune(f)),
        },
        Expr::App(op, args) => {
            let args: Vec<Expr> = args.iter().map(prune).collect();
            match (op, args.as_slice()) {
                (Op::Is(c), [Expr::App(Op::Ctor(k), _)]) => Expr::Bool(c == k),
                (Op::Builtin(Builtin::Not), [Expr::Bool(b)]) => Expr::Bool(!b),
                _ => Expr::App(op.clone(), args),
            }
        }
        _ => e.clone(),
    }
}

/// Closes `apps` under "applications occurring in the unfolded body",
/// `depth` times. Branches that a ground argument rules out are skipped.
pub fn computational_closure(sig: &Signature, apps: &BTreeSet<DApp>, defs: &DefSet, depth: usize) -> BTreeSet<DApp> {
    let mut all: BTreeSet<DApp> = apps.iter().map(|a| a.normalized(sig)).collect();
    let mut frontier: Vec<DApp> = all.iter().cloned().collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for app in &frontier {
            let Some(d) = defs.get(&app.symbol) else { continue };
            let body = prune(&normalize(sig, &d.body_at(&app.args)));
            for found in collect_d_applications(sig, [&body]) {
                if all.insert(found.clone()) {
                    next.push(found);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    all
}

//! The unfolding loop: check the current quantifier-free formula set, and if
//! it is satisfiable, unfold every defined-symbol application that occurs in
//! it and has not been unfolded yet.

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::sync::mpsc::Sender;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::contracts::{Contract, ContractScope};
use crate::dapp::{collect_into, DApp};
use crate::defs::{DefSet, Definition};
use crate::expr::{Expr, SortError, Var};
use crate::paths::call_sites;
use crate::sig::Signature;
use crate::skolem::{skolemize_negated_goal, SkolemError};
use crate::smt::{EncodeError, Session, SolverConfig, Verdict};
use crate::task::Task;

pub const DEFAULT_MAX_ROUNDS: usize = 8;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Number of unfolding rounds; the solver is consulted at most
    /// `max_rounds + 1` times.
    pub max_rounds: usize,
    pub solver: SolverConfig,
    /// Write each round's full script as `round_<i>.smt2` here.
    pub emit_dir: Option<PathBuf>,
    pub trace: Option<Sender<RoundRecord>>,
    /// Ask the solver for a model when the budget runs out.
    pub model_hint: bool,
    /// Overrides the task hash in skolem constant names.
    pub skolem_tag: Option<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_rounds: DEFAULT_MAX_ROUNDS,
            solver: SolverConfig::default(),
            emit_dir: None,
            trace: None,
            model_hint: false,
            skolem_tag: None,
        }
    }
}

impl EngineConfig {
    pub fn with_rounds(max_rounds: usize) -> Self {
        EngineConfig {
            max_rounds,
            ..EngineConfig::default()
        }
    }
}

/// Where a formula in the accumulated set came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Goal,
    Unfolding(DApp),
    Contract(DApp),
}

#[derive(Clone, Debug)]
pub struct RoundState {
    /// Accumulated formulas in insertion order.
    pub formulas: Vec<(Origin, Expr)>,
    pub instantiated: BTreeSet<DApp>,
    /// Applications whose contract instance has been asserted.
    pub contracted: BTreeSet<DApp>,
    pub round: usize,
    pub constants: Vec<Var>,
    /// Applications occurring in goal and unfolding formulas.
    occurring: BTreeSet<DApp>,
    /// Applications at call positions of some unfolded body.
    call_positions: BTreeSet<DApp>,
    seen: HashSet<Expr>,
    asserted: usize,
}

impl RoundState {
    fn new(sig: &Signature, negated_goal: Expr, constants: Vec<Var>) -> Self {
        let mut s = RoundState {
            formulas: Vec::new(),
            instantiated: BTreeSet::new(),
            contracted: BTreeSet::new(),
            round: 0,
            constants,
            occurring: BTreeSet::new(),
            call_positions: BTreeSet::new(),
            seen: HashSet::new(),
            asserted: 0,
        };
        s.add(sig, Origin::Goal, negated_goal);
        s
    }

    fn add(&mut self, sig: &Signature, origin: Origin, f: Expr) -> bool {
        if !self.seen.insert(f.clone()) {
            return false;
        }
        if !matches!(origin, Origin::Contract(_)) {
            collect_into(sig, &f, &mut self.occurring);
        }
        self.formulas.push((origin, f));
        true
    }

    pub fn formula_exprs(&self) -> impl Iterator<Item = &Expr> {
        self.formulas.iter().map(|(_, f)| f)
    }

    pub fn unfoldings(&self) -> impl Iterator<Item = (&DApp, &Expr)> {
        self.formulas.iter().filter_map(|(o, f)| match o {
            Origin::Unfolding(d) => Some((d, f)),
            _ => None,
        })
    }

    /// Applications occurring in the goal and unfolding formulas that have a
    /// definition and have not been unfolded.
    pub fn pending(&self, defs: &DefSet) -> Vec<DApp> {
        self.occurring
            .iter()
            .filter(|d| defs.get(&d.symbol).is_some() && !self.instantiated.contains(d))
            .cloned()
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub verdict: Verdict,
    /// Unfoldings added after this round's check, in order.
    #[serde(serialize_with = "ser_dapps")]
    pub new_instantiations: Vec<DApp>,
    #[serde(serialize_with = "ser_dapps")]
    pub new_contracts: Vec<DApp>,
    /// Size of the formula set after this round.
    pub formulas: usize,
    #[serde(skip)]
    pub elapsed: Duration,
    /// New formulas in surface syntax, for full traces.
    #[serde(skip)]
    pub added: Vec<String>,
}

fn ser_dapps<S: serde::Serializer>(v: &[DApp], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|d| d.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Valid {
        rounds: usize,
        instantiations: usize,
    },
    BudgetExhausted {
        rounds: usize,
        saturated: bool,
        #[serde(skip)]
        model_hint: Option<String>,
    },
    Failure {
        detail: String,
    },
}

impl Outcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, Outcome::Valid { .. })
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self, Outcome::BudgetExhausted { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Valid { .. } => "valid",
            Outcome::BudgetExhausted { .. } => "budget-exhausted",
            Outcome::Failure { .. } => "failure",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EngineResult {
    pub outcome: Outcome,
    pub records: Vec<RoundRecord>,
    pub state: RoundState,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Skolem(#[from] SkolemError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("cannot write {path}: {source}")]
    Emit { path: PathBuf, source: std::io::Error },
}

/// `D(args) = body[args/params]`, after checking the argument sorts.
pub fn unfold(sig: &Signature, def: &Definition, args: &[Expr]) -> Result<Expr, SortError> {
    if args.len() != def.params.len() {
        return Err(SortError::Arity {
            symbol: def.name.clone(),
            expected: def.params.len(),
            found: args.len(),
        });
    }
    for (i, (p, a)) in def.params.iter().zip(args).enumerate() {
        let s = sig.sort_of(a)?;
        if s != p.sort {
            return Err(SortError::Mismatch {
                symbol: def.name.clone(),
                position: i,
                expected: p.sort.clone(),
                found: s,
            });
        }
    }
    Ok(def.unfold_at(args))
}

/// Contract assertions made alongside unfoldings.
#[derive(Clone, Debug)]
pub struct ContractMode<'t> {
    pub contracts: &'t [Contract],
    pub scope: ContractScope,
}

/// One task, one solver session.
pub struct Engine<'t> {
    task: &'t Task,
    cfg: &'t EngineConfig,
    session: Session,
    pub state: RoundState,
    contracts: Option<ContractMode<'t>>,
    records: Vec<RoundRecord>,
    /// Keep unfolding after an `unsat` check.
    pub(crate) force_unfold: bool,
}

impl<'t> Engine<'t> {
    pub fn new(task: &'t Task, cfg: &'t EngineConfig) -> Result<Engine<'t>, EngineError> {
        let tag = cfg.skolem_tag.clone().unwrap_or_else(|| task.hash());
        let (neg, consts) = skolemize_negated_goal(&task.goal, &tag)?;
        Ok(Engine {
            task,
            cfg,
            session: Session::new(cfg.solver.clone(), &task.sig),
            state: RoundState::new(&task.sig, neg, consts),
            contracts: None,
            records: Vec::new(),
            force_unfold: false,
        })
    }

    pub fn with_contracts(mut self, mode: ContractMode<'t>) -> Self {
        self.contracts = Some(mode);
        self
    }

    fn check(&mut self) -> Result<Verdict, EngineError> {
        for (_, f) in &self.state.formulas[self.state.asserted..] {
            self.session.assert(f)?;
        }
        self.state.asserted = self.state.formulas.len();
        if let Some(dir) = &self.cfg.emit_dir {
            let path = dir.join(format!("round_{}.smt2", self.state.round));
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(&path, self.session.script()))
                .map_err(|source| EngineError::Emit { path, source })?;
        }
        Ok(self.session.check().verdict)
    }

    /// Unfolds every pending application; returns what was added.
    fn unfold_pending(&mut self) -> (Vec<DApp>, Vec<DApp>, Vec<String>) {
        let defs = &self.task.defs;
        let pending = self.state.pending(defs);
        let mut new_contracts = Vec::new();
        let mut added = Vec::new();
        for app in &pending {
            let def = defs.get(&app.symbol).expect("pending applications have definitions");
            let f = def.unfold_at(&app.args);
            self.state.instantiated.insert(app.clone());
            if self
                .state
                .add(&self.task.sig, Origin::Unfolding(app.clone()), f.clone())
            {
                added.push(f.to_string());
            }
            if let Some(mode) = &self.contracts {
                let eligible = match mode.scope {
                    ContractScope::All => true,
                    ContractScope::Calls => self.state.call_positions.contains(app),
                };
                if let (true, Some(c)) = (eligible, mode.contracts.iter().find(|c| c.symbol == app.symbol)) {
                    let inst = c.instance(def, &app.args);
                    self.state.contracted.insert(app.clone());
                    new_contracts.push(app.clone());
                    if self
                        .state
                        .add(&self.task.sig, Origin::Contract(app.clone()), inst.clone())
                    {
                        added.push(inst.to_string());
                    }
                }
            }
        }
        for app in &pending {
            let def = defs.get(&app.symbol).expect("pending applications have definitions");
            for site in call_sites(&def.body) {
                let inst = DApp::new(
                    &site.app.symbol,
                    site.app.args.iter().map(|a| def_arg(def, &app.args, a)).collect(),
                );
                self.state.call_positions.insert(inst.normalized(&self.task.sig));
            }
        }
        // An application unfolded before it was seen at a call position gets
        // its contract once it is.
        if let Some(mode) = &self.contracts {
            if mode.scope == ContractScope::Calls {
                let late: Vec<DApp> = self
                    .state
                    .instantiated
                    .iter()
                    .filter(|a| !self.state.contracted.contains(*a) && self.state.call_positions.contains(*a))
                    .cloned()
                    .collect();
                for app in late {
                    let Some(c) = mode.contracts.iter().find(|c| c.symbol == app.symbol) else {
                        continue;
                    };
                    let def = defs
                        .get(&app.symbol)
                        .expect("instantiated applications have definitions");
                    let inst = c.instance(def, &app.args);
                    self.state.contracted.insert(app.clone());
                    new_contracts.push(app.clone());
                    if self
                        .state
                        .add(&self.task.sig, Origin::Contract(app.clone()), inst.clone())
                    {
                        added.push(inst.to_string());
                    }
                }
            }
        }
        (pending, new_contracts, added)
    }

    /// One loop iteration: check, then unfold unless the check was `unsat`
    /// or failed.
    pub fn step(&mut self, unfold_after: bool) -> Result<&RoundRecord, EngineError> {
        let start = std::time::Instant::now();
        let verdict = self.check()?;
        let (new_instantiations, new_contracts, added) =
            if unfold_after && !verdict.is_failure() && (self.force_unfold || !verdict.is_unsat()) {
                self.unfold_pending()
            } else {
                Default::default()
            };
        let rec = RoundRecord {
            round: self.state.round,
            verdict,
            new_instantiations,
            new_contracts,
            formulas: self.state.formulas.len(),
            elapsed: start.elapsed(),
            added,
        };
        if let Some(tx) = &self.cfg.trace {
            let _ = tx.send(rec.clone());
        }
        self.records.push(rec);
        self.state.round += 1;
        Ok(self.records.last().unwrap())
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn run(mut self) -> Result<EngineResult, EngineError> {
        let outcome = loop {
            let round = self.state.round;
            let last = round >= self.cfg.max_rounds;
            let rec = self.step(!last)?;
            match &rec.verdict {
                Verdict::Unsat => {
                    break Outcome::Valid {
                        rounds: round,
                        instantiations: self.state.instantiated.len(),
                    }
                }
                Verdict::ProcessError(d) => break Outcome::Failure { detail: d.clone() },
                _ => {}
            }
            let saturated = rec.new_instantiations.is_empty();
            let sat = rec.verdict == Verdict::Sat;
            if last || saturated {
                let model_hint = if self.cfg.model_hint && sat {
                    self.session.model_hint()
                } else {
                    None
                };
                break Outcome::BudgetExhausted {
                    rounds: round,
                    saturated: saturated && !last,
                    model_hint,
                };
            }
        };
        Ok(EngineResult {
            outcome,
            records: self.records,
            state: self.state,
        })
    }
}

fn def_arg(def: &Definition, args: &[Expr], e: &Expr) -> Expr {
    let binding = def
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    e.instantiate(&binding)
}

/// Runs the unfolding loop on a task.
pub fn run_uqfr(task: &Task, cfg: &EngineConfig) -> Result<EngineResult, EngineError> {
    Engine::new(task, cfg)?.run()
}

/// One loop iteration on an existing engine.
pub fn step_round<'e>(engine: &'e mut Engine<'_>) -> Result<&'e RoundRecord, EngineError> {
    engine.step(true)
}

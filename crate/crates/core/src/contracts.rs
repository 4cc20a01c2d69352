//! Contract-assuming unfolding, and its compilation into plain definitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dapp::{collect_d_applications, DApp};
use crate::defs::{DefSet, Definition, RankSpec};
use crate::engine::{ContractMode, Engine, EngineConfig, EngineError, EngineResult, Origin, Outcome, RoundRecord};
use crate::expr::{Expr, Var};
use crate::paths::call_sites;
use crate::sig::{FunDecl, Sort};
use crate::skolem::{universal_prefix, SkolemError};
use crate::smt::Verdict;
use crate::task::Task;

/// `pre -> post` for one defined symbol; `ret` stands for the result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contract {
    pub symbol: String,
    pub pre: Expr,
    pub post: Expr,
    pub ret: Var,
}

impl Contract {
    pub fn combined(&self) -> Expr {
        if self.pre == Expr::Bool(true) {
            self.post.clone()
        } else {
            Expr::implies(self.pre.clone(), self.post.clone())
        }
    }

    /// The contract at `args`, with the result variable replaced by the
    /// application itself.
    pub fn instance(&self, def: &Definition, args: &[Expr]) -> Expr {
        let mut binding: BTreeMap<String, Expr> = def
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(args.iter().cloned())
            .collect();
        binding.insert(self.ret.name.clone(), Expr::call(&def.name, args.to_vec()));
        self.combined().instantiate(&binding)
    }

    pub fn is_vacuous(&self) -> bool {
        self.post == Expr::Bool(true) || self.pre == Expr::Bool(false)
    }
}

/// Which collected applications get their contract asserted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractScope {
    /// Only applications that occur at a call position of an unfolded body,
    /// so a contract is never assumed for the goal's own applications.
    #[default]
    Calls,
    /// Every collected application, including those in the negated goal.
    All,
}

impl std::str::FromStr for ContractScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "calls" => Ok(ContractScope::Calls),
            "all" => Ok(ContractScope::All),
            _ => Err(format!("unknown contract scope {s}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("contract for {0}, which has no definition")]
    MissingDefinition(String),
    #[error("contract for {symbol} mentions {var}, which is neither a parameter nor the result")]
    FreeVariable { symbol: String, var: String },
    #[error("contract for {symbol} is ill-sorted: {detail}")]
    IllSorted { symbol: String, detail: String },
    #[error("contract for {0} is quantified")]
    Quantified(String),
    #[error(transparent)]
    Goal(#[from] SkolemError),
}

pub fn check_contracts(task: &Task) -> Result<(), ReduceError> {
    for c in &task.contracts {
        let def = task
            .defs
            .get(&c.symbol)
            .ok_or_else(|| ReduceError::MissingDefinition(c.symbol.clone()))?;
        let mut allowed: BTreeSet<&str> = def.params.iter().map(|p| p.name.as_str()).collect();
        allowed.insert(&c.ret.name);
        for f in [&c.pre, &c.post] {
            if !f.is_quantifier_free() {
                return Err(ReduceError::Quantified(c.symbol.clone()));
            }
            if let Some(v) = f.free_vars().into_iter().find(|v| !allowed.contains(v.name.as_str())) {
                return Err(ReduceError::FreeVariable {
                    symbol: c.symbol.clone(),
                    var: v.name,
                });
            }
            match task.sig.sort_of(f) {
                Ok(Sort::Bool) => {}
                Ok(s) => {
                    return Err(ReduceError::IllSorted {
                        symbol: c.symbol.clone(),
                        detail: format!("sort {s}, expected Bool"),
                    })
                }
                Err(e) => {
                    return Err(ReduceError::IllSorted {
                        symbol: c.symbol.clone(),
                        detail: e.to_string(),
                    })
                }
            }
        }
        if c.ret.sort != def.ret {
            return Err(ReduceError::IllSorted {
                symbol: c.symbol.clone(),
                detail: format!("result variable has sort {}, expected {}", c.ret.sort, def.ret),
            });
        }
    }
    Ok(())
}

/// Unfolding with contract instances asserted next to each unfolding.
pub fn run_uqfr_contracts(task: &Task, cfg: &EngineConfig, scope: ContractScope) -> Result<EngineResult, EngineError> {
    Engine::new(task, cfg)?
        .with_contracts(ContractMode {
            contracts: &task.contracts,
            scope,
        })
        .run()
}

/// Output of the reduction: the plain task and the synthesized symbols.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub task: Task,
    /// Original symbol to its synthesized contract predicate.
    pub predicates: BTreeMap<String, String>,
}

/// Compiles contracts into recursive predicates `Contract_H`, one for every
/// symbol that has a contract or can reach one through calls, and guards
/// the goal with the predicates at its applications.
pub fn reduce_to_fluid(task: &Task, scope: ContractScope) -> Result<Reduction, ReduceError> {
    check_contracts(task)?;
    let contracted: BTreeSet<&str> = task.contracts.iter().map(|c| c.symbol.as_str()).collect();
    // Symbols that reach a contracted symbol.
    let mut reach: BTreeSet<String> = contracted.iter().map(|s| s.to_string()).collect();
    loop {
        let before = reach.len();
        for d in &task.defs {
            if !reach.contains(&d.name) && d.callees().iter().any(|c| reach.contains(c)) {
                reach.insert(d.name.clone());
            }
        }
        if reach.len() == before {
            break;
        }
    }
    let mut taken: BTreeSet<String> = task
        .sig
        .adts()
        .iter()
        .flat_map(|a| {
            a.constructors.iter().flat_map(|c| {
                std::iter::once(c.name.clone())
                    .chain(std::iter::once(c.recognizer.clone()))
                    .chain(c.fields.iter().map(|f| f.destructor.clone()))
            })
        })
        .chain(task.sig.functions().iter().map(|f| f.name.clone()))
        .chain(task.sig.defined_symbols().iter().map(|f| f.name.clone()))
        .collect();
    let mut predicates = BTreeMap::new();
    for d in &task.defs {
        if reach.contains(&d.name) {
            let mut name = format!("Contract_{}", d.name);
            while taken.contains(&name) {
                name.push('_');
            }
            taken.insert(name.clone());
            predicates.insert(d.name.clone(), name);
        }
    }
    let base = task.defs.iter().map(|d| d.stratum).max().unwrap_or(0) + 1;
    let mut sig = task.sig.clone();
    let mut defs: Vec<Definition> = task.defs.iter().cloned().collect();
    for d in &task.defs {
        let Some(pname) = predicates.get(&d.name) else { continue };
        let mut conj = Vec::new();
        if let Some(c) = task.contract(&d.name) {
            conj.push(c.instance(d, &d.param_exprs()));
        }
        conj.extend(call_conjuncts(d, &d.param_exprs(), &predicates));
        let rank = match &d.rank {
            RankSpec::Identity => RankSpec::Term(Expr::Var(d.params[0].clone())),
            other => other.clone(),
        };
        let pdef = Definition {
            name: pname.clone(),
            params: d.params.clone(),
            ret: Sort::Bool,
            body: Expr::conj(conj),
            stratum: base + d.stratum,
            rank,
        };
        sig.add_defined(FunDecl::new(pname, d.decl().params, Sort::Bool));
        defs.push(pdef);
    }
    let (vars, matrix) = universal_prefix(&task.goal)?;
    let mut antecedent = Vec::new();
    for app in collect_d_applications(&task.sig, [matrix]) {
        let Some(pname) = predicates.get(&app.symbol) else {
            continue;
        };
        match scope {
            ContractScope::All => antecedent.push(Expr::call(pname, app.args.clone())),
            ContractScope::Calls => {
                let d = task.defs.get(&app.symbol).expect("reachable symbols have definitions");
                antecedent.extend(call_conjuncts(d, &app.args, &predicates));
            }
        }
    }
    let antecedent = Expr::conj(antecedent);
    let body = if antecedent == Expr::Bool(true) {
        matrix.clone()
    } else {
        Expr::implies(antecedent, matrix.clone())
    };
    let goal = if vars.is_empty() {
        body
    } else {
        Expr::forall(vars, body)
    };
    Ok(Reduction {
        task: Task::new(sig, DefSet::new(defs), goal),
        predicates,
    })
}

/// `(ite path Contract_G(args) true)` for every call site of `d` whose callee has a
/// predicate, with `d`'s parameters replaced by `args`.
fn call_conjuncts(d: &Definition, args: &[Expr], predicates: &BTreeMap<String, String>) -> Vec<Expr> {
    let binding: BTreeMap<String, Expr> = d
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    let mut out = Vec::new();
    for site in call_sites(&d.body) {
        let Some(pname) = predicates.get(&site.app.symbol) else {
            continue;
        };
        let call = Expr::call(pname, site.app.args.clone()).instantiate(&binding);
        let f = if site.literals.is_empty() {
            call
        } else {
            // An ite keeps the guard on the call's path condition, which
            // the acyclicity obligations are built from.
            Expr::ite(site.condition().instantiate(&binding), call, Expr::Bool(true))
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SimulationRound {
    pub round: usize,
    pub contracts_only_direct: Vec<String>,
    pub contracts_only_reduced: Vec<String>,
    pub unfoldings_only_direct: Vec<String>,
    pub unfoldings_only_reduced: Vec<String>,
}

impl SimulationRound {
    pub fn is_empty(&self) -> bool {
        self.contracts_only_direct.is_empty()
            && self.contracts_only_reduced.is_empty()
            && self.unfoldings_only_direct.is_empty()
            && self.unfoldings_only_reduced.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub k: usize,
    pub rounds: Vec<SimulationRound>,
    pub direct: String,
    pub direct_rounds: usize,
    pub reduced: String,
    pub reduced_rounds: usize,
    pub verdicts_agree: bool,
}

impl SimulationReport {
    pub fn differences_empty(&self) -> bool {
        self.rounds.iter().all(SimulationRound::is_empty)
    }

    pub fn contract_differences_empty(&self) -> bool {
        self.rounds
            .iter()
            .all(|r| r.contracts_only_direct.is_empty() && r.contracts_only_reduced.is_empty())
    }

    /// Contract instances agree per round up to the lag, and so do the
    /// verdicts. Unfolding differences are reported but not counted: the
    /// reduction also unfolds applications that occur inside contract
    /// instances, which the contract-assuming loop never collects.
    pub fn is_ok(&self) -> bool {
        self.contract_differences_empty() && self.verdicts_agree
    }
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "round  contracts(direct\\reduced)  contracts(reduced\\direct)  unfoldings(direct\\reduced)  unfoldings(reduced\\direct)")?;
        for r in &self.rounds {
            writeln!(
                f,
                "{:<6} {:<26} {:<26} {:<27} {}",
                r.round,
                show(&r.contracts_only_direct),
                show(&r.contracts_only_reduced),
                show(&r.unfoldings_only_direct),
                show(&r.unfoldings_only_reduced)
            )?;
        }
        writeln!(f, "direct:  {} after {} round(s)", self.direct, self.direct_rounds)?;
        writeln!(f, "reduced: {} after {} round(s)", self.reduced, self.reduced_rounds)?;
        write!(f, "verdicts agree: {}", self.verdicts_agree)
    }
}

fn show(v: &[String]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        v.join(", ")
    }
}

/// Sets of contract-instance keys and original-symbol unfoldings visible to
/// the solver at each check.
fn visible_sets(
    records: &[RoundRecord],
    key: impl Fn(&DApp, bool) -> Option<(bool, DApp)>,
) -> Vec<(BTreeSet<DApp>, BTreeSet<DApp>)> {
    let mut contracts = BTreeSet::new();
    let mut unfoldings = BTreeSet::new();
    let mut out = Vec::new();
    for r in records {
        out.push((contracts.clone(), unfoldings.clone()));
        for d in &r.new_instantiations {
            if let Some((is_contract, k)) = key(d, false) {
                if is_contract {
                    contracts.insert(k);
                } else {
                    unfoldings.insert(k);
                }
            }
        }
        for d in &r.new_contracts {
            if let Some((_, k)) = key(d, true) {
                contracts.insert(k);
            }
        }
    }
    out
}

/// Runs the contract-assuming loop and the plain loop on the reduction side
/// by side for `k` rounds (plus one round of slack) and compares what each
/// check could see. A formula visible to one side at round `r` must be
/// visible to the other by round `r + 1`.
pub fn simulation_check(
    task: &Task,
    k: usize,
    scope: ContractScope,
    cfg: &EngineConfig,
) -> Result<SimulationReport, SimulationError> {
    let reduction = reduce_to_fluid(task, scope)?;
    let cfg = EngineConfig {
        max_rounds: k + 1,
        emit_dir: None,
        trace: None,
        // Both runs name their skolem constants alike so the sets compare.
        skolem_tag: Some(task.hash()),
        ..cfg.clone()
    };
    let direct = lockstep(
        Engine::new(task, &cfg)?.with_contracts(ContractMode {
            contracts: &task.contracts,
            scope,
        }),
        k + 2,
    )?;
    let reduced = lockstep(Engine::new(&reduction.task, &cfg)?, k + 2)?;
    let originals: BTreeSet<&str> = task.defs.iter().map(|d| d.name.as_str()).collect();
    let back: BTreeMap<&str, &str> = reduction
        .predicates
        .iter()
        .map(|(g, p)| (p.as_str(), g.as_str()))
        .collect();
    let with_contract: BTreeSet<&str> = task.contracts.iter().map(|c| c.symbol.as_str()).collect();
    let a = visible_sets(&direct.0, |d, is_contract| {
        if is_contract {
            Some((true, d.clone()))
        } else {
            Some((false, d.clone()))
        }
    });
    let b = visible_sets(&reduced.0, |d, _| {
        if let Some(g) = back.get(d.symbol.as_str()) {
            with_contract.contains(g).then(|| (true, DApp::new(g, d.args.clone())))
        } else if originals.contains(d.symbol.as_str()) {
            Some((false, d.clone()))
        } else {
            None
        }
    });
    let last = (a.len().min(b.len())).min(k + 1);
    let mut rounds = Vec::new();
    for r in 0..last {
        let an = &a[(r + 1).min(a.len() - 1)];
        let bn = &b[(r + 1).min(b.len() - 1)];
        let diff = |x: &BTreeSet<DApp>, y: &BTreeSet<DApp>| -> Vec<String> {
            x.difference(y).map(|d| d.to_string()).collect()
        };
        rounds.push(SimulationRound {
            round: r,
            contracts_only_direct: diff(&a[r].0, &bn.0),
            contracts_only_reduced: diff(&b[r].0, &an.0),
            unfoldings_only_direct: diff(&a[r].1, &bn.1),
            unfoldings_only_reduced: diff(&b[r].1, &an.1),
        });
    }
    let da = &direct.1;
    let db = &reduced.1;
    let rounds_of = |o: &crate::engine::Outcome| match o {
        crate::engine::Outcome::Valid { rounds, .. } | crate::engine::Outcome::BudgetExhausted { rounds, .. } => {
            *rounds
        }
        crate::engine::Outcome::Failure { .. } => 0,
    };
    // Within the primary budget both sides must agree; a proof that needs
    // the one extra round on one side only is tolerated.
    let within = |o: &crate::engine::Outcome| o.is_valid() && rounds_of(o) <= k;
    let verdicts_agree = match (da, db) {
        (crate::engine::Outcome::Failure { .. }, _) | (_, crate::engine::Outcome::Failure { .. }) => false,
        _ => within(da) == within(db) || da.is_valid() == db.is_valid(),
    };
    Ok(SimulationReport {
        k,
        rounds,
        direct: da.label().to_string(),
        direct_rounds: rounds_of(da),
        reduced: db.label().to_string(),
        reduced_rounds: rounds_of(db),
        verdicts_agree,
    })
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Runs `checks` checks, unfolding after each one even once a check is
/// `unsat`, so both sides of a simulation expose the same number of rounds.
/// The outcome reflects the first `unsat` check.
fn lockstep(mut engine: Engine<'_>, checks: usize) -> Result<(Vec<RoundRecord>, Outcome), EngineError> {
    engine.force_unfold = true;
    let mut outcome = None;
    for i in 0..checks {
        let rec = engine.step(i + 1 < checks)?;
        match &rec.verdict {
            Verdict::ProcessError(d) => {
                outcome = Some(Outcome::Failure { detail: d.clone() });
                break;
            }
            Verdict::Unsat if outcome.is_none() => {
                outcome = Some(Outcome::Valid {
                    rounds: i,
                    instantiations: engine.state.instantiated.len(),
                })
            }
            _ => {}
        }
    }
    let outcome = outcome.unwrap_or(Outcome::BudgetExhausted {
        rounds: checks - 1,
        saturated: false,
        model_hint: None,
    });
    Ok((engine.records().to_vec(), outcome))
}

/// Every asserted contract instance of a contract-assuming run must be at a
/// call position of some unfolded body.
pub fn audit_contract_positions(task: &Task, result: &EngineResult) -> Vec<DApp> {
    let mut positions = BTreeSet::new();
    for (app, _) in result.state.unfoldings() {
        let Some(def) = task.defs.get(&app.symbol) else {
            continue;
        };
        let binding: BTreeMap<String, Expr> = def
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(app.args.iter().cloned())
            .collect();
        for site in call_sites(&def.body) {
            positions.insert(
                DApp::new(
                    &site.app.symbol,
                    site.app.args.iter().map(|a| a.instantiate(&binding)).collect(),
                )
                .normalized(&task.sig),
            );
        }
    }
    result
        .state
        .formulas
        .iter()
        .filter_map(|(o, _)| match o {
            Origin::Contract(d) if !positions.contains(d) => Some(d.clone()),
            _ => None,
        })
        .collect()
}

//! Recursive definitions, strata and ranking functions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::expr::{Expr, Op, Var};
use crate::guards::recognizer_entailed;
use crate::paths::call_sites;
use crate::sig::{FunDecl, Signature, Sort};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    IntLt,
    Subterm,
}

impl Order {
    pub fn for_sort(sort: &Sort) -> Option<Order> {
        match sort {
            Sort::Int => Some(Order::IntLt),
            Sort::Adt(_) => Some(Order::Subterm),
            Sort::Bool => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::IntLt => "int-lt",
            Order::Subterm => "subterm",
        })
    }
}

/// Ranking function of a definition, given as a term over its parameters.
/// The order is determined by the term's sort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankSpec {
    /// The sole parameter itself; stratum 0 only.
    Identity,
    Term(Expr),
    /// No rank; allowed when there are no same-stratum calls.
    Unranked,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<Var>,
    pub ret: Sort,
    pub body: Expr,
    pub stratum: usize,
    pub rank: RankSpec,
}

impl Definition {
    pub fn decl(&self) -> FunDecl {
        FunDecl::new(
            &self.name,
            self.params.iter().map(|p| p.sort.clone()).collect(),
            self.ret.clone(),
        )
    }

    pub fn param_exprs(&self) -> Vec<Expr> {
        self.params.iter().cloned().map(Expr::Var).collect()
    }

    fn binding(&self, args: &[Expr]) -> BTreeMap<String, Expr> {
        self.params
            .iter()
            .map(|p| p.name.clone())
            .zip(args.iter().cloned())
            .collect()
    }

    /// Body with the parameters replaced by `args`.
    pub fn body_at(&self, args: &[Expr]) -> Expr {
        self.body.instantiate(&self.binding(args))
    }

    /// The quantifier-free instance `D(args) = body[args/params]`.
    pub fn unfold_at(&self, args: &[Expr]) -> Expr {
        Expr::eq(Expr::call(&self.name, args.to_vec()), self.body_at(args))
    }

    /// Rank term over the parameters, if any.
    pub fn rank_term(&self) -> Option<Expr> {
        match &self.rank {
            RankSpec::Identity => self.params.first().cloned().map(Expr::Var),
            RankSpec::Term(t) => Some(t.clone()),
            RankSpec::Unranked => None,
        }
    }

    pub fn rank_at(&self, args: &[Expr]) -> Option<Expr> {
        self.rank_term().map(|t| t.instantiate(&self.binding(args)))
    }

    pub fn rank_sort(&self, sig: &Signature) -> Option<Sort> {
        self.rank_term().and_then(|t| sig.sort_of(&t).ok())
    }

    pub fn callees(&self) -> BTreeSet<String> {
        defined_symbols(&self.body)
    }
}

pub fn defined_symbols(e: &Expr) -> BTreeSet<String> {
    e.subterms()
        .into_iter()
        .filter_map(|s| match s {
            Expr::App(Op::Defined(n), _) => Some(n.clone()),
            _ => None,
        })
        .collect()
}

/// Definitions indexed by symbol name, kept in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefSet {
    defs: Vec<Definition>,
    index: BTreeMap<String, usize>,
}

impl DefSet {
    pub fn new(defs: Vec<Definition>) -> Self {
        let mut index = BTreeMap::new();
        for (i, d) in defs.iter().enumerate() {
            index.entry(d.name.clone()).or_insert(i);
        }
        DefSet { defs, index }
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.index.get(name).map(|&i| &self.defs[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Definition> {
        self.defs.iter()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn push(&mut self, d: Definition) {
        self.index.entry(d.name.clone()).or_insert(self.defs.len());
        self.defs.push(d);
    }

    /// Definitions strictly below `stratum`.
    pub fn below(&self, stratum: usize) -> DefSet {
        DefSet::new(self.defs.iter().filter(|d| d.stratum < stratum).cloned().collect())
    }

    pub fn stratum_of(&self, name: &str) -> Option<usize> {
        self.get(name).map(|d| d.stratum)
    }
}

impl<'a> IntoIterator for &'a DefSet {
    type Item = &'a Definition;
    type IntoIter = std::slice::Iter<'a, Definition>;
    fn into_iter(self) -> Self::IntoIter {
        self.defs.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StratViolation {
    MissingDefinition {
        symbol: String,
    },
    Undeclared {
        def: String,
    },
    DuplicateDefinition {
        def: String,
    },
    IllSorted {
        def: String,
        detail: String,
    },
    FreeVariable {
        def: String,
        var: String,
    },
    Quantified {
        def: String,
    },
    CalleeAbove {
        caller: String,
        callee: String,
        caller_stratum: usize,
        callee_stratum: usize,
    },
    RankNotLower {
        def: String,
        symbol: String,
    },
    RankFreeVariable {
        def: String,
        var: String,
    },
    RankUnordered {
        def: String,
        sort: String,
    },
    StratumZeroShape {
        def: String,
    },
    IdentityAboveZero {
        def: String,
    },
    MissingRank {
        def: String,
        callee: String,
    },
    RangeMismatch {
        caller: String,
        callee: String,
    },
}

impl fmt::Display for StratViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StratViolation::*;
        match self {
            MissingDefinition { symbol } => write!(f, "defined symbol {symbol} has no definition"),
            Undeclared { def } => write!(f, "definition {def} has no declared symbol"),
            DuplicateDefinition { def } => write!(f, "{def} is defined more than once"),
            IllSorted { def, detail } => write!(f, "{def}: {detail}"),
            FreeVariable { def, var } => write!(f, "{def}: body mentions {var}, which is not a parameter"),
            Quantified { def } => write!(f, "{def}: body contains a quantifier"),
            CalleeAbove {
                caller,
                callee,
                caller_stratum,
                callee_stratum,
            } => write!(
                f,
                "{caller} (stratum {caller_stratum}) calls {callee} at higher stratum {callee_stratum}"
            ),
            RankNotLower { def, symbol } => {
                write!(f, "{def}: rank uses {symbol}, which is not at a strictly lower stratum")
            }
            RankFreeVariable { def, var } => write!(f, "{def}: rank mentions {var}, which is not a parameter"),
            RankUnordered { def, sort } => write!(f, "{def}: rank sort {sort} is not ordered"),
            StratumZeroShape { def } => {
                write!(
                    f,
                    "{def}: stratum 0 requires a unary definition over an ordered sort with identity rank"
                )
            }
            IdentityAboveZero { def } => write!(f, "{def}: identity rank is only allowed at stratum 0"),
            MissingRank { def, callee } => write!(f, "{def}: same-stratum call to {callee} but no rank is given"),
            RangeMismatch { caller, callee } => {
                write!(
                    f,
                    "{caller} and same-stratum callee {callee} have ranks of different sorts"
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StratReport {
    pub violations: Vec<StratViolation>,
}

impl StratReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks well-formedness of the definitions together with the strata and
/// rank conditions.
pub fn validate_stratification(sig: &Signature, defs: &DefSet) -> StratReport {
    use StratViolation::*;
    let mut v = Vec::new();
    for f in sig.defined_symbols() {
        if defs.get(&f.name).is_none() {
            v.push(MissingDefinition { symbol: f.name.clone() });
        }
    }
    let mut seen = BTreeSet::new();
    for d in defs {
        if !seen.insert(d.name.clone()) {
            v.push(DuplicateDefinition { def: d.name.clone() });
        }
        match sig.defined(&d.name) {
            Some(decl) if *decl == d.decl() => {}
            _ => v.push(Undeclared { def: d.name.clone() }),
        }
        let params: BTreeSet<&str> = d.params.iter().map(|p| p.name.as_str()).collect();
        if !d.body.is_quantifier_free() {
            v.push(Quantified { def: d.name.clone() });
        }
        match sig.sort_of(&d.body) {
            Ok(s) if s == d.ret => {}
            Ok(s) => v.push(IllSorted {
                def: d.name.clone(),
                detail: format!("body has sort {s}, expected {}", d.ret),
            }),
            Err(e) => v.push(IllSorted {
                def: d.name.clone(),
                detail: e.to_string(),
            }),
        }
        for fv in d.body.free_vars() {
            if !params.contains(fv.name.as_str()) {
                v.push(FreeVariable {
                    def: d.name.clone(),
                    var: fv.name,
                });
            }
        }
        for callee in d.callees() {
            if let Some(g) = defs.get(&callee) {
                if g.stratum > d.stratum {
                    v.push(CalleeAbove {
                        caller: d.name.clone(),
                        callee,
                        caller_stratum: d.stratum,
                        callee_stratum: g.stratum,
                    });
                }
            }
        }
        match &d.rank {
            RankSpec::Identity => {
                if d.stratum != 0 {
                    v.push(IdentityAboveZero { def: d.name.clone() });
                }
            }
            RankSpec::Term(t) => {
                for fv in t.free_vars() {
                    if !params.contains(fv.name.as_str()) {
                        v.push(RankFreeVariable {
                            def: d.name.clone(),
                            var: fv.name,
                        });
                    }
                }
                for s in defined_symbols(t) {
                    if defs.stratum_of(&s).is_none_or(|st| st >= d.stratum) {
                        v.push(RankNotLower {
                            def: d.name.clone(),
                            symbol: s,
                        });
                    }
                }
                match sig.sort_of(t) {
                    Ok(s) if s.is_ordered() => {}
                    Ok(s) => v.push(RankUnordered {
                        def: d.name.clone(),
                        sort: s.to_string(),
                    }),
                    Err(e) => v.push(IllSorted {
                        def: d.name.clone(),
                        detail: format!("rank: {e}"),
                    }),
                }
            }
            RankSpec::Unranked => {}
        }
        if d.stratum == 0 {
            let unary_ordered = d.params.len() == 1 && d.params[0].sort.is_ordered();
            if !unary_ordered || d.rank != RankSpec::Identity {
                v.push(StratumZeroShape { def: d.name.clone() });
            }
        }
        for callee in d.callees() {
            let Some(g) = defs.get(&callee) else { continue };
            if g.stratum != d.stratum {
                continue;
            }
            if d.rank == RankSpec::Unranked || g.rank == RankSpec::Unranked {
                v.push(MissingRank {
                    def: d.name.clone(),
                    callee,
                });
            } else if d.rank_sort(sig) != g.rank_sort(sig) {
                v.push(RangeMismatch {
                    caller: d.name.clone(),
                    callee,
                });
            }
        }
    }
    v.dedup();
    StratReport { violations: v }
}

/// A definition as written, before strata and ranks are filled in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefDecl {
    pub name: String,
    pub params: Vec<Var>,
    pub ret: Sort,
    pub body: Expr,
    pub stratum: Option<usize>,
    pub rank: Option<Expr>,
}

impl DefDecl {
    fn callees(&self) -> BTreeSet<String> {
        defined_symbols(&self.body)
    }
}

/// Whether `arg` is a nonempty chain of destructors applied to `param`, each
/// one guarded by a recognizer entailed by `literals`.
pub fn structural_descent(sig: &Signature, literals: &[Expr], arg: &Expr, param: &Var) -> bool {
    let mut cur = arg;
    let mut steps = 0;
    loop {
        match cur {
            Expr::Var(v) => return steps > 0 && v == param,
            Expr::App(Op::Dtor(d), a) if a.len() == 1 => {
                let Some((_, ctor, _)) = sig.destructor(d) else {
                    return false;
                };
                if !recognizer_entailed(sig, literals, &ctor.name, &a[0]) {
                    return false;
                }
                steps += 1;
                cur = &a[0];
            }
            _ => return false,
        }
    }
}

/// Notes from the inference pass, for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InferenceNote {
    pub def: String,
    pub message: String,
}

/// Fills in missing strata and ranks.
///
/// Definitions without a stratum are grouped into call-graph components and
/// processed callees first. A non-recursive or structurally recursive unary
/// definition over an ADT with no other callees goes to stratum 0 with the
/// identity rank. Otherwise the component sits one above its highest
/// external callee, and recursive components get a subterm rank on a
/// parameter that every internal call destructs under guards.
pub fn infer_strata(sig: &Signature, decls: Vec<DefDecl>) -> (DefSet, Vec<InferenceNote>) {
    let names: Vec<String> = decls.iter().map(|d| d.name.clone()).collect();
    let pos: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let n = decls.len();
    let edges: Vec<BTreeSet<usize>> = decls
        .iter()
        .map(|d| {
            let mut deps: BTreeSet<String> = d.callees();
            if let Some(r) = &d.rank {
                deps.extend(defined_symbols(r));
            }
            deps.iter().filter_map(|c| pos.get(c.as_str()).copied()).collect()
        })
        .collect();
    let comps = components(n, &edges);
    let mut comp_of = vec![0; n];
    for (ci, c) in comps.iter().enumerate() {
        for &m in c {
            comp_of[m] = ci;
        }
    }
    let mut stratum: Vec<Option<usize>> = decls.iter().map(|d| d.stratum).collect();
    let mut rank: Vec<Option<RankSpec>> = vec![None; n];
    let mut notes = Vec::new();
    // `components` yields callees before callers.
    for comp in &comps {
        let external_max = comp
            .iter()
            .flat_map(|&m| edges[m].iter())
            .filter(|&&c| comp_of[c] != comp_of[comp[0]])
            .filter_map(|&c| stratum[c])
            .max();
        let declared_max = comp.iter().filter_map(|&m| decls[m].stratum).max();
        let recursive = comp.len() > 1 || edges[comp[0]].contains(&comp[0]);
        if comp.iter().any(|&m| decls[m].stratum.is_none()) {
            let s = if let Some(s) = declared_max {
                s
            } else if comp.len() == 1
                && external_max.is_none()
                && decls[comp[0]].rank.is_none()
                && zero_eligible(sig, &decls[comp[0]])
            {
                notes.push(InferenceNote {
                    def: decls[comp[0]].name.clone(),
                    message: "stratum 0, identity rank".into(),
                });
                0
            } else {
                external_max.map_or(1, |m| m + 1)
            };
            for &m in comp {
                stratum[m].get_or_insert(s);
            }
        }
        for &m in comp {
            let d = &decls[m];
            rank[m] = Some(match (&d.rank, stratum[m]) {
                (Some(Expr::Var(v)), Some(0)) if d.params.len() == 1 && d.params[0] == *v => RankSpec::Identity,
                (Some(t), _) => RankSpec::Term(t.clone()),
                (None, Some(0)) if d.params.len() == 1 => RankSpec::Identity,
                (None, _) => RankSpec::Unranked,
            });
        }
        if recursive {
            let missing: Vec<usize> = comp
                .iter()
                .copied()
                .filter(|&m| rank[m] == Some(RankSpec::Unranked))
                .collect();
            if !missing.is_empty() && missing.len() == comp.len() {
                match structural_ranks(sig, &decls, comp, &stratum) {
                    Some(choice) => {
                        for (&m, p) in comp.iter().zip(choice) {
                            let param = decls[m].params[p].clone();
                            notes.push(InferenceNote {
                                def: decls[m].name.clone(),
                                message: format!("subterm rank on {}", param.name),
                            });
                            rank[m] = Some(RankSpec::Term(Expr::Var(param)));
                        }
                    }
                    None => {
                        for &m in comp {
                            notes.push(InferenceNote {
                                def: decls[m].name.clone(),
                                message: "no structural rank found".into(),
                            });
                        }
                    }
                }
            }
        }
    }
    let defs = decls
        .into_iter()
        .enumerate()
        .map(|(i, d)| Definition {
            name: d.name,
            params: d.params,
            ret: d.ret,
            body: d.body,
            stratum: stratum[i].unwrap_or(1),
            rank: rank[i].take().unwrap_or(RankSpec::Unranked),
        })
        .collect();
    (DefSet::new(defs), notes)
}

fn zero_eligible(sig: &Signature, d: &DefDecl) -> bool {
    if d.params.len() != 1 || !d.params[0].sort.is_adt() {
        return false;
    }
    call_sites(&d.body)
        .iter()
        .all(|c| c.app.symbol == d.name && structural_descent(sig, &c.literals, &c.app.args[0], &d.params[0]))
}

const MAX_RANK_COMBINATIONS: usize = 4096;

/// Picks one ADT parameter per member so that every same-stratum call inside
/// the component destructs the caller's chosen parameter into the callee's.
fn structural_ranks(
    sig: &Signature,
    decls: &[DefDecl],
    comp: &[usize],
    stratum: &[Option<usize>],
) -> Option<Vec<usize>> {
    let candidates: Vec<Vec<usize>> = comp
        .iter()
        .map(|&m| {
            decls[m]
                .params
                .iter()
                .enumerate()
                .filter(|(_, p)| p.sort.is_adt())
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let total = candidates.iter().map(Vec::len).product::<usize>();
    if total == 0 || total > MAX_RANK_COMBINATIONS {
        return None;
    }
    let member: BTreeMap<&str, usize> = comp
        .iter()
        .enumerate()
        .map(|(i, &m)| (decls[m].name.as_str(), i))
        .collect();
    let mut choice = vec![0usize; comp.len()];
    for mut k in 0..total {
        for (i, c) in candidates.iter().enumerate() {
            choice[i] = c[k % c.len()];
            k /= c.len();
        }
        let sort = &decls[comp[0]].params[choice[0]].sort;
        if comp
            .iter()
            .zip(&choice)
            .any(|(&m, &p)| &decls[m].params[p].sort != sort)
        {
            continue;
        }
        let ok = comp.iter().enumerate().all(|(i, &m)| {
            let d = &decls[m];
            call_sites(&d.body)
                .iter()
                .all(|c| match member.get(c.app.symbol.as_str()) {
                    Some(&j) if stratum[comp[j]] == stratum[m] => {
                        structural_descent(sig, &c.literals, &c.app.args[choice[j]], &d.params[choice[i]])
                    }
                    _ => true,
                })
        });
        if ok {
            return Some(choice);
        }
    }
    None
}

/// Strongly connected components in reverse topological order (a component
/// appears after every component it depends on).
fn components(n: usize, edges: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        edges: &'a [BTreeSet<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for &w in self.edges[v].iter() {
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    _ => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = self.stack.pop().unwrap();
                    self.on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                self.out.push(comp);
            }
        }
    }
    let mut t = Tarjan {
        edges,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out
}

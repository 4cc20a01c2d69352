//! Terms and formulas. Formulas are `Bool`-sorted expressions; `ite` works
//! uniformly over terms and formulas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::sig::{Signature, Sort, Symbol};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Self {
        Var {
            name: name.to_string(),
            sort,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Not,
    And,
    Or,
    Implies,
    Eq,
    Add,
    Sub,
    Neg,
    Mul,
    Mod,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Not => "not",
            Builtin::And => "and",
            Builtin::Or => "or",
            Builtin::Implies => "=>",
            Builtin::Eq => "=",
            Builtin::Add => "+",
            Builtin::Sub | Builtin::Neg => "-",
            Builtin::Mul => "*",
            Builtin::Mod => "mod",
            Builtin::Le => "<=",
            Builtin::Lt => "<",
            Builtin::Ge => ">=",
            Builtin::Gt => ">",
        }
    }
}

/// Function position of an application.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Ctor(String),
    Dtor(String),
    /// Recognizer, identified by the constructor it tests for.
    Is(String),
    Defined(String),
    /// Uninterpreted background function.
    Fun(String),
    Builtin(Builtin),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Var(Var),
    Int(i64),
    Bool(bool),
    App(Op, Vec<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Forall(Vec<Var>, Box<Expr>),
    Exists(Vec<Var>, Box<Expr>),
}

// Builders. These do no sort checking.
impl Expr {
    pub fn var(name: &str, sort: Sort) -> Expr {
        Expr::Var(Var::new(name, sort))
    }

    pub fn ctor(name: &str, args: Vec<Expr>) -> Expr {
        Expr::App(Op::Ctor(name.to_string()), args)
    }

    pub fn dtor(name: &str, arg: Expr) -> Expr {
        Expr::App(Op::Dtor(name.to_string()), vec![arg])
    }

    pub fn is(ctor: &str, arg: Expr) -> Expr {
        Expr::App(Op::Is(ctor.to_string()), vec![arg])
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::App(Op::Defined(name.to_string()), args)
    }

    pub fn builtin(b: Builtin, args: Vec<Expr>) -> Expr {
        Expr::App(Op::Builtin(b), args)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::builtin(Builtin::Not, vec![e])
    }

    pub fn and(es: Vec<Expr>) -> Expr {
        Expr::builtin(Builtin::And, es)
    }

    pub fn or(es: Vec<Expr>) -> Expr {
        Expr::builtin(Builtin::Or, es)
    }

    pub fn implies(a: Expr, b: Expr) -> Expr {
        Expr::builtin(Builtin::Implies, vec![a, b])
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::builtin(Builtin::Eq, vec![a, b])
    }

    pub fn lt(a: Expr, b: Expr) -> Expr {
        Expr::builtin(Builtin::Lt, vec![a, b])
    }

    pub fn le(a: Expr, b: Expr) -> Expr {
        Expr::builtin(Builtin::Le, vec![a, b])
    }

    pub fn add(es: Vec<Expr>) -> Expr {
        Expr::builtin(Builtin::Add, es)
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn forall(vars: Vec<Var>, body: Expr) -> Expr {
        Expr::Forall(vars, Box::new(body))
    }

    /// Conjunction that drops `true` conjuncts and avoids unary `and`.
    pub fn conj(es: Vec<Expr>) -> Expr {
        let mut es: Vec<Expr> = es.into_iter().filter(|e| *e != Expr::Bool(true)).collect();
        match es.len() {
            0 => Expr::Bool(true),
            1 => es.pop().unwrap(),
            _ => Expr::and(es),
        }
    }

    /// Negation that cancels a double negation.
    pub fn negate(e: Expr) -> Expr {
        match e {
            Expr::App(Op::Builtin(Builtin::Not), mut args) if args.len() == 1 => args.pop().unwrap(),
            other => Expr::not(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("{symbol} expects {expected} argument(s), got {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("argument {position} of {symbol} has sort {found}, expected {expected}")]
    Mismatch {
        symbol: String,
        position: usize,
        expected: Sort,
        found: Sort,
    },
    #[error("{0} refers to a symbol of a different kind")]
    WrongKind(String),
    #[error("variable {0} is bound more than once")]
    Rebound(String),
    #[error("unknown sort {0}")]
    UnknownSort(Sort),
}

impl Signature {
    /// Sort of a well-sorted expression; fails on the first ill-sorted node.
    pub fn sort_of(&self, e: &Expr) -> Result<Sort, SortError> {
        let mut bound = Vec::new();
        self.sort_in(e, &mut bound)
    }

    fn sort_in(&self, e: &Expr, bound: &mut Vec<String>) -> Result<Sort, SortError> {
        match e {
            Expr::Var(v) => {
                if !self.has_sort(&v.sort) {
                    return Err(SortError::UnknownSort(v.sort.clone()));
                }
                Ok(v.sort.clone())
            }
            Expr::Int(_) => Ok(Sort::Int),
            Expr::Bool(_) => Ok(Sort::Bool),
            Expr::Ite(c, t, f) => {
                expect(self.sort_in(c, bound)?, Sort::Bool, "ite", 0)?;
                let ts = self.sort_in(t, bound)?;
                let fs = self.sort_in(f, bound)?;
                expect(fs, ts.clone(), "ite", 2)?;
                Ok(ts)
            }
            Expr::Forall(vs, body) | Expr::Exists(vs, body) => {
                let mark = bound.len();
                for v in vs {
                    if bound.contains(&v.name) {
                        return Err(SortError::Rebound(v.name.clone()));
                    }
                    if !self.has_sort(&v.sort) {
                        return Err(SortError::UnknownSort(v.sort.clone()));
                    }
                    bound.push(v.name.clone());
                }
                let s = self.sort_in(body, bound)?;
                bound.truncate(mark);
                expect(s, Sort::Bool, "quantifier", 0)?;
                Ok(Sort::Bool)
            }
            Expr::App(Op::Builtin(b), args) => {
                let sorts = args
                    .iter()
                    .map(|a| self.sort_in(a, bound))
                    .collect::<Result<Vec<_>, _>>()?;
                builtin_sort(*b, &sorts)
            }
            Expr::App(op, args) => {
                let (name, sym) = match op {
                    Op::Ctor(n) | Op::Dtor(n) | Op::Defined(n) | Op::Fun(n) => (
                        n.clone(),
                        self.lookup(n).ok_or_else(|| SortError::UnknownSymbol(n.clone()))?,
                    ),
                    Op::Is(c) => {
                        let (adt, ctor) = self
                            .constructor(c)
                            .ok_or_else(|| SortError::UnknownSymbol(format!("is-{c}")))?;
                        (ctor.recognizer.clone(), Symbol::Recognizer(adt, ctor))
                    }
                    Op::Builtin(_) => unreachable!(),
                };
                let kind_ok = matches!(
                    (op, &sym),
                    (Op::Ctor(_), Symbol::Constructor(..))
                        | (Op::Dtor(_), Symbol::Destructor(..))
                        | (Op::Is(_), Symbol::Recognizer(..))
                        | (Op::Defined(_), Symbol::Defined(_))
                        | (Op::Fun(_), Symbol::Background(_))
                );
                if !kind_ok {
                    return Err(SortError::WrongKind(name));
                }
                let params = sym.params();
                if params.len() != args.len() {
                    return Err(SortError::Arity {
                        symbol: name,
                        expected: params.len(),
                        found: args.len(),
                    });
                }
                for (i, (p, a)) in params.iter().zip(args).enumerate() {
                    let s = self.sort_in(a, bound)?;
                    if &s != p {
                        return Err(SortError::Mismatch {
                            symbol: name,
                            position: i,
                            expected: p.clone(),
                            found: s,
                        });
                    }
                }
                Ok(sym.result())
            }
        }
    }
}

fn expect(found: Sort, expected: Sort, symbol: &str, position: usize) -> Result<(), SortError> {
    if found == expected {
        Ok(())
    } else {
        Err(SortError::Mismatch {
            symbol: symbol.to_string(),
            position,
            expected,
            found,
        })
    }
}

fn builtin_sort(b: Builtin, sorts: &[Sort]) -> Result<Sort, SortError> {
    let name = b.name();
    let arity = |n: usize| -> Result<(), SortError> {
        if sorts.len() == n {
            Ok(())
        } else {
            Err(SortError::Arity {
                symbol: name.to_string(),
                expected: n,
                found: sorts.len(),
            })
        }
    };
    let all = |s: Sort| -> Result<(), SortError> {
        for (i, found) in sorts.iter().enumerate() {
            expect(found.clone(), s.clone(), name, i)?;
        }
        Ok(())
    };
    match b {
        Builtin::Not => {
            arity(1)?;
            all(Sort::Bool)?;
            Ok(Sort::Bool)
        }
        Builtin::And | Builtin::Or => {
            all(Sort::Bool)?;
            Ok(Sort::Bool)
        }
        Builtin::Implies => {
            arity(2)?;
            all(Sort::Bool)?;
            Ok(Sort::Bool)
        }
        Builtin::Eq => {
            arity(2)?;
            expect(sorts[1].clone(), sorts[0].clone(), name, 1)?;
            Ok(Sort::Bool)
        }
        Builtin::Add => {
            if sorts.len() < 2 {
                arity(2)?;
            }
            all(Sort::Int)?;
            Ok(Sort::Int)
        }
        Builtin::Sub | Builtin::Mul | Builtin::Mod => {
            arity(2)?;
            all(Sort::Int)?;
            Ok(Sort::Int)
        }
        Builtin::Neg => {
            arity(1)?;
            all(Sort::Int)?;
            Ok(Sort::Int)
        }
        Builtin::Le | Builtin::Lt | Builtin::Ge | Builtin::Gt => {
            arity(2)?;
            all(Sort::Int)?;
            Ok(Sort::Bool)
        }
    }
}

impl Expr {
    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Expr::Forall(..) | Expr::Exists(..) => false,
            Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) => true,
            Expr::App(_, args) => args.iter().all(Expr::is_quantifier_free),
            Expr::Ite(c, t, e) => c.is_quantifier_free() && t.is_quantifier_free() && e.is_quantifier_free(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Var(v) => {
                if !bound.contains(&v.name) {
                    out.insert(v.clone());
                }
            }
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::App(_, args) => args.iter().for_each(|a| a.collect_free(bound, out)),
            Expr::Ite(c, t, e) => {
                c.collect_free(bound, out);
                t.collect_free(bound, out);
                e.collect_free(bound, out);
            }
            Expr::Forall(vs, body) | Expr::Exists(vs, body) => {
                let mark = bound.len();
                bound.extend(vs.iter().map(|v| v.name.clone()));
                body.collect_free(bound, out);
                bound.truncate(mark);
            }
        }
    }

    /// Every subexpression, outermost first.
    pub fn subterms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            match e {
                Expr::App(_, args) => stack.extend(args.iter().rev()),
                Expr::Ite(c, t, f) => {
                    stack.push(f);
                    stack.push(t);
                    stack.push(c);
                }
                Expr::Forall(_, b) | Expr::Exists(_, b) => stack.push(b),
                _ => {}
            }
        }
        out
    }

    /// Height of the expression tree; leaves have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) => 1,
            Expr::App(_, args) => 1 + args.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Ite(c, t, e) => 1 + c.depth().max(t.depth()).max(e.depth()),
            Expr::Forall(_, b) | Expr::Exists(_, b) => 1 + b.depth(),
        }
    }

    pub fn mentions_defined(&self) -> bool {
        self.subterms()
            .iter()
            .any(|e| matches!(e, Expr::App(Op::Defined(_), _)))
    }

    /// Capture-avoiding simultaneous substitution of free variables by name.
    /// Binding keys that do not occur free are ignored.
    pub fn instantiate(&self, binding: &BTreeMap<String, Expr>) -> Expr {
        if binding.is_empty() {
            return self.clone();
        }
        match self {
            Expr::Var(v) => binding.get(&v.name).cloned().unwrap_or_else(|| self.clone()),
            Expr::Int(_) | Expr::Bool(_) => self.clone(),
            Expr::App(op, args) => Expr::App(op.clone(), args.iter().map(|a| a.instantiate(binding)).collect()),
            Expr::Ite(c, t, e) => Expr::ite(c.instantiate(binding), t.instantiate(binding), e.instantiate(binding)),
            Expr::Forall(vs, body) | Expr::Exists(vs, body) => {
                let mut inner: BTreeMap<String, Expr> = binding
                    .iter()
                    .filter(|(k, _)| !vs.iter().any(|v| &v.name == *k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                // Names free in the replacement terms must not be captured.
                let incoming: BTreeSet<String> = inner
                    .values()
                    .flat_map(|t| t.free_vars().into_iter().map(|v| v.name))
                    .collect();
                let mut taken: BTreeSet<String> = incoming.clone();
                taken.extend(body.free_vars().into_iter().map(|v| v.name));
                let mut new_vs = Vec::with_capacity(vs.len());
                for v in vs {
                    if incoming.contains(&v.name) {
                        let mut i = 1;
                        let fresh = loop {
                            let cand = format!("{}_{}", v.name, i);
                            if !taken.contains(&cand) {
                                break cand;
                            }
                            i += 1;
                        };
                        taken.insert(fresh.clone());
                        inner.insert(v.name.clone(), Expr::var(&fresh, v.sort.clone()));
                        new_vs.push(Var::new(&fresh, v.sort.clone()));
                    } else {
                        new_vs.push(v.clone());
                    }
                }
                let body = Box::new(body.instantiate(&inner));
                match self {
                    Expr::Forall(..) => Expr::Forall(new_vs, body),
                    _ => Expr::Exists(new_vs, body),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("substitution target {0} is not a free variable of the formula")]
    Unbound(String),
    #[error("replacement for {var} has sort {found}, expected {expected}")]
    SortMismatch { var: String, expected: Sort, found: Sort },
    #[error(transparent)]
    IllSorted(#[from] SortError),
}

/// Checked substitution: every key must be a free variable of `f` and every
/// replacement must have the variable's sort.
pub fn substitute(sig: &Signature, f: &Expr, binding: &BTreeMap<Var, Expr>) -> Result<Expr, SubstError> {
    let free = f.free_vars();
    let mut by_name = BTreeMap::new();
    for (v, t) in binding {
        if !free.contains(v) {
            return Err(SubstError::Unbound(v.name.clone()));
        }
        let s = sig.sort_of(t)?;
        if s != v.sort {
            return Err(SubstError::SortMismatch {
                var: v.name.clone(),
                expected: v.sort.clone(),
                found: s,
            });
        }
        by_name.insert(v.name.clone(), t.clone());
    }
    Ok(f.instantiate(&by_name))
}

/// Surface syntax printer; the output parses back to the same expression.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(&v.name),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Ite(c, t, e) => write!(f, "(ite {c} {t} {e})"),
            Expr::Forall(vs, b) | Expr::Exists(vs, b) => {
                let q = if matches!(self, Expr::Forall(..)) {
                    "forall"
                } else {
                    "exists"
                };
                write!(f, "({q} (")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "({} {})", v.name, v.sort)?;
                }
                write!(f, ") {b})")
            }
            Expr::App(op, args) => {
                let head = match op {
                    Op::Ctor(n) if args.is_empty() => return f.write_str(n),
                    Op::Ctor(n) | Op::Dtor(n) | Op::Defined(n) | Op::Fun(n) => n.clone(),
                    Op::Is(c) => format!("is-{c}"),
                    Op::Builtin(b) => b.name().to_string(),
                };
                write!(f, "({head}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{AdtDecl, Constructor, FunDecl};

    fn sig() -> Signature {
        let mut sig = Signature::new();
        sig.add_adt(AdtDecl {
            name: "List".into(),
            constructors: vec![
                Constructor::new("Nil", &[]),
                Constructor::new("Cons", &[("head", Sort::Int), ("tail", Sort::adt("List"))]),
            ],
        });
        sig.add_defined(FunDecl::new("len", vec![Sort::adt("List")], Sort::Int));
        sig
    }

    fn x() -> Expr {
        Expr::var("x", Sort::Int)
    }

    fn y() -> Expr {
        Expr::var("y", Sort::Int)
    }

    #[test]
    fn substitute_constant_into_comparison() {
        let f = Expr::le(x(), y());
        let mut b = BTreeMap::new();
        b.insert(Var::new("x", Sort::Int), Expr::Int(0));
        let g = substitute(&sig(), &f, &b).unwrap();
        assert_eq!(g.to_string(), "(<= 0 y)");
    }

    #[test]
    fn identity_binding_is_structural_identity() {
        let f = Expr::le(x(), y());
        let mut b = BTreeMap::new();
        b.insert(Var::new("x", Sort::Int), x());
        b.insert(Var::new("y", Sort::Int), y());
        assert_eq!(substitute(&sig(), &f, &b).unwrap(), f);
    }

    #[test]
    fn substitute_rejects_wrong_sort_and_unbound_target() {
        let f = Expr::le(x(), y());
        let mut b = BTreeMap::new();
        b.insert(Var::new("x", Sort::Int), Expr::ctor("Nil", vec![]));
        assert!(matches!(
            substitute(&sig(), &f, &b),
            Err(SubstError::SortMismatch { .. })
        ));
        let mut b = BTreeMap::new();
        b.insert(Var::new("z", Sort::Int), Expr::Int(1));
        assert_eq!(substitute(&sig(), &f, &b), Err(SubstError::Unbound("z".into())));
    }

    #[test]
    fn substitution_avoids_capture() {
        let f = Expr::forall(vec![Var::new("y", Sort::Int)], Expr::le(x(), y()));
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), y());
        let g = f.instantiate(&b);
        assert_eq!(g.to_string(), "(forall ((y_1 Int)) (<= y y_1))");
    }

    #[test]
    fn destructor_on_int_is_ill_sorted() {
        let e = Expr::dtor("head", Expr::Int(5));
        assert!(matches!(sig().sort_of(&e), Err(SortError::Mismatch { .. })));
        let ok = Expr::call("len", vec![Expr::ctor("Nil", vec![])]);
        assert_eq!(sig().sort_of(&ok), Ok(Sort::Int));
    }
}

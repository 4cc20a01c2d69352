//! Path conditions of subexpressions.

use crate::dapp::DApp;
use crate::expr::{Builtin, Expr, Op};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathEntry {
    /// Conjuncts of the path condition; empty means `true`.
    pub literals: Vec<Expr>,
    pub expr: Expr,
    /// Child indices from the root. `ite` children are numbered 0, 1, 2.
    pub position: Vec<usize>,
}

impl PathEntry {
    pub fn condition(&self) -> Expr {
        Expr::conj(self.literals.clone())
    }
}

/// Which rules extend the path on the way down.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathRules {
    /// Only `ite` branches add conditions.
    Ite,
    /// Additionally, `a => b` adds `a` for `b`, each `and` conjunct sees the
    /// earlier conjuncts, and each `or` disjunct sees the earlier ones negated.
    /// Used for guard checking of goals and contracts.
    Connectives,
}

/// Path condition of every subexpression of `body`, in preorder.
pub fn path_conditions(body: &Expr) -> Vec<PathEntry> {
    path_conditions_with(body, PathRules::Ite)
}

pub fn path_conditions_with(body: &Expr, rules: PathRules) -> Vec<PathEntry> {
    let mut out = Vec::new();
    walk(body, &mut Vec::new(), &mut Vec::new(), rules, &mut out);
    out
}

fn walk(e: &Expr, lits: &mut Vec<Expr>, pos: &mut Vec<usize>, rules: PathRules, out: &mut Vec<PathEntry>) {
    out.push(PathEntry {
        literals: lits.clone(),
        expr: e.clone(),
        position: pos.clone(),
    });
    let mark = lits.len();
    match e {
        Expr::Ite(c, t, f) => {
            pos.push(0);
            walk(c, lits, pos, rules, out);
            pos.pop();
            lits.push((**c).clone());
            pos.push(1);
            walk(t, lits, pos, rules, out);
            pos.pop();
            lits.truncate(mark);
            lits.push(Expr::negate((**c).clone()));
            pos.push(2);
            walk(f, lits, pos, rules, out);
            pos.pop();
            lits.truncate(mark);
        }
        Expr::App(op, args) => {
            let extend = rules == PathRules::Connectives;
            for (i, a) in args.iter().enumerate() {
                pos.push(i);
                walk(a, lits, pos, rules, out);
                pos.pop();
                if extend {
                    match op {
                        Op::Builtin(Builtin::Implies | Builtin::And) => lits.push(a.clone()),
                        Op::Builtin(Builtin::Or) => lits.push(Expr::negate(a.clone())),
                        _ => {}
                    }
                }
            }
            lits.truncate(mark);
        }
        Expr::Forall(_, b) | Expr::Exists(_, b) => {
            pos.push(0);
            walk(b, lits, pos, rules, out);
            pos.pop();
        }
        Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) => {}
    }
}

/// Occurrence of a defined-symbol application together with its path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSite {
    pub app: DApp,
    pub literals: Vec<Expr>,
    pub position: Vec<usize>,
}

impl CallSite {
    pub fn condition(&self) -> Expr {
        Expr::conj(self.literals.clone())
    }
}

pub fn call_sites(body: &Expr) -> Vec<CallSite> {
    path_conditions(body)
        .into_iter()
        .filter_map(|p| {
            DApp::from_expr(&p.expr).map(|app| CallSite {
                app,
                literals: p.literals,
                position: p.position,
            })
        })
        .collect()
}

/// Splits conjunctions and negated disjunctions into literals.
pub fn flatten_literals(lits: &[Expr]) -> Vec<Expr> {
    let mut out = Vec::new();
    let mut stack: Vec<Expr> = lits.iter().rev().cloned().collect();
    while let Some(l) = stack.pop() {
        match l {
            Expr::App(Op::Builtin(Builtin::And), args) => stack.extend(args.into_iter().rev()),
            Expr::App(Op::Builtin(Builtin::Not), ref args) if args.len() == 1 => match &args[0] {
                Expr::App(Op::Builtin(Builtin::Or), ds) => {
                    stack.extend(ds.iter().rev().map(|d| Expr::negate(d.clone())));
                }
                Expr::App(Op::Builtin(Builtin::Not), inner) if inner.len() == 1 => stack.push(inner[0].clone()),
                _ => out.push(l),
            },
            Expr::Bool(true) => {}
            other => out.push(other),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::Sort;

    fn list(n: &str) -> Expr {
        Expr::var(n, Sort::adt("List"))
    }

    fn merge_body() -> Expr {
        let (x, y) = (list("x"), list("y"));
        let hx = Expr::dtor("head", x.clone());
        let hy = Expr::dtor("head", y.clone());
        Expr::ite(
            Expr::is("Nil", x.clone()),
            y.clone(),
            Expr::ite(
                Expr::is("Nil", y.clone()),
                x.clone(),
                Expr::ite(
                    Expr::le(hx.clone(), hy.clone()),
                    Expr::ctor(
                        "Cons",
                        vec![hx, Expr::call("merge", vec![Expr::dtor("tail", x.clone()), y.clone()])],
                    ),
                    Expr::ctor(
                        "Cons",
                        vec![hy, Expr::call("merge", vec![x.clone(), Expr::dtor("tail", y)])],
                    ),
                ),
            ),
        )
    }

    #[test]
    fn root_has_true_condition() {
        let b = merge_body();
        let ps = path_conditions(&b);
        assert_eq!(ps[0].expr, b);
        assert_eq!(ps[0].condition(), Expr::Bool(true));
    }

    #[test]
    fn merge_call_sites_carry_branch_conditions() {
        let sites = call_sites(&merge_body());
        assert_eq!(sites.len(), 2);
        let printed: Vec<String> = sites.iter().map(|s| s.condition().to_string()).collect();
        assert_eq!(
            printed[0],
            "(and (not (is-Nil x)) (not (is-Nil y)) (<= (head x) (head y)))"
        );
        assert_eq!(
            printed[1],
            "(and (not (is-Nil x)) (not (is-Nil y)) (not (<= (head x) (head y))))"
        );
    }

    #[test]
    fn ite_condition_inherits_parent_path() {
        let b = merge_body();
        let ps = path_conditions(&b);
        let inner_cond = ps.iter().find(|p| p.expr == Expr::is("Nil", list("y"))).unwrap();
        assert_eq!(inner_cond.literals, vec![Expr::not(Expr::is("Nil", list("x")))]);
    }

    #[test]
    fn connective_rules_guard_consequents() {
        let x = list("x");
        let f = Expr::implies(
            Expr::is("Cons", x.clone()),
            Expr::le(Expr::dtor("head", x.clone()), Expr::Int(0)),
        );
        let ps = path_conditions_with(&f, PathRules::Connectives);
        let head = ps.iter().find(|p| matches!(p.expr, Expr::App(Op::Dtor(_), _))).unwrap();
        assert_eq!(head.literals, vec![Expr::is("Cons", x)]);
        let plain = path_conditions(&f);
        assert!(plain.iter().all(|p| p.literals.is_empty()));
    }

    #[test]
    fn flattening_splits_conjunctions() {
        let a = Expr::var("a", Sort::Bool);
        let b = Expr::var("b", Sort::Bool);
        let l = flatten_literals(&[Expr::and(vec![a.clone(), Expr::not(Expr::or(vec![b.clone()]))])]);
        assert_eq!(l, vec![a, Expr::not(b)]);
    }
}

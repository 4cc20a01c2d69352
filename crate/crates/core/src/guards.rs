//! Syntactic guard checking for destructor applications.

use serde::Serialize;

use crate::expr::{Builtin, Expr, Op};
use crate::paths::{flatten_literals, path_conditions_with, PathRules};
use crate::sig::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GuardOccurrence {
    pub destructor: String,
    /// Constructor whose recognizer must hold.
    pub constructor: String,
    pub argument: String,
    pub position: Vec<usize>,
    pub path: String,
    pub guarded: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GuardReport {
    pub occurrences: Vec<GuardOccurrence>,
}

impl GuardReport {
    pub fn unguarded(&self) -> impl Iterator<Item = &GuardOccurrence> {
        self.occurrences.iter().filter(|o| !o.guarded)
    }

    pub fn all_guarded(&self) -> bool {
        self.occurrences.iter().all(|o| o.guarded)
    }
}

/// Reports every destructor occurrence in `f` and whether its recognizer is
/// syntactically implied by the occurrence's path condition.
pub fn check_guards(sig: &Signature, f: &Expr) -> GuardReport {
    let mut report = GuardReport::default();
    for p in path_conditions_with(f, PathRules::Connectives) {
        let Expr::App(Op::Dtor(d), args) = &p.expr else {
            continue;
        };
        let Some((_, ctor, _)) = sig.destructor(d) else {
            continue;
        };
        let Some(arg) = args.first() else {
            continue;
        };
        report.occurrences.push(GuardOccurrence {
            destructor: d.clone(),
            constructor: ctor.name.clone(),
            argument: arg.to_string(),
            position: p.position.clone(),
            path: p.condition().to_string(),
            guarded: recognizer_entailed(sig, &p.literals, &ctor.name, arg),
        });
    }
    report
}

/// Whether the literals syntactically entail `is-ctor(t)`.
pub fn recognizer_entailed(sig: &Signature, literals: &[Expr], ctor: &str, t: &Expr) -> bool {
    if let Expr::App(Op::Ctor(c), _) = t {
        return c == ctor;
    }
    let Some((adt, _)) = sig.constructor(ctor) else {
        return false;
    };
    // With exactly two constructors, ruling out the other one suffices.
    let other = if adt.constructors.len() == 2 {
        adt.constructors
            .iter()
            .find(|c| c.name != ctor)
            .map(|c| (c.name.as_str(), c.arity() == 0))
    } else {
        None
    };
    flatten_literals(literals).iter().any(|l| match l {
        Expr::App(Op::Is(c), a) => c == ctor && a[0] == *t,
        Expr::App(Op::Builtin(Builtin::Eq), a) => {
            is_ctor_app(&a[0], ctor) && a[1] == *t || is_ctor_app(&a[1], ctor) && a[0] == *t
        }
        Expr::App(Op::Builtin(Builtin::Not), n) => match (&n[0], other) {
            (Expr::App(Op::Is(c), a), Some((o, _))) => c == o && a[0] == *t,
            (Expr::App(Op::Builtin(Builtin::Eq), a), Some((o, true))) => {
                is_ctor_app(&a[0], o) && a[1] == *t || is_ctor_app(&a[1], o) && a[0] == *t
            }
            _ => false,
        },
        _ => false,
    })
}

fn is_ctor_app(e: &Expr, ctor: &str) -> bool {
    matches!(e, Expr::App(Op::Ctor(c), _) if c == ctor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{AdtDecl, Constructor, Sort};

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_adt(AdtDecl {
            name: "List".into(),
            constructors: vec![
                Constructor::new("Nil", &[]),
                Constructor::new("Cons", &[("head", Sort::Int), ("tail", Sort::adt("List"))]),
            ],
        });
        s
    }

    fn x() -> Expr {
        Expr::var("x", Sort::adt("List"))
    }

    #[test]
    fn else_branch_of_nil_test_guards_head() {
        let f = Expr::ite(
            Expr::is("Nil", x()),
            Expr::Bool(true),
            Expr::le(Expr::dtor("head", x()), Expr::Int(0)),
        );
        let r = check_guards(&sig(), &f);
        assert_eq!(r.occurrences.len(), 1);
        assert!(r.all_guarded());
    }

    #[test]
    fn top_level_head_is_unguarded() {
        let f = Expr::eq(Expr::dtor("head", x()), Expr::Int(0));
        let r = check_guards(&sig(), &f);
        assert_eq!(r.unguarded().count(), 1);
    }

    #[test]
    fn recognizer_on_path_guards_tail() {
        let f = Expr::ite(
            Expr::is("Cons", x()),
            Expr::eq(Expr::dtor("tail", x()), Expr::ctor("Nil", vec![])),
            Expr::Bool(true),
        );
        assert!(check_guards(&sig(), &f).all_guarded());
    }

    #[test]
    fn disequality_with_nullary_constructor_guards() {
        let nil = Expr::ctor("Nil", vec![]);
        let f = Expr::implies(
            Expr::not(Expr::eq(x(), nil)),
            Expr::le(Expr::dtor("head", x()), Expr::Int(0)),
        );
        assert!(check_guards(&sig(), &f).all_guarded());
    }

    #[test]
    fn guard_on_a_different_term_does_not_count() {
        let y = Expr::var("y", Sort::adt("List"));
        let f = Expr::ite(Expr::is("Cons", y), Expr::dtor("head", x()), Expr::Int(0));
        assert!(!check_guards(&sig(), &f).all_guarded());
    }
}

//! SMT-LIB 2.6 text for signatures and quantifier-free assertions.

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::expr::{Builtin, Expr, Op, Var};
use crate::sig::{Signature, Sort};

/// How recognizer applications are written.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TesterSyntax {
    /// `((_ is Cons) x)`, the SMT-LIB 2.6 form.
    #[default]
    Indexed,
    /// `(is-Cons x)`, accepted by older solvers.
    Prefixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("quantified formula cannot be sent to the solver")]
    Quantified,
    #[error("unsupported sort {0}")]
    UnsupportedSort(String),
}

/// A set of quantifier-free assertions. Free variables are treated as
/// constants and declared automatically.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QfQuery {
    pub assertions: Vec<Expr>,
}

pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/'".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub fn sort_name(sort: &Sort) -> String {
    match sort {
        Sort::Int => "Int".into(),
        Sort::Bool => "Bool".into(),
        Sort::Adt(n) => symbol(n),
    }
}

/// `set-logic`, the datatype block and declarations of every background and
/// defined function symbol.
pub fn preamble(sig: &Signature, logic: &str) -> String {
    let mut out = String::new();
    writeln!(out, "(set-option :produce-models true)").unwrap();
    writeln!(out, "(set-logic {logic})").unwrap();
    if !sig.adts().is_empty() {
        let heads: Vec<String> = sig.adts().iter().map(|a| format!("({} 0)", symbol(&a.name))).collect();
        let bodies: Vec<String> = sig
            .adts()
            .iter()
            .map(|a| {
                let ctors: Vec<String> = a
                    .constructors
                    .iter()
                    .map(|c| {
                        let mut s = format!("({}", symbol(&c.name));
                        for f in &c.fields {
                            write!(s, " ({} {})", symbol(&f.destructor), sort_name(&f.sort)).unwrap();
                        }
                        s.push(')');
                        s
                    })
                    .collect();
                format!("({})", ctors.join(" "))
            })
            .collect();
        writeln!(out, "(declare-datatypes ({}) ({}))", heads.join(" "), bodies.join(" ")).unwrap();
    }
    for f in sig.functions().iter().chain(sig.defined_symbols()) {
        let params: Vec<String> = f.params.iter().map(sort_name).collect();
        writeln!(
            out,
            "(declare-fun {} ({}) {})",
            symbol(&f.name),
            params.join(" "),
            sort_name(&f.ret)
        )
        .unwrap();
    }
    out
}

pub fn declare_const(v: &Var) -> String {
    format!("(declare-fun {} () {})", symbol(&v.name), sort_name(&v.sort))
}

pub fn assertion(e: &Expr, tester: TesterSyntax) -> Result<String, EncodeError> {
    Ok(format!("(assert {})", term(e, tester)?))
}

/// Free variables of `assertions`, in order of first occurrence.
pub fn constants<'a>(assertions: impl IntoIterator<Item = &'a Expr>) -> Vec<Var> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in assertions {
        for e in a.subterms() {
            if let Expr::Var(v) = e {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
        }
    }
    out
}

/// Complete script for `query`, ending in `(check-sat)`.
pub fn encode_query(
    sig: &Signature,
    query: &QfQuery,
    logic: &str,
    tester: TesterSyntax,
) -> Result<String, EncodeError> {
    let mut out = preamble(sig, logic);
    for c in constants(&query.assertions) {
        writeln!(out, "{}", declare_const(&c)).unwrap();
    }
    for a in &query.assertions {
        writeln!(out, "{}", assertion(a, tester)?).unwrap();
    }
    out.push_str("(check-sat)\n");
    Ok(out)
}

pub fn term(e: &Expr, tester: TesterSyntax) -> Result<String, EncodeError> {
    let mut out = String::new();
    write_term(&mut out, e, tester)?;
    Ok(out)
}

fn write_term(out: &mut String, e: &Expr, tester: TesterSyntax) -> Result<(), EncodeError> {
    match e {
        Expr::Var(v) => out.push_str(&symbol(&v.name)),
        Expr::Int(n) if *n < 0 => write!(out, "(- {})", n.unsigned_abs()).unwrap(),
        Expr::Int(n) => write!(out, "{n}").unwrap(),
        Expr::Bool(b) => write!(out, "{b}").unwrap(),
        Expr::Forall(..) | Expr::Exists(..) => return Err(EncodeError::Quantified),
        Expr::Ite(c, t, f) => {
            out.push_str("(ite ");
            write_term(out, c, tester)?;
            out.push(' ');
            write_term(out, t, tester)?;
            out.push(' ');
            write_term(out, f, tester)?;
            out.push(')');
        }
        Expr::App(op, args) => {
            let head = match op {
                Op::Ctor(n) | Op::Dtor(n) | Op::Defined(n) | Op::Fun(n) => symbol(n),
                Op::Is(c) => match tester {
                    TesterSyntax::Indexed => format!("(_ is {})", symbol(c)),
                    TesterSyntax::Prefixed => symbol(&format!("is-{c}")),
                },
                Op::Builtin(b) => match (b, args.len()) {
                    (Builtin::And, 0) => {
                        out.push_str("true");
                        return Ok(());
                    }
                    (Builtin::Or, 0) => {
                        out.push_str("false");
                        return Ok(());
                    }
                    (Builtin::And | Builtin::Or, 1) => return write_term(out, &args[0], tester),
                    _ => b.name().to_string(),
                },
            };
            if args.is_empty() {
                out.push_str(&head);
                return Ok(());
            }
            out.push('(');
            out.push_str(&head);
            for a in args {
                out.push(' ');
                write_term(out, a, tester)?;
            }
            out.push(')');
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{AdtDecl, Constructor};

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

    #[test]
    fn list_datatype_declaration() {
        let p = preamble(&sig(), "ALL");
        assert!(p.contains("(declare-datatypes ((List 0)) (((Nil) (Cons (head Int) (tail List)))))\n"));
    }

    #[test]
    fn testers_and_negative_literals() {
        let x = Expr::var("x", Sort::adt("List"));
        let e = Expr::and(vec![
            Expr::is("Cons", x.clone()),
            Expr::le(Expr::dtor("head", x), Expr::Int(-3)),
        ]);
        assert_eq!(
            term(&e, TesterSyntax::Indexed).unwrap(),
            "(and ((_ is Cons) x) (<= (head x) (- 3)))"
        );
        assert_eq!(
            term(&e, TesterSyntax::Prefixed).unwrap(),
            "(and (is-Cons x) (<= (head x) (- 3)))"
        );
    }

    #[test]
    fn encoding_is_deterministic() {
        let q = QfQuery {
            assertions: vec![Expr::not(Expr::Bool(true))],
        };
        let a = encode_query(&sig(), &q, "ALL", TesterSyntax::Indexed).unwrap();
        let b = encode_query(&sig(), &q, "ALL", TesterSyntax::Indexed).unwrap();
        assert_eq!(a, b);
        assert!(a.ends_with("(assert (not true))\n(check-sat)\n"));
    }

    #[test]
    fn quantifiers_are_refused() {
        let e = Expr::forall(vec![], Expr::Bool(true));
        assert_eq!(term(&e, TesterSyntax::Indexed), Err(EncodeError::Quantified));
    }

    #[test]
    fn odd_symbols_are_quoted() {
        assert_eq!(symbol("a b"), "|a b|");
        assert_eq!(symbol("sk_x_0"), "sk_x_0");
    }
}

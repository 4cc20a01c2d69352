//! D-applications: the unit of instantiation.

use std::collections::BTreeSet;
use std::fmt;

use crate::expr::{Expr, Op};
use crate::sig::Signature;

/// A defined symbol applied to an argument tuple. Identity is syntactic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DApp {
    pub symbol: String,
    pub args: Vec<Expr>,
}

impl DApp {
    pub fn new(symbol: &str, args: Vec<Expr>) -> Self {
        DApp {
            symbol: symbol.to_string(),
            args,
        }
    }

    pub fn from_expr(e: &Expr) -> Option<DApp> {
        match e {
            Expr::App(Op::Defined(s), args) => Some(DApp::new(s, args.clone())),
            _ => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        Expr::call(&self.symbol, self.args.clone())
    }

    /// Printed argument tuple, used as the secondary ordering key.
    pub fn args_key(&self) -> String {
        self.args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
    }
}

// Ordered by symbol name, then by the printed argument tuple, so that every
// iteration over a set of applications is reproducible.
impl Ord for DApp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.symbol
            .cmp(&other.symbol)
            .then_with(|| self.args_key().cmp(&other.args_key()))
            .then_with(|| self.args.cmp(&other.args))
    }
}

impl PartialOrd for DApp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Rewrites destructors applied directly to constructor terms, bottom-up:
/// `tail(Cons(1, Nil))` becomes `Nil`. A destructor of the wrong
/// constructor is left alone.
pub fn normalize(sig: &Signature, e: &Expr) -> Expr {
    match e {
        Expr::App(op, args) => {
            let args: Vec<Expr> = args.iter().map(|a| normalize(sig, a)).collect();
            if let (Op::Dtor(d), [Expr::App(Op::Ctor(c), fields)]) = (op, args.as_slice()) {
                if let Some((_, ctor, i)) = sig.destructor(d) {
                    if &ctor.name == c {
                        return fields[i].clone();
                    }
                }
            }
            Expr::App(op.clone(), args)
        }
        Expr::Ite(c, t, f) => Expr::ite(normalize(sig, c), normalize(sig, t), normalize(sig, f)),
        _ => e.clone(),
    }
}

impl DApp {
    pub fn normalized(&self, sig: &Signature) -> DApp {
        DApp {
            symbol: self.symbol.clone(),
            args: self.args.iter().map(|a| normalize(sig, a)).collect(),
        }
    }
}

/// All applications of defined symbols occurring anywhere in `fs`, including
/// those nested in arguments of other applications, with normalized
/// arguments.
pub fn collect_d_applications<'a>(sig: &Signature, fs: impl IntoIterator<Item = &'a Expr>) -> BTreeSet<DApp> {
    let mut out = BTreeSet::new();
    for f in fs {
        collect_into(sig, f, &mut out);
    }
    out
}

pub(crate) fn collect_into(sig: &Signature, f: &Expr, out: &mut BTreeSet<DApp>) {
    for e in f.subterms() {
        if let Some(d) = DApp::from_expr(e) {
            out.insert(d.normalized(sig));
        }
    }
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

    fn nil() -> Expr {
        Expr::ctor("Nil", vec![])
    }

    #[test]
    fn nested_applications_are_collected() {
        let k = Expr::var("k", Sort::Int);
        let ins = Expr::call("insert", vec![nil(), k.clone()]);
        let f = Expr::call("sorted", vec![ins.clone()]);
        let got = collect_d_applications(&sig(), [&f]);
        let want: BTreeSet<DApp> = [DApp::new("sorted", vec![ins]), DApp::new("insert", vec![nil(), k])]
            .into_iter()
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn no_defined_symbols_gives_empty_set() {
        let f = Expr::le(Expr::var("x", Sort::Int), Expr::var("y", Sort::Int));
        assert!(collect_d_applications(&sig(), [&f]).is_empty());
    }

    #[test]
    fn destructors_of_constructors_are_reduced() {
        let one = Expr::ctor("Cons", vec![Expr::Int(1), nil()]);
        let f = Expr::call("length", vec![Expr::dtor("tail", one.clone())]);
        let got = collect_d_applications(&sig(), [&f]);
        assert_eq!(
            got.into_iter().collect::<Vec<_>>(),
            vec![DApp::new("length", vec![nil()])]
        );
        let wrong = Expr::call("length", vec![Expr::dtor("tail", nil())]);
        let got = collect_d_applications(&sig(), [&wrong]);
        assert_eq!(got.into_iter().next().unwrap().args[0], Expr::dtor("tail", nil()));
    }

    #[test]
    fn ordering_is_by_symbol_then_arguments() {
        let a = DApp::new("b", vec![Expr::Int(1)]);
        let b = DApp::new("a", vec![Expr::Int(2)]);
        let c = DApp::new("a", vec![Expr::Int(10)]);
        let set: Vec<DApp> = [a.clone(), b.clone(), c.clone()]
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(set, vec![c, b, a]);
    }
}

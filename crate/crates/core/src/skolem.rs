//! Negation and skolemization of universal goals.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::expr::{Expr, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkolemError {
    #[error("goal contains an existential quantifier")]
    Existential,
    #[error("goal has a quantifier below its universal prefix")]
    NestedQuantifier,
    #[error("goal has free variable {0}")]
    FreeVariable(String),
}

/// First eight hex digits of the SHA-256 of `text`.
pub fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(digest)[..8].to_string()
}

/// Splits a goal into its universal prefix and quantifier-free matrix.
/// Directly nested universal blocks are merged into one prefix.
pub fn universal_prefix(goal: &Expr) -> Result<(Vec<Var>, &Expr), SkolemError> {
    let mut vars = Vec::new();
    let mut cur = goal;
    loop {
        match cur {
            Expr::Forall(vs, body) => {
                vars.extend(vs.iter().cloned());
                cur = body;
            }
            Expr::Exists(..) => return Err(SkolemError::Existential),
            _ => break,
        }
    }
    for e in cur.subterms() {
        match e {
            Expr::Exists(..) => return Err(SkolemError::Existential),
            Expr::Forall(..) => return Err(SkolemError::NestedQuantifier),
            _ => {}
        }
    }
    Ok((vars, cur))
}

/// Returns `¬matrix` with every universal variable replaced by a fresh
/// constant `sk_<var>_<tag>_<index>`, plus the constants in prefix order.
/// `tag` is normally [`short_hash`] of the printed task.
pub fn skolemize_negated_goal(goal: &Expr, tag: &str) -> Result<(Expr, Vec<Var>), SkolemError> {
    let (vars, matrix) = universal_prefix(goal)?;
    let names: BTreeSet<&str> = vars.iter().map(|v| v.name.as_str()).collect();
    if let Some(v) = matrix
        .free_vars()
        .into_iter()
        .find(|v| !names.contains(v.name.as_str()))
    {
        return Err(SkolemError::FreeVariable(v.name));
    }
    let mut binding = BTreeMap::new();
    let mut consts = Vec::with_capacity(vars.len());
    for (i, v) in vars.iter().enumerate() {
        let c = Var::new(&format!("sk_{}_{}_{}", v.name, tag, i), v.sort.clone());
        binding.insert(v.name.clone(), Expr::Var(c.clone()));
        consts.push(c);
    }
    Ok((Expr::not(matrix.instantiate(&binding)), consts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::Sort;

    fn peano() -> Sort {
        Sort::adt("Peano")
    }

    #[test]
    fn zero_left_identity() {
        let n = Var::new("n", peano());
        let z = Expr::ctor("Z", vec![]);
        let body = Expr::eq(Expr::call("plus", vec![z, Expr::Var(n.clone())]), Expr::Var(n.clone()));
        let goal = Expr::forall(vec![n], body);
        let (neg, consts) = skolemize_negated_goal(&goal, "abcd0123").unwrap();
        assert_eq!(consts, vec![Var::new("sk_n_abcd0123_0", peano())]);
        assert_eq!(neg.to_string(), "(not (= (plus Z sk_n_abcd0123_0) sk_n_abcd0123_0))");
    }

    #[test]
    fn empty_prefix() {
        let (neg, consts) = skolemize_negated_goal(&Expr::Bool(true), "t").unwrap();
        assert_eq!(neg, Expr::not(Expr::Bool(true)));
        assert!(consts.is_empty());
        let (neg, _) = skolemize_negated_goal(&Expr::forall(vec![], Expr::Bool(true)), "t").unwrap();
        assert_eq!(neg, Expr::not(Expr::Bool(true)));
    }

    #[test]
    fn existentials_and_alternation_rejected() {
        let x = Var::new("x", Sort::Int);
        let y = Var::new("y", Sort::Int);
        let ex = Expr::Exists(vec![x.clone()], Box::new(Expr::Bool(true)));
        assert_eq!(skolemize_negated_goal(&ex, "t"), Err(SkolemError::Existential));
        let nested = Expr::forall(
            vec![x.clone()],
            Expr::and(vec![Expr::Bool(true), Expr::forall(vec![y], Expr::Bool(true))]),
        );
        assert_eq!(skolemize_negated_goal(&nested, "t"), Err(SkolemError::NestedQuantifier));
        let free = Expr::le(Expr::Var(x), Expr::Int(0));
        assert_eq!(
            skolemize_negated_goal(&free, "t"),
            Err(SkolemError::FreeVariable("x".into()))
        );
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(short_hash("abc"), "ba7816bf");
    }
}

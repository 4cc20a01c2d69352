//! Eager interpreter over the standard model, plus random ground values.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::defs::DefSet;
use crate::expr::{Builtin, Expr, Op};
use crate::sig::{Signature, Sort};

pub const DEFAULT_FUEL: u64 = 100_000;
const MAX_DEPTH: usize = 2_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    /// Fields are shared, so copying a value out of an environment is cheap.
    Ctor(String, Arc<[Value]>),
}

impl Value {
    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Int(n) => Expr::Int(*n),
            Value::Bool(b) => Expr::Bool(*b),
            Value::Ctor(c, args) => Expr::ctor(c, args.iter().map(Value::to_expr).collect()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("fuel exhausted after {0} call expansions")]
    FuelExhausted(u64),
    #[error("call nesting exceeded {0}")]
    DepthExceeded(usize),
    /// Guard violation at run time.
    #[error("destructor {destructor} applied to {value}")]
    WrongConstructor { destructor: String, value: String },
    #[error("free variable {0} in evaluated term")]
    FreeVariable(String),
    #[error("no definition for {0}")]
    Undefined(String),
    #[error("uninterpreted function {0} cannot be evaluated")]
    Uninterpreted(String),
    #[error("quantifiers cannot be evaluated")]
    Quantifier,
    #[error("integer overflow")]
    Overflow,
    #[error("modulo by zero")]
    ModuloByZero,
    #[error("ill-sorted operand for {0}")]
    IllSorted(String),
}

type Env = BTreeMap<String, Value>;

pub struct Evaluator<'a> {
    sig: &'a Signature,
    defs: &'a DefSet,
    fuel: u64,
    used: u64,
}

/// Evaluates a ground term with at most `fuel` call expansions.
pub fn eval_standard(sig: &Signature, defs: &DefSet, t: &Expr, fuel: u64) -> Result<Value, EvalError> {
    Evaluator::new(sig, defs, fuel).eval(t, &Env::new())
}

impl<'a> Evaluator<'a> {
    pub fn new(sig: &'a Signature, defs: &'a DefSet, fuel: u64) -> Self {
        Evaluator {
            sig,
            defs,
            fuel,
            used: 0,
        }
    }

    pub fn calls_used(&self) -> u64 {
        self.used
    }

    pub fn eval(&mut self, t: &Expr, env: &BTreeMap<String, Value>) -> Result<Value, EvalError> {
        self.eval_at(t, env, 0)
    }

    fn eval_at(&mut self, t: &Expr, env: &Env, mut depth: usize) -> Result<Value, EvalError> {
        if depth > MAX_DEPTH {
            return Err(EvalError::DepthExceeded(MAX_DEPTH));
        }
        // Calls and branches in tail position loop here instead of recursing.
        // Tail calls still count towards the depth so that values built by a
        // runaway loop stay shallow enough to drop.
        let defs = self.defs;
        let mut cur: &Expr = t;
        let mut local: Option<Env> = None;
        loop {
            let next_env;
            {
                let env_ref = local.as_ref().unwrap_or(env);
                match cur {
                    Expr::Ite(c, a, b) => {
                        cur = if self.eval_bool(c, env_ref, depth)? { a } else { b };
                        continue;
                    }
                    Expr::App(Op::Defined(name), args) => {
                        let d = defs.get(name).ok_or_else(|| EvalError::Undefined(name.clone()))?;
                        let mut frame = Env::new();
                        for (p, a) in d.params.iter().zip(args) {
                            let v = self.eval_at(a, env_ref, depth + 1)?;
                            frame.insert(p.name.clone(), v);
                        }
                        if self.used >= self.fuel {
                            return Err(EvalError::FuelExhausted(self.fuel));
                        }
                        self.used += 1;
                        depth += 1;
                        if depth > MAX_DEPTH {
                            return Err(EvalError::DepthExceeded(MAX_DEPTH));
                        }
                        next_env = frame;
                        cur = &d.body;
                    }
                    _ => return self.eval_node(cur, env_ref, depth),
                }
            }
            local = Some(next_env);
        }
    }

    fn eval_bool(&mut self, t: &Expr, env: &Env, depth: usize) -> Result<bool, EvalError> {
        match self.eval_at(t, env, depth + 1)? {
            Value::Bool(b) => Ok(b),
            _ => Err(EvalError::IllSorted("condition".into())),
        }
    }

    fn eval_int(&mut self, t: &Expr, env: &Env, depth: usize, op: &str) -> Result<i64, EvalError> {
        match self.eval_at(t, env, depth + 1)? {
            Value::Int(n) => Ok(n),
            _ => Err(EvalError::IllSorted(op.into())),
        }
    }

    fn eval_node(&mut self, t: &Expr, env: &Env, depth: usize) -> Result<Value, EvalError> {
        match t {
            Expr::Var(v) => env
                .get(&v.name)
                .cloned()
                .ok_or_else(|| EvalError::FreeVariable(v.name.clone())),
            Expr::Int(n) => Ok(Value::Int(*n)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Forall(..) | Expr::Exists(..) => Err(EvalError::Quantifier),
            Expr::Ite(..) | Expr::App(Op::Defined(_), _) => self.eval_at(t, env, depth + 1),
            Expr::App(Op::Ctor(c), args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_at(a, env, depth + 1))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::Ctor(c.clone(), vals.into()))
            }
            Expr::App(Op::Dtor(d), args) => {
                let (_, ctor, idx) = self.sig.destructor(d).ok_or_else(|| EvalError::Undefined(d.clone()))?;
                match self.eval_at(&args[0], env, depth + 1)? {
                    Value::Ctor(c, fields) if c == ctor.name => Ok(fields[idx].clone()),
                    other => Err(EvalError::WrongConstructor {
                        destructor: d.clone(),
                        value: other.to_string(),
                    }),
                }
            }
            Expr::App(Op::Is(c), args) => match self.eval_at(&args[0], env, depth + 1)? {
                Value::Ctor(name, _) => Ok(Value::Bool(&name == c)),
                _ => Err(EvalError::IllSorted(format!("is-{c}"))),
            },
            Expr::App(Op::Fun(f), _) => Err(EvalError::Uninterpreted(f.clone())),
            Expr::App(Op::Builtin(b), args) => self.eval_builtin(*b, args, env, depth),
        }
    }

    fn eval_builtin(&mut self, b: Builtin, args: &[Expr], env: &Env, depth: usize) -> Result<Value, EvalError> {
        let name = b.name();
        Ok(match b {
            Builtin::Not => Value::Bool(!self.eval_bool(&args[0], env, depth)?),
            Builtin::And => {
                for a in args {
                    if !self.eval_bool(a, env, depth)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            Builtin::Or => {
                for a in args {
                    if self.eval_bool(a, env, depth)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            Builtin::Implies => {
                Value::Bool(!self.eval_bool(&args[0], env, depth)? || self.eval_bool(&args[1], env, depth)?)
            }
            Builtin::Eq => {
                let l = self.eval_at(&args[0], env, depth + 1)?;
                let r = self.eval_at(&args[1], env, depth + 1)?;
                Value::Bool(l == r)
            }
            Builtin::Add => {
                let mut acc: i64 = 0;
                for a in args {
                    acc = acc
                        .checked_add(self.eval_int(a, env, depth, name)?)
                        .ok_or(EvalError::Overflow)?;
                }
                Value::Int(acc)
            }
            Builtin::Mul => {
                let l = self.eval_int(&args[0], env, depth, name)?;
                let r = self.eval_int(&args[1], env, depth, name)?;
                Value::Int(l.checked_mul(r).ok_or(EvalError::Overflow)?)
            }
            Builtin::Sub => {
                let l = self.eval_int(&args[0], env, depth, name)?;
                let r = self.eval_int(&args[1], env, depth, name)?;
                Value::Int(l.checked_sub(r).ok_or(EvalError::Overflow)?)
            }
            Builtin::Neg => Value::Int(
                self.eval_int(&args[0], env, depth, name)?
                    .checked_neg()
                    .ok_or(EvalError::Overflow)?,
            ),
            Builtin::Mod => {
                let l = self.eval_int(&args[0], env, depth, name)?;
                let r = self.eval_int(&args[1], env, depth, name)?;
                if r == 0 {
                    return Err(EvalError::ModuloByZero);
                }
                // SMT-LIB mod: result in [0, |r|).
                Value::Int(l.rem_euclid(r))
            }
            Builtin::Le | Builtin::Lt | Builtin::Ge | Builtin::Gt => {
                let l = self.eval_int(&args[0], env, depth, name)?;
                let r = self.eval_int(&args[1], env, depth, name)?;
                Value::Bool(match b {
                    Builtin::Le => l <= r,
                    Builtin::Lt => l < r,
                    Builtin::Ge => l >= r,
                    _ => l > r,
                })
            }
        })
    }
}

/// Bounds for random ground values.
#[derive(Clone, Copy, Debug)]
pub struct ValueBounds {
    pub max_depth: usize,
    pub int_min: i64,
    pub int_max: i64,
}

impl Default for ValueBounds {
    fn default() -> Self {
        ValueBounds {
            max_depth: 6,
            int_min: -20,
            int_max: 20,
        }
    }
}

/// Uniformly picks constructors among those that still fit in the remaining
/// depth, so every generated value has height at most `max_depth`.
pub fn random_value<R: Rng>(sig: &Signature, sort: &Sort, bounds: ValueBounds, rng: &mut R) -> Option<Value> {
    let heights = sig.min_heights();
    gen_value(sig, &heights, sort, bounds.max_depth, bounds, rng)
}

fn gen_value<R: Rng>(
    sig: &Signature,
    heights: &BTreeMap<String, usize>,
    sort: &Sort,
    budget: usize,
    bounds: ValueBounds,
    rng: &mut R,
) -> Option<Value> {
    match sort {
        Sort::Int => Some(Value::Int(rng.random_range(bounds.int_min..=bounds.int_max))),
        Sort::Bool => Some(Value::Bool(rng.random())),
        Sort::Adt(name) => {
            let adt = sig.adt(name)?;
            let fits = |s: &Sort| match s {
                Sort::Adt(n) => heights.get(n).is_some_and(|&h| h < budget),
                _ => true,
            };
            let choices: Vec<_> = adt
                .constructors
                .iter()
                .filter(|c| c.fields.iter().all(|f| fits(&f.sort)))
                .collect();
            if choices.is_empty() {
                return None;
            }
            let c = choices[rng.random_range(0..choices.len())];
            let mut args = Vec::with_capacity(c.fields.len());
            for f in &c.fields {
                args.push(gen_value(sig, heights, &f.sort, budget - 1, bounds, rng)?);
            }
            Some(Value::Ctor(c.name.clone(), args.into()))
        }
    }
}

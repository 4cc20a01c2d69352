//! Naive full-instantiation oracle.
//!
//! Instantiates every definition on every sort-correct tuple drawn from a
//! pool of ground terms, whether or not the application occurs anywhere.
//! The pool starts as the subterms of the goal matrix and grows by one
//! layer per level: all destructor applications of pool terms plus every
//! subterm of the instantiated bodies. Written against the AST only; it
//! shares no code with the engine's collection, encoding or session logic.

use std::collections::BTreeSet;
use std::io::Write;
use std::process::{Command, Stdio};

use fluid_core::expr::{Builtin, Expr, Op, Var};
use fluid_core::sig::Sort;
use fluid_core::task::Task;

/// Per-level cap on the number of instances; beyond it the oracle gives up.
pub const MAX_INSTANCES: usize = 40_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Valid { level: usize, instances: usize },
    NotProved { levels: usize },
    TooLarge { level: usize },
}

fn solver() -> String {
    std::env::var("FLUID_SOLVER").unwrap_or_else(|_| "z3".into())
}

fn q(name: &str) -> String {
    format!("|{name}|")
}

fn sort(s: &Sort) -> String {
    match s {
        Sort::Int => "Int".into(),
        Sort::Bool => "Bool".into(),
        Sort::Adt(n) => q(n),
    }
}

fn smt(e: &Expr) -> String {
    match e {
        Expr::Var(v) => q(&v.name),
        Expr::Int(n) if *n < 0 => format!("(- {})", n.unsigned_abs()),
        Expr::Int(n) => n.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Ite(c, t, f) => format!("(ite {} {} {})", smt(c), smt(t), smt(f)),
        Expr::App(op, args) => {
            let head = match op {
                Op::Ctor(c) | Op::Dtor(c) | Op::Defined(c) | Op::Fun(c) => q(c),
                Op::Is(c) => format!("(_ is {})", q(c)),
                Op::Builtin(b) => match b {
                    Builtin::Neg | Builtin::Sub => "-".into(),
                    b => b.name().into(),
                },
            };
            if args.is_empty() {
                head
            } else {
                let a: Vec<String> = args.iter().map(smt).collect();
                format!("({} {})", head, a.join(" "))
            }
        }
        Expr::Forall(..) | Expr::Exists(..) => panic!("oracle: quantifier in ground formula"),
    }
}

fn matrix(goal: &Expr) -> &Expr {
    let mut cur = goal;
    while let Expr::Forall(_, b) = cur {
        cur = b;
    }
    cur
}

fn free_vars(e: &Expr, out: &mut BTreeSet<Var>) {
    for s in e.subterms() {
        if let Expr::Var(v) = s {
            out.insert(v.clone());
        }
    }
}

fn preamble(task: &Task, consts: &BTreeSet<Var>) -> String {
    let mut s = String::from("(set-logic ALL)\n");
    let adts = task.sig.adts();
    if !adts.is_empty() {
        let heads: Vec<String> = adts.iter().map(|a| format!("({} 0)", q(&a.name))).collect();
        let bodies: Vec<String> = adts
            .iter()
            .map(|a| {
                let cs: Vec<String> = a
                    .constructors
                    .iter()
                    .map(|c| {
                        let fs: Vec<String> = c
                            .fields
                            .iter()
                            .map(|f| format!(" ({} {})", q(&f.destructor), sort(&f.sort)))
                            .collect();
                        format!("({}{})", q(&c.name), fs.concat())
                    })
                    .collect();
                format!("({})", cs.join(" "))
            })
            .collect();
        s += &format!("(declare-datatypes ({}) ({}))\n", heads.join(" "), bodies.join(" "));
    }
    for f in task.sig.functions().iter().chain(task.sig.defined_symbols()) {
        let ps: Vec<String> = f.params.iter().map(sort).collect();
        s += &format!("(declare-fun {} ({}) {})\n", q(&f.name), ps.join(" "), sort(&f.ret));
    }
    for v in consts {
        s += &format!("(declare-fun {} () {})\n", q(&v.name), sort(&v.sort));
    }
    s
}

fn check(script: &str) -> String {
    let mut child = Command::new(solver())
        .args(["-smt2", "-in", "-T:60"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("oracle solver");
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .next()
        .unwrap_or("")
        .trim()
        .to_string()
}

fn cartesian(pools: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let mut acc: Vec<Vec<Expr>> = vec![Vec::new()];
    for p in pools {
        let mut next = Vec::with_capacity(acc.len() * p.len());
        for prefix in &acc {
            for t in p {
                let mut v = prefix.clone();
                v.push(t.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Tries levels `0..=max_level`; valid as soon as one level is unsat.
pub fn full_instantiation(task: &Task, max_level: usize) -> OracleVerdict {
    let body = matrix(&task.goal).clone();
    let negated = Expr::App(Op::Builtin(Builtin::Not), vec![body.clone()]);
    let mut pool: BTreeSet<Expr> = body.subterms().into_iter().cloned().collect();

    for level in 0..=max_level {
        let mut instances = Vec::new();
        for d in task.defs.iter() {
            let pools: Vec<Vec<Expr>> = d
                .params
                .iter()
                .map(|p| {
                    pool.iter()
                        .filter(|t| task.sig.sort_of(t).ok().as_ref() == Some(&p.sort))
                        .cloned()
                        .collect()
                })
                .collect();
            let n: usize = pools.iter().map(Vec::len).product();
            if instances.len() + n > MAX_INSTANCES {
                return OracleVerdict::TooLarge { level };
            }
            for args in cartesian(&pools) {
                let binding = d
                    .params
                    .iter()
                    .zip(&args)
                    .map(|(p, a)| (p.name.clone(), a.clone()))
                    .collect();
                let inst = d.body.instantiate(&binding);
                let app = Expr::App(Op::Defined(d.name.clone()), args);
                instances.push((app, inst));
            }
        }

        let mut consts = BTreeSet::new();
        free_vars(&negated, &mut consts);
        for (a, b) in &instances {
            free_vars(a, &mut consts);
            free_vars(b, &mut consts);
        }
        let mut script = preamble(task, &consts);
        for (a, b) in &instances {
            script += &format!("(assert (= {} {}))\n", smt(a), smt(b));
        }
        script += &format!("(assert {})\n(check-sat)\n", smt(&negated));
        if check(&script) == "unsat" {
            return OracleVerdict::Valid {
                level,
                instances: instances.len(),
            };
        }

        let mut grown = pool.clone();
        for t in &pool {
            if let Ok(Sort::Adt(name)) = task.sig.sort_of(t) {
                for c in &task.sig.adt(&name).unwrap().constructors {
                    for f in &c.fields {
                        grown.insert(Expr::App(Op::Dtor(f.destructor.clone()), vec![t.clone()]));
                    }
                }
            }
        }
        for (_, b) in &instances {
            grown.extend(b.subterms().into_iter().cloned());
        }
        pool = grown;
    }
    OracleVerdict::NotProved { levels: max_level + 1 }
}

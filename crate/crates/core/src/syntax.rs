//! The `.fluid` surface language: an s-expression reader, elaboration into a
//! [`Task`], and a printer whose output parses back to the same task.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::contracts::Contract;
use crate::defs::{infer_strata, DefDecl, InferenceNote, RankSpec};
use crate::expr::{Builtin, Expr, Op, Var};
use crate::guards::check_guards;
use crate::sig::{AdtDecl, Constructor, FunDecl, Signature, Sort, Symbol};
use crate::task::Task;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Lexical,
    Syntax,
    Sort,
    Arity,
    Unguarded,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Lexical => "lexical error",
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Sort => "sort error",
            ErrorKind::Arity => "arity error",
            ErrorKind::Unguarded => "unguarded destructor",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub pos: Pos,
    pub message: String,
}

fn err<T>(kind: ErrorKind, pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        kind,
        pos,
        message: message.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.pos, self.message)
    }
}

/// `; expect <mode> <outcome> [extra cli arguments]` header line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub mode: String,
    pub outcome: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SourceFile {
    pub task: Task,
    pub warnings: Vec<Diagnostic>,
    pub notes: Vec<InferenceNote>,
    pub expectations: Vec<Expectation>,
}

// ---- reader ----

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }
}

fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let here = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == ';' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        match c {
            '(' => {
                chars.next();
                col += 1;
                stack.push((Vec::new(), here));
            }
            ')' => {
                chars.next();
                col += 1;
                let Some((items, p)) = stack.pop() else {
                    return err(ErrorKind::Lexical, here, "unbalanced ')'");
                };
                let e = Sexp::List(items, p);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => top.push(e),
                }
            }
            _ => {
                let mut tok = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    if !(c.is_ascii_alphanumeric() || "_-+*/<>=!?.:'@$%&^~".contains(c)) {
                        return err(
                            ErrorKind::Lexical,
                            Pos { line, col },
                            format!("unexpected character {c:?}"),
                        );
                    }
                    tok.push(c);
                    chars.next();
                    col += 1;
                }
                let e = Sexp::Atom(tok, here);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => top.push(e),
                }
            }
        }
    }
    if let Some((_, p)) = stack.pop() {
        return err(ErrorKind::Lexical, p, "unclosed '('");
    }
    Ok(top)
}

fn parse_int(tok: &str) -> Option<i64> {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    tok.parse().ok()
}

fn builtin(name: &str) -> Option<Builtin> {
    Some(match name {
        "not" => Builtin::Not,
        "and" => Builtin::And,
        "or" => Builtin::Or,
        "=>" => Builtin::Implies,
        "=" => Builtin::Eq,
        "+" => Builtin::Add,
        "-" => Builtin::Sub,
        "*" => Builtin::Mul,
        "mod" => Builtin::Mod,
        "<=" => Builtin::Le,
        "<" => Builtin::Lt,
        ">=" => Builtin::Ge,
        ">" => Builtin::Gt,
        _ => return None,
    })
}

const RESERVED: &[&str] = &["ite", "forall", "exists", "true", "false", "Int", "Bool"];

// ---- elaboration ----

struct Elab {
    sig: Signature,
}

impl Elab {
    fn sort(&self, s: &Sexp) -> Result<Sort, ParseError> {
        let Some(name) = s.atom() else {
            return err(ErrorKind::Syntax, s.pos(), "expected a sort name");
        };
        let sort = match name {
            "Int" => Sort::Int,
            "Bool" => Sort::Bool,
            _ => Sort::adt(name),
        };
        if !self.sig.has_sort(&sort) {
            return err(ErrorKind::Sort, s.pos(), format!("unknown sort {name}"));
        }
        Ok(sort)
    }

    fn binders(&self, s: &Sexp) -> Result<Vec<Var>, ParseError> {
        let Sexp::List(items, _) = s else {
            return err(ErrorKind::Syntax, s.pos(), "expected a binder list ((name Sort) ...)");
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for b in items {
            match b {
                Sexp::List(pair, p) if pair.len() == 2 => {
                    let name = self.fresh_name(&pair[0])?;
                    if !seen.insert(name.clone()) {
                        return err(ErrorKind::Syntax, *p, format!("{name} is bound twice"));
                    }
                    out.push(Var::new(&name, self.sort(&pair[1])?));
                }
                _ => return err(ErrorKind::Syntax, b.pos(), "expected (name Sort)"),
            }
        }
        Ok(out)
    }

    fn fresh_name(&self, s: &Sexp) -> Result<String, ParseError> {
        let Some(name) = s.atom() else {
            return err(ErrorKind::Syntax, s.pos(), "expected a name");
        };
        if parse_int(name).is_some() || builtin(name).is_some() || RESERVED.contains(&name) || name.starts_with(':') {
            return err(ErrorKind::Syntax, s.pos(), format!("{name} cannot be used as a name"));
        }
        if self.sig.lookup(name).is_some()
            || name
                .strip_prefix("is-")
                .is_some_and(|c| self.sig.constructor(c).is_some())
        {
            return err(ErrorKind::Syntax, s.pos(), format!("{name} is already a symbol"));
        }
        Ok(name.to_string())
    }

    /// Builds an expression and checks its sort, reporting the innermost
    /// offending form.
    fn expr(&self, s: &Sexp, env: &BTreeMap<String, Var>) -> Result<Expr, ParseError> {
        let e = self.build(s, env)?;
        Ok(e)
    }

    fn checked(&self, e: Expr, pos: Pos) -> Result<Expr, ParseError> {
        match self.sig.sort_of(&e) {
            Ok(_) => Ok(e),
            Err(crate::expr::SortError::Arity {
                symbol,
                expected,
                found,
            }) => err(
                ErrorKind::Arity,
                pos,
                format!("{symbol} expects {expected} argument(s), got {found}"),
            ),
            Err(other) => err(ErrorKind::Sort, pos, other.to_string()),
        }
    }

    fn build(&self, s: &Sexp, env: &BTreeMap<String, Var>) -> Result<Expr, ParseError> {
        match s {
            Sexp::Atom(a, p) => {
                if let Some(v) = env.get(a) {
                    return Ok(Expr::Var(v.clone()));
                }
                if let Some(n) = parse_int(a) {
                    return Ok(Expr::Int(n));
                }
                match a.as_str() {
                    "true" => return Ok(Expr::Bool(true)),
                    "false" => return Ok(Expr::Bool(false)),
                    _ => {}
                }
                if a.starts_with('-') && a[1..].bytes().all(|b| b.is_ascii_digit()) && a.len() > 1 {
                    return err(ErrorKind::Lexical, *p, format!("integer literal {a} out of range"));
                }
                if a.bytes().all(|b| b.is_ascii_digit()) {
                    return err(ErrorKind::Lexical, *p, format!("integer literal {a} out of range"));
                }
                match self.sig.lookup(a) {
                    Some(Symbol::Constructor(_, c)) => self.checked(Expr::ctor(&c.name, vec![]), *p),
                    Some(_) => err(ErrorKind::Arity, *p, format!("{a} must be applied to arguments")),
                    None => err(ErrorKind::Sort, *p, format!("unknown symbol {a}")),
                }
            }
            Sexp::List(items, p) => {
                let Some((head, rest)) = items.split_first() else {
                    return err(ErrorKind::Syntax, *p, "empty application");
                };
                let Some(h) = head.atom() else {
                    return err(ErrorKind::Syntax, head.pos(), "expected an operator");
                };
                match h {
                    "ite" => {
                        if rest.len() != 3 {
                            return err(ErrorKind::Arity, *p, "ite expects 3 arguments");
                        }
                        let c = self.build(&rest[0], env)?;
                        let t = self.build(&rest[1], env)?;
                        let e = self.build(&rest[2], env)?;
                        return self.checked(Expr::ite(c, t, e), *p);
                    }
                    "forall" | "exists" => {
                        if rest.len() != 2 {
                            return err(ErrorKind::Syntax, *p, format!("{h} expects a binder list and a body"));
                        }
                        let vars = self.binders(&rest[0])?;
                        let mut inner = env.clone();
                        for v in &vars {
                            if env.contains_key(&v.name) {
                                return err(
                                    ErrorKind::Syntax,
                                    rest[0].pos(),
                                    format!("{} shadows an outer variable", v.name),
                                );
                            }
                            inner.insert(v.name.clone(), v.clone());
                        }
                        let body = self.build(&rest[1], &inner)?;
                        let e = if h == "forall" {
                            Expr::forall(vars, body)
                        } else {
                            Expr::Exists(vars, Box::new(body))
                        };
                        return self.checked(e, *p);
                    }
                    _ => {}
                }
                let args = rest.iter().map(|a| self.build(a, env)).collect::<Result<Vec<_>, _>>()?;
                let op = if let Some(b) = builtin(h) {
                    if b == Builtin::Sub && args.len() == 1 {
                        Op::Builtin(Builtin::Neg)
                    } else {
                        Op::Builtin(b)
                    }
                } else if let Some(c) = h.strip_prefix("is-").filter(|c| self.sig.constructor(c).is_some()) {
                    Op::Is(c.to_string())
                } else {
                    match self.sig.lookup(h) {
                        Some(Symbol::Constructor(..)) => Op::Ctor(h.to_string()),
                        Some(Symbol::Destructor(..)) => Op::Dtor(h.to_string()),
                        Some(Symbol::Recognizer(_, c)) => Op::Is(c.name.clone()),
                        Some(Symbol::Background(_)) => Op::Fun(h.to_string()),
                        Some(Symbol::Defined(_)) => Op::Defined(h.to_string()),
                        None => return err(ErrorKind::Sort, head.pos(), format!("unknown symbol {h}")),
                    }
                };
                if env.contains_key(h) {
                    return err(
                        ErrorKind::Syntax,
                        head.pos(),
                        format!("variable {h} applied as a function"),
                    );
                }
                self.checked(Expr::App(op, args), *p)
            }
        }
    }
}

fn expect_list<'a>(s: &'a Sexp, what: &str) -> Result<(&'a [Sexp], Pos), ParseError> {
    match s {
        Sexp::List(items, p) => Ok((items, *p)),
        Sexp::Atom(_, p) => err(ErrorKind::Syntax, *p, format!("expected {what}")),
    }
}

fn expectations(text: &str) -> Vec<Expectation> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix(';'))
        .filter_map(|l| l.trim().strip_prefix("expect "))
        .filter_map(|l| {
            let mut it = l.split_whitespace().map(str::to_string);
            Some(Expectation {
                mode: it.next()?,
                outcome: it.next()?,
                args: it.collect(),
            })
        })
        .collect()
}

struct PendingDef<'a> {
    name: String,
    params: Vec<Var>,
    ret: Sort,
    stratum: Option<usize>,
    rank: Option<&'a Sexp>,
    body: &'a Sexp,
    pos: Pos,
}

/// Parses and elaborates a whole file. Strata and ranks that are not given
/// are inferred.
pub fn parse_source(text: &str) -> Result<SourceFile, ParseError> {
    let forms = read_all(text)?;
    let mut el = Elab { sig: Signature::new() };

    // Declarations first, so definitions may refer to each other freely.
    let mut pending = Vec::new();
    let mut contracts_src = Vec::new();
    let mut goal_src: Option<(&Sexp, Pos)> = None;
    for form in &forms {
        let (items, pos) = expect_list(form, "a top-level form")?;
        let Some(kw) = items.first().and_then(Sexp::atom) else {
            return err(ErrorKind::Syntax, pos, "expected a top-level keyword");
        };
        match kw {
            "declare-adt" => {
                let [_, name, ctors] = items else {
                    return err(
                        ErrorKind::Syntax,
                        pos,
                        "expected (declare-adt Name ((Ctor (field Sort) ...) ...))",
                    );
                };
                let name = el.fresh_name(name)?;
                if el.sig.adt(&name).is_some() {
                    return err(ErrorKind::Syntax, pos, format!("sort {name} declared twice"));
                }
                // Register the sort before fields so it can be recursive.
                el.sig.add_adt(AdtDecl {
                    name: name.clone(),
                    constructors: Vec::new(),
                });
                let (cs, _) = expect_list(ctors, "a constructor list")?;
                let mut parsed = Vec::new();
                for c in cs {
                    let (parts, cp) = expect_list(c, "(Ctor (field Sort) ...)")?;
                    let Some((cname, fields)) = parts.split_first() else {
                        return err(ErrorKind::Syntax, cp, "empty constructor");
                    };
                    let cname = el.fresh_name(cname)?;
                    let mut fs = Vec::new();
                    for f in fields {
                        let (fp, fpos) = expect_list(f, "(field Sort)")?;
                        let [fname, fsort] = fp else {
                            return err(ErrorKind::Syntax, fpos, "expected (field Sort)");
                        };
                        fs.push((el.fresh_name(fname)?, el.sort(fsort)?));
                    }
                    let refs: Vec<(&str, Sort)> = fs.iter().map(|(n, s)| (n.as_str(), s.clone())).collect();
                    parsed.push(Constructor::new(&cname, &refs));
                    let mut adts = el.sig.adts().to_vec();
                    adts.last_mut().unwrap().constructors = parsed.clone();
                    el.sig = rebuild(&el.sig, adts);
                }
            }
            "declare-fun" => {
                let [_, name, params, ret] = items else {
                    return err(ErrorKind::Syntax, pos, "expected (declare-fun name (Sort ...) Sort)");
                };
                let name = el.fresh_name(name)?;
                let (ps, _) = expect_list(params, "a parameter sort list")?;
                let ps = ps.iter().map(|p| el.sort(p)).collect::<Result<Vec<_>, _>>()?;
                let ret = el.sort(ret)?;
                el.sig.add_function(FunDecl::new(&name, ps, ret));
            }
            "define-rec" => {
                if items.len() < 4 {
                    return err(
                        ErrorKind::Syntax,
                        pos,
                        "expected (define-rec (name (x Sort) ...) Sort [:stratum n] [:rank t] body)",
                    );
                }
                let (header, hp) = expect_list(&items[1], "(name (x Sort) ...)")?;
                let Some((name, params)) = header.split_first() else {
                    return err(ErrorKind::Syntax, hp, "missing definition name");
                };
                let name = el.fresh_name(name)?;
                let params = el.binders(&Sexp::List(params.to_vec(), hp))?;
                let ret = el.sort(&items[2])?;
                let mut stratum = None;
                let mut rank = None;
                let mut i = 3;
                while i + 1 < items.len() {
                    match items[i].atom() {
                        Some(":stratum") => {
                            let Some(n) = items[i + 1].atom().and_then(|a| a.parse::<usize>().ok()) else {
                                return err(ErrorKind::Syntax, items[i + 1].pos(), "expected a stratum number");
                            };
                            stratum = Some(n);
                        }
                        Some(":rank") => rank = Some(&items[i + 1]),
                        Some(k) if k.starts_with(':') => {
                            return err(ErrorKind::Syntax, items[i].pos(), format!("unknown annotation {k}"));
                        }
                        _ => break,
                    }
                    i += 2;
                }
                if i + 1 != items.len() {
                    return err(
                        ErrorKind::Syntax,
                        pos,
                        "expected exactly one body after the annotations",
                    );
                }
                el.sig.add_defined(FunDecl::new(
                    &name,
                    params.iter().map(|p| p.sort.clone()).collect(),
                    ret.clone(),
                ));
                pending.push(PendingDef {
                    name,
                    params,
                    ret,
                    stratum,
                    rank,
                    body: &items[i],
                    pos,
                });
            }
            "contract" => contracts_src.push((items, pos)),
            "goal" => {
                if goal_src.is_some() {
                    return err(ErrorKind::Syntax, pos, "more than one goal");
                }
                let [_, g] = items else {
                    return err(ErrorKind::Syntax, pos, "expected (goal formula)");
                };
                goal_src = Some((g, pos));
            }
            other => return err(ErrorKind::Syntax, items[0].pos(), format!("unknown form {other}")),
        }
    }
    let violations = el.sig.validate();
    if let Some(v) = violations.violations.first() {
        return err(ErrorKind::Sort, Pos { line: 1, col: 1 }, v.to_string());
    }

    let mut warnings = Vec::new();
    let mut decls = Vec::new();
    for d in &pending {
        let env: BTreeMap<String, Var> = d.params.iter().map(|p| (p.name.clone(), p.clone())).collect();
        let body = el.expr(d.body, &env)?;
        match el.sig.sort_of(&body) {
            Ok(s) if s == d.ret => {}
            Ok(s) => {
                return err(
                    ErrorKind::Sort,
                    d.body.pos(),
                    format!("body of {} has sort {s}, expected {}", d.name, d.ret),
                )
            }
            Err(e) => return err(ErrorKind::Sort, d.body.pos(), e.to_string()),
        }
        let rank = d.rank.map(|r| el.expr(r, &env)).transpose()?;
        warn_unguarded(&el.sig, &body, d.pos, &d.name, &mut warnings);
        decls.push(DefDecl {
            name: d.name.clone(),
            params: d.params.clone(),
            ret: d.ret.clone(),
            body,
            stratum: d.stratum,
            rank,
        });
    }

    let Some((goal_sexp, goal_pos)) = goal_src else {
        return err(ErrorKind::Syntax, Pos { line: 1, col: 1 }, "missing (goal ...)");
    };
    let goal = el.expr(goal_sexp, &BTreeMap::new())?;
    if el.sig.sort_of(&goal) != Ok(Sort::Bool) {
        return err(ErrorKind::Sort, goal_pos, "goal must be a formula");
    }
    warn_unguarded(&el.sig, &goal, goal_pos, "goal", &mut warnings);

    let mut contracts = Vec::new();
    for (items, pos) in contracts_src {
        let Some(sym) = items.get(1).and_then(Sexp::atom) else {
            return err(ErrorKind::Syntax, pos, "expected (contract name :pre f :post f :ret r)");
        };
        let Some(d) = decls.iter().find(|d| d.name == sym) else {
            return err(
                ErrorKind::Sort,
                items[1].pos(),
                format!("contract for {sym}, which has no definition"),
            );
        };
        let mut kv: BTreeMap<&str, &Sexp> = BTreeMap::new();
        let mut i = 2;
        while i < items.len() {
            let Some(k) = items[i].atom().filter(|k| [":pre", ":post", ":ret"].contains(k)) else {
                return err(ErrorKind::Syntax, items[i].pos(), "expected :pre, :post or :ret");
            };
            let Some(v) = items.get(i + 1) else {
                return err(ErrorKind::Syntax, items[i].pos(), format!("missing value for {k}"));
            };
            kv.insert(k, v);
            i += 2;
        }
        let ret_name = match kv.get(":ret") {
            Some(r) => el.fresh_name(r)?,
            None => "result".to_string(),
        };
        if d.params.iter().any(|p| p.name == ret_name) {
            return err(
                ErrorKind::Syntax,
                pos,
                format!("result name {ret_name} clashes with a parameter"),
            );
        }
        let ret = Var::new(&ret_name, d.ret.clone());
        let mut env: BTreeMap<String, Var> = d.params.iter().map(|p| (p.name.clone(), p.clone())).collect();
        env.insert(ret_name, ret.clone());
        let mut part = |k: &str| -> Result<Expr, ParseError> {
            match kv.get(k) {
                None => Ok(Expr::Bool(true)),
                Some(s) => {
                    let e = el.expr(s, &env)?;
                    if el.sig.sort_of(&e) != Ok(Sort::Bool) {
                        return err(ErrorKind::Sort, s.pos(), format!("contract {k} must be a formula"));
                    }
                    warn_unguarded(&el.sig, &e, s.pos(), &format!("contract {sym}"), &mut warnings);
                    Ok(e)
                }
            }
        };
        let pre = part(":pre")?;
        let post = part(":post")?;
        if contracts.iter().any(|c: &Contract| c.symbol == sym) {
            return err(ErrorKind::Syntax, pos, format!("second contract for {sym}"));
        }
        contracts.push(Contract {
            symbol: sym.to_string(),
            pre,
            post,
            ret,
        });
    }

    let (defs, notes) = infer_strata(&el.sig, decls);
    let mut task = Task::new(el.sig, defs, goal);
    task.contracts = contracts;
    Ok(SourceFile {
        task,
        warnings,
        notes,
        expectations: expectations(text),
    })
}

fn rebuild(sig: &Signature, adts: Vec<AdtDecl>) -> Signature {
    let mut out = Signature::new();
    for a in adts {
        out.add_adt(a);
    }
    for f in sig.functions() {
        out.add_function(f.clone());
    }
    for f in sig.defined_symbols() {
        out.add_defined(f.clone());
    }
    out
}

fn warn_unguarded(sig: &Signature, e: &Expr, pos: Pos, place: &str, out: &mut Vec<Diagnostic>) {
    for occ in check_guards(sig, e).unguarded() {
        out.push(Diagnostic {
            pos,
            message: format!(
                "in {place}: destructor {} on {} is not guarded by is-{}",
                occ.destructor, occ.argument, occ.constructor
            ),
        });
    }
}

/// Unguarded destructors become errors.
pub fn parse_source_strict(text: &str) -> Result<SourceFile, ParseError> {
    let src = parse_source(text)?;
    if let Some(w) = src.warnings.first() {
        return err(ErrorKind::Unguarded, w.pos, w.message.clone());
    }
    Ok(src)
}

// ---- printer ----

pub fn print_signature(sig: &Signature) -> String {
    let mut out = String::new();
    for adt in sig.adts() {
        let ctors: Vec<String> = adt
            .constructors
            .iter()
            .map(|c| {
                let mut s = format!("({}", c.name);
                for f in &c.fields {
                    let _ = write!(s, " ({} {})", f.destructor, f.sort);
                }
                s.push(')');
                s
            })
            .collect();
        let _ = writeln!(out, "(declare-adt {} ({}))", adt.name, ctors.join(" "));
    }
    for f in sig.functions() {
        let ps: Vec<String> = f.params.iter().map(Sort::to_string).collect();
        let _ = writeln!(out, "(declare-fun {} ({}) {})", f.name, ps.join(" "), f.ret);
    }
    out
}

/// The task in surface syntax, with the (possibly inferred) strata and
/// ranks written out.
pub fn print_task(task: &Task) -> String {
    let mut out = print_signature(&task.sig);
    for d in &task.defs {
        let ps: Vec<String> = d.params.iter().map(|p| format!("({} {})", p.name, p.sort)).collect();
        let head = if ps.is_empty() {
            format!("({})", d.name)
        } else {
            format!("({} {})", d.name, ps.join(" "))
        };
        let _ = write!(out, "(define-rec {head} {} :stratum {}", d.ret, d.stratum);
        if let RankSpec::Term(t) = &d.rank {
            let _ = write!(out, " :rank {t}");
        }
        let _ = writeln!(out, "\n  {})", d.body);
    }
    for c in &task.contracts {
        let _ = writeln!(
            out,
            "(contract {} :pre {} :post {} :ret {})",
            c.symbol, c.pre, c.post, c.ret.name
        );
    }
    let _ = writeln!(out, "(goal {})", task.goal);
    out
}

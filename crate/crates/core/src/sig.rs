//! Multi-sorted signatures: algebraic datatypes, background functions and
//! defined-function symbols.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

/// Names the SMT backend reserves; user symbols may not reuse them.
const RESERVED: &[&str] = &[
    "Int",
    "Bool",
    "true",
    "false",
    "not",
    "and",
    "or",
    "=>",
    "=",
    "ite",
    "+",
    "-",
    "*",
    "mod",
    "div",
    "abs",
    "<=",
    "<",
    ">=",
    ">",
    "distinct",
    "forall",
    "exists",
    "let",
    "_",
    "!",
    "as",
    "assert",
    "check-sat",
    "declare-fun",
    "declare-const",
    "define-fun",
    "push",
    "pop",
];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sort {
    Int,
    Bool,
    /// A foreground algebraic datatype, by name.
    Adt(String),
}

impl Sort {
    pub fn adt(name: &str) -> Self {
        Sort::Adt(name.to_string())
    }

    pub fn is_adt(&self) -> bool {
        matches!(self, Sort::Adt(_))
    }

    /// Sorts carrying a strict order usable by ranking functions.
    pub fn is_ordered(&self) -> bool {
        !matches!(self, Sort::Bool)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("Int"),
            Sort::Bool => f.write_str("Bool"),
            Sort::Adt(name) => f.write_str(name),
        }
    }
}

/// One constructor argument together with the destructor that projects it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    pub destructor: String,
    pub sort: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constructor {
    pub name: String,
    pub fields: Vec<Field>,
    pub recognizer: String,
}

impl Constructor {
    /// Builds a constructor with the conventional `is-<name>` recognizer.
    pub fn new(name: &str, fields: &[(&str, Sort)]) -> Self {
        Constructor {
            name: name.to_string(),
            fields: fields
                .iter()
                .map(|(d, s)| Field {
                    destructor: d.to_string(),
                    sort: s.clone(),
                })
                .collect(),
            recognizer: format!("is-{name}"),
        }
    }

    pub fn arity(&self) -> usize {
        self.fields.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdtDecl {
    pub name: String,
    pub constructors: Vec<Constructor>,
}

impl AdtDecl {
    pub fn sort(&self) -> Sort {
        Sort::Adt(self.name.clone())
    }
}

/// An uninterpreted background function or a defined-function symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunDecl {
    pub name: String,
    pub params: Vec<Sort>,
    pub ret: Sort,
}

impl FunDecl {
    pub fn new(name: &str, params: Vec<Sort>, ret: Sort) -> Self {
        FunDecl {
            name: name.to_string(),
            params,
            ret,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    Constructor,
    Destructor,
    Recognizer,
    BackgroundFunction,
    DefinedFunction,
}

/// Resolved information about a named symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol<'a> {
    Constructor(&'a AdtDecl, &'a Constructor),
    Destructor(&'a AdtDecl, &'a Constructor, usize),
    Recognizer(&'a AdtDecl, &'a Constructor),
    Background(&'a FunDecl),
    Defined(&'a FunDecl),
}

impl Symbol<'_> {
    pub fn kind(&self) -> SymbolKind {
        match self {
            Symbol::Constructor(..) => SymbolKind::Constructor,
            Symbol::Destructor(..) => SymbolKind::Destructor,
            Symbol::Recognizer(..) => SymbolKind::Recognizer,
            Symbol::Background(_) => SymbolKind::BackgroundFunction,
            Symbol::Defined(_) => SymbolKind::DefinedFunction,
        }
    }

    pub fn params(&self) -> Vec<Sort> {
        match self {
            Symbol::Constructor(_, c) => c.fields.iter().map(|f| f.sort.clone()).collect(),
            Symbol::Destructor(a, ..) | Symbol::Recognizer(a, _) => vec![a.sort()],
            Symbol::Background(f) | Symbol::Defined(f) => f.params.clone(),
        }
    }

    pub fn result(&self) -> Sort {
        match self {
            Symbol::Constructor(a, _) => a.sort(),
            Symbol::Destructor(_, c, i) => c.fields[*i].sort.clone(),
            Symbol::Recognizer(..) => Sort::Bool,
            Symbol::Background(f) | Symbol::Defined(f) => f.ret.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Constructor(usize, usize),
    Destructor(usize, usize, usize),
    Recognizer(usize, usize),
    Background(usize),
    Defined(usize),
}

/// A signature `(S, F, D)`. Declarations are kept in insertion order; name
/// lookups go through an index that keeps the first declaration of a name so
/// that clashes can still be reported by [`Signature::validate`].
#[derive(Clone, Debug, Default)]
pub struct Signature {
    adts: Vec<AdtDecl>,
    functions: Vec<FunDecl>,
    defined: Vec<FunDecl>,
    index: HashMap<String, Slot>,
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.adts == other.adts && self.functions == other.functions && self.defined == other.defined
    }
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_adt(&mut self, adt: AdtDecl) -> &mut Self {
        self.adts.push(adt);
        self.reindex();
        self
    }

    pub fn add_function(&mut self, f: FunDecl) -> &mut Self {
        self.functions.push(f);
        self.reindex();
        self
    }

    pub fn add_defined(&mut self, f: FunDecl) -> &mut Self {
        self.defined.push(f);
        self.reindex();
        self
    }

    pub fn adts(&self) -> &[AdtDecl] {
        &self.adts
    }

    pub fn functions(&self) -> &[FunDecl] {
        &self.functions
    }

    pub fn defined_symbols(&self) -> &[FunDecl] {
        &self.defined
    }

    fn reindex(&mut self) {
        let mut index = HashMap::new();
        for (ai, adt) in self.adts.iter().enumerate() {
            for (ci, c) in adt.constructors.iter().enumerate() {
                index.entry(c.name.clone()).or_insert(Slot::Constructor(ai, ci));
                index.entry(c.recognizer.clone()).or_insert(Slot::Recognizer(ai, ci));
                for (fi, f) in c.fields.iter().enumerate() {
                    index
                        .entry(f.destructor.clone())
                        .or_insert(Slot::Destructor(ai, ci, fi));
                }
            }
        }
        for (i, f) in self.functions.iter().enumerate() {
            index.entry(f.name.clone()).or_insert(Slot::Background(i));
        }
        for (i, f) in self.defined.iter().enumerate() {
            index.entry(f.name.clone()).or_insert(Slot::Defined(i));
        }
        self.index = index;
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol<'_>> {
        Some(match *self.index.get(name)? {
            Slot::Constructor(a, c) => Symbol::Constructor(&self.adts[a], &self.adts[a].constructors[c]),
            Slot::Destructor(a, c, f) => Symbol::Destructor(&self.adts[a], &self.adts[a].constructors[c], f),
            Slot::Recognizer(a, c) => Symbol::Recognizer(&self.adts[a], &self.adts[a].constructors[c]),
            Slot::Background(i) => Symbol::Background(&self.functions[i]),
            Slot::Defined(i) => Symbol::Defined(&self.defined[i]),
        })
    }

    pub fn adt(&self, name: &str) -> Option<&AdtDecl> {
        self.adts.iter().find(|a| a.name == name)
    }

    pub fn constructor(&self, name: &str) -> Option<(&AdtDecl, &Constructor)> {
        match self.lookup(name)? {
            Symbol::Constructor(a, c) => Some((a, c)),
            _ => None,
        }
    }

    pub fn destructor(&self, name: &str) -> Option<(&AdtDecl, &Constructor, usize)> {
        match self.lookup(name)? {
            Symbol::Destructor(a, c, i) => Some((a, c, i)),
            _ => None,
        }
    }

    pub fn defined(&self, name: &str) -> Option<&FunDecl> {
        match self.lookup(name)? {
            Symbol::Defined(f) => Some(f),
            _ => None,
        }
    }

    pub fn function(&self, name: &str) -> Option<&FunDecl> {
        match self.lookup(name)? {
            Symbol::Background(f) => Some(f),
            _ => None,
        }
    }

    pub fn has_sort(&self, sort: &Sort) -> bool {
        match sort {
            Sort::Int | Sort::Bool => true,
            Sort::Adt(n) => self.adt(n).is_some(),
        }
    }

    /// Minimal constructor-term height for every inhabited ADT sort. Sorts
    /// missing from the map are uninhabited.
    pub fn min_heights(&self) -> BTreeMap<String, usize> {
        let mut heights: BTreeMap<String, usize> = BTreeMap::new();
        loop {
            let mut changed = false;
            for adt in &self.adts {
                for c in &adt.constructors {
                    let mut h = 0usize;
                    let mut ok = true;
                    for f in &c.fields {
                        match &f.sort {
                            Sort::Int | Sort::Bool => {}
                            Sort::Adt(n) => match heights.get(n) {
                                Some(fh) => h = h.max(*fh),
                                None => {
                                    ok = false;
                                    break;
                                }
                            },
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let cand = h + 1;
                    let better = heights.get(&adt.name).is_none_or(|old| cand < *old);
                    if better {
                        heights.insert(adt.name.clone(), cand);
                        changed = true;
                    }
                }
            }
            if !changed {
                return heights;
            }
        }
    }

    /// Checks every signature invariant; an empty report means the signature
    /// is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut sort_names = BTreeSet::new();
        for adt in &self.adts {
            if adt.name == "Int" || adt.name == "Bool" {
                report.push(Violation::ReservedName(adt.name.clone()));
            }
            if !sort_names.insert(adt.name.clone()) {
                report.push(Violation::DuplicateSort(adt.name.clone()));
            }
        }
        if self.adts.is_empty() {
            report.push(Violation::NoForegroundSort);
        }

        let mut owners: BTreeMap<&str, Vec<SymbolKind>> = BTreeMap::new();
        for adt in &self.adts {
            if adt.constructors.is_empty() {
                report.push(Violation::NoConstructors(adt.name.clone()));
            }
            for c in &adt.constructors {
                owners.entry(&c.name).or_default().push(SymbolKind::Constructor);
                owners.entry(&c.recognizer).or_default().push(SymbolKind::Recognizer);
                for f in &c.fields {
                    owners.entry(&f.destructor).or_default().push(SymbolKind::Destructor);
                    if !self.has_sort(&f.sort) {
                        report.push(Violation::UnknownSort {
                            context: format!("field {} of {}", f.destructor, c.name),
                            sort: f.sort.to_string(),
                        });
                    }
                }
            }
        }
        for f in &self.functions {
            owners.entry(&f.name).or_default().push(SymbolKind::BackgroundFunction);
        }
        for f in &self.defined {
            owners.entry(&f.name).or_default().push(SymbolKind::DefinedFunction);
        }
        for f in self.functions.iter().chain(&self.defined) {
            for s in f.params.iter().chain(std::iter::once(&f.ret)) {
                if !self.has_sort(s) {
                    report.push(Violation::UnknownSort {
                        context: format!("symbol {}", f.name),
                        sort: s.to_string(),
                    });
                }
            }
        }
        for (name, kinds) in owners {
            if RESERVED.contains(&name) {
                report.push(Violation::ReservedName(name.to_string()));
            }
            if sort_names.contains(name) {
                report.push(Violation::NameClash {
                    name: name.to_string(),
                    kinds: kinds.clone(),
                });
            } else if kinds.len() > 1 {
                report.push(Violation::NameClash {
                    name: name.to_string(),
                    kinds,
                });
            }
        }

        let heights = self.min_heights();
        for adt in &self.adts {
            if !heights.contains_key(&adt.name) && !adt.constructors.is_empty() {
                report.push(Violation::Uninhabited(adt.name.clone()));
            }
        }
        report
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    NoForegroundSort,
    DuplicateSort(String),
    NoConstructors(String),
    Uninhabited(String),
    UnknownSort { context: String, sort: String },
    NameClash { name: String, kinds: Vec<SymbolKind> },
    ReservedName(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoForegroundSort => write!(f, "signature declares no algebraic datatype"),
            Violation::DuplicateSort(s) => write!(f, "sort {s} declared more than once"),
            Violation::NoConstructors(s) => write!(f, "datatype {s} has no constructors"),
            Violation::Uninhabited(s) => write!(f, "datatype {s} has no finite constructor term"),
            Violation::UnknownSort { context, sort } => write!(f, "{context} uses undeclared sort {sort}"),
            Violation::NameClash { name, kinds } => {
                write!(f, "name {name} is declared more than once (")?;
                for (i, k) in kinds.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k:?}")?;
                }
                f.write_str(")")
            }
            Violation::ReservedName(n) => write!(f, "name {n} is reserved"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn list_sig() -> Signature {
        let mut sig = Signature::new();
        sig.add_adt(AdtDecl {
            name: "List".into(),
            constructors: vec![
                Constructor::new("Nil", &[]),
                Constructor::new("Cons", &[("head", Sort::Int), ("tail", Sort::adt("List"))]),
            ],
        });
        sig
    }

    #[test]
    fn list_signature_is_valid() {
        assert!(list_sig().validate().is_valid());
    }

    #[test]
    fn missing_base_case_is_uninhabited() {
        let mut sig = Signature::new();
        sig.add_adt(AdtDecl {
            name: "List".into(),
            constructors: vec![Constructor::new("Cons", &[("tail", Sort::adt("List"))])],
        });
        let report = sig.validate();
        assert_eq!(report.violations, vec![Violation::Uninhabited("List".into())]);
    }

    #[test]
    fn shared_recognizer_is_a_clash() {
        let mut nil = Constructor::new("Nil", &[]);
        let mut cons = Constructor::new("Cons", &[("tail", Sort::adt("List"))]);
        nil.recognizer = "isL".into();
        cons.recognizer = "isL".into();
        let mut sig = Signature::new();
        sig.add_adt(AdtDecl {
            name: "List".into(),
            constructors: vec![nil, cons],
        });
        let report = sig.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NameClash { name, .. } if name == "isL")));
    }

    #[test]
    fn defined_symbols_are_disjoint_from_f() {
        let mut sig = list_sig();
        sig.add_defined(FunDecl::new("head", vec![Sort::adt("List")], Sort::Int));
        assert!(!sig.validate().is_valid());
    }

    #[test]
    fn empty_signature_needs_a_foreground_sort() {
        let report = Signature::new().validate();
        assert_eq!(report.violations, vec![Violation::NoForegroundSort]);
    }

    #[test]
    fn mutually_recursive_sorts_are_inhabited() {
        let mut sig = Signature::new();
        sig.add_adt(AdtDecl {
            name: "Tree".into(),
            constructors: vec![Constructor::new("Node", &[("children", Sort::adt("Forest"))])],
        });
        sig.add_adt(AdtDecl {
            name: "Forest".into(),
            constructors: vec![
                Constructor::new("FNil", &[]),
                Constructor::new("FCons", &[("fhead", Sort::adt("Tree")), ("ftail", Sort::adt("Forest"))]),
            ],
        });
        assert!(sig.validate().is_valid());
        let h = sig.min_heights();
        assert_eq!(h["Forest"], 1);
        assert_eq!(h["Tree"], 2);
    }
}

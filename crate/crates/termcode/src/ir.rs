//! The sorted term language: signatures, terms, constraints, and systems.
//!
//! A [`System`] bundles sort declarations, function symbols, variables,
//! equations, disequalities, and (for dispersion problems) output terms.
//! Declaration order is canonical and preserved: every enumeration, solution
//! tuple, and witness encoding elsewhere in the crate iterates in the order
//! things were declared here.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// A sort (type) declaration. A system has at least one sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortDecl {
    pub name: String,
}

/// A function symbol with typed argument list and result sort.
/// Constants are 0-ary function symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncSymbol {
    pub name: String,
    pub arg_sorts: Vec<String>,
    pub result_sort: String,
}

impl FuncSymbol {
    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }
}

/// A variable declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub sort: String,
}

/// A term: a variable leaf or a function application.
///
/// A 0-ary application `App(c, [])` is a constant occurrence; it is distinct
/// from a variable leaf with the same name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    /// Shorthand for a variable leaf.
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    /// Shorthand for an application.
    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    /// True if the term is a variable leaf.
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Variables in first-occurrence order, duplicates removed.
    pub fn free_vars(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.collect_vars(&mut seen, &mut out);
        out
    }

    fn collect_vars(&self, seen: &mut HashSet<String>, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(seen, out);
                }
            }
        }
    }

    /// Replaces every variable leaf through `map`, leaving unmapped names alone.
    pub fn rename_vars(&self, map: &HashMap<String, String>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.rename_vars(map)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(name, args) => {
                if args.is_empty() {
                    write!(f, "{name}")
                } else {
                    write!(f, "{name}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

/// Equation or disequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Eq,
    Neq,
}

/// A constraint between two same-sort terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub lhs: Term,
    pub rhs: Term,
}

impl Constraint {
    pub fn eq(lhs: Term, rhs: Term) -> Constraint {
        Constraint {
            kind: ConstraintKind::Eq,
            lhs,
            rhs,
        }
    }

    pub fn neq(lhs: Term, rhs: Term) -> Constraint {
        Constraint {
            kind: ConstraintKind::Neq,
            lhs,
            rhs,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstraintKind::Eq => write!(f, "{} = {}", self.lhs, self.rhs),
            ConstraintKind::Neq => write!(f, "{} != {}", self.lhs, self.rhs),
        }
    }
}

/// A system of term equations and disequalities over a multi-sorted signature,
/// with optional dispersion output terms.
///
/// A single-sorted system is simply a multi-sorted system with one sort.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct System {
    pub sorts: Vec<SortDecl>,
    pub funcs: Vec<FuncSymbol>,
    pub vars: Vec<VarDecl>,
    pub equations: Vec<Constraint>,
    pub disequalities: Vec<Constraint>,
    pub outputs: Vec<Term>,
}

impl System {
    /// True if the system declares dispersion outputs.
    pub fn is_dispersion(&self) -> bool {
        !self.outputs.is_empty()
    }

    pub fn sort_index(&self, name: &str) -> Option<usize> {
        self.sorts.iter().position(|s| s.name == name)
    }

    pub fn func(&self, name: &str) -> Option<&FuncSymbol> {
        self.funcs.iter().find(|f| f.name == name)
    }

    pub fn func_index(&self, name: &str) -> Option<usize> {
        self.funcs.iter().position(|f| f.name == name)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Names of function symbols that occur in some constraint or output,
    /// in declaration order.
    pub fn used_funcs(&self) -> Vec<String> {
        let mut used = HashSet::new();
        let mut visit = |t: &Term| collect_funcs(t, &mut used);
        for c in self.equations.iter().chain(self.disequalities.iter()) {
            visit(&c.lhs);
            visit(&c.rhs);
        }
        for t in &self.outputs {
            visit(t);
        }
        self.funcs
            .iter()
            .filter(|f| used.contains(&f.name))
            .map(|f| f.name.clone())
            .collect()
    }

    /// All identifier names currently in use (sorts, funcs, vars).
    pub fn all_names(&self) -> HashSet<String> {
        let mut names = HashSet::new();
        names.extend(self.sorts.iter().map(|s| s.name.clone()));
        names.extend(self.funcs.iter().map(|f| f.name.clone()));
        names.extend(self.vars.iter().map(|v| v.name.clone()));
        names
    }
}

fn collect_funcs(t: &Term, out: &mut HashSet<String>) {
    if let Term::App(f, args) = t {
        out.insert(f.clone());
        for a in args {
            collect_funcs(a, out);
        }
    }
}

/// Typing failure for a single term.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("unknown function symbol {0}")]
    UnknownSymbol(String),
    #[error("{func} expects {expected} arguments, got {found}")]
    ArityMismatch {
        func: String,
        expected: usize,
        found: usize,
    },
    #[error("{func} argument {position} has sort {found}, expected {expected}")]
    ArgSortMismatch {
        func: String,
        position: usize,
        expected: String,
        found: String,
    },
}

/// Returns the sort of a term in `sys`, or a typing error.
pub fn term_sort(t: &Term, sys: &System) -> Result<String, TypeError> {
    match t {
        Term::Var(v) => sys
            .var(v)
            .map(|d| d.sort.clone())
            .ok_or_else(|| TypeError::UnknownVariable(v.clone())),
        Term::App(f, args) => {
            let sym = sys
                .func(f)
                .ok_or_else(|| TypeError::UnknownSymbol(f.clone()))?;
            if sym.arity() != args.len() {
                return Err(TypeError::ArityMismatch {
                    func: f.clone(),
                    expected: sym.arity(),
                    found: args.len(),
                });
            }
            for (i, (arg, want)) in args.iter().zip(sym.arg_sorts.iter()).enumerate() {
                let got = term_sort(arg, sys)?;
                if &got != want {
                    return Err(TypeError::ArgSortMismatch {
                        func: f.clone(),
                        position: i + 1,
                        expected: want.clone(),
                        found: got,
                    });
                }
            }
            Ok(sym.result_sort.clone())
        }
    }
}

/// Variables of a term in first-occurrence order, duplicates removed.
pub fn free_vars(t: &Term) -> Vec<String> {
    t.free_vars()
}

/// One problem found by [`validate_system`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("system declares no sorts")]
    NoSorts,
    #[error("duplicate sort {0}")]
    DuplicateSort(String),
    #[error("duplicate function symbol {0}")]
    DuplicateFunc(String),
    #[error("duplicate variable {0}")]
    DuplicateVar(String),
    #[error("name {0} is used for both a variable and a function symbol")]
    NameClash(String),
    #[error("{context} references undeclared sort {sort}")]
    UnknownSort { context: String, sort: String },
    #[error("in {context}: {source}")]
    BadTerm {
        context: String,
        #[source]
        source: TypeError,
    },
    #[error("constraint {constraint} relates sort {lhs} to sort {rhs}")]
    ConstraintSortMismatch {
        constraint: String,
        lhs: String,
        rhs: String,
    },
    #[error("disequality {0} != {0} is syntactically unsatisfiable")]
    SelfDisequality(String),
}

/// Result of validating a system: ok, or the list of problems found.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            write!(f, "ok")
        } else {
            for (i, e) in self.errors.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{e}")?;
            }
            Ok(())
        }
    }
}

/// Checks declarations, typing, and constraint well-formedness.
///
/// The verdict is independent of the order errors are encountered in; running
/// it twice yields the same report.
pub fn validate_system(sys: &System) -> ValidationReport {
    let mut errors = Vec::new();
    if sys.sorts.is_empty() {
        errors.push(ValidationError::NoSorts);
    }
    let mut seen = HashSet::new();
    for s in &sys.sorts {
        if !seen.insert(&s.name) {
            errors.push(ValidationError::DuplicateSort(s.name.clone()));
        }
    }
    let sort_names: HashSet<&String> = sys.sorts.iter().map(|s| &s.name).collect();
    let mut func_names = HashSet::new();
    for f in &sys.funcs {
        if !func_names.insert(&f.name) {
            errors.push(ValidationError::DuplicateFunc(f.name.clone()));
        }
        for s in f.arg_sorts.iter().chain(std::iter::once(&f.result_sort)) {
            if !sort_names.contains(s) {
                errors.push(ValidationError::UnknownSort {
                    context: format!("fun {}", f.name),
                    sort: s.clone(),
                });
            }
        }
    }
    let mut var_names = HashSet::new();
    for v in &sys.vars {
        if !var_names.insert(&v.name) {
            errors.push(ValidationError::DuplicateVar(v.name.clone()));
        }
        if func_names.contains(&v.name) {
            errors.push(ValidationError::NameClash(v.name.clone()));
        }
        if !sort_names.contains(&v.sort) {
            errors.push(ValidationError::UnknownSort {
                context: format!("var {}", v.name),
                sort: v.sort.clone(),
            });
        }
    }
    if !errors.is_empty() {
        // Declaration-level problems make term typing unreliable; report them alone.
        return ValidationReport { errors };
    }

    fn check_sides(
        sys: &System,
        c: &Constraint,
        what: &str,
        errors: &mut Vec<ValidationError>,
    ) -> Option<(String, String)> {
        let ls = match term_sort(&c.lhs, sys) {
            Ok(s) => s,
            Err(e) => {
                errors.push(ValidationError::BadTerm {
                    context: format!("{what} {c}"),
                    source: e,
                });
                return None;
            }
        };
        let rs = match term_sort(&c.rhs, sys) {
            Ok(s) => s,
            Err(e) => {
                errors.push(ValidationError::BadTerm {
                    context: format!("{what} {c}"),
                    source: e,
                });
                return None;
            }
        };
        Some((ls, rs))
    }

    for c in &sys.equations {
        if let Some((ls, rs)) = check_sides(sys, c, "eq", &mut errors) {
            if ls != rs {
                errors.push(ValidationError::ConstraintSortMismatch {
                    constraint: c.to_string(),
                    lhs: ls,
                    rhs: rs,
                });
            }
        }
    }
    for c in &sys.disequalities {
        if let Some((ls, rs)) = check_sides(sys, c, "neq", &mut errors) {
            if ls != rs {
                errors.push(ValidationError::ConstraintSortMismatch {
                    constraint: c.to_string(),
                    lhs: ls,
                    rhs: rs,
                });
            }
        }
        if let (Term::Var(a), Term::Var(b)) = (&c.lhs, &c.rhs) {
            if a == b {
                errors.push(ValidationError::SelfDisequality(a.clone()));
            }
        }
    }
    for t in &sys.outputs {
        if let Err(e) = term_sort(t, sys) {
            errors.push(ValidationError::BadTerm {
                context: format!("out {t}"),
                source: e,
            });
        }
    }
    ValidationReport { errors }
}

/// Per-sort finite domain sizes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainSizes(pub BTreeMap<String, usize>);

/// Error constructing or checking [`DomainSizes`] against a system.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SizesError {
    #[error("no size given for sort {0}")]
    MissingSort(String),
    #[error("sort {0} has size 0; sizes must be >= 1")]
    ZeroSize(String),
}

impl DomainSizes {
    pub fn new(map: BTreeMap<String, usize>) -> DomainSizes {
        DomainSizes(map)
    }

    /// The same size for every sort of `sys`.
    pub fn uniform(sys: &System, n: usize) -> DomainSizes {
        DomainSizes(sys.sorts.iter().map(|s| (s.name.clone(), n)).collect())
    }

    pub fn get(&self, sort: &str) -> Option<usize> {
        self.0.get(sort).copied()
    }

    pub fn set(&mut self, sort: impl Into<String>, n: usize) {
        self.0.insert(sort.into(), n);
    }

    /// Checks every system sort is present with size >= 1.
    pub fn check_for(&self, sys: &System) -> Result<(), SizesError> {
        for s in &sys.sorts {
            match self.get(&s.name) {
                None => return Err(SizesError::MissingSort(s.name.clone())),
                Some(0) => return Err(SizesError::ZeroSize(s.name.clone())),
                Some(_) => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for DomainSizes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, n)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}={n}")?;
        }
        Ok(())
    }
}

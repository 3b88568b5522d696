//! Compiler from first-order sentences to term-coding systems.
//!
//! The pipeline is prenexing, Skolemisation, conversion of the matrix to
//! conjunctive normal form by distribution, replacement of built-in equality
//! with congruence-axiomatised predicates, and finally a Boolean layer: a
//! `Bool` sort with constants `T`, `F`, truth-table equations for `NOT` and
//! `AND`, one characteristic function per predicate, and one equation
//! `ClTerm = T` per clause. The single disequality `T != F` makes the
//! encoding non-trivial. A sentence then has a finite model of size at most
//! `n` exactly when the compiled system has an interpretation (with `Bool`
//! of size 2) satisfying every equation at every assignment, i.e. a full
//! solution count.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::ir::{
    Constraint, DomainSizes, FuncSymbol, SortDecl, System, Term, VarDecl,
};

/// First-order term over the object signature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FoTerm {
    Var(String),
    App(String, Vec<FoTerm>),
}

impl FoTerm {
    fn rename(&self, map: &BTreeMap<String, FoTerm>) -> FoTerm {
        match self {
            FoTerm::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            FoTerm::App(f, args) => {
                FoTerm::App(f.clone(), args.iter().map(|a| a.rename(map)).collect())
            }
        }
    }

    fn vars(&self, out: &mut Vec<String>) {
        match self {
            FoTerm::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            FoTerm::App(_, args) => {
                for a in args {
                    a.vars(out);
                }
            }
        }
    }
}

impl fmt::Display for FoTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoTerm::Var(v) => write!(f, "{v}"),
            FoTerm::App(name, args) => {
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

/// Atomic formula: relation application or equality of same-sort terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    Rel(String, Vec<FoTerm>),
    Eq(FoTerm, FoTerm),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel(name, args) => {
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
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

/// First-order formula tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, String, Box<Formula>),
    Exists(String, String, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn forall(v: impl Into<String>, sort: impl Into<String>, f: Formula) -> Formula {
        Formula::Forall(v.into(), sort.into(), Box::new(f))
    }
    pub fn exists(v: impl Into<String>, sort: impl Into<String>, f: Formula) -> Formula {
        Formula::Exists(v.into(), sort.into(), Box::new(f))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => write!(f, "~({x})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Forall(v, s, x) => write!(f, "forall {v}:{s}. {x}"),
            Formula::Exists(v, s, x) => write!(f, "exists {v}:{s}. {x}"),
        }
    }
}

/// Relation declaration in a first-order signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelDecl {
    pub name: String,
    pub arg_sorts: Vec<String>,
}

/// First-order signature: sorts, relations, and (object) functions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoSignature {
    pub sorts: Vec<String>,
    pub rels: Vec<RelDecl>,
    pub funcs: Vec<FuncSymbol>,
}

impl FoSignature {
    pub fn rel(&self, name: &str) -> Option<&RelDecl> {
        self.rels.iter().find(|r| r.name == name)
    }
    pub fn func(&self, name: &str) -> Option<&FuncSymbol> {
        self.funcs.iter().find(|f| f.name == name)
    }
}

/// A signature plus the sentence to compile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoProblem {
    pub signature: FoSignature,
    pub sentence: Formula,
}

/// One literal of a clause.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "~{}", self.atom)
        }
    }
}

/// A clause with the sorts of its variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub literals: Vec<Literal>,
    pub var_sorts: BTreeMap<String, String>,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoError {
    #[error("formula is not a sentence: free variable {0}")]
    FreeVariable(String),
    #[error("unknown sort {0}")]
    UnknownSort(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("{0} applied to the wrong number or sorts of arguments")]
    BadApplication(String),
    #[error("equality between sorts {0} and {1}")]
    EqualitySortMismatch(String, String),
    #[error("reserved name {0}; Bool, T, F, NOT, AND belong to the compiler")]
    ReservedName(String),
    #[error("CNF distribution exceeded the {0}-clause cap")]
    ClauseCap(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

const RESERVED: &[&str] = &["Bool", "T", "F", "NOT", "AND"];

/// Clause cap for distribution-based CNF.
pub const DEFAULT_CLAUSE_CAP: usize = 10_000;

// ---------------------------------------------------------------------------
// Validation

fn term_sort_fo(
    t: &FoTerm,
    sig: &FoSignature,
    env: &BTreeMap<String, String>,
) -> Result<String, FoError> {
    match t {
        FoTerm::Var(v) => env
            .get(v)
            .cloned()
            .ok_or_else(|| FoError::FreeVariable(v.clone())),
        FoTerm::App(f, args) => {
            let decl = sig
                .func(f)
                .ok_or_else(|| FoError::UnknownFunction(f.clone()))?;
            if decl.arg_sorts.len() != args.len() {
                return Err(FoError::BadApplication(f.clone()));
            }
            for (a, want) in args.iter().zip(decl.arg_sorts.iter()) {
                if &term_sort_fo(a, sig, env)? != want {
                    return Err(FoError::BadApplication(f.clone()));
                }
            }
            Ok(decl.result_sort.clone())
        }
    }
}

fn check_formula(
    f: &Formula,
    sig: &FoSignature,
    env: &mut BTreeMap<String, String>,
) -> Result<(), FoError> {
    match f {
        Formula::Atom(Atom::Rel(r, args)) => {
            let decl = sig
                .rel(r)
                .ok_or_else(|| FoError::UnknownRelation(r.clone()))?;
            if decl.arg_sorts.len() != args.len() {
                return Err(FoError::BadApplication(r.clone()));
            }
            for (a, want) in args.iter().zip(decl.arg_sorts.iter()) {
                if &term_sort_fo(a, sig, env)? != want {
                    return Err(FoError::BadApplication(r.clone()));
                }
            }
            Ok(())
        }
        Formula::Atom(Atom::Eq(a, b)) => {
            let sa = term_sort_fo(a, sig, env)?;
            let sb = term_sort_fo(b, sig, env)?;
            if sa != sb {
                return Err(FoError::EqualitySortMismatch(sa, sb));
            }
            Ok(())
        }
        Formula::Not(x) => check_formula(x, sig, env),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            check_formula(a, sig, env)?;
            check_formula(b, sig, env)
        }
        Formula::Forall(v, s, body) | Formula::Exists(v, s, body) => {
            if !sig.sorts.contains(s) {
                return Err(FoError::UnknownSort(s.clone()));
            }
            let shadowed = env.insert(v.clone(), s.clone());
            check_formula(body, sig, env)?;
            match shadowed {
                Some(old) => env.insert(v.clone(), old),
                None => env.remove(v),
            };
            Ok(())
        }
    }
}

/// Validates a problem: reserved names, well-sortedness, closedness.
pub fn validate_problem(p: &FoProblem) -> Result<(), FoError> {
    for name in p
        .signature
        .sorts
        .iter()
        .map(String::as_str)
        .chain(p.signature.rels.iter().map(|r| r.name.as_str()))
        .chain(p.signature.funcs.iter().map(|f| f.name.as_str()))
    {
        if RESERVED.contains(&name) {
            return Err(FoError::ReservedName(name.to_string()));
        }
    }
    let mut env = BTreeMap::new();
    check_formula(&p.sentence, &p.signature, &mut env)
}

// ---------------------------------------------------------------------------
// Prenexing

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quant {
    Forall,
    Exists,
}

fn fresh_name(base: &str, used: &mut HashSet<String>) -> String {
    if used.insert(base.to_string()) {
        return base.to_string();
    }
    let mut i = 2usize;
    loop {
        let candidate = format!("{base}{i}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        i += 1;
    }
}

fn collect_prefix(
    f: &Formula,
    used: &mut HashSet<String>,
    prefix: &mut Vec<(Quant, String, String)>,
    sub: &mut BTreeMap<String, FoTerm>,
    polarity: bool,
) -> Formula {
    match f {
        Formula::Atom(a) => {
            let a = match a {
                Atom::Rel(r, args) => {
                    Atom::Rel(r.clone(), args.iter().map(|t| t.rename(sub)).collect())
                }
                Atom::Eq(x, y) => Atom::Eq(x.rename(sub), y.rename(sub)),
            };
            Formula::Atom(a)
        }
        Formula::Not(x) => Formula::not(collect_prefix(x, used, prefix, sub, !polarity)),
        Formula::And(a, b) => {
            let na = collect_prefix(a, used, prefix, sub, polarity);
            let nb = collect_prefix(b, used, prefix, sub, polarity);
            Formula::and(na, nb)
        }
        Formula::Or(a, b) => {
            let na = collect_prefix(a, used, prefix, sub, polarity);
            let nb = collect_prefix(b, used, prefix, sub, polarity);
            Formula::or(na, nb)
        }
        Formula::Implies(a, b) => {
            let na = collect_prefix(a, used, prefix, sub, !polarity);
            let nb = collect_prefix(b, used, prefix, sub, polarity);
            Formula::implies(na, nb)
        }
        Formula::Forall(v, s, body) | Formula::Exists(v, s, body) => {
            let is_forall = matches!(f, Formula::Forall(..));
            // Under an even number of negations the quantifier keeps its
            // kind; under odd it flips when pulled out.
            let q = match (is_forall, polarity) {
                (true, true) | (false, false) => Quant::Forall,
                _ => Quant::Exists,
            };
            let fresh = fresh_name(v, used);
            let old = sub.insert(v.clone(), FoTerm::Var(fresh.clone()));
            prefix.push((q, fresh, s.clone()));
            let body = collect_prefix(body, used, prefix, sub, polarity);
            match old {
                Some(t) => sub.insert(v.clone(), t),
                None => sub.remove(v),
            };
            body
        }
    }
}

/// Prenex-equivalent formula; quantifier order preserves the original
/// nesting (left to right), with bound variables standardised apart.
pub fn to_prenex(f: &Formula) -> Formula {
    let mut used = HashSet::new();
    let mut prefix = Vec::new();
    let mut sub = BTreeMap::new();
    let matrix = collect_prefix(f, &mut used, &mut prefix, &mut sub, true);
    prefix
        .into_iter()
        .rev()
        .fold(matrix, |acc, (q, v, s)| match q {
            Quant::Forall => Formula::forall(v, s, acc),
            Quant::Exists => Formula::exists(v, s, acc),
        })
}

// ---------------------------------------------------------------------------
// Skolemisation

/// Replaces existential variables of a prenex sentence by Skolem functions
/// of the universals in scope. Returns the universal sentence plus the added
/// symbols, named `sk1, sk2, ...` in order of appearance.
pub fn skolemize(f: &Formula, sig: &FoSignature) -> (Formula, Vec<FuncSymbol>) {
    let mut used: HashSet<String> = sig.funcs.iter().map(|f| f.name.clone()).collect();
    used.extend(sig.rels.iter().map(|r| r.name.clone()));
    let mut universals: Vec<(String, String)> = Vec::new();
    let mut sub: BTreeMap<String, FoTerm> = BTreeMap::new();
    let mut added = Vec::new();
    let mut counter = 0usize;
    let mut cursor = f.clone();
    let mut prefix: Vec<(String, String)> = Vec::new();
    loop {
        match cursor {
            Formula::Forall(v, s, body) => {
                universals.push((v.clone(), s.clone()));
                prefix.push((v, s));
                cursor = *body;
            }
            Formula::Exists(v, s, body) => {
                counter += 1;
                let mut name = format!("sk{counter}");
                while used.contains(&name) {
                    name.push('_');
                }
                used.insert(name.clone());
                added.push(FuncSymbol {
                    name: name.clone(),
                    arg_sorts: universals.iter().map(|(_, s)| s.clone()).collect(),
                    result_sort: s.clone(),
                });
                let args = universals
                    .iter()
                    .map(|(u, _)| FoTerm::Var(u.clone()))
                    .collect();
                sub.insert(v, FoTerm::App(name, args));
                cursor = *body;
            }
            matrix => {
                let matrix = apply_sub(&matrix, &sub);
                let rebuilt = prefix
                    .into_iter()
                    .rev()
                    .fold(matrix, |acc, (v, s)| Formula::forall(v, s, acc));
                return (rebuilt, added);
            }
        }
    }
}

fn apply_sub(f: &Formula, sub: &BTreeMap<String, FoTerm>) -> Formula {
    match f {
        Formula::Atom(Atom::Rel(r, args)) => Formula::Atom(Atom::Rel(
            r.clone(),
            args.iter().map(|t| t.rename(sub)).collect(),
        )),
        Formula::Atom(Atom::Eq(a, b)) => {
            Formula::Atom(Atom::Eq(a.rename(sub), b.rename(sub)))
        }
        Formula::Not(x) => Formula::not(apply_sub(x, sub)),
        Formula::And(a, b) => Formula::and(apply_sub(a, sub), apply_sub(b, sub)),
        Formula::Or(a, b) => Formula::or(apply_sub(a, sub), apply_sub(b, sub)),
        Formula::Implies(a, b) => Formula::implies(apply_sub(a, sub), apply_sub(b, sub)),
        Formula::Forall(v, s, body) => Formula::forall(v.clone(), s.clone(), apply_sub(body, sub)),
        Formula::Exists(v, s, body) => Formula::exists(v.clone(), s.clone(), apply_sub(body, sub)),
    }
}

// ---------------------------------------------------------------------------
// CNF

fn nnf(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::Atom(a) => {
            if positive {
                Formula::Atom(a.clone())
            } else {
                Formula::not(Formula::Atom(a.clone()))
            }
        }
        Formula::Not(x) => nnf(x, !positive),
        Formula::And(a, b) => {
            if positive {
                Formula::and(nnf(a, true), nnf(b, true))
            } else {
                Formula::or(nnf(a, false), nnf(b, false))
            }
        }
        Formula::Or(a, b) => {
            if positive {
                Formula::or(nnf(a, true), nnf(b, true))
            } else {
                Formula::and(nnf(a, false), nnf(b, false))
            }
        }
        Formula::Implies(a, b) => nnf(&Formula::or(Formula::not((**a).clone()), (**b).clone()), positive),
        Formula::Forall(..) | Formula::Exists(..) => {
            unreachable!("CNF runs on a quantifier-free matrix")
        }
    }
}

/// Clause lists of a quantifier-free matrix under a clause cap.
/// Negation-normal form is applied first, then disjunction distributes over
/// conjunction.
pub fn to_cnf(matrix: &Formula, cap: usize) -> Result<Vec<Vec<Literal>>, FoError> {
    fn go(f: &Formula, cap: usize) -> Result<Vec<Vec<Literal>>, FoError> {
        match f {
            Formula::Atom(a) => Ok(vec![vec![Literal {
                positive: true,
                atom: a.clone(),
            }]]),
            Formula::Not(x) => match &**x {
                Formula::Atom(a) => Ok(vec![vec![Literal {
                    positive: false,
                    atom: a.clone(),
                }]]),
                _ => unreachable!("NNF keeps negation atomic"),
            },
            Formula::And(a, b) => {
                let mut ca = go(a, cap)?;
                let cb = go(b, cap)?;
                if ca.len() + cb.len() > cap {
                    return Err(FoError::ClauseCap(cap));
                }
                ca.extend(cb);
                Ok(ca)
            }
            Formula::Or(a, b) => {
                let ca = go(a, cap)?;
                let cb = go(b, cap)?;
                if ca.len().saturating_mul(cb.len()) > cap {
                    return Err(FoError::ClauseCap(cap));
                }
                let mut out = Vec::with_capacity(ca.len() * cb.len());
                for x in &ca {
                    for y in &cb {
                        let mut clause = x.clone();
                        clause.extend(y.iter().cloned());
                        out.push(clause);
                    }
                }
                Ok(out)
            }
            _ => unreachable!("matrix is quantifier-free NNF"),
        }
    }
    go(&nnf(matrix, true), cap)
}

// ---------------------------------------------------------------------------
// Equality expansion

fn eq_rel_name(sort: &str) -> String {
    format!("_E_{sort}")
}

/// Replaces built-in equality by fresh congruence predicates, one per sort
/// where equality actually occurs, and appends the axiom clauses:
/// reflexivity, symmetry, transitivity, function congruence, and relation
/// congruence over those sorts.
pub fn expand_equality(
    clauses: &[Clause],
    sig: &FoSignature,
) -> (Vec<Clause>, Vec<RelDecl>) {
    let mut eq_sorts: BTreeSet<String> = BTreeSet::new();
    for c in clauses {
        for l in &c.literals {
            if let Atom::Eq(a, _) = &l.atom {
                let sort = sort_of_ground(a, sig, &c.var_sorts);
                eq_sorts.insert(sort);
            }
        }
    }
    if eq_sorts.is_empty() {
        return (clauses.to_vec(), vec![]);
    }
    let added: Vec<RelDecl> = eq_sorts
        .iter()
        .map(|s| RelDecl {
            name: eq_rel_name(s),
            arg_sorts: vec![s.clone(), s.clone()],
        })
        .collect();

    let mut out: Vec<Clause> = clauses
        .iter()
        .map(|c| Clause {
            literals: c
                .literals
                .iter()
                .map(|l| match &l.atom {
                    Atom::Eq(a, b) => {
                        let sort = sort_of_ground(a, sig, &c.var_sorts);
                        Literal {
                            positive: l.positive,
                            atom: Atom::Rel(eq_rel_name(&sort), vec![a.clone(), b.clone()]),
                        }
                    }
                    _ => l.clone(),
                })
                .collect(),
            var_sorts: c.var_sorts.clone(),
        })
        .collect();

    let var = |name: &str| FoTerm::Var(name.to_string());
    let pos = |atom: Atom| Literal {
        positive: true,
        atom,
    };
    let neg = |atom: Atom| Literal {
        positive: false,
        atom,
    };
    for sort in &eq_sorts {
        let e = |a: FoTerm, b: FoTerm| Atom::Rel(eq_rel_name(sort), vec![a, b]);
        let sorts3: BTreeMap<String, String> = ["e1", "e2", "e3"]
            .iter()
            .map(|v| (v.to_string(), sort.clone()))
            .collect();
        out.push(Clause {
            literals: vec![pos(e(var("e1"), var("e1")))],
            var_sorts: [("e1".to_string(), sort.clone())].into_iter().collect(),
        });
        out.push(Clause {
            literals: vec![neg(e(var("e1"), var("e2"))), pos(e(var("e2"), var("e1")))],
            var_sorts: sorts3.clone(),
        });
        out.push(Clause {
            literals: vec![
                neg(e(var("e1"), var("e2"))),
                neg(e(var("e2"), var("e3"))),
                pos(e(var("e1"), var("e3"))),
            ],
            var_sorts: sorts3.clone(),
        });
    }
    // Function congruence, for argument positions whose sort carries an
    // equality predicate; other positions share one variable on both sides.
    for f in &sig.funcs {
        if f.arg_sorts.is_empty() || !eq_sorts.contains(&f.result_sort) {
            continue;
        }
        let mut var_sorts = BTreeMap::new();
        let mut lhs_args = Vec::new();
        let mut rhs_args = Vec::new();
        let mut literals = Vec::new();
        for (i, s) in f.arg_sorts.iter().enumerate() {
            let x = format!("e{}", i + 1);
            var_sorts.insert(x.clone(), s.clone());
            if eq_sorts.contains(s) {
                let y = format!("d{}", i + 1);
                var_sorts.insert(y.clone(), s.clone());
                literals.push(neg(Atom::Rel(
                    eq_rel_name(s),
                    vec![var(&x), var(&y)],
                )));
                lhs_args.push(var(&x));
                rhs_args.push(var(&y));
            } else {
                lhs_args.push(var(&x));
                rhs_args.push(var(&x));
            }
        }
        literals.push(pos(Atom::Rel(
            eq_rel_name(&f.result_sort),
            vec![
                FoTerm::App(f.name.clone(), lhs_args),
                FoTerm::App(f.name.clone(), rhs_args),
            ],
        )));
        out.push(Clause {
            literals,
            var_sorts,
        });
    }
    // Relation congruence: equal arguments transfer membership.
    for r in &sig.rels {
        if r.arg_sorts.is_empty() || !r.arg_sorts.iter().any(|s| eq_sorts.contains(s)) {
            continue;
        }
        let mut var_sorts = BTreeMap::new();
        let mut lhs_args = Vec::new();
        let mut rhs_args = Vec::new();
        let mut literals = Vec::new();
        for (i, s) in r.arg_sorts.iter().enumerate() {
            let x = format!("e{}", i + 1);
            var_sorts.insert(x.clone(), s.clone());
            if eq_sorts.contains(s) {
                let y = format!("d{}", i + 1);
                var_sorts.insert(y.clone(), s.clone());
                literals.push(neg(Atom::Rel(
                    eq_rel_name(s),
                    vec![var(&x), var(&y)],
                )));
                lhs_args.push(var(&x));
                rhs_args.push(var(&y));
            } else {
                lhs_args.push(var(&x));
                rhs_args.push(var(&x));
            }
        }
        literals.push(neg(Atom::Rel(r.name.clone(), lhs_args)));
        literals.push(pos(Atom::Rel(r.name.clone(), rhs_args)));
        out.push(Clause {
            literals,
            var_sorts,
        });
    }
    (out, added)
}

fn sort_of_ground(t: &FoTerm, sig: &FoSignature, env: &BTreeMap<String, String>) -> String {
    match t {
        FoTerm::Var(v) => env
            .get(v)
            .cloned()
            .expect("validated clause variables carry sorts"),
        FoTerm::App(f, _) => sig
            .func(f)
            .map(|d| d.result_sort.clone())
            .expect("validated clause functions are declared"),
    }
}

// ---------------------------------------------------------------------------
// System assembly

/// Per-step artifacts of one compilation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CompileTrace {
    pub prenex: String,
    pub skolemized: String,
    pub cnf: Vec<String>,
    pub congruence: Vec<String>,
}

/// Result of compiling a sentence.
#[derive(Debug, Clone)]
pub struct CompileOutput {
    pub system: System,
    pub trace: CompileTrace,
    /// Skolem symbols introduced (already declared in the system).
    pub skolems: Vec<String>,
    /// Number of clause equations; one per final clause.
    pub clause_count: usize,
}

impl CompileOutput {
    /// Full-count target: the compiled system has a model at the given sizes
    /// exactly when some interpretation satisfies every equation at every
    /// assignment, i.e. reaches this solution count.
    pub fn target_count(&self, sizes: &DomainSizes) -> u128 {
        self.system
            .vars
            .iter()
            .map(|v| sizes.get(&v.sort).unwrap_or(0) as u128)
            .product()
    }

    /// Sizes with the object sorts at `n` and `Bool` pinned to 2.
    pub fn sizes_with_bool(&self, n: usize) -> DomainSizes {
        let mut sizes = DomainSizes::uniform(&self.system, n);
        sizes.set("Bool", 2);
        sizes
    }
}

fn fo_term_to_ir(t: &FoTerm) -> Term {
    match t {
        FoTerm::Var(v) => Term::Var(v.clone()),
        FoTerm::App(f, args) => Term::App(f.clone(), args.iter().map(fo_term_to_ir).collect()),
    }
}

/// Compiles a sentence over its signature into a term-coding system with the
/// default clause cap.
pub fn compile(problem: &FoProblem) -> Result<CompileOutput, FoError> {
    compile_with_cap(problem, DEFAULT_CLAUSE_CAP)
}

/// Compiles with a custom clause cap.
pub fn compile_with_cap(problem: &FoProblem, cap: usize) -> Result<CompileOutput, FoError> {
    validate_problem(problem)?;
    let prenex = to_prenex(&problem.sentence);
    let (skolemized, skolem_funcs) = skolemize(&prenex, &problem.signature);
    let mut sig = problem.signature.clone();
    sig.funcs.extend(skolem_funcs.iter().cloned());

    // Strip the universal prefix and record variable sorts.
    let mut matrix = skolemized.clone();
    let mut matrix_sorts: BTreeMap<String, String> = BTreeMap::new();
    while let Formula::Forall(v, s, body) = matrix {
        matrix_sorts.insert(v, s);
        matrix = *body;
    }
    let raw_clauses = to_cnf(&matrix, cap)?;
    let goal_clauses: Vec<Clause> = raw_clauses
        .into_iter()
        .map(|literals| {
            let mut vars = Vec::new();
            for l in &literals {
                match &l.atom {
                    Atom::Rel(_, args) => {
                        for a in args {
                            a.vars(&mut vars);
                        }
                    }
                    Atom::Eq(a, b) => {
                        a.vars(&mut vars);
                        b.vars(&mut vars);
                    }
                }
            }
            Clause {
                literals,
                var_sorts: vars
                    .into_iter()
                    .map(|v| {
                        let s = matrix_sorts
                            .get(&v)
                            .expect("matrix variables come from the prefix")
                            .clone();
                        (v, s)
                    })
                    .collect(),
            }
        })
        .collect();
    let goal_count = goal_clauses.len();
    let (clauses, eq_rels) = expand_equality(&goal_clauses, &sig);
    sig.rels.extend(eq_rels.iter().cloned());

    // Pool clause variables: within each clause, variables are renamed (in
    // first-occurrence order per sort) onto one shared family per sort, so
    // the assignment space stays as small as the widest clause.
    let mut pool_max: BTreeMap<String, usize> = BTreeMap::new();
    let pooled: Vec<Clause> = clauses
        .iter()
        .map(|c| {
            let mut counters: BTreeMap<String, usize> = BTreeMap::new();
            let mut rename: BTreeMap<String, FoTerm> = BTreeMap::new();
            let mut var_sorts = BTreeMap::new();
            let mut ordered: Vec<String> = Vec::new();
            for l in &c.literals {
                match &l.atom {
                    Atom::Rel(_, args) => {
                        for a in args {
                            a.vars(&mut ordered);
                        }
                    }
                    Atom::Eq(a, b) => {
                        a.vars(&mut ordered);
                        b.vars(&mut ordered);
                    }
                }
            }
            for v in ordered {
                if rename.contains_key(&v) {
                    continue;
                }
                let sort = c.var_sorts[&v].clone();
                let k = counters.entry(sort.clone()).or_insert(0);
                *k += 1;
                let name = format!("_{sort}_{k}");
                pool_max
                    .entry(sort.clone())
                    .and_modify(|m| *m = (*m).max(*k))
                    .or_insert(*k);
                var_sorts.insert(name.clone(), sort);
                rename.insert(v, FoTerm::Var(name));
            }
            Clause {
                literals: c
                    .literals
                    .iter()
                    .map(|l| Literal {
                        positive: l.positive,
                        atom: match &l.atom {
                            Atom::Rel(r, args) => Atom::Rel(
                                r.clone(),
                                args.iter().map(|a| a.rename(&rename)).collect(),
                            ),
                            Atom::Eq(a, b) => Atom::Eq(a.rename(&rename), b.rename(&rename)),
                        },
                    })
                    .collect(),
                var_sorts,
            }
        })
        .collect();

    // Assemble the system.
    let mut system = System::default();
    for s in &problem.signature.sorts {
        system.sorts.push(SortDecl { name: s.clone() });
    }
    system.sorts.push(SortDecl {
        name: "Bool".into(),
    });
    for f in &problem.signature.funcs {
        system.funcs.push(f.clone());
    }
    for f in &skolem_funcs {
        system.funcs.push(f.clone());
    }
    let bool_sort = "Bool".to_string();
    for (name, arity) in [("T", 0usize), ("F", 0), ("NOT", 1), ("AND", 2)] {
        system.funcs.push(FuncSymbol {
            name: name.into(),
            arg_sorts: vec![bool_sort.clone(); arity],
            result_sort: bool_sort.clone(),
        });
    }
    for r in &sig.rels {
        system.funcs.push(FuncSymbol {
            name: format!("_p{}", r.name),
            arg_sorts: r.arg_sorts.clone(),
            result_sort: bool_sort.clone(),
        });
    }
    for (sort, count) in &pool_max {
        for k in 1..=*count {
            system.vars.push(VarDecl {
                name: format!("_{sort}_{k}"),
                sort: sort.clone(),
            });
        }
    }
    let t_const = Term::app("T", vec![]);
    let f_const = Term::app("F", vec![]);
    let not = |t: Term| Term::app("NOT", vec![t]);
    let and = |a: Term, b: Term| Term::app("AND", vec![a, b]);
    let or = |a: Term, b: Term| not(and(not(a), not(b)));
    // Truth tables.
    system.equations.push(Constraint::eq(not(t_const.clone()), f_const.clone()));
    system.equations.push(Constraint::eq(not(f_const.clone()), t_const.clone()));
    for (a, b, r) in [
        (t_const.clone(), t_const.clone(), t_const.clone()),
        (t_const.clone(), f_const.clone(), f_const.clone()),
        (f_const.clone(), t_const.clone(), f_const.clone()),
        (f_const.clone(), f_const.clone(), f_const.clone()),
    ] {
        system.equations.push(Constraint::eq(and(a, b), r));
    }
    // Clause equations: ClTerm_i = T with right-nested OR.
    for c in &pooled {
        let lit_term = |l: &Literal| -> Term {
            let base = match &l.atom {
                Atom::Rel(r, args) => Term::App(
                    format!("_p{r}"),
                    args.iter().map(fo_term_to_ir).collect(),
                ),
                Atom::Eq(..) => unreachable!("equality replaced before assembly"),
            };
            if l.positive {
                base
            } else {
                not(base)
            }
        };
        let mut term = lit_term(c.literals.last().expect("nonempty clause"));
        for l in c.literals.iter().rev().skip(1) {
            term = or(lit_term(l), term);
        }
        system.equations.push(Constraint::eq(term, t_const.clone()));
    }
    system
        .disequalities
        .push(Constraint::neq(t_const, f_const));

    debug_assert!(crate::ir::validate_system(&system).ok());
    let trace = CompileTrace {
        prenex: prenex.to_string(),
        skolemized: skolemized.to_string(),
        cnf: pooled[..goal_count].iter().map(|c| c.to_string()).collect(),
        congruence: pooled[goal_count..].iter().map(|c| c.to_string()).collect(),
    };
    Ok(CompileOutput {
        system,
        trace,
        skolems: skolem_funcs.iter().map(|f| f.name.clone()).collect(),
        clause_count: pooled.len(),
    })
}

/// Decides whether the compiled system has a model with every object sort at
/// size `n` and `Bool` at size 2: an interpretation whose solution count
/// reaches the full-count target.
///
/// The Boolean layer is pinned first: `T = 1`, `F = 0` (a relabelling of the
/// two-element Bool domain, harmless for existence) and the standard `NOT`
/// and `AND` tables (any other table falsifies a ground truth-table equation
/// at every assignment). All remaining used symbols are enumerated
/// exhaustively with early exit.
pub fn full_count_model_exists(out: &CompileOutput, n: usize) -> bool {
    let sizes = out.sizes_with_bool(n);
    let compiled = match crate::semantics::compile(&out.system, &sizes) {
        Ok(c) => c,
        Err(_) => return false,
    };
    let fixed: BTreeMap<&str, Vec<usize>> = [
        ("T", vec![1]),
        ("F", vec![0]),
        ("NOT", vec![1, 0]),
        ("AND", vec![0, 0, 0, 1]),
    ]
    .into_iter()
    .collect();
    let mut tables: Vec<Vec<usize>> = Vec::new();
    let mut open: Vec<(usize, usize)> = Vec::new();
    for (i, spec) in compiled.slots.iter().enumerate() {
        match fixed.get(spec.name.as_str()) {
            Some(values) => tables.push(values.clone()),
            None => {
                tables.push(vec![0; spec.table_len()]);
                open.push((i, spec.result_size));
            }
        }
    }
    loop {
        let views: Vec<&[usize]> = tables.iter().map(|t| t.as_slice()).collect();
        // Full count means every assignment satisfies every equation, so
        // scan assignments and abandon the interpretation at the first
        // failure.
        if crate::semantics::all_assignments_satisfied(&compiled, &views) {
            return true;
        }
        // Odometer over the open tables.
        let mut advanced = false;
        'outer: for &(slot, radix) in open.iter().rev() {
            for e in (0..tables[slot].len()).rev() {
                tables[slot][e] += 1;
                if tables[slot][e] < radix {
                    advanced = true;
                    break 'outer;
                }
                tables[slot][e] = 0;
            }
        }
        if !advanced {
            return false;
        }
    }
}

// ---------------------------------------------------------------------------
// .fo parsing

/// Parses the `.fo` format: `sort`, `rel NAME : SORT*`,
/// `fun NAME : SORT* -> SORT` declarations and one or more `sentence` lines
/// (conjoined in order).
pub fn parse_fo(text: &str) -> Result<FoProblem, FoError> {
    let mut sig = FoSignature::default();
    let mut sentences: Vec<Formula> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match head {
            "sort" => {
                sig.sorts.push(ident(rest, line_no)?);
            }
            "rel" => {
                let (name, sorts) = rest.split_once(':').ok_or_else(|| FoError::Parse {
                    line: line_no,
                    message: "expected rel NAME : SORT*".into(),
                })?;
                sig.rels.push(RelDecl {
                    name: ident(name.trim(), line_no)?,
                    arg_sorts: sorts.split_whitespace().map(String::from).collect(),
                });
            }
            "fun" => {
                let (name, shape) = rest.split_once(':').ok_or_else(|| FoError::Parse {
                    line: line_no,
                    message: "expected fun NAME : SORT* -> SORT".into(),
                })?;
                let (args, result) = shape.split_once("->").ok_or_else(|| FoError::Parse {
                    line: line_no,
                    message: "expected -> in fun declaration".into(),
                })?;
                sig.funcs.push(FuncSymbol {
                    name: ident(name.trim(), line_no)?,
                    arg_sorts: args.split_whitespace().map(String::from).collect(),
                    result_sort: ident(result.trim(), line_no)?,
                });
            }
            "sentence" => {
                let mut p = FormulaParser::new(rest, line_no);
                let f = p.formula()?;
                p.expect_end()?;
                sentences.push(f);
            }
            other => {
                return Err(FoError::Parse {
                    line: line_no,
                    message: format!("unknown declaration {other}"),
                })
            }
        }
    }
    let mut it = sentences.into_iter();
    let first = it.next().ok_or(FoError::Parse {
        line: 0,
        message: "no sentence declared".into(),
    })?;
    let sentence = it.fold(first, Formula::and);
    let problem = FoProblem {
        signature: sig,
        sentence,
    };
    validate_problem(&problem)?;
    Ok(problem)
}

fn ident(s: &str, line: usize) -> Result<String, FoError> {
    let ok = !s.is_empty()
        && s.chars().next().unwrap().is_ascii_alphabetic()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(s.to_string())
    } else {
        Err(FoError::Parse {
            line,
            message: format!("bad identifier {s:?}"),
        })
    }
}

struct FormulaParser<'a> {
    toks: Vec<FTok>,
    idx: usize,
    line: usize,
    _text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum FTok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    Equal,
}

impl<'a> FormulaParser<'a> {
    fn new(text: &'a str, line: usize) -> FormulaParser<'a> {
        let mut toks = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' => i += 1,
                '(' => {
                    toks.push(FTok::LParen);
                    i += 1;
                }
                ')' => {
                    toks.push(FTok::RParen);
                    i += 1;
                }
                ',' => {
                    toks.push(FTok::Comma);
                    i += 1;
                }
                ':' => {
                    toks.push(FTok::Colon);
                    i += 1;
                }
                '.' => {
                    toks.push(FTok::Dot);
                    i += 1;
                }
                '~' => {
                    toks.push(FTok::Tilde);
                    i += 1;
                }
                '&' => {
                    toks.push(FTok::Amp);
                    i += 1;
                }
                '|' => {
                    toks.push(FTok::Pipe);
                    i += 1;
                }
                '=' => {
                    toks.push(FTok::Equal);
                    i += 1;
                }
                '-' if bytes.get(i + 1) == Some(&b'>') => {
                    toks.push(FTok::Arrow);
                    i += 2;
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    toks.push(FTok::Ident(text[start..i].to_string()));
                }
                _ => {
                    toks.push(FTok::Ident(format!("<bad {c}>")));
                    i += 1;
                }
            }
        }
        FormulaParser {
            toks,
            idx: 0,
            line,
            _text: text,
        }
    }

    fn err(&self, message: impl Into<String>) -> FoError {
        FoError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&FTok> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<FTok> {
        let t = self.toks.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn eat(&mut self, t: FTok) -> Result<(), FoError> {
        match self.bump() {
            Some(x) if x == t => Ok(()),
            other => Err(self.err(format!("expected {t:?}, found {other:?}"))),
        }
    }

    fn expect_end(&self) -> Result<(), FoError> {
        if self.idx == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input in sentence"))
        }
    }

    fn expect_ident(&mut self) -> Result<String, FoError> {
        match self.bump() {
            Some(FTok::Ident(s)) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    fn formula(&mut self) -> Result<Formula, FoError> {
        self.implication()
    }

    fn implication(&mut self) -> Result<Formula, FoError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&FTok::Arrow) {
            self.bump();
            let rhs = self.implication()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, FoError> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&FTok::Pipe) {
            self.bump();
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, FoError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&FTok::Amp) {
            self.bump();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, FoError> {
        match self.peek() {
            Some(FTok::Tilde) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(FTok::Ident(s)) if s == "forall" || s == "exists" => {
                let is_forall = s == "forall";
                self.bump();
                let v = self.expect_ident()?;
                self.eat(FTok::Colon)?;
                let sort = self.expect_ident()?;
                self.eat(FTok::Dot)?;
                // Quantifier scope extends as far right as possible.
                let body = self.formula()?;
                Ok(if is_forall {
                    Formula::forall(v, sort, body)
                } else {
                    Formula::exists(v, sort, body)
                })
            }
            Some(FTok::LParen) => {
                self.bump();
                let f = self.formula()?;
                self.eat(FTok::RParen)?;
                Ok(f)
            }
            Some(FTok::Ident(_)) => self.atom(),
            other => Err(self.err(format!("expected a formula, found {other:?}"))),
        }
    }

    fn term(&mut self) -> Result<FoTerm, FoError> {
        let name = self.expect_ident()?;
        if self.peek() == Some(&FTok::LParen) {
            self.bump();
            let mut args = Vec::new();
            if self.peek() == Some(&FTok::RParen) {
                self.bump();
                return Ok(FoTerm::App(name, args));
            }
            loop {
                args.push(self.term()?);
                match self.bump() {
                    Some(FTok::Comma) => continue,
                    Some(FTok::RParen) => break,
                    other => return Err(self.err(format!("expected , or ), found {other:?}"))),
                }
            }
            Ok(FoTerm::App(name, args))
        } else {
            Ok(FoTerm::Var(name))
        }
    }

    /// An atom is either `term = term` or a relation application; which one
    /// a bare application is gets settled during validation, so here a
    /// leading application followed by `=` parses as equality, anything
    /// else as a relation atom.
    fn atom(&mut self) -> Result<Formula, FoError> {
        let t = self.term()?;
        if self.peek() == Some(&FTok::Equal) {
            self.bump();
            let rhs = self.term()?;
            return Ok(Formula::Atom(Atom::Eq(t, rhs)));
        }
        match t {
            FoTerm::App(name, args) => Ok(Formula::Atom(Atom::Rel(name, args))),
            FoTerm::Var(name) => Ok(Formula::Atom(Atom::Rel(name, vec![]))),
        }
    }
}

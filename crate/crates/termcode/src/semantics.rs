//! Interpretations over finite domains and exact counting.
//!
//! Domain elements are 0-indexed integers per sort. Solution enumeration
//! iterates variables in declaration order with the last variable innermost,
//! and counting is exact. The module also provides the constructive
//! combinators: product interpretations and the block-partition lift from a
//! diversified witness back to its base system.

use std::collections::{BTreeMap, HashSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ir::{DomainSizes, SizesError, System, Term};
use crate::normalize::{is_flat, SymbolMap};

/// Complete lookup table for one function symbol.
///
/// `values` is row-major over the argument tuple, with the first argument as
/// the most significant position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncTable {
    pub dims: Vec<usize>,
    pub result_size: usize,
    pub values: Vec<usize>,
}

impl FuncTable {
    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Table of the right shape filled with zeros.
    pub fn zeros(dims: Vec<usize>, result_size: usize) -> FuncTable {
        let len = dims.iter().product();
        FuncTable {
            dims,
            result_size,
            values: vec![0; len],
        }
    }

    /// Builds a table by evaluating `f` at every argument tuple.
    pub fn from_fn(
        dims: Vec<usize>,
        result_size: usize,
        mut f: impl FnMut(&[usize]) -> usize,
    ) -> FuncTable {
        let mut table = FuncTable::zeros(dims.clone(), result_size);
        let mut args = vec![0usize; dims.len()];
        for i in 0..table.values.len() {
            table.values[i] = f(&args);
            advance(&mut args, &dims);
        }
        table
    }

    pub fn get(&self, args: &[usize]) -> Option<usize> {
        let mut index = 0usize;
        if args.len() != self.dims.len() {
            return None;
        }
        for (a, d) in args.iter().zip(self.dims.iter()) {
            if a >= d {
                return None;
            }
            index = index * d + a;
        }
        self.values.get(index).copied()
    }
}

/// Row-major odometer step; wraps to all zeros after the last tuple.
fn advance(args: &mut [usize], dims: &[usize]) -> bool {
    for i in (0..args.len()).rev() {
        args[i] += 1;
        if args[i] < dims[i] {
            return true;
        }
        args[i] = 0;
    }
    false
}

/// Per-sort domain sizes plus a full lookup table for each function symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    pub sizes: DomainSizes,
    pub tables: BTreeMap<String, FuncTable>,
}

impl Interpretation {
    /// Zero tables for every function symbol of `sys`.
    pub fn zeros(sys: &System, sizes: &DomainSizes) -> Result<Interpretation, SemanticsError> {
        sizes.check_for(sys)?;
        let mut tables = BTreeMap::new();
        for f in &sys.funcs {
            let dims: Vec<usize> = f
                .arg_sorts
                .iter()
                .map(|s| sizes.get(s).expect("checked above"))
                .collect();
            let result_size = sizes.get(&f.result_sort).expect("checked above");
            tables.insert(f.name.clone(), FuncTable::zeros(dims, result_size));
        }
        Ok(Interpretation {
            sizes: sizes.clone(),
            tables,
        })
    }

    /// Replaces one symbol's table values, keeping its shape.
    pub fn set_values(&mut self, name: &str, values: Vec<usize>) -> Result<(), SemanticsError> {
        let t = self
            .tables
            .get_mut(name)
            .ok_or_else(|| SemanticsError::MissingTable(name.to_string()))?;
        if values.len() != t.values.len() || values.iter().any(|v| *v >= t.result_size) {
            return Err(SemanticsError::TableShape(name.to_string()));
        }
        t.values = values;
        Ok(())
    }

    /// Sets one symbol's table by evaluating a function at every tuple.
    pub fn set_fn(
        &mut self,
        name: &str,
        f: impl FnMut(&[usize]) -> usize,
    ) -> Result<(), SemanticsError> {
        let (dims, result_size) = {
            let t = self
                .tables
                .get(name)
                .ok_or_else(|| SemanticsError::MissingTable(name.to_string()))?;
            (t.dims.clone(), t.result_size)
        };
        let table = FuncTable::from_fn(dims, result_size, f);
        if table.values.iter().any(|v| *v >= table.result_size) {
            return Err(SemanticsError::TableShape(name.to_string()));
        }
        self.tables.insert(name.to_string(), table);
        Ok(())
    }

    /// Canonical byte encoding used for digests.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (sort, n) in &self.sizes.0 {
            out.extend_from_slice(sort.as_bytes());
            out.extend_from_slice(&(*n as u64).to_le_bytes());
        }
        for (name, t) in &self.tables {
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.dims.len() as u64).to_le_bytes());
            for v in &t.values {
                out.extend_from_slice(&(*v as u64).to_le_bytes());
            }
        }
        out
    }

    /// Hex digest of the canonical encoding.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.encode());
        let bytes = hasher.finalize();
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Sizes(#[from] SizesError),
    #[error("no table for function symbol {0}")]
    MissingTable(String),
    #[error("table for {0} has the wrong shape or out-of-range values")]
    TableShape(String),
    #[error("assignment does not cover variable {0}")]
    MissingVariable(String),
    #[error("element {value} out of range for argument {position} of {func}")]
    OutOfRange {
        func: String,
        position: usize,
        value: usize,
    },
    #[error("unknown symbol {0} in term")]
    UnknownSymbol(String),
    #[error("system declares no outputs; not a dispersion problem")]
    NoOutputs,
    #[error("assignment space of {0} tuples exceeds the exact-enumeration guard")]
    SpaceTooLarge(u128),
    #[error("interpretations do not share a signature shape")]
    MismatchedSystems,
    #[error("inconsistent symbol map: {0}")]
    InconsistentMaps(String),
    #[error("base system is not flat")]
    BaseNotFlat,
}

/// Exact enumeration guard: `count_solutions` and `dispersion_image` refuse
/// assignment spaces beyond this many tuples.
pub const MAX_ENUM_SPACE: u128 = 1 << 40;

const SAMPLE_CAP: usize = 16;

/// Result of exact solution counting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionReport {
    pub count: u128,
    /// First solutions in enumeration order, capped.
    pub sample: Vec<Vec<usize>>,
    /// Digest of the interpretation that was counted.
    pub witness_hash: String,
}

/// Evaluates a term bottom-up under an assignment of its free variables.
pub fn eval(
    t: &Term,
    interp: &Interpretation,
    assignment: &BTreeMap<String, usize>,
) -> Result<usize, SemanticsError> {
    match t {
        Term::Var(v) => assignment
            .get(v)
            .copied()
            .ok_or_else(|| SemanticsError::MissingVariable(v.clone())),
        Term::App(f, args) => {
            let table = interp
                .tables
                .get(f)
                .ok_or_else(|| SemanticsError::UnknownSymbol(f.clone()))?;
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval(a, interp, assignment)?);
            }
            for (i, (v, d)) in vals.iter().zip(table.dims.iter()).enumerate() {
                if v >= d {
                    return Err(SemanticsError::OutOfRange {
                        func: f.clone(),
                        position: i + 1,
                        value: *v,
                    });
                }
            }
            table
                .get(&vals)
                .ok_or_else(|| SemanticsError::TableShape(f.clone()))
        }
    }
}

// ---------------------------------------------------------------------------
// Compiled constraint programs for the hot counting loops.

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    PushVar(u32),
    Apply { slot: u32, arity: u32 },
}

pub(crate) type Prog = Vec<Op>;

/// Shape of one function symbol's table, by slot.
#[derive(Debug, Clone)]
pub(crate) struct SlotSpec {
    pub name: String,
    pub dims: Vec<usize>,
    pub result_size: usize,
}

impl SlotSpec {
    pub fn table_len(&self) -> usize {
        self.dims.iter().product()
    }
}

/// A system compiled against concrete domain sizes: constraints as postfix
/// programs over variable indices and function slots.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    #[allow(dead_code)]
    pub var_names: Vec<String>,
    pub var_dims: Vec<usize>,
    pub slots: Vec<SlotSpec>,
    pub eqs: Vec<(Prog, Prog)>,
    pub neqs: Vec<(Prog, Prog)>,
    pub outs: Vec<Prog>,
}

impl Compiled {
    pub fn assignment_space(&self) -> u128 {
        self.var_dims.iter().map(|d| *d as u128).product()
    }
}

pub(crate) fn compile(sys: &System, sizes: &DomainSizes) -> Result<Compiled, SemanticsError> {
    sizes.check_for(sys)?;
    let used = sys.used_funcs();
    let slots: Vec<SlotSpec> = used
        .iter()
        .map(|name| {
            let f = sys.func(name).expect("used symbol is declared");
            SlotSpec {
                name: name.clone(),
                dims: f
                    .arg_sorts
                    .iter()
                    .map(|s| sizes.get(s).expect("sizes checked"))
                    .collect(),
                result_size: sizes.get(&f.result_sort).expect("sizes checked"),
            }
        })
        .collect();
    let var_names: Vec<String> = sys.vars.iter().map(|v| v.name.clone()).collect();
    let var_dims: Vec<usize> = sys
        .vars
        .iter()
        .map(|v| sizes.get(&v.sort).expect("sizes checked"))
        .collect();

    fn emit(t: &Term, ops: &mut Prog, var_names: &[String], slots: &[SlotSpec]) {
        match t {
            Term::Var(v) => {
                let i = var_names
                    .iter()
                    .position(|name| name == v)
                    .expect("validated term references declared variables");
                ops.push(Op::PushVar(i as u32));
            }
            Term::App(f, args) => {
                for a in args {
                    emit(a, ops, var_names, slots);
                }
                let slot = slots
                    .iter()
                    .position(|s| &s.name == f)
                    .expect("used symbol has a slot");
                ops.push(Op::Apply {
                    slot: slot as u32,
                    arity: args.len() as u32,
                });
            }
        }
    }
    let prog = |t: &Term| -> Prog {
        let mut ops = Vec::new();
        emit(t, &mut ops, &var_names, &slots);
        ops
    };
    let eqs = sys
        .equations
        .iter()
        .map(|c| (prog(&c.lhs), prog(&c.rhs)))
        .collect();
    let neqs = sys
        .disequalities
        .iter()
        .map(|c| (prog(&c.lhs), prog(&c.rhs)))
        .collect();
    let outs = sys.outputs.iter().map(prog).collect();
    Ok(Compiled {
        var_names,
        var_dims,
        slots,
        eqs,
        neqs,
        outs,
    })
}

#[inline]
fn run_prog(ops: &[Op], assignment: &[usize], slots: &[SlotSpec], tables: &[&[usize]], stack: &mut Vec<usize>) -> usize {
    stack.clear();
    for op in ops {
        match *op {
            Op::PushVar(i) => stack.push(assignment[i as usize]),
            Op::Apply { slot, arity } => {
                let spec = &slots[slot as usize];
                let arity = arity as usize;
                let base = stack.len() - arity;
                let mut index = 0usize;
                for (k, d) in spec.dims.iter().enumerate() {
                    index = index * d + stack[base + k];
                }
                stack.truncate(base);
                stack.push(tables[slot as usize][index]);
            }
        }
    }
    stack.pop().expect("program leaves one value")
}

pub(crate) fn satisfies(
    compiled: &Compiled,
    assignment: &[usize],
    tables: &[&[usize]],
    stack: &mut Vec<usize>,
) -> bool {
    for (l, r) in &compiled.eqs {
        if run_prog(l, assignment, &compiled.slots, tables, stack)
            != run_prog(r, assignment, &compiled.slots, tables, stack)
        {
            return false;
        }
    }
    for (l, r) in &compiled.neqs {
        if run_prog(l, assignment, &compiled.slots, tables, stack)
            == run_prog(r, assignment, &compiled.slots, tables, stack)
        {
            return false;
        }
    }
    true
}

/// True iff every assignment satisfies all constraints; aborts at the first
/// counterexample.
pub(crate) fn all_assignments_satisfied(compiled: &Compiled, tables: &[&[usize]]) -> bool {
    let mut assignment = vec![0usize; compiled.var_dims.len()];
    let mut stack = Vec::with_capacity(16);
    loop {
        if !satisfies(compiled, &assignment, tables, &mut stack) {
            return false;
        }
        if !advance(&mut assignment, &compiled.var_dims) {
            return true;
        }
    }
}

/// Counts satisfying assignments with caller-provided table storage.
pub(crate) fn count_with(compiled: &Compiled, tables: &[&[usize]]) -> u128 {
    let mut count = 0u128;
    let mut assignment = vec![0usize; compiled.var_dims.len()];
    let mut stack = Vec::with_capacity(16);
    loop {
        if satisfies(compiled, &assignment, tables, &mut stack) {
            count += 1;
        }
        if !advance(&mut assignment, &compiled.var_dims) {
            break;
        }
    }
    count
}

/// Counts distinct output tuples over valid assignments.
pub(crate) fn dispersion_with(compiled: &Compiled, tables: &[&[usize]]) -> u128 {
    let mut seen: HashSet<u128> = HashSet::new();
    let mut assignment = vec![0usize; compiled.var_dims.len()];
    let mut stack = Vec::with_capacity(16);
    loop {
        if satisfies(compiled, &assignment, tables, &mut stack) {
            let mut key = 0u128;
            for prog in &compiled.outs {
                let v = run_prog(prog, &assignment, &compiled.slots, tables, &mut stack);
                key = key * (MAX_OUT_BASE as u128) + v as u128;
            }
            seen.insert(key);
        }
        if !advance(&mut assignment, &compiled.var_dims) {
            break;
        }
    }
    seen.len() as u128
}

// Output tuple encoding base; bounds checked by the enumeration guard since
// domain sizes at desk scale stay far below it.
const MAX_OUT_BASE: u64 = 1 << 24;

/// Resolves the interpretation's tables in slot order, checking shapes.
pub(crate) fn resolve_tables<'a>(
    compiled: &Compiled,
    interp: &'a Interpretation,
) -> Result<Vec<&'a [usize]>, SemanticsError> {
    compiled
        .slots
        .iter()
        .map(|spec| {
            let t = interp
                .tables
                .get(&spec.name)
                .ok_or_else(|| SemanticsError::MissingTable(spec.name.clone()))?;
            if t.dims != spec.dims
                || t.result_size != spec.result_size
                || t.values.len() != spec.table_len()
                || t.values.iter().any(|v| *v >= spec.result_size)
            {
                return Err(SemanticsError::TableShape(spec.name.clone()));
            }
            Ok(t.values.as_slice())
        })
        .collect()
}

fn guard_space(compiled: &Compiled) -> Result<(), SemanticsError> {
    let space = compiled.assignment_space();
    if space > MAX_ENUM_SPACE {
        return Err(SemanticsError::SpaceTooLarge(space));
    }
    Ok(())
}

/// Exact count of assignments satisfying every equation and disequality.
pub fn count_solutions(
    sys: &System,
    interp: &Interpretation,
) -> Result<SolutionReport, SemanticsError> {
    let compiled = compile(sys, &interp.sizes)?;
    guard_space(&compiled)?;
    let tables = resolve_tables(&compiled, interp)?;
    let mut count = 0u128;
    let mut sample = Vec::new();
    let mut assignment = vec![0usize; compiled.var_dims.len()];
    let mut stack = Vec::with_capacity(16);
    loop {
        if satisfies(&compiled, &assignment, &tables, &mut stack) {
            count += 1;
            if sample.len() < SAMPLE_CAP {
                sample.push(assignment.clone());
            }
        }
        if !advance(&mut assignment, &compiled.var_dims) {
            break;
        }
    }
    Ok(SolutionReport {
        count,
        sample,
        witness_hash: interp.digest(),
    })
}

/// Checks every equation and disequality at one named assignment.
pub fn holds_at(
    sys: &System,
    interp: &Interpretation,
    assignment: &BTreeMap<String, usize>,
) -> Result<bool, SemanticsError> {
    for c in &sys.equations {
        if eval(&c.lhs, interp, assignment)? != eval(&c.rhs, interp, assignment)? {
            return Ok(false);
        }
    }
    for c in &sys.disequalities {
        if eval(&c.lhs, interp, assignment)? == eval(&c.rhs, interp, assignment)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All satisfying assignments in enumeration order, up to `cap`.
pub fn enumerate_solutions(
    sys: &System,
    interp: &Interpretation,
    cap: usize,
) -> Result<Vec<Vec<usize>>, SemanticsError> {
    let compiled = compile(sys, &interp.sizes)?;
    guard_space(&compiled)?;
    let tables = resolve_tables(&compiled, interp)?;
    let mut out = Vec::new();
    let mut assignment = vec![0usize; compiled.var_dims.len()];
    let mut stack = Vec::with_capacity(16);
    loop {
        if satisfies(&compiled, &assignment, &tables, &mut stack) {
            out.push(assignment.clone());
            if out.len() >= cap {
                break;
            }
        }
        if !advance(&mut assignment, &compiled.var_dims) {
            break;
        }
    }
    Ok(out)
}

/// Number of distinct output tuples over assignments satisfying all
/// equations and disequalities (input- and output-validity).
pub fn dispersion_image(sys: &System, interp: &Interpretation) -> Result<u128, SemanticsError> {
    if sys.outputs.is_empty() {
        return Err(SemanticsError::NoOutputs);
    }
    let compiled = compile(sys, &interp.sizes)?;
    guard_space(&compiled)?;
    let tables = resolve_tables(&compiled, interp)?;
    Ok(dispersion_with(&compiled, &tables))
}

/// Componentwise product of two interpretations of the same system shape.
///
/// The product admits at least the product of the factors' solution sets:
/// pairing a solution of `a` with a solution of `b` coordinatewise yields a
/// solution of the product.
pub fn product(a: &Interpretation, b: &Interpretation) -> Result<Interpretation, SemanticsError> {
    if a.sizes.0.keys().ne(b.sizes.0.keys()) || a.tables.keys().ne(b.tables.keys()) {
        return Err(SemanticsError::MismatchedSystems);
    }
    let mut sizes = BTreeMap::new();
    for (sort, na) in &a.sizes.0 {
        let nb = b.sizes.get(sort).expect("checked keys");
        sizes.insert(sort.clone(), na * nb);
    }
    let mut tables = BTreeMap::new();
    for (name, ta) in &a.tables {
        let tb = &b.tables[name];
        if ta.dims.len() != tb.dims.len() {
            return Err(SemanticsError::MismatchedSystems);
        }
        let dims: Vec<usize> = ta
            .dims
            .iter()
            .zip(tb.dims.iter())
            .map(|(da, db)| da * db)
            .collect();
        let result_size = ta.result_size * tb.result_size;
        let table = FuncTable::from_fn(dims, result_size, |args| {
            let mut args_a = Vec::with_capacity(args.len());
            let mut args_b = Vec::with_capacity(args.len());
            for (i, v) in args.iter().enumerate() {
                args_a.push(v / tb.dims[i]);
                args_b.push(v % tb.dims[i]);
            }
            let ra = ta.get(&args_a).expect("in-range by construction");
            let rb = tb.get(&args_b).expect("in-range by construction");
            ra * tb.result_size + rb
        });
        tables.insert(name.clone(), table);
    }
    Ok(Interpretation {
        sizes: DomainSizes(sizes),
        tables,
    })
}

/// Lifts a witness of the diversified system to an interpretation of the
/// base (normalised) system over per-sort domains of size `k_s * m_s`, where
/// `k_s` counts the base variables of sort `s`.
///
/// Every variable's values are confined to its dedicated block, so the lift
/// admits at least as many solutions as the witness.
pub fn partition_lift(
    diversified: &System,
    witness: &Interpretation,
    base: &System,
    symbols: &SymbolMap,
) -> Result<Interpretation, SemanticsError> {
    if !is_flat(base) {
        return Err(SemanticsError::BaseNotFlat);
    }
    witness.sizes.check_for(diversified)?;

    // Block index of each base variable within its sort.
    let mut block: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_sort_count: BTreeMap<String, usize> = BTreeMap::new();
    for var in &base.vars {
        let c = per_sort_count.entry(var.sort.clone()).or_insert(0);
        block.insert(var.name.clone(), *c);
        *c += 1;
    }
    let mut lifted_sizes = BTreeMap::new();
    for sort in &base.sorts {
        let m = witness
            .sizes
            .get(&sort.name)
            .ok_or_else(|| SizesError::MissingSort(sort.name.clone()))?;
        let k = per_sort_count.get(&sort.name).copied().unwrap_or(0).max(1);
        lifted_sizes.insert(sort.name.clone(), k * m);
    }
    let lifted_sizes = DomainSizes(lifted_sizes);
    let mut out = Interpretation::zeros(base, &lifted_sizes)?;

    let phi = |var: &str, value: usize| -> Result<usize, SemanticsError> {
        let sort = &base.var(var).expect("flat base variable").sort;
        let m = witness.sizes.get(sort).expect("checked");
        Ok(block[var] * m + value)
    };

    for (i, eqn) in base.equations.iter().enumerate() {
        let renaming = symbols.symbol_for_equation(i).ok_or_else(|| {
            SemanticsError::InconsistentMaps(format!("no diversified symbol for equation {i}"))
        })?;
        let (orig, args) = match &eqn.lhs {
            Term::App(f, args) => (f.clone(), args.clone()),
            _ => return Err(SemanticsError::BaseNotFlat),
        };
        if renaming.original != orig {
            return Err(SemanticsError::InconsistentMaps(format!(
                "equation {i} uses {orig} but the map records {}",
                renaming.original
            )));
        }
        let rhs = match &eqn.rhs {
            Term::Var(v) => v.clone(),
            _ => return Err(SemanticsError::BaseNotFlat),
        };
        let arg_names: Vec<String> = args
            .iter()
            .map(|a| match a {
                Term::Var(v) => Ok(v.clone()),
                _ => Err(SemanticsError::BaseNotFlat),
            })
            .collect::<Result<_, _>>()?;
        let wt = witness
            .tables
            .get(&renaming.new_name)
            .ok_or_else(|| SemanticsError::MissingTable(renaming.new_name.clone()))?
            .clone();
        let out_table = out
            .tables
            .get_mut(&orig)
            .ok_or_else(|| SemanticsError::MissingTable(orig.clone()))?;
        let mut wargs = vec![0usize; wt.dims.len()];
        for &value in &wt.values {
            let mut lifted_args = Vec::with_capacity(wargs.len());
            for (k, name) in arg_names.iter().enumerate() {
                lifted_args.push(phi(name, wargs[k])?);
            }
            let lifted_value = phi(&rhs, value)?;
            let mut index = 0usize;
            for (k, d) in out_table.dims.iter().enumerate() {
                index = index * d + lifted_args[k];
            }
            out_table.values[index] = lifted_value;
            advance(&mut wargs, &wt.dims);
        }
    }
    Ok(out)
}

/// True iff the interpretation realises the claimed count: the dispersion
/// image for dispersion problems, the solution count otherwise.
pub fn verify_witness(sys: &System, interp: &Interpretation, claimed: u128) -> bool {
    if sys.is_dispersion() {
        dispersion_image(sys, interp).map(|c| c == claimed).unwrap_or(false)
    } else {
        count_solutions(sys, interp)
            .map(|r| r.count == claimed)
            .unwrap_or(false)
    }
}

/// The printed order-3 idempotent commutative self-inverting table,
/// 0-indexed.
pub fn steiner_table_n3() -> Vec<usize> {
    vec![0, 2, 1, 2, 1, 0, 1, 0, 2]
}

/// The printed order-4 near-miss table, 0-indexed.
pub fn steiner_table_n4() -> Vec<usize> {
    vec![0, 0, 0, 0, 0, 1, 3, 2, 0, 3, 2, 1, 0, 2, 1, 3]
}

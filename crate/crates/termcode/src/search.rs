//! Interpretation search: maximise solution counts or dispersion images.
//!
//! Exhaustive mode enumerates every interpretation of the used function
//! symbols (declaration order, row-major entries, values ascending) and
//! returns the lexicographically least witness among the maxima; it refuses
//! instances beyond a work budget. Anneal mode runs seeded simulated
//! annealing restarts: single-entry mutations, exponential acceptance,
//! geometric cooling. Both are deterministic for fixed inputs, parameters,
//! and seed, independent of the worker count.
//!
//! For diversified flat systems, [`code_max_exact`] computes the exact
//! maximum code size without enumerating tables, by a maximum-clique search
//! on the compatibility graph of valid assignments. [`guess_at_n`] is built
//! on it.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ir::{DomainSizes, System, Term};
use crate::normalize::{diversify, normalize};
use crate::semantics::{
    compile, count_with, dispersion_with, Compiled, Interpretation,
    SemanticsError,
};

/// Search strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Anneal,
}

/// Knobs for both search modes.
#[derive(Debug, Clone)]
pub struct SearchParams {
    pub mode: SearchMode,
    pub seed: u64,
    pub restarts: u32,
    pub steps: u64,
    pub initial_temperature: f64,
    pub cooling: f64,
    pub time_budget: Option<Duration>,
    /// Exhaustive work budget: interpretation space times assignment space.
    pub budget: u128,
    /// Worker count; 0 uses the default parallelism.
    pub threads: usize,
    /// Tables pinned to fixed values (by symbol name); pinned symbols are
    /// not searched over.
    pub fixed_tables: BTreeMap<String, Vec<usize>>,
}

/// Default exhaustive budget, sized so the desk-scale exhaustive examples
/// finish in minutes.
pub const DEFAULT_BUDGET: u128 = 1 << 34;

impl Default for SearchParams {
    fn default() -> SearchParams {
        SearchParams {
            mode: SearchMode::Exhaustive,
            seed: 1,
            restarts: 8,
            steps: 20_000,
            initial_temperature: 2.0,
            cooling: 0.999,
            time_budget: None,
            budget: DEFAULT_BUDGET,
            threads: 0,
            fixed_tables: BTreeMap::new(),
        }
    }
}

impl SearchParams {
    fn check(&self) -> Result<(), SearchError> {
        if self.restarts < 1 || self.steps < 1 {
            return Err(SearchError::InvalidParams(
                "anneal requires restarts >= 1 and steps >= 1".into(),
            ));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(SearchError::InvalidParams(
                "cooling must lie in (0,1)".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_count: u128,
    pub witness: Interpretation,
    /// True only in exhaustive mode when the full space was enumerated.
    pub exhausted: bool,
    /// Interpretations enumerated, or anneal steps taken.
    pub explored: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error(
        "exhaustive work {work} exceeds budget {budget}; use anneal mode or raise the budget"
    )]
    BudgetExceeded { work: u128, budget: u128 },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("not a diversified flat system: {0}")]
    NotDiversified(String),
    #[error("guess_at_n requires n >= 2")]
    BaseTooSmall,
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    Count,
    Dispersion,
}

fn evaluate(obj: Objective, compiled: &Compiled, tables: &[&[usize]]) -> u128 {
    match obj {
        Objective::Count => count_with(compiled, tables),
        Objective::Dispersion => dispersion_with(compiled, tables),
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

/// One searchable slot: which table entries vary and over what radix.
struct SearchSpace {
    compiled: Compiled,
    /// Current values per slot, pinned slots included.
    fixed: Vec<Option<Vec<usize>>>,
    /// (slot, entry count, radix) for slots being searched.
    open: Vec<(usize, usize, usize)>,
}

impl SearchSpace {
    fn build(
        sys: &System,
        sizes: &DomainSizes,
        params: &SearchParams,
    ) -> Result<SearchSpace, SearchError> {
        let compiled = compile(sys, sizes)?;
        let mut fixed = vec![None; compiled.slots.len()];
        let mut open = Vec::new();
        for (i, spec) in compiled.slots.iter().enumerate() {
            if let Some(values) = params.fixed_tables.get(&spec.name) {
                if values.len() != spec.table_len()
                    || values.iter().any(|v| *v >= spec.result_size)
                {
                    return Err(SemanticsError::TableShape(spec.name.clone()).into());
                }
                fixed[i] = Some(values.clone());
            } else {
                open.push((i, spec.table_len(), spec.result_size));
            }
        }
        Ok(SearchSpace {
            compiled,
            fixed,
            open,
        })
    }

    /// Interpretation count over the open slots; None on u128 overflow.
    fn space(&self) -> Option<u128> {
        let mut total: u128 = 1;
        for (_, entries, radix) in &self.open {
            for _ in 0..*entries {
                total = total.checked_mul(*radix as u128)?;
            }
        }
        Some(total)
    }

    fn fresh_tables(&self) -> Vec<Vec<usize>> {
        self.compiled
            .slots
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                self.fixed[i]
                    .clone()
                    .unwrap_or_else(|| vec![0; spec.table_len()])
            })
            .collect()
    }

    /// Writes the interpretation at `index` (mixed radix, first open slot's
    /// first entry most significant) into `tables`.
    fn decode(&self, mut index: u128, tables: &mut [Vec<usize>]) {
        for (slot, entries, radix) in self.open.iter().rev() {
            let values = &mut tables[*slot];
            for e in (0..*entries).rev() {
                values[e] = (index % *radix as u128) as usize;
                index /= *radix as u128;
            }
        }
    }

    /// Odometer step in enumeration order; false on wrap.
    fn advance(&self, tables: &mut [Vec<usize>]) -> bool {
        for (slot, entries, radix) in self.open.iter().rev() {
            let values = &mut tables[*slot];
            for e in (0..*entries).rev() {
                values[e] += 1;
                if values[e] < *radix {
                    return true;
                }
                values[e] = 0;
            }
        }
        false
    }

    fn interpretation(&self, sys: &System, sizes: &DomainSizes, tables: &[Vec<usize>]) -> Interpretation {
        let mut interp = Interpretation::zeros(sys, sizes).expect("sizes checked");
        for (i, spec) in self.compiled.slots.iter().enumerate() {
            interp
                .set_values(&spec.name, tables[i].clone())
                .expect("shape by construction");
        }
        interp
    }
}

fn exhaustive_core(
    sys: &System,
    sizes: &DomainSizes,
    params: &SearchParams,
    objective: Objective,
) -> Result<SearchResult, SearchError> {
    let space = SearchSpace::build(sys, sizes, params)?;
    let total = space.space().ok_or(SearchError::BudgetExceeded {
        work: u128::MAX,
        budget: params.budget,
    })?;
    let work = total
        .checked_mul(space.compiled.assignment_space())
        .ok_or(SearchError::BudgetExceeded {
            work: u128::MAX,
            budget: params.budget,
        })?;
    if work > params.budget {
        return Err(SearchError::BudgetExceeded {
            work,
            budget: params.budget,
        });
    }

    let chunks: u128 = if total < 1024 {
        1
    } else {
        let t = if params.threads == 0 {
            rayon::current_num_threads()
        } else {
            params.threads
        };
        (t as u128 * 8).min(total)
    };
    let chunk_len = total.div_ceil(chunks);
    let ranges: Vec<(u128, u128)> = (0..chunks)
        .map(|c| {
            let start = c * chunk_len;
            (start, ((c + 1) * chunk_len).min(total))
        })
        .filter(|(s, e)| s < e)
        .collect();

    let results: Vec<(u128, u128)> = with_pool(params.threads, || {
        ranges
            .par_iter()
            .map(|&(start, end)| {
                let mut tables = space.fresh_tables();
                space.decode(start, &mut tables);
                let mut best: Option<(u128, u128)> = None;
                let mut index = start;
                loop {
                    let views: Vec<&[usize]> = tables.iter().map(|t| t.as_slice()).collect();
                    let value = evaluate(objective, &space.compiled, &views);
                    if best.map_or(true, |(b, _)| value > b) {
                        best = Some((value, index));
                    }
                    index += 1;
                    if index >= end || !space.advance(&mut tables) {
                        break;
                    }
                }
                best.expect("non-empty range")
            })
            .collect()
    });

    // Max count, lexicographically least index on ties.
    let (best_count, best_index) = results
        .into_iter()
        .fold(None::<(u128, u128)>, |acc, (c, i)| match acc {
            None => Some((c, i)),
            Some((bc, bi)) => {
                if c > bc || (c == bc && i < bi) {
                    Some((c, i))
                } else {
                    Some((bc, bi))
                }
            }
        })
        .expect("at least one interpretation");

    let mut tables = space.fresh_tables();
    space.decode(best_index, &mut tables);
    let witness = space.interpretation(sys, sizes, &tables);
    Ok(SearchResult {
        best_count,
        witness,
        exhausted: true,
        explored: total,
    })
}

fn anneal_core(
    sys: &System,
    sizes: &DomainSizes,
    params: &SearchParams,
    objective: Objective,
) -> Result<SearchResult, SearchError> {
    params.check()?;
    let space = SearchSpace::build(sys, sizes, params)?;
    // Mutable positions: (slot, entry) pairs with at least two values.
    let positions: Vec<(usize, usize, usize)> = space
        .open
        .iter()
        .flat_map(|&(slot, entries, radix)| (0..entries).map(move |e| (slot, e, radix)))
        .filter(|&(_, _, radix)| radix >= 2)
        .collect();

    let deadline = params.time_budget.map(|d| Instant::now() + d);
    let run_restart = |r: u32| -> (u128, Vec<Vec<usize>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(r as u64));
        let mut tables = space.fresh_tables();
        for &(slot, entries, radix) in &space.open {
            for e in 0..entries {
                tables[slot][e] = rng.gen_range(0..radix);
            }
        }
        let views = |tables: &[Vec<usize>]| -> u128 {
            let v: Vec<&[usize]> = tables.iter().map(|t| t.as_slice()).collect();
            evaluate(objective, &space.compiled, &v)
        };
        let mut current = views(&tables);
        let mut best = current;
        let mut best_tables = tables.clone();
        if positions.is_empty() {
            return (best, best_tables);
        }
        let mut temperature = params.initial_temperature.max(f64::MIN_POSITIVE);
        for step in 0..params.steps {
            if let Some(d) = deadline {
                if step % 1024 == 0 && Instant::now() > d {
                    break;
                }
            }
            let (slot, entry, radix) = positions[rng.gen_range(0..positions.len())];
            let old = tables[slot][entry];
            let new = (old + 1 + rng.gen_range(0..radix - 1)) % radix;
            tables[slot][entry] = new;
            let candidate = views(&tables);
            let accept = if candidate >= current {
                true
            } else {
                let delta = candidate as f64 - current as f64;
                rng.gen::<f64>() < (delta / temperature).exp()
            };
            if accept {
                current = candidate;
                if current > best {
                    best = current;
                    best_tables = tables.clone();
                }
            } else {
                tables[slot][entry] = old;
            }
            temperature = (temperature * params.cooling).max(1e-12);
        }
        (best, best_tables)
    };

    let results: Vec<(u128, Vec<Vec<usize>>)> = with_pool(params.threads, || {
        (0..params.restarts)
            .into_par_iter()
            .map(run_restart)
            .collect()
    });
    // Best count; earliest restart wins ties, so the outcome is independent
    // of scheduling.
    let mut best: Option<(u128, &Vec<Vec<usize>>)> = None;
    for (count, tables) in &results {
        if best.map_or(true, |(b, _)| *count > b) {
            best = Some((*count, tables));
        }
    }
    let (best_count, tables) = best.expect("restarts >= 1");
    let witness = space.interpretation(sys, sizes, tables);
    Ok(SearchResult {
        best_count,
        witness,
        exhausted: false,
        explored: params.restarts as u128 * params.steps as u128,
    })
}

/// Exact maximum solution count over all interpretations, with the
/// lexicographically least witness among the maxima.
pub fn exhaustive_max(
    sys: &System,
    sizes: &DomainSizes,
    params: &SearchParams,
) -> Result<SearchResult, SearchError> {
    exhaustive_core(sys, sizes, params, Objective::Count)
}

/// Best solution count found by simulated annealing; deterministic for a
/// fixed seed.
pub fn anneal_max(
    sys: &System,
    sizes: &DomainSizes,
    params: &SearchParams,
) -> Result<SearchResult, SearchError> {
    anneal_core(sys, sizes, params, Objective::Count)
}

/// As [`exhaustive_max`]/[`anneal_max`] but maximising the dispersion image.
pub fn dispersion_max(
    sys: &System,
    sizes: &DomainSizes,
    params: &SearchParams,
) -> Result<SearchResult, SearchError> {
    if sys.outputs.is_empty() {
        return Err(SemanticsError::NoOutputs.into());
    }
    match params.mode {
        SearchMode::Exhaustive => exhaustive_core(sys, sizes, params, Objective::Dispersion),
        SearchMode::Anneal => anneal_core(sys, sizes, params, Objective::Dispersion),
    }
}

/// Dispatches on `params.mode`, choosing the dispersion objective for
/// dispersion systems.
pub fn search_max(
    sys: &System,
    sizes: &DomainSizes,
    params: &SearchParams,
) -> Result<SearchResult, SearchError> {
    let objective = if sys.is_dispersion() {
        Objective::Dispersion
    } else {
        Objective::Count
    };
    match params.mode {
        SearchMode::Exhaustive => exhaustive_core(sys, sizes, params, objective),
        SearchMode::Anneal => anneal_core(sys, sizes, params, objective),
    }
}

// ---------------------------------------------------------------------------
// Exact code maximum for diversified systems.

/// Assignment-space cap per connected component for the exact code maximum.
pub const CODE_EXACT_CAP: u128 = 8192;

/// Exact maximum code size of a diversified flat system, or `None` when a
/// connected component's assignment space exceeds `cap`.
///
/// In a diversified system every equation has its own function symbol, so a
/// set of assignments is realisable as a code exactly when no two of them
/// give the same arguments but different results to some equation. The
/// maximum code is then a maximum independent set of the pairwise conflict
/// graph, computed per connected component of the variable-sharing graph.
pub fn code_max_exact(
    sys: &System,
    sizes: &DomainSizes,
    cap: u128,
) -> Result<Option<u128>, SearchError> {
    sizes.check_for(sys).map_err(SemanticsError::from)?;
    if !crate::normalize::is_flat(sys) {
        return Err(SearchError::NotDiversified("system is not flat".into()));
    }
    // Every function symbol must occur in exactly one equation.
    let mut seen = BTreeMap::new();
    for (i, c) in sys.equations.iter().enumerate() {
        if let Term::App(f, _) = &c.lhs {
            if seen.insert(f.clone(), i).is_some() {
                return Err(SearchError::NotDiversified(format!(
                    "symbol {f} occurs in more than one equation"
                )));
            }
        }
    }
    let sys = &peel_sinks(sys, sizes);

    let var_index = |name: &str| sys.var_index(name).expect("validated");
    let nvars = sys.vars.len();
    let mut uf: Vec<usize> = (0..nvars).collect();
    fn find(uf: &mut Vec<usize>, i: usize) -> usize {
        if uf[i] != i {
            let r = find(uf, uf[i]);
            uf[i] = r;
        }
        uf[i]
    }
    let union = |uf: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(uf, a), find(uf, b));
        if ra != rb {
            uf[ra.max(rb)] = ra.min(rb);
        }
    };
    let constraint_vars = |c: &crate::ir::Constraint| -> Vec<usize> {
        let mut vs: Vec<usize> = c
            .lhs
            .free_vars()
            .iter()
            .chain(c.rhs.free_vars().iter())
            .map(|v| var_index(v))
            .collect();
        vs.dedup();
        vs
    };
    let mut in_constraint = vec![false; nvars];
    for c in sys.equations.iter().chain(sys.disequalities.iter()) {
        let vs = constraint_vars(c);
        for &v in &vs {
            in_constraint[v] = true;
        }
        for w in vs.windows(2) {
            union(&mut uf, w[0], w[1]);
        }
    }

    let var_dims: Vec<usize> = sys
        .vars
        .iter()
        .map(|v| sizes.get(&v.sort).expect("checked"))
        .collect();

    let mut total: u128 = 1;
    // Free variables contribute their full domain.
    for v in 0..nvars {
        if !in_constraint[v] {
            total = total.saturating_mul(var_dims[v] as u128);
        }
    }

    // Group constrained variables by component root.
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..nvars {
        if in_constraint[v] {
            let r = find(&mut uf, v);
            components.entry(r).or_default().push(v);
        }
    }

    for (_, comp_vars) in components {
        let dims: Vec<usize> = comp_vars.iter().map(|&v| var_dims[v]).collect();
        let space: u128 = dims.iter().map(|&d| d as u128).product();
        if space > cap {
            return Ok(None);
        }
        let pos_of: BTreeMap<usize, usize> = comp_vars
            .iter()
            .enumerate()
            .map(|(pos, &v)| (v, pos))
            .collect();
        // Constraints whose variables live in this component.
        let comp_eqs: Vec<(Vec<usize>, usize)> = sys
            .equations
            .iter()
            .filter(|c| {
                constraint_vars(c)
                    .first()
                    .map_or(false, |v| pos_of.contains_key(v))
            })
            .map(|c| {
                let args: Vec<usize> = match &c.lhs {
                    Term::App(_, args) => args
                        .iter()
                        .map(|a| match a {
                            Term::Var(v) => pos_of[&var_index(v)],
                            _ => unreachable!("flat"),
                        })
                        .collect(),
                    _ => unreachable!("flat"),
                };
                let rhs = match &c.rhs {
                    Term::Var(v) => pos_of[&var_index(v)],
                    _ => unreachable!("flat"),
                };
                (args, rhs)
            })
            .collect();
        let comp_neqs: Vec<(usize, usize)> = sys
            .disequalities
            .iter()
            .filter_map(|c| match (&c.lhs, &c.rhs) {
                (Term::Var(a), Term::Var(b)) => {
                    let (ia, ib) = (var_index(a), var_index(b));
                    pos_of
                        .get(&ia)
                        .and_then(|pa| pos_of.get(&ib).map(|pb| (*pa, *pb)))
                }
                _ => None,
            })
            .collect();

        // Enumerate valid assignments of the component.
        let mut valid: Vec<Vec<usize>> = Vec::new();
        let mut asg = vec![0usize; dims.len()];
        loop {
            if comp_neqs.iter().all(|&(a, b)| asg[a] != asg[b]) {
                valid.push(asg.clone());
            }
            let mut done = true;
            for i in (0..asg.len()).rev() {
                asg[i] += 1;
                if asg[i] < dims[i] {
                    done = false;
                    break;
                }
                asg[i] = 0;
            }
            if done {
                break;
            }
        }
        if valid.is_empty() {
            return Ok(Some(0));
        }
        // Per-assignment (argument key, result) signatures per equation.
        let signatures: Vec<Vec<(u64, usize)>> = valid
            .iter()
            .map(|asg| {
                comp_eqs
                    .iter()
                    .map(|(args, rhs)| {
                        let mut key = 0u64;
                        for &a in args {
                            key = key * (cap as u64 + 1) + asg[a] as u64;
                        }
                        (key, asg[*rhs])
                    })
                    .collect()
            })
            .collect();
        let n = valid.len();
        let words = n.div_ceil(64);
        let mut compat = vec![vec![0u64; words]; n];
        for i in 0..n {
            compat[i][i / 64] |= 1 << (i % 64);
            for j in (i + 1)..n {
                let conflict = signatures[i]
                    .iter()
                    .zip(signatures[j].iter())
                    .any(|((ka, va), (kb, vb))| ka == kb && va != vb);
                if !conflict {
                    compat[i][j / 64] |= 1 << (j % 64);
                    compat[j][i / 64] |= 1 << (i % 64);
                }
            }
        }
        let Some(best) = max_clique(&compat, n) else {
            return Ok(None);
        };
        total = total.saturating_mul(best as u128);
    }
    Ok(Some(total))
}

/// Removes sink variables whose presence never changes the maximum code
/// size, together with their defining equations.
///
/// A sink here is a variable defined by exactly one equation and appearing
/// nowhere else. Its function can be chosen as any constant without
/// affecting the rest of the code, so a sink with no distinctness
/// constraint contributes factor 1; two sinks linked only by one mutual
/// disequality take two distinct constants (sizes are at least 2 there).
/// Peeling repeats until fixed point, since removing an equation can expose
/// new sinks.
fn peel_sinks(sys: &System, sizes: &DomainSizes) -> System {
    let mut out = sys.clone();
    loop {
        let mut args_count: BTreeMap<String, usize> = BTreeMap::new();
        let mut rhs_of: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, c) in out.equations.iter().enumerate() {
            if let Term::App(_, args) = &c.lhs {
                for a in args {
                    if let Term::Var(v) = a {
                        *args_count.entry(v.clone()).or_insert(0) += 1;
                    }
                }
            }
            if let Term::Var(v) = &c.rhs {
                rhs_of.entry(v.clone()).or_default().push(i);
            }
        }
        let mut neq_partners: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in &out.disequalities {
            if let (Term::Var(a), Term::Var(b)) = (&c.lhs, &c.rhs) {
                neq_partners.entry(a.clone()).or_default().push(b.clone());
                neq_partners.entry(b.clone()).or_default().push(a.clone());
            }
        }
        let is_sink = |v: &str| -> bool {
            args_count.get(v).copied().unwrap_or(0) == 0
                && rhs_of.get(v).map_or(false, |e| e.len() == 1)
        };
        let mut remove_vars: Vec<String> = Vec::new();
        for v in out.vars.iter().map(|d| d.name.clone()) {
            if !is_sink(&v) {
                continue;
            }
            match neq_partners.get(&v).map(Vec::as_slice) {
                None | Some([]) => {
                    remove_vars.push(v);
                    break;
                }
                Some([w]) => {
                    // Mutual single disequality between two sinks over
                    // domains with room for two distinct constants.
                    let w = w.clone();
                    if w != v
                        && is_sink(&w)
                        && neq_partners[&w] == vec![v.clone()]
                        && [&v, &w].iter().all(|name| {
                            let sort = &out.var(name).expect("declared").sort;
                            sizes.get(sort).unwrap_or(0) >= 2
                        })
                    {
                        remove_vars.push(v);
                        remove_vars.push(w);
                        break;
                    }
                }
                _ => {}
            }
        }
        if remove_vars.is_empty() {
            return out;
        }
        out.equations = out
            .equations
            .iter()
            .filter(|c| match &c.rhs {
                Term::Var(v) => !remove_vars.contains(v),
                _ => true,
            })
            .cloned()
            .collect();
        out.disequalities = out
            .disequalities
            .iter()
            .filter(|c| match (&c.lhs, &c.rhs) {
                (Term::Var(a), Term::Var(b)) => {
                    !remove_vars.contains(a) && !remove_vars.contains(b)
                }
                _ => true,
            })
            .cloned()
            .collect();
        out.vars.retain(|d| !remove_vars.contains(&d.name));
    }
}

/// Work budget for the exact clique search (charged per candidate vertex
/// coloured); instances that exceed it fall back to annealing via
/// `code_max_exact` returning `None`.
const CLIQUE_WORK_LIMIT: u64 = 5_000_000;

/// Maximum clique via branch and bound with a greedy colouring bound, or
/// `None` when the node budget runs out.
fn max_clique(adj: &[Vec<u64>], n: usize) -> Option<usize> {
    let words = n.div_ceil(64);
    let mut full = vec![0u64; words];
    for i in 0..n {
        full[i / 64] |= 1 << (i % 64);
    }
    let mut best = 0usize;
    let mut nodes = 0u64;
    if expand(adj, &full, 0, &mut best, &mut nodes) {
        Some(best)
    } else {
        None
    }
}

fn bits(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(w, &word)| {
        let mut word = word;
        std::iter::from_fn(move || {
            if word == 0 {
                None
            } else {
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            }
        })
    })
}

fn expand(
    adj: &[Vec<u64>],
    candidates: &[u64],
    size: usize,
    best: &mut usize,
    nodes: &mut u64,
) -> bool {
    let count: usize = candidates.iter().map(|w| w.count_ones() as usize).sum();
    *nodes += 1 + count as u64;
    if *nodes > CLIQUE_WORK_LIMIT {
        return false;
    }
    if count == 0 {
        if size > *best {
            *best = size;
        }
        return true;
    }
    if size + count <= *best {
        return true;
    }
    // Greedy colouring: each colour class is an independent set, so a clique
    // contains at most one vertex per class; a vertex with colour c extends
    // the current clique to at most size + c.
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(count);
    let mut uncolored = candidates.to_vec();
    let mut color = 0usize;
    while uncolored.iter().any(|&w| w != 0) {
        color += 1;
        let mut avail = uncolored.clone();
        loop {
            let v = match bits(&avail).next() {
                Some(v) => v,
                None => break,
            };
            order.push((v, color));
            uncolored[v / 64] &= !(1u64 << (v % 64));
            avail[v / 64] &= !(1u64 << (v % 64));
            for (a, n) in avail.iter_mut().zip(adj[v].iter()) {
                *a &= !n;
            }
        }
    }
    // Branch in decreasing colour order.
    let mut remaining = candidates.to_vec();
    for &(v, c) in order.iter().rev() {
        if size + c <= *best {
            return true;
        }
        let mut next: Vec<u64> = remaining
            .iter()
            .zip(adj[v].iter())
            .map(|(r, a)| r & a)
            .collect();
        next[v / 64] &= !(1u64 << (v % 64));
        if !expand(adj, &next, size + 1, best, nodes) {
            return false;
        }
        remaining[v / 64] &= !(1u64 << (v % 64));
    }
    true
}

/// Result of a guessing-number evaluation.
#[derive(Debug, Clone)]
pub struct GuessResult {
    /// log base M of the maximal diversified count; negative infinity when
    /// the count is zero.
    pub value: f64,
    /// The maximal (or best-found) diversified count.
    pub count: u128,
    /// True when the count is an exact maximum.
    pub exact: bool,
    /// The logarithm base: the alphabet size, or the weighted geometric mean
    /// of per-vertex alphabet sizes in the multi-sorted case.
    pub base: f64,
    /// The diversified system the count refers to.
    pub diversified: System,
}

/// Normalised guessing value at uniform alphabet size `n`: the system is
/// normalised and diversified internally and its maximal code size taken
/// log base `n`.
pub fn guess_at_n(sys: &System, n: usize, params: &SearchParams) -> Result<GuessResult, SearchError> {
    if n < 2 {
        return Err(SearchError::BaseTooSmall);
    }
    let sizes = DomainSizes::uniform(sys, n);
    guess_at_sizes(sys, &sizes, params)
}

/// Multi-sorted guessing value: log base the weighted geometric mean of the
/// diversified system's per-variable alphabet sizes.
pub fn guess_at_sizes(
    sys: &System,
    sizes: &DomainSizes,
    params: &SearchParams,
) -> Result<GuessResult, SearchError> {
    sizes.check_for(sys).map_err(SemanticsError::from)?;
    if sizes.0.values().any(|&n| n < 2) {
        return Err(SearchError::BaseTooSmall);
    }
    let (norm, _) = normalize(sys);
    let (div, _) = diversify(&norm).map_err(|e| SearchError::NotDiversified(e.to_string()))?;
    let (count, exact) = match code_max_exact(&div, sizes, CODE_EXACT_CAP)? {
        Some(c) => (c, true),
        None => {
            let result = anneal_core(&div, sizes, params, Objective::Count)?;
            (result.best_count, false)
        }
    };
    let log_m = div
        .vars
        .iter()
        .map(|v| (sizes.get(&v.sort).expect("checked") as f64).ln())
        .sum::<f64>()
        / div.vars.len().max(1) as f64;
    let value = if count == 0 {
        f64::NEG_INFINITY
    } else {
        (count as f64).ln() / log_m
    };
    Ok(GuessResult {
        value,
        count,
        exact,
        base: log_m.exp(),
        diversified: div,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{gen, ExampleId};
    use crate::semantics::verify_witness;

    fn exhaustive(sys: &System, n: usize) -> SearchResult {
        let sizes = DomainSizes::uniform(sys, n);
        exhaustive_max(sys, &sizes, &SearchParams::default()).unwrap()
    }

    #[test]
    fn steiner_exhaustive_small_n() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        assert_eq!(exhaustive(&sys, 1).best_count, 1);
        assert_eq!(exhaustive(&sys, 2).best_count, 3);
        assert_eq!(exhaustive(&sys, 3).best_count, 9);
    }

    #[test]
    fn witness_always_verifies() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        let r = exhaustive(&sys, 3);
        assert!(verify_witness(&sys, &r.witness, r.best_count));
        assert!(r.exhausted);
    }

    #[test]
    fn exhaustive_is_deterministic_across_thread_counts() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        let sizes = DomainSizes::uniform(&sys, 2);
        let mut p1 = SearchParams::default();
        p1.threads = 1;
        let mut p4 = SearchParams::default();
        p4.threads = 4;
        let a = exhaustive_max(&sys, &sizes, &p1).unwrap();
        let b = exhaustive_max(&sys, &sizes, &p4).unwrap();
        assert_eq!(a.best_count, b.best_count);
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn formulation2_exhaustive_n2_is_128() {
        let sys = gen(&ExampleId::UnsolvableV2).unwrap();
        let r = exhaustive(&sys, 2);
        assert_eq!(r.best_count, 128);
    }

    #[test]
    fn two_node_multisort_maxima() {
        let sys = gen(&ExampleId::TwoNodeMultisort).unwrap();
        for (n1, n2, want) in [(2usize, 3usize, 2u128), (3, 2, 2), (2, 2, 2)] {
            let mut sizes = DomainSizes::default();
            sizes.set("S1", n1);
            sizes.set("S2", n2);
            let r = exhaustive_max(&sys, &sizes, &SearchParams::default()).unwrap();
            assert_eq!(r.best_count, want, "sizes ({n1},{n2})");
        }
    }

    #[test]
    fn budget_exceeded_directs_to_anneal() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        let sizes = DomainSizes::uniform(&sys, 4);
        let err = exhaustive_max(&sys, &sizes, &SearchParams::default()).unwrap_err();
        assert!(matches!(err, SearchError::BudgetExceeded { .. }));
    }

    #[test]
    fn anneal_reaches_13_on_steiner_n4() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        let sizes = DomainSizes::uniform(&sys, 4);
        let mut params = SearchParams::default();
        params.mode = SearchMode::Anneal;
        let r = anneal_max(&sys, &sizes, &params).unwrap();
        assert!(r.best_count >= 13, "anneal found only {}", r.best_count);
        assert!(verify_witness(&sys, &r.witness, r.best_count));
        assert!(!r.exhausted);
    }

    #[test]
    fn anneal_is_reproducible() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        let sizes = DomainSizes::uniform(&sys, 4);
        let mut params = SearchParams::default();
        params.steps = 2000;
        params.restarts = 2;
        let a = anneal_max(&sys, &sizes, &params).unwrap();
        let b = anneal_max(&sys, &sizes, &params).unwrap();
        assert_eq!(a.best_count, b.best_count);
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn size_one_domains() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        let r = exhaustive(&sys, 1);
        assert_eq!(r.best_count, 1);
        let c5 = gen(&ExampleId::C5).unwrap();
        let r = exhaustive(&c5, 1);
        // x != z cannot hold on one element.
        assert_eq!(r.best_count, 0);
    }

    #[test]
    fn code_max_matches_exhaustive_on_diversified_systems() {
        // (example, sizes n) pairs kept small enough for table enumeration.
        let cases = [
            (ExampleId::TwoNodeMultisort, 2usize),
            (ExampleId::TwoNodeMultisort, 3),
            (ExampleId::NetworkCoding, 2),
        ];
        for (id, n) in cases {
            let sys = gen(&id).unwrap();
            let (norm, _) = normalize(&sys);
            let (div, _) = diversify(&norm).unwrap();
            let sizes = DomainSizes::uniform(&div, n);
            let exact = code_max_exact(&div, &sizes, CODE_EXACT_CAP)
                .unwrap()
                .expect("within cap");
            let brute = exhaustive_max(&div, &sizes, &SearchParams::default())
                .unwrap()
                .best_count;
            assert_eq!(exact, brute, "{id:?} at n={n}");
        }
        // A diversified system with a disequality crossing its equations.
        let sys = crate::dsl::parse(
            "sort P\nfun f1 : P P -> P\nfun g2 : P -> P\nvar x y z w : P\n\
             eq f1(x,y) = z\neq g2(z) = w\nneq x != w\n",
        )
        .unwrap();
        let sizes = DomainSizes::uniform(&sys, 2);
        let exact = code_max_exact(&sys, &sizes, CODE_EXACT_CAP)
            .unwrap()
            .expect("within cap");
        let brute = exhaustive_max(&sys, &sizes, &SearchParams::default())
            .unwrap()
            .best_count;
        assert_eq!(exact, brute);
    }

    #[test]
    fn guess_two_vertex_cycle_is_one() {
        let sys = gen(&ExampleId::TwoNodeMultisort).unwrap();
        let g = guess_at_n(&sys, 3, &SearchParams::default()).unwrap();
        assert!(g.exact);
        assert_eq!(g.count, 3);
        assert!((g.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn guess_unsolvable_variant_is_two() {
        let sys = gen(&ExampleId::UnsolvableV1).unwrap();
        let g = guess_at_n(&sys, 2, &SearchParams::default()).unwrap();
        assert!(g.exact);
        assert_eq!(g.count, 4);
        assert!((g.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nand_dispersion_exhaustive_with_pinned_constant() {
        let sys = gen(&ExampleId::NandDispersion).unwrap();
        let sizes = DomainSizes::uniform(&sys, 2);
        let mut params = SearchParams::default();
        params.fixed_tables.insert("c".into(), vec![1]);
        let r = dispersion_max(&sys, &sizes, &params).unwrap();
        assert_eq!(r.best_count, 8);
        assert_eq!(r.witness.tables["S"].values, vec![1, 1, 1, 0], "NAND");
    }

    #[test]
    fn trivial_dispersion_examples() {
        let sys = crate::dsl::parse("sort P\nvar x y : P\nout x y\nneq x != y\n").unwrap();
        let sizes = DomainSizes::uniform(&sys, 3);
        let r = dispersion_max(&sys, &sizes, &SearchParams::default()).unwrap();
        assert_eq!(r.best_count, 6);
    }
}

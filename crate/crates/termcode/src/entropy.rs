//! Shannon-polymatroid upper bound on the normalised guessing number.
//!
//! For a dependency graph the bound is the optimum of an exact-rational
//! linear program over one unknown per nonempty vertex subset: elemental
//! monotonicity and submodularity inequalities cut out the Shannon outer
//! bound, every in-edge-determined vertex contributes a functional equality
//! `h(N u {v}) = h(N)`, constant-determined vertices are pinned to zero, and
//! singletons are capped by their alphabet's log-size. The optimum
//! upper-bounds the guessing value at every alphabet size; non-Shannon
//! inequalities are not included, so the bound can be loose on adversarial
//! graphs.
//!
//! Capacities are kept rational by working in units of `log2(b)` for a
//! common base `b`: alphabet sizes must all be powers of one integer
//! (uniform sizes are the `b = n` special case with every capacity 1, where
//! the optimum is directly the normalised bound). Incommensurable sizes are
//! rejected.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::depgraph::DepGraph;
use crate::ir::DomainSizes;
use crate::simplex::{self, rat, Rat, StandardLp};

/// Cap on the ground-set size; the LP has one unknown per nonempty subset.
pub const MAX_VERTICES: usize = 12;

/// One linear constraint over subset unknowns, each written as
/// `sum of coeff * h(subset)` against zero or a capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpConstraint {
    /// `expr >= 0`
    Ge(Vec<(u32, i64)>),
    /// `expr == 0`
    Eq(Vec<(u32, i64)>),
    /// `h(mask) <= capacity` (in units)
    Cap(u32, Rat),
}

/// The entropy linear program of a dependency graph: unknowns `h(S)` for
/// nonempty `S` over the ground set, objective `h(V)`.
#[derive(Debug, Clone)]
pub struct EntropyLp {
    pub vertices: Vec<String>,
    pub constraints: Vec<LpConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntropyError {
    #[error("{count} vertices exceed the {MAX_VERTICES}-vertex cap")]
    VertexCap { count: usize },
    #[error("no size given for sort {0}")]
    MissingSize(String),
    #[error("sort {0} has size {1}; the bound needs every size >= 2")]
    DegenerateSize(String, usize),
    #[error("sizes {0:?} are not all powers of a common integer base; choose commensurable sizes")]
    Incommensurable(Vec<usize>),
    #[error("linear program failed: {0}")]
    Lp(#[from] simplex::LpError),
}

impl EntropyLp {
    /// Builds the full program for `graph` with singleton capacities
    /// `caps[v]` (in units).
    pub fn build(graph: &DepGraph, caps: &[Rat]) -> EntropyLp {
        let v = graph.vertices.len();
        assert_eq!(caps.len(), v);
        let full: u32 = if v == 32 { u32::MAX } else { (1u32 << v) - 1 };
        let mut constraints = Vec::new();
        // Elemental monotonicity: h(V) >= h(V minus i).
        for i in 0..v {
            let rest = full & !(1 << i);
            if rest == 0 {
                continue; // h(V) >= h(empty) is implied by nonnegativity
            }
            constraints.push(LpConstraint::Ge(vec![(full, 1), (rest, -1)]));
        }
        // Elemental submodularity: h(S+i) + h(S+j) >= h(S+i+j) + h(S).
        for i in 0..v {
            for j in (i + 1)..v {
                let pair = (1u32 << i) | (1 << j);
                let others = full & !pair;
                let mut s = others;
                loop {
                    let si = s | (1 << i);
                    let sj = s | (1 << j);
                    let sij = s | pair;
                    let mut expr = vec![(si, 1i64), (sj, 1), (sij, -1)];
                    if s != 0 {
                        expr.push((s, -1));
                    }
                    constraints.push(LpConstraint::Ge(expr));
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & others;
                }
            }
        }
        // Functional determination; a self-loop leaves the vertex
        // unconstrained, which only relaxes the bound.
        for i in 0..v {
            if graph.constants_at.contains(&i) {
                constraints.push(LpConstraint::Eq(vec![(1 << i, 1)]));
            }
            if graph.has_self_loop(i) {
                continue;
            }
            let neighbors = graph.in_neighbors(i);
            if neighbors.is_empty() {
                continue;
            }
            let n_mask: u32 = neighbors.iter().fold(0, |m, u| m | (1 << u));
            constraints.push(LpConstraint::Eq(vec![
                (n_mask | (1 << i), 1),
                (n_mask, -1),
            ]));
        }
        // Capacities.
        for i in 0..v {
            constraints.push(LpConstraint::Cap(1 << i, caps[i].clone()));
        }
        EntropyLp {
            vertices: graph.vertices.iter().map(|(n, _)| n.clone()).collect(),
            constraints,
        }
    }
}

/// Exact optimum of an entropy program and the values that attain it.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub value: Rat,
    /// Nonempty subset mask -> optimal value (units).
    pub values: BTreeMap<u32, Rat>,
}

/// Maximises `h(V)` over the program with a deterministic Bland-rule
/// simplex. The program is feasible (all-zero) and bounded by capacities.
pub fn lp_maximize(program: &EntropyLp) -> Result<LpOutcome, EntropyError> {
    let v = program.vertices.len();
    let full: u32 = (1u32 << v) - 1;
    let var_of = |mask: u32| -> usize { (mask - 1) as usize };
    let num_vars = full as usize;
    let mut rows: Vec<(Vec<(usize, Rat)>, Rat)> = Vec::new();
    for c in &program.constraints {
        match c {
            LpConstraint::Ge(expr) => {
                let row: Vec<(usize, Rat)> =
                    expr.iter().map(|(m, c)| (var_of(*m), rat(-c))).collect();
                rows.push((row, Rat::zero()));
            }
            LpConstraint::Eq(expr) => {
                let pos: Vec<(usize, Rat)> =
                    expr.iter().map(|(m, c)| (var_of(*m), rat(*c))).collect();
                let neg: Vec<(usize, Rat)> =
                    expr.iter().map(|(m, c)| (var_of(*m), rat(-c))).collect();
                rows.push((pos, Rat::zero()));
                rows.push((neg, Rat::zero()));
            }
            LpConstraint::Cap(mask, cap) => {
                rows.push((vec![(var_of(*mask), rat(1))], cap.clone()));
            }
        }
    }
    let lp = StandardLp {
        num_vars,
        rows,
        objective: vec![(var_of(full), rat(1))],
    };
    let sol = simplex::maximize(&lp)?;
    let mut values = BTreeMap::new();
    for mask in 1..=full {
        values.insert(mask, sol.values[var_of(mask)].clone());
    }
    Ok(LpOutcome {
        value: sol.value,
        values,
    })
}

/// The Shannon bound and its certificate.
#[derive(Debug, Clone)]
pub struct BoundResult {
    /// Optimal joint entropy in units of `log2(unit_base)`.
    pub joint_units: Rat,
    /// Common integer base of all vertex alphabet sizes.
    pub unit_base: usize,
    /// Exact joint entropy in bits, available when the base is a power of 2.
    pub max_joint_entropy_bits: Option<Rat>,
    /// `joint / log2(M)` where `M` is the weighted geometric mean of the
    /// vertex alphabet sizes; always exactly rational.
    pub normalised_bound: Rat,
    /// Optimal subset values (units) over the full vertex set.
    pub certificate: Vec<(Vec<String>, Rat)>,
}

impl BoundResult {
    pub fn normalised_bound_f64(&self) -> f64 {
        self.normalised_bound.to_f64().unwrap_or(f64::NAN)
    }

    pub fn joint_bits_f64(&self) -> f64 {
        self.joint_units.to_f64().unwrap_or(f64::NAN) * (self.unit_base as f64).log2()
    }
}

/// Smallest integer base `b >= 2` with every size a power of `b`.
fn common_base(sizes: &[usize]) -> Option<(usize, Vec<u32>)> {
    let min = *sizes.iter().min()?;
    'base: for b in 2..=min {
        let mut exps = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let mut e = 0u32;
            let mut acc = 1usize;
            while acc < n {
                acc = acc.checked_mul(b)?;
                e += 1;
            }
            if acc != n {
                continue 'base;
            }
            exps.push(e);
        }
        return Some((b, exps));
    }
    None
}

enum Peel {
    /// Determined by in-neighbours (mask over full indexing).
    Functional(usize, u32),
    /// Constant-determined.
    Constant(usize),
    /// Entirely unconstrained; contributes its capacity.
    Free(usize),
}

/// Upper limit on the total vertex count: the full certificate has one
/// entry per subset.
pub const MAX_TOTAL_VERTICES: usize = 20;

/// Exact-rational Shannon bound for a dependency graph with the given
/// alphabet sizes. Distinctness pairs are ignored: they only shrink codes,
/// so the bound stays valid.
///
/// The graph is split into weakly connected components first; the joint
/// optimum is the sum of the component optima (subadditivity one way, the
/// direct sum of component-optimal polymatroids the other). Each component
/// must fit the per-program vertex cap.
pub fn shannon_bound(g: &DepGraph, sizes: &DomainSizes) -> Result<BoundResult, EntropyError> {
    let v = g.vertices.len();
    if v > MAX_TOTAL_VERTICES {
        return Err(EntropyError::VertexCap { count: v });
    }
    let vertex_sizes: Vec<usize> = g
        .vertices
        .iter()
        .map(|(name, sort)| {
            let n = sizes
                .get(sort)
                .ok_or_else(|| EntropyError::MissingSize(sort.clone()))?;
            if n < 2 {
                return Err(EntropyError::DegenerateSize(name.clone(), n));
            }
            Ok(n)
        })
        .collect::<Result<_, _>>()?;
    if v == 0 {
        return Ok(BoundResult {
            joint_units: Rat::zero(),
            unit_base: 2,
            max_joint_entropy_bits: Some(Rat::zero()),
            normalised_bound: Rat::zero(),
            certificate: vec![],
        });
    }
    let (base, exps) = common_base(&vertex_sizes)
        .ok_or_else(|| EntropyError::Incommensurable(vertex_sizes.clone()))?;
    let caps: Vec<Rat> = exps.iter().map(|e| rat(*e as i64)).collect();

    // Weakly connected components.
    let mut comp = vec![usize::MAX; v];
    let mut count = 0usize;
    for start in 0..v {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = count;
        while let Some(u) = stack.pop() {
            for &(a, b) in &g.edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == u && comp[y] == usize::MAX {
                        comp[y] = count;
                        stack.push(y);
                    }
                }
            }
        }
        count += 1;
    }

    let mut joint_units = Rat::zero();
    let mut cert: BTreeMap<u32, Rat> = BTreeMap::new();
    cert.insert(0, Rat::zero());
    for c in 0..count {
        let members: Vec<usize> = (0..v).filter(|&i| comp[i] == c).collect();
        if members.len() > MAX_VERTICES {
            return Err(EntropyError::VertexCap {
                count: members.len(),
            });
        }
        let sub = subgraph(g, &members);
        let sub_caps: Vec<Rat> = members.iter().map(|&i| caps[i].clone()).collect();
        let (units, sub_cert) = bound_units(&sub, &sub_caps)?;
        joint_units += units;
        // Direct sum: merge the component certificate into the running one.
        let remap = |mask: u32| -> u32 {
            let mut out = 0u32;
            for (j, &i) in members.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    out |= 1 << i;
                }
            }
            out
        };
        let mut merged = BTreeMap::new();
        for (s, sv) in &cert {
            for (t, tv) in &sub_cert {
                merged.insert(s | remap(*t), sv.clone() + tv.clone());
            }
        }
        cert = merged;
    }

    debug_assert_eq!(cert[&(((1u64 << v) - 1) as u32)], joint_units);
    // normalised = joint*log2(b) / ((sum exps / v) * log2(b)).
    let exp_sum: i64 = exps.iter().map(|e| *e as i64).sum();
    let normalised_bound = joint_units.clone() * rat(v as i64) / rat(exp_sum);
    let max_joint_entropy_bits = if base.is_power_of_two() {
        let k = base.trailing_zeros() as i64;
        Some(joint_units.clone() * rat(k))
    } else {
        None
    };
    let certificate = cert
        .iter()
        .filter(|(m, _)| **m != 0)
        .map(|(m, r)| {
            let mut names: Vec<String> = (0..v)
                .filter(|i| m & (1 << i) != 0)
                .map(|i| g.vertices[i].0.clone())
                .collect();
            names.sort();
            (names, r.clone())
        })
        .collect();
    Ok(BoundResult {
        joint_units,
        unit_base: base,
        max_joint_entropy_bits,
        normalised_bound,
        certificate,
    })
}

/// Joint-entropy optimum (in units) of one connected graph, with the
/// optimal subset values over its own vertex indexing.
fn bound_units(g: &DepGraph, caps: &[Rat]) -> Result<(Rat, BTreeMap<u32, Rat>), EntropyError> {
    let v = g.vertices.len();
    // Peel sinks: a vertex with no out-edges never feeds another constraint,
    // and its own contribution to the joint optimum is known exactly (zero
    // if determined, its capacity if free).
    let mut remaining: Vec<bool> = vec![true; v];
    let mut peeled: Vec<Peel> = Vec::new();
    let mut contribution = Rat::zero();
    loop {
        let next = (0..v).find(|&i| {
            remaining[i]
                && !g
                    .edges
                    .iter()
                    .any(|(s, t)| *s == i && remaining[*t] && s != t)
                && !g.has_self_loop(i)
        });
        let Some(i) = next else { break };
        remaining[i] = false;
        if g.constants_at.contains(&i) {
            peeled.push(Peel::Constant(i));
        } else {
            let n_mask: u32 = g
                .in_neighbors(i)
                .iter()
                .filter(|u| remaining[**u])
                .fold(0, |m, u| m | (1 << u));
            if n_mask == 0 {
                contribution += caps[i].clone();
                peeled.push(Peel::Free(i));
            } else {
                peeled.push(Peel::Functional(i, n_mask));
            }
        }
    }

    let kept: Vec<usize> = (0..v).filter(|&i| remaining[i]).collect();
    // Solve the LP on the remaining subgraph, then reconstruct optimal
    // values over the full vertex set.
    let (lp_value, mut cert): (Rat, BTreeMap<u32, Rat>) = if kept.is_empty() {
        (Rat::zero(), BTreeMap::new())
    } else {
        let sub = subgraph(g, &kept);
        let sub_caps: Vec<Rat> = kept.iter().map(|&i| caps[i].clone()).collect();
        let program = EntropyLp::build(&sub, &sub_caps);
        let outcome = lp_maximize(&program)?;
        // Re-express subset masks in full-graph indexing.
        let remap = |mask: u32| -> u32 {
            let mut out = 0u32;
            for (j, &i) in kept.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    out |= 1 << i;
                }
            }
            out
        };
        let values = outcome
            .values
            .into_iter()
            .map(|(m, r)| (remap(m), r))
            .collect();
        (outcome.value, values)
    };
    cert.insert(0, Rat::zero());

    // Extend the certificate over peeled vertices, most recently peeled
    // first, so each extension sees its in-neighbours already present.
    for p in peeled.iter().rev() {
        let (vertex, rule): (usize, Box<dyn Fn(u32, &BTreeMap<u32, Rat>) -> Rat>) = match p {
            Peel::Functional(i, n_mask) => {
                let n_mask = *n_mask;
                (
                    *i,
                    Box::new(move |s, cert| cert[&(s | n_mask)].clone()),
                )
            }
            Peel::Constant(i) => (*i, Box::new(|s, cert: &BTreeMap<u32, Rat>| cert[&s].clone())),
            Peel::Free(i) => {
                let cap = caps[*i].clone();
                (
                    *i,
                    Box::new(move |s, cert: &BTreeMap<u32, Rat>| cert[&s].clone() + cap.clone()),
                )
            }
        };
        let existing: Vec<u32> = cert.keys().copied().collect();
        for s in existing {
            let value = rule(s, &cert);
            cert.insert(s | (1 << vertex), value);
        }
    }

    let joint_units = lp_value + contribution;
    debug_assert_eq!(cert[&(((1u64 << v) - 1) as u32)], joint_units);
    Ok((joint_units, cert))
}

fn subgraph(g: &DepGraph, kept: &[usize]) -> DepGraph {
    let index_of: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(j, i)| (*i, j)).collect();
    DepGraph {
        vertices: kept.iter().map(|&i| g.vertices[i].clone()).collect(),
        edges: g
            .edges
            .iter()
            .filter_map(|(s, t)| {
                Some((*index_of.get(s)?, *index_of.get(t)?))
            })
            .collect(),
        constants_at: g
            .constants_at
            .iter()
            .filter_map(|i| index_of.get(i).copied())
            .collect(),
        distinctness: g
            .distinctness
            .iter()
            .filter_map(|(a, b)| Some((*index_of.get(a)?, *index_of.get(b)?)))
            .collect(),
    }
}

/// Canonical pipeline: normalise, diversify, build the graph, and bound.
pub fn bound_for_system(
    sys: &crate::ir::System,
    sizes: &DomainSizes,
) -> Result<BoundResult, EntropyError> {
    let (norm, _) = crate::normalize::normalize(sys);
    let (div, _) = crate::normalize::diversify(&norm).expect("normalized system is flat");
    let g = crate::depgraph::build(&div).expect("diversified system is flat");
    shannon_bound(&g, sizes)
}

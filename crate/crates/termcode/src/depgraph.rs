//! Variable dependency graph of a flat system.
//!
//! For each equation `f(x_i1,..,x_ik) = x_j` the graph has directed edges
//! `x_ip -> x_j`; an equation `c = x_j` instead marks `x_j` as
//! constant-determined. Disequalities never add edges; they are tracked as a
//! separate distinctness set on the vertices.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ir::{System, Term};
use crate::normalize::is_flat;

/// Directed graph on the variables of a flat system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    /// (variable name, sort), in declaration order.
    pub vertices: Vec<(String, String)>,
    /// Directed edges by vertex index; multi-edges collapse to one.
    pub edges: BTreeSet<(usize, usize)>,
    /// Vertices defined by a constant equation `c = x_j`.
    pub constants_at: BTreeSet<usize>,
    /// Unordered distinctness pairs, stored with the smaller index first.
    pub distinctness: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("dependency graph requires a flat system; run normalize first")]
    NotFlat,
}

impl DepGraph {
    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|(n, _)| n == name)
    }

    /// In-neighbours of `v` (union over all equations), excluding none.
    pub fn in_neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|(_, t)| *t == v)
            .map(|(s, _)| *s)
            .collect()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(s, _)| *s == v).count()
    }

    pub fn has_self_loop(&self, v: usize) -> bool {
        self.edges.contains(&(v, v))
    }
}

/// Builds the dependency graph of a flat system.
pub fn build(sys: &System) -> Result<DepGraph, GraphError> {
    if !is_flat(sys) {
        return Err(GraphError::NotFlat);
    }
    let vertices: Vec<(String, String)> = sys
        .vars
        .iter()
        .map(|v| (v.name.clone(), v.sort.clone()))
        .collect();
    let index = |name: &str| -> usize {
        vertices
            .iter()
            .position(|(n, _)| n == name)
            .expect("flat system references declared variables")
    };
    let mut g = DepGraph {
        vertices: vertices.clone(),
        edges: BTreeSet::new(),
        constants_at: BTreeSet::new(),
        distinctness: BTreeSet::new(),
    };
    for c in &sys.equations {
        let target = match &c.rhs {
            Term::Var(v) => index(v),
            _ => unreachable!("flat equation"),
        };
        match &c.lhs {
            Term::App(_, args) if args.is_empty() => {
                g.constants_at.insert(target);
            }
            Term::App(_, args) => {
                for a in args {
                    match a {
                        Term::Var(v) => {
                            g.edges.insert((index(v), target));
                        }
                        _ => unreachable!("flat arguments"),
                    }
                }
            }
            _ => unreachable!("flat equation"),
        }
    }
    for c in &sys.disequalities {
        if let (Term::Var(a), Term::Var(b)) = (&c.lhs, &c.rhs) {
            let (i, j) = (index(a), index(b));
            g.distinctness.insert((i.min(j), i.max(j)));
        }
    }
    Ok(g)
}

/// Deterministic DOT rendering. Distinctness pairs appear as dashed
/// undirected decoration edges labelled with the disequality sign.
pub fn to_dot(g: &DepGraph) -> String {
    let mut out = String::new();
    writeln!(out, "digraph depgraph {{").unwrap();
    for (name, sort) in &g.vertices {
        writeln!(out, "  \"{name}\" [label=\"{name}:{sort}\"];").unwrap();
    }
    for (u, v) in &g.edges {
        writeln!(
            out,
            "  \"{}\" -> \"{}\";",
            g.vertices[*u].0, g.vertices[*v].0
        )
        .unwrap();
    }
    for (u, v) in &g.distinctness {
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [dir=none, style=dashed, label=\"≠\"];",
            g.vertices[*u].0, g.vertices[*v].0
        )
        .unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

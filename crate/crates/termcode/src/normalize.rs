//! Normalisation (flattening) and diversification passes.
//!
//! Normalisation rewrites every equation to the shape `f(x_i1,..,x_ik) = x_j`
//! or `c = x_j` and every disequality to an atomic `x_i != x_j`, introducing
//! fresh auxiliary variables for nested subterms. Identical compound subterms
//! anywhere in the system share one auxiliary variable. Solution sets are in
//! bijection with the input's (projection onto the original variables).
//!
//! Diversification then gives each flat equation its own fresh function
//! symbol, after first deduplicating equations with identical left-hand
//! sides. Disequalities are carried unchanged.

use std::collections::HashMap;

use thiserror::Error;

use crate::ir::{Constraint, FuncSymbol, System, Term, VarDecl};

/// Record of what normalisation did: auxiliary definitions and variable merges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarMap {
    /// Fresh auxiliary variable -> its defining flat application.
    pub aux_defs: Vec<(String, Term)>,
    /// Merged variable -> surviving variable. Merged variables are absent
    /// from the output system.
    pub merged: Vec<(String, String)>,
}

/// Record of diversification: new symbol -> (original symbol, equation index).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolMap {
    pub entries: Vec<SymbolRenaming>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolRenaming {
    pub new_name: String,
    pub original: String,
    pub equation_index: usize,
}

impl SymbolMap {
    /// The diversified symbol introduced for equation `i`.
    pub fn symbol_for_equation(&self, i: usize) -> Option<&SymbolRenaming> {
        self.entries.iter().find(|e| e.equation_index == i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("diversify requires a flat system; run normalize first")]
    NotFlat,
}

/// True iff every equation has the shape `f(vars) = var` (or `c = var`) and
/// every disequality is atomic between variables.
pub fn is_flat(sys: &System) -> bool {
    let flat_eq = |c: &Constraint| match (&c.lhs, &c.rhs) {
        (Term::App(_, args), Term::Var(_)) => args.iter().all(Term::is_var),
        _ => false,
    };
    let atomic = |c: &Constraint| c.lhs.is_var() && c.rhs.is_var();
    sys.equations.iter().all(flat_eq) && sys.disequalities.iter().all(atomic)
}

/// Union-find over variable names keyed by declaration index, with the
/// earlier-declared variable surviving every merge.
struct Merges {
    /// parent[i] points toward the representative; representative has parent[i] == i.
    parent: Vec<usize>,
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Merges {
    fn new() -> Merges {
        Merges {
            parent: Vec::new(),
            names: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.parent.push(i);
        self.index.insert(name.to_string(), i);
        i
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn resolve(&mut self, name: &str) -> String {
        let i = self.intern(name);
        let r = self.find(i);
        self.names[r].clone()
    }

    /// Merges the later-interned id into the earlier-interned one.
    fn union(&mut self, a: &str, b: &str) {
        let (ia, ib) = (self.intern(a), self.intern(b));
        let (ra, rb) = (self.find(ia), self.find(ib));
        if ra == rb {
            return;
        }
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop] = keep;
    }
}

struct Flattener {
    sys: System,
    merges: Merges,
    /// Flat application (with resolved variable arguments) -> naming variable.
    shared: HashMap<Term, String>,
    aux_counter: usize,
    var_map: VarMap,
    out_equations: Vec<Constraint>,
    out_disequalities: Vec<Constraint>,
}

impl Flattener {
    fn fresh_aux(&mut self, sort: &str) -> String {
        loop {
            self.aux_counter += 1;
            let name = format!("_a{}", self.aux_counter);
            if self.sys.var(&name).is_none() && self.sys.func(&name).is_none() {
                self.sys.vars.push(VarDecl {
                    name: name.clone(),
                    sort: sort.to_string(),
                });
                return name;
            }
        }
    }

    fn resolve_var(&mut self, name: &str) -> String {
        self.merges.resolve(name)
    }

    /// Flattens a term to a variable name, emitting defining equations for
    /// each compound subterm not already shared.
    fn term_to_var(&mut self, t: &Term) -> String {
        match t {
            Term::Var(v) => self.resolve_var(v),
            Term::App(_, _) => {
                let flat = self.flatten_app(t);
                if let Some(existing) = self.shared.get(&flat) {
                    return existing.clone();
                }
                let sort = crate::ir::term_sort(&flat, &self.sys)
                    .expect("validated system has typed subterms");
                let aux = self.fresh_aux(&sort);
                self.shared.insert(flat.clone(), aux.clone());
                self.var_map.aux_defs.push((aux.clone(), flat.clone()));
                self.out_equations
                    .push(Constraint::eq(flat, Term::Var(aux.clone())));
                aux
            }
        }
    }

    /// Rewrites an application so all its arguments are (resolved) variables.
    fn flatten_app(&mut self, t: &Term) -> Term {
        match t {
            Term::Var(_) => unreachable!("flatten_app called on a variable"),
            Term::App(f, args) => {
                let args = args
                    .iter()
                    .map(|a| Term::Var(self.term_to_var(a)))
                    .collect();
                Term::App(f.clone(), args)
            }
        }
    }

    fn equation(&mut self, c: &Constraint) {
        match (&c.lhs, &c.rhs) {
            (Term::Var(a), Term::Var(b)) => {
                let (ra, rb) = (self.resolve_var(a), self.resolve_var(b));
                if ra != rb {
                    self.merges.union(&ra, &rb);
                }
            }
            (Term::App(_, _), Term::Var(v)) => {
                let flat = self.flatten_app(&c.lhs);
                let v = self.resolve_var(v);
                self.register_defining(&flat, &v);
                self.out_equations.push(Constraint::eq(flat, Term::Var(v)));
            }
            (Term::Var(v), Term::App(_, _)) => {
                let flat = self.flatten_app(&c.rhs);
                let v = self.resolve_var(v);
                self.register_defining(&flat, &v);
                self.out_equations.push(Constraint::eq(flat, Term::Var(v)));
            }
            (Term::App(_, _), Term::App(_, _)) => {
                let rhs_var = self.term_to_var(&c.rhs);
                let flat = self.flatten_app(&c.lhs);
                self.register_defining(&flat, &rhs_var);
                self.out_equations
                    .push(Constraint::eq(flat, Term::Var(rhs_var)));
            }
        }
    }

    /// An equation `f(vars) = v` names the subterm `f(vars)`: later
    /// occurrences of the same compound subterm reuse `v`.
    fn register_defining(&mut self, flat: &Term, v: &str) {
        self.shared
            .entry(flat.clone())
            .or_insert_with(|| v.to_string());
    }

    fn disequality(&mut self, c: &Constraint) {
        let l = self.term_to_var(&c.lhs);
        let r = self.term_to_var(&c.rhs);
        self.out_disequalities
            .push(Constraint::neq(Term::Var(l), Term::Var(r)));
    }
}

/// Flattens `sys` into normal form, preserving the solution set up to the
/// bijection that adds/forgets auxiliary coordinates.
pub fn normalize(sys: &System) -> (System, VarMap) {
    let mut fl = Flattener {
        sys: sys.clone(),
        merges: Merges::new(),
        shared: HashMap::new(),
        aux_counter: 0,
        var_map: VarMap::default(),
        out_equations: Vec::new(),
        out_disequalities: Vec::new(),
    };
    // Intern declared variables first so union-find keeps the
    // earlier-declared one on every merge.
    for v in &sys.vars {
        fl.merges.intern(&v.name);
    }
    for c in &sys.equations {
        fl.equation(c);
    }
    for c in &sys.disequalities {
        fl.disequality(c);
    }

    let Flattener {
        sys: mut out,
        mut merges,
        var_map: mut map,
        out_equations,
        out_disequalities,
        ..
    } = fl;

    // Apply accumulated merges everywhere and drop merged variables.
    let mut rename: HashMap<String, String> = HashMap::new();
    for name in merges.names.clone() {
        let rep = merges.resolve(&name);
        if rep != name {
            rename.insert(name.clone(), rep.clone());
            map.merged.push((name, rep));
        }
    }
    let sub = |t: &Term| t.rename_vars(&rename);
    out.equations = out_equations
        .iter()
        .map(|c| Constraint::eq(sub(&c.lhs), sub(&c.rhs)))
        .collect();
    out.disequalities = out_disequalities
        .iter()
        .map(|c| Constraint::neq(sub(&c.lhs), sub(&c.rhs)))
        .collect();
    out.outputs = sys.outputs.iter().map(|t| t.rename_vars(&rename)).collect();
    out.vars.retain(|v| !rename.contains_key(&v.name));
    map.aux_defs = map
        .aux_defs
        .iter()
        .map(|(a, t)| (a.clone(), sub(t)))
        .collect();
    (out, map)
}

/// Deduplicates equations with identical left-hand sides (merging their
/// right-hand variables) and then replaces each remaining equation's function
/// symbol with a fresh one. Requires a flat system.
pub fn diversify(sys: &System) -> Result<(System, SymbolMap), NormalizeError> {
    if !is_flat(sys) {
        return Err(NormalizeError::NotFlat);
    }
    let mut out = sys.clone();

    // LHS dedup to a fixed point: merging right-hand variables can make
    // further left-hand sides identical.
    loop {
        let mut seen: HashMap<Term, String> = HashMap::new();
        let mut merge: Option<(String, String)> = None;
        for c in &out.equations {
            let rhs = match &c.rhs {
                Term::Var(v) => v.clone(),
                _ => unreachable!("flat equation"),
            };
            if let Some(first_rhs) = seen.get(&c.lhs) {
                if *first_rhs != rhs {
                    merge = Some((first_rhs.clone(), rhs));
                    break;
                }
            } else {
                seen.insert(c.lhs.clone(), rhs);
            }
        }
        let Some((keep_name, drop_name)) = merge else {
            break;
        };
        // Earlier-declared variable survives.
        let (keep, drop) = {
            let ki = out.var_index(&keep_name).expect("declared");
            let di = out.var_index(&drop_name).expect("declared");
            if ki <= di {
                (keep_name, drop_name)
            } else {
                (drop_name, keep_name)
            }
        };
        let mut rename = HashMap::new();
        rename.insert(drop.clone(), keep.clone());
        out.equations = out
            .equations
            .iter()
            .map(|c| Constraint::eq(c.lhs.rename_vars(&rename), c.rhs.rename_vars(&rename)))
            .collect();
        out.disequalities = out
            .disequalities
            .iter()
            .map(|c| Constraint::neq(c.lhs.rename_vars(&rename), c.rhs.rename_vars(&rename)))
            .collect();
        out.outputs = out
            .outputs
            .iter()
            .map(|t| t.rename_vars(&rename))
            .collect();
        out.vars.retain(|v| v.name != drop);
        // Drop equations that became exact duplicates.
        let mut kept = Vec::new();
        for c in out.equations.drain(..) {
            if !kept.contains(&c) {
                kept.push(c);
            }
        }
        out.equations = kept;
    }

    // Rename symbols per equation.
    let mut taken = out.all_names();
    let mut map = SymbolMap::default();
    let mut new_equations = Vec::new();
    for (i, c) in out.equations.iter().enumerate() {
        let (orig, args) = match &c.lhs {
            Term::App(f, args) => (f.clone(), args.clone()),
            _ => unreachable!("flat equation"),
        };
        let mut candidate = format!("{}{}", orig, i + 1);
        while taken.contains(&candidate) {
            candidate.push('_');
        }
        taken.insert(candidate.clone());
        let sym = out.func(&orig).expect("validated symbol").clone();
        out.funcs.push(FuncSymbol {
            name: candidate.clone(),
            arg_sorts: sym.arg_sorts,
            result_sort: sym.result_sort,
        });
        map.entries.push(SymbolRenaming {
            new_name: candidate.clone(),
            original: orig,
            equation_index: i,
        });
        new_equations.push(Constraint::eq(Term::App(candidate, args), c.rhs.clone()));
    }
    out.equations = new_equations;
    Ok((out, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{gen, ExampleId};
    use crate::ir::validate_system;

    fn constraint_set(cs: &[Constraint]) -> Vec<String> {
        let mut v: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn shared_aux_across_equations() {
        // {f(x,f(x,y))=y, f(f(x,y),y)=x} flattens with one shared aux z.
        let sys = crate::dsl::parse(
            "sort P\nfun f : P P -> P\nvar x y : P\neq f(x,f(x,y)) = y\neq f(f(x,y),y) = x\n",
        )
        .unwrap();
        let (norm, map) = normalize(&sys);
        assert!(is_flat(&norm));
        assert!(validate_system(&norm).ok());
        assert_eq!(map.aux_defs.len(), 1);
        assert_eq!(
            constraint_set(&norm.equations),
            vec!["f(_a1,y) = x", "f(x,_a1) = y", "f(x,y) = _a1"]
        );
    }

    #[test]
    fn compound_disequality_flattens_to_atomic() {
        let sys = crate::dsl::parse(
            "sort P\nfun f : P P -> P\nvar x y : P\nneq f(x,f(x,y)) != f(y,f(y,x))\n",
        )
        .unwrap();
        let (norm, _) = normalize(&sys);
        assert!(is_flat(&norm));
        assert_eq!(norm.equations.len(), 4);
        assert_eq!(norm.disequalities.len(), 1);
        assert_eq!(norm.disequalities[0].to_string(), "_a2 != _a4");
    }

    #[test]
    fn flat_system_is_a_fixed_point() {
        let sys =
            crate::dsl::parse("sort P\nfun f : P P -> P\nvar x y z : P\neq f(x,y) = z\n").unwrap();
        let (norm, map) = normalize(&sys);
        assert_eq!(norm, sys);
        assert_eq!(map, VarMap::default());
    }

    #[test]
    fn steiner_is_not_flat() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        assert!(!is_flat(&sys));
        let (norm, _) = normalize(&sys);
        assert!(is_flat(&norm));
    }

    #[test]
    fn empty_system_is_flat() {
        let sys = crate::dsl::parse("sort P\nvar x : P\n").unwrap();
        assert!(is_flat(&sys));
    }

    #[test]
    fn trivial_equality_merges_later_into_earlier() {
        let sys = crate::dsl::parse("sort P\nvar x y : P\neq y = x\n").unwrap();
        let (norm, map) = normalize(&sys);
        assert_eq!(norm.vars.len(), 1);
        assert_eq!(norm.vars[0].name, "x");
        assert_eq!(map.merged, vec![("y".to_string(), "x".to_string())]);
    }

    #[test]
    fn unsolvable_variant_normalizes_to_six_equations() {
        let sys = gen(&ExampleId::UnsolvableV1).unwrap();
        let (norm, map) = normalize(&sys);
        assert_eq!(map.aux_defs.len(), 2);
        assert_eq!(
            constraint_set(&norm.equations),
            vec![
                "f(_a1,_a2) = x",
                "f(_a1,y) = x",
                "f(_a2,_a1) = y",
                "f(x,_a2) = y",
                "f(x,y) = _a1",
                "f(y,x) = _a2",
            ]
        );
    }

    #[test]
    fn diversified_unsolvable_matches_f1_to_f6() {
        let sys = gen(&ExampleId::UnsolvableV1).unwrap();
        let (norm, _) = normalize(&sys);
        let (div, map) = diversify(&norm).unwrap();
        assert_eq!(map.entries.len(), 6);
        for (i, e) in map.entries.iter().enumerate() {
            assert_eq!(e.original, "f");
            assert_eq!(e.new_name, format!("f{}", i + 1));
        }
        assert!(validate_system(&div).ok());
    }

    #[test]
    fn c5_normalizes_and_diversifies_to_seven_equations() {
        let sys = gen(&ExampleId::C5).unwrap();
        let (norm, map) = normalize(&sys);
        assert_eq!(norm.equations.len(), 7);
        assert_eq!(map.aux_defs.len(), 4);
        assert_eq!(norm.disequalities.len(), 3);
        let (div, smap) = diversify(&norm).unwrap();
        assert_eq!(smap.entries.len(), 7);
        assert_eq!(div.equations[0].to_string(), "f1(z,x) = _a1");
        // Disequalities carried unchanged.
        assert_eq!(div.disequalities, norm.disequalities);
    }

    #[test]
    fn diversify_rejects_nested_input() {
        let sys = gen(&ExampleId::SteinerQuasigroup).unwrap();
        assert_eq!(diversify(&sys).unwrap_err(), NormalizeError::NotFlat);
    }

    #[test]
    fn diversify_dedups_identical_lhs() {
        let sys = crate::dsl::parse(
            "sort P\nfun f : P P -> P\nvar x y z w : P\neq f(x,y) = z\neq f(x,y) = w\n",
        )
        .unwrap();
        let (div, map) = diversify(&sys).unwrap();
        assert_eq!(div.equations.len(), 1);
        assert_eq!(map.entries.len(), 1);
        assert!(div.var("w").is_none(), "w merged into z");
    }

    #[test]
    fn distinct_symbols_diversify_isomorphically() {
        let sys = crate::dsl::parse(
            "sort P\nfun f : P -> P\nfun g : P -> P\nvar x y : P\neq f(x) = y\neq g(y) = x\n",
        )
        .unwrap();
        let (div, map) = diversify(&sys).unwrap();
        assert_eq!(map.entries[0].new_name, "f1");
        assert_eq!(map.entries[1].new_name, "g2");
        assert_eq!(div.equations.len(), 2);
    }

    #[test]
    fn normalize_idempotent_on_own_output() {
        for id in ExampleId::all() {
            let sys = gen(&id).unwrap();
            let (norm, _) = normalize(&sys);
            let (again, map) = normalize(&norm);
            assert_eq!(norm, again, "{id:?}");
            assert!(map.aux_defs.is_empty() && map.merged.is_empty(), "{id:?}");
        }
    }
}

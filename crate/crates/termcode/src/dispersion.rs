//! Dispersion exponents and the dispersion-to-term-coding reduction.
//!
//! The asymptotic dispersion exponent of a system with output terms is an
//! integer `D`: the maximum number of vertex-disjoint directed paths from
//! distinct input variables to distinct output terms in the flattened term
//! DAG, computed by max-flow with unit node capacities (node splitting).
//! `decide_threshold` answers whether the maximum image size eventually
//! exceeds every threshold strictly between `n^d` and `n^(d+1)`, which holds
//! exactly when `D >= d + 1`. A small growth oracle cross-checks `D` against
//! exact dispersion maxima at desk-scale alphabet sizes.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::ir::{
    validate_system, Constraint, DomainSizes, FuncSymbol, System, Term, VarDecl,
};
use crate::search::{self, SearchError, SearchParams};

/// Node in the flattened output-term DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DagNode {
    /// A declared variable (source layer).
    InputVar(String),
    /// A distinct compound subterm of some output (internal layer); carries
    /// the flattened term for display.
    Internal(String),
    /// One sink per distinct flattened output, named `out<i>` by first
    /// occurrence.
    OutputSink(String),
}

impl DagNode {
    pub fn name(&self) -> &str {
        match self {
            DagNode::InputVar(n) | DagNode::Internal(n) | DagNode::OutputSink(n) => n,
        }
    }
}

/// Flattened term DAG of a dispersion problem: edges run from arguments to
/// applications and from outputs' root nodes to their sinks. Every node has
/// unit capacity, sources included.
#[derive(Debug, Clone)]
pub struct TermDag {
    pub nodes: Vec<DagNode>,
    pub edges: Vec<(usize, usize)>,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
}

/// Integer dispersion exponent with its minimum-cut certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentResult {
    pub d: usize,
    /// Node names of a minimum vertex cut separating inputs from outputs.
    pub cut: Vec<String>,
    /// Set once a growth oracle has confirmed consistency.
    pub oracle_checked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispersionError {
    #[error("system declares no outputs; not a dispersion problem")]
    NoOutputs,
    #[error("system does not validate:\n{0}")]
    Invalid(String),
    #[error("inconsistent distinctness constraint {0} != {0}")]
    InconsistentDistinctness(String),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Builds the flattened term DAG of the system's outputs. Identical compound
/// subterms share one internal node and syntactically equal outputs share
/// one sink.
pub fn build_term_dag(sys: &System) -> Result<TermDag, DispersionError> {
    if sys.outputs.is_empty() {
        return Err(DispersionError::NoOutputs);
    }
    let mut dag = TermDag {
        nodes: Vec::new(),
        edges: Vec::new(),
        sources: Vec::new(),
        sinks: Vec::new(),
    };
    let mut var_node: HashMap<String, usize> = HashMap::new();
    for v in &sys.vars {
        let id = dag.nodes.len();
        dag.nodes.push(DagNode::InputVar(v.name.clone()));
        dag.sources.push(id);
        var_node.insert(v.name.clone(), id);
    }
    let mut term_node: HashMap<Term, usize> = HashMap::new();
    fn node_of(
        t: &Term,
        dag: &mut TermDag,
        var_node: &HashMap<String, usize>,
        term_node: &mut HashMap<Term, usize>,
    ) -> usize {
        match t {
            Term::Var(v) => var_node[v],
            Term::App(_, args) => {
                if let Some(&id) = term_node.get(t) {
                    return id;
                }
                let arg_nodes: Vec<usize> = args
                    .iter()
                    .map(|a| node_of(a, dag, var_node, term_node))
                    .collect();
                let id = dag.nodes.len();
                dag.nodes.push(DagNode::Internal(t.to_string()));
                for a in arg_nodes {
                    dag.edges.push((a, id));
                }
                term_node.insert(t.clone(), id);
                id
            }
        }
    }
    let mut sink_of: HashMap<Term, usize> = HashMap::new();
    for (i, out) in sys.outputs.iter().enumerate() {
        if sink_of.contains_key(out) {
            continue;
        }
        let root = node_of(out, &mut dag, &var_node, &mut term_node);
        let id = dag.nodes.len();
        dag.nodes.push(DagNode::OutputSink(format!("out{}", i + 1)));
        dag.edges.push((root, id));
        dag.sinks.push(id);
        sink_of.insert(out.clone(), id);
    }
    Ok(dag)
}

/// Max-flow with unit node capacities via node splitting; returns the flow
/// value and the cut node set (nodes whose split edge crosses the cut).
fn disjoint_paths(dag: &TermDag) -> (usize, Vec<usize>) {
    let n = dag.nodes.len();
    // Network nodes: 2*i is i_in, 2*i + 1 is i_out, then super source S and
    // sink T. Unit capacity on every split edge; edges between nodes and the
    // terminal edges are effectively uncapped.
    let s = 2 * n;
    let t = 2 * n + 1;
    let total = 2 * n + 2;
    let inf = (n + 2) as i64;
    let mut cap: HashMap<(usize, usize), i64> = HashMap::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    let add_edge = |adj: &mut Vec<Vec<usize>>,
                        cap: &mut HashMap<(usize, usize), i64>,
                        u: usize,
                        v: usize,
                        c: i64| {
        if !adj[u].contains(&v) {
            adj[u].push(v);
            adj[v].push(u);
        }
        *cap.entry((u, v)).or_insert(0) += c;
        cap.entry((v, u)).or_insert(0);
    };
    for i in 0..n {
        add_edge(&mut adj, &mut cap, 2 * i, 2 * i + 1, 1);
    }
    for &(u, v) in &dag.edges {
        add_edge(&mut adj, &mut cap, 2 * u + 1, 2 * v, inf);
    }
    for &src in &dag.sources {
        add_edge(&mut adj, &mut cap, s, 2 * src, inf);
    }
    for &sink in &dag.sinks {
        add_edge(&mut adj, &mut cap, 2 * sink + 1, t, inf);
    }

    // Edmonds-Karp.
    let mut flow = 0usize;
    loop {
        let mut parent: Vec<Option<usize>> = vec![None; total];
        parent[s] = Some(s);
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if parent[v].is_none() && cap[&(u, v)] > 0 {
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if parent[t].is_none() {
            // Residual-reachable set determines the cut.
            let cut = (0..n)
                .filter(|&i| parent[2 * i].is_some() && parent[2 * i + 1].is_none())
                .collect();
            return (flow, cut);
        }
        // Unit capacities on the split edges make each augmentation 1.
        let mut v = t;
        while v != s {
            let u = parent[v].expect("path exists");
            *cap.get_mut(&(u, v)).expect("edge") -= 1;
            *cap.get_mut(&(v, u)).expect("edge") += 1;
            v = u;
        }
        flow += 1;
    }
}

/// The integer dispersion exponent `D`: the maximum number of vertex-disjoint
/// directed paths from distinct input variables to distinct output terms.
/// Distinctness constraints are ignored after a consistency check: they cost
/// at most a constant factor and never change the exponent.
pub fn integer_exponent(sys: &System) -> Result<ExponentResult, DispersionError> {
    if sys.outputs.is_empty() {
        return Err(DispersionError::NoOutputs);
    }
    let report = validate_system(sys);
    if !report.ok() {
        return Err(DispersionError::Invalid(report.to_string()));
    }
    for c in &sys.disequalities {
        if c.lhs == c.rhs {
            return Err(DispersionError::InconsistentDistinctness(
                c.lhs.to_string(),
            ));
        }
    }
    let dag = build_term_dag(sys)?;
    let (d, cut) = disjoint_paths(&dag);
    Ok(ExponentResult {
        d,
        cut: cut.into_iter().map(|i| dag.nodes[i].name().to_string()).collect(),
        oracle_checked: false,
    })
}

/// True iff the maximum image size eventually exceeds every threshold in
/// `(n^d, o(n^(d+1)))`, that is, iff `D >= d + 1`.
pub fn decide_threshold(sys: &System, d: usize) -> Result<bool, DispersionError> {
    Ok(integer_exponent(sys)?.d >= d + 1)
}

/// One growth-oracle sample: the exact (or best-found) dispersion at size n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthPoint {
    pub n: usize,
    pub dispersion: u128,
    pub exact: bool,
}

/// Exact or best-found dispersion maxima at each uniform size, used to
/// cross-check the exponent.
pub fn growth_oracle(
    sys: &System,
    n_list: &[usize],
    params: &SearchParams,
) -> Result<Vec<GrowthPoint>, DispersionError> {
    if sys.outputs.is_empty() {
        return Err(DispersionError::NoOutputs);
    }
    let mut out = Vec::new();
    for &n in n_list {
        let sizes = DomainSizes::uniform(sys, n);
        let mut exhaustive_params = params.clone();
        exhaustive_params.mode = search::SearchMode::Exhaustive;
        match search::dispersion_max(sys, &sizes, &exhaustive_params) {
            Ok(r) => out.push(GrowthPoint {
                n,
                dispersion: r.best_count,
                exact: true,
            }),
            Err(SearchError::BudgetExceeded { .. }) => {
                let mut anneal_params = params.clone();
                anneal_params.mode = search::SearchMode::Anneal;
                let r = search::dispersion_max(sys, &sizes, &anneal_params)?;
                out.push(GrowthPoint {
                    n,
                    dispersion: r.best_count,
                    exact: false,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Checks that every sampled maximum respects `dispersion <= n^d`.
pub fn consistent_with_exponent(points: &[GrowthPoint], d: usize) -> bool {
    points
        .iter()
        .all(|p| p.dispersion <= (p.n as u128).pow(d as u32))
}

impl ExponentResult {
    /// Marks the exponent oracle-checked when the sampled growth agrees.
    pub fn with_oracle_check(mut self, points: &[GrowthPoint]) -> ExponentResult {
        self.oracle_checked = consistent_with_exponent(points, self.d);
        self
    }
}

/// Rewrites a dispersion problem as a plain term-coding system: fresh
/// variables name the outputs (`y_i = t_i`) and fresh decoders recover the
/// inputs (`x_i = h_i(y_1..y_s)`). Output-term distinctness moves onto the
/// `y` variables; the recorded projection lists the `y` variable names in
/// output order.
pub fn reduce_to_termcoding(sys: &System) -> Result<(System, Vec<String>), DispersionError> {
    if sys.outputs.is_empty() {
        return Err(DispersionError::NoOutputs);
    }
    let report = validate_system(sys);
    if !report.ok() {
        return Err(DispersionError::Invalid(report.to_string()));
    }
    let mut out = sys.clone();
    let mut taken = sys.all_names();
    let fresh = |prefix: &str, taken: &mut std::collections::HashSet<String>| -> String {
        let mut i = 0usize;
        loop {
            i += 1;
            let name = format!("_{prefix}{i}");
            if !taken.contains(&name) {
                taken.insert(name.clone());
                return name;
            }
        }
    };

    let out_sorts: Vec<String> = sys
        .outputs
        .iter()
        .map(|t| crate::ir::term_sort(t, sys).expect("validated outputs are typed"))
        .collect();
    // y_i = t_i
    let mut y_names = Vec::new();
    let mut term_to_y: BTreeMap<Term, String> = BTreeMap::new();
    for (t, sort) in sys.outputs.iter().zip(out_sorts.iter()) {
        let y = fresh("y", &mut taken);
        out.vars.push(VarDecl {
            name: y.clone(),
            sort: sort.clone(),
        });
        out.equations
            .push(Constraint::eq(t.clone(), Term::var(y.clone())));
        term_to_y.entry(t.clone()).or_insert_with(|| y.clone());
        y_names.push(y);
    }
    // x_i = h_i(y_1..y_s)
    let y_args: Vec<Term> = y_names.iter().map(|y| Term::var(y.clone())).collect();
    for var in &sys.vars {
        let h = fresh("h", &mut taken);
        out.funcs.push(FuncSymbol {
            name: h.clone(),
            arg_sorts: out_sorts.clone(),
            result_sort: var.sort.clone(),
        });
        out.equations.push(Constraint::eq(
            Term::app(h, y_args.clone()),
            Term::var(var.name.clone()),
        ));
    }
    // Distinctness between output terms moves onto the y variables; other
    // term constraints are kept as written.
    let rewrite = |t: &Term| -> Term {
        match term_to_y.get(t) {
            Some(y) if !t.is_var() => Term::var(y.clone()),
            _ => t.clone(),
        }
    };
    out.disequalities = sys
        .disequalities
        .iter()
        .map(|c| Constraint::neq(rewrite(&c.lhs), rewrite(&c.rhs)))
        .collect();
    out.outputs.clear();
    Ok((out, y_names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::examples::{gen, ExampleId};

    fn exponent(text: &str) -> usize {
        integer_exponent(&parse(text).unwrap()).unwrap().d
    }

    #[test]
    fn identity_projection_has_full_exponent() {
        assert_eq!(exponent("sort P\nvar x y : P\nout x y\n"), 2);
    }

    #[test]
    fn shared_source_limits_exponent() {
        assert_eq!(
            exponent("sort P\nfun f : P -> P\nfun g : P -> P\nvar x : P\nout f(x) g(x)\n"),
            1
        );
    }

    #[test]
    fn nested_chain_limits_exponent() {
        assert_eq!(
            exponent(
                "sort P\nfun f : P P -> P\nfun g : P -> P\nvar x y : P\nout g(f(x,y))\n"
            ),
            1
        );
    }

    #[test]
    fn single_relay_has_exponent_four() {
        let sys = gen(&ExampleId::SingleRelay).unwrap();
        let r = integer_exponent(&sys).unwrap();
        assert_eq!(r.d, 4);
    }

    #[test]
    fn cut_certificate_for_shared_source() {
        let sys =
            parse("sort P\nfun f : P -> P\nfun g : P -> P\nvar x : P\nout f(x) g(x)\n").unwrap();
        let r = integer_exponent(&sys).unwrap();
        assert_eq!(r.cut, vec!["x"]);
    }

    #[test]
    fn duplicate_outputs_share_a_sink() {
        assert_eq!(exponent("sort P\nvar x y : P\nout x x\n"), 1);
    }

    #[test]
    fn constant_outputs_have_exponent_zero() {
        assert_eq!(
            exponent("sort P\nfun c : -> P\nfun f : P -> P\nvar x : P\nout f(c)\n"),
            0
        );
        assert_eq!(exponent("sort P\nfun c : -> P\nvar x : P\nout c\n"), 0);
    }

    #[test]
    fn exponent_bounded_by_inputs_and_outputs() {
        for id in [ExampleId::SingleRelay, ExampleId::NandDispersion] {
            let sys = gen(&id).unwrap();
            let r = integer_exponent(&sys).unwrap();
            assert!(r.d <= sys.vars.len().min(sys.outputs.len()));
        }
    }

    #[test]
    fn threshold_decisions() {
        let sys = parse("sort P\nvar x y : P\nout x y\n").unwrap();
        assert!(decide_threshold(&sys, 1).unwrap());
        assert!(!decide_threshold(&sys, 2).unwrap());
        let relay = gen(&ExampleId::SingleRelay).unwrap();
        assert!(decide_threshold(&relay, 3).unwrap());
        assert!(!decide_threshold(&relay, 4).unwrap());
    }

    #[test]
    fn inconsistent_distinctness_rejected() {
        let sys = parse("sort P\nfun f : P -> P\nvar x y : P\nneq f(x) != f(x)\nout x\n").unwrap();
        assert!(matches!(
            integer_exponent(&sys),
            Err(DispersionError::InconsistentDistinctness(_))
        ));
    }

    #[test]
    fn growth_oracle_trivial_cases() {
        let sys = parse("sort P\nvar x y : P\nout x y\n").unwrap();
        let points = growth_oracle(&sys, &[2, 3, 4], &SearchParams::default()).unwrap();
        let values: Vec<u128> = points.iter().map(|p| p.dispersion).collect();
        assert_eq!(values, vec![4, 9, 16]);
        assert!(consistent_with_exponent(&points, 2));

        let sys =
            parse("sort P\nfun f : P -> P\nfun g : P -> P\nvar x : P\nout f(x) g(x)\n").unwrap();
        let points = growth_oracle(&sys, &[2, 3], &SearchParams::default()).unwrap();
        let values: Vec<u128> = points.iter().map(|p| p.dispersion).collect();
        assert_eq!(values, vec![2, 3]);
        assert!(consistent_with_exponent(&points, 1));
    }

    #[test]
    fn nand_growth_reaches_bijection() {
        let sys = gen(&ExampleId::NandDispersion).unwrap();
        let points = growth_oracle(&sys, &[2], &SearchParams::default()).unwrap();
        assert_eq!(points[0].dispersion, 8);
        assert!(points[0].exact);
        let r = integer_exponent(&sys).unwrap().with_oracle_check(&points);
        assert_eq!(r.d, 3);
        assert!(r.oracle_checked);
    }

    #[test]
    fn reduce_single_output() {
        let sys = parse("sort P\nfun f : P P -> P\nvar x y : P\nout f(x,y)\n").unwrap();
        let (tc, ys) = reduce_to_termcoding(&sys).unwrap();
        assert_eq!(ys, vec!["_y1"]);
        assert!(tc.outputs.is_empty());
        let eqs: Vec<String> = tc.equations.iter().map(|c| c.to_string()).collect();
        assert_eq!(
            eqs,
            vec!["f(x,y) = _y1", "_h1(_y1) = x", "_h2(_y1) = y"]
        );
        assert!(validate_system(&tc).ok());
    }

    #[test]
    fn reduce_single_relay_counts() {
        let sys = gen(&ExampleId::SingleRelay).unwrap();
        let (tc, ys) = reduce_to_termcoding(&sys).unwrap();
        assert_eq!(ys.len(), 4);
        assert_eq!(tc.equations.len(), 8);
        assert_eq!(
            tc.funcs.iter().filter(|f| f.name.starts_with("_h")).count(),
            4
        );
        assert!(validate_system(&tc).ok());
    }

    #[test]
    fn reduce_rewrites_output_term_distinctness() {
        let sys = parse(
            "sort P\nfun f : P -> P\nfun g : P -> P\nvar x : P\nneq f(x) != g(x)\nout f(x) g(x)\n",
        )
        .unwrap();
        let (tc, ys) = reduce_to_termcoding(&sys).unwrap();
        assert_eq!(
            tc.disequalities[0].to_string(),
            format!("{} != {}", ys[0], ys[1])
        );
    }
}

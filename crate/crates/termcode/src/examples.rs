//! Generators for the named example systems used throughout the crate:
//! design-theoretic quasigroups, the network-coding triple, self-orthogonal
//! Latin squares, the unsolvable self-decoding variants, the five-cycle
//! system, the two-node multi-sorted game, and the dispersion problems.

use thiserror::Error;

use crate::ir::{
    validate_system, Constraint, FuncSymbol, SortDecl, System, Term, VarDecl,
};

/// Identifier for a generated example system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExampleId {
    /// Idempotent commutative self-inverting binary operation.
    SteinerQuasigroup,
    /// Variant with idempotence required at both pair coordinates.
    SteinerQuasigroupSym,
    /// t-ary symmetric self-inverting operation with distinctness guards.
    SteinerT { t: usize },
    /// Self-orthogonal Latin squares via one square and four decoders.
    Sols,
    /// Store-and-recover coding triple x, y, z = f(x,y).
    NetworkCoding,
    /// Self-decoding Latin square constraints, natural two-variable form.
    UnsolvableV1,
    /// The same constraints with every occurrence renamed apart (8 variables).
    UnsolvableV2,
    /// Three nested equations whose diversified graph is the bidirected
    /// five-cycle, plus distinctness constraints.
    C5,
    /// Two mutually-determined nodes over different alphabets.
    TwoNodeMultisort,
    /// One coding function observed at four input pairs (dispersion).
    SingleRelay,
    /// Boolean gate forced to NAND by dispersion maximisation.
    NandDispersion,
}

impl ExampleId {
    /// Every generator, with small default parameters where parameterised.
    pub fn all() -> Vec<ExampleId> {
        vec![
            ExampleId::SteinerQuasigroup,
            ExampleId::SteinerQuasigroupSym,
            ExampleId::SteinerT { t: 2 },
            ExampleId::SteinerT { t: 3 },
            ExampleId::Sols,
            ExampleId::NetworkCoding,
            ExampleId::UnsolvableV1,
            ExampleId::UnsolvableV2,
            ExampleId::C5,
            ExampleId::TwoNodeMultisort,
            ExampleId::SingleRelay,
            ExampleId::NandDispersion,
        ]
    }

    /// Resolves a CLI name plus optional `t` parameter.
    pub fn from_name(name: &str, t: Option<usize>) -> Result<ExampleId, ExampleError> {
        match name {
            "steiner-quasigroup" => Ok(ExampleId::SteinerQuasigroup),
            "steiner-quasigroup-sym" => Ok(ExampleId::SteinerQuasigroupSym),
            "steiner-t" => {
                let t = t.ok_or(ExampleError::MissingParam { name: "t" })?;
                Ok(ExampleId::SteinerT { t })
            }
            "sols" => Ok(ExampleId::Sols),
            "network-coding" => Ok(ExampleId::NetworkCoding),
            "unsolvable-v1" => Ok(ExampleId::UnsolvableV1),
            "unsolvable-v2" => Ok(ExampleId::UnsolvableV2),
            "c5" => Ok(ExampleId::C5),
            "two-node-multisort" => Ok(ExampleId::TwoNodeMultisort),
            "single-relay" => Ok(ExampleId::SingleRelay),
            "nand-dispersion" => Ok(ExampleId::NandDispersion),
            other => Err(ExampleError::UnknownName(other.to_string())),
        }
    }

    /// The CLI name of this example.
    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::SteinerQuasigroup => "steiner-quasigroup",
            ExampleId::SteinerQuasigroupSym => "steiner-quasigroup-sym",
            ExampleId::SteinerT { .. } => "steiner-t",
            ExampleId::Sols => "sols",
            ExampleId::NetworkCoding => "network-coding",
            ExampleId::UnsolvableV1 => "unsolvable-v1",
            ExampleId::UnsolvableV2 => "unsolvable-v2",
            ExampleId::C5 => "c5",
            ExampleId::TwoNodeMultisort => "two-node-multisort",
            ExampleId::SingleRelay => "single-relay",
            ExampleId::NandDispersion => "nand-dispersion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExampleError {
    #[error("unknown example {0}")]
    UnknownName(String),
    #[error("example requires parameter {name}")]
    MissingParam { name: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn app(f: &str, args: Vec<Term>) -> Term {
    Term::app(f, args)
}

fn single_sorted(funcs: Vec<(&str, usize)>, vars: Vec<&str>) -> System {
    System {
        sorts: vec![SortDecl { name: "P".into() }],
        funcs: funcs
            .into_iter()
            .map(|(name, arity)| FuncSymbol {
                name: name.into(),
                arg_sorts: vec!["P".into(); arity],
                result_sort: "P".into(),
            })
            .collect(),
        vars: vars
            .into_iter()
            .map(|name| VarDecl {
                name: name.into(),
                sort: "P".into(),
            })
            .collect(),
        equations: vec![],
        disequalities: vec![],
        outputs: vec![],
    }
}

/// Builds the named example system. Every generated system validates.
pub fn gen(id: &ExampleId) -> Result<System, ExampleError> {
    let sys = match id {
        ExampleId::SteinerQuasigroup => {
            let mut s = single_sorted(vec![("f", 2)], vec!["x", "y"]);
            let fxy = app("f", vec![v("x"), v("y")]);
            s.equations = vec![
                Constraint::eq(app("f", vec![v("x"), v("x")]), v("x")),
                Constraint::eq(fxy.clone(), app("f", vec![v("y"), v("x")])),
                Constraint::eq(app("f", vec![v("x"), fxy]), v("y")),
            ];
            s
        }
        ExampleId::SteinerQuasigroupSym => {
            let mut s = gen(&ExampleId::SteinerQuasigroup)?;
            s.equations.insert(
                1,
                Constraint::eq(app("f", vec![v("y"), v("y")]), v("y")),
            );
            s
        }
        ExampleId::SteinerT { t } => gen_steiner_t(*t)?,
        ExampleId::Sols => {
            let mut s = single_sorted(
                vec![("f", 2), ("h1", 2), ("h2", 2), ("h3", 2), ("h4", 2)],
                vec!["x", "y"],
            );
            let fxy = app("f", vec![v("x"), v("y")]);
            let fyx = app("f", vec![v("y"), v("x")]);
            s.equations = vec![
                Constraint::eq(app("h1", vec![fxy.clone(), v("y")]), v("x")),
                Constraint::eq(app("h2", vec![v("x"), fxy.clone()]), v("y")),
                Constraint::eq(app("h3", vec![fxy.clone(), fyx.clone()]), v("x")),
                Constraint::eq(app("h4", vec![fxy, fyx]), v("y")),
            ];
            s
        }
        ExampleId::NetworkCoding => {
            let mut s = single_sorted(vec![("f", 2), ("h1", 2), ("h2", 2)], vec!["x", "y", "z"]);
            s.equations = vec![
                Constraint::eq(app("f", vec![v("x"), v("y")]), v("z")),
                Constraint::eq(app("h1", vec![v("x"), v("z")]), v("y")),
                Constraint::eq(app("h2", vec![v("y"), v("z")]), v("x")),
            ];
            s
        }
        ExampleId::UnsolvableV1 => {
            let mut s = single_sorted(vec![("f", 2)], vec!["x", "y"]);
            s.equations = unsolvable_equations("x", "y");
            s
        }
        ExampleId::UnsolvableV2 => {
            let mut s = single_sorted(
                vec![("f", 2)],
                vec!["x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4"],
            );
            let eqs = |i: usize| {
                let all = unsolvable_equations(&format!("x{i}"), &format!("y{i}"));
                all[i - 1].clone()
            };
            s.equations = vec![eqs(1), eqs(2), eqs(3), eqs(4)];
            s
        }
        ExampleId::C5 => {
            let mut s = single_sorted(vec![("f", 2)], vec!["x", "y", "z"]);
            let fzx = app("f", vec![v("z"), v("x")]);
            let fyz = app("f", vec![v("y"), v("z")]);
            s.equations = vec![
                Constraint::eq(app("f", vec![fzx.clone(), v("y")]), v("x")),
                Constraint::eq(app("f", vec![v("x"), fyz.clone()]), v("y")),
                Constraint::eq(app("f", vec![fyz, fzx]), v("z")),
            ];
            s.disequalities = vec![
                Constraint::neq(v("x"), v("z")),
                Constraint::neq(
                    app("f", vec![v("x"), v("y")]),
                    app("f", vec![v("y"), v("x")]),
                ),
                Constraint::neq(v("x"), v("y")),
            ];
            s
        }
        ExampleId::TwoNodeMultisort => System {
            sorts: vec![SortDecl { name: "S1".into() }, SortDecl { name: "S2".into() }],
            funcs: vec![
                FuncSymbol {
                    name: "f1".into(),
                    arg_sorts: vec!["S2".into()],
                    result_sort: "S1".into(),
                },
                FuncSymbol {
                    name: "f2".into(),
                    arg_sorts: vec!["S1".into()],
                    result_sort: "S2".into(),
                },
            ],
            vars: vec![
                VarDecl {
                    name: "x".into(),
                    sort: "S1".into(),
                },
                VarDecl {
                    name: "y".into(),
                    sort: "S2".into(),
                },
            ],
            equations: vec![
                Constraint::eq(app("f1", vec![v("y")]), v("x")),
                Constraint::eq(app("f2", vec![v("x")]), v("y")),
            ],
            disequalities: vec![],
            outputs: vec![],
        },
        ExampleId::SingleRelay => System {
            sorts: vec![
                SortDecl { name: "S1".into() },
                SortDecl { name: "S2".into() },
                SortDecl { name: "S3".into() },
            ],
            funcs: vec![FuncSymbol {
                name: "f".into(),
                arg_sorts: vec!["S1".into(), "S2".into()],
                result_sort: "S3".into(),
            }],
            vars: vec![
                VarDecl {
                    name: "x".into(),
                    sort: "S1".into(),
                },
                VarDecl {
                    name: "w".into(),
                    sort: "S1".into(),
                },
                VarDecl {
                    name: "y".into(),
                    sort: "S2".into(),
                },
                VarDecl {
                    name: "z".into(),
                    sort: "S2".into(),
                },
            ],
            equations: vec![],
            disequalities: vec![],
            outputs: vec![
                app("f", vec![v("x"), v("y")]),
                app("f", vec![v("x"), v("z")]),
                app("f", vec![v("w"), v("y")]),
                app("f", vec![v("w"), v("z")]),
            ],
        },
        ExampleId::NandDispersion => System {
            sorts: vec![SortDecl { name: "B".into() }],
            funcs: vec![
                FuncSymbol {
                    name: "c".into(),
                    arg_sorts: vec![],
                    result_sort: "B".into(),
                },
                FuncSymbol {
                    name: "S".into(),
                    arg_sorts: vec!["B".into(), "B".into()],
                    result_sort: "B".into(),
                },
            ],
            vars: vec![
                VarDecl {
                    name: "x".into(),
                    sort: "B".into(),
                },
                VarDecl {
                    name: "y".into(),
                    sort: "B".into(),
                },
                VarDecl {
                    name: "z".into(),
                    sort: "B".into(),
                },
            ],
            equations: vec![],
            disequalities: vec![Constraint::neq(
                app("S", vec![app("c", vec![]), app("c", vec![])]),
                app("c", vec![]),
            )],
            outputs: vec![
                app("S", vec![v("x"), v("x")]),
                app("S", vec![app("c", vec![]), v("y")]),
                app("S", vec![v("z"), app("c", vec![])]),
            ],
        },
    };
    debug_assert!(validate_system(&sys).ok(), "generated system must validate");
    Ok(sys)
}

/// The four self-decoding constraints over a variable pair.
fn unsolvable_equations(x: &str, y: &str) -> Vec<Constraint> {
    let fxy = app("f", vec![v(x), v(y)]);
    let fyx = app("f", vec![v(y), v(x)]);
    vec![
        Constraint::eq(app("f", vec![fxy.clone(), v(y)]), v(x)),
        Constraint::eq(app("f", vec![v(x), fyx.clone()]), v(y)),
        Constraint::eq(app("f", vec![fxy.clone(), fyx.clone()]), v(x)),
        Constraint::eq(app("f", vec![fyx, fxy]), v(y)),
    ]
}

fn gen_steiner_t(t: usize) -> Result<System, ExampleError> {
    if t < 2 {
        return Err(ExampleError::InvalidParam(format!(
            "steiner-t requires t >= 2, got {t}"
        )));
    }
    let var_names: Vec<String> = (1..=t).map(|i| format!("x{i}")).collect();
    let mut sys = System {
        sorts: vec![SortDecl { name: "P".into() }],
        funcs: vec![FuncSymbol {
            name: "f".into(),
            arg_sorts: vec!["P".into(); t],
            result_sort: "P".into(),
        }],
        vars: var_names
            .iter()
            .map(|n| VarDecl {
                name: n.clone(),
                sort: "P".into(),
            })
            .collect(),
        equations: vec![],
        disequalities: vec![],
        outputs: vec![],
    };
    let base_args: Vec<Term> = var_names.iter().map(|n| v(n)).collect();
    let f_base = app("f", base_args.clone());

    // Symmetry for every non-identity permutation, in lexicographic order.
    for perm in permutations(t) {
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            continue;
        }
        let permuted: Vec<Term> = perm.iter().map(|&p| base_args[p].clone()).collect();
        sys.equations
            .push(Constraint::eq(f_base.clone(), app("f", permuted)));
    }
    // Inversion: substituting the result for any one argument recovers it.
    for i in 0..t {
        let mut args = base_args.clone();
        args[i] = f_base.clone();
        sys.equations
            .push(Constraint::eq(app("f", args), base_args[i].clone()));
    }
    // The result differs from every argument.
    for arg in &base_args {
        sys.disequalities
            .push(Constraint::neq(f_base.clone(), arg.clone()));
    }
    // Guard: the axioms are counted only at pairwise-distinct inputs.
    for i in 0..t {
        for j in (i + 1)..t {
            sys.disequalities
                .push(Constraint::neq(base_args[i].clone(), base_args[j].clone()));
        }
    }
    Ok(sys)
}

/// All permutations of 0..t in lexicographic order.
fn permutations(t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut used = vec![false; t];
    fn rec(t: usize, current: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if current.len() == t {
            out.push(current.clone());
            return;
        }
        for i in 0..t {
            if !used[i] {
                used[i] = true;
                current.push(i);
                rec(t, current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(t, &mut current, &mut used, &mut out);
    out
}

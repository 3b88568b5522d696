//! Normalisation and diversification, walked through on the five-cycle
//! system: nested subterms become shared auxiliary variables, each flat
//! equation gets its own function symbol, and the dependency graph comes out
//! as a bidirected 5-cycle with two extra sink nodes.
//!
//! ```bash
//! cargo run --example normalize_and_graph
//! ```

use termcode::depgraph;
use termcode::dsl;
use termcode::examples::{gen, ExampleId};
use termcode::normalize::{diversify, normalize};

fn main() {
    let sys = gen(&ExampleId::C5).expect("known example");
    println!("--- input ---");
    print!("{}", dsl::render(&sys));

    let (norm, map) = normalize(&sys);
    println!("--- normalised ({} auxiliary variables) ---", map.aux_defs.len());
    for (aux, def) in &map.aux_defs {
        println!("#   {aux} names {def}");
    }
    print!("{}", dsl::render(&norm));

    let (div, symbols) = diversify(&norm).expect("flat after normalisation");
    println!("--- diversified ---");
    for e in &symbols.entries {
        println!("#   equation {} now uses {}", e.equation_index + 1, e.new_name);
    }
    print!("{}", dsl::render(&div));

    let g = depgraph::build(&div).expect("flat system");
    println!("--- dependency graph ({} vertices, {} edges) ---", g.vertices.len(), g.edges.len());
    print!("{}", depgraph::to_dot(&g));
}

//! Parse the `.tc` text format, validate, and render canonically.
//!
//! ```bash
//! cargo run --example parse_and_render
//! ```

use termcode::dsl;

fn main() {
    let text = "\
# the store-and-recover coding triple
sort P
fun f : P P -> P
fun h1 : P P -> P
fun h2 : P P -> P
var x y z : P
eq f(x,y) = z
eq h1(x,z) = y
eq h2(y,z) = x
";
    let sys = dsl::parse(text).expect("well-formed input");
    println!("parsed {} equations over {} variables", sys.equations.len(), sys.vars.len());
    println!("--- canonical form ---");
    print!("{}", dsl::render(&sys));

    // Errors carry source spans instead of aborting.
    let bad = "sort P\nfun f : P -> P\nvar x : P\neq f(x = x\n";
    match dsl::parse(bad) {
        Err(dsl::DslError::Parse(e)) => {
            println!("--- a syntax error is located precisely ---");
            println!("{e}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

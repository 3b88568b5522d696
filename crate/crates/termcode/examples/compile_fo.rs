//! Compile a first-order sentence into a term-coding system and decide
//! small-model existence through the compiled side.
//!
//! ```bash
//! cargo run --example compile_fo
//! ```

use termcode::dsl;
use termcode::fo;

fn main() {
    let text = "\
sort P
rel R : P P
sentence forall x:P. exists y:P. R(x,y) & ~(x = y)
";
    let problem = fo::parse_fo(text).expect("well-formed sentence");
    let compiled = fo::compile(&problem).expect("within the clause cap");

    println!("--- pipeline trace ---");
    println!("prenex:     {}", compiled.trace.prenex);
    println!("skolemised: {}", compiled.trace.skolemized);
    for c in &compiled.trace.cnf {
        println!("clause:     {c}");
    }
    for c in &compiled.trace.congruence {
        println!("congruence: {c}");
    }

    println!("--- compiled system ---");
    print!("{}", dsl::render(&compiled.system));

    // The sentence forces a distinct R-successor for every point, so no
    // one-element model exists while two elements suffice.
    for n in [1usize, 2] {
        println!(
            "model of size {n}? {}",
            fo::full_count_model_exists(&compiled, n)
        );
    }
}

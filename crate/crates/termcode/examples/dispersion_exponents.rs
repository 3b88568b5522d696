//! Integer dispersion exponents by vertex-disjoint paths, threshold
//! decisions, the growth oracle, and the reduction to plain term coding.
//!
//! ```bash
//! cargo run --example dispersion_exponents
//! ```

use termcode::dispersion::{
    decide_threshold, growth_oracle, integer_exponent, reduce_to_termcoding,
};
use termcode::dsl;
use termcode::examples::{gen, ExampleId};
use termcode::search::SearchParams;

fn main() {
    let params = SearchParams::default();

    // One coding function observed at four input pairs: a perfect matching
    // of inputs to outputs gives exponent 4.
    let relay = gen(&ExampleId::SingleRelay).expect("known example");
    let r = integer_exponent(&relay).expect("dispersion problem");
    println!("single relay: D = {} (cut {:?})", r.d, r.cut);
    for d in 3..=4 {
        println!(
            "  image eventually exceeds n^{d}? {}",
            decide_threshold(&relay, d).expect("dispersion problem")
        );
    }
    let points = growth_oracle(&relay, &[2, 3], &params).expect("desk-scale sizes");
    for p in &points {
        println!(
            "  exact dispersion at n={}: {} <= n^D = {}",
            p.n,
            p.dispersion,
            (p.n as u128).pow(r.d as u32)
        );
    }
    let checked = r.with_oracle_check(&points);
    println!("  oracle consistent: {}", checked.oracle_checked);

    // Chains collapse the exponent: a single shared source or a single
    // output pins D to 1.
    for text in [
        "sort P\nfun f : P -> P\nfun g : P -> P\nvar x : P\nout f(x) g(x)\n",
        "sort P\nfun f : P P -> P\nfun g : P -> P\nvar x y : P\nout g(f(x,y))\n",
    ] {
        let sys = dsl::parse(text).expect("well-formed");
        let r = integer_exponent(&sys).expect("dispersion problem");
        println!("{}: D = {}", text.lines().last().unwrap(), r.d);
    }

    // Any dispersion problem rewrites as a term-coding system whose
    // y-projections are exactly the realisable output tuples.
    let (reduced, ys) = reduce_to_termcoding(&relay).expect("dispersion problem");
    println!("--- single relay reduced to term coding (projection {ys:?}) ---");
    print!("{}", dsl::render(&reduced));
}

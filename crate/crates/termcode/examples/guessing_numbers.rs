//! Normalised guessing values: the exact maximal code size of the
//! diversified system, taken log base the alphabet size (or the weighted
//! geometric mean of per-variable alphabets in the multi-sorted case).
//!
//! ```bash
//! cargo run --example guessing_numbers
//! ```

use termcode::examples::{gen, ExampleId};
use termcode::ir::DomainSizes;
use termcode::search::{guess_at_n, guess_at_sizes, SearchParams};

fn main() {
    let params = SearchParams::default();

    // Two mutually-determined nodes: the best strategy agrees on a shared
    // value, so the code has exactly n elements and the value is 1.
    let two_node = gen(&ExampleId::TwoNodeMultisort).expect("known example");
    let g = guess_at_n(&two_node, 3, &params).expect("exact at this size");
    println!("two-node cycle at n=3: count {}, guess {:.3}", g.count, g.value);

    // The self-decoding variant: four variables, two of them forced copies;
    // the diversified maximum is n^2.
    let unsolvable = gen(&ExampleId::UnsolvableV1).expect("known example");
    for n in [2usize, 3] {
        let g = guess_at_n(&unsolvable, n, &params).expect("exact at this size");
        println!(
            "self-decoding variant at n={n}: count {}, guess {:.3} ({})",
            g.count,
            g.value,
            if g.exact { "exact" } else { "best found" }
        );
    }

    // The five-cycle: the exact maxima at n = 2 and 3 approach the
    // asymptotic exponent 5/2 from below.
    let c5 = gen(&ExampleId::C5).expect("known example");
    for n in [2usize, 3] {
        let g = guess_at_n(&c5, n, &params).expect("exact at this size");
        println!("five-cycle at n={n}: count {}, guess {:.3}", g.count, g.value);
    }

    // Different alphabet sizes per sort: the base becomes sqrt(n1 * n2).
    let mut sizes = DomainSizes::default();
    sizes.set("S1", 2);
    sizes.set("S2", 3);
    let g = guess_at_sizes(&two_node, &sizes, &params).expect("exact at this size");
    println!(
        "two-node cycle at sizes (2,3): count {}, guess {:.6} = log_sqrt(6) 2",
        g.count, g.value
    );
}

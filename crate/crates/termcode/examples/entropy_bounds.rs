//! Exact-rational Shannon bounds on guessing values, with certificates.
//!
//! ```bash
//! cargo run --example entropy_bounds
//! ```

use termcode::entropy::bound_for_system;
use termcode::examples::{gen, ExampleId};
use termcode::ir::DomainSizes;

fn main() {
    // The self-decoding variant: the copies z and w carry no fresh entropy,
    // so the joint is at most 2 alphabet units.
    let unsolvable = gen(&ExampleId::UnsolvableV1).expect("known example");
    let bound = bound_for_system(&unsolvable, &DomainSizes::uniform(&unsolvable, 2))
        .expect("commensurable sizes");
    println!("self-decoding variant: bound = {}", bound.normalised_bound);

    // The five-cycle: exactly 5/2.
    let c5 = gen(&ExampleId::C5).expect("known example");
    let bound =
        bound_for_system(&c5, &DomainSizes::uniform(&c5, 2)).expect("commensurable sizes");
    println!("five-cycle: bound = {}", bound.normalised_bound);
    println!("  certificate (subset -> units):");
    for (subset, value) in bound
        .certificate
        .iter()
        .filter(|(s, _)| s.len() <= 2 || s.len() == 5)
        .take(12)
    {
        println!("    {{{}}} -> {}", subset.join(","), value);
    }

    // Mixed alphabet sizes must be powers of a common base; the joint comes
    // out in exact bits here because the base is 2.
    let two_node = gen(&ExampleId::TwoNodeMultisort).expect("known example");
    let mut sizes = DomainSizes::default();
    sizes.set("S1", 4);
    sizes.set("S2", 16);
    let bound = bound_for_system(&two_node, &sizes).expect("powers of two");
    println!(
        "two-node cycle at sizes (4,16): joint = {} bits, normalised = {}",
        bound
            .max_joint_entropy_bits
            .as_ref()
            .expect("base is a power of two"),
        bound.normalised_bound
    );
}

//! Witness files: search once, save the best interpretation as JSON, reload
//! it, and re-verify the claimed count bit-exactly.
//!
//! ```bash
//! cargo run --example witness_files
//! ```

use termcode::examples::{gen, ExampleId};
use termcode::ir::DomainSizes;
use termcode::search::{exhaustive_max, SearchParams};
use termcode::semantics::verify_witness;
use termcode::witness;

fn main() {
    let sys = gen(&ExampleId::SteinerQuasigroup).expect("known example");
    let sizes = DomainSizes::uniform(&sys, 3);
    let result = exhaustive_max(&sys, &sizes, &SearchParams::default()).expect("within budget");
    println!("exhaustive maximum at n=3: {}", result.best_count);

    let file = witness::to_witness(&sys, &result.witness, result.best_count as u64);
    let json = serde_json::to_string_pretty(&file).expect("serializable");
    println!("--- witness JSON ---");
    println!("{json}");

    let parsed: witness::WitnessFile = serde_json::from_str(&json).expect("round trip");
    let interp = witness::from_witness(&sys, &parsed, false).expect("same system digest");
    assert!(verify_witness(&sys, &interp, parsed.count as u128));
    println!("reloaded witness verifies {}", parsed.count);
}

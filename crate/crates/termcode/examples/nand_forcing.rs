//! Forcing a Boolean gate by dispersion maximisation: with the constant
//! pinned to 1 and the constraint S(c,c) != c, the image of
//! (S(x,x), S(c,y), S(z,c)) reaches all 8 tuples only when S is NAND.
//!
//! ```bash
//! cargo run --example nand_forcing
//! ```

use termcode::examples::{gen, ExampleId};
use termcode::ir::DomainSizes;
use termcode::reproduce;
use termcode::search::SearchParams;
use termcode::semantics::{dispersion_image, Interpretation};

fn main() {
    let sys = gen(&ExampleId::NandDispersion).expect("known example");
    let sizes = DomainSizes::uniform(&sys, 2);

    println!("admissible tables (S(1,1) forced to 0) and their image sizes:");
    for bits in 0..16usize {
        let values: Vec<usize> = (0..4).map(|i| (bits >> (3 - i)) & 1).collect();
        if values[3] == 1 {
            continue;
        }
        let mut interp = Interpretation::zeros(&sys, &sizes).expect("sizes fit");
        interp.set_values("c", vec![1]).expect("constant");
        interp.set_values("S", values.clone()).expect("gate table");
        let image = dispersion_image(&sys, &interp).expect("dispersion problem");
        let mark = if values == [1, 1, 1, 0] { "  <- NAND" } else { "" };
        println!("  S = {values:?}: image {image}{mark}");
    }

    let r = reproduce::nand_search(&SearchParams::default()).expect("within budget");
    println!(
        "exhaustive dispersion search with c pinned: best image {} at S = {:?}",
        r.best_count, r.witness.tables["S"].values
    );
}

//! Reproduce the headline numeric tables at desk scale.
//!
//! ```bash
//! cargo run --release --example reproduce_tables
//! ```

use termcode::reproduce;
use termcode::search::SearchParams;

fn main() {
    let params = SearchParams::default();

    println!("--- quasigroup pair counts vs ideal n^2 ---");
    println!("{}", reproduce::TABLE_CSV_HEADER);
    for row in reproduce::table1(3, &params).expect("within budget") {
        println!("{}", row.csv());
    }

    println!("--- self-decoding constraints, two-variable form ---");
    println!("{}", reproduce::TABLE_CSV_HEADER);
    for row in reproduce::table2(3, &params).expect("within budget") {
        println!("{}", row.csv());
    }

    println!("--- self-decoding constraints, renamed-apart form ---");
    println!("{}", reproduce::TABLE_CSV_HEADER);
    for row in reproduce::table3(2, &params).expect("within budget") {
        println!("{}", row.csv());
    }

    println!("--- five-cycle walkthrough ---");
    println!("item,n,value");
    for (item, n, value) in reproduce::c5_rows(&params).expect("within budget") {
        println!("{item},{n},{value}");
    }
}

//! Reproduction drivers for the headline numeric tables: the quasigroup pair
//! counts, the two self-decoding formulations, the five-cycle walkthrough,
//! and the NAND forcing, each as CSV-friendly rows.

use num_traits::ToPrimitive;

use crate::examples::{gen, ExampleId};
use crate::ir::DomainSizes;
use crate::search::{
    anneal_max, dispersion_max, exhaustive_max, SearchError, SearchMode, SearchParams,
};
use crate::semantics::{dispersion_image, Interpretation};

/// One row of a maximum-vs-ideal table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub n: usize,
    pub max_found: u128,
    pub ideal: u128,
    pub ratio: f64,
    pub exact: bool,
}

impl TableRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.3},{}",
            self.n,
            self.max_found,
            self.ideal,
            self.ratio,
            if self.exact { "exact" } else { "best-found" }
        )
    }
}

pub const TABLE_CSV_HEADER: &str = "n,max_found,ideal,ratio,status";

fn max_rows(
    id: &ExampleId,
    ideal_exponent: u32,
    max_n: usize,
    params: &SearchParams,
) -> Result<Vec<TableRow>, SearchError> {
    let sys = gen(id).expect("known example");
    let mut rows = Vec::new();
    for n in 1..=max_n {
        let sizes = DomainSizes::uniform(&sys, n);
        let (result, exact) = match params.mode {
            SearchMode::Exhaustive => match exhaustive_max(&sys, &sizes, params) {
                Ok(r) => (r, true),
                Err(SearchError::BudgetExceeded { .. }) => {
                    (anneal_max(&sys, &sizes, params)?, false)
                }
                Err(e) => return Err(e),
            },
            SearchMode::Anneal => (anneal_max(&sys, &sizes, params)?, false),
        };
        let ideal = (n as u128).pow(ideal_exponent);
        rows.push(TableRow {
            n,
            max_found: result.best_count,
            ideal,
            ratio: result.best_count as f64 / ideal as f64,
            exact,
        });
    }
    Ok(rows)
}

/// Maximum pair counts for the quasigroup identities against the ideal n^2.
pub fn table1(max_n: usize, params: &SearchParams) -> Result<Vec<TableRow>, SearchError> {
    max_rows(&ExampleId::SteinerQuasigroup, 2, max_n, params)
}

/// Self-decoding constraints, two-variable formulation, against n^2.
pub fn table2(max_n: usize, params: &SearchParams) -> Result<Vec<TableRow>, SearchError> {
    max_rows(&ExampleId::UnsolvableV1, 2, max_n, params)
}

/// Self-decoding constraints, renamed-apart formulation, against n^8.
pub fn table3(max_n: usize, params: &SearchParams) -> Result<Vec<TableRow>, SearchError> {
    max_rows(&ExampleId::UnsolvableV2, 8, max_n, params)
}

/// Rows of the five-cycle walkthrough: the entropy bound, the exact
/// diversified maximum at small sizes, and the explicit paired strategy at
/// n = 4.
pub fn c5_rows(params: &SearchParams) -> Result<Vec<(String, String, String)>, SearchError> {
    let sys = gen(&ExampleId::C5).expect("known example");
    let mut rows = Vec::new();
    let sizes2 = DomainSizes::uniform(&sys, 2);
    let bound = crate::entropy::bound_for_system(&sys, &sizes2).expect("bound for c5");
    rows.push((
        "entropy_bound".to_string(),
        String::new(),
        format!(
            "{}/{}",
            bound.normalised_bound.numer(),
            bound.normalised_bound.denom()
        ),
    ));
    for n in [2usize, 3] {
        let g = crate::search::guess_at_n(&sys, n, params)?;
        rows.push((
            "diversified_max".to_string(),
            n.to_string(),
            format!("{} ({})", g.count, if g.exact { "exact" } else { "best-found" }),
        ));
    }
    let count = c5_strategy_count(2)?;
    rows.push(("paired_strategy_count".to_string(), "4".to_string(), count.to_string()));
    rows.push((
        "paired_strategy_ideal".to_string(),
        "4".to_string(),
        format!("{}", (4f64).powf(bound.normalised_bound.to_f64().unwrap())),
    ));
    Ok(rows)
}

/// Builds the explicit pair-strategy interpretation for the diversified
/// five-cycle core over n = m^2 and counts its solutions exactly.
///
/// Values are pairs (v', v'') encoded as v' * m + v''; the node between two
/// cycle neighbours guesses (previous'', next').
pub fn c5_strategy_count(m: usize) -> Result<u128, SearchError> {
    let (core, _) = c5_diversified_core();
    let n = m * m;
    let sizes = DomainSizes::uniform(&core, n);
    let mut interp =
        Interpretation::zeros(&core, &sizes).map_err(crate::search::SearchError::Semantics)?;
    for name in ["f1", "f2", "f3", "f4", "f5"] {
        interp
            .set_fn(name, |args| {
                let prev = args[0];
                let next = args[1];
                (prev % m) * m + next / m
            })
            .map_err(crate::search::SearchError::Semantics)?;
    }
    let report = crate::semantics::count_solutions(&core, &interp)
        .map_err(crate::search::SearchError::Semantics)?;
    Ok(report.count)
}

/// The diversified five-cycle core: the five cycle equations without the
/// distinctness outputs. Returns the system and its cyclic vertex order.
pub fn c5_diversified_core() -> (crate::ir::System, Vec<String>) {
    let sys = gen(&ExampleId::C5).expect("known example");
    let (norm, _) = crate::normalize::normalize(&sys);
    let (div, _) = crate::normalize::diversify(&norm).expect("flat");
    let mut core = div.clone();
    // Keep only the cycle equations f1..f5; drop the two pair-output
    // equations and all distinctness constraints.
    core.equations.truncate(5);
    core.disequalities.clear();
    core.vars.retain(|v| v.name != "_a3" && v.name != "_a4");
    core.funcs.retain(|f| f.name != "f6" && f.name != "f7");
    let order = vec![
        "x".to_string(),
        "y".to_string(),
        "_a2".to_string(),
        "z".to_string(),
        "_a1".to_string(),
    ];
    (core, order)
}

/// One row per admissible gate table: the four values of S and the image
/// size it disperses to, with the forced table marked.
pub fn nand_rows(_params: &SearchParams) -> Result<Vec<String>, SearchError> {
    let sys = gen(&ExampleId::NandDispersion).expect("known example");
    let sizes = DomainSizes::uniform(&sys, 2);
    let mut rows = vec!["s00,s01,s10,s11,image,is_nand".to_string()];
    for bits in 0..16usize {
        let values: Vec<usize> = (0..4).map(|i| (bits >> (3 - i)) & 1).collect();
        // Admissible tables satisfy S(c,c) != c with c = 1.
        if values[3] == 1 {
            continue;
        }
        let mut interp =
            Interpretation::zeros(&sys, &sizes).map_err(crate::search::SearchError::Semantics)?;
        interp
            .set_values("c", vec![1])
            .map_err(crate::search::SearchError::Semantics)?;
        interp
            .set_values("S", values.clone())
            .map_err(crate::search::SearchError::Semantics)?;
        let image = dispersion_image(&sys, &interp).map_err(crate::search::SearchError::Semantics)?;
        let is_nand = values == [1, 1, 1, 0];
        rows.push(format!(
            "{},{},{},{},{},{}",
            values[0], values[1], values[2], values[3], image, is_nand
        ));
    }
    Ok(rows)
}

/// Exhaustive dispersion search over the gate system with the constant
/// pinned to 1; the maximiser is the NAND table.
pub fn nand_search(params: &SearchParams) -> Result<crate::search::SearchResult, SearchError> {
    let sys = gen(&ExampleId::NandDispersion).expect("known example");
    let sizes = DomainSizes::uniform(&sys, 2);
    let mut p = params.clone();
    p.mode = SearchMode::Exhaustive;
    p.fixed_tables.insert("c".into(), vec![1]);
    dispersion_max(&sys, &sizes, &p)
}

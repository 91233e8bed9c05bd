// Sample endpoints reachable from the identity and test local accessibility.

use liectrl::catalog;
use liectrl::error::Result;
use liectrl::reach::{local_accessibility_test, sample_reachable, AccessibilityReport};
use liectrl::tolerance::Tolerances;

pub fn run_example_with(n: usize) -> Result<Vec<(String, AccessibilityReport)>> {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for name in ["sl2_ex_ii", "rank_deficient_r2"] {
        let rs = catalog::load(name, &tol)?.realized()?;
        let cloud = sample_reachable(&rs, 1.0, n, 11, 8, tol.dt)?;
        let report = local_accessibility_test(&cloud)?;
        println!("{name}: {:?}", report.result);
        out.push((name.to_string(), report));
    }
    Ok(out)
}

pub fn run_example() -> Result<Vec<(String, AccessibilityReport)>> {
    run_example_with(500)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

// Controllability verdicts for every bundled system.

use liectrl::catalog;
use liectrl::checker::controllability_verdict;
use liectrl::error::Result;
use liectrl::tolerance::Tolerances;

pub fn run_example() -> Result<Vec<(String, String)>> {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for name in catalog::names() {
        let spec = catalog::load(name, &tol)?;
        let v = controllability_verdict(&spec.system, &tol);
        let spectrum: Vec<String> = v
            .spectrum
            .eigenvalues
            .iter()
            .map(|c| format!("{}{:+}i (x{})", c.re, c.im, c.multiplicity))
            .collect();
        println!(
            "{name:24} ad-rank {}/{}  spectrum [{}]  -> {}",
            v.ad_rank.dimension,
            v.ad_rank.target,
            spectrum.join(", "),
            v.conclusion.label()
        );
        out.push((name.to_string(), v.conclusion.label().to_string()));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

// Spectrum of a derivation and the splitting into expanding, contracting and
// neutral parts.

use liectrl::catalog;
use liectrl::decomposition::{check_grading, DDecomposition};
use liectrl::error::Result;
use liectrl::tolerance::Tolerances;

pub fn run_example() -> Result<DDecomposition> {
    let tol = Tolerances::default();
    let spec = catalog::load("sl2_ex_i", &tol)?;
    let d = spec.system.derivation.matrix();
    let dec = DDecomposition::compute(d, &tol);
    for c in &dec.spectrum.classes {
        println!("eigenvalue {}{:+}i multiplicity {}", c.re, c.im, c.multiplicity);
    }
    println!(
        "dim g+ = {}, dim g- = {}, dim g0 = {}",
        dec.plus.dim(),
        dec.minus.dim(),
        dec.zero.dim()
    );
    let grading = check_grading(&spec.system.algebra, &dec, &tol)?;
    println!("grading residual {:.1e} over {} pairs", grading.max_residual, grading.pairs_checked);
    Ok(dec)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

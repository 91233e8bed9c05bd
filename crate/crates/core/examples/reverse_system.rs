// Endpoints of the reverse system versus inverted forward endpoints.

use liectrl::catalog;
use liectrl::decomposition::DDecomposition;
use liectrl::error::Result;
use liectrl::reach::sample_signal;
use liectrl::tolerance::Tolerances;

pub fn run_example() -> Result<f64> {
    let tol = Tolerances::default();
    let rs = catalog::load("sl2_ex_i", &tol)?.realized()?;
    let rev = rs.reversed();
    let plus = DDecomposition::compute(rs.system.derivation.matrix(), &tol).plus;
    let rev_minus = DDecomposition::compute(rev.system.derivation.matrix(), &tol).minus;
    println!("expanding part of D equals contracting part of -D: {}", plus.same_as(&rev_minus, 1e-9));

    let tau = 1.5;
    let e = rs.identity();
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let u = sample_signal(&rs, tau, 5, i, 6);
        let forward = rs.endpoint(&e, &u, tol.dt)?;
        let expected = rs.linear_flow(-tau, &forward.inverse());
        let reverse = rev.endpoint(&e, &u.reversed().negated(), tol.dt)?;
        worst = worst.max(reverse.distance(&expected));
    }
    println!("largest mismatch over 10 controls {worst:.1e}");
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

// Steer the rolling sphere from rest to position (1, 0) turned a quarter about z.

use std::f64::consts::FRAC_PI_2;

use liectrl::catalog;
use liectrl::error::Result;
use liectrl::linalg::Vector;
use liectrl::reach::{connect, ConnectOptions, Connection};
use liectrl::tolerance::Tolerances;

pub fn run_example() -> Result<Connection> {
    let tol = Tolerances::default();
    let rs = catalog::load("rolling_sphere", &tol)?.realized()?;
    let target = rs.group_exp(&Vector::from_row_slice(&[1.0, 0.0, 0.0, 0.0, FRAC_PI_2]))?;
    let found = connect(&rs, &rs.identity(), &target, &ConnectOptions { seed: 3, ..ConnectOptions::default() })?;
    println!(
        "reached within {:.1e} after {} trajectories, T = {:.3}",
        found.residual,
        found.trajectories,
        found.signal.duration()
    );
    Ok(found)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

// Roll the sphere along a piecewise-constant control and export the trajectory.

use std::path::Path;

use liectrl::catalog;
use liectrl::error::Result;
use liectrl::simulator::{ControlSignal, Piece, SolveOptions, Trajectory};
use liectrl::tolerance::Tolerances;

pub fn run_example_to(out: &Path) -> Result<Trajectory> {
    let tol = Tolerances::default();
    let rs = catalog::rolling_sphere(1.0, &tol)?.realized()?;
    let u = ControlSignal::new(vec![
        Piece { duration: 1.0, value: vec![1.0, 0.0, 0.0, 0.5] },
        Piece { duration: 2.0, value: vec![-0.5, 0.3, -1.0, 0.0] },
        Piece { duration: 2.0, value: vec![0.0, 0.0, 0.0, 0.0] },
    ])?;
    let traj = rs.solve(&rs.identity(), &u, &SolveOptions { dt: 1e-3, stride: 100 })?;
    let worst = traj.states.iter().map(|g| rs.invariant_residual(g)).fold(0.0, f64::max);
    println!("{} samples, final position {:?}", traj.times.len(), &traj.last().flatten()[..2]);
    println!("largest orthogonality/determinant drift {worst:.1e}");
    traj.write_csv(std::fs::File::create(out)?)?;
    Ok(traj)
}

pub fn run_example() -> Result<Trajectory> {
    run_example_to(&std::env::temp_dir().join("rolling_sphere.csv"))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

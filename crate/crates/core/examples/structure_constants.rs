// Build a Lie algebra from matrices and inspect Jacobi, Killing form and radical.

use liectrl::algebra::{signature, LieAlgebra};
use liectrl::error::Result;
use liectrl::linalg::Matrix;
use liectrl::tolerance::Tolerances;

pub fn run_example() -> Result<LieAlgebra> {
    let tol = Tolerances::default();
    // Upper-triangular 2x2 matrices: solvable, radical is everything.
    let basis = vec![
        Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
    ];
    let b = LieAlgebra::from_matrix_basis(vec!["E11", "E22", "E12"], &basis, &tol)?;
    let jacobi = b.validate_jacobi(&tol);
    println!("brackets: {:?}", b.sparse_entries());
    println!("Jacobi residual {:.1e}, solvable {}", jacobi.max_residual, b.is_solvable(&tol));
    println!("radical dimension {}", b.radical(&tol)?.dim());

    let sl2 = liectrl::algebra::sl2();
    let (pos, neg, zero) = signature(&sl2.killing_form(), 1e-10);
    println!("sl(2,R) Killing signature (+{pos}, -{neg}, 0:{zero})");
    let so3 = liectrl::algebra::so3();
    println!("so(3) Killing form\n{}", so3.killing_form());
    Ok(b)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

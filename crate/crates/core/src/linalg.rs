//! Dense linear-algebra helpers shared by the algebraic and simulation modules.
//!
//! Rank decisions use a singular-value cutoff `tol * max(sigma_max, 1)`. The floor
//! at 1 keeps round-off noise in an otherwise zero matrix from being counted as rank.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

fn cutoff(sigma: &[f64], tol: f64) -> f64 {
    let smax = sigma.iter().cloned().fold(0.0_f64, f64::max);
    tol * smax.max(1.0)
}

/// Pads a wide matrix with zero rows so that the SVD returns a full right basis.
fn square_up(m: &Matrix) -> Matrix {
    if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        let mut p = Matrix::zeros(m.ncols(), m.ncols());
        p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        p
    }
}

pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().cloned().collect()
}

pub fn rank(m: &Matrix, tol: f64) -> usize {
    let s = singular_values(m);
    let c = cutoff(&s, tol);
    s.iter().filter(|&&x| x > c).count()
}

/// Orthonormal basis of the column space.
pub fn orth(m: &Matrix, tol: f64) -> Matrix {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Matrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let c = cutoff(&s, tol);
    let u = svd.u.expect("u requested");
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > c).collect();
    Matrix::from_fn(n, keep.len(), |r, k| u[(r, keep[k])])
}

/// Orthonormal basis of the null space.
pub fn null_space(m: &Matrix, tol: f64) -> Matrix {
    let n = m.ncols();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return Matrix::identity(n, n);
    }
    let sq = square_up(m);
    let svd = sq.svd(false, true);
    let s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let c = cutoff(&s, tol);
    let vt = svd.v_t.expect("v_t requested");
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= c).collect();
    Matrix::from_fn(n, keep.len(), |r, k| vt[(keep[k], r)])
}

/// The `k` right singular vectors belonging to the smallest singular values of a
/// square matrix, together with those singular values (ascending).
pub fn smallest_right_singular(m: &Matrix, k: usize) -> (Matrix, Vec<f64>) {
    let n = m.ncols();
    let svd = square_up(m).svd(false, true);
    let s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    idx.truncate(k);
    let basis = Matrix::from_fn(n, idx.len(), |r, c| vt[(idx[c], r)]);
    (basis, idx.iter().map(|&i| s[i]).collect())
}

pub fn complex_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().cloned().collect()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &Matrix, b: &Matrix) -> Matrix {
    if a.ncols() == 0 {
        return Matrix::zeros(0, b.ncols());
    }
    let svd = square_up(a).svd(true, true);
    let s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let c = cutoff(&s, 1e-13);
    let mut bb = Matrix::zeros(svd.u.as_ref().unwrap().nrows(), b.ncols());
    bb.view_mut((0, 0), (b.nrows(), b.ncols())).copy_from(b);
    svd.solve(&bb, c).expect("svd solve")
}

/// Stacks column vectors into a matrix with `rows` rows.
pub fn hstack(rows: usize, cols: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

pub fn hcat(a: &Matrix, b: &Matrix) -> Matrix {
    let rows = a.nrows().max(b.nrows());
    let mut m = Matrix::zeros(rows, a.ncols() + b.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    m
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &Matrix) -> Matrix {
    if m.nrows() == 0 {
        return m.clone();
    }
    m.clone().exp()
}

/// Principal square root via the Denman-Beavers iteration.
pub fn sqrtm(m: &Matrix) -> Option<Matrix> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = Matrix::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm() / y_next.norm().max(1e-300);
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            return Some(y);
        }
    }
    if (&y * &y - m).norm() <= 1e-10 * m.norm().max(1.0) {
        Some(y)
    } else {
        None
    }
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Returns `None` when an eigenvalue lies within `max_angle` of the negative real
/// axis measure (|arg| > `max_angle`) or on zero, where the principal log is
/// undefined or ill-conditioned.
pub fn logm(m: &Matrix, max_angle: f64) -> Option<Matrix> {
    let n = m.nrows();
    if n == 0 {
        return Some(m.clone());
    }
    for ev in m.clone().complex_eigenvalues().iter() {
        if ev.norm() < 1e-300 || ev.arg().abs() > max_angle {
            return None;
        }
    }
    let id = Matrix::identity(n, n);
    let mut a = m.clone();
    let mut k = 0;
    while (&a - &id).norm() > 0.25 {
        a = sqrtm(&a)?;
        k += 1;
        if k > 60 {
            return None;
        }
    }
    let x = &a - &id;
    let mut term = x.clone();
    let mut acc = x.clone();
    for j in 2..200 {
        term = &term * &x;
        let t = &term * ((if j % 2 == 0 { -1.0 } else { 1.0 }) / j as f64);
        acc += &t;
        if t.norm() < 1e-18 {
            break;
        }
    }
    Some(acc * 2f64.powi(k))
}

/// Nearest orthogonal matrix (orthogonal factor of the polar decomposition).
pub fn polar_orthogonal(m: &Matrix) -> Matrix {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Frobenius distance of `gᵀg` from the identity.
pub fn orthogonality_residual(m: &Matrix) -> f64 {
    let n = m.nrows();
    (m.transpose() * m - Matrix::identity(n, n)).norm()
}

pub fn complexify(m: &Matrix) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

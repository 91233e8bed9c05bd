//! Finite-dimensional real Lie algebras given by structure constants in a fixed basis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::tolerance::Tolerances;

/// A real Lie algebra with bracket `[e_i, e_j] = Σ_k c[i][j][k] e_k`.
///
/// Only entries with `i < j` are supplied; the rest of the tensor is filled in by
/// antisymmetry, so `c[i][j][k] = -c[j][i][k]` holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    basis_names: Vec<String>,
    structure: Vec<f64>,
}

/// Outcome of a residual-based validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub passes: bool,
}

/// A linear subspace of algebra coordinates, stored as an orthonormal column basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            basis: Matrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            basis: Matrix::identity(ambient, ambient),
        }
    }

    /// Span of the columns of `m`.
    pub fn span(m: &Matrix, tol: f64) -> Self {
        Subspace {
            basis: linalg::orth(m, tol),
        }
    }

    pub fn span_of(ambient: usize, vectors: &[Vector], tol: f64) -> Self {
        Self::span(&linalg::hstack(ambient, vectors), tol)
    }

    /// Wraps a basis that is already orthonormal.
    pub(crate) fn from_orthonormal(basis: Matrix) -> Self {
        Subspace { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vector> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn project(&self, v: &Vector) -> Vector {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance(&self, v: &Vector) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.distance(v) <= tol * v.norm().max(1.0)
    }

    /// Largest distance of a basis vector of `self` from `other`.
    pub fn excess_over(&self, other: &Subspace) -> f64 {
        self.basis
            .column_iter()
            .map(|c| other.distance(&c.into_owned()))
            .fold(0.0, f64::max)
    }

    pub fn is_subspace_of(&self, other: &Subspace, tol: f64) -> bool {
        self.excess_over(other) <= tol
    }

    pub fn same_as(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(other, tol)
    }

    pub fn sum(&self, other: &Subspace, tol: f64) -> Subspace {
        Subspace::span(&linalg::hcat(&self.basis, &other.basis), tol)
    }

    /// Orthogonal complement inside the ambient coordinate space.
    pub fn orthogonal_complement(&self, tol: f64) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(self.ambient_dim());
        }
        Subspace {
            basis: linalg::null_space(&self.basis.transpose(), tol),
        }
    }

    /// Maps a subspace of a subalgebra's coordinates into the ambient coordinates
    /// via the subalgebra basis `embed` (columns).
    pub fn pushed_forward(&self, embed: &Matrix, tol: f64) -> Subspace {
        Subspace::span(&(embed * &self.basis), tol)
    }

    /// Checks that `m` maps the subspace into itself; returns the largest escape.
    pub fn invariance_residual(&self, m: &Matrix) -> f64 {
        self.basis
            .column_iter()
            .map(|c| self.distance(&(m * c)))
            .fold(0.0, f64::max)
    }
}

/// A derivation of a Lie algebra, as a matrix acting on coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    matrix: Matrix,
}

impl Derivation {
    /// Validates the Leibniz rule before accepting `matrix`.
    pub fn new(algebra: &LieAlgebra, matrix: Matrix, tol: &Tolerances) -> Result<Self> {
        let report = algebra.validate_derivation(&matrix, tol)?;
        if !report.passes {
            return Err(Error::validation("Leibniz rule", report.max_residual));
        }
        Ok(Derivation { matrix })
    }

    /// Wraps a matrix without checking the Leibniz rule.
    pub fn from_matrix_unchecked(matrix: Matrix) -> Self {
        Derivation { matrix }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn negated(&self) -> Self {
        Derivation {
            matrix: -&self.matrix,
        }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }
}

impl LieAlgebra {
    /// Builds an algebra from sparse entries `(i, j, k, value)` with `i < j`.
    pub fn new<S: Into<String>>(
        basis_names: Vec<S>,
        entries: impl IntoIterator<Item = (usize, usize, usize, f64)>,
    ) -> Result<Self> {
        let basis_names: Vec<String> = basis_names.into_iter().map(Into::into).collect();
        let dim = basis_names.len();
        if dim == 0 {
            return Err(Error::InvalidInput("algebra dimension must be positive".into()));
        }
        let mut structure = vec![0.0; dim * dim * dim];
        let mut seen = vec![false; dim * dim * dim];
        for (n, (i, j, k, v)) in entries.into_iter().enumerate() {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidInput(format!(
                    "structure entry {n}: index out of range for dimension {dim}"
                )));
            }
            if i >= j {
                return Err(Error::InvalidInput(format!(
                    "structure entry {n}: expected i < j, got ({i}, {j}); the lower triangle follows from antisymmetry"
                )));
            }
            let idx = (i * dim + j) * dim + k;
            if seen[idx] {
                return Err(Error::InvalidInput(format!(
                    "structure entry {n}: duplicate entry for ({i}, {j}, {k})"
                )));
            }
            seen[idx] = true;
            structure[idx] = v;
            structure[(j * dim + i) * dim + k] = -v;
        }
        Ok(LieAlgebra {
            dim,
            basis_names,
            structure,
        })
    }

    pub fn abelian(dim: usize) -> Self {
        LieAlgebra {
            dim,
            basis_names: (0..dim).map(|i| format!("e{}", i + 1)).collect(),
            structure: vec![0.0; dim * dim * dim],
        }
    }

    /// Structure constants of the span of `matrices` under the commutator.
    pub fn from_matrix_basis<S: Into<String>>(
        basis_names: Vec<S>,
        matrices: &[Matrix],
        tol: &Tolerances,
    ) -> Result<Self> {
        let dim = matrices.len();
        let n = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        let flat = Matrix::from_fn(n * n, dim, |r, c| matrices[c][(r / n, r % n)]);
        if linalg::rank(&flat, tol.rank) != dim {
            return Err(Error::InvalidInput("matrix basis is linearly dependent".into()));
        }
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let comm = &matrices[i] * &matrices[j] - &matrices[j] * &matrices[i];
                let rhs = Matrix::from_fn(n * n, 1, |r, _| comm[(r / n, r % n)]);
                let coeff = linalg::lstsq(&flat, &rhs);
                let residual = (&flat * &coeff - &rhs).norm();
                if residual > 1e-10 {
                    return Err(Error::validation(
                        format!("commutator of basis {i} and {j} leaves the span"),
                        residual,
                    ));
                }
                for k in 0..dim {
                    if coeff[(k, 0)].abs() > tol.alg {
                        entries.push((i, j, k, coeff[(k, 0)]));
                    }
                }
            }
        }
        LieAlgebra::new(basis_names, entries)
    }

    /// Direct sum: `self` occupies the leading coordinates.
    pub fn direct_sum(&self, other: &LieAlgebra) -> LieAlgebra {
        let a = self.dim;
        let mut names = self.basis_names.clone();
        names.extend(other.basis_names.iter().cloned());
        let mut entries = self.sparse_entries();
        entries.extend(
            other
                .sparse_entries()
                .into_iter()
                .map(|(i, j, k, v)| (i + a, j + a, k + a, v)),
        );
        LieAlgebra::new(names, entries).expect("direct sum of valid algebras")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    /// Nonzero entries with `i < j`, in lexicographic order.
    pub fn sparse_entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in 0..self.dim {
                    let v = self.structure_constant(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    pub fn basis_vector(&self, i: usize) -> Vector {
        let mut v = Vector::zeros(self.dim);
        v[i] = 1.0;
        v
    }

    fn check_len(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector of length {} does not belong to an algebra of dimension {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn bracket(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.bracket_raw(x, y))
    }

    pub(crate) fn bracket_raw(&self, x: &Vector, y: &Vector) -> Vector {
        let d = self.dim;
        let mut out = Vector::zeros(d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d;
                for k in 0..d {
                    out[k] += w * self.structure[base + k];
                }
            }
        }
        out
    }

    /// Largest absolute component of the Jacobi sum over all basis triples.
    pub fn validate_jacobi(&self, tol: &Tolerances) -> ResidualReport {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                for k in (j + 1)..d {
                    let (ei, ej, ek) = (self.basis_vector(i), self.basis_vector(j), self.basis_vector(k));
                    let s = self.bracket_raw(&self.bracket_raw(&ei, &ej), &ek)
                        + self.bracket_raw(&self.bracket_raw(&ej, &ek), &ei)
                        + self.bracket_raw(&self.bracket_raw(&ek, &ei), &ej);
                    worst = worst.max(s.amax());
                }
            }
        }
        ResidualReport {
            max_residual: worst,
            passes: worst <= tol.alg,
        }
    }

    /// Matrix of `x ↦ [y, x]`.
    pub fn ad(&self, y: &Vector) -> Result<Derivation> {
        self.check_len(y)?;
        Ok(Derivation::from_matrix_unchecked(self.ad_matrix(y)))
    }

    pub(crate) fn ad_matrix(&self, y: &Vector) -> Matrix {
        let d = self.dim;
        let mut m = Matrix::zeros(d, d);
        for j in 0..d {
            let col = self.bracket_raw(y, &self.basis_vector(j));
            m.set_column(j, &col);
        }
        m
    }

    /// Leibniz residual `D[x,y] - [Dx,y] - [x,Dy]` maximized over basis pairs.
    pub fn validate_derivation(&self, m: &Matrix, tol: &Tolerances) -> Result<ResidualReport> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::InvalidInput(format!(
                "derivation must be {d}x{d}, got {}x{}",
                m.nrows(),
                m.ncols(),
                d = self.dim
            )));
        }
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let (ei, ej) = (self.basis_vector(i), self.basis_vector(j));
                let lhs = m * self.bracket_raw(&ei, &ej);
                let rhs = self.bracket_raw(&(m * &ei), &ej) + self.bracket_raw(&ei, &(m * &ej));
                worst = worst.max((lhs - rhs).amax());
            }
        }
        Ok(ResidualReport {
            max_residual: worst,
            passes: worst <= tol.alg,
        })
    }

    /// Killing form `K(x, y) = tr(ad x ∘ ad y)` in the basis.
    pub fn killing_form(&self) -> Matrix {
        let ads: Vec<Matrix> = (0..self.dim).map(|i| self.ad_matrix(&self.basis_vector(i))).collect();
        Matrix::from_fn(self.dim, self.dim, |i, j| (&ads[i] * &ads[j]).trace())
    }

    /// Span of all brackets `[a, b]` with `a ∈ s`, `b ∈ t`.
    pub fn bracket_span(&self, s: &Subspace, t: &Subspace, tol: &Tolerances) -> Subspace {
        let mut cols = Vec::with_capacity(s.dim() * t.dim());
        for a in s.basis().column_iter() {
            for b in t.basis().column_iter() {
                cols.push(self.bracket_raw(&a.into_owned(), &b.into_owned()));
            }
        }
        Subspace::span_of(self.dim, &cols, tol.rank)
    }

    /// Derived series of the subalgebra `s`, ending with its stable term.
    pub fn derived_series_of(&self, s: &Subspace, tol: &Tolerances) -> Vec<Subspace> {
        let mut series = vec![s.clone()];
        loop {
            let last = series.last().unwrap();
            let next = self.bracket_span(last, last, tol);
            let stable = next.dim() == last.dim();
            if stable {
                break;
            }
            let done = next.is_zero();
            series.push(next);
            if done {
                break;
            }
        }
        series
    }

    /// Lower central series of the subalgebra `s`, ending with its stable term.
    pub fn lower_central_series_of(&self, s: &Subspace, tol: &Tolerances) -> Vec<Subspace> {
        let mut series = vec![s.clone()];
        loop {
            let last = series.last().unwrap();
            let next = self.bracket_span(s, last, tol);
            if next.dim() >= last.dim() {
                break;
            }
            let done = next.is_zero();
            series.push(next);
            if done {
                break;
            }
        }
        series
    }

    pub fn derived_series(&self, tol: &Tolerances) -> Vec<Subspace> {
        self.derived_series_of(&Subspace::full(self.dim), tol)
    }

    pub fn lower_central_series(&self, tol: &Tolerances) -> Vec<Subspace> {
        self.lower_central_series_of(&Subspace::full(self.dim), tol)
    }

    pub fn is_solvable(&self, tol: &Tolerances) -> bool {
        self.derived_series(tol).last().unwrap().is_zero()
    }

    pub fn is_nilpotent(&self, tol: &Tolerances) -> bool {
        self.lower_central_series(tol).last().unwrap().is_zero()
    }

    pub fn is_solvable_subalgebra(&self, s: &Subspace, tol: &Tolerances) -> bool {
        self.derived_series_of(s, tol).last().unwrap().is_zero()
    }

    pub fn is_nilpotent_subalgebra(&self, s: &Subspace, tol: &Tolerances) -> bool {
        self.lower_central_series_of(s, tol).last().unwrap().is_zero()
    }

    /// Largest escape of `[s, s]` from `s`.
    pub fn subalgebra_residual(&self, s: &Subspace, tol: &Tolerances) -> f64 {
        self.bracket_span(s, s, tol).excess_over(s)
    }

    /// Largest escape of `[g, s]` from `s`.
    pub fn ideal_residual(&self, s: &Subspace, tol: &Tolerances) -> f64 {
        self.bracket_span(&Subspace::full(self.dim), s, tol).excess_over(s)
    }

    /// Solvable radical, computed as the Killing-orthogonal complement of `[g, g]`.
    pub fn radical(&self, tol: &Tolerances) -> Result<Subspace> {
        let full = Subspace::full(self.dim);
        let derived = self.bracket_span(&full, &full, tol);
        let k = self.killing_form();
        let r = if derived.is_zero() {
            full
        } else {
            let constraints = derived.basis().transpose() * &k;
            Subspace::from_orthonormal(linalg::null_space(&constraints, tol.rank))
        };
        let ideal = self.ideal_residual(&r, tol);
        if ideal > 1e-8 {
            return Err(Error::validation("radical is not an ideal", ideal));
        }
        if !self.is_solvable_subalgebra(&r, tol) {
            return Err(Error::validation("radical is not solvable", f64::NAN));
        }
        Ok(r)
    }

    /// Smallest subalgebra containing `gens`.
    pub fn span_closure(&self, gens: &[Vector], tol: &Tolerances) -> Result<Subspace> {
        for g in gens {
            self.check_len(g)?;
        }
        let mut s = Subspace::span_of(self.dim, gens, tol.rank);
        loop {
            let grown = s.sum(&self.bracket_span(&s, &s, tol), tol.rank);
            if grown.dim() == s.dim() {
                return Ok(s);
            }
            s = grown;
        }
    }

    /// The subalgebra `s` as an algebra in its own (orthonormal) basis.
    pub fn restrict(&self, s: &Subspace, tol: &Tolerances) -> Result<LieAlgebra> {
        let q = s.basis();
        let n = s.dim();
        if n == 0 {
            return Err(Error::InvalidInput("cannot restrict to the zero subspace".into()));
        }
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let b = self.bracket_raw(&q.column(i).into_owned(), &q.column(j).into_owned());
                let coeff = q.transpose() * &b;
                let residual = (&b - q * &coeff).norm();
                if residual > 1e-8 {
                    return Err(Error::validation("subspace is not closed under the bracket", residual));
                }
                for k in 0..n {
                    if coeff[k].abs() > tol.alg {
                        entries.push((i, j, k, coeff[k]));
                    }
                }
            }
        }
        LieAlgebra::new((0..n).map(|i| format!("s{}", i + 1)).collect(), entries)
    }

    /// Quotient by an ideal, realized on the orthogonal complement of the ideal.
    ///
    /// Returns the quotient algebra and the complement basis (columns) used as
    /// representatives.
    pub fn quotient(&self, ideal: &Subspace, tol: &Tolerances) -> Result<(LieAlgebra, Matrix)> {
        let comp = ideal.orthogonal_complement(tol.rank);
        let n = comp.dim();
        if n == 0 {
            return Ok((LieAlgebra::abelian(0), Matrix::zeros(self.dim, 0)));
        }
        let c = comp.basis();
        let full = linalg::hcat(c, ideal.basis());
        let inv = full
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::validation("ideal and complement do not span", f64::NAN))?;
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let b = self.bracket_raw(&c.column(i).into_owned(), &c.column(j).into_owned());
                let coeff = &inv * b;
                for k in 0..n {
                    if coeff[k].abs() > tol.alg {
                        entries.push((i, j, k, coeff[k]));
                    }
                }
            }
        }
        let q = LieAlgebra::new((0..n).map(|i| format!("q{}", i + 1)).collect(), entries)?;
        Ok((q, c.clone()))
    }
}

/// Signature `(positive, negative, zero)` of a symmetric matrix.
pub fn signature(k: &Matrix, rel_tol: f64) -> (usize, usize, usize) {
    if k.nrows() == 0 {
        return (0, 0, 0);
    }
    let ev = k.clone().symmetric_eigen().eigenvalues;
    let scale = ev.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1.0);
    let mut sig = (0, 0, 0);
    for &e in ev.iter() {
        if e > rel_tol * scale {
            sig.0 += 1;
        } else if e < -rel_tol * scale {
            sig.1 += 1;
        } else {
            sig.2 += 1;
        }
    }
    sig
}

/// `sl(2,R)` in the basis `X = diag(1,-1)`, `Y = E21`, `Z = E12`.
pub fn sl2() -> LieAlgebra {
    LieAlgebra::new(
        vec!["X", "Y", "Z"],
        [(0, 1, 1, -2.0), (0, 2, 2, 2.0), (1, 2, 0, -1.0)],
    )
    .unwrap()
}

/// `so(3)` in the basis of infinitesimal rotations with `[X1, X2] = -X3`,
/// `[X2, X3] = -X1`, `[X1, X3] = X2`.
pub fn so3() -> LieAlgebra {
    LieAlgebra::new(
        vec!["Xh1", "Xh2", "Xh3"],
        [(0, 1, 2, -1.0), (1, 2, 0, -1.0), (0, 2, 1, 1.0)],
    )
    .unwrap()
}

/// Three-dimensional Heisenberg algebra `[e1, e2] = e3`.
pub fn heisenberg() -> LieAlgebra {
    LieAlgebra::new(vec!["e1", "e2", "e3"], [(0, 1, 2, 1.0)]).unwrap()
}

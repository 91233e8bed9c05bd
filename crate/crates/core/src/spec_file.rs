//! JSON system specification files.
//!
//! ```json
//! {
//!   "name": "sl2_ex_ii",
//!   "algebra": {"dim": 3, "basis_names": ["X", "Y", "Z"],
//!               "structure": [[0, 1, 1, -2.0], [0, 2, 2, 2.0], [1, 2, 0, -1.0]]},
//!   "derivation": {"kind": "inner", "inner_element": [0, 1, 0]},
//!   "control_fields": [[0, 0, 1]],
//!   "range": {"restricted": [[-1, 1]]},
//!   "group": {"factors": [{"type": "matrix", "size": 2,
//!                          "embedding": [[1, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0]],
//!                          "checks": ["unit_determinant"]}],
//!             "declarations": [{"factor": "SL(2,R)", "finite_center": true}]},
//!   "realization_derivation": [{"kind": "inner"}]
//! }
//! ```
//!
//! Structure entries `[i, j, k, c]` give `[e_i, e_j] = Σ c e_k` and must have
//! `i < j`. Embedding matrices are flattened row-major. `realization_derivation`
//! is optional; when absent the derivation is realized automatically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{Derivation, LieAlgebra};
use crate::checker::{ControlRange, ControlSystem, FiniteCenterDeclaration, GroupMeta};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::simulator::{Factor, FactorDerivation, GroupRealization, InvariantCheck, RealizedSystem};
use crate::tolerance::Tolerances;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algebra: AlgebraSpec,
    pub derivation: DerivationSpec,
    pub control_fields: Vec<Vec<f64>>,
    pub range: RangeSpec,
    #[serde(default)]
    pub group: GroupSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization_derivation: Option<Vec<RealizationDerivationSpec>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub dim: usize,
    pub basis_names: Vec<String>,
    #[serde(default)]
    pub structure: Vec<(usize, usize, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DerivationSpec {
    /// Rows of the matrix of `D` in the algebra basis.
    Matrix { matrix: Vec<Vec<f64>> },
    /// `D = ad(inner_element)`.
    Inner { inner_element: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeSpec {
    Restricted(Vec<(f64, f64)>),
    Unrestricted,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(default)]
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub declarations: Vec<FiniteCenterDeclaration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simply_connected: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorSpec {
    Translation {
        size: usize,
    },
    Matrix {
        size: usize,
        embedding: Vec<Vec<f64>>,
        #[serde(default)]
        checks: Vec<CheckSpec>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckSpec {
    UnitDeterminant,
    Orthogonal,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RealizationDerivationSpec {
    /// Defaults to the restriction of `D` when `matrix` is omitted.
    LinearMap {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
    },
    /// `Y₀` flattened row-major; recovered by least squares when omitted.
    Inner {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y0: Option<Vec<f64>>,
    },
    Trivial,
}

/// A parsed and validated specification.
#[derive(Clone, Debug)]
pub struct LoadedSpec {
    pub source: SpecFile,
    pub system: ControlSystem,
    pub realization: Option<GroupRealization>,
}

impl LoadedSpec {
    pub fn name(&self) -> Option<&str> {
        self.source.name.as_deref()
    }

    pub fn realized(&self) -> Result<RealizedSystem> {
        let r = self.realization.clone().ok_or_else(|| {
            Error::UnsupportedRealization("the specification declares no group factors".into())
        })?;
        RealizedSystem::new(self.system.clone(), r)
    }

    /// The source document with structure entries canonicalized (`i < j`,
    /// sorted, zero entries dropped).
    pub fn canonical(&self) -> SpecFile {
        let mut out = self.source.clone();
        let mut entries = self.system.algebra.sparse_entries();
        entries.sort_by_key(|e| (e.0, e.1, e.2));
        out.algebra.structure = entries;
        out
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize, path: &str) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::parse(path, format!("expected a {n}x{n} matrix")));
    }
    Ok(Matrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn vector_of(x: &[f64], n: usize, path: &str) -> Result<Vector> {
    if x.len() != n {
        return Err(Error::parse(path, format!("expected {n} coordinates, found {}", x.len())));
    }
    Ok(Vector::from_row_slice(x))
}

pub fn parse_spec(text: &str, tol: &Tolerances) -> Result<LoadedSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let source: SpecFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::parse(
            format!("$.{path} (line {}, column {})", inner.line(), inner.column()),
            inner.to_string(),
        )
    })?;
    build(source, tol)
}

pub fn load_spec(path: impl AsRef<Path>, tol: &Tolerances) -> Result<LoadedSpec> {
    parse_spec(&std::fs::read_to_string(path)?, tol)
}

pub fn to_json(spec: &SpecFile) -> String {
    serde_json::to_string_pretty(spec).expect("spec files always serialize")
}

/// Validates a parsed document and builds the system and realization.
pub fn build(source: SpecFile, tol: &Tolerances) -> Result<LoadedSpec> {
    let a = &source.algebra;
    let n = a.dim;
    if a.basis_names.len() != n {
        return Err(Error::parse(
            "$.algebra.basis_names",
            format!("expected {n} names, found {}", a.basis_names.len()),
        ));
    }
    for (idx, &(i, j, k, _)) in a.structure.iter().enumerate() {
        let path = format!("$.algebra.structure[{idx}]");
        if i >= n || j >= n || k >= n {
            return Err(Error::parse(path, format!("index out of range for dimension {n}")));
        }
        if i >= j {
            return Err(Error::parse(
                path,
                format!("entries must have i < j (got {i}, {j}); antisymmetry fills the rest"),
            ));
        }
    }
    let algebra = LieAlgebra::new(a.basis_names.clone(), a.structure.iter().cloned())
        .map_err(|e| Error::parse("$.algebra.structure", e.to_string()))?;
    let jacobi = algebra.validate_jacobi(tol);
    if !jacobi.passes {
        return Err(Error::validation("Jacobi identity", jacobi.max_residual));
    }
    let d = match &source.derivation {
        DerivationSpec::Matrix { matrix } => matrix_from_rows(matrix, n, "$.derivation.matrix")?,
        DerivationSpec::Inner { inner_element } => {
            let y = vector_of(inner_element, n, "$.derivation.inner_element")?;
            algebra.ad(&y)?.matrix().clone()
        }
    };
    let derivation = Derivation::new(&algebra, d, tol)?;
    let fields = source
        .control_fields
        .iter()
        .enumerate()
        .map(|(j, b)| vector_of(b, n, &format!("$.control_fields[{j}]")))
        .collect::<Result<Vec<_>>>()?;
    let range = match &source.range {
        RangeSpec::Restricted(b) => {
            for (j, &(lo, hi)) in b.iter().enumerate() {
                if !(lo < 0.0 && 0.0 < hi) {
                    return Err(Error::parse(
                        format!("$.range.restricted[{j}]"),
                        format!("[{lo}, {hi}] must contain 0 in its interior"),
                    ));
                }
            }
            if b.len() != fields.len() {
                return Err(Error::parse(
                    "$.range.restricted",
                    format!("expected {} intervals, found {}", fields.len(), b.len()),
                ));
            }
            ControlRange::Restricted(b.clone())
        }
        RangeSpec::Unrestricted => ControlRange::Unrestricted,
    };
    let meta = GroupMeta {
        connected: true,
        simply_connected_hint: source.group.simply_connected,
        declarations: source.group.declarations.clone(),
    };
    let system = ControlSystem::new(algebra, derivation, fields, range, meta)?;
    let realization = build_realization(&source, &system)?;
    if let Some(r) = &realization {
        RealizedSystem::new(system.clone(), r.clone())?;
    }
    Ok(LoadedSpec { source, system, realization })
}

fn build_realization(source: &SpecFile, sys: &ControlSystem) -> Result<Option<GroupRealization>> {
    let specs = &source.group.factors;
    if specs.is_empty() {
        return Ok(None);
    }
    let mut factors = Vec::with_capacity(specs.len());
    for (f, spec) in specs.iter().enumerate() {
        factors.push(match spec {
            FactorSpec::Translation { size } => Factor::Translation { dim: *size },
            FactorSpec::Matrix { size, embedding, checks } => {
                let embedding = embedding
                    .iter()
                    .enumerate()
                    .map(|(k, flat)| {
                        if flat.len() != size * size {
                            return Err(Error::parse(
                                format!("$.group.factors[{f}].embedding[{k}]"),
                                format!("expected {} entries (row-major {size}x{size})", size * size),
                            ));
                        }
                        Ok(Matrix::from_row_slice(*size, *size, flat))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let checks = checks
                    .iter()
                    .filter_map(|c| match c {
                        CheckSpec::UnitDeterminant => Some(InvariantCheck::UnitDeterminant),
                        CheckSpec::Orthogonal => Some(InvariantCheck::Orthogonal),
                        CheckSpec::None => None,
                    })
                    .collect();
                Factor::MatrixGroup { size: *size, embedding, checks }
            }
        });
    }
    let covered: usize = factors.iter().map(Factor::algebra_dim).sum();
    if covered != sys.dim() {
        return Err(Error::parse(
            "$.group.factors",
            format!("factors cover {covered} algebra coordinates, expected {}", sys.dim()),
        ));
    }
    let inferred = GroupRealization::infer(factors.clone(), sys)?;
    let Some(explicit) = &source.realization_derivation else {
        return Ok(Some(inferred));
    };
    if explicit.len() != factors.len() {
        return Err(Error::parse(
            "$.realization_derivation",
            format!("expected one entry per factor ({}), found {}", factors.len(), explicit.len()),
        ));
    }
    let mut derivations = Vec::with_capacity(factors.len());
    for (f, (spec, factor)) in explicit.iter().zip(&factors).enumerate() {
        let path = format!("$.realization_derivation[{f}]");
        let der = match (spec, factor) {
            (RealizationDerivationSpec::Trivial, _) => FactorDerivation::Trivial,
            (RealizationDerivationSpec::LinearMap { matrix }, Factor::Translation { dim }) => match matrix {
                Some(m) => FactorDerivation::LinearMap(matrix_from_rows(m, *dim, &format!("{path}.matrix"))?),
                None => match &inferred.derivations[f] {
                    FactorDerivation::Trivial => FactorDerivation::LinearMap(Matrix::zeros(*dim, *dim)),
                    other => other.clone(),
                },
            },
            (RealizationDerivationSpec::Inner { y0 }, Factor::MatrixGroup { size, .. }) => match y0 {
                Some(y) => {
                    if y.len() != size * size {
                        return Err(Error::parse(format!("{path}.y0"), format!("expected {} entries", size * size)));
                    }
                    FactorDerivation::Inner(Matrix::from_row_slice(*size, *size, y))
                }
                None => match &inferred.derivations[f] {
                    FactorDerivation::Trivial => FactorDerivation::Inner(Matrix::zeros(*size, *size)),
                    other => other.clone(),
                },
            },
            _ => {
                return Err(Error::parse(path, "derivation kind does not fit the factor type"));
            }
        };
        derivations.push(der);
    }
    Ok(Some(GroupRealization::new(factors, derivations)?))
}

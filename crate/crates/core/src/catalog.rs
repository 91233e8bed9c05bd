//! Bundled example systems (the files under `fixtures/`).

use crate::error::{Error, Result};
use crate::spec_file::{self, DerivationSpec, LoadedSpec, SpecFile};
use crate::tolerance::Tolerances;

pub const FIXTURES: &[(&str, &str)] = &[
    ("classical_r2_rotation", include_str!("../fixtures/classical_r2_rotation.json")),
    ("heisenberg_solvable", include_str!("../fixtures/heisenberg_solvable.json")),
    ("product_homogeneous", include_str!("../fixtures/product_homogeneous.json")),
    ("rank_deficient_r2", include_str!("../fixtures/rank_deficient_r2.json")),
    ("rolling_sphere", include_str!("../fixtures/rolling_sphere.json")),
    ("sl2_ex_i", include_str!("../fixtures/sl2_ex_i.json")),
    ("sl2_ex_ii", include_str!("../fixtures/sl2_ex_ii.json")),
    ("so3_driftless", include_str!("../fixtures/so3_driftless.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str, tol: &Tolerances) -> Result<LoadedSpec> {
    let text = source(name).ok_or_else(|| Error::InvalidInput(format!("no bundled system named {name:?}")))?;
    spec_file::parse_spec(text, tol)
}

/// The rolling sphere with rotation speed `omega` on the planar factor.
pub fn rolling_sphere(omega: f64, tol: &Tolerances) -> Result<LoadedSpec> {
    let mut spec: SpecFile = serde_json::from_str(source("rolling_sphere").expect("bundled")).expect("bundled fixture parses");
    if let DerivationSpec::Matrix { matrix } = &mut spec.derivation {
        matrix[0][1] = -omega;
        matrix[1][0] = omega;
    }
    spec.name = Some(format!("rolling_sphere(omega={omega})"));
    spec_file::build(spec, tol)
}

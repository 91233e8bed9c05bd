// Write a system specification by hand, load it and print the canonical form.

use liectrl::checker::controllability_verdict;
use liectrl::error::Result;
use liectrl::spec_file::{parse_spec, to_json};
use liectrl::tolerance::Tolerances;

const DOUBLE_INTEGRATOR: &str = r#"{
  "name": "double_integrator",
  "algebra": {"dim": 2, "basis_names": ["position", "velocity"]},
  "derivation": {"kind": "matrix", "matrix": [[0, 1], [0, 0]]},
  "control_fields": [[0, 1]],
  "range": {"restricted": [[-1, 1]]},
  "group": {"factors": [{"type": "translation", "size": 2}]}
}"#;

pub fn run_example() -> Result<String> {
    let tol = Tolerances::default();
    let spec = parse_spec(DOUBLE_INTEGRATOR, &tol)?;
    let verdict = controllability_verdict(&spec.system, &tol);
    println!("{}: {}", spec.name().unwrap_or("unnamed"), verdict.conclusion.label());
    let text = to_json(&spec.canonical());
    println!("{text}");
    Ok(text)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

macro_rules! example {
    ($module:ident, $file:literal) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(verdicts, "verdicts.rs");
example!(structure_constants, "structure_constants.rs");
example!(decomposition, "decomposition.rs");
example!(rolling_sphere, "rolling_sphere.rs");
example!(reachable_cloud, "reachable_cloud.rs");
example!(connect, "connect.rs");
example!(reverse_system, "reverse_system.rs");
example!(spec_files, "spec_files.rs");

#[test]
fn verdicts_example_matches_expected_labels() {
    let out = verdicts::run_example().unwrap();
    let label = |n: &str| out.iter().find(|(name, _)| name == n).unwrap().1.clone();
    assert_eq!(label("rolling_sphere"), "Controllable");
    assert_eq!(label("sl2_ex_ii"), "Controllable");
    assert_eq!(label("sl2_ex_i"), "SufficientConditionFails");
    assert_eq!(label("classical_r2_rotation"), "Controllable");
    assert_eq!(label("heisenberg_solvable"), "Controllable");
}

#[test]
fn structure_constants_example_is_solvable() {
    let b = structure_constants::run_example().unwrap();
    assert_eq!(b.dim(), 3);
    assert!(b.is_solvable(&Default::default()));
}

#[test]
fn decomposition_example_splits_sl2() {
    let dec = decomposition::run_example().unwrap();
    assert_eq!((dec.plus.dim(), dec.minus.dim(), dec.zero.dim()), (1, 1, 1));
}

#[test]
fn rolling_sphere_example_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let traj = rolling_sphere::run_example_to(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("time,f0_x0,f0_x1,f1_m00"));
    assert_eq!(text.lines().count(), traj.times.len() + 1);
    assert!((traj.times.last().unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn reachable_cloud_example_separates_the_systems() {
    let out = reachable_cloud::run_example().unwrap();
    assert!(out[0].1.result.passed());
    assert_eq!(out[0].1.result.dimension(), 3);
    assert!(!out[1].1.result.passed());
    assert_eq!(out[1].1.result.dimension(), 1);
}

#[test]
fn connect_example_reaches_target() {
    let c = connect::run_example().unwrap();
    assert!(c.residual <= liectrl::reach::CONNECT_TOLERANCE);
}

#[test]
fn reverse_system_example_agrees() {
    assert!(reverse_system::run_example().unwrap() <= 1e-6);
}

#[test]
fn spec_files_example_round_trips() {
    let text = spec_files::run_example().unwrap();
    let again = liectrl::spec_file::parse_spec(&text, &Default::default()).unwrap();
    assert_eq!(again.name(), Some("double_integrator"));
}

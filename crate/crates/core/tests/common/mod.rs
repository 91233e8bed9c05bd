#![allow(dead_code)]

use std::path::PathBuf;

use liectrl::catalog;
use liectrl::linalg::{Matrix, Vector};
use liectrl::simulator::RealizedSystem;
use liectrl::spec_file::LoadedSpec;
use liectrl::tolerance::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

pub fn spec(name: &str) -> LoadedSpec {
    catalog::load(name, &Tolerances::default()).unwrap()
}

pub fn realized(name: &str) -> RealizedSystem {
    spec(name).realized().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vector(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

pub fn uniform_matrix(rng: &mut impl Rng, r: usize, c: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(lo..hi))
}

/// Central-difference differential of `φ_t` at the identity in log-chart coordinates.
pub fn flow_differential(rs: &RealizedSystem, t: f64, h: f64) -> Matrix {
    let n = rs.dim();
    let mut jac = Matrix::zeros(n, n);
    for k in 0..n {
        let mut v = Vector::zeros(n);
        v[k] = h;
        let plus = rs.log_chart(&rs.linear_flow(t, &rs.group_exp(&v).unwrap())).unwrap();
        let minus = rs.log_chart(&rs.linear_flow(t, &rs.group_exp(&(-&v)).unwrap())).unwrap();
        jac.set_column(k, &((plus - minus) / (2.0 * h)));
    }
    jac
}

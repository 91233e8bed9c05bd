mod common;

use liectrl::algebra::{heisenberg, sl2, so3, Derivation, LieAlgebra};
use liectrl::checker::{ad_rank, kalman_rank, ControlRange, ControlSystem, GroupMeta};
use liectrl::decomposition::{DDecomposition, Spectrum};
use liectrl::linalg::{expm, Matrix, Vector};
use liectrl::reach::{composition_check, sample_signal};
use liectrl::simulator::{reverse_system, ControlSignal, Piece};
use liectrl::tolerance::Tolerances;
use proptest::prelude::*;

fn vector(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-1.0..1.0f64, n).prop_map(Vector::from_vec)
}

fn well_conditioned(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-0.4..0.4f64, n * n)
        .prop_map(move |v| Matrix::from_vec(n, n, v) + Matrix::identity(n, n))
}

/// Structure constants of `g` written in the basis given by the columns of `p`.
fn change_basis(g: &LieAlgebra, p: &Matrix) -> LieAlgebra {
    let n = g.dim();
    let pinv = p.clone().try_inverse().unwrap();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let c = &pinv * g.bracket(&p.column(i).into_owned(), &p.column(j).into_owned()).unwrap();
            for k in 0..n {
                if c[k] != 0.0 {
                    entries.push((i, j, k, c[k]));
                }
            }
        }
    }
    LieAlgebra::new(g.basis_names().to_vec(), entries).unwrap()
}

fn base_algebra(which: usize) -> LieAlgebra {
    match which {
        0 => sl2(),
        1 => so3(),
        _ => heisenberg(),
    }
}

fn abelian_system(a: Matrix, fields: Vec<Vector>) -> ControlSystem {
    let tol = Tolerances::default();
    let g = LieAlgebra::abelian(a.nrows());
    ControlSystem::new(
        g.clone(),
        Derivation::new(&g, a, &tol).unwrap(),
        fields,
        ControlRange::Unrestricted,
        GroupMeta::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_change_preserves_lie_structure(which in 0usize..3, p in well_conditioned(3), y in vector(3)) {
        let tol = Tolerances::default();
        let g = base_algebra(which);
        let h = change_basis(&g, &p);
        let loose = Tolerances { alg: 1e-10, ..tol };
        prop_assert!(h.validate_jacobi(&loose).passes);
        let k_expected = p.transpose() * g.killing_form() * &p;
        prop_assert!((h.killing_form() - k_expected).amax() <= 1e-9 * (1.0 + g.killing_form().amax()));
        let ad = h.ad(&y).unwrap();
        prop_assert!(h.validate_derivation(ad.matrix(), &loose).unwrap().passes);
    }

    #[test]
    fn killing_form_is_ad_invariant(which in 0usize..3, x in vector(3), y in vector(3), z in vector(3)) {
        let g = base_algebra(which);
        let k = g.killing_form();
        let lhs = (g.bracket(&x, &y).unwrap().transpose() * &k * &z)[0];
        let rhs = (x.transpose() * &k * g.bracket(&y, &z).unwrap())[0];
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn splitting_dimensions_add_up(which in 0usize..3, y in vector(3), p in well_conditioned(3)) {
        let tol = Tolerances::default();
        let h = change_basis(&base_algebra(which), &p);
        let d = h.ad(&y).unwrap();
        let dec = DDecomposition::compute(d.matrix(), &tol);
        prop_assert_eq!(dec.plus.dim() + dec.minus.dim() + dec.zero.dim(), 3);
        prop_assert!(dec.kernel.is_subspace_of(&dec.zero, 1e-8));
        prop_assert_eq!(dec.spectrum.total_multiplicity(), 3);
    }

    #[test]
    fn reversing_negates_the_spectrum_and_swaps_halves(a in prop::collection::vec(-2.0..2.0f64, 16), b in vector(4)) {
        let tol = Tolerances::default();
        let sys = abelian_system(Matrix::from_vec(4, 4, a), vec![b]);
        let rev = reverse_system(&sys);
        prop_assert_eq!(&reverse_system(&rev), &sys);
        let fwd = DDecomposition::compute(sys.derivation.matrix(), &tol);
        let bwd = DDecomposition::compute(rev.derivation.matrix(), &tol);
        prop_assert!(bwd.plus.same_as(&fwd.minus, 1e-6));
        prop_assert!(bwd.minus.same_as(&fwd.plus, 1e-6));
        let s = Spectrum::of(sys.derivation.matrix(), &tol);
        let r = Spectrum::of(rev.derivation.matrix(), &tol);
        for c in &s.classes {
            let hit = r.classes.iter().any(|q| (q.re + c.re).abs() < 1e-7 && (q.im + c.im).abs() < 1e-7 && q.multiplicity == c.multiplicity);
            prop_assert!(hit, "{c:?} has no negated partner");
        }
    }

    #[test]
    fn ad_rank_agrees_with_kalman(
        d in 1usize..=6,
        m in 1usize..=3,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let tol = Tolerances::default();
        let mut rng = common::rng(seed);
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| [-1.0, 0.0, 0.0, 1.0][rng.gen_range(0..4)];
        let a = Matrix::from_fn(d, d, |_, _| pick(&mut rng));
        let mut b = Matrix::from_fn(d, m, |_, _| pick(&mut rng));
        b[(0, 0)] = 1.0;
        let fields = (0..m).map(|j| b.column(j).into_owned()).collect();
        let sys = abelian_system(a.clone(), fields);
        let ours = ad_rank(&sys, &tol);
        let oracle = kalman_rank(&a, &b, &tol).unwrap();
        prop_assert_eq!(ours.dimension, oracle.rank);
        prop_assert_eq!(ours.holds, oracle.holds);
    }

    #[test]
    fn split_then_concat_is_the_same_signal(
        values in prop::collection::vec((0.05..1.0f64, -1.0..1.0f64), 1..6),
        frac in 0.05..0.95f64,
    ) {
        let pieces: Vec<Piece> = values.iter().map(|&(duration, v)| Piece { duration, value: vec![v] }).collect();
        let u = ControlSignal::new(pieces).unwrap();
        let (head, tail) = u.split_at(frac * u.duration());
        let back = head.concat(&tail);
        prop_assert!((back.duration() - u.duration()).abs() < 1e-12);
        prop_assert!((head.duration() - frac * u.duration()).abs() < 1e-12);
        let rs = common::realized("sl2_ex_ii");
        let e = rs.identity();
        let direct = rs.endpoint(&e, &u, 1e-2).unwrap();
        let joined = rs.endpoint(&e, &back, 1e-2).unwrap();
        prop_assert!(direct.distance(&joined) < 1e-6);
        prop_assert_eq!(u.reversed().reversed(), u.clone());
        prop_assert_eq!(u.negated().negated(), u);
    }

    #[test]
    fn flow_is_invertible_and_additive(v in vector(5), t in -2.0..2.0f64, s in -2.0..2.0f64) {
        let rs = common::realized("rolling_sphere");
        let g = rs.group_exp(&v).unwrap();
        prop_assert!(rs.linear_flow(-t, &rs.linear_flow(t, &g)).distance(&g) < 1e-12);
        let a = rs.linear_flow(t, &rs.linear_flow(s, &g));
        prop_assert!(a.distance(&rs.linear_flow(t + s, &g)) < 1e-12);
        prop_assert!(rs.flow_automorphism_residual(t, &g, &g.inverse()) < 1e-12);
    }

    #[test]
    fn flow_differential_is_exp_of_derivation(v in vector(3), t in -2.0..2.0f64) {
        let rs = common::realized("sl2_ex_ii");
        let d = rs.system.derivation.matrix();
        let g = rs.group_exp(&v).unwrap();
        prop_assert!(rs.linear_flow(t, &g).distance(&rs.group_exp(&(expm(&(d * t)) * &v)).unwrap()) < 1e-10);
        let fd = common::flow_differential(&rs, t, 1e-5);
        prop_assert!((fd - expm(&(d * t))).amax() < 1e-6);
    }

    #[test]
    fn sampling_is_deterministic_per_index(seed in any::<u64>(), i in 0usize..1000, j in 0usize..1000) {
        let rs = common::realized("rolling_sphere");
        let a = sample_signal(&rs, 1.0, seed, i, 8);
        prop_assert_eq!(&a, &sample_signal(&rs, 1.0, seed, i, 8));
        prop_assert!((a.duration() - 1.0).abs() < 1e-12);
        if i != j {
            prop_assert_ne!(&a, &sample_signal(&rs, 1.0, seed, j, 8));
        }
        for p in &a.pieces {
            prop_assert!(p.value.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }
}

#[test]
fn composition_holds_as_the_step_shrinks() {
    let rs = common::realized("rolling_sphere");
    let mut last = f64::INFINITY;
    for dt in [0.04, 0.02, 0.01] {
        let r = composition_check(&rs, 0.6, 0.4, 16, 5, dt).unwrap();
        assert!(r.max_mismatch <= 1e-6, "dt {dt}: {}", r.max_mismatch);
        assert!(r.max_monotonicity_mismatch <= 1e-6 || r.max_monotonicity_mismatch <= last);
        last = r.max_monotonicity_mismatch;
    }
}

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use liectrl::algebra::{Derivation, LieAlgebra};
use liectrl::catalog;
use liectrl::checker::{
    ad_rank, controllability_verdict, kalman_rank, Conclusion, ControlRange, ControlSystem, FscCertificate,
    GroupMeta, Hypothesis, Verdict,
};
use liectrl::decomposition::{check_grading, DDecomposition, EigenClass};
use liectrl::linalg::{expm, Matrix, Vector};
use liectrl::reach::{connect, local_accessibility_test, sample_reachable, sample_signal, ConnectOptions, DEFAULT_PIECES};
use liectrl::simulator::SolveOptions;
use liectrl::spec_file::{parse_spec, SpecFile};
use liectrl::tolerance::Tolerances;
use rand::Rng;

const SEED: u64 = 20240917;

struct Outcome {
    passed: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome, String>;

fn ok(passed: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { passed, detail })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn same_spectrum(actual: &[EigenClass], expected: &[(f64, f64, usize)], tol: f64) -> bool {
    actual.len() == expected.len()
        && expected.iter().all(|&(re, im, m)| {
            actual
                .iter()
                .any(|c| (c.re - re).abs() <= tol && (c.im - im).abs() <= tol && c.multiplicity == m)
        })
}

fn verdict(name: &str, tol: &Tolerances) -> Result<Verdict, String> {
    let spec = catalog::load(name, tol).map_err(err)?;
    Ok(controllability_verdict(&spec.system, tol))
}

fn verdict_reproduction() -> Result<Outcome, String> {
    let tol = Tolerances::default();
    let start = Instant::now();
    let mut failures = Vec::new();

    let rolling = verdict("rolling_sphere", &tol)?;
    let rs_sys = catalog::load("rolling_sphere", &tol).map_err(err)?.system;
    let b = &rs_sys.control_fields[0];
    let db = rs_sys.derivation.apply(b);
    let planar_span = b[0] * db[1] - b[1] * db[0];
    if !(same_spectrum(&rolling.spectrum.eigenvalues, &[(0.0, 0.0, 3), (0.0, 1.0, 1), (0.0, -1.0, 1)], tol.spec)
        && rolling.ad_rank.holds
        && planar_span.abs() > 0.5
        && matches!(rolling.fsc, FscCertificate::Certified { .. })
        && rolling.conclusion == Conclusion::Controllable)
    {
        failures.push("rolling_sphere");
    }

    let ii = verdict("sl2_ex_ii", &tol)?;
    let expected_chain = [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -2.0, 0.0]];
    let chain_ok = expected_chain
        .iter()
        .zip(&ii.ad_rank.spanning_set)
        .all(|(e, v)| (Vector::from_row_slice(e) - v).amax() <= tol.alg);
    if !(same_spectrum(&ii.spectrum.eigenvalues, &[(0.0, 0.0, 3)], tol.spec)
        && ii.ad_rank.holds
        && chain_ok
        && ii.conclusion == Conclusion::Controllable)
    {
        failures.push("sl2_ex_ii");
    }

    let i = verdict("sl2_ex_i", &tol)?;
    if !(same_spectrum(&i.spectrum.eigenvalues, &[(0.0, 0.0, 1), (2.0, 0.0, 1), (-2.0, 0.0, 1)], tol.spec)
        && i.ad_rank.holds
        && i.conclusion == (Conclusion::SufficientConditionFails { failed: vec![Hypothesis::Spectrum] }))
    {
        failures.push("sl2_ex_i");
    }

    let classical_sys = catalog::load("classical_r2_rotation", &tol).map_err(err)?.system;
    let classical = controllability_verdict(&classical_sys, &tol);
    let kalman = kalman_rank(classical_sys.derivation.matrix(), &classical_sys.field_matrix(), &tol).map_err(err)?;
    if !(kalman.holds
        && same_spectrum(&classical.spectrum.eigenvalues, &[(0.0, 1.0, 1), (0.0, -1.0, 1)], tol.spec)
        && matches!(classical.fsc, FscCertificate::Certified { .. })
        && classical.conclusion == Conclusion::Controllable)
    {
        failures.push("classical_r2_rotation");
    }

    let elapsed = start.elapsed();
    ok(
        failures.is_empty() && elapsed < Duration::from_secs(1),
        format!("4 verdicts reproduced, mismatches {failures:?}, {:.0} ms", elapsed.as_secs_f64() * 1e3),
    )
}

fn perturbed_spec(name: &str, rng: &mut impl Rng) -> SpecFile {
    let mut spec: SpecFile = serde_json::from_str(catalog::source(name).unwrap()).unwrap();
    let n = spec.algebra.dim;
    let size = rng.gen_range(1e-4..1e-1);
    let mut entries = std::mem::take(&mut spec.algebra.structure);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                let delta = size * rng.gen_range(-1.0..1.0);
                match entries.iter_mut().find(|e| e.0 == i && e.1 == j && e.2 == k) {
                    Some(e) => e.3 += delta,
                    None => entries.push((i, j, k, delta)),
                }
            }
        }
    }
    spec.algebra.structure = entries;
    spec
}

fn algebraic_properties() -> Result<Outcome, String> {
    let tol = Tolerances::default();
    let start = Instant::now();
    let (mut jacobi, mut leibniz, mut grading) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut problems = Vec::new();
    for name in catalog::names() {
        let sys = catalog::load(name, &tol).map_err(err)?.system;
        let g = &sys.algebra;
        jacobi = jacobi.max(g.validate_jacobi(&tol).max_residual);
        leibniz = leibniz.max(g.validate_derivation(sys.derivation.matrix(), &tol).map_err(err)?.max_residual);
        let dec = DDecomposition::compute(sys.derivation.matrix(), &tol);
        grading = grading.max(check_grading(g, &dec, &tol).map_err(err)?.max_residual);
        if dec.plus.dim() + dec.minus.dim() + dec.zero.dim() != g.dim() {
            problems.push(format!("{name}: dimensions do not add up"));
        }
        if !g.is_nilpotent_subalgebra(&dec.plus, &tol) || !g.is_nilpotent_subalgebra(&dec.minus, &tol) {
            problems.push(format!("{name}: g+ or g- not nilpotent"));
        }
    }
    let mut rng = common::rng(SEED);
    let candidates: Vec<&str> = catalog::names()
        .filter(|n| catalog::load(n, &tol).map(|s| s.system.dim() >= 3).unwrap_or(false))
        .collect();
    let mut rejected = 0;
    for t in 0..100 {
        let name = candidates[t % candidates.len()];
        let spec = perturbed_spec(name, &mut rng);
        let text = serde_json::to_string(&spec).map_err(err)?;
        let g = LieAlgebra::new(spec.algebra.basis_names.clone(), spec.algebra.structure.clone()).map_err(err)?;
        if !g.validate_jacobi(&tol).passes && parse_spec(&text, &tol).is_err() {
            rejected += 1;
        }
    }
    let elapsed = start.elapsed();
    let passed = jacobi <= 1e-12
        && leibniz <= 1e-12
        && grading <= 1e-8
        && problems.is_empty()
        && rejected == 100
        && elapsed < Duration::from_secs(5);
    ok(
        passed,
        format!(
            "jacobi {jacobi:.1e}, leibniz {leibniz:.1e}, grading {grading:.1e}, perturbations rejected {rejected}/100, {problems:?}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn flow_properties() -> Result<Outcome, String> {
    let start = Instant::now();
    let mut rng = common::rng(SEED + 3);
    let (mut exp_err, mut auto_err, mut group_err, mut diff_err) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for name in ["sl2_ex_ii", "rolling_sphere"] {
        let rs = common::realized(name);
        let n = rs.dim();
        let d = rs.system.derivation.matrix().clone();
        for _ in 0..100 {
            let v = common::uniform_vector(&mut rng, n, -1.0, 1.0);
            let w = common::uniform_vector(&mut rng, n, -1.0, 1.0);
            let t = rng.gen_range(-2.0..2.0);
            let s = rng.gen_range(-2.0..2.0);
            let g = rs.group_exp(&v).map_err(err)?;
            let h = rs.group_exp(&w).map_err(err)?;
            let lhs = rs.linear_flow(t, &g);
            let rhs = rs.group_exp(&(expm(&(&d * t)) * &v)).map_err(err)?;
            exp_err = exp_err.max(lhs.distance(&rhs));
            auto_err = auto_err.max(rs.flow_automorphism_residual(t, &g, &h));
            let twice = rs.linear_flow(t, &rs.linear_flow(s, &g));
            group_err = group_err.max(twice.distance(&rs.linear_flow(t + s, &g)));
            let fd = common::flow_differential(&rs, t, 1e-5);
            diff_err = diff_err.max((fd - expm(&(&d * t))).amax());
        }
    }
    let elapsed = start.elapsed();
    ok(
        exp_err <= 1e-8 && auto_err <= 1e-8 && group_err <= 1e-9 && diff_err <= 1e-5 && elapsed < Duration::from_secs(10),
        format!(
            "exp {exp_err:.1e}, automorphism {auto_err:.1e}, one-parameter {group_err:.1e}, differential {diff_err:.1e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn trajectory_properties() -> Result<Outcome, String> {
    let start = Instant::now();
    let dt = 1e-3;
    let mut rng = common::rng(SEED + 4);
    let (mut cocycle, mut concat, mut translation) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut invariants, mut inverse, mut reverse) = (0.0_f64, 0.0_f64, 0.0_f64);
    for name in ["sl2_ex_ii", "rolling_sphere"] {
        let rs = common::realized(name);
        let rev = rs.reversed();
        let e = rs.identity();
        for i in 0..50 {
            let tau = rng.gen_range(0.5..2.0);
            let u = sample_signal(&rs, tau, SEED, i, DEFAULT_PIECES);
            let g0 = rs.group_exp(&common::uniform_vector(&mut rng, rs.dim(), -1.0, 1.0)).map_err(err)?;
            let whole = rs.endpoint(&g0, &u, dt).map_err(err)?;

            let (head, tail) = u.split_at(rng.gen_range(0.1..tau - 0.1));
            let stepwise = rs.endpoint(&rs.endpoint(&g0, &head, dt).map_err(err)?, &tail, dt).map_err(err)?;
            cocycle = cocycle.max(whole.distance(&stepwise));

            let u2 = sample_signal(&rs, 0.7, SEED + 1, i, DEFAULT_PIECES);
            let x = rs.endpoint(&e, &u, dt).map_err(err)?;
            let y = rs.endpoint(&e, &u2, dt).map_err(err)?;
            let joined = rs.endpoint(&e, &u2.concat(&u), dt).map_err(err)?;
            concat = concat.max(joined.distance(&x.mul(&rs.linear_flow(tau, &y))));

            translation = translation.max(whole.distance(&x.mul(&rs.linear_flow(tau, &g0))));

            let back = rev.endpoint(&whole, &u.reversed().negated(), dt).map_err(err)?;
            inverse = inverse.max(back.distance(&g0));

            let star = rev.endpoint(&e, &u.reversed().negated(), dt).map_err(err)?;
            reverse = reverse.max(star.distance(&rs.linear_flow(-tau, &x.inverse())));
        }
        for i in 0..4 {
            let u = sample_signal(&rs, 5.0, SEED + 2, i, 20);
            let traj = rs.solve(&e, &u, &SolveOptions { dt, stride: 1 }).map_err(err)?;
            for g in &traj.states {
                invariants = invariants.max(rs.invariant_residual(g));
            }
        }
    }
    let elapsed = start.elapsed();
    ok(
        cocycle <= 1e-6
            && concat <= 1e-6
            && translation <= 1e-6
            && invariants <= 1e-7
            && inverse <= 1e-5
            && reverse <= 1e-6
            && elapsed < Duration::from_secs(30),
        format!(
            "cocycle {cocycle:.1e}, concatenation {concat:.1e}, translation {translation:.1e}, invariants {invariants:.1e}, inverse {inverse:.1e}, reverse {reverse:.1e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn empirical_accessibility() -> Result<Outcome, String> {
    let start = Instant::now();
    let dt = Tolerances::default().dt;
    let mut lines = Vec::new();
    let mut passed = true;
    for (name, expect_pass, expect_dim) in [("rolling_sphere", true, 5), ("sl2_ex_ii", true, 3), ("rank_deficient_r2", false, 1)] {
        let rs = common::realized(name);
        let cloud = sample_reachable(&rs, 1.0, 2000, SEED, DEFAULT_PIECES, dt).map_err(err)?;
        let report = local_accessibility_test(&cloud).map_err(err)?;
        let margin = match report.result {
            liectrl::reach::Accessibility::Pass { margin, .. } => margin,
            _ => 0.0,
        };
        let good = report.result.passed() == expect_pass
            && report.result.dimension() == expect_dim
            && (!expect_pass || margin > 0.0);
        passed &= good;
        lines.push(format!("{name} dim {} margin {margin:.3}", report.result.dimension()));
    }
    let elapsed = start.elapsed();
    ok(passed && elapsed < Duration::from_secs(60), format!("{}, {:.1} s", lines.join("; "), elapsed.as_secs_f64()))
}

fn connection_probes() -> Result<Outcome, String> {
    let start = Instant::now();
    let opts = ConnectOptions { seed: 3, ..ConnectOptions::default() };
    let sl2 = common::realized("sl2_ex_ii");
    let target = sl2.group_exp(&Vector::from_row_slice(&[1.0, 0.0, 0.0])).map_err(err)?;
    let a = connect(&sl2, &sl2.identity(), &target, &opts);
    let rolling = common::realized("rolling_sphere");
    let target = rolling.group_exp(&Vector::from_row_slice(&[1.0, 0.0, 0.0, 0.0, FRAC_PI_2])).map_err(err)?;
    let b = connect(&rolling, &rolling.identity(), &target, &opts);
    let describe = |r: &liectrl::error::Result<liectrl::reach::Connection>| match r {
        Ok(c) => format!("residual {:.1e} after {} trajectories", c.residual, c.trajectories),
        Err(e) => e.to_string(),
    };
    let passed = [&a, &b].iter().all(|r| matches!(r, Ok(c) if c.residual <= 1e-3 && c.trajectories <= 100_000));
    let elapsed = start.elapsed();
    ok(
        passed && elapsed < Duration::from_secs(300),
        format!("sl2_ex_ii {}; rolling_sphere {}; {:.1} s", describe(&a), describe(&b), elapsed.as_secs_f64()),
    )
}

fn oracle_equivalence() -> Result<Outcome, String> {
    let tol = Tolerances::default();
    let mut rng = common::rng(SEED + 7);
    let mut agree = 0;
    let mut deficient = 0;
    for _ in 0..200 {
        let d = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=3);
        let sparse = |rng: &mut rand_chacha::ChaCha8Rng| Matrix::from_fn(d, d.max(m), |_, _| [-1.0, 0.0, 0.0, 0.0, 1.0][rng.gen_range(0..5)]);
        let a = sparse(&mut rng).columns(0, d).into_owned();
        let mut b = sparse(&mut rng).columns(0, m).into_owned();
        while b.amax() == 0.0 {
            b = sparse(&mut rng).columns(0, m).into_owned();
        }
        let fields: Vec<Vector> = (0..m).map(|j| b.column(j).into_owned()).collect();
        let g = LieAlgebra::abelian(d);
        let sys = ControlSystem::new(
            g.clone(),
            Derivation::new(&g, a.clone(), &tol).map_err(err)?,
            fields,
            ControlRange::Unrestricted,
            GroupMeta::default(),
        )
        .map_err(err)?;
        let ours = ad_rank(&sys, &tol);
        let oracle = kalman_rank(&a, &b, &tol).map_err(err)?;
        if ours.holds == oracle.holds && ours.dimension == oracle.rank {
            agree += 1;
        }
        if !oracle.holds {
            deficient += 1;
        }
    }
    ok(agree == 200, format!("{agree}/200 agree, {deficient} rank-deficient"))
}

fn main() {
    let checks: [(&str, Check); 7] = [
        ("verdict reproduction", verdict_reproduction),
        ("algebraic property suite", algebraic_properties),
        ("flow suite", flow_properties),
        ("trajectory suite", trajectory_properties),
        ("empirical accessibility", empirical_accessibility),
        ("connection probes", connection_probes),
        ("ad-rank vs Kalman oracle", oracle_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {detail} [{:.2} s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

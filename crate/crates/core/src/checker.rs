//! Controllability verdicts for linear systems on Lie groups.
//!
//! A system is declared controllable when three hypotheses are certified: the
//! ad-rank condition (which gives local controllability from the identity), a
//! derivation spectrum on the imaginary axis, and the finite semisimple center
//! property of the group. The condition is sufficient only, so failure never
//! concludes non-controllability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{signature, Derivation, LieAlgebra, Subspace};
use crate::decomposition::{DDecomposition, EigenClass};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::tolerance::Tolerances;

/// Admissible control values `Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ControlRange {
    /// Per-channel box `[lo, hi]` with `lo < 0 < hi`.
    Restricted(Vec<(f64, f64)>),
    Unrestricted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteCenterDeclaration {
    pub factor: String,
    pub finite_center: bool,
}

/// Group-level facts the algebra cannot determine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMeta {
    pub connected: bool,
    pub simply_connected_hint: Option<bool>,
    pub declarations: Vec<FiniteCenterDeclaration>,
}

impl Default for GroupMeta {
    fn default() -> Self {
        GroupMeta {
            connected: true,
            simply_connected_hint: None,
            declarations: Vec::new(),
        }
    }
}

/// `ġ = X(g) + Σ u_j X^j(g)` with linear drift given by `derivation` and
/// right-invariant fields whose identity values are `control_fields`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSystem {
    pub algebra: LieAlgebra,
    pub derivation: Derivation,
    pub control_fields: Vec<Vector>,
    pub range: ControlRange,
    pub group: GroupMeta,
}

impl ControlSystem {
    pub fn new(
        algebra: LieAlgebra,
        derivation: Derivation,
        control_fields: Vec<Vector>,
        range: ControlRange,
        group: GroupMeta,
    ) -> Result<Self> {
        let dim = algebra.dim();
        if derivation.dim() != dim {
            return Err(Error::InvalidInput(format!(
                "derivation is {}x{} but the algebra has dimension {dim}",
                derivation.dim(),
                derivation.dim()
            )));
        }
        if control_fields.is_empty() {
            return Err(Error::InvalidInput("at least one control field is required".into()));
        }
        for (j, b) in control_fields.iter().enumerate() {
            if b.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "control field {j} has length {}, expected {dim}",
                    b.len()
                )));
            }
        }
        if let ControlRange::Restricted(bounds) = &range {
            if bounds.len() != control_fields.len() {
                return Err(Error::InvalidInput(format!(
                    "range has {} channels but there are {} control fields",
                    bounds.len(),
                    control_fields.len()
                )));
            }
            for (j, &(lo, hi)) in bounds.iter().enumerate() {
                if !(lo < 0.0 && 0.0 < hi) {
                    return Err(Error::InvalidInput(format!(
                        "channel {j}: range [{lo}, {hi}] must contain 0 in its interior"
                    )));
                }
            }
        }
        if !group.connected {
            return Err(Error::InvalidInput("the group must be connected".into()));
        }
        Ok(ControlSystem {
            algebra,
            derivation,
            control_fields,
            range,
            group,
        })
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn channels(&self) -> usize {
        self.control_fields.len()
    }

    /// Control-field matrix `B = (b_1 | … | b_m)`.
    pub fn field_matrix(&self) -> Matrix {
        linalg::hstack(self.dim(), &self.control_fields)
    }

    /// The reverse system: same fields and range, derivation `-D`.
    pub fn reversed(&self) -> ControlSystem {
        ControlSystem {
            derivation: self.derivation.negated(),
            ..self.clone()
        }
    }

    pub fn with_control_fields(&self, control_fields: Vec<Vector>) -> Result<ControlSystem> {
        let range = match &self.range {
            ControlRange::Restricted(b) if b.len() != control_fields.len() => {
                ControlRange::Restricted(vec![b[0]; control_fields.len()])
            }
            r => r.clone(),
        };
        ControlSystem::new(
            self.algebra.clone(),
            self.derivation.clone(),
            control_fields,
            range,
            self.group.clone(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdRank {
    pub holds: bool,
    pub dimension: usize,
    pub target: usize,
    /// The vectors `D^k b_j`, `0 ≤ k < dim`, in generation order.
    #[serde(skip)]
    pub spanning_set: Vec<Vector>,
}

/// Rank of `{D^k b_j}`; full rank gives `e ∈ int A_τ` for every `τ > 0`.
pub fn ad_rank(sys: &ControlSystem, tol: &Tolerances) -> AdRank {
    let n = sys.dim();
    let d = sys.derivation.matrix();
    let mut spanning_set = Vec::with_capacity(n * sys.channels());
    for b in &sys.control_fields {
        let mut v = b.clone();
        for _ in 0..n {
            let next = d * &v;
            spanning_set.push(v);
            v = next;
        }
    }
    let dimension = linalg::rank(&linalg::hstack(n, &spanning_set), tol.rank);
    AdRank {
        holds: dimension == n,
        dimension,
        target: n,
        spanning_set,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KalmanRank {
    pub holds: bool,
    pub rank: usize,
}

/// Kalman condition `rank [B, AB, …, A^{d-1}B] = d`.
pub fn kalman_rank(a: &Matrix, b: &Matrix, tol: &Tolerances) -> Result<KalmanRank> {
    let d = a.nrows();
    if a.ncols() != d || b.nrows() != d {
        return Err(Error::InvalidInput(format!(
            "A must be square and B must have {d} rows (A is {}x{}, B is {}x{})",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let m = b.ncols();
    let mut ctrb = Matrix::zeros(d, d * m);
    let mut block = b.clone();
    for k in 0..d {
        ctrb.view_mut((0, k * m), (d, m)).copy_from(&block);
        block = a * block;
    }
    let rank = linalg::rank(&ctrb, tol.rank);
    Ok(KalmanRank {
        holds: rank == d,
        rank,
    })
}

/// Evidence for the finite semisimple center hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FscCertificate {
    Certified { reason: String },
    Declared { factors: Vec<String> },
    DeclaredInfinite { factors: Vec<String> },
    Unknown,
}

impl FscCertificate {
    pub fn accepted(&self) -> bool {
        matches!(self, FscCertificate::Certified { .. } | FscCertificate::Declared { .. })
    }
}

pub const REASON_SOLVABLE: &str = "solvable";
pub const REASON_COMPACT: &str = "compact-type semisimple factors";

pub fn fsc_certificate(sys: &ControlSystem, tol: &Tolerances) -> FscCertificate {
    let g = &sys.algebra;
    if g.is_solvable(tol) {
        return FscCertificate::Certified {
            reason: REASON_SOLVABLE.into(),
        };
    }
    if let Ok(r) = g.radical(tol) {
        if let Ok((levi, _)) = g.quotient(&r, tol) {
            let (pos, neg, zero) = signature(&levi.killing_form(), 1e-10);
            if levi.dim() > 0 && pos == 0 && zero == 0 && neg == levi.dim() {
                return FscCertificate::Certified {
                    reason: REASON_COMPACT.into(),
                };
            }
        }
    }
    let decl = &sys.group.declarations;
    if decl.is_empty() {
        return FscCertificate::Unknown;
    }
    let infinite: Vec<String> = decl.iter().filter(|d| !d.finite_center).map(|d| d.factor.clone()).collect();
    if !infinite.is_empty() {
        return FscCertificate::DeclaredInfinite { factors: infinite };
    }
    FscCertificate::Declared {
        factors: decl.iter().map(|d| d.factor.clone()).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    AdRank,
    Spectrum,
    FiniteSemisimpleCenter,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Conclusion {
    Controllable,
    SufficientConditionFails { failed: Vec<Hypothesis> },
    Inconclusive { missing: Vec<Hypothesis> },
}

impl Conclusion {
    pub fn exit_code(&self) -> i32 {
        match self {
            Conclusion::Controllable => 0,
            Conclusion::SufficientConditionFails { .. } => 2,
            Conclusion::Inconclusive { .. } => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Conclusion::Controllable => "Controllable",
            Conclusion::SufficientConditionFails { .. } => "SufficientConditionFails",
            Conclusion::Inconclusive { .. } => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumClass {
    /// Criterion name; real parts of the eigenvalues are the Lyapunov exponents of the flow.
    pub criterion: &'static str,
    pub all_zero_real_part: bool,
    pub eigenvalues: Vec<EigenClass>,
    pub offending: Vec<EigenClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub ad_rank: AdRank,
    pub spectrum: SpectrumClass,
    pub fsc: FscCertificate,
    pub conclusion: Conclusion,
    /// Basis of `g^{+,0}`; the corresponding subgroup lies in the reachable set
    /// once the ad-rank condition holds.
    pub guaranteed_reachable: Vec<Vec<f64>>,
    /// Basis of `g^{-,0}`, reachable for the reverse system.
    pub guaranteed_co_reachable: Vec<Vec<f64>>,
    pub guaranteed_sets_contingent_on_ad_rank: bool,
    pub notes: Vec<String>,
}

fn columns(s: &Subspace) -> Vec<Vec<f64>> {
    s.basis_vectors().into_iter().map(|v| v.iter().cloned().collect()).collect()
}

pub fn controllability_verdict(sys: &ControlSystem, tol: &Tolerances) -> Verdict {
    let rank = ad_rank(sys, tol);
    let dec = DDecomposition::compute(sys.derivation.matrix(), tol);
    let spectrum = &dec.spectrum;
    let fsc = fsc_certificate(sys, tol);

    let mut failed = Vec::new();
    let mut notes = vec![
        "interior hypothesis e ∈ int A_τ certified through the ad-rank condition".to_string(),
    ];
    if !rank.holds {
        failed.push(Hypothesis::AdRank);
        notes.push(format!(
            "ad-rank span has dimension {} < {}: local controllability hypothesis not certified",
            rank.dimension, rank.target
        ));
    }
    if !spectrum.all_zero_real_part() {
        failed.push(Hypothesis::Spectrum);
    }
    if let FscCertificate::DeclaredInfinite { .. } = fsc {
        failed.push(Hypothesis::FiniteSemisimpleCenter);
    }
    let conclusion = if !failed.is_empty() {
        if fsc == FscCertificate::Unknown {
            notes.push("finite semisimple center could not be certified".into());
        }
        Conclusion::SufficientConditionFails { failed }
    } else if fsc == FscCertificate::Unknown {
        Conclusion::Inconclusive {
            missing: vec![Hypothesis::FiniteSemisimpleCenter],
        }
    } else {
        Conclusion::Controllable
    };
    if matches!(conclusion, Conclusion::SufficientConditionFails { .. }) {
        notes.push("the condition is sufficient only; no claim of non-controllability is made".into());
    }
    if let ControlRange::Restricted(_) = sys.range {
        notes.push(
            "restricted range: e ∈ int A_τ for some τ is equivalent to openness of the reachable set".into(),
        );
    }
    Verdict {
        spectrum: SpectrumClass {
            criterion: "zero real part",
            all_zero_real_part: spectrum.all_zero_real_part(),
            eigenvalues: spectrum.classes.clone(),
            offending: spectrum.offending(),
        },
        ad_rank: rank,
        fsc,
        conclusion,
        guaranteed_reachable: columns(&dec.plus_zero(tol)),
        guaranteed_co_reachable: columns(&dec.minus_zero(tol)),
        guaranteed_sets_contingent_on_ad_rank: true,
        notes,
    }
}

/// Verdicts for many systems, computed in parallel; output order follows input order.
pub fn batch_verdicts(systems: &[ControlSystem], tol: &Tolerances) -> Vec<Verdict> {
    systems.par_iter().map(|s| controllability_verdict(s, tol)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeviType {
    Trivial,
    CompactType,
    NoncompactType,
}

/// Structure of the generalized kernel `g₀`: its radical and semisimple quotient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct G0Report {
    pub g0_dim: usize,
    pub radical_dim: usize,
    pub quotient_dim: usize,
    /// `(positive, negative, zero)` eigenvalue counts of the quotient's Killing form.
    pub killing_signature: (usize, usize, usize),
    pub quotient_type: LeviType,
    /// Distance of `D(g₀)` from the radical, checked when the quotient is compact.
    pub d_into_radical_residual: Option<f64>,
}

pub fn g0_structure_report(sys: &ControlSystem, tol: &Tolerances) -> Result<G0Report> {
    let dec = DDecomposition::compute(sys.derivation.matrix(), tol);
    let g = &sys.algebra;
    let g0 = &dec.kernel;
    if g0.is_zero() {
        return Ok(G0Report {
            g0_dim: 0,
            radical_dim: 0,
            quotient_dim: 0,
            killing_signature: (0, 0, 0),
            quotient_type: LeviType::Trivial,
            d_into_radical_residual: None,
        });
    }
    let sub = g.restrict(g0, tol)?;
    let r_local = sub.radical(tol)?;
    let r = r_local.pushed_forward(g0.basis(), tol.rank);
    let (levi, _) = sub.quotient(&r_local, tol)?;
    let sig = signature(&levi.killing_form(), 1e-10);
    let quotient_type = if levi.dim() == 0 {
        LeviType::Trivial
    } else if sig.1 == levi.dim() {
        LeviType::CompactType
    } else {
        LeviType::NoncompactType
    };
    let mut d_into_radical_residual = None;
    if quotient_type == LeviType::CompactType {
        let d = sys.derivation.matrix();
        let residual = g0
            .basis()
            .column_iter()
            .map(|c| r.distance(&(d * c)))
            .fold(0.0, f64::max);
        if residual > 1e-9 {
            return Err(Error::validation("compact quotient but D(g₀) leaves the radical", residual));
        }
        d_into_radical_residual = Some(residual);
    }
    Ok(G0Report {
        g0_dim: g0.dim(),
        radical_dim: r.dim(),
        quotient_dim: levi.dim(),
        killing_signature: sig,
        quotient_type,
        d_into_radical_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{sl2, so3};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn system(algebra: LieAlgebra, d: Matrix, fields: Vec<Vector>, group: GroupMeta) -> ControlSystem {
        let t = tol();
        let m = fields.len();
        ControlSystem::new(
            algebra.clone(),
            Derivation::new(&algebra, d, &t).unwrap(),
            fields,
            ControlRange::Restricted(vec![(-1.0, 1.0); m]),
            group,
        )
        .unwrap()
    }

    fn rolling_sphere() -> ControlSystem {
        let g = LieAlgebra::abelian(2).direct_sum(&so3());
        let mut d = Matrix::zeros(5, 5);
        d[(0, 1)] = -1.0;
        d[(1, 0)] = 1.0;
        let fields = vec![
            v(&[1., 0., 0., 0., 0.]),
            v(&[0., 0., 1., 0., 0.]),
            v(&[0., 0., 0., 1., 0.]),
            v(&[0., 0., 0., 0., 1.]),
        ];
        let mut s = system(g, d, fields, GroupMeta::default());
        s.range = ControlRange::Unrestricted;
        s
    }

    fn sl2_declared() -> GroupMeta {
        GroupMeta {
            declarations: vec![FiniteCenterDeclaration {
                factor: "SL(2,R)".into(),
                finite_center: true,
            }],
            ..GroupMeta::default()
        }
    }

    fn sl2_ex_i() -> ControlSystem {
        let a = sl2();
        let d = a.ad(&v(&[1., 0., 0.])).unwrap().matrix().clone();
        system(a, d, vec![v(&[1., 1., 1.])], sl2_declared())
    }

    fn sl2_ex_ii() -> ControlSystem {
        let a = sl2();
        let d = a.ad(&v(&[0., 1., 0.])).unwrap().matrix().clone();
        system(a, d, vec![v(&[0., 0., 1.])], sl2_declared())
    }

    #[test]
    fn ad_rank_examples() {
        let t = tol();
        let r = ad_rank(&sl2_ex_i(), &t);
        assert!(r.holds);
        // H, D(H) = [X, H] = 2(Z - Y), D²(H) = 4(Y + Z) in the coordinates (X, Y, Z).
        assert_eq!(r.spanning_set[1], v(&[0., -2., 2.]));
        assert_eq!(r.spanning_set[2], v(&[0., 4., 4.]));
        let r = ad_rank(&sl2_ex_ii(), &t);
        assert_eq!(r.spanning_set[..3], [v(&[0., 0., 1.]), v(&[-1., 0., 0.]), v(&[0., -2., 0.])]);
        let r = ad_rank(&rolling_sphere(), &t);
        assert_eq!((r.holds, r.dimension), (true, 5));
        let zero = system(LieAlgebra::abelian(2), Matrix::zeros(2, 2), vec![v(&[1., 0.]), v(&[0., 1.])], GroupMeta::default());
        assert!(ad_rank(&zero, &t).holds);
    }

    #[test]
    fn kalman_examples() {
        let t = tol();
        let rot = Matrix::from_row_slice(2, 2, &[0., -1., 1., 0.]);
        let e1 = Matrix::from_row_slice(2, 1, &[1., 0.]);
        assert!(kalman_rank(&rot, &e1, &t).unwrap().holds);
        let a = Matrix::from_row_slice(3, 3, &[1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        assert!(kalman_rank(&a, &Matrix::identity(3, 3), &t).unwrap().holds);
        let diag = Matrix::from_diagonal(&v(&[1., 2.]));
        assert_eq!(kalman_rank(&diag, &e1, &t).unwrap(), KalmanRank { holds: false, rank: 1 });
        assert!(kalman_rank(&diag, &Matrix::zeros(3, 1), &t).is_err());
    }

    #[test]
    fn fsc_examples() {
        let t = tol();
        let heis = system(crate::algebra::heisenberg(), Matrix::zeros(3, 3), vec![v(&[1., 0., 0.])], GroupMeta::default());
        assert_eq!(fsc_certificate(&heis, &t), FscCertificate::Certified { reason: REASON_SOLVABLE.into() });
        assert_eq!(fsc_certificate(&rolling_sphere(), &t), FscCertificate::Certified { reason: REASON_COMPACT.into() });
        assert!(matches!(fsc_certificate(&sl2_ex_ii(), &t), FscCertificate::Declared { .. }));
        let mut undeclared = sl2_ex_ii();
        undeclared.group.declarations.clear();
        assert_eq!(fsc_certificate(&undeclared, &t), FscCertificate::Unknown);
    }

    #[test]
    fn verdicts() {
        let t = tol();
        assert_eq!(controllability_verdict(&rolling_sphere(), &t).conclusion, Conclusion::Controllable);
        assert_eq!(controllability_verdict(&sl2_ex_ii(), &t).conclusion, Conclusion::Controllable);
        let v1 = controllability_verdict(&sl2_ex_i(), &t);
        assert_eq!(
            v1.conclusion,
            Conclusion::SufficientConditionFails { failed: vec![Hypothesis::Spectrum] }
        );
        let off: Vec<f64> = v1.spectrum.offending.iter().map(|c| c.re).collect();
        assert_eq!(off, vec![-2.0, 2.0]);
        let mut undeclared = sl2_ex_ii();
        undeclared.group.declarations.clear();
        assert_eq!(controllability_verdict(&undeclared, &t).conclusion.exit_code(), 3);
        let mut infinite = sl2_ex_ii();
        infinite.group.declarations[0].finite_center = false;
        assert_eq!(
            controllability_verdict(&infinite, &t).conclusion,
            Conclusion::SufficientConditionFails { failed: vec![Hypothesis::FiniteSemisimpleCenter] }
        );
    }

    #[test]
    fn g0_reports() {
        let t = tol();
        let r = g0_structure_report(&sl2_ex_ii(), &t).unwrap();
        assert_eq!((r.g0_dim, r.radical_dim, r.quotient_type), (3, 0, LeviType::NoncompactType));
        assert_eq!(r.killing_signature, (2, 1, 0));
        let ab = system(LieAlgebra::abelian(3), Matrix::zeros(3, 3), vec![v(&[1., 0., 0.])], GroupMeta::default());
        assert_eq!(g0_structure_report(&ab, &t).unwrap().quotient_type, LeviType::Trivial);
        let so = system(so3(), Matrix::zeros(3, 3), vec![v(&[1., 0., 0.])], GroupMeta::default());
        let r = g0_structure_report(&so, &t).unwrap();
        assert_eq!(r.quotient_type, LeviType::CompactType);
        assert_eq!(r.d_into_radical_residual, Some(0.0));
        let r = g0_structure_report(&rolling_sphere(), &t).unwrap();
        assert_eq!((r.g0_dim, r.quotient_type), (3, LeviType::CompactType));
    }

    #[test]
    fn range_validation() {
        let t = tol();
        let a = LieAlgebra::abelian(1);
        let d = Derivation::new(&a, Matrix::zeros(1, 1), &t).unwrap();
        let bad = ControlSystem::new(a.clone(), d.clone(), vec![v(&[1.])], ControlRange::Restricted(vec![(0.0, 1.0)]), GroupMeta::default());
        assert!(bad.is_err());
        assert!(ControlSystem::new(a, d, vec![], ControlRange::Unrestricted, GroupMeta::default()).is_err());
    }
}

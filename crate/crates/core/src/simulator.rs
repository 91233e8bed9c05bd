//! Matrix-group realizations of linear systems: group exponential, the linear flow
//! `φ_t`, controlled trajectories and the reverse system.
//!
//! A realization is a direct product of factors. Translation factors are `R^d` with
//! addition; matrix factors are groups of `n×n` matrices generated by an embedding of
//! the factor's algebra basis. Factors consume consecutive algebra coordinates.
//!
//! Right-invariant fields act as `b·g` on matrix factors and as the constant `b` on
//! translation factors. The drift is `x ↦ A x` on translation factors and
//! `g ↦ Y₀ g - g Y₀` on matrix factors, whose flow is conjugation by `exp(t Y₀)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::checker::{ControlRange, ControlSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::tolerance::Tolerances;

/// Angle beyond which an eigenvalue is considered too close to the negative real
/// axis for the principal logarithm.
pub const LOG_MAX_ANGLE: f64 = 0.95 * std::f64::consts::PI;

const RENORMALIZE_ABOVE: f64 = 1e-10;
const REJECT_ABOVE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantCheck {
    UnitDeterminant,
    Orthogonal,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Translation {
        dim: usize,
    },
    MatrixGroup {
        size: usize,
        embedding: Vec<Matrix>,
        checks: Vec<InvariantCheck>,
    },
}

impl Factor {
    /// Number of algebra coordinates owned by the factor.
    pub fn algebra_dim(&self) -> usize {
        match self {
            Factor::Translation { dim } => *dim,
            Factor::MatrixGroup { embedding, .. } => embedding.len(),
        }
    }

    fn embed(&self, coords: &[f64]) -> Matrix {
        match self {
            Factor::Translation { .. } => Matrix::from_column_slice(coords.len(), 1, coords),
            Factor::MatrixGroup { size, embedding, .. } => embedding
                .iter()
                .zip(coords)
                .fold(Matrix::zeros(*size, *size), |acc, (e, &c)| acc + e * c),
        }
    }

    fn flat_embedding(&self) -> Option<Matrix> {
        match self {
            Factor::Translation { .. } => None,
            Factor::MatrixGroup { size, embedding, .. } => {
                let n = *size;
                Some(Matrix::from_fn(n * n, embedding.len(), |r, c| embedding[c][(r / n, r % n)]))
            }
        }
    }
}

/// How the derivation is realized on one factor.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorDerivation {
    /// `x ↦ A x` on a translation factor.
    LinearMap(Matrix),
    /// Conjugation flow `g ↦ exp(tY₀) g exp(-tY₀)` on a matrix factor.
    Inner(Matrix),
    Trivial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupRealization {
    pub factors: Vec<Factor>,
    pub derivations: Vec<FactorDerivation>,
}

impl GroupRealization {
    pub fn new(factors: Vec<Factor>, derivations: Vec<FactorDerivation>) -> Result<Self> {
        if factors.len() != derivations.len() {
            return Err(Error::InvalidInput(format!(
                "{} factors but {} derivation realizations",
                factors.len(),
                derivations.len()
            )));
        }
        Ok(GroupRealization { factors, derivations })
    }

    /// Realizes the system's derivation on each factor: the restricted matrix on
    /// translation factors, and `Y₀` recovered by least squares over the embedded
    /// basis on matrix factors.
    pub fn infer(factors: Vec<Factor>, sys: &ControlSystem) -> Result<Self> {
        let d = sys.derivation.matrix();
        let mut derivations = Vec::with_capacity(factors.len());
        let mut offset = 0;
        for f in &factors {
            let k = f.algebra_dim();
            if offset + k > d.nrows() {
                return Err(Error::InvalidInput("factors own more coordinates than the algebra has".into()));
            }
            let block = d.view((offset, offset), (k, k)).into_owned();
            let der = if linalg::max_abs(&block) == 0.0 {
                FactorDerivation::Trivial
            } else {
                match f {
                    Factor::Translation { .. } => FactorDerivation::LinearMap(block),
                    Factor::MatrixGroup { .. } => {
                        FactorDerivation::Inner(recover_inner(&sys.algebra, offset, k, &block, f)?)
                    }
                }
            };
            derivations.push(der);
            offset += k;
        }
        GroupRealization::new(factors, derivations)
    }

    pub fn algebra_dim(&self) -> usize {
        self.factors.iter().map(Factor::algebra_dim).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        self.factors
            .iter()
            .scan(0, |acc, f| {
                let o = *acc;
                *acc += f.algebra_dim();
                Some(o)
            })
            .collect()
    }

    pub fn reversed(&self) -> GroupRealization {
        GroupRealization {
            factors: self.factors.clone(),
            derivations: self
                .derivations
                .iter()
                .map(|d| match d {
                    FactorDerivation::LinearMap(a) => FactorDerivation::LinearMap(-a),
                    FactorDerivation::Inner(y) => FactorDerivation::Inner(-y),
                    FactorDerivation::Trivial => FactorDerivation::Trivial,
                })
                .collect(),
        }
    }
}

/// Solves `ad(Y₀) = D_block` for `Y₀` in the span of the embedded basis.
fn recover_inner(
    algebra: &crate::algebra::LieAlgebra,
    offset: usize,
    k: usize,
    block: &Matrix,
    factor: &Factor,
) -> Result<Matrix> {
    // Column i of the system: vec(ad(e_{offset+i}) restricted to the block).
    let mut sys = Matrix::zeros(k * k, k);
    for i in 0..k {
        let ad = algebra.ad_matrix(&algebra.basis_vector(offset + i));
        let restricted = ad.view((offset, offset), (k, k));
        for (r, x) in restricted.iter().enumerate() {
            sys[(r, i)] = *x;
        }
    }
    let rhs = Matrix::from_iterator(k * k, 1, block.iter().cloned());
    let y = linalg::lstsq(&sys, &rhs);
    let residual = (&sys * &y - &rhs).norm();
    if residual > 1e-8 {
        return Err(Error::UnsupportedRealization(format!(
            "derivation on the matrix factor at coordinate {offset} is not inner (least-squares residual {residual:.3e})"
        )));
    }
    Ok(factor.embed(y.as_slice()))
}

/// Value of one factor of a group element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorValue {
    /// Column vector (`d×1`).
    Translation(Matrix),
    Matrix(Matrix),
}

impl FactorValue {
    pub fn translation(x: &[f64]) -> FactorValue {
        FactorValue::Translation(Matrix::from_column_slice(x.len(), 1, x))
    }

    pub fn as_matrix(&self) -> &Matrix {
        match self {
            FactorValue::Translation(v) => v,
            FactorValue::Matrix(m) => m,
        }
    }

    fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> FactorValue {
        match self {
            FactorValue::Translation(v) => FactorValue::Translation(f(v)),
            FactorValue::Matrix(m) => FactorValue::Matrix(f(m)),
        }
    }
}

/// An element of a product group (also used for tangent values during integration).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub parts: Vec<FactorValue>,
}

impl GroupElement {
    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| match (a, b) {
                    (FactorValue::Translation(x), FactorValue::Translation(y)) => FactorValue::Translation(x + y),
                    (FactorValue::Matrix(x), FactorValue::Matrix(y)) => FactorValue::Matrix(x * y),
                    _ => panic!("mismatched factor kinds"),
                })
                .collect(),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            parts: self
                .parts
                .iter()
                .map(|p| match p {
                    FactorValue::Translation(x) => FactorValue::Translation(-x),
                    FactorValue::Matrix(m) => FactorValue::Matrix(m.clone().try_inverse().expect("group elements are invertible")),
                })
                .collect(),
        }
    }

    /// Frobenius distance on matrix factors plus Euclidean distance on translations.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| (a.as_matrix() - b.as_matrix()).norm())
            .sum()
    }

    /// Per-factor coordinates: translation vectors, then matrices row-major.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.parts {
            match p {
                FactorValue::Translation(v) => out.extend(v.iter()),
                FactorValue::Matrix(m) => out.extend(m.transpose().iter()),
            }
        }
        out
    }

    fn axpy(&self, s: f64, other: &GroupElement) -> GroupElement {
        GroupElement {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.map(|m| m + b.as_matrix() * s))
                .collect(),
        }
    }
}

/// One constant-control segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub duration: f64,
    pub value: Vec<f64>,
}

/// Piecewise-constant control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub pieces: Vec<Piece>,
}

impl ControlSignal {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let m = pieces.first().map(|p| p.value.len()).unwrap_or(0);
        for (i, p) in pieces.iter().enumerate() {
            if !(p.duration > 0.0) || !p.duration.is_finite() {
                return Err(Error::InvalidInput(format!("piece {i}: duration must be positive")));
            }
            if p.value.len() != m {
                return Err(Error::InvalidInput(format!("piece {i}: expected {m} channels")));
            }
        }
        Ok(ControlSignal { pieces })
    }

    pub fn constant(duration: f64, value: Vec<f64>) -> Result<Self> {
        ControlSignal::new(vec![Piece { duration, value }])
    }

    pub fn zero(duration: f64, channels: usize) -> Result<Self> {
        ControlSignal::constant(duration, vec![0.0; channels])
    }

    pub fn duration(&self) -> f64 {
        self.pieces.iter().map(|p| p.duration).sum()
    }

    pub fn channels(&self) -> usize {
        self.pieces.first().map(|p| p.value.len()).unwrap_or(0)
    }

    /// `self` on `[0, s]` followed by `other` shifted to start at `s`.
    pub fn concat(&self, other: &ControlSignal) -> ControlSignal {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        ControlSignal { pieces }
    }

    /// Splits at time `s` into the restriction to `[0, s]` and the shifted tail `Θ_s u`.
    pub fn split_at(&self, s: f64) -> (ControlSignal, ControlSignal) {
        let mut head = Vec::new();
        let mut tail = Vec::new();
        let mut t = 0.0;
        for p in &self.pieces {
            let end = t + p.duration;
            if end <= s {
                head.push(p.clone());
            } else if t >= s {
                tail.push(p.clone());
            } else {
                head.push(Piece { duration: s - t, value: p.value.clone() });
                tail.push(Piece { duration: end - s, value: p.value.clone() });
            }
            t = end;
        }
        (ControlSignal { pieces: head }, ControlSignal { pieces: tail })
    }

    /// Time reversal `s ↦ u(T - s)`.
    pub fn reversed(&self) -> ControlSignal {
        ControlSignal {
            pieces: self.pieces.iter().rev().cloned().collect(),
        }
    }

    pub fn negated(&self) -> ControlSignal {
        ControlSignal {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    duration: p.duration,
                    value: p.value.iter().map(|x| -x).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub dt: f64,
    /// Record every `stride`-th step (piece boundaries and the endpoint are always recorded).
    pub stride: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            dt: Tolerances::default().dt,
            stride: 1,
        }
    }
}

impl SolveOptions {
    pub fn with_dt(dt: f64) -> Self {
        SolveOptions { dt, stride: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GroupElement>,
}

impl Trajectory {
    pub fn last(&self) -> &GroupElement {
        self.states.last().expect("trajectories are never empty")
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec!["time".to_string()];
        if let Some(s) = self.states.first() {
            for (f, p) in s.parts.iter().enumerate() {
                match p {
                    FactorValue::Translation(v) => names.extend((0..v.len()).map(|i| format!("f{f}_x{i}"))),
                    FactorValue::Matrix(m) => {
                        for r in 0..m.nrows() {
                            names.extend((0..m.ncols()).map(|c| format!("f{f}_m{r}{c}")));
                        }
                    }
                }
            }
        }
        names
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.column_names().join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(*t).chain(s.flatten()).map(|x| format!("{x:.17e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// One JSON object per sample: `{"time": t, "factors": [[...], ...]}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (t, s) in self.times.iter().zip(&self.states) {
            let factors: Vec<Vec<f64>> = s
                .parts
                .iter()
                .map(|p| GroupElement { parts: vec![p.clone()] }.flatten())
                .collect();
            let rec = serde_json::json!({ "time": t, "factors": factors });
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }
}

/// A control system paired with a validated matrix-group realization.
#[derive(Clone, Debug)]
pub struct RealizedSystem {
    pub system: ControlSystem,
    pub realization: GroupRealization,
    control_box: Vec<(f64, f64)>,
    clamp: bool,
    /// Per channel, per factor: embedded identity value of the control field.
    fields: Vec<Vec<Matrix>>,
}

/// Default box used to clamp unrestricted control ranges.
pub const DEFAULT_BOX: (f64, f64) = (-1.0, 1.0);

impl RealizedSystem {
    pub fn new(system: ControlSystem, realization: GroupRealization) -> Result<Self> {
        validate_realization(&system, &realization)?;
        let offsets = realization.offsets();
        let fields = system
            .control_fields
            .iter()
            .map(|b| {
                realization
                    .factors
                    .iter()
                    .zip(&offsets)
                    .map(|(f, &o)| f.embed(&b.as_slice()[o..o + f.algebra_dim()]))
                    .collect()
            })
            .collect();
        let (control_box, clamp) = match &system.range {
            ControlRange::Restricted(b) => (b.clone(), false),
            ControlRange::Unrestricted => (vec![DEFAULT_BOX; system.channels()], true),
        };
        Ok(RealizedSystem {
            system,
            realization,
            control_box,
            clamp,
            fields,
        })
    }

    /// Replaces the clamping box used for unrestricted ranges.
    pub fn with_box(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.system.channels() {
            return Err(Error::InvalidInput("box must have one interval per channel".into()));
        }
        if self.clamp {
            self.control_box = bounds;
        }
        Ok(self)
    }

    pub fn control_box(&self) -> &[(f64, f64)] {
        &self.control_box
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn channels(&self) -> usize {
        self.system.channels()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            parts: self
                .realization
                .factors
                .iter()
                .map(|f| match f {
                    Factor::Translation { dim } => FactorValue::Translation(Matrix::zeros(*dim, 1)),
                    Factor::MatrixGroup { size, .. } => FactorValue::Matrix(Matrix::identity(*size, *size)),
                })
                .collect(),
        }
    }

    pub fn group_exp(&self, v: &Vector) -> Result<GroupElement> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!("expected an algebra vector of length {}", self.dim())));
        }
        let offsets = self.realization.offsets();
        Ok(GroupElement {
            parts: self
                .realization
                .factors
                .iter()
                .zip(&offsets)
                .map(|(f, &o)| {
                    let coords = &v.as_slice()[o..o + f.algebra_dim()];
                    match f {
                        Factor::Translation { .. } => FactorValue::translation(coords),
                        Factor::MatrixGroup { .. } => FactorValue::Matrix(linalg::expm(&f.embed(coords))),
                    }
                })
                .collect(),
        })
    }

    /// The automorphism `φ_t` generated by the drift.
    pub fn linear_flow(&self, t: f64, g: &GroupElement) -> GroupElement {
        GroupElement {
            parts: g
                .parts
                .iter()
                .zip(&self.realization.derivations)
                .map(|(p, d)| match (p, d) {
                    (_, FactorDerivation::Trivial) => p.clone(),
                    (FactorValue::Translation(x), FactorDerivation::LinearMap(a)) => {
                        FactorValue::Translation(linalg::expm(&(a * t)) * x)
                    }
                    (FactorValue::Matrix(m), FactorDerivation::Inner(y)) => {
                        FactorValue::Matrix(linalg::expm(&(y * t)) * m * linalg::expm(&(y * -t)))
                    }
                    _ => unreachable!("realization validated at construction"),
                })
                .collect(),
        }
    }

    /// `‖φ_t(gh) - φ_t(g) φ_t(h)‖`.
    pub fn flow_automorphism_residual(&self, t: f64, g: &GroupElement, h: &GroupElement) -> f64 {
        self.linear_flow(t, &g.mul(h))
            .distance(&self.linear_flow(t, g).mul(&self.linear_flow(t, h)))
    }

    fn check_control(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.channels() {
            return Err(Error::InvalidInput(format!(
                "control has {} channels, system has {}",
                u.len(),
                self.channels()
            )));
        }
        u.iter()
            .zip(&self.control_box)
            .enumerate()
            .map(|(j, (&x, &(lo, hi)))| {
                if self.clamp {
                    Ok(x.clamp(lo, hi))
                } else if x < lo - 1e-12 || x > hi + 1e-12 {
                    Err(Error::InvalidInput(format!("channel {j}: control {x} outside [{lo}, {hi}]")))
                } else {
                    Ok(x)
                }
            })
            .collect()
    }

    /// Vector field `X(g) + Σ u_j X^j(g)` in ambient coordinates.
    pub fn vector_field(&self, g: &GroupElement, u: &[f64]) -> GroupElement {
        GroupElement {
            parts: g
                .parts
                .iter()
                .enumerate()
                .map(|(f, p)| {
                    let m = p.as_matrix();
                    let mut v = match &self.realization.derivations[f] {
                        FactorDerivation::Trivial => Matrix::zeros(m.nrows(), m.ncols()),
                        FactorDerivation::LinearMap(a) => a * m,
                        FactorDerivation::Inner(y) => y * m - m * y,
                    };
                    for (j, &uj) in u.iter().enumerate() {
                        if uj == 0.0 {
                            continue;
                        }
                        let b = &self.fields[j][f];
                        match p {
                            FactorValue::Translation(_) => v += b * uj,
                            FactorValue::Matrix(_) => v += (b * m) * uj,
                        }
                    }
                    p.map(|_| v.clone())
                })
                .collect(),
        }
    }

    /// Largest violation of the declared matrix invariants.
    pub fn invariant_residual(&self, g: &GroupElement) -> f64 {
        let mut worst = 0.0_f64;
        for (f, p) in self.realization.factors.iter().zip(&g.parts) {
            if let (Factor::MatrixGroup { checks, .. }, FactorValue::Matrix(m)) = (f, p) {
                for c in checks {
                    let r = match c {
                        InvariantCheck::UnitDeterminant => (m.determinant() - 1.0).abs(),
                        InvariantCheck::Orthogonal => linalg::orthogonality_residual(m),
                    };
                    worst = worst.max(r);
                }
            }
        }
        worst
    }

    fn renormalize(&self, g: &mut GroupElement) {
        for (f, p) in self.realization.factors.iter().zip(g.parts.iter_mut()) {
            if let (Factor::MatrixGroup { checks, size, .. }, FactorValue::Matrix(m)) = (f, p) {
                if checks.contains(&InvariantCheck::Orthogonal) {
                    if linalg::orthogonality_residual(m) > RENORMALIZE_ABOVE {
                        *m = linalg::polar_orthogonal(m);
                    }
                } else if checks.contains(&InvariantCheck::UnitDeterminant) {
                    let det = m.determinant();
                    if (det - 1.0).abs() > RENORMALIZE_ABOVE && det > 0.0 {
                        *m /= det.powf(1.0 / *size as f64);
                    }
                }
            }
        }
    }

    fn rk4(&self, g: &GroupElement, u: &[f64], h: f64) -> GroupElement {
        let k1 = self.vector_field(g, u);
        let k2 = self.vector_field(&g.axpy(h / 2.0, &k1), u);
        let k3 = self.vector_field(&g.axpy(h / 2.0, &k2), u);
        let k4 = self.vector_field(&g.axpy(h, &k3), u);
        g.axpy(h / 6.0, &k1)
            .axpy(h / 3.0, &k2)
            .axpy(h / 3.0, &k3)
            .axpy(h / 6.0, &k4)
    }

    /// One classical fourth-order step followed by invariant renormalization.
    pub fn step(&self, g: &GroupElement, u: &[f64], dt: f64) -> Result<GroupElement> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        let u = self.check_control(u)?;
        self.step_unchecked(g, &u, dt, 0.0)
    }

    fn step_unchecked(&self, g: &GroupElement, u: &[f64], dt: f64, time: f64) -> Result<GroupElement> {
        let mut next = self.rk4(g, u, dt);
        let residual = self.invariant_residual(&next);
        if residual > REJECT_ABOVE {
            return Err(Error::StepRejected { time, residual });
        }
        if residual > RENORMALIZE_ABOVE {
            self.renormalize(&mut next);
        }
        Ok(next)
    }

    /// Integrates from `g0` under `signal`; every piece is split into equal steps no
    /// longer than `opts.dt`.
    pub fn solve(&self, g0: &GroupElement, signal: &ControlSignal, opts: &SolveOptions) -> Result<Trajectory> {
        self.integrate(g0, signal, opts, true)
    }

    /// Endpoint of `solve` without storing samples.
    pub fn endpoint(&self, g0: &GroupElement, signal: &ControlSignal, dt: f64) -> Result<GroupElement> {
        let t = self.integrate(g0, signal, &SolveOptions { dt, stride: usize::MAX }, false)?;
        Ok(t.states.into_iter().last().unwrap())
    }

    fn integrate(&self, g0: &GroupElement, signal: &ControlSignal, opts: &SolveOptions, record: bool) -> Result<Trajectory> {
        if !(opts.dt > 0.0) || opts.stride == 0 {
            return Err(Error::InvalidInput("dt must be positive and stride at least 1".into()));
        }
        let mut times = vec![0.0];
        let mut states = vec![g0.clone()];
        let mut g = g0.clone();
        let mut t = 0.0;
        let mut count = 0usize;
        for piece in &signal.pieces {
            let u = self.check_control(&piece.value)?;
            let n = ((piece.duration / opts.dt) - 1e-9).ceil().max(1.0) as usize;
            let h = piece.duration / n as f64;
            for i in 0..n {
                g = self.step_unchecked(&g, &u, h, t)?;
                t += h;
                count += 1;
                if record && (count.is_multiple_of(opts.stride) || i + 1 == n) {
                    times.push(t);
                    states.push(g.clone());
                }
            }
        }
        if !record {
            times.push(t);
            states.push(g);
        }
        Ok(Trajectory { times, states })
    }

    /// The reverse system: derivation `-D`, same control fields and range.
    pub fn reversed(&self) -> RealizedSystem {
        RealizedSystem {
            system: self.system.reversed(),
            realization: self.realization.reversed(),
            ..self.clone()
        }
    }

    /// Algebra coordinates of the principal logarithm of each factor, or `None`
    /// when some matrix factor has an eigenvalue near the negative real axis.
    pub fn log_chart(&self, g: &GroupElement) -> Option<Vector> {
        let mut out = Vec::with_capacity(self.dim());
        for (f, p) in self.realization.factors.iter().zip(&g.parts) {
            match p {
                FactorValue::Translation(x) => out.extend(x.iter()),
                FactorValue::Matrix(m) => {
                    let l = linalg::logm(m, LOG_MAX_ANGLE)?;
                    let flat = f.flat_embedding().expect("matrix factor");
                    let rhs = Matrix::from_iterator(l.len(), 1, l.transpose().iter().cloned());
                    let coeff = linalg::lstsq(&flat, &rhs);
                    out.extend(coeff.iter());
                }
            }
        }
        Some(Vector::from_vec(out))
    }
}

pub fn reverse_system(sys: &ControlSystem) -> ControlSystem {
    sys.reversed()
}

fn validate_realization(sys: &ControlSystem, r: &GroupRealization) -> Result<()> {
    let g = &sys.algebra;
    let n = g.dim();
    if r.algebra_dim() != n {
        return Err(Error::InvalidInput(format!(
            "realization factors cover {} coordinates, algebra has {n}",
            r.algebra_dim()
        )));
    }
    let offsets = r.offsets();
    let owner: Vec<usize> = (0..n)
        .map(|i| offsets.iter().rposition(|&o| o <= i).unwrap())
        .collect();
    for (f, factor) in r.factors.iter().enumerate() {
        if let Factor::MatrixGroup { size, embedding, .. } = factor {
            if embedding.iter().any(|e| e.nrows() != *size || e.ncols() != *size) {
                return Err(Error::InvalidInput(format!("factor {f}: embedding matrices must be {size}x{size}")));
            }
        }
    }
    // Homomorphism: brackets inside a factor match commutators, brackets across factors vanish.
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let br = g.bracket_raw(&g.basis_vector(i), &g.basis_vector(j));
            if owner[i] != owner[j] {
                worst = worst.max(br.amax());
                continue;
            }
            let f = owner[i];
            let o = offsets[f];
            let k = r.factors[f].algebra_dim();
            let outside = (0..n).filter(|&m| owner[m] != f).map(|m| br[m].abs()).fold(0.0, f64::max);
            worst = worst.max(outside);
            match &r.factors[f] {
                Factor::Translation { .. } => worst = worst.max(br.amax()),
                Factor::MatrixGroup { embedding, .. } => {
                    let (a, b) = (&embedding[i - o], &embedding[j - o]);
                    let comm = a * b - b * a;
                    let img = r.factors[f].embed(&br.as_slice()[o..o + k]);
                    worst = worst.max(linalg::max_abs(&(comm - img)));
                }
            }
        }
    }
    if worst > 1e-10 {
        return Err(Error::validation("embedding is not a Lie algebra homomorphism", worst));
    }
    let d = sys.derivation.matrix();
    let mut coupling = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if owner[i] != owner[j] {
                coupling = coupling.max(d[(i, j)].abs());
            }
        }
    }
    if coupling > 1e-9 {
        return Err(Error::UnsupportedRealization(format!(
            "derivation couples distinct factors (entry {coupling:.3e})"
        )));
    }
    for (f, (factor, der)) in r.factors.iter().zip(&r.derivations).enumerate() {
        let o = offsets[f];
        let k = factor.algebra_dim();
        let block = d.view((o, o), (k, k)).into_owned();
        let mismatch = match (factor, der) {
            (_, FactorDerivation::Trivial) => linalg::max_abs(&block),
            (Factor::Translation { .. }, FactorDerivation::LinearMap(a)) => {
                if a.shape() != (k, k) {
                    return Err(Error::InvalidInput(format!("factor {f}: linear map must be {k}x{k}")));
                }
                linalg::max_abs(&(a - &block))
            }
            (Factor::MatrixGroup { size, embedding, .. }, FactorDerivation::Inner(y)) => {
                if y.shape() != (*size, *size) {
                    return Err(Error::InvalidInput(format!("factor {f}: inner element must be {size}x{size}")));
                }
                let mut worst = 0.0_f64;
                for (c, e) in embedding.iter().enumerate() {
                    let lhs = y * e - e * y;
                    let rhs = factor.embed(block.column(c).as_slice());
                    worst = worst.max(linalg::max_abs(&(lhs - rhs)));
                }
                worst
            }
            _ => {
                return Err(Error::UnsupportedRealization(format!(
                    "factor {f}: derivation kind does not fit the factor type"
                )))
            }
        };
        if mismatch > 1e-9 {
            return Err(Error::UnsupportedRealization(format!(
                "factor {f}: realized derivation differs from D by {mismatch:.3e}"
            )));
        }
    }
    Ok(())
}

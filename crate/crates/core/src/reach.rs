//! Monte-Carlo exploration of reachable sets from the identity.
//!
//! Clouds are endpoints of trajectories driven by random piecewise-constant
//! controls. Every sample draws from its own ChaCha stream keyed by its index, so
//! parallel and serial runs give bitwise-identical clouds.

use std::io::Write;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::simulator::{ControlSignal, GroupElement, Piece, RealizedSystem};

pub const DEFAULT_PIECES: usize = 8;
/// Singular-value ratio below which a direction of the centered cloud is ignored.
pub const AFFINE_RATIO: f64 = 1e-6;
pub const CONNECT_TOLERANCE: f64 = 1e-3;
const RANDOM_DIRECTIONS: usize = 16;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random control: values uniform in the box, durations uniform on the simplex.
pub fn random_signal(rng: &mut impl Rng, bounds: &[(f64, f64)], tau: f64, pieces: usize) -> ControlSignal {
    let weights: Vec<f64> = (0..pieces).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let pieces = weights
        .iter()
        .map(|w| Piece {
            duration: tau * w / total,
            value: bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect(),
        })
        .filter(|p| p.duration > 0.0)
        .collect();
    ControlSignal { pieces }
}

/// The control used for sample `index` of `sample_reachable(.., seed, ..)`.
pub fn sample_signal(rs: &RealizedSystem, tau: f64, seed: u64, index: usize, pieces: usize) -> ControlSignal {
    random_signal(&mut rng_for(seed, index as u64), rs.control_box(), tau, pieces)
}

#[derive(Clone, Debug, Serialize)]
pub struct EndpointCloud {
    pub tau: f64,
    pub seed: u64,
    pub pieces: usize,
    pub dim: usize,
    pub points: Vec<GroupElement>,
    /// Log-chart coordinates of the points where the principal logarithm exists.
    pub log_chart: Vec<Vector>,
    /// Points left out of the chart because a logarithm was ill-conditioned.
    pub dropped: usize,
}

impl EndpointCloud {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            let rec = serde_json::json!({ "index": i, "tau": self.tau, "point": p.flatten() });
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }
}

/// Builds a cloud from explicit controls, all of duration `tau`.
pub fn cloud_from_signals(rs: &RealizedSystem, signals: &[ControlSignal], tau: f64, seed: u64, dt: f64) -> Result<EndpointCloud> {
    for s in signals {
        if (s.duration() - tau).abs() > 1e-9 * tau.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "signal lasts {} but the cloud duration is {tau}",
                s.duration()
            )));
        }
    }
    let e = rs.identity();
    let points = signals
        .par_iter()
        .map(|s| rs.endpoint(&e, s, dt))
        .collect::<Result<Vec<_>>>()?;
    let charts: Vec<Option<Vector>> = points.par_iter().map(|p| rs.log_chart(p)).collect();
    let dropped = charts.iter().filter(|c| c.is_none()).count();
    Ok(EndpointCloud {
        tau,
        seed,
        pieces: signals.iter().map(|s| s.pieces.len()).max().unwrap_or(0),
        dim: rs.dim(),
        points,
        log_chart: charts.into_iter().flatten().collect(),
        dropped,
    })
}

pub fn sample_reachable(rs: &RealizedSystem, tau: f64, n: usize, seed: u64, pieces: usize, dt: f64) -> Result<EndpointCloud> {
    if !(tau > 0.0) || n == 0 || pieces == 0 {
        return Err(Error::InvalidInput("need tau > 0, N >= 1 and pieces >= 1".into()));
    }
    let signals: Vec<ControlSignal> = (0..n).map(|i| sample_signal(rs, tau, seed, i, pieces)).collect();
    let mut cloud = cloud_from_signals(rs, &signals, tau, seed, dt)?;
    cloud.pieces = pieces;
    Ok(cloud)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Accessibility {
    Pass { dimension: usize, margin: f64 },
    Fail { dimension: usize },
}

impl Accessibility {
    pub fn passed(&self) -> bool {
        matches!(self, Accessibility::Pass { .. })
    }

    pub fn dimension(&self) -> usize {
        match self {
            Accessibility::Pass { dimension, .. } | Accessibility::Fail { dimension } => *dimension,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AccessibilityReport {
    pub result: Accessibility,
    pub points_used: usize,
    pub dropped: usize,
    /// Smallest hull extent over the coordinate directions `±e_k`.
    pub axis_margin: f64,
    pub directions_checked: usize,
}

/// Dimension of the affine hull of `points`.
pub fn affine_dimension(points: &[Vector], dim: usize) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector::zeros(dim), |acc, p| acc + p) / n;
    let centered = Matrix::from_fn(points.len(), dim, |r, c| points[r][c] - mean[c]);
    let s = linalg::singular_values(&centered);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > AFFINE_RATIO * smax).count()
}

/// Largest `ρ ≥ 0` with `ρ·w` in the convex hull of `points` (`0` if there is
/// none). When the origin is in the hull the whole segment `[0, ρ·w]` is too.
pub fn hull_extent(points: &[Vector], w: &Vector) -> f64 {
    hull_lp(points, w, f64::INFINITY).unwrap_or(0.0)
}

pub fn origin_in_hull(points: &[Vector]) -> bool {
    !points.is_empty() && hull_lp(points, &Vector::zeros(points[0].len()), 0.0).is_some()
}

fn hull_lp(points: &[Vector], w: &Vector, rho_max: f64) -> Option<f64> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let lambdas: Vec<_> = points.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let rho = lp.add_var(1.0, (0.0, rho_max));
    for k in 0..w.len() {
        let mut terms: Vec<_> = lambdas.iter().zip(points).map(|(&l, p)| (l, p[k])).collect();
        terms.push((rho, -w[k]));
        lp.add_constraint(terms, ComparisonOp::Eq, 0.0);
    }
    lp.add_constraint(lambdas.iter().map(|&l| (l, 1.0)), ComparisonOp::Eq, 1.0);
    lp.solve().ok().map(|s| s.objective())
}

/// Empirical check that the identity is interior to the reachable set: the log
/// chart must have full affine dimension and the hull must extend a positive
/// distance in every coordinate direction (which certifies that the origin is an
/// interior point). The margin is the smallest extent over the coordinate and
/// sampled directions.
pub fn local_accessibility_test(cloud: &EndpointCloud) -> Result<AccessibilityReport> {
    if cloud.points.is_empty() {
        return Err(Error::InsufficientSamples("the cloud has no points".into()));
    }
    let pts = &cloud.log_chart;
    let dim = cloud.dim;
    let dimension = affine_dimension(pts, dim);
    let mut report = AccessibilityReport {
        result: Accessibility::Fail { dimension },
        points_used: pts.len(),
        dropped: cloud.dropped,
        axis_margin: 0.0,
        directions_checked: 0,
    };
    if dimension < dim || pts.len() < dim + 1 || !origin_in_hull(pts) {
        return Ok(report);
    }
    let mut directions = Vec::with_capacity(2 * dim + RANDOM_DIRECTIONS);
    for k in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = Vector::zeros(dim);
            e[k] = s;
            directions.push(e);
        }
    }
    let mut rng = rng_for(cloud.seed, u64::MAX);
    for _ in 0..RANDOM_DIRECTIONS {
        let w = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        directions.push(w.normalize());
    }
    let extents: Vec<f64> = directions.par_iter().map(|w| hull_extent(pts, w)).collect();
    let axis = extents[..2 * dim].iter().cloned().fold(f64::INFINITY, f64::min);
    let margin = extents.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = pts.iter().map(|p| p.amax()).fold(0.0, f64::max);
    report.axis_margin = axis;
    report.directions_checked = directions.len();
    if axis > 1e-9 * scale.max(1.0) {
        report.result = Accessibility::Pass { dimension, margin };
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub pairs: usize,
    pub dt: f64,
    /// `max ‖x·φ_{τ1}(y) - φ_{τ1+τ2, u}(e)‖` with `u` the concatenated control.
    pub max_mismatch: f64,
    /// Largest distance between an endpoint at the shorter time and the endpoint
    /// of the same control preceded by zero control up to the longer time.
    pub max_monotonicity_mismatch: f64,
    pub passes: bool,
}

/// Checks `A_{τ1+τ2} = A_{τ1} φ_{τ1}(A_{τ2})` pointwise on sampled controls.
pub fn composition_check(rs: &RealizedSystem, tau1: f64, tau2: f64, n: usize, seed: u64, dt: f64) -> Result<CompositionReport> {
    if !(tau1 > 0.0 && tau2 > 0.0) {
        return Err(Error::InvalidInput("durations must be positive".into()));
    }
    let e = rs.identity();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let u1 = sample_signal(rs, tau1, seed, 2 * i, DEFAULT_PIECES);
            let u2 = sample_signal(rs, tau2, seed, 2 * i + 1, DEFAULT_PIECES);
            let x = rs.endpoint(&e, &u1, dt)?;
            let y = rs.endpoint(&e, &u2, dt)?;
            let composed = x.mul(&rs.linear_flow(tau1, &y));
            let direct = rs.endpoint(&e, &u2.concat(&u1), dt)?;
            let (short, short_end, long) = if tau1 <= tau2 { (&u1, &x, tau2) } else { (&u2, &y, tau1) };
            let gap = long - short.duration();
            let mono = if gap > 0.0 {
                let padded = ControlSignal::zero(gap, rs.channels())?.concat(short);
                rs.endpoint(&e, &padded, dt)?.distance(short_end)
            } else {
                0.0
            };
            Ok((composed.distance(&direct), mono))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_mismatch = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_mono = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(CompositionReport {
        pairs: n,
        dt,
        max_mismatch,
        max_monotonicity_mismatch: max_mono,
        passes: max_mismatch <= 1e-6 && max_mono <= 1e-6,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectOptions {
    pub budget: usize,
    pub seed: u64,
    pub pieces: usize,
    pub tau_range: (f64, f64),
    pub population: usize,
    pub elites: usize,
    /// Step used while searching; the final candidate is re-checked at `verify_dt`.
    pub search_dt: f64,
    pub verify_dt: f64,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions {
            budget: 100_000,
            seed: 0,
            pieces: DEFAULT_PIECES,
            tau_range: (0.1, 20.0),
            population: 64,
            elites: 8,
            search_dt: 1e-2,
            verify_dt: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Connection {
    pub signal: ControlSignal,
    pub residual: f64,
    pub trajectories: usize,
}

/// Searches for a control steering `from` to `to`: cross-entropy random shooting
/// over equal-length pieces and the total time, followed by projected
/// Levenberg-Marquardt refinement. Restarts until the budget is spent.
pub fn connect(rs: &RealizedSystem, from: &GroupElement, to: &GroupElement, opts: &ConnectOptions) -> Result<Connection> {
    if opts.pieces == 0 || opts.population < opts.elites || opts.elites == 0 {
        return Err(Error::InvalidInput("need pieces >= 1 and 1 <= elites <= population".into()));
    }
    let mut search = Search::new(rs, from, to, opts);
    let zero = Params::zero(rs.channels(), opts.pieces, 1.0);
    if let Some(done) = search.try_accept(&zero)? {
        return Ok(done);
    }
    let mut restart = 0u64;
    while search.used < opts.budget {
        let mut rng = rng_for(opts.seed, restart);
        restart += 1;
        let start = search.cross_entropy(&mut rng)?;
        let refined = search.refine(start, opts.search_dt)?;
        if let Some(done) = search.try_accept(&refined)? {
            return Ok(done);
        }
        if refined.1 < 1e-2 {
            let polished = search.refine(refined, opts.verify_dt)?;
            if let Some(done) = search.try_accept(&polished)? {
                return Ok(done);
            }
        }
    }
    Err(Error::BudgetExhausted { best_residual: search.best })
}

#[derive(Clone, Debug)]
struct Params {
    tau: f64,
    values: Vec<f64>,
}

impl Params {
    fn zero(channels: usize, pieces: usize, tau: f64) -> (Params, f64) {
        (Params { tau, values: vec![0.0; channels * pieces] }, f64::INFINITY)
    }

    fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.tau).chain(self.values.iter().cloned()).collect()
    }

    fn from_vec(v: &[f64]) -> Params {
        Params { tau: v[0], values: v[1..].to_vec() }
    }
}

struct Search<'a> {
    rs: &'a RealizedSystem,
    from: &'a GroupElement,
    target: Vec<f64>,
    opts: &'a ConnectOptions,
    lower: Vec<f64>,
    upper: Vec<f64>,
    used: usize,
    best: f64,
}

impl<'a> Search<'a> {
    fn new(rs: &'a RealizedSystem, from: &'a GroupElement, to: &GroupElement, opts: &'a ConnectOptions) -> Self {
        let mut lower = vec![opts.tau_range.0];
        let mut upper = vec![opts.tau_range.1];
        for _ in 0..opts.pieces {
            for &(lo, hi) in rs.control_box() {
                lower.push(lo);
                upper.push(hi);
            }
        }
        Search {
            rs,
            from,
            target: to.flatten(),
            opts,
            lower,
            upper,
            used: 0,
            best: f64::INFINITY,
        }
    }

    fn signal(&self, p: &Params) -> ControlSignal {
        let m = self.rs.channels();
        ControlSignal {
            pieces: p
                .values
                .chunks(m)
                .map(|v| Piece { duration: p.tau / self.opts.pieces as f64, value: v.to_vec() })
                .collect(),
        }
    }

    fn clip(&self, v: &mut [f64]) {
        for (i, x) in v.iter_mut().enumerate() {
            *x = x.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Endpoint of a candidate; `None` when the integrator rejected a step, which
    /// only disqualifies the candidate.
    fn endpoint(&self, p: &Params, dt: f64) -> Result<Option<GroupElement>> {
        match self.rs.endpoint(self.from, &self.signal(p), dt) {
            Ok(g) => Ok(Some(g)),
            Err(Error::StepRejected { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Endpoint minus target in flattened coordinates (infinite when rejected).
    fn residual_of(&self, p: &Params, dt: f64) -> Result<Vector> {
        Ok(match self.endpoint(p, dt)? {
            Some(end) => Vector::from_iterator(
                self.target.len(),
                end.flatten().iter().zip(&self.target).map(|(a, b)| a - b),
            ),
            None => Vector::from_element(self.target.len(), f64::INFINITY),
        })
    }

    fn residual_vector(&mut self, p: &Params, dt: f64) -> Result<Vector> {
        self.used += 1;
        self.residual_of(p, dt)
    }

    fn distance_of(&self, p: &Params, dt: f64) -> Result<f64> {
        Ok(match self.endpoint(p, dt)? {
            Some(end) => end.distance(&GroupElement { parts: self.target_parts(&end) }),
            None => f64::INFINITY,
        })
    }

    fn distance(&mut self, p: &Params, dt: f64) -> Result<f64> {
        self.used += 1;
        self.distance_of(p, dt)
    }

    fn target_parts(&self, like: &GroupElement) -> Vec<crate::simulator::FactorValue> {
        use crate::simulator::FactorValue;
        let mut offset = 0;
        like.parts
            .iter()
            .map(|p| {
                let m = p.as_matrix();
                let len = m.len();
                let flat = &self.target[offset..offset + len];
                offset += len;
                match p {
                    FactorValue::Translation(_) => FactorValue::translation(flat),
                    FactorValue::Matrix(_) => FactorValue::Matrix(Matrix::from_row_slice(m.nrows(), m.ncols(), flat)),
                }
            })
            .collect()
    }

    fn try_accept(&mut self, cand: &(Params, f64)) -> Result<Option<Connection>> {
        let residual = self.distance(&cand.0, self.opts.verify_dt)?;
        self.best = self.best.min(residual);
        if residual <= CONNECT_TOLERANCE {
            return Ok(Some(Connection {
                signal: self.signal(&cand.0),
                residual,
                trajectories: self.used,
            }));
        }
        Ok(None)
    }

    fn cross_entropy(&mut self, rng: &mut ChaCha8Rng) -> Result<(Params, f64)> {
        let n = self.lower.len();
        let mut mean: Vec<f64> = (0..n).map(|i| rng.gen_range(self.lower[i]..=self.upper[i])).collect();
        let mut spread: Vec<f64> = (0..n).map(|i| (self.upper[i] - self.lower[i]) / 2.0).collect();
        let mut best = (Params::from_vec(&mean), f64::INFINITY);
        for _ in 0..10 {
            if self.used + self.opts.population > self.opts.budget {
                break;
            }
            let candidates: Vec<Vec<f64>> = (0..self.opts.population)
                .map(|_| {
                    let mut v: Vec<f64> = (0..n)
                        .map(|i| mean[i] + spread[i] * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                        .collect();
                    self.clip(&mut v);
                    v
                })
                .collect();
            let dt = self.opts.search_dt;
            let scores: Vec<f64> = {
                let this = &*self;
                candidates
                    .par_iter()
                    .map(|v| this.distance_of(&Params::from_vec(v), dt))
                    .collect::<Result<Vec<_>>>()?
            };
            self.used += candidates.len();
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
            if scores[order[0]] < best.1 {
                best = (Params::from_vec(&candidates[order[0]]), scores[order[0]]);
            }
            let elite = &order[..self.opts.elites];
            for i in 0..n {
                let m = elite.iter().map(|&k| candidates[k][i]).sum::<f64>() / elite.len() as f64;
                let var = elite.iter().map(|&k| (candidates[k][i] - m).powi(2)).sum::<f64>() / elite.len() as f64;
                mean[i] = m;
                spread[i] = 0.7 * var.sqrt() + 0.3 * spread[i] * 0.5;
            }
        }
        Ok(best)
    }

    /// Maps unconstrained coordinates into the parameter box.
    fn decode(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, x)| self.lower[i] + (self.upper[i] - self.lower[i]) * (1.0 + x.sin()) / 2.0)
            .collect()
    }

    fn encode(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(i, x)| (2.0 * (x - self.lower[i]) / (self.upper[i] - self.lower[i]) - 1.0).clamp(-1.0, 1.0).asin())
            .collect()
    }

    fn jacobian(&mut self, z: &[f64], base: &Vector, dt: f64) -> Result<Matrix> {
        let h = 1e-6;
        let cols = (0..z.len())
            .into_par_iter()
            .map(|i| {
                let mut w = z.to_vec();
                w[i] += h;
                let r = self.residual_of(&Params::from_vec(&self.decode(&w)), dt)?;
                if r.iter().all(|x| x.is_finite()) {
                    Ok((r - base) / h)
                } else {
                    Ok(Vector::zeros(base.len()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.used += z.len();
        Ok(linalg::hstack(base.len(), &cols))
    }

    /// Levenberg-Marquardt on the residual vector in unconstrained coordinates.
    fn refine(&mut self, start: (Params, f64), dt: f64) -> Result<(Params, f64)> {
        let mut z = self.encode(&start.0.to_vec());
        let mut r = self.residual_vector(&Params::from_vec(&self.decode(&z)), dt)?;
        if !r.norm().is_finite() {
            return Ok(start);
        }
        let mut lambda = 1e-3;
        for _ in 0..100 {
            if r.norm() < 1e-9 || self.used + z.len() + 12 > self.opts.budget {
                break;
            }
            let j = self.jacobian(&z, &r, dt)?;
            let jtj = j.transpose() * &j;
            let g = j.transpose() * &r;
            let scale = (0..jtj.nrows()).map(|k| jtj[(k, k)]).fold(0.0, f64::max).max(1e-12);
            let mut improved = false;
            for _ in 0..12 {
                let mut a = jtj.clone();
                for k in 0..a.nrows() {
                    a[(k, k)] += lambda * scale;
                }
                let Some(delta) = a.lu().solve(&(-&g)) else {
                    lambda *= 10.0;
                    continue;
                };
                let w: Vec<f64> = z.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
                let rw = self.residual_vector(&Params::from_vec(&self.decode(&w)), dt)?;
                if rw.norm() < r.norm() {
                    z = w;
                    r = rw;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        Ok((Params::from_vec(&self.decode(&z)), r.norm()))
    }
}

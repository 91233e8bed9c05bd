//! Spectral analysis of a derivation: eigenvalue classes, generalized eigenspaces
//! and the splitting of the algebra by the sign of the real parts.
//!
//! Eigenvalues of defective matrices come back from the QR iteration split by roughly
//! `eps^(1/k)` for a Jordan block of size `k`. Classes are therefore formed in two
//! passes: a fine single-linkage pass at `tol.cluster`, then loose groups are merged
//! when `(D - μ)^k` really has a `k`-dimensional kernel at the group mean `μ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{LieAlgebra, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::tolerance::Tolerances;

const LOOSE_RADIUS: f64 = 1e-2;
const MERGE_KERNEL_TOL: f64 = 1e-10;

/// One eigenvalue with its algebraic multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenClass {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl EigenClass {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Eigenvalues of a derivation, grouped into classes. Conjugate pairs appear as two
/// classes with equal multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub classes: Vec<EigenClass>,
    pub tol_spec: f64,
}

fn single_linkage(values: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut label, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_of[r]].push(i);
    }
    groups
}

fn mean(values: &[Complex64], idx: &[usize]) -> Complex64 {
    idx.iter().map(|&i| values[i]).sum::<Complex64>() / idx.len() as f64
}

/// True when `(D - μ)^k` (normalized by `scale`) has `k` singular values below the merge threshold.
fn has_kernel_of_dim(d: &Matrix, mu: Complex64, k: usize, scale: f64) -> bool {
    let n = d.nrows();
    let shifted = (linalg::complexify(d) - DMatrix::<Complex64>::identity(n, n) * mu).unscale(scale);
    let mut p = shifted.clone();
    for _ in 1..k {
        p = &p * &shifted;
    }
    let mut s = linalg::complex_singular_values(&p);
    s.sort_by(f64::total_cmp);
    s.get(k - 1).map(|&x| x <= MERGE_KERNEL_TOL).unwrap_or(false)
}

fn derivation_scale(d: &Matrix) -> f64 {
    d.norm().max(1.0)
}

impl Spectrum {
    pub fn of(d: &Matrix, tol: &Tolerances) -> Spectrum {
        let raw: Vec<Complex64> = d.clone().complex_eigenvalues().iter().cloned().collect();
        let scale = derivation_scale(d);
        let mut classes: Vec<(Complex64, usize)> = Vec::new();
        for group in single_linkage(&raw, LOOSE_RADIUS * scale) {
            let mu = mean(&raw, &group);
            if group.len() == 1 || has_kernel_of_dim(d, mu, group.len(), scale) {
                classes.push((mu, group.len()));
                continue;
            }
            let sub: Vec<Complex64> = group.iter().map(|&i| raw[i]).collect();
            for fine in single_linkage(&sub, tol.cluster) {
                classes.push((mean(&sub, &fine), fine.len()));
            }
        }
        for c in classes.iter_mut() {
            if c.0.im.abs() < tol.spec {
                c.0.im = 0.0;
            }
        }
        // Make conjugate partners exact mirror images.
        let n = classes.len();
        for i in 0..n {
            if classes[i].0.im > 0.0 {
                let target = classes[i].0.conj();
                if let Some(j) = (0..n)
                    .filter(|&j| classes[j].0.im < 0.0 && classes[j].1 == classes[i].1)
                    .min_by(|&a, &b| {
                        (classes[a].0 - target).norm().total_cmp(&(classes[b].0 - target).norm())
                    })
                {
                    let avg = (classes[i].0 + classes[j].0.conj()) * 0.5;
                    classes[i].0 = avg;
                    classes[j].0 = avg.conj();
                }
            }
        }
        classes.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        Spectrum {
            classes: classes
                .into_iter()
                .map(|(v, m)| EigenClass {
                    re: v.re,
                    im: v.im,
                    multiplicity: m,
                })
                .collect(),
            tol_spec: tol.spec,
        }
    }

    pub fn total_multiplicity(&self) -> usize {
        self.classes.iter().map(|c| c.multiplicity).sum()
    }

    pub fn all_zero_real_part(&self) -> bool {
        self.classes.iter().all(|c| c.re.abs() <= self.tol_spec)
    }

    /// Classes whose real part is not zero within `tol_spec`.
    pub fn offending(&self) -> Vec<EigenClass> {
        self.classes
            .iter()
            .filter(|c| c.re.abs() > self.tol_spec)
            .cloned()
            .collect()
    }

    /// The class nearest to `alpha` within `radius`, if any.
    pub fn find(&self, alpha: Complex64, radius: f64) -> Option<EigenClass> {
        self.classes
            .iter()
            .map(|c| (c, (c.value() - alpha).norm()))
            .filter(|(_, dist)| *dist <= radius)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| *c)
    }

    fn distance_to(&self, alpha: Complex64) -> f64 {
        self.classes
            .iter()
            .map(|c| (c.value() - alpha).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Representatives of the real classes: real eigenvalues and, for each conjugate
    /// pair, the member with positive imaginary part.
    pub fn real_classes(&self) -> Vec<EigenClass> {
        self.classes.iter().filter(|c| c.im >= 0.0).cloned().collect()
    }

    pub fn contains_zero(&self) -> bool {
        self.find(Complex64::new(0.0, 0.0), self.tol_spec).is_some()
    }
}

/// Real invariant subspace belonging to one eigenvalue (or conjugate pair).
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBlock {
    /// Representative eigenvalue (imaginary part ≥ 0).
    pub class: EigenClass,
    pub subspace: Subspace,
}

/// Real basis of the generalized eigenspace for the class `class`. For a non-real
/// class this is the invariant subspace of the conjugate pair.
fn real_generalized_eigenspace(d: &Matrix, class: &EigenClass) -> Subspace {
    let n = d.nrows();
    let scale = derivation_scale(d);
    let id = Matrix::identity(n, n);
    let (base, k) = if class.im == 0.0 {
        ((d - &id * class.re).unscale(scale), class.multiplicity)
    } else {
        let q = d * d - d * (2.0 * class.re) + &id * (class.re * class.re + class.im * class.im);
        (q.unscale(scale * scale), 2 * class.multiplicity)
    };
    let mut p = base.clone();
    for _ in 1..class.multiplicity {
        p = &p * &base;
    }
    let (basis, _) = linalg::smallest_right_singular(&p, k);
    Subspace::from_orthonormal(basis)
}

/// `g_α`: kernel of `(D - α)^n` in real form.
pub fn generalized_eigenspace(d: &Matrix, alpha: Complex64, tol: &Tolerances) -> Result<Subspace> {
    let spectrum = Spectrum::of(d, tol);
    let class = spectrum
        .find(alpha, tol.spec)
        .or_else(|| spectrum.find(alpha.conj(), tol.spec))
        .ok_or_else(|| Error::NotAnEigenvalue {
            re: alpha.re,
            im: alpha.im,
            distance: spectrum.distance_to(alpha),
        })?;
    let rep = if class.im < 0.0 {
        EigenClass {
            im: -class.im,
            ..class
        }
    } else {
        class
    };
    Ok(real_generalized_eigenspace(d, &rep))
}

/// Splitting `g = g⁺ ⊕ g⁻ ⊕ g⁰` together with the generalized kernel `g₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct DDecomposition {
    pub spectrum: Spectrum,
    pub plus: Subspace,
    pub minus: Subspace,
    pub zero: Subspace,
    pub kernel: Subspace,
    pub blocks: Vec<EigenBlock>,
}

impl DDecomposition {
    pub fn compute(d: &Matrix, tol: &Tolerances) -> DDecomposition {
        let n = d.nrows();
        let spectrum = Spectrum::of(d, tol);
        let blocks: Vec<EigenBlock> = spectrum
            .real_classes()
            .into_iter()
            .map(|class| EigenBlock {
                subspace: real_generalized_eigenspace(d, &class),
                class,
            })
            .collect();
        let collect = |pred: &dyn Fn(&EigenClass) -> bool| {
            let parts: Vec<&EigenBlock> = blocks.iter().filter(|b| pred(&b.class)).collect();
            if parts.is_empty() {
                return Subspace::zero(n);
            }
            let m = parts
                .iter()
                .fold(Matrix::zeros(n, 0), |acc, b| linalg::hcat(&acc, b.subspace.basis()));
            Subspace::span(&m, tol.rank)
        };
        let ts = tol.spec;
        let plus = collect(&|c| c.re > ts);
        let minus = collect(&|c| c.re < -ts);
        let zero = collect(&|c| c.re.abs() <= ts);
        let kernel = collect(&|c| c.re.abs() <= ts && c.im == 0.0);
        DDecomposition {
            spectrum,
            plus,
            minus,
            zero,
            kernel,
            blocks,
        }
    }

    /// `g^{+,0} = g⁺ ⊕ g⁰`.
    pub fn plus_zero(&self, tol: &Tolerances) -> Subspace {
        self.plus.sum(&self.zero, tol.rank)
    }

    /// `g^{-,0} = g⁻ ⊕ g⁰`.
    pub fn minus_zero(&self, tol: &Tolerances) -> Subspace {
        self.minus.sum(&self.zero, tol.rank)
    }

    fn block_matching(&self, alpha: Complex64, radius: f64) -> Option<usize> {
        self.blocks.iter().position(|b| {
            let v = b.class.value();
            (v - alpha).norm() <= radius || (v.conj() - alpha).norm() <= radius
        })
    }
}

/// Result of checking `[g_α, g_β] ⊂ g_{α+β}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradingReport {
    pub max_residual: f64,
    pub passes: bool,
    pub pairs_checked: usize,
}

pub fn check_grading(
    algebra: &LieAlgebra,
    dec: &DDecomposition,
    tol: &Tolerances,
) -> Result<GradingReport> {
    let n = algebra.dim();
    let all = dec
        .blocks
        .iter()
        .fold(Matrix::zeros(n, 0), |acc, b| linalg::hcat(&acc, b.subspace.basis()));
    let inv = all
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::validation("eigenspaces do not span the algebra", f64::NAN))?;
    let offsets: Vec<usize> = dec
        .blocks
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.subspace.dim();
            Some(o)
        })
        .collect();
    let mut worst = 0.0_f64;
    let mut pairs = 0;
    for (ia, a) in dec.blocks.iter().enumerate() {
        for b in dec.blocks.iter().skip(ia) {
            let (alpha, beta) = (a.class.value(), b.class.value());
            let mut targets = Vec::new();
            for sum in [alpha + beta, alpha + beta.conj()] {
                if let Some(t) = dec.block_matching(sum, tol.cluster) {
                    targets.push(t);
                }
            }
            for x in a.subspace.basis().column_iter() {
                for y in b.subspace.basis().column_iter() {
                    let br = algebra.bracket_raw(&x.into_owned(), &y.into_owned());
                    let coords = &inv * &br;
                    let mut stray = linalg::Vector::zeros(n);
                    for (ib, blk) in dec.blocks.iter().enumerate() {
                        if targets.contains(&ib) {
                            continue;
                        }
                        let k = blk.subspace.dim();
                        let c = coords.rows(offsets[ib], k).into_owned();
                        stray += blk.subspace.basis() * c;
                    }
                    worst = worst.max(stray.norm());
                    pairs += 1;
                }
            }
        }
    }
    Ok(GradingReport {
        max_residual: worst,
        passes: worst <= tol.grading,
        pairs_checked: pairs,
    })
}

/// `g^α = ⊕_{j ≥ 1} g_{jα}` for a nonzero imaginary eigenvalue α, in real form.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplesSubalgebra {
    pub subspace: Subspace,
    /// Integer multiples `j` for which `jα` is an eigenvalue.
    pub multiples: Vec<usize>,
    pub is_subalgebra: bool,
    pub is_nilpotent: bool,
}

pub fn multiples_subalgebra(
    algebra: &LieAlgebra,
    d: &Matrix,
    alpha: Complex64,
    tol: &Tolerances,
) -> Result<MultiplesSubalgebra> {
    let dec = DDecomposition::compute(d, tol);
    let not_eigen = || Error::NotAnEigenvalue {
        re: alpha.re,
        im: alpha.im,
        distance: dec.spectrum.distance_to(alpha),
    };
    if alpha.re.abs() > tol.spec || alpha.im.abs() <= tol.spec {
        return Err(not_eigen());
    }
    dec.block_matching(alpha, tol.spec).ok_or_else(not_eigen)?;
    let max_mod = dec
        .spectrum
        .classes
        .iter()
        .map(|c| c.value().norm())
        .fold(0.0, f64::max);
    let mut multiples = Vec::new();
    let mut basis = Matrix::zeros(algebra.dim(), 0);
    let mut j = 1usize;
    while (j as f64) * alpha.norm() <= max_mod + tol.cluster {
        if let Some(b) = dec.block_matching(alpha * j as f64, tol.cluster) {
            multiples.push(j);
            basis = linalg::hcat(&basis, dec.blocks[b].subspace.basis());
        }
        j += 1;
    }
    let subspace = Subspace::span(&basis, tol.rank);
    let is_subalgebra = algebra.subalgebra_residual(&subspace, tol) <= 1e-9;
    let is_nilpotent = is_subalgebra && algebra.is_nilpotent_subalgebra(&subspace, tol);
    Ok(MultiplesSubalgebra {
        subspace,
        multiples,
        is_subalgebra,
        is_nilpotent,
    })
}

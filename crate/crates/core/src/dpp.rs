//! Determinantal point processes restricted to finite lattice windows:
//! correlation functions, exact sampling, a brute-force inclusion-exclusion
//! oracle, and the `ρ₁*` profile behind the diffuse/atomic dichotomy.
//!
//! A window restriction of a projection kernel is a Hermitian contraction,
//! not a projection, so the sampler first thins the spectrum (each
//! eigenvector kept with probability equal to its eigenvalue) and then runs
//! the sequential projection sampler on the kept eigenvectors.
//!
//! Sample `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so
//! a run is reproducible bit for bit whatever the thread count.

use crate::error::{Error, Result};
use crate::kernels::{BasicKernel, Branch, EllipticKernel, LatticePoint};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashSet;

pub const MAX_WINDOW: usize = 64;
/// Largest window for which the `2^n` outcome probabilities are enumerated.
pub const MAX_ORACLE_WINDOW: usize = 12;
/// Largest `|Im det| / max(1, |det|)` accepted from a correlation.
pub const IMAG_TOL: f64 = 1e-9;
/// Eigenvalues within this distance outside `[0, 1]` are clamped.
pub const CLAMP_BAND: f64 = 1e-9;
/// Eigenvalues further than this outside `[0, 1]` are an error.
pub const FAIL_BAND: f64 = 1e-8;
/// Relative Hermitian defect of a window matrix accepted by the sampler.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// An ordered set of distinct lattice points, at most [`MAX_WINDOW`] long.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    points: Vec<LatticePoint>,
}

impl Window {
    pub fn new(points: Vec<LatticePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Window("a window needs at least one point".into()));
        }
        if points.len() > MAX_WINDOW {
            return Err(Error::Window(format!("{} points exceed the limit of {MAX_WINDOW}", points.len())));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(*p) {
                return Err(Error::Window(format!("point {p} appears twice")));
            }
        }
        Ok(Window { points })
    }

    /// `ζ₊q^k` and `ζ₋q^k` for every `k` in `lo..=hi`, positive half first.
    pub fn both_halves(lo: i64, hi: i64) -> Result<Self> {
        let plus = (lo..=hi).map(LatticePoint::plus);
        let minus = (lo..=hi).map(LatticePoint::minus);
        Window::new(plus.chain(minus).collect())
    }

    /// `ζ_b q^k` for `k` in `lo..=hi`.
    pub fn half(b: Branch, lo: i64, hi: i64) -> Result<Self> {
        Window::new((lo..=hi).map(|k| LatticePoint { branch: b, k }).collect())
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The sub-window picked out by `indices`.
    pub fn subset(&self, indices: &[usize]) -> Result<Window> {
        let pts = indices
            .iter()
            .map(|&i| self.points.get(i).copied().ok_or_else(|| Error::Window(format!("index {i} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        Window::new(pts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub n_samples: usize,
}

impl SampleConfig {
    pub fn new(seed: u64, n_samples: usize) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        Ok(SampleConfig { seed, n_samples })
    }
}

/// A correlation kernel that can be evaluated on lattice points.
pub trait LatticeKernel: Sync {
    fn entry(&self, x: LatticePoint, y: LatticePoint) -> Result<Complex64>;
}

impl LatticeKernel for EllipticKernel {
    fn entry(&self, x: LatticePoint, y: LatticePoint) -> Result<Complex64> {
        Ok(self.eval_lattice(x, y)?.value)
    }
}

impl LatticeKernel for BasicKernel {
    fn entry(&self, x: LatticePoint, y: LatticePoint) -> Result<Complex64> {
        Ok(self.eval_lattice(x, y)?.value)
    }
}

/// Adapts a closure to [`LatticeKernel`].
pub struct FnKernel<F>(pub F);

impl<F> LatticeKernel for FnKernel<F>
where
    F: Fn(LatticePoint, LatticePoint) -> Result<Complex64> + Sync,
{
    fn entry(&self, x: LatticePoint, y: LatticePoint) -> Result<Complex64> {
        (self.0)(x, y)
    }
}

/// The matrix `[K(xᵢ, xⱼ)]` over the window.
pub fn kernel_matrix<K: LatticeKernel + ?Sized>(w: &Window, k: &K) -> Result<DMatrix<Complex64>> {
    let n = w.len();
    let pts = w.points();
    let entries = (0..n * n)
        .into_par_iter()
        .map(|idx| k.entry(pts[idx / n], pts[idx % n]))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_row_slice(n, n, &entries))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: f64,
    /// `|Im det| / max(1, |det|)`.
    pub imag_residue: f64,
}

fn correlation_of(m: DMatrix<Complex64>) -> Result<Correlation> {
    let det = m.determinant();
    let imag_residue = det.im.abs() / det.norm().max(1.0);
    if !(imag_residue < IMAG_TOL) {
        return Err(Error::ImaginaryResidue { residue: imag_residue });
    }
    Ok(Correlation { value: det.re, imag_residue })
}

/// `ρₙ(x₁, …, xₙ) = det[K(xᵢ, xⱼ)]`.
pub fn correlation<K: LatticeKernel + ?Sized>(w: &Window, k: &K) -> Result<Correlation> {
    correlation_of(kernel_matrix(w, k)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rho1Profile {
    pub points: Vec<LatticePoint>,
    /// `K(x, x)` per point.
    pub density: Vec<f64>,
    /// `min(K(x, x), 1 - K(x, x))` per point.
    pub rho1_star: Vec<f64>,
    pub sum: f64,
}

impl Rho1Profile {
    pub fn min(&self) -> f64 {
        self.rho1_star.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn rho1_star(density: f64) -> f64 {
    density.min(1.0 - density)
}

pub fn rho1_star_profile<K: LatticeKernel + ?Sized>(w: &Window, k: &K) -> Result<Rho1Profile> {
    let density = w
        .points()
        .par_iter()
        .map(|&p| k.entry(p, p).map(|v| v.re))
        .collect::<Result<Vec<f64>>>()?;
    let rho1_star: Vec<f64> = density.iter().map(|&d| rho1_star(d)).collect();
    let sum = rho1_star.iter().sum();
    Ok(Rho1Profile { points: w.points().to_vec(), density, rho1_star, sum })
}

/// `ρ₁*(ζ₊) + ρ₁*(ζ₋)`. The elliptic kernel's diagonal depends only on the
/// branch, so this is the contribution of every period `{ζ±q^k}` to
/// `Σ ρ₁*`; a positive value means the sum diverges.
pub fn per_period_rho1_star(k: &EllipticKernel) -> Result<f64> {
    let plus = k.entry(LatticePoint::plus(0), LatticePoint::plus(0))?.re;
    let minus = k.entry(LatticePoint::minus(0), LatticePoint::minus(0))?.re;
    Ok(rho1_star(plus) + rho1_star(minus))
}

/// Spectral data of a window matrix, checked to be a Hermitian contraction.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

pub fn contraction_spectrum(m: &DMatrix<Complex64>) -> Result<Spectrum> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotContraction(format!("window matrix is not Hermitian (defect {defect:.2e})")));
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut eigenvalues = Vec::with_capacity(eig.eigenvalues.len());
    for &l in eig.eigenvalues.iter() {
        if !(-FAIL_BAND..=1.0 + FAIL_BAND).contains(&l) {
            return Err(Error::NotContraction(format!("eigenvalue {l} lies outside [0, 1]")));
        }
        eigenvalues.push(l.clamp(0.0, 1.0));
    }
    Ok(Spectrum { eigenvalues, eigenvectors: eig.eigenvectors })
}

/// Sequential sampler for the projection onto the span of the orthonormal
/// columns of `v`; returns sorted row indices.
fn sample_projection(mut v: DMatrix<Complex64>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = v.nrows();
    let mut out = Vec::with_capacity(v.ncols());
    let mut taken = vec![false; n];
    while v.ncols() > 0 {
        let weights: Vec<f64> = (0..n)
            .map(|i| if taken[i] { 0.0 } else { v.row(i).iter().map(|z| z.norm_sqr()).sum() })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &wt) in weights.iter().enumerate() {
            if u < wt {
                pick = i;
                break;
            }
            u -= wt;
        }
        while taken[pick] || weights[pick] == 0.0 {
            pick = (pick + n - 1) % n;
        }
        taken[pick] = true;
        out.push(pick);

        // eliminate the chosen coordinate from the span, drop one column
        let (j, _) = v.row(pick).iter().enumerate().fold((0, -1.0), |acc, (c, z)| {
            if z.norm() > acc.1 {
                (c, z.norm())
            } else {
                acc
            }
        });
        let pivot: DVector<Complex64> = v.column(j).clone_owned();
        let pj = pivot[pick];
        for c in 0..v.ncols() {
            if c != j {
                let f = v[(pick, c)] / pj;
                let mut col = v.column_mut(c);
                col.axpy(-f, &pivot, Complex64::new(1.0, 0.0));
            }
        }
        v = v.remove_column(j);
        orthonormalize(&mut v);
    }
    out.sort_unstable();
    out
}

/// Modified Gram-Schmidt on the columns.
fn orthonormalize(v: &mut DMatrix<Complex64>) {
    for c in 0..v.ncols() {
        for p in 0..c {
            let proj = v.column(p).dotc(&v.column(c));
            let prev = v.column(p).clone_owned();
            v.column_mut(c).axpy(-proj, &prev, Complex64::new(1.0, 0.0));
        }
        let norm = v.column(c).norm();
        if norm > 0.0 {
            v.column_mut(c).unscale_mut(norm);
        }
    }
}

/// Draws `cfg.n_samples` independent configurations from the determinantal
/// measure of the window restriction; each sample lists window indices in
/// increasing order.
pub fn sample_window<K: LatticeKernel + ?Sized>(w: &Window, k: &K, cfg: &SampleConfig) -> Result<Vec<Vec<usize>>> {
    let spec = contraction_spectrum(&kernel_matrix(w, k)?)?;
    Ok(sample_spectrum(&spec, cfg))
}

pub fn sample_spectrum(spec: &Spectrum, cfg: &SampleConfig) -> Vec<Vec<usize>> {
    (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            let kept: Vec<usize> =
                (0..spec.eigenvalues.len()).filter(|&j| rng.random::<f64>() < spec.eigenvalues[j]).collect();
            if kept.is_empty() {
                return Vec::new();
            }
            let v = spec.eigenvectors.select_columns(kept.iter());
            sample_projection(v, &mut rng)
        })
        .collect()
}

pub fn mask_of(sample: &[usize]) -> u64 {
    sample.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

/// Probabilities of the `2^n` exact outcomes, indexed by bitmask, from all
/// principal minors by Möbius inversion over supersets:
/// `P(X = S) = Σ_{T ⊇ S} (-1)^{|T∖S|} det K_T`.
pub fn outcome_probabilities(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n > MAX_ORACLE_WINDOW {
        return Err(Error::Window(format!("oracle enumerates at most {MAX_ORACLE_WINDOW} points, got {n}")));
    }
    let mut f = (0..1u64 << n)
        .into_par_iter()
        .map(|mask| {
            let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            if idx.is_empty() {
                return Ok(1.0);
            }
            let sub = m.select_rows(idx.iter()).select_columns(idx.iter());
            Ok(correlation_of(sub)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    for i in 0..n {
        for mask in 0..1usize << n {
            if mask >> i & 1 == 0 {
                f[mask] -= f[mask | 1 << i];
            }
        }
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCorrelation {
    pub indices: Vec<usize>,
    pub empirical: f64,
    pub exact: f64,
    /// Binomial standard deviation `√(p(1-p)/n)` of the empirical frequency.
    pub sigma: f64,
}

impl EmpiricalCorrelation {
    pub fn z_score(&self) -> f64 {
        if self.sigma == 0.0 {
            if self.empirical == self.exact {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.empirical - self.exact) / self.sigma
        }
    }
}

/// Empirical `ρ₁` at every point and `ρ₂` at every pair, against the
/// determinants.
pub fn empirical_correlations(m: &DMatrix<Complex64>, samples: &[Vec<usize>]) -> Result<Vec<EmpiricalCorrelation>> {
    let n = m.nrows();
    let masks: Vec<u64> = samples.iter().map(|s| mask_of(s)).collect();
    let total = masks.len() as f64;
    let mut sets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i + 1..n {
            sets.push(vec![i, j]);
        }
    }
    sets.into_par_iter()
        .map(|idx| {
            let sub = m.select_rows(idx.iter()).select_columns(idx.iter());
            let exact = correlation_of(sub)?.value;
            let want = mask_of(&idx);
            let hits = masks.iter().filter(|&&mk| mk & want == want).count() as f64;
            let p = exact.clamp(0.0, 1.0);
            Ok(EmpiricalCorrelation { indices: idx, empirical: hits / total, exact, sigma: (p * (1.0 - p) / total).sqrt() })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Outcomes with expected count below 5 are pooled into one bin.
    pub pooled_outcomes: usize,
}

/// Pearson χ² goodness of fit of the exact-outcome frequencies.
pub fn chi_square_test(probabilities: &[f64], samples: &[Vec<usize>]) -> Result<ChiSquareTest> {
    let total = samples.len() as f64;
    let mut counts = vec![0usize; probabilities.len()];
    for s in samples {
        let mk = mask_of(s) as usize;
        if mk >= counts.len() {
            return Err(Error::Window(format!("sample {s:?} lies outside the oracle window")));
        }
        counts[mk] += 1;
    }
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pool_e, mut pool_o, mut pooled) = (0.0, 0.0, 0usize);
    for (p, &c) in probabilities.iter().zip(&counts) {
        let e = p.max(0.0) * total;
        if e < 5.0 {
            pool_e += e;
            pool_o += c as f64;
            pooled += 1;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled > 0 && pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        bins += 1;
    }
    if bins < 2 {
        return Err(Error::InvalidParameter("chi-square test needs at least two bins".into()));
    }
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ChiSquareTest { statistic: stat, dof, p_value: 1.0 - dist.cdf(stat), pooled_outcomes: pooled })
}

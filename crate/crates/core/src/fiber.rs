//! Counting the complex completions of a partial filling at a fixed rank.
//!
//! A completion of rank at most `r` is a point `x` (the unspecified values)
//! for which `M(x)` has an `(m-r)`-dimensional kernel. Writing that kernel as
//! `K = R [I; Y]` with a random complex `m x m` matrix `R` gives the bilinear
//! system `M(x) K(Y) = 0`, which is square exactly when
//! `|U| = (n-r)(m-r)`. It is solved by Newton's method from many random
//! complex starts; every converged point is then certified on all
//! `(r+1)`-minors of the completed matrix before it is counted.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complete::PartialMatrix;
use crate::field::{Complexes, Field};
use crate::linalg;
use crate::matrix::Matrix;
use crate::pattern::EntryPattern;
use crate::rng::{complex_gaussian, complex_gaussian_matrix, derive_seed, seeded};

/// Largest number of unknowns accepted.
pub const MAX_UNKNOWNS: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiberError {
    #[error("{0} unknowns exceeds the supported maximum of {MAX_UNKNOWNS}")]
    TooManyUnknowns(usize),
    #[error("rank {r} is outside 0..={max}")]
    RankOutOfRange { r: usize, max: usize },
    #[error("fiber is not expected to be finite: {unknowns} unknowns but codimension {codim}")]
    NotSquare { unknowns: usize, codim: usize },
    #[error("no start converged to a certified completion ({starts} starts)")]
    EmptyFiberEvidence { starts: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberConfig {
    /// `None` picks 200 starts up to 4 unknowns and 2000 above.
    pub starts: Option<usize>,
    pub seed: u64,
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    /// Bound on `max |minor| / scale^(r+1)` over all `(r+1)`-minors.
    pub certify_tol: f64,
    pub cluster_radius: f64,
    pub real_tol: f64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            starts: None,
            seed: 0,
            newton_tol: 1e-12,
            max_newton_iterations: 100,
            certify_tol: 1e-8,
            cluster_radius: 1e-6,
            real_tol: 1e-6,
        }
    }
}

impl FiberConfig {
    pub fn starts_for(&self, unknowns: usize) -> usize {
        self.starts.unwrap_or(if unknowns <= 4 { 200 } else { 2000 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSolution {
    /// Values of the unspecified entries, in the pattern's sorted order.
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `max |minor| / scale^(r+1)` over all `(r+1)`-minors.
    pub residual: f64,
    pub real: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberReport {
    pub pattern: EntryPattern,
    pub filling_seed: Option<u64>,
    pub rank: usize,
    pub solutions: Vec<FiberSolution>,
    pub real_count: usize,
    pub complex_count: usize,
    pub starts_used: usize,
    pub converged_starts: usize,
    pub config: FiberConfig,
}

impl FiberReport {
    pub fn total(&self) -> usize {
        self.solutions.len()
    }
}

/// Enumerates the completions of `a` to rank at most `r`.
pub fn enumerate_fiber(a: &PartialMatrix<f64>, r: usize, cfg: &FiberConfig) -> Result<FiberReport, FiberError> {
    let p = a.pattern();
    let (n, m) = p.shape();
    if r > n.min(m) {
        return Err(FiberError::RankOutOfRange { r, max: n.min(m) });
    }
    let unknowns = p.unspecified_zero_based();
    let k = unknowns.len();
    if k > MAX_UNKNOWNS {
        return Err(FiberError::TooManyUnknowns(k));
    }
    let codim = (n - r) * (m - r);
    if k != codim {
        return Err(FiberError::NotSquare { unknowns: k, codim });
    }
    let starts = cfg.starts_for(k);
    let scale = a.values().max_abs().max(f64::MIN_POSITIVE);
    let system = KernelSystem::new(a.values(), &unknowns, r, cfg.seed);

    let mut converged = 0;
    let mut found: Vec<(Vec<Complex64>, f64)> = Vec::new();
    for s in 0..starts {
        let mut rng = seeded(derive_seed(cfg.seed, s as u64 + 1));
        let mut z: Vec<Complex64> = (0..system.dim()).map(|_| complex_gaussian(&mut rng)).collect();
        for v in z.iter_mut().take(k) {
            *v *= scale;
        }
        let Some(z) = system.newton(z, cfg) else { continue };
        converged += 1;
        let x = z[..k].to_vec();
        let Some(res) = certify(a.values(), &unknowns, &x, r, cfg.certify_tol) else { continue };
        if !found.iter().any(|(y, _)| close(&x, y, cfg.cluster_radius, scale)) {
            found.push((x, res));
        }
    }
    // Conjugation closes the fiber of a real filling; add partners that the
    // starts missed, provided they certify.
    let mut partners = Vec::new();
    for (x, _) in &found {
        let conj: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
        if !close(x, &conj, cfg.real_tol, scale)
            && !found.iter().chain(partners.iter()).any(|(y, _)| close(&conj, y, cfg.cluster_radius, scale))
        {
            if let Some(res) = certify(a.values(), &unknowns, &conj, r, cfg.certify_tol) {
                partners.push((conj, res));
            }
        }
    }
    found.extend(partners);
    if found.is_empty() {
        return Err(FiberError::EmptyFiberEvidence { starts });
    }

    let mut solutions: Vec<FiberSolution> = found
        .into_iter()
        .map(|(x, residual)| {
            let real = x.iter().all(|v| v.im.abs() < cfg.real_tol * scale.max(1.0));
            FiberSolution {
                re: x.iter().map(|v| v.re).collect(),
                im: x.iter().map(|v| if real { 0.0 } else { v.im }).collect(),
                residual,
                real,
            }
        })
        .collect();
    solutions.sort_by(|a, b| {
        b.real
            .cmp(&a.real)
            .then_with(|| lex(&a.re, &b.re))
            .then_with(|| lex(&a.im, &b.im))
    });
    let real_count = solutions.iter().filter(|s| s.real).count();
    Ok(FiberReport {
        pattern: p.clone(),
        filling_seed: None,
        rank: r,
        complex_count: solutions.len() - real_count,
        real_count,
        solutions,
        starts_used: starts,
        converged_starts: converged,
        config: cfg.clone(),
    })
}

/// The real completions in `report`, as unspecified-entry value vectors.
pub fn real_solutions(report: &FiberReport) -> Vec<Vec<f64>> {
    report.solutions.iter().filter(|s| s.real).map(|s| s.re.clone()).collect()
}

fn lex(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(core::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    core::cmp::Ordering::Equal
}

fn close(x: &[Complex64], y: &[Complex64], radius: f64, scale: f64) -> bool {
    let d = x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    d < radius * scale.max(1.0)
}

struct KernelSystem<'a> {
    base: &'a Matrix<f64>,
    unknowns: &'a [(usize, usize)],
    r: usize,
    c: usize,
    rot: Matrix<Complex64>,
}

impl<'a> KernelSystem<'a> {
    fn new(base: &'a Matrix<f64>, unknowns: &'a [(usize, usize)], r: usize, seed: u64) -> Self {
        let m = base.cols();
        let mut rng = seeded(seed);
        let rot = complex_gaussian_matrix(&mut rng, m, m);
        Self { base, unknowns, r, c: m - r, rot }
    }

    fn dim(&self) -> usize {
        self.unknowns.len() + self.r * self.c
    }

    fn filled(&self, x: &[Complex64]) -> Matrix<Complex64> {
        filled_complex(self.base, self.unknowns, x)
    }

    fn kernel(&self, y: &[Complex64]) -> Matrix<Complex64> {
        let (m, c, r) = (self.base.cols(), self.c, self.r);
        Matrix::from_fn(m, c, |i, b| {
            let mut v = self.rot[(i, b)];
            for a in 0..r {
                v += self.rot[(i, c + a)] * y[a * c + b];
            }
            v
        })
    }

    /// Residual `M(x) K(Y)` (row-major) and its Jacobian.
    fn eval(&self, z: &[Complex64]) -> (Matrix<Complex64>, Matrix<Complex64>) {
        let f = Complexes::default();
        let k = self.unknowns.len();
        let (n, c, r) = (self.base.rows(), self.c, self.r);
        let mx = self.filled(&z[..k]);
        let kern = self.kernel(&z[k..]);
        let prod = linalg::matmul(&f, &mx, &kern);
        let resid = Matrix::from_vec(n * c, 1, prod.as_slice().to_vec());
        let tail: Vec<usize> = (c..c + r).collect();
        let all: Vec<usize> = (0..self.base.cols()).collect();
        let mr = linalg::matmul(&f, &mx, &self.rot.select(&all, &tail));
        let mut jac = Matrix::filled(n * c, self.dim(), Complex64::new(0.0, 0.0));
        for (t, &(i, j)) in self.unknowns.iter().enumerate() {
            for b in 0..c {
                jac[(i * c + b, t)] = kern[(j, b)];
            }
        }
        for a in 0..r {
            for b in 0..c {
                for i in 0..n {
                    jac[(i * c + b, k + a * c + b)] = mr[(i, a)];
                }
            }
        }
        (resid, jac)
    }

    fn newton(&self, mut z: Vec<Complex64>, cfg: &FiberConfig) -> Option<Vec<Complex64>> {
        let f = Complexes::default();
        for _ in 0..cfg.max_newton_iterations {
            let (resid, jac) = self.eval(&z);
            let rhs = resid.map(|v| -v);
            let step = linalg::solve(&f, &jac, &rhs).ok().filter(|s| s.unique)?.x;
            let mut dnorm = 0.0f64;
            let mut znorm = 0.0f64;
            for (zi, di) in z.iter_mut().zip(step.iter()) {
                *zi += di;
                dnorm += di.norm_sqr();
                znorm += zi.norm_sqr();
            }
            if !znorm.is_finite() || znorm > 1e16 {
                return None;
            }
            if Float::sqrt(dnorm) < cfg.newton_tol * (1.0 + Float::sqrt(znorm)) {
                return Some(z);
            }
        }
        None
    }
}

fn filled_complex(base: &Matrix<f64>, unknowns: &[(usize, usize)], x: &[Complex64]) -> Matrix<Complex64> {
    let mut mx = base.map(|&v| Complex64::new(v, 0.0));
    for (t, &(i, j)) in unknowns.iter().enumerate() {
        mx[(i, j)] = x[t];
    }
    mx
}

/// `max |minor| / scale^(r+1)` over all `(r+1)`-minors, when below `tol`.
fn certify(base: &Matrix<f64>, unknowns: &[(usize, usize)], x: &[Complex64], r: usize, tol: f64) -> Option<f64> {
    let mx = filled_complex(base, unknowns, x);
    let res = max_minor_residual(&mx, r);
    (res < tol).then_some(res)
}

/// Largest `(r+1)`-minor of `m` in absolute value, relative to
/// `max|m_ij|^(r+1)`. Zero when `r+1` exceeds a dimension.
pub fn max_minor_residual(m: &Matrix<Complex64>, r: usize) -> f64 {
    let size = r + 1;
    if size > m.rows().min(m.cols()) {
        return 0.0;
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let f = Complexes::default();
    let row_sets = combinations(m.rows(), size);
    let col_sets = combinations(m.cols(), size);
    let mut worst = 0.0f64;
    for rows in &row_sets {
        for cols in &col_sets {
            let d = linalg::determinant(&f, &m.select(rows, cols));
            worst = worst.max(f.magnitude(&d));
        }
    }
    worst / Float::powi(scale, size as i32)
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(start: usize, depth: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if depth == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur[depth] = v;
            rec(v + 1, depth + 1, n, cur, out);
        }
    }
    rec(0, 0, n, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{circulant, diag_strip};

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn rejects_non_square_systems() {
        let a = PartialMatrix::random_gaussian(circulant(4, 1).unwrap(), 0);
        assert_eq!(
            enumerate_fiber(&a, 3, &FiberConfig::default()).unwrap_err(),
            FiberError::NotSquare { unknowns: 4, codim: 1 }
        );
        let a = PartialMatrix::random_gaussian(circulant(4, 3).unwrap(), 0);
        assert!(matches!(enumerate_fiber(&a, 1, &FiberConfig::default()), Err(FiberError::TooManyUnknowns(12))));
    }

    #[test]
    fn strip_fiber_is_a_single_real_point() {
        let a = PartialMatrix::random_gaussian(diag_strip(5, 2).unwrap(), 3);
        let report = enumerate_fiber(&a, 2, &FiberConfig::default()).unwrap();
        assert_eq!((report.real_count, report.complex_count), (1, 0));
    }

    #[test]
    fn zero_filling_completes_to_zero() {
        let p = circulant(2, 2).unwrap();
        let a = PartialMatrix::new(p, Matrix::filled(2, 2, 0.0));
        let report = enumerate_fiber(&a, 0, &FiberConfig::default()).unwrap();
        let real = real_solutions(&report);
        assert_eq!(real.len(), 1);
        assert!(real[0].iter().all(|v| v.abs() < 1e-12));
    }
}

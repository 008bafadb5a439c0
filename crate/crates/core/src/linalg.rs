//! Dense linear algebra over exact fields and floats.
//!
//! Elimination routines are generic over [`Field`]; floating contexts use the
//! field's relative tolerance to decide when a pivot vanishes. Numerical rank
//! always goes through the SVD.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::field::{Field, OrderedField};
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("linear system has no solution")]
    NoSolution,
    #[error("Schur block D is singular")]
    SingularBlock,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
}

pub fn matmul<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &Matrix<F::Elem>) -> Matrix<F::Elem> {
    assert_eq!(a.cols(), b.rows(), "matmul shape mismatch");
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        let mut acc = f.zero();
        for t in 0..a.cols() {
            acc = f.add(&acc, &f.mul(&a[(i, t)], &b[(t, j)]));
        }
        acc
    })
}

pub fn sub<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &Matrix<F::Elem>) -> Matrix<F::Elem> {
    assert_eq!(a.shape(), b.shape());
    Matrix::from_fn(a.rows(), a.cols(), |i, j| f.sub(&a[(i, j)], &b[(i, j)]))
}

pub fn identity<F: Field>(f: &F, n: usize) -> Matrix<F::Elem> {
    Matrix::from_fn(n, n, |i, j| if i == j { f.one() } else { f.zero() })
}

fn scale_of<F: Field>(f: &F, m: &Matrix<F::Elem>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(f.magnitude(v)))
}

/// Reduced row echelon form with partial pivoting. Returns the reduced
/// matrix and its pivot columns.
pub fn rref<F: Field>(f: &F, m: &Matrix<F::Elem>) -> (Matrix<F::Elem>, Vec<usize>) {
    rref_with_scale(f, m, scale_of(f, m), m.cols())
}

/// Eliminates on the first `pivot_limit` columns only (the rest ride along,
/// as in an augmented system).
fn rref_with_scale<F: Field>(
    f: &F,
    m: &Matrix<F::Elem>,
    scale: f64,
    pivot_limit: usize,
) -> (Matrix<F::Elem>, Vec<usize>) {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_limit.min(cols) {
        if r == rows {
            break;
        }
        let mut best = r;
        let mut best_mag = f.magnitude(&a[(r, c)]);
        for i in r + 1..rows {
            let mag = f.magnitude(&a[(i, c)]);
            if mag > best_mag {
                best = i;
                best_mag = mag;
            }
        }
        if f.is_negligible(&a[(best, c)], scale) {
            for i in r..rows {
                a[(i, c)] = f.zero();
            }
            continue;
        }
        if best != r {
            for j in 0..cols {
                let tmp = a[(r, j)].clone();
                a[(r, j)] = a[(best, j)].clone();
                a[(best, j)] = tmp;
            }
        }
        let inv = f.inv(&a[(r, c)]).expect("non-negligible pivot is invertible");
        for j in c..cols {
            a[(r, j)] = f.mul(&a[(r, j)], &inv);
        }
        for i in 0..rows {
            if i == r || f.is_zero(&a[(i, c)]) {
                continue;
            }
            let factor = a[(i, c)].clone();
            for j in c..cols {
                let delta = f.mul(&factor, &a[(r, j)]);
                a[(i, j)] = f.sub(&a[(i, j)], &delta);
            }
            a[(i, c)] = f.zero();
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Row-echelon rank. Exact for exact fields; for floats prefer
/// [`numerical_rank`].
pub fn rank<F: Field>(f: &F, m: &Matrix<F::Elem>) -> usize {
    rref(f, m).1.len()
}

/// Greedy selection of linearly independent rows, scanning in order.
pub fn independent_rows<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Vec<usize> {
    let scale = scale_of(f, m);
    let cols = m.cols();
    let mut basis: Vec<(Vec<F::Elem>, usize)> = Vec::new();
    let mut chosen = Vec::new();
    for i in 0..m.rows() {
        let mut v: Vec<F::Elem> = m.row(i).to_vec();
        for (b, p) in &basis {
            if f.is_zero(&v[*p]) {
                continue;
            }
            let factor = v[*p].clone();
            for j in 0..cols {
                let delta = f.mul(&factor, &b[j]);
                v[j] = f.sub(&v[j], &delta);
            }
        }
        let (mut best, mut best_mag) = (0, 0.0);
        for (j, x) in v.iter().enumerate() {
            let mag = f.magnitude(x);
            if mag > best_mag {
                best = j;
                best_mag = mag;
            }
        }
        if cols == 0 || f.is_negligible(&v[best], scale) {
            continue;
        }
        let inv = f.inv(&v[best]).expect("nonzero pivot");
        for x in v.iter_mut() {
            *x = f.mul(x, &inv);
        }
        basis.push((v, best));
        chosen.push(i);
    }
    chosen
}

pub fn independent_cols<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Vec<usize> {
    independent_rows(f, &m.transpose())
}

/// A particular solution of `a x = b` (free variables set to zero).
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<E> {
    pub x: Matrix<E>,
    /// `false` when the system is underdetermined.
    pub unique: bool,
}

pub fn solve<F: Field>(
    f: &F,
    a: &Matrix<F::Elem>,
    b: &Matrix<F::Elem>,
) -> Result<Solution<F::Elem>, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LinalgError::Dimension("solve: rhs row count"));
    }
    let n = a.cols();
    let k = b.cols();
    let aug = Matrix::from_fn(a.rows(), n + k, |i, j| {
        if j < n {
            a[(i, j)].clone()
        } else {
            b[(i, j - n)].clone()
        }
    });
    let scale = scale_of(f, a).max(scale_of(f, b));
    let (red, pivots) = rref_with_scale(f, &aug, scale, n);
    for i in pivots.len()..a.rows() {
        for j in n..n + k {
            if !f.is_negligible(&red[(i, j)], scale) {
                return Err(LinalgError::NoSolution);
            }
        }
    }
    let mut x = Matrix::filled(n, k, f.zero());
    for (r, &c) in pivots.iter().enumerate() {
        for j in 0..k {
            x[(c, j)] = red[(r, n + j)].clone();
        }
    }
    Ok(Solution { x, unique: pivots.len() == n })
}

/// Solution of `a x = b` with the least-norm / least-squares conventions.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution<E> {
    pub x: Matrix<E>,
    /// Set when the system is underdetermined and the minimum-norm
    /// solution was chosen.
    pub least_norm: bool,
}

/// Exact fields: exact solve, `NoSolution` when inconsistent, minimum-norm
/// choice when underdetermined. Floats: minimum-norm least-squares through
/// the SVD; consistency is the caller's residual check.
pub fn solve_linear<F: OrderedField>(
    f: &F,
    a: &Matrix<F::Elem>,
    b: &Matrix<F::Elem>,
) -> Result<LinearSolution<F::Elem>, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LinalgError::Dimension("solve_linear: rhs row count"));
    }
    if f.is_exact() {
        let particular = solve(f, a, b)?;
        if particular.unique {
            return Ok(LinearSolution { x: particular.x, least_norm: false });
        }
        return Ok(LinearSolution { x: f.pseudo_solve(a, b), least_norm: true });
    }
    let r = rank(f, a);
    Ok(LinearSolution { x: f.pseudo_solve(a, b), least_norm: r < a.cols() })
}

/// Moore-Penrose solution `a^+ b` in exact arithmetic, through a rank
/// factorization `a = c r`: `a^+ = r^T (r r^T)^-1 (c^T c)^-1 c^T`.
pub fn pseudo_solve_exact<F: Field>(
    f: &F,
    a: &Matrix<F::Elem>,
    b: &Matrix<F::Elem>,
) -> Matrix<F::Elem> {
    let (red, pivots) = rref(f, a);
    let rk = pivots.len();
    if rk == 0 {
        return Matrix::filled(a.cols(), b.cols(), f.zero());
    }
    let all_rows: Vec<usize> = (0..a.rows()).collect();
    let all_cols: Vec<usize> = (0..a.cols()).collect();
    let top: Vec<usize> = (0..rk).collect();
    let r = red.select(&top, &all_cols);
    let c = a.select(&all_rows, &pivots);
    let ct = c.transpose();
    let rt = r.transpose();
    let ctc = matmul(f, &ct, &c);
    let ctb = matmul(f, &ct, b);
    let y = solve(f, &ctc, &ctb).expect("Gram matrix of independent columns is invertible").x;
    let rrt = matmul(f, &r, &rt);
    let z = solve(f, &rrt, &y).expect("Gram matrix of independent rows is invertible").x;
    matmul(f, &rt, &z)
}

/// Floating minimum-norm least-squares solution; singular values below
/// `rel_tol * sigma_max` are treated as zero.
pub fn pseudo_solve_svd(a: &Matrix<f64>, b: &Matrix<f64>, rel_tol: f64) -> Matrix<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Matrix::filled(a.cols(), b.cols(), 0.0);
    }
    let svd = a.to_nalgebra().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    if smax == 0.0 {
        return Matrix::filled(a.cols(), b.cols(), 0.0);
    }
    let x = svd.solve(&b.to_nalgebra(), rel_tol * smax).expect("u and v were computed");
    Matrix::from_nalgebra(&x)
}

pub fn determinant<F: Field>(f: &F, m: &Matrix<F::Elem>) -> F::Elem {
    assert_eq!(m.rows(), m.cols(), "determinant of a non-square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut det = f.one();
    for c in 0..n {
        let mut best = c;
        let mut best_mag = f.magnitude(&a[(c, c)]);
        for i in c + 1..n {
            let mag = f.magnitude(&a[(i, c)]);
            if mag > best_mag {
                best = i;
                best_mag = mag;
            }
        }
        if f.is_zero(&a[(best, c)]) {
            return f.zero();
        }
        if best != c {
            for j in 0..n {
                let tmp = a[(c, j)].clone();
                a[(c, j)] = a[(best, j)].clone();
                a[(best, j)] = tmp;
            }
            det = f.neg(&det);
        }
        det = f.mul(&det, &a[(c, c)]);
        let Some(inv) = f.inv(&a[(c, c)]) else {
            return f.zero();
        };
        for i in c + 1..n {
            if f.is_zero(&a[(i, c)]) {
                continue;
            }
            let factor = f.mul(&a[(i, c)], &inv);
            for j in c..n {
                let delta = f.mul(&factor, &a[(c, j)]);
                a[(i, j)] = f.sub(&a[(i, j)], &delta);
            }
        }
    }
    det
}

pub fn inverse<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Result<Matrix<F::Elem>, LinalgError> {
    let sol = solve(f, m, &identity(f, m.rows())).map_err(|_| LinalgError::SingularBlock)?;
    if sol.unique {
        Ok(sol.x)
    } else {
        Err(LinalgError::SingularBlock)
    }
}

/// A block matrix `[[A, B], [C, D]]` cut at `row_cut` and `col_cut`; `D` is
/// the bottom-right block and must be square.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSplit<E> {
    parent: Matrix<E>,
    row_cut: usize,
    col_cut: usize,
}

impl<E: Clone> BlockSplit<E> {
    pub fn new(parent: Matrix<E>, row_cut: usize, col_cut: usize) -> Result<Self, LinalgError> {
        if row_cut > parent.rows() || col_cut > parent.cols() {
            return Err(LinalgError::Dimension("block cut outside the matrix"));
        }
        if parent.rows() - row_cut != parent.cols() - col_cut {
            return Err(LinalgError::Dimension("block D must be square"));
        }
        Ok(Self { parent, row_cut, col_cut })
    }

    pub fn parent(&self) -> &Matrix<E> {
        &self.parent
    }

    fn range(lo: usize, hi: usize) -> Vec<usize> {
        (lo..hi).collect()
    }

    pub fn a(&self) -> Matrix<E> {
        self.parent.select(&Self::range(0, self.row_cut), &Self::range(0, self.col_cut))
    }
    pub fn b(&self) -> Matrix<E> {
        self.parent
            .select(&Self::range(0, self.row_cut), &Self::range(self.col_cut, self.parent.cols()))
    }
    pub fn c(&self) -> Matrix<E> {
        self.parent
            .select(&Self::range(self.row_cut, self.parent.rows()), &Self::range(0, self.col_cut))
    }
    pub fn d(&self) -> Matrix<E> {
        self.parent.select(
            &Self::range(self.row_cut, self.parent.rows()),
            &Self::range(self.col_cut, self.parent.cols()),
        )
    }
}

/// `A - B D^-1 C`.
pub fn schur_complement<F: Field>(
    f: &F,
    split: &BlockSplit<F::Elem>,
) -> Result<Matrix<F::Elem>, LinalgError> {
    let d = split.d();
    let dinv_c = solve(f, &d, &split.c()).map_err(|_| LinalgError::SingularBlock)?;
    if !dinv_c.unique {
        return Err(LinalgError::SingularBlock);
    }
    Ok(sub(f, &split.a(), &matmul(f, &split.b(), &dinv_c.x)))
}

/// Schur complement of a randomly drawn split, drawing once more if the
/// first draw has a singular `D`. `draw` receives the attempt index.
pub fn schur_complement_retry<F: Field>(
    f: &F,
    mut draw: impl FnMut(u32) -> BlockSplit<F::Elem>,
) -> Result<(BlockSplit<F::Elem>, Matrix<F::Elem>), LinalgError> {
    let mut last = LinalgError::SingularBlock;
    for attempt in 0..2 {
        let split = draw(attempt);
        match schur_complement(f, &split) {
            Ok(s) => return Ok((split, s)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Singular values in decreasing order.
pub fn singular_values(m: &Matrix<f64>) -> Result<Vec<f64>, LinalgError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(Vec::new());
    }
    Ok(sorted_desc(m.to_nalgebra().singular_values().iter().copied()))
}

pub fn singular_values_complex(m: &Matrix<Complex64>) -> Result<Vec<f64>, LinalgError> {
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(Vec::new());
    }
    let na: DMatrix<Complex64> = m.to_nalgebra();
    Ok(sorted_desc(na.singular_values().iter().copied()))
}

fn sorted_desc(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = it.collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    v
}

fn count_above(sv: &[f64], rel_tol: f64) -> usize {
    match sv.first() {
        Some(&s1) if s1 > 0.0 => sv.iter().filter(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// Number of singular values above `rel_tol * sigma_1`.
pub fn numerical_rank(m: &Matrix<f64>, rel_tol: f64) -> Result<usize, LinalgError> {
    Ok(count_above(&singular_values(m)?, rel_tol))
}

pub fn numerical_rank_complex(m: &Matrix<Complex64>, rel_tol: f64) -> Result<usize, LinalgError> {
    Ok(count_above(&singular_values_complex(m)?, rel_tol))
}

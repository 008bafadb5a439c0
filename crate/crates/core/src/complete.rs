//! Constructive completions with replayable certificates.
//!
//! Every procedure works on a [`Workspace`] of frames. Frame 0 holds the
//! input; relabelings and Schur complements open child frames. Each change is
//! expressed as a [`Step`] and executed through [`Workspace::apply`], so a
//! certificate is replayed by feeding its steps back through the same
//! function. Positions inside steps are 0-based.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::{self, FiberConfig, FiberError, FiberReport};
use crate::field::{OrderedField, Rationals, Reals};
use crate::linalg::{self, LinalgError};
use crate::matrix::Matrix;
use crate::pattern::{self, EntryPattern, PatternFamily};
use crate::rng::{gaussian, seeded};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompletionError {
    #[error("input is not generic: {0}")]
    NotGeneric(String),
    #[error("pattern does not have the required shape: {0}")]
    PatternShape(String),
    #[error("n = {n} is below the threshold {required}")]
    ThresholdNotMet { n: usize, required: usize },
    #[error("Schur block D is singular")]
    SingularBlock,
    #[error("step cannot be applied: {0}")]
    InvalidStep(String),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

impl From<LinalgError> for CompletionError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::SingularBlock => Self::SingularBlock,
            other => Self::NotGeneric(other.to_string()),
        }
    }
}

/// Scalar domain of a completion run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Rational,
    Real,
}

/// Fields the completer runs over.
pub trait CompletionField: OrderedField + Sized
where
    Self::Elem: Zero,
{
    const DOMAIN: Domain;

    /// Exact rank, or numerical rank at relative tolerance 1e-9.
    fn matrix_rank(&self, m: &Matrix<Self::Elem>) -> usize;

    /// Whether a residual counts as zero against entries of size `scale`.
    fn negligible_residual(&self, v: &Self::Elem, scale: f64) -> bool;
}

/// Relative tolerance for residuals and entry agreement over the reals.
pub const REAL_AGREEMENT_TOL: f64 = 1e-8;

impl CompletionField for Rationals {
    const DOMAIN: Domain = Domain::Rational;

    fn matrix_rank(&self, m: &Matrix<BigRational>) -> usize {
        linalg::rank(self, m)
    }

    fn negligible_residual(&self, v: &BigRational, _scale: f64) -> bool {
        v.is_zero()
    }
}

impl CompletionField for Reals {
    const DOMAIN: Domain = Domain::Real;

    fn matrix_rank(&self, m: &Matrix<f64>) -> usize {
        linalg::numerical_rank(m, 1e-9).unwrap_or(usize::MAX)
    }

    fn negligible_residual(&self, v: &f64, scale: f64) -> bool {
        v.abs() <= REAL_AGREEMENT_TOL * scale
    }
}

/// A pattern plus values on its specified entries. Unspecified positions
/// hold zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialMatrix<E> {
    pattern: EntryPattern,
    values: Matrix<E>,
}

impl<E: Clone + Zero> PartialMatrix<E> {
    /// Panics if `values` does not match the pattern's shape. Entries at
    /// unspecified positions are discarded.
    pub fn new(pattern: EntryPattern, mut values: Matrix<E>) -> Self {
        assert_eq!(values.shape(), pattern.shape(), "values do not match the pattern");
        for (i, j) in pattern.unspecified_zero_based() {
            values[(i, j)] = E::zero();
        }
        Self { pattern, values }
    }

    /// Values for the specified entries in row-major order.
    pub fn from_specified(pattern: EntryPattern, specified: Vec<E>) -> Self {
        let pos = pattern.specified_zero_based();
        assert_eq!(pos.len(), specified.len(), "wrong number of specified values");
        let mut values = Matrix::filled(pattern.rows(), pattern.cols(), E::zero());
        for ((i, j), v) in pos.into_iter().zip(specified) {
            values[(i, j)] = v;
        }
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &EntryPattern {
        &self.pattern
    }

    pub fn values(&self) -> &Matrix<E> {
        &self.values
    }

    pub fn specified_values(&self) -> Vec<E> {
        self.pattern.specified_zero_based().into_iter().map(|(i, j)| self.values[(i, j)].clone()).collect()
    }

    /// The same data with its pattern and values transposed.
    pub fn transpose(&self) -> Self {
        Self { pattern: self.pattern.transpose(), values: self.values.transpose() }
    }
}

impl PartialMatrix<f64> {
    /// Standard Gaussian values on the specified entries.
    pub fn random_gaussian(pattern: EntryPattern, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let values = Matrix::from_fn(pattern.rows(), pattern.cols(), |_, _| gaussian(&mut rng));
        Self::new(pattern, values)
    }
}

/// Range of the integer test inputs used for rational runs.
pub const INTEGER_INPUT_BOUND: i64 = 1_000_000;

impl PartialMatrix<BigRational> {
    /// Integers drawn uniformly from `[-10^6, 10^6]`.
    pub fn random_integer(pattern: EntryPattern, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let values = Matrix::from_fn(pattern.rows(), pattern.cols(), |_, _| {
            let v: i64 = rng.random_range(-INTEGER_INPUT_BOUND..=INTEGER_INPUT_BOUND);
            BigRational::from_integer(BigInt::from(v))
        });
        Self::new(pattern, values)
    }

    pub fn to_f64(&self) -> PartialMatrix<f64> {
        PartialMatrix { pattern: self.pattern.clone(), values: self.values.map(|v| Rationals.to_f64(v)) }
    }
}

/// Blocks of a Schur split of a frame: `A` on `a_rows x a_cols`, `D` on
/// `d_rows x d_cols`; `B` and `C` are the off-diagonal combinations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub a_rows: Vec<usize>,
    pub a_cols: Vec<usize>,
    pub d_rows: Vec<usize>,
    pub d_cols: Vec<usize>,
}

impl SplitSpec {
    /// Leading `row_cut x col_cut` block against the trailing rows/columns.
    pub fn trailing(rows: usize, cols: usize, row_cut: usize, col_cut: usize) -> Self {
        Self {
            a_rows: (0..row_cut).collect(),
            a_cols: (0..col_cut).collect(),
            d_rows: (row_cut..rows).collect(),
            d_cols: (col_cut..cols).collect(),
        }
    }
}

/// Fills `targets` of line `line` as `sum_t coefficients[t] * basis[t]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Append<E> {
    pub frame: usize,
    pub line: usize,
    /// Lines on the same axis whose span receives the new line.
    pub basis: Vec<usize>,
    /// Cross positions whose known values determined the coefficients.
    pub known: Vec<usize>,
    pub targets: Vec<usize>,
    pub coefficients: Vec<E>,
    /// Exactly determined. Steps with `unique = false` took a least-norm or
    /// least-squares choice.
    pub unique: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Step<E> {
    AppendRow(Append<E>),
    AppendCol(Append<E>),
    SchurReduce { parent: usize, child: usize, split: SplitSpec },
    SchurLift { parent: usize, child: usize, split: SplitSpec },
    /// Opens `child` as `parent[rows, cols]`, transposed if requested.
    Relabel { parent: usize, child: usize, rows: Vec<usize>, cols: Vec<usize>, transpose: bool },
    /// Writes `child` back into the unknown positions of `parent`.
    Restore { parent: usize, child: usize, rows: Vec<usize>, cols: Vec<usize>, transpose: bool },
    RecursionEnter { frame: usize, family: PatternFamily, level: usize },
    /// Sets `entry` so that the minor on `rows x cols` vanishes.
    MinorSolve { frame: usize, entry: (usize, usize), rows: Vec<usize>, cols: Vec<usize>, value: E },
    FreeFill { frame: usize, entries: Vec<(usize, usize)>, value: E },
    /// Values taken from a point of an enumerated fiber.
    FiberPick { frame: usize, entries: Vec<(usize, usize)>, values: Vec<E> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame<E> {
    pub values: Matrix<E>,
    pub known: Matrix<bool>,
}

impl<E> Frame<E> {
    pub fn is_complete(&self) -> bool {
        self.known.iter().all(|&k| k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Row,
    Col,
}

pub struct Workspace<'a, F: CompletionField>
where
    F::Elem: Zero,
{
    field: &'a F,
    frames: Vec<Frame<F::Elem>>,
    steps: Vec<Step<F::Elem>>,
}

impl<'a, F: CompletionField> Workspace<'a, F>
where
    F::Elem: Zero,
{
    pub fn new(field: &'a F, input: &PartialMatrix<F::Elem>) -> Self {
        let mask = input.pattern().mask();
        let (n, m) = input.pattern().shape();
        let known = Matrix::from_fn(n, m, |i, j| !mask[i * m + j]);
        Self { field, frames: vec![Frame { values: input.values().clone(), known }], steps: Vec::new() }
    }

    pub fn frame(&self, id: usize) -> &Frame<F::Elem> {
        &self.frames[id]
    }

    pub fn steps(&self) -> &[Step<F::Elem>] {
        &self.steps
    }

    fn next_frame(&self) -> usize {
        self.frames.len()
    }

    fn record(&mut self, step: Step<F::Elem>) -> Result<(), CompletionError> {
        self.apply(&step)?;
        self.steps.push(step);
        Ok(())
    }

    fn frame_checked(&self, id: usize) -> Result<&Frame<F::Elem>, CompletionError> {
        self.frames.get(id).ok_or_else(|| CompletionError::InvalidStep(format!("no frame {id}")))
    }

    fn expect_child(&self, child: usize) -> Result<(), CompletionError> {
        if child != self.frames.len() {
            return Err(CompletionError::InvalidStep(format!("child frame {child} out of sequence")));
        }
        Ok(())
    }

    /// Executes one step. Forward runs and replays both go through here.
    pub fn apply(&mut self, step: &Step<F::Elem>) -> Result<(), CompletionError> {
        let f = self.field;
        match step {
            Step::AppendRow(a) | Step::AppendCol(a) => {
                let axis = if matches!(step, Step::AppendRow(_)) { Axis::Row } else { Axis::Col };
                let fr = self.frames.get_mut(a.frame).ok_or_else(|| CompletionError::InvalidStep("no frame".into()))?;
                if a.basis.len() != a.coefficients.len() {
                    return Err(CompletionError::InvalidStep("coefficient count".into()));
                }
                for &b in &a.targets {
                    let mut v = f.zero();
                    for (t, &l) in a.basis.iter().enumerate() {
                        v = f.add(&v, &f.mul(&a.coefficients[t], &fr.values[at(axis, l, b)]));
                    }
                    fr.values[at(axis, a.line, b)] = v;
                    fr.known[at(axis, a.line, b)] = true;
                }
            }
            Step::SchurReduce { parent, child, split } => {
                self.expect_child(*child)?;
                let p = self.frame_checked(*parent)?;
                let borders_known = split.d_rows.iter().all(|&i| {
                    split.a_cols.iter().chain(&split.d_cols).all(|&j| p.known[(i, j)])
                }) && split.a_rows.iter().all(|&i| split.d_cols.iter().all(|&j| p.known[(i, j)]));
                if !borders_known {
                    return Err(CompletionError::PatternShape("Schur blocks B, C, D must be specified".into()));
                }
                let correction = schur_correction(f, &p.values, split)?;
                let a = p.values.select(&split.a_rows, &split.a_cols);
                let values = linalg::sub(f, &a, &correction);
                let known = p.known.select(&split.a_rows, &split.a_cols);
                self.frames.push(Frame { values, known });
            }
            Step::SchurLift { parent, child, split } => {
                let correction = schur_correction(f, &self.frame_checked(*parent)?.values, split)?;
                let c = self.frame_checked(*child)?.clone();
                let p = &mut self.frames[*parent];
                for (a, &i) in split.a_rows.iter().enumerate() {
                    for (b, &j) in split.a_cols.iter().enumerate() {
                        if !p.known[(i, j)] {
                            if !c.known[(a, b)] {
                                return Err(CompletionError::InvalidStep("inner frame left unknowns".into()));
                            }
                            p.values[(i, j)] = f.add(&c.values[(a, b)], &correction[(a, b)]);
                            p.known[(i, j)] = true;
                        }
                    }
                }
            }
            Step::Relabel { parent, child, rows, cols, transpose } => {
                self.expect_child(*child)?;
                let p = self.frame_checked(*parent)?;
                let mut values = p.values.select(rows, cols);
                let mut known = p.known.select(rows, cols);
                if *transpose {
                    values = values.transpose();
                    known = known.transpose();
                }
                self.frames.push(Frame { values, known });
            }
            Step::Restore { parent, child, rows, cols, transpose } => {
                let c = self.frame_checked(*child)?.clone();
                let p = &mut self.frames[*parent];
                for (a, &i) in rows.iter().enumerate() {
                    for (b, &j) in cols.iter().enumerate() {
                        let src = if *transpose { (b, a) } else { (a, b) };
                        if !p.known[(i, j)] && c.known[src] {
                            p.values[(i, j)] = c.values[src].clone();
                            p.known[(i, j)] = true;
                        }
                    }
                }
            }
            Step::RecursionEnter { .. } => {}
            Step::MinorSolve { frame, entry, rows, cols, .. } => {
                let fr = self.frames.get_mut(*frame).ok_or_else(|| CompletionError::InvalidStep("no frame".into()))?;
                fr.values[*entry] = f.zero();
                let d0 = linalg::determinant(f, &fr.values.select(rows, cols));
                fr.values[*entry] = f.one();
                let d1 = linalg::determinant(f, &fr.values.select(rows, cols));
                let slope = f.sub(&d1, &d0);
                let scale = f.magnitude(&d0).max(f.magnitude(&d1));
                if f.negligible_residual(&slope, scale) {
                    return Err(CompletionError::NotGeneric("cofactor of the solved entry vanishes".into()));
                }
                let x = f.neg(&f.div(&d0, &slope).expect("nonzero slope"));
                fr.values[*entry] = x;
                fr.known[*entry] = true;
            }
            Step::FreeFill { frame, entries, value } => {
                let fr = self.frames.get_mut(*frame).ok_or_else(|| CompletionError::InvalidStep("no frame".into()))?;
                for &e in entries {
                    fr.values[e] = value.clone();
                    fr.known[e] = true;
                }
            }
            Step::FiberPick { frame, entries, values } => {
                let fr = self.frames.get_mut(*frame).ok_or_else(|| CompletionError::InvalidStep("no frame".into()))?;
                for (&e, v) in entries.iter().zip(values) {
                    fr.values[e] = v.clone();
                    fr.known[e] = true;
                }
            }
        }
        Ok(())
    }
}

fn at(axis: Axis, line: usize, cross: usize) -> (usize, usize) {
    match axis {
        Axis::Row => (line, cross),
        Axis::Col => (cross, line),
    }
}

/// `B D^-1 C` for a split of `values`.
fn schur_correction<F: CompletionField>(
    f: &F,
    values: &Matrix<F::Elem>,
    split: &SplitSpec,
) -> Result<Matrix<F::Elem>, CompletionError>
where
    F::Elem: Zero,
{
    if split.d_rows.len() != split.d_cols.len() {
        return Err(CompletionError::InvalidStep("Schur block D is not square".into()));
    }
    let b = values.select(&split.a_rows, &split.d_cols);
    let c = values.select(&split.d_rows, &split.a_cols);
    let d = values.select(&split.d_rows, &split.d_cols);
    let x = linalg::solve(f, &d, &c).map_err(|_| CompletionError::SingularBlock)?;
    if !x.unique {
        return Err(CompletionError::SingularBlock);
    }
    Ok(linalg::matmul(f, &b, &x.x))
}

/// Coefficients expressing a line through the rows of `mk` (the basis
/// restricted to the line's known positions), given the known values `rhs`.
fn line_coefficients<F: CompletionField>(
    f: &F,
    mk: &Matrix<F::Elem>,
    rhs: &[F::Elem],
    r: usize,
) -> Result<(Vec<F::Elem>, bool), CompletionError>
where
    F::Elem: Zero,
{
    let rho = mk.rows();
    let scale = mk.iter().chain(rhs).fold(0.0f64, |acc, v| acc.max(f.magnitude(v)));
    if rho == 0 {
        let consistent = rhs.iter().all(|v| f.negligible_residual(v, scale));
        if !consistent && r == 0 {
            return Err(CompletionError::NotGeneric("nonzero entry in a rank-0 line".into()));
        }
        return Ok((Vec::new(), consistent && r == 0));
    }
    let mkt = mk.transpose();
    let b = Matrix::from_vec(rhs.len(), 1, rhs.to_vec());
    let coef = f.pseudo_solve(&mkt, &b);
    let resid = linalg::sub(f, &linalg::matmul(f, &mkt, &coef), &b);
    let consistent = resid.iter().all(|v| f.negligible_residual(v, scale));
    if !consistent && rho >= r {
        return Err(CompletionError::NotGeneric("known entries are inconsistent with the target rank".into()));
    }
    let pivot_rank = linalg::independent_rows(f, mk).len();
    if rhs.len() >= rho && rho >= r && pivot_rank < rho {
        return Err(CompletionError::NotGeneric("vanishing pivot minor".into()));
    }
    let unique = consistent && rho == r && pivot_rank == r;
    Ok((coef.as_slice().to_vec(), unique))
}

/// Completes one partially specified row into the row space of `basis`
/// (whose rank is the target). Least-norm coefficients when fewer entries
/// than the rank are given.
pub fn append_row_complete<F: CompletionField>(
    f: &F,
    basis: &Matrix<F::Elem>,
    new_row: &[Option<F::Elem>],
) -> Result<Vec<F::Elem>, CompletionError>
where
    F::Elem: Zero,
{
    if new_row.len() != basis.cols() {
        return Err(CompletionError::PatternShape("row length differs from the basis".into()));
    }
    let idx = linalg::independent_rows(f, basis);
    let basis = basis.select(&idx, &(0..basis.cols()).collect::<Vec<_>>());
    let known: Vec<usize> = (0..new_row.len()).filter(|&j| new_row[j].is_some()).collect();
    let rhs: Vec<F::Elem> = known.iter().map(|&j| new_row[j].clone().unwrap()).collect();
    let all_rows: Vec<usize> = (0..basis.rows()).collect();
    let (coef, _) = line_coefficients(f, &basis.select(&all_rows, &known), &rhs, basis.rows())?;
    Ok((0..basis.cols())
        .map(|j| match &new_row[j] {
            Some(v) => v.clone(),
            None => coef.iter().enumerate().fold(f.zero(), |acc, (t, c)| f.add(&acc, &f.mul(c, &basis[(t, j)]))),
        })
        .collect())
}

/// Order in which the peeling scan looks for removable lines. Different
/// orders are used to test that uniquely determined fills do not depend on
/// the route.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelOrder {
    pub cols_first: bool,
    pub reverse: bool,
}

impl PeelOrder {
    pub const ALTERNATE: Self = Self { cols_first: true, reverse: true };
}

impl<'a, F: CompletionField> Workspace<'a, F>
where
    F::Elem: Zero,
{
    /// Appends `line` (on `axis`) into the span of the `block` lines over the
    /// `cross` positions, filling its unknown cross positions.
    fn append_line(
        &mut self,
        frame: usize,
        axis: Axis,
        line: usize,
        block: &[usize],
        cross: &[usize],
        r: usize,
    ) -> Result<(), CompletionError> {
        let f = self.field;
        let fr = &self.frames[frame];
        let (known, targets): (Vec<usize>, Vec<usize>) = cross.iter().partition(|&&b| fr.known[at(axis, line, b)]);
        if targets.is_empty() {
            return Ok(());
        }
        let block_matrix = Matrix::from_fn(block.len(), cross.len(), |t, b| fr.values[at(axis, block[t], cross[b])].clone());
        let basis: Vec<usize> = linalg::independent_rows(f, &block_matrix).into_iter().map(|t| block[t]).collect();
        if basis.len() > r {
            return Err(CompletionError::NotGeneric(format!("block rank {} exceeds target {r}", basis.len())));
        }
        let mk = Matrix::from_fn(basis.len(), known.len(), |t, b| fr.values[at(axis, basis[t], known[b])].clone());
        let rhs: Vec<F::Elem> = known.iter().map(|&b| fr.values[at(axis, line, b)].clone()).collect();
        let (coefficients, unique) = line_coefficients(f, &mk, &rhs, r)?;
        let append = Append { frame, line, basis, known, targets, coefficients, unique };
        self.record(match axis {
            Axis::Row => Step::AppendRow(append),
            Axis::Col => Step::AppendCol(append),
        })
    }

    /// Rank-`r` completion of the `rows x cols` block of `frame` by peeling:
    /// lines with at most `r` known entries are removed until what remains
    /// is fully known, then re-added in reverse order, each into the span of
    /// the lines already present.
    pub fn kcore_complete(
        &mut self,
        frame: usize,
        rows: &[usize],
        cols: &[usize],
        r: usize,
        order: PeelOrder,
    ) -> Result<(), CompletionError> {
        let fr = &self.frames[frame];
        let mut live_rows: Vec<usize> = rows.to_vec();
        let mut live_cols: Vec<usize> = cols.to_vec();
        if order.reverse {
            live_rows.reverse();
            live_cols.reverse();
        }
        let known_in = |axis: Axis, line: usize, cross: &[usize]| cross.iter().filter(|&&b| fr.known[at(axis, line, b)]).count();
        let mut peeled: Vec<(Axis, usize)> = Vec::new();
        loop {
            let row_hit = || live_rows.iter().position(|&i| known_in(Axis::Row, i, &live_cols) <= r);
            let col_hit = || live_cols.iter().position(|&j| known_in(Axis::Col, j, &live_rows) <= r);
            let hit = if order.cols_first {
                col_hit().map(|p| (Axis::Col, p)).or_else(|| row_hit().map(|p| (Axis::Row, p)))
            } else {
                row_hit().map(|p| (Axis::Row, p)).or_else(|| col_hit().map(|p| (Axis::Col, p)))
            };
            match hit {
                Some((Axis::Row, p)) => peeled.push((Axis::Row, live_rows.remove(p))),
                Some((Axis::Col, p)) => peeled.push((Axis::Col, live_cols.remove(p))),
                None => break,
            }
        }
        let core_known = live_rows.iter().all(|&i| live_cols.iter().all(|&j| fr.known[(i, j)]));
        if !core_known {
            return Err(CompletionError::PatternShape(format!(
                "the {}x{} core left after peeling at rank {r} has unknown entries",
                live_rows.len(),
                live_cols.len()
            )));
        }
        let core = fr.values.select(&live_rows, &live_cols);
        if self.field.matrix_rank(&core) > r {
            return Err(CompletionError::NotGeneric(format!("specified core has rank above {r}")));
        }
        for (axis, line) in peeled.into_iter().rev() {
            match axis {
                Axis::Row => {
                    self.append_line(frame, Axis::Row, line, &live_rows, &live_cols, r)?;
                    live_rows.push(line);
                }
                Axis::Col => {
                    self.append_line(frame, Axis::Col, line, &live_cols, &live_rows, r)?;
                    live_cols.push(line);
                }
            }
        }
        Ok(())
    }

    /// Opens the Schur complement of `split` in `parent` as a new frame.
    pub fn schur_reduce(&mut self, parent: usize, split: SplitSpec) -> Result<usize, CompletionError> {
        let child = self.next_frame();
        self.record(Step::SchurReduce { parent, child, split })?;
        Ok(child)
    }

    pub fn schur_lift(&mut self, parent: usize, child: usize, split: SplitSpec) -> Result<(), CompletionError> {
        self.record(Step::SchurLift { parent, child, split })
    }

    fn relabel(&mut self, parent: usize, rows: Vec<usize>, cols: Vec<usize>, transpose: bool) -> Result<usize, CompletionError> {
        let child = self.next_frame();
        self.record(Step::Relabel { parent, child, rows, cols, transpose })?;
        Ok(child)
    }

    fn restore(&mut self, parent: usize, child: usize, rows: Vec<usize>, cols: Vec<usize>, transpose: bool) -> Result<(), CompletionError> {
        self.record(Step::Restore { parent, child, rows, cols, transpose })
    }

    fn finish(self, method: &str, input: &PartialMatrix<F::Elem>, target_rank: usize) -> Result<CompletionCertificate<F::Elem>, CompletionError> {
        let root = &self.frames[0];
        if !root.is_complete() {
            return Err(CompletionError::InvalidStep("procedure left unknown entries".into()));
        }
        let achieved_rank = self.field.matrix_rank(&root.values);
        Ok(CompletionCertificate {
            method: method.to_string(),
            domain: F::DOMAIN,
            input: input.clone(),
            target_rank,
            steps: self.steps,
            filled: self.frames.into_iter().next().expect("root frame").values,
            achieved_rank,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionCertificate<E> {
    pub method: String,
    pub domain: Domain,
    pub input: PartialMatrix<E>,
    pub target_rank: usize,
    pub steps: Vec<Step<E>>,
    pub filled: Matrix<E>,
    pub achieved_rank: usize,
}

impl<E> CompletionCertificate<E> {
    /// Whether every exactly determined step was unique, i.e. no step took a
    /// least-norm choice.
    pub fn all_appends_unique(&self) -> bool {
        self.steps.iter().all(|s| match s {
            Step::AppendRow(a) | Step::AppendCol(a) => a.unique,
            _ => true,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub valid: bool,
    pub rank: usize,
    pub diagnostics: Vec<String>,
}

/// Re-checks agreement on the specified entries, the rank bound, and that
/// replaying the steps from the input reproduces the filled matrix.
pub fn verify_certificate<F: CompletionField>(f: &F, cert: &CompletionCertificate<F::Elem>) -> Verification
where
    F::Elem: Zero,
{
    let mut diagnostics = Vec::new();
    let input = &cert.input;
    if cert.filled.shape() != input.pattern().shape() {
        return Verification { valid: false, rank: 0, diagnostics: vec!["filled matrix has the wrong shape".into()] };
    }
    let scale = input.values().iter().fold(0.0f64, |acc, v| acc.max(f.magnitude(v)));
    for (i, j) in input.pattern().specified_zero_based() {
        let d = f.sub(&cert.filled[(i, j)], &input.values()[(i, j)]);
        if !f.negligible_residual(&d, scale) {
            diagnostics.push(format!("entry ({},{}) differs from the input", i + 1, j + 1));
            break;
        }
    }
    let rank = f.matrix_rank(&cert.filled);
    if rank > cert.target_rank {
        diagnostics.push(format!("rank {rank} exceeds the target {}", cert.target_rank));
    }
    let mut ws = Workspace::new(f, input);
    let mut replay_ok = true;
    for (t, step) in cert.steps.iter().enumerate() {
        if let Err(e) = ws.apply(step) {
            diagnostics.push(format!("step {t} failed on replay: {e}"));
            replay_ok = false;
            break;
        }
    }
    if replay_ok {
        let root = ws.frame(0);
        if !root.is_complete() {
            diagnostics.push("replay leaves unknown entries".into());
        } else {
            let fscale = cert.filled.iter().fold(scale, |acc, v| acc.max(f.magnitude(v)));
            let same = root
                .values
                .iter()
                .zip(cert.filled.iter())
                .all(|(a, b)| f.negligible_residual(&f.sub(a, b), fscale));
            if !same {
                diagnostics.push("replay does not reproduce the filled matrix".into());
            }
        }
    }
    Verification { valid: diagnostics.is_empty(), rank, diagnostics }
}

/// `(n+k) x n` pattern (or its transpose) in which `r+k` lines each miss
/// exactly `r` entries and all other lines are fully specified. Each
/// deficient line is completed into the span of the full ones, giving rank
/// `n - r`.
pub fn codim_block_complete<F: CompletionField>(
    f: &F,
    a: &PartialMatrix<F::Elem>,
    order: PeelOrder,
) -> Result<CompletionCertificate<F::Elem>, CompletionError>
where
    F::Elem: Zero,
{
    let p = a.pattern();
    let r = codim_block_parameter(p).ok_or_else(|| {
        CompletionError::PatternShape("expected r+k lines with exactly r unknowns each, all others specified".into())
    })?;
    let target = p.min_dim() - r;
    let mut ws = Workspace::new(f, a);
    let rows: Vec<usize> = (0..p.rows()).collect();
    let cols: Vec<usize> = (0..p.cols()).collect();
    ws.kcore_complete(0, &rows, &cols, target, order)?;
    ws.finish("codimc", a, target)
}

/// The common unknown count `r` of a codimension-block pattern.
fn codim_block_parameter(p: &EntryPattern) -> Option<usize> {
    if p.unspecified_count() == 0 {
        return Some(0);
    }
    let check = |degrees: Vec<usize>, k: usize| {
        let deficient: Vec<usize> = degrees.into_iter().filter(|&d| d > 0).collect();
        let r = deficient[0];
        (deficient.iter().all(|&d| d == r) && deficient.len() == r + k).then_some(r)
    };
    if p.rows() >= p.cols() {
        check(p.row_degrees(), p.rows() - p.cols())
    } else {
        check(p.col_degrees(), p.cols() - p.rows())
    }
}

/// Unique rank-`k` completion of a `diag_strip(n, k)` filling.
pub fn diag_strip_complete<F: CompletionField>(
    f: &F,
    a: &PartialMatrix<F::Elem>,
    order: PeelOrder,
) -> Result<CompletionCertificate<F::Elem>, CompletionError>
where
    F::Elem: Zero,
{
    let p = a.pattern();
    let n = p.rows();
    let k = (0..=n)
        .find(|&k| p.is_square() && pattern::diag_strip(n, k).as_ref() == Ok(p))
        .ok_or_else(|| CompletionError::PatternShape("not a diagonal strip pattern".into()))?;
    let mut ws = Workspace::new(f, a);
    let all: Vec<usize> = (0..n).collect();
    ws.kcore_complete(0, &all, &all, k, order)?;
    ws.finish("diagstrip", a, k)
}

/// Size `c_m = ((4k-3) 4^m - k) / 3` at which the banded recursion for
/// `G'(n,k)` reaches corank `floor(k/2) + m k`.
pub fn circulant_threshold(k: usize, m: u32) -> usize {
    ((4 * k - 3) * 4usize.pow(m) - k) / 3
}

/// Corank reached by the banded recursion at level `m`.
pub fn banded_corank(k: usize, m: u32) -> usize {
    k / 2 + m as usize * k
}

/// Real corank-`r` completion of a filling whose unspecified set is the
/// diagonal `G(n,1)`, for `n >= (4^r - 1)/3`.
pub fn circulant1_complete<F: CompletionField>(
    f: &F,
    a: &PartialMatrix<F::Elem>,
    r: u32,
) -> Result<CompletionCertificate<F::Elem>, CompletionError>
where
    F::Elem: Zero,
{
    let p = a.pattern();
    let n = p.rows();
    if !p.is_square() || pattern::circulant(n, 1).as_ref() != Ok(p) {
        return Err(CompletionError::PatternShape("expected the diagonal pattern G(n,1)".into()));
    }
    let required = circulant_threshold(1, r);
    if n < required {
        return Err(CompletionError::ThresholdNotMet { n, required });
    }
    let mut ws = Workspace::new(f, a);
    banded_padded(&mut ws, n, 1, r, true)?;
    ws.finish("circulant1", a, n - r as usize)
}

/// Real completion of corank `floor(k/2) + m k` for a filling whose
/// unspecified set is `G'(n,k)`, for `n >= c_m`.
pub fn circulantk_complete<F: CompletionField>(
    f: &F,
    a: &PartialMatrix<F::Elem>,
    k: usize,
    m: u32,
) -> Result<CompletionCertificate<F::Elem>, CompletionError>
where
    F::Elem: Zero,
{
    let p = a.pattern();
    let n = p.rows();
    if k == 0 || !p.is_square() || pattern::prime_circulant(n, k).as_ref() != Ok(p) {
        return Err(CompletionError::PatternShape(format!("expected the banded pattern G'(n,{k})")));
    }
    let required = circulant_threshold(k, m);
    if n < required {
        return Err(CompletionError::ThresholdNotMet { n, required });
    }
    let mut ws = Workspace::new(f, a);
    banded_padded(&mut ws, n, k, m, false)?;
    ws.finish("circulantk", a, n - banded_corank(k, m))
}

/// Reduces an `n x n` banded filling to the leading `c_m x c_m` block
/// (unknowns outside it are set to 1, then the trailing block is Schur
/// complemented away), runs the recursion there and lifts back.
fn banded_padded<F: CompletionField>(
    ws: &mut Workspace<'_, F>,
    n: usize,
    k: usize,
    m: u32,
    transpose_first: bool,
) -> Result<(), CompletionError>
where
    F::Elem: Zero,
{
    let c = circulant_threshold(k, m);
    let f = ws.field;
    let mut inner = 0;
    let mut split = None;
    if n > c {
        let entries: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| (i >= c || j >= c) && !ws.frames[0].known[(i, j)])
            .collect();
        if !entries.is_empty() {
            ws.record(Step::FreeFill { frame: 0, entries, value: f.one() })?;
        }
        if c == 0 {
            return Ok(());
        }
        let s = SplitSpec::trailing(n, n, c, c);
        inner = ws.schur_reduce(0, s.clone())?;
        split = Some(s);
    }
    if transpose_first && m >= 1 && c > 0 {
        // Transposing and shifting by c_{m-1} makes the block of rows the
        // recursion completes first land on the leading columns.
        let shift = circulant_threshold(k, m - 1);
        let perm: Vec<usize> = (0..c).map(|s| (s + c - shift) % c).collect();
        let child = ws.relabel(inner, perm.clone(), perm.clone(), true)?;
        banded(ws, child, k, m)?;
        ws.restore(inner, child, perm.clone(), perm, true)?;
    } else {
        banded(ws, inner, k, m)?;
    }
    if let Some(s) = split {
        ws.schur_lift(0, inner, s)?;
    }
    Ok(())
}

/// The recursion on a `c_m x c_m` frame whose unknowns are `G'(c_m, k)`.
fn banded<F: CompletionField>(ws: &mut Workspace<'_, F>, frame: usize, k: usize, m: u32) -> Result<(), CompletionError>
where
    F::Elem: Zero,
{
    let big = circulant_threshold(k, m);
    if m == 0 {
        let all: Vec<usize> = (0..big).collect();
        return ws.kcore_complete(frame, &all, &all, k.div_ceil(2) - 1, PeelOrder::default());
    }
    ws.record(Step::RecursionEnter { frame, family: PatternFamily::PrimeCirculant { n: big, k }, level: m as usize })?;
    let c = circulant_threshold(k, m - 1);
    // Cyclic relabel: frame index i shows original index i - c (mod N).
    let sigma: Vec<usize> = (0..big).map(|i| (i + big - c) % big).collect();
    let f1 = ws.relabel(frame, sigma.clone(), sigma.clone(), false)?;
    let all: Vec<usize> = (0..big).collect();
    let bottom: Vec<usize> = (2 * c..big).collect();
    ws.kcore_complete(f1, &bottom, &all, 2 * c, PeelOrder::default())?;
    if c > 0 {
        let split1 = SplitSpec {
            a_rows: (0..2 * c).collect(),
            a_cols: (0..2 * c + k).collect(),
            d_rows: (2 * c..4 * c).collect(),
            d_cols: (2 * c + k..big).collect(),
        };
        let f2 = ws.schur_reduce(f1, split1.clone())?;
        let rows2: Vec<usize> = (0..2 * c).collect();
        let cols2: Vec<usize> = (c..2 * c + k).collect();
        ws.kcore_complete(f2, &rows2, &cols2, c, PeelOrder::default())?;
        let split2 = SplitSpec::trailing(2 * c, 2 * c + k, c, c);
        let split2 = SplitSpec { d_cols: (c..2 * c).collect(), ..split2 };
        let f3 = ws.schur_reduce(f2, split2.clone())?;
        banded(ws, f3, k, m - 1)?;
        ws.schur_lift(f2, f3, split2)?;
        ws.schur_lift(f1, f2, split1)?;
    }
    ws.restore(frame, f1, sigma.clone(), sigma, false)
}

/// Schur reduction against the trailing `(n - row_cut) x (m - col_cut)`
/// block, completion of the leading block by `inner`, and lift. The inner
/// routine receives the child frame id and must complete it to `inner_rank`.
pub fn schur_reduce_lift<F: CompletionField>(
    f: &F,
    a: &PartialMatrix<F::Elem>,
    row_cut: usize,
    col_cut: usize,
    inner_rank: usize,
    inner: impl FnOnce(&mut Workspace<'_, F>, usize) -> Result<(), CompletionError>,
) -> Result<CompletionCertificate<F::Elem>, CompletionError>
where
    F::Elem: Zero,
{
    let (n, m) = a.pattern().shape();
    if row_cut > n || col_cut > m || n - row_cut != m - col_cut {
        return Err(CompletionError::PatternShape("trailing block must be square".into()));
    }
    if a.pattern().unspecified().iter().any(|&(i, j)| i > row_cut || j > col_cut) {
        return Err(CompletionError::PatternShape("unknowns must lie in the leading block".into()));
    }
    let split = SplitSpec::trailing(n, m, row_cut, col_cut);
    let d = a.values().select(&split.d_rows, &split.d_cols);
    let outer = f.matrix_rank(&d);
    let mut ws = Workspace::new(f, a);
    let child = ws.schur_reduce(0, split.clone())?;
    inner(&mut ws, child)?;
    ws.schur_lift(0, child, split)?;
    ws.finish("schur", a, outer + inner_rank)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum G52Branch {
    /// The inner block had a real rank-2 completion.
    Rank2,
    Rank3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G52Outcome {
    pub certificate: CompletionCertificate<f64>,
    pub branch: G52Branch,
    /// Fiber of the inner 4x4 block at rank 2; `None` if no start converged.
    pub fiber: Option<FiberReport>,
}

const G52_B_ROWS: [usize; 4] = [0, 1, 2, 4];
const G52_B_COLS: [usize; 4] = [0, 2, 3, 4];

/// Completion of a filling whose unspecified set is `G'(5,2)`: rank 2 when
/// the inner block admits a real rank-2 completion, rank 3 otherwise.
pub fn g52_complete(a: &PartialMatrix<f64>, fiber_cfg: &FiberConfig) -> Result<G52Outcome, CompletionError> {
    if pattern::prime_circulant(5, 2).as_ref() != Ok(a.pattern()) {
        return Err(CompletionError::PatternShape("expected G'(5,2)".into()));
    }
    let f = Reals::default();
    let mut ws = Workspace::new(&f, a);
    ws.record(Step::MinorSolve { frame: 0, entry: (2, 2), rows: vec![2, 3, 4], cols: vec![0, 1, 2], value: 0.0 })?;
    if let Step::MinorSolve { value, .. } = ws.steps.last_mut().expect("just recorded") {
        *value = ws.frames[0].values[(2, 2)];
    }

    let b_values = ws.frames[0].values.select(&G52_B_ROWS, &G52_B_COLS);
    let b_pattern = pattern::circulant(4, 1).expect("valid family");
    let b_known = ws.frames[0].known.select(&G52_B_ROWS, &G52_B_COLS);
    debug_assert!((0..4).all(|i| (0..4).all(|j| b_known[(i, j)] == (i != j))));
    let b = PartialMatrix::new(b_pattern, b_values);
    let fiber = match fiber::enumerate_fiber(&b, 2, fiber_cfg) {
        Ok(report) => Some(report),
        Err(FiberError::EmptyFiberEvidence { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let real = fiber.as_ref().map(fiber::real_solutions).unwrap_or_default();

    let all: Vec<usize> = (0..5).collect();
    let branch = if let Some(point) = real.first() {
        let entries: Vec<(usize, usize)> = (0..4).map(|t| (G52_B_ROWS[t], G52_B_COLS[t])).collect();
        ws.record(Step::FiberPick { frame: 0, entries, values: point.clone() })?;
        ws.append_line(0, Axis::Col, 1, &G52_B_COLS, &G52_B_ROWS, 2)?;
        ws.append_line(0, Axis::Row, 3, &G52_B_ROWS, &all, 2)?;
        G52Branch::Rank2
    } else {
        ws.kcore_complete(0, &G52_B_ROWS, &G52_B_COLS, 3, PeelOrder::default())?;
        ws.kcore_complete(0, &all, &all, 3, PeelOrder::default())?;
        G52Branch::Rank3
    };
    let target = match branch {
        G52Branch::Rank2 => 2,
        G52Branch::Rank3 => 3,
    };
    let certificate = ws.finish("g52", a, target)?;
    Ok(G52Outcome { certificate, branch, fiber })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::pattern::{circulant, codim_block, diag_strip, prime_circulant};

    fn q(v: i64) -> BigRational {
        Rationals.from_i64(v)
    }

    #[test]
    fn append_row_examples() {
        let f = Rationals;
        let basis = Matrix::from_vec(1, 3, vec![q(1), q(2), q(3)]);
        let row = append_row_complete(&f, &basis, &[None, Some(q(4)), None]).unwrap();
        assert_eq!(row, vec![q(2), q(4), q(6)]);
        let row = append_row_complete(&f, &basis, &[None, None, None]).unwrap();
        assert_eq!(row, vec![q(0), q(0), q(0)]);
    }

    #[test]
    fn append_row_reproduces_specified_entries() {
        let f = Rationals;
        let basis = PartialMatrix::random_integer(EntryPattern::full(3, 6).unwrap(), 4).values().clone();
        let known = [Some(q(5)), None, Some(q(-7)), None, Some(q(11)), None];
        let row = append_row_complete(&f, &basis, &known).unwrap();
        for (j, v) in known.iter().enumerate() {
            if let Some(v) = v {
                assert_eq!(&row[j], v);
            }
        }
        let mut stacked = basis.as_slice().to_vec();
        stacked.extend(row);
        assert_eq!(linalg::rank(&f, &Matrix::from_vec(4, 6, stacked)), 3);
    }

    #[test]
    fn codim_block_fig_case() {
        let a = PartialMatrix::random_gaussian(codim_block(6, 0, 4).unwrap(), 1);
        let cert = codim_block_complete(&Reals::default(), &a, PeelOrder::default()).unwrap();
        assert_eq!(cert.achieved_rank, 2);
        assert!(verify_certificate(&Reals::default(), &cert).valid);
    }

    #[test]
    fn codim_block_without_deficient_rows_is_unchanged() {
        let a = PartialMatrix::random_integer(EntryPattern::full(4, 3).unwrap(), 2);
        let cert = codim_block_complete(&Rationals, &a, PeelOrder::default()).unwrap();
        assert!(cert.steps.is_empty());
        assert_eq!(&cert.filled, a.values());
    }

    #[test]
    fn codim_block_unique_over_rationals() {
        let a = PartialMatrix::random_integer(codim_block(5, 2, 2).unwrap(), 3);
        let one = codim_block_complete(&Rationals, &a, PeelOrder::default()).unwrap();
        let two = codim_block_complete(&Rationals, &a, PeelOrder::ALTERNATE).unwrap();
        assert_eq!(one.achieved_rank, 3);
        assert_eq!(one.filled, two.filled);
        assert!(one.all_appends_unique() && two.all_appends_unique());
    }

    #[test]
    fn codim_block_rejects_other_shapes() {
        let a = PartialMatrix::random_integer(circulant(4, 2).unwrap(), 2);
        assert!(matches!(codim_block_complete(&Rationals, &a, PeelOrder::default()), Err(CompletionError::PatternShape(_))));
    }

    #[test]
    fn diag_strip_examples() {
        let f = Rationals;
        let a = PartialMatrix::random_integer(diag_strip(3, 3).unwrap(), 5);
        let cert = diag_strip_complete(&f, &a, PeelOrder::default()).unwrap();
        assert!(cert.steps.is_empty());

        // Rank one fit oracle: x_ij = a_i b_j through the anti-diagonal strip.
        let a = PartialMatrix::random_integer(diag_strip(3, 1).unwrap(), 6);
        let cert = diag_strip_complete(&f, &a, PeelOrder::default()).unwrap();
        let v = a.values();
        // Specified: (0,2),(1,1),(1,2),(2,0),(2,1). Fix b_2 = 1.
        let a0 = v[(0, 2)].clone();
        let a1 = v[(1, 2)].clone();
        let b1 = &v[(1, 1)] / &a1;
        let a2 = &v[(2, 1)] / &b1;
        let b0 = &v[(2, 0)] / &a2;
        let oracle = Matrix::from_fn(3, 3, |i, j| {
            let ai = [&a0, &a1, &a2][i].clone();
            let bj = [b0.clone(), b1.clone(), q(1)][j].clone();
            ai * bj
        });
        assert_eq!(cert.filled, oracle);
        assert_eq!(cert.achieved_rank, 1);
    }

    #[test]
    fn diag_strip_six_two() {
        let f = Rationals;
        let a = PartialMatrix::random_integer(diag_strip(6, 2).unwrap(), 9);
        let cert = diag_strip_complete(&f, &a, PeelOrder::default()).unwrap();
        assert_eq!(cert.achieved_rank, 2);
        assert!(cert.all_appends_unique());
        assert!(verify_certificate(&f, &cert).valid);
    }

    #[test]
    fn schur_padding_preserves_corank() {
        // G(4,1) padded by one generic row and column.
        let f = Reals::default();
        let a = PartialMatrix::random_gaussian(circulant(4, 1).unwrap().embed(5, 5).unwrap(), 8);
        let cert = schur_reduce_lift(&f, &a, 4, 4, 3, |ws, child| {
            let all: Vec<usize> = (0..4).collect();
            ws.kcore_complete(child, &all, &all, 3, PeelOrder::default())
        })
        .unwrap();
        assert_eq!(cert.achieved_rank, 4);
        assert!(verify_certificate(&f, &cert).valid);
    }

    #[test]
    fn schur_with_zero_borders_embeds_inner() {
        let f = Rationals;
        let mut values = PartialMatrix::random_integer(circulant(3, 1).unwrap().embed(4, 4).unwrap(), 1).values().clone();
        for t in 0..3 {
            values[(t, 3)] = q(0);
            values[(3, t)] = q(0);
        }
        values[(3, 3)] = q(2);
        let a = PartialMatrix::new(circulant(3, 1).unwrap().embed(4, 4).unwrap(), values);
        let inner_only = PartialMatrix::new(circulant(3, 1).unwrap(), a.values().select(&[0, 1, 2], &[0, 1, 2]));
        let direct = {
            let mut ws = Workspace::new(&f, &inner_only);
            ws.kcore_complete(0, &[0, 1, 2], &[0, 1, 2], 2, PeelOrder::default()).unwrap();
            ws.frame(0).values.clone()
        };
        let cert = schur_reduce_lift(&f, &a, 3, 3, 2, |ws, child| {
            ws.kcore_complete(child, &[0, 1, 2], &[0, 1, 2], 2, PeelOrder::default())
        })
        .unwrap();
        assert_eq!(cert.filled.select(&[0, 1, 2], &[0, 1, 2]), direct);
    }

    #[test]
    fn circulant1_small_cases() {
        let f = Reals::default();
        let a = PartialMatrix::random_gaussian(circulant(1, 1).unwrap(), 0);
        let cert = circulant1_complete(&f, &a, 1).unwrap();
        assert_eq!(cert.filled[(0, 0)], 0.0);

        let a = PartialMatrix::random_gaussian(circulant(5, 1).unwrap(), 4);
        let cert = circulant1_complete(&f, &a, 2).unwrap();
        assert_eq!(cert.achieved_rank, 3);
        let first3 = cert.filled.select(&[0, 1, 2, 3, 4], &[0, 1, 2]);
        assert_eq!(linalg::numerical_rank(&first3, 1e-9).unwrap(), 2);
        assert!(verify_certificate(&f, &cert).valid);

        let a = PartialMatrix::random_gaussian(circulant(4, 1).unwrap(), 4);
        assert_eq!(
            circulant1_complete(&f, &a, 2).unwrap_err(),
            CompletionError::ThresholdNotMet { n: 4, required: 5 }
        );
    }

    #[test]
    fn circulant1_above_threshold() {
        let f = Reals::default();
        let a = PartialMatrix::random_gaussian(circulant(7, 1).unwrap(), 2);
        let cert = circulant1_complete(&f, &a, 2).unwrap();
        assert_eq!(cert.achieved_rank, 5);
        assert!(verify_certificate(&f, &cert).valid);
    }

    #[test]
    fn circulantk_cases() {
        let f = Reals::default();
        let a = PartialMatrix::random_gaussian(prime_circulant(6, 2).unwrap(), 1);
        let cert = circulantk_complete(&f, &a, 2, 1).unwrap();
        assert_eq!(cert.achieved_rank, 3);
        assert!(verify_certificate(&f, &cert).valid);

        let a = PartialMatrix::random_gaussian(prime_circulant(2, 3).unwrap(), 1);
        let cert = circulantk_complete(&f, &a, 3, 0).unwrap();
        assert_eq!(cert.achieved_rank, 1);

        let a = PartialMatrix::random_gaussian(prime_circulant(11, 3).unwrap(), 1);
        let cert = circulantk_complete(&f, &a, 3, 1).unwrap();
        assert_eq!(cert.achieved_rank, 11 - 4);
        assert!(verify_certificate(&f, &cert).valid);
    }

    #[test]
    fn circulantk_over_rationals() {
        let f = Rationals;
        let a = PartialMatrix::random_integer(prime_circulant(6, 2).unwrap(), 3);
        let cert = circulantk_complete(&f, &a, 2, 1).unwrap();
        assert_eq!(cert.achieved_rank, 3);
        assert!(verify_certificate(&f, &cert).valid);
    }

    #[test]
    fn verification_rejects_tampering() {
        let f = Reals::default();
        let a = PartialMatrix::random_gaussian(prime_circulant(6, 2).unwrap(), 2);
        let cert = circulantk_complete(&f, &a, 2, 1).unwrap();
        let mut raised = cert.clone();
        raised.target_rank += 1;
        assert!(verify_certificate(&f, &raised).valid);
        let mut bad = cert;
        bad.filled[(0, 0)] += 1.0;
        assert!(!verify_certificate(&f, &bad).valid);
    }

    #[test]
    fn g52_both_branches_verify() {
        let cfg = FiberConfig::default();
        let mut seen = [false, false];
        for seed in 0..40 {
            let a = PartialMatrix::random_gaussian(prime_circulant(5, 2).unwrap(), seed);
            let out = g52_complete(&a, &cfg).unwrap();
            assert!(verify_certificate(&Reals::default(), &out.certificate).valid, "seed {seed}");
            match out.branch {
                G52Branch::Rank2 => seen[0] = true,
                G52Branch::Rank3 => seen[1] = true,
            }
            assert_eq!(out.certificate.achieved_rank, out.certificate.target_rank);
        }
        assert!(seen[0] && seen[1]);
    }
}

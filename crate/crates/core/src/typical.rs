//! Monte Carlo estimates of typical real completion ranks.
//!
//! Each sample is a standard Gaussian filling of the specified entries. Its
//! minimum real completion rank is estimated by fitting `U V` factors of
//! increasing inner dimension with Levenberg-Marquardt. A fit that fails is
//! evidence, not proof: the estimate can only overshoot the true minimum.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complete::PartialMatrix;
use crate::generic::{generic_completion_rank, DEFAULT_TRIALS};
use crate::matrix::Matrix;
use crate::pattern::EntryPattern;
use crate::rng::{derive_seed, gaussian, seeded};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Relative: a fit succeeds when the squared residual is below
    /// `residual_tol^2 * |A_S|^2`.
    pub residual_tol: f64,
    /// Stop a restart when the update is this small relative to the factors.
    pub step_tol: f64,
    pub rank_rel_tol: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub typical_frequency_threshold: f64,
    #[serde(default)]
    pub method: FitMethod,
}

/// Parametrization handed to Levenberg-Marquardt.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    /// `V` eliminated by per-column least squares; iterates on `U` only.
    #[default]
    Projected,
    /// `U` and `V` together.
    Joint,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 30,
            max_iterations: 500,
            residual_tol: 1e-7,
            step_tol: 1e-12,
            rank_rel_tol: 1e-9,
            sample_count: 500,
            seed: 0,
            typical_frequency_threshold: 0.02,
            method: FitMethod::Projected,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TypicalError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("no completion of rank at most {r_max} was found")]
    SolverExhausted { r_max: usize },
    #[error("rank bound {r_max} exceeds min(n, m) = {min_dim}")]
    RankBound { r_max: usize, min_dim: usize },
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), TypicalError> {
        let bad = |what: &str| Err(TypicalError::Config(String::from(what)));
        if self.restarts == 0 || self.max_iterations == 0 || self.sample_count == 0 {
            return bad("restarts, max_iterations and sample_count must be positive");
        }
        if !(self.residual_tol > 0.0 && self.residual_tol < 1.0) {
            return bad("residual_tol must lie in (0, 1)");
        }
        if !(self.step_tol > 0.0 && self.rank_rel_tol > 0.0 && self.typical_frequency_threshold > 0.0) {
            return bad("tolerances and threshold must be positive");
        }
        Ok(())
    }
}

/// Outcome of one rank-`r` fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub success: bool,
    /// Best `sum (UV - A)^2` over the specified entries.
    pub objective: f64,
    pub restarts_used: usize,
    /// The rank-`r` product `U V` of a successful fit.
    pub witness: Option<Matrix<f64>>,
}

/// Tries `cfg.restarts` Levenberg-Marquardt runs of an inner-dimension-`r`
/// factorization against the specified entries of `a`. Restart `t` draws its
/// initial point from `derive_seed(seed, t)`.
pub fn fit_rank(a: &PartialMatrix<f64>, r: usize, cfg: &SolverConfig, seed: u64) -> FitResult {
    let entries = a.pattern().specified_zero_based();
    let target: Vec<f64> = entries.iter().map(|&(i, j)| a.values()[(i, j)]).collect();
    let norm2: f64 = target.iter().map(|v| v * v).sum();
    let goal = cfg.residual_tol * cfg.residual_tol * norm2;
    if norm2 == 0.0 {
        let (n, m) = a.pattern().shape();
        return FitResult { success: true, objective: 0.0, restarts_used: 0, witness: Some(Matrix::filled(n, m, 0.0)) };
    }
    if r == 0 {
        return FitResult { success: false, objective: norm2, restarts_used: 0, witness: None };
    }
    let (n, m) = a.pattern().shape();
    let rms = Float::sqrt(norm2 / target.len() as f64);
    let init_scale = Float::sqrt(rms / Float::sqrt(r as f64));
    let joint = Joint { n, m, r, entries: &entries, target: &target };
    let projected = Projected::new(&entries, &target, m, r);
    let mut best = f64::INFINITY;
    for t in 0..cfg.restarts {
        let mut rng = seeded(derive_seed(seed, t as u64));
        let (obj, u, v) = match cfg.method {
            FitMethod::Joint => {
                let x0: Vec<f64> = (0..r * (n + m)).map(|_| init_scale * gaussian(&mut rng)).collect();
                let (obj, x) = levenberg_marquardt(&joint, DVector::from_vec(x0), goal, cfg);
                (obj, x.as_slice()[..n * r].to_vec(), x.as_slice()[n * r..].to_vec())
            }
            FitMethod::Projected => {
                let x0: Vec<f64> = (0..r * n).map(|_| gaussian(&mut rng)).collect();
                let (_, x) = levenberg_marquardt(&projected, DVector::from_vec(x0), goal, cfg);
                let v = projected.v_of(&x);
                let mut xv = x.as_slice().to_vec();
                xv.extend_from_slice(&v);
                let obj = joint.residuals(&DVector::from_vec(xv)).norm_squared();
                (obj, x.as_slice().to_vec(), v)
            }
        };
        best = best.min(obj);
        if obj < goal {
            let witness = Matrix::from_fn(n, m, |i, j| (0..r).map(|k| u[i * r + k] * v[k * m + j]).sum());
            return FitResult { success: true, objective: obj, restarts_used: t + 1, witness: Some(witness) };
        }
    }
    FitResult { success: false, objective: best, restarts_used: cfg.restarts, witness: None }
}

/// Residuals and Jacobian of a least-squares problem in a flat parameter
/// vector.
trait LeastSquares {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Joint fit of `U` (row-major `n x r`) followed by `V` (row-major `r x m`).
struct Joint<'a> {
    n: usize,
    m: usize,
    r: usize,
    entries: &'a [(usize, usize)],
    target: &'a [f64],
}

impl LeastSquares for Joint<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let (r, m, v0) = (self.r, self.m, self.n * self.r);
        DVector::from_iterator(
            self.entries.len(),
            self.entries
                .iter()
                .zip(self.target)
                .map(|(&(i, j), &t)| (0..r).map(|k| x[i * r + k] * x[v0 + k * m + j]).sum::<f64>() - t),
        )
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (r, m, v0) = (self.r, self.m, self.n * self.r);
        let mut jac = DMatrix::zeros(self.entries.len(), r * (self.n + m));
        for (s, &(i, j)) in self.entries.iter().enumerate() {
            for k in 0..r {
                jac[(s, i * r + k)] = x[v0 + k * m + j];
                jac[(s, v0 + k * m + j)] = x[i * r + k];
            }
        }
        jac
    }
}

/// Fit in `U` alone: each column of `V` is the least-squares solution on
/// that column's specified rows. The Jacobian drops the term through the
/// derivative of the pseudo-inverse.
struct Projected {
    r: usize,
    /// Per column: specified rows and their values.
    columns: Vec<(Vec<usize>, DVector<f64>)>,
    len: usize,
}

impl Projected {
    fn new(entries: &[(usize, usize)], target: &[f64], m: usize, r: usize) -> Self {
        let mut rows = vec![Vec::new(); m];
        let mut vals = vec![Vec::new(); m];
        for (&(i, j), &t) in entries.iter().zip(target) {
            rows[j].push(i);
            vals[j].push(t);
        }
        let columns = rows.into_iter().zip(vals).map(|(r, v)| (r, DVector::from_vec(v))).collect();
        Self { r, columns, len: entries.len() }
    }

    /// `(U_S, v, P)` for one column, with `v` the least-norm fit and `P` the
    /// projector onto the range of `U_S`.
    fn column_fit(&self, x: &DVector<f64>, rows: &[usize], a: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let r = self.r;
        let us = DMatrix::from_fn(rows.len(), r, |s, k| x[rows[s] * r + k]);
        if rows.is_empty() {
            return (us, DVector::zeros(r), DMatrix::zeros(0, 0));
        }
        let scale = us.amax().max(f64::MIN_POSITIVE);
        let pinv = us.clone().pseudo_inverse(1e-12 * scale).unwrap_or_else(|_| DMatrix::zeros(r, rows.len()));
        let v = &pinv * a;
        let proj = &us * &pinv;
        (us, v, proj)
    }

    /// The full `V` (row-major `r x m`) for parameters `x`.
    fn v_of(&self, x: &DVector<f64>) -> Vec<f64> {
        let m = self.columns.len();
        let mut out = vec![0.0; self.r * m];
        for (j, (rows, a)) in self.columns.iter().enumerate() {
            let (_, v, _) = self.column_fit(x, rows, a);
            for k in 0..self.r {
                out[k * m + j] = v[k];
            }
        }
        out
    }
}

impl LeastSquares for Projected {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.len);
        for (rows, a) in &self.columns {
            let (us, v, _) = self.column_fit(x, rows, a);
            out.extend((us * v - a).iter().copied());
        }
        DVector::from_vec(out)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let r = self.r;
        let params = x.len();
        let mut jac = DMatrix::zeros(self.len, params);
        let mut offset = 0;
        for (rows, a) in &self.columns {
            let (_, v, proj) = self.column_fit(x, rows, a);
            let q = DMatrix::identity(rows.len(), rows.len()) - proj;
            for s in 0..rows.len() {
                for (t, &i) in rows.iter().enumerate() {
                    for k in 0..r {
                        jac[(offset + s, i * r + k)] += q[(s, t)] * v[k];
                    }
                }
            }
            offset += rows.len();
        }
        jac
    }
}

/// Returns the final objective. Stops at `goal`, on a negligible step, on a
/// stall (under 0.1% decrease across 25 iterations) or at the iteration cap.
fn levenberg_marquardt(problem: &impl LeastSquares, mut x: DVector<f64>, goal: f64, cfg: &SolverConfig) -> (f64, DVector<f64>) {
    const WINDOW: usize = 25;
    let mut res = problem.residuals(&x);
    let mut obj = res.norm_squared();
    let mut lambda = -1.0;
    let mut nu = 2.0;
    let mut history: Vec<f64> = Vec::with_capacity(cfg.max_iterations + 1);
    history.push(obj);
    for it in 0..cfg.max_iterations {
        if obj < goal {
            break;
        }
        let jac = problem.jacobian(&x);
        let jtj = jac.tr_mul(&jac);
        let grad = jac.tr_mul(&res);
        if lambda < 0.0 {
            lambda = 1e-3 * jtj.diagonal().max().max(f64::MIN_POSITIVE);
        }
        let mut accepted = false;
        while !accepted {
            let mut damped = jtj.clone();
            for d in 0..damped.nrows() {
                damped[(d, d)] += lambda;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                if !lambda.is_finite() {
                    return (obj, x);
                }
                continue;
            };
            let step = -chol.solve(&grad);
            if step.norm() <= cfg.step_tol * (x.norm() + cfg.step_tol) {
                return (obj, x);
            }
            let trial = &x + &step;
            let trial_res = problem.residuals(&trial);
            let trial_obj = trial_res.norm_squared();
            // Predicted decrease of the quadratic model.
            let predicted = step.dot(&(step.scale(lambda) - &grad));
            let rho = (obj - trial_obj) / predicted.max(f64::MIN_POSITIVE);
            if trial_obj < obj && rho > 0.0 {
                x = trial;
                res = trial_res;
                obj = trial_obj;
                lambda *= (1.0 - Float::powi(2.0 * rho - 1.0, 3)).max(1.0 / 3.0);
                nu = 2.0;
                accepted = true;
            } else {
                lambda *= nu;
                nu *= 2.0;
                if !lambda.is_finite() || lambda > 1e16 * (1.0 + jtj.diagonal().max()) {
                    return (obj, x);
                }
            }
        }
        history.push(obj);
        if it + 1 >= WINDOW && obj > 0.999 * history[history.len() - 1 - WINDOW] {
            break;
        }
    }
    (obj, x)
}

/// Estimated minimum real completion rank of `a`, scanning upward from
/// rank 1. Valid for any filling, generic or not.
pub fn min_real_rank(a: &PartialMatrix<f64>, r_max: usize, cfg: &SolverConfig) -> Result<usize, TypicalError> {
    min_real_rank_from(a, 1, r_max, cfg, cfg.seed)
}

/// As [`min_real_rank`] with the starting rank supplied. Starting at the
/// generic completion rank is only sound for generic fillings. `seed` drives
/// the restarts.
pub fn min_real_rank_from(
    a: &PartialMatrix<f64>,
    r_min: usize,
    r_max: usize,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<usize, TypicalError> {
    let min_dim = a.pattern().min_dim();
    if r_max > min_dim {
        return Err(TypicalError::RankBound { r_max, min_dim });
    }
    if a.specified_values().iter().all(|&v| v == 0.0) {
        return Ok(0);
    }
    for r in r_min.max(1)..=r_max {
        // Any filling extends to a generic matrix of full rank.
        if r == min_dim || fit_rank(a, r, cfg, derive_seed(seed, r as u64)).success {
            return Ok(r);
        }
    }
    Err(TypicalError::SolverExhausted { r_max })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleOutcome {
    Rank(usize),
    Failed,
}

/// Draws sample `index` (seed `cfg.seed + index`) and estimates its rank.
/// Independent across indices, so callers may evaluate samples in parallel.
pub fn evaluate_sample(p: &EntryPattern, gcr: usize, index: usize, cfg: &SolverConfig) -> SampleOutcome {
    let seed = cfg.seed.wrapping_add(index as u64);
    let a = PartialMatrix::random_gaussian(p.clone(), seed);
    match min_real_rank_from(&a, gcr, p.min_dim(), cfg, seed) {
        Ok(r) => {
            assert!(r >= gcr, "sample {index} completed below the generic completion rank");
            SampleOutcome::Rank(r)
        }
        Err(_) => SampleOutcome::Failed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalRankReport {
    pub pattern: EntryPattern,
    pub generic_completion_rank: usize,
    pub counts: BTreeMap<usize, usize>,
    /// Count divided by the number of samples; failed samples are excluded,
    /// so the frequencies can sum to less than 1.
    pub histogram: BTreeMap<usize, f64>,
    pub inferred_typical_ranks: Vec<usize>,
    pub inferred_typical_coranks: Vec<usize>,
    /// Some rank inside the reported interval fell below the threshold.
    pub anomaly: bool,
    pub failures: usize,
    /// More than 5% of the samples failed.
    pub unreliable: bool,
    pub config: SolverConfig,
    pub note: String,
}

pub const ONE_SIDED_NOTE: &str =
    "ranks are upper estimates: a failed fit is evidence that no real completion exists, not proof";

/// Aggregates outcomes listed in sample-index order.
pub fn summarize(p: &EntryPattern, gcr: usize, outcomes: &[SampleOutcome], cfg: &SolverConfig) -> TypicalRankReport {
    let mut counts = BTreeMap::new();
    let mut failures = 0;
    for o in outcomes {
        match o {
            SampleOutcome::Rank(r) => *counts.entry(*r).or_insert(0usize) += 1,
            SampleOutcome::Failed => failures += 1,
        }
    }
    let total = outcomes.len().max(1) as f64;
    let histogram: BTreeMap<usize, f64> = counts.iter().map(|(&r, &c)| (r, c as f64 / total)).collect();
    let above: Vec<usize> = histogram.iter().filter(|(_, &f)| f >= cfg.typical_frequency_threshold).map(|(&r, _)| r).collect();
    let (ranks, anomaly) = match (above.first(), above.last()) {
        (Some(&lo), Some(&hi)) => ((lo..=hi).collect::<Vec<_>>(), above.len() != hi - lo + 1),
        _ => (Vec::new(), false),
    };
    let min_dim = p.min_dim();
    let mut coranks: Vec<usize> = ranks.iter().map(|r| min_dim - r).collect();
    coranks.reverse();
    TypicalRankReport {
        pattern: p.clone(),
        generic_completion_rank: gcr,
        counts,
        histogram,
        inferred_typical_ranks: ranks,
        inferred_typical_coranks: coranks,
        anomaly,
        failures,
        unreliable: failures * 20 > outcomes.len(),
        config: cfg.clone(),
        note: String::from(ONE_SIDED_NOTE),
    }
}

/// Sequential estimate over `cfg.sample_count` samples.
pub fn estimate_typical(p: &EntryPattern, cfg: &SolverConfig) -> Result<TypicalRankReport, TypicalError> {
    cfg.validate()?;
    let gcr = generic_completion_rank(p, DEFAULT_TRIALS, cfg.seed).gcr;
    let outcomes: Vec<SampleOutcome> = (0..cfg.sample_count).map(|i| evaluate_sample(p, gcr, i, cfg)).collect();
    Ok(summarize(p, gcr, &outcomes, cfg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaddingReport {
    pub sizes: Vec<usize>,
    pub coranks: Vec<Vec<usize>>,
    pub consistent: bool,
}

/// Estimates typical coranks of the unspecified set `u` embedded in each
/// `n x n` grid. `u` is given as a pattern whose unspecified entries are the
/// set to embed.
pub fn padding_invariance_check(
    u: &EntryPattern,
    sizes: &[usize],
    cfg: &SolverConfig,
) -> Result<PaddingReport, TypicalError> {
    let mut coranks = Vec::new();
    for &n in sizes {
        let p = u
            .embed(n, n)
            .map_err(|e| TypicalError::Config(alloc::format!("cannot embed into {n}x{n}: {e}")))?;
        coranks.push(estimate_typical(&p, cfg)?.inferred_typical_coranks);
    }
    let consistent = coranks.windows(2).all(|w| w[0] == w[1]);
    Ok(PaddingReport { sizes: sizes.to_vec(), coranks, consistent })
}

/// Rank-`r` product of Gaussian factors; test inputs with a known bound.
pub fn gaussian_product(n: usize, m: usize, r: usize, seed: u64) -> Matrix<f64> {
    let mut rng = seeded(seed);
    let u = Matrix::from_fn(n, r, |_, _| gaussian(&mut rng));
    let v = Matrix::from_fn(r, m, |_, _| gaussian(&mut rng));
    Matrix::from_fn(n, m, |i, j| (0..r).map(|k| u[(i, k)] * v[(k, j)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::pattern::circulant;

    fn quick() -> SolverConfig {
        SolverConfig { sample_count: 40, ..SolverConfig::default() }
    }

    #[test]
    fn zero_filling_has_rank_zero() {
        let p = circulant(4, 1).unwrap();
        let a = PartialMatrix::new(p, Matrix::filled(4, 4, 0.0));
        assert_eq!(min_real_rank(&a, 4, &quick()).unwrap(), 0);
    }

    #[test]
    fn planted_rank_two_is_recovered() {
        let p = circulant(6, 1).unwrap();
        for seed in 0..5 {
            let a = PartialMatrix::new(p.clone(), gaussian_product(6, 6, 2, seed));
            assert_eq!(min_real_rank(&a, 6, &quick()).unwrap(), 2);
        }
    }

    #[test]
    fn witness_matches_specified_entries() {
        let p = circulant(6, 1).unwrap();
        for method in [FitMethod::Projected, FitMethod::Joint] {
            let cfg = SolverConfig { method, ..quick() };
            let a = PartialMatrix::random_gaussian(p.clone(), 11);
            let fit = fit_rank(&a, 4, &cfg, 3);
            let w = fit.witness.expect("G(6,1) completes to rank 4");
            assert_eq!(crate::linalg::numerical_rank(&w, 1e-9).unwrap(), 4);
            for (i, j) in p.specified_zero_based() {
                assert!((w[(i, j)] - a.values()[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let p = circulant(4, 1).unwrap();
        let cfg = SolverConfig { sample_count: 15, seed: 9, ..quick() };
        assert_eq!(estimate_typical(&p, &cfg).unwrap(), estimate_typical(&p, &cfg).unwrap());
    }

    #[test]
    fn rank_bound_is_checked() {
        let a = PartialMatrix::random_gaussian(circulant(3, 1).unwrap(), 0);
        assert_eq!(min_real_rank(&a, 4, &quick()), Err(TypicalError::RankBound { r_max: 4, min_dim: 3 }));
    }

    #[test]
    fn full_pattern_is_full_rank() {
        let report = estimate_typical(&EntryPattern::full(3, 3).unwrap(), &quick()).unwrap();
        assert_eq!(report.inferred_typical_ranks, vec![3]);
        assert_eq!(report.inferred_typical_coranks, vec![0]);
    }

    #[test]
    fn summary_fills_interior_gaps() {
        let p = EntryPattern::full(5, 5).unwrap();
        let outcomes = [SampleOutcome::Rank(2), SampleOutcome::Rank(4), SampleOutcome::Failed];
        let report = summarize(&p, 2, &outcomes, &quick());
        assert_eq!(report.inferred_typical_ranks, vec![2, 3, 4]);
        assert_eq!(report.inferred_typical_coranks, vec![1, 2, 3]);
        assert!(report.anomaly);
        assert!(report.unreliable);
        assert_eq!(report.failures, 1);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig { residual_tol: 1.5, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
    }
}

//! Generic completion rank, decided exactly over a prime field.
//!
//! A set `S` of specified positions is generically completable to rank `r`
//! iff the coordinate projection onto `S` of the tangent space of the
//! rank-`r` determinantal variety at a generic point is surjective. The
//! tangent space at `U0 V0` is spanned by `dU V0 + U0 dV`; its projection is
//! evaluated at random points over `F_p`, where the rank can only undercount.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::PrimeField;
use crate::linalg;
use crate::matrix::Matrix;
use crate::pattern::EntryPattern;
use crate::rng::seeded;

pub const DEFAULT_TRIALS: u32 = 3;

/// `n x m` matrices of rank at most `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVariety {
    pub n: usize,
    pub m: usize,
    pub r: usize,
}

impl RankVariety {
    pub fn new(n: usize, m: usize, r: usize) -> Option<Self> {
        (r <= n.min(m)).then_some(Self { n, m, r })
    }

    pub fn dimension(&self) -> usize {
        self.r * (self.n + self.m - self.r)
    }
}

/// Rank of the tangent-space projection onto the specified entries of `p`
/// at one random point of the rank-`r` variety over `F_p`.
pub fn tangent_projection_rank(p: &EntryPattern, r: usize, field: &PrimeField, seed: u64) -> usize {
    let (n, m) = p.shape();
    assert!(r <= n.min(m), "rank {r} exceeds min({n},{m})");
    let specified = p.specified_zero_based();
    if r == 0 || specified.is_empty() {
        return 0;
    }
    let mut rng = seeded(seed);
    let q = field.modulus();
    let u0 = Matrix::from_fn(n, r, |_, _| rng.random_range(0..q));
    let v0 = Matrix::from_fn(r, m, |_, _| rng.random_range(0..q));
    // Generator (i,k) of the U-side puts row k of V0 into row i; generator
    // (k,j) of the V-side puts column k of U0 into column j.
    let gens = r * (n + m);
    let jac = Matrix::from_fn(specified.len(), gens, |s, g| {
        let (i, j) = specified[s];
        if g < n * r {
            let (row, k) = (g / r, g % r);
            if row == i { v0[(k, j)] } else { 0 }
        } else {
            let g = g - n * r;
            let (k, col) = (g / m, g % m);
            if col == j { u0[(i, k)] } else { 0 }
        }
    });
    linalg::rank(field, &jac)
}

/// One random point per trial; per-rank projection ranks in scan order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub prime: u64,
    pub seed: u64,
    pub ranks: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub pattern: EntryPattern,
    pub gcr: usize,
    pub gcc: usize,
    pub specified: usize,
    pub trials: Vec<TrialRecord>,
}

/// Whether `p` is generically completable to rank `r`: some trial's
/// projection reaches `|S|`. Trial `t` uses seed `seed + t`.
pub fn is_generically_completable(
    p: &EntryPattern,
    r: usize,
    trials: u32,
    seed: u64,
    field: &PrimeField,
) -> bool {
    let target = p.specified_count();
    (0..trials.max(1)).any(|t| tangent_projection_rank(p, r, field, seed.wrapping_add(t as u64)) == target)
}

/// Least `r` to which `p` is generically completable, scanning upward from
/// the dimension-count lower bound.
pub fn generic_completion_rank(p: &EntryPattern, trials: u32, seed: u64) -> RankReport {
    generic_completion_rank_in(p, trials, seed, &PrimeField::mersenne31())
}

pub fn generic_completion_rank_in(p: &EntryPattern, trials: u32, seed: u64, field: &PrimeField) -> RankReport {
    let (n, m) = p.shape();
    let target = p.specified_count();
    let trials = trials.max(1);
    let mut records: Vec<TrialRecord> = (0..trials)
        .map(|t| TrialRecord { prime: field.modulus(), seed: seed.wrapping_add(t as u64), ranks: Vec::new() })
        .collect();
    let start = (0..=n.min(m)).find(|&r| r * (n + m - r) >= target).unwrap_or(n.min(m));
    let mut gcr = n.min(m);
    'scan: for r in start..=n.min(m) {
        for rec in records.iter_mut() {
            let rank = tangent_projection_rank(p, r, field, rec.seed);
            rec.ranks.push((r, rank));
            if rank == target {
                gcr = r;
                break 'scan;
            }
        }
    }
    RankReport { pattern: p.clone(), gcr, gcc: n.min(m) - gcr, specified: target, trials: records }
}

/// Largest `c` with `c (c + k) <= u`: the dimension-count bound on the
/// corank of an `(n+k) x n` pattern with `u` unspecified entries.
pub fn corank_upper_bound(unspecified: usize, extra_rows: usize) -> usize {
    let mut c = 0;
    while (c + 1) * (c + 1 + extra_rows) <= unspecified {
        c += 1;
    }
    c
}

/// `(lower, upper)` bounds on the generic and typical coranks of `p`. The
/// upper bound is the dimension count; the lower bound is 1 for a nonempty
/// square pattern (one unknown can always make the determinant vanish).
pub fn corank_bounds(p: &EntryPattern) -> (usize, usize) {
    let extra = p.rows().abs_diff(p.cols());
    let upper = corank_upper_bound(p.unspecified_count(), extra).min(p.min_dim());
    let lower = usize::from(p.is_square() && p.unspecified_count() > 0);
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{circulant, prime_circulant};

    #[test]
    fn tangent_examples() {
        let f = PrimeField::mersenne31();
        let g41 = circulant(4, 1).unwrap();
        assert_eq!(tangent_projection_rank(&g41, 2, &f, 1), 12);
        let full = EntryPattern::full(3, 4).unwrap();
        assert_eq!(tangent_projection_rank(&full, 3, &f, 1), 12);
        let g91 = circulant(9, 1).unwrap();
        assert!(tangent_projection_rank(&g91, 5, &f, 1) < 72);
        assert_eq!(tangent_projection_rank(&g91, 6, &f, 1), 72);
    }

    #[test]
    fn gcc_examples() {
        let report = generic_completion_rank(&circulant(5, 2).unwrap(), 3, 0);
        assert_eq!(report.gcc, 3);
        let report = generic_completion_rank(&EntryPattern::full(5, 5).unwrap(), 3, 0);
        assert_eq!(report.gcc, 0);
        let report = generic_completion_rank(&prime_circulant(6, 2).unwrap(), 3, 0);
        assert_eq!(report.gcc, 3);
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(corank_upper_bound(16, 0), 4);
        assert_eq!(corank_upper_bound(11, 0), 3);
        assert_eq!(corank_upper_bound(0, 0), 0);
        assert_eq!(corank_upper_bound(12, 2), 2);
        assert_eq!(corank_bounds(&circulant(4, 1).unwrap()), (1, 2));
    }

    #[test]
    fn variety_dimension() {
        assert_eq!(RankVariety::new(4, 4, 2).unwrap().dimension(), 12);
        assert!(RankVariety::new(2, 3, 3).is_none());
    }
}

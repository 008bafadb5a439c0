//! Rayon drivers. Work items are independent; results are collected in
//! index order, so output does not depend on the thread count.

use lowrank_core::generic::{generic_completion_rank, DEFAULT_TRIALS};
use lowrank_core::pattern::has_typical_corank_one;
use lowrank_core::typical::{evaluate_sample, summarize, PaddingReport, SampleOutcome, SolverConfig, TypicalRankReport};
use lowrank_core::EntryPattern;
use rayon::prelude::*;
use serde::Serialize;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "LOWRANK_THREADS";

/// Configures the global pool from `LOWRANK_THREADS` if set. Safe to call
/// more than once; later calls are ignored.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn sample_outcomes(p: &EntryPattern, gcr: usize, cfg: &SolverConfig) -> Vec<SampleOutcome> {
    (0..cfg.sample_count).into_par_iter().map(|i| evaluate_sample(p, gcr, i, cfg)).collect()
}

/// Parallel counterpart of `estimate_typical`; identical output.
pub fn estimate_typical(p: &EntryPattern, cfg: &SolverConfig) -> anyhow::Result<TypicalRankReport> {
    cfg.validate()?;
    let gcr = generic_completion_rank(p, DEFAULT_TRIALS, cfg.seed).gcr;
    Ok(summarize(p, gcr, &sample_outcomes(p, gcr, cfg), cfg))
}

pub fn padding_invariance(u: &EntryPattern, sizes: &[usize], cfg: &SolverConfig) -> anyhow::Result<PaddingReport> {
    let mut coranks = Vec::new();
    for &n in sizes {
        coranks.push(estimate_typical(&u.embed(n, n)?, cfg)?.inferred_typical_coranks);
    }
    let consistent = coranks.windows(2).all(|w| w[0] == w[1]);
    Ok(PaddingReport { sizes: sizes.to_vec(), coranks, consistent })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub pattern: EntryPattern,
    pub predicted: bool,
    pub case: lowrank_core::pattern::CorankOneCase,
    /// Frequency of samples whose minimum rank was `min(n, m) - 1`.
    pub corank_one_frequency: f64,
    pub failures: usize,
    pub agrees: bool,
}

/// Compares the corank-one characterization with Monte Carlo evidence on
/// each pattern.
pub fn characterize_sweep(patterns: &[EntryPattern], cfg: &SolverConfig) -> anyhow::Result<Vec<SweepEntry>> {
    patterns
        .par_iter()
        .map(|p| {
            let report = lowrank_core::typical::estimate_typical(p, cfg)?;
            let (predicted, case) = has_typical_corank_one(p);
            let target = p.min_dim().checked_sub(1);
            let freq = target.and_then(|t| report.histogram.get(&t).copied()).unwrap_or(0.0);
            Ok(SweepEntry {
                pattern: p.clone(),
                predicted,
                case,
                corank_one_frequency: freq,
                failures: report.failures,
                agrees: predicted == (freq > 0.0),
            })
        })
        .collect()
}

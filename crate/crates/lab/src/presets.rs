//! Named experiments.
//!
//! Seeds derive from one root seed `S`: solver and sampling seeds use `S`
//! directly, filling `i` of a batch uses `S + FILLING_OFFSET + i` and the
//! fiber starts for filling `i` use `S + FIBER_OFFSET + i`. Each part of a
//! pipeline can therefore be rerun on its own.

use anyhow::{bail, Result};
use lowrank_core::complete::{circulantk_complete, g52_complete, verify_certificate, G52Branch, PartialMatrix};
use lowrank_core::fiber::{enumerate_fiber, FiberConfig, FiberError, FiberReport};
use lowrank_core::generic::{generic_completion_rank, DEFAULT_TRIALS};
use lowrank_core::pattern::{circulant, enumerate_canonical, prime_circulant, two_typical_family, TwoTypicalKind};
use lowrank_core::typical::{min_real_rank, summarize, SampleOutcome, SolverConfig};
use lowrank_core::{EntryPattern, Reals};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::parallel;
use crate::report::{histogram_csv, table_csv, typical_summary};

pub const FILLING_OFFSET: u64 = 10_000;
pub const FIBER_OFFSET: u64 = 20_000;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// The statement checked by the preset; `None` for evidence-only runs.
    pub claim: Option<&'static str>,
    pub default_samples: Option<usize>,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "gcc-gn1-table",
        description: "generic completion corank of the diagonal pattern G(n,1), n = 1..16",
        claim: Some("gcc(G(n,1)) = floor(sqrt(n)) for n = 1..16"),
        default_samples: None,
    },
    PresetInfo {
        name: "tc-g41",
        description: "typical coranks of the 4x4 diagonal pattern",
        claim: Some("typical coranks of G(4,1) are {1, 2}"),
        default_samples: Some(500),
    },
    PresetInfo {
        name: "tc-gn1-5to8",
        description: "typical coranks of G(n,1) for n = 5..8",
        claim: Some("the only typical corank of G(n,1) is 2 for 5 <= n <= 8"),
        default_samples: Some(300),
    },
    PresetInfo {
        name: "tc-g52-prime",
        description: "typical coranks of G'(5,2) and agreement of the constructive branch with the estimator",
        claim: Some("typical coranks of G'(5,2) are {2, 3}; the constructive branch matches min_real_rank on >= 98% of fillings"),
        default_samples: Some(500),
    },
    PresetInfo {
        name: "tc-g64",
        description: "typical coranks of G(6,2) and G'(6,2), plus corank-3 certificates for G'(6,2)",
        claim: Some("the only typical corank of G(6,2) and of G'(6,2) is 3"),
        default_samples: Some(200),
    },
    PresetInfo {
        name: "fiber-g41",
        description: "rank-2 completions of 50 generic fillings of G(4,1)",
        claim: Some("exactly 4 distinct complex rank-2 completions on >= 95% of fillings"),
        default_samples: Some(50),
    },
    PresetInfo {
        name: "fiber-g91",
        description: "rank-6 completions of one generic filling of G(9,1), three reruns of 2000 starts (best effort)",
        claim: None,
        default_samples: None,
    },
    PresetInfo {
        name: "characterize-sweep",
        description: "corank-one characterization against Monte Carlo evidence, all unspecified sets of size <= 5 in 5x5",
        claim: Some("the characterization agrees with sampled evidence on every canonical pattern"),
        default_samples: Some(200),
    },
    PresetInfo {
        name: "two-typical-families",
        description: "the corank and rank families with two typical values, n = 1..3",
        claim: Some("Tc(n) has typical coranks {1, 2} and Tr(n) has typical ranks {2, 3}"),
        default_samples: Some(200),
    },
    PresetInfo {
        name: "padding-invariance",
        description: "typical coranks are unchanged when the grid is enlarged around the unspecified set",
        claim: Some("G(4,1) in 4..6: {1, 2}; {(1,1)} in 2..3: {1}; G(5,1) in 5..7: {2}"),
        default_samples: Some(200),
    },
    PresetInfo {
        name: "question-g91-corank2",
        description: "evidence on whether corank 2 is typical for G(9,1)",
        claim: None,
        default_samples: Some(200),
    },
    PresetInfo {
        name: "question-g52",
        description: "evidence on the typical coranks of G(5,2)",
        claim: None,
        default_samples: Some(500),
    },
];

pub fn find(name: &str) -> Option<&'static PresetInfo> {
    PRESETS.iter().find(|p| p.name == name)
}

#[derive(Clone, Debug)]
pub struct PresetOptions {
    pub seed: u64,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PresetOutcome {
    pub name: String,
    pub claim: Option<String>,
    /// `None` when the preset carries no expected outcome.
    pub expected_met: Option<bool>,
    pub summary: Vec<String>,
    pub body: Value,
    #[serde(skip)]
    pub csv: Vec<(String, String)>,
}

pub fn run(name: &str, opts: &PresetOptions) -> Result<PresetOutcome> {
    let Some(info) = find(name) else {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        bail!("unknown preset {name:?}; available: {}", names.join(", "));
    };
    let samples = opts.samples.or(info.default_samples).unwrap_or(1);
    let cfg = SolverConfig { sample_count: samples, seed: opts.seed, ..SolverConfig::default() };
    let mut out = match info.name {
        "gcc-gn1-table" => gcc_table(opts.seed)?,
        "tc-g41" => typical_expect(&[("G(4,1)", circulant(4, 1)?)], &cfg, |r| r.inferred_typical_coranks == [1, 2])?,
        "tc-gn1-5to8" => {
            let pats: Vec<_> = (5..=8).map(|n| Ok((["G(5,1)", "G(6,1)", "G(7,1)", "G(8,1)"][n - 5], circulant(n, 1)?))).collect::<Result<_>>()?;
            typical_expect(&pats, &cfg, |r| r.inferred_typical_coranks == [2])?
        }
        "tc-g52-prime" => g52_prime(&cfg)?,
        "tc-g64" => g64(&cfg)?,
        "fiber-g41" => fiber_g41(opts.seed, samples)?,
        "fiber-g91" => fiber_g91(opts.seed)?,
        "characterize-sweep" => sweep(&cfg)?,
        "two-typical-families" => two_typical(&cfg)?,
        "padding-invariance" => padding(&cfg)?,
        "question-g91-corank2" => question(&cfg, "G(9,1)", circulant(9, 1)?, 2)?,
        "question-g52" => question(&cfg, "G(5,2)", circulant(5, 2)?, 2)?,
        _ => unreachable!("preset table and dispatch disagree"),
    };
    out.name = info.name.to_string();
    out.claim = info.claim.map(str::to_string);
    if info.claim.is_none() {
        out.expected_met = None;
    }
    Ok(out)
}

fn outcome(expected_met: Option<bool>, summary: Vec<String>, body: Value, csv: Vec<(String, String)>) -> PresetOutcome {
    PresetOutcome { name: String::new(), claim: None, expected_met, summary, body, csv }
}

fn gcc_table(seed: u64) -> Result<PresetOutcome> {
    let rows: Vec<(usize, usize, usize)> = (1..=16usize)
        .into_par_iter()
        .map(|n| {
            let gcc = generic_completion_rank(&circulant(n, 1).expect("n >= 1"), DEFAULT_TRIALS, seed).gcc;
            (n, gcc, n.isqrt())
        })
        .collect();
    let ok = rows.iter().all(|&(_, gcc, s)| gcc == s);
    let summary = rows.iter().map(|(n, gcc, s)| format!("n = {n:2}: gcc {gcc}, floor(sqrt n) {s}")).collect();
    let csv = table_csv(
        &["n", "gcc", "floor_sqrt_n"],
        &rows.iter().map(|(n, g, s)| vec![n.to_string(), g.to_string(), s.to_string()]).collect::<Vec<_>>(),
    )?;
    let body = json!({ "trials": DEFAULT_TRIALS, "rows": rows.iter().map(|(n, g, s)| json!({"n": n, "gcc": g, "floor_sqrt_n": s})).collect::<Vec<_>>() });
    Ok(outcome(Some(ok), summary, body, vec![("gcc-gn1-table.csv".into(), csv)]))
}

fn typical_expect(
    patterns: &[(&str, EntryPattern)],
    cfg: &SolverConfig,
    check: impl Fn(&lowrank_core::typical::TypicalRankReport) -> bool,
) -> Result<PresetOutcome> {
    let mut ok = true;
    let mut summary = Vec::new();
    let mut reports = Vec::new();
    let mut csv = Vec::new();
    for (label, p) in patterns {
        let r = parallel::estimate_typical(p, cfg)?;
        ok &= check(&r) && !r.unreliable;
        summary.push(format!("{label}: {}", typical_summary(&r)));
        csv.push((format!("{}.csv", file_label(label)), histogram_csv(&r)?));
        reports.push(json!({ "label": label, "report": r }));
    }
    Ok(outcome(Some(ok), summary, json!({ "reports": reports }), csv))
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect::<String>().trim_matches('_').to_string()
}

fn fiber_cfg(seed: u64) -> FiberConfig {
    FiberConfig { seed, ..FiberConfig::default() }
}

fn g52_prime(cfg: &SolverConfig) -> Result<PresetOutcome> {
    let p = prime_circulant(5, 2)?;
    let gcr = generic_completion_rank(&p, DEFAULT_TRIALS, cfg.seed).gcr;
    let outcomes = parallel::sample_outcomes(&p, gcr, cfg);
    let report = summarize(&p, gcr, &outcomes, cfg);
    // Sample i of the estimator is the Gaussian filling with seed S + i.
    let branches: Vec<Result<(usize, Option<usize>, bool)>> = (0..cfg.sample_count)
        .into_par_iter()
        .map(|i| {
            let a = PartialMatrix::random_gaussian(p.clone(), cfg.seed + i as u64);
            let out = g52_complete(&a, &fiber_cfg(cfg.seed + FIBER_OFFSET + i as u64))?;
            let rank = match out.branch {
                G52Branch::Rank2 => 2,
                G52Branch::Rank3 => 3,
            };
            let estimated = match outcomes[i] {
                SampleOutcome::Rank(r) => Some(r),
                SampleOutcome::Failed => None,
            };
            Ok((rank, estimated, verify_certificate(&Reals::default(), &out.certificate).valid))
        })
        .collect();
    let branches = branches.into_iter().collect::<Result<Vec<_>>>()?;
    let agree = branches.iter().filter(|(b, e, _)| Some(*b) == *e).count();
    let valid = branches.iter().filter(|(_, _, v)| *v).count();
    let n = branches.len().max(1);
    let freq_ok = [2usize, 3].iter().all(|c| report.histogram.get(&(5 - c)).is_some_and(|&f| f >= 0.05));
    let ok = report.inferred_typical_coranks == [2, 3] && freq_ok && agree * 100 >= 98 * n && valid == branches.len();
    let summary = vec![
        format!("G'(5,2): {}", typical_summary(&report)),
        format!("constructive branch agrees with the estimator on {agree}/{n} fillings; {valid} certificates verify"),
    ];
    let body = json!({ "report": report, "branch_agreement": agree, "fillings": n, "certificates_valid": valid });
    Ok(outcome(Some(ok), summary, body, vec![("g52_prime.csv".into(), histogram_csv(&report)?)]))
}

fn g64(cfg: &SolverConfig) -> Result<PresetOutcome> {
    let mut out = typical_expect(&[("G(6,2)", circulant(6, 2)?), ("G'(6,2)", prime_circulant(6, 2)?)], cfg, |r| {
        r.inferred_typical_coranks == [3]
    })?;
    let p = prime_circulant(6, 2)?;
    let certified = (0..20u64)
        .into_par_iter()
        .filter(|&i| {
            let a = PartialMatrix::random_gaussian(p.clone(), cfg.seed + FILLING_OFFSET + i);
            circulantk_complete(&Reals::default(), &a, 2, 1).is_ok_and(|c| c.achieved_rank == 3 && verify_certificate(&Reals::default(), &c).valid)
        })
        .count();
    out.summary.push(format!("corank-3 certificates for G'(6,2): {certified}/20"));
    out.expected_met = out.expected_met.map(|m| m && certified == 20);
    out.body["certificates_valid"] = json!(certified);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
struct FiberRow {
    filling_seed: u64,
    total: Option<usize>,
    real: Option<usize>,
    conjugate_pairs_certify: bool,
    min_real_rank_when_no_real: Option<usize>,
}

fn conjugates_paired(r: &FiberReport) -> bool {
    let complex: Vec<_> = r.solutions.iter().filter(|s| !s.real).collect();
    complex.iter().all(|s| {
        complex.iter().any(|t| {
            s.re.iter().zip(&t.re).all(|(a, b)| (a - b).abs() < 1e-6) && s.im.iter().zip(&t.im).all(|(a, b)| (a + b).abs() < 1e-6)
        })
    })
}

fn fiber_g41(seed: u64, fillings: usize) -> Result<PresetOutcome> {
    let p = circulant(4, 1)?;
    let rows: Vec<Result<(FiberRow, Option<FiberReport>)>> = (0..fillings as u64)
        .into_par_iter()
        .map(|i| {
            let filling_seed = seed + FILLING_OFFSET + i;
            let a = PartialMatrix::random_gaussian(p.clone(), filling_seed);
            match enumerate_fiber(&a, 2, &fiber_cfg(seed + FIBER_OFFSET + i)) {
                Ok(r) => {
                    let mrr = if r.real_count == 0 {
                        Some(min_real_rank(&a, 4, &SolverConfig { seed, ..SolverConfig::default() })?)
                    } else {
                        None
                    };
                    let row = FiberRow {
                        filling_seed,
                        total: Some(r.total()),
                        real: Some(r.real_count),
                        conjugate_pairs_certify: conjugates_paired(&r),
                        min_real_rank_when_no_real: mrr,
                    };
                    Ok((row, Some(r)))
                }
                Err(FiberError::EmptyFiberEvidence { .. }) => Ok((
                    FiberRow { filling_seed, total: None, real: None, conjugate_pairs_certify: true, min_real_rank_when_no_real: None },
                    None,
                )),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let exactly_four = rows.iter().filter(|(r, _)| r.total == Some(4)).count();
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for (r, _) in &rows {
        *counts.entry(r.total.map_or("none".into(), |t| t.to_string())).or_default() += 1;
    }
    let pairs_ok = rows.iter().all(|(r, _)| r.conjugate_pairs_certify);
    let mrr_ok = rows.iter().all(|(r, _)| r.min_real_rank_when_no_real.is_none_or(|m| m == 3));
    let n = rows.len().max(1);
    let ok = exactly_four * 100 >= 95 * n && pairs_ok && mrr_ok;
    let summary = vec![
        format!("distinct completions per filling: {counts:?}"),
        format!("exactly 4 on {exactly_four}/{n}; conjugate pairs certify: {pairs_ok}; min_real_rank = 3 whenever no real point: {mrr_ok}"),
    ];
    let body = json!({
        "rows": rows.iter().map(|(r, _)| r).collect::<Vec<_>>(),
        "reports": rows.iter().map(|(_, r)| r).collect::<Vec<_>>(),
        "count_histogram": counts,
    });
    Ok(outcome(Some(ok), summary, body, Vec::new()))
}

fn fiber_g91(seed: u64) -> Result<PresetOutcome> {
    let p = circulant(9, 1)?;
    let a = PartialMatrix::random_gaussian(p, seed + FILLING_OFFSET);
    let runs: Vec<Result<Option<FiberReport>>> = (0..3u64)
        .into_par_iter()
        .map(|t| {
            let cfg = FiberConfig { starts: Some(2000), ..fiber_cfg(seed + FIBER_OFFSET + t) };
            match enumerate_fiber(&a, 6, &cfg) {
                Ok(r) => Ok(Some(r)),
                Err(FiberError::EmptyFiberEvidence { .. }) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let counts: Vec<Option<usize>> = runs.iter().map(|r| r.as_ref().map(FiberReport::total)).collect();
    let stable = counts.windows(2).all(|w| w[0] == w[1]);
    let summary = vec![
        format!("distinct rank-6 completions found per rerun: {counts:?} (stable: {stable})"),
        "no expected count is asserted; the counts are recorded as observed".to_string(),
    ];
    let body = json!({ "counts": counts, "stable": stable, "reports": runs });
    Ok(outcome(None, summary, body, Vec::new()))
}

fn sweep(cfg: &SolverConfig) -> Result<PresetOutcome> {
    let patterns = enumerate_canonical(5, 5, 5)?;
    let entries = parallel::characterize_sweep(&patterns, cfg)?;
    let agree = entries.iter().filter(|e| e.agrees).count();
    let mut summary = vec![format!("characterization agrees with sampled evidence on {agree}/{} canonical patterns", entries.len())];
    for e in entries.iter().filter(|e| !e.agrees) {
        summary.push(format!(
            "disagreement: U = {:?}, predicted {}, corank-1 frequency {:.3}",
            e.pattern.unspecified(),
            e.predicted,
            e.corank_one_frequency
        ));
    }
    let csv = table_csv(
        &["unspecified", "predicted", "case", "corank_one_frequency", "failures", "agrees"],
        &entries
            .iter()
            .map(|e| {
                vec![
                    format!("{:?}", e.pattern.unspecified()),
                    e.predicted.to_string(),
                    format!("{:?}", e.case),
                    e.corank_one_frequency.to_string(),
                    e.failures.to_string(),
                    e.agrees.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let ok = agree == entries.len();
    Ok(outcome(Some(ok), summary, json!({ "entries": entries }), vec![("characterize-sweep.csv".into(), csv)]))
}

fn two_typical(cfg: &SolverConfig) -> Result<PresetOutcome> {
    let mut ok = true;
    let mut summary = Vec::new();
    let mut reports = Vec::new();
    for kind in [TwoTypicalKind::Corank, TwoTypicalKind::Rank] {
        for n in 1..=3 {
            let p = two_typical_family(kind, n)?;
            let r = parallel::estimate_typical(&p, cfg)?;
            let (values, want): (&[usize], [usize; 2]) = match kind {
                TwoTypicalKind::Corank => (&r.inferred_typical_coranks, [1, 2]),
                TwoTypicalKind::Rank => (&r.inferred_typical_ranks, [2, 3]),
            };
            let ranks_of = |v: usize| match kind {
                TwoTypicalKind::Corank => p.min_dim() - v,
                TwoTypicalKind::Rank => v,
            };
            let sides = want.iter().all(|&v| r.histogram.get(&ranks_of(v)).is_some_and(|&f| f >= 0.05));
            ok &= values == want && sides && !r.unreliable;
            let label = match kind {
                TwoTypicalKind::Corank => format!("Tc({n})"),
                TwoTypicalKind::Rank => format!("Tr({n})"),
            };
            summary.push(format!("{label}: {}", typical_summary(&r)));
            reports.push(json!({ "label": label, "report": r }));
        }
    }
    Ok(outcome(Some(ok), summary, json!({ "reports": reports }), Vec::new()))
}

fn padding(cfg: &SolverConfig) -> Result<PresetOutcome> {
    let single = EntryPattern::new(1, 1, [(1, 1)])?;
    let cases: [(&str, EntryPattern, Vec<usize>, Vec<usize>); 3] = [
        ("G(4,1)", circulant(4, 1)?, vec![4, 5, 6], vec![1, 2]),
        ("{(1,1)}", single, vec![2, 3], vec![1]),
        ("G(5,1)", circulant(5, 1)?, vec![5, 6, 7], vec![2]),
    ];
    let mut ok = true;
    let mut summary = Vec::new();
    let mut body = Vec::new();
    for (label, u, sizes, want) in cases {
        let r = parallel::padding_invariance(&u, &sizes, cfg)?;
        ok &= r.consistent && r.coranks.iter().all(|c| *c == want);
        summary.push(format!("{label} in sizes {sizes:?}: coranks {:?}, consistent {}", r.coranks, r.consistent));
        body.push(json!({ "label": label, "report": r }));
    }
    Ok(outcome(Some(ok), summary, json!({ "cases": body }), Vec::new()))
}

fn question(cfg: &SolverConfig, label: &str, p: EntryPattern, corank: usize) -> Result<PresetOutcome> {
    let r = parallel::estimate_typical(&p, cfg)?;
    let rank = p.min_dim() - corank;
    let freq = r.histogram.get(&rank).copied().unwrap_or(0.0);
    let summary = vec![
        format!("{label}: {}", typical_summary(&r)),
        format!("corank {corank} (rank {rank}) observed with frequency {freq:.3}; this is evidence, not a verdict"),
    ];
    let csv = vec![(format!("{}.csv", file_label(label)), histogram_csv(&r)?)];
    Ok(outcome(None, summary, json!({ "report": r, "corank": corank, "frequency": freq }), csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_dispatched() {
        assert_eq!(PRESETS.len(), 12);
        assert!(run("no-such-preset", &PresetOptions { seed: 0, samples: None }).is_err());
    }

    #[test]
    fn gcc_table_matches() {
        let out = run("gcc-gn1-table", &PresetOptions { seed: 7, samples: None }).unwrap();
        assert_eq!(out.expected_met, Some(true));
    }
}

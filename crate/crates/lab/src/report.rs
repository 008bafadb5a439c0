//! Report envelopes and CSV output.

use std::time::Duration;

use anyhow::Result;
use lowrank_core::typical::TypicalRankReport;
use serde::Serialize;

pub const ARTIFACT: &str = "lowrank";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every written report. Two runs with the same inputs differ only in
/// `wall_time_seconds`.
#[derive(Clone, Debug, Serialize)]
pub struct Envelope<C: Serialize, B: Serialize> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: C,
    pub wall_time_seconds: f64,
    pub body: B,
}

impl<C: Serialize, B: Serialize> Envelope<C, B> {
    pub fn new(command: impl Into<String>, seed: u64, config: C, elapsed: Duration, body: B) -> Self {
        Self {
            artifact: ARTIFACT,
            version: VERSION,
            command: command.into(),
            seed,
            config,
            wall_time_seconds: elapsed.as_secs_f64(),
            body,
        }
    }
}

/// Two columns, `rank,frequency`, in rank order.
pub fn histogram_csv(report: &TypicalRankReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "frequency"])?;
    for (rank, freq) in &report.histogram {
        w.write_record([rank.to_string(), freq.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Generic CSV from a header and rows of displayable cells.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// One-paragraph summary of a typical-rank report.
pub fn typical_summary(r: &TypicalRankReport) -> String {
    let hist: Vec<String> = r.histogram.iter().map(|(k, f)| format!("{k}: {f:.3}")).collect();
    let mut s = format!(
        "typical ranks {:?}, coranks {:?}; histogram {{{}}}; failures {}; generic completion rank {}",
        r.inferred_typical_ranks,
        r.inferred_typical_coranks,
        hist.join(", "),
        r.failures,
        r.generic_completion_rank
    );
    if r.anomaly {
        s.push_str("; ANOMALY: gap inside the reported interval");
    }
    if r.unreliable {
        s.push_str("; UNRELIABLE: more than 5% of samples failed");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use lowrank_core::typical::{summarize, SampleOutcome, SolverConfig};
    use lowrank_core::EntryPattern;

    #[test]
    fn csv_has_two_columns() {
        let p = EntryPattern::full(3, 3).unwrap();
        let r = summarize(&p, 3, &[SampleOutcome::Rank(3), SampleOutcome::Rank(3)], &SolverConfig::default());
        assert_eq!(histogram_csv(&r).unwrap(), "rank,frequency\n3,1\n");
    }
}

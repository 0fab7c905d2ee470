//! The fifteen acceptance checks as one runnable suite.

use std::time::{Duration, Instant};

use anyhow::Result;

use qsep_core::attacks::SearchMode;
use qsep_core::games::KeyLemmaParams;
use qsep_core::StateDistribution;

use crate::checks::{self, derive_seed, ClonerKind};
use crate::report::{self, Format, Row};

pub const MC_TRIALS: u64 = 10_000;
pub const OWSG_TRIALS: u64 = 200;

pub struct Criterion {
    pub id: u64,
    pub title: &'static str,
    pub limit: Option<Duration>,
    run: fn(u64) -> Result<Vec<Row>>,
}

pub struct Outcome {
    pub id: u64,
    pub title: &'static str,
    pub rows: Vec<Row>,
    pub error: Option<String>,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl Outcome {
    pub fn within_limit(&self) -> bool {
        self.limit.is_none_or(|l| self.elapsed < l)
    }

    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.rows.is_empty() && report::all_pass(&self.rows) && self.within_limit()
    }

    pub fn line(&self) -> String {
        let limit = self.limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
        let detail = match &self.error {
            Some(e) => format!("error: {e}"),
            None => format!("{}/{} rows pass", self.rows.iter().filter(|r| r.pass).count(), self.rows.len()),
        };
        format!(
            "criterion {}: {} {} ({detail}; {:.2} s{limit})",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64()
        )
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, title: "binomial identity, discrete phase", limit: secs(10), run: c1 },
        Criterion { id: 2, title: "binomial identity, Haar, and unbalanced witness", limit: None, run: c2 },
        Criterion { id: 3, title: "trace norm of block-ones matrices", limit: None, run: c3 },
        Criterion { id: 4, title: "reflection envelope", limit: secs(30), run: c4 },
        Criterion { id: 5, title: "one-query |phi-> from Swap", limit: None, run: c5 },
        Criterion { id: 6, title: "postselection indifferentiability", limit: secs(60), run: c6 },
        Criterion { id: 7, title: "zero-padded splitting identities", limit: None, run: c7 },
        Criterion { id: 8, title: "Haar type identity and conditioning", limit: None, run: c8 },
        Criterion { id: 9, title: "counting measurement hybrids", limit: None, run: c9 },
        Criterion { id: 10, title: "key lemma bound and gap", limit: secs(60), run: c10 },
        Criterion { id: 11, title: "LOCC bound and separation", limit: None, run: c11 },
        Criterion { id: 12, title: "LOCC indifferentiability", limit: None, run: c12 },
        Criterion { id: 13, title: "OWSG key recovery", limit: secs(120), run: c13 },
        Criterion { id: 14, title: "barrier experiments", limit: None, run: c14 },
    ]
}

fn c1(_: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for n in 1..=2 {
        for t1 in 1..=3 {
            for t2 in 0..=2 {
                rows.push(checks::binom(&StateDistribution::discrete_phase(n, 1, t1 + t2 + 1)?, t1, t2)?);
            }
        }
    }
    Ok(rows)
}

fn c2(_: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for n in 1..=2 {
        for t1 in 1..=3 {
            for t2 in 0..=2 {
                rows.push(checks::binom(&StateDistribution::haar(n), t1, t2)?);
            }
        }
    }
    rows.push(checks::binom_witness(2)?);
    Ok(rows)
}

fn c3(_: u64) -> Result<Vec<Row>> {
    Ok((1..=8).flat_map(|m| (1..=8).map(move |n| checks::tracenorm(m, n))).collect())
}

fn c4(seed: u64) -> Result<Vec<Row>> {
    checks::reflect_sweep(4, &[1, 3, 7, 15], 100, seed)
}

fn c5(seed: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (i, n) in (1..=2).enumerate() {
        rows.extend(checks::chrsm_swap(&StateDistribution::haar(n), 100, derive_seed(seed, 2 * i as u64))?);
        rows.extend(checks::chrsm_swap(&StateDistribution::discrete_phase(n, 1, 4)?, 100, derive_seed(seed, 2 * i as u64 + 1))?);
    }
    Ok(rows)
}

fn c6(seed: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for m in [1, 2, 4] {
        rows.extend(checks::postselection_indiff(2, m, 2, 2, MC_TRIALS, derive_seed(seed, m as u64))?);
    }
    Ok(rows)
}

fn c7(_: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for n_dim in 1..=8 {
        rows.extend(checks::zerosplit(n_dim, 4, 5)?);
    }
    Ok(rows)
}

fn c8(_: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (n, t) in [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2)] {
        rows.extend(checks::types(n, t)?);
    }
    Ok(rows)
}

fn c9(seed: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut k = 0;
    for n_dim in 2..=6 {
        for b1 in 0..=2 {
            for b2 in 0..=2 {
                rows.extend(checks::hyb(n_dim, 0, b1, b2, derive_seed(seed, k))?);
                k += 1;
            }
        }
    }
    Ok(rows)
}

fn c10(_: u64) -> Result<Vec<Row>> {
    Ok(vec![
        checks::key_lemma(KeyLemmaParams::new(0, 0, 1, 1, 9))?,
        checks::key_lemma(KeyLemmaParams::new(0, 0, 2, 1, 16))?,
        checks::key_lemma_gap(KeyLemmaParams::new(0, 0, 2, 2, 9))?,
    ])
}

fn c11(seed: u64) -> Result<Vec<Row>> {
    let mut rows = checks::locc_bound(3, 0, 50, MC_TRIALS, derive_seed(seed, 0))?;
    rows.push(checks::locc_separation(2, 0.05, MC_TRIALS, derive_seed(seed, 1))?);
    Ok(rows)
}

fn c12(seed: u64) -> Result<Vec<Row>> {
    checks::locc_indiff(2, 3, 0, 1, MC_TRIALS, seed)
}

fn c13(seed: u64) -> Result<Vec<Row>> {
    let mut rows = checks::owsg(4, 4, 1, 3, SearchMode::ExactOracle, OWSG_TRIALS, derive_seed(seed, 0))?;
    rows.extend(checks::owsg(4, 4, 1, 3, SearchMode::Measured, OWSG_TRIALS, derive_seed(seed, 1))?);
    rows.extend(checks::threshold_chain_rows(100));
    Ok(rows)
}

fn c14(seed: u64) -> Result<Vec<Row>> {
    let mut rows = vec![checks::theta(8, 2)?];
    rows.extend(checks::phase_agreement(8, 4, 2, 0.75, MC_TRIALS, derive_seed(seed, 0))?);
    rows.extend(checks::cloning(ClonerKind::Cheat, 2, 2, 0.1, MC_TRIALS, derive_seed(seed, 1))?);
    rows.extend(checks::cloning(ClonerKind::Trivial, 2, 2, 0.1, MC_TRIALS, derive_seed(seed, 2))?);
    Ok(rows)
}

/// Runs one criterion with its derived seed.
pub fn run_criterion(c: &Criterion, master: u64) -> Outcome {
    let start = Instant::now();
    let res = (c.run)(derive_seed(master, c.id));
    let elapsed = start.elapsed();
    let (rows, error) = match res {
        Ok(rows) => (rows, None),
        Err(e) => (Vec::new(), Some(format!("{e:#}"))),
    };
    Outcome { id: c.id, title: c.title, rows, error, elapsed, limit: c.limit }
}

/// The report bytes of a suite run. Timings are not part of the report.
pub fn report_bytes(outcomes: &[Outcome], format: Format) -> Result<Vec<u8>> {
    let rows: Vec<Row> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    report::encode(&rows, format)
}

pub struct SuiteRun {
    pub outcomes: Vec<Outcome>,
    pub report: Vec<u8>,
    pub deterministic: bool,
}

impl SuiteRun {
    pub fn pass(&self) -> bool {
        self.deterministic && self.outcomes.iter().all(Outcome::pass)
    }

    pub fn determinism_line(&self) -> String {
        format!(
            "criterion 15: {} byte-identical report on rerun ({} bytes)",
            if self.deterministic { "PASS" } else { "FAIL" },
            self.report.len()
        )
    }
}

/// Runs criteria 1 to 14, calling `each` after every one, then reruns the
/// whole suite and compares report bytes.
pub fn run_suite(master: u64, format: Format, mut each: impl FnMut(&Outcome)) -> Result<SuiteRun> {
    let outcomes: Vec<Outcome> = criteria()
        .iter()
        .map(|c| {
            let o = run_criterion(c, master);
            each(&o);
            o
        })
        .collect();
    let report = report_bytes(&outcomes, format)?;
    let again: Vec<Outcome> = criteria().iter().map(|c| run_criterion(c, master)).collect();
    let deterministic = report_bytes(&again, format)? == report;
    Ok(SuiteRun { outcomes, report, deterministic })
}

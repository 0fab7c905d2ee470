//! Dispatch from experiment configs and lemma ids to the checks.

use anyhow::{bail, Context, Result};
use serde_json::json;

use qsep_core::attacks::SearchMode;
use qsep_core::games::KeyLemmaParams;
use qsep_core::{Error, StateDistribution};

use crate::checks::{self, ClonerKind};
use crate::config::{pair, ExperimentConfig, SweepConfig};
use crate::report::Row;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Runs one experiment with the given seed and trial count.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64, trials: u64) -> Result<Vec<Row>> {
    let p = &cfg.params;
    let rows = match cfg.experiment.as_str() {
        "postselection-indiff" => {
            let n = cfg.n.unwrap_or(2);
            checks::postselection_indiff(n, p.m.unwrap_or(2), p.t1.unwrap_or(2), p.t2.unwrap_or(2), trials, seed)?
        }
        "reflect-sweep" => {
            let ts = p.ts.clone().or(p.t.map(|t| vec![t])).unwrap_or_else(|| vec![1, 3, 7, 15]);
            checks::reflect_sweep(p.d.unwrap_or(4), &ts, p.inputs.unwrap_or(100), seed)?
        }
        "locc-bound" => {
            let n = cfg.n.unwrap_or(3);
            let a = pair(&p.a, 0)[0];
            let mut rows = checks::locc_bound(n, a, p.one_way.unwrap_or(50), trials, seed)?;
            rows.push(checks::locc_separation(n, 0.05, trials, seed)?);
            rows
        }
        "locc-indiff" => {
            checks::locc_indiff(p.parties.unwrap_or(2), cfg.n.unwrap_or(3), p.t1.unwrap_or(0), p.t2.unwrap_or(1), trials, seed)?
        }
        "owsg-attack" => {
            let mode: SearchMode = p.mode.map(Into::into).unwrap_or(SearchMode::ExactOracle);
            checks::owsg(p.key_bits.unwrap_or(4), cfg.n.unwrap_or(4), p.state_qubits.unwrap_or(1), p.tag_dim.unwrap_or(3), mode, trials, seed)?
        }
        "barrier-cloning" => {
            checks::cloning(p.cloner.unwrap_or(ClonerKind::Cheat), p.t.unwrap_or(2), cfg.n.unwrap_or(2), 0.1, trials, seed)?
        }
        "barrier-phase" => {
            let (t, levels) = (p.t.unwrap_or(8), p.levels.unwrap_or(2));
            let mut rows = checks::phase_agreement(t, p.grid.unwrap_or(4), levels, 0.75, trials, seed)?;
            rows.push(checks::theta(t, levels)?);
            rows
        }
        "binom" => {
            let n = cfg.n.unwrap_or(1);
            let (t1, t2) = (p.t1.unwrap_or(1), p.t2.unwrap_or(1));
            vec![checks::binom(&cfg.distribution(n)?, t1, t2)?]
        }
        "key-lemma" => {
            let (a, b) = (pair(&p.a, 0), pair(&p.b, 1));
            let n_dim = p.d.unwrap_or(1 << cfg.n.unwrap_or(2));
            vec![checks::key_lemma(KeyLemmaParams::new(a[0], a[1], b[0], b[1], n_dim))?]
        }
        other => bail!("unknown experiment `{other}`"),
    };
    Ok(rows)
}

/// Whether an error means the cell cannot be built at this size.
pub fn is_infeasible(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<Error>(), Some(Error::DimensionOverflow { .. } | Error::Infeasible(_)))
}

/// Runs every grid cell with a seed derived from `(seed, cell index)`.
/// Cells that fail the dimension check or overflow at run time are reported
/// as skipped.
pub fn run_sweep(cfg: &SweepConfig, seed: u64, trials: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (i, cell) in cfg.cells()?.iter().enumerate() {
        let cell_seed = checks::derive_seed(seed, i as u64);
        let params = json!({"cell": i, "cell_seed": cell_seed});
        if let Err(e) = cell.validate() {
            rows.push(Row::skipped(&cell.experiment, cell.n, params, &e.to_string()));
            continue;
        }
        match run_experiment(cell, cell_seed, trials) {
            Ok(r) => rows.extend(r),
            Err(e) if is_infeasible(&e) => rows.push(Row::skipped(&cell.experiment, cell.n, params, &e.to_string())),
            Err(e) => return Err(e).with_context(|| format!("sweep cell {i}")),
        }
    }
    Ok(rows)
}

/// Parameters of `verify`; each lemma reads what it needs.
#[derive(Debug, Clone, Default)]
pub struct VerifyParams {
    pub dist: Option<String>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub levels: Option<usize>,
    pub m: Option<usize>,
    pub big_n: Option<usize>,
    pub a1: Option<usize>,
    pub a2: Option<usize>,
    pub b1: Option<usize>,
    pub b2: Option<usize>,
    pub d: Option<usize>,
    pub samples: Option<usize>,
    pub max_t: Option<usize>,
    pub max_regs: Option<usize>,
    pub gap: bool,
}

pub const LEMMAS: &[&str] = &["binom", "tracenorm", "reflect", "swap", "zerosplit", "types", "hyb", "keylemma", "thresholdb", "theta"];

fn distribution(kind: Option<&str>, n: usize, levels: usize) -> Result<StateDistribution> {
    Ok(match kind.unwrap_or("haar") {
        "haar" => StateDistribution::haar(n),
        "phase" => StateDistribution::discrete_phase(n, 1, levels)?,
        "fixed" => StateDistribution::fixed_basis(n, 1)?,
        other => bail!("unknown distribution `{other}` (haar, phase, fixed)"),
    })
}

/// `verify <lemma>`; an unknown id is a usage error.
pub fn run_verify(lemma: &str, v: &VerifyParams, seed: u64) -> Result<Vec<Row>> {
    let n = v.n.unwrap_or(1);
    Ok(match lemma {
        "binom" => {
            let (t1, t2) = (v.t1.unwrap_or(1), v.t2.unwrap_or(1));
            let dist = distribution(v.dist.as_deref(), n, v.levels.unwrap_or(t1 + t2 + 1))?;
            vec![checks::binom(&dist, t1, t2)?]
        }
        "tracenorm" => vec![checks::tracenorm(v.m.unwrap_or(2), v.big_n.unwrap_or(3))],
        "reflect" => {
            let ts = v.t.map(|t| vec![t]).unwrap_or_else(|| vec![1, 3, 7, 15]);
            checks::reflect_sweep(v.d.unwrap_or(4), &ts, v.samples.unwrap_or(100), seed)?
        }
        "swap" => checks::chrsm_swap(&distribution(v.dist.as_deref(), n, v.levels.unwrap_or(4))?, v.samples.unwrap_or(100), seed)?,
        "zerosplit" => checks::zerosplit(v.big_n.unwrap_or(4), v.max_t.unwrap_or(4), v.max_regs.unwrap_or(5))?,
        "types" => checks::types(n, v.t.unwrap_or(2))?,
        "hyb" => checks::hyb(v.big_n.unwrap_or(3), v.a1.unwrap_or(0), v.b1.unwrap_or(1), v.b2.unwrap_or(1), seed)?,
        "keylemma" => {
            let p = KeyLemmaParams::new(v.a1.unwrap_or(0), v.a2.unwrap_or(0), v.b1.unwrap_or(1), v.b2.unwrap_or(1), v.big_n.unwrap_or(9));
            let mut rows = vec![checks::key_lemma(p)?];
            if v.gap {
                rows.push(checks::key_lemma_gap(p)?);
            }
            rows
        }
        "thresholdb" => checks::threshold_chain_rows(v.n.unwrap_or(100)),
        "theta" => vec![checks::theta(v.t.unwrap_or(8), v.levels.unwrap_or(4))?],
        other => bail!(UnknownLemma(other.to_string())),
    })
}

#[derive(Debug)]
pub struct UnknownLemma(pub String);

impl std::fmt::Display for UnknownLemma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unknown lemma id `{}` (one of: {})", self.0, LEMMAS.join(", "))
    }
}

impl std::error::Error for UnknownLemma {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_lemma_is_an_error() {
        let e = run_verify("nope", &VerifyParams::default(), 0).unwrap_err();
        assert!(e.downcast_ref::<UnknownLemma>().is_some());
    }

    #[test]
    fn verify_tracenorm_reports_sqrt_six() {
        let v = VerifyParams { m: Some(2), big_n: Some(3), ..Default::default() };
        let rows = run_verify("tracenorm", &v, 0).unwrap();
        assert!((rows[0].measured - 6f64.sqrt()).abs() < 1e-12);
        assert!(rows[0].pass);
    }

    #[test]
    fn verify_binom_phase() {
        let v = VerifyParams { dist: Some("phase".into()), n: Some(2), t1: Some(2), t2: Some(1), ..Default::default() };
        let rows = run_verify("binom", &v, 0).unwrap();
        assert!(rows[0].pass && rows[0].measured <= 1e-9);
    }

    #[test]
    fn singleton_sweep_matches_experiment() {
        let s: SweepConfig = serde_json::from_str(r#"{"experiment": "reflect-sweep", "params": {"inputs": 5}, "grid": {"t": [3]}}"#).unwrap();
        let swept = run_sweep(&s, 11, 1).unwrap();
        let cell = &s.cells().unwrap()[0];
        let direct = run_experiment(cell, checks::derive_seed(11, 0), 1).unwrap();
        assert_eq!(swept, direct);
    }

    #[test]
    fn infeasible_sweep_cell_is_skipped() {
        let s: SweepConfig =
            serde_json::from_str(r#"{"experiment": "key-lemma", "params": {"b": [2]}, "grid": {"d": [3, 200]}, "trials": 1}"#).unwrap();
        let rows = run_sweep(&s, 1, 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].pass);
        assert!(rows[1].params_json.contains("skipped"), "{rows:?}");
    }
}

//! JSON experiment and sweep configurations. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;
use serde_json::Value;

use qsep_core::attacks::SearchMode;
use qsep_core::oracles::DistributionDescriptor;
use qsep_core::StateDistribution;

use crate::checks::ClonerKind;
use crate::report::Format;

/// Experiment ids accepted by `experiment` and `sweep`.
pub const EXPERIMENTS: &[&str] = &[
    "postselection-indiff",
    "reflect-sweep",
    "locc-bound",
    "locc-indiff",
    "owsg-attack",
    "barrier-cloning",
    "barrier-phase",
    "binom",
    "key-lemma",
];

/// Largest dense dimension an exact mode may build.
pub const DENSE_LIMIT: usize = 4096;
/// Largest sparse dimension.
pub const SPARSE_LIMIT: usize = 1 << 20;

/// Structural parameters; each experiment reads the ones it needs and
/// falls back to its defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub t: Option<usize>,
    pub ts: Option<Vec<usize>>,
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<usize>,
    /// Haar copies per party (a₁ = a₂ = a), or `[a₁, a₂]`.
    pub a: Option<Vec<usize>>,
    pub b: Option<Vec<usize>>,
    /// ℓ, the number of parties.
    pub parties: Option<usize>,
    pub levels: Option<usize>,
    pub grid: Option<usize>,
    pub key_bits: Option<usize>,
    pub state_qubits: Option<usize>,
    pub tag_dim: Option<usize>,
    pub mode: Option<SearchModeArg>,
    pub cloner: Option<ClonerKind>,
    pub one_way: Option<usize>,
    pub inputs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchModeArg {
    Exact,
    Measured,
}

impl From<SearchModeArg> for SearchMode {
    fn from(m: SearchModeArg) -> Self {
        match m {
            SearchModeArg::Exact => SearchMode::ExactOracle,
            SearchModeArg::Measured => SearchMode::Measured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: Option<usize>,
    /// Distribution descriptor, e.g. `kind=phase n=2 M=4 base=1 seed=0`.
    pub dist: Option<String>,
    #[serde(default)]
    pub params: Params,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: String,
    pub n: Option<usize>,
    pub dist: Option<String>,
    #[serde(default)]
    pub params: Params,
    /// Values per parameter; `n` and any `params` key may appear.
    pub grid: BTreeMap<String, Vec<Value>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(EXPERIMENTS.contains(&self.experiment.as_str()), "unknown experiment `{}`", self.experiment);
        if let Some(t) = self.trials {
            ensure!(t > 0, "trials must be positive");
        }
        if let Some(n) = self.n {
            ensure!((1..=12).contains(&n), "n = {n} outside [1, 12]");
        }
        if let Some(d) = &self.dist {
            d.parse::<DistributionDescriptor>().with_context(|| format!("bad distribution `{d}`"))?;
        }
        let (dim, limit) = self.estimated_dim();
        ensure!(dim <= limit, "dimension {dim} exceeds {limit} for `{}`", self.experiment);
        Ok(())
    }

    pub fn distribution(&self, n: usize) -> Result<StateDistribution> {
        match &self.dist {
            Some(d) => Ok(d.parse::<DistributionDescriptor>()?.build()?),
            None => Ok(StateDistribution::haar(n)),
        }
    }

    /// The largest Hilbert-space dimension the experiment builds and the
    /// limit that applies to it.
    pub fn estimated_dim(&self) -> (usize, usize) {
        let p = &self.params;
        let n = self.n.unwrap_or(2).min(20);
        let embedded = (1usize << n) + 1;
        let pow = |base: usize, regs: usize| base.checked_pow(regs as u32).unwrap_or(usize::MAX);
        let (a, b) = (pair(&p.a, 0), pair(&p.b, 1));
        let regs = a[0] + a[1] + b[0] + b[1];
        match self.experiment.as_str() {
            "binom" => (pow(embedded, p.t1.unwrap_or(1) + p.t2.unwrap_or(1)), SPARSE_LIMIT),
            "key-lemma" => (pow(p.d.map_or(embedded, |d| d + 1), regs), SPARSE_LIMIT),
            "locc-bound" => (pow(embedded, regs), DENSE_LIMIT),
            "owsg-attack" => {
                let dd = 1usize << p.state_qubits.unwrap_or(1).min(20);
                (dd * dd * p.tag_dim.unwrap_or(3), DENSE_LIMIT)
            }
            _ => (embedded, usize::MAX),
        }
    }
}

/// `[x, x]` from a one-element list, the list itself from two elements.
pub fn pair(v: &Option<Vec<usize>>, default: usize) -> [usize; 2] {
    match v.as_deref() {
        Some([x]) => [*x, *x],
        Some([x, y, ..]) => [*x, *y],
        _ => [default, default],
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.grid.is_empty(), "empty grid");
        ensure!(self.grid.values().all(|v| !v.is_empty()), "grid parameter without values");
        self.base().validate_keys_only()
    }

    fn base(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.experiment.clone(),
            n: self.n,
            dist: self.dist.clone(),
            params: self.params.clone(),
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
        }
    }

    /// The Cartesian grid in lexicographic key order, last key fastest.
    pub fn cells(&self) -> Result<Vec<ExperimentConfig>> {
        let keys: Vec<&String> = self.grid.keys().collect();
        let sizes: Vec<usize> = keys.iter().map(|k| self.grid[*k].len()).collect();
        let total: usize = sizes.iter().product();
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut choice = vec![0; keys.len()];
            for i in (0..keys.len()).rev() {
                choice[i] = rest % sizes[i];
                rest /= sizes[i];
            }
            let mut cell = self.base();
            let mut params = serde_json::to_value(ParamsView(&self.params))?;
            for (k, &c) in keys.iter().zip(&choice) {
                let v = self.grid[*k][c].clone();
                if k.as_str() == "n" {
                    cell.n = Some(serde_json::from_value(v).context("grid value for n")?);
                } else {
                    params[k.as_str()] = v;
                }
            }
            cell.params = serde_json::from_value(params).context("grid parameters")?;
            out.push(cell);
        }
        Ok(out)
    }
}

impl ExperimentConfig {
    fn validate_keys_only(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            bail!("unknown experiment `{}`", self.experiment);
        }
        if let Some(t) = self.trials {
            ensure!(t > 0, "trials must be positive");
        }
        Ok(())
    }
}

/// Serializes `Params` back to a JSON object, omitting unset fields.
struct ParamsView<'a>(&'a Params);

impl serde::Serialize for ParamsView<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let p = self.0;
        let mut m = s.serialize_map(None)?;
        macro_rules! put {
            ($($f:ident),*) => {$(
                if let Some(v) = &p.$f {
                    m.serialize_entry(stringify!($f), v)?;
                }
            )*};
        }
        put!(t, ts, t1, t2, m, d, a, b, parties, levels, grid, key_bits, state_qubits, tag_dim, one_way, inputs);
        if let Some(mode) = p.mode {
            m.serialize_entry("mode", match mode {
                SearchModeArg::Exact => "exact",
                SearchModeArg::Measured => "measured",
            })?;
        }
        if let Some(c) = &p.cloner {
            m.serialize_entry("cloner", c)?;
        }
        m.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"experiment": "binom", "trials": 1, "colour": 3}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
        let bad = r#"{"experiment": "binom", "params": {"tt": 3}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn zero_trials_and_unknown_ids_fail_validation() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"experiment": "binom", "trials": 0}"#).unwrap();
        assert!(c.validate().is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"experiment": "nope"}"#).unwrap();
        assert!(c.validate().is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"experiment": "binom", "n": 1, "params": {"t1": 2, "t2": 1}}"#).unwrap();
        c.validate().unwrap();
    }

    #[test]
    fn oversized_dense_owsg_is_rejected() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"experiment": "owsg-attack", "params": {"state_qubits": 6}}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn sweep_cells_are_cartesian_in_key_order() {
        let s: SweepConfig = serde_json::from_str(
            r#"{"experiment": "reflect-sweep", "params": {"d": 4}, "grid": {"n": [1, 2], "t": [1, 3, 7]}}"#,
        )
        .unwrap();
        s.validate().unwrap();
        let cells = s.cells().unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[0].n, cells[0].params.t), (Some(1), Some(1)));
        assert_eq!((cells[1].n, cells[1].params.t), (Some(1), Some(3)));
        assert_eq!((cells[3].n, cells[3].params.t), (Some(2), Some(1)));
        assert!(cells.iter().all(|c| c.params.d == Some(4)));
    }

    #[test]
    fn sweep_grid_keys_are_checked() {
        let s: SweepConfig = serde_json::from_str(r#"{"experiment": "binom", "grid": {"bogus": [1]}}"#).unwrap();
        assert!(s.cells().is_err());
    }
}

//! The key-recovery attack on one-way state generators in the common-state
//! model, and the two experiments showing why |φ−⟩ cannot be produced from
//! copies of |φ⟩.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::constructions::rep_state;
use crate::error::{Error, Result};
use crate::games::{ke_game_run, KeGame, KeProtocol, Network, World};
use crate::hilbert::{rng_for, sample_binomial, sample_haar, sample_unitary, swap_operator, trace_norm, CMat, CVec, PureState, Rng, StateVector, C64};
use crate::oracles::{embed, EmbeddedState, OracleKind, StateDistribution};
use crate::stats::{run_trials, AdvantageEstimate, Rate};

/// Amplification target: an index is returned once its block acceptance is
/// at least this.
pub const TARGET: f64 = 1.0 / 3.0;
/// Promised block acceptance of some index.
pub const PROMISE: f64 = 3.0 / 4.0;

/// How Ver decides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verifier {
    /// Symmetric-subspace test between the state register and a fresh oracle
    /// copy, and a projection of the tag onto the key's tag vector.
    SymmetricTest,
    AcceptAll,
    RejectAll,
}

/// A small one-way state generator over a common state |φ⟩ of dimension D.
/// StateGen(k) = |φ⟩ ⊗ |τ_k⟩ with the tag
/// |τ_k⟩ = √(1−δ) R_k|0⟩ + √δ R_k|1⟩ for a seeded unitary R_k, and Ver makes
/// one oracle query (T_Ver = 1).
#[derive(Debug, Clone)]
pub struct ToyOwsg {
    pub key_bits: usize,
    pub state_dim: usize,
    pub tag_dim: usize,
    /// δ: honest per-copy rejection probability.
    pub honest_error: f64,
    pub verifier: Verifier,
    /// Keys with equal `k mod collide` share a tag; `None` keeps them apart.
    pub collide: Option<usize>,
    rotations: Vec<CMat>,
}

impl ToyOwsg {
    pub fn new(key_bits: usize, state_dim: usize, tag_dim: usize, honest_error: f64, seed: u64) -> Result<Self> {
        if tag_dim < 2 || state_dim == 0 || key_bits > 12 {
            return Err(Error::InvalidArgument("need tag_dim ≥ 2, state_dim ≥ 1 and at most 12 key bits".into()));
        }
        if !(0.0..=1.0).contains(&honest_error) {
            return Err(Error::InvalidArgument(format!("honest error {honest_error} outside [0, 1]")));
        }
        let rotations = (0..1u64 << key_bits).map(|k| sample_unitary(tag_dim, &mut rng_for(seed, k))).collect();
        Ok(Self { key_bits, state_dim, tag_dim, honest_error, verifier: Verifier::SymmetricTest, collide: None, rotations })
    }

    pub fn with_verifier(mut self, v: Verifier) -> Self {
        self.verifier = v;
        self
    }

    pub fn with_collisions(mut self, classes: usize) -> Self {
        self.collide = Some(classes.max(1));
        self
    }

    pub fn keys(&self) -> usize {
        1 << self.key_bits
    }

    /// T_Ver.
    pub fn ver_queries(&self) -> usize {
        1
    }

    fn rotation(&self, k: usize) -> &CMat {
        &self.rotations[self.collide.map_or(k, |c| k % c)]
    }

    fn tag(&self, k: usize) -> PureState {
        let r = self.rotation(k);
        let v = r.column(0) * C64::new((1.0 - self.honest_error).sqrt(), 0.0) + r.column(1) * C64::new(self.honest_error.sqrt(), 0.0);
        PureState::normalized(v.clone_owned()).expect("unit tag")
    }

    /// StateGen(k) with the oracle answering |φ⟩.
    pub fn state_gen(&self, k: usize, phi: &PureState) -> Result<PureState> {
        self.check_key(k)?;
        self.check_phi(phi)?;
        Ok(phi.tensor(&self.tag(k)))
    }

    /// One copy of ρ ⊗ |φ⟩^{⊗T_Ver}: what Π_k acts on.
    pub fn ver_input(&self, rho: &PureState, phi: &PureState) -> Result<PureState> {
        self.check_phi(phi)?;
        Ok(rho.tensor(phi))
    }

    /// Π_k on (state, tag, oracle copy): the accepting projector of Ver(k, ·).
    /// It equals U_k†(|1⟩⟨1| ⊗ I)U_k for any unitary U_k that rotates its
    /// range onto the output-bit-one subspace.
    pub fn ver_projector(&self, k: usize) -> Result<CMat> {
        self.check_key(k)?;
        let (d, t) = (self.state_dim, self.tag_dim);
        let dim = d * t * d;
        match self.verifier {
            Verifier::AcceptAll => Ok(CMat::identity(dim, dim)),
            Verifier::RejectAll => Ok(CMat::zeros(dim, dim)),
            Verifier::SymmetricTest => {
                let r0 = self.rotation(k).column(0).clone_owned();
                let tag = &r0 * r0.adjoint();
                Ok(CMat::from_fn(dim, dim, |i, j| {
                    let (a, ti, b) = (i / (t * d), (i / d) % t, i % d);
                    let (a2, tj, b2) = (j / (t * d), (j / d) % t, j % d);
                    let sym = 0.5 * (((a == a2) && (b == b2)) as u8 as f64 + ((a == b2) && (b == a2)) as u8 as f64);
                    tag[(ti, tj)] * sym
                }))
            }
        }
    }

    /// Tr(Π_k (ρ ⊗ |φ⟩⟨φ|)) for a pure ρ.
    pub fn acceptance(&self, k: usize, rho: &PureState, phi: &PureState) -> Result<f64> {
        let x = self.ver_input(rho, phi)?;
        let p = self.ver_projector(k)?;
        Ok((x.amps().adjoint() * p * x.amps())[(0, 0)].re)
    }

    fn check_key(&self, k: usize) -> Result<()> {
        if k >= self.keys() {
            return Err(Error::InvalidArgument(format!("key {k} outside [0, {})", self.keys())));
        }
        Ok(())
    }

    fn check_phi(&self, phi: &PureState) -> Result<()> {
        if phi.dim() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, got: phi.dim() });
        }
        Ok(())
    }
}

/// Two-outcome measurements {Π_i, I − Π_i} on one copy, each amplified by
/// testing `block` fresh copies and accepting iff all accept.
#[derive(Debug, Clone)]
pub struct ThresholdSearchInstance {
    pub projectors: Vec<CMat>,
    pub block: usize,
    pub promise: f64,
    pub target: f64,
    /// Sweeps over the candidates the measured search may make.
    pub passes: usize,
    /// Total copies the measured search may consume; `None` is unbounded.
    pub copy_budget: Option<usize>,
}

impl ThresholdSearchInstance {
    pub const DEFAULT_PASSES: usize = 64;

    pub fn new(projectors: Vec<CMat>, block: usize) -> Result<Self> {
        let inst = Self { projectors, block, promise: PROMISE, target: TARGET, passes: Self::DEFAULT_PASSES, copy_budget: None };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_passes(mut self, passes: usize) -> Self {
        self.passes = passes;
        self
    }

    pub fn with_copy_budget(mut self, copies: usize) -> Self {
        self.copy_budget = Some(copies);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.target && self.target < self.promise && self.promise <= 1.0) {
            return Err(Error::InvalidArgument(format!("thresholds {} < {} out of order", self.target, self.promise)));
        }
        if self.block == 0 || self.passes == 0 || self.projectors.is_empty() {
            return Err(Error::InvalidArgument("need a measurement, a nonempty block and one pass".into()));
        }
        Ok(())
    }

    /// Tr(Π_i^{⊗block} σ^{⊗block}) for a pure copy σ.
    pub fn block_acceptance(&self, i: usize, copy: &PureState) -> Result<f64> {
        let p = self.projectors.get(i).ok_or_else(|| Error::InvalidArgument(format!("measurement {i} of {}", self.projectors.len())))?;
        if p.nrows() != copy.dim() {
            return Err(Error::DimensionMismatch { expected: p.nrows(), got: copy.dim() });
        }
        let single = (copy.amps().adjoint() * p * copy.amps())[(0, 0)].re.clamp(0.0, 1.0);
        Ok(single.powi(self.block as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchMode {
    /// Sequential amplified measurements on fresh blocks, in random order.
    Measured,
    /// Direct evaluation of the block acceptances.
    ExactOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdOutcome {
    pub index: usize,
    pub copies_used: usize,
}

/// Finds an index whose amplified measurement accepts `copy^{⊗block}` with
/// probability at least the target, given that some index reaches the
/// promise.
///
/// Exact mode returns the first index whose block acceptance reaches the
/// target. Measured mode sweeps the indices in a fresh random order per pass
/// and spends one fresh block per index, stopping at the first block that
/// passes every copy. A failed sweep starts another, up to `passes`; it fails
/// with [`Error::NotFound`] when every sweep fails or the copy budget runs out.
pub fn threshold_search(inst: &ThresholdSearchInstance, copy: &PureState, mode: SearchMode, rng: &mut Rng) -> Result<ThresholdOutcome> {
    inst.validate()?;
    match mode {
        SearchMode::ExactOracle => {
            for i in 0..inst.projectors.len() {
                if inst.block_acceptance(i, copy)? >= inst.target {
                    return Ok(ThresholdOutcome { index: i, copies_used: 0 });
                }
            }
            Err(Error::NotFound)
        }
        SearchMode::Measured => {
            let tests: Vec<[CMat; 2]> = inst
                .projectors
                .iter()
                .map(|p| {
                    if p.nrows() != copy.dim() {
                        return Err(Error::DimensionMismatch { expected: p.nrows(), got: copy.dim() });
                    }
                    Ok([p.clone(), CMat::identity(p.nrows(), p.ncols()) - p])
                })
                .collect::<Result<_>>()?;
            let mut order: Vec<usize> = (0..tests.len()).collect();
            let mut used = 0usize;
            for _ in 0..inst.passes {
                order.shuffle(rng);
                for &i in &order {
                    let mut passed = true;
                    for _ in 0..inst.block {
                        if inst.copy_budget.is_some_and(|b| used >= b) {
                            return Err(Error::NotFound);
                        }
                        used += 1;
                        let mut sv = StateVector::empty();
                        let r = sv.append(copy);
                        if sv.measure(&[r], &tests[i], rng)?.0 != 0 {
                            passed = false;
                            break;
                        }
                    }
                    if passed {
                        return Ok(ThresholdOutcome { index: i, copies_used: used });
                    }
                }
            }
            Err(Error::NotFound)
        }
    }
}

/// Probability that one measured sweep returns each index, from the block
/// acceptances q_i: a uniformly random order reaches i after exactly the set
/// S with probability |S|!(m−1−|S|)!/m!, and every index in S must fail
/// first.
pub fn measured_selection_probabilities(q: &[f64]) -> Vec<f64> {
    let m = q.len();
    let mut fact = vec![1.0f64; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as f64;
    }
    (0..m)
        .map(|i| {
            // e[s] = Σ_{|S|=s, S∌i} Π_{j∈S} (1 − q_j)
            let mut e = vec![0.0f64; m];
            e[0] = 1.0;
            for (j, &qj) in q.iter().enumerate() {
                if j == i {
                    continue;
                }
                for s in (1..m).rev() {
                    e[s] += e[s - 1] * (1.0 - qj);
                }
            }
            q[i] * (0..m).map(|s| e[s] * fact[s] * fact[m - 1 - s] / fact[m]).sum::<f64>()
        })
        .collect()
}

/// The same over `passes` independent sweeps with no copy budget: a sweep
/// fails with probability F = Π(1 − q_j), so index i is returned with
/// probability s_i(1 + F + … + F^{passes−1}).
pub fn measured_selection_probabilities_passes(q: &[f64], passes: usize) -> Vec<f64> {
    let fail: f64 = q.iter().map(|x| 1.0 - x).product();
    let geometric: f64 = (0..passes).map(|p| fail.powi(p as i32)).sum();
    measured_selection_probabilities(q).into_iter().map(|s| s * geometric).collect()
}

/// G_OWSG^cor: the rate at which Ver rejects an honest state.
pub fn owsg_correctness_game(owsg: &ToyOwsg, dist: &StateDistribution, trials: u64, seed: u64) -> Result<Rate> {
    check_dist(owsg, dist)?;
    let outs = run_trials(seed, 0, trials, |_, rng| -> Result<bool> {
        let k = rng.random_range(0..owsg.keys());
        let phi = dist.sample(rng);
        let rho = owsg.state_gen(k, &phi)?;
        Ok(!ver_sample(owsg, k, &rho, &phi, rng)?)
    });
    let bits: Vec<bool> = outs.into_iter().collect::<Result<_>>()?;
    Ok(Rate::from_outcomes(&bits))
}

fn check_dist(owsg: &ToyOwsg, dist: &StateDistribution) -> Result<()> {
    if dist.dim() != owsg.state_dim {
        return Err(Error::DimensionMismatch { expected: owsg.state_dim, got: dist.dim() });
    }
    Ok(())
}

/// Runs Ver(k, ρ) once with a fresh oracle copy.
fn ver_sample(owsg: &ToyOwsg, k: usize, rho: &PureState, phi: &PureState, rng: &mut Rng) -> Result<bool> {
    let p = owsg.ver_projector(k)?;
    let mut sv = StateVector::empty();
    let r = sv.append(&owsg.ver_input(rho, phi)?);
    let projs = [p.clone(), CMat::identity(p.nrows(), p.ncols()) - p];
    Ok(sv.measure(&[r], &projs, rng)?.0 == 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackOutcome {
    pub key: usize,
    pub recovered: usize,
    /// Tr(Π_{k′}(ρ_k ⊗ φ)): per-copy acceptance of the recovered key.
    pub acceptance: f64,
    /// Ver(k′, ρ_k) on a fresh honest state.
    pub verified: bool,
    pub copies_used: usize,
}

/// The attack: build blocks (ρ_k ⊗ |φ⟩^{⊗T_Ver})^{⊗block} and run threshold
/// search over {Π_{k′}^{⊗block}}. With `block = 10n` an honest key passes
/// with probability at least 1 − 10n·δ.
pub fn owsg_attack(owsg: &ToyOwsg, key: usize, phi: &PureState, block: usize, mode: SearchMode, rng: &mut Rng) -> Result<AttackOutcome> {
    let rho = owsg.state_gen(key, phi)?;
    let copy = owsg.ver_input(&rho, phi)?;
    let inst = ThresholdSearchInstance::new((0..owsg.keys()).map(|k| owsg.ver_projector(k)).collect::<Result<_>>()?, block)?;
    let found = threshold_search(&inst, &copy, mode, rng)?;
    let acceptance = owsg.acceptance(found.index, &rho, phi)?;
    let verified = ver_sample(owsg, found.index, &rho, phi, rng)?;
    Ok(AttackOutcome { key, recovered: found.index, acceptance, verified, copies_used: found.copies_used })
}

/// Serialized summary of an attack run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub owsg: String,
    pub n: usize,
    pub mode: SearchMode,
    pub trials: u64,
    pub success_rate: f64,
    pub stderr: f64,
    pub copies_used: usize,
    pub thresholds: [f64; 2],
    /// Smallest per-copy acceptance of a returned key (exact mode).
    pub min_acceptance: f64,
}

/// Runs the attack `trials` times with random keys and states. A trial
/// succeeds when Ver(k′, ρ_k) accepts; a NotFound search counts as failure.
pub fn owsg_attack_experiment(owsg: &ToyOwsg, dist: &StateDistribution, n: usize, mode: SearchMode, trials: u64, seed: u64) -> Result<AttackReport> {
    check_dist(owsg, dist)?;
    let block = 10 * n;
    let outs = run_trials(seed, 0, trials, |_, rng| -> Result<Option<AttackOutcome>> {
        let k = rng.random_range(0..owsg.keys());
        let phi = dist.sample(rng);
        match owsg_attack(owsg, k, &phi, block, mode, rng) {
            Ok(o) => Ok(Some(o)),
            Err(Error::NotFound) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let outs: Vec<Option<AttackOutcome>> = outs.into_iter().collect::<Result<_>>()?;
    let bits: Vec<bool> = outs.iter().map(|o| o.is_some_and(|o| o.verified)).collect();
    let rate = Rate::from_outcomes(&bits);
    Ok(AttackReport {
        owsg: format!("toy[{} key bits, D={}, tag={}, δ={}]", owsg.key_bits, owsg.state_dim, owsg.tag_dim, owsg.honest_error),
        n,
        mode,
        trials,
        success_rate: rate.mean(),
        stderr: rate.stderr(),
        copies_used: outs.iter().flatten().map(|o| o.copies_used).sum(),
        thresholds: [TARGET, PROMISE],
        min_acceptance: outs.iter().flatten().map(|o| o.acceptance).fold(1.0, f64::min),
    })
}

/// Exact success probability of the measured attack (default passes, no
/// copy budget) for a given key and state: Σ_{k′} Pr[search returns k′] · Tr(Π_{k′}(ρ_k ⊗ φ)).
pub fn measured_attack_success(owsg: &ToyOwsg, key: usize, phi: &PureState, block: usize) -> Result<f64> {
    let rho = owsg.state_gen(key, phi)?;
    let acc: Vec<f64> = (0..owsg.keys()).map(|k| owsg.acceptance(k, &rho, phi)).collect::<Result<_>>()?;
    let q: Vec<f64> = acc.iter().map(|p| p.clamp(0.0, 1.0).powi(block as i32)).collect();
    Ok(measured_selection_probabilities_passes(&q, ThresholdSearchInstance::DEFAULT_PASSES).iter().zip(&acc).map(|(s, a)| s * a).sum())
}

/// Honest amplified acceptance (1−δ)^{10n} next to its union bound 1 − 10nδ.
pub fn amplified_honest_acceptance(delta: f64, n: usize) -> (f64, f64) {
    let b = 10 * n;
    ((1.0 - delta).powi(b as i32), 1.0 - b as f64 * delta)
}

/// `(3^{−1/(10n)}, 1 − ln3/(10n), 1 − 1/n)`: a block acceptance of 1/3 forces
/// the per-copy acceptance above each of these in turn.
pub fn threshold_chain(n: usize) -> (f64, f64, f64) {
    let x = 10.0 * n as f64;
    (3f64.powf(-1.0 / x), 1.0 - 3f64.ln() / x, 1.0 - 1.0 / n as f64)
}

/// Maps t copies of |φ⟩ (embedded) to one candidate register.
pub trait Cloner: Send + Sync {
    fn name(&self) -> String;

    /// `copies` hold |φ⟩; `hidden` is visible only to a cheating cloner.
    fn produce(&self, sv: &mut StateVector, copies: &[usize], hidden: &EmbeddedState, rng: &mut Rng) -> Result<usize>;
}

/// Outputs the flag state.
pub struct TrivialCloner;

impl Cloner for TrivialCloner {
    fn name(&self) -> String {
        "trivial".into()
    }

    fn produce(&self, sv: &mut StateVector, _copies: &[usize], hidden: &EmbeddedState, _rng: &mut Rng) -> Result<usize> {
        Ok(sv.append(&hidden.flag()))
    }
}

/// Reads the true |φ−⟩ from the oracle description instead of the copies.
pub struct CheatCloner;

impl Cloner for CheatCloner {
    fn name(&self) -> String {
        "cheat".into()
    }

    fn produce(&self, sv: &mut StateVector, _copies: &[usize], hidden: &EmbeddedState, _rng: &mut Rng) -> Result<usize> {
        Ok(sv.append(&hidden.minus()))
    }
}

/// Measures one copy in the computational basis and prepares
/// (|⊥⟩ − |x⟩)/√2 from the outcome x.
pub struct MeasurePrepareCloner;

impl Cloner for MeasurePrepareCloner {
    fn name(&self) -> String {
        "measure-prepare".into()
    }

    fn produce(&self, sv: &mut StateVector, copies: &[usize], hidden: &EmbeddedState, rng: &mut Rng) -> Result<usize> {
        let d = hidden.dim();
        let &r = copies.first().ok_or_else(|| Error::InvalidArgument("no copy to measure".into()))?;
        let projs: Vec<CMat> = (0..d).map(|x| PureState::basis(d, x).projector()).collect();
        let (x, _) = sv.measure(&[r], &projs, rng)?;
        let mut v = CVec::zeros(d);
        v[0] = C64::new(1.0, 0.0);
        v[x] -= C64::new(1.0, 0.0);
        Ok(sv.append(&PureState::normalized(v)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloningReport {
    /// Output rates on ρ (Rep-state tail) and ρ′ (|φ−⟩ tail).
    pub advantage: AdvantageEstimate,
    pub mean_accept_rep: f64,
    pub mean_accept_minus: f64,
    /// Mean |⟨φ−|candidate⟩|² on the ρ′ side, from the candidate's reduced
    /// state.
    pub candidate_fidelity: f64,
}

/// Hands the cloner t copies of |φ⟩ followed by a last register holding
/// either a Rep state with c ~ B(1, 1/2) (ρ) or |φ−⟩ (ρ′), and swap-tests the
/// candidate against the last register. A cloner that really produced |φ−⟩
/// would tell the two apart, which the Rep-state identity forbids.
pub fn barrier_cloning_experiment(cloner: &dyn Cloner, t: usize, n: usize, trials: u64, seed: u64) -> Result<CloningReport> {
    let run = |minus_tail: bool| {
        run_trials(seed, 0, trials, |_, rng| -> Result<(bool, f64, f64)> {
            let e = embed(&sample_haar(n, rng));
            let mut sv = StateVector::empty();
            let copies: Vec<usize> = (0..t).map(|_| sv.append(e.state())).collect();
            let tail = if minus_tail { e.minus() } else { rep_state(1, sample_binomial(1, rng).c, &e)? };
            let last = sv.append(&tail);
            let cand = cloner.produce(&mut sv, &copies, &e, rng)?;
            let fid = sv.expectation(&[cand], &e.minus().projector())?.re;
            let p = 0.5 * (1.0 + sv.expectation(&[cand, last], &swap_operator(e.dim()))?.re);
            Ok((rng.random::<f64>() < p, p, fid))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()
    };
    let rep = run(false)?;
    let minus = run(true)?;
    let mean = |v: &[(bool, f64, f64)], f: fn(&(bool, f64, f64)) -> f64| v.iter().map(f).sum::<f64>() / v.len().max(1) as f64;
    let bits = |v: &[(bool, f64, f64)]| Rate::from_outcomes(&v.iter().map(|x| x.0).collect::<Vec<_>>());
    Ok(CloningReport {
        advantage: AdvantageEstimate { real: bits(&rep), ideal: bits(&minus) },
        mean_accept_rep: mean(&rep, |x| x.1),
        mean_accept_minus: mean(&minus, |x| x.1),
        candidate_fidelity: mean(&minus, |x| x.2),
    })
}

/// Two parties with no communication each swap-test `t` oracle answers
/// against grid states (|⊥⟩ − e^{iθ_j}|b⟩)/√2, θ_j = 2πj/grid, take the
/// maximum-likelihood phase among the `levels` candidates 2πm/levels, and
/// output its parity. Ties are broken by a fair coin.
#[derive(Debug, Clone, Copy)]
pub struct PhaseGuessKe {
    pub t: usize,
    pub grid: usize,
    pub levels: usize,
    /// Index of |b⟩ in the embedded register.
    pub support: usize,
    pub dim: usize,
}

impl PhaseGuessKe {
    /// For the phase distribution e^{iθ}|base−1⟩ on n qubits.
    pub fn for_phase(n: usize, base: usize, levels: usize, t: usize, grid: usize) -> Self {
        Self { t, grid, levels, support: base, dim: (1 << n) + 1 }
    }

    fn grid_state(&self, j: usize) -> PureState {
        let mut v = CVec::zeros(self.dim);
        v[0] = C64::new(1.0, 0.0);
        v[self.support] = -C64::from_polar(1.0, 2.0 * PI * j as f64 / self.grid as f64);
        PureState::normalized(v).expect("nonzero")
    }

    /// Swap-test acceptance of grid point j against |φ−⟩ with phase θ.
    fn accept_prob(&self, j: usize, theta: f64) -> f64 {
        let delta = theta - 2.0 * PI * j as f64 / self.grid as f64;
        0.5 * (1.0 + (0.5 * delta).cos().powi(2))
    }

    fn key(&self, outcomes: &[(usize, bool)], rng: &mut Rng) -> bool {
        let ll: Vec<f64> = (0..self.levels)
            .map(|m| {
                let theta = 2.0 * PI * m as f64 / self.levels as f64;
                outcomes
                    .iter()
                    .map(|&(j, acc)| {
                        let p = self.accept_prob(j, theta);
                        if acc { p.ln() } else { (1.0 - p).ln() }
                    })
                    .sum()
            })
            .collect();
        let best = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..self.levels).filter(|&m| ll[m] >= best - 1e-9).collect();
        let m = winners[rng.random_range(0..winners.len())];
        m % 2 == 1
    }
}

impl KeProtocol for PhaseGuessKe {
    fn name(&self) -> String {
        format!("phase-guess[t={}, grid={}]", self.t, self.grid)
    }

    fn budgets(&self) -> (usize, usize) {
        (2 * self.t, 0)
    }

    fn max_rounds(&self) -> usize {
        0
    }

    fn execute(&self, net: &mut Network, rng: &mut Rng) -> Result<(bool, bool)> {
        let d = self.dim;
        let sym = (CMat::identity(d * d, d * d) + swap_operator(d)) * C64::new(0.5, 0.0);
        let anti = CMat::identity(d * d, d * d) - &sym;
        let mut keys = [false; 2];
        for (p, key) in keys.iter_mut().enumerate() {
            let mut outcomes = Vec::with_capacity(self.t);
            for i in 0..self.t {
                let j = i % self.grid;
                let r = net.query(p, 1, rng)?;
                let g = net.prepare(p, &self.grid_state(j))?;
                let k = net.measure(p, &[r, g], &[sym.clone(), anti.clone()], rng)?;
                outcomes.push((j, k == 0));
                net.discard(p, g, rng)?;
                net.discard(p, r, rng)?;
            }
            *key = self.key(&outcomes, rng);
        }
        Ok((keys[0], keys[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAgreementReport {
    /// Rate of equal keys with |φ−⟩ access.
    pub agreement_minus: Rate,
    /// Rate of equal keys with |φ⟩ access.
    pub agreement_plain: Rate,
    /// max_{θ,θ′} ‖ρ_θ − ρ_θ′‖₁ for t copies of e^{iθ}|b⟩.
    pub theta_residual: f64,
}

/// max over the `levels` phases of ‖(e^{iθ}|b⟩⟨b|e^{−iθ})^{⊗t} − (θ′)‖₁ on
/// one qubit.
pub fn theta_independence_residual(t: usize, levels: usize) -> Result<f64> {
    let dist = StateDistribution::discrete_phase(1, 2, levels)?;
    let states: Vec<CMat> = dist
        .finite_support()
        .ok_or_else(|| Error::InvalidArgument("phase distribution has finite support".into()))?
        .into_iter()
        .map(|(_, s)| s.tensor_power(t).projector())
        .collect();
    let mut worst = 0.0f64;
    for a in &states {
        for b in &states {
            worst = worst.max(trace_norm(&(a - b)));
        }
    }
    Ok(worst)
}

/// Runs [`PhaseGuessKe`] on e^{iθ}|1⟩ with θ uniform over `levels` phases,
/// once with CHRS− access and once with CHRS access.
pub fn barrier_phase_agreement(t: usize, grid: usize, levels: usize, trials: u64, seed: u64) -> Result<PhaseAgreementReport> {
    let dist = StateDistribution::discrete_phase(1, 2, levels)?;
    let ke = PhaseGuessKe::for_phase(1, 2, levels, t, grid);
    let agree = |kind: OracleKind| -> Result<Rate> {
        let world = World::primitives(dist.clone(), kind, kind);
        let fail = ke_game_run(&ke, KeGame::Correctness, None, &world, trials, seed)?;
        Ok(Rate { successes: fail.trials - fail.successes, trials: fail.trials })
    };
    Ok(PhaseAgreementReport {
        agreement_minus: agree(OracleKind::ChrsMinus)?,
        agreement_plain: agree(OracleKind::Chrs)?,
        theta_residual: theta_independence_residual(t, levels)?,
    })
}

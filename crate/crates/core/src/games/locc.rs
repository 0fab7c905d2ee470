//! The LOCC distinguisher suite, its single-party counterpart, sampled
//! main-theorem worlds and the LOCC indifferentiability experiment.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;
use serde::Serialize;

use super::states::{counting_projector, hybrid_chain_check, KeyLemmaParams};
use super::{indiff_advantage, Distinguisher, Network, Payload, World};
use crate::constructions::rep_state_sparse;
use crate::error::{Error, Result};
use crate::hilbert::{rng_for, sample_binomial, sample_haar_dim, sample_unitary, swap_operator, CMat, PureState, Rng, SparseVec, C64};
use crate::oracles::{embed, StateDistribution};
use crate::stats::AdvantageEstimate;

/// Queries `per_party[0]` answers from slot 1 then `per_party[1]` from slot 2.
fn gather(net: &mut Network, party: usize, per_party: [usize; 2], rng: &mut Rng) -> Result<Vec<usize>> {
    let mut regs = Vec::with_capacity(per_party[0] + per_party[1]);
    for (k, &q) in per_party.iter().enumerate() {
        for _ in 0..q {
            regs.push(net.query(party, k + 1, rng)?);
        }
    }
    Ok(regs)
}

fn designated(regs: &[usize]) -> Result<usize> {
    regs.last().copied().ok_or_else(|| Error::InvalidArgument("party holds no register".into()))
}

/// Rank-one projectors onto the columns of `basis`.
fn column_projectors(basis: &CMat) -> Vec<CMat> {
    (0..basis.ncols())
        .map(|k| {
            let v = basis.column(k);
            v * v.adjoint()
        })
        .collect()
}

/// Every party measures its last register in the basis derived from a seed
/// that party 0 broadcasts; the others report their outcomes and party 0
/// accepts iff all outcomes coincide. Returns party 0's acceptance
/// probability.
fn compare_in_shared_basis(
    net: &mut Network,
    regs: &[Vec<usize>],
    basis_from_seed: impl Fn(u64, usize) -> CMat,
    rng: &mut Rng,
) -> Result<f64> {
    let parties = regs.len();
    let d = net.register_dim(0, 2).or_else(|_| net.register_dim(0, 1))?;
    let seed: u64 = rng.random();
    for p in 1..parties {
        net.send(0, p, Payload::Classical(vec![seed]))?;
    }
    let mut reported = Vec::with_capacity(parties - 1);
    for p in 1..parties {
        let s = net.receive(p)?[0];
        let projs = column_projectors(&basis_from_seed(s, d));
        let k = net.measure(p, &[designated(&regs[p])?], &projs, rng)?;
        net.send(p, 0, Payload::Classical(vec![k as u64]))?;
    }
    for _ in 1..parties {
        reported.push(net.receive(0)?[0] as usize);
    }
    let k = match reported.first() {
        Some(&k) if reported.iter().all(|&x| x == k) => k,
        Some(_) => return Ok(0.0),
        None => return Ok(1.0),
    };
    let basis = basis_from_seed(seed, d);
    let v = basis.column(k);
    Ok(net.expectation(0, &[designated(&regs[0])?], &(v * v.adjoint()))?.re)
}

fn gather_all(net: &mut Network, parties: usize, per_party: [usize; 2], rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    (0..parties).map(|p| gather(net, p, per_party, rng)).collect()
}

/// LOCC stand-in for a cross-party swap test: a shared Haar-random basis is
/// fixed by a classical seed, every party measures its last register in it
/// and party 0 accepts on agreement.
#[derive(Debug, Clone, Copy)]
pub struct RandomBasisCompare {
    pub parties: usize,
    pub per_party: [usize; 2],
}

impl Distinguisher for RandomBasisCompare {
    fn name(&self) -> String {
        "random-basis-compare".into()
    }

    fn parties(&self) -> usize {
        self.parties
    }

    fn budgets(&self) -> (usize, usize) {
        (self.parties * self.per_party[0], self.parties * self.per_party[1])
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        let regs = gather_all(net, self.parties, self.per_party, rng)?;
        compare_in_shared_basis(net, &regs, |s, d| sample_unitary(d, &mut rng_for(s, 0)), rng)
    }
}

/// Every party measures how many of its registers are not the flag; party 0
/// accepts iff all counts agree.
#[derive(Debug, Clone, Copy)]
pub struct CountingCompare {
    pub parties: usize,
    pub per_party: [usize; 2],
}

impl Distinguisher for CountingCompare {
    fn name(&self) -> String {
        "counting-compare".into()
    }

    fn parties(&self) -> usize {
        self.parties
    }

    fn budgets(&self) -> (usize, usize) {
        (self.parties * self.per_party[0], self.parties * self.per_party[1])
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        let regs = gather_all(net, self.parties, self.per_party, rng)?;
        let d = net.register_dim(0, 2).or_else(|_| net.register_dim(0, 1))?;
        let mut counts = Vec::with_capacity(self.parties - 1);
        for (p, r) in regs.iter().enumerate().skip(1) {
            let projs: Vec<CMat> = (0..=r.len()).map(|c| counting_projector(d, r.len(), c)).collect();
            let k = net.measure(p, r, &projs, rng)?;
            net.send(p, 0, Payload::Classical(vec![k as u64]))?;
        }
        for _ in 1..self.parties {
            counts.push(net.receive(0)?[0] as usize);
        }
        let k = match counts.first() {
            Some(&k) if counts.iter().all(|&x| x == k) => k,
            Some(_) => return Ok(0.0),
            None => return Ok(1.0),
        };
        if k > regs[0].len() {
            return Ok(0.0);
        }
        Ok(net.expectation(0, &regs[0], &counting_projector(d, regs[0].len(), k))?.re)
    }
}

/// The qudit Clifford generators on `d` levels: Fourier, phase, shift and
/// clock.
pub fn clifford_generators(d: usize) -> [CMat; 4] {
    let w = |x: f64| C64::from_polar(1.0, 2.0 * PI * x / d as f64);
    let f = CMat::from_fn(d, d, |j, k| w((j * k % d) as f64) / (d as f64).sqrt());
    // τ = e^{iπ/d}, P|j⟩ = τ^{j(j+d)}|j⟩.
    let p = CMat::from_fn(d, d, |j, k| if j == k { C64::from_polar(1.0, PI * (j * (j + d)) as f64 / d as f64) } else { C64::new(0.0, 0.0) });
    let x = CMat::from_fn(d, d, |j, k| if j == (k + 1) % d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let z = CMat::from_fn(d, d, |j, k| if j == k { w(j as f64) } else { C64::new(0.0, 0.0) });
    [f, p, x, z]
}

/// A random word of `len` Clifford generators drawn from `rng`.
pub fn random_clifford(d: usize, len: usize, rng: &mut Rng) -> CMat {
    let gens = clifford_generators(d);
    let mut u = CMat::identity(d, d);
    for _ in 0..len {
        u = &gens[rng.random_range(0..4)] * u;
    }
    u
}

/// Like [`RandomBasisCompare`] with the shared basis replaced by a random
/// local Clifford `C` followed by a computational-basis measurement.
#[derive(Debug, Clone, Copy)]
pub struct RandomCliffordCompare {
    pub parties: usize,
    pub per_party: [usize; 2],
    pub word_len: usize,
}

impl Distinguisher for RandomCliffordCompare {
    fn name(&self) -> String {
        "random-clifford-compare".into()
    }

    fn parties(&self) -> usize {
        self.parties
    }

    fn budgets(&self) -> (usize, usize) {
        (self.parties * self.per_party[0], self.parties * self.per_party[1])
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        let regs = gather_all(net, self.parties, self.per_party, rng)?;
        let len = self.word_len;
        // Measuring C|ψ⟩ in the computational basis is measuring |ψ⟩ in the
        // columns of C†.
        compare_in_shared_basis(net, &regs, |s, d| random_clifford(d, len, &mut rng_for(s, 0)).adjoint(), rng)
    }
}

/// A seeded one-way strategy: party 1 measures all its registers in a random
/// basis and sends the outcome k; party 0 measures in a random basis chosen
/// by k and accepts on a random outcome set A_k.
/// Largest local space a one-way strategy draws a Haar basis for.
pub const ONE_WAY_DIM_LIMIT: usize = 1 << 10;

#[derive(Debug, Clone)]
pub struct RandomOneWay {
    pub seed: u64,
    pub per_party: [usize; 2],
    sender_basis: Vec<CMat>,
    receiver_accept: Vec<CMat>,
}

impl RandomOneWay {
    /// `d` is the register dimension; both parties hold `per_party`
    /// registers.
    pub fn new(seed: u64, per_party: [usize; 2], d: usize) -> Result<Self> {
        let k = per_party[0] + per_party[1];
        let dim = d
            .checked_pow(k as u32)
            .filter(|&x| x <= ONE_WAY_DIM_LIMIT)
            .ok_or(Error::DimensionOverflow { dim: d.saturating_pow(k as u32), limit: ONE_WAY_DIM_LIMIT })?;
        let sender_basis = column_projectors(&sample_unitary(dim, &mut rng_for(seed, 0)));
        let receiver_accept = (0..dim)
            .map(|k| {
                let mut r = rng_for(seed, 1 + k as u64);
                let projs = column_projectors(&sample_unitary(dim, &mut r));
                let mut acc = CMat::zeros(dim, dim);
                for p in projs {
                    if r.random::<bool>() {
                        acc += p;
                    }
                }
                acc
            })
            .collect();
        Ok(Self { seed, per_party, sender_basis, receiver_accept })
    }
}

impl Distinguisher for RandomOneWay {
    fn name(&self) -> String {
        format!("random-one-way[{}]", self.seed)
    }

    fn parties(&self) -> usize {
        2
    }

    fn budgets(&self) -> (usize, usize) {
        (2 * self.per_party[0], 2 * self.per_party[1])
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        let regs = gather_all(net, 2, self.per_party, rng)?;
        let k = net.measure(1, &regs[1], &self.sender_basis, rng)?;
        net.send(1, 0, Payload::Classical(vec![k as u64]))?;
        let k = net.receive(0)?[0] as usize;
        Ok(net.expectation(0, &regs[0], &self.receiver_accept[k])?.re)
    }
}

/// A genuine swap test between the last registers of parties 0 and 1. Not
/// LOCC: the network is fused first so party 0 acts on both registers.
#[derive(Debug, Clone, Copy)]
pub struct SwapTestAll {
    pub parties: usize,
    pub per_party: [usize; 2],
}

impl Distinguisher for SwapTestAll {
    fn name(&self) -> String {
        "fused-swap-test".into()
    }

    fn parties(&self) -> usize {
        self.parties
    }

    fn budgets(&self) -> (usize, usize) {
        (self.parties * self.per_party[0], self.parties * self.per_party[1])
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        if self.parties < 2 {
            return Err(Error::InvalidArgument("a cross-party swap test needs two parties".into()));
        }
        let regs = gather_all(net, self.parties, self.per_party, rng)?;
        net.fuse();
        let d = net.register_dim(0, 2).or_else(|_| net.register_dim(0, 1))?;
        let pair = [designated(&regs[0])?, designated(&regs[1])?];
        Ok(0.5 * (1.0 + net.expectation(0, &pair, &swap_operator(d))?.re))
    }
}

/// The single-party counterpart of the cross-party compare.
pub fn fused_swap_test(parties: usize, per_party: [usize; 2]) -> SwapTestAll {
    SwapTestAll { parties, per_party }
}

/// The fixed LOCC suite (random-basis compare, counting compare,
/// random-Clifford compare) followed by `one_way` seeded one-way strategies
/// (two parties).
pub fn locc_suite(parties: usize, per_party: [usize; 2], d: usize, one_way: usize, seed: u64) -> Result<Vec<Arc<dyn Distinguisher>>> {
    let mut out: Vec<Arc<dyn Distinguisher>> = vec![
        Arc::new(RandomBasisCompare { parties, per_party }),
        Arc::new(CountingCompare { parties, per_party }),
        Arc::new(RandomCliffordCompare { parties, per_party, word_len: 4 * d }),
    ];
    for i in 0..one_way {
        out.push(Arc::new(RandomOneWay::new(seed.wrapping_add(i as u64), per_party, d)?));
    }
    Ok(out)
}

/// Which Rep blocks a sampled main-theorem state uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RepBlocks {
    /// One Rep state over B₁B₂ with c ~ B(b₁+b₂, 1/2): a sample of ρ.
    Joint,
    /// Independent Rep states on B₁ and B₂: a sample of σ.
    Split,
}

/// A prepared two-party world whose Haar average is ρ or σ of the main
/// theorem. Party 0 holds A₁ then B₁, party 1 holds A₂ then B₂.
pub fn mainthm_world(params: KeyLemmaParams, blocks: RepBlocks) -> World {
    let name = format!("{blocks:?} a=({},{}) b=({},{}) N={}", params.a1, params.a2, params.b1, params.b2, params.n_dim);
    World::prepared(name, move |rng| {
        let KeyLemmaParams { a1, a2, b1, b2, n_dim } = params;
        let e = embed(&sample_haar_dim(n_dim, rng));
        let p = SparseVec::from_dense(e.state().amps());
        let mut v = SparseVec::basis(1, 0);
        for _ in 0..a1 + a2 {
            v = v.tensor(&p);
        }
        match blocks {
            RepBlocks::Joint => {
                let c = sample_binomial(b1 + b2, rng).c;
                v = v.tensor(&rep_state_sparse(b1 + b2, c, &e)?);
            }
            RepBlocks::Split => {
                let c1 = sample_binomial(b1, rng).c;
                let c2 = sample_binomial(b2, rng).c;
                v = v.tensor(&rep_state_sparse(b1, c1, &e)?).tensor(&rep_state_sparse(b2, c2, &e)?);
            }
        }
        let mut owner = vec![0; a1];
        owner.extend(vec![1; a2]);
        owner.extend(vec![0; b1]);
        owner.extend(vec![1; b2]);
        let dims = vec![n_dim + 1; owner.len()];
        Ok((PureState::new(v.to_dense())?, dims, owner))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LoccExperimentRow {
    pub distinguisher: String,
    /// False for the fused single-party distinguisher.
    pub locc: bool,
    pub real_rate: f64,
    pub ideal_rate: f64,
    pub advantage: f64,
    pub stderr: f64,
    /// Σ_i ½‖Hyb_i^Γ − Hyb_{i+1}^Γ‖₁ over the hybrid chain plus ℓ·T₁·2^{-n}.
    pub envelope: f64,
}

impl LoccExperimentRow {
    fn new(name: String, locc: bool, est: AdvantageEstimate, envelope: f64) -> Self {
        Self {
            distinguisher: name,
            locc,
            real_rate: est.real.mean(),
            ideal_rate: est.ideal.mean(),
            advantage: est.advantage(),
            stderr: est.stderr(),
            envelope,
        }
    }

    /// advantage ≤ envelope + `sigmas`·stderr.
    pub fn within(&self, sigmas: f64) -> bool {
        self.advantage <= self.envelope + sigmas * self.stderr
    }
}

/// Reported envelope for `parties` parties each making `t1` and `t2` queries
/// with a Haar state on n qubits.
pub fn locc_envelope(parties: usize, n: usize, t1: usize, t2: usize) -> Result<f64> {
    let n_dim = 1usize << n;
    let report = hybrid_chain_check(&vec![t1; parties], &vec![t2; parties], n_dim)?;
    let ppt: f64 = report.steps.iter().map(|s| s.ppt_step_cut).sum();
    Ok(ppt + (parties * t1) as f64 * 0.5f64.powi(n as i32))
}

/// Real world: each party holds (CHRS, its own Rep-state construction for
/// `t2` copies). Ideal world: each party holds (its own postselection
/// simulator with n attempts, CHRS−). Runs the LOCC suite and the fused swap
/// test with `t1`, `t2` queries per party.
pub fn locc_indiff_experiment(parties: usize, n: usize, t1: usize, t2: usize, trials: u64, seed: u64) -> Result<Vec<LoccExperimentRow>> {
    if t2 == 0 {
        return Err(Error::InvalidArgument("the compare distinguishers need a slot-2 query per party".into()));
    }
    let dist = StateDistribution::haar(n);
    let real = World::locc_real(dist.clone(), t2);
    let ideal = World::locc_ideal(dist, n);
    let envelope = locc_envelope(parties, n, t1, t2)?;
    let per_party = [t1, t2];
    let d = (1usize << n) + 1;
    let mut rows = Vec::new();
    for dist in locc_suite(parties, per_party, d, 0, seed)? {
        let est = indiff_advantage(&real, &ideal, dist.as_ref(), trials, seed)?;
        rows.push(LoccExperimentRow::new(dist.name(), true, est, envelope));
    }
    let fused = fused_swap_test(parties, per_party);
    let est = indiff_advantage(&real, &ideal, &fused, trials, seed)?;
    rows.push(LoccExperimentRow::new(fused.name(), false, est, envelope));
    Ok(rows)
}

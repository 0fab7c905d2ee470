//! Oracle games at desk scale: distinguishers with query budgets, real and
//! ideal worlds, the indifferentiability advantage, adversary/simulator
//! composition, an LOCC network that only lets classical data cross parties,
//! the PPT bound with exact Key Lemma and hybrid states, and the key-exchange
//! games.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use serde::Serialize;

use crate::constructions::{chrs_from_chrsm_into, chrsm_from_controlled_swap, SimChrsState};
use crate::error::{Error, Result};
use crate::hilbert::{CMat, PureState, RegisterLayout, Rng, StateVector, C64};
use crate::oracles::{flag, OracleKind, OracleModel, StateDistribution};
use crate::stats::{run_trials, AdvantageEstimate, Rate};

mod ke;
mod locc;
mod states;

pub use ke::{ke_game_run, ke_session, EchoKe, KeAdversary, KeGame, KeProtocol, KeSession, MajorityGuess};
pub use locc::{
    clifford_generators, fused_swap_test, locc_envelope, locc_indiff_experiment, locc_suite, mainthm_world, random_clifford, CountingCompare, LoccExperimentRow,
    RandomBasisCompare, RandomCliffordCompare, RandomOneWay, RepBlocks, SwapTestAll,
};
pub use states::{
    counting_channel, counting_distribution, counting_measurement, counting_projector, hyb_lemma_state,
    hybrid_chain_check, key_lemma_states, mainthm_states, ppt_bound, ppt_bound_dense, verify_hyb_lemma,
    verify_key_lemma, CountingOutcome, HybridChainReport, HybridStep, KeyLemmaParams, KeyLemmaReport,
    SPARSE_DIM_LIMIT,
};

/// What a caller sees when it queries an oracle handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interface {
    Oracle(OracleKind),
    /// Hands out pre-placed registers of a prepared joint state.
    Register,
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interface::Oracle(k) => write!(f, "{k}"),
            Interface::Register => f.write_str("register"),
        }
    }
}

fn misuse(iface: Interface, what: &str) -> Error {
    Error::WrongOracle { expected: what.into(), got: iface.to_string() }
}

/// One oracle slot of one party. Answers are written into the shared
/// workspace.
pub trait Oracle: Send {
    fn interface(&self) -> Interface;

    /// N + 1.
    fn register_dim(&self) -> usize;

    /// State query: appends the answer and returns its register. Other
    /// registers appended along the way stay with the oracle.
    fn query(&mut self, _ws: &mut StateVector, _rng: &mut Rng) -> Result<usize> {
        Err(misuse(self.interface(), "a state oracle"))
    }

    /// Unitary query on `reg`, optionally controlled on `(register, digit)`.
    fn apply(&mut self, _ws: &mut StateVector, _reg: usize, _control: Option<(usize, usize)>) -> Result<()> {
        Err(misuse(self.interface(), "a unitary oracle"))
    }

    /// Queries made to the primitive at the bottom of this handle.
    fn primitive_queries(&self) -> usize;
}

/// A primitive oracle used directly.
pub struct Primitive(pub OracleModel);

impl Oracle for Primitive {
    fn interface(&self) -> Interface {
        Interface::Oracle(self.0.kind())
    }

    fn register_dim(&self) -> usize {
        self.0.register_dim()
    }

    fn query(&mut self, ws: &mut StateVector, _rng: &mut Rng) -> Result<usize> {
        self.0.query_into(ws)
    }

    fn apply(&mut self, ws: &mut StateVector, reg: usize, control: Option<(usize, usize)>) -> Result<()> {
        match control {
            None => self.0.apply_swap(ws, reg),
            Some((q, v)) => self.0.apply_controlled_swap(ws, q, v, reg),
        }
    }

    fn primitive_queries(&self) -> usize {
        self.0.queries()
    }
}

/// CHRS from CHRS− by postselection with `m` attempts. ⊥ is answered with a
/// flag register, which is orthogonal to every successful answer.
pub struct Postselected {
    model: OracleModel,
    m: usize,
}

impl Postselected {
    pub fn new(model: OracleModel, m: usize) -> Result<Self> {
        if model.kind() != OracleKind::ChrsMinus {
            return Err(Error::WrongOracle { expected: "CHRS-".into(), got: model.kind().to_string() });
        }
        Ok(Self { model, m })
    }
}

impl Oracle for Postselected {
    fn interface(&self) -> Interface {
        Interface::Oracle(OracleKind::Chrs)
    }

    fn register_dim(&self) -> usize {
        self.model.register_dim()
    }

    fn query(&mut self, ws: &mut StateVector, rng: &mut Rng) -> Result<usize> {
        match chrs_from_chrsm_into(&mut self.model, ws, self.m, rng)? {
            Some(r) => Ok(r),
            None => Ok(ws.append(&flag(self.model.register_dim() - 1))),
        }
    }

    fn primitive_queries(&self) -> usize {
        self.model.queries()
    }
}

/// CHRS− from CHRS via the binomial Rep-state simulator. The `A` registers
/// are placed in the workspace on the first query and released one per
/// query.
pub struct RepSimulated {
    sim: SimChrsState,
    model: OracleModel,
    a_state: Option<PureState>,
    base: Option<usize>,
}

impl RepSimulated {
    pub fn new(t_sim: usize, mut model: OracleModel, rng: &mut Rng) -> Result<Self> {
        let sim = SimChrsState::init(t_sim, &mut model, rng)?;
        let a = sim.a_registers()?;
        let dim = a.layout().total_dim();
        if dim > states::SPARSE_DIM_LIMIT {
            return Err(Error::DimensionOverflow { dim, limit: states::SPARSE_DIM_LIMIT });
        }
        let a_state = PureState::new(a.vec().to_dense())?;
        Ok(Self { sim, model, a_state: Some(a_state), base: None })
    }

    pub fn count(&self) -> usize {
        self.sim.count()
    }
}

impl Oracle for RepSimulated {
    fn interface(&self) -> Interface {
        Interface::Oracle(OracleKind::ChrsMinus)
    }

    fn register_dim(&self) -> usize {
        self.model.register_dim()
    }

    fn query(&mut self, ws: &mut StateVector, _rng: &mut Rng) -> Result<usize> {
        let i = self.sim.next_query();
        let a = self.sim.query(i)?;
        let base = match self.base {
            Some(b) => b,
            None => {
                let s = self.a_state.take().expect("placed once");
                let dims = vec![self.model.register_dim(); self.sim.t_sim()];
                let regs = ws.append_registers(&s, &dims)?;
                self.base = Some(regs[0]);
                regs[0]
            }
        };
        Ok(base + a)
    }

    fn primitive_queries(&self) -> usize {
        self.model.queries()
    }
}

/// Hands out fixed registers of the initial workspace, in order.
pub struct Held {
    regs: Vec<usize>,
    next: usize,
    dim: usize,
}

impl Held {
    pub fn new(regs: Vec<usize>, dim: usize) -> Self {
        Self { regs, next: 0, dim }
    }
}

impl Oracle for Held {
    fn interface(&self) -> Interface {
        Interface::Register
    }

    fn register_dim(&self) -> usize {
        self.dim
    }

    fn query(&mut self, _ws: &mut StateVector, _rng: &mut Rng) -> Result<usize> {
        let r = *self.regs.get(self.next).ok_or(Error::QueryIndex { index: self.next + 1, budget: self.regs.len() })?;
        self.next += 1;
        Ok(r)
    }

    fn primitive_queries(&self) -> usize {
        self.next
    }
}

/// Placeholder left behind while a slot is being rewrapped.
struct Vacant;

impl Oracle for Vacant {
    fn interface(&self) -> Interface {
        Interface::Register
    }

    fn register_dim(&self) -> usize {
        0
    }

    fn primitive_queries(&self) -> usize {
        0
    }
}

/// A stateless simulator answering one interface using another.
pub trait Simulator: Send + Sync {
    fn requires(&self) -> OracleKind;
    fn provides(&self) -> OracleKind;
    /// Queries to the underlying oracle per answer.
    fn cost(&self) -> usize;
    fn answer(&self, under: &mut dyn Oracle, ws: &mut StateVector, rng: &mut Rng) -> Result<usize>;
}

/// Forwards each query unchanged.
pub struct Passthrough(pub OracleKind);

impl Simulator for Passthrough {
    fn requires(&self) -> OracleKind {
        self.0
    }

    fn provides(&self) -> OracleKind {
        self.0
    }

    fn cost(&self) -> usize {
        1
    }

    fn answer(&self, under: &mut dyn Oracle, ws: &mut StateVector, rng: &mut Rng) -> Result<usize> {
        under.query(ws, rng)
    }
}

/// Exact CHRS− from one controlled Swap query.
pub struct SwapToMinus;

impl Simulator for SwapToMinus {
    fn requires(&self) -> OracleKind {
        OracleKind::Swap
    }

    fn provides(&self) -> OracleKind {
        OracleKind::ChrsMinus
    }

    fn cost(&self) -> usize {
        1
    }

    fn answer(&self, under: &mut dyn Oracle, ws: &mut StateVector, _rng: &mut Rng) -> Result<usize> {
        let d = under.register_dim();
        chrsm_from_controlled_swap(|sv, q, r| under.apply(sv, r, Some((q, 1))), d, ws)
    }
}

/// An oracle answered by a simulator running on another oracle. Each answer
/// may spend at most `sim.cost()` underlying queries.
pub struct Simulated {
    sim: Arc<dyn Simulator>,
    under: Box<dyn Oracle>,
}

impl Simulated {
    pub fn new(sim: Arc<dyn Simulator>, under: Box<dyn Oracle>) -> Result<Self> {
        let want = Interface::Oracle(sim.requires());
        if under.interface() != want {
            return Err(Error::WrongOracle { expected: want.to_string(), got: under.interface().to_string() });
        }
        Ok(Self { sim, under })
    }
}

impl Oracle for Simulated {
    fn interface(&self) -> Interface {
        Interface::Oracle(self.sim.provides())
    }

    fn register_dim(&self) -> usize {
        self.under.register_dim()
    }

    fn query(&mut self, ws: &mut StateVector, rng: &mut Rng) -> Result<usize> {
        let before = self.under.primitive_queries();
        let r = self.sim.answer(self.under.as_mut(), ws, rng)?;
        if self.under.primitive_queries() - before > self.sim.cost() {
            return Err(Error::BudgetExceeded { oracle: 1, budget: self.sim.cost() });
        }
        Ok(r)
    }

    fn primitive_queries(&self) -> usize {
        self.under.primitive_queries()
    }
}

/// A classical message between parties. Registers never travel.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Classical(Vec<u64>),
    /// Rejected by [`Network::send`].
    Quantum(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub payload: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    /// 1 or 2.
    pub slot: usize,
    pub register: usize,
}

/// Classical messages in send order plus each party's local query log.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoccTranscript {
    pub messages: Vec<Message>,
    pub queries: Vec<Vec<QueryRecord>>,
}

/// A freshly initialized world: the workspace (possibly holding a prepared
/// joint state) and each party's two oracle slots.
pub struct WorldInstance {
    pub ws: StateVector,
    pub parties: Vec<[Box<dyn Oracle>; 2]>,
}

type Builder = dyn Fn(usize, &mut Rng) -> Result<WorldInstance> + Send + Sync;

/// A recipe for one side of a game: given the party count and the trial's
/// generator it samples the hidden state and instantiates every slot.
#[derive(Clone)]
pub struct World {
    name: String,
    build: Arc<Builder>,
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World").field("name", &self.name).finish()
    }
}

impl World {
    pub fn new(name: impl Into<String>, build: impl Fn(usize, &mut Rng) -> Result<WorldInstance> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), build: Arc::new(build) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instantiate(&self, parties: usize, rng: &mut Rng) -> Result<WorldInstance> {
        (self.build)(parties, rng)
    }

    /// Every party gets the primitives `(k1, k2)` over one shared hidden state.
    pub fn primitives(dist: StateDistribution, k1: OracleKind, k2: OracleKind) -> Self {
        World::new(format!("({k1}, {k2})"), move |parties, rng| {
            let base = OracleModel::sample(k1, &dist, rng);
            let slots = (0..parties)
                .map(|_| [Box::new(Primitive(base.sibling(k1))) as Box<dyn Oracle>, Box::new(Primitive(base.sibling(k2)))])
                .collect();
            Ok(WorldInstance { ws: StateVector::empty(), parties: slots })
        })
    }

    /// `(CHRS−, C^{CHRS−})` with the postselection construction, `m` attempts.
    pub fn postselection_real(dist: StateDistribution, m: usize) -> Self {
        World::new(format!("(CHRS-, Post_m={m})"), move |parties, rng| {
            let base = OracleModel::sample(OracleKind::ChrsMinus, &dist, rng);
            let slots = (0..parties)
                .map(|_| -> Result<[Box<dyn Oracle>; 2]> {
                    Ok([Box::new(Primitive(base.sibling(OracleKind::ChrsMinus))), Box::new(Postselected::new(base.sibling(OracleKind::ChrsMinus), m)?)])
                })
                .collect::<Result<_>>()?;
            Ok(WorldInstance { ws: StateVector::empty(), parties: slots })
        })
    }

    /// `(Sim^{CHRS}, CHRS)` with the Rep-state simulator for `t_sim` queries.
    pub fn rep_sim_ideal(dist: StateDistribution, t_sim: usize) -> Self {
        World::new(format!("(RepSim_T={t_sim}, CHRS)"), move |parties, rng| {
            let base = OracleModel::sample(OracleKind::Chrs, &dist, rng);
            let slots = (0..parties)
                .map(|_| -> Result<[Box<dyn Oracle>; 2]> {
                    Ok([Box::new(RepSimulated::new(t_sim, base.sibling(OracleKind::Chrs), rng)?), Box::new(Primitive(base.sibling(OracleKind::Chrs)))])
                })
                .collect::<Result<_>>()?;
            Ok(WorldInstance { ws: StateVector::empty(), parties: slots })
        })
    }

    /// LOCC real world: each party gets `(CHRS, C_i^{CHRS})` with its own
    /// Rep-state construction for `t` copies.
    pub fn locc_real(dist: StateDistribution, t: usize) -> Self {
        World::new(format!("(CHRS, RepSim_t={t}) per party"), move |parties, rng| {
            let base = OracleModel::sample(OracleKind::Chrs, &dist, rng);
            let slots = (0..parties)
                .map(|_| -> Result<[Box<dyn Oracle>; 2]> {
                    Ok([Box::new(Primitive(base.sibling(OracleKind::Chrs))), Box::new(RepSimulated::new(t, base.sibling(OracleKind::Chrs), rng)?)])
                })
                .collect::<Result<_>>()?;
            Ok(WorldInstance { ws: StateVector::empty(), parties: slots })
        })
    }

    /// LOCC ideal world: each party gets `(Sim_i^{CHRS−}, CHRS−)` with its
    /// own postselection simulator, `m` attempts.
    pub fn locc_ideal(dist: StateDistribution, m: usize) -> Self {
        World::new(format!("(Post_m={m}, CHRS-) per party"), move |parties, rng| {
            let base = OracleModel::sample(OracleKind::ChrsMinus, &dist, rng);
            let slots = (0..parties)
                .map(|_| -> Result<[Box<dyn Oracle>; 2]> {
                    Ok([Box::new(Postselected::new(base.sibling(OracleKind::ChrsMinus), m)?), Box::new(Primitive(base.sibling(OracleKind::ChrsMinus)))])
                })
                .collect::<Result<_>>()?;
            Ok(WorldInstance { ws: StateVector::empty(), parties: slots })
        })
    }

    /// A prepared joint state: `sample` returns the pure state, its register
    /// dimensions and the owning party of each register. Party `p` receives
    /// its registers through slot 1, in order.
    pub fn prepared(
        name: impl Into<String>,
        sample: impl Fn(&mut Rng) -> Result<(PureState, Vec<usize>, Vec<usize>)> + Send + Sync + 'static,
    ) -> Self {
        World::new(name, move |parties, rng| {
            let (state, dims, owner) = sample(rng)?;
            if owner.len() != dims.len() || owner.iter().any(|&p| p >= parties) {
                return Err(Error::LayoutMismatch("register owners do not match the party count".into()));
            }
            let ws = StateVector::new(RegisterLayout::new(dims.clone())?, state.into_amps())?;
            let slots = (0..parties)
                .map(|p| {
                    let regs: Vec<usize> = (0..dims.len()).filter(|&r| owner[r] == p).collect();
                    let d = regs.first().map_or(0, |&r| dims[r]);
                    [Box::new(Held::new(regs, d)) as Box<dyn Oracle>, Box::new(Held::new(vec![], d))]
                })
                .collect();
            Ok(WorldInstance { ws, parties: slots })
        })
    }
}

/// The shared workspace as seen by the parties of one run. Every register
/// is owned by at most one party; parties act only on their own registers and
/// talk only through classical messages. Query budgets are totals across
/// parties.
pub struct Network {
    ws: StateVector,
    owner: Vec<Option<usize>>,
    slots: Vec<[Box<dyn Oracle>; 2]>,
    budgets: [usize; 2],
    used: [usize; 2],
    transcript: LoccTranscript,
    inbox: Vec<VecDeque<Vec<u64>>>,
    fused: bool,
}

impl Network {
    pub fn new(instance: WorldInstance, budgets: (usize, usize)) -> Result<Self> {
        let n = instance.parties.len();
        if n == 0 {
            return Err(Error::InvalidArgument("at least one party".into()));
        }
        Ok(Self {
            owner: vec![None; instance.ws.num_registers()],
            ws: instance.ws,
            slots: instance.parties,
            budgets: [budgets.0, budgets.1],
            used: [0, 0],
            transcript: LoccTranscript { messages: vec![], queries: vec![vec![]; n] },
            inbox: vec![VecDeque::new(); n],
            fused: false,
        })
    }

    pub fn parties(&self) -> usize {
        self.slots.len()
    }

    pub fn register_dim(&self, party: usize, slot: usize) -> Result<usize> {
        Ok(self.slot(party, slot)?.register_dim())
    }

    pub fn interface(&self, party: usize, slot: usize) -> Result<Interface> {
        Ok(self.slot(party, slot)?.interface())
    }

    fn slot(&self, party: usize, slot: usize) -> Result<&dyn Oracle> {
        self.check_party(party)?;
        match slot {
            1 | 2 => Ok(self.slots[party][slot - 1].as_ref()),
            _ => Err(Error::InvalidArgument(format!("oracle slot {slot} (expected 1 or 2)"))),
        }
    }

    fn check_party(&self, party: usize) -> Result<()> {
        if party >= self.slots.len() {
            return Err(Error::InvalidArgument(format!("party {party} of {}", self.slots.len())));
        }
        Ok(())
    }

    fn charge(&mut self, slot: usize) -> Result<()> {
        let k = slot - 1;
        if self.used[k] >= self.budgets[k] {
            return Err(Error::BudgetExceeded { oracle: slot, budget: self.budgets[k] });
        }
        self.used[k] += 1;
        Ok(())
    }

    fn sync_owners(&mut self) {
        self.owner.resize(self.ws.num_registers(), None);
    }

    fn check_owner(&self, party: usize, regs: &[usize]) -> Result<()> {
        for &r in regs {
            let held = match self.owner.get(r).copied().flatten() {
                Some(p) => p == party || self.fused,
                None => false,
            };
            if !held {
                return Err(Error::InvalidArgument(format!("party {party} does not hold register {r}")));
            }
        }
        Ok(())
    }

    /// A state query on `slot` (1 or 2) by `party`; returns the new register.
    pub fn query(&mut self, party: usize, slot: usize, rng: &mut Rng) -> Result<usize> {
        self.slot(party, slot)?;
        self.charge(slot)?;
        let r = self.slots[party][slot - 1].query(&mut self.ws, rng)?;
        self.sync_owners();
        if self.owner[r].is_some() {
            return Err(Error::InvalidArgument(format!("register {r} handed out twice")));
        }
        self.owner[r] = Some(party);
        self.transcript.queries[party].push(QueryRecord { slot, register: r });
        Ok(r)
    }

    /// A unitary query on one of `party`'s registers.
    pub fn apply_oracle(&mut self, party: usize, slot: usize, reg: usize, control: Option<(usize, usize)>) -> Result<()> {
        self.slot(party, slot)?;
        let mut regs = vec![reg];
        regs.extend(control.map(|c| c.0));
        self.check_owner(party, &regs)?;
        self.charge(slot)?;
        self.slots[party][slot - 1].apply(&mut self.ws, reg, control)?;
        self.transcript.queries[party].push(QueryRecord { slot, register: reg });
        Ok(())
    }

    /// Prepares a local register for `party`.
    pub fn prepare(&mut self, party: usize, s: &PureState) -> Result<usize> {
        self.check_party(party)?;
        let r = self.ws.append(s);
        self.sync_owners();
        self.owner[r] = Some(party);
        Ok(r)
    }

    pub fn apply(&mut self, party: usize, regs: &[usize], op: &CMat) -> Result<()> {
        self.check_owner(party, regs)?;
        self.ws.apply(regs, op)
    }

    pub fn expectation(&self, party: usize, regs: &[usize], op: &CMat) -> Result<C64> {
        self.check_owner(party, regs)?;
        self.ws.expectation(regs, op)
    }

    pub fn probabilities(&self, party: usize, regs: &[usize], projectors: &[CMat]) -> Result<Vec<f64>> {
        self.check_owner(party, regs)?;
        self.ws.probabilities(regs, projectors)
    }

    pub fn measure(&mut self, party: usize, regs: &[usize], projectors: &[CMat], rng: &mut Rng) -> Result<usize> {
        self.check_owner(party, regs)?;
        Ok(self.ws.measure(regs, projectors, rng)?.0)
    }

    /// Measures `party`'s newest register in the computational basis and
    /// removes it from the workspace. Only the last register may be
    /// discarded, so every other index stays valid; its index is reused by
    /// the next allocation.
    pub fn discard(&mut self, party: usize, reg: usize, rng: &mut Rng) -> Result<usize> {
        self.check_owner(party, &[reg])?;
        if reg + 1 != self.ws.num_registers() {
            return Err(Error::InvalidArgument(format!("register {reg} is not the newest")));
        }
        let d = self.ws.layout().dims()[reg];
        let projs: Vec<CMat> = (0..d).map(|x| PureState::basis(d, x).projector()).collect();
        let (x, _) = self.ws.measure(&[reg], &projs, rng)?;
        self.ws.remove_product(reg, &PureState::basis(d, x))?;
        self.owner.pop();
        Ok(x)
    }

    /// Sends a classical payload; a register payload is refused.
    pub fn send(&mut self, from: usize, to: usize, payload: Payload) -> Result<()> {
        self.check_party(from)?;
        self.check_party(to)?;
        match payload {
            Payload::Quantum(_) => Err(Error::QuantumMessage),
            Payload::Classical(v) => {
                self.transcript.messages.push(Message { from, to, payload: v.clone() });
                self.inbox[to].push_back(v);
                Ok(())
            }
        }
    }

    pub fn receive(&mut self, party: usize) -> Result<Vec<u64>> {
        self.check_party(party)?;
        self.inbox[party].pop_front().ok_or_else(|| Error::InvalidArgument(format!("party {party} has no pending message")))
    }

    /// Drops the LOCC restriction: from now on any party may act jointly on
    /// every handed-out register. Used to build the non-LOCC counterpart of a
    /// distinguisher.
    pub fn fuse(&mut self) {
        self.fused = true;
    }

    /// Queries charged so far on `slot`, across parties.
    pub fn queries_used(&self, slot: usize) -> usize {
        self.used[slot - 1]
    }

    /// Queries that reached the primitives behind `slot`, across parties.
    pub fn primitive_queries(&self, slot: usize) -> usize {
        self.slots.iter().map(|s| s[slot - 1].primitive_queries()).sum()
    }

    /// Replaces every party's oracle on `slot` by a simulator running on it.
    pub fn wrap_slot(&mut self, slot: usize, sim: &Arc<dyn Simulator>) -> Result<()> {
        self.slot(0, slot)?;
        for p in 0..self.slots.len() {
            let under = std::mem::replace(&mut self.slots[p][slot - 1], Box::new(Vacant));
            self.slots[p][slot - 1] = Box::new(Simulated::new(Arc::clone(sim), under)?);
        }
        Ok(())
    }

    /// Tightens the total budget on `slot`.
    pub fn limit_slot(&mut self, slot: usize, budget: usize) {
        self.budgets[slot - 1] = self.budgets[slot - 1].min(budget);
    }

    pub fn transcript(&self) -> &LoccTranscript {
        &self.transcript
    }

    pub fn into_transcript(self) -> LoccTranscript {
        self.transcript
    }
}

/// An oracle algorithm against a pair of oracles, possibly split into LOCC
/// parties. `run` returns the probability that party 0 outputs 1 given
/// everything sampled during the run; the harness draws the output bit.
pub trait Distinguisher: Send + Sync {
    fn name(&self) -> String;

    fn parties(&self) -> usize {
        1
    }

    /// Total query budgets `(T₁, T₂)` across parties.
    fn budgets(&self) -> (usize, usize);

    /// Interfaces this algorithm was written for; `None` accepts anything.
    fn expects(&self) -> [Option<OracleKind>; 2] {
        [None, None]
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64>;
}

/// Outcome of running one distinguisher against one world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldRun {
    pub rate: Rate,
    /// Mean of the per-trial output-1 probabilities.
    pub mean_probability: f64,
}

/// Runs `dist` against `world` for `trials` seeded trials (trial `i` uses
/// stream `stream_base + i`).
pub fn run_world(world: &World, dist: &dyn Distinguisher, trials: u64, seed: u64, stream_base: u64) -> Result<WorldRun> {
    let outs = run_trials(seed, stream_base, trials, |_, rng| -> Result<(bool, f64)> {
        let inst = world.instantiate(dist.parties(), rng)?;
        let mut net = Network::new(inst, dist.budgets())?;
        check_expected(&net, dist)?;
        let p = dist.run(&mut net, rng)?.clamp(0.0, 1.0);
        Ok((rng.random::<f64>() < p, p))
    });
    let outs: Vec<(bool, f64)> = outs.into_iter().collect::<Result<_>>()?;
    let bits: Vec<bool> = outs.iter().map(|o| o.0).collect();
    let mean = if outs.is_empty() { 0.0 } else { outs.iter().map(|o| o.1).sum::<f64>() / outs.len() as f64 };
    Ok(WorldRun { rate: Rate::from_outcomes(&bits), mean_probability: mean })
}

fn check_expected(net: &Network, dist: &dyn Distinguisher) -> Result<()> {
    for (k, want) in dist.expects().iter().enumerate() {
        if let Some(w) = want {
            for p in 0..net.parties() {
                let got = net.interface(p, k + 1)?;
                if got != Interface::Oracle(*w) {
                    return Err(Error::WrongOracle { expected: w.to_string(), got: got.to_string() });
                }
            }
        }
    }
    Ok(())
}

/// Runs one distinguisher on one freshly instantiated world and returns the
/// output bit with the transcript.
pub fn locc_run(world: &World, dist: &dyn Distinguisher, seed: u64) -> Result<(bool, LoccTranscript)> {
    let mut rng = crate::hilbert::rng_for(seed, 0);
    let inst = world.instantiate(dist.parties(), &mut rng)?;
    let mut net = Network::new(inst, dist.budgets())?;
    check_expected(&net, dist)?;
    let p = dist.run(&mut net, &mut rng)?.clamp(0.0, 1.0);
    Ok((rng.random::<f64>() < p, net.into_transcript()))
}

/// |Pr[real → 1] − Pr[ideal → 1]| estimated over `trials` runs per world.
/// Both worlds use the same trial streams, so exchanging them leaves the
/// estimate unchanged.
pub fn indiff_advantage(real: &World, ideal: &World, dist: &dyn Distinguisher, trials: u64, seed: u64) -> Result<AdvantageEstimate> {
    let r = run_world(real, dist, trials, seed, 0)?;
    let i = run_world(ideal, dist, trials, seed, 0)?;
    Ok(AdvantageEstimate { real: r.rate, ideal: i.rate })
}

/// An adversary whose slot-1 queries are answered by a simulator running on
/// the slot-1 oracle it is given.
pub struct Composed {
    adversary: Arc<dyn Distinguisher>,
    sim: Arc<dyn Simulator>,
}

impl Distinguisher for Composed {
    fn name(&self) -> String {
        format!("{} via simulator", self.adversary.name())
    }

    fn parties(&self) -> usize {
        self.adversary.parties()
    }

    fn budgets(&self) -> (usize, usize) {
        let (t1, t2) = self.adversary.budgets();
        (t1 * self.sim.cost(), t2)
    }

    fn expects(&self) -> [Option<OracleKind>; 2] {
        [Some(self.sim.requires()), self.adversary.expects()[1]]
    }

    fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
        net.wrap_slot(1, &self.sim)?;
        net.limit_slot(1, self.adversary.budgets().0);
        self.adversary.run(net, rng)
    }
}

/// Routes `adversary`'s first-oracle queries through `simulator`. The
/// composed budget on the first oracle is `T_A · T_Sim`.
pub fn compose_adversary(adversary: Arc<dyn Distinguisher>, simulator: Arc<dyn Simulator>) -> Result<Composed> {
    if let Some(k) = adversary.expects()[0] {
        if k != simulator.provides() {
            return Err(Error::WrongOracle { expected: k.to_string(), got: simulator.provides().to_string() });
        }
    }
    Ok(Composed { adversary, sim: simulator })
}

/// Projector onto the flag vector in dimension `d`.
pub(crate) fn flag_projector(d: usize) -> CMat {
    let mut p = CMat::zeros(d, d);
    p[(0, 0)] = C64::new(1.0, 0.0);
    p
}

/// The three fixed distinguishers for the CHRS-from-CHRS− game, plus the
/// reference swap test used against unbalanced distributions.
pub mod postselection_suite {
    use super::*;
    use crate::hilbert::{kron, swap_operator};
    use crate::oracles::embed;

    /// Queries slot 2 `t2` times and outputs 1 if any answer holds the flag.
    pub struct FlagCount {
        pub t2: usize,
    }

    impl Distinguisher for FlagCount {
        fn name(&self) -> String {
            "flag-count".into()
        }

        fn budgets(&self) -> (usize, usize) {
            (0, self.t2)
        }

        fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
            let d = net.register_dim(0, 2)?;
            let regs: Vec<usize> = (0..self.t2).map(|_| net.query(0, 2, rng)).collect::<Result<_>>()?;
            let none = CMat::identity(d, d) - flag_projector(d);
            let mut op = CMat::identity(1, 1);
            for _ in &regs {
                op = kron(&op, &none);
            }
            Ok(1.0 - net.expectation(0, &regs, &op)?.re)
        }
    }

    /// One query to each slot, then a swap test between the two answers.
    pub struct CrossSwap;

    impl Distinguisher for CrossSwap {
        fn name(&self) -> String {
            "cross-swap".into()
        }

        fn budgets(&self) -> (usize, usize) {
            (1, 1)
        }

        fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
            let d = net.register_dim(0, 1)?;
            let r1 = net.query(0, 1, rng)?;
            let r2 = net.query(0, 2, rng)?;
            let e = net.expectation(0, &[r1, r2], &swap_operator(d))?.re;
            Ok(0.5 * (1.0 + e))
        }
    }

    /// Queries slot 1 `t1` times, measures each answer in {flag, rest} and
    /// outputs the parity of the number of non-flag outcomes.
    pub struct FlagParity {
        pub t1: usize,
    }

    impl Distinguisher for FlagParity {
        fn name(&self) -> String {
            "flag-parity".into()
        }

        fn budgets(&self) -> (usize, usize) {
            (self.t1, 0)
        }

        fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
            let d = net.register_dim(0, 1)?;
            let regs: Vec<usize> = (0..self.t1).map(|_| net.query(0, 1, rng)).collect::<Result<_>>()?;
            // Z = 2·flag − I; ⟨⊗Z⟩ = Pr[even] − Pr[odd] non-flag count.
            let z = flag_projector(d) * C64::new(2.0, 0.0) - CMat::identity(d, d);
            let mut op = CMat::identity(1, 1);
            for _ in &regs {
                op = kron(&op, &z);
            }
            Ok(0.5 * (1.0 - net.expectation(0, &regs, &op)?.re))
        }
    }

    /// Swap test between one slot-1 answer and a locally prepared reference
    /// |φ−⟩ for a publicly known φ.
    pub struct ReferenceSwap {
        pub reference: PureState,
    }

    impl Distinguisher for ReferenceSwap {
        fn name(&self) -> String {
            "reference-swap".into()
        }

        fn budgets(&self) -> (usize, usize) {
            (1, 0)
        }

        fn run(&self, net: &mut Network, rng: &mut Rng) -> Result<f64> {
            let e = embed(&self.reference);
            let r1 = net.query(0, 1, rng)?;
            let r2 = net.prepare(0, &e.minus())?;
            let x = net.expectation(0, &[r1, r2], &swap_operator(e.dim()))?.re;
            Ok(0.5 * (1.0 + x))
        }
    }

    /// Outputs a fair coin without querying.
    pub struct Coin;

    impl Distinguisher for Coin {
        fn name(&self) -> String {
            "coin".into()
        }

        fn budgets(&self) -> (usize, usize) {
            (0, 0)
        }

        fn run(&self, _net: &mut Network, _rng: &mut Rng) -> Result<f64> {
            Ok(0.5)
        }
    }

    /// The fixed suite with budgets `(t1, t2)`.
    pub fn suite(t1: usize, t2: usize) -> Vec<Arc<dyn Distinguisher>> {
        vec![Arc::new(FlagCount { t2 }), Arc::new(CrossSwap), Arc::new(FlagParity { t1 })]
    }
}

#[cfg(test)]
mod tests;

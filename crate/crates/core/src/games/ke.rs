//! Key-exchange games over classical channels: party A is network party 0,
//! party B is party 1. The eavesdropper sees every classical message.

use rand::Rng as _;
use serde::Serialize;

use super::{LoccTranscript, Network, World};
use crate::error::{Error, Result};
use crate::hilbert::Rng;
use crate::stats::{run_trials, Rate};

/// Keys and transcript of one protocol execution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeSession {
    pub key_a: bool,
    pub key_b: bool,
    pub transcript: LoccTranscript,
}

/// A two-party protocol with classical messages only.
pub trait KeProtocol: Send + Sync {
    fn name(&self) -> String;

    /// Total query budgets `(T₁, T₂)` across both parties.
    fn budgets(&self) -> (usize, usize);

    /// Largest number of messages the protocol may send.
    fn max_rounds(&self) -> usize;

    /// Runs both parties and returns `(b_A, b_B)`.
    fn execute(&self, net: &mut Network, rng: &mut Rng) -> Result<(bool, bool)>;
}

/// An eavesdropper guessing A's key from the transcript.
pub trait KeAdversary: Send + Sync {
    fn name(&self) -> String;
    fn guess(&self, transcript: &LoccTranscript, rng: &mut Rng) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KeGame {
    /// Outputs 1 iff b_A ≠ b_B.
    Correctness,
    /// Outputs 1 iff the adversary's guess equals b_A.
    Security,
}

impl KeGame {
    /// The trivial success offset c the game output is measured against.
    pub fn offset(&self) -> f64 {
        match self {
            KeGame::Correctness => 0.0,
            KeGame::Security => 0.5,
        }
    }
}

/// Executes `protocol` once on a fresh instance of `world`.
pub fn ke_session(protocol: &dyn KeProtocol, world: &World, rng: &mut Rng) -> Result<KeSession> {
    let inst = world.instantiate(2, rng)?;
    let mut net = Network::new(inst, protocol.budgets())?;
    let (key_a, key_b) = protocol.execute(&mut net, rng)?;
    let transcript = net.into_transcript();
    if transcript.messages.len() > protocol.max_rounds() {
        return Err(Error::InvalidArgument(format!(
            "{} sent {} messages, bound {}",
            protocol.name(),
            transcript.messages.len(),
            protocol.max_rounds()
        )));
    }
    Ok(KeSession { key_a, key_b, transcript })
}

/// Rate at which `game` outputs 1 over `trials` seeded executions. The
/// security game needs an adversary.
pub fn ke_game_run(
    protocol: &dyn KeProtocol,
    game: KeGame,
    adversary: Option<&dyn KeAdversary>,
    world: &World,
    trials: u64,
    seed: u64,
) -> Result<Rate> {
    if game == KeGame::Security && adversary.is_none() {
        return Err(Error::InvalidArgument("the security game needs an adversary".into()));
    }
    let outs = run_trials(seed, 0, trials, |_, rng| -> Result<bool> {
        let s = ke_session(protocol, world, rng)?;
        Ok(match game {
            KeGame::Correctness => s.key_a != s.key_b,
            KeGame::Security => adversary.expect("checked").guess(&s.transcript, rng) == s.key_a,
        })
    });
    let bits: Vec<bool> = outs.into_iter().collect::<Result<_>>()?;
    Ok(Rate::from_outcomes(&bits))
}

/// A sends its constant key to B, who outputs it.
#[derive(Debug, Clone, Copy)]
pub struct EchoKe {
    pub bit: bool,
}

impl KeProtocol for EchoKe {
    fn name(&self) -> String {
        format!("echo[{}]", self.bit as u8)
    }

    fn budgets(&self) -> (usize, usize) {
        (0, 0)
    }

    fn max_rounds(&self) -> usize {
        1
    }

    fn execute(&self, net: &mut Network, _rng: &mut Rng) -> Result<(bool, bool)> {
        net.send(0, 1, super::Payload::Classical(vec![self.bit as u64]))?;
        let b = net.receive(1)?[0] != 0;
        Ok((self.bit, b))
    }
}

/// Guesses the majority low bit over all message words; a fair coin on ties.
#[derive(Debug, Clone, Copy)]
pub struct MajorityGuess;

impl KeAdversary for MajorityGuess {
    fn name(&self) -> String {
        "majority-guess".into()
    }

    fn guess(&self, transcript: &LoccTranscript, rng: &mut Rng) -> bool {
        let (mut ones, mut total) = (0usize, 0usize);
        for m in &transcript.messages {
            for w in &m.payload {
                ones += (w & 1) as usize;
                total += 1;
            }
        }
        match (2 * ones).cmp(&total) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng.random(),
        }
    }
}

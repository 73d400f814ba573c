//! Deterministic round-synchronous network simulator.
//!
//! Protocols in this crate are written as choreographies: one function drives
//! every party of an instance through its rounds, calling [`Network::send`]
//! and [`Network::broadcast`] for each message and [`Network::advance`] at
//! round boundaries. Within a round, honest parties' messages are produced
//! before corrupted ones, which gives a rushing adversary. The network records
//! traffic, per-party randomness and protocol events into a [`Transcript`].
//!
//! [`run_protocol`] executes explicit per-party state machines over the same
//! message types.

pub mod adversary;
pub mod message;
pub mod rng;
mod runner;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};

pub use adversary::{AdversaryError, AdversaryScript, ProductBlinding, Strategy};
pub use message::{Channel, Message, PartyId, Payload, SessionId};
pub use rng::{party_seed, DrawClass, Enumerator, ExternalSource, PartyRng, SharedSource, Tape};
pub use runner::{run_protocol, Outgoing, Party, SimError};

use crate::field::FieldElement;
use crate::structures::PlayerSet;

/// How much of a run is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    /// Every message and every random draw.
    Full,
    /// A running digest of the traffic only.
    Digest,
}

/// Publicly visible protocol events.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Event {
    Accusation {
        session: SessionId,
        accuser: PartyId,
        accused: PartyId,
    },
    Disqualified {
        session: SessionId,
        player: PartyId,
        reason: &'static str,
    },
    Removed {
        session: SessionId,
        player: PartyId,
    },
    /// A prover failed a product check and its row is computed in public.
    Excluded {
        player: PartyId,
    },
    /// A verifiable sharing was opened in public.
    Opened {
        value: FieldElement,
    },
    Restart {
        cheaters: PlayerSet,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Annotation {
    pub round: u64,
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub rounds: u64,
    pub private_messages: u64,
    pub broadcasts: u64,
    pub by_kind: BTreeMap<&'static str, u64>,
    /// Sub-protocol runs whose failure probability is bounded by `2^-k`.
    pub bounded_events: u64,
}

impl Stats {
    pub fn messages(&self) -> u64 {
        self.private_messages + self.broadcasts
    }

    pub fn merge(&mut self, other: &Stats) {
        self.rounds += other.rounds;
        self.private_messages += other.private_messages;
        self.broadcasts += other.broadcasts;
        self.bounded_events += other.bounded_events;
        for (k, v) in &other.by_kind {
            *self.by_kind.entry(k).or_insert(0) += v;
        }
    }
}

/// 64-bit FNV-1a, used for stable transcript digests.
#[derive(Clone)]
struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= *b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }
}

#[derive(Clone)]
pub struct Network {
    n: usize,
    round: u64,
    adversary: AdversaryScript,
    master_seed: u64,
    seeds: Vec<u64>,
    rngs: Vec<PartyRng>,
    recording: Recording,
    log: Vec<Message>,
    digest: Fnv,
    annotations: Vec<Annotation>,
    stats: Stats,
    next_session: SessionId,
    inputs: Vec<(PartyId, FieldElement)>,
    silenced: PlayerSet,
}

impl Network {
    pub fn new(n: usize, seed: u64, adversary: AdversaryScript) -> Self {
        let seeds: Vec<u64> = (0..n).map(|p| party_seed(seed, p)).collect();
        let rngs = seeds
            .iter()
            .enumerate()
            .map(|(p, s)| PartyRng::seeded(p, *s))
            .collect();
        Network {
            n,
            round: 0,
            adversary,
            master_seed: seed,
            seeds,
            rngs,
            recording: Recording::Digest,
            log: Vec::new(),
            digest: Fnv::default(),
            annotations: Vec::new(),
            stats: Stats::default(),
            next_session: 0,
            inputs: Vec::new(),
            silenced: PlayerSet::EMPTY,
        }
    }

    pub fn honest(n: usize, seed: u64) -> Self {
        Network::new(n, seed, AdversaryScript::honest())
    }

    /// Routes every party's draws through `source`.
    pub fn with_source(n: usize, source: SharedSource, adversary: AdversaryScript) -> Self {
        let mut net = Network::new(n, 0, adversary);
        net.rngs = (0..n)
            .map(|p| PartyRng::external(p, source.clone()))
            .collect();
        net
    }

    pub fn set_recording(&mut self, recording: Recording) {
        self.recording = recording;
        for r in &mut self.rngs {
            r.record_draws(recording == Recording::Full);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn adversary(&self) -> &AdversaryScript {
        &self.adversary
    }

    /// Swaps the adversary, e.g. on a forked copy of a run.
    pub fn set_adversary(&mut self, adversary: AdversaryScript) {
        self.adversary = adversary;
    }

    pub fn is_corrupt(&self, p: PartyId) -> bool {
        self.adversary.corrupt.contains(p)
    }

    /// Whether `p` deviates according to `strategy`.
    pub fn acts(&self, p: PartyId, strategy: Strategy) -> bool {
        self.adversary.acts(p, strategy)
    }

    pub fn silenced(&self) -> PlayerSet {
        self.silenced
    }

    /// Players that still take part in protocols.
    pub fn active(&self) -> PlayerSet {
        PlayerSet::full(self.n).difference(&self.silenced)
    }

    pub fn silence(&mut self, players: PlayerSet) {
        self.silenced = self.silenced.union(&players);
    }

    pub fn rng(&mut self, p: PartyId) -> &mut PartyRng {
        &mut self.rngs[p]
    }

    pub fn new_session(&mut self) -> SessionId {
        self.next_session += 1;
        self.next_session
    }

    /// Ends the current round.
    pub fn advance(&mut self) {
        self.round += 1;
        self.stats.rounds = self.round;
    }

    pub fn send(&mut self, from: PartyId, to: PartyId, payload: Payload) -> Payload {
        self.stats.private_messages += 1;
        self.record(from, Channel::Private(to), payload)
    }

    pub fn broadcast(&mut self, from: PartyId, payload: Payload) -> Payload {
        self.stats.broadcasts += 1;
        self.record(from, Channel::Broadcast, payload)
    }

    fn record(&mut self, sender: PartyId, channel: Channel, payload: Payload) -> Payload {
        debug_assert!(
            !self.silenced.contains(sender),
            "silenced player {sender} sent a message"
        );
        *self.stats.by_kind.entry(payload.kind()).or_insert(0) += 1;
        let msg = Message {
            round: self.round,
            sender,
            channel,
            payload,
        };
        msg.hash(&mut self.digest);
        if self.recording == Recording::Full {
            self.log.push(msg.clone());
        }
        msg.payload
    }

    pub fn note(&mut self, event: Event) {
        log::debug!("round {}: {:?}", self.round, event);
        let a = Annotation {
            round: self.round,
            event,
        };
        a.hash(&mut self.digest);
        self.annotations.push(a);
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn count_bounded_event(&mut self) {
        self.stats.bounded_events += 1;
    }

    pub fn record_input(&mut self, p: PartyId, value: FieldElement) {
        value.hash(&mut self.digest);
        self.inputs.push((p, value));
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn digest(&self) -> u64 {
        self.digest.finish()
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            n: self.n,
            master_seed: self.master_seed,
            seeds: self.seeds.clone(),
            messages: self.log.clone(),
            draws: self.rngs.iter().map(|r| r.draws().to_vec()).collect(),
            inputs: self.inputs.clone(),
            annotations: self.annotations.clone(),
            stats: self.stats.clone(),
            digest: self.digest(),
        }
    }
}

/// Record of one run. `messages` and `draws` are empty unless the run used
/// [`Recording::Full`]; the digest always covers all traffic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub n: usize,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub messages: Vec<Message>,
    pub draws: Vec<Vec<(DrawClass, u64)>>,
    pub inputs: Vec<(PartyId, FieldElement)>,
    pub annotations: Vec<Annotation>,
    pub stats: Stats,
    pub digest: u64,
}

impl Transcript {
    /// Every (receiver, message) pair; a broadcast is received by all parties.
    pub fn receptions(&self) -> impl Iterator<Item = (PartyId, &Message)> + '_ {
        self.messages.iter().flat_map(move |m| {
            let receivers: Vec<PartyId> = match m.channel {
                Channel::Broadcast => (0..self.n).collect(),
                Channel::Private(r) => vec![r],
            };
            receivers.into_iter().map(move |r| (r, m))
        })
    }

    /// Stable text form; equal transcripts render to identical bytes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "players {} seed {}", self.n, self.master_seed);
        for (p, s) in self.seeds.iter().enumerate() {
            let _ = writeln!(out, "seed P{p} {s:016x}");
        }
        for (p, v) in &self.inputs {
            let _ = writeln!(out, "input P{p} {v}");
        }
        for m in &self.messages {
            let _ = writeln!(out, "{m}");
        }
        for a in &self.annotations {
            let _ = writeln!(out, "r{} {:?}", a.round, a.event);
        }
        let _ = writeln!(
            out,
            "rounds {} private {} broadcast {} bounded {}",
            self.stats.rounds,
            self.stats.private_messages,
            self.stats.broadcasts,
            self.stats.bounded_events
        );
        let _ = writeln!(out, "digest {:016x}", self.digest);
        out
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// What a coalition sees: messages it received, its randomness and its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct View {
    pub players: PlayerSet,
    pub messages: Vec<Message>,
    pub seeds: Vec<(PartyId, u64)>,
    pub draws: Vec<(PartyId, Vec<(DrawClass, u64)>)>,
    pub inputs: Vec<(PartyId, FieldElement)>,
}

pub fn view_of(t: &Transcript, b: PlayerSet) -> View {
    let members: Vec<PartyId> = b.iter().filter(|p| *p < t.n).collect();
    let messages = t
        .messages
        .iter()
        .filter(|m| match m.channel {
            Channel::Broadcast => !members.is_empty(),
            Channel::Private(r) => b.contains(r),
        })
        .cloned()
        .collect();
    View {
        players: b,
        messages,
        seeds: members.iter().map(|&p| (p, t.seeds[p])).collect(),
        draws: members
            .iter()
            .map(|&p| (p, t.draws.get(p).cloned().unwrap_or_default()))
            .collect(),
        inputs: t
            .inputs
            .iter()
            .filter(|(p, _)| b.contains(*p))
            .cloned()
            .collect(),
    }
}

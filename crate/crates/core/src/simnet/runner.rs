use thiserror::Error;

use super::{
    AdversaryScript, Channel, Message, Network, PartyId, PartyRng, Payload, Recording, Transcript,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("need at least two parties, got {0}")]
    TooFewParties(usize),
    #[error("party {party} aborted in round {round}: {reason}")]
    ProtocolAbort {
        party: PartyId,
        round: u64,
        reason: String,
    },
    #[error("no termination after {0} rounds")]
    RoundLimit(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outgoing {
    pub channel: Channel,
    pub payload: Payload,
}

/// A party as an explicit state machine.
pub trait Party {
    /// Consumes the messages delivered this round and emits the next ones.
    fn step(
        &mut self,
        round: u64,
        inbox: &[Message],
        rng: &mut PartyRng,
    ) -> Result<Vec<Outgoing>, String>;

    fn is_done(&self) -> bool;
}

/// Runs state machines in lockstep until all are done.
///
/// Messages emitted in round `r` are delivered in round `r + 1`, sorted by
/// sender. With a rushing adversary, corrupted parties act last in each round
/// and receive the honest messages addressed to them in that same round.
pub fn run_protocol(
    parties: &mut [Box<dyn Party>],
    adversary: &AdversaryScript,
    seed: u64,
    max_rounds: u64,
) -> Result<Transcript, SimError> {
    let n = parties.len();
    if n < 2 {
        return Err(SimError::TooFewParties(n));
    }
    let mut net = Network::new(n, seed, adversary.clone());
    net.set_recording(Recording::Full);
    let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); n];

    while !parties.iter().all(|p| p.is_done()) {
        let round = net.round();
        if round >= max_rounds {
            return Err(SimError::RoundLimit(max_rounds));
        }
        let mut next: Vec<Vec<Message>> = vec![Vec::new(); n];
        let (corrupt, honest): (Vec<PartyId>, Vec<PartyId>) =
            (0..n).partition(|&p| net.is_corrupt(p));

        let emit =
            |net: &mut Network, p: PartyId, inbox: &[Message], parties: &mut [Box<dyn Party>]| {
                let out = parties[p]
                    .step(round, inbox, net.rng(p))
                    .map_err(|reason| SimError::ProtocolAbort {
                        party: p,
                        round,
                        reason,
                    })?;
                let mut sent = Vec::with_capacity(out.len());
                for o in out {
                    let payload = match o.channel {
                        Channel::Broadcast => net.broadcast(p, o.payload),
                        Channel::Private(to) => net.send(p, to, o.payload),
                    };
                    sent.push(Message {
                        round,
                        sender: p,
                        channel: o.channel,
                        payload,
                    });
                }
                Ok::<_, SimError>(sent)
            };

        let mut honest_out = Vec::new();
        for &p in &honest {
            honest_out.extend(emit(&mut net, p, &inboxes[p], parties)?);
        }
        let mut corrupt_out = Vec::new();
        for &p in &corrupt {
            let mut inbox = inboxes[p].clone();
            if adversary.rushing {
                inbox.extend(honest_out.iter().filter(|m| m.delivered_to(p)).cloned());
                inbox.sort_by_key(|m| m.sender);
            }
            corrupt_out.extend(emit(&mut net, p, &inbox, parties)?);
        }

        for m in honest_out.iter().chain(&corrupt_out) {
            for (r, slot) in next.iter_mut().enumerate() {
                let rushed = adversary.rushing && net.is_corrupt(r) && !net.is_corrupt(m.sender);
                if m.delivered_to(r) && !rushed {
                    slot.push(m.clone());
                }
            }
        }
        for slot in &mut next {
            slot.sort_by_key(|m| m.sender);
        }
        inboxes = next;
        net.advance();
    }
    Ok(net.transcript())
}

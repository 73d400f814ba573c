use std::fmt;

use crate::field::FieldElement;
use crate::ic::CheckVector;

pub type PartyId = usize;

/// Identifies one protocol instance so messages of batched instances do not mix.
pub type SessionId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Private(PartyId),
    Broadcast,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Payload {
    Echo {
        value: u64,
    },
    /// Rows of a sharing, as dealt to their owner.
    Shares {
        session: SessionId,
        values: Vec<FieldElement>,
    },
    GicKeys {
        session: SessionId,
        keys: Vec<FieldElement>,
    },
    GicChecks {
        session: SessionId,
        checks: Vec<CheckVector>,
    },
    GicChallenge {
        session: SessionId,
        indices: Vec<u32>,
    },
    GicReveal {
        session: SessionId,
        checks: Vec<(u32, CheckVector)>,
    },
    GicApprove {
        session: SessionId,
    },
    GicFreshCheck {
        session: SessionId,
        check: CheckVector,
    },
    GicFreshKey {
        session: SessionId,
        key: FieldElement,
    },
    GicVerdict {
        session: SessionId,
        accept: bool,
    },
    GicPublish {
        session: SessionId,
        value: FieldElement,
    },
    GicAuth {
        session: SessionId,
        claimed: FieldElement,
        keys: Vec<FieldElement>,
    },
    /// The dealer's extended secret at a weak opening.
    OpenSecret {
        session: SessionId,
        a_star: Vec<FieldElement>,
    },
    Accuse {
        session: SessionId,
        dealer: PartyId,
    },
    Coin {
        session: SessionId,
        heads: bool,
    },
    /// The dealer's extended challenge value in a verifiable sharing.
    BStar {
        session: SessionId,
        b_star: Vec<FieldElement>,
    },
    /// Everything the dealer gave `player`, made public: row, then the row's
    /// share of the secret followed by its shares of every blinding value.
    Disclose {
        session: SessionId,
        player: PartyId,
        rows: Vec<(u32, Vec<FieldElement>)>,
    },
    Refuse {
        session: SessionId,
    },
}

impl Payload {
    /// Subprotocol the message belongs to, for statistics.
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Echo { .. } => "echo",
            Payload::Shares { .. } => "share",
            Payload::GicKeys { .. }
            | Payload::GicChecks { .. }
            | Payload::GicChallenge { .. }
            | Payload::GicReveal { .. }
            | Payload::GicApprove { .. }
            | Payload::GicFreshCheck { .. }
            | Payload::GicFreshKey { .. }
            | Payload::GicVerdict { .. }
            | Payload::GicPublish { .. } => "gic-generate",
            Payload::GicAuth { .. } => "gic-authenticate",
            Payload::OpenSecret { .. } | Payload::Accuse { .. } => "wss-open",
            Payload::Coin { .. } => "coin",
            Payload::BStar { .. } | Payload::Disclose { .. } => "vss",
            Payload::Refuse { .. } => "refusal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub round: u64,
    pub sender: PartyId,
    pub channel: Channel,
    pub payload: Payload,
}

impl Message {
    pub fn delivered_to(&self, p: PartyId) -> bool {
        match self.channel {
            Channel::Broadcast => true,
            Channel::Private(r) => r == p,
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.channel {
            Channel::Broadcast => write!(
                f,
                "r{} P{} -> *: {:?}",
                self.round, self.sender, self.payload
            ),
            Channel::Private(to) => write!(
                f,
                "r{} P{} -> P{}: {:?}",
                self.round, self.sender, to, self.payload
            ),
        }
    }
}

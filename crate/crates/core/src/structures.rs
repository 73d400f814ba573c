//! Player sets and adversary structures.
//!
//! A structure is stored as its antichain of maximal sets; membership means
//! "subset of some maximal set".

use std::fmt;

use log::warn;
use thiserror::Error;

use crate::msp::Msp;

/// Maximum number of players a [`PlayerSet`] can address.
pub const MAX_PLAYERS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("player {player} out of range for {n} players")]
    PlayerOutOfRange { player: usize, n: usize },
    #[error("player count {0} unsupported (1..={MAX_PLAYERS})")]
    BadPlayerCount(usize),
    #[error("structure has {structure} players but the MSP has {msp}")]
    PlayerCountMismatch { structure: usize, msp: usize },
    #[error("threshold {t} must be below the player count {n}")]
    BadThreshold { n: usize, t: usize },
}

/// A set of player indices, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PlayerSet(u64);

impl PlayerSet {
    pub const EMPTY: PlayerSet = PlayerSet(0);

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS);
        if n == 64 {
            PlayerSet(u64::MAX)
        } else {
            PlayerSet((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        PlayerSet(bits)
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    pub fn singleton(p: usize) -> Self {
        PlayerSet(1u64 << p)
    }

    pub fn contains(&self, p: usize) -> bool {
        p < MAX_PLAYERS && self.0 & (1u64 << p) != 0
    }

    pub fn insert(&mut self, p: usize) {
        self.0 |= 1u64 << p;
    }

    pub fn remove(&mut self, p: usize) {
        self.0 &= !(1u64 << p);
    }

    pub fn with(mut self, p: usize) -> Self {
        self.insert(p);
        self
    }

    pub fn union(&self, other: &PlayerSet) -> PlayerSet {
        PlayerSet(self.0 | other.0)
    }

    pub fn intersection(&self, other: &PlayerSet) -> PlayerSet {
        PlayerSet(self.0 & other.0)
    }

    pub fn difference(&self, other: &PlayerSet) -> PlayerSet {
        PlayerSet(self.0 & !other.0)
    }

    pub fn complement(&self, n: usize) -> PlayerSet {
        PlayerSet::full(n).difference(self)
    }

    pub fn is_subset(&self, other: &PlayerSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Largest member plus one, or 0 for the empty set.
    pub fn bound(&self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.0;
        (0..MAX_PLAYERS).filter(move |p| bits & (1u64 << p) != 0)
    }

    /// Every subset of `{0..n}`, in increasing bitmask order.
    pub fn all_subsets(n: usize) -> impl Iterator<Item = PlayerSet> {
        assert!(n < MAX_PLAYERS);
        (0..(1u64 << n)).map(PlayerSet)
    }

    pub fn check_range(&self, n: usize) -> Result<(), StructureError> {
        match self.iter().find(|&p| p >= n) {
            Some(player) => Err(StructureError::PlayerOutOfRange { player, n }),
            None => Ok(()),
        }
    }
}

impl FromIterator<usize> for PlayerSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = PlayerSet::EMPTY;
        for p in iter {
            s.insert(p);
        }
        s
    }
}

impl fmt::Debug for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

impl PartialOrd for PlayerSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order on the sorted member sequences, so `{0} < {0,1} < {0,2} < {1}`.
impl Ord for PlayerSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

/// Downward-closed family of player sets, kept as its maximal elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryStructure {
    n: usize,
    maximal: Vec<PlayerSet>,
}

impl AdversaryStructure {
    /// Builds a structure from any family, reducing it to its maximal sets.
    /// An empty family means the structure `{∅}`.
    pub fn new(
        n: usize,
        family: impl IntoIterator<Item = PlayerSet>,
    ) -> Result<Self, StructureError> {
        let (s, dropped) = Self::normalize(n, family)?;
        if dropped > 0 {
            warn!("dropped {dropped} non-maximal set(s) from adversary structure");
        }
        Ok(s)
    }

    /// Like [`AdversaryStructure::new`] but reports how many sets were redundant.
    pub fn normalize(
        n: usize,
        family: impl IntoIterator<Item = PlayerSet>,
    ) -> Result<(Self, usize), StructureError> {
        if n == 0 || n >= MAX_PLAYERS {
            return Err(StructureError::BadPlayerCount(n));
        }
        let mut sets: Vec<PlayerSet> = Vec::new();
        for s in family {
            s.check_range(n)?;
            sets.push(s);
        }
        let total = sets.len();
        sets.sort();
        sets.dedup();
        let duplicates = total - sets.len();
        let maximal: Vec<PlayerSet> = sets
            .iter()
            .filter(|s| !sets.iter().any(|o| o != *s && s.is_subset(o)))
            .copied()
            .collect();
        let dropped = duplicates + (sets.len() - maximal.len());
        let maximal = if maximal.is_empty() {
            vec![PlayerSet::EMPTY]
        } else {
            maximal
        };
        Ok((AdversaryStructure { n, maximal }, dropped))
    }

    /// All sets of size at most `t`.
    pub fn threshold(n: usize, t: usize) -> Result<Self, StructureError> {
        if n == 0 || n >= MAX_PLAYERS {
            return Err(StructureError::BadPlayerCount(n));
        }
        if t >= n {
            return Err(StructureError::BadThreshold { n, t });
        }
        let mut maximal: Vec<PlayerSet> =
            PlayerSet::all_subsets(n).filter(|s| s.len() == t).collect();
        maximal.sort();
        Ok(AdversaryStructure { n, maximal })
    }

    /// The structure of sets an MSP does not qualify.
    pub fn induced_by(msp: &Msp) -> Self {
        let n = msp.player_count();
        let family: Vec<PlayerSet> = PlayerSet::all_subsets(n)
            .filter(|b| !msp.qualified(*b).expect("in range"))
            .collect();
        let (s, _) = Self::normalize(n, family).expect("valid player count");
        s
    }

    pub fn player_count(&self) -> usize {
        self.n
    }

    pub fn maximal_sets(&self) -> &[PlayerSet] {
        &self.maximal
    }

    pub fn contains(&self, b: PlayerSet) -> Result<bool, StructureError> {
        b.check_range(self.n)?;
        Ok(self.maximal.iter().any(|m| b.is_subset(m)))
    }

    /// True iff no `k` sets of the structure cover all players.
    pub fn is_qk(&self, k: usize) -> bool {
        assert!(k >= 1, "Q^k needs k >= 1");
        let full = PlayerSet::full(self.n);
        // Unions of multisets of size k equal unions of sets of size <= k.
        fn covers(
            sets: &[PlayerSet],
            start: usize,
            left: usize,
            acc: PlayerSet,
            full: PlayerSet,
        ) -> bool {
            if acc == full {
                return true;
            }
            if left == 0 {
                return false;
            }
            (start..sets.len()).any(|i| covers(sets, i, left - 1, acc.union(&sets[i]), full))
        }
        !covers(&self.maximal, 0, k, PlayerSet::EMPTY, full)
    }

    /// True iff every set of the structure is unqualified for `msp`.
    pub fn rejected_by(&self, msp: &Msp) -> Result<bool, StructureError> {
        if msp.player_count() != self.n {
            return Err(StructureError::PlayerCountMismatch {
                structure: self.n,
                msp: msp.player_count(),
            });
        }
        Ok(self
            .maximal
            .iter()
            .all(|b| !msp.qualified(*b).expect("in range")))
    }
}

impl fmt::Display for AdversaryStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} maximal=[", self.n)?;
        for (i, s) in self.maximal.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

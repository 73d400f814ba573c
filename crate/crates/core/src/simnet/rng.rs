//! Per-party randomness.
//!
//! Normal runs give every party its own ChaCha stream derived from the master
//! seed. Tests can instead route every draw through an [`ExternalSource`],
//! which sees the drawing party, the range and the kind of draw; this is how
//! exhaustive enumeration and scripted tapes are driven through the real
//! protocol code.

use std::cell::RefCell;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::field::{FieldElement, FieldRole, FieldSpec};

/// What a random draw is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DrawClass {
    /// Uniform element of the computation field (sharing randomness, blinding values).
    Computation,
    /// Element of the authentication field (check vectors, keys).
    Authentication,
    /// A public coin flip.
    Coin,
    /// Index selection (cut-and-choose subsets).
    Index,
}

pub trait ExternalSource {
    /// Returns a value in `0..bound`.
    fn draw(&mut self, party: usize, bound: u64, class: DrawClass) -> u64;
}

pub type SharedSource = Rc<RefCell<dyn ExternalSource>>;

#[derive(Clone)]
enum Source {
    Seeded(ChaCha12Rng),
    External(SharedSource),
}

#[derive(Clone)]
pub struct PartyRng {
    party: usize,
    source: Source,
    log: Option<Vec<(DrawClass, u64)>>,
}

impl PartyRng {
    pub fn seeded(party: usize, seed: u64) -> Self {
        PartyRng {
            party,
            source: Source::Seeded(ChaCha12Rng::seed_from_u64(seed)),
            log: None,
        }
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn external(party: usize, source: SharedSource) -> Self {
        PartyRng {
            party,
            source: Source::External(source),
            log: None,
        }
    }

    /// Keep every drawn value so it can appear in the party's view.
    pub fn record_draws(&mut self, on: bool) {
        self.log = if on { Some(Vec::new()) } else { None };
    }

    pub fn draws(&self) -> &[(DrawClass, u64)] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn below(&mut self, bound: u64, class: DrawClass) -> u64 {
        assert!(bound > 0, "empty range");
        let v = match &mut self.source {
            Source::Seeded(rng) => rng.gen_range(0..bound),
            Source::External(ext) => {
                let v = ext.borrow_mut().draw(self.party, bound, class);
                assert!(v < bound, "external source returned {v} outside 0..{bound}");
                v
            }
        };
        if let Some(log) = &mut self.log {
            log.push((class, v));
        }
        v
    }

    pub fn uniform(&mut self, field: &FieldSpec) -> FieldElement {
        let class = match field.role() {
            FieldRole::Computation => DrawClass::Computation,
            FieldRole::Authentication => DrawClass::Authentication,
        };
        field.elem(self.below(field.modulus(), class))
    }

    pub fn nonzero(&mut self, field: &FieldSpec) -> FieldElement {
        let class = match field.role() {
            FieldRole::Computation => DrawClass::Computation,
            FieldRole::Authentication => DrawClass::Authentication,
        };
        field.elem(1 + self.below(field.modulus() - 1, class))
    }

    pub fn uniform_vec(&mut self, field: &FieldSpec, len: usize) -> Vec<FieldElement> {
        (0..len).map(|_| self.uniform(field)).collect()
    }

    /// `true` means heads.
    pub fn coin(&mut self) -> bool {
        self.below(2, DrawClass::Coin) == 1
    }

    /// A uniform `size`-subset of `0..universe`, via a Fisher-Yates prefix, sorted.
    pub fn subset(&mut self, universe: usize, size: usize) -> Vec<usize> {
        assert!(size <= universe);
        let mut items: Vec<usize> = (0..universe).collect();
        for i in 0..size {
            let j = i + self.below((universe - i) as u64, DrawClass::Index) as usize;
            items.swap(i, j);
        }
        let mut chosen = items[..size].to_vec();
        chosen.sort_unstable();
        chosen
    }
}

/// Counter-based split of a master seed into independent per-party seeds.
pub fn party_seed(master: u64, party: usize) -> u64 {
    let mut z = master.wrapping_add((party as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Walks every leaf of the tree of random choices, depth first.
///
/// Each execution consumes a path; [`Enumerator::advance`] moves to the next
/// one. A leaf's probability is the product of `1/bound` along its path,
/// returned by [`Enumerator::leaf_weight`] as the product of bounds.
#[derive(Debug, Default)]
pub struct Enumerator {
    path: Vec<(u64, u64)>,
    pos: usize,
    started: bool,
}

impl Enumerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shared() -> Rc<RefCell<Enumerator>> {
        Rc::new(RefCell::new(Enumerator::new()))
    }

    /// Prepares the next execution. Returns `false` once every path was visited.
    pub fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            self.pos = 0;
            return true;
        }
        self.path.truncate(self.pos);
        while let Some((choice, bound)) = self.path.pop() {
            if choice + 1 < bound {
                self.path.push((choice + 1, bound));
                self.pos = 0;
                return true;
            }
        }
        false
    }

    /// Product of the bounds along the last executed path.
    pub fn leaf_weight(&self) -> u128 {
        self.path[..self.pos]
            .iter()
            .map(|&(_, b)| b as u128)
            .product()
    }
}

impl ExternalSource for Enumerator {
    fn draw(&mut self, _party: usize, bound: u64, _class: DrawClass) -> u64 {
        let v = if self.pos < self.path.len() {
            let (choice, b) = self.path[self.pos];
            assert_eq!(
                b, bound,
                "execution is not deterministic given its random choices"
            );
            choice
        } else {
            self.path.push((0, bound));
            0
        };
        self.pos += 1;
        v
    }
}

/// Scripted draws: computation-field elements and coins come from fixed
/// lists, everything else from a seeded stream.
pub struct Tape {
    computation: Vec<u64>,
    coins: Vec<u64>,
    fallback: ChaCha12Rng,
    used_computation: usize,
    used_coins: usize,
}

impl Tape {
    pub fn new(computation: Vec<u64>, coins: Vec<u64>, fallback_seed: u64) -> Self {
        Tape {
            computation,
            coins,
            fallback: ChaCha12Rng::seed_from_u64(fallback_seed),
            used_computation: 0,
            used_coins: 0,
        }
    }

    pub fn shared(computation: Vec<u64>, coins: Vec<u64>, fallback_seed: u64) -> Rc<RefCell<Tape>> {
        Rc::new(RefCell::new(Tape::new(computation, coins, fallback_seed)))
    }

    /// Computation-field draws consumed so far.
    pub fn computation_draws(&self) -> usize {
        self.used_computation
    }

    pub fn coin_draws(&self) -> usize {
        self.used_coins
    }
}

impl ExternalSource for Tape {
    /// Exhausted tapes yield zeros, so a dry run measures how long the tape must be.
    fn draw(&mut self, _party: usize, bound: u64, class: DrawClass) -> u64 {
        match class {
            DrawClass::Computation => {
                let v = self
                    .computation
                    .get(self.used_computation)
                    .copied()
                    .unwrap_or(0);
                self.used_computation += 1;
                v % bound
            }
            DrawClass::Coin => {
                let v = self.coins.get(self.used_coins).copied().unwrap_or(0);
                self.used_coins += 1;
                v % bound
            }
            DrawClass::Authentication | DrawClass::Index => self.fallback.gen_range(0..bound),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerator_visits_every_leaf_once() {
        let e = Enumerator::shared();
        let src: SharedSource = e.clone();
        let mut seen = Vec::new();
        while e.borrow_mut().advance() {
            let mut rng = PartyRng::external(0, src.clone());
            let a = rng.below(3, DrawClass::Coin);
            // Second draw only on one branch: the tree is ragged.
            let b = if a == 1 {
                rng.below(2, DrawClass::Coin)
            } else {
                9
            };
            seen.push((a, b, e.borrow().leaf_weight()));
        }
        assert_eq!(seen, vec![(0, 9, 3), (1, 0, 6), (1, 1, 6), (2, 9, 3)]);
    }

    #[test]
    fn subsets_are_uniform_k_subsets() {
        let e = Enumerator::shared();
        let src: SharedSource = e.clone();
        let mut counts = std::collections::BTreeMap::new();
        while e.borrow_mut().advance() {
            let mut rng = PartyRng::external(0, src.clone());
            *counts.entry(rng.subset(4, 2)).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        assert!(counts.values().all(|&c| c == 2));
    }

    #[test]
    fn seeded_streams_are_reproducible_and_distinct() {
        let f = FieldSpec::authentication(1_000_003).unwrap();
        let mut a = PartyRng::seeded(0, party_seed(7, 0));
        let mut b = PartyRng::seeded(0, party_seed(7, 0));
        let mut c = PartyRng::seeded(1, party_seed(7, 1));
        let xa = a.uniform_vec(&f, 8);
        assert_eq!(xa, b.uniform_vec(&f, 8));
        assert_ne!(xa, c.uniform_vec(&f, 8));
        for _ in 0..1000 {
            assert!(!a.nonzero(&f).is_zero());
        }
    }
}

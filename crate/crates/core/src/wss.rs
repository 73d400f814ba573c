//! Weak secret sharing: a dealer shares a value with the span program and
//! runs information checking for every ordered pair of players, so each
//! holder can later prove its shares to anyone. Opening needs the dealer.

use std::sync::Arc;

use thiserror::Error;

use crate::field::{decode_shares, encode_shares, FieldElement, FieldError, FieldSpec};
use crate::ic::{
    gic_generate_batch, gic_transmit, AuthParams, Authenticated, GicInstance, GicOutcome,
    GicRequest,
};
use crate::msp::{ExtendedSecret, Msp};
use crate::simnet::{Event, Network, PartyId, Payload, SessionId, Strategy};
use crate::structures::PlayerSet;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum WssError {
    #[error("dealer {0} was disqualified during commitment")]
    DealerDisqualified(PartyId),
    #[error("cannot add weak sharings of dealers {0} and {1}")]
    DealerMismatch(PartyId, PartyId),
}

/// Everything the protocols share: the span program over `K`, the
/// authentication field `F` and the security parameter `k`.
#[derive(Debug, Clone)]
pub struct Params {
    pub msp: Arc<Msp>,
    pub auth: AuthParams,
}

impl Params {
    /// Picks the smallest prime `F` above `max(|K|^d, 2^k)`.
    pub fn new(msp: Msp, k: usize) -> Result<Self, FieldError> {
        let field = FieldSpec::authentication_for(msp.field(), msp.rows(), k)?;
        Ok(Params {
            msp: Arc::new(msp),
            auth: AuthParams { field, k },
        })
    }

    pub fn k(&self) -> usize {
        self.auth.k
    }

    pub fn n(&self) -> usize {
        self.msp.player_count()
    }

    pub fn computation_field(&self) -> &FieldSpec {
        self.msp.field()
    }

    pub fn auth_field(&self) -> &FieldSpec {
        &self.auth.field
    }

    fn encode(&self, values: &[FieldElement]) -> FieldElement {
        encode_shares(values, self.msp.field(), &self.auth.field)
            .expect("F sized for every share vector")
    }

    /// Row a cheating dealer perturbs: the script's choice, else the last
    /// row held by someone else.
    pub fn target_row(&self, net: &Network, dealer: PartyId) -> usize {
        let d = self.msp.rows();
        match net.adversary().row() {
            Some(r) => r.min(d - 1),
            None => (0..d)
                .rev()
                .find(|&l| self.msp.owner(l) != dealer)
                .unwrap_or(d - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tweak {
    /// Whatever the adversary script prescribes for this dealer.
    ByStrategy,
    None,
    /// Add the value to one row of the dealt shares.
    Row(usize, FieldElement),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WssRequest {
    pub dealer: PartyId,
    pub secret: FieldElement,
    pub tweak: Tweak,
}

impl WssRequest {
    pub fn new(dealer: PartyId, secret: FieldElement) -> Self {
        WssRequest {
            dealer,
            secret,
            tweak: Tweak::ByStrategy,
        }
    }
}

/// `[a]^W_D`.
///
/// The information checking for pair `(i, j)` authenticates
/// `f_scale * encode(original shares of i)`; the current shares of `i` are
/// `k_scale` times the original ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WssCommitment {
    pub session: SessionId,
    pub dealer: PartyId,
    /// The dealer's extended secret; only the dealer knows it.
    pub a_star: ExtendedSecret,
    /// Row `l` as held by its owner.
    pub shares: Vec<FieldElement>,
    gic: Vec<Option<GicInstance>>,
    n: usize,
    pub f_scale: FieldElement,
    pub k_scale: FieldElement,
    trivial: bool,
}

impl WssCommitment {
    /// The public commitment to zero: every share is known to be zero.
    pub fn zero(params: &Params, dealer: PartyId) -> Self {
        let k = params.computation_field();
        WssCommitment {
            session: 0,
            dealer,
            a_star: ExtendedSecret::zero(k, params.msp.cols()),
            shares: vec![k.zero(); params.msp.rows()],
            gic: Vec::new(),
            n: params.n(),
            f_scale: params.auth_field().one(),
            k_scale: k.one(),
            trivial: true,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    /// Information checking for `INT = i`, `R = j`, if it was run.
    pub fn gic(&self, i: PartyId, j: PartyId) -> Option<&GicInstance> {
        self.gic.get(i * self.n + j).and_then(Option::as_ref)
    }

    pub fn gic_instances(&self) -> impl Iterator<Item = &GicInstance> {
        self.gic.iter().flatten()
    }

    /// Whether the held shares agree with the dealer's extended secret.
    pub fn is_consistent(&self, msp: &Msp) -> bool {
        self.shares
            .iter()
            .enumerate()
            .all(|(l, s)| msp.check_row(&self.a_star, l, *s))
    }

    /// Rows of `i` as `j` reconstructs them from an authenticated value.
    fn decode_for(
        &self,
        params: &Params,
        i: PartyId,
        value: FieldElement,
    ) -> Option<Vec<FieldElement>> {
        let rows = params.msp.rows_of(i).len();
        let unscaled = value * self.f_scale.inverse().ok()?;
        let orig = decode_shares(
            unscaled,
            rows,
            params.computation_field(),
            params.auth_field(),
        )
        .ok()?;
        Some(orig.into_iter().map(|v| v * self.k_scale).collect())
    }
}

/// The dealer sends every active player its rows of `dealt`; returns the
/// rows as the players hold them.
pub(crate) fn send_rows(
    net: &mut Network,
    msp: &Msp,
    session: SessionId,
    dealer: PartyId,
    dealt: &[FieldElement],
) -> Vec<FieldElement> {
    let mut held = dealt.to_vec();
    for p in net.active().iter().filter(|&p| p != dealer) {
        let rows = msp.rows_of(p);
        let values = rows.iter().map(|&l| dealt[l]).collect();
        if let Payload::Shares { values, .. } =
            net.send(dealer, p, Payload::Shares { session, values })
        {
            for (&l, v) in rows.iter().zip(values) {
                held[l] = v;
            }
        }
    }
    held
}

/// Plain sharing: the dealer picks `ρ` and sends `M (a, ρ)` row by row.
/// Returns the extended secret and the shares as held.
pub fn share(
    net: &mut Network,
    params: &Params,
    dealer: PartyId,
    a: FieldElement,
) -> (ExtendedSecret, Vec<FieldElement>) {
    let msp = params.msp.clone();
    let session = net.new_session();
    let rho = net
        .rng(dealer)
        .uniform_vec(params.computation_field(), msp.cols() - 1);
    let a_star = msp.extend_secret(a, &rho);
    let held = send_rows(net, &msp, session, dealer, &msp.shares_of(&a_star));
    net.advance();
    (a_star, held)
}

/// Runs information checking over the current shares of many commitments.
fn authenticate_all(
    net: &mut Network,
    params: &Params,
    commits: &mut [WssCommitment],
) -> Vec<Result<(), WssError>> {
    let n = params.n();
    let active = net.active();
    let mut requests = Vec::new();
    let mut owners = Vec::new();
    for (c, commit) in commits.iter().enumerate() {
        for i in active.iter() {
            let rows = params.msp.rows_of(i);
            let values: Vec<FieldElement> = rows.iter().map(|&l| commit.shares[l]).collect();
            let s = params.encode(&values);
            for j in active.iter().filter(|&j| j != i) {
                requests.push(GicRequest::honest(commit.dealer, i, j, s));
                owners.push((c, i, j));
            }
        }
    }
    let instances = gic_generate_batch(net, &params.auth, &requests);
    let mut results: Vec<Result<(), WssError>> = vec![Ok(()); commits.len()];
    for commit in commits.iter_mut() {
        commit.gic = vec![None; n * n];
        commit.f_scale = params.auth_field().one();
        commit.k_scale = params.computation_field().one();
        commit.trivial = false;
    }
    for ((c, i, j), inst) in owners.into_iter().zip(instances) {
        if inst.outcome == GicOutcome::DealerDisqualified {
            results[c] = Err(WssError::DealerDisqualified(commits[c].dealer));
        }
        commits[c].gic[i * n + j] = Some(inst);
    }
    results
}

/// Commits every request in the same rounds.
pub fn wss_commit_batch(
    net: &mut Network,
    params: &Params,
    requests: &[WssRequest],
) -> Vec<Result<WssCommitment, WssError>> {
    if requests.is_empty() {
        return Vec::new();
    }
    let msp = params.msp.clone();
    let k = *params.computation_field();
    let mut commits = Vec::with_capacity(requests.len());
    for req in requests {
        let target = params.target_row(net, req.dealer);
        debug_assert!(!net.silenced().contains(req.dealer));
        let session = net.new_session();
        let rho = net.rng(req.dealer).uniform_vec(&k, msp.cols() - 1);
        let a_star = msp.extend_secret(req.secret, &rho);
        let mut dealt = msp.shares_of(&a_star);
        let tweak = match req.tweak {
            Tweak::ByStrategy if net.acts(req.dealer, Strategy::InconsistentWssDealer) => {
                Tweak::Row(target, k.one())
            }
            Tweak::ByStrategy => Tweak::None,
            t => t,
        };
        if let Tweak::Row(l, delta) = tweak {
            dealt[l] += delta;
        }
        let shares = send_rows(net, &msp, session, req.dealer, &dealt);
        commits.push(WssCommitment {
            session,
            dealer: req.dealer,
            a_star,
            shares,
            gic: Vec::new(),
            n: params.n(),
            f_scale: params.auth_field().one(),
            k_scale: k.one(),
            trivial: false,
        });
    }
    net.advance();
    let results = authenticate_all(net, params, &mut commits);
    commits
        .into_iter()
        .zip(results)
        .map(|(c, r)| r.map(|_| c))
        .collect()
}

pub fn wss_commit(
    net: &mut Network,
    params: &Params,
    dealer: PartyId,
    a: FieldElement,
) -> Result<WssCommitment, WssError> {
    wss_commit_batch(net, params, &[WssRequest::new(dealer, a)])
        .pop()
        .expect("one commitment")
}

/// Local scaling; `lambda = 0` gives the public zero commitment.
pub fn wss_scale(params: &Params, c: &WssCommitment, lambda: FieldElement) -> WssCommitment {
    if lambda.is_zero() || c.trivial {
        return WssCommitment::zero(params, c.dealer);
    }
    let lf = lambda.lift(params.auth_field());
    WssCommitment {
        a_star: c.a_star.scale(lambda),
        shares: c.shares.iter().map(|s| *s * lambda).collect(),
        gic: c
            .gic
            .iter()
            .map(|g| g.as_ref().map(|g| g.scaled(lf).expect("nonzero lift")))
            .collect(),
        f_scale: c.f_scale * lf,
        k_scale: c.k_scale * lambda,
        ..c.clone()
    }
}

/// Linear combinations of one dealer's commitments. Each result sums the
/// scaled shares locally and then runs fresh information checking on the
/// sums, in one batch. Single terms are scaled without communication.
pub fn wss_linear_batch(
    net: &mut Network,
    params: &Params,
    combos: &[Vec<(FieldElement, &WssCommitment)>],
) -> Vec<Result<WssCommitment, WssError>> {
    let kf = *params.computation_field();
    let mut out: Vec<Option<Result<WssCommitment, WssError>>> = vec![None; combos.len()];
    let mut pending = Vec::new();
    let mut pending_idx = Vec::new();
    for (idx, terms) in combos.iter().enumerate() {
        let live: Vec<&(FieldElement, &WssCommitment)> = terms
            .iter()
            .filter(|(l, c)| !l.is_zero() && !c.trivial)
            .collect();
        let Some(first) = terms.first() else {
            continue;
        };
        if let Some(other) = terms.iter().find(|(_, c)| c.dealer != first.1.dealer) {
            out[idx] = Some(Err(WssError::DealerMismatch(
                first.1.dealer,
                other.1.dealer,
            )));
            continue;
        }
        match live.len() {
            0 => out[idx] = Some(Ok(WssCommitment::zero(params, first.1.dealer))),
            1 => out[idx] = Some(Ok(wss_scale(params, live[0].1, live[0].0))),
            _ => {
                let mut a_star = ExtendedSecret::zero(&kf, params.msp.cols());
                let mut shares = vec![kf.zero(); params.msp.rows()];
                for (lambda, c) in &live {
                    a_star = a_star.add(&c.a_star.scale(*lambda));
                    for (s, v) in shares.iter_mut().zip(&c.shares) {
                        *s += *v * *lambda;
                    }
                }
                pending.push(WssCommitment {
                    session: net.new_session(),
                    dealer: first.1.dealer,
                    a_star,
                    shares,
                    gic: Vec::new(),
                    n: params.n(),
                    f_scale: params.auth_field().one(),
                    k_scale: kf.one(),
                    trivial: false,
                });
                pending_idx.push(idx);
            }
        }
    }
    let results = authenticate_all(net, params, &mut pending);
    for ((c, r), idx) in pending.into_iter().zip(results).zip(pending_idx) {
        out[idx] = Some(r.map(|_| c));
    }
    out.into_iter()
        .map(|o| o.unwrap_or_else(|| Ok(WssCommitment::zero(params, 0))))
        .collect()
}

pub fn wss_add(
    net: &mut Network,
    params: &Params,
    c1: &WssCommitment,
    c2: &WssCommitment,
) -> Result<WssCommitment, WssError> {
    let one = params.computation_field().one();
    wss_linear_batch(net, params, &[vec![(one, c1), (one, c2)]])
        .pop()
        .expect("one result")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audience {
    Public,
    Player(PartyId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WssOpenOutcome {
    Value(FieldElement),
    Null,
}

impl WssOpenOutcome {
    pub fn value(self) -> Option<FieldElement> {
        match self {
            WssOpenOutcome::Value(v) => Some(v),
            WssOpenOutcome::Null => None,
        }
    }
}

/// Opens many commitments in the same rounds.
///
/// The dealer announces its extended secret; every holder authenticates its
/// shares to every receiver, who accuses the dealer on any accepted share (or
/// own share) that disagrees. A public open fails iff the accusers form a
/// qualified set. A single-player open fails iff that player finds a mismatch.
pub fn wss_open_batch(
    net: &mut Network,
    params: &Params,
    commits: &[&WssCommitment],
    audience: Audience,
) -> Vec<WssOpenOutcome> {
    let msp = params.msp.clone();
    let active = net.active();
    let receivers: Vec<PartyId> = match audience {
        Audience::Public => active.iter().collect(),
        Audience::Player(p) => vec![p],
    };

    // Step 1: the dealer announces a_*.
    let mut announced: Vec<Option<ExtendedSecret>> = Vec::with_capacity(commits.len());
    for c in commits {
        if c.trivial {
            announced.push(Some(c.a_star.clone()));
            continue;
        }
        if net.silenced().contains(c.dealer) {
            announced.push(None);
            continue;
        }
        let mut a_star = c.a_star.clone();
        if net.acts(c.dealer, Strategy::LyingOpener) {
            a_star.0[0] += params.computation_field().one();
        }
        let payload = Payload::OpenSecret {
            session: c.session,
            a_star: a_star.0,
        };
        let got = match audience {
            Audience::Public => net.broadcast(c.dealer, payload),
            Audience::Player(p) if p == c.dealer => payload,
            Audience::Player(p) => net.send(c.dealer, p, payload),
        };
        if let Payload::OpenSecret { a_star, .. } = got {
            announced.push(Some(ExtendedSecret(a_star)));
        }
    }
    net.advance();

    // Steps 2 and 3: authentication and checks.
    let mut accusers: Vec<PlayerSet> = vec![PlayerSet::EMPTY; commits.len()];
    for (idx, c) in commits.iter().enumerate() {
        let Some(a_star) = &announced[idx] else {
            continue;
        };
        if c.trivial {
            continue;
        }
        for &j in &receivers {
            let mut consistent = msp
                .rows_of(j)
                .iter()
                .all(|&l| msp.check_row(a_star, l, c.shares[l]));
            for i in active.iter().filter(|&i| i != j) {
                let Some(inst) = c.gic(i, j) else { continue };
                if let Authenticated::Accepted(v) = gic_transmit(net, &params.auth, inst) {
                    let ok = match c.decode_for(params, i, v) {
                        Some(rows) => msp
                            .rows_of(i)
                            .iter()
                            .zip(rows)
                            .all(|(&l, x)| msp.check_row(a_star, l, x)),
                        None => false,
                    };
                    consistent &= ok;
                }
            }
            if !consistent {
                accusers[idx].insert(j);
            }
        }
    }
    net.advance();

    // Step 4: accusations and the verdict.
    let mut any_accusation = false;
    let mut out = Vec::with_capacity(commits.len());
    for (idx, c) in commits.iter().enumerate() {
        let Some(a_star) = &announced[idx] else {
            out.push(WssOpenOutcome::Null);
            continue;
        };
        let failed = match audience {
            Audience::Public => {
                for j in accusers[idx].iter() {
                    any_accusation = true;
                    net.broadcast(
                        j,
                        Payload::Accuse {
                            session: c.session,
                            dealer: c.dealer,
                        },
                    );
                    net.note(Event::Accusation {
                        session: c.session,
                        accuser: j,
                        accused: c.dealer,
                    });
                }
                msp.qualified(accusers[idx]).expect("in range")
            }
            Audience::Player(p) => accusers[idx].contains(p),
        };
        if failed {
            if audience == Audience::Public {
                net.note(Event::Disqualified {
                    session: c.session,
                    player: c.dealer,
                    reason: "qualified accusers",
                });
            }
            out.push(WssOpenOutcome::Null);
        } else {
            out.push(WssOpenOutcome::Value(a_star.secret()));
        }
    }
    if any_accusation {
        net.advance();
    }
    out
}

pub fn wss_open(
    net: &mut Network,
    params: &Params,
    c: &WssCommitment,
    audience: Audience,
) -> WssOpenOutcome {
    wss_open_batch(net, params, &[c], audience)
        .pop()
        .expect("one outcome")
}

/// Broadcast coin of `flipper`. A corrupted flipper with a preference uses
/// it; a silenced flipper yields heads.
pub fn flip_coin(
    net: &mut Network,
    session: SessionId,
    flipper: PartyId,
    preferred: Option<bool>,
) -> bool {
    if net.silenced().contains(flipper) {
        return true;
    }
    let heads = match preferred {
        Some(p) if net.is_corrupt(flipper) => p,
        _ => net.rng(flipper).coin(),
    };
    match net.broadcast(flipper, Payload::Coin { session, heads }) {
        Payload::Coin { heads, .. } => heads,
        _ => unreachable!(),
    }
}

/// Cut-and-choose proof that `c` is a good commitment: `k` times the dealer
/// commits a random `b`, the players form `[a + b]`, and a coin picks which of
/// the two the dealer must open. Coins rotate over the other players.
///
/// A dealer running the inconsistent-sharing strategy guesses each coin and,
/// when it bets on `a + b`, deals `b` with the opposite perturbation.
pub fn wss_prove_correct(net: &mut Network, params: &Params, c: &WssCommitment, k: usize) -> bool {
    let kf = *params.computation_field();
    let dealer = c.dealer;
    let cheating = net.acts(dealer, Strategy::InconsistentWssDealer);
    let target = params.target_row(net, dealer);
    let flippers: Vec<PartyId> = net.active().iter().filter(|&p| p != dealer).collect();
    let session = net.new_session();
    net.count_bounded_event();

    let mut guesses = Vec::with_capacity(k);
    let mut requests = Vec::with_capacity(k);
    for _ in 0..k {
        let b = net.rng(dealer).uniform(&kf);
        let tweak = if cheating {
            let heads = net.rng(dealer).coin();
            guesses.push(Some(heads));
            if heads {
                Tweak::None
            } else {
                Tweak::Row(target, -kf.one())
            }
        } else {
            guesses.push(None);
            Tweak::None
        };
        requests.push(WssRequest {
            dealer,
            secret: b,
            tweak,
        });
    }
    let bs: Vec<WssCommitment> = match wss_commit_batch(net, params, &requests)
        .into_iter()
        .collect()
    {
        Ok(v) => v,
        Err(_) => return false,
    };
    let one = kf.one();
    let combos: Vec<Vec<(FieldElement, &WssCommitment)>> =
        bs.iter().map(|b| vec![(one, c), (one, b)]).collect();
    let sums: Vec<WssCommitment> =
        match wss_linear_batch(net, params, &combos).into_iter().collect() {
            Ok(v) => v,
            Err(_) => return false,
        };

    let mut to_open = Vec::with_capacity(k);
    for i in 0..k {
        let flipper = flippers[i % flippers.len().max(1)];
        let heads = flip_coin(net, session, flipper, guesses[i]);
        to_open.push(if heads { &bs[i] } else { &sums[i] });
    }
    net.advance();
    wss_open_batch(net, params, &to_open, Audience::Public)
        .into_iter()
        .all(|o| o != WssOpenOutcome::Null)
}
